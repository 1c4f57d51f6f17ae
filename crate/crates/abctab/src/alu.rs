//! The table set as a working encrypted ALU: raw application, typed
//! expression evaluation over plain bindings, and the homomorphism
//! verifier.
//!
//! `apply` enforces nothing: the ALU is a public oracle and anyone may
//! put any operands through it. Typing is enforced only by `eval_expr`,
//! which plays the honest compiler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;

use crate::error::Error;
use crate::expr::{type_of, Expr};
use crate::model::{constrained_result, Cipher, Codebook, OpKind, TableSet};

/// Plain bindings for expression leaves.
pub type PlainEnv = BTreeMap<String, u64>;

pub fn apply(ts: &TableSet, op: OpKind, c1: Cipher, c2: Cipher) -> Result<Cipher, Error> {
    ts.apply(op, c1, c2)
}

/// Encrypts the leaves of a validly typed expression and folds it
/// through the ALU. The result decrypts to the expression's value with
/// its ABC type.
pub fn eval_expr(ts: &TableSet, cb: &Codebook, env: &PlainEnv, e: &Expr) -> Result<Cipher, Error> {
    if type_of(e).is_none() {
        return Err(Error::IllTyped);
    }
    eval_rec(ts, cb, env, e)
}

fn eval_rec(ts: &TableSet, cb: &Codebook, env: &PlainEnv, e: &Expr) -> Result<Cipher, Error> {
    match e {
        Expr::Leaf { name, ty } => {
            let value = env
                .get(name)
                .copied()
                .ok_or_else(|| Error::UnboundVariable(name.clone()))?;
            cb.encrypt(value, *ty)
        }
        Expr::Node { op, left, right } => {
            let c1 = eval_rec(ts, cb, env, left)?;
            let c2 = eval_rec(ts, cb, env, right)?;
            ts.apply(*op, c1, c2)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HomViolation {
    pub op: OpKind,
    pub c1: Cipher,
    pub c2: Cipher,
    pub expected: Cipher,
    pub found: Cipher,
}

#[derive(Debug, Clone, Serialize)]
pub struct HomReport {
    pub cells_checked: u64,
    pub violations: Vec<HomViolation>,
}

impl HomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verifies every constrained cell of every given codebook against the
/// table set.
pub fn check_homomorphism(ts: &TableSet, cbs: &[&Codebook]) -> Result<HomReport, Error> {
    let mut report = HomReport { cells_checked: 0, violations: Vec::new() };
    for cb in cbs {
        let coded: Vec<_> = cb.coded_values().collect();
        for &(c1, _, _) in &coded {
            for &(c2, _, _) in &coded {
                for op in OpKind::ALL {
                    let Some((v, t)) = constrained_result(cb, op, c1, c2) else {
                        continue;
                    };
                    let expected = cb.encrypt(v, t)?;
                    let found = ts.apply(op, c1, c2)?;
                    report.cells_checked += 1;
                    if found != expected {
                        report.violations.push(HomViolation { op, c1, c2, expected, found });
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Spot-checks `samples` random constrained cells per operation; for
/// table sets too large to sweep.
pub fn check_homomorphism_sampled(
    ts: &TableSet,
    cb: &Codebook,
    samples: usize,
    seed: u64,
) -> Result<HomReport, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cb.modulus() as u64;
    let mut report = HomReport { cells_checked: 0, violations: Vec::new() };
    for op in OpKind::ALL {
        let mut done = 0;
        while done < samples {
            let x = rng.gen_range(0..n);
            let y = rng.gen_range(0..n);
            let pair = rng.gen_range(0..3u8);
            let (t1, t2) = match pair {
                0 => (crate::model::AbcType::A, crate::model::AbcType::B),
                1 => (crate::model::AbcType::B, crate::model::AbcType::C),
                _ => (crate::model::AbcType::C, crate::model::AbcType::A),
            };
            let c1 = cb.encrypt(x, t1)?;
            let c2 = cb.encrypt(y, t2)?;
            let Some((v, t)) = constrained_result(cb, op, c1, c2) else {
                continue; // e.g. a non-invertible divisor
            };
            let expected = cb.encrypt(v, t)?;
            let found = ts.apply(op, c1, c2)?;
            report.cells_checked += 1;
            if found != expected {
                report.violations.push(HomViolation { op, c1, c2, expected, found });
            }
            done += 1;
        }
    }
    Ok(report)
}
