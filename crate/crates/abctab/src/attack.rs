//! Attacker procedures run as black-box probes of a table set, plus the
//! owner-oracle judge that grades their reliability.
//!
//! The attack procedures receive only the table set (the public ALU) and
//! compare cipher values for equality; the codebook is used exclusively
//! by the judge, which quantifies each claim over every admissible
//! starting observation.

use serde::Serialize;

use crate::error::Error;
use crate::forge::{build_codebook, build_tables, FillPolicy, Layout};
use crate::model::{
    result_type, Cipher, Codebook, Decoded, OpKind, SchemeKind, TableSet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AttackKind {
    Doubling,
    SelfSub,
    SelfDiv,
    Lagrange,
    AbDefeat,
}

impl AttackKind {
    pub const ALL: [AttackKind; 5] = [
        AttackKind::Doubling,
        AttackKind::SelfSub,
        AttackKind::SelfDiv,
        AttackKind::Lagrange,
        AttackKind::AbDefeat,
    ];

    /// The plain constant the attack claims to have encrypted.
    pub fn target(self) -> u64 {
        match self {
            AttackKind::Doubling | AttackKind::SelfSub => 0,
            AttackKind::SelfDiv | AttackKind::Lagrange | AttackKind::AbDefeat => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::Doubling => "doubling",
            AttackKind::SelfSub => "self-sub",
            AttackKind::SelfDiv => "self-div",
            AttackKind::Lagrange => "lagrange",
            AttackKind::AbDefeat => "ab-defeat",
        }
    }

    pub fn parse(s: &str) -> Option<AttackKind> {
        AttackKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl std::fmt::Display for AttackKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TranscriptEntry {
    pub op: OpKind,
    pub lhs: Cipher,
    pub rhs: Cipher,
    pub out: Cipher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// Every admissible start yields a claim that decrypts to the target.
    Reliable,
    /// Some admissible start yields no claim, or a claim that decrypts
    /// to something else.
    Unreliable,
    /// No admissible starting observation exists.
    NoClaim,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Reliable => "RELIABLE",
            Verdict::Unreliable => "UNRELIABLE",
            Verdict::NoClaim => "NO_CLAIM",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FailureWitness {
    /// The admissible start (one value, or an observed pair).
    pub start: Vec<Cipher>,
    pub claimed: Option<Cipher>,
    pub decrypted: Option<Decoded>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttackOutcome {
    pub kind: AttackKind,
    pub verdict: Verdict,
    /// The claim produced from the first admissible start.
    pub claimed: Option<Cipher>,
    pub transcript: Vec<TranscriptEntry>,
    pub starts_examined: usize,
    pub witness: Option<FailureWitness>,
}

/// Records every ALU call an attack procedure makes.
struct Probe<'a> {
    ts: &'a TableSet,
    transcript: Vec<TranscriptEntry>,
}

impl<'a> Probe<'a> {
    fn new(ts: &'a TableSet) -> Probe<'a> {
        Probe { ts, transcript: Vec::new() }
    }

    fn call(&mut self, op: OpKind, lhs: Cipher, rhs: Cipher) -> Cipher {
        let out = self.ts.apply(op, lhs, rhs).expect("in-range operands");
        self.transcript.push(TranscriptEntry { op, lhs, rhs, out });
        out
    }
}

/// Doubles the start until the value stops changing; claims the fixed
/// point. A cycle longer than one yields no claim.
fn doubling(probe: &mut Probe<'_>, start: Cipher) -> Option<Cipher> {
    let mut seen = vec![false; probe.ts.size()];
    let mut d = start;
    seen[d as usize] = true;
    loop {
        let next = probe.call(OpKind::Add, d, d);
        if next == d {
            return Some(d);
        }
        if seen[next as usize] {
            return None;
        }
        seen[next as usize] = true;
        d = next;
    }
}

fn lagrange(probe: &mut Probe<'_>, start: Cipher, squarings: u32) -> Option<Cipher> {
    let mut d = start;
    for _ in 0..squarings {
        d = probe.call(OpKind::Mul, d, d);
    }
    Some(d)
}

fn invertible(x: u64, n: u64) -> bool {
    crate::model::mod_inverse(x, n).is_some()
}

fn admissible_starts(cb: &Codebook, kind: AttackKind) -> Vec<Cipher> {
    let n = cb.modulus() as u64;
    cb.coded_values()
        .filter(|&(_, x, _)| match kind {
            AttackKind::Doubling | AttackKind::SelfSub => true,
            // the divisor-of-zero screen: only values the attacker can
            // establish as invertible are worth starting from
            AttackKind::SelfDiv | AttackKind::Lagrange => invertible(x, n),
            AttackKind::AbDefeat => unreachable!("pair-based attack"),
        })
        .map(|(c, _, _)| c)
        .collect()
}

/// Ordered operand pairs an honest program could have been observed
/// sending through the ALU, restricted to invertible products.
fn admissible_pairs(cb: &Codebook) -> Vec<(Cipher, Cipher)> {
    let n = cb.modulus() as u64;
    let coded: Vec<_> = cb.coded_values().collect();
    let mut out = Vec::new();
    for &(c1, x, t1) in &coded {
        for &(c2, y, t2) in &coded {
            if result_type(cb.scheme(), t1, t2).is_some() && invertible(x * y % n, n) {
                out.push((c1, c2));
            }
        }
    }
    out
}

fn decrypts_to(cb: &Codebook, c: Cipher, target: u64) -> bool {
    matches!(cb.decrypt(c), Ok(Decoded::Coded { value, .. }) if value == target)
}

fn judge_single_start(
    ts: &TableSet,
    cb: &Codebook,
    kind: AttackKind,
    run: impl Fn(&mut Probe<'_>, Cipher) -> Option<Cipher>,
) -> AttackOutcome {
    let starts = admissible_starts(cb, kind);
    let target = kind.target();
    let mut outcome = AttackOutcome {
        kind,
        verdict: Verdict::NoClaim,
        claimed: None,
        transcript: Vec::new(),
        starts_examined: starts.len(),
        witness: None,
    };
    if starts.is_empty() {
        return outcome;
    }
    let mut verdict = Verdict::Reliable;
    for (i, &start) in starts.iter().enumerate() {
        let mut probe = Probe::new(ts);
        let claim = run(&mut probe, start);
        if i == 0 {
            outcome.claimed = claim;
            outcome.transcript = probe.transcript;
        }
        let ok = claim.is_some_and(|c| decrypts_to(cb, c, target));
        if !ok && verdict == Verdict::Reliable {
            verdict = Verdict::Unreliable;
            outcome.witness = Some(FailureWitness {
                start: vec![start],
                claimed: claim,
                decrypted: claim.and_then(|c| cb.decrypt(c).ok()),
            });
        }
    }
    outcome.verdict = verdict;
    outcome
}

/// Runs one attack kind against the tables, judging its claim over every
/// admissible start. The codebook is the owner oracle; the procedures
/// themselves never see it.
pub fn run_attack(ts: &TableSet, cb: &Codebook, kind: AttackKind) -> Result<AttackOutcome, Error> {
    match kind {
        AttackKind::Doubling => Ok(judge_single_start(ts, cb, kind, doubling)),
        AttackKind::SelfSub => Ok(judge_single_start(ts, cb, kind, |p, c| {
            Some(p.call(OpKind::Sub, c, c))
        })),
        AttackKind::SelfDiv => Ok(judge_single_start(ts, cb, kind, |p, c| {
            Some(p.call(OpKind::Div, c, c))
        })),
        AttackKind::Lagrange => {
            let n = cb.modulus();
            if !n.is_power_of_two() || n < 8 {
                return Err(Error::Param(format!(
                    "lagrange attack needs modulus 2^w with w >= 3, got {n}"
                )));
            }
            let squarings = n.trailing_zeros() - 1;
            Ok(judge_single_start(ts, cb, kind, move |p, c| {
                lagrange(p, c, squarings)
            }))
        }
        AttackKind::AbDefeat => {
            let pairs = admissible_pairs(cb);
            match pairs.first() {
                Some(&pair) => run_ab_defeat(ts, cb, pair),
                None => Ok(AttackOutcome {
                    kind,
                    verdict: Verdict::NoClaim,
                    claimed: None,
                    transcript: Vec::new(),
                    starts_examined: 0,
                    witness: None,
                }),
            }
        }
    }
}

fn ab_defeat_claims(probe: &mut Probe<'_>, c1: Cipher, c2: Cipher) -> (Cipher, Cipher) {
    let p = probe.call(OpKind::Mul, c1, c2);
    let q = probe.call(OpKind::Mul, c2, c1);
    let r1 = probe.call(OpKind::Div, p, q);
    let r2 = probe.call(OpKind::Div, q, p);
    (r1, r2)
}

/// The quotient-of-commuted-products attack. `observed` is a valid
/// operand pair the attacker saw an honest program use; both quotient
/// orders are claimed as encryptions of 1, and the verdict quantifies
/// over every admissible observed pair.
pub fn run_ab_defeat(
    ts: &TableSet,
    cb: &Codebook,
    observed: (Cipher, Cipher),
) -> Result<AttackOutcome, Error> {
    let pairs = admissible_pairs(cb);
    if !pairs.contains(&observed) {
        return Err(Error::Param(format!(
            "({}, {}) is not an admissible observed pair",
            observed.0, observed.1
        )));
    }
    let mut outcome = AttackOutcome {
        kind: AttackKind::AbDefeat,
        verdict: Verdict::Reliable,
        claimed: None,
        transcript: Vec::new(),
        starts_examined: pairs.len(),
        witness: None,
    };
    {
        let mut probe = Probe::new(ts);
        let (r1, _) = ab_defeat_claims(&mut probe, observed.0, observed.1);
        outcome.claimed = Some(r1);
        outcome.transcript = probe.transcript;
    }
    for &(c1, c2) in &pairs {
        let mut probe = Probe::new(ts);
        let (r1, r2) = ab_defeat_claims(&mut probe, c1, c2);
        for r in [r1, r2] {
            if !decrypts_to(cb, r, 1) {
                outcome.verdict = Verdict::Unreliable;
                if outcome.witness.is_none() {
                    outcome.witness = Some(FailureWitness {
                        start: vec![c1, c2],
                        claimed: Some(r),
                        decrypted: cb.decrypt(r).ok(),
                    });
                }
            }
        }
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Serialize)]
pub enum GridEntry {
    Verdict(Verdict),
    NotApplicable(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixRow {
    pub scheme: SchemeKind,
    pub modulus: usize,
    pub seed: u64,
    pub entries: Vec<(AttackKind, GridEntry)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixReport {
    pub rows: Vec<MatrixRow>,
}

impl MatrixReport {
    pub fn verdict(&self, scheme: SchemeKind, seed: u64, kind: AttackKind) -> Option<Verdict> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && r.seed == seed)
            .and_then(|r| r.entries.iter().find(|(k, _)| *k == kind))
            .and_then(|(_, e)| match e {
                GridEntry::Verdict(v) => Some(*v),
                GridEntry::NotApplicable(_) => None,
            })
    }
}

const MATRIX_SIZE_GUARD: usize = 1 << 10;

/// Builds PLAIN, AB and ABC tables at modulus `n` (one ABC row per seed)
/// and runs every applicable attack against each.
pub fn attack_matrix(n: usize, seeds: &[u64]) -> Result<MatrixReport, Error> {
    if 3 * n > MATRIX_SIZE_GUARD {
        return Err(Error::Guard(format!(
            "attack matrix guard: 3n = {} exceeds {MATRIX_SIZE_GUARD}",
            3 * n
        )));
    }
    if seeds.is_empty() {
        return Err(Error::Param("attack matrix needs at least one seed".into()));
    }
    let mut rows = Vec::new();
    let schemes: Vec<(SchemeKind, &[u64])> = vec![
        (SchemeKind::Plain, &seeds[..1]),
        (SchemeKind::Ab, &seeds[..1]),
        (SchemeKind::Abc, seeds),
    ];
    for (scheme, row_seeds) in schemes {
        for &seed in row_seeds {
            let cb = build_codebook(n, 0, scheme, seed, Layout::Random)?;
            // PLAIN tables are fully constrained off the bad-divisor cells;
            // a safe fill is impossible there, so use the raw policy
            let policy = match scheme {
                SchemeKind::Plain => FillPolicy::RawRandom { seed },
                _ => FillPolicy::SafeRandom { seed },
            };
            let ts = build_tables(&cb, &policy)?;
            let mut entries = Vec::new();
            for kind in AttackKind::ALL {
                let entry = match run_attack(&ts, &cb, kind) {
                    Ok(outcome) => GridEntry::Verdict(outcome.verdict),
                    Err(Error::Param(msg)) => GridEntry::NotApplicable(msg),
                    Err(e) => return Err(e),
                };
                entries.push((kind, entry));
            }
            rows.push(MatrixRow { scheme, modulus: n, seed, entries });
        }
    }
    Ok(MatrixReport { rows })
}
