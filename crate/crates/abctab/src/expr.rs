//! The typed expression language: parser, ABC type checker, signed
//! quaternion-unit representation, parity profiles and the rearrangement
//! machinery behind the no-retyping verification.
//!
//! Grammar (fully parenthesized, no precedence):
//!
//! ```text
//! expr  := leaf | '(' expr op expr ')'
//! op    := '+' | '-' | '*' | '/'
//! leaf  := NAME ':' ('A' | 'B' | 'C')
//! NAME  := [a-z][a-z0-9]*
//! ```

use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::Error;
use crate::model::{result_type, AbcType, OpKind, SchemeKind};

/// Binary expression tree over typed variable leaves. Leaves never carry
/// type `X`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Leaf { name: String, ty: AbcType },
    Node { op: OpKind, left: Box<Expr>, right: Box<Expr> },
}

impl Expr {
    pub fn leaf(name: &str, ty: AbcType) -> Expr {
        assert_ne!(ty, AbcType::X, "X is not a leaf type");
        Expr::Leaf { name: name.to_string(), ty }
    }

    pub fn node(op: OpKind, left: Expr, right: Expr) -> Expr {
        Expr::Node { op, left: Box::new(left), right: Box::new(right) }
    }

    pub fn leaves(&self) -> Vec<(String, AbcType)> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<(String, AbcType)>) {
        match self {
            Expr::Leaf { name, ty } => out.push((name.clone(), *ty)),
            Expr::Node { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Expr::Leaf { .. } => 1,
            Expr::Node { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    pub fn op_count(&self) -> usize {
        self.leaf_count() - 1
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Leaf { name, ty } => write!(f, "{name}:{ty}"),
            Expr::Node { op, left, right } => {
                write!(f, "({left} {} {right})", op.symbol())
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, Error> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let left = self.expr()?;
                self.skip_ws();
                let op = match self.peek() {
                    Some(b'+') => OpKind::Add,
                    Some(b'-') => OpKind::Sub,
                    Some(b'*') => OpKind::Mul,
                    Some(b'/') => OpKind::Div,
                    _ => return Err(self.err("expected operator '+', '-', '*' or '/'")),
                };
                self.pos += 1;
                let right = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(Expr::node(op, left, right))
            }
            Some(c) if c.is_ascii_lowercase() => self.leaf(),
            _ => Err(self.err("expected '(' or a variable")),
        }
    }

    fn leaf(&mut self) -> Result<Expr, Error> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .to_string();
        if self.peek() != Some(b':') {
            return Err(self.err("expected ':' after variable name"));
        }
        self.pos += 1;
        let ty = match self.peek() {
            Some(b'A') => AbcType::A,
            Some(b'B') => AbcType::B,
            Some(b'C') => AbcType::C,
            Some(b'X') => return Err(self.err("X is not a legal leaf type")),
            _ => return Err(self.err("expected leaf type 'A', 'B' or 'C'")),
        };
        self.pos += 1;
        Ok(Expr::Leaf { name, ty })
    }
}

pub fn parse(text: &str) -> Result<Expr, Error> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

/// ABC type of an expression; `None` is ill-typed. The operation carried
/// by a node is irrelevant to typing.
pub fn type_of(e: &Expr) -> Option<AbcType> {
    match e {
        Expr::Leaf { ty, .. } => Some(*ty),
        Expr::Node { left, right, .. } => {
            let t1 = type_of(left)?;
            let t2 = type_of(right)?;
            result_type(SchemeKind::Abc, t1, t2)
        }
    }
}

/// Quaternion axes. `One` is the scalar unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Axis {
    One,
    I,
    J,
    K,
}

/// A signed quaternion unit, closed under multiplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct QuatUnit {
    pub sign: i8,
    pub axis: Axis,
}

impl QuatUnit {
    pub const I: QuatUnit = QuatUnit { sign: 1, axis: Axis::I };
    pub const J: QuatUnit = QuatUnit { sign: 1, axis: Axis::J };
    pub const K: QuatUnit = QuatUnit { sign: 1, axis: Axis::K };

    pub fn mul(self, rhs: QuatUnit) -> QuatUnit {
        use Axis::*;
        let (sign, axis) = match (self.axis, rhs.axis) {
            (One, a) | (a, One) => (1, a),
            (I, I) | (J, J) | (K, K) => (-1, One),
            (I, J) => (1, K),
            (J, K) => (1, I),
            (K, I) => (1, J),
            (J, I) => (-1, K),
            (K, J) => (-1, I),
            (I, K) => (-1, J),
        };
        QuatUnit { sign: self.sign * rhs.sign * sign, axis }
    }

    /// The unit representing a leaf of the given class: A -> i, B -> j,
    /// C -> k.
    pub fn for_type(t: AbcType) -> Option<QuatUnit> {
        match t {
            AbcType::A => Some(QuatUnit::I),
            AbcType::B => Some(QuatUnit::J),
            AbcType::C => Some(QuatUnit::K),
            AbcType::X => None,
        }
    }
}

impl fmt::Display for QuatUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = match self.axis {
            Axis::One => "1",
            Axis::I => "i",
            Axis::J => "j",
            Axis::K => "k",
        };
        write!(f, "{}{a}", if self.sign >= 0 { '+' } else { '-' })
    }
}

/// Maps every operation to quaternion multiplication and every leaf to
/// its class unit; the product is a signed unit.
pub fn quaternion_of(e: &Expr) -> QuatUnit {
    match e {
        Expr::Leaf { ty, .. } => QuatUnit::for_type(*ty).expect("no X leaves"),
        Expr::Node { left, right, .. } => quaternion_of(left).mul(quaternion_of(right)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Parity {
    Even,
    Odd,
}

/// Occurrence parity of every variable in the expression.
pub fn parity_profile(e: &Expr) -> BTreeMap<String, Parity> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for (name, _) in e.leaves() {
        *counts.entry(name).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|(k, v)| (k, if v % 2 == 0 { Parity::Even } else { Parity::Odd }))
        .collect()
}

/// Binary tree shapes with a given number of leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    Leaf,
    Node(Box<Shape>, Box<Shape>),
}

pub fn shapes(leaves: usize) -> Vec<Shape> {
    if leaves == 1 {
        return vec![Shape::Leaf];
    }
    let mut out = Vec::new();
    for l in 1..leaves {
        for left in shapes(l) {
            for right in shapes(leaves - l) {
                out.push(Shape::Node(Box::new(left.clone()), Box::new(right)));
            }
        }
    }
    out
}

fn build_from_shape(shape: &Shape, leaves: &mut impl Iterator<Item = (String, AbcType)>) -> Expr {
    match shape {
        Shape::Leaf => {
            let (name, ty) = leaves.next().expect("leaf supply");
            Expr::Leaf { name, ty }
        }
        Shape::Node(l, r) => {
            let left = build_from_shape(l, leaves);
            let right = build_from_shape(r, leaves);
            // node operations are irrelevant to typing; use a fixed one
            Expr::node(OpKind::Mul, left, right)
        }
    }
}

fn distinct_permutations(mut items: Vec<(String, AbcType)>) -> Vec<Vec<(String, AbcType)>> {
    items.sort();
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(items.len());
    fn rec(
        remaining: &mut Vec<(String, AbcType)>,
        current: &mut Vec<(String, AbcType)>,
        out: &mut Vec<Vec<(String, AbcType)>>,
    ) {
        if remaining.is_empty() {
            out.push(current.clone());
            return;
        }
        let mut last: Option<(String, AbcType)> = None;
        for i in 0..remaining.len() {
            if last.as_ref() == Some(&remaining[i]) {
                continue;
            }
            last = Some(remaining[i].clone());
            let item = remaining.remove(i);
            current.push(item.clone());
            rec(remaining, current, out);
            current.pop();
            remaining.insert(i, item);
        }
    }
    rec(&mut items, &mut current, &mut out);
    out
}

pub const REARRANGE_LEAF_GUARD: usize = 8;

/// Streams every tree over the same leaf multiset with the same number
/// of operations, deduplicated, in a canonical (permutation-major)
/// order.
pub struct Rearrangements {
    perms: Vec<Vec<(String, AbcType)>>,
    shapes: Vec<Shape>,
    pi: usize,
    si: usize,
}

impl Iterator for Rearrangements {
    type Item = Expr;

    fn next(&mut self) -> Option<Expr> {
        if self.pi >= self.perms.len() {
            return None;
        }
        let mut supply = self.perms[self.pi].iter().cloned();
        let e = build_from_shape(&self.shapes[self.si], &mut supply);
        self.si += 1;
        if self.si == self.shapes.len() {
            self.si = 0;
            self.pi += 1;
        }
        Some(e)
    }
}

pub fn rearrangements(e: &Expr) -> Result<Rearrangements, Error> {
    let leaves = e.leaves();
    if leaves.len() > REARRANGE_LEAF_GUARD {
        return Err(Error::Guard(format!(
            "rearrangement enumeration capped at {REARRANGE_LEAF_GUARD} leaves, expression has {}",
            leaves.len()
        )));
    }
    Ok(Rearrangements {
        perms: distinct_permutations(leaves),
        shapes: shapes(e.leaf_count()),
        pi: 0,
        si: 0,
    })
}

/// A leaf-type multiset whose rearrangements take more than one valid
/// type: a counterexample to the no-retyping property.
#[derive(Debug, Clone, Serialize)]
pub struct RetypingWitness {
    pub leaves: usize,
    pub counts: (usize, usize, usize),
    pub types: Vec<AbcType>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Lemma1Report {
    pub max_leaves: usize,
    pub expressions_checked: u64,
    pub valid_expressions: u64,
    pub counterexamples: Vec<RetypingWitness>,
    /// Valid expressions whose quaternion axis fails to match their type.
    pub quaternion_mismatches: u64,
    /// The stronger up-to-parity grouping: leaf-type count vectors equal
    /// componentwise mod 2 that still admit more than one valid type.
    pub parity_counterexamples: Vec<RetypingWitness>,
}

impl Lemma1Report {
    pub fn holds(&self) -> bool {
        self.counterexamples.is_empty() && self.quaternion_mismatches == 0
    }
}

fn type_and_quat(shape: &Shape, seq: &[AbcType], cursor: &mut usize) -> (Option<AbcType>, QuatUnit) {
    match shape {
        Shape::Leaf => {
            let t = seq[*cursor];
            *cursor += 1;
            (Some(t), QuatUnit::for_type(t).unwrap())
        }
        Shape::Node(l, r) => {
            let (t1, q1) = type_and_quat(l, seq, cursor);
            let (t2, q2) = type_and_quat(r, seq, cursor);
            let t = match (t1, t2) {
                (Some(a), Some(b)) => result_type(SchemeKind::Abc, a, b),
                _ => None,
            };
            (t, q1.mul(q2))
        }
    }
}

/// Exhaustively enumerates every expression up to `max_leaves` leaves
/// (all leaf-type sequences, all tree shapes). Two expressions are
/// rearrangements of one another exactly when they carry the same leaf
/// multiset and the same number of operations, so grouping valid types
/// by multiset checks every rearrangement pair at once.
pub fn verify_lemma1(max_leaves: usize) -> Result<Lemma1Report, Error> {
    if max_leaves > REARRANGE_LEAF_GUARD {
        return Err(Error::Guard(format!(
            "no-retyping verification capped at {REARRANGE_LEAF_GUARD} leaves"
        )));
    }
    let mut report = Lemma1Report {
        max_leaves,
        expressions_checked: 0,
        valid_expressions: 0,
        counterexamples: Vec::new(),
        quaternion_mismatches: 0,
        parity_counterexamples: Vec::new(),
    };
    let mut by_multiset: BTreeMap<(usize, usize, usize, usize), BTreeSet<AbcType>> =
        BTreeMap::new();
    for leaves in 1..=max_leaves {
        let all_shapes = shapes(leaves);
        let mut seq = vec![AbcType::A; leaves];
        loop {
            let counts = seq.iter().fold((0, 0, 0), |acc, t| match t {
                AbcType::A => (acc.0 + 1, acc.1, acc.2),
                AbcType::B => (acc.0, acc.1 + 1, acc.2),
                AbcType::C => (acc.0, acc.1, acc.2 + 1),
                AbcType::X => unreachable!(),
            });
            for shape in &all_shapes {
                let mut cursor = 0;
                let (t, q) = type_and_quat(shape, &seq, &mut cursor);
                report.expressions_checked += 1;
                if let Some(t) = t {
                    report.valid_expressions += 1;
                    if QuatUnit::for_type(t).unwrap().axis != q.axis {
                        report.quaternion_mismatches += 1;
                    }
                    by_multiset
                        .entry((leaves, counts.0, counts.1, counts.2))
                        .or_default()
                        .insert(t);
                }
            }
            // advance the type sequence like a base-3 odometer
            let mut i = 0;
            loop {
                if i == leaves {
                    break;
                }
                seq[i] = match seq[i] {
                    AbcType::A => AbcType::B,
                    AbcType::B => AbcType::C,
                    AbcType::C => {
                        seq[i] = AbcType::A;
                        i += 1;
                        continue;
                    }
                    AbcType::X => unreachable!(),
                };
                break;
            }
            if i == leaves {
                break;
            }
        }
    }
    for (&(leaves, a, b, c), types) in &by_multiset {
        if types.len() > 1 {
            report.counterexamples.push(RetypingWitness {
                leaves,
                counts: (a, b, c),
                types: types.iter().copied().collect(),
            });
        }
    }
    // up-to-parity grouping: same leaf count, counts equal mod 2
    let mut by_parity: BTreeMap<(usize, usize, usize, usize), BTreeSet<AbcType>> = BTreeMap::new();
    for (&(leaves, a, b, c), types) in &by_multiset {
        by_parity
            .entry((leaves, a % 2, b % 2, c % 2))
            .or_default()
            .extend(types.iter().copied());
    }
    for (&(leaves, a, b, c), types) in &by_parity {
        if types.len() > 1 {
            report.parity_counterexamples.push(RetypingWitness {
                leaves,
                counts: (a, b, c),
                types: types.iter().copied().collect(),
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_simple_node() {
        let e = parse("(x:A * y:B)").unwrap();
        assert_eq!(
            e,
            Expr::node(OpKind::Mul, Expr::leaf("x", AbcType::A), Expr::leaf("y", AbcType::B))
        );
    }

    #[test]
    fn parse_left_nested() {
        let e = parse("((x:A * y:B) * x:A)").unwrap();
        assert_eq!(
            e,
            Expr::node(
                OpKind::Mul,
                Expr::node(OpKind::Mul, Expr::leaf("x", AbcType::A), Expr::leaf("y", AbcType::B)),
                Expr::leaf("x", AbcType::A)
            )
        );
    }

    #[test]
    fn parse_rejects_x_leaf() {
        let err = parse("(x:A * y:X)").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn parse_reports_position() {
        match parse("(x:A & y:B)") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn display_roundtrips() {
        for text in ["x:A", "(x:A + y:B)", "((x:A * y:B) / z1:C)"] {
            let e = parse(text).unwrap();
            assert_eq!(parse(&e.to_string()).unwrap(), e);
        }
    }

    #[test]
    fn typing_examples() {
        assert_eq!(type_of(&parse("(x:A * y:B)").unwrap()), Some(AbcType::C));
        assert_eq!(type_of(&parse("(y:B * x:A)").unwrap()), None);
        assert_eq!(type_of(&parse("((x:A * y:B) * x:A)").unwrap()), Some(AbcType::B));
        assert_eq!(type_of(&parse("(x:A / x:A)").unwrap()), None);
    }

    #[test]
    fn quaternion_examples() {
        assert_eq!(quaternion_of(&parse("(x:A * y:B)").unwrap()), QuatUnit::K);
        assert_eq!(
            quaternion_of(&parse("(y:B * x:A)").unwrap()),
            QuatUnit { sign: -1, axis: Axis::K }
        );
        assert_eq!(quaternion_of(&parse("((x:A * y:B) * x:A)").unwrap()), QuatUnit::J);
    }

    #[test]
    fn quaternion_units_anticommute() {
        assert_eq!(QuatUnit::I.mul(QuatUnit::I), QuatUnit { sign: -1, axis: Axis::One });
        assert_eq!(QuatUnit::J.mul(QuatUnit::K), QuatUnit::I);
        assert_eq!(QuatUnit::K.mul(QuatUnit::J), QuatUnit { sign: -1, axis: Axis::I });
    }

    #[test]
    fn parity_examples() {
        let p = parity_profile(&parse("((x:A * y:B) * x:A)").unwrap());
        assert_eq!(p["x"], Parity::Even);
        assert_eq!(p["y"], Parity::Odd);
        let p = parity_profile(&parse("((x:A + y:B) + (x:A + y:B))").unwrap());
        assert_eq!(p["x"], Parity::Even);
        assert_eq!(p["y"], Parity::Even);
    }

    #[test]
    fn rearrangement_counts() {
        let two = parse("(x:A * y:B)").unwrap();
        assert_eq!(rearrangements(&two).unwrap().count(), 2);
        let three = parse("((x:A * y:B) * z:C)").unwrap();
        assert_eq!(rearrangements(&three).unwrap().count(), 12);
        let four = parse("(((w:A * x:B) * y:C) * z:A)").unwrap();
        assert_eq!(rearrangements(&four).unwrap().count(), 120);
    }

    #[test]
    fn rearrangements_dedup_repeated_leaves() {
        // two identical leaves: one distinct order, two shapes... with 2
        // leaves there is a single shape, so exactly one arrangement
        let e = parse("(x:A * x:A)").unwrap();
        assert_eq!(rearrangements(&e).unwrap().count(), 1);
    }

    #[test]
    fn rearrangements_preserve_parity_profile() {
        let e = parse("((x:A * y:B) * x:A)").unwrap();
        let profile = parity_profile(&e);
        for r in rearrangements(&e).unwrap() {
            assert_eq!(parity_profile(&r), profile);
        }
    }

    #[test]
    fn lemma_holds_to_four_leaves() {
        let report = verify_lemma1(4).unwrap();
        assert!(report.holds(), "{report:?}");
        assert!(report.valid_expressions > 0);
    }

    #[test]
    fn guard_rejects_large_enumerations() {
        assert!(matches!(verify_lemma1(9), Err(Error::Guard(_))));
        let mut e = Expr::leaf("a", AbcType::A);
        for _ in 0..9 {
            e = Expr::node(OpKind::Mul, e, Expr::leaf("b", AbcType::B));
        }
        assert!(matches!(rearrangements(&e), Err(Error::Guard(_))));
    }
}
