//! Cipherspace, codebooks, scheme kinds and table containers.
//!
//! A codebook maps plain residues modulo `n` into a cipherspace `[0, S)`
//! with `S = classes * n + m`, one injection per type class. The `m`
//! values outside every injection's image are the non-coding `X` padding.

use serde::Serialize;
use std::fmt;

use crate::error::Error;
use crate::forge::KeyedTables;

/// A cipherspace word. Cipherspaces in this crate are capped at 2^13.
pub type Cipher = u16;

/// Largest cipherspace for which tables may be materialized as matrices.
pub const MATERIALIZE_LIMIT: usize = 1 << 13;

/// Encryption type classes. `X` marks non-coding padding values and is
/// never a legal leaf type of an expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum AbcType {
    A,
    B,
    C,
    X,
}

impl AbcType {
    pub const CLASSES: [AbcType; 3] = [AbcType::A, AbcType::B, AbcType::C];

    pub fn class_index(self) -> Option<usize> {
        match self {
            AbcType::A => Some(0),
            AbcType::B => Some(1),
            AbcType::C => Some(2),
            AbcType::X => None,
        }
    }

    pub fn from_class_index(i: usize) -> Option<AbcType> {
        match i {
            0 => Some(AbcType::A),
            1 => Some(AbcType::B),
            2 => Some(AbcType::C),
            _ => None,
        }
    }

    pub fn letter(self) -> char {
        match self {
            AbcType::A => 'A',
            AbcType::B => 'B',
            AbcType::C => 'C',
            AbcType::X => 'X',
        }
    }
}

impl fmt::Display for AbcType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// The four table operations. Bitwise logic is out of scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum OpKind {
    Add,
    Sub,
    Mul,
    Div,
}

impl OpKind {
    pub const ALL: [OpKind; 4] = [OpKind::Add, OpKind::Sub, OpKind::Mul, OpKind::Div];

    pub fn index(self) -> usize {
        match self {
            OpKind::Add => 0,
            OpKind::Sub => 1,
            OpKind::Mul => 2,
            OpKind::Div => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OpKind::Add => "add",
            OpKind::Sub => "sub",
            OpKind::Mul => "mul",
            OpKind::Div => "div",
        }
    }

    pub fn symbol(self) -> char {
        match self {
            OpKind::Add => '+',
            OpKind::Sub => '-',
            OpKind::Mul => '*',
            OpKind::Div => '/',
        }
    }

    /// Plain-arithmetic semantics modulo `n`. Division is multiplication
    /// by the modular inverse and is undefined for non-invertible divisors.
    pub fn eval_mod(self, x: u64, y: u64, n: u64) -> Option<u64> {
        match self {
            OpKind::Add => Some((x + y) % n),
            OpKind::Sub => Some((x + n - y % n) % n),
            OpKind::Mul => Some((x * y) % n),
            OpKind::Div => mod_inverse(y, n).map(|inv| (x * inv) % n),
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Encryption schemes. `Plain` is the unprotected single-class baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SchemeKind {
    Plain,
    Ab,
    Abc,
}

impl SchemeKind {
    pub fn classes(self) -> &'static [AbcType] {
        match self {
            SchemeKind::Plain => &[AbcType::A],
            SchemeKind::Ab => &[AbcType::A, AbcType::B],
            SchemeKind::Abc => &[AbcType::A, AbcType::B, AbcType::C],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Plain => "plain",
            SchemeKind::Ab => "ab",
            SchemeKind::Abc => "abc",
        }
    }

    pub fn parse(s: &str) -> Option<SchemeKind> {
        match s {
            "plain" => Some(SchemeKind::Plain),
            "ab" => Some(SchemeKind::Ab),
            "abc" => Some(SchemeKind::Abc),
            _ => None,
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The typing rule of each scheme. Total: illegal operand pairs map to `None`.
///
/// ABC: (A,B) -> C, (B,C) -> A, (C,A) -> B. AB: (A,B) -> A, (B,A) -> B.
/// Plain has a single class that always combines with itself. `X` never
/// combines.
pub fn result_type(scheme: SchemeKind, t1: AbcType, t2: AbcType) -> Option<AbcType> {
    match scheme {
        SchemeKind::Plain => match (t1, t2) {
            (AbcType::A, AbcType::A) => Some(AbcType::A),
            _ => None,
        },
        SchemeKind::Ab => match (t1, t2) {
            (AbcType::A, AbcType::B) => Some(AbcType::A),
            (AbcType::B, AbcType::A) => Some(AbcType::B),
            _ => None,
        },
        SchemeKind::Abc => match (t1, t2) {
            (AbcType::A, AbcType::B) => Some(AbcType::C),
            (AbcType::B, AbcType::C) => Some(AbcType::A),
            (AbcType::C, AbcType::A) => Some(AbcType::B),
            _ => None,
        },
    }
}

/// Extended-Euclid modular inverse; `None` when `gcd(a, n) != 1`.
pub fn mod_inverse(a: u64, n: u64) -> Option<u64> {
    let (mut r0, mut r1) = (n as i128, (a % n) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(n as i128) as u64)
}

/// What a cipher value decodes to under a codebook.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decoded {
    Coded { value: u64, class: AbcType },
    Padding,
}

impl Decoded {
    pub fn coded(self) -> Option<(u64, AbcType)> {
        match self {
            Decoded::Coded { value, class } => Some((value, class)),
            Decoded::Padding => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InvSlot {
    Coded { value: u32, class_idx: u8 },
    Pad,
}

/// Per-class injections from plain residues `[0, n)` into the cipherspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    modulus: usize,
    padding: usize,
    scheme: SchemeKind,
    maps: Vec<Vec<Cipher>>,
    inverse: Vec<InvSlot>,
}

impl Codebook {
    /// Builds a codebook from explicit per-class injections, validating
    /// ranges and pairwise disjointness.
    pub fn new(
        modulus: usize,
        padding: usize,
        scheme: SchemeKind,
        maps: Vec<Vec<Cipher>>,
    ) -> Result<Codebook, Error> {
        if modulus < 2 {
            return Err(Error::Param(format!("modulus must be >= 2, got {modulus}")));
        }
        let classes = scheme.classes();
        if maps.len() != classes.len() {
            return Err(Error::Param(format!(
                "scheme {} needs {} class maps, got {}",
                scheme,
                classes.len(),
                maps.len()
            )));
        }
        let size = classes.len() * modulus + padding;
        if size > MATERIALIZE_LIMIT {
            return Err(Error::Guard(format!(
                "cipherspace size {size} exceeds limit {MATERIALIZE_LIMIT}"
            )));
        }
        let mut inverse = vec![InvSlot::Pad; size];
        for (ci, map) in maps.iter().enumerate() {
            if map.len() != modulus {
                return Err(Error::Param(format!(
                    "class {} map has {} entries, expected {}",
                    classes[ci],
                    map.len(),
                    modulus
                )));
            }
            for (x, &c) in map.iter().enumerate() {
                if (c as usize) >= size {
                    return Err(Error::Param(format!(
                        "cipher value {c} out of cipherspace [0, {size})"
                    )));
                }
                if inverse[c as usize] != InvSlot::Pad {
                    return Err(Error::Param(format!(
                        "cipher value {c} assigned to more than one coding"
                    )));
                }
                inverse[c as usize] = InvSlot::Coded {
                    value: x as u32,
                    class_idx: ci as u8,
                };
            }
        }
        Ok(Codebook {
            modulus,
            padding,
            scheme,
            maps,
            inverse,
        })
    }

    pub fn modulus(&self) -> usize {
        self.modulus
    }

    pub fn padding(&self) -> usize {
        self.padding
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    /// Cipherspace size `S = classes * n + m`.
    pub fn size(&self) -> usize {
        self.scheme.classes().len() * self.modulus + self.padding
    }

    /// The coded values of one class, indexed by plain residue.
    pub fn class_values(&self, t: AbcType) -> Result<&[Cipher], Error> {
        let ci = t
            .class_index()
            .filter(|&i| i < self.maps.len())
            .ok_or(Error::TypeNotInScheme { ty: t, scheme: self.scheme })?;
        Ok(&self.maps[ci])
    }

    pub fn encrypt(&self, x: u64, t: AbcType) -> Result<Cipher, Error> {
        let map = self.class_values(t)?;
        if x >= self.modulus as u64 {
            return Err(Error::ResidueOutOfRange {
                value: x,
                modulus: self.modulus,
            });
        }
        Ok(map[x as usize])
    }

    pub fn decrypt(&self, c: Cipher) -> Result<Decoded, Error> {
        let slot = self
            .inverse
            .get(c as usize)
            .ok_or(Error::CipherOutOfRange {
                value: c,
                size: self.size(),
            })?;
        Ok(match *slot {
            InvSlot::Pad => Decoded::Padding,
            InvSlot::Coded { value, class_idx } => Decoded::Coded {
                value: value as u64,
                class: AbcType::from_class_index(class_idx as usize).unwrap(),
            },
        })
    }

    /// Iterates all coded cipher values as `(cipher, plain, class)`.
    pub fn coded_values(&self) -> impl Iterator<Item = (Cipher, u64, AbcType)> + '_ {
        let classes = self.scheme.classes();
        self.maps.iter().enumerate().flat_map(move |(ci, map)| {
            map.iter()
                .enumerate()
                .map(move |(x, &c)| (c, x as u64, classes[ci]))
        })
    }
}

/// The forced value of a cell, when the typing rule and homomorphism
/// constrain it: `None` marks a nonsense (free) cell.
pub fn constrained_result(
    cb: &Codebook,
    op: OpKind,
    c1: Cipher,
    c2: Cipher,
) -> Option<(u64, AbcType)> {
    let (x, t1) = cb.decrypt(c1).ok()?.coded()?;
    let (y, t2) = cb.decrypt(c2).ok()?.coded()?;
    let t = result_type(cb.scheme(), t1, t2)?;
    let v = op.eval_mod(x, y, cb.modulus() as u64)?;
    Some((v, t))
}

pub fn is_constrained(cb: &Codebook, op: OpKind, c1: Cipher, c2: Cipher) -> bool {
    constrained_result(cb, op, c1, c2).is_some()
}

/// Four `S x S` matrices, one per operation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaterializedTables {
    size: usize,
    tables: [Vec<Cipher>; 4],
    pub provenance: String,
}

impl MaterializedTables {
    pub fn new(size: usize, provenance: String) -> Result<MaterializedTables, Error> {
        if size > MATERIALIZE_LIMIT {
            return Err(Error::Guard(format!(
                "cannot materialize {size}x{size} tables (limit {MATERIALIZE_LIMIT})"
            )));
        }
        let cells = size * size;
        Ok(MaterializedTables {
            size,
            tables: std::array::from_fn(|_| vec![0; cells]),
            provenance,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, op: OpKind, c1: Cipher, c2: Cipher) -> Cipher {
        self.tables[op.index()][c1 as usize * self.size + c2 as usize]
    }

    #[inline]
    pub fn set(&mut self, op: OpKind, c1: Cipher, c2: Cipher, v: Cipher) {
        self.tables[op.index()][c1 as usize * self.size + c2 as usize] = v;
    }

    pub fn row(&self, op: OpKind, c1: Cipher) -> &[Cipher] {
        let s = self.size;
        &self.tables[op.index()][c1 as usize * s..(c1 as usize + 1) * s]
    }
}

/// A complete table set: explicit matrices, or the keyed functional form
/// whose cells are computed on demand.
#[derive(Debug, Clone)]
pub enum TableSet {
    Materialized(MaterializedTables),
    Keyed(KeyedTables),
}

impl TableSet {
    pub fn size(&self) -> usize {
        match self {
            TableSet::Materialized(mt) => mt.size(),
            TableSet::Keyed(kt) => kt.size(),
        }
    }

    pub fn provenance(&self) -> String {
        match self {
            TableSet::Materialized(mt) => mt.provenance.clone(),
            TableSet::Keyed(kt) => kt.provenance(),
        }
    }

    /// Raw table lookup. No typing enforcement: anyone may apply anything.
    pub fn apply(&self, op: OpKind, c1: Cipher, c2: Cipher) -> Result<Cipher, Error> {
        let size = self.size();
        if c1 as usize >= size {
            return Err(Error::CipherOutOfRange { value: c1, size });
        }
        if c2 as usize >= size {
            return Err(Error::CipherOutOfRange { value: c2, size });
        }
        Ok(match self {
            TableSet::Materialized(mt) => mt.get(op, c1, c2),
            TableSet::Keyed(kt) => kt.eval(op, c1, c2),
        })
    }

    pub fn as_materialized(&self) -> Option<&MaterializedTables> {
        match self {
            TableSet::Materialized(mt) => Some(mt),
            TableSet::Keyed(_) => None,
        }
    }

    /// Exports an explicit matrix form; guarded by [`MATERIALIZE_LIMIT`].
    pub fn materialize(&self) -> Result<MaterializedTables, Error> {
        match self {
            TableSet::Materialized(mt) => Ok(mt.clone()),
            TableSet::Keyed(kt) => {
                let size = kt.size();
                let mut mt = MaterializedTables::new(size, kt.provenance())?;
                for op in OpKind::ALL {
                    for c1 in 0..size as Cipher {
                        for c2 in 0..size as Cipher {
                            mt.set(op, c1, c2, kt.eval(op, c1, c2));
                        }
                    }
                }
                Ok(mt)
            }
        }
    }
}
