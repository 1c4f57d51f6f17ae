//! Table construction: scheme-constrained cells forced by the
//! homomorphism condition, unconstrained cells filled by policy, the dual
//! second-embedding construction, and the keyed functional construction
//! for large cipherspaces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Error;
use crate::model::{
    constrained_result, result_type, AbcType, Cipher, Codebook, MaterializedTables, OpKind,
    SchemeKind, TableSet, MATERIALIZE_LIMIT,
};

/// How a codebook lays its injections out in the cipherspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// The explicit 1-bit ABC codebook A={1,2}, B={3,4}, C={5,6}.
    /// Cipher 0 (and anything above 6) is padding, so this layout uses at
    /// least one padding value.
    Explicit,
    /// `cipher = k*x + class_index` with stride `k = classes + m/n`;
    /// class indices at or above the class count are padding.
    Strided,
    /// Seeded uniform assignment of coded values.
    Random,
}

/// Unconstrained-cell fill policies. `SafeRandom` must leave no
/// accidental pairs; `RawRandom` carries no such promise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillPolicy {
    SafeRandom { seed: u64 },
    RawRandom { seed: u64 },
}

impl FillPolicy {
    pub fn seed(&self) -> u64 {
        match *self {
            FillPolicy::SafeRandom { seed } | FillPolicy::RawRandom { seed } => seed,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FillPolicy::SafeRandom { .. } => "safe",
            FillPolicy::RawRandom { .. } => "raw",
        }
    }
}

/// Builds a codebook for `n` residues with `m` padding values.
pub fn build_codebook(
    n: usize,
    m: usize,
    scheme: SchemeKind,
    seed: u64,
    layout: Layout,
) -> Result<Codebook, Error> {
    if n < 2 {
        return Err(Error::Param(format!("modulus must be >= 2, got {n}")));
    }
    let classes = scheme.classes().len();
    match layout {
        Layout::Explicit => {
            if scheme != SchemeKind::Abc || n != 2 {
                return Err(Error::Param(
                    "explicit layout is the 1-bit ABC codebook only".into(),
                ));
            }
            // Values 1..=6 leave cipher 0 as padding.
            let m = m.max(1);
            Codebook::new(n, m, scheme, vec![vec![1, 2], vec![3, 4], vec![5, 6]])
        }
        Layout::Strided => {
            if m % n != 0 {
                return Err(Error::Param(format!(
                    "strided layout needs padding divisible by the modulus (m={m}, n={n})"
                )));
            }
            let k = classes + m / n;
            let maps = (0..classes)
                .map(|t| (0..n).map(|x| (k * x + t) as Cipher).collect())
                .collect();
            Codebook::new(n, m, scheme, maps)
        }
        Layout::Random => {
            let size = classes * n + m;
            if size > MATERIALIZE_LIMIT {
                return Err(Error::Guard(format!(
                    "cipherspace size {size} exceeds limit {MATERIALIZE_LIMIT}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut values: Vec<Cipher> = (0..size as Cipher).collect();
            // Fisher-Yates with the seeded stream
            for i in (1..values.len()).rev() {
                let j = rng.gen_range(0..=i);
                values.swap(i, j);
            }
            let maps = (0..classes)
                .map(|t| values[t * n..(t + 1) * n].to_vec())
                .collect();
            Codebook::new(n, m, scheme, maps)
        }
    }
}

/// Offending pair for the accidental-pair condition: all four
/// combinations of `{x, y}` under `op` land back inside `{x, y}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AccidentalPair {
    pub op: OpKind,
    pub x: Cipher,
    pub y: Cipher,
}

/// Scans ADD and MUL independently for pairs (including the `x = y`
/// fixed-point case) closed under all four operand combinations.
pub fn check_no_accidental_pairs(mt: &MaterializedTables) -> Vec<AccidentalPair> {
    let s = mt.size() as Cipher;
    let mut offenders = Vec::new();
    for op in [OpKind::Add, OpKind::Mul] {
        for x in 0..s {
            if mt.get(op, x, x) == x {
                offenders.push(AccidentalPair { op, x, y: x });
            }
            for y in x + 1..s {
                let hit = |v: Cipher| v == x || v == y;
                if hit(mt.get(op, x, x))
                    && hit(mt.get(op, x, y))
                    && hit(mt.get(op, y, x))
                    && hit(mt.get(op, y, y))
                {
                    offenders.push(AccidentalPair { op, x, y });
                }
            }
        }
    }
    offenders
}

fn constrained_by_any(cbs: &[&Codebook], op: OpKind, c1: Cipher, c2: Cipher) -> bool {
    cbs.iter().any(|cb| constrained_result(cb, op, c1, c2).is_some())
}

/// Draws a fill value for one unconstrained cell. Same-class
/// diagonal-block cells never receive a value coded in their own class.
fn draw_cell(
    rng: &mut ChaCha8Rng,
    cbs: &[&Codebook],
    c1: Cipher,
    c2: Cipher,
    safe: bool,
) -> Cipher {
    let cb = cbs[0];
    let s = cb.size() as Cipher;
    if !safe {
        return rng.gen_range(0..s);
    }
    let same_class = match (cb.decrypt(c1), cb.decrypt(c2)) {
        (Ok(d1), Ok(d2)) => match (d1.coded(), d2.coded()) {
            (Some((_, t1)), Some((_, t2))) if t1 == t2 => Some(t1),
            _ => None,
        },
        _ => None,
    };
    match same_class {
        Some(t) => {
            let excluded = cb.class_values(t).expect("coded class");
            loop {
                let v = rng.gen_range(0..s);
                if !excluded.contains(&v) {
                    return v;
                }
            }
        }
        None => rng.gen_range(0..s),
    }
}

const REPAIR_SWEEPS: usize = 1000;

fn repair_accidental_pairs(
    mt: &mut MaterializedTables,
    cbs: &[&Codebook],
    rng: &mut ChaCha8Rng,
    seed: u64,
) -> Result<(), Error> {
    for _ in 0..REPAIR_SWEEPS {
        let offenders = check_no_accidental_pairs(mt);
        if offenders.is_empty() {
            return Ok(());
        }
        for o in offenders {
            let mut cells = vec![(o.x, o.x), (o.x, o.y), (o.y, o.x), (o.y, o.y)];
            cells.dedup();
            let mut redrew = false;
            for (c1, c2) in cells {
                if !constrained_by_any(cbs, o.op, c1, c2) {
                    let v = draw_cell(rng, cbs, c1, c2, true);
                    mt.set(o.op, c1, c2, v);
                    redrew = true;
                }
            }
            if !redrew {
                return Err(Error::Unrepairable {
                    seed,
                    msg: format!(
                        "pair {{{}, {}}} under {} is fully constrained",
                        o.x, o.y, o.op
                    ),
                });
            }
        }
    }
    Err(Error::Unrepairable {
        seed,
        msg: format!("sweep limit {REPAIR_SWEEPS} exceeded"),
    })
}

fn fill_tables(
    mt: &mut MaterializedTables,
    cbs: &[&Codebook],
    policy: &FillPolicy,
) -> Result<(), Error> {
    let s = mt.size() as Cipher;
    let seed = policy.seed();
    let safe = matches!(policy, FillPolicy::SafeRandom { .. });
    // in the untyped scheme every cell is same-class, so the safe-fill
    // exclusion rule would empty the draw set
    if safe && cbs[0].scheme() == SchemeKind::Plain {
        return Err(Error::Param(
            "plain tables cannot be safe-filled; use the raw fill".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // forced cells first
    for cb in cbs {
        for op in OpKind::ALL {
            for c1 in 0..s {
                for c2 in 0..s {
                    if let Some((v, t)) = constrained_result(cb, op, c1, c2) {
                        mt.set(op, c1, c2, cb.encrypt(v, t).expect("coded result"));
                    }
                }
            }
        }
    }
    // free cells from the seeded stream, in fixed cell order
    for op in OpKind::ALL {
        for c1 in 0..s {
            for c2 in 0..s {
                if !constrained_by_any(cbs, op, c1, c2) {
                    let v = draw_cell(&mut rng, cbs, c1, c2, safe);
                    mt.set(op, c1, c2, v);
                }
            }
        }
    }
    if let FillPolicy::SafeRandom { .. } = policy {
        repair_accidental_pairs(mt, cbs, &mut rng, seed)?;
    }
    Ok(())
}

/// Materializes the four tables of a codebook: constrained cells by
/// homomorphism, the rest per the fill policy.
pub fn build_tables(cb: &Codebook, policy: &FillPolicy) -> Result<TableSet, Error> {
    let provenance = format!(
        "scheme={} n={} m={} fill={} seed={}",
        cb.scheme(),
        cb.modulus(),
        cb.padding(),
        policy.name(),
        policy.seed()
    );
    let mut mt = MaterializedTables::new(cb.size(), provenance)?;
    fill_tables(&mut mt, &[cb], policy)?;
    Ok(TableSet::Materialized(mt))
}

/// Builds one table set satisfying several codebooks at once. The
/// codebooks must share a cipherspace and must not force any cell to two
/// different values.
pub fn build_tables_multi(cbs: &[&Codebook], policy: &FillPolicy) -> Result<TableSet, Error> {
    let first = cbs.first().ok_or_else(|| Error::Param("no codebooks".into()))?;
    let size = first.size();
    if cbs.iter().any(|cb| cb.size() != size) {
        return Err(Error::Param("codebooks span different cipherspaces".into()));
    }
    for (i, cb1) in cbs.iter().enumerate() {
        for cb2 in &cbs[i + 1..] {
            for op in OpKind::ALL {
                for c1 in 0..size as Cipher {
                    for c2 in 0..size as Cipher {
                        let f1 = constrained_result(cb1, op, c1, c2)
                            .map(|(v, t)| cb1.encrypt(v, t).expect("coded result"));
                        let f2 = constrained_result(cb2, op, c1, c2)
                            .map(|(v, t)| cb2.encrypt(v, t).expect("coded result"));
                        if let (Some(a), Some(b)) = (f1, f2) {
                            if a != b {
                                return Err(Error::Param(format!(
                                    "codebooks conflict at {op}({c1},{c2}): {a} vs {b}"
                                )));
                            }
                        }
                    }
                }
            }
        }
    }
    let provenance = format!(
        "scheme=abc multi={} n={} m={} fill={} seed={}",
        cbs.len(),
        first.modulus(),
        first.padding(),
        policy.name(),
        policy.seed()
    );
    let mut mt = MaterializedTables::new(size, provenance)?;
    fill_tables(&mut mt, cbs, policy)?;
    Ok(TableSet::Materialized(mt))
}

/// Fits a second 1-bit ABC embedding into the off-diagonal type blocks
/// the first one leaves free. The secondary codebook reuses the primary
/// A values as its A class and swaps the roles of the B and C value
/// pairs. The variant's three bits choose, per class, which member of
/// the value pair encodes 0; variant 0 keeps every value coding the same
/// residue it codes under the primary.
pub fn build_dual(
    cb: &Codebook,
    variant: u8,
    seed: u64,
) -> Result<(TableSet, Codebook), Error> {
    if cb.scheme() != SchemeKind::Abc || cb.modulus() != 2 {
        return Err(Error::Param(
            "dual construction needs a 1-bit ABC codebook".into(),
        ));
    }
    if variant >= 8 {
        return Err(Error::Param(format!("dual variant {variant} out of 0..8")));
    }
    let a = cb.class_values(AbcType::A)?.to_vec();
    let b = cb.class_values(AbcType::B)?.to_vec();
    let c = cb.class_values(AbcType::C)?.to_vec();
    let ordered = |pair: &[Cipher], flip: bool| -> Vec<Cipher> {
        if flip {
            vec![pair[1], pair[0]]
        } else {
            vec![pair[0], pair[1]]
        }
    };
    let maps2 = vec![
        ordered(&a, variant & 1 != 0),
        ordered(&c, variant & 2 != 0),
        ordered(&b, variant & 4 != 0),
    ];
    let cb2 = Codebook::new(2, cb.padding(), SchemeKind::Abc, maps2)?;

    // both embeddings' constrained cells must be disjoint
    for op in OpKind::ALL {
        for c1 in 0..cb.size() as Cipher {
            for c2 in 0..cb.size() as Cipher {
                if constrained_result(cb, op, c1, c2).is_some()
                    && constrained_result(&cb2, op, c1, c2).is_some()
                {
                    return Err(Error::Param(format!(
                        "embeddings collide at {op}({c1},{c2})"
                    )));
                }
            }
        }
    }

    let provenance = format!(
        "scheme=abc n=2 m={} fill=dual variant={variant} seed={seed}",
        cb.padding()
    );
    let mut mt = MaterializedTables::new(cb.size(), provenance)?;
    fill_tables(&mut mt, &[cb, &cb2], &FillPolicy::SafeRandom { seed })?;
    Ok((TableSet::Materialized(mt), cb2))
}

/// 64-bit avalanche mixer used by the keyed construction.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A 4-round balanced Feistel bijection on `[0, domain)`, cycle-walking
/// over the enclosing power-of-two block. Fully determined by
/// `(domain, seed)`.
#[derive(Debug, Clone)]
pub struct KeyedPermutation {
    bits: u32,
    domain: u64,
    keys: [u64; 4],
}

impl KeyedPermutation {
    pub fn new(domain: u64, seed: u64) -> Result<KeyedPermutation, Error> {
        if domain < 2 {
            return Err(Error::Param("permutation domain must be >= 2".into()));
        }
        let mut bits = 2u32;
        while (1u64 << bits) < domain {
            bits += 2;
        }
        let mut keys = [0u64; 4];
        let mut s = seed;
        for k in keys.iter_mut() {
            s = s.wrapping_add(0x9E37_79B9_7F4A_7C15);
            *k = mix64(s);
        }
        Ok(KeyedPermutation { bits, domain, keys })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn domain(&self) -> u64 {
        self.domain
    }

    fn enc_block(&self, v: u64) -> u64 {
        let half = self.bits / 2;
        let mask = (1u64 << half) - 1;
        let (mut l, mut r) = (v >> half, v & mask);
        for &k in &self.keys {
            (l, r) = (r, l ^ (mix64(r ^ k) & mask));
        }
        (l << half) | r
    }

    fn dec_block(&self, v: u64) -> u64 {
        let half = self.bits / 2;
        let mask = (1u64 << half) - 1;
        let (mut l, mut r) = (v >> half, v & mask);
        for &k in self.keys.iter().rev() {
            (l, r) = (r ^ (mix64(l ^ k) & mask), l);
        }
        (l << half) | r
    }

    pub fn permute(&self, x: u64) -> u64 {
        debug_assert!(x < self.domain);
        let mut y = self.enc_block(x);
        while y >= self.domain {
            y = self.enc_block(y);
        }
        y
    }

    pub fn invert(&self, y: u64) -> u64 {
        debug_assert!(y < self.domain);
        let mut x = self.dec_block(y);
        while x >= self.domain {
            x = self.dec_block(x);
        }
        x
    }
}

/// Functional ABC tables over `S = 4n`: cell values computed on demand
/// from the keyed permutation; nonsense cells from the avalanche mixer.
#[derive(Debug, Clone)]
pub struct KeyedTables {
    n: usize,
    size: usize,
    seed: u64,
    perm: KeyedPermutation,
}

impl KeyedTables {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn modulus(&self) -> usize {
        self.n
    }

    pub fn provenance(&self) -> String {
        format!("scheme=abc n={} m={} fill=keyed seed={}", self.n, self.n, self.seed)
    }

    pub fn permutation(&self) -> &KeyedPermutation {
        &self.perm
    }

    /// cipher -> (residue, class); class index 3 is padding.
    fn decode(&self, c: Cipher) -> (u64, usize) {
        let q = self.perm.invert(c as u64);
        ((q >> 2), (q & 3) as usize)
    }

    pub fn eval(&self, op: OpKind, c1: Cipher, c2: Cipher) -> Cipher {
        let (x, i1) = self.decode(c1);
        let (y, i2) = self.decode(c2);
        if let (Some(t1), Some(t2)) = (AbcType::from_class_index(i1), AbcType::from_class_index(i2))
        {
            if let Some(t) = result_type(SchemeKind::Abc, t1, t2) {
                if let Some(v) = op.eval_mod(x, y, self.n as u64) {
                    let idx = 4 * v + t.class_index().unwrap() as u64;
                    return self.perm.permute(idx) as Cipher;
                }
            }
        }
        let tag = ((op.index() as u64 + 1) << 48)
            ^ ((c1 as u64) << 24)
            ^ (c2 as u64);
        (mix64(self.seed ^ mix64(tag)) % self.size as u64) as Cipher
    }

    /// The owner-side codebook induced by the permutation.
    pub fn codebook(&self) -> Result<Codebook, Error> {
        let maps = (0..3)
            .map(|t| {
                (0..self.n)
                    .map(|x| self.perm.permute((4 * x + t) as u64) as Cipher)
                    .collect()
            })
            .collect();
        Codebook::new(self.n, self.n, SchemeKind::Abc, maps)
    }
}

/// Keyed functional construction: modulus `n`, cipherspace `4n` with `n`
/// padding values, typed slots interleaved modulo 4 under the keyed
/// permutation.
pub fn build_keyed(n: usize, seed: u64) -> Result<(TableSet, Codebook), Error> {
    if n < 2 {
        return Err(Error::Param(format!("modulus must be >= 2, got {n}")));
    }
    let size = 4 * n;
    if size > MATERIALIZE_LIMIT {
        return Err(Error::Guard(format!(
            "keyed cipherspace {size} exceeds limit {MATERIALIZE_LIMIT}"
        )));
    }
    let perm = KeyedPermutation::new(size as u64, seed)?;
    let kt = KeyedTables { n, size, seed, perm };
    let cb = kt.codebook()?;
    Ok((TableSet::Keyed(kt), cb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Decoded;

    pub(crate) fn explicit_codebook() -> Codebook {
        build_codebook(2, 0, SchemeKind::Abc, 0, Layout::Explicit).unwrap()
    }

    // The filled 1-bit constrained cells: (c1, c2, add, mul).
    const CROSS_CELLS: [(Cipher, Cipher, Cipher, Cipher); 12] = [
        (1, 3, 5, 5),
        (1, 4, 6, 5),
        (2, 3, 6, 5),
        (2, 4, 5, 6),
        (3, 5, 1, 1),
        (3, 6, 2, 1),
        (4, 5, 2, 1),
        (4, 6, 1, 2),
        (5, 1, 3, 3),
        (5, 2, 4, 3),
        (6, 1, 4, 3),
        (6, 2, 3, 4),
    ];

    #[test]
    fn one_bit_constrained_cells_match_reference() {
        let cb = explicit_codebook();
        let ts = build_tables(&cb, &FillPolicy::SafeRandom { seed: 7 }).unwrap();
        for (c1, c2, add, mul) in CROSS_CELLS {
            assert_eq!(ts.apply(OpKind::Add, c1, c2).unwrap(), add, "add({c1},{c2})");
            assert_eq!(ts.apply(OpKind::Mul, c1, c2).unwrap(), mul, "mul({c1},{c2})");
        }
        // diagonal nonsense cells land outside the operand class pair
        let d = ts.apply(OpKind::Add, 1, 1).unwrap();
        assert!((3..=6).contains(&d) || d == 0);
    }

    #[test]
    fn strided_layout_interleaves_types() {
        let cb = build_codebook(4, 4, SchemeKind::Abc, 0, Layout::Strided).unwrap();
        for c in 0..16 as Cipher {
            match cb.decrypt(c).unwrap() {
                Decoded::Coded { value, class } => {
                    assert_eq!(value, c as u64 / 4);
                    assert_eq!(class.class_index().unwrap(), c as usize % 4);
                }
                Decoded::Padding => assert_eq!(c % 4, 3),
            }
        }
    }

    #[test]
    fn random_layout_roundtrips() {
        let cb = build_codebook(2, 0, SchemeKind::Abc, 42, Layout::Random).unwrap();
        for (c, x, t) in cb.coded_values().collect::<Vec<_>>() {
            assert_eq!(cb.encrypt(x, t).unwrap(), c);
        }
    }

    #[test]
    fn safe_fill_has_no_accidental_pairs() {
        for seed in 0..10 {
            let cb = build_codebook(2, 0, SchemeKind::Abc, seed, Layout::Random).unwrap();
            let ts = build_tables(&cb, &FillPolicy::SafeRandom { seed }).unwrap();
            let mt = ts.as_materialized().unwrap();
            assert!(check_no_accidental_pairs(mt).is_empty(), "seed {seed}");
        }
    }

    #[test]
    fn accidental_pair_fixed_point() {
        let cb = explicit_codebook();
        let ts = build_tables(&cb, &FillPolicy::SafeRandom { seed: 3 }).unwrap();
        let mut mt = ts.as_materialized().unwrap().clone();
        mt.set(OpKind::Add, 1, 1, 1);
        let offenders = check_no_accidental_pairs(&mt);
        assert!(offenders.contains(&AccidentalPair { op: OpKind::Add, x: 1, y: 1 }));
    }

    #[test]
    fn accidental_pair_closed_pair() {
        let cb = explicit_codebook();
        let ts = build_tables(&cb, &FillPolicy::SafeRandom { seed: 3 }).unwrap();
        let mut mt = ts.as_materialized().unwrap().clone();
        // close {1, 2} under ADD in both orders
        mt.set(OpKind::Add, 1, 1, 2);
        mt.set(OpKind::Add, 1, 2, 1);
        mt.set(OpKind::Add, 2, 1, 2);
        mt.set(OpKind::Add, 2, 2, 1);
        let offenders = check_no_accidental_pairs(&mt);
        assert!(offenders.contains(&AccidentalPair { op: OpKind::Add, x: 1, y: 2 }));
    }

    #[test]
    fn builds_are_deterministic() {
        let cb = build_codebook(2, 0, SchemeKind::Abc, 5, Layout::Random).unwrap();
        let t1 = build_tables(&cb, &FillPolicy::SafeRandom { seed: 11 }).unwrap();
        let t2 = build_tables(&cb, &FillPolicy::SafeRandom { seed: 11 }).unwrap();
        assert_eq!(t1.as_materialized().unwrap(), t2.as_materialized().unwrap());
    }

    #[test]
    fn dual_reference_variant_cells() {
        let cb = explicit_codebook();
        let (ts, cb2) = build_dual(&cb, 5, 1).unwrap();
        assert_eq!(cb2.encrypt(0, AbcType::A).unwrap(), 2);
        assert_eq!(cb2.encrypt(1, AbcType::A).unwrap(), 1);
        assert_eq!(cb2.encrypt(0, AbcType::B).unwrap(), 5);
        assert_eq!(cb2.encrypt(1, AbcType::B).unwrap(), 6);
        assert_eq!(cb2.encrypt(0, AbcType::C).unwrap(), 4);
        assert_eq!(cb2.encrypt(1, AbcType::C).unwrap(), 3);
        assert_eq!(ts.apply(OpKind::Add, 1, 5).unwrap(), 3);
        assert_eq!(ts.apply(OpKind::Add, 5, 3).unwrap(), 1);
        assert_eq!(ts.apply(OpKind::Mul, 1, 5).unwrap(), 4);
        assert_eq!(ts.apply(OpKind::Mul, 3, 1).unwrap(), 6);
        // forced by the secondary homomorphism with B2(1)=6, C2(1)=3, A2(1)=1
        assert_eq!(ts.apply(OpKind::Mul, 6, 3).unwrap(), 1);
        assert_eq!(ts.apply(OpKind::Mul, 6, 4).unwrap(), 2);
    }

    #[test]
    fn dual_variant_zero_preserves_value_coding() {
        let cb = explicit_codebook();
        let mut preserving = Vec::new();
        for variant in 0..8 {
            let (_, cb2) = build_dual(&cb, variant, 1).unwrap();
            let same = cb
                .coded_values()
                .all(|(c, x, _)| matches!(cb2.decrypt(c), Ok(Decoded::Coded { value, .. }) if value == x));
            if same {
                preserving.push(variant);
            }
        }
        assert_eq!(preserving, vec![0]);
    }

    #[test]
    fn keyed_permutation_is_bijective_and_invertible() {
        let p = KeyedPermutation::new(64, 9).unwrap();
        let mut seen = vec![false; 64];
        for x in 0..64 {
            let y = p.permute(x);
            assert!(y < 64);
            assert!(!seen[y as usize]);
            seen[y as usize] = true;
            assert_eq!(p.invert(y), x);
        }
    }

    #[test]
    fn keyed_permutation_cycle_walks_odd_domains() {
        let p = KeyedPermutation::new(50, 123).unwrap();
        let mut seen = vec![false; 50];
        for x in 0..50 {
            let y = p.permute(x);
            assert!(y < 50);
            assert!(!seen[y as usize]);
            seen[y as usize] = true;
            assert_eq!(p.invert(y), x);
        }
    }

    #[test]
    fn keyed_tables_respect_homomorphism() {
        let (ts, cb) = build_keyed(16, 77).unwrap();
        for (c1, x, t1) in cb.coded_values().collect::<Vec<_>>() {
            for (c2, y, t2) in cb.coded_values().collect::<Vec<_>>() {
                if result_type(SchemeKind::Abc, t1, t2).is_none() {
                    continue;
                }
                for op in OpKind::ALL {
                    let Some(v) = op.eval_mod(x, y, 16) else { continue };
                    let t = result_type(SchemeKind::Abc, t1, t2).unwrap();
                    let got = ts.apply(op, c1, c2).unwrap();
                    assert_eq!(
                        cb.decrypt(got).unwrap(),
                        Decoded::Coded { value: v, class: t }
                    );
                }
            }
        }
    }

    #[test]
    fn keyed_seeds_disagree() {
        let (_, cb1) = build_keyed(16, 1).unwrap();
        let (_, cb2) = build_keyed(16, 2).unwrap();
        assert_ne!(
            cb1.coded_values().collect::<Vec<_>>(),
            cb2.coded_values().collect::<Vec<_>>()
        );
    }
}
