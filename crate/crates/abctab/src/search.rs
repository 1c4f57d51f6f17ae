//! Exhaustive searches over codebook embeddings and typed expressions:
//! candidate enumeration, overlap scans, maximum compatible sets, and the
//! signature-closure search for constant-valued two-variable expressions.
//!
//! An embedding candidate is an injective assignment of cipher values to
//! the 3n roles A0..A(n-1), B0.., C0.. of an ABC codebook. Its induced
//! partial table (the homomorphism-forced cells) is the unit of
//! comparison: two candidates are *compatible* when no cell is forced to
//! two different values, and *overlapping* when their forced-cell sets
//! intersect.
//!
//! Rotating the class roles (A,B,C) -> (B,C,A) of a candidate leaves its
//! forced partial table untouched, so every table-level question sees
//! candidates in groups of three. Canonicalization keeps the rotation
//! whose A0 value is smallest; scans additionally collapse any remaining
//! candidates with identical forced maps, which would otherwise show up
//! as spurious "overlapping pairs" of one and the same encryption.

use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

use crate::error::Error;
use crate::expr::Expr;
use crate::model::{
    result_type, AbcType, Cipher, Codebook, OpKind, SchemeKind, TableSet,
};

/// Raw-count ceiling for unbounded enumerations.
pub const CANDIDATE_GUARD: u128 = 1_000_000_000;

/// Dense cell arrays store cipher values in bytes.
const SEARCH_SIZE_LIMIT: usize = 255;

/// Ops that discriminate between 1-bit embeddings: SUB duplicates ADD
/// modulo 2 and DIV only constrains unit divisors, so the searches key on
/// these two unless all four are requested.
pub const SEARCH_OPS: [OpKind; 2] = [OpKind::Add, OpKind::Mul];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateEmbedding {
    n: usize,
    size: usize,
    /// A0..A(n-1), B0..B(n-1), C0..C(n-1).
    roles: Vec<Cipher>,
}

impl CandidateEmbedding {
    pub fn new(n: usize, size: usize, roles: Vec<Cipher>) -> Result<CandidateEmbedding, Error> {
        if size > SEARCH_SIZE_LIMIT {
            return Err(Error::Guard(format!(
                "search cipherspace size {size} exceeds {SEARCH_SIZE_LIMIT}"
            )));
        }
        if roles.len() != 3 * n || 3 * n > size {
            return Err(Error::Param(format!(
                "need 3n = {} distinct roles inside [0, {size})",
                3 * n
            )));
        }
        let mut seen = vec![false; size];
        for &r in &roles {
            if (r as usize) >= size || seen[r as usize] {
                return Err(Error::Param(format!(
                    "role value {r} repeated or out of range [0, {size})"
                )));
            }
            seen[r as usize] = true;
        }
        Ok(CandidateEmbedding { n, size, roles })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn roles(&self) -> &[Cipher] {
        &self.roles
    }

    pub fn codebook(&self) -> Codebook {
        let maps = (0..3)
            .map(|ci| self.roles[ci * self.n..(ci + 1) * self.n].to_vec())
            .collect();
        Codebook::new(self.n, self.size - 3 * self.n, SchemeKind::Abc, maps)
            .expect("validated roles form a codebook")
    }

    /// The role rotation (A,B,C) -> (B,C,A); preserves the forced map.
    pub fn rotated(&self) -> CandidateEmbedding {
        let n = self.n;
        let mut roles = Vec::with_capacity(3 * n);
        roles.extend_from_slice(&self.roles[n..]);
        roles.extend_from_slice(&self.roles[..n]);
        CandidateEmbedding { n, size: self.size, roles }
    }

    /// The lexicographically least of the three rotations.
    pub fn canonical(&self) -> CandidateEmbedding {
        let r1 = self.rotated();
        let r2 = r1.rotated();
        let mut best = self.clone();
        for r in [r1, r2] {
            if r.roles < best.roles {
                best = r;
            }
        }
        best
    }

    pub fn is_canonical(&self) -> bool {
        let n = self.n;
        self.roles[0] < self.roles[n] && self.roles[0] < self.roles[2 * n]
    }

    /// The homomorphism-forced partial table over `ops`.
    pub fn cells(&self, ops: &[OpKind]) -> DenseCells {
        DenseCells::from_roles(self.n, self.size, &self.roles, ops)
    }
}

/// A partial table as per-op bitmask plus value bytes, sized for fast
/// pairwise conflict checks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DenseCells {
    size: usize,
    ops: Vec<OpKind>,
    words: usize,
    /// `ops.len() * words` mask words, cell index `c1 * size + c2`.
    masks: Box<[u64]>,
    /// `ops.len() * size^2` values; zero outside the mask.
    values: Box<[u8]>,
}

impl DenseCells {
    fn from_roles(n: usize, size: usize, roles: &[Cipher], ops: &[OpKind]) -> DenseCells {
        let cells = size * size;
        let words = cells.div_ceil(64);
        let mut masks = vec![0u64; ops.len() * words].into_boxed_slice();
        let mut values = vec![0u8; ops.len() * cells].into_boxed_slice();
        for (oi, &op) in ops.iter().enumerate() {
            for (t1, t2, t3) in [(0usize, 1usize, 2usize), (1, 2, 0), (2, 0, 1)] {
                for x in 0..n {
                    for y in 0..n {
                        let Some(v) = op.eval_mod(x as u64, y as u64, n as u64) else {
                            continue;
                        };
                        let c1 = roles[t1 * n + x] as usize;
                        let c2 = roles[t2 * n + y] as usize;
                        let out = roles[t3 * n + v as usize];
                        let idx = c1 * size + c2;
                        masks[oi * words + idx / 64] |= 1u64 << (idx % 64);
                        values[oi * cells + idx] = out as u8;
                    }
                }
            }
        }
        DenseCells { size, ops: ops.to_vec(), words, masks, values }
    }

    pub fn constrained_count(&self) -> usize {
        self.masks.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Forced value at a cell, per op index.
    fn value_at(&self, oi: usize, idx: usize) -> Option<u8> {
        if self.masks[oi * self.words + idx / 64] >> (idx % 64) & 1 == 1 {
            Some(self.values[oi * self.size * self.size + idx])
        } else {
            None
        }
    }

    /// Agreement with a full table set on every forced cell.
    pub fn agrees_with(&self, ts: &TableSet) -> bool {
        let s = self.size;
        for (oi, &op) in self.ops.iter().enumerate() {
            for w in 0..self.words {
                let mut bits = self.masks[oi * self.words + w];
                while bits != 0 {
                    let idx = w * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let c1 = (idx / s) as Cipher;
                    let c2 = (idx % s) as Cipher;
                    match ts.apply(op, c1, c2) {
                        Ok(v) => {
                            if v as u8 != self.values[oi * s * s + idx] {
                                return false;
                            }
                        }
                        Err(_) => return false,
                    }
                }
            }
        }
        true
    }
}

/// Early-exit pairwise relation: compatible (no cell forced two ways) and
/// overlapping (some cell forced by both).
#[inline]
fn relate_fast(a: &DenseCells, b: &DenseCells) -> (bool, bool) {
    debug_assert_eq!(a.size, b.size);
    debug_assert_eq!(a.ops, b.ops);
    let cells = a.size * a.size;
    let mut overlapping = false;
    for oi in 0..a.ops.len() {
        for w in 0..a.words {
            let mut inter = a.masks[oi * a.words + w] & b.masks[oi * b.words + w];
            while inter != 0 {
                let idx = w * 64 + inter.trailing_zeros() as usize;
                inter &= inter - 1;
                overlapping = true;
                if a.values[oi * cells + idx] != b.values[oi * cells + idx] {
                    return (false, overlapping);
                }
            }
        }
    }
    (true, overlapping)
}

#[derive(Debug, Clone, Serialize)]
pub struct CellConflict {
    pub op: OpKind,
    pub c1: Cipher,
    pub c2: Cipher,
    pub v1: Cipher,
    pub v2: Cipher,
}

#[derive(Debug, Clone, Serialize)]
pub struct OverlapReport {
    pub overlapping: bool,
    pub compatible: bool,
    pub shared_cells: Vec<(OpKind, Cipher, Cipher)>,
    pub conflict: Option<CellConflict>,
}

/// Full shared-cell listing for a candidate pair, ADD/MUL cells.
pub fn overlap(e1: &CandidateEmbedding, e2: &CandidateEmbedding) -> Result<OverlapReport, Error> {
    if e1.size != e2.size {
        return Err(Error::Param(format!(
            "cipherspace sizes differ: {} vs {}",
            e1.size, e2.size
        )));
    }
    let a = e1.cells(&SEARCH_OPS);
    let b = e2.cells(&SEARCH_OPS);
    let s = e1.size;
    let mut shared = Vec::new();
    let mut conflict = None;
    for (oi, &op) in SEARCH_OPS.iter().enumerate() {
        for idx in 0..s * s {
            let (Some(v1), Some(v2)) = (a.value_at(oi, idx), b.value_at(oi, idx)) else {
                continue;
            };
            let (c1, c2) = ((idx / s) as Cipher, (idx % s) as Cipher);
            shared.push((op, c1, c2));
            if v1 != v2 && conflict.is_none() {
                conflict = Some(CellConflict {
                    op,
                    c1,
                    c2,
                    v1: v1 as Cipher,
                    v2: v2 as Cipher,
                });
            }
        }
    }
    Ok(OverlapReport {
        overlapping: !shared.is_empty(),
        compatible: conflict.is_none(),
        shared_cells: shared,
        conflict,
    })
}

fn perm_count(size: usize, k: usize) -> u128 {
    (0..k).map(|i| (size - i) as u128).product()
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateList {
    pub candidates: Vec<CandidateEmbedding>,
    /// Closed-form count of all injective role assignments.
    pub raw_count: u128,
    /// Full count = candidates * multiplier when not truncated.
    pub symmetry_multiplier: u64,
    pub truncated: bool,
}

/// All injective role assignments in lexicographic role-vector order.
/// With `symmetry` only rotation-canonical candidates are emitted
/// (multiplier 3). The guard demands an explicit `limit` beyond 10^9.
pub fn enumerate_candidates(
    n: usize,
    size: usize,
    symmetry: bool,
    limit: Option<usize>,
) -> Result<CandidateList, Error> {
    if n < 2 {
        return Err(Error::Param(format!("modulus must be >= 2, got {n}")));
    }
    if size > SEARCH_SIZE_LIMIT {
        return Err(Error::Guard(format!(
            "search cipherspace size {size} exceeds {SEARCH_SIZE_LIMIT}"
        )));
    }
    if 3 * n > size {
        return Err(Error::Param(format!(
            "cipherspace size {size} cannot hold 3n = {} roles",
            3 * n
        )));
    }
    let raw_count = perm_count(size, 3 * n);
    let multiplier: u64 = if symmetry { 3 } else { 1 };
    if raw_count / multiplier as u128 > CANDIDATE_GUARD && limit.is_none() {
        return Err(Error::Guard(format!(
            "{raw_count} candidates exceed the enumeration guard; pass a limit"
        )));
    }
    let cap = limit.unwrap_or(usize::MAX);
    let mut out = Vec::new();
    let mut roles = vec![0 as Cipher; 3 * n];
    let mut used = vec![false; size];
    let mut truncated = false;
    fn rec(
        pos: usize,
        n: usize,
        size: usize,
        symmetry: bool,
        cap: usize,
        roles: &mut Vec<Cipher>,
        used: &mut Vec<bool>,
        out: &mut Vec<CandidateEmbedding>,
        truncated: &mut bool,
    ) {
        if out.len() >= cap {
            *truncated = true;
            return;
        }
        if pos == roles.len() {
            out.push(CandidateEmbedding {
                n,
                size,
                roles: roles.clone(),
            });
            return;
        }
        for v in 0..size as Cipher {
            if used[v as usize] {
                continue;
            }
            // canonical form: A0 smaller than B0 and C0
            if symmetry && (pos == n || pos == 2 * n) && v < roles[0] {
                continue;
            }
            used[v as usize] = true;
            roles[pos] = v;
            rec(pos + 1, n, size, symmetry, cap, roles, used, out, truncated);
            used[v as usize] = false;
            if *truncated {
                return;
            }
        }
    }
    rec(
        0, n, size, symmetry, cap, &mut roles, &mut used, &mut out, &mut truncated,
    );
    Ok(CandidateList {
        candidates: out,
        raw_count,
        symmetry_multiplier: multiplier,
        truncated,
    })
}

/// Candidates with identical forced maps collapsed to their first (lex
/// least) representative. Returns the representatives with their cells.
fn distinct_maps(
    candidates: Vec<CandidateEmbedding>,
    ops: &[OpKind],
) -> Vec<(CandidateEmbedding, DenseCells)> {
    let mut seen: BTreeMap<(Box<[u64]>, Box<[u8]>), usize> = BTreeMap::new();
    let mut reps = Vec::new();
    for cand in candidates {
        let cells = cand.cells(ops);
        let key = (cells.masks.clone(), cells.values.clone());
        if !seen.contains_key(&key) {
            seen.insert(key, reps.len());
            reps.push((cand, cells));
        }
    }
    reps
}

/// All embeddings whose forced cells agree with `ts` everywhere, one
/// representative per distinct forced map, in lexicographic role order.
pub fn embeddings_in(ts: &TableSet, n: usize) -> Result<Vec<CandidateEmbedding>, Error> {
    let size = ts.size();
    let list = enumerate_candidates(n, size, true, None)?;
    let mut hits = Vec::new();
    for cand in list.candidates {
        let cells = cand.cells(&SEARCH_OPS);
        if cells.agrees_with(ts) {
            hits.push(cand);
        }
    }
    Ok(distinct_maps(hits, &SEARCH_OPS)
        .into_iter()
        .map(|(c, _)| c)
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct PairHit {
    pub roles1: Vec<Cipher>,
    pub roles2: Vec<Cipher>,
    pub shared_cells: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairScanReport {
    pub n: usize,
    pub size: usize,
    /// Full injective-assignment count (closed form).
    pub raw_candidates: u128,
    pub distinct_maps: usize,
    /// Unordered pairs of distinct forced maps examined.
    pub pairs_scanned: u64,
    pub compatible_pairs: u64,
    /// Compatible AND overlapping pairs — the question under test.
    pub hits: Vec<PairHit>,
    pub truncated: bool,
}

/// Scans all unordered candidate pairs for compatible overlapping pairs.
/// Pairs with identical forced maps are one candidate seen twice and are
/// excluded up front by the map-level dedup.
pub fn search_overlapping_pairs(
    n: usize,
    size: usize,
    limit: Option<usize>,
) -> Result<PairScanReport, Error> {
    let list = enumerate_candidates(n, size, true, limit)?;
    let truncated = list.truncated;
    let raw = list.raw_count;
    let reps = distinct_maps(list.candidates, &SEARCH_OPS);
    let m = reps.len();
    let per_i: Vec<(u64, u64, Vec<PairHit>)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut scanned = 0u64;
            let mut compatible = 0u64;
            let mut hits = Vec::new();
            for j in i + 1..m {
                scanned += 1;
                let (compat, over) = relate_fast(&reps[i].1, &reps[j].1);
                if compat {
                    compatible += 1;
                    if over {
                        let full = overlap(&reps[i].0, &reps[j].0).expect("same size");
                        hits.push(PairHit {
                            roles1: reps[i].0.roles.clone(),
                            roles2: reps[j].0.roles.clone(),
                            shared_cells: full.shared_cells.len(),
                        });
                    }
                }
            }
            (scanned, compatible, hits)
        })
        .collect();
    let mut report = PairScanReport {
        n,
        size,
        raw_candidates: raw,
        distinct_maps: m,
        pairs_scanned: 0,
        compatible_pairs: 0,
        hits: Vec::new(),
        truncated,
    };
    for (scanned, compatible, hits) in per_i {
        report.pairs_scanned += scanned;
        report.compatible_pairs += compatible;
        report.hits.extend(hits);
    }
    Ok(report)
}

/// The constructive compatible pair: a primary embedding on the identity
/// roles and a secondary occupying the complementary cross blocks (the
/// B and C role sets swapped), forced-cell sets disjoint by the typing
/// rule.
pub fn dual_candidate_pair(
    n: usize,
    size: usize,
) -> Result<(CandidateEmbedding, CandidateEmbedding), Error> {
    let primary: Vec<Cipher> = (0..3 * n as Cipher).collect();
    let mut secondary: Vec<Cipher> = Vec::with_capacity(3 * n);
    secondary.extend(0..n as Cipher);
    secondary.extend(2 * n as Cipher..3 * n as Cipher);
    secondary.extend(n as Cipher..2 * n as Cipher);
    Ok((
        CandidateEmbedding::new(n, size, primary)?,
        CandidateEmbedding::new(n, size, secondary)?,
    ))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CliqueBounds {
    /// Candidate cap; exceeding it flags the report PARTIAL.
    pub limit: Option<usize>,
    /// Add the constructive dual pair to the candidate set (lower bound).
    pub inject_dual: bool,
}

impl Default for CliqueBounds {
    fn default() -> CliqueBounds {
        CliqueBounds { limit: None, inject_dual: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CliqueReport {
    pub n: usize,
    pub size: usize,
    pub distinct_maps: usize,
    /// Lower bound only when true (candidate set was truncated).
    pub partial: bool,
    pub max_size: usize,
    /// Role vectors of one maximum compatible set.
    pub witness: Vec<Vec<Cipher>>,
    /// Whether any pair inside the witness overlaps.
    pub witness_overlapping: bool,
    pub compatible_pairs: u64,
    /// Compatible pairs joining different class-partition families;
    /// zero means the family decomposition was exact.
    pub cross_family_pairs: u64,
}

/// Bitset max clique (Bron–Kerbosch with pivoting). `adj` is row-major,
/// `words` u64 per row.
fn max_clique_bitset(adj: &[u64], words: usize, nodes: usize) -> Vec<usize> {
    fn bk(
        adj: &[u64],
        words: usize,
        r: &mut Vec<usize>,
        p: &mut Vec<u64>,
        x: &mut Vec<u64>,
        best: &mut Vec<usize>,
    ) {
        let p_count: u32 = p.iter().map(|w| w.count_ones()).sum();
        if p_count == 0 && x.iter().all(|&w| w == 0) {
            if r.len() > best.len() {
                *best = r.clone();
            }
            return;
        }
        if r.len() + p_count as usize <= best.len() {
            return;
        }
        // pivot: vertex of P ∪ X with most neighbours in P
        let mut pivot = usize::MAX;
        let mut pivot_deg = u32::MAX;
        for w in 0..words {
            let mut bits = p[w] | x[w];
            while bits != 0 {
                let v = w * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let deg: u32 = (0..words)
                    .map(|k| (adj[v * words + k] & p[k]).count_ones())
                    .sum();
                let non = p_count - deg;
                if pivot == usize::MAX || non < pivot_deg {
                    pivot = v;
                    pivot_deg = non;
                }
            }
        }
        let cand: Vec<usize> = (0..words)
            .flat_map(|w| {
                let mut bits = p[w] & !adj[pivot * words + w];
                let mut vs = Vec::new();
                while bits != 0 {
                    vs.push(w * 64 + bits.trailing_zeros() as usize);
                    bits &= bits - 1;
                }
                vs
            })
            .collect();
        for v in cand {
            r.push(v);
            let mut p2 = vec![0u64; words];
            let mut x2 = vec![0u64; words];
            for w in 0..words {
                p2[w] = p[w] & adj[v * words + w];
                x2[w] = x[w] & adj[v * words + w];
            }
            bk(adj, words, r, &mut p2, &mut x2, best);
            r.pop();
            p[v / 64] &= !(1u64 << (v % 64));
            x[v / 64] |= 1u64 << (v % 64);
        }
    }
    let words_row = words;
    let mut p = vec![0u64; words_row];
    for v in 0..nodes {
        p[v / 64] |= 1u64 << (v % 64);
    }
    let mut x = vec![0u64; words_row];
    let mut r = Vec::new();
    let mut best = Vec::new();
    bk(adj, words_row, &mut r, &mut p, &mut x, &mut best);
    best.sort_unstable();
    best
}

/// Exact max clique over a node subset, building adjacency pairwise.
fn clique_over(reps: &[(CandidateEmbedding, DenseCells)], idxs: &[usize]) -> (Vec<usize>, u64) {
    let k = idxs.len();
    let words = k.div_ceil(64);
    let mut adj = vec![0u64; k * words];
    let mut edges = 0u64;
    for a in 0..k {
        for b in a + 1..k {
            let (compat, _) = relate_fast(&reps[idxs[a]].1, &reps[idxs[b]].1);
            if compat {
                edges += 1;
                adj[a * words + b / 64] |= 1u64 << (b % 64);
                adj[b * words + a / 64] |= 1u64 << (a % 64);
            }
        }
    }
    let local = max_clique_bitset(&adj, words, k);
    (local.into_iter().map(|i| idxs[i]).collect(), edges)
}

/// The class partition as an unordered family of unordered value sets.
fn family_key(cand: &CandidateEmbedding) -> Vec<Vec<Cipher>> {
    let n = cand.n;
    let mut fam: Vec<Vec<Cipher>> = (0..3)
        .map(|ci| {
            let mut s = cand.roles[ci * n..(ci + 1) * n].to_vec();
            s.sort_unstable();
            s
        })
        .collect();
    fam.sort();
    fam
}

/// Maximum set of pairwise compatible embeddings (joint satisfiability
/// in one table set). Exact when the candidate set is exhaustive; a
/// truncated set yields a PARTIAL lower-bound report.
///
/// Candidates with different class partitions conflict on the cells
/// where their cross blocks collide, so the clique search decomposes by
/// partition family and verifies the decomposition with an exhaustive
/// cross-family scan; any stray cross-family edges are resolved on the
/// induced subgraph.
pub fn max_compatible_set(
    n: usize,
    size: usize,
    bounds: CliqueBounds,
) -> Result<CliqueReport, Error> {
    let list = enumerate_candidates(n, size, true, bounds.limit)?;
    let partial = list.truncated;
    let mut cands = list.candidates;
    if bounds.inject_dual {
        let (p, s) = dual_candidate_pair(n, size)?;
        cands.push(p.canonical());
        cands.push(s.canonical());
    }
    let reps = distinct_maps(cands, &SEARCH_OPS);
    let m = reps.len();

    // family decomposition
    let mut families: BTreeMap<Vec<Vec<Cipher>>, Vec<usize>> = BTreeMap::new();
    for (i, (cand, _)) in reps.iter().enumerate() {
        families.entry(family_key(cand)).or_default().push(i);
    }
    let fam_of: Vec<usize> = {
        let mut v = vec![0usize; m];
        for (fi, idxs) in families.values().enumerate() {
            for &i in idxs {
                v[i] = fi;
            }
        }
        v
    };

    let mut best: Vec<usize> = Vec::new();
    let mut compatible_pairs = 0u64;
    for idxs in families.values() {
        let (clique, edges) = clique_over(&reps, idxs);
        compatible_pairs += edges;
        if clique.len() > best.len() {
            best = clique;
        }
    }

    // exhaustive cross-family verification
    let cross: Vec<(u32, u32)> = (0..m)
        .into_par_iter()
        .flat_map_iter(|i| {
            let reps = &reps;
            let fam_of = &fam_of;
            (i + 1..m).filter_map(move |j| {
                if fam_of[i] == fam_of[j] {
                    return None;
                }
                let (compat, _) = relate_fast(&reps[i].1, &reps[j].1);
                compat.then_some((i as u32, j as u32))
            })
        })
        .collect();
    let cross_family_pairs = cross.len() as u64;
    compatible_pairs += cross_family_pairs;
    if !cross.is_empty() {
        // a clique spanning families puts all its nodes on cross edges
        let mut sub: Vec<usize> = cross
            .iter()
            .flat_map(|&(i, j)| [i as usize, j as usize])
            .collect();
        sub.sort_unstable();
        sub.dedup();
        let (clique, _) = clique_over(&reps, &sub);
        if clique.len() > best.len() {
            best = clique;
        }
    }

    let witness: Vec<Vec<Cipher>> = best.iter().map(|&i| reps[i].0.roles.clone()).collect();
    let mut witness_overlapping = false;
    for a in 0..best.len() {
        for b in a + 1..best.len() {
            let (_, over) = relate_fast(&reps[best[a]].1, &reps[best[b]].1);
            witness_overlapping |= over;
        }
    }
    Ok(CliqueReport {
        n,
        size,
        distinct_maps: m,
        partial,
        max_size: best.len(),
        witness,
        witness_overlapping,
        compatible_pairs,
        cross_family_pairs,
    })
}

// --- constant-expression search ------------------------------------------

/// The finite summary that decides whether any {x:A, y:B} expression in
/// + and × modulo 2 can be a constant: its ABC type, its truth table
/// over (x, y), and the occurrence parities of x and y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SignatureState {
    pub ty: AbcType,
    /// Bit `2x + y` holds the value at (x, y).
    pub truth: u8,
    pub x_odd: bool,
    pub y_odd: bool,
}

impl SignatureState {
    pub const X_LEAF: SignatureState = SignatureState {
        ty: AbcType::A,
        truth: 0b1100,
        x_odd: true,
        y_odd: false,
    };
    pub const Y_LEAF: SignatureState = SignatureState {
        ty: AbcType::B,
        truth: 0b1010,
        x_odd: false,
        y_odd: true,
    };

    /// State space bound: 3 types x 16 tables x 4 parity pairs.
    pub const STATE_BOUND: usize = 192;

    pub fn combine(self, rhs: SignatureState, op: OpKind) -> Option<SignatureState> {
        let ty = result_type(SchemeKind::Abc, self.ty, rhs.ty)?;
        let truth = match op {
            OpKind::Add => (self.truth ^ rhs.truth) & 0b1111,
            OpKind::Mul => self.truth & rhs.truth,
            _ => return None,
        };
        Some(SignatureState {
            ty,
            truth,
            x_odd: self.x_odd ^ rhs.x_odd,
            y_odd: self.y_odd ^ rhs.y_odd,
        })
    }

    pub fn is_constant(self) -> bool {
        self.truth == 0 || self.truth == 0b1111
    }

    /// The open-question parity class: x odd, y even.
    pub fn in_odd_even_class(self) -> bool {
        self.x_odd && !self.y_odd
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosureReport {
    /// Sorted fixpoint of reachable signatures.
    pub reachable: Vec<SignatureState>,
    pub rounds: usize,
    pub constant_hits: Vec<SignatureState>,
    /// Constant hits with x odd and y even — the question's class.
    pub odd_even_constant_hits: Vec<SignatureState>,
    /// One witness expression per reachable signature.
    pub witnesses: Vec<(SignatureState, String)>,
}

/// Least fixpoint over signatures from the two leaf seeds under typed
/// + and × composition. Saturation within the 192-state bound decides
/// the constant-expression question for all expression sizes at once.
pub fn signature_closure() -> ClosureReport {
    let mut witnesses: BTreeMap<SignatureState, String> = BTreeMap::new();
    witnesses.insert(SignatureState::X_LEAF, "x:A".to_string());
    witnesses.insert(SignatureState::Y_LEAF, "y:B".to_string());
    let mut rounds = 0;
    loop {
        rounds += 1;
        let snapshot: Vec<(SignatureState, String)> = witnesses
            .iter()
            .map(|(s, w)| (*s, w.clone()))
            .collect();
        let mut grew = false;
        for (s1, w1) in &snapshot {
            for (s2, w2) in &snapshot {
                for op in SEARCH_OPS {
                    let Some(s) = s1.combine(*s2, op) else { continue };
                    witnesses.entry(s).or_insert_with(|| {
                        grew = true;
                        format!("({w1} {} {w2})", op.symbol())
                    });
                }
            }
        }
        if !grew {
            break;
        }
    }
    let reachable: Vec<SignatureState> = witnesses.keys().copied().collect();
    let constant_hits: Vec<SignatureState> = reachable
        .iter()
        .copied()
        .filter(|s| s.is_constant())
        .collect();
    let odd_even_constant_hits: Vec<SignatureState> = constant_hits
        .iter()
        .copied()
        .filter(|s| s.in_odd_even_class())
        .collect();
    ClosureReport {
        reachable,
        rounds,
        constant_hits,
        odd_even_constant_hits,
        witnesses: witnesses.into_iter().collect(),
    }
}

pub const MAX_OPS_GUARD: usize = 24;

#[derive(Debug, Clone, Serialize)]
pub struct ConstExprReport {
    pub max_ops: usize,
    /// Distinct signatures first reached at each operation count.
    pub new_states_per_size: Vec<usize>,
    /// Union of signatures over all sizes up to `max_ops`.
    pub reachable: Vec<SignatureState>,
    pub constant_witnesses: Vec<(SignatureState, String)>,
    pub odd_even_constant_witnesses: Vec<(SignatureState, String)>,
}

/// Size-bounded enumeration of all {x:A, y:B} expression trees with
/// signature memoization; the independent cross-check of the closure.
pub fn enumerate_constant_exprs(max_ops: usize) -> Result<ConstExprReport, Error> {
    if max_ops > MAX_OPS_GUARD {
        return Err(Error::Guard(format!(
            "max_ops {max_ops} exceeds the enumeration guard {MAX_OPS_GUARD}"
        )));
    }
    // by_ops[k]: signatures of expressions with exactly k operations,
    // with one witness each (first in deterministic order).
    let mut by_ops: Vec<BTreeMap<SignatureState, String>> = Vec::with_capacity(max_ops + 1);
    let mut seen: BTreeMap<SignatureState, String> = BTreeMap::new();
    let mut new_per_size = Vec::with_capacity(max_ops + 1);
    for k in 0..=max_ops {
        let mut level: BTreeMap<SignatureState, String> = BTreeMap::new();
        if k == 0 {
            level.insert(SignatureState::X_LEAF, "x:A".to_string());
            level.insert(SignatureState::Y_LEAF, "y:B".to_string());
        } else {
            for i in 0..k {
                let j = k - 1 - i;
                for (s1, w1) in &by_ops[i] {
                    for (s2, w2) in &by_ops[j] {
                        for op in SEARCH_OPS {
                            let Some(s) = s1.combine(*s2, op) else { continue };
                            level
                                .entry(s)
                                .or_insert_with(|| format!("({w1} {} {w2})", op.symbol()));
                        }
                    }
                }
            }
        }
        let mut fresh = 0;
        for (s, w) in &level {
            if !seen.contains_key(s) {
                seen.insert(*s, w.clone());
                fresh += 1;
            }
        }
        new_per_size.push(fresh);
        by_ops.push(level);
    }
    let constant_witnesses: Vec<(SignatureState, String)> = seen
        .iter()
        .filter(|(s, _)| s.is_constant())
        .map(|(s, w)| (*s, w.clone()))
        .collect();
    let odd_even_constant_witnesses: Vec<(SignatureState, String)> = constant_witnesses
        .iter()
        .filter(|(s, _)| s.in_odd_even_class())
        .cloned()
        .collect();
    Ok(ConstExprReport {
        max_ops,
        new_states_per_size: new_per_size,
        reachable: seen.keys().copied().collect(),
        constant_witnesses,
        odd_even_constant_witnesses,
    })
}

/// The signature of a concrete expression over leaves `x:A` and `y:B`
/// with + and × nodes; the bridge between the expression language and
/// the closure.
pub fn signature_of_expr(e: &Expr) -> Result<SignatureState, Error> {
    match e {
        Expr::Leaf { name, ty } => match (name.as_str(), ty) {
            ("x", AbcType::A) => Ok(SignatureState::X_LEAF),
            ("y", AbcType::B) => Ok(SignatureState::Y_LEAF),
            _ => Err(Error::Param(format!(
                "signature search admits only x:A and y:B leaves, got {name}:{ty}"
            ))),
        },
        Expr::Node { op, left, right } => {
            if !matches!(op, OpKind::Add | OpKind::Mul) {
                return Err(Error::Param(format!(
                    "signature search admits only + and ×, got {}",
                    op.symbol()
                )));
            }
            let s1 = signature_of_expr(left)?;
            let s2 = signature_of_expr(right)?;
            s1.combine(s2, *op).ok_or(Error::IllTyped)
        }
    }
}
