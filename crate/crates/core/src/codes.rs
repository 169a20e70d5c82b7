//! CSS and subsystem codes, logical bases, degree profiles and distances.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::f2core::{overlap_parity, xor_sorted, BitMatrix, BitVector, F2Error, RowSpace};

/// Largest qubit count accepted by [`exhaustive_distance`].
pub const EXHAUSTIVE_QUBIT_LIMIT: usize = 28;

#[derive(Debug, Error)]
pub enum CodeError {
    #[error(transparent)]
    F2(#[from] F2Error),
    #[error("X and Z checks do not commute")]
    NonCommuting,
    #[error("invalid logical basis: {0}")]
    BadLogicals(String),
    #[error("exhaustive search limited to {limit} qubits, code has {n}")]
    TooLarge { n: usize, limit: usize },
}

/// Code distance; `Infinite` when no nontrivial logical exists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Distance {
    Finite(usize),
    Infinite,
}

impl Distance {
    pub fn finite(self) -> Option<usize> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }

    pub fn is_at_least(self, d: usize) -> bool {
        match self {
            Distance::Finite(x) => x >= d,
            Distance::Infinite => true,
        }
    }
}

impl PartialOrd for Distance {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Distance {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use Distance::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.cmp(b),
            (Finite(_), Infinite) => std::cmp::Ordering::Less,
            (Infinite, Finite(_)) => std::cmp::Ordering::Greater,
            (Infinite, Infinite) => std::cmp::Ordering::Equal,
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Distance {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Distance::Finite(d) => s.serialize_u64(*d as u64),
            Distance::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Distance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(Distance::Finite(n as usize)),
            Raw::S(s) if s == "inf" => Ok(Distance::Infinite),
            Raw::S(s) => Err(serde::de::Error::custom(format!("bad distance {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    X,
    Z,
}

/// Canonical logical basis: `lx = (I | Qx | 0)`, `lz = (I | 0 | Qz)` after
/// ordering the columns as `info_qubits`, then the Z pivots, then the X pivots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalBasis {
    pub lx: BitMatrix,
    pub lz: BitMatrix,
    pub info_qubits: Vec<usize>,
    pub column_order: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CssCode {
    pub hx: BitMatrix,
    pub hz: BitMatrix,
    pub lx: BitMatrix,
    pub lz: BitMatrix,
}

impl CssCode {
    /// Builds a code and attaches its canonical logical basis.
    pub fn new(hx: BitMatrix, hz: BitMatrix) -> Result<Self, CodeError> {
        if hx.n_cols() != hz.n_cols() {
            return Err(
                F2Error::DimensionMismatch(format!("hx has {} columns, hz has {}", hx.n_cols(), hz.n_cols())).into()
            );
        }
        if !hx.mul(&hz.transpose())?.is_zero() {
            return Err(CodeError::NonCommuting);
        }
        let cb = canonical_basis_of(&hx, &hz);
        Ok(Self { hx, hz, lx: cb.lx, lz: cb.lz })
    }

    /// Builds a code with a caller-supplied logical basis, validated.
    pub fn with_logicals(hx: BitMatrix, hz: BitMatrix, lx: BitMatrix, lz: BitMatrix) -> Result<Self, CodeError> {
        let mut code = Self::new(hx, hz)?;
        code.lx = lx;
        code.lz = lz;
        code.validate()?;
        Ok(code)
    }

    pub fn n(&self) -> usize {
        self.hx.n_cols()
    }

    pub fn k(&self) -> usize {
        self.n() - self.hx.rank() - self.hz.rank()
    }

    pub fn validate(&self) -> Result<(), CodeError> {
        if !self.hx.mul(&self.hz.transpose())?.is_zero() {
            return Err(CodeError::NonCommuting);
        }
        let k = self.k();
        if self.lx.n_rows() != k || self.lz.n_rows() != k {
            return Err(CodeError::BadLogicals(format!(
                "expected {k} logicals, got {} X and {} Z",
                self.lx.n_rows(),
                self.lz.n_rows()
            )));
        }
        if !self.hz.mul(&self.lx.transpose())?.is_zero() {
            return Err(CodeError::BadLogicals("X logicals violate Z checks".into()));
        }
        if !self.hx.mul(&self.lz.transpose())?.is_zero() {
            return Err(CodeError::BadLogicals("Z logicals violate X checks".into()));
        }
        if self.lx.mul(&self.lz.transpose())?.rank() != k {
            return Err(CodeError::BadLogicals("pairing is degenerate".into()));
        }
        Ok(())
    }

    pub fn canonical_basis(&self) -> CanonicalBasis {
        canonical_basis_of(&self.hx, &self.hz)
    }

    pub fn degree_profile(&self) -> DegreeProfile {
        DegreeProfile::of(&self.hx, &self.hz)
    }

    pub fn to_subsystem(&self) -> SubsystemCode {
        SubsystemCode {
            stabilizer_x: self.hx.clone(),
            stabilizer_z: self.hz.clone(),
            gauge_x: BitMatrix::zeros(0, self.n()),
            gauge_z: BitMatrix::zeros(0, self.n()),
            bare_lx: self.lx.clone(),
            bare_lz: self.lz.clone(),
        }
    }

    /// Replaces the logical basis by `t·lx`, `t⁻ᵀ·lz` for invertible `t`.
    pub fn change_basis(&self, t: &BitMatrix) -> Option<CssCode> {
        let inv = crate::f2core::inverse(t)?;
        let lx = t.mul(&self.lx).ok()?;
        let lz = inv.transpose().mul(&self.lz).ok()?;
        Some(CssCode { hx: self.hx.clone(), hz: self.hz.clone(), lx, lz })
    }
}

fn canonical_basis_of(hx: &BitMatrix, hz: &BitMatrix) -> CanonicalBasis {
    let n = hx.n_cols();
    let ex = hx.echelon();
    let mut is_px = vec![false; n];
    for &p in &ex.pivots {
        is_px[p] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&c| !is_px[c]).collect();
    // Hz restricted away from the X pivots keeps full rank for a commuting pair.
    let ez = hz.select_columns(&rest).echelon();
    let pz: Vec<usize> = ez.pivots.iter().map(|&c| rest[c]).collect();
    let mut is_pz = vec![false; n];
    for &p in &pz {
        is_pz[p] = true;
    }
    let info: Vec<usize> = (0..n).filter(|&c| !is_px[c] && !is_pz[c]).collect();
    let mut info_pos = vec![usize::MAX; n];
    for (i, &c) in info.iter().enumerate() {
        info_pos[c] = i;
    }
    // Reduced Hz rows on the original columns: identity on pz, free on info and px.
    let hz_red: Vec<Vec<usize>> = ez.rows.iter().map(|r| r.iter().map(|&c| rest[c]).collect::<Vec<_>>()).collect();
    let mut lx_rows: Vec<Vec<usize>> = info.iter().map(|&c| vec![c]).collect();
    let mut lz_rows: Vec<Vec<usize>> = info.iter().map(|&c| vec![c]).collect();
    // x_{pz_i} = Hz_red[i, j] for info column j (x vanishes on px)
    for (row, &p) in hz_red.iter().zip(&pz) {
        for &c in row {
            if info_pos[c] != usize::MAX {
                lx_rows[info_pos[c]].push(p);
            }
        }
    }
    // z_{px_i} = Hx_red[i, j]; z vanishes on pz
    for (row, &p) in ex.rows.iter().zip(&ex.pivots) {
        for &c in row {
            if info_pos[c] != usize::MAX {
                lz_rows[info_pos[c]].push(p);
            }
        }
    }
    for r in lx_rows.iter_mut().chain(lz_rows.iter_mut()) {
        r.sort_unstable();
    }
    let k = info.len();
    let mut column_order = info.clone();
    column_order.extend(&pz);
    column_order.extend(&ex.pivots);
    CanonicalBasis {
        lx: BitMatrix::new(k, n, lx_rows).expect("sorted supports"),
        lz: BitMatrix::new(k, n, lz_rows).expect("sorted supports"),
        info_qubits: info,
        column_order,
    }
}

/// Stabilizers, gauge pairs and bare logical pairs over one qubit set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsystemCode {
    pub stabilizer_x: BitMatrix,
    pub stabilizer_z: BitMatrix,
    pub gauge_x: BitMatrix,
    pub gauge_z: BitMatrix,
    pub bare_lx: BitMatrix,
    pub bare_lz: BitMatrix,
}

impl SubsystemCode {
    pub fn n(&self) -> usize {
        self.stabilizer_x.n_cols()
    }

    pub fn gauge_count(&self) -> usize {
        self.gauge_x.n_rows()
    }

    pub fn bare_count(&self) -> usize {
        self.bare_lx.n_rows()
    }

    /// Checks commutation and the symplectic pairings of gauge and bare operators.
    pub fn validate(&self) -> Result<(), CodeError> {
        let sx = &self.stabilizer_x;
        let sz = &self.stabilizer_z;
        if !sx.mul(&sz.transpose())?.is_zero() {
            return Err(CodeError::NonCommuting);
        }
        let xs = BitMatrix::vstack(&[&self.gauge_x, &self.bare_lx])?;
        let zs = BitMatrix::vstack(&[&self.gauge_z, &self.bare_lz])?;
        if !sz.mul(&xs.transpose())?.is_zero() || !sx.mul(&zs.transpose())?.is_zero() {
            return Err(CodeError::BadLogicals("gauge or bare operator violates a stabilizer".into()));
        }
        if xs.mul(&zs.transpose())? != BitMatrix::identity(xs.n_rows()) {
            return Err(CodeError::BadLogicals("gauge and bare operators are not symplectically paired".into()));
        }
        Ok(())
    }

    /// Parity constraint and conjugate bare logicals for a dressed search on `side`.
    pub fn search_inputs(&self, side: Side) -> (&BitMatrix, &BitMatrix) {
        match side {
            Side::X => (&self.stabilizer_z, &self.bare_lz),
            Side::Z => (&self.stabilizer_x, &self.bare_lx),
        }
    }

    pub fn degree_profile(&self) -> DegreeProfile {
        DegreeProfile::of(&self.stabilizer_x, &self.stabilizer_z)
    }
}

/// Maximum qubit degree (X plus Z checks touching it) and maximum check weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DegreeProfile {
    pub max_qubit_degree: usize,
    pub max_check_weight_x: usize,
    pub max_check_weight_z: usize,
}

impl DegreeProfile {
    pub fn of(hx: &BitMatrix, hz: &BitMatrix) -> Self {
        let cx = hx.column_weights();
        let cz = hz.column_weights();
        let max_qubit_degree = cx.iter().zip(&cz).map(|(a, b)| a + b).max().unwrap_or(0);
        Self { max_qubit_degree, max_check_weight_x: hx.max_row_weight(), max_check_weight_z: hz.max_row_weight() }
    }

    /// Largest of the three maxima.
    pub fn max_degree(&self) -> usize {
        self.max_qubit_degree.max(self.max_check_weight_x).max(self.max_check_weight_z)
    }

    /// Component-wise `<=`.
    pub fn within(&self, bound: &DegreeProfile) -> bool {
        self.max_qubit_degree <= bound.max_qubit_degree
            && self.max_check_weight_x <= bound.max_check_weight_x
            && self.max_check_weight_z <= bound.max_check_weight_z
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceEstimate {
    /// Smallest nontrivial logical weight seen in any trial.
    pub d_upper: Distance,
    /// Distinct nontrivial logicals of weight `<= w_max`, sorted by weight then support.
    pub witnesses: BitMatrix,
}

/// Per-trial stream: trial `i` of a run seeded with `seed` always sees the same permutation.
fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    rng
}

/// Randomized search for low-weight logicals.
///
/// Each trial permutes the qubit order, eliminates `h`, and keeps every
/// kernel basis vector that pairs nontrivially with a row of `lc` and has
/// weight at most `w_max`. The qubit order is the only randomness; the
/// echelon form of a fixed column order is unique, so permuting check rows
/// alone would repeat the same kernel basis in every trial.
pub fn search_logicals(h: &BitMatrix, lc: &BitMatrix, w_max: usize, n_trials: usize, seed: u64) -> DistanceEstimate {
    assert!(n_trials >= 1, "n_trials must be at least 1");
    let n = h.n_cols();
    assert_eq!(lc.n_cols(), n, "conjugate logicals must act on the same qubits");
    if lc.n_rows() == 0 || n == h.rank() {
        return DistanceEstimate { d_upper: Distance::Infinite, witnesses: BitMatrix::zeros(0, n) };
    }
    let lc_basis = lc.rowspace_basis();
    let per_trial: Vec<(usize, Vec<Vec<usize>>)> = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let kernel = h.select_columns(&order).echelon().kernel_rows();
            let mut best = usize::MAX;
            let mut found = Vec::new();
            for row in kernel {
                let mut v: Vec<usize> = row.iter().map(|&c| order[c]).collect();
                v.sort_unstable();
                if lc_basis.rows().iter().any(|l| overlap_parity(l, &v)) {
                    best = best.min(v.len());
                    if v.len() <= w_max {
                        found.push(v);
                    }
                }
            }
            (best, found)
        })
        .collect();
    let best = per_trial.iter().map(|(b, _)| *b).min().unwrap_or(usize::MAX);
    let set: BTreeSet<(usize, Vec<usize>)> = per_trial.into_iter().flat_map(|(_, f)| f).map(|v| (v.len(), v)).collect();
    let witnesses = BitMatrix::new(set.len(), n, set.into_iter().map(|(_, v)| v).collect()).expect("sorted supports");
    let d_upper = if best == usize::MAX { Distance::Infinite } else { Distance::Finite(best) };
    DistanceEstimate { d_upper, witnesses }
}

/// Dressed-distance upper bound on `side` of a subsystem code.
pub fn estimate_distance(
    code: &SubsystemCode,
    side: Side,
    w_max: usize,
    n_trials: usize,
    seed: u64,
) -> DistanceEstimate {
    let (h, lc) = code.search_inputs(side);
    search_logicals(h, lc, w_max, n_trials, seed)
}

pub fn estimate_css_distance(code: &CssCode, side: Side, w_max: usize, n_trials: usize, seed: u64) -> DistanceEstimate {
    let (h, lc) = match side {
        Side::X => (&code.hz, &code.lz),
        Side::Z => (&code.hx, &code.lx),
    };
    search_logicals(h, lc, w_max, n_trials, seed)
}

/// Keeps the first witness of each coset of `modulo`'s row space.
pub fn dedup_classes(witnesses: &BitMatrix, modulo: &BitMatrix) -> BitMatrix {
    let rs = RowSpace::new(modulo);
    let mut seen = BTreeSet::new();
    let keep: Vec<usize> = (0..witnesses.n_rows()).filter(|&i| seen.insert(rs.reduce(witnesses.row(i)))).collect();
    witnesses.select_rows(&keep)
}

/// Exact minimum weight of `x` with `h·x = 0` pairing nontrivially with `lc`.
///
/// Enumerates supports in order of increasing weight and stops at the first hit.
pub fn exhaustive_min_weight(h: &BitMatrix, lc: &BitMatrix) -> Result<Distance, CodeError> {
    let n = h.n_cols();
    if n > EXHAUSTIVE_QUBIT_LIMIT {
        return Err(CodeError::TooLarge { n, limit: EXHAUSTIVE_QUBIT_LIMIT });
    }
    let hb = h.rowspace_basis();
    let lb = lc.rowspace_basis();
    if lb.n_rows() == 0 {
        return Ok(Distance::Infinite);
    }
    // both bases have at most n <= 28 rows, so one word per column suffices
    let mut syn = vec![0u64; n];
    for (i, r) in hb.rows().iter().enumerate() {
        for &c in r {
            syn[c] |= 1 << i;
        }
    }
    let mut pair = vec![0u64; n];
    for (i, r) in lb.rows().iter().enumerate() {
        for &c in r {
            pair[c] |= 1 << i;
        }
    }
    for w in 1..=n {
        let hit = (0..n).into_par_iter().any(|first| dfs(&syn, &pair, first + 1, w - 1, syn[first], pair[first]));
        if hit {
            return Ok(Distance::Finite(w));
        }
    }
    Ok(Distance::Infinite)
}

fn dfs(syn: &[u64], pair: &[u64], start: usize, left: usize, s: u64, p: u64) -> bool {
    if left == 0 {
        return s == 0 && p != 0;
    }
    if syn.len() < start + left {
        return false;
    }
    (start..=syn.len() - left).any(|i| dfs(syn, pair, i + 1, left - 1, s ^ syn[i], p ^ pair[i]))
}

/// Exact dressed distance on `side`; refuses codes above [`EXHAUSTIVE_QUBIT_LIMIT`] qubits.
pub fn exhaustive_distance(code: &SubsystemCode, side: Side) -> Result<Distance, CodeError> {
    let (h, lc) = code.search_inputs(side);
    exhaustive_min_weight(h, lc)
}

pub fn exhaustive_css_distance(code: &CssCode, side: Side) -> Result<Distance, CodeError> {
    exhaustive_distance(&code.to_subsystem(), side)
}

/// Whether `v` commutes with every row of `checks`.
pub fn commutes_with_all(v: &[usize], checks: &BitMatrix) -> bool {
    checks.rows().iter().all(|r| !overlap_parity(r, v))
}

/// Sum of two supports.
pub fn add_supports(a: &[usize], b: &[usize]) -> Vec<usize> {
    xor_sorted(a, b)
}

pub fn vector(n: usize, support: &[usize]) -> BitVector {
    BitVector::new(n, support.to_vec()).expect("valid support")
}
