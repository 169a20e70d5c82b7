//! Surgery diagrams: an ancilla complex `A_1 -> A_0 -> A_{-1}` attached to a
//! data code through chain maps `Γ_1: A_1 -> C_1` and `Γ_0: A_0 -> C_0`.
//!
//! Matrices are linear maps with rows indexing the codomain, so `∂^A_1` is
//! `|A_0| × |A_1|`, `Γ_1` is `n × |A_1|` and `Γ_0` is `|C_0| × |A_0|`.
//! Merged qubits are ordered `[A_0 | C_1]`, X checks `[A_1 | C_2]` and Z
//! checks `[A_{-1} | C_0]`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{
    estimate_distance, exhaustive_distance, CodeError, CssCode, DegreeProfile, Distance, Side, SubsystemCode,
    EXHAUSTIVE_QUBIT_LIMIT,
};
use crate::constructions::{product_complex, ClassicalCode};
use crate::f2core::{inverse, BitMatrix, BitVector, F2Error, RowSpace};

/// Largest column count accepted by [`soundness_certificate`].
pub const SOUNDNESS_COLUMN_LIMIT: usize = 24;

#[derive(Debug, Error)]
pub enum SurgeryError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("diagram is invalid: {commutation} commutation and {chain} chain violations")]
    InvalidDiagram { commutation: usize, chain: usize },
    #[error(transparent)]
    F2(#[from] F2Error),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("brute force limited to {limit} columns, matrix has {cols}")]
    TooLarge { cols: usize, limit: usize },
    #[error("not a code homomorphism: {0}")]
    BadHomomorphism(String),
    #[error("{given} column maps exceed k = {limit} of the column code")]
    TooManyHomomorphisms { given: usize, limit: usize },
    #[error("inconsistent merged code: {0}")]
    Inconsistent(String),
}

pub type SurgeryResult<T> = Result<T, SurgeryError>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurgeryDiagram {
    pub data: CssCode,
    /// `∂^A_1: A_1 -> A_0`.
    pub d1a: BitMatrix,
    /// `∂^A_0: A_0 -> A_{-1}`.
    pub d0a: BitMatrix,
    /// `Γ_1: A_1 -> C_1`.
    pub gamma1: BitMatrix,
    /// `Γ_0: A_0 -> C_0`.
    pub gamma0: BitMatrix,
}

impl SurgeryDiagram {
    /// Diagram with no ancilla at all.
    pub fn empty(data: CssCode) -> Self {
        let n = data.n();
        let c0 = data.hz.n_rows();
        Self {
            data,
            d1a: BitMatrix::zeros(0, 0),
            d0a: BitMatrix::zeros(0, 0),
            gamma1: BitMatrix::zeros(n, 0),
            gamma0: BitMatrix::zeros(c0, 0),
        }
    }

    /// Number of ancilla X checks.
    pub fn a1(&self) -> usize {
        self.d1a.n_cols()
    }

    /// Number of ancilla qubits.
    pub fn a0(&self) -> usize {
        self.d1a.n_rows()
    }

    /// Number of ancilla Z checks.
    pub fn a_minus1(&self) -> usize {
        self.d0a.n_rows()
    }

    /// `|A| = |A_1| + |A_0| + |A_{-1}|`.
    pub fn ancilla_size(&self) -> usize {
        self.a1() + self.a0() + self.a_minus1()
    }

    pub fn check_shapes(&self) -> SurgeryResult<()> {
        let n = self.data.n();
        let c0 = self.data.hz.n_rows();
        let expect = [
            ("d0a", self.d0a.n_cols(), self.a0()),
            ("gamma1 rows", self.gamma1.n_rows(), n),
            ("gamma1 columns", self.gamma1.n_cols(), self.a1()),
            ("gamma0 rows", self.gamma0.n_rows(), c0),
            ("gamma0 columns", self.gamma0.n_cols(), self.a0()),
        ];
        for (what, got, want) in expect {
            if got != want {
                return Err(SurgeryError::Shape(format!("{what}: expected {want}, got {got}")));
            }
        }
        Ok(())
    }
}

/// Entries violating the diagram conditions; empty lists certify the diagram.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramReport {
    /// `(data Z check, ancilla X check)` entries where `Γ_0∂^A_1 ≠ H_zΓ_1`.
    pub commutation: Vec<(usize, usize)>,
    /// `(ancilla Z check, ancilla X check)` entries where `∂^A_0∂^A_1 ≠ 0`.
    pub chain: Vec<(usize, usize)>,
}

impl DiagramReport {
    pub fn is_certificate(&self) -> bool {
        self.commutation.is_empty() && self.chain.is_empty()
    }
}

fn entries(m: &BitMatrix) -> Vec<(usize, usize)> {
    m.rows().iter().enumerate().flat_map(|(i, r)| r.iter().map(move |&j| (i, j))).collect()
}

pub fn verify_diagram(diag: &SurgeryDiagram) -> SurgeryResult<DiagramReport> {
    diag.check_shapes()?;
    let lhs = diag.gamma0.mul(&diag.d1a)?;
    let rhs = diag.data.hz.mul(&diag.gamma1)?;
    let chain = diag.d0a.mul(&diag.d1a)?;
    Ok(DiagramReport { commutation: entries(&lhs.add(&rhs)?), chain: entries(&chain) })
}

fn require_valid(diag: &SurgeryDiagram) -> SurgeryResult<()> {
    let report = verify_diagram(diag)?;
    if report.is_certificate() {
        Ok(())
    } else {
        Err(SurgeryError::InvalidDiagram { commutation: report.commutation.len(), chain: report.chain.len() })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasuredSpace {
    /// Independent basis of `Γ_1(ker ∂^A_1)` over the data qubits.
    pub m: BitMatrix,
    /// Independent logical classes of `m`, reduced modulo the data X stabilizers.
    pub m_logical: BitMatrix,
    /// `dim m / |A|`, zero for an empty ancilla.
    pub ier: f64,
}

pub fn measured_space(diag: &SurgeryDiagram) -> SurgeryResult<MeasuredSpace> {
    require_valid(diag)?;
    let kernel = diag.d1a.kernel_basis();
    let m = kernel.mul(&diag.gamma1.transpose())?.rowspace_basis();
    let stab = RowSpace::new(&diag.data.hx);
    let residues: Vec<Vec<usize>> = m.rows().iter().map(|r| stab.reduce(r)).collect();
    let m_logical = BitMatrix::new(residues.len(), m.n_cols(), residues)?.rowspace_basis();
    let size = diag.ancilla_size();
    let ier = if size == 0 { 0.0 } else { m.n_rows() as f64 / size as f64 };
    Ok(MeasuredSpace { m, m_logical, ier })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MergedCode {
    pub code: SubsystemCode,
    pub gauge_count: usize,
    pub measured: BitMatrix,
    pub measured_logical: BitMatrix,
    pub ier: f64,
    pub degree_profile: DegreeProfile,
    /// Number of ancilla qubits, the leading block of the merged qubit order.
    pub ancilla_qubits: usize,
}

impl MergedCode {
    pub fn n(&self) -> usize {
        self.code.n()
    }

    /// Gauged boundary `(∂^A_1 | G^X_A)` and chain map `(Γ_1 | Γ_g)`, with
    /// one extra column per gauge X operator split into its ancilla and data parts.
    pub fn gauged_maps(&self, diag: &SurgeryDiagram) -> (BitMatrix, BitMatrix) {
        let a0 = self.ancilla_qubits;
        let mut anc_cols = diag.d1a.transpose().rows().to_vec();
        let mut data_cols = diag.gamma1.transpose().rows().to_vec();
        for g in self.code.gauge_x.rows() {
            anc_cols.push(g.iter().copied().filter(|&c| c < a0).collect());
            data_cols.push(g.iter().copied().filter(|&c| c >= a0).map(|c| c - a0).collect());
        }
        let boundary = BitMatrix::from_index_rows(a0, anc_cols).transpose();
        let chain = BitMatrix::from_index_rows(diag.data.n(), data_cols).transpose();
        (boundary, chain)
    }
}

/// Merged X and Z check matrices in the fixed block order.
pub fn merged_checks(diag: &SurgeryDiagram) -> SurgeryResult<(BitMatrix, BitMatrix)> {
    diag.check_shapes()?;
    let a0 = diag.a0();
    let total = a0 + diag.data.n();
    let x_anc = BitMatrix::hstack(&[&diag.d1a.transpose(), &diag.gamma1.transpose()])?;
    let x_data = diag.data.hx.embed_columns(total, a0);
    let z_anc = diag.d0a.embed_columns(total, 0);
    let z_data = BitMatrix::hstack(&[&diag.gamma0, &diag.data.hz])?;
    Ok((BitMatrix::vstack(&[&x_anc, &x_data])?, BitMatrix::vstack(&[&z_anc, &z_data])?))
}

/// Assembles the merged code with ancilla homology as gauge.
///
/// Bare X logicals are the data logicals outside the measured classes, padded
/// with zeros on `A_0`. Gauge Z operators are the ancilla Z cycles supported on
/// `A_0` modulo merged Z stabilizers. Bare Z logicals extend the dual data
/// logicals onto `A_0` with the pivot solution of `∂^A_1ᵀ z = Γ_1ᵀ l`, and the
/// gauge X operators form the dual basis to all of these.
pub fn merge(diag: &SurgeryDiagram) -> SurgeryResult<MergedCode> {
    let ms = measured_space(diag)?;
    let (hx, hz) = merged_checks(diag)?;
    let data = &diag.data;
    let a0 = diag.a0();
    let total = a0 + data.n();
    let k = data.k();

    // data basis change putting the measured classes first
    let coeff = ms.m_logical.mul(&data.lz.transpose())?;
    let mut t_rows = coeff.rows().to_vec();
    let mut span = RowSpace::new(&coeff);
    for j in 0..k {
        if t_rows.len() == k {
            break;
        }
        if !span.contains(&[j]) {
            t_rows.push(vec![j]);
            span = RowSpace::new(&BitMatrix::from_index_rows(k, t_rows.clone()));
        }
    }
    let t = BitMatrix::from_index_rows(k, t_rows);
    let t_inv = inverse(&t).ok_or_else(|| SurgeryError::Inconsistent("measured classes are dependent".into()))?;
    let measured_count = ms.m_logical.n_rows();
    let bare_idx: Vec<usize> = (measured_count..k).collect();
    let data_x = t.mul(&data.lx)?.select_rows(&bare_idx);
    let data_z = t_inv.transpose().mul(&data.lz)?.select_rows(&bare_idx);
    let bare_lx = data_x.embed_columns(total, a0);

    let d1a_t = diag.d1a.transpose();
    let gamma1_t = diag.gamma1.transpose();
    let mut bare_z_rows = Vec::with_capacity(data_z.n_rows());
    for z in data_z.rows() {
        let rhs = gamma1_t.mul_vec(&BitVector::new(data.n(), z.clone())?)?;
        let za = d1a_t
            .solve(&rhs)?
            .ok_or_else(|| SurgeryError::Inconsistent("unmeasured Z logical has no ancilla extension".into()))?;
        let mut row = za.into_support();
        row.extend(z.iter().map(|&c| c + a0));
        bare_z_rows.push(row);
    }
    let bare_lz = BitMatrix::from_index_rows(total, bare_z_rows);

    // ancilla Z cycles on A_0, independent modulo merged Z stabilizers
    let mut gz_rows: Vec<Vec<usize>> = Vec::new();
    let mut zspan = hz.rows().to_vec();
    let mut zrs = RowSpace::new(&hz);
    for cyc in d1a_t.kernel_basis().rows() {
        if !zrs.contains(cyc) {
            gz_rows.push(cyc.clone());
            zspan.push(cyc.clone());
            zrs = RowSpace::new(&BitMatrix::from_index_rows(total, zspan.clone()));
        }
    }
    let gauge_z = BitMatrix::from_index_rows(total, gz_rows);

    let merged_k = total - hx.rank() - hz.rank();
    let bare_count = bare_lx.n_rows();
    let gauge_count = gauge_z.n_rows();
    if merged_k != bare_count + gauge_count {
        return Err(SurgeryError::Inconsistent(format!(
            "{merged_k} merged logicals but {bare_count} bare and {gauge_count} gauge"
        )));
    }
    let gauge_x = if gauge_count == 0 {
        BitMatrix::zeros(0, total)
    } else {
        let lx_all = crate::codes::CssCode::new(hx.clone(), hz.clone())?.lx;
        let z_all = BitMatrix::vstack(&[&bare_lz, &gauge_z])?;
        let pairing = z_all.mul(&lx_all.transpose())?;
        let q = inverse(&pairing.transpose())
            .ok_or_else(|| SurgeryError::Inconsistent("bare and gauge Z operators are dependent".into()))?;
        let dual = q.mul(&lx_all)?;
        dual.select_rows(&(bare_count..merged_k).collect::<Vec<_>>())
    };
    let code = SubsystemCode { stabilizer_x: hx, stabilizer_z: hz, gauge_x, gauge_z, bare_lx, bare_lz };
    code.validate()?;
    let degree_profile = code.degree_profile();
    Ok(MergedCode {
        code,
        gauge_count,
        measured: ms.m,
        measured_logical: ms.m_logical,
        ier: ms.ier,
        degree_profile,
        ancilla_qubits: a0,
    })
}

/// Outcome of a search for dressed Z logicals lighter than the data distance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZDistanceCheck {
    Pass { exhaustive: bool },
    Witness { weight: usize, support: Option<Vec<usize>> },
}

/// Searches the merged code for dressed Z logicals below `data_d_z`:
/// exhaustively up to [`EXHAUSTIVE_QUBIT_LIMIT`] qubits, by random search above.
pub fn check_z_distance_preserved(
    merged: &MergedCode,
    data_d_z: Distance,
    n_trials: usize,
    seed: u64,
) -> SurgeryResult<ZDistanceCheck> {
    let Distance::Finite(d) = data_d_z else {
        return Ok(ZDistanceCheck::Pass { exhaustive: merged.n() <= EXHAUSTIVE_QUBIT_LIMIT });
    };
    if merged.n() <= EXHAUSTIVE_QUBIT_LIMIT {
        return Ok(match exhaustive_distance(&merged.code, Side::Z)? {
            Distance::Finite(w) if w < d => ZDistanceCheck::Witness { weight: w, support: None },
            _ => ZDistanceCheck::Pass { exhaustive: true },
        });
    }
    let est = estimate_distance(&merged.code, Side::Z, d.saturating_sub(1), n_trials, seed);
    Ok(match est.witnesses.rows().first() {
        Some(w) => ZDistanceCheck::Witness { weight: w.len(), support: Some(w.clone()) },
        None => ZDistanceCheck::Pass { exhaustive: false },
    })
}

/// Soundness ratio `num / den`; `None` from [`soundness_certificate`] means
/// no vector has syndrome weight in `1..=t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Soundness {
    pub num: usize,
    pub den: usize,
}

impl Soundness {
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `min(1, ρ / degree) · d`.
    pub fn distance_bound(&self, degree: usize, d: usize) -> f64 {
        (self.value() / degree.max(1) as f64).min(1.0) * d as f64
    }
}

/// For every nonzero syndrome `s` in the image of `h`, the pair
/// `(|s|, min weight of x with h·x = s)`; the second entry is the reduced
/// distance `d(x, ker h)` of every preimage `x`.
pub fn reduced_distances(h: &BitMatrix) -> SurgeryResult<Vec<(usize, usize)>> {
    let c = h.n_cols();
    if c > SOUNDNESS_COLUMN_LIMIT {
        return Err(SurgeryError::TooLarge { cols: c, limit: SOUNDNESS_COLUMN_LIMIT });
    }
    let words = h.n_rows().div_ceil(64).max(1);
    let columns: Vec<Vec<u64>> = h
        .transpose()
        .rows()
        .iter()
        .map(|r| {
            let mut v = vec![0u64; words];
            r.iter().for_each(|&i| v[i / 64] |= 1 << (i % 64));
            v
        })
        .collect();
    // basis of the column space from a subset of columns, with each column's coordinates
    let mut basis: Vec<(usize, Vec<u64>, u32)> = Vec::new();
    let mut pivot_cols: Vec<Vec<u64>> = Vec::new();
    let mut coords = Vec::with_capacity(c);
    for col in &columns {
        let mut v = col.clone();
        let mut m = 0u32;
        for (p, bv, bm) in &basis {
            if v[p / 64] >> (p % 64) & 1 == 1 {
                v.iter_mut().zip(bv).for_each(|(a, b)| *a ^= b);
                m ^= bm;
            }
        }
        match v.iter().enumerate().find(|(_, w)| **w != 0) {
            Some((i, w)) => {
                let r = pivot_cols.len();
                let p = i * 64 + w.trailing_zeros() as usize;
                pivot_cols.push(col.clone());
                basis.push((p, v, m ^ (1 << r)));
                coords.push(1u32 << r);
            }
            None => coords.push(m),
        }
    }
    let rank = pivot_cols.len();
    let states = 1usize << rank;
    let mut dist = vec![u8::MAX; states];
    dist[0] = 0;
    let mut queue = VecDeque::from([0u32]);
    while let Some(s) = queue.pop_front() {
        let next = dist[s as usize] + 1;
        for &g in &coords {
            let t = (s ^ g) as usize;
            if dist[t] == u8::MAX {
                dist[t] = next;
                queue.push_back(t as u32);
            }
        }
    }
    // syndrome weights in Gray-code order
    let mut out = Vec::with_capacity(states.saturating_sub(1));
    let mut syn = vec![0u64; words];
    let mut mask = 0usize;
    for i in 1..states {
        let bit = i.trailing_zeros() as usize;
        syn.iter_mut().zip(&pivot_cols[bit]).for_each(|(a, b)| *a ^= b);
        mask ^= 1 << bit;
        let w: usize = syn.iter().map(|x| x.count_ones() as usize).sum();
        out.push((w, dist[mask] as usize));
    }
    Ok(out)
}

/// Linear soundness up to `t`: the minimum of `|h·x| / d(x, ker h)` over all
/// `x` with `0 < |h·x| ≤ t`, by enumeration of the cosets of `ker h`.
pub fn soundness_certificate(h: &BitMatrix, t: usize) -> SurgeryResult<Option<Soundness>> {
    let table = reduced_distances(h)?;
    Ok(table
        .into_iter()
        .filter(|&(s, _)| s <= t)
        .min_by(|a, b| (a.0 * b.1).cmp(&(b.0 * a.1)).then(a.1.cmp(&b.1)))
        .map(|(num, den)| Soundness { num, den }))
}

/// Maximum row or column weight of a map.
pub fn map_degree(m: &BitMatrix) -> usize {
    m.max_row_weight().max(m.max_column_weight())
}

/// Classical code homomorphism `γ: B' -> B` with `γ_0 ∂^{B'} = ∂^B γ_1` and
/// logical action `w` defined by `G_{B'} γ_1ᵀ = w G_B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Homomorphism {
    /// `|B_1| × |B'_1|`.
    pub gamma1: BitMatrix,
    /// `|B_0| × |B'_0|`.
    pub gamma0: BitMatrix,
    /// `k_{B'} × k_B`, against the bases used at construction.
    pub action_w: BitMatrix,
}

impl Homomorphism {
    /// Completes `γ_1` with some `γ_0`, or fails when no chain map exists.
    pub fn from_gamma1(source: &ClassicalCode, target: &ClassicalCode, gamma1: BitMatrix) -> SurgeryResult<Self> {
        if gamma1.shape() != (target.n(), source.n()) {
            return Err(SurgeryError::Shape(format!(
                "gamma1 is {:?}, expected {:?}",
                gamma1.shape(),
                (target.n(), source.n())
            )));
        }
        let image = target.h.mul(&gamma1)?;
        let src_t = source.h.transpose();
        let mut rows = Vec::with_capacity(image.n_rows());
        for r in image.rows() {
            let y = src_t
                .solve(&BitVector::new(source.n(), r.clone())?)?
                .ok_or_else(|| SurgeryError::BadHomomorphism("no gamma0 makes the square commute".into()))?;
            rows.push(y.into_support());
        }
        let gamma0 = BitMatrix::from_index_rows(source.n_checks(), rows);
        Self::with_maps(source, target, gamma1, gamma0)
    }

    /// Validates explicit maps and computes the action against canonical bases.
    pub fn with_maps(
        source: &ClassicalCode,
        target: &ClassicalCode,
        gamma1: BitMatrix,
        gamma0: BitMatrix,
    ) -> SurgeryResult<Self> {
        let mut hom = Self { gamma1, gamma0, action_w: BitMatrix::zeros(0, 0) };
        if !hom.commutes(source, target)? {
            return Err(SurgeryError::BadHomomorphism("γ_0 ∂' ≠ ∂ γ_1".into()));
        }
        hom.action_w = hom.action(&source.codewords(), &target.codewords())?;
        Ok(hom)
    }

    pub fn commutes(&self, source: &ClassicalCode, target: &ClassicalCode) -> SurgeryResult<bool> {
        if self.gamma0.shape() != (target.n_checks(), source.n_checks()) {
            return Err(SurgeryError::Shape(format!("gamma0 is {:?}", self.gamma0.shape())));
        }
        Ok(self.gamma0.mul(&source.h)? == target.h.mul(&self.gamma1)?)
    }

    /// `w` with `g_source γ_1ᵀ = w g_target` for the supplied codeword bases.
    pub fn action(&self, g_source: &BitMatrix, g_target: &BitMatrix) -> SurgeryResult<BitMatrix> {
        let images = g_source.mul(&self.gamma1.transpose())?;
        let gt_t = g_target.transpose();
        let mut rows = Vec::with_capacity(images.n_rows());
        for r in images.rows() {
            let w = gt_t
                .solve(&BitVector::new(g_target.n_cols(), r.clone())?)?
                .ok_or_else(|| SurgeryError::BadHomomorphism("image leaves the target code".into()))?;
            rows.push(w.into_support());
        }
        Ok(BitMatrix::from_index_rows(g_target.n_rows(), rows))
    }
}

/// Ways of deriving a homomorphism into a given target code.
#[derive(Clone, Debug)]
pub enum HomomorphismKind {
    /// Source drops bit `bit`; its codewords are the target codewords vanishing there.
    Puncture { bit: usize },
    /// Source gains one bit `q` with check columns `∂v`; `(c, q) ↦ c + q·v`.
    Augment { vector: BitVector },
    /// Source equals target; bit `i` maps to `permutation[i]`.
    Automorphism { permutation: Vec<usize> },
    /// Source checks `[∂ ; H_L]` with `γ_1 = I`, `γ_0 = (I 0)`.
    LogicalCheck { checks: BitMatrix },
    /// Sum of two homomorphisms between the same pair of codes.
    Superpose { a: Box<Homomorphism>, b: Box<Homomorphism> },
}

/// Builds `(source code, homomorphism)` for `kind` into `target`.
pub fn homomorphism_from(
    target: &ClassicalCode,
    kind: HomomorphismKind,
) -> SurgeryResult<(ClassicalCode, Homomorphism)> {
    let n = target.n();
    match kind {
        HomomorphismKind::Puncture { bit } => {
            if bit >= n {
                return Err(SurgeryError::Shape(format!("bit {bit} outside {n} bits")));
            }
            let keep: Vec<usize> = (0..n).filter(|&c| c != bit).collect();
            let source = ClassicalCode::new(target.h.select_columns(&keep));
            // embedding: target bit keep[j] receives source bit j
            let gamma1 = BitMatrix::from_index_rows(
                n - 1,
                (0..n).map(|c| if c == bit { vec![] } else { vec![c - usize::from(c > bit)] }),
            );
            let gamma0 = BitMatrix::identity(target.n_checks());
            let hom = Homomorphism::with_maps(&source, target, gamma1, gamma0)?;
            Ok((source, hom))
        }
        HomomorphismKind::Augment { vector } => {
            if vector.len() != n {
                return Err(SurgeryError::Shape(format!("vector of length {} for {n} bits", vector.len())));
            }
            let col = target.h.mul_vec(&vector)?;
            let extra = BitMatrix::from_index_rows(
                1,
                (0..target.n_checks()).map(|i| if col.get(i) { vec![0] } else { vec![] }),
            );
            let source = ClassicalCode::new(BitMatrix::hstack(&[&target.h, &extra])?);
            let rows: Vec<Vec<usize>> = (0..n).map(|c| if vector.get(c) { vec![c, n] } else { vec![c] }).collect();
            let gamma1 = BitMatrix::from_index_rows(n + 1, rows);
            let gamma0 = BitMatrix::identity(target.n_checks());
            let hom = Homomorphism::with_maps(&source, target, gamma1, gamma0)?;
            Ok((source, hom))
        }
        HomomorphismKind::Automorphism { permutation } => {
            let mut seen = vec![false; n];
            if permutation.len() != n || !permutation.iter().all(|&p| p < n && !std::mem::replace(&mut seen[p], true)) {
                return Err(SurgeryError::BadHomomorphism("not a permutation of the bits".into()));
            }
            let mut rows = vec![Vec::new(); n];
            for (i, &p) in permutation.iter().enumerate() {
                rows[p].push(i);
            }
            let gamma1 = BitMatrix::from_index_rows(n, rows);
            let hom = Homomorphism::from_gamma1(target, target, gamma1)?;
            Ok((target.clone(), hom))
        }
        HomomorphismKind::LogicalCheck { checks } => {
            if checks.n_cols() != n {
                return Err(SurgeryError::Shape(format!(
                    "logical checks act on {} bits, code has {n}",
                    checks.n_cols()
                )));
            }
            let source = ClassicalCode::new(BitMatrix::vstack(&[&target.h, &checks])?);
            let gamma1 = BitMatrix::identity(n);
            let gamma0 = BitMatrix::identity(target.n_checks()).embed_columns(source.n_checks(), 0);
            let hom = Homomorphism::with_maps(&source, target, gamma1, gamma0)?;
            Ok((source, hom))
        }
        HomomorphismKind::Superpose { a, b } => {
            if target.n_checks() != a.gamma0.n_rows() || a.gamma1.n_cols() != b.gamma1.n_cols() {
                return Err(SurgeryError::Shape("superposed maps have different shapes".into()));
            }
            if a.gamma1.n_cols() != n {
                return Err(SurgeryError::BadHomomorphism("superposition needs source equal to target".into()));
            }
            let gamma1 = a.gamma1.add(&b.gamma1)?;
            let gamma0 = a.gamma0.add(&b.gamma0)?;
            let hom = Homomorphism::with_maps(target, target, gamma1, gamma0)?;
            Ok((target.clone(), hom))
        }
    }
}

/// Transversal ancilla on a set of data qubits: one ancilla X check per
/// qubit, one ancilla qubit per adjacent data Z check, `∂^A_1` the restriction
/// of `H_z`, and `Γ_1`, `Γ_0` the coordinate projections.
pub fn transversal_ancilla(data: &CssCode, support: &[usize]) -> SurgeryDiagram {
    let mut support = support.to_vec();
    support.sort_unstable();
    support.dedup();
    let in_support = {
        let mut v = vec![false; data.n()];
        support.iter().for_each(|&q| v[q] = true);
        v
    };
    let adjacent: Vec<usize> =
        (0..data.hz.n_rows()).filter(|&r| data.hz.row(r).iter().any(|&q| in_support[q])).collect();
    let d1a = data.hz.select_rows(&adjacent).select_columns(&support);
    SurgeryDiagram {
        d0a: BitMatrix::zeros(0, adjacent.len()),
        gamma1: projection(data.n(), &support),
        gamma0: projection(data.hz.n_rows(), &adjacent),
        d1a,
        data: data.clone(),
    }
}

/// `len × idx.len()` matrix sending coordinate `j` to `idx[j]`.
pub fn projection(len: usize, idx: &[usize]) -> BitMatrix {
    BitMatrix::from_index_rows(len, idx.iter().map(|&i| [i])).transpose()
}

fn information_set(h: &BitMatrix) -> Vec<usize> {
    let mut pivot = vec![false; h.n_cols()];
    h.echelon().pivots.iter().for_each(|&p| pivot[p] = true);
    (0..h.n_cols()).filter(|&c| !pivot[c]).collect()
}

/// Ancilla `tensor(B', D)` for the data code `hgp(B, F)`, one homomorphism
/// `B' -> B` per column: `Γ_{0,1} = Σ_j γ^j_{0,1} ⊗ e_{f_j} e_{d_j}ᵀ` where
/// `d_j` and `f_j` are the `j`-th information bits of `D` and `Fᵀ`.
pub fn hgp_ancilla_for_hgp_data(
    b: &ClassicalCode,
    f: &ClassicalCode,
    source: &ClassicalCode,
    homs: &[Homomorphism],
    d_code: &ClassicalCode,
) -> SurgeryResult<SurgeryDiagram> {
    let info_d = information_set(&d_code.h);
    let info_ft = information_set(&f.h.transpose());
    if homs.len() > info_d.len() {
        return Err(SurgeryError::TooManyHomomorphisms { given: homs.len(), limit: info_d.len() });
    }
    if homs.len() > info_ft.len() {
        return Err(SurgeryError::TooManyHomomorphisms { given: homs.len(), limit: info_ft.len() });
    }
    for hom in homs {
        if !hom.commutes(source, b)? {
            return Err(SurgeryError::BadHomomorphism("column map does not commute".into()));
        }
    }
    let data = product_complex(b, f);
    let anc = product_complex(source, d_code);
    let (n_f0, n_d1) = (f.n_checks(), d_code.n());
    let mut g1: Vec<Vec<usize>> = vec![Vec::new(); data.code.n()];
    let mut g0: Vec<Vec<usize>> = vec![Vec::new(); data.code.hz.n_rows()];
    for (j, hom) in homs.iter().enumerate() {
        let (dj, fj) = (info_d[j], info_ft[j]);
        for (b1, row) in hom.gamma1.rows().iter().enumerate() {
            for &s1 in row {
                g1[data.qubit_left(b1, fj)].push(s1 * n_d1 + dj);
            }
        }
        for (b0, row) in hom.gamma0.rows().iter().enumerate() {
            for &s0 in row {
                g0[b0 * n_f0 + fj].push(anc.qubit_right(s0, dj));
            }
        }
    }
    let a1 = anc.code.hx.n_rows();
    let a0 = anc.code.n();
    for r in g1.iter_mut().chain(g0.iter_mut()) {
        r.sort_unstable();
    }
    let diag = SurgeryDiagram {
        d1a: anc.code.hx.transpose(),
        d0a: anc.code.hz.clone(),
        gamma1: BitMatrix::new(data.code.n(), a1, g1)?,
        gamma0: BitMatrix::new(data.code.hz.n_rows(), a0, g0)?,
        data: data.code,
    };
    Ok(diag)
}

/// Data X operators the HGP ancilla is expected to measure: the rows of
/// `w_j G_B` placed in column `f_j` of the `B_1 ⊗ F_0` block.
pub fn hgp_predicted_targets(b: &ClassicalCode, f: &ClassicalCode, homs: &[Homomorphism]) -> SurgeryResult<BitMatrix> {
    let info_ft = information_set(&f.h.transpose());
    let g_b = b.codewords();
    let data = product_complex(b, f);
    let mut rows = Vec::new();
    for (j, hom) in homs.iter().enumerate() {
        let fj = info_ft[j];
        for r in hom.action_w.mul(&g_b)?.rows() {
            rows.push(r.iter().map(|&b1| data.qubit_left(b1, fj)).collect::<Vec<_>>());
        }
    }
    Ok(BitMatrix::from_index_rows(data.code.n(), rows))
}

/// Merge/split metadata; no dynamics are simulated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurgerySchedule {
    pub init_basis: Side,
    pub rounds: usize,
    pub final_measure_basis: Side,
    pub pauli_frame_note: String,
}

impl SurgerySchedule {
    /// Ancilla qubits start in `|0>`, `rounds` merged syndrome rounds run, and
    /// ancilla qubits are read out in Z.
    pub fn new(rounds: usize) -> SurgeryResult<Self> {
        if rounds == 0 {
            return Err(SurgeryError::Shape("a schedule needs at least one round".into()));
        }
        Ok(Self {
            init_basis: Side::Z,
            rounds,
            final_measure_basis: Side::Z,
            pauli_frame_note: "logical outcomes are products of ancilla X-check outcomes over ker ∂A1; \
                               Z readout of ancilla qubits fixes the frame of data Z logicals"
                .into(),
        })
    }
}

/// Random valid diagram for property tests: `checks` ancilla X checks with a
/// random `Γ_1`, ancilla qubits copying every data Z check plus `extra`
/// random ones, and `∂^A_0` a random set of left-kernel combinations.
pub fn random_diagram<R: rand::Rng + ?Sized>(
    data: &CssCode,
    checks: usize,
    extra: usize,
    rng: &mut R,
) -> SurgeryDiagram {
    let n = data.n();
    let c0 = data.hz.n_rows();
    let density = (2.0 / n.max(1) as f64).min(1.0);
    let gamma1 = BitMatrix::random(n, checks, density, rng);
    let top = data.hz.mul(&gamma1).expect("shapes agree");
    let bottom = BitMatrix::random(extra, checks, 0.3, rng);
    let d1a = BitMatrix::vstack(&[&top, &bottom]).expect("same column count");
    let a0 = c0 + extra;
    let left = d1a.transpose().kernel_basis();
    let combos = BitMatrix::random(left.n_rows().min(3), left.n_rows(), 0.5, rng);
    let d0a = combos.mul(&left).expect("shapes agree");
    SurgeryDiagram { gamma0: BitMatrix::identity(c0).embed_columns(a0, 0), d1a, d0a, gamma1, data: data.clone() }
}
