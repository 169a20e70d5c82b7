//! Code families: classical seeds, hypergraph and tensor products,
//! spatially coupled hypergraph products and bivariate bicycle codes.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codes::{estimate_css_distance, CodeError, CssCode, DegreeProfile, Side};
use crate::f2core::BitMatrix;

/// Classical code given by its check matrix `h: C_1 -> C_0` (checks × bits).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassicalCode {
    pub h: BitMatrix,
}

impl ClassicalCode {
    pub fn new(h: BitMatrix) -> Self {
        Self { h }
    }

    pub fn n(&self) -> usize {
        self.h.n_cols()
    }

    pub fn n_checks(&self) -> usize {
        self.h.n_rows()
    }

    pub fn k(&self) -> usize {
        self.n() - self.h.rank()
    }

    /// The code whose check matrix is `hᵀ`.
    #[must_use]
    pub fn transpose(&self) -> ClassicalCode {
        ClassicalCode { h: self.h.transpose() }
    }

    pub fn codewords(&self) -> BitMatrix {
        self.h.kernel_basis()
    }
}

/// Repetition code on `n` bits as a path of `n - 1` checks.
pub fn repetition(n: usize) -> ClassicalCode {
    assert!(n >= 1);
    ClassicalCode::new(BitMatrix::from_index_rows(n, (0..n - 1).map(|i| [i, i + 1])))
}

/// Cyclic repetition code: `n` checks closing the path into a ring.
pub fn cyclic_repetition(n: usize) -> ClassicalCode {
    assert!(n >= 3);
    ClassicalCode::new(BitMatrix::from_index_rows(n, (0..n).map(|i| [i, (i + 1) % n])))
}

/// Hamming code with `r` checks; column `j` is the binary expansion of `j + 1`.
pub fn hamming(r: usize) -> ClassicalCode {
    assert!((2..=16).contains(&r));
    let n = (1usize << r) - 1;
    ClassicalCode::new(BitMatrix::from_index_rows(n, (0..r).map(|b| (0..n).filter(move |j| (j + 1) >> b & 1 == 1))))
}

/// Configuration-model LDPC code; parallel edges cancel in pairs.
///
/// # Panics
/// Unless `row_w` divides `n * col_w`.
pub fn random_regular(n: usize, row_w: usize, col_w: usize, seed: u64) -> ClassicalCode {
    assert!(row_w > 0 && (n * col_w).is_multiple_of(row_w), "row weight must divide n * col_w");
    let m = n * col_w / row_w;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sockets: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, col_w)).collect();
    sockets.shuffle(&mut rng);
    ClassicalCode::new(BitMatrix::from_index_rows(n, sockets.chunks(row_w).map(|c| c.to_vec()).take(m)))
}

/// Named classical codes: `rep<n>`, `cyc<n>`, `hamming<r>`, and a trailing `T` for the transpose.
pub fn classical_library(name: &str) -> Option<ClassicalCode> {
    if let Some(base) = name.strip_suffix('T') {
        return classical_library(base).map(|c| c.transpose());
    }
    let num = |p: &str| name.strip_prefix(p).and_then(|s| s.parse::<usize>().ok());
    if let Some(n) = num("rep") {
        return (n >= 1).then(|| repetition(n));
    }
    if let Some(n) = num("cyc") {
        return (n >= 3).then(|| cyclic_repetition(n));
    }
    if let Some(r) = num("hamming") {
        return (2..=16).contains(&r).then(|| hamming(r));
    }
    None
}

/// Hypergraph product with its block layout.
///
/// Qubits are `B1⊗D0 ⊕ B0⊗D1`, X checks `B1⊗D1`, Z checks `B0⊗D0`; a pair
/// `(u, v)` of `U⊗V` sits at index `u·|V| + v` inside its block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductComplex {
    pub code: CssCode,
    pub n_b1: usize,
    pub n_b0: usize,
    pub n_d1: usize,
    pub n_d0: usize,
}

impl ProductComplex {
    pub fn qubit_left(&self, b1: usize, d0: usize) -> usize {
        b1 * self.n_d0 + d0
    }

    pub fn qubit_right(&self, b0: usize, d1: usize) -> usize {
        self.n_b1 * self.n_d0 + b0 * self.n_d1 + d1
    }

    pub fn left_block_len(&self) -> usize {
        self.n_b1 * self.n_d0
    }
}

fn product_boundaries(b: &BitMatrix, d: &BitMatrix) -> (BitMatrix, BitMatrix) {
    let (n_b0, n_b1) = b.shape();
    let (n_d0, n_d1) = d.shape();
    // ∂2 = [I⊗∂D ; ∂B⊗I] : B1⊗D1 -> B1⊗D0 ⊕ B0⊗D1
    let top = BitMatrix::identity(n_b1).kron(d);
    let bottom = b.kron(&BitMatrix::identity(n_d1));
    let d2 = BitMatrix::vstack(&[&top, &bottom]).expect("matching column counts");
    // ∂1 = [∂B⊗I | I⊗∂D] : B1⊗D0 ⊕ B0⊗D1 -> B0⊗D0
    let left = b.kron(&BitMatrix::identity(n_d0));
    let right = BitMatrix::identity(n_b0).kron(d);
    let d1 = BitMatrix::hstack(&[&left, &right]).expect("matching row counts");
    (d2, d1)
}

pub fn product_complex(b: &ClassicalCode, d: &ClassicalCode) -> ProductComplex {
    let (d2, d1) = product_boundaries(&b.h, &d.h);
    let code = CssCode::new(d2.transpose(), d1).expect("product boundaries compose to zero");
    ProductComplex { code, n_b1: b.n(), n_b0: b.n_checks(), n_d1: d.n(), n_d0: d.n_checks() }
}

/// Hypergraph product; `n = n_B1 n_D0 + n_B0 n_D1`, `k = k_Bᵀ k_D + k_B k_Dᵀ`.
pub fn hgp(b: &ClassicalCode, d: &ClassicalCode) -> CssCode {
    product_complex(b, d).code
}

/// Tensor-product code on `B1⊗D1` with check `[I⊗∂D ; ∂B⊗I]`; kernel `ker ∂B ⊗ ker ∂D`.
pub fn tensor_code(b: &ClassicalCode, d: &ClassicalCode) -> ClassicalCode {
    ClassicalCode::new(product_boundaries(&b.h, &d.h).0)
}

/// Spatially coupled hypergraph product: an `L × L` array of base products of
/// `H_C` with its transpose, coupled through tail-biting edge spreading.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScHgpSpec {
    pub r_c: usize,
    pub n_c: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub coupling_seed: u64,
    /// Base check as row supports (`r_c` rows over `n_c` bits).
    pub base_check: Vec<Vec<usize>>,
}

impl ScHgpSpec {
    pub fn n0(&self) -> usize {
        self.r_c * self.r_c + self.n_c * self.n_c
    }

    pub fn target_n(&self) -> usize {
        self.n0() * self.l * self.l
    }

    /// `(n0 - 2 r_c n_c) L²`.
    pub fn k_lower_bound(&self) -> usize {
        let d = self.n_c.abs_diff(self.r_c);
        d * d * self.l * self.l
    }

    pub fn base(&self) -> Result<ClassicalCode, CodeError> {
        Ok(ClassicalCode::new(BitMatrix::new(self.r_c, self.n_c, self.base_check.clone())?))
    }
}

/// Tail-biting coupled chain of length `l`: each base entry lands in block
/// `(j, j)` or `(j + 1 mod l, j)` according to `spread`.
fn coupled_chain(base: &BitMatrix, spread: &[Vec<bool>], l: usize) -> BitMatrix {
    let (r, n) = base.shape();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); r * l];
    for j in 0..l {
        for (i, row) in base.rows().iter().enumerate() {
            for (e, &c) in row.iter().enumerate() {
                let block_row = if spread[i][e] { (j + 1) % l } else { j };
                rows[block_row * r + i].push(j * n + c);
            }
        }
    }
    BitMatrix::from_index_rows(n * l, rows)
}

fn spreading(base: &BitMatrix, rng: &mut ChaCha8Rng) -> Vec<Vec<bool>> {
    base.rows().iter().map(|r| r.iter().map(|_| rng.gen_bool(0.5)).collect()).collect()
}

/// The two coupled classical factors `(B, D)` with `D` already transposed.
pub fn sc_factors(spec: &ScHgpSpec) -> Result<(ClassicalCode, ClassicalCode), CodeError> {
    let base = spec.base()?.h;
    let mut rng_b = ChaCha8Rng::seed_from_u64(spec.coupling_seed);
    rng_b.set_stream(1);
    let mut rng_d = ChaCha8Rng::seed_from_u64(spec.coupling_seed);
    rng_d.set_stream(2);
    let sb = spreading(&base, &mut rng_b);
    let sd = spreading(&base, &mut rng_d);
    let b = ClassicalCode::new(coupled_chain(&base, &sb, spec.l));
    let d = ClassicalCode::new(coupled_chain(&base, &sd, spec.l)).transpose();
    Ok((b, d))
}

pub fn sc_hgp(spec: &ScHgpSpec) -> Result<CssCode, CodeError> {
    let (b, d) = sc_factors(spec)?;
    Ok(hgp(&b, &d))
}

/// Random base check: every row has weight `row_w`, every column is covered.
pub fn random_base_check(r_c: usize, n_c: usize, row_w: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    assert!(row_w >= 1 && row_w <= n_c && r_c * row_w >= n_c, "base check cannot cover every column");
    loop {
        let rows: Vec<Vec<usize>> = (0..r_c)
            .map(|_| {
                let mut cols: Vec<usize> = (0..n_c).collect();
                cols.shuffle(rng);
                let mut r = cols[..row_w].to_vec();
                r.sort_unstable();
                r
            })
            .collect();
        let mut covered = vec![false; n_c];
        rows.iter().flatten().for_each(|&c| covered[c] = true);
        if covered.into_iter().all(|c| c) {
            return rows;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScSearchResult {
    pub spec: ScHgpSpec,
    pub n: usize,
    pub k: usize,
    pub d_x_upper: String,
    pub d_z_upper: String,
    pub degree_profile: DegreeProfile,
}

/// Seed search maximizing `k` under a `(qubit degree, check weight)` cap;
/// ties go to the larger estimated distance, then the smaller seed.
pub fn sc_seed_search(
    r_c: usize,
    n_c: usize,
    l: usize,
    cap: (usize, usize),
    seeds: std::ops::Range<u64>,
    probe_trials: usize,
) -> Option<ScSearchResult> {
    // identical factors give qubit degree 2·max(row weight, column weight)
    let row_w = (cap.0 / 2).min(n_c);
    if row_w == 0 || r_c * row_w < n_c {
        return None;
    }
    let candidates: Vec<ScSearchResult> = seeds
        .into_par_iter()
        .filter_map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base_check = random_base_check(r_c, n_c, row_w, &mut rng);
            let spec = ScHgpSpec { r_c, n_c, l, coupling_seed: seed, base_check };
            let code = sc_hgp(&spec).ok()?;
            let p = code.degree_profile();
            if p.max_qubit_degree > cap.0 || p.max_check_weight_x.max(p.max_check_weight_z) > cap.1 {
                return None;
            }
            let dx = estimate_css_distance(&code, Side::X, 0, probe_trials, seed).d_upper;
            let dz = estimate_css_distance(&code, Side::Z, 0, probe_trials, seed).d_upper;
            Some(ScSearchResult {
                n: code.n(),
                k: code.k(),
                d_x_upper: dx.to_string(),
                d_z_upper: dz.to_string(),
                degree_profile: p,
                spec,
            })
        })
        .collect();
    let dmin = |r: &ScSearchResult| {
        let p = |s: &str| s.parse::<usize>().unwrap_or(usize::MAX);
        p(&r.d_x_upper).min(p(&r.d_z_upper))
    };
    candidates
        .into_iter()
        .max_by(|a, b| (a.k, dmin(a)).cmp(&(b.k, dmin(b))).then(b.spec.coupling_seed.cmp(&a.spec.coupling_seed)))
}

/// Monomial `x^a y^b` as an `(x power, y power)` pair.
pub type Monomial = (usize, usize);

/// Bivariate bicycle generator polynomials over `Z_l × Z_m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BivariateBicycleConfig {
    pub name: String,
    pub l: usize,
    pub m: usize,
    pub poly_a: Vec<Monomial>,
    pub poly_b: Vec<Monomial>,
}

fn bb_polynomial(l: usize, m: usize, poly: &[Monomial]) -> BitMatrix {
    let n = l * m;
    // x^a y^b sends basis index (i, j) to ((i + a) mod l, (j + b) mod m)
    BitMatrix::from_index_rows(
        n,
        (0..n).map(|row| {
            let (i, j) = (row / m, row % m);
            poly.iter().map(move |&(a, b)| ((i + a) % l) * m + (j + b) % m).collect::<Vec<_>>()
        }),
    )
}

/// `hx = [A | B]`, `hz = [Bᵀ | Aᵀ]` for `A`, `B` sums of commuting circulant monomials.
pub fn bivariate_bicycle(l: usize, m: usize, poly_a: &[Monomial], poly_b: &[Monomial]) -> CssCode {
    let a = bb_polynomial(l, m, poly_a);
    let b = bb_polynomial(l, m, poly_b);
    let hx = BitMatrix::hstack(&[&a, &b]).expect("square blocks");
    let hz = BitMatrix::hstack(&[&b.transpose(), &a.transpose()]).expect("square blocks");
    CssCode::new(hx, hz).expect("circulant blocks commute")
}

pub fn bivariate_bicycle_from(cfg: &BivariateBicycleConfig) -> CssCode {
    bivariate_bicycle(cfg.l, cfg.m, &cfg.poly_a, &cfg.poly_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{exhaustive_css_distance, Distance};
    use proptest::prelude::*;

    fn k_of(c: &ClassicalCode) -> usize {
        c.k()
    }

    #[test]
    fn library() {
        let r = repetition(5);
        assert_eq!((r.n(), r.k()), (5, 1));
        let h = hamming(3);
        assert_eq!((h.n(), h.k()), (7, 4));
        let g = random_regular(12, 4, 3, 9);
        assert_eq!(g.n(), 12);
        assert_eq!(g.k(), 12 - g.h.rank());
        assert_eq!(classical_library("hamming3T").unwrap().h, hamming(3).h.transpose());
        assert!(classical_library("nope").is_none());
    }

    #[test]
    fn hgp_hamming_pair() {
        let h = hamming(3);
        let code = hgp(&h, &h.transpose());
        assert_eq!((code.n(), code.k()), (58, 16));
        code.validate().unwrap();
        let est = estimate_css_distance(&code, Side::X, 3, 200, 4);
        assert_eq!(est.d_upper, Distance::Finite(3));
        let cb = code.canonical_basis();
        assert_eq!(cb.lx.mul(&cb.lz.transpose()).unwrap(), BitMatrix::identity(16));
    }

    #[test]
    fn hgp_small_cases() {
        let r2 = repetition(2);
        let code = hgp(&r2, &r2.transpose());
        assert_eq!((code.n(), code.k()), (5, 1));
        assert_eq!(exhaustive_css_distance(&code, Side::X).unwrap(), Distance::Finite(2));
        let full = ClassicalCode::new(BitMatrix::identity(3));
        assert_eq!(hgp(&full, &full).k(), 0);
    }

    #[test]
    fn tensor_kernels() {
        let r3 = repetition(3);
        assert_eq!(tensor_code(&r3, &r3).k(), 1);
        let full = ClassicalCode::new(BitMatrix::identity(4));
        assert_eq!(tensor_code(&r3, &full).k(), 0);
        let h = hamming(3);
        assert_eq!(tensor_code(&h, &h).k(), 16);
    }

    fn band_spec(r_c: usize, n_c: usize, l: usize, seed: u64) -> ScHgpSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ScHgpSpec { r_c, n_c, l, coupling_seed: seed, base_check: random_base_check(r_c, n_c, 3, &mut rng) }
    }

    #[test]
    fn sc_hgp_sizes() {
        let spec = band_spec(3, 6, 5, 1);
        let code = sc_hgp(&spec).unwrap();
        assert_eq!(code.n(), 1125);
        assert!(code.k() >= 225);
        let spec = band_spec(3, 5, 2, 2);
        let code = sc_hgp(&spec).unwrap();
        assert_eq!(code.n(), 136);
        assert!(code.k() >= 16);
    }

    #[test]
    fn sc_hgp_single_block_is_base() {
        let spec = band_spec(3, 6, 1, 3);
        let base = spec.base().unwrap();
        assert_eq!(sc_hgp(&spec).unwrap(), hgp(&base, &base.transpose()));
    }

    #[test]
    fn gross_code() {
        let cfg = BivariateBicycleConfig {
            name: "gross".into(),
            l: 12,
            m: 6,
            poly_a: vec![(3, 0), (0, 1), (0, 2)],
            poly_b: vec![(0, 3), (1, 0), (2, 0)],
        };
        let code = bivariate_bicycle_from(&cfg);
        assert_eq!((code.n(), code.k()), (144, 12));
        let p = code.degree_profile();
        assert_eq!((p.max_qubit_degree, p.max_check_weight_x, p.max_check_weight_z), (6, 6, 6));
    }

    #[test]
    fn trivial_bicycle() {
        let code = bivariate_bicycle(3, 2, &[(0, 0)], &[(0, 0)]);
        assert_eq!(code.hx, BitMatrix::hstack(&[&BitMatrix::identity(6), &BitMatrix::identity(6)]).unwrap());
        assert_eq!(code.k(), 12 - 2 * code.hx.rank());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn kunneth(rb in 1usize..4, nb in 1usize..6, rd in 1usize..4, nd in 1usize..6, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = ClassicalCode::new(BitMatrix::random(rb, nb, 0.5, &mut rng));
            let d = ClassicalCode::new(BitMatrix::random(rd, nd, 0.5, &mut rng));
            let pc = product_complex(&b, &d);
            prop_assert_eq!(pc.code.n(), nb * rd + rb * nd);
            let k = k_of(&b.transpose()) * k_of(&d) + k_of(&b) * k_of(&d.transpose());
            prop_assert_eq!(pc.code.k(), k);
            prop_assert!(pc.code.hz.mul(&pc.code.hx.transpose()).unwrap().is_zero());
            prop_assert_eq!(tensor_code(&b, &d).k(), b.k() * d.k());
        }

        #[test]
        fn bicycle_commutes(l in 2usize..6, m in 2usize..6, a in proptest::collection::vec((0usize..6, 0usize..6), 1..4), b in proptest::collection::vec((0usize..6, 0usize..6), 1..4)) {
            let code = bivariate_bicycle(l, m, &a, &b);
            prop_assert!(code.hx.mul(&code.hz.transpose()).unwrap().is_zero());
        }
    }
}
