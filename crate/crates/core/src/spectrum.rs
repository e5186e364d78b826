//! Frequency spectrum and its symmetric-polynomial combinatorics.
//!
//! Everything downstream is expressed through the squared frequencies
//! `ω_k²`: the elementary symmetric polynomials `σ_k` (coefficients of the
//! equation of motion), their reduced versions `σ_{m,k}` with one frequency
//! removed, the residue factors `ρ_k`, and the complete homogeneous
//! polynomials `P_{2k}` that appear in the Poisson structure.

use std::ops::RangeInclusive;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::precise::{dd, round, Dd};
use crate::tolerance::{term_scale, ResidualTracker};

/// Smallest admissible gap `|ω_j² − ω_i²|` between distinct modes.
pub const MIN_SQUARED_GAP: f64 = 1e-6;

/// The `n` distinct positive frequencies `ω_0 < … < ω_{n−1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencySpectrum {
    omegas: Vec<f64>,
    #[serde(skip)]
    squares: Vec<f64>,
    #[serde(skip)]
    sigma: Vec<f64>,
    #[serde(skip)]
    reduced: Vec<Vec<f64>>,
    #[serde(skip)]
    rho: Vec<f64>,
    #[serde(skip)]
    precise: PreciseSpectrum,
    reordered: bool,
}

impl FrequencySpectrum {
    /// Validates and sorts the frequencies. Unsorted input is accepted and
    /// flagged through [`FrequencySpectrum::was_reordered`].
    pub fn new(omegas: impl Into<Vec<f64>>) -> Result<Self> {
        let mut omegas: Vec<f64> = omegas.into();
        if omegas.is_empty() {
            return Err(Error::InvalidSpectrum("at least one frequency required".into()));
        }
        if let Some(w) = omegas.iter().find(|w| !w.is_finite() || **w <= 0.0) {
            return Err(Error::InvalidSpectrum(format!(
                "frequencies must be finite and strictly positive, got {w}"
            )));
        }
        let reordered = omegas.windows(2).any(|p| p[0] > p[1]);
        omegas.sort_by(|a, b| a.partial_cmp(b).expect("finite"));

        let squares: Vec<f64> = omegas.iter().map(|w| w * w).collect();
        for i in 0..squares.len() {
            for j in (i + 1)..squares.len() {
                let gap = (squares[j] - squares[i]).abs();
                if gap < MIN_SQUARED_GAP {
                    return Err(Error::InvalidSpectrum(format!(
                        "squared frequencies {} and {} are closer than {MIN_SQUARED_GAP}",
                        squares[i], squares[j]
                    )));
                }
            }
        }

        let precise = PreciseSpectrum::new(&omegas);
        let round_all = |v: &[Dd]| v.iter().copied().map(round).collect::<Vec<f64>>();
        Ok(Self {
            sigma: round_all(&precise.sigma),
            reduced: precise.reduced.iter().map(|r| round_all(r)).collect(),
            rho: round_all(&precise.rho),
            omegas,
            squares,
            precise,
            reordered,
        })
    }

    pub fn n(&self) -> usize {
        self.omegas.len()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn squares(&self) -> &[f64] {
        &self.squares
    }

    /// True when the input was not already ascending.
    pub fn was_reordered(&self) -> bool {
        self.reordered
    }

    /// Highest derivative order carried as an independent coordinate (`2n`).
    pub fn top_order(&self) -> usize {
        2 * self.n()
    }

    /// Dimension of the jet vector (`4n + 2`).
    pub fn jet_dim(&self) -> usize {
        4 * self.n() + 2
    }

    /// `ω_0 ω_1 … ω_{n−1}`.
    pub fn omega_product(&self) -> f64 {
        self.omegas.iter().product()
    }

    /// `σ_k^n`: elementary symmetric polynomial of degree `n − k` in the
    /// squared frequencies, i.e. the coefficient of `X^k` in `∏(X + ω_j²)`.
    pub fn elementary_sigma(&self, k: usize) -> Result<f64> {
        self.sigma.get(k).copied().ok_or(Error::Range {
            what: "elementary sigma degree",
            index: k as i64,
            max: self.n() as i64,
        })
    }

    /// All `σ_k^n` for `k = 0..=n`.
    pub fn sigmas(&self) -> &[f64] {
        &self.sigma
    }

    /// `σ_{m,k}^n`: as `σ_m` but with `ω_k²` left out of the product.
    pub fn reduced_sigma(&self, m: usize, k: usize) -> Result<f64> {
        let n = self.n();
        if k >= n {
            return Err(Error::Range {
                what: "omitted mode",
                index: k as i64,
                max: n as i64 - 1,
            });
        }
        self.reduced[k].get(m).copied().ok_or(Error::Range {
            what: "reduced sigma degree",
            index: m as i64,
            max: n as i64 - 1,
        })
    }

    /// `ρ_k = (−1)^k / ∏_{m≠k}(ω_m² − ω_k²)`; exactly 1 for a single mode.
    pub fn rho(&self, k: usize) -> Result<f64> {
        self.rho.get(k).copied().ok_or(Error::Range {
            what: "residue factor",
            index: k as i64,
            max: self.n() as i64 - 1,
        })
    }

    pub fn rhos(&self) -> &[f64] {
        &self.rho
    }

    /// `P_{2k}(ω_0², …, ω_{n−1}²)`; zero for negative `k`.
    pub fn complete_homog(&self, k: i64) -> f64 {
        complete_homogeneous(&self.squares, k)
    }

    /// Frequency raised to an integer power, used by the `ω_k^{s+m−2}`
    /// weights of the alternative structure.
    pub(crate) fn omega_pow(&self, k: usize, exp: i64) -> f64 {
        self.omegas[k].powi(exp as i32)
    }

    pub(crate) fn precise(&self) -> &PreciseSpectrum {
        &self.precise
    }
}

/// Double-double versions of the derived quantities; the public `f64`
/// values are these rounded once.
#[derive(Debug, Clone, PartialEq, Default)]
pub(crate) struct PreciseSpectrum {
    pub omegas: Vec<Dd>,
    pub squares: Vec<Dd>,
    pub sigma: Vec<Dd>,
    pub reduced: Vec<Vec<Dd>>,
    pub rho: Vec<Dd>,
}

impl PreciseSpectrum {
    fn new(omegas: &[f64]) -> Self {
        let n = omegas.len();
        let squares: Vec<Dd> = omegas.iter().map(|&w| Dd::new_mul(w, w)).collect();
        let sigma = shifted_product_dd(&squares);
        let reduced = (0..n)
            .map(|k| {
                let others: Vec<Dd> = (0..n).filter(|&j| j != k).map(|j| squares[j]).collect();
                shifted_product_dd(&others)
            })
            .collect();
        let rho = (0..n)
            .map(|k| {
                let denom = (0..n)
                    .filter(|&m| m != k)
                    .fold(dd(1.0), |acc, m| acc * (squares[m] - squares[k]));
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                dd(sign) / denom
            })
            .collect();
        Self {
            omegas: omegas.iter().copied().map(dd).collect(),
            squares,
            sigma,
            reduced,
            rho,
        }
    }

    /// `ω_k^exp`.
    pub fn omega_pow(&self, k: usize, exp: i64) -> Dd {
        self.omegas[k].powi(exp as i32)
    }
}

fn shifted_product_dd(values: &[Dd]) -> Vec<Dd> {
    let mut coeffs = vec![dd(1.0)];
    for &a in values {
        let mut next = vec![dd(0.0); coeffs.len() + 1];
        for (d, &c) in coeffs.iter().enumerate() {
            next[d] += a * c;
            next[d + 1] += c;
        }
        coeffs = next;
    }
    coeffs
}

/// Coefficients `c_d` of `∏_j (X + a_j) = Σ_d c_d X^d`, lowest degree first.
pub fn shifted_product_coefficients(values: &[f64]) -> Vec<f64> {
    let mut coeffs = vec![1.0];
    for &a in values {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (d, &c) in coeffs.iter().enumerate() {
            next[d] += a * c;
            next[d + 1] += c;
        }
        coeffs = next;
    }
    coeffs
}

/// Complete homogeneous symmetric polynomial of degree `k` in `values`,
/// accumulated one variable at a time: `h_k(x_1..x_j) = h_k(x_1..x_{j−1}) + x_j h_{k−1}(x_1..x_j)`.
pub fn complete_homogeneous(values: &[f64], k: i64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let k = k as usize;
    let mut h = vec![0.0; k + 1];
    h[0] = 1.0;
    if values.is_empty() {
        return h[k];
    }
    for &x in values {
        for d in 1..=k {
            h[d] += x * h[d - 1];
        }
    }
    h[k]
}

/// Residuals of the spectrum identities, one tracker per identity.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub n: usize,
    pub checks: Vec<ResidualTracker>,
}

impl IdentityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&ResidualTracker> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const ID1_FIRST: &str = "id1_first";
pub const ID1_SECOND: &str = "id1_second";
pub const ID2: &str = "id2";
pub const VANDERMONDE_RHO: &str = "vandermonde_rho";
/// Largest `|∏_r m[r, π(r)]|` over permutations `π`.
fn max_leibniz_term(m: &DMatrix<f64>) -> f64 {
    fn go(m: &DMatrix<f64>, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if row == m.nrows() {
            *best = best.max(acc);
            return;
        }
        for c in 0..m.ncols() {
            if !used[c] {
                used[c] = true;
                go(m, row + 1, used, acc * m[(row, c)].abs(), best);
                used[c] = false;
            }
        }
    }
    let mut best = 0.0;
    go(m, 0, &mut vec![false; m.ncols()], 1.0, &mut best);
    best
}

pub const DETERMINANT_FORM: &str = "determinant_form";
pub const POWER_DIFFERENCE: &str = "power_difference";
pub const P_DIFFERENCE: &str = "p_difference";

/// Numerically checks the two families of sum identities tying `σ`, `ρ`
/// and `P` together, plus the determinant representations and the two
/// difference identities used to reduce them. Failures are reported, never
/// raised.
///
/// `k_range` selects the degrees for the `P_{2k}` power-sum identity; its
/// lower end is clamped to `−n + 1`, below which the identity is not claimed.
pub fn verify_identities(spec: &FrequencySpectrum, k_range: RangeInclusive<i64>) -> IdentityReport {
    let n = spec.n();
    let w2 = spec.squares();
    let sign = |e: usize| if e.is_multiple_of(2) { 1.0 } else { -1.0 };

    let mut id1a = ResidualTracker::new(ID1_FIRST);
    for p in 0..n {
        for s in 0..n {
            let terms: Vec<f64> = (0..n)
                .map(|k| sign(k) * w2[p].powi(k as i32) * spec.reduced[s][k])
                .collect();
            let rhs = if s == p { sign(s) / spec.rho[s] } else { 0.0 };
            let lhs: f64 = terms.iter().sum();
            let scale = term_scale(terms.iter().copied().chain([rhs]));
            id1a.record(lhs - rhs, scale, || format!("n={n} p={p} s={s}"));
        }
    }

    let mut id1b = ResidualTracker::new(ID1_SECOND);
    for p in 0..n {
        for s in 0..=n {
            let terms: Vec<f64> = (0..n)
                .map(|k| sign(k) * (-w2[k]).powi(s as i32) * spec.reduced[k][p] * spec.rho[k])
                .collect();
            let rhs = if s < n {
                if s == p {
                    1.0
                } else {
                    0.0
                }
            } else {
                -spec.sigma[p]
            };
            let lhs: f64 = terms.iter().sum();
            let scale = term_scale(terms.iter().copied().chain([rhs]));
            id1b.record(lhs - rhs, scale, || format!("n={n} p={p} s={s}"));
        }
    }

    let lo = (*k_range.start()).max(1 - n as i64);
    let hi = *k_range.end();
    let outer = sign(n - 1);
    let mut id2 = ResidualTracker::new(ID2);
    let mut det_form = ResidualTracker::new(DETERMINANT_FORM);
    let vandermonde = vandermonde_product(w2);
    for k in lo..=hi {
        let exp = (n as i64 + k - 1) as i32;
        let terms: Vec<f64> = (0..n)
            .map(|s| outer * sign(s) * w2[s].powi(exp) * spec.rho[s])
            .collect();
        let rhs = spec.complete_homog(k);
        let lhs: f64 = terms.iter().sum();
        let scale = term_scale(terms.iter().copied().chain([rhs]));
        id2.record(lhs - rhs, scale, || format!("n={n} k={k}"));

        // Same sum as a ratio of determinants: Vandermonde rows 0..n−2 with
        // the last row replaced by ω^{2n+2k−2}.
        let m = DMatrix::from_fn(n, n, |r, c| {
            if r + 1 < n {
                w2[c].powi(r as i32)
            } else {
                w2[c].powi(exp)
            }
        });
        let det = m.determinant() / vandermonde;
        let leibniz = max_leibniz_term(&m) / vandermonde.abs();
        det_form.record(det - rhs, term_scale([det, rhs, leibniz]), || {
            format!("n={n} k={k}")
        });
    }

    let mut vrho = ResidualTracker::new(VANDERMONDE_RHO);
    for s in 0..n {
        let others: Vec<f64> = (0..n).filter(|&j| j != s).map(|j| w2[j]).collect();
        let value = vandermonde_product(&others) / vandermonde;
        vrho.record(value - spec.rho[s], term_scale([value, spec.rho[s]]), || {
            format!("n={n} s={s}")
        });
    }

    let mut pow_diff = ResidualTracker::new(POWER_DIFFERENCE);
    for a in 0..n {
        for b in (a + 1)..n {
            for s in 1..=(2 * n as i32) {
                let lhs = w2[a].powi(s) - w2[b].powi(s);
                let rhs = (w2[a] - w2[b]) * complete_homogeneous(&[w2[a], w2[b]], s as i64 - 1);
                pow_diff.record(lhs - rhs, term_scale([w2[a].powi(s), w2[b].powi(s)]), || {
                    format!("n={n} k={a} m={b} s={s}")
                });
            }
        }
    }

    let mut p_diff = ResidualTracker::new(P_DIFFERENCE);
    for j1 in 0..n {
        for j2 in (j1 + 1)..n {
            let rest: Vec<usize> = (0..n).filter(|&j| j != j1 && j != j2).collect();
            for mask in 0u32..(1 << rest.len()) {
                let base: Vec<f64> = rest
                    .iter()
                    .enumerate()
                    .filter(|(bit, _)| mask & (1 << bit) != 0)
                    .map(|(_, &j)| w2[j])
                    .collect();
                let with = |extra: &[f64]| -> Vec<f64> {
                    base.iter().chain(extra.iter()).copied().collect()
                };
                let (a1, a2, a12) = (with(&[w2[j1]]), with(&[w2[j2]]), with(&[w2[j1], w2[j2]]));
                for s in 0..=(n as i64) {
                    let p1 = complete_homogeneous(&a1, s);
                    let p2 = complete_homogeneous(&a2, s);
                    let rhs = (w2[j1] - w2[j2]) * complete_homogeneous(&a12, s - 1);
                    p_diff.record(p1 - p2 - rhs, term_scale([p1, p2, rhs]), || {
                        format!("n={n} j1={j1} j2={j2} subset={mask:b} s={s}")
                    });
                }
            }
        }
    }

    IdentityReport {
        n,
        checks: vec![id1a, id1b, id2, vrho, det_form, pow_diff, p_diff],
    }
}

/// `∏_{i<j} (x_j − x_i)`; 1 for fewer than two values.
fn vandermonde_product(values: &[f64]) -> f64 {
    let mut v = 1.0;
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            v *= values[j] - values[i];
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(w: &[f64]) -> FrequencySpectrum {
        FrequencySpectrum::new(w.to_vec()).unwrap()
    }

    /// Brute-force elementary symmetric polynomial over all subsets.
    fn subset_esym(values: &[f64], degree: usize) -> f64 {
        let mut total = 0.0;
        for mask in 0u32..(1 << values.len()) {
            if mask.count_ones() as usize == degree {
                total += values
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, v)| v)
                    .product::<f64>();
            }
        }
        total
    }

    /// Brute-force multi-index enumeration of the complete homogeneous polynomial.
    fn enumerate_homog(values: &[f64], k: i64) -> f64 {
        if k < 0 {
            return 0.0;
        }
        fn rec(values: &[f64], k: usize) -> f64 {
            match values.split_first() {
                None => {
                    if k == 0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                Some((&x, rest)) => (0..=k).map(|l| x.powi(l as i32) * rec(rest, k - l)).sum(),
            }
        }
        rec(values, k as usize)
    }

    #[test]
    fn sigma_examples() {
        let s = spec(&[1.0, 2.0]);
        assert_eq!(s.elementary_sigma(2).unwrap(), 1.0);
        assert_eq!(s.elementary_sigma(0).unwrap(), 4.0);
        assert_eq!(s.elementary_sigma(1).unwrap(), 5.0);
        assert!(matches!(s.elementary_sigma(3), Err(Error::Range { .. })));
    }

    #[test]
    fn reduced_sigma_examples() {
        let s = spec(&[1.0, 2.0]);
        assert_eq!(s.reduced_sigma(1, 0).unwrap(), 1.0);
        assert_eq!(s.reduced_sigma(0, 0).unwrap(), 4.0);
        assert_eq!(s.reduced_sigma(0, 1).unwrap(), 1.0);
        assert!(s.reduced_sigma(2, 0).is_err());
        assert!(s.reduced_sigma(0, 2).is_err());
    }

    #[test]
    fn rho_examples() {
        assert_eq!(spec(&[1.0]).rho(0).unwrap(), 1.0);
        assert_eq!(spec(&[0.3]).rho(0).unwrap(), 1.0);
        let s = spec(&[1.0, 2.0]);
        assert!((s.rho(0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.rho(1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(s.rho(2).is_err());
    }

    #[test]
    fn complete_homog_examples() {
        let s = spec(&[1.0, 2.0]);
        assert_eq!(s.complete_homog(-1), 0.0);
        assert_eq!(s.complete_homog(0), 1.0);
        assert_eq!(s.complete_homog(2), 21.0);
        assert_eq!(enumerate_homog(s.squares(), 2), 21.0);
    }

    #[test]
    fn construction_rejects_bad_spectra() {
        assert!(FrequencySpectrum::new(Vec::<f64>::new()).is_err());
        assert!(FrequencySpectrum::new(vec![1.0, 1.0]).is_err());
        assert!(FrequencySpectrum::new(vec![1.0, -2.0]).is_err());
        assert!(FrequencySpectrum::new(vec![0.0]).is_err());
        assert!(FrequencySpectrum::new(vec![f64::NAN]).is_err());
        assert!(FrequencySpectrum::new(vec![1.0, 1.0 + 1e-8]).is_err());
        assert!(FrequencySpectrum::new(vec![1.0, 1.001]).is_ok());
    }

    #[test]
    fn unsorted_input_is_sorted_and_flagged() {
        let s = spec(&[2.0, 1.0, 3.0]);
        assert_eq!(s.omegas(), &[1.0, 2.0, 3.0]);
        assert!(s.was_reordered());
        assert!(!spec(&[1.0, 2.0]).was_reordered());
    }

    #[test]
    fn identity_examples_n2() {
        let s = spec(&[1.0, 2.0]);
        // id1 first form at p = s = 0: σ_{0,0} − ω_0² σ_{1,0} = 4 − 1 = 3 = 1/ρ_0.
        let lhs = s.reduced_sigma(0, 0).unwrap() - s.squares()[0] * s.reduced_sigma(1, 0).unwrap();
        assert!((lhs - 3.0).abs() < 1e-14);
        assert!((1.0 / s.rho(0).unwrap() - 3.0).abs() < 1e-14);
        // id2 at k = 0 and k = −1.
        let r = s.rhos();
        let k0 = -(s.squares()[0] * r[0] - s.squares()[1] * r[1]);
        assert!((k0 - 1.0).abs() < 1e-14);
        let km1 = -(r[0] - r[1]);
        assert!(km1.abs() < 1e-15);

        let report = verify_identities(&s, -1..=6);
        assert!(report.all_pass(), "{report:#?}");
        assert_eq!(report.get(ID2).unwrap().count, 8);
    }

    #[test]
    fn k_range_is_clamped_to_validity() {
        let s = spec(&[1.0, 2.0, 3.0]);
        let report = verify_identities(&s, -10..=0);
        // k = −2, −1, 0
        assert_eq!(report.get(ID2).unwrap().count, 3);
        assert!(report.all_pass());
    }

    #[test]
    fn identities_pass_for_larger_spectra() {
        let s = spec(&[0.6, 0.9, 1.4, 1.7, 2.3, 2.9]);
        let report = verify_identities(&s, -5..=6);
        for c in &report.checks {
            assert!(c.pass, "{c:?}");
            assert!(c.max_rel <= 1e-8, "{c:?}");
        }
    }

    #[test]
    fn sigma_matches_subset_enumeration() {
        let s = spec(&[0.7, 1.1, 1.9, 2.2, 2.8]);
        let n = s.n();
        for k in 0..=n {
            let oracle = subset_esym(s.squares(), n - k);
            let v = s.elementary_sigma(k).unwrap();
            assert!((v - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
        }
        for k in 0..n {
            let others: Vec<f64> = (0..n).filter(|&j| j != k).map(|j| s.squares()[j]).collect();
            for m in 0..n {
                let oracle = subset_esym(&others, n - m - 1);
                let v = s.reduced_sigma(m, k).unwrap();
                assert!((v - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
            }
        }
    }

    #[test]
    fn rho_positive_for_sorted_spectra() {
        let s = spec(&[0.5, 0.8, 1.3, 2.0, 2.4, 3.0]);
        assert!(s.rhos().iter().all(|&r| r > 0.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn spectra() -> impl Strategy<Value = FrequencySpectrum> {
            proptest::collection::vec(0.5f64..3.0, 1..=6).prop_filter_map("gap", |w| {
                let s = FrequencySpectrum::new(w).ok()?;
                let ok = s.squares().windows(2).all(|p| p[1] - p[0] > 1e-2);
                ok.then_some(s)
            })
        }

        proptest! {
            #[test]
            fn homog_recursion_matches_enumeration(w in proptest::collection::vec(0.5f64..3.0, 1..=4), k in -2i64..6) {
                let fast = complete_homogeneous(&w, k);
                let slow = enumerate_homog(&w, k);
                prop_assert!((fast - slow).abs() <= 1e-12 * slow.abs().max(1.0));
            }

            #[test]
            fn sigma_matches_brute_force_expansion(s in spectra()) {
                let n = s.n();
                for k in 0..=n {
                    let oracle = subset_esym(s.squares(), n - k);
                    prop_assert!((s.elementary_sigma(k).unwrap() - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
                }
            }

            #[test]
            fn identities_hold(s in spectra()) {
                let report = verify_identities(&s, -6..=6);
                for c in &report.checks {
                    prop_assert!(c.max_rel <= 1e-8, "{:?}", c);
                }
            }

            #[test]
            fn p_difference_recursion(w in proptest::collection::vec(0.5f64..3.0, 2..=5), s in 0i64..8) {
                let (head, tail) = w.split_at(w.len() - 2);
                let (a, b) = (tail[0], tail[1]);
                let with = |x: &[f64]| head.iter().chain(x).copied().collect::<Vec<_>>();
                let lhs = complete_homogeneous(&with(&[a]), s) - complete_homogeneous(&with(&[b]), s);
                let rhs = (a - b) * complete_homogeneous(&with(&[a, b]), s - 1);
                let scale = complete_homogeneous(&with(&[a]), s).abs().max(complete_homogeneous(&with(&[b]), s).abs());
                prop_assert!((lhs - rhs).abs() <= 1e-12 + 1e-9 * scale);
            }
        }
    }
}
