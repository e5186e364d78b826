//! Constant Poisson structures on the jet space.
//!
//! A structure is an antisymmetric matrix `Ω` with
//! `{x_i^{(s)}, x_j^{(m)}} = Ω[(s,i),(m,j)]`. Because `Ω` does not depend on
//! the state, the Jacobi identity holds automatically and brackets of
//! quadratic observables close on quadratic observables.

mod observable;

pub use observable::{BilinearTerm, QuadraticObservable};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dynamics::{jet_index, LinearField};
use crate::error::{check_dim, Error, Result};
use crate::precise::{self, dd, round, Dd};
use crate::spectrum::FrequencySpectrum;

/// Levi-Civita symbol with `ε_12 = +1` (0-based components).
#[inline]
pub fn epsilon(i: usize, j: usize) -> f64 {
    match (i, j) {
        (0, 1) => 1.0,
        (1, 0) => -1.0,
        _ => 0.0,
    }
}

#[inline]
fn parity_sign(e: i64) -> f64 {
    if e.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// The `2n` nonzero weights `γ_{k,i}` of the alternative Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaWeights {
    gamma: Vec<[f64; 2]>,
}

impl GammaWeights {
    /// Weights smaller than this in magnitude are rejected.
    pub const MIN_MAGNITUDE: f64 = 1e-9;

    pub fn new(gamma: Vec<[f64; 2]>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::InvalidGamma("at least one mode required".into()));
        }
        for (k, pair) in gamma.iter().enumerate() {
            for (i, g) in pair.iter().enumerate() {
                if !g.is_finite() || g.abs() < Self::MIN_MAGNITUDE {
                    return Err(Error::InvalidGamma(format!(
                        "gamma[{k}][{}] = {g} must be finite with magnitude >= {}",
                        i + 1,
                        Self::MIN_MAGNITUDE
                    )));
                }
            }
        }
        Ok(Self { gamma })
    }

    /// `[γ_{0,1}, γ_{0,2}, γ_{1,1}, …]`.
    pub fn from_flat(values: &[f64]) -> Result<Self> {
        if !values.len().is_multiple_of(2) {
            return Err(Error::InvalidGamma(format!(
                "expected an even number of values, got {}",
                values.len()
            )));
        }
        Self::new(values.chunks(2).map(|c| [c[0], c[1]]).collect())
    }

    /// `γ_{k,1} = (−1)^k`, `γ_{k,2} = (−1)^{k+1}`: reproduces the Noether
    /// energy and the Dirac structure.
    pub fn dirac(n: usize) -> Self {
        Self {
            gamma: (0..n)
                .map(|k| {
                    let s = parity_sign(k as i64);
                    [s, -s]
                })
                .collect(),
        }
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![[value, value]; n])
    }

    pub fn n(&self) -> usize {
        self.gamma.len()
    }

    /// `γ_{k, component+1}`.
    pub fn get(&self, k: usize, component: usize) -> f64 {
        self.gamma[k][component]
    }

    pub fn rows(&self) -> &[[f64; 2]] {
        &self.gamma
    }

    pub fn flat(&self) -> Vec<f64> {
        self.gamma.iter().flatten().copied().collect()
    }

    /// `α_k^+ = ½(1/γ_{k,1} + 1/γ_{k,2})`.
    pub fn alpha_plus(&self, k: usize) -> f64 {
        0.5 * (1.0 / self.gamma[k][0] + 1.0 / self.gamma[k][1])
    }

    /// `α_k^− = ½(1/γ_{k,1} − 1/γ_{k,2})`.
    pub fn alpha_minus(&self, k: usize) -> f64 {
        0.5 * (1.0 / self.gamma[k][0] - 1.0 / self.gamma[k][1])
    }

    pub(crate) fn alpha_plus_dd(&self, k: usize) -> Dd {
        (dd(1.0) / dd(self.gamma[k][0]) + dd(1.0) / dd(self.gamma[k][1])) * 0.5
    }

    pub(crate) fn alpha_minus_dd(&self, k: usize) -> Dd {
        (dd(1.0) / dd(self.gamma[k][0]) - dd(1.0) / dd(self.gamma[k][1])) * 0.5
    }

    pub(crate) fn check_matches(&self, spec: &FrequencySpectrum) -> Result<()> {
        check_dim("gamma weights (modes)", spec.n(), self.n())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Dirac,
    Alternative(GammaWeights),
}

/// Constant antisymmetric `(4n+2)×(4n+2)` Poisson matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureMatrix {
    matrix: DMatrix<f64>,
    provenance: Provenance,
    /// The entries in double-double when they were assembled that way.
    precise: Option<DMatrix<Dd>>,
    spectrum: FrequencySpectrum,
}

/// Relative singular-value cutoff for [`StructureMatrix::numerical_rank`].
pub const RANK_RTOL: f64 = 1e-10;

impl StructureMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `{x_{i+1}^{(s)}, x_{j+1}^{(m)}}` with 0-based components.
    pub fn entry(&self, s: usize, i: usize, m: usize, j: usize) -> f64 {
        self.matrix[(jet_index(s, i), jet_index(m, j))]
    }

    /// `‖Ω + Ωᵀ‖_∞` entrywise.
    pub fn antisymmetry_defect(&self) -> f64 {
        (&self.matrix + self.matrix.transpose()).amax()
    }

    /// Singular values of `Ω` in jet coordinates, descending. They span many
    /// decades for larger `n`, so the rank is not read off from these.
    pub fn singular_values(&self) -> Vec<f64> {
        descending(self.matrix.clone().singular_values().iter().copied())
    }

    /// Singular values of `Ω` expressed in canonical coordinates, descending.
    /// The congruence preserves the rank and removes the spread of scales
    /// between derivative orders; it is evaluated in double-double.
    pub fn canonical_singular_values(&self) -> Vec<f64> {
        let t = crate::canonical::canonical_matrix_dd(&self.spectrum);
        let omega = match &self.precise {
            Some(o) => o.clone(),
            None => self.matrix.map(dd),
        };
        let c = precise::congruence_dd(&t, &omega);
        descending(c.singular_values().iter().copied())
    }

    /// Number of canonical singular values above `RANK_RTOL · σ_max`.
    pub fn numerical_rank(&self) -> usize {
        let sv = self.canonical_singular_values();
        let top = sv.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > RANK_RTOL * top).count()
    }

    /// `T Ω Tᵀ`: brackets of the linear coordinates given by the rows of `T`.
    pub fn conjugate(&self, t: &DMatrix<f64>) -> DMatrix<f64> {
        precise::mul3(t, &self.matrix, &t.transpose())
    }

    pub fn to_json(&self, spec: &FrequencySpectrum) -> Result<StructureJson> {
        let gamma = match &self.provenance {
            Provenance::Dirac => None,
            Provenance::Alternative(g) => Some(g.rows().iter().map(|r| r.to_vec()).collect()),
        };
        let weights = match &self.provenance {
            Provenance::Dirac => GammaWeights::dirac(spec.n()),
            Provenance::Alternative(g) => g.clone(),
        };
        let deg = degeneracy(spec, &weights)?;
        Ok(StructureJson {
            n: spec.n(),
            omegas: spec.omegas().to_vec(),
            gamma,
            matrix: self
                .matrix
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            degeneracy_scalar: deg.scalar,
            degenerate: deg.degenerate,
            rank: self.numerical_rank(),
        })
    }
}

fn descending(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    v
}

/// Serialized form of a [`StructureMatrix`].
#[derive(Debug, Clone, Serialize)]
pub struct StructureJson {
    pub n: usize,
    pub omegas: Vec<f64>,
    pub gamma: Option<Vec<Vec<f64>>>,
    pub matrix: Vec<Vec<f64>>,
    pub degeneracy_scalar: f64,
    pub degenerate: bool,
    pub rank: usize,
}

/// Poisson structure of the Noether (Dirac) formulation:
/// zero for odd `s+m`, otherwise `(−1)^{(s−m)/2+n+1} P_{s+m−2n} ε_ij`.
pub fn dirac_structure(spec: &FrequencySpectrum) -> StructureMatrix {
    let n = spec.n() as i64;
    let top = spec.top_order();
    let dim = spec.jet_dim();
    let mut omega = DMatrix::zeros(dim, dim);
    for s in 0..=top {
        for m in 0..=top {
            let (si, mi) = (s as i64, m as i64);
            if (si + mi) % 2 != 0 {
                continue;
            }
            let coeff = parity_sign((si - mi) / 2 + n + 1) * spec.complete_homog((si + mi - 2 * n) / 2);
            if coeff == 0.0 {
                continue;
            }
            omega[(jet_index(s, 0), jet_index(m, 1))] = coeff;
            omega[(jet_index(s, 1), jet_index(m, 0))] = -coeff;
        }
    }
    StructureMatrix {
        matrix: omega,
        provenance: Provenance::Dirac,
        precise: None,
        spectrum: spec.clone(),
    }
}

/// Coefficient of the alternative structure at derivative orders `(s, m)`
/// before the `δ_ij` / `ε_ij` factor, together with the magnitude of the
/// largest term in its mode sum.
pub fn alt_coefficient(spec: &FrequencySpectrum, g: &GammaWeights, s: usize, m: usize) -> (f64, f64) {
    let (coeff, scale) = alt_coefficient_dd(spec, g, s, m);
    (round(coeff), scale)
}

fn alt_coefficient_dd(spec: &FrequencySpectrum, g: &GammaWeights, s: usize, m: usize) -> (Dd, f64) {
    if s == 0 && m == 0 {
        return (dd(0.0), 0.0);
    }
    let (si, mi) = (s as i64, m as i64);
    let odd = (si + mi) % 2 != 0;
    let sign = if odd {
        parity_sign((si - mi + 1).div_euclid(2))
    } else {
        parity_sign((si - mi) / 2)
    };
    let p = spec.precise();
    let mut sum = dd(0.0);
    let mut scale: f64 = 0.0;
    for k in 0..spec.n() {
        let alpha = if odd { g.alpha_plus_dd(k) } else { g.alpha_minus_dd(k) };
        let term = p.rho[k] * p.omega_pow(k, si + mi - 2) * alpha;
        sum += term;
        scale = scale.max(round(term).abs());
    }
    (sum * sign, scale)
}

/// The γ-family of structures compatible with the alternative Hamiltonian:
/// `δ_ij` blocks for odd `s+m`, `ε_ij` blocks for even nonzero `s+m`.
pub fn alt_structure(spec: &FrequencySpectrum, g: &GammaWeights) -> Result<StructureMatrix> {
    g.check_matches(spec)?;
    let top = spec.top_order();
    let dim = spec.jet_dim();
    let mut omega = DMatrix::from_element(dim, dim, dd(0.0));
    for s in 0..=top {
        for m in 0..=top {
            let (coeff, _) = alt_coefficient_dd(spec, g, s, m);
            if coeff == dd(0.0) {
                continue;
            }
            if (s + m) % 2 == 1 {
                for i in 0..2 {
                    omega[(jet_index(s, i), jet_index(m, i))] = coeff;
                }
            } else {
                omega[(jet_index(s, 0), jet_index(m, 1))] = coeff;
                omega[(jet_index(s, 1), jet_index(m, 0))] = -coeff;
            }
        }
    }
    Ok(StructureMatrix {
        matrix: omega.map(round),
        provenance: Provenance::Alternative(g.clone()),
        precise: Some(omega),
        spectrum: spec.clone(),
    })
}

/// The scalar `s = Σ_k ρ_k α_k^− / ω_k²` and its degeneracy verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Degeneracy {
    pub scalar: f64,
    /// `Σ_k |ρ_k α_k^−| / ω_k²`.
    pub scale: f64,
    pub degenerate: bool,
}

/// Relative threshold below which `s` is treated as zero.
pub const DEGENERACY_RTOL: f64 = 1e-10;

pub fn degeneracy(spec: &FrequencySpectrum, g: &GammaWeights) -> Result<Degeneracy> {
    g.check_matches(spec)?;
    let p = spec.precise();
    let mut scalar = dd(0.0);
    let mut scale = 0.0;
    for k in 0..spec.n() {
        let term = p.rho[k] * g.alpha_minus_dd(k) / p.squares[k];
        scalar += term;
        scale += round(term).abs();
    }
    let scalar = round(scalar);
    Ok(Degeneracy {
        scalar,
        scale,
        degenerate: scalar.abs() <= DEGENERACY_RTOL * scale,
    })
}

pub fn degeneracy_scalar(spec: &FrequencySpectrum, g: &GammaWeights) -> Result<f64> {
    Ok(degeneracy(spec, g)?.scalar)
}

/// `{f, g} = (∇f)ᵀ Ω ∇g` for quadratic observables.
pub fn bracket(
    structure: &StructureMatrix,
    f: &QuadraticObservable,
    g: &QuadraticObservable,
) -> Result<QuadraticObservable> {
    let dim = structure.dim();
    check_dim("bracket left operand", dim, f.dim())?;
    check_dim("bracket right operand", dim, g.dim())?;
    let omega = structure.matrix();
    let af_o = f.a() * omega;
    let ag_o = g.a() * omega;
    let a = precise::mul3(f.a(), omega, g.a()) - precise::mul3(g.a(), omega, f.a());
    let b: DVector<f64> = &af_o * g.b() - &ag_o * f.b();
    let c = f.b().dot(&(omega * g.b()));
    QuadraticObservable::new(a, b, c)
}

/// Linear field `u̇ = Ω A_H u` generated by a homogeneous quadratic Hamiltonian.
pub fn hamiltonian_vector_field(
    structure: &StructureMatrix,
    hamiltonian: &QuadraticObservable,
) -> Result<LinearField> {
    check_dim("hamiltonian", structure.dim(), hamiltonian.dim())?;
    if hamiltonian.b().iter().any(|v| *v != 0.0) {
        return Err(Error::Contract(
            "hamiltonian vector field requires a Hamiltonian without linear part".into(),
        ));
    }
    let matrix = match (&structure.precise, hamiltonian.precise_a()) {
        (Some(o), Some(a)) => precise::mul_dd(o, a),
        _ => precise::mul(structure.matrix(), hamiltonian.a()),
    };
    Ok(LinearField::new(matrix))
}
