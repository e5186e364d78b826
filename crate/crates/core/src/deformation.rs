//! Interacting deformations `H̃ = 𝓗 + U` that keep the lower chain
//! `ẋ^{(s)} = x^{(s+1)}` intact. `U` must commute with every derivative of
//! order below `2n`, a linear condition on its gradient whose solution
//! space is two-dimensional for a nondegenerate structure. Potentials are
//! polynomials in the two invariant coordinates `w_a = v_a · u`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::canonical::alt_hamiltonian_observable;
use crate::dynamics::{companion_matrix, jet_index};
use crate::error::{check_dim, Error, Result};
use crate::poisson::{alt_structure, degeneracy, epsilon, GammaWeights};
use crate::spectrum::FrequencySpectrum;

/// Pivot threshold relative to `‖C‖∞` for the null-space elimination.
pub const PIVOT_RTOL: f64 = 1e-10;

pub const MAX_POTENTIAL_DEGREE: u32 = 8;

fn sign_pow(e: i64) -> f64 {
    if e.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Coefficient matrix of the compatibility conditions on `∇U`, one row per
/// `(derivative order s < 2n, component)` in jet ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationSystem {
    matrix: DMatrix<f64>,
}

impl DeformationSystem {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        complete_pivot_null_space(&self.matrix, PIVOT_RTOL).0
    }

    /// Orthonormal null-space basis, sorted by free column.
    pub fn null_space(&self) -> Vec<DVector<f64>> {
        complete_pivot_null_space(&self.matrix, PIVOT_RTOL).1
    }

    /// `‖C v‖∞ / (‖C‖∞ ‖v‖∞)`.
    pub fn relative_residual(&self, v: &DVector<f64>) -> f64 {
        (&self.matrix * v).amax() / (self.matrix.amax() * v.amax())
    }
}

/// Sum of `(−1)^m ρ_k ω_k^{exp} α_k` over modes.
fn mode_sum(spec: &FrequencySpectrum, m: usize, exp: i64, alpha: impl Fn(usize) -> f64) -> f64 {
    let sign = sign_pow(m as i64);
    (0..spec.n())
        .map(|k| sign * spec.rhos()[k] * spec.omega_pow(k, exp) * alpha(k))
        .sum()
}

/// Assembles both equation families for `p = 0..n−1`, `i = 1, 2`. The first
/// family at `p` sits in row `(2p, i)`, the second in row `(2p+1, i)`.
pub fn deformation_system(spec: &FrequencySpectrum, g: &GammaWeights) -> Result<DeformationSystem> {
    g.check_matches(spec)?;
    let n = spec.n();
    let mut c = DMatrix::zeros(4 * n, spec.jet_dim());
    let ap = |k: usize| g.alpha_plus(k);
    let am = |k: usize| g.alpha_minus(k);
    for p in 0..n {
        let pi = p as i64;
        for i in 0..2 {
            let r1 = jet_index(2 * p, i);
            let r2 = jet_index(2 * p + 1, i);
            for m in 0..n {
                let mi = m as i64;
                c[(r1, jet_index(2 * m + 1, i))] += mode_sum(spec, m, 2 * pi + 2 * mi - 1, ap);
                let odd_eps = mode_sum(spec, m, 2 * pi + 2 * mi, am);
                for j in 0..2 {
                    c[(r2, jet_index(2 * m + 1, j))] -= odd_eps * epsilon(i, j);
                }
            }
            let start = usize::from(p == 0);
            for m in start..=n {
                let even_eps = mode_sum(spec, m, 2 * pi + 2 * m as i64 - 2, am);
                for j in 0..2 {
                    c[(r1, jet_index(2 * m, j))] += even_eps * epsilon(i, j);
                }
            }
            for m in 0..=n {
                c[(r2, jet_index(2 * m, i))] += mode_sum(spec, m, 2 * pi + 2 * m as i64 - 1, ap);
            }
        }
    }
    Ok(DeformationSystem { matrix: c })
}

/// Gauss–Jordan elimination with complete pivoting. Returns the rank and an
/// orthonormal basis of the null space.
fn complete_pivot_null_space(c: &DMatrix<f64>, rtol: f64) -> (usize, Vec<DVector<f64>>) {
    let (rows, cols) = c.shape();
    let mut a = c.clone();
    let mut perm: Vec<usize> = (0..cols).collect();
    let tol = rtol * a.amax();
    let mut rank = 0;
    while rank < rows.min(cols) {
        let mut best = (rank, rank, 0.0);
        for r in rank..rows {
            for k in rank..cols {
                let v = a[(r, perm[k])].abs();
                if v > best.2 {
                    best = (r, k, v);
                }
            }
        }
        if best.2 <= tol {
            break;
        }
        a.swap_rows(rank, best.0);
        perm.swap(rank, best.1);
        let pc = perm[rank];
        let pivot = a[(rank, pc)];
        a.row_mut(rank).scale_mut(1.0 / pivot);
        for r in 0..rows {
            if r != rank {
                let factor = a[(r, pc)];
                if factor != 0.0 {
                    for k in 0..cols {
                        a[(r, k)] -= factor * a[(rank, k)];
                    }
                }
            }
        }
        rank += 1;
    }
    let mut free: Vec<usize> = perm[rank..].to_vec();
    free.sort_unstable();
    let raw: Vec<DVector<f64>> = free
        .iter()
        .map(|&f| {
            let mut v = DVector::zeros(cols);
            v[f] = 1.0;
            for (r, &pc) in perm[..rank].iter().enumerate() {
                v[pc] = -a[(r, f)];
            }
            v
        })
        .collect();
    (rank, gram_schmidt(raw))
}

fn gram_schmidt(vectors: Vec<DVector<f64>>) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    for mut v in vectors {
        // Two passes keep the basis orthogonal to working precision.
        for _ in 0..2 {
            for q in &out {
                let d = q.dot(&v);
                v.axpy(-d, q, 1.0);
            }
        }
        let norm = v.norm();
        out.push(v / norm);
    }
    out
}

/// Largest principal angle between the spans of `a` and `b`.
pub fn subspace_angle(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let qa = gram_schmidt(a.to_vec());
    let qb = gram_schmidt(b.to_vec());
    let mut worst: f64 = 0.0;
    for (x, y) in [(&qa, &qb), (&qb, &qa)] {
        for v in y {
            let mut r = v.clone();
            for q in x {
                let d = q.dot(&r);
                r.axpy(-d, q, 1.0);
            }
            worst = worst.max(r.norm().min(1.0).asin());
        }
    }
    worst
}

/// The two admissible gradient directions for a given `(spectrum, γ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantBasis {
    vectors: [DVector<f64>; 2],
    omegas: Vec<f64>,
    gamma: Vec<f64>,
}

impl InvariantBasis {
    pub fn vectors(&self) -> &[DVector<f64>; 2] {
        &self.vectors
    }

    /// `(w_1, w_2) = (v_1 · u, v_2 · u)`.
    pub fn coordinates(&self, u: &DVector<f64>) -> (f64, f64) {
        (self.vectors[0].dot(u), self.vectors[1].dot(u))
    }

    fn matches(&self, spec: &FrequencySpectrum, g: &GammaWeights) -> bool {
        self.omegas == spec.omegas() && self.gamma == g.flat()
    }
}

pub fn invariant_directions(spec: &FrequencySpectrum, g: &GammaWeights) -> Result<InvariantBasis> {
    let system = deformation_system(spec, g)?;
    let (rank, null) = complete_pivot_null_space(system.matrix(), PIVOT_RTOL);
    if null.len() != 2 {
        return Err(Error::Degenerate(format!(
            "compatibility system has rank {rank} (expected {}), null space of dimension {}",
            4 * spec.n(),
            null.len()
        )));
    }
    let mut it = null.into_iter();
    let vectors = [it.next().expect("two vectors"), it.next().expect("two vectors")];
    Ok(InvariantBasis {
        vectors,
        omegas: spec.omegas().to_vec(),
        gamma: g.flat(),
    })
}

/// Closed-form admissible directions of the single-mode system:
/// `((α⁻)² − (α⁺)²) x_i + (α⁻α⁺/ω) ε_ij ẋ_j − (α⁺/ω)² ẍ_i`, `i = 1, 2`.
pub fn third_order_directions(spec: &FrequencySpectrum, g: &GammaWeights) -> Result<[DVector<f64>; 2]> {
    if spec.n() != 1 {
        return Err(Error::Contract(format!(
            "closed-form directions need a single mode, got n = {}",
            spec.n()
        )));
    }
    g.check_matches(spec)?;
    let w = spec.omegas()[0];
    let (ap, am) = (g.alpha_plus(0), g.alpha_minus(0));
    let dir = |i: usize| {
        let mut v = DVector::zeros(6);
        v[jet_index(0, i)] = am * am - ap * ap;
        for j in 0..2 {
            v[jet_index(1, j)] += am * ap / w * epsilon(i, j);
        }
        v[jet_index(2, i)] = -(ap / w).powi(2);
        v
    };
    Ok([dir(0), dir(1)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub i: u32,
    pub j: u32,
    pub value: f64,
}

/// `U = Σ value · w_1^i w_2^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub degree: u32,
    pub coeffs: Vec<Monomial>,
}

impl PotentialSpec {
    pub fn new(degree: u32, coeffs: Vec<Monomial>) -> Result<Self> {
        let spec = Self { degree, coeffs };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::InvalidPotential(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// `c (w_1² + w_2²)²`.
    pub fn radial_quartic(c: f64) -> Self {
        Self {
            degree: 4,
            coeffs: vec![
                Monomial { i: 4, j: 0, value: c },
                Monomial { i: 2, j: 2, value: 2.0 * c },
                Monomial { i: 0, j: 4, value: c },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_POTENTIAL_DEGREE).contains(&self.degree) {
            return Err(Error::InvalidPotential(format!(
                "degree must lie in 1..={MAX_POTENTIAL_DEGREE}, got {}",
                self.degree
            )));
        }
        for m in &self.coeffs {
            if m.i + m.j > self.degree {
                return Err(Error::InvalidPotential(format!(
                    "monomial w1^{} w2^{} exceeds degree {}",
                    m.i, m.j, self.degree
                )));
            }
            if !m.value.is_finite() {
                return Err(Error::InvalidPotential(format!(
                    "non-finite coefficient for w1^{} w2^{}",
                    m.i, m.j
                )));
            }
        }
        Ok(())
    }

    pub fn value(&self, w1: f64, w2: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|m| m.value * w1.powi(m.i as i32) * w2.powi(m.j as i32))
            .sum()
    }

    /// `(∂U/∂w_1, ∂U/∂w_2)`.
    pub fn gradient(&self, w1: f64, w2: f64) -> (f64, f64) {
        let d = |e: u32, x: f64| if e == 0 { 0.0 } else { e as f64 * x.powi(e as i32 - 1) };
        self.coeffs.iter().fold((0.0, 0.0), |(g1, g2), m| {
            (
                g1 + m.value * d(m.i, w1) * w2.powi(m.j as i32),
                g2 + m.value * w1.powi(m.i as i32) * d(m.j, w2),
            )
        })
    }
}

/// A potential bound to the invariant coordinates of one `(spectrum, γ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    spec: PotentialSpec,
    basis: InvariantBasis,
}

impl Potential {
    pub fn new(spec: PotentialSpec, basis: InvariantBasis) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec, basis })
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn basis(&self) -> &InvariantBasis {
        &self.basis
    }

    pub fn value(&self, u: &DVector<f64>) -> f64 {
        let (w1, w2) = self.basis.coordinates(u);
        self.spec.value(w1, w2)
    }

    pub fn gradient(&self, u: &DVector<f64>) -> DVector<f64> {
        let (w1, w2) = self.basis.coordinates(u);
        let (g1, g2) = self.spec.gradient(w1, w2);
        &self.basis.vectors[0] * g1 + &self.basis.vectors[1] * g2
    }

    /// Smallest value over the given states; a diagnostic for boundedness.
    pub fn min_over<'a>(&self, states: impl IntoIterator<Item = &'a DVector<f64>>) -> f64 {
        states.into_iter().map(|u| self.value(u)).fold(f64::INFINITY, f64::min)
    }
}

/// `u ↦ Ω (A_𝓗 u + ∇U(u))` for a nondegenerate γ-structure. The linear
/// part is evaluated as the companion matrix, which equals `Ω A_𝓗` but
/// avoids the cancellation in the product when frequencies are close.
#[derive(Debug, Clone)]
pub struct DeformedField {
    omega: DMatrix<f64>,
    linear: DMatrix<f64>,
    hamiltonian: crate::poisson::QuadraticObservable,
    potential: Option<Potential>,
}

pub fn deformed_field(
    spec: &FrequencySpectrum,
    g: &GammaWeights,
    potential: Option<&Potential>,
) -> Result<DeformedField> {
    let deg = degeneracy(spec, g)?;
    if deg.degenerate {
        return Err(Error::Degenerate(format!(
            "degeneracy scalar s = {:e} vanishes; deformed dynamics needs a nondegenerate structure",
            deg.scalar
        )));
    }
    if let Some(p) = potential {
        if !p.basis.matches(spec, g) {
            return Err(Error::Contract(
                "potential was built over the invariant directions of a different spectrum or gamma".into(),
            ));
        }
    }
    let omega = alt_structure(spec, g)?.matrix().clone();
    let hamiltonian = alt_hamiltonian_observable(spec, g)?;
    let linear = companion_matrix(spec).into_matrix();
    Ok(DeformedField {
        omega,
        linear,
        hamiltonian,
        potential: potential.cloned(),
    })
}

impl DeformedField {
    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }

    pub fn linear_part(&self) -> &DMatrix<f64> {
        &self.linear
    }

    pub fn eval(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut out = &self.linear * u;
        if let Some(p) = &self.potential {
            out += &self.omega * p.gradient(u);
        }
        out
    }

    /// Checked variant of [`Self::eval`].
    pub fn try_eval(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("state", self.dim(), u.len())?;
        Ok(self.eval(u))
    }

    /// `H̃ = 𝓗 + U`.
    pub fn energy(&self, u: &DVector<f64>) -> f64 {
        self.hamiltonian.eval(u) + self.potential.as_ref().map_or(0.0, |p| p.value(u))
    }

    pub fn potential_value(&self, u: &DVector<f64>) -> f64 {
        self.potential.as_ref().map_or(0.0, |p| p.value(u))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{rk4_step, PhaseState};
    use proptest::prelude::*;

    fn spec(w: &[f64]) -> FrequencySpectrum {
        FrequencySpectrum::new(w.to_vec()).unwrap()
    }

    fn gamma(v: &[f64]) -> GammaWeights {
        GammaWeights::from_flat(v).unwrap()
    }

    #[test]
    fn dirac_weights_single_mode_forbid_velocity_dependence() {
        let s = spec(&[1.3]);
        let c = deformation_system(&s, &gamma(&[1.0, -1.0])).unwrap();
        for i in 0..2 {
            let col = c.matrix().column(jet_index(0, i));
            assert!(col.iter().all(|&x| x == 0.0));
        }
        assert_eq!(c.rank(), 4);
        let null = c.null_space();
        let ex: Vec<DVector<f64>> = (0..2)
            .map(|i| {
                let mut e = DVector::zeros(6);
                e[jet_index(0, i)] = 1.0;
                e
            })
            .collect();
        assert!(subspace_angle(&null, &ex) < 1e-14);
    }

    #[test]
    fn single_mode_rows_match_hand_system() {
        let w = 1.7;
        let (g1, g2) = (2.0, 0.5);
        let s = spec(&[w]);
        let g = gamma(&[g1, g2]);
        let (ap, am) = (g.alpha_plus(0), g.alpha_minus(0));
        let c = deformation_system(&s, &g).unwrap();
        let m = c.matrix();
        for i in 0..2 {
            let j = 1 - i;
            let e = epsilon(i, j);
            // α⁺/ω ∂U/∂ẋ_i − α⁻ ε_ij ∂U/∂ẍ_j
            assert!((m[(jet_index(0, i), jet_index(1, i))] - ap / w).abs() < 1e-15);
            assert!((m[(jet_index(0, i), jet_index(2, j))] + am * e).abs() < 1e-15);
            // α⁺/ω ∂U/∂x_i − α⁻ ε_ij ∂U/∂ẋ_j − ωα⁺ ∂U/∂ẍ_i
            assert!((m[(jet_index(1, i), jet_index(0, i))] - ap / w).abs() < 1e-15);
            assert!((m[(jet_index(1, i), jet_index(1, j))] + am * e).abs() < 1e-15);
            assert!((m[(jet_index(1, i), jet_index(2, i))] + w * ap).abs() < 1e-15);
        }
        assert_eq!(m.iter().filter(|x| **x != 0.0).count(), 10);
    }

    #[test]
    fn rows_are_signed_structure_rows() {
        let s = spec(&[0.7, 1.5, 2.6]);
        let g = gamma(&[1.2, -0.6, 0.9, 2.2, -1.4, 0.8]);
        let c = deformation_system(&s, &g).unwrap();
        let o = alt_structure(&s, &g).unwrap();
        for p in 0..3 {
            for i in 0..2 {
                for (s_ord, sign) in [(2 * p, sign_pow(p as i64)), (2 * p + 1, sign_pow(p as i64 + 1))] {
                    let r = jet_index(s_ord, i);
                    let diff = (c.matrix().row(r) - o.matrix().row(r) * sign).amax();
                    assert!(diff <= 1e-12 * o.matrix().amax(), "p={p} i={i}");
                }
            }
        }
    }

    #[test]
    fn closed_form_single_mode_span() {
        for (w, g1, g2) in [(1.0, 2.0, 1.0), (2.0, 0.5, -3.0), (0.6, -1.5, 0.7)] {
            let s = spec(&[w]);
            let g = gamma(&[g1, g2]);
            let basis = invariant_directions(&s, &g).unwrap();
            let closed = third_order_directions(&s, &g).unwrap();
            let c = deformation_system(&s, &g).unwrap();
            for v in &closed {
                assert!(c.relative_residual(v) < 1e-14);
            }
            assert!(subspace_angle(basis.vectors(), &closed) <= 1e-9);
        }
    }

    #[test]
    fn degenerate_structure_rejected_by_field() {
        let s = spec(&[1.0, 2.0]);
        let g = GammaWeights::uniform(2, 1.0).unwrap();
        assert!(matches!(deformed_field(&s, &g, None), Err(Error::Degenerate(_))));
        // The system itself is still assembled and reported.
        let c = deformation_system(&s, &g).unwrap();
        assert!(c.rank() <= 8);
    }

    #[test]
    fn zero_potential_gives_linear_field() {
        let s = spec(&[0.9, 1.8]);
        let g = gamma(&[1.1, -0.4, 2.0, 0.7]);
        let f = deformed_field(&s, &g, None).unwrap();
        let m = companion_matrix(&s);
        let product = alt_structure(&s, &g).unwrap().matrix() * alt_hamiltonian_observable(&s, &g).unwrap().a();
        assert!((product - m.matrix()).amax() <= 1e-9 * m.matrix().amax());
        assert_eq!(f.linear_part(), m.matrix());
        let zero = Potential::new(PotentialSpec::new(1, vec![]).unwrap(), invariant_directions(&s, &g).unwrap()).unwrap();
        let fz = deformed_field(&s, &g, Some(&zero)).unwrap();
        let u = DVector::from_fn(10, |i, _| (i as f64 * 0.4).cos());
        assert_eq!(f.eval(&u), fz.eval(&u));
    }

    #[test]
    fn mismatched_basis_is_contract_error() {
        let s = spec(&[1.0]);
        let other = spec(&[1.5]);
        let g = gamma(&[2.0, 1.0]);
        let p = Potential::new(PotentialSpec::radial_quartic(1.0), invariant_directions(&other, &g).unwrap()).unwrap();
        assert!(matches!(deformed_field(&s, &g, Some(&p)), Err(Error::Contract(_))));
    }

    #[test]
    fn harmonic_force_enters_top_slots_only() {
        let s = spec(&[1.0]);
        let g = gamma(&[1.0, -1.0]);
        let basis = invariant_directions(&s, &g).unwrap();
        let lambda = 0.8;
        let u_spec = PotentialSpec::new(
            2,
            vec![
                Monomial { i: 2, j: 0, value: 0.5 * lambda },
                Monomial { i: 0, j: 2, value: 0.5 * lambda },
            ],
        )
        .unwrap();
        let f = deformed_field(&s, &g, Some(&Potential::new(u_spec, basis).unwrap())).unwrap();
        let u = DVector::from_column_slice(&[0.3, -0.8, 0.5, 0.1, -0.2, 0.9]);
        let force = f.eval(&u) - companion_matrix(&s).apply(&u);
        for s_ord in 0..2 {
            for i in 0..2 {
                assert!(force[jet_index(s_ord, i)].abs() <= 1e-15);
            }
        }
        assert!(force[jet_index(2, 0)].abs() > 0.1);
    }

    #[test]
    fn quartic_energy_rk4_order_four() {
        let s = spec(&[1.0]);
        let g = gamma(&[1.0, -1.0]);
        let basis = invariant_directions(&s, &g).unwrap();
        let p = Potential::new(PotentialSpec::radial_quartic(-0.025), basis).unwrap();
        let f = deformed_field(&s, &g, Some(&p)).unwrap();
        let u0 = DVector::from_column_slice(&[1.0, 0.3, 0.2, -0.5, 0.4, 0.1]);
        let e0 = f.energy(&u0);
        let drift = |h: f64| {
            let steps = (10.0 / h).round() as usize;
            let mut st = PhaseState::new(u0.clone(), 0.0);
            let mut worst: f64 = 0.0;
            for _ in 0..steps {
                st = rk4_step(&|u: &DVector<f64>| f.eval(u), &st, h).unwrap();
                worst = worst.max((f.energy(&st.u) - e0).abs());
            }
            worst
        };
        let d = [drift(1e-2), drift(5e-3), drift(2.5e-3)];
        for w in d.windows(2) {
            assert!((w[0] / w[1]).log2() >= 3.8, "{d:?}");
        }
        assert!(drift(1e-3) <= 1e-8 * (1.0 + e0.abs()));
    }

    #[test]
    fn potential_json_round_trip() {
        let text = r#"{"degree":4,"coeffs":[{"i":4,"j":0,"value":-0.025},{"i":2,"j":2,"value":-0.05},{"i":0,"j":4,"value":-0.025}]}"#;
        let p = PotentialSpec::from_json(text).unwrap();
        assert_eq!(p, PotentialSpec::radial_quartic(-0.025));
        assert_eq!(serde_json::to_string(&p).unwrap(), text);
        assert!(PotentialSpec::from_json(r#"{"degree":9,"coeffs":[]}"#).is_err());
        assert!(PotentialSpec::from_json(r#"{"degree":0,"coeffs":[]}"#).is_err());
        assert!(PotentialSpec::from_json(r#"{"degree":2,"coeffs":[{"i":2,"j":1,"value":1}]}"#).is_err());
        assert!(PotentialSpec::from_json(r#"{"degree":2}"#).is_err());
    }

    #[test]
    fn potential_gradient_matches_finite_difference() {
        let p = PotentialSpec::new(
            5,
            vec![
                Monomial { i: 1, j: 0, value: 0.3 },
                Monomial { i: 2, j: 3, value: -1.1 },
                Monomial { i: 0, j: 4, value: 0.7 },
            ],
        )
        .unwrap();
        let (w1, w2) = (0.4, -0.9);
        let (g1, g2) = p.gradient(w1, w2);
        let h = 1e-6;
        let fd1 = (p.value(w1 + h, w2) - p.value(w1 - h, w2)) / (2.0 * h);
        let fd2 = (p.value(w1, w2 + h) - p.value(w1, w2 - h)) / (2.0 * h);
        assert!((g1 - fd1).abs() < 1e-8 && (g2 - fd2).abs() < 1e-8);
    }

    #[test]
    fn min_over_samples() {
        let s = spec(&[1.0]);
        let g = gamma(&[1.0, -1.0]);
        let p = Potential::new(PotentialSpec::radial_quartic(1.0), invariant_directions(&s, &g).unwrap()).unwrap();
        let states = [DVector::zeros(6), DVector::from_element(6, 1.0)];
        assert_eq!(p.min_over(states.iter()), 0.0);
    }

    fn sorted_spectrum(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.5f64..3.0, n).prop_filter("gap", |w| {
            let mut sq: Vec<f64> = w.iter().map(|x| x * x).collect();
            sq.sort_by(f64::total_cmp);
            sq.windows(2).all(|p| p[1] - p[0] >= 0.05)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn null_space_dimension_two(
            (w, g) in (1usize..=3).prop_flat_map(|n| (
                sorted_spectrum(n),
                prop::collection::vec((0.5f64..2.0, any::<bool>()), 2 * n),
            ))
        ) {
            let s = FrequencySpectrum::new(w).unwrap();
            let flat: Vec<f64> = g.iter().map(|&(m, neg)| if neg { -m } else { m }).collect();
            let g = GammaWeights::from_flat(&flat).unwrap();
            prop_assume!(!degeneracy(&s, &g).unwrap().degenerate);
            let c = deformation_system(&s, &g).unwrap();
            prop_assert_eq!(c.rank(), 4 * s.n());
            let basis = invariant_directions(&s, &g).unwrap();
            for v in basis.vectors() {
                prop_assert!(c.relative_residual(v) <= 1e-10);
            }
            let f = deformed_field(&s, &g, Some(&Potential::new(PotentialSpec::radial_quartic(0.3), basis).unwrap())).unwrap();
            let u = DVector::from_fn(s.jet_dim(), |i, _| ((i + 1) as f64 * 0.37).sin());
            let du = f.eval(&u);
            for ord in 0..s.top_order() {
                for i in 0..2 {
                    let lhs = du[jet_index(ord, i)];
                    let rhs = u[jet_index(ord + 1, i)];
                    prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()), "{}", lhs - rhs);
                }
            }
        }
    }
}
