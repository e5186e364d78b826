//! Oscillator coordinates, canonical coordinates and the Hamiltonians built
//! from them.
//!
//! Oscillator coordinates `x_{k,i} = √ρ_k Σ_m σ_{m,k} x_i^{(2m)}` isolate a
//! single frequency each. From their first and second derivatives one forms
//! the canonical pairs `(q_{k,i}, p_{k,i})`, and the remaining two directions
//! are the translation charges `z_i`. The Noether energy is the alternating
//! sum of the oscillators `J_{k,i} = p² + ω_k² q²`; the alternative
//! Hamiltonians reweight them by arbitrary nonzero `γ_{k,i}`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dynamics::{companion_matrix, jet_index, ExactPropagator, PhaseState};
use crate::error::{check_dim, Error, Result};
use crate::poisson::{degeneracy, BilinearTerm, GammaWeights, QuadraticObservable};
use crate::precise::{dd, round, Dd};
use crate::spectrum::FrequencySpectrum;

/// Linear coordinates on the jet space: row `r` of `matrix` is the
/// covector of the coordinate named `labels[r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
    labels: Vec<String>,
}

impl LinearMap {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn row(&self, r: usize) -> DVector<f64> {
        self.matrix.row(r).transpose()
    }

    pub fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.matrix * u
    }

    /// Recovers the jet vector from target coordinates (square maps only).
    pub fn invert(&self, coords: &DVector<f64>) -> Result<DVector<f64>> {
        if !self.matrix.is_square() {
            return Err(Error::Contract("only square maps can be inverted".into()));
        }
        check_dim("coordinates", self.matrix.nrows(), coords.len())?;
        self.matrix
            .clone()
            .lu()
            .solve(coords)
            .ok_or(Error::Singular("coordinate map inversion"))
    }

    /// Labeled coordinate values, for JSON dumps.
    pub fn dump(&self, u: &DVector<f64>) -> serde_json::Map<String, serde_json::Value> {
        let values = self.apply(u);
        self.labels
            .iter()
            .zip(values.iter())
            .map(|(l, v)| (l.clone(), serde_json::json!(v)))
            .collect()
    }
}

/// Standard block-diagonal symplectic matrix: `[[0, 1], [−1, 0]]` blocks.
pub fn canonical_block_form(dim: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(dim, dim);
    for a in (0..dim).step_by(2) {
        j[(a, a + 1)] = 1.0;
        j[(a + 1, a)] = -1.0;
    }
    j
}

type DdRow = Vec<Dd>;

fn round_row(row: &[Dd]) -> DVector<f64> {
    DVector::from_iterator(row.len(), row.iter().copied().map(round))
}

fn round_rows(rows: &[DdRow]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows.first().map_or(0, Vec::len), |r, c| round(rows[r][c]))
}

fn combine(a: &[Dd], b: &[Dd], b_weight: Dd, overall: Dd) -> DdRow {
    a.iter().zip(b).map(|(&x, &y)| (x + y * b_weight) * overall).collect()
}

fn oscillator_row_dd(spec: &FrequencySpectrum, k: usize, component: usize, derivative: usize) -> DdRow {
    let p = spec.precise();
    let mut row = vec![dd(0.0); spec.jet_dim()];
    let scale = p.rho[k].sqrt();
    for m in 0..spec.n() {
        row[jet_index(2 * m + derivative, component)] = scale * p.reduced[k][m];
    }
    row
}

/// Covector of the `derivative`-th time derivative of `x_{k, component+1}`.
fn oscillator_row(spec: &FrequencySpectrum, k: usize, component: usize, derivative: usize) -> DVector<f64> {
    round_row(&oscillator_row_dd(spec, k, component, derivative))
}

/// Oscillator coordinates and their first two derivatives, `6n` rows in the
/// order `x_{k,1}, x_{k,2}, ẋ_{k,1}, ẋ_{k,2}, ẍ_{k,1}, ẍ_{k,2}` per mode.
pub fn oscillator_map(spec: &FrequencySpectrum) -> LinearMap {
    let n = spec.n();
    let mut rows = Vec::with_capacity(6 * n);
    let mut labels = Vec::with_capacity(6 * n);
    for k in 0..n {
        for (d, prefix) in ["x", "dx", "ddx"].iter().enumerate() {
            for c in 0..2 {
                rows.push(oscillator_row(spec, k, c, d).transpose());
                labels.push(format!("{prefix}[{k}][{}]", c + 1));
            }
        }
    }
    LinearMap {
        matrix: DMatrix::from_rows(&rows),
        labels,
    }
}

/// Row position of `q_{k,i}` (and `p_{k,i}` right after it) in the
/// canonical maps; `z_1, z_2` occupy the last two rows.
pub fn canonical_pair_row(k: usize, component: usize) -> usize {
    4 * k + 2 * component
}

fn sign_pow(e: usize) -> f64 {
    if e.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Canonical coordinates `(q_{k,i}, p_{k,i})` per mode and component, then
/// `z_1, z_2`. Under the Dirac structure they satisfy
/// `{q_{k,i}, p_{m,j}} = δ_km δ_ij` and `{z_1, z_2} = 1`.
pub fn canonical_map(spec: &FrequencySpectrum) -> LinearMap {
    let (rows, labels) = canonical_rows_dd(spec);
    LinearMap {
        matrix: round_rows(&rows),
        labels,
    }
}

/// [`canonical_map`] before rounding.
pub(crate) fn canonical_matrix_dd(spec: &FrequencySpectrum) -> DMatrix<Dd> {
    let (rows, _) = canonical_rows_dd(spec);
    let dim = rows.len();
    DMatrix::from_fn(dim, dim, |r, c| rows[r][c])
}

fn canonical_rows_dd(spec: &FrequencySpectrum) -> (Vec<DdRow>, Vec<String>) {
    let n = spec.n();
    let dim = spec.jet_dim();
    let mut rows = Vec::with_capacity(dim);
    let mut labels = Vec::with_capacity(dim);
    for k in 0..n {
        let w = spec.precise().omegas[k];
        let d1 = oscillator_row_dd(spec, k, 0, 1);
        let d2 = oscillator_row_dd(spec, k, 1, 1);
        let dd1 = oscillator_row_dd(spec, k, 0, 2);
        let dd2 = oscillator_row_dd(spec, k, 1, 2);
        for i in 1..=2usize {
            rows.push(combine(&d1, &dd2, dd(sign_pow(i)) / w, (dd(0.5) / w).sqrt()));
            rows.push(combine(&d2, &dd1, dd(sign_pow(i + 1)) / w, (w * 0.5).sqrt() * sign_pow(k)));
            labels.push(format!("q[{k}][{i}]"));
            labels.push(format!("p[{k}][{i}]"));
        }
    }
    let norm = spec.precise().omegas.iter().fold(dd(1.0), |acc, &w| acc * w);
    for i in 1..=2usize {
        let mut z = vec![dd(0.0); dim];
        for k in 0..=n {
            z[jet_index(2 * k, i - 1)] = spec.precise().sigma[k] * sign_pow(i) / norm;
        }
        rows.push(z);
        labels.push(format!("z[{i}]"));
    }
    (rows, labels)
}

/// Canonical coordinates adapted to the γ-structure:
/// `𝔮 = √|γ| q`, `𝔭 = (−1)^{k+i+1} sign(γ) √|γ| p`, and `π_i` the rescaled
/// `z_i`. Requires a nondegenerate structure.
pub fn scaled_canonical_map(spec: &FrequencySpectrum, g: &GammaWeights) -> Result<LinearMap> {
    let deg = degeneracy(spec, g)?;
    if deg.degenerate {
        return Err(Error::Degenerate(format!(
            "degeneracy scalar s = {:e} vanishes; the z-sector has no canonical rescaling",
            deg.scalar
        )));
    }
    let (mut rows, mut labels) = canonical_rows_dd(spec);
    let scale_row = |row: &mut DdRow, f: Dd| row.iter_mut().for_each(|x| *x *= f);
    for k in 0..spec.n() {
        for i in 1..=2usize {
            let gamma = g.get(k, i - 1);
            let root = dd(gamma.abs()).sqrt();
            let r = canonical_pair_row(k, i - 1);
            scale_row(&mut rows[r], root);
            scale_row(&mut rows[r + 1], root * (sign_pow(k + i + 1) * gamma.signum()));
            labels[r] = format!("Q[{k}][{i}]");
            labels[r + 1] = format!("P[{k}][{i}]");
        }
    }
    let norm = spec.precise().omegas.iter().fold(dd(1.0), |acc, &w| acc * w) * dd(deg.scalar.abs()).sqrt();
    let last = rows.len() - 1;
    scale_row(&mut rows[last - 1], dd(1.0) / norm);
    scale_row(&mut rows[last], dd(deg.scalar.signum()) / norm);
    labels[last - 1] = "pi[1]".into();
    labels[last] = "pi[2]".into();
    Ok(LinearMap {
        matrix: round_rows(&rows),
        labels,
    })
}

/// Noether energy `Σ_k (−1)^{k+1} ε_ij ẋ_{k,i} ẍ_{k,j}` built from the
/// oscillator coordinates.
pub fn energy_observable(spec: &FrequencySpectrum) -> QuadraticObservable {
    let mut terms = Vec::with_capacity(2 * spec.n());
    for k in 0..spec.n() {
        let sign = sign_pow(k + 1);
        let d1 = oscillator_row(spec, k, 0, 1);
        let d2 = oscillator_row(spec, k, 1, 1);
        let dd1 = oscillator_row(spec, k, 0, 2);
        let dd2 = oscillator_row(spec, k, 1, 2);
        terms.push(BilinearTerm::product(sign, d1, dd2));
        terms.push(BilinearTerm::product(-sign, d2, dd1));
    }
    QuadraticObservable::from_terms(spec.jet_dim(), terms).expect("dimensions match")
}

/// `½ Σ_k (−1)^k [(p_{k,1}² + ω_k² q_{k,1}²) − (p_{k,2}² + ω_k² q_{k,2}²)]`
/// evaluated on canonical coordinates.
pub fn alternating_oscillator_energy(spec: &FrequencySpectrum, coords: &DVector<f64>) -> f64 {
    let mut h = 0.0;
    for k in 0..spec.n() {
        let w2 = spec.squares()[k];
        let osc = |c: usize| {
            let r = canonical_pair_row(k, c);
            coords[r + 1].powi(2) + w2 * coords[r].powi(2)
        };
        h += 0.5 * sign_pow(k) * (osc(0) - osc(1));
    }
    h
}

/// `Σ_{(k,c)} w_{k,c} J_{k,c}` with `A` accumulated in double-double.
fn weighted_oscillators(spec: &FrequencySpectrum, weight: impl Fn(usize, usize) -> f64, modes: &[(usize, usize)]) -> QuadraticObservable {
    let (rows, _) = canonical_rows_dd(spec);
    let dim = spec.jet_dim();
    let mut a = vec![dd(0.0); dim * dim];
    let mut terms = Vec::with_capacity(2 * modes.len());
    for &(k, c) in modes {
        let r = canonical_pair_row(k, c);
        let w = dd(weight(k, c));
        let w2 = spec.precise().squares[k];
        for (row, f) in [(&rows[r + 1], w), (&rows[r], w * w2)] {
            for i in 0..dim {
                if row[i] == dd(0.0) {
                    continue;
                }
                for j in 0..dim {
                    a[i + j * dim] += row[i] * row[j] * f * 2.0;
                }
            }
            terms.push(BilinearTerm::square(round(f), round_row(row)));
        }
    }
    QuadraticObservable::from_factored_matrix(DMatrix::from_vec(dim, dim, a), terms)
}

/// `𝓗 = ½ Σ_k [γ_{k,1} J_{k,1} + γ_{k,2} J_{k,2}]`.
pub fn alt_hamiltonian_observable(spec: &FrequencySpectrum, g: &GammaWeights) -> Result<QuadraticObservable> {
    g.check_matches(spec)?;
    let modes: Vec<_> = (0..spec.n()).flat_map(|k| [(k, 0), (k, 1)]).collect();
    Ok(weighted_oscillators(spec, |k, c| 0.5 * g.get(k, c), &modes))
}

/// The `2n` integrals `J_{k,i} = p_{k,i}² + ω_k² q_{k,i}²`, mode-major.
pub fn mode_integrals(spec: &FrequencySpectrum) -> Vec<QuadraticObservable> {
    (0..spec.n())
        .flat_map(|k| [(k, 0), (k, 1)])
        .map(|m| weighted_oscillators(spec, |_, _| 1.0, &[m]))
        .collect()
}

pub fn mode_integral_name(k: usize, component: usize) -> String {
    format!("J_{k}_{}", component + 1)
}

/// Rotation-covariant bracket ansatz on `(x, ẋ, ẍ)`:
/// `{x_i^{(s)}, x_j^{(m)}} = a_sm δ_ij + d_sm ε_ij` with `a` antisymmetric
/// and `d` symmetric in `(s, m)`. Positions commute, so `d_00 = 0`; without
/// that constraint every `c` with `4c² ≠ f²ω²` admits a bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketAnsatz {
    pub a01: f64,
    pub a02: f64,
    pub a12: f64,
    pub d01: f64,
    pub d02: f64,
    pub d11: f64,
    pub d12: f64,
    pub d22: f64,
}

const ANTISYM_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
const SYM_PAIRS: [(usize, usize); 5] = [(0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

impl BracketAnsatz {
    fn from_slice(x: &[f64]) -> Self {
        Self {
            a01: x[0],
            a02: x[1],
            a12: x[2],
            d01: x[3],
            d02: x[4],
            d11: x[5],
            d12: x[6],
            d22: x[7],
        }
    }

    /// Basis matrices of the eight free constants, in field order.
    fn basis() -> Vec<DMatrix<f64>> {
        let mut out = Vec::with_capacity(9);
        for &(s, m) in &ANTISYM_PAIRS {
            let mut o = DMatrix::zeros(6, 6);
            for i in 0..2 {
                o[(jet_index(s, i), jet_index(m, i))] = 1.0;
                o[(jet_index(m, i), jet_index(s, i))] = -1.0;
            }
            out.push(o);
        }
        for &(s, m) in &SYM_PAIRS {
            let mut o = DMatrix::zeros(6, 6);
            for (i, j) in [(0, 1), (1, 0)] {
                let e = crate::poisson::epsilon(i, j);
                o[(jet_index(s, i), jet_index(m, j))] = e;
                o[(jet_index(m, i), jet_index(s, j))] = e;
            }
            out.push(o);
        }
        out
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let coeffs = [
            self.a01, self.a02, self.a12, self.d01, self.d02, self.d11, self.d12, self.d22,
        ];
        Self::basis()
            .into_iter()
            .zip(coeffs)
            .fold(DMatrix::zeros(6, 6), |acc, (b, c)| acc + b * c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniquenessReport {
    /// Largest drift of `W` along exact trajectories, relative to `1 + |W(0)|`.
    pub conserved_residual: f64,
    /// `‖L x − vec(M)‖ / ‖vec(M)‖` for the least-squares bracket constants.
    pub structure_residual: f64,
    pub ansatz: BracketAnsatz,
}

/// `W = b(ẍ_i + ω²x_i)² + c(ẋ_i² − 2x_iẍ_i − ω²x_i²) + f ε_ij ẋ_i ẍ_j` on the
/// third-order jet space.
pub fn third_order_ansatz(omega0: f64, b: f64, c: f64, f: f64) -> QuadraticObservable {
    let w2 = omega0 * omega0;
    let mut a = DMatrix::zeros(6, 6);
    // Adds the monomial `coef · u_p u_q` to the form `½ uᵀAu`.
    let mut add = |p: usize, q: usize, coef: f64| {
        if p == q {
            a[(p, p)] += 2.0 * coef;
        } else {
            a[(p, q)] += coef;
            a[(q, p)] += coef;
        }
    };
    for i in 0..2 {
        let (x, xd, xdd) = (jet_index(0, i), jet_index(1, i), jet_index(2, i));
        add(xdd, xdd, b);
        add(x, x, b * w2 * w2);
        add(xdd, x, 2.0 * b * w2);
        add(xd, xd, c);
        add(x, xdd, -2.0 * c);
        add(x, x, -c * w2);
    }
    add(jet_index(1, 0), jet_index(2, 1), f);
    add(jet_index(1, 1), jet_index(2, 0), -f);
    QuadraticObservable::new(a, DVector::zeros(6), 0.0).expect("symmetric by construction")
}

/// Tests whether `W` can be the Hamiltonian of the third-order model: fits
/// the rotation-covariant bracket constants so that `Ω A_W = M` in the
/// least-squares sense, and measures conservation of `W` along the free flow.
pub fn uniqueness_check(omega0: f64, b: f64, c: f64, f: f64) -> Result<UniquenessReport> {
    let spec = FrequencySpectrum::new(vec![omega0])?;
    let w = third_order_ansatz(omega0, b, c, f);
    let m = companion_matrix(&spec);

    let basis = BracketAnsatz::basis();
    let cols: Vec<DVector<f64>> = basis
        .iter()
        .map(|o| {
            let prod = o * w.a();
            DVector::from_column_slice(prod.as_slice())
        })
        .collect();
    let l = DMatrix::from_columns(&cols);
    let rhs = DVector::from_column_slice(m.matrix().as_slice());
    let svd = l.clone().svd(true, true);
    let x = svd
        .solve(&rhs, 1e-12 * svd.singular_values.max())
        .map_err(|_| Error::Singular("bracket ansatz least squares"))?;
    let structure_residual = (&l * &x - &rhs).norm() / rhs.norm();

    let prop = ExactPropagator::new(&spec)?;
    let samples = [
        [1.0, 0.0, 0.0, 1.0, -0.5, 0.25],
        [0.3, -0.7, 0.2, 0.9, 0.4, -0.6],
        [-1.2, 0.5, 0.8, -0.1, 0.3, 0.7],
    ];
    let mut conserved_residual: f64 = 0.0;
    for s in &samples {
        let start = PhaseState::new(DVector::from_column_slice(s), 0.0);
        let solution = prop.solve(&start)?;
        let w0 = w.eval(&start.u);
        for j in 0..=1000 {
            let t = 0.1 * j as f64;
            let v = w.eval(&solution.state_at(t).u);
            conserved_residual = conserved_residual.max((v - w0).abs() / (1.0 + w0.abs()));
        }
    }

    Ok(UniquenessReport {
        conserved_residual,
        structure_residual,
        ansatz: BracketAnsatz::from_slice(x.as_slice()),
    })
}
