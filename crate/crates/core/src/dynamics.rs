//! Equations of motion on the jet vector.
//!
//! The phase space is the stack `x_i^{(s)}`, `s = 0..=2n`, `i ∈ {1, 2}`,
//! stored derivative-major: the entry for derivative order `s` and spatial
//! component `c` (0-based) lives at `2s + c`. The free dynamics is the linear
//! system `u̇ = M u` with the companion matrix `M`.

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{check_dim, Error, Result};
use crate::spectrum::FrequencySpectrum;

/// Index of `x_{component+1}^{(order)}` in the jet vector.
#[inline]
pub fn jet_index(order: usize, component: usize) -> usize {
    debug_assert!(component < 2);
    2 * order + component
}

/// Column label used in tables and dumps: `x1`, `d3_x2`, ...
pub fn jet_label(order: usize, component: usize) -> String {
    if order == 0 {
        format!("x{}", component + 1)
    } else {
        format!("d{}_x{}", order, component + 1)
    }
}

/// A point of the jet space at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub u: DVector<f64>,
    pub t: f64,
}

impl PhaseState {
    pub fn new(u: DVector<f64>, t: f64) -> Self {
        Self { u, t }
    }

    /// Checks length `4n + 2` and finiteness.
    pub fn for_spectrum(spec: &FrequencySpectrum, values: &[f64], t: f64) -> Result<Self> {
        check_dim("phase state", spec.jet_dim(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) || !t.is_finite() {
            return Err(Error::Contract("phase state entries must be finite".into()));
        }
        Ok(Self::new(DVector::from_column_slice(values), t))
    }

    pub fn zeros(spec: &FrequencySpectrum) -> Self {
        Self::new(DVector::zeros(spec.jet_dim()), 0.0)
    }

    pub fn get(&self, order: usize, component: usize) -> f64 {
        self.u[jet_index(order, component)]
    }
}

/// A linear vector field `u ↦ F u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearField {
    matrix: DMatrix<f64>,
}

impl LinearField {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.matrix * u
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Companion matrix of the `(2n+1)`-order equation of motion: shift rows
/// `x^{(s)} → x^{(s+1)}` for `s < 2n`, and
/// `x_i^{(2n+1)} = −Σ_{k<n} σ_k x_i^{(2k+1)}` on the top rows.
pub fn companion_matrix(spec: &FrequencySpectrum) -> LinearField {
    let n = spec.n();
    let dim = spec.jet_dim();
    let mut m = DMatrix::zeros(dim, dim);
    for c in 0..2 {
        for s in 0..2 * n {
            m[(jet_index(s, c), jet_index(s + 1, c))] = 1.0;
        }
        for k in 0..n {
            m[(jet_index(2 * n, c), jet_index(2 * k + 1, c))] = -spec.sigmas()[k];
        }
    }
    LinearField::new(m)
}

/// Value of the `order`-th derivative of `cos(ωτ)` and `sin(ωτ)`.
fn trig_derivative(omega: f64, tau: f64, order: usize) -> (f64, f64) {
    let (s, c) = (omega * tau).sin_cos();
    let scale = omega.powi(order as i32);
    let (dc, ds) = match order % 4 {
        0 => (c, s),
        1 => (-s, c),
        2 => (-c, -s),
        _ => (s, -c),
    };
    (scale * dc, scale * ds)
}

/// Rows `d = 0..rows` of the basis `{1, cos ω_k τ, sin ω_k τ}` differentiated `d` times.
fn basis_matrix(omegas: &[f64], tau: f64, rows: usize) -> DMatrix<f64> {
    let cols = 2 * omegas.len() + 1;
    let mut f = DMatrix::zeros(rows, cols);
    for d in 0..rows {
        f[(d, 0)] = if d == 0 { 1.0 } else { 0.0 };
        for (k, &w) in omegas.iter().enumerate() {
            let (c, s) = trig_derivative(w, tau, d);
            f[(d, 1 + 2 * k)] = c;
            f[(d, 2 + 2 * k)] = s;
        }
    }
    f
}

/// Closed-form solver for the free equation of motion. The factorization
/// of the amplitude-fit matrix is computed once per spectrum.
#[derive(Debug, Clone)]
pub struct ExactPropagator {
    omegas: Vec<f64>,
    fit: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl ExactPropagator {
    pub fn new(spec: &FrequencySpectrum) -> Result<Self> {
        let omegas = spec.omegas().to_vec();
        let rows = spec.top_order() + 1;
        let fit = basis_matrix(&omegas, 0.0, rows).lu();
        if !fit.is_invertible() {
            return Err(Error::Singular("modal amplitude fit"));
        }
        Ok(Self { omegas, fit })
    }

    pub fn dim(&self) -> usize {
        4 * self.omegas.len() + 2
    }

    /// Fits the amplitudes of `{1, cos ω_k t, sin ω_k t}` to the derivative
    /// stack of each spatial component.
    pub fn solve(&self, state: &PhaseState) -> Result<ModalSolution> {
        check_dim("phase state", self.dim(), state.u.len())?;
        let rows = 2 * self.omegas.len() + 1;
        let mut amplitudes = Vec::with_capacity(2);
        for c in 0..2 {
            let stack = DVector::from_fn(rows, |d, _| state.u[jet_index(d, c)]);
            let amps = self
                .fit
                .solve(&stack)
                .ok_or(Error::Singular("modal amplitude fit"))?;
            amplitudes.push(amps);
        }
        Ok(ModalSolution {
            omegas: self.omegas.clone(),
            t0: state.t,
            amplitudes,
        })
    }

    /// State at `state.t + dt`.
    pub fn propagate(&self, state: &PhaseState, dt: f64) -> Result<PhaseState> {
        Ok(self.solve(state)?.state_at(state.t + dt))
    }
}

/// `x_c(t) = a_0 + Σ_k (a_k cos ω_k(t−t_0) + b_k sin ω_k(t−t_0))` per component.
#[derive(Debug, Clone)]
pub struct ModalSolution {
    omegas: Vec<f64>,
    t0: f64,
    amplitudes: Vec<DVector<f64>>,
}

impl ModalSolution {
    /// `x_{component+1}^{(order)}(t)` for any derivative order.
    pub fn derivative(&self, order: usize, component: usize, t: f64) -> f64 {
        let tau = t - self.t0;
        let a = &self.amplitudes[component];
        let mut v = if order == 0 { a[0] } else { 0.0 };
        for (k, &w) in self.omegas.iter().enumerate() {
            let (c, s) = trig_derivative(w, tau, order);
            v += a[1 + 2 * k] * c + a[2 + 2 * k] * s;
        }
        v
    }

    pub fn state_at(&self, t: f64) -> PhaseState {
        let top = 2 * self.omegas.len();
        let tau = t - self.t0;
        let basis = basis_matrix(&self.omegas, tau, top + 1);
        let mut u = DVector::zeros(2 * top + 2);
        for c in 0..2 {
            let stack = &basis * &self.amplitudes[c];
            for d in 0..=top {
                u[jet_index(d, c)] = stack[d];
            }
        }
        PhaseState::new(u, t)
    }

    pub fn amplitudes(&self, component: usize) -> &DVector<f64> {
        &self.amplitudes[component]
    }
}

/// Exact solution at `state.t + t`.
pub fn exact_propagate(spec: &FrequencySpectrum, state: &PhaseState, t: f64) -> Result<PhaseState> {
    ExactPropagator::new(spec)?.propagate(state, t)
}

/// One classical fourth-order Runge–Kutta step of an autonomous field.
pub fn rk4_step<F>(field: &F, state: &PhaseState, h: f64) -> Result<PhaseState>
where
    F: Fn(&DVector<f64>) -> DVector<f64> + ?Sized,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Contract(format!("step size must be positive, got {h}")));
    }
    let finite = |v: DVector<f64>| -> Result<DVector<f64>> {
        if v.iter().all(|x| x.is_finite()) {
            Ok(v)
        } else {
            Err(Error::Integration { t: state.t })
        }
    };
    let u = &state.u;
    let k1 = finite(field(u))?;
    let k2 = finite(field(&(u + &k1 * (h / 2.0))))?;
    let k3 = finite(field(&(u + &k2 * (h / 2.0))))?;
    let k4 = finite(field(&(u + &k3 * h)))?;
    let next = u + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    if next.iter().any(|x| !x.is_finite()) {
        return Err(Error::Integration { t: state.t + h });
    }
    Ok(PhaseState::new(next, state.t + h))
}

/// A scalar function on the jet space.
pub trait Observable {
    fn value(&self, u: &DVector<f64>) -> f64;
}

impl<F: Fn(&DVector<f64>) -> f64> Observable for F {
    fn value(&self, u: &DVector<f64>) -> f64 {
        self(u)
    }
}

/// How states are advanced between grid points.
pub enum Flow<'a> {
    Exact(&'a ExactPropagator),
    /// Fixed-step RK4 with step at most `dt`; each grid interval is split
    /// into equal steps.
    Stepped {
        field: &'a dyn Fn(&DVector<f64>) -> DVector<f64>,
        dt: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub u: Vec<f64>,
    pub values: Vec<f64>,
}

/// Sampled states with observable columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    n: usize,
    observables: Vec<String>,
    rows: Vec<TrajectoryRow>,
}

/// Samples `flow` on `grid` (strictly increasing, starting at `state.t`).
pub fn trajectory(
    flow: &Flow<'_>,
    state: &PhaseState,
    grid: &[f64],
    observables: &[(&str, &dyn Observable)],
) -> Result<TrajectoryTable> {
    let dim = state.u.len();
    if dim < 6 || !(dim - 2).is_multiple_of(4) {
        return Err(Error::Contract(format!("jet dimension {dim} is not 4n+2")));
    }
    if let Some(&first) = grid.first() {
        if (first - state.t).abs() > 1e-12 * (1.0 + state.t.abs()) {
            return Err(Error::Contract(format!(
                "grid starts at {first}, state is at {}",
                state.t
            )));
        }
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Contract("time grid must be strictly increasing".into()));
    }

    let mut table = TrajectoryTable {
        n: (dim - 2) / 4,
        observables: observables.iter().map(|(name, _)| name.to_string()).collect(),
        rows: Vec::with_capacity(grid.len()),
    };
    let mut push = |s: &PhaseState, t: f64| {
        table.rows.push(TrajectoryRow {
            t,
            u: s.u.iter().copied().collect(),
            values: observables.iter().map(|(_, o)| o.value(&s.u)).collect(),
        });
    };

    match flow {
        Flow::Exact(prop) => {
            let solution = prop.solve(state)?;
            for (j, &t) in grid.iter().enumerate() {
                if j == 0 {
                    push(state, t);
                } else {
                    push(&solution.state_at(t), t);
                }
            }
        }
        Flow::Stepped { field, dt } => {
            if !(*dt > 0.0) {
                return Err(Error::Contract(format!("step size must be positive, got {dt}")));
            }
            let mut current = state.clone();
            for (j, &t) in grid.iter().enumerate() {
                if j > 0 {
                    let span = t - current.t;
                    let steps = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
                    let h = span / steps as f64;
                    for _ in 0..steps {
                        current = rk4_step(*field, &current, h)?;
                    }
                    current.t = t;
                }
                push(&current, t);
            }
        }
    }
    Ok(table)
}

/// Evenly spaced grid `0, dt, 2dt, …` up to `t_end` (inclusive when it is a
/// whole number of steps).
pub fn uniform_grid(t0: f64, t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && dt.is_finite()) || !t_end.is_finite() || t_end < t0 {
        return Err(Error::Contract(format!(
            "invalid time grid: t_end = {t_end}, dt = {dt}"
        )));
    }
    let steps = ((t_end - t0) / dt + 1e-9).floor() as usize;
    Ok((0..=steps).map(|j| t0 + j as f64 * dt).collect())
}

impl TrajectoryTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn observables(&self) -> &[String] {
        &self.observables
    }

    pub fn rows(&self) -> &[TrajectoryRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Values of one observable column.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.observables.iter().position(|o| o == name)?;
        Some(self.rows.iter().map(|r| r.values[idx]).collect())
    }

    /// Largest `|v(t) − v(t_0)|` of an observable column.
    pub fn drift(&self, name: &str) -> Option<f64> {
        let col = self.column(name)?;
        let first = *col.first()?;
        Some(col.iter().fold(0.0, |acc: f64, v| acc.max((v - first).abs())))
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        for s in 0..=2 * self.n {
            for c in 0..2 {
                h.push(jet_label(s, c));
            }
        }
        h.extend(self.observables.iter().cloned());
        h
    }

    /// CSV with a header row; floats use the shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(self.header()).expect("in-memory write");
        for row in &self.rows {
            let record = std::iter::once(row.t)
                .chain(row.u.iter().copied())
                .chain(row.values.iter().copied())
                .map(format_float);
            w.write_record(record).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let header: Vec<String> = r
            .headers()
            .map_err(|e| Error::Table(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.first().map(String::as_str) != Some("t") {
            return Err(Error::Table("first column must be t".into()));
        }
        let jet_cols = header
            .iter()
            .skip(1)
            .take_while(|h| h.starts_with('x') || h.starts_with('d'))
            .count();
        if jet_cols < 6 || (jet_cols - 2) % 4 != 0 {
            return Err(Error::Table(format!("{jet_cols} jet columns is not 4n+2")));
        }
        let n = (jet_cols - 2) / 4;
        let observables: Vec<String> = header[1 + jet_cols..].to_vec();
        let mut table = TrajectoryTable {
            n,
            observables,
            rows: Vec::new(),
        };
        if table.header() != header {
            return Err(Error::Table("unexpected jet column layout".into()));
        }
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::Table(e.to_string()))?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| Error::Table(format!("{f}: {e}"))))
                .collect::<Result<_>>()?;
            if vals.len() != header.len() {
                return Err(Error::Table("ragged row".into()));
            }
            table.rows.push(TrajectoryRow {
                t: vals[0],
                u: vals[1..1 + jet_cols].to_vec(),
                values: vals[1 + jet_cols..].to_vec(),
            });
        }
        Ok(table)
    }
}

/// Deterministic float formatting shared by all text outputs.
pub fn format_float(x: f64) -> String {
    format!("{x}")
}
