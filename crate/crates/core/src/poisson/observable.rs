use nalgebra::{DMatrix, DVector};

use crate::dynamics::Observable;
use crate::error::{check_dim, Error, Result};
use crate::precise::Dd;

/// `w (l·u)(r·u)`; a square when `l == r`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearTerm {
    pub weight: f64,
    pub left: DVector<f64>,
    pub right: DVector<f64>,
}

impl BilinearTerm {
    pub fn product(weight: f64, left: DVector<f64>, right: DVector<f64>) -> Self {
        Self {
            weight,
            left,
            right,
        }
    }

    pub fn square(weight: f64, form: DVector<f64>) -> Self {
        Self {
            weight,
            left: form.clone(),
            right: form,
        }
    }
}

/// `½ uᵀAu + bᵀu + c` with symmetric `A`.
///
/// Observables assembled from products of linear forms keep those factors
/// and evaluate through them: the dense `A` of a Hamiltonian expressed in
/// jet coordinates suffers heavy cancellation at large derivative orders,
/// while the factored sum does not. Brackets and vector fields always use
/// the dense representation.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticObservable {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: f64,
    factors: Option<Vec<BilinearTerm>>,
    /// `A` in double-double when it was assembled that way.
    precise_a: Option<DMatrix<Dd>>,
}

impl QuadraticObservable {
    /// Symmetry of `A` is checked to `1e-12` relative and then enforced exactly.
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Contract("quadratic part must be square".into()));
        }
        check_dim("linear part", a.nrows(), b.len())?;
        let asym = (&a - a.transpose()).amax();
        if asym > 1e-12 * a.amax().max(1.0) {
            return Err(Error::Contract(format!(
                "quadratic part not symmetric (asymmetry {asym:e})"
            )));
        }
        let a = (&a + a.transpose()) * 0.5;
        Ok(Self {
            a,
            b,
            c,
            factors: None,
            precise_a: None,
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            a: DMatrix::zeros(dim, dim),
            b: DVector::zeros(dim),
            c: 0.0,
            factors: None,
            precise_a: None,
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self {
            c,
            ..Self::zero(dim)
        }
    }

    pub fn linear(b: DVector<f64>) -> Self {
        let dim = b.len();
        Self { b, ..Self::zero(dim) }
    }

    /// The coordinate functional `u ↦ u[index]`.
    pub fn coordinate(dim: usize, index: usize) -> Self {
        let mut b = DVector::zeros(dim);
        b[index] = 1.0;
        Self::linear(b)
    }

    /// As [`Self::from_terms`] with `A` already assembled more accurately
    /// than the factors themselves allow.
    pub(crate) fn from_factored_matrix(a: DMatrix<Dd>, terms: Vec<BilinearTerm>) -> Self {
        let dim = a.nrows();
        Self {
            a: a.map(crate::precise::round),
            b: DVector::zeros(dim),
            c: 0.0,
            factors: Some(terms),
            precise_a: Some(a),
        }
    }

    pub(crate) fn precise_a(&self) -> Option<&DMatrix<Dd>> {
        self.precise_a.as_ref()
    }

    /// `Σ_r w_r (l_r·u)(m_r·u)`.
    pub fn from_terms(dim: usize, terms: Vec<BilinearTerm>) -> Result<Self> {
        let mut a = DMatrix::zeros(dim, dim);
        for t in &terms {
            check_dim("bilinear term", dim, t.left.len())?;
            check_dim("bilinear term", dim, t.right.len())?;
            a += (&t.left * t.right.transpose() + &t.right * t.left.transpose()) * t.weight;
        }
        Ok(Self {
            a,
            b: DVector::zeros(dim),
            c: 0.0,
            factors: Some(terms),
            precise_a: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn factors(&self) -> Option<&[BilinearTerm]> {
        self.factors.as_deref()
    }

    pub fn eval(&self, u: &DVector<f64>) -> f64 {
        let quad = match &self.factors {
            Some(terms) => terms
                .iter()
                .map(|t| t.weight * t.left.dot(u) * t.right.dot(u))
                .sum(),
            None => 0.5 * u.dot(&(&self.a * u)),
        };
        quad + self.b.dot(u) + self.c
    }

    /// Same value through the dense quadratic form, ignoring any factors.
    pub fn eval_dense(&self, u: &DVector<f64>) -> f64 {
        0.5 * u.dot(&(&self.a * u)) + self.b.dot(u) + self.c
    }

    pub fn gradient(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.a * u + &self.b
    }

    pub fn is_homogeneous_quadratic(&self) -> bool {
        self.b.iter().all(|v| *v == 0.0) && self.c == 0.0
    }

    /// Largest coefficient difference across `A`, `b` and `c`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        (&self.a - &other.a)
            .amax()
            .max((&self.b - &other.b).amax())
            .max((self.c - other.c).abs())
    }

    /// Largest coefficient magnitude.
    pub fn coefficient_scale(&self) -> f64 {
        self.a.amax().max(self.b.amax()).max(self.c.abs())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            a: &self.a * factor,
            b: &self.b * factor,
            c: self.c * factor,
            factors: self.factors.as_ref().map(|ts| {
                ts.iter()
                    .map(|t| BilinearTerm {
                        weight: t.weight * factor,
                        ..t.clone()
                    })
                    .collect()
            }),
            precise_a: self.precise_a.as_ref().map(|a| a.map(|x| x * factor)),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dim("observable sum", self.dim(), other.dim())?;
        let factors = match (&self.factors, &other.factors) {
            (Some(x), Some(y)) if self.b.amax() == 0.0 && other.b.amax() == 0.0 => {
                Some(x.iter().chain(y.iter()).cloned().collect())
            }
            _ => None,
        };
        Ok(Self {
            a: &self.a + &other.a,
            b: &self.b + &other.b,
            c: self.c + other.c,
            factors,
            precise_a: match (&self.precise_a, &other.precise_a) {
                (Some(x), Some(y)) => Some(x.zip_map(y, |p, q| p + q)),
                _ => None,
            },
        })
    }
}

impl Observable for QuadraticObservable {
    fn value(&self, u: &DVector<f64>) -> f64 {
        self.eval(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factored_and_dense_agree() {
        let l = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let r = DVector::from_vec(vec![0.0, 1.0, 3.0]);
        let f = QuadraticObservable::from_terms(
            3,
            vec![BilinearTerm::product(0.7, l.clone(), r.clone()), BilinearTerm::square(-1.5, r.clone())],
        )
        .unwrap();
        let u = DVector::from_vec(vec![0.3, -1.1, 2.0]);
        let expected = 0.7 * l.dot(&u) * r.dot(&u) - 1.5 * r.dot(&u).powi(2);
        assert!((f.eval(&u) - expected).abs() < 1e-13);
        assert!((f.eval_dense(&u) - expected).abs() < 1e-13);
        assert!(f.is_homogeneous_quadratic());
    }

    #[test]
    fn rejects_asymmetric() {
        let mut a = DMatrix::zeros(2, 2);
        a[(0, 1)] = 1.0;
        assert!(QuadraticObservable::new(a, DVector::zeros(2), 0.0).is_err());
        assert!(QuadraticObservable::new(DMatrix::zeros(2, 2), DVector::zeros(3), 0.0).is_err());
    }

    #[test]
    fn coordinate_functional() {
        let x = QuadraticObservable::coordinate(4, 2);
        let u = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(x.eval(&u), 3.0);
        assert_eq!(x.gradient(&u)[2], 1.0);
    }
}
