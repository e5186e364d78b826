//! Double-double arithmetic for entries and products that lose too many
//! digits to cancellation in plain `f64`.

use nalgebra::DMatrix;
use twofloat::TwoFloat;

pub(crate) type Dd = TwoFloat;

pub(crate) fn dd(x: f64) -> Dd {
    Dd::from(x)
}

pub(crate) fn round(x: Dd) -> f64 {
    x.hi() + x.lo()
}

/// `Σ_r a_r b_r` with every product and partial sum kept in double-double.
pub(crate) fn dot(a: impl IntoIterator<Item = f64>, b: impl IntoIterator<Item = f64>) -> Dd {
    a.into_iter()
        .zip(b)
        .fold(dd(0.0), |acc, (x, y)| acc + Dd::new_mul(x, y))
}

fn product_dd(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<Dd> {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions");
    let mut out = vec![dd(0.0); a.nrows() * b.ncols()];
    for j in 0..b.ncols() {
        for i in 0..a.nrows() {
            out[i + j * a.nrows()] = dot(a.row(i).iter().copied(), b.column(j).iter().copied());
        }
    }
    out
}

/// `a · b` with each entry accumulated in double-double and rounded once.
pub(crate) fn mul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let out = product_dd(a, b);
    DMatrix::from_iterator(a.nrows(), b.ncols(), out.into_iter().map(round))
}

/// `a · b` for double-double operands, rounded once.
pub(crate) fn mul_dd(a: &DMatrix<Dd>, b: &DMatrix<Dd>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions");
    DMatrix::from_fn(a.nrows(), b.ncols(), |i, j| {
        round((0..a.ncols()).fold(dd(0.0), |acc, r| acc + a[(i, r)] * b[(r, j)]))
    })
}

fn mul_dd_full(a: &DMatrix<Dd>, b: &DMatrix<Dd>) -> DMatrix<Dd> {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions");
    DMatrix::from_fn(a.nrows(), b.ncols(), |i, j| {
        (0..a.ncols()).fold(dd(0.0), |acc, r| acc + a[(i, r)] * b[(r, j)])
    })
}

/// `t · m · tᵀ` entirely in double-double, rounded once.
pub(crate) fn congruence_dd(t: &DMatrix<Dd>, m: &DMatrix<Dd>) -> DMatrix<f64> {
    mul_dd_full(&mul_dd_full(t, m), &t.transpose()).map(round)
}

/// `a · b · c` with the intermediate product kept in double-double.
pub(crate) fn mul3(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    let ab = product_dd(a, b);
    let rows = a.nrows();
    assert_eq!(b.ncols(), c.nrows(), "inner dimensions");
    DMatrix::from_fn(rows, c.ncols(), |i, j| {
        let mut acc = dd(0.0);
        for r in 0..b.ncols() {
            let x = ab[i + r * rows];
            let y = c[(r, j)];
            acc += Dd::new_mul(x.hi(), y) + Dd::new_mul(x.lo(), y);
        }
        round(acc)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_recovers_cancelled_digits() {
        let a = [1e16, 1.0, -1e16];
        let b = [1.0, 1.0, 1.0];
        assert_eq!(round(dot(a, b)), 1.0);
        assert_eq!(a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>(), 0.0);
    }

    #[test]
    fn products_match_plain_products_on_exact_data() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, -1.0, 2.0, 0.5, 1.0]);
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 3.0]);
        assert_eq!(mul(&a, &b), &a * &b);
        assert_eq!(mul3(&a, &b, &c), &a * &b * &c);
    }
}
