//! Regression bases for smooth fits on an interval: natural cubic splines
//! and Legendre polynomials. Both include the constant column.

/// A basis fixed by its support `[lo, hi]`; inputs are mapped to the unit
/// interval before evaluation so the design stays well conditioned.
#[derive(Debug, Clone, PartialEq)]
pub enum Basis {
    /// Natural cubic spline with the given knots on the unit scale
    /// (boundary knots included). `knots.len()` columns.
    NaturalSpline { lo: f64, hi: f64, knots: Vec<f64> },
    /// Legendre polynomials of degree `0..=degree`.
    Polynomial { lo: f64, hi: f64, degree: usize },
}

impl Basis {
    /// Natural spline with `df` non-constant columns: `df - 1` interior
    /// knots placed at quantiles of `x`, boundary knots at the range.
    pub fn natural_spline(x: &[f64], df: usize) -> Self {
        assert!(df >= 1, "spline needs at least one degree of freedom");
        let sorted = super::sorted_copy(x);
        let lo = sorted[0];
        let hi = *sorted.last().unwrap();
        let width = if hi > lo { hi - lo } else { 1.0 };
        let mut knots = vec![0.0];
        for k in 1..df {
            let q = super::quantile_sorted(&sorted, k as f64 / df as f64);
            knots.push((q - lo) / width);
        }
        knots.push(1.0);
        Basis::NaturalSpline { lo, hi, knots }
    }

    pub fn polynomial(x: &[f64], degree: usize) -> Self {
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Basis::Polynomial { lo, hi, degree }
    }

    pub fn n_columns(&self) -> usize {
        match self {
            Basis::NaturalSpline { knots, .. } => knots.len(),
            Basis::Polynomial { degree, .. } => degree + 1,
        }
    }

    fn unit(lo: f64, hi: f64, x: f64) -> f64 {
        if hi > lo {
            (x - lo) / (hi - lo)
        } else {
            0.0
        }
    }

    /// Basis row at `x`.
    pub fn row(&self, x: f64) -> Vec<f64> {
        match self {
            Basis::NaturalSpline { lo, hi, knots } => {
                let t = Self::unit(*lo, *hi, x);
                let k = knots.len();
                let last = knots[k - 1];
                let cube = |v: f64| if v > 0.0 { v * v * v } else { 0.0 };
                let d = |j: usize| (cube(t - knots[j]) - cube(t - last)) / (last - knots[j]);
                let mut row = Vec::with_capacity(k);
                row.push(1.0);
                row.push(t);
                if k > 2 {
                    let d_pen = d(k - 2);
                    for j in 0..k - 2 {
                        row.push(d(j) - d_pen);
                    }
                }
                row
            }
            Basis::Polynomial { lo, hi, degree } => {
                let t = 2.0 * Self::unit(*lo, *hi, x) - 1.0;
                let mut row = Vec::with_capacity(degree + 1);
                row.push(1.0);
                if *degree >= 1 {
                    row.push(t);
                }
                for n in 1..*degree {
                    let n_f = n as f64;
                    let next = ((2.0 * n_f + 1.0) * t * row[n] - n_f * row[n - 1]) / (n_f + 1.0);
                    row.push(next);
                }
                row
            }
        }
    }

    pub fn design(&self, x: &[f64]) -> nalgebra::DMatrix<f64> {
        let p = self.n_columns();
        nalgebra::DMatrix::from_fn(x.len(), p, |i, j| self.row(x[i])[j])
    }
}

/// Ordinary least-squares fit of `y` on a basis; returns coefficients.
pub fn least_squares(basis: &Basis, x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
    let design = basis.design(x);
    let yv = nalgebra::DVector::from_column_slice(y);
    let xtx = design.transpose() * &design;
    let xty = design.transpose() * yv;
    xtx.cholesky().map(|c| c.solve(&xty).iter().copied().collect())
}

pub fn evaluate(basis: &Basis, coef: &[f64], x: f64) -> f64 {
    basis.row(x).iter().zip(coef).map(|(b, c)| b * c).sum()
}
