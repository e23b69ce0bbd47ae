//! Truncated power series and mechanical order-condition checks.
//!
//! A method with weight matrix `W = [q_0 .. q_p]` has stage order `q = p`
//! and order `p` when, as formal series in `z`,
//!
//! ```text
//! e^{cz}     = z A e^{cz} + U w(z) + O(z^{p+1})
//! e^z w(z)   = z B e^{cz} + V w(z) + O(z^{p+1}),     w(z) = sum_k q_k z^k
//! ```
//!
//! The residuals below are the largest absolute coefficient mismatch over
//! all rows and the checked powers of `z`.

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tableau::{GlmTableau, WeightMatrix};

/// Extra series terms carried beyond `z^p`.
pub const GUARD_TERMS: usize = 2;

/// Coefficients `a_0 .. a_K` of `sum_k a_k z^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
}

impl TruncatedSeries {
    pub fn zeros(order: usize) -> Self {
        Self {
            coeffs: vec![0.0; order + 1],
        }
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut s = Self::zeros(order);
        s.coeffs[0] = value;
        s
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "a series needs at least one coefficient"
        );
        Self { coeffs }
    }

    /// Truncation order `K`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|a| a * factor).collect(),
        }
    }

    /// Multiplication by `z`; the top coefficient falls off.
    pub fn shift(&self) -> Self {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[1..].copy_from_slice(&self.coeffs[..self.coeffs.len() - 1]);
        Self { coeffs }
    }

    /// Division by `z` of a series whose constant term vanishes. The result
    /// has truncation order `K - 1`.
    pub fn unshift(&self) -> Self {
        assert!(self.order() >= 1, "cannot divide an order-0 series by z");
        Self {
            coeffs: self.coeffs[1..].to_vec(),
        }
    }

    /// Value at `z`, summing all stored terms.
    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &a| acc * z + a)
    }

    fn common_order(&self, other: &Self) -> usize {
        self.order().min(other.order())
    }
}

/// `e^{cz}` truncated at `z^K`: coefficients `c^k / k!`.
pub fn exp_series(c: f64, order: usize) -> TruncatedSeries {
    let mut coeffs = Vec::with_capacity(order + 1);
    let mut term = 1.0;
    for k in 0..=order {
        if k > 0 {
            term *= c / k as f64;
        }
        coeffs.push(term);
    }
    TruncatedSeries { coeffs }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: Self) -> TruncatedSeries {
        let k = self.common_order(rhs);
        TruncatedSeries {
            coeffs: (0..=k).map(|i| self.coeffs[i] + rhs.coeffs[i]).collect(),
        }
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: Self) -> TruncatedSeries {
        let k = self.common_order(rhs);
        TruncatedSeries {
            coeffs: (0..=k).map(|i| self.coeffs[i] - rhs.coeffs[i]).collect(),
        }
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: Self) -> TruncatedSeries {
        let k = self.common_order(rhs);
        let coeffs = (0..=k)
            .map(|n| (0..=n).map(|i| self.coeffs[i] * rhs.coeffs[n - i]).sum())
            .collect();
        TruncatedSeries { coeffs }
    }
}

/// A column of series sharing one truncation order.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesVector {
    pub entries: Vec<TruncatedSeries>,
}

impl SeriesVector {
    pub fn order(&self) -> usize {
        self.entries.first().map_or(0, TruncatedSeries::order)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `[e^{c_1 z}, ..., e^{c_s z}]^T`.
    pub fn exp(c: &[f64], order: usize) -> Self {
        Self {
            entries: c.iter().map(|&ci| exp_series(ci, order)).collect(),
        }
    }

    /// `w(z) = sum_{k=0}^{p} q_k z^k` from the first `p + 1` columns of `W`.
    pub fn from_weights(w: &WeightMatrix, p: usize, order: usize) -> Self {
        let entries = (0..w.rows())
            .map(|i| {
                let mut s = TruncatedSeries::zeros(order);
                for k in 0..=p.min(order) {
                    s.coeffs[k] = w.w[(i, k)];
                }
                s
            })
            .collect();
        Self { entries }
    }

    /// Real matrix times series vector.
    pub fn apply(m: &DMatrix<f64>, x: &SeriesVector) -> Self {
        assert_eq!(m.ncols(), x.len(), "matrix/series shape mismatch");
        let order = x.order();
        let entries = (0..m.nrows())
            .map(|i| {
                let mut acc = TruncatedSeries::zeros(order);
                for (j, xj) in x.entries.iter().enumerate() {
                    let mij = m[(i, j)];
                    if mij != 0.0 {
                        for (a, b) in acc.coeffs.iter_mut().zip(&xj.coeffs) {
                            *a += mij * b;
                        }
                    }
                }
                acc
            })
            .collect();
        Self { entries }
    }

    pub fn shift(&self) -> Self {
        Self {
            entries: self.entries.iter().map(TruncatedSeries::shift).collect(),
        }
    }

    /// Entrywise product with a scalar series.
    pub fn times(&self, s: &TruncatedSeries) -> Self {
        Self {
            entries: self.entries.iter().map(|e| e * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Largest `|coefficient|` over all entries and powers `z^0 .. z^max_power`.
    pub fn max_abs_through(&self, max_power: usize) -> f64 {
        self.entries
            .iter()
            .flat_map(|e| e.coeffs.iter().take(max_power + 1))
            .fold(0.0, |m, &a| m.max(a.abs()))
    }
}

fn check_weights(t: &GlmTableau, w: &WeightMatrix, p: usize) -> Result<()> {
    if w.rows() != t.r() || w.w.ncols() < p + 1 {
        return Err(Error::dims(
            "weight matrix",
            format!("{}x{}", t.r(), p + 1),
            format!("{}x{}", w.rows(), w.w.ncols()),
        ));
    }
    Ok(())
}

/// Stage-order residual with truncation order `K = p + 2`.
pub fn stage_order_residual(t: &GlmTableau, w: &WeightMatrix, p: usize, q: usize) -> Result<f64> {
    stage_order_residual_truncated(t, w, p, q, p + GUARD_TERMS)
}

/// Stage-order residual evaluated with an explicit truncation order `K >= p + 1`.
///
/// For `q = p` the defect of `e^{cz} - z A e^{cz} - U w(z)` must vanish
/// through `z^p`. For `q = p - 1` the `z^p` coefficient must equal
/// `c^p/p! - A c^{p-1}/(p-1)! - U q_p`.
pub fn stage_order_residual_truncated(
    t: &GlmTableau,
    w: &WeightMatrix,
    p: usize,
    q: usize,
    order: usize,
) -> Result<f64> {
    if !(q == p || q + 1 == p) {
        return Err(Error::UnsupportedStageOrder { p, q });
    }
    check_weights(t, w, p)?;
    let order = order.max(p + 1);
    let c = t.c.as_slice();
    let e_cz = SeriesVector::exp(c, order);
    let wz = SeriesVector::from_weights(w, p, order);
    let rhs = SeriesVector::apply(&t.a, &e_cz)
        .shift()
        .add(&SeriesVector::apply(&t.u, &wz));
    let mut defect = e_cz.sub(&rhs);
    if q + 1 == p {
        // Subtract the permitted z^p term.
        let fact_p: f64 = (1..=p).map(|k| k as f64).product();
        let fact_pm1 = fact_p / p as f64;
        let c_pm1 =
            nalgebra::DVector::from_iterator(c.len(), c.iter().map(|ci| ci.powi(p as i32 - 1)));
        let a_c = &t.a * c_pm1;
        let u_q = &t.u * w.q(p);
        for (i, entry) in defect.entries.iter_mut().enumerate() {
            let allowed = c[i].powi(p as i32) / fact_p - a_c[i] / fact_pm1 - u_q[i];
            entry.coeffs[p] -= allowed;
        }
    }
    Ok(defect.max_abs_through(p))
}

/// Order residual with truncation order `K = p + 2`.
pub fn order_residual(t: &GlmTableau, w: &WeightMatrix, p: usize) -> Result<f64> {
    order_residual_truncated(t, w, p, p + GUARD_TERMS)
}

/// Largest coefficient of `e^z w(z) - z B e^{cz} - V w(z)` through `z^p`.
pub fn order_residual_truncated(
    t: &GlmTableau,
    w: &WeightMatrix,
    p: usize,
    order: usize,
) -> Result<f64> {
    check_weights(t, w, p)?;
    let order = order.max(p + 1);
    let e_cz = SeriesVector::exp(t.c.as_slice(), order);
    let wz = SeriesVector::from_weights(w, p, order);
    let lhs = wz.times(&exp_series(1.0, order));
    let rhs = SeriesVector::apply(&t.b, &e_cz)
        .shift()
        .add(&SeriesVector::apply(&t.v, &wz));
    Ok(lhs.sub(&rhs).max_abs_through(p))
}

/// Dense-output residual with truncation order `K = p + 2`.
pub fn termination_residual(
    b_tilde: &DMatrix<f64>,
    v_tilde: &DMatrix<f64>,
    t: &GlmTableau,
    w: &WeightMatrix,
    p: usize,
) -> Result<f64> {
    termination_residual_truncated(b_tilde, v_tilde, t, w, p, p + GUARD_TERMS)
}

/// Largest coefficient of `z^k e^z - z (B~ e^{cz})_k - (V~ w(z))_k` through
/// `z^p`, for each row `k` of `B~` and `V~`. Row `k = 0` is the termination
/// procedure; pass a single row to check only that.
pub fn termination_residual_truncated(
    b_tilde: &DMatrix<f64>,
    v_tilde: &DMatrix<f64>,
    t: &GlmTableau,
    w: &WeightMatrix,
    p: usize,
    order: usize,
) -> Result<f64> {
    check_weights(t, w, p)?;
    let rows = b_tilde.nrows();
    if rows == 0 || rows > p + 1 || b_tilde.ncols() != t.s() {
        return Err(Error::dims(
            "B~",
            format!("(1..={})x{}", p + 1, t.s()),
            format!("{}x{}", rows, b_tilde.ncols()),
        ));
    }
    if v_tilde.shape() != (rows, t.r()) {
        return Err(Error::dims(
            "V~",
            format!("{}x{}", rows, t.r()),
            format!("{:?}", v_tilde.shape()),
        ));
    }
    let order = order.max(p + 1);
    let e_cz = SeriesVector::exp(t.c.as_slice(), order);
    let wz = SeriesVector::from_weights(w, p, order);
    let mut lhs = SeriesVector {
        entries: vec![exp_series(1.0, order); rows],
    };
    for (k, entry) in lhs.entries.iter_mut().enumerate() {
        for _ in 0..k {
            *entry = entry.shift();
        }
    }
    let rhs = SeriesVector::apply(b_tilde, &e_cz)
        .shift()
        .add(&SeriesVector::apply(v_tilde, &wz));
    Ok(lhs.sub(&rhs).max_abs_through(p))
}
