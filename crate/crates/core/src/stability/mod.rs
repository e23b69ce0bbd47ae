//! Linear stability of GLMs and IMEX pairs: stability matrices, spectral
//! radii and stability-region scans.
//!
//! On `y' = xi y + xi_hat y` with `w = h xi`, `w_hat = h xi_hat` one step maps
//! `y^[n-1]` to `M(w, w_hat) y^[n-1]` with
//! `M(w, w_hat) = V + (w B + w_hat Bhat)(I - w A - w_hat Ahat)^{-1} U`.

mod roots;

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

pub use roots::{characteristic_polynomial, eigenvalues, spectral_radius};

use crate::error::{Error, Result};
use crate::tableau::{GlmTableau, ImexGlmPair};

/// Largest supported matrix dimension (`r, s <= 4`).
pub const MAX_DIM: usize = 4;

/// Points count as stable when `rho <= 1 + STABLE_TOL`.
pub const STABLE_TOL: f64 = 1e-12;

/// Relative determinant threshold below which `I - wA - w_hat Ahat` is
/// treated as singular.
pub const SINGULAR_TOL: f64 = 1e-14;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A dense complex matrix of at most 4 x 4 entries, stored inline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    e: [[Complex64; MAX_DIM]; MAX_DIM],
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.e[i][j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.e[i][j]
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(
            rows <= MAX_DIM && cols <= MAX_DIM,
            "at most {MAX_DIM} x {MAX_DIM}"
        );
        Self {
            rows,
            cols,
            e: [[ZERO; MAX_DIM]; MAX_DIM],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.e[i][i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.e[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() > MAX_DIM || m.ncols() > MAX_DIM {
            return Err(Error::dims(
                "stability matrix",
                format!("at most {MAX_DIM}x{MAX_DIM}"),
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        Ok(Self::from_fn(m.nrows(), m.ncols(), |i, j| {
            Complex64::new(m[(i, j)], 0.0)
        }))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self.e[i][i]).sum()
    }

    pub fn add(&self, o: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self.e[i][j] + o.e[i][j])
    }

    pub fn sub(&self, o: &Self) -> Self {
        debug_assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self.e[i][j] - o.e[i][j])
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.e[i][j] * c)
    }

    pub fn mul(&self, o: &Self) -> Self {
        debug_assert_eq!(self.cols, o.rows);
        Self::from_fn(self.rows, o.cols, |i, j| {
            (0..self.cols).map(|k| self.e[i][k] * o.e[k][j]).sum()
        })
    }

    /// `self * x` for a vector `x`.
    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|k| self.e[i][k] * x[k]).sum())
            .collect()
    }

    /// Largest entrywise modulus of `self - o`.
    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                d = d.max((self.e[i][j] - o.e[i][j]).norm());
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs_diff(&Self::zeros(self.rows, self.cols))
    }

    pub fn to_dmatrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.e[i][j])
    }

    fn is_lower_triangular(&self) -> bool {
        (0..self.rows).all(|i| (i + 1..self.cols).all(|j| self.e[i][j] == ZERO))
    }

    /// Hadamard bound `prod_i |row_i|_2` on `|det|`.
    fn hadamard_bound(&self) -> f64 {
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self.e[i][j].norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .product()
    }

    /// Solves `self * X = rhs` by Gaussian elimination with partial pivoting,
    /// failing when `|det| < SINGULAR_TOL * hadamard_bound`.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        let n = self.rows;
        debug_assert_eq!(n, self.cols);
        debug_assert_eq!(n, rhs.rows);
        let bound = self.hadamard_bound();
        let mut a = *self;
        let mut x = *rhs;
        let mut det = 1.0;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a.e[i][k].norm().total_cmp(&a.e[j][k].norm()))
                .unwrap_or(k);
            if p != k {
                a.e.swap(p, k);
                x.e.swap(p, k);
            }
            let pivot = a.e[k][k];
            det *= pivot.norm();
            if pivot == ZERO {
                return Err(Error::SingularResolvent);
            }
            for i in k + 1..n {
                let factor = a.e[i][k] / pivot;
                if factor != ZERO {
                    for j in k..n {
                        let t = a.e[k][j];
                        a.e[i][j] -= factor * t;
                    }
                    for j in 0..x.cols {
                        let t = x.e[k][j];
                        x.e[i][j] -= factor * t;
                    }
                }
            }
        }
        if !(det > SINGULAR_TOL * bound) {
            return Err(Error::SingularResolvent);
        }
        for k in (0..n).rev() {
            for j in 0..x.cols {
                let mut acc = x.e[k][j];
                for i in k + 1..n {
                    acc -= a.e[k][i] * x.e[i][j];
                }
                x.e[k][j] = acc / a.e[k][k];
            }
        }
        Ok(x)
    }

    /// Forward substitution for lower triangular `self`.
    fn solve_lower(&self, rhs: &Self) -> Result<Self> {
        let n = self.rows;
        let det: f64 = (0..n).map(|i| self.e[i][i].norm()).product();
        if !(det > SINGULAR_TOL * self.hadamard_bound()) {
            return Err(Error::SingularResolvent);
        }
        let mut x = *rhs;
        for i in 0..n {
            for j in 0..x.cols {
                let mut acc = x.e[i][j];
                for k in 0..i {
                    acc -= self.e[i][k] * x.e[k][j];
                }
                x.e[i][j] = acc / self.e[i][i];
            }
        }
        Ok(x)
    }
}

/// Precomputed coefficients for repeated evaluation of `M(w, w_hat)`.
#[derive(Debug, Clone)]
pub struct StabilityOperator {
    a: ComplexMatrix,
    a_hat: ComplexMatrix,
    b: ComplexMatrix,
    b_hat: ComplexMatrix,
    u: ComplexMatrix,
    v: ComplexMatrix,
    lower: bool,
}

impl StabilityOperator {
    /// `M(z)` of a single method, as `M(z, 0)`.
    pub fn single(t: &GlmTableau) -> Result<Self> {
        let (s, r) = (t.s(), t.r());
        let a = ComplexMatrix::from_real(&t.a)?;
        Ok(Self {
            lower: a.is_lower_triangular(),
            a,
            a_hat: ComplexMatrix::zeros(s, s),
            b: ComplexMatrix::from_real(&t.b)?,
            b_hat: ComplexMatrix::zeros(r, s),
            u: ComplexMatrix::from_real(&t.u)?,
            v: ComplexMatrix::from_real(&t.v)?,
        })
    }

    pub fn pair(p: &ImexGlmPair) -> Result<Self> {
        let a = ComplexMatrix::from_real(&p.explicit.a)?;
        let a_hat = ComplexMatrix::from_real(&p.implicit.a)?;
        Ok(Self {
            lower: a.is_lower_triangular() && a_hat.is_lower_triangular(),
            a,
            a_hat,
            b: ComplexMatrix::from_real(&p.explicit.b)?,
            b_hat: ComplexMatrix::from_real(&p.implicit.b)?,
            u: ComplexMatrix::from_real(&p.explicit.u)?,
            v: ComplexMatrix::from_real(&p.explicit.v)?,
        })
    }

    pub fn eval(&self, w: Complex64, w_hat: Complex64) -> Result<ComplexMatrix> {
        let s = self.a.rows();
        let k = ComplexMatrix::from_fn(s, s, |i, j| {
            let id = if i == j { ONE } else { ZERO };
            id - w * self.a[(i, j)] - w_hat * self.a_hat[(i, j)]
        });
        let x = if self.lower {
            k.solve_lower(&self.u)?
        } else {
            k.solve(&self.u)?
        };
        let coupling = ComplexMatrix::from_fn(self.b.rows(), s, |i, j| {
            w * self.b[(i, j)] + w_hat * self.b_hat[(i, j)]
        });
        Ok(self.v.add(&coupling.mul(&x)))
    }
}

/// `M(z) = V + z B (I - z A)^{-1} U`.
pub fn stability_matrix(t: &GlmTableau, z: Complex64) -> Result<ComplexMatrix> {
    StabilityOperator::single(t)?.eval(z, ZERO)
}

/// `M(w, w_hat)` of an IMEX pair.
pub fn imex_stability_matrix(
    pair: &ImexGlmPair,
    w: Complex64,
    w_hat: Complex64,
) -> Result<ComplexMatrix> {
    StabilityOperator::pair(pair)?.eval(w, w_hat)
}

/// `M(infinity) = V - B A^{-1} U`; also the limit of `M(w, w_hat)` as
/// `w_hat -> infinity` with `w` fixed when applied to the implicit member.
pub fn limit_matrix(t: &GlmTableau) -> Result<ComplexMatrix> {
    if t.is_explicit() {
        return Err(Error::NoStiffLimit);
    }
    let a = ComplexMatrix::from_real(&t.a)?;
    let x = a
        .solve(&ComplexMatrix::from_real(&t.u)?)
        .map_err(|_| Error::NoStiffLimit)?;
    let b = ComplexMatrix::from_real(&t.b)?;
    Ok(ComplexMatrix::from_real(&t.v)?.sub(&b.mul(&x)))
}

/// Stiff probes `w_hat` for the sector `|arg(-w_hat)| <= alpha`: `0`, and
/// `-rho_k exp(+-i theta_j)` with 25 radii log-spaced in `[1e-2, 1e6]` and 9
/// angles evenly spaced in `[0, alpha]`.
pub fn sector_probes(alpha_deg: f64) -> Vec<Complex64> {
    let mut thetas: Vec<f64> = (0..9)
        .map(|j| alpha_deg.to_radians() * j as f64 / 8.0)
        .collect();
    thetas.dedup();
    let mut out = vec![ZERO];
    for k in 0..25 {
        let rho = 10f64.powf(-2.0 + 8.0 * k as f64 / 24.0);
        for &theta in &thetas {
            let p = Complex64::from_polar(rho, theta);
            out.push(-p);
            if theta != 0.0 {
                out.push(-p.conj());
            }
        }
    }
    out
}

/// A rectangular grid of `w` values and the stiff probes for constrained
/// scans.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionScan {
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    /// Sector half-angle in degrees.
    pub alpha: f64,
    pub hat_samples: Vec<Complex64>,
    /// Also probe `w_hat -> infinity` through the implicit limit matrix.
    pub include_limit: bool,
    /// Stop probing a point once it is known to be unstable. Worst-case
    /// radii of unstable points are then lower bounds.
    pub early_exit: bool,
}

/// One grid point of a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRecord {
    pub w: Complex64,
    /// `rho(M)`, or the worst case over the stiff probes; infinite when a
    /// resolvent was singular.
    pub rho: f64,
    pub stable: bool,
    pub singular: bool,
}

impl RegionScan {
    pub fn new(
        re_range: (f64, f64),
        im_range: (f64, f64),
        nx: usize,
        ny: usize,
        alpha: f64,
    ) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid {nx} x {ny} needs at least 2 x 2 points"
            )));
        }
        if !(0.0..=90.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "sector angle {alpha} must lie in [0, 90]"
            )));
        }
        if !(re_range.0 < re_range.1) || !(im_range.0 < im_range.1) {
            return Err(Error::InvalidParameter("empty scan range".to_string()));
        }
        Ok(Self {
            re_range,
            im_range,
            nx,
            ny,
            alpha,
            hat_samples: sector_probes(alpha),
            include_limit: true,
            early_exit: false,
        })
    }

    /// `Re in [-4, 1]`, `Im in [-4, 4]`, 401 x 401.
    pub fn default_grid(alpha: f64) -> Result<Self> {
        Self::new((-4.0, 1.0), (-4.0, 4.0), 401, 401, alpha)
    }

    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let step = (hi - lo) / (n - 1) as f64;
        let mut v: Vec<f64> = (0..n).map(|k| lo + k as f64 * step).collect();
        v[n - 1] = hi;
        if lo == -hi {
            // Exact mirror symmetry so that conjugate rows can be reused.
            for k in 0..n / 2 {
                v[k] = -v[n - 1 - k];
            }
            if n % 2 == 1 {
                v[n / 2] = 0.0;
            }
        }
        v
    }

    fn symmetric(&self) -> bool {
        self.im_range.0 == -self.im_range.1
    }

    /// Grid points, row-major with `Im` as the row index.
    pub fn grid(&self) -> Vec<Complex64> {
        let xs = Self::axis(self.re_range.0, self.re_range.1, self.nx);
        let ys = Self::axis(self.im_range.0, self.im_range.1, self.ny);
        ys.iter()
            .flat_map(|&y| xs.iter().map(move |&x| Complex64::new(x, y)))
            .collect()
    }

    /// Evaluates `point(w)` over the grid, concurrently by rows, reusing
    /// the value at `conj(w)` when the grid is symmetric about the real axis.
    fn evaluate(&self, point: impl Fn(Complex64) -> (f64, bool) + Sync) -> Vec<ScanRecord> {
        let xs = Self::axis(self.re_range.0, self.re_range.1, self.nx);
        let ys = Self::axis(self.im_range.0, self.im_range.1, self.ny);
        let first = if self.symmetric() { self.ny / 2 } else { 0 };
        let computed: Vec<Vec<(f64, bool)>> = (first..self.ny)
            .into_par_iter()
            .map(|iy| {
                xs.iter()
                    .map(|&x| point(Complex64::new(x, ys[iy])))
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for (iy, &y) in ys.iter().enumerate() {
            let src = if iy >= first { iy } else { self.ny - 1 - iy };
            let row = &computed[src - first];
            for (ix, &x) in xs.iter().enumerate() {
                let (rho, singular) = row[ix];
                out.push(ScanRecord {
                    w: Complex64::new(x, y),
                    rho,
                    stable: !singular && rho <= 1.0 + STABLE_TOL,
                    singular,
                });
            }
        }
        out
    }
}

/// `rho(M(z))` over the grid.
pub fn scan_single(t: &GlmTableau, scan: &RegionScan) -> Result<Vec<ScanRecord>> {
    let op = StabilityOperator::single(t)?;
    Ok(scan.evaluate(|z| match op.eval(z, ZERO) {
        Ok(m) => (spectral_radius(&m), false),
        Err(_) => (f64::INFINITY, true),
    }))
}

/// Worst case of `rho(M(w, w_hat))` over the stiff probes at every grid `w`.
pub fn scan_constrained(pair: &ImexGlmPair, scan: &RegionScan) -> Result<Vec<ScanRecord>> {
    let op = StabilityOperator::pair(pair)?;
    // The stiff limit does not depend on w.
    let limit_rho = if scan.include_limit {
        limit_matrix(&pair.implicit)
            .ok()
            .map(|m| spectral_radius(&m))
    } else {
        None
    };
    let threshold = 1.0 + STABLE_TOL;
    let probes = &scan.hat_samples;
    Ok(scan.evaluate(|w| {
        let mut worst = limit_rho.unwrap_or(0.0);
        if scan.early_exit && worst > threshold {
            return (worst, false);
        }
        for &w_hat in probes {
            match op.eval(w, w_hat) {
                Ok(m) => {
                    worst = worst.max(spectral_radius(&m));
                    if scan.early_exit && worst > threshold {
                        break;
                    }
                }
                Err(_) => return (f64::INFINITY, true),
            }
        }
        (worst, false)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tableau::{catalog, find_pair};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_gives_v() {
        for p in catalog() {
            let v = ComplexMatrix::from_real(&p.explicit.v).unwrap();
            assert_eq!(
                stability_matrix(&p.explicit, ZERO)
                    .unwrap()
                    .max_abs_diff(&v),
                0.0
            );
            assert_eq!(
                imex_stability_matrix(&p, ZERO, ZERO)
                    .unwrap()
                    .max_abs_diff(&v),
                0.0
            );
            assert!((spectral_radius(&v) - 1.0).abs() < 1e-12, "{}", p.name);
        }
    }

    #[test]
    fn first_order_expansion() {
        let t = &find_pair("2B").unwrap().explicit;
        let d = 1e-6;
        let m = stability_matrix(t, c(d, 0.0)).unwrap();
        let v = ComplexMatrix::from_real(&t.v).unwrap();
        let bu = ComplexMatrix::from_real(&(&t.b * &t.u)).unwrap();
        let fd = m.sub(&v).scale(c(1.0 / d, 0.0));
        assert!(fd.max_abs_diff(&bu) < 1e-5);
    }

    #[test]
    fn resolvent_singularity_is_detected() {
        let t = &find_pair("3B").unwrap().implicit;
        let err = stability_matrix(t, c(1.0 / t.lambda, 0.0)).unwrap_err();
        assert!(err.to_string().contains("singular-resolvent"));
    }

    #[test]
    fn pair_reduces_to_members() {
        for p in catalog() {
            for z in [c(-0.7, 0.3), c(0.2, -1.1), c(-3.0, 0.0)] {
                let e = stability_matrix(&p.explicit, z).unwrap();
                let i = stability_matrix(&p.implicit, z).unwrap();
                assert!(imex_stability_matrix(&p, z, ZERO).unwrap().max_abs_diff(&e) < 1e-13);
                assert!(imex_stability_matrix(&p, ZERO, z).unwrap().max_abs_diff(&i) < 1e-13);
            }
        }
    }

    #[test]
    fn general_solver_agrees_with_forward_substitution() {
        let p = find_pair("3A").unwrap();
        let op = StabilityOperator::pair(&p).unwrap();
        let mut general = op.clone();
        general.lower = false;
        let (w, wh) = (c(-0.4, 0.9), c(-20.0, 3.0));
        assert!(
            op.eval(w, wh)
                .unwrap()
                .max_abs_diff(&general.eval(w, wh).unwrap())
                < 1e-13
        );
    }

    #[test]
    fn explicit_member_has_no_limit() {
        let p = find_pair("2A").unwrap();
        assert!(matches!(
            limit_matrix(&p.explicit),
            Err(Error::NoStiffLimit)
        ));
        assert!(limit_matrix(&p.implicit).is_ok());
    }

    #[test]
    fn probes_cover_the_sector() {
        let probes = sector_probes(90.0);
        assert_eq!(probes.len(), 1 + 25 * 17);
        assert_eq!(sector_probes(0.0).len(), 26);
        for p in &probes[1..] {
            assert!(p.re <= 1e-9 * p.norm());
            assert!(p.norm() >= 1e-2 * (1.0 - 1e-12) && p.norm() <= 1e6 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn probe_samples() {
        let three_a = find_pair("3A").unwrap();
        let scan = RegionScan::new((-1e6, 0.0), (-1e6, 1e6), 3, 3, 90.0).unwrap();
        let grid = scan_single(&three_a.implicit, &scan).unwrap();
        for rec in grid.iter().filter(|r| r.w.re < 0.0 || r.w.im != 0.0) {
            assert!(rec.stable, "{:?}", rec);
        }
        let rho = spectral_radius(
            &stability_matrix(&find_pair("2B").unwrap().explicit, c(-10.0, 0.0)).unwrap(),
        );
        assert!(rho > 1.0);
    }

    #[test]
    fn grid_is_row_major_and_mirrored() {
        let p = find_pair("2B").unwrap();
        let scan = RegionScan::new((-2.0, 0.5), (-1.5, 1.5), 6, 5, 45.0).unwrap();
        let recs = scan_constrained(&p, &scan).unwrap();
        assert_eq!(recs.len(), 30);
        assert_eq!(recs[0].w, c(-2.0, -1.5));
        assert_eq!(recs[1].w, c(-1.5, -1.5));
        assert_eq!(recs[6].w.im, -0.75);
        assert_eq!(recs[12].w.im, 0.0);
        let mut asym = scan.clone();
        asym.im_range = (-1.5, 1.6);
        assert!(!asym.symmetric());
        for (k, rec) in recs.iter().enumerate() {
            let (iy, ix) = (k / 6, k % 6);
            let mirror = recs[(4 - iy) * 6 + ix];
            assert_eq!(rec.rho, mirror.rho);
        }
    }

    #[test]
    fn invalid_scans_are_rejected() {
        assert!(RegionScan::new((-1.0, 1.0), (-1.0, 1.0), 1, 5, 45.0).is_err());
        assert!(RegionScan::new((-1.0, 1.0), (-1.0, 1.0), 5, 5, 91.0).is_err());
        assert!(RegionScan::new((1.0, -1.0), (-1.0, 1.0), 5, 5, 45.0).is_err());
    }
}
