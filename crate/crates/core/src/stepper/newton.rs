//! Simplified Newton iteration for `Y = h lambda g(Y) + known`.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use super::problem::JacobianRef;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    pub max_iters: usize,
    /// Convergence when `|dY|_inf <= tol * (1 + |Y|_inf)`.
    pub tol: f64,
    /// Factor `I - h lambda J` once per step and reuse it for every stage.
    pub jacobian_reuse: bool,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            max_iters: 50,
            tol: 1e-12,
            jacobian_reuse: true,
        }
    }
}

impl NewtonConfig {
    pub fn is_valid(&self) -> bool {
        self.tol > 0.0 && self.max_iters >= 1
    }
}

/// LU factors of `I - diag(scale) J`.
#[derive(Debug, Clone)]
pub struct IterationMatrix {
    lu: LU<f64, Dyn, Dyn>,
}

impl IterationMatrix {
    /// `I - hl J`.
    pub fn new(hl: f64, jac: &DMatrix<f64>) -> Result<Self> {
        let n = jac.nrows();
        Self::from_matrix(DMatrix::identity(n, n) - jac * hl)
    }

    /// `I - diag(scale) J`, one scale per row.
    pub fn with_row_scales(scale: &DVector<f64>, jac: &DMatrix<f64>) -> Result<Self> {
        let n = jac.nrows();
        let mut m = DMatrix::identity(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] -= scale[i] * jac[(i, j)];
            }
        }
        Self::from_matrix(m)
    }

    fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        let size = m.amax().max(1.0);
        let lu = m.lu();
        let u = lu.u();
        let diag_min = u
            .diagonal()
            .iter()
            .fold(f64::INFINITY, |a, d| a.min(d.abs()));
        if !(diag_min > 1e-14 * size) || !size.is_finite() {
            return Err(Error::NewtonDivergence {
                stage: 0,
                iterations: 0,
            });
        }
        Ok(Self { lu })
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        self.lu.solve(rhs)
    }
}

/// Result of one stage solve.
#[derive(Debug, Clone)]
pub struct StageSolution {
    pub y: DVector<f64>,
    pub iterations: usize,
    pub g_evals: usize,
}

/// Solves `Y = h lambda g(Y) + known` starting from `Y = known`, with the
/// iteration matrix built from `jac_g(known)` (forward differences when no
/// Jacobian is given).
pub fn solve_stage(
    lambda: f64,
    h: f64,
    known: &DVector<f64>,
    g: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    jac_g: Option<JacobianRef<'_>>,
    cfg: &NewtonConfig,
) -> Result<DVector<f64>> {
    if lambda == 0.0 {
        return Ok(known.clone());
    }
    let jac = match jac_g {
        Some(jac) => jac(known),
        None => fd_jacobian(g, known),
    };
    let matrix = IterationMatrix::new(h * lambda, &jac)?;
    let scale = DVector::from_element(known.len(), h * lambda);
    Ok(iterate(&matrix, &scale, known, g, cfg, 0)?.y)
}

fn fd_jacobian(g: &dyn Fn(&DVector<f64>) -> DVector<f64>, y: &DVector<f64>) -> DMatrix<f64> {
    let n = y.len();
    let g0 = g(y);
    let mut jac = DMatrix::zeros(g0.len(), n);
    let mut probe = y.clone();
    for j in 0..n {
        let delta = f64::EPSILON.sqrt() * y[j].abs().max(1.0);
        probe[j] = y[j] + delta;
        let step = probe[j] - y[j];
        jac.set_column(j, &((g(&probe) - &g0) / step));
        probe[j] = y[j];
    }
    jac
}

/// Simplified Newton with a fixed iteration matrix for
/// `Y - diag(scale) g(Y) - known = 0`.
pub(crate) fn iterate(
    matrix: &IterationMatrix,
    scale: &DVector<f64>,
    known: &DVector<f64>,
    g: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    cfg: &NewtonConfig,
    stage: usize,
) -> Result<StageSolution> {
    let mut y = known.clone();
    for it in 1..=cfg.max_iters {
        let gy = g(&y);
        let residual = &y - scale.component_mul(&gy) - known;
        let delta = matrix.solve(&(-residual)).ok_or(Error::NewtonDivergence {
            stage,
            iterations: it,
        })?;
        y += &delta;
        let dnorm = delta.amax();
        if !dnorm.is_finite() || !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NewtonDivergence {
                stage,
                iterations: it,
            });
        }
        if dnorm <= cfg.tol * (1.0 + y.amax()) {
            return Ok(StageSolution {
                y,
                iterations: it,
                g_evals: it,
            });
        }
    }
    Err(Error::NewtonDivergence {
        stage,
        iterations: cfg.max_iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    fn residual(lambda: f64, h: f64, known: f64, g: impl Fn(f64) -> f64, y: f64) -> f64 {
        (y - h * lambda * g(y) - known).abs()
    }

    #[test]
    fn linear_stage() {
        let g = |y: &DVector<f64>| y * -100.0;
        let jac = |_: &DVector<f64>| DMatrix::from_element(1, 1, -100.0);
        let y = solve_stage(
            0.5,
            0.01,
            &scalar(1.0),
            &g,
            Some(&jac),
            &NewtonConfig::default(),
        )
        .unwrap();
        assert!((y[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!(residual(0.5, 0.01, 1.0, |v| -100.0 * v, y[0]) <= 1e-12 * (1.0 + y[0].abs()));
    }

    #[test]
    fn zero_lambda_returns_known() {
        let g = |_: &DVector<f64>| -> DVector<f64> { panic!("g must not be called") };
        let y = solve_stage(0.0, 0.1, &scalar(3.5), &g, None, &NewtonConfig::default()).unwrap();
        assert_eq!(y[0], 3.5);
    }

    /// Root of `y - known + h lambda y^3` by bisection on [0, known].
    fn cubic_root_by_bisection(lambda: f64, h: f64, known: f64) -> f64 {
        let phi = |y: f64| y - known + h * lambda * y * y * y;
        let (mut lo, mut hi) = (0.0, known);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn cubic_stage_matches_bisection() {
        let lambda = 0.435866521508459;
        let expected = cubic_root_by_bisection(lambda, 0.1, 1.0);
        let g = |y: &DVector<f64>| y.map(|v| -v * v * v);
        let jac = |y: &DVector<f64>| DMatrix::from_element(1, 1, -3.0 * y[0] * y[0]);
        for jac_g in [Some(&jac as &dyn Fn(&DVector<f64>) -> DMatrix<f64>), None] {
            let y = solve_stage(
                lambda,
                0.1,
                &scalar(1.0),
                &g,
                jac_g,
                &NewtonConfig::default(),
            )
            .unwrap();
            assert!((y[0] - expected).abs() < 1e-13, "{} vs {expected}", y[0]);
            assert!(residual(lambda, 0.1, 1.0, |v| -v * v * v, y[0]) <= 1e-12 * (1.0 + y[0].abs()));
        }
    }

    #[test]
    fn singular_iteration_matrix_is_reported() {
        // I - h lambda J = 1 - 1 = 0.
        let g = |y: &DVector<f64>| y.clone();
        let jac = |_: &DVector<f64>| DMatrix::from_element(1, 1, 1.0);
        let err = solve_stage(
            1.0,
            1.0,
            &scalar(1.0),
            &g,
            Some(&jac),
            &NewtonConfig::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("newton-divergence"));
    }

    #[test]
    fn iteration_cap_is_reported() {
        // A badly wrong Jacobian makes the fixed-matrix iteration diverge.
        let g = |y: &DVector<f64>| y.map(|v| -50.0 * v);
        let jac = |_: &DVector<f64>| DMatrix::from_element(1, 1, 0.0);
        let cfg = NewtonConfig {
            max_iters: 20,
            ..NewtonConfig::default()
        };
        assert!(matches!(
            solve_stage(1.0, 0.1, &scalar(1.0), &g, Some(&jac), &cfg),
            Err(Error::NewtonDivergence { .. })
        ));
    }
}
