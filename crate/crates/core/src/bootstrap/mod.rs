//! Starting procedures that build `y^[0]` to order `p`, and the termination
//! procedure that recovers a point solution from the last step.

mod imex_rk;

use nalgebra::{DMatrix, DVector};

pub use imex_rk::{rk_integrate, rk_step, ImexRkMethod, IMEX_RK_NAMES};

use crate::error::{Error, Result};
use crate::stepper::{IntegrationState, NewtonConfig, SplitDerivatives, SplitProblem};
use crate::tableau::ImexGlmPair;

/// Maps derivative samples `f(y_0), ..., f(y_{r-1})` at spacing `tau` to
/// `tau^(k-1) x^(k)(t0)`, `k = 1..r`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeStencil {
    pub d: DMatrix<f64>,
    pub r: usize,
}

impl DerivativeStencil {
    pub fn new(r: usize) -> Result<Self> {
        let d = match r {
            2 => DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 1.0]),
            3 => DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, -1.5, 2.0, -0.5, 1.0, -2.0, 1.0]),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "no derivative stencil for r = {r}"
                )))
            }
        };
        Ok(Self { d, r })
    }

    /// `D * samples`, row by row.
    pub fn apply(&self, samples: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        if samples.len() != self.r {
            return Err(Error::dims("stencil samples", self.r, samples.len()));
        }
        let dim = samples[0].len();
        Ok((0..self.r)
            .map(|k| {
                samples
                    .iter()
                    .enumerate()
                    .fold(DVector::zeros(dim), |acc, (j, s)| acc + s * self.d[(k, j)])
            })
            .collect())
    }
}

/// `y_i^[0] = y0 + sum_k (q_ik h^k x^(k) + qhat_ik h^k z^(k))`, `k = 1..p`.
pub fn start_from_derivatives(
    pair: &ImexGlmPair,
    y0: &DVector<f64>,
    t0: f64,
    h: f64,
    derivs: &SplitDerivatives,
) -> Result<IntegrationState> {
    let p = pair.order();
    if derivs.order() < p {
        return Err(Error::MissingDerivatives(format!(
            "order {p} start needs {p} derivatives, got {}",
            derivs.order()
        )));
    }
    let w = pair.explicit.weights();
    let w_hat = pair.implicit.weights();
    let y_ext = (0..pair.r())
        .map(|i| {
            let mut yi = y0.clone();
            let mut hk = 1.0;
            for k in 1..=p {
                hk *= h;
                yi.axpy(w.w[(i, k)] * hk, &derivs.nonstiff[k - 1], 1.0);
                yi.axpy(w_hat.w[(i, k)] * hk, &derivs.stiff[k - 1], 1.0);
            }
            yi
        })
        .collect();
    Ok(IntegrationState::new(y_ext, t0, h))
}

/// Starting block from the problem's analytic derivatives at `t0`.
pub fn start_analytic(pair: &ImexGlmPair, prob: &SplitProblem, h: f64) -> Result<IntegrationState> {
    let derivs = prob.derivatives.as_ref().ok_or_else(|| {
        Error::MissingDerivatives(format!(
            "problem '{}' has no analytic derivatives",
            prob.name
        ))
    })?;
    start_from_derivatives(pair, &prob.y0, prob.t0, h, &derivs(pair.order()))
}

/// Scaled derivatives `h^k x^(k)`, `h^k z^(k)` (returned unscaled by `h`,
/// i.e. as `x^(k)`, `z^(k)`) from samples at spacing `tau`.
pub fn derivatives_from_samples(
    f_samples: &[DVector<f64>],
    g_samples: &[DVector<f64>],
    tau: f64,
) -> Result<SplitDerivatives> {
    let stencil = DerivativeStencil::new(f_samples.len())?;
    let unscale = |rows: Vec<DVector<f64>>| -> Vec<DVector<f64>> {
        rows.into_iter()
            .enumerate()
            .map(|(k, v)| v / tau.powi(k as i32))
            .collect()
    };
    Ok(SplitDerivatives {
        nonstiff: unscale(stencil.apply(f_samples)?),
        stiff: unscale(stencil.apply(g_samples)?),
    })
}

/// Starting block from `r - 1` IMEX Runge-Kutta steps of size `tau`: the
/// stencil turns `f` and `g` at the `r` resulting points into derivative
/// estimates, which are rescaled to step `h`.
pub fn start_imex_rk(
    pair: &ImexGlmPair,
    prob: &SplitProblem,
    h: f64,
    tau: f64,
    method: &ImexRkMethod,
    cfg: &NewtonConfig,
) -> Result<IntegrationState> {
    if !(tau > 0.0 && tau <= h) {
        return Err(Error::InvalidParameter(format!(
            "start step {tau} must lie in (0, h = {h}]"
        )));
    }
    let r = pair.r();
    DerivativeStencil::new(r)?;
    let points = imex_rk::rk_trajectory(method, prob, tau, r - 1, cfg)?;
    let f_samples: Vec<_> = points.iter().map(|y| prob.f(y)).collect();
    let g_samples: Vec<_> = points.iter().map(|y| prob.g(y)).collect();
    let derivs = derivatives_from_samples(&f_samples, &g_samples, tau)?;
    start_from_derivatives(pair, &prob.y0, prob.t0, h, &derivs)
}

/// `h sum beta0_i F_i + h sum beta0_hat_i G_i + sum gamma0_j y_j^[n-1]`.
pub fn terminate(
    pair: &ImexGlmPair,
    h: f64,
    f_stages: &[DVector<f64>],
    g_stages: &[DVector<f64>],
    y_prev: &[DVector<f64>],
) -> DVector<f64> {
    let t = &pair.termination;
    let dim = y_prev[0].len();
    let mut out = DVector::zeros(dim);
    for (j, y) in y_prev.iter().enumerate() {
        out.axpy(t.gamma0[j], y, 1.0);
    }
    for (i, (f, g)) in f_stages.iter().zip(g_stages).enumerate() {
        out.axpy(h * t.beta0[i], f, 1.0);
        out.axpy(h * t.beta0_hat[i], g, 1.0);
    }
    out
}
