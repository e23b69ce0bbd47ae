//! IMEX Runge-Kutta methods of Ascher, Ruuth and Spiteri (1997), used to
//! generate starting values and as the comparison method in convergence
//! studies.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::stepper::{
    imex_advance, step_count, ImexCoefficients, IntegrateOptions, IntegrationResult,
    IntegrationState, NewtonCache, NewtonConfig, SplitProblem, StepStats,
};

/// Additive Butcher tableau: explicit `(a, b)` and diagonally implicit
/// `(a_hat, b_hat)` on shared abscissae `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImexRkMethod {
    pub name: String,
    pub order: usize,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub a_hat: DMatrix<f64>,
    pub b_hat: DVector<f64>,
    pub c: DVector<f64>,
}

pub const IMEX_RK_NAMES: [&str; 2] = ["DIRK232", "DIRK343"];

impl ImexRkMethod {
    /// IMEX DIRK(2,3,2): L-stable two-stage implicit part, second order.
    pub fn dirk232() -> Self {
        let g = (2.0 - std::f64::consts::SQRT_2) / 2.0;
        let d = 1.0 - 1.0 / (2.0 * g);
        let a_hat = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, g, 0.0, 0.0, 1.0 - g, g]);
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, g, 0.0, 0.0, d, 1.0 - d, 0.0]);
        let b = DVector::from_column_slice(&[0.0, 1.0 - g, g]);
        Self {
            name: "IMEX DIRK(2,3,2)".to_string(),
            order: 2,
            a,
            b: b.clone(),
            a_hat,
            b_hat: b,
            c: DVector::from_column_slice(&[0.0, g, 1.0]),
        }
    }

    /// IMEX DIRK(3,4,3): L-stable three-stage implicit part, third order.
    ///
    /// `gamma` is the root of `6g^3 - 18g^2 + 9g - 1` near 0.4359. The explicit
    /// entries `a31`, `a41` and `a42 = a43` are recomputed from the published
    /// `a32` so that the coupling condition `b^T A c = 1/6` holds to rounding.
    pub fn dirk343() -> Self {
        let g = 0.435866521508459;
        let b1 = -1.5 * g * g + 4.0 * g - 0.25;
        let b2 = 1.5 * g * g - 5.0 * g + 1.25;
        let c = [0.0, g, (1.0 + g) / 2.0, 1.0];
        let b = [0.0, b1, b2, g];
        let a32 = 0.3966543747;
        let a31 = c[2] - a32;
        let a42 = (1.0 / 6.0 - b[2] * a32 * c[1]) / (b[3] * (c[1] + c[2]));
        let a41 = 1.0 - 2.0 * a42;
        #[rustfmt::skip]
        let a_hat = DMatrix::from_row_slice(4, 4, &[
            0.0, 0.0, 0.0, 0.0,
            0.0, g, 0.0, 0.0,
            0.0, (1.0 - g) / 2.0, g, 0.0,
            0.0, b1, b2, g,
        ]);
        #[rustfmt::skip]
        let a = DMatrix::from_row_slice(4, 4, &[
            0.0, 0.0, 0.0, 0.0,
            g, 0.0, 0.0, 0.0,
            a31, a32, 0.0, 0.0,
            a41, a42, a42, 0.0,
        ]);
        let b = DVector::from_column_slice(&b);
        Self {
            name: "IMEX DIRK(3,4,3)".to_string(),
            order: 3,
            a,
            b: b.clone(),
            a_hat,
            b_hat: b,
            c: DVector::from_column_slice(&c),
        }
    }

    /// `DIRK232` / `DIRK343`, case-insensitive, with or without punctuation.
    pub fn by_name(name: &str) -> Result<Self> {
        let key: String = name
            .chars()
            .filter(|ch| ch.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_uppercase();
        match key.trim_start_matches("IMEX") {
            "DIRK232" => Ok(Self::dirk232()),
            "DIRK343" => Ok(Self::dirk343()),
            _ => Err(Error::UnknownMethod {
                name: name.to_string(),
                available: IMEX_RK_NAMES.join(", "),
            }),
        }
    }

    /// The method matched to a DIMSIM of order `p`.
    pub fn for_order(p: usize) -> Result<Self> {
        match p {
            2 => Ok(Self::dirk232()),
            3 => Ok(Self::dirk343()),
            _ => Err(Error::InvalidParameter(format!(
                "no IMEX RK starter of order {p}"
            ))),
        }
    }

    pub fn stages(&self) -> usize {
        self.c.len()
    }
}

/// One step `y -> y(t + h)`.
pub fn rk_step(
    method: &ImexRkMethod,
    prob: &SplitProblem,
    y: &DVector<f64>,
    h: f64,
    cfg: &NewtonConfig,
) -> Result<(DVector<f64>, StepStats)> {
    let mut cache = NewtonCache::new(prob.constant_stiff_jacobian);
    let (y, stats) = RkRunner::new(method).step(prob, y, h, cfg, &mut cache)?;
    Ok((y, stats))
}

struct RkRunner {
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    a_hat: DMatrix<f64>,
    b_hat: DMatrix<f64>,
}

impl RkRunner {
    fn new(m: &ImexRkMethod) -> Self {
        let s = m.stages();
        Self {
            u: DMatrix::from_element(s, 1, 1.0),
            v: DMatrix::from_element(1, 1, 1.0),
            a: m.a.clone(),
            b: DMatrix::from_row_slice(1, s, m.b.as_slice()),
            a_hat: m.a_hat.clone(),
            b_hat: DMatrix::from_row_slice(1, s, m.b_hat.as_slice()),
        }
    }

    fn step(
        &self,
        prob: &SplitProblem,
        y: &DVector<f64>,
        h: f64,
        cfg: &NewtonConfig,
        cache: &mut NewtonCache,
    ) -> Result<(DVector<f64>, StepStats)> {
        let coef = ImexCoefficients {
            u: &self.u,
            v: &self.v,
            a: &self.a,
            b: &self.b,
            a_hat: &self.a_hat,
            b_hat: &self.b_hat,
        };
        let state = IntegrationState::new(vec![y.clone()], 0.0, h);
        let mut out = imex_advance(&coef, &state, prob, cfg, cache)?;
        Ok((out.state.y_ext.swap_remove(0), out.stats))
    }
}

/// Integrates `prob` from `t0` to `tf` with constant step `h`; the point
/// solution is reported as `solution`.
pub fn rk_integrate(
    method: &ImexRkMethod,
    prob: &SplitProblem,
    h: f64,
    opts: &IntegrateOptions,
) -> Result<IntegrationResult> {
    let steps = step_count(prob.t0, prob.tf, h)?;
    if steps > opts.max_steps {
        return Err(Error::StepCountOverflow {
            steps,
            cap: opts.max_steps,
        });
    }
    let runner = RkRunner::new(method);
    let mut cache = NewtonCache::new(prob.constant_stiff_jacobian);
    let mut y = prob.y0.clone();
    let mut stats = StepStats::default();
    for _ in 0..steps {
        let (next, st) = runner.step(prob, &y, h, &opts.newton, &mut cache)?;
        stats += st;
        y = next;
    }
    Ok(IntegrationResult {
        state: IntegrationState {
            y_ext: vec![y.clone()],
            t: prob.t0 + steps as f64 * h,
            n: steps,
            h,
        },
        solution: Some(y),
        stats,
    })
}

/// `y` after `count` steps of size `tau`, with every intermediate value.
pub(crate) fn rk_trajectory(
    method: &ImexRkMethod,
    prob: &SplitProblem,
    tau: f64,
    count: usize,
    cfg: &NewtonConfig,
) -> Result<Vec<DVector<f64>>> {
    let runner = RkRunner::new(method);
    let mut cache = NewtonCache::new(prob.constant_stiff_jacobian);
    let mut out = vec![prob.y0.clone()];
    for _ in 0..count {
        let (next, _) = runner.step(prob, out.last().expect("non-empty"), tau, cfg, &mut cache)?;
        out.push(next);
    }
    Ok(out)
}
