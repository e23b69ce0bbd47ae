//! Time stepping for single GLMs and IMEX-GLM pairs on a uniform grid.

mod newton;
mod problem;

use std::ops::{AddAssign, Range};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use newton::{solve_stage, IterationMatrix, NewtonConfig, StageSolution};
pub use problem::{
    finite_difference_jacobian, DerivativeFn, ErrorNorm, JacobianFn, JacobianRef, SolutionFn,
    SplitDerivatives, SplitProblem, VectorField,
};

use crate::bootstrap;
use crate::error::{Error, Result};
use crate::tableau::{GlmTableau, ImexGlmPair};

type Rhs<'a> = &'a dyn Fn(&DVector<f64>) -> DVector<f64>;

/// The external block `y^[n]` at `t = t0 + n h`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationState {
    pub y_ext: Vec<DVector<f64>>,
    pub t: f64,
    pub n: usize,
    pub h: f64,
}

impl IntegrationState {
    pub fn new(y_ext: Vec<DVector<f64>>, t: f64, h: f64) -> Self {
        Self { y_ext, t, n: 0, h }
    }

    pub fn r(&self) -> usize {
        self.y_ext.len()
    }

    pub fn dim(&self) -> usize {
        self.y_ext.first().map_or(0, |y| y.len())
    }

    fn check(&self, r: usize) -> Result<()> {
        if self.y_ext.len() != r {
            return Err(Error::dims("external stages", r, self.y_ext.len()));
        }
        let d = self.dim();
        if self.y_ext.iter().any(|y| y.len() != d) {
            return Err(Error::dims("external stage dimension", d, "ragged block"));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "step size {} must be positive",
                self.h
            )));
        }
        Ok(())
    }
}

/// Work counters, accumulated over steps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub steps: usize,
    pub newton_iterations: usize,
    pub f_evals: usize,
    pub g_evals: usize,
    pub jacobian_evals: usize,
    pub factorizations: usize,
}

impl AddAssign for StepStats {
    fn add_assign(&mut self, o: Self) {
        self.steps += o.steps;
        self.newton_iterations += o.newton_iterations;
        self.f_evals += o.f_evals;
        self.g_evals += o.g_evals;
        self.jacobian_evals += o.jacobian_evals;
        self.factorizations += o.factorizations;
    }
}

/// One completed step: the new block plus the stage data needed for
/// termination.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: IntegrationState,
    pub stages: Vec<DVector<f64>>,
    /// Nonstiff stage derivatives (zeros when there is no explicit part).
    pub f_stages: Vec<DVector<f64>>,
    /// Stiff stage derivatives (zeros when there is no implicit part).
    pub g_stages: Vec<DVector<f64>>,
    pub stats: StepStats,
}

/// Iteration matrix kept between stages, and between steps when the stiff
/// Jacobian is constant.
#[derive(Debug, Default)]
pub struct NewtonCache {
    constant: bool,
    current: Option<(f64, IterationMatrix)>,
}

impl NewtonCache {
    pub fn new(constant_jacobian: bool) -> Self {
        Self {
            constant: constant_jacobian,
            current: None,
        }
    }
}

struct Part<'a> {
    a: &'a DMatrix<f64>,
    b: &'a DMatrix<f64>,
    rhs: Rhs<'a>,
}

struct ImplicitPart<'a> {
    part: Part<'a>,
    jac: Option<JacobianRef<'a>>,
}

fn fd_jacobian(rhs: Rhs<'_>, y: &DVector<f64>) -> DMatrix<f64> {
    let g0 = rhs(y);
    let mut jac = DMatrix::zeros(g0.len(), y.len());
    let mut probe = y.clone();
    for j in 0..y.len() {
        let delta = f64::EPSILON.sqrt() * y[j].abs().max(1.0);
        probe[j] = y[j] + delta;
        let step = probe[j] - y[j];
        jac.set_column(j, &((rhs(&probe) - &g0) / step));
        probe[j] = y[j];
    }
    jac
}

/// Shared stage loop for `Y = h A F + h Ahat G + U y`, `y' = h B F + h Bhat G + V y`.
fn advance(
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
    explicit: Option<Part<'_>>,
    implicit: Option<ImplicitPart<'_>>,
    state: &IntegrationState,
    cfg: &NewtonConfig,
    cache: &mut NewtonCache,
) -> Result<StepOutcome> {
    let (s, r) = (u.nrows(), v.nrows());
    state.check(r)?;
    let h = state.h;
    let d = state.dim();
    let mut stats = StepStats {
        steps: 1,
        ..StepStats::default()
    };
    if !cache.constant {
        cache.current = None;
    }

    let mut stages = Vec::with_capacity(s);
    let mut fs: Vec<DVector<f64>> = Vec::with_capacity(s);
    let mut gs: Vec<DVector<f64>> = Vec::with_capacity(s);
    for i in 0..s {
        let mut known = DVector::zeros(d);
        for (j, yj) in state.y_ext.iter().enumerate() {
            let uij = u[(i, j)];
            if uij != 0.0 {
                known.axpy(uij, yj, 1.0);
            }
        }
        for j in 0..i {
            if let Some(p) = &explicit {
                let a = p.a[(i, j)];
                if a != 0.0 {
                    known.axpy(h * a, &fs[j], 1.0);
                }
            }
            if let Some(p) = &implicit {
                let a = p.part.a[(i, j)];
                if a != 0.0 {
                    known.axpy(h * a, &gs[j], 1.0);
                }
            }
        }

        let lam = implicit.as_ref().map_or(0.0, |p| p.part.a[(i, i)]);
        let y = match &implicit {
            Some(imp) if lam != 0.0 => {
                let hl = h * lam;
                if !cfg.jacobian_reuse {
                    cache.current = None;
                }
                if cache.current.as_ref().is_none_or(|(key, _)| *key != hl) {
                    let jac = match imp.jac {
                        Some(jac) => jac(&known),
                        None => {
                            stats.g_evals += d + 1;
                            fd_jacobian(imp.part.rhs, &known)
                        }
                    };
                    stats.jacobian_evals += 1;
                    let m =
                        IterationMatrix::new(hl, &jac).map_err(|_| Error::NewtonDivergence {
                            stage: i + 1,
                            iterations: 0,
                        })?;
                    stats.factorizations += 1;
                    cache.current = Some((hl, m));
                }
                let (_, matrix) = cache.current.as_ref().expect("iteration matrix just built");
                let scale = DVector::from_element(d, hl);
                let sol = newton::iterate(matrix, &scale, &known, imp.part.rhs, cfg, i + 1)?;
                stats.newton_iterations += sol.iterations;
                stats.g_evals += sol.g_evals;
                sol.y
            }
            _ => known,
        };

        fs.push(match &explicit {
            Some(p) => {
                stats.f_evals += 1;
                (p.rhs)(&y)
            }
            None => DVector::zeros(d),
        });
        gs.push(match &implicit {
            Some(p) => {
                stats.g_evals += 1;
                (p.part.rhs)(&y)
            }
            None => DVector::zeros(d),
        });
        stages.push(y);
    }

    let mut y_ext = Vec::with_capacity(r);
    for i in 0..r {
        let mut yi = DVector::zeros(d);
        for (j, yj) in state.y_ext.iter().enumerate() {
            let vij = v[(i, j)];
            if vij != 0.0 {
                yi.axpy(vij, yj, 1.0);
            }
        }
        for j in 0..s {
            if let Some(p) = &explicit {
                let b = p.b[(i, j)];
                if b != 0.0 {
                    yi.axpy(h * b, &fs[j], 1.0);
                }
            }
            if let Some(p) = &implicit {
                let b = p.part.b[(i, j)];
                if b != 0.0 {
                    yi.axpy(h * b, &gs[j], 1.0);
                }
            }
        }
        y_ext.push(yi);
    }

    Ok(StepOutcome {
        state: IntegrationState {
            y_ext,
            t: state.t + h,
            n: state.n + 1,
            h,
        },
        stages,
        f_stages: fs,
        g_stages: gs,
        stats,
    })
}

/// One step of a single GLM on `y' = rhs(y)`. Stages of an implicit
/// tableau are solved by simplified Newton; `jac` defaults to forward
/// differences.
pub fn glm_step(
    t: &GlmTableau,
    state: &IntegrationState,
    rhs: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    jac: Option<JacobianRef<'_>>,
    cfg: &NewtonConfig,
) -> Result<StepOutcome> {
    let part = Part {
        a: &t.a,
        b: &t.b,
        rhs,
    };
    let mut cache = NewtonCache::default();
    if t.is_explicit() {
        advance(&t.u, &t.v, Some(part), None, state, cfg, &mut cache)
    } else {
        advance(
            &t.u,
            &t.v,
            None,
            Some(ImplicitPart { part, jac }),
            state,
            cfg,
            &mut cache,
        )
    }
}

/// One IMEX step: `f` through the explicit member, `g` through the implicit one.
pub fn imex_step(
    pair: &ImexGlmPair,
    state: &IntegrationState,
    prob: &SplitProblem,
    cfg: &NewtonConfig,
) -> Result<StepOutcome> {
    imex_step_cached(pair, state, prob, cfg, &mut NewtonCache::new(false))
}

/// As [`imex_step`], reusing `cache` across calls.
pub fn imex_step_cached(
    pair: &ImexGlmPair,
    state: &IntegrationState,
    prob: &SplitProblem,
    cfg: &NewtonConfig,
    cache: &mut NewtonCache,
) -> Result<StepOutcome> {
    let coef = ImexCoefficients {
        u: &pair.explicit.u,
        v: &pair.explicit.v,
        a: &pair.explicit.a,
        b: &pair.explicit.b,
        a_hat: &pair.implicit.a,
        b_hat: &pair.implicit.b,
    };
    imex_advance(&coef, state, prob, cfg, cache)
}

/// Coefficients of an additive GLM; IMEX Runge-Kutta methods fit with
/// `r = 1`, `U = 1`, `V = 1`.
pub(crate) struct ImexCoefficients<'a> {
    pub u: &'a DMatrix<f64>,
    pub v: &'a DMatrix<f64>,
    pub a: &'a DMatrix<f64>,
    pub b: &'a DMatrix<f64>,
    pub a_hat: &'a DMatrix<f64>,
    pub b_hat: &'a DMatrix<f64>,
}

pub(crate) fn imex_advance(
    coef: &ImexCoefficients<'_>,
    state: &IntegrationState,
    prob: &SplitProblem,
    cfg: &NewtonConfig,
    cache: &mut NewtonCache,
) -> Result<StepOutcome> {
    let f = |y: &DVector<f64>| prob.f(y);
    let g = |y: &DVector<f64>| prob.g(y);
    let jac_fn = prob.stiff_jacobian.clone();
    let jac = jac_fn.as_ref().map(|j| j.as_ref() as JacobianRef<'_>);
    let explicit = Part {
        a: coef.a,
        b: coef.b,
        rhs: &f,
    };
    let implicit = ImplicitPart {
        part: Part {
            a: coef.a_hat,
            b: coef.b_hat,
            rhs: &g,
        },
        jac,
    };
    advance(
        coef.u,
        coef.v,
        Some(explicit),
        Some(implicit),
        state,
        cfg,
        cache,
    )
}

/// Options for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub newton: NewtonConfig,
    /// Refuse to run more steps than this.
    pub max_steps: usize,
    /// Apply the termination procedure after the last step.
    pub terminate: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            newton: NewtonConfig::default(),
            max_steps: 50_000_000,
            terminate: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IntegrationResult {
    pub state: IntegrationState,
    /// Point solution at the final time when termination was requested.
    pub solution: Option<DVector<f64>>,
    pub stats: StepStats,
}

/// Number of steps of size `h` from `t0` to `tf`, which must be an integer
/// to within 1e-9.
pub fn step_count(t0: f64, tf: f64, h: f64) -> Result<usize> {
    if !(h > 0.0) || !h.is_finite() || !(tf >= t0) {
        return Err(Error::StepMismatch { t0, tf, h });
    }
    let x = (tf - t0) / h;
    let n = x.round();
    if (x - n).abs() > 1e-9 || n > usize::MAX as f64 {
        return Err(Error::StepMismatch { t0, tf, h });
    }
    Ok(n as usize)
}

/// Runs `pair` from `start` to `prob.tf` with step `h`.
pub fn integrate(
    pair: &ImexGlmPair,
    prob: &SplitProblem,
    h: f64,
    start: IntegrationState,
    opts: &IntegrateOptions,
) -> Result<IntegrationResult> {
    let steps = step_count(start.t, prob.tf, h)?;
    if steps > opts.max_steps {
        return Err(Error::StepCountOverflow {
            steps,
            cap: opts.max_steps,
        });
    }
    if opts.terminate && steps == 0 {
        return Err(Error::InvalidParameter(
            "termination needs at least one step".to_string(),
        ));
    }
    let t0 = start.t;
    let n0 = start.n;
    let mut state = IntegrationState { h, ..start };
    let mut stats = StepStats::default();
    let mut cache = NewtonCache::new(prob.constant_stiff_jacobian);
    let mut solution = None;
    for k in 0..steps {
        let mut out = imex_step_cached(pair, &state, prob, &opts.newton, &mut cache)?;
        stats += out.stats;
        // Recompute time from the step index to avoid drift.
        out.state.t = t0 + (k + 1) as f64 * h;
        if k + 1 == steps && opts.terminate {
            solution = Some(bootstrap::terminate(
                pair,
                h,
                &out.f_stages,
                &out.g_stages,
                &state.y_ext,
            ));
        }
        state = out.state;
    }
    debug_assert_eq!(state.n, n0 + steps);
    Ok(IntegrationResult {
        state,
        solution,
        stats,
    })
}

/// A block of components advanced by one tableau in [`partitioned_step`].
#[derive(Debug, Clone)]
pub struct Partition<'a> {
    pub tableau: &'a GlmTableau,
    pub components: Range<usize>,
}

/// One step of a component-partitioned GLM: component `c` in partition `m`
/// uses the coefficients of `parts[m].tableau`. Implicit stages are solved
/// together with per-component diagonal `a^m_ii`. Partitions must cover
/// `0..d` and share `s` and `r`.
pub fn partitioned_step(
    parts: &[Partition<'_>],
    state: &IntegrationState,
    rhs: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    jac: Option<JacobianRef<'_>>,
    cfg: &NewtonConfig,
) -> Result<StepOutcome> {
    let first = parts
        .first()
        .ok_or_else(|| Error::InvalidParameter("no partitions".to_string()))?
        .tableau;
    let (s, r) = (first.s(), first.r());
    state.check(r)?;
    let d = state.dim();
    let mut owner = vec![usize::MAX; d];
    for (m, p) in parts.iter().enumerate() {
        if p.tableau.s() != s || p.tableau.r() != r {
            return Err(Error::dims(
                "partition tableau",
                format!("s={s}, r={r}"),
                p.tableau.s(),
            ));
        }
        for c in p.components.clone() {
            if c >= d || owner[c] != usize::MAX {
                return Err(Error::InvalidParameter(format!(
                    "component {c} is not covered exactly once"
                )));
            }
            owner[c] = m;
        }
    }
    if owner.contains(&usize::MAX) {
        return Err(Error::InvalidParameter(
            "partitions do not cover every component".to_string(),
        ));
    }
    let coef = |mat: fn(&GlmTableau) -> &DMatrix<f64>, i: usize, j: usize| -> DVector<f64> {
        DVector::from_fn(d, |c, _| mat(parts[owner[c]].tableau)[(i, j)])
    };

    let h = state.h;
    let mut stats = StepStats {
        steps: 1,
        ..StepStats::default()
    };
    let mut current: Option<(DVector<f64>, IterationMatrix)> = None;
    let mut stages = Vec::with_capacity(s);
    let mut fs: Vec<DVector<f64>> = Vec::with_capacity(s);
    for i in 0..s {
        let mut known = DVector::zeros(d);
        for (j, yj) in state.y_ext.iter().enumerate() {
            let uij = coef(|t| &t.u, i, j);
            for c in 0..d {
                if uij[c] != 0.0 {
                    known[c] += uij[c] * yj[c];
                }
            }
        }
        for (j, fj) in fs.iter().enumerate() {
            let aij = coef(|t| &t.a, i, j);
            for c in 0..d {
                if aij[c] != 0.0 {
                    known[c] += (h * aij[c]) * fj[c];
                }
            }
        }
        let scale = coef(|t| &t.a, i, i) * h;
        let y = if scale.iter().all(|x| *x == 0.0) {
            known
        } else {
            if !cfg.jacobian_reuse || current.as_ref().is_none_or(|(key, _)| *key != scale) {
                let jm = match jac {
                    Some(jac) => jac(&known),
                    None => {
                        stats.f_evals += d + 1;
                        fd_jacobian(rhs, &known)
                    }
                };
                stats.jacobian_evals += 1;
                let m = IterationMatrix::with_row_scales(&scale, &jm).map_err(|_| {
                    Error::NewtonDivergence {
                        stage: i + 1,
                        iterations: 0,
                    }
                })?;
                stats.factorizations += 1;
                current = Some((scale.clone(), m));
            }
            let (_, matrix) = current.as_ref().expect("iteration matrix just built");
            let sol = newton::iterate(matrix, &scale, &known, rhs, cfg, i + 1)?;
            stats.newton_iterations += sol.iterations;
            stats.f_evals += sol.g_evals;
            sol.y
        };
        stats.f_evals += 1;
        fs.push(rhs(&y));
        stages.push(y);
    }

    let mut y_ext = Vec::with_capacity(r);
    for i in 0..r {
        let mut yi = DVector::zeros(d);
        for (j, yj) in state.y_ext.iter().enumerate() {
            let vij = coef(|t| &t.v, i, j);
            for c in 0..d {
                if vij[c] != 0.0 {
                    yi[c] += vij[c] * yj[c];
                }
            }
        }
        for (j, fj) in fs.iter().enumerate() {
            let bij = coef(|t| &t.b, i, j);
            for c in 0..d {
                if bij[c] != 0.0 {
                    yi[c] += (h * bij[c]) * fj[c];
                }
            }
        }
        y_ext.push(yi);
    }
    let zeros = vec![DVector::zeros(d); s];
    let implicit_only = parts.iter().all(|p| !p.tableau.is_explicit());
    let (f_stages, g_stages) = if implicit_only {
        (zeros, fs)
    } else {
        (fs, zeros)
    };
    Ok(StepOutcome {
        state: IntegrationState {
            y_ext,
            t: state.t + h,
            n: state.n + 1,
            h,
        },
        stages,
        f_stages,
        g_stages,
        stats,
    })
}
