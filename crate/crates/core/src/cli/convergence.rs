//! Convergence studies over a geometric sequence of step sizes.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{rk_integrate, start_analytic, start_imex_rk, ImexRkMethod, IMEX_RK_NAMES};
use crate::error::{Error, Result};
use crate::problems::{ProblemSpec, ReferencePolicy};
use crate::stepper::{integrate, IntegrateOptions, SplitProblem, StepStats};
use crate::tableau::{find_pair, ImexGlmPair, CATALOG_NAMES};

/// Environment variable naming the reference-solution cache directory.
pub const CACHE_ENV: &str = "IMEX_DIMSIM_CACHE";

/// Pair used for tiny-step reference runs.
const REFERENCE_PAIR: &str = "3B";

/// How the starting block is produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StartPolicy {
    Analytic,
    /// IMEX Runge-Kutta start with `tau = h * ratio`.
    ImexRk {
        ratio: f64,
    },
}

impl StartPolicy {
    pub const DEFAULT_RATIO: f64 = 0.1;

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "analytic" => Ok(StartPolicy::Analytic),
            "imexrk" => Ok(StartPolicy::ImexRk {
                ratio: Self::DEFAULT_RATIO,
            }),
            _ => Err(Error::InvalidParameter(format!(
                "unknown start policy '{text}'; available: analytic, imexrk"
            ))),
        }
    }
}

/// A method that can be run through a convergence study.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Integrator {
    Dimsim(ImexGlmPair),
    ImexRk(ImexRkMethod),
}

impl Integrator {
    /// A cataloged pair (`3B`, `IMEX-DIMSIM-3B`) or an IMEX RK method
    /// (`DIRK343`).
    pub fn by_name(name: &str) -> Result<Self> {
        if let Ok(pair) = find_pair(name) {
            return Ok(Integrator::Dimsim(pair));
        }
        ImexRkMethod::by_name(name)
            .map(Integrator::ImexRk)
            .map_err(|_| Error::UnknownMethod {
                name: name.to_string(),
                available: CATALOG_NAMES
                    .iter()
                    .chain(IMEX_RK_NAMES.iter())
                    .copied()
                    .collect::<Vec<_>>()
                    .join(", "),
            })
    }

    pub fn name(&self) -> String {
        match self {
            Integrator::Dimsim(p) => p.full_name(),
            Integrator::ImexRk(m) => m.name.clone(),
        }
    }

    /// Point solution at `prob.tf`.
    pub fn solve(
        &self,
        prob: &SplitProblem,
        h: f64,
        start: StartPolicy,
        opts: &IntegrateOptions,
    ) -> Result<(DVector<f64>, StepStats)> {
        let res = match self {
            Integrator::Dimsim(pair) => {
                let state = match start {
                    StartPolicy::Analytic => start_analytic(pair, prob, h)?,
                    StartPolicy::ImexRk { ratio } => {
                        let starter = ImexRkMethod::for_order(pair.order())?;
                        start_imex_rk(pair, prob, h, h * ratio, &starter, &opts.newton)?
                    }
                };
                let opts = IntegrateOptions {
                    terminate: true,
                    ..*opts
                };
                integrate(pair, prob, h, state, &opts)?
            }
            Integrator::ImexRk(m) => rk_integrate(m, prob, h, opts)?,
        };
        let y = res.solution.ok_or_else(|| {
            Error::InvalidParameter("integration produced no point solution".to_string())
        })?;
        Ok((y, res.stats))
    }
}

/// One step size of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub h: f64,
    pub error: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedLevel {
    pub h: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub method: String,
    pub problem: String,
    pub levels: Vec<LevelResult>,
    /// `log2(e_k / e_{k+1})` for consecutive levels.
    pub pairwise_orders: Vec<f64>,
    /// Slope of `log e` against `log h` over all levels.
    pub least_squares_order: Option<f64>,
    pub skipped: Vec<SkippedLevel>,
}

impl ConvergenceReport {
    pub fn from_levels(
        method: impl Into<String>,
        problem: impl Into<String>,
        levels: Vec<LevelResult>,
    ) -> Self {
        let pairwise_orders = levels
            .windows(2)
            .map(|w| (w[0].error / w[1].error).ln() / (w[0].h / w[1].h).ln())
            .collect();
        let least_squares_order = least_squares_slope(
            &levels.iter().map(|l| l.h).collect::<Vec<_>>(),
            &levels.iter().map(|l| l.error).collect::<Vec<_>>(),
        );
        Self {
            method: method.into(),
            problem: problem.into(),
            levels,
            pairwise_orders,
            least_squares_order,
            skipped: Vec::new(),
        }
    }

    pub fn finest_error(&self) -> Option<f64> {
        self.levels.last().map(|l| l.error)
    }
}

/// Least-squares slope of `log e` against `log h`; `None` with fewer than
/// two usable points.
pub fn least_squares_slope(h: &[f64], e: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(e)
        .filter(|(h, e)| **h > 0.0 && **e > 0.0 && e.is_finite())
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone)]
pub struct ConvergenceOptions {
    pub integrate: IntegrateOptions,
    pub cache_dir: Option<PathBuf>,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self {
            integrate: IntegrateOptions::default(),
            cache_dir: std::env::var_os(CACHE_ENV).map(PathBuf::from),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CachedReference {
    key: String,
    h_ref: f64,
    y: Vec<f64>,
}

fn cache_path(dir: &Path, key: &str, h_ref: f64) -> PathBuf {
    let name: String = format!("{key}-{REFERENCE_PAIR}-href{h_ref:e}")
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    dir.join(format!("{name}.json"))
}

/// Solution of `spec` at its final time, accurate enough to measure the
/// error of runs with step sizes down to `h_min`.
pub fn reference_solution(
    spec: &ProblemSpec,
    prob: &SplitProblem,
    h_min: f64,
    opts: &ConvergenceOptions,
) -> Result<DVector<f64>> {
    match spec.reference() {
        ReferencePolicy::Exact => {
            let exact = prob.exact.as_ref().ok_or_else(|| {
                Error::InvalidParameter(format!("problem '{}' has no exact solution", prob.name))
            })?;
            Ok(exact(prob.tf))
        }
        ReferencePolicy::TinyStep { divisor, unsplit } => {
            let h_ref = h_min / divisor as f64;
            let key = spec.key();
            let path = opts.cache_dir.as_ref().map(|d| cache_path(d, &key, h_ref));
            if let Some(path) = &path {
                if let Ok(text) = fs::read_to_string(path) {
                    if let Ok(c) = serde_json::from_str::<CachedReference>(&text) {
                        if c.key == key && c.h_ref == h_ref && c.y.len() == prob.dim {
                            return Ok(DVector::from_vec(c.y));
                        }
                    }
                }
            }
            let pair = find_pair(REFERENCE_PAIR)?;
            let target = if unsplit {
                prob.unsplit()
            } else {
                prob.clone()
            };
            let start = start_analytic(&pair, &target, h_ref)?;
            let res = integrate(&pair, &target, h_ref, start, &opts.integrate)?;
            let y = res.solution.expect("terminated run has a solution");
            if let Some(path) = &path {
                let record = CachedReference {
                    key,
                    h_ref,
                    y: y.iter().copied().collect(),
                };
                fs::create_dir_all(path.parent().unwrap_or(Path::new(".")))
                    .and_then(|_| {
                        fs::write(path, serde_json::to_string(&record).expect("plain data"))
                    })
                    .map_err(|e| Error::io(path, e))?;
            }
            Ok(y)
        }
    }
}

/// Integrates at `h0 / 2^k`, `k = 0..levels`, concurrently, and measures
/// the terminal error against the problem's reference. Failed levels are
/// skipped with a warning.
pub fn run_convergence(
    method: &Integrator,
    spec: &ProblemSpec,
    h0: f64,
    levels: usize,
    start: StartPolicy,
    opts: &ConvergenceOptions,
) -> Result<ConvergenceReport> {
    if levels < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 levels, got {levels}"
        )));
    }
    if !(h0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "h0 must be positive, got {h0}"
        )));
    }
    let prob = spec.build()?;
    let hs: Vec<f64> = (0..levels).map(|k| h0 / 2f64.powi(k as i32)).collect();
    let h_min = hs[levels - 1];
    let (reference, runs) = rayon::join(
        || reference_solution(spec, &prob, h_min, opts),
        || {
            hs.par_iter()
                .map(|&h| {
                    let started = Instant::now();
                    let res = method.solve(&prob, h, start, &opts.integrate);
                    (h, res, started.elapsed().as_secs_f64())
                })
                .collect::<Vec<_>>()
        },
    );
    let reference = reference?;
    let mut good = Vec::new();
    let mut skipped = Vec::new();
    for (h, res, secs) in runs {
        match res {
            Ok((y, _)) => good.push(LevelResult {
                h,
                error: prob.error_norm(&y, &reference),
                wall_seconds: secs,
            }),
            Err(e) => {
                eprintln!("warning: {} at h = {h}: {e}; level skipped", method.name());
                skipped.push(SkippedLevel {
                    h,
                    reason: e.to_string(),
                });
            }
        }
    }
    let mut report = ConvergenceReport::from_levels(method.name(), spec.key(), good);
    report.skipped = skipped;
    Ok(report)
}
