use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

/// A right-hand side `state -> derivative`.
pub type VectorField = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
/// A Jacobian `state -> d x d matrix`.
pub type JacobianFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
/// Borrowed Jacobian callback.
pub type JacobianRef<'a> = &'a dyn Fn(&DVector<f64>) -> DMatrix<f64>;
/// Analytic start data up to a requested order.
pub type DerivativeFn = Arc<dyn Fn(usize) -> SplitDerivatives + Send + Sync>;
/// Closed-form solution `t -> y(t)`.
pub type SolutionFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

/// Derivatives at `t0` of the two additive parts of the solution.
///
/// With `y = x + z`, `x' = f(y)`, `z' = g(y)`, entry `k - 1` holds `x^(k)(t0)`
/// (resp. `z^(k)(t0)`) for `k = 1, 2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDerivatives {
    pub nonstiff: Vec<DVector<f64>>,
    pub stiff: Vec<DVector<f64>>,
}

impl SplitDerivatives {
    pub fn zeros(dim: usize, order: usize) -> Self {
        Self {
            nonstiff: vec![DVector::zeros(dim); order],
            stiff: vec![DVector::zeros(dim); order],
        }
    }

    pub fn order(&self) -> usize {
        self.nonstiff.len().min(self.stiff.len())
    }
}

/// How errors against a reference are measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorNorm {
    /// Euclidean norm over the observed components.
    Euclidean,
    /// `sqrt(dx * sum e_i^2)`, the discrete L2 norm on a uniform grid.
    Grid { dx: f64 },
}

/// An additively split initial value problem `y' = f(y) + g(y)` with `f`
/// nonstiff (explicit) and `g` stiff (implicit).
///
/// Nonautonomous problems carry time as the last state component, with
/// derivative 1 in the nonstiff part.
#[derive(Clone)]
pub struct SplitProblem {
    pub name: String,
    pub dim: usize,
    pub t0: f64,
    pub tf: f64,
    pub y0: DVector<f64>,
    pub nonstiff: VectorField,
    pub stiff: VectorField,
    pub stiff_jacobian: Option<JacobianFn>,
    pub nonstiff_jacobian: Option<JacobianFn>,
    /// `g` is linear, so its Jacobian (and the Newton matrix for a fixed
    /// step) never changes.
    pub constant_stiff_jacobian: bool,
    pub derivatives: Option<DerivativeFn>,
    pub exact: Option<SolutionFn>,
    /// Number of leading components that make up the solution proper.
    pub observed: usize,
    pub norm: ErrorNorm,
}

impl fmt::Debug for SplitProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SplitProblem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("t0", &self.t0)
            .field("tf", &self.tf)
            .field("y0", &self.y0)
            .finish_non_exhaustive()
    }
}

impl SplitProblem {
    /// A problem with the given parts and no optional data.
    pub fn new(
        name: impl Into<String>,
        t0: f64,
        tf: f64,
        y0: DVector<f64>,
        nonstiff: VectorField,
        stiff: VectorField,
    ) -> Self {
        let dim = y0.len();
        Self {
            name: name.into(),
            dim,
            t0,
            tf,
            y0,
            nonstiff,
            stiff,
            stiff_jacobian: None,
            nonstiff_jacobian: None,
            constant_stiff_jacobian: false,
            derivatives: None,
            exact: None,
            observed: dim,
            norm: ErrorNorm::Euclidean,
        }
    }

    pub fn f(&self, y: &DVector<f64>) -> DVector<f64> {
        (self.nonstiff)(y)
    }

    pub fn g(&self, y: &DVector<f64>) -> DVector<f64> {
        (self.stiff)(y)
    }

    /// Jacobian of `g`, analytic when supplied and by forward differences
    /// otherwise.
    pub fn jac_g(&self, y: &DVector<f64>) -> DMatrix<f64> {
        match &self.stiff_jacobian {
            Some(jac) => jac(y),
            None => finite_difference_jacobian(self.stiff.as_ref(), y),
        }
    }

    pub fn with_interval(mut self, t0: f64, tf: f64) -> Self {
        self.t0 = t0;
        self.tf = tf;
        self
    }

    /// The same ODE with everything moved into the stiff part: `f = 0`,
    /// `g = f + g`. Integrating this with an IMEX pair runs the implicit
    /// member alone.
    pub fn unsplit(&self) -> SplitProblem {
        let f = self.nonstiff.clone();
        let g = self.stiff.clone();
        let dim = self.dim;
        let mut out = self.clone();
        out.name = format!("{}-unsplit", self.name);
        out.nonstiff = Arc::new(move |_y: &DVector<f64>| DVector::zeros(dim));
        out.stiff = Arc::new(move |y: &DVector<f64>| f(y) + g(y));
        out.nonstiff_jacobian = None;
        out.stiff_jacobian = match (&self.nonstiff_jacobian, &self.stiff_jacobian) {
            (Some(jf), Some(jg)) => {
                let (jf, jg) = (jf.clone(), jg.clone());
                Some(Arc::new(move |y: &DVector<f64>| jf(y) + jg(y)))
            }
            _ => None,
        };
        out.constant_stiff_jacobian = false;
        out.derivatives = self.derivatives.clone().map(|d| -> DerivativeFn {
            Arc::new(move |order| {
                let parts = d(order);
                let stiff = parts
                    .nonstiff
                    .iter()
                    .zip(&parts.stiff)
                    .map(|(x, z)| x + z)
                    .collect::<Vec<_>>();
                SplitDerivatives {
                    nonstiff: vec![DVector::zeros(dim); stiff.len()],
                    stiff,
                }
            })
        });
        out
    }

    /// Error of `y` against `reference` over the observed components.
    pub fn error_norm(&self, y: &DVector<f64>, reference: &DVector<f64>) -> f64 {
        let n = self.observed;
        let sq: f64 = (0..n).map(|i| (y[i] - reference[i]).powi(2)).sum();
        match self.norm {
            ErrorNorm::Euclidean => sq.sqrt(),
            ErrorNorm::Grid { dx } => (dx * sq).sqrt(),
        }
    }
}

/// Forward-difference Jacobian with steps `sqrt(eps) * max(1, |y_j|)`.
pub fn finite_difference_jacobian(
    rhs: &(dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync),
    y: &DVector<f64>,
) -> DMatrix<f64> {
    let n = y.len();
    let f0 = rhs(y);
    let mut jac = DMatrix::zeros(f0.len(), n);
    let mut probe = y.clone();
    for j in 0..n {
        let delta = f64::EPSILON.sqrt() * y[j].abs().max(1.0);
        probe[j] = y[j] + delta;
        let step = probe[j] - y[j];
        let fj = rhs(&probe);
        jac.set_column(j, &((fj - &f0) / step));
        probe[j] = y[j];
    }
    jac
}
