//! Test problems as split initial value problems.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TruncatedSeries;
use crate::stepper::{ErrorNorm, SplitDerivatives, SplitProblem};

pub const PROBLEM_NAMES: [&str; 4] = ["vdp", "pr", "linear", "advdiff"];

/// Below this `eps` the van der Pol start derivatives are expanded in `eps`
/// instead of evaluated directly, which would divide rounding errors by
/// `eps^3`.
const VDP_SERIES_EPS: f64 = 1e-3;

/// Slow-manifold initial value `z(0)` as a series in `eps`.
fn vdp_z0_series() -> TruncatedSeries {
    TruncatedSeries::from_coeffs(vec![
        -2.0 / 3.0,
        10.0 / 81.0,
        -292.0 / 2187.0,
        -1814.0 / 19683.0,
    ])
}

/// `z(0) = -2/3 + 10/81 eps - 292/2187 eps^2 - 1814/19683 eps^3`.
pub fn vdp_z0(eps: f64) -> f64 {
    vdp_z0_series().eval(eps)
}

/// `(G, G', G'')` at `t = 0`, where `z' = G = ((1 - y^2) z - y) / eps` and
/// `y' = z`. Differentiating along the solution:
///
/// ```text
/// G'  = (-2 y z^2 + (1 - y^2) G - z) / eps
/// G'' = (-2 z^3 - 6 y z G + (1 - y^2) G' - G) / eps
/// ```
fn vdp_stiff_derivatives(eps: f64) -> [f64; 3] {
    if eps >= VDP_SERIES_EPS {
        vdp_derivatives_direct(eps)
    } else {
        vdp_derivatives_series(eps)
    }
}

fn vdp_derivatives_direct(eps: f64) -> [f64; 3] {
    let y = 2.0;
    let z = vdp_z0(eps);
    let g = ((1.0 - y * y) * z - y) / eps;
    let g1 = (-2.0 * y * z * z + (1.0 - y * y) * g - z) / eps;
    let g2 = (-2.0 * z * z * z - 6.0 * y * z * g + (1.0 - y * y) * g1 - g) / eps;
    [g, g1, g2]
}

/// The same formulas on series in `eps`. Every numerator has a vanishing
/// constant term, so dividing by `eps` is a shift; the result is accurate
/// to `O(eps)`.
fn vdp_derivatives_series(eps: f64) -> [f64; 3] {
    let y = 2.0;
    let z = vdp_z0_series();
    let k = z.order();
    let c = |v: f64, order: usize| TruncatedSeries::constant(v, order);
    let g = (&(&z * &c(1.0 - y * y, k)) - &c(y, k)).unshift();
    let zz = &z * &z;
    let g1 = (&(&(&zz * &c(-2.0 * y, k)) + &(&g * &c(1.0 - y * y, k))) - &z).unshift();
    let g2 = {
        let a = &(&zz * &z) * &c(-2.0, k);
        let b = &(&z * &g) * &c(-6.0 * y, k);
        let d = &g1 * &c(1.0 - y * y, k);
        (&(&(&a + &b) + &d) - &g).unshift()
    };
    [g.eval(eps), g1.eval(eps), g2.eval(eps)]
}

/// Van der Pol in the stiff scaling on `[0, 0.5]`:
/// `y' = z`, `z' = ((1 - y^2) z - y) / eps`, split as `f = [z, 0]`,
/// `g = [0, ((1 - y^2) z - y) / eps]`.
pub fn van_der_pol(eps: f64) -> Result<SplitProblem> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "van der Pol needs eps > 0, got {eps}"
        )));
    }
    let y0 = DVector::from_column_slice(&[2.0, vdp_z0(eps)]);
    let mut p = SplitProblem::new(
        "vdp",
        0.0,
        0.5,
        y0,
        Arc::new(|y: &DVector<f64>| DVector::from_column_slice(&[y[1], 0.0])),
        Arc::new(move |y: &DVector<f64>| {
            DVector::from_column_slice(&[0.0, ((1.0 - y[0] * y[0]) * y[1] - y[0]) / eps])
        }),
    );
    p.stiff_jacobian = Some(Arc::new(move |y: &DVector<f64>| {
        DMatrix::from_row_slice(
            2,
            2,
            &[
                0.0,
                0.0,
                (-2.0 * y[0] * y[1] - 1.0) / eps,
                (1.0 - y[0] * y[0]) / eps,
            ],
        )
    }));
    p.nonstiff_jacobian = Some(Arc::new(|_y: &DVector<f64>| {
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])
    }));
    let z0 = vdp_z0(eps);
    let [g, g1, g2] = vdp_stiff_derivatives(eps);
    // x' = [z, 0], x'' = [z', 0], x''' = [z'', 0]; the stiff part carries
    // z^(k) = [0, z^(k)].
    let nonstiff = [z0, g, g1];
    let stiff = [g, g1, g2];
    p.derivatives = Some(Arc::new(move |order| {
        let k = order.min(3);
        SplitDerivatives {
            nonstiff: (0..k)
                .map(|i| DVector::from_column_slice(&[nonstiff[i], 0.0]))
                .collect(),
            stiff: (0..k)
                .map(|i| DVector::from_column_slice(&[0.0, stiff[i]]))
                .collect(),
        }
    }));
    Ok(p)
}

/// A scalar function with all derivatives available.
#[derive(Clone)]
pub struct SmoothFunction {
    pub name: String,
    derivative: Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>,
}

impl fmt::Debug for SmoothFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmoothFunction({})", self.name)
    }
}

impl SmoothFunction {
    pub fn new(
        name: impl Into<String>,
        derivative: impl Fn(f64, usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            derivative: Arc::new(derivative),
        }
    }

    pub fn sin() -> Self {
        Self::new("sin", |t, k| match k % 4 {
            0 => t.sin(),
            1 => t.cos(),
            2 => -t.sin(),
            _ => -t.cos(),
        })
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.derivative)(t, 0)
    }

    /// The `k`-th derivative at `t`.
    pub fn derivative(&self, t: f64, k: usize) -> f64 {
        (self.derivative)(t, k)
    }
}

/// Prothero-Robinson `y' = mu (y - phi(t)) + phi'(t)` on `[0, 1]`, with time
/// appended as a second state: `f = [phi'(t), 1]`, `g = [mu (y - phi(t)), 0]`.
pub fn prothero_robinson(mu: f64, phi: SmoothFunction) -> Result<SplitProblem> {
    if !(mu < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Prothero-Robinson needs mu < 0, got {mu}"
        )));
    }
    let t0 = 0.0;
    let y0 = DVector::from_column_slice(&[phi.value(t0), t0]);
    let (pf, pg, pj, pe, pd) = (phi.clone(), phi.clone(), phi.clone(), phi.clone(), phi);
    let mut p = SplitProblem::new(
        "pr",
        t0,
        1.0,
        y0,
        Arc::new(move |y: &DVector<f64>| {
            DVector::from_column_slice(&[pf.derivative(y[1], 1), 1.0])
        }),
        Arc::new(move |y: &DVector<f64>| {
            DVector::from_column_slice(&[mu * (y[0] - pg.value(y[1])), 0.0])
        }),
    );
    p.stiff_jacobian = Some(Arc::new(move |y: &DVector<f64>| {
        DMatrix::from_row_slice(2, 2, &[mu, -mu * pj.derivative(y[1], 1), 0.0, 0.0])
    }));
    p.exact = Some(Arc::new(move |t| {
        DVector::from_column_slice(&[pe.value(t), t])
    }));
    // Along y = phi the stiff part vanishes identically.
    p.derivatives = Some(Arc::new(move |order| SplitDerivatives {
        nonstiff: (1..=order)
            .map(|k| {
                DVector::from_column_slice(&[pd.derivative(t0, k), if k == 1 { 1.0 } else { 0.0 }])
            })
            .collect(),
        stiff: vec![DVector::zeros(2); order],
    }));
    p.observed = 1;
    Ok(p)
}

/// Real matrix of multiplication by `z`: `1 x 1` when every coefficient is
/// real, otherwise `[[re, -im], [im, re]]` on `(Re y, Im y)`.
fn real_form(z: Complex64, dim: usize) -> DMatrix<f64> {
    if dim == 1 {
        DMatrix::from_element(1, 1, z.re)
    } else {
        DMatrix::from_row_slice(2, 2, &[z.re, -z.im, z.im, z.re])
    }
}

fn linear_derivatives(
    f: DMatrix<f64>,
    g: DMatrix<f64>,
    y0: DVector<f64>,
) -> crate::stepper::DerivativeFn {
    Arc::new(move |order| {
        let l = &f + &g;
        let mut power = y0.clone();
        let mut out = SplitDerivatives {
            nonstiff: Vec::with_capacity(order),
            stiff: Vec::with_capacity(order),
        };
        for _ in 0..order {
            out.nonstiff.push(&f * &power);
            out.stiff.push(&g * &power);
            power = &l * power;
        }
        out
    })
}

/// `y' = xi y + xi_hat y`, `y(0) = 1` on `[0, 1]`.
pub fn linear_test(xi: Complex64, xi_hat: Complex64) -> Result<SplitProblem> {
    let dim = if xi.im == 0.0 && xi_hat.im == 0.0 {
        1
    } else {
        2
    };
    let f = real_form(xi, dim);
    let g = real_form(xi_hat, dim);
    let mut y0 = DVector::zeros(dim);
    y0[0] = 1.0;
    let (fm, gm, gj) = (f.clone(), g.clone(), g.clone());
    let mut p = SplitProblem::new(
        "linear",
        0.0,
        1.0,
        y0.clone(),
        Arc::new(move |y: &DVector<f64>| &fm * y),
        Arc::new(move |y: &DVector<f64>| &gm * y),
    );
    p.stiff_jacobian = Some(Arc::new(move |_y: &DVector<f64>| gj.clone()));
    let fj = f.clone();
    p.nonstiff_jacobian = Some(Arc::new(move |_y: &DVector<f64>| fj.clone()));
    p.constant_stiff_jacobian = true;
    let lambda = xi + xi_hat;
    p.exact = Some(Arc::new(move |t| {
        let e = (lambda * t).exp();
        if dim == 1 {
            DVector::from_element(1, e.re)
        } else {
            DVector::from_column_slice(&[e.re, e.im])
        }
    }));
    p.derivatives = Some(linear_derivatives(f, g, y0));
    Ok(p)
}

/// Periodic `u_t + a u_x = nu u_xx` on `[0, 1)` with `n` points, centered
/// second-order differences, `u(0) = sin(2 pi x)` and `t in [0, 0.5]`.
/// Advection is the explicit part, diffusion the implicit one.
pub fn advection_diffusion_1d(n: usize, a: f64, nu: f64) -> Result<SplitProblem> {
    if n < 8 {
        return Err(Error::InvalidParameter(format!(
            "advection-diffusion needs n >= 8, got {n}"
        )));
    }
    if !(nu >= 0.0) || !a.is_finite() || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need finite a and nu >= 0, got a = {a}, nu = {nu}"
        )));
    }
    let dx = 1.0 / n as f64;
    let mut adv = DMatrix::zeros(n, n);
    let mut dif = DMatrix::zeros(n, n);
    for i in 0..n {
        let (l, r) = ((i + n - 1) % n, (i + 1) % n);
        adv[(i, r)] -= a / (2.0 * dx);
        adv[(i, l)] += a / (2.0 * dx);
        dif[(i, l)] += nu / (dx * dx);
        dif[(i, i)] -= 2.0 * nu / (dx * dx);
        dif[(i, r)] += nu / (dx * dx);
    }
    let y0 = DVector::from_fn(n, |i, _| (2.0 * PI * i as f64 * dx).sin());
    let stencil = move |y: &DVector<f64>, c_l: f64, c_c: f64, c_r: f64| {
        DVector::from_fn(n, |i, _| {
            c_l * y[(i + n - 1) % n] + c_c * y[i] + c_r * y[(i + 1) % n]
        })
    };
    let (ca, cd) = (a / (2.0 * dx), nu / (dx * dx));
    let mut p = SplitProblem::new(
        "advdiff",
        0.0,
        0.5,
        y0.clone(),
        Arc::new(move |y: &DVector<f64>| stencil(y, ca, 0.0, -ca)),
        Arc::new(move |y: &DVector<f64>| stencil(y, cd, -2.0 * cd, cd)),
    );
    let (ja, jd) = (adv.clone(), dif.clone());
    p.stiff_jacobian = Some(Arc::new(move |_y: &DVector<f64>| jd.clone()));
    p.nonstiff_jacobian = Some(Arc::new(move |_y: &DVector<f64>| ja.clone()));
    p.constant_stiff_jacobian = true;
    // The initial mode is an eigenvector pair of both circulants: it decays
    // at the discrete diffusion rate and travels at the discrete speed.
    let decay = 2.0 * nu / (dx * dx) * (1.0 - (2.0 * PI * dx).cos());
    let speed = a * (2.0 * PI * dx).sin() / dx;
    p.exact = Some(Arc::new(move |t| {
        DVector::from_fn(n, |i, _| {
            (-decay * t).exp() * (2.0 * PI * i as f64 * dx - speed * t).sin()
        })
    }));
    p.derivatives = Some(linear_derivatives(adv, dif, y0));
    p.norm = ErrorNorm::Grid { dx };
    Ok(p)
}

/// How the error of a run is measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ReferencePolicy {
    /// Closed-form solution at the final time.
    Exact,
    /// Integration with `h_min / divisor`. `unsplit` moves everything into
    /// the implicit member.
    TinyStep { divisor: usize, unsplit: bool },
}

/// A named, parameterised problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "lowercase")]
pub enum ProblemSpec {
    Vdp { eps: f64 },
    Pr { mu: f64 },
    Linear { xi: f64, xi_hat: f64 },
    Advdiff { n: usize, a: f64, nu: f64 },
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Vdp { .. } => "vdp",
            ProblemSpec::Pr { .. } => "pr",
            ProblemSpec::Linear { .. } => "linear",
            ProblemSpec::Advdiff { .. } => "advdiff",
        }
    }

    /// Defaults: `eps = 1e-6`, `mu = -1e6`, `xi = 1, xi_hat = -10`,
    /// `n = 64, a = 1, nu = 0.01`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "vdp" => Ok(ProblemSpec::Vdp { eps: 1e-6 }),
            "pr" => Ok(ProblemSpec::Pr { mu: -1e6 }),
            "linear" => Ok(ProblemSpec::Linear {
                xi: 1.0,
                xi_hat: -10.0,
            }),
            "advdiff" => Ok(ProblemSpec::Advdiff {
                n: 64,
                a: 1.0,
                nu: 0.01,
            }),
            _ => Err(Error::UnknownProblem {
                name: name.to_string(),
                available: PROBLEM_NAMES.join(", "),
            }),
        }
    }

    pub fn build(&self) -> Result<SplitProblem> {
        match *self {
            ProblemSpec::Vdp { eps } => van_der_pol(eps),
            ProblemSpec::Pr { mu } => prothero_robinson(mu, SmoothFunction::sin()),
            ProblemSpec::Linear { xi, xi_hat } => {
                linear_test(Complex64::new(xi, 0.0), Complex64::new(xi_hat, 0.0))
            }
            ProblemSpec::Advdiff { n, a, nu } => advection_diffusion_1d(n, a, nu),
        }
    }

    pub fn reference(&self) -> ReferencePolicy {
        match self {
            ProblemSpec::Vdp { .. } => ReferencePolicy::TinyStep {
                divisor: 64,
                unsplit: true,
            },
            ProblemSpec::Advdiff { .. } => ReferencePolicy::TinyStep {
                divisor: 32,
                unsplit: false,
            },
            ProblemSpec::Pr { .. } | ProblemSpec::Linear { .. } => ReferencePolicy::Exact,
        }
    }

    /// Stable text identifying the problem and its parameters.
    pub fn key(&self) -> String {
        match self {
            ProblemSpec::Vdp { eps } => format!("vdp-eps{eps:e}"),
            ProblemSpec::Pr { mu } => format!("pr-mu{mu:e}"),
            ProblemSpec::Linear { xi, xi_hat } => format!("linear-xi{xi:e}-xihat{xi_hat:e}"),
            ProblemSpec::Advdiff { n, a, nu } => format!("advdiff-n{n}-a{a:e}-nu{nu:e}"),
        }
    }
}
