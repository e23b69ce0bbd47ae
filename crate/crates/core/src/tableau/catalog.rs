//! The IMEX-DIMSIM pairs of orders two and three.
//!
//! Order-two coefficients are evaluated from their closed forms in `sqrt(2)`
//! at construction time. Order-three coefficients are the published
//! 15-digit decimals.
//!
//! Two corrections relative to the printed tables:
//!
//! * The printed 2A tableau repeats the second row of `B` in the first row
//!   of `V`, which is not stochastic. Both rows of `V` are stored as
//!   `[(3 - sqrt 2)/2, (sqrt 2 - 1)/2]`, the row shared with the implicit
//!   member. Rebuilding `B` from `A`, `V` and `c` reproduces the printed
//!   explicit `B` with this `V`.
//! * The printed termination weights `beta_0` satisfy the dense-output
//!   condition of the implicit member, not the explicit one. They are stored
//!   as `beta0_hat`. The explicit weights are the first row of the explicit
//!   `B` (valid because `c_1 = 0`), and `gamma0` is the first row of `V`.

use nalgebra::{DMatrix, DVector};

use super::{GlmTableau, ImexGlmPair, MethodKind, TerminationCoefficients};
use crate::error::{Error, Result};

pub const CATALOG_NAMES: [&str; 4] = ["2A", "2B", "3A", "3B"];

fn rows<const N: usize>(data: [[f64; N]; N]) -> DMatrix<f64> {
    DMatrix::from_fn(N, N, |i, j| data[i][j])
}

fn pair(
    name: &str,
    c: &[f64],
    v_row: &[f64],
    explicit: (DMatrix<f64>, DMatrix<f64>),
    implicit: (DMatrix<f64>, DMatrix<f64>),
    beta0_hat: &[f64],
) -> ImexGlmPair {
    let explicit = GlmTableau::dimsim(MethodKind::ExplicitType1, explicit.0, explicit.1, v_row, c)
        .expect("catalog shape");
    let implicit = GlmTableau::dimsim(MethodKind::ImplicitType2, implicit.0, implicit.1, v_row, c)
        .expect("catalog shape");
    let termination = TerminationCoefficients {
        beta0: explicit.b.row(0).transpose(),
        beta0_hat: DVector::from_column_slice(beta0_hat),
        gamma0: DVector::from_column_slice(v_row),
    };
    ImexGlmPair {
        name: name.to_string(),
        explicit,
        implicit,
        termination,
    }
}

fn order2_implicit() -> (DMatrix<f64>, DMatrix<f64>) {
    let s2 = std::f64::consts::SQRT_2;
    let lam = (2.0 - s2) / 2.0;
    let a = rows([[lam, 0.0], [(2.0 * s2 + 6.0) / 7.0, lam]]);
    let b = rows([
        [(73.0 - 34.0 * s2) / 28.0, (4.0 * s2 - 5.0) / 4.0],
        [(87.0 - 48.0 * s2) / 28.0, (-45.0 + 34.0 * s2) / 28.0],
    ]);
    (a, b)
}

fn order2_v() -> [f64; 2] {
    let s2 = std::f64::consts::SQRT_2;
    [(3.0 - s2) / 2.0, (s2 - 1.0) / 2.0]
}

fn order2_beta0_hat() -> [f64; 2] {
    // Free parameter g = 0, which makes gamma0 equal to the first row of V.
    let s2 = std::f64::consts::SQRT_2;
    [(73.0 - 34.0 * s2) / 28.0, (-1.0 + 2.0 * s2) / 4.0]
}

fn dimsim_2a() -> ImexGlmPair {
    let s2 = std::f64::consts::SQRT_2;
    let a = rows([[0.0, 0.0], [2.0, 0.0]]);
    let b = rows([
        [(3.0 * s2 - 1.0) / 4.0, (3.0 - s2) / 4.0],
        [(3.0 * s2 - 3.0) / 4.0, (1.0 - s2) / 4.0],
    ]);
    pair(
        "2A",
        &[0.0, 1.0],
        &order2_v(),
        (a, b),
        order2_implicit(),
        &order2_beta0_hat(),
    )
}

fn dimsim_2b() -> ImexGlmPair {
    let s2 = std::f64::consts::SQRT_2;
    let a = rows([[0.0, 0.0], [1.5, 0.0]]);
    let b = rows([
        [s2 / 2.0, (3.0 - s2) / 4.0],
        [(s2 - 1.0) / 2.0, (3.0 - s2) / 4.0],
    ]);
    pair(
        "2B",
        &[0.0, 1.0],
        &order2_v(),
        (a, b),
        order2_implicit(),
        &order2_beta0_hat(),
    )
}

fn dimsim_3a() -> ImexGlmPair {
    let v = [0.910428360600012, 0.358564648055175, -0.268993008655188];
    let a_hat = rows([
        [0.5, 0.0, 0.0],
        [0.200835027145109, 0.5, 0.0],
        [-1.30998408899641, 1.01685248853025, 0.5],
    ]);
    let b_hat = rows([
        [1.01640094894605, 0.632229903531054, -0.408057475882764],
        [0.724734282279383, 1.46556323686439, -0.6505591694540],
        [-0.333784872917534, 4.34945403578847, -1.481964185810437],
    ]);
    let a = rows([
        [0.0, 0.0, 0.0],
        [0.773142038041842, 0.0, 0.0],
        [-0.574721803854933, 1.40234019763932, 0.0],
    ]);
    let b = rows([
        [0.568615416356845, 0.349254080830621, 0.226439028444830],
        [0.776948749690179, -0.317412585836046, 0.411630323736322],
        [0.332941885384188, 1.22294134041526, -0.239193093951542],
    ]);
    pair(
        "3A",
        &[0.0, 0.5, 1.0],
        &v,
        (a, b),
        (a_hat, b_hat),
        &[1.01640094894605, 0.632229903531054, 0.0919425241172364],
    )
}

fn dimsim_3b() -> ImexGlmPair {
    let v = [0.552090962040363, 0.734856659871292, -0.286947621911655];
    let lam = 0.435866521508459;
    let a_hat = rows([
        [lam, 0.0, 0.0],
        [0.250514880897719, lam, 0.0],
        [-1.211594287777006, 1.00127459988119, lam],
    ]);
    let b_hat = rows([
        [0.833790728250125, 0.645998912146314, -0.315827085512970],
        [0.606257540075000, 1.28693181000502, -0.479741676094274],
        [-0.308416769489771, 3.80342155052421, -1.12072253825515],
    ]);
    let a = rows([
        [0.0, 0.0, 0.0],
        [0.753076872681821, 0.0, 0.0],
        [-0.4897243738259477, 1.28728279647947, 0.0],
    ]);
    let b = rows([
        [0.755324932592235, 0.24363012413977, 0.245110297813246],
        [0.963658265925568, -0.423036542526896, 0.450366758464759],
        [0.634708802779431, 0.772145180244847, 0.0396529488674508],
    ]);
    pair(
        "3B",
        &[0.0, 0.5, 1.0],
        &v,
        (a, b),
        (a_hat, b_hat),
        &[0.833790728250125, 0.645998912146314, 0.120039435995489],
    )
}

/// IMEX-DIMSIM-2A, -2B, -3A and -3B, in that order.
pub fn catalog() -> Vec<ImexGlmPair> {
    vec![dimsim_2a(), dimsim_2b(), dimsim_3a(), dimsim_3b()]
}

/// Looks up a cataloged pair by short (`3B`) or full (`IMEX-DIMSIM-3B`) name,
/// ignoring case.
pub fn find_pair(name: &str) -> Result<ImexGlmPair> {
    let upper = name.trim().to_ascii_uppercase();
    let short = upper.strip_prefix("IMEX-DIMSIM-").unwrap_or(&upper);
    catalog()
        .into_iter()
        .find(|p| p.name == short)
        .ok_or_else(|| Error::UnknownMethod {
            name: name.to_string(),
            available: CATALOG_NAMES.join(", "),
        })
}
