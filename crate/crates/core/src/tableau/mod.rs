//! General linear method coefficients and DIMSIM structure.
//!
//! A general linear method with `s` internal and `r` external stages is
//! described by the abscissae `c` and the block tableau
//!
//! ```text
//!   A | U
//!   --+--
//!   B | V
//! ```
//!
//! One step reads `Y = h A F(Y) + U y[n-1]`, `y[n] = h B F(Y) + V y[n-1]`.
//! The methods shipped in [`catalog`] are DIMSIMs with `p = q = r = s`,
//! `U = I` and `V = 1 v^T`.

mod catalog;
mod json;

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use catalog::{catalog, find_pair, CATALOG_NAMES};
pub use json::{export_catalog_json, import_catalog_json, PairRecord, TerminationRecord};

/// Tolerance used for all structural checks.
pub const STRUCTURE_TOL: f64 = 1e-12;

/// DIMSIM type. Type 1 methods are explicit, type 2 methods are diagonally
/// implicit with a constant diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    ExplicitType1,
    ImplicitType2,
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodKind::ExplicitType1 => f.write_str("explicit"),
            MethodKind::ImplicitType2 => f.write_str("implicit"),
        }
    }
}

/// Coefficients of a single general linear method.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmTableau {
    pub a: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub c: DVector<f64>,
    /// Order.
    pub p: usize,
    /// Stage order.
    pub q: usize,
    pub kind: MethodKind,
    /// Diagonal of `A` (zero for type 1).
    pub lambda: f64,
}

impl GlmTableau {
    /// Builds a tableau from its blocks, checking the shapes.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: DMatrix<f64>,
        u: DMatrix<f64>,
        b: DMatrix<f64>,
        v: DMatrix<f64>,
        c: DVector<f64>,
        p: usize,
        q: usize,
        kind: MethodKind,
    ) -> Result<Self> {
        let s = c.len();
        let r = v.nrows();
        if a.shape() != (s, s) {
            return Err(Error::dims(
                "A",
                format!("{s}x{s}"),
                format!("{:?}", a.shape()),
            ));
        }
        if u.shape() != (s, r) {
            return Err(Error::dims(
                "U",
                format!("{s}x{r}"),
                format!("{:?}", u.shape()),
            ));
        }
        if b.shape() != (r, s) {
            return Err(Error::dims(
                "B",
                format!("{r}x{s}"),
                format!("{:?}", b.shape()),
            ));
        }
        if v.shape() != (r, r) {
            return Err(Error::dims(
                "V",
                format!("{r}x{r}"),
                format!("{:?}", v.shape()),
            ));
        }
        let lambda = match kind {
            MethodKind::ExplicitType1 => 0.0,
            MethodKind::ImplicitType2 => {
                if s == 0 {
                    0.0
                } else {
                    a[(0, 0)]
                }
            }
        };
        Ok(Self {
            a,
            u,
            b,
            v,
            c,
            p,
            q,
            kind,
            lambda,
        })
    }

    /// A DIMSIM with `p = q = r = s`, `U = I` and `V = 1 v^T`.
    pub fn dimsim(
        kind: MethodKind,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        v_row: &[f64],
        c: &[f64],
    ) -> Result<Self> {
        let s = c.len();
        if v_row.len() != s {
            return Err(Error::dims("v", s, v_row.len()));
        }
        let v = DMatrix::from_fn(s, s, |_, j| v_row[j]);
        Self::new(
            a,
            DMatrix::identity(s, s),
            b,
            v,
            DVector::from_column_slice(c),
            s,
            s,
            kind,
        )
    }

    /// Number of internal stages.
    pub fn s(&self) -> usize {
        self.c.len()
    }

    /// Number of external stages.
    pub fn r(&self) -> usize {
        self.v.nrows()
    }

    pub fn is_explicit(&self) -> bool {
        self.kind == MethodKind::ExplicitType1
    }

    /// Weight matrix `W = [q_0 ... q_p]` of the external stages, for methods
    /// with `p = q = r = s` and `U = I`.
    pub fn weights(&self) -> WeightMatrix {
        weight_vectors(&self.a, self.c.as_slice(), self.p)
    }
}

/// Columns `q_0, ..., q_p`: the external stage `i` approximates
/// `sum_k W[i][k] h^k y^(k)(t_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub w: DMatrix<f64>,
}

impl WeightMatrix {
    /// Order `p` (number of columns minus one).
    pub fn order(&self) -> usize {
        self.w.ncols() - 1
    }

    pub fn rows(&self) -> usize {
        self.w.nrows()
    }

    /// Column `q_k`.
    pub fn q(&self, k: usize) -> DVector<f64> {
        self.w.column(k).into_owned()
    }
}

/// Weights of the termination procedure
/// `y(t_n) ~ h sum beta0_i f(Y_i) + h sum beta0_hat_i g(Y_i) + sum gamma0_j y_j[n-1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminationCoefficients {
    /// Weights on the nonstiff stage derivatives.
    pub beta0: DVector<f64>,
    /// Weights on the stiff stage derivatives.
    pub beta0_hat: DVector<f64>,
    /// Weights on the incoming external stages, shared by both members.
    pub gamma0: DVector<f64>,
}

/// An explicit/implicit DIMSIM pair sharing `c`, `U` and `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImexGlmPair {
    pub name: String,
    pub explicit: GlmTableau,
    pub implicit: GlmTableau,
    pub termination: TerminationCoefficients,
}

impl ImexGlmPair {
    pub fn full_name(&self) -> String {
        format!("IMEX-DIMSIM-{}", self.name)
    }

    pub fn order(&self) -> usize {
        self.explicit.p
    }

    pub fn s(&self) -> usize {
        self.explicit.s()
    }

    pub fn r(&self) -> usize {
        self.explicit.r()
    }

    pub fn lambda(&self) -> f64 {
        self.implicit.lambda
    }

    /// The member of the given kind.
    pub fn member(&self, kind: MethodKind) -> &GlmTableau {
        match kind {
            MethodKind::ExplicitType1 => &self.explicit,
            MethodKind::ImplicitType2 => &self.implicit,
        }
    }
}

// Polynomials as monomial coefficient vectors, lowest degree first.

fn poly_from_roots(roots: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut coeffs = vec![1.0];
    for root in roots {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (k, &ck) in coeffs.iter().enumerate() {
            next[k + 1] += ck;
            next[k] -= root * ck;
        }
        coeffs = next;
    }
    coeffs
}

fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

/// `int_0^x p(t) dt`, term by term.
fn poly_integral(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for (k, &ck) in coeffs.iter().enumerate().rev() {
        acc = acc * x + ck / (k + 1) as f64;
    }
    acc * x
}

/// Lagrange interpolation matrices `(B0, B1, B2)` for the abscissae `c`:
///
/// ```text
/// B0[i][j] = int_0^{1+c_i} phi_j / phi_j(c_j)
/// B1[i][j] = phi_j(1+c_i) / phi_j(c_j)
/// B2[i][j] = int_0^{c_i} phi_j / phi_j(c_j)
/// ```
///
/// with `phi_j(x) = prod_{k != j} (x - c_k)`.
pub fn interpolation_matrices(c: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let s = c.len();
    for i in 0..s {
        for j in (i + 1)..s {
            if c[i] == c[j] {
                return Err(Error::DegenerateAbscissae { i, j });
            }
        }
    }
    let mut b0 = DMatrix::zeros(s, s);
    let mut b1 = DMatrix::zeros(s, s);
    let mut b2 = DMatrix::zeros(s, s);
    for j in 0..s {
        let phi = poly_from_roots(
            c.iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, &ck)| ck),
        );
        let scale = poly_eval(&phi, c[j]);
        for i in 0..s {
            b0[(i, j)] = poly_integral(&phi, 1.0 + c[i]) / scale;
            b1[(i, j)] = poly_eval(&phi, 1.0 + c[i]) / scale;
            b2[(i, j)] = poly_integral(&phi, c[i]) / scale;
        }
    }
    Ok((b0, b1, b2))
}

/// `B = B0 - A B1 - V B2 + V A`: the unique `B` giving order and stage order
/// `p = q = r = s` for the given `A`, `V` and `c` (with `U = I`).
pub fn build_b_matrix(a: &DMatrix<f64>, v: &DMatrix<f64>, c: &[f64]) -> Result<DMatrix<f64>> {
    let s = c.len();
    if a.shape() != (s, s) {
        return Err(Error::dims(
            "A",
            format!("{s}x{s}"),
            format!("{:?}", a.shape()),
        ));
    }
    if v.shape() != (s, s) {
        return Err(Error::dims(
            "V",
            format!("{s}x{s}"),
            format!("{:?}", v.shape()),
        ));
    }
    let (b0, b1, b2) = interpolation_matrices(c)?;
    Ok(b0 - a * b1 - v * b2 + v * a)
}

/// `q_0 = 1`, `q_k = c^k / k! - A c^(k-1) / (k-1)!` for `k = 1..=p`.
pub fn weight_vectors(a: &DMatrix<f64>, c: &[f64], p: usize) -> WeightMatrix {
    let s = c.len();
    let mut w = DMatrix::zeros(s, p + 1);
    w.column_mut(0).fill(1.0);
    let mut fact_prev = 1.0; // (k-1)!
    for k in 1..=p {
        let fact = fact_prev * k as f64;
        let c_prev = DVector::from_iterator(s, c.iter().map(|&ci| ci.powi(k as i32 - 1)));
        let a_c = a * &c_prev;
        for i in 0..s {
            w[(i, k)] = c[i].powi(k as i32) / fact - a_c[i] / fact_prev;
        }
        fact_prev = fact;
    }
    WeightMatrix { w }
}

/// Which part of a method a diagnostic refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Tableau,
    Explicit,
    Implicit,
    Pair,
}

/// A named structural violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    ShapeMismatch,
    OrderMetadata,
    AbscissaeNotIncreasing,
    NotLowerTriangular,
    NonzeroExplicitDiagonal,
    NonConstantImplicitDiagonal,
    ZeroImplicitDiagonal,
    LambdaMismatch,
    UNotIdentity,
    VNotRankOne,
    VNotStochastic,
    WrongKind,
    AbscissaeDiffer,
    UDiffers,
    VDiffers,
    TerminationShape,
}

impl Violation {
    pub fn name(&self) -> &'static str {
        match self {
            Violation::ShapeMismatch => "inconsistent dimensions",
            Violation::OrderMetadata => "order metadata inconsistent",
            Violation::AbscissaeNotIncreasing => "abscissae not strictly increasing",
            Violation::NotLowerTriangular => "A not lower triangular",
            Violation::NonzeroExplicitDiagonal => "nonzero explicit diagonal",
            Violation::NonConstantImplicitDiagonal => "non-constant implicit diagonal",
            Violation::ZeroImplicitDiagonal => "zero implicit diagonal",
            Violation::LambdaMismatch => "lambda does not match diagonal",
            Violation::UNotIdentity => "U not identity",
            Violation::VNotRankOne => "V not rank one",
            Violation::VNotStochastic => "V rows not stochastic",
            Violation::WrongKind => "member has wrong type",
            Violation::AbscissaeDiffer => "abscissae differ",
            Violation::UDiffers => "U differs",
            Violation::VDiffers => "V differs",
            Violation::TerminationShape => "termination weights have wrong length",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub scope: Scope,
    pub violation: Violation,
    pub detail: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let scope = match self.scope {
            Scope::Tableau => "",
            Scope::Explicit => "explicit: ",
            Scope::Implicit => "implicit: ",
            Scope::Pair => "pair: ",
        };
        write!(f, "{scope}{}", self.violation.name())?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

/// Structural invariant checks.
pub trait Validate {
    fn validate(&self) -> Vec<Diagnostic>;
}

/// Returns one diagnostic per violated invariant; empty when all hold.
pub fn validate<T: Validate + ?Sized>(t: &T) -> Vec<Diagnostic> {
    t.validate()
}

fn check_tableau(t: &GlmTableau, scope: Scope) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut push = |violation: Violation, detail: String| {
        out.push(Diagnostic {
            scope,
            violation,
            detail,
        })
    };
    let s = t.s();
    let r = t.r();
    if t.a.shape() != (s, s)
        || t.u.shape() != (s, r)
        || t.b.shape() != (r, s)
        || t.v.shape() != (r, r)
    {
        push(Violation::ShapeMismatch, String::new());
        return out;
    }
    if !(t.p == t.q && t.q == r && r == s) {
        push(
            Violation::OrderMetadata,
            format!("p={} q={} r={} s={}", t.p, t.q, r, s),
        );
    }
    if t.c.as_slice().windows(2).any(|w| w[1] <= w[0]) {
        push(Violation::AbscissaeNotIncreasing, String::new());
    }
    for i in 0..s {
        for j in (i + 1)..s {
            if t.a[(i, j)].abs() > STRUCTURE_TOL {
                push(
                    Violation::NotLowerTriangular,
                    format!("A[{i}][{j}] = {}", t.a[(i, j)]),
                );
            }
        }
    }
    match t.kind {
        MethodKind::ExplicitType1 => {
            if (0..s).any(|i| t.a[(i, i)].abs() > STRUCTURE_TOL) {
                push(Violation::NonzeroExplicitDiagonal, String::new());
            }
            if t.lambda != 0.0 {
                push(Violation::LambdaMismatch, format!("lambda = {}", t.lambda));
            }
        }
        MethodKind::ImplicitType2 => {
            if s > 0 {
                let d0 = t.a[(0, 0)];
                if (1..s).any(|i| (t.a[(i, i)] - d0).abs() > STRUCTURE_TOL) {
                    push(Violation::NonConstantImplicitDiagonal, String::new());
                }
                if d0.abs() <= STRUCTURE_TOL {
                    push(Violation::ZeroImplicitDiagonal, String::new());
                }
                if (t.lambda - d0).abs() > STRUCTURE_TOL {
                    push(
                        Violation::LambdaMismatch,
                        format!("lambda = {}, A[0][0] = {d0}", t.lambda),
                    );
                }
            }
        }
    }
    if r == s && (t.u.clone() - DMatrix::<f64>::identity(s, s)).amax() > STRUCTURE_TOL {
        push(Violation::UNotIdentity, String::new());
    } else if r != s {
        push(Violation::UNotIdentity, format!("U is {s}x{r}"));
    }
    if r > 0 {
        let first = t.v.row(0);
        if (1..r).any(|i| (t.v.row(i) - first).amax() > STRUCTURE_TOL) {
            push(Violation::VNotRankOne, String::new());
        }
        if let Some(i) = (0..r).find(|&i| (t.v.row(i).sum() - 1.0).abs() > STRUCTURE_TOL) {
            push(
                Violation::VNotStochastic,
                format!("row {i} sums to {}", t.v.row(i).sum()),
            );
        }
    }
    out
}

impl Validate for GlmTableau {
    fn validate(&self) -> Vec<Diagnostic> {
        check_tableau(self, Scope::Tableau)
    }
}

impl Validate for ImexGlmPair {
    fn validate(&self) -> Vec<Diagnostic> {
        let mut out = check_tableau(&self.explicit, Scope::Explicit);
        out.extend(check_tableau(&self.implicit, Scope::Implicit));
        let mut push = |scope, violation, detail: String| {
            out.push(Diagnostic {
                scope,
                violation,
                detail,
            })
        };
        if self.explicit.kind != MethodKind::ExplicitType1 {
            push(
                Scope::Explicit,
                Violation::WrongKind,
                "expected type 1".into(),
            );
        }
        if self.implicit.kind != MethodKind::ImplicitType2 {
            push(
                Scope::Implicit,
                Violation::WrongKind,
                "expected type 2".into(),
            );
        }
        if self.explicit.c != self.implicit.c {
            push(Scope::Pair, Violation::AbscissaeDiffer, String::new());
        }
        if self.explicit.u != self.implicit.u {
            push(Scope::Pair, Violation::UDiffers, String::new());
        }
        if self.explicit.v != self.implicit.v {
            push(Scope::Pair, Violation::VDiffers, String::new());
        }
        let s = self.explicit.s();
        let r = self.explicit.r();
        let term = &self.termination;
        if term.beta0.len() != s || term.beta0_hat.len() != s || term.gamma0.len() != r {
            push(Scope::Pair, Violation::TerminationShape, String::new());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_row_iterator(
            rows.len(),
            rows[0].len(),
            rows.iter().flat_map(|r| r.iter().copied()),
        )
    }

    #[test]
    fn interpolation_matrices_two_nodes() {
        // phi_1 = x - 1, phi_2 = x, evaluated by hand.
        let (b0, b1, b2) = interpolation_matrices(&[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(b0, mat(&[&[0.5, 0.5], &[0.0, 2.0]]), epsilon = 1e-15);
        assert_abs_diff_eq!(b1, mat(&[&[0.0, 1.0], &[-1.0, 2.0]]), epsilon = 1e-15);
        assert_abs_diff_eq!(b2, mat(&[&[0.0, 0.0], &[0.5, 0.5]]), epsilon = 1e-15);
    }

    #[test]
    fn interpolation_matrices_single_node() {
        let (b0, b1, b2) = interpolation_matrices(&[0.0]).unwrap();
        assert_eq!(b0, mat(&[&[1.0]]));
        assert_eq!(b1, mat(&[&[1.0]]));
        assert_eq!(b2, mat(&[&[0.0]]));
    }

    #[test]
    fn duplicate_abscissae_rejected() {
        let err = interpolation_matrices(&[0.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("degenerate abscissae"));
    }

    #[test]
    fn b_matrix_reproduces_printed_2b() {
        let s2 = std::f64::consts::SQRT_2;
        let v_row = [(3.0 - s2) / 2.0, (s2 - 1.0) / 2.0];
        let v = DMatrix::from_fn(2, 2, |_, j| v_row[j]);
        let a = mat(&[&[0.0, 0.0], &[1.5, 0.0]]);
        let b = build_b_matrix(&a, &v, &[0.0, 1.0]).unwrap();
        let expected = mat(&[
            &[s2 / 2.0, (3.0 - s2) / 4.0],
            &[(s2 - 1.0) / 2.0, (3.0 - s2) / 4.0],
        ]);
        assert_abs_diff_eq!(b, expected, epsilon = 1e-15);
    }

    #[test]
    fn b_matrix_forward_euler() {
        let b = build_b_matrix(&mat(&[&[0.0]]), &mat(&[&[1.0]]), &[0.0]).unwrap();
        assert_eq!(b, mat(&[&[1.0]]));
    }

    #[test]
    fn b_matrix_dimension_mismatch() {
        let err = build_b_matrix(&DMatrix::zeros(2, 2), &DMatrix::zeros(3, 3), &[0.0, 1.0]);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn weight_vectors_explicit_2b() {
        let a = mat(&[&[0.0, 0.0], &[1.5, 0.0]]);
        let w = weight_vectors(&a, &[0.0, 1.0], 2);
        assert_eq!(w.q(0).as_slice(), &[1.0, 1.0]);
        assert_abs_diff_eq!(w.q(1).as_slice(), [0.0, -0.5].as_slice(), epsilon = 1e-15);
        assert_abs_diff_eq!(w.q(2).as_slice(), [0.0, 0.5].as_slice(), epsilon = 1e-15);
    }

    #[test]
    fn weight_vectors_implicit_order2() {
        let s2 = std::f64::consts::SQRT_2;
        let lam = (2.0 - s2) / 2.0;
        let a = mat(&[&[lam, 0.0], &[(2.0 * s2 + 6.0) / 7.0, lam]]);
        let w = weight_vectors(&a, &[0.0, 1.0], 2);
        // q1 = c - A 1, evaluated from the closed forms
        let q12 = 1.0 - (2.0 * s2 + 6.0) / 7.0 - lam;
        assert_abs_diff_eq!(w.q(1).as_slice(), [-lam, q12].as_slice(), epsilon = 1e-15);
        assert_abs_diff_eq!(q12, -0.554097093777194, epsilon = 1e-14);
        assert_abs_diff_eq!(
            w.q(2).as_slice(),
            [0.0, 0.207106781186548].as_slice(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn weight_vectors_forward_euler() {
        let w = weight_vectors(&mat(&[&[0.0]]), &[0.0], 1);
        assert_eq!(w.q(0).as_slice(), &[1.0]);
        assert_eq!(w.q(1).as_slice(), &[0.0]);
    }

    #[test]
    fn non_stochastic_v_is_flagged() {
        let t = GlmTableau::new(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            mat(&[&[0.5, 0.4], &[0.5, 0.5]]),
            DVector::from_column_slice(&[0.0, 1.0]),
            2,
            2,
            MethodKind::ExplicitType1,
        )
        .unwrap();
        let diags = validate(&t);
        assert!(diags
            .iter()
            .any(|d| d.violation.name() == "V rows not stochastic"));
    }

    #[test]
    fn unequal_implicit_diagonal_is_flagged() {
        let t = GlmTableau::dimsim(
            MethodKind::ImplicitType2,
            mat(&[&[0.3, 0.0], &[1.0, 0.4]]),
            DMatrix::zeros(2, 2),
            &[0.5, 0.5],
            &[0.0, 1.0],
        )
        .unwrap();
        let diags = validate(&t);
        assert!(diags
            .iter()
            .any(|d| d.violation.name() == "non-constant implicit diagonal"));
    }

    #[test]
    fn upper_entries_and_bad_abscissae_are_flagged() {
        let t = GlmTableau::dimsim(
            MethodKind::ExplicitType1,
            mat(&[&[0.0, 1.0], &[1.0, 0.0]]),
            DMatrix::zeros(2, 2),
            &[0.5, 0.5],
            &[1.0, 0.0],
        )
        .unwrap();
        let names: Vec<_> = validate(&t).iter().map(|d| d.violation).collect();
        assert!(names.contains(&Violation::NotLowerTriangular));
        assert!(names.contains(&Violation::AbscissaeNotIncreasing));
    }
}
