//! Mechanical verification of the cataloged pairs.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::series::{order_residual, stage_order_residual, termination_residual};
use crate::tableau::{build_b_matrix, GlmTableau, ImexGlmPair, MethodKind};

/// Residual tolerance for a method of order `p`: closed-form order-two
/// coefficients are checked to rounding, the order-three decimals to 1e-9.
pub fn tolerance_for(p: usize) -> f64 {
    if p <= 2 {
        1e-13
    } else {
        1e-9
    }
}

/// Residuals of one member of a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub method: String,
    pub member: MethodKind,
    pub stage_order: f64,
    pub order: f64,
    pub termination: f64,
    /// Largest difference between `B` and `B` rebuilt from `A`, `V`, `c`.
    pub b_rebuild: f64,
    pub tolerance: f64,
}

impl VerifyRow {
    pub fn passed(&self) -> bool {
        [
            self.stage_order,
            self.order,
            self.termination,
            self.b_rebuild,
        ]
        .iter()
        .all(|r| *r < self.tolerance)
    }
}

fn member_row(
    pair: &ImexGlmPair,
    t: &GlmTableau,
    beta: &nalgebra::DVector<f64>,
) -> Result<VerifyRow> {
    let w = t.weights();
    let gamma = &pair.termination.gamma0;
    let b_tilde = DMatrix::from_row_slice(1, beta.len(), beta.as_slice());
    let v_tilde = DMatrix::from_row_slice(1, gamma.len(), gamma.as_slice());
    let rebuilt = build_b_matrix(&t.a, &t.v, t.c.as_slice())?;
    Ok(VerifyRow {
        method: pair.full_name(),
        member: t.kind,
        stage_order: stage_order_residual(t, &w, t.p, t.q)?,
        order: order_residual(t, &w, t.p)?,
        termination: termination_residual(&b_tilde, &v_tilde, t, &w, t.p)?,
        b_rebuild: (rebuilt - &t.b).amax(),
        tolerance: tolerance_for(t.p),
    })
}

/// Stage-order, order, termination and `B`-reconstruction residuals of both
/// members of `pair`.
pub fn verify_pair(pair: &ImexGlmPair) -> Result<Vec<VerifyRow>> {
    Ok(vec![
        member_row(pair, &pair.explicit, &pair.termination.beta0)?,
        member_row(pair, &pair.implicit, &pair.termination.beta0_hat)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tableau::catalog;

    #[test]
    fn catalog_passes() {
        for pair in catalog() {
            for row in verify_pair(&pair).unwrap() {
                assert!(row.passed(), "{row:?}");
            }
        }
    }
}
