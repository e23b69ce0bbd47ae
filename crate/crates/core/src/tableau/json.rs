//! JSON export and import of IMEX pairs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{GlmTableau, ImexGlmPair, MethodKind, TerminationCoefficients};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminationRecord {
    pub beta0: Vec<f64>,
    pub beta0_hat: Vec<f64>,
    pub gamma0: Vec<f64>,
}

/// Flat record of one pair; matrices are stored as lists of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub name: String,
    pub c: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "Ahat")]
    pub a_hat: Vec<Vec<f64>>,
    #[serde(rename = "U")]
    pub u: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "Bhat")]
    pub b_hat: Vec<Vec<f64>>,
    #[serde(rename = "V")]
    pub v: Vec<Vec<f64>>,
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub s: usize,
    pub lambda: f64,
    pub termination: TerminationRecord,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
    what: &'static str,
) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::dims(
            what,
            format!("{nrows}x{ncols}"),
            format!("{} rows", rows.len()),
        ));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl From<&ImexGlmPair> for PairRecord {
    fn from(pair: &ImexGlmPair) -> Self {
        let e = &pair.explicit;
        let i = &pair.implicit;
        PairRecord {
            name: pair.name.clone(),
            c: e.c.iter().copied().collect(),
            a: to_rows(&e.a),
            a_hat: to_rows(&i.a),
            u: to_rows(&e.u),
            b: to_rows(&e.b),
            b_hat: to_rows(&i.b),
            v: to_rows(&e.v),
            p: e.p,
            q: e.q,
            r: e.r(),
            s: e.s(),
            lambda: i.lambda,
            termination: TerminationRecord {
                beta0: pair.termination.beta0.iter().copied().collect(),
                beta0_hat: pair.termination.beta0_hat.iter().copied().collect(),
                gamma0: pair.termination.gamma0.iter().copied().collect(),
            },
        }
    }
}

impl TryFrom<&PairRecord> for ImexGlmPair {
    type Error = Error;

    fn try_from(rec: &PairRecord) -> Result<Self> {
        let (r, s) = (rec.r, rec.s);
        if rec.c.len() != s {
            return Err(Error::dims("c", s, rec.c.len()));
        }
        let c = DVector::from_column_slice(&rec.c);
        let u = from_rows(&rec.u, s, r, "U")?;
        let v = from_rows(&rec.v, r, r, "V")?;
        let explicit = GlmTableau::new(
            from_rows(&rec.a, s, s, "A")?,
            u.clone(),
            from_rows(&rec.b, r, s, "B")?,
            v.clone(),
            c.clone(),
            rec.p,
            rec.q,
            MethodKind::ExplicitType1,
        )?;
        let mut implicit = GlmTableau::new(
            from_rows(&rec.a_hat, s, s, "Ahat")?,
            u,
            from_rows(&rec.b_hat, r, s, "Bhat")?,
            v,
            c,
            rec.p,
            rec.q,
            MethodKind::ImplicitType2,
        )?;
        implicit.lambda = rec.lambda;
        let t = &rec.termination;
        Ok(ImexGlmPair {
            name: rec.name.clone(),
            explicit,
            implicit,
            termination: TerminationCoefficients {
                beta0: DVector::from_column_slice(&t.beta0),
                beta0_hat: DVector::from_column_slice(&t.beta0_hat),
                gamma0: DVector::from_column_slice(&t.gamma0),
            },
        })
    }
}

/// Serializes pairs as a pretty-printed JSON array.
pub fn export_catalog_json(pairs: &[ImexGlmPair]) -> Result<String> {
    let records: Vec<PairRecord> = pairs.iter().map(PairRecord::from).collect();
    Ok(serde_json::to_string_pretty(&records)?)
}

pub fn import_catalog_json(text: &str) -> Result<Vec<ImexGlmPair>> {
    let records: Vec<PairRecord> = serde_json::from_str(text)?;
    records.iter().map(ImexGlmPair::try_from).collect()
}
