//! On-disk forms: matrix and design JSON documents, and CSV.
//!
//! Exact matrices are written as a level table plus a grid of level indices,
//! with every exact level rendered as text so that it parses back unchanged.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cretan::{Classification, CretanError, CretanMatrix, Provenance, RejectReason, Solutions};
use crate::designs::{DesignParams, IncidenceMatrix, Structure};
use crate::numeric::FloatMatrix;
use crate::qfield::{QfieldError, QuadExt};

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("matrix has no exact levels")]
    NotExact,
    #[error(transparent)]
    Field(#[from] QfieldError),
    #[error(transparent)]
    Cretan(#[from] CretanError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueEntry {
    #[serde(default)]
    pub exact: Option<String>,
    pub float: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

impl ValueEntry {
    fn exact(value: &QuadExt, count: Option<usize>) -> Result<Self, QfieldError> {
        Ok(ValueEntry { exact: Some(value.to_string()), float: value.to_f64()?, count })
    }

    fn float(value: f64) -> Self {
        ValueEntry { exact: None, float: value, count: None }
    }

    fn parsed(&self) -> Result<Option<QuadExt>, QfieldError> {
        self.exact.as_deref().map(str::parse).transpose()
    }
}

/// `{order, params, levels, entries, omega, det_float, provenance}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub order: usize,
    pub params: Option<DesignParams>,
    pub levels: Vec<ValueEntry>,
    pub entries: Vec<Vec<usize>>,
    #[serde(default)]
    pub omega: Option<ValueEntry>,
    #[serde(default)]
    pub det_float: Option<f64>,
    #[serde(default)]
    pub provenance: Option<Provenance>,
}

impl MatrixDocument {
    pub fn from_cretan(cm: &CretanMatrix) -> Result<Self, QfieldError> {
        let n = cm.order();
        Ok(MatrixDocument {
            order: n,
            params: cm.provenance().map(|p| p.design),
            levels: cm
                .levels()
                .iter()
                .map(|l| ValueEntry::exact(&l.value, Some(l.count)))
                .collect::<Result<_, _>>()?,
            entries: (0..n).map(|i| (0..n).map(|j| cm.level_index(i, j)).collect()).collect(),
            omega: Some(ValueEntry::exact(cm.weight(), None)?),
            det_float: Some(cm.det_float()),
            provenance: cm.provenance().copied(),
        })
    }

    /// Distinct values become levels in order of first appearance.
    pub fn from_float(m: &FloatMatrix, omega: Option<f64>) -> Self {
        let n = m.order();
        let mut levels: Vec<f64> = Vec::new();
        let entries = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let x = m.get(i, j);
                        levels.iter().position(|&l| l == x).unwrap_or_else(|| {
                            levels.push(x);
                            levels.len() - 1
                        })
                    })
                    .collect()
            })
            .collect();
        MatrixDocument {
            order: n,
            params: None,
            levels: levels.into_iter().map(ValueEntry::float).collect(),
            entries,
            omega: omega.map(ValueEntry::float),
            det_float: None,
            provenance: None,
        }
    }

    fn check_shape(&self) -> Result<(), DocumentError> {
        let n = self.order;
        if self.entries.len() != n || self.entries.iter().any(|r| r.len() != n) {
            return Err(DocumentError::Malformed(format!("entries are not {n} x {n}")));
        }
        if self.entries.iter().flatten().any(|&i| i >= self.levels.len()) {
            return Err(DocumentError::Malformed("entry refers to a missing level".into()));
        }
        Ok(())
    }

    pub fn is_exact(&self) -> bool {
        self.levels.iter().all(|l| l.exact.is_some())
            && self.omega.as_ref().is_some_and(|o| o.exact.is_some())
    }

    pub fn to_cretan(&self) -> Result<CretanMatrix, DocumentError> {
        self.check_shape()?;
        if !self.is_exact() {
            return Err(DocumentError::NotExact);
        }
        let values = self
            .levels
            .iter()
            .map(|l| l.parsed().map(|v| v.expect("checked exact")))
            .collect::<Result<Vec<_>, _>>()?;
        let weight = self.omega.as_ref().and_then(|o| o.parsed().transpose()).expect("checked exact")?;
        let grid = self.entries.iter().flatten().copied().collect();
        Ok(CretanMatrix::from_parts(values, grid, self.order, weight, self.provenance)?)
    }

    pub fn to_float(&self) -> Result<FloatMatrix, DocumentError> {
        self.check_shape()?;
        let rows: Vec<Vec<f64>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(|&i| self.levels[i].float).collect())
            .collect();
        Ok(FloatMatrix::from_rows(&rows).expect("checked square"))
    }

    /// Each cell's exact value where the document has one.
    pub fn exact_cells(&self) -> Result<Option<Vec<Vec<QuadExt>>>, DocumentError> {
        self.check_shape()?;
        if self.levels.iter().any(|l| l.exact.is_none()) {
            return Ok(None);
        }
        let values = self
            .levels
            .iter()
            .map(|l| l.parsed().map(|v| v.expect("checked exact")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Some(
            self.entries
                .iter()
                .map(|r| r.iter().map(|&i| values[i].clone()).collect())
                .collect(),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignDocument {
    pub params: DesignParams,
    pub structure: Structure,
    pub cells: Vec<Vec<u8>>,
}

impl DesignDocument {
    pub fn from_incidence(b: &IncidenceMatrix) -> Self {
        DesignDocument {
            params: b.params(),
            structure: b.structure(),
            cells: b.rows().iter().map(|r| r.iter().map(|&c| c as u8).collect()).collect(),
        }
    }

    pub fn to_incidence(&self) -> Result<IncidenceMatrix, DocumentError> {
        if self.cells.iter().flatten().any(|&c| c > 1) {
            return Err(DocumentError::Malformed("cells must be 0 or 1".into()));
        }
        let rows: Vec<Vec<bool>> = self.cells.iter().map(|r| r.iter().map(|&c| c == 1).collect()).collect();
        IncidenceMatrix::from_rows(self.params, &rows, self.structure)
            .ok_or_else(|| DocumentError::Malformed(format!("cells are not {} x {}", self.params.v, self.params.v)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionDocument {
    pub source: crate::cretan::Source,
    pub branch: Option<crate::cretan::Branch>,
    pub y: Option<String>,
    pub reason: String,
}

/// Output of `generate`: the design, every produced matrix and why the
/// remaining roots were dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionBundle {
    pub design: DesignDocument,
    pub matrices: Vec<MatrixDocument>,
    #[serde(default)]
    pub classification: Option<Classification>,
    #[serde(default)]
    pub rejected: Vec<RejectionDocument>,
}

impl SolutionBundle {
    pub fn new(b: &IncidenceMatrix, sols: &Solutions, chosen: &[&CretanMatrix]) -> Result<Self, QfieldError> {
        Ok(SolutionBundle {
            design: DesignDocument::from_incidence(b),
            matrices: chosen.iter().map(|m| MatrixDocument::from_cretan(m)).collect::<Result<_, _>>()?,
            classification: sols.classification,
            rejected: sols
                .rejected
                .iter()
                .map(|r| RejectionDocument {
                    source: r.source,
                    branch: r.branch,
                    y: r.y.as_ref().map(|y| y.to_string()),
                    reason: match r.reason {
                        RejectReason::Inadmissible => "modulus above one",
                        RejectReason::ZeroLevel => "zero level",
                        RejectReason::Degenerate => "degenerate design",
                    }
                    .to_string(),
                })
                .collect(),
        })
    }
}

/// Any JSON document the tools read.
#[derive(Debug, Clone, PartialEq)]
pub enum Document {
    Matrix(MatrixDocument),
    Design(DesignDocument),
    Bundle(SolutionBundle),
}

impl Document {
    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| DocumentError::Malformed(e.to_string()))?;
        let malformed = |e: serde_json::Error| DocumentError::Malformed(e.to_string());
        if value.get("matrices").is_some() {
            serde_json::from_value(value).map(Document::Bundle).map_err(malformed)
        } else if value.get("cells").is_some() {
            serde_json::from_value(value).map(Document::Design).map_err(malformed)
        } else if value.get("entries").is_some() {
            serde_json::from_value(value).map(Document::Matrix).map_err(malformed)
        } else {
            Err(DocumentError::Malformed("expected a matrix, design or bundle document".into()))
        }
    }
}

pub fn parse_csv(text: &str) -> Result<FloatMatrix, DocumentError> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|_| DocumentError::Csv {
                    line: idx + 1,
                    message: format!("bad number {:?}", t.trim()),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    FloatMatrix::from_rows(&rows).ok_or(DocumentError::Csv { line: 0, message: "matrix is not square".into() })
}

pub fn to_csv<T: ToString>(rows: &[Vec<T>]) -> String {
    rows.iter()
        .map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
        .map(|l| l + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cretan::{all_solutions, build_cretan, solve_characteristic};
    use crate::designs::{develop, find_difference_set, qr_family, DesignParams};

    #[test]
    fn matrix_document_round_trip() {
        let b = develop(&find_difference_set(DesignParams::new(13, 4, 1).unwrap(), 100_000).unwrap());
        let cm = build_cretan(&b, &solve_characteristic(b.params()).unwrap()[0]).unwrap();
        let doc = MatrixDocument::from_cretan(&cm).unwrap();
        let text = serde_json::to_string_pretty(&doc).unwrap();
        let Document::Matrix(back) = Document::from_json(&text).unwrap() else { panic!() };
        assert_eq!(back, doc);
        assert_eq!(back.to_cretan().unwrap(), cm);
        assert_eq!(back.levels[1].exact.as_deref(), Some("-1/2 - 1/6*sqrt(3)"));
        assert_eq!(back.omega.unwrap().exact.as_deref(), Some("7 + 3/2*sqrt(3)"));
    }

    #[test]
    fn bundle_round_trip() {
        let b = develop(&qr_family(7).unwrap());
        let sols = all_solutions(b.params(), &b).unwrap();
        let chosen: Vec<&CretanMatrix> = sols.matrices.iter().collect();
        let bundle = SolutionBundle::new(&b, &sols, &chosen).unwrap();
        let text = serde_json::to_string(&bundle).unwrap();
        let Document::Bundle(back) = Document::from_json(&text).unwrap() else { panic!() };
        assert_eq!(back, bundle);
        assert_eq!(back.design.to_incidence().unwrap(), b);
        assert_eq!(back.rejected.len(), 2);
    }

    #[test]
    fn float_documents_and_csv() {
        let m = FloatMatrix::from_rows(&[vec![1.0, -0.5], vec![-0.5, 1.0]]).unwrap();
        let doc = MatrixDocument::from_float(&m, Some(2.0));
        assert_eq!(doc.levels.len(), 2);
        assert!(!doc.is_exact());
        assert!(matches!(doc.to_cretan(), Err(DocumentError::NotExact)));
        assert_eq!(doc.to_float().unwrap(), m);
        let csv = to_csv(&m.rows());
        assert_eq!(csv, "1,-0.5\n-0.5,1\n");
        assert_eq!(parse_csv(&csv).unwrap(), m);
        assert!(matches!(parse_csv("1,2\n3,x\n"), Err(DocumentError::Csv { line: 2, .. })));
        assert!(parse_csv("1,2\n").is_err());
    }

    #[test]
    fn malformed_documents() {
        assert!(Document::from_json("{\"foo\": 1}").is_err());
        assert!(Document::from_json("not json").is_err());
        let bad = r#"{"order": 2, "params": null, "levels": [{"exact": "1", "float": 1.0}], "entries": [[0, 1], [0, 0]]}"#;
        let Document::Matrix(doc) = Document::from_json(bad).unwrap() else { panic!() };
        assert!(doc.to_float().is_err());
    }
}
