//! Two-level Cretan matrices from symmetric designs.
//!
//! Replacing the ones of an `SBIBD(v, k, lambda)` by `x = 1` and the zeros by
//! a level `y` gives a matrix with `S S^T = omega I` exactly when
//!
//! ```text
//! lambda + 2(k - lambda) y + (v - 2k + lambda) y^2 = 0,   omega = k + (v - k) y^2
//! ```
//!
//! and its determinant has modulus `omega^(v/2)`. Because
//! `(k - lambda)^2 - lambda (v - 2k + lambda) = k - lambda`, both roots lie in
//! `Q(sqrt(k - lambda))` and everything here is computed exactly.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::designs::{
    self, complement, develop, find_difference_set, qr_family, twin_prime_family, verify_sbibd,
    DesignError, DesignParams, IncidenceMatrix,
};
use crate::qfield::{QfieldError, QuadExt, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CretanError {
    #[error("characteristic equation of {0} is degenerate (k = lambda)")]
    DegenerateParams(DesignParams),
    #[error("root {0} has modulus above one")]
    InadmissibleRoot(Box<QuadExt>),
    #[error("design does not pass verification or does not match the root's parameters")]
    NotVerifiedDesign,
    #[error("no design with parameters {0} is available")]
    NoDesignAvailable(DesignParams),
    #[error("levels use more than one radicand")]
    MixedLevels,
    #[error("entry grid does not match order {0} or refers to a missing level")]
    BadGrid(usize),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Field(#[from] QfieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Original,
    Complement,
}

/// Which root of the characteristic equation; `Linear` when the quadratic
/// coefficient vanishes and a single root remains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Plus,
    Minus,
    Linear,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Original => "original",
            Source::Complement => "complement",
        })
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
            Branch::Linear => "linear",
        })
    }
}

/// A root `y` (with `x = 1`) of the characteristic equation of `params`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacteristicSolution {
    pub y: QuadExt,
    pub params: DesignParams,
    pub source: Source,
    pub branch: Branch,
    /// `|y| <= 1`, decided exactly.
    pub admissible: bool,
}

fn int(n: i64) -> QuadExt {
    QuadExt::from_int(n)
}

/// `lambda + 2(k - lambda) y + (v - 2k + lambda) y^2` evaluated exactly.
pub fn characteristic_residual(params: DesignParams, y: &QuadExt) -> Result<QuadExt, QfieldError> {
    let (v, k, l) = (params.v as i64, params.k as i64, params.lambda as i64);
    let linear = int(2 * (k - l)).try_mul(y)?;
    let quadratic = int(v - 2 * k + l).try_mul(&y.square())?;
    int(l).try_add(&linear)?.try_add(&quadratic)
}

/// Roots of the characteristic equation with `x = 1`:
/// `y = (-(k - lambda) +- sqrt(k - lambda)) / (v - 2k + lambda)`, or
/// `y = -lambda / (2(k - lambda))` when `v - 2k + lambda = 0`.
pub fn solve_characteristic(params: DesignParams) -> Result<Vec<CharacteristicSolution>, CretanError> {
    solve_for(params, Source::Original)
}

fn solve_for(params: DesignParams, source: Source) -> Result<Vec<CharacteristicSolution>, CretanError> {
    let (v, k, l) = (params.v as i64, params.k as i64, params.lambda as i64);
    if k == l {
        return Err(CretanError::DegenerateParams(params));
    }
    let gap = k - l;
    let lead = v - 2 * k + l;
    let make = |y: QuadExt, branch| CharacteristicSolution {
        admissible: y.within_unit(),
        y,
        params,
        source,
        branch,
    };
    if lead == 0 {
        let y = QuadExt::from_fraction(-l, 2 * gap);
        return Ok(vec![make(y, Branch::Linear)]);
    }
    let base = Rational::new(BigInt::from(-gap), BigInt::from(lead));
    let step = Rational::new(BigInt::from(1), BigInt::from(lead));
    let minus = QuadExt::new(base.clone(), -step.clone(), gap as u64);
    let plus = QuadExt::new(base, step, gap as u64);
    Ok(vec![make(minus, Branch::Minus), make(plus, Branch::Plus)])
}

/// A distinct entry value and how often it occurs in the whole matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Level {
    pub value: QuadExt,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub design: DesignParams,
    pub source: Source,
    pub branch: Branch,
}

/// An exact matrix stored as a grid of level indices over a level table.
#[derive(Debug, Clone, PartialEq)]
pub struct CretanMatrix {
    order: usize,
    levels: Vec<Level>,
    grid: Vec<usize>,
    weight: QuadExt,
    det_float: f64,
    provenance: Option<Provenance>,
}

impl CretanMatrix {
    /// Assembles a matrix from a level table and an index grid. Levels must
    /// share one radicand; occurrence counts are recomputed.
    pub fn from_parts(
        values: Vec<QuadExt>,
        grid: Vec<usize>,
        order: usize,
        weight: QuadExt,
        provenance: Option<Provenance>,
    ) -> Result<Self, CretanError> {
        if grid.len() != order * order || grid.iter().any(|&g| g >= values.len()) {
            return Err(CretanError::BadGrid(order));
        }
        let mut radicand = weight.radicand();
        for value in &values {
            radicand = value
                .common_radicand(&QuadExt::sqrt(radicand))
                .map_err(|_| CretanError::MixedLevels)?;
        }
        let mut counts = vec![0usize; values.len()];
        for &g in &grid {
            counts[g] += 1;
        }
        let levels = values
            .into_iter()
            .zip(counts)
            .map(|(value, count)| Level { value, count })
            .collect();
        let det_float = weight.to_f64()?.abs().powf(order as f64 / 2.0);
        Ok(CretanMatrix { order, levels, grid, weight, det_float, provenance })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level_index(&self, i: usize, j: usize) -> usize {
        self.grid[i * self.order + j]
    }

    pub fn entry(&self, i: usize, j: usize) -> &QuadExt {
        &self.levels[self.level_index(i, j)].value
    }

    pub fn weight(&self) -> &QuadExt {
        &self.weight
    }

    pub fn det_float(&self) -> f64 {
        self.det_float
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    /// The level `y` standing in for the design's zeros, if any.
    pub fn y(&self) -> Option<&QuadExt> {
        self.levels.iter().map(|l| &l.value).find(|v| !v.is_one())
    }

    /// Builds the level table from row-major entries, in order of first
    /// appearance.
    pub fn from_entries(
        entries: &[QuadExt],
        order: usize,
        weight: QuadExt,
        provenance: Option<Provenance>,
    ) -> Result<Self, CretanError> {
        let mut values: Vec<QuadExt> = Vec::new();
        let grid = entries
            .iter()
            .map(|e| match values.iter().position(|v| v == e) {
                Some(idx) => idx,
                None => {
                    values.push(e.clone());
                    values.len() - 1
                }
            })
            .collect();
        CretanMatrix::from_parts(values, grid, order, weight, provenance)
    }

    /// Copy with entry `(i, j)` replaced; provenance is dropped.
    pub fn with_entry(&self, i: usize, j: usize, value: QuadExt) -> Result<CretanMatrix, CretanError> {
        let n = self.order;
        let mut entries: Vec<QuadExt> = (0..n * n).map(|c| self.entry(c / n, c % n).clone()).collect();
        entries[i * n + j] = value;
        CretanMatrix::from_entries(&entries, n, self.weight.clone(), None)
    }

    /// Entry values evaluated to doubles, row-major.
    pub fn to_f64_rows(&self) -> Result<Vec<Vec<f64>>, QfieldError> {
        let floats: Vec<f64> = self.levels.iter().map(|l| l.value.to_f64()).collect::<Result<_, _>>()?;
        Ok((0..self.order)
            .map(|i| (0..self.order).map(|j| floats[self.level_index(i, j)]).collect())
            .collect())
    }
}

/// Replaces the ones of `b` by 1 and its zeros by `sol.y`;
/// `omega = k + (v - k) y^2`.
pub fn build_cretan(b: &IncidenceMatrix, sol: &CharacteristicSolution) -> Result<CretanMatrix, CretanError> {
    if b.params() != sol.params || !verify_sbibd(b).passed() {
        return Err(CretanError::NotVerifiedDesign);
    }
    if !sol.admissible {
        return Err(CretanError::InadmissibleRoot(Box::new(sol.y.clone())));
    }
    let DesignParams { v, k, .. } = sol.params;
    let weight = int(k as i64).try_add(&int((v - k) as i64).try_mul(&sol.y.square())?)?;
    let order = b.order();
    let grid = (0..order)
        .flat_map(|i| (0..order).map(move |j| (i, j)))
        .map(|(i, j)| if b.get(i, j) { 0 } else { 1 })
        .collect();
    let provenance = Provenance { design: sol.params, source: sol.source, branch: sol.branch };
    CretanMatrix::from_parts(vec![QuadExt::one(), sol.y.clone()], grid, order, weight, Some(provenance))
}

/// Exact weight and floating-point `|det| = omega^(v/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Determinant {
    pub omega: QuadExt,
    pub det_float: f64,
    /// `omega^(v/2)` when `v` is even and `omega` rational.
    pub exact: Option<Rational>,
}

pub fn determinant(cm: &CretanMatrix) -> Determinant {
    let exact = (cm.order.is_multiple_of(2) && cm.weight.is_rational())
        .then(|| num_traits::pow(cm.weight.rational_part().clone(), cm.order / 2));
    Determinant { omega: cm.weight.clone(), det_float: cm.det_float, exact }
}

/// Every entry of `S S^T` that disagrees with `omega I`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactReport {
    pub offdiagonal_defects: Vec<(usize, usize, QuadExt)>,
    pub diagonal_defects: Vec<(usize, QuadExt)>,
    /// Levels with modulus above one.
    pub oversized_levels: Vec<QuadExt>,
    /// Rows and columns without an entry equal to one.
    pub rows_without_one: Vec<usize>,
    pub columns_without_one: Vec<usize>,
}

impl ExactReport {
    pub fn orthogonal(&self) -> bool {
        self.offdiagonal_defects.is_empty() && self.diagonal_defects.is_empty()
    }

    pub fn passed(&self) -> bool {
        self.orthogonal()
            && self.oversized_levels.is_empty()
            && self.rows_without_one.is_empty()
            && self.columns_without_one.is_empty()
    }

    pub fn defect_count(&self) -> usize {
        self.offdiagonal_defects.len() + self.diagonal_defects.len()
    }
}

/// Computes `S S^T` exactly. Each inner product is accumulated as integer
/// counts of level pairs, then combined with the exact pairwise products.
pub fn verify_exact(cm: &CretanMatrix) -> ExactReport {
    let n = cm.order;
    let nl = cm.levels.len();
    let products: Vec<QuadExt> = (0..nl * nl)
        .map(|p| {
            cm.levels[p / nl].value
                .try_mul(&cm.levels[p % nl].value)
                .expect("levels share a radicand")
        })
        .collect();
    let mut offdiagonal_defects = Vec::new();
    let mut diagonal_defects = Vec::new();
    let mut counts = vec![0i64; nl * nl];
    for i in 0..n {
        for j in 0..n {
            counts.iter_mut().for_each(|c| *c = 0);
            for c in 0..n {
                counts[cm.level_index(i, c) * nl + cm.level_index(j, c)] += 1;
            }
            let mut dot = QuadExt::zero();
            for (count, product) in counts.iter().zip(&products) {
                if *count != 0 {
                    let term = product.scale(&Rational::from_integer(BigInt::from(*count)));
                    dot = dot.try_add(&term).expect("levels share a radicand");
                }
            }
            if i == j {
                if dot != cm.weight {
                    diagonal_defects.push((i, dot));
                }
            } else if !dot.is_zero() {
                offdiagonal_defects.push((i, j, dot));
            }
        }
    }
    let is_one = |i: usize, j: usize| cm.entry(i, j).is_one();
    ExactReport {
        offdiagonal_defects,
        diagonal_defects,
        oversized_levels: cm
            .levels
            .iter()
            .filter(|l| l.count > 0 && !l.value.within_unit())
            .map(|l| l.value.clone())
            .collect(),
        rows_without_one: (0..n).filter(|&i| !(0..n).any(|j| is_one(i, j))).collect(),
        columns_without_one: (0..n).filter(|&j| !(0..n).any(|i| is_one(i, j))).collect(),
    }
}

/// Where the admissible solutions of a design/complement pair come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    BothOriginal,
    BothComplement,
    OneEach,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RejectReason {
    /// `|y| > 1`.
    Inadmissible,
    /// `y = 0` collapses the matrix to a single level.
    ZeroLevel,
    /// `k = lambda` for this design.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub source: Source,
    pub branch: Option<Branch>,
    pub y: Option<QuadExt>,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solutions {
    pub params: DesignParams,
    pub matrices: Vec<CretanMatrix>,
    pub rejected: Vec<Rejection>,
    /// `None` with fewer than two solutions.
    pub classification: Option<Classification>,
}

impl Solutions {
    /// The solution with the largest weight, hence the largest determinant.
    pub fn principal(&self) -> Option<&CretanMatrix> {
        self.matrices.iter().max_by(|a, b| {
            a.weight.cmp_exact(&b.weight).expect("shared radicand")
        })
    }
}

/// Evaluates both roots on `b` and on its complement and builds every
/// admissible, non-zero combination.
pub fn all_solutions(params: DesignParams, b: &IncidenceMatrix) -> Result<Solutions, CretanError> {
    if b.params() != params || !verify_sbibd(b).passed() {
        return Err(CretanError::NotVerifiedDesign);
    }
    let comp = complement(b);
    let mut matrices = Vec::new();
    let mut rejected = Vec::new();
    for (design, source) in [(b, Source::Original), (&comp, Source::Complement)] {
        let roots = match solve_for(design.params(), source) {
            Ok(roots) => roots,
            Err(CretanError::DegenerateParams(_)) => {
                rejected.push(Rejection { source, branch: None, y: None, reason: RejectReason::Degenerate });
                continue;
            }
            Err(e) => return Err(e),
        };
        for sol in roots {
            let reason = if !sol.admissible {
                Some(RejectReason::Inadmissible)
            } else if sol.y.is_zero() {
                Some(RejectReason::ZeroLevel)
            } else {
                None
            };
            match reason {
                Some(reason) => rejected.push(Rejection {
                    source,
                    branch: Some(sol.branch),
                    y: Some(sol.y),
                    reason,
                }),
                None => matrices.push(build_cretan(design, &sol)?),
            }
        }
    }
    let classification = (matrices.len() >= 2).then(|| {
        let from = |s| matrices.iter().any(|m: &CretanMatrix| m.provenance.map(|p| p.source) == Some(s));
        match (from(Source::Original), from(Source::Complement)) {
            (true, false) => Classification::BothOriginal,
            (false, true) => Classification::BothComplement,
            _ => Classification::OneEach,
        }
    });
    Ok(Solutions { params, matrices, rejected, classification })
}

/// Some `SBIBD(4t-1, 2t-1, t-1)` from the catalog: quadratic residues when
/// `4t - 1` is prime, twin primes when it is `p(p+2)`, otherwise a search.
pub fn hadamard_design(t: u64) -> Result<IncidenceMatrix, CretanError> {
    let v = 4 * t - 1;
    let params = DesignParams::new(v, 2 * t - 1, t - 1)?;
    if designs::is_prime(v) {
        return Ok(develop(&qr_family(v)?));
    }
    if let Some(p) = (2..v).find(|p| p * (p + 2) == v) {
        if let Ok(ds) = twin_prime_family(p) {
            return Ok(develop(&ds));
        }
    }
    match find_difference_set(params, 5_000_000) {
        Ok(ds) => Ok(develop(&ds)),
        Err(_) => Err(CretanError::NoDesignAvailable(params)),
    }
}

/// All solutions for the Hadamard-related design of order `4t - 1`, after
/// checking the closed form `y = (-t +- sqrt t)/t` against the solver.
pub fn hadamard_family_cretan(t: u64) -> Result<Solutions, CretanError> {
    if t == 0 {
        return Err(CretanError::NoDesignAvailable(DesignParams { v: 0, k: 0, lambda: 0 }));
    }
    let b = hadamard_design(t)?;
    let params = b.params();
    let ti = t as i64;
    let base = BigRational::new(BigInt::from(-ti), BigInt::from(ti));
    let step = BigRational::new(BigInt::from(1), BigInt::from(ti));
    let closed = [
        QuadExt::new(base.clone(), -step.clone(), t),
        QuadExt::new(base, step, t),
    ];
    let solved: Vec<QuadExt> = solve_characteristic(params)?.into_iter().map(|s| s.y).collect();
    assert_eq!(solved, closed, "closed form disagrees with the characteristic solver");
    all_solutions(params, &b)
}
