//! Floating-point side: residuals of `M M^T`, LU determinants, exact-vs-float
//! comparison and a penalty-driven simplex search over structured templates.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cretan::CretanMatrix;
use crate::qfield::QfieldError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("no restart reached residual {best:e} within ten times the tolerance {tol:e}")]
    NoFeasiblePoint { best: f64, tol: f64 },
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Field(#[from] QfieldError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloatMatrix {
    n: usize,
    data: Vec<f64>,
}

impl FloatMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(FloatMatrix { n, data: rows.iter().flatten().copied().collect() })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        (0..n).for_each(|i| data[i * n + i] = 1.0);
        FloatMatrix { n, data }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `M M^T`, row-major.
    pub fn gram(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let ri = &self.data[i * n..(i + 1) * n];
                let rj = &self.data[j * n..(j + 1) * n];
                let dot: f64 = ri.iter().zip(rj).map(|(a, b)| a * b).sum();
                out[i * n + j] = dot;
                out[j * n + i] = dot;
            }
        }
        out
    }
}

impl TryFrom<&CretanMatrix> for FloatMatrix {
    type Error = QfieldError;

    fn try_from(cm: &CretanMatrix) -> Result<Self, Self::Error> {
        Ok(FloatMatrix::from_rows(&cm.to_f64_rows()?).expect("square"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_offdiag: f64,
    pub max_diag_dev: f64,
    pub fitted_omega: f64,
    pub decimal_places: u32,
}

impl ResidualReport {
    pub fn max_residual(&self) -> f64 {
        self.max_offdiag.max(self.max_diag_dev)
    }
}

const MAX_DECIMAL_PLACES: u32 = 16;

/// Largest `p` with `r < 0.5 * 10^-p`, capped at 16.
pub fn decimal_places(r: f64) -> u32 {
    (0..=MAX_DECIMAL_PLACES)
        .take_while(|&p| r < 0.5 * 10f64.powi(-(p as i32)))
        .last()
        .unwrap_or(0)
}

/// Deviations of `M M^T` from `omega I` with `omega` the mean diagonal.
pub fn residual(m: &FloatMatrix) -> ResidualReport {
    residual_with(m, None)
}

/// As [`residual`], but measures the diagonal against a claimed weight.
pub fn residual_against(m: &FloatMatrix, omega: f64) -> ResidualReport {
    residual_with(m, Some(omega))
}

fn residual_with(m: &FloatMatrix, claimed: Option<f64>) -> ResidualReport {
    let n = m.n;
    let g = m.gram();
    let fitted_omega = if n == 0 { 0.0 } else { (0..n).map(|i| g[i * n + i]).sum::<f64>() / n as f64 };
    let target = claimed.unwrap_or(fitted_omega);
    let mut max_offdiag = 0.0f64;
    let mut max_diag_dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                max_diag_dev = max_diag_dev.max((g[i * n + i] - target).abs());
            } else {
                max_offdiag = max_offdiag.max(g[i * n + j].abs());
            }
        }
    }
    ResidualReport {
        max_offdiag,
        max_diag_dev,
        fitted_omega,
        decimal_places: decimal_places(max_offdiag.max(max_diag_dev)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloatDet {
    pub value: f64,
    /// Some pivot fell below `1e-300` in magnitude.
    pub singular: bool,
}

pub const PIVOT_FLOOR: f64 = 1e-300;

/// Signed determinant by LU factorization with partial pivoting.
pub fn float_det(m: &FloatMatrix) -> FloatDet {
    let n = m.n;
    let mut a = m.data.clone();
    let mut det = 1.0;
    let mut singular = false;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))
            .expect("non-empty range");
        let pivot = a[pivot_row * n + col];
        if pivot.abs() < PIVOT_FLOOR {
            singular = true;
            det = 0.0;
            break;
        }
        if pivot_row != col {
            for c in 0..n {
                a.swap(col * n + c, pivot_row * n + c);
            }
            det = -det;
        }
        det *= pivot;
        for r in col + 1..n {
            let factor = a[r * n + col] / pivot;
            if factor != 0.0 {
                for c in col..n {
                    a[r * n + c] -= factor * a[col * n + c];
                }
            }
        }
    }
    FloatDet { value: det, singular }
}

/// Exact quantities of a Cretan matrix next to their float counterparts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub omega_exact: String,
    pub omega_float: f64,
    /// `omega^(v/2)` from the exact weight.
    pub det_from_weight: f64,
    /// `|det|` of the float-evaluated matrix by LU.
    pub det_lu: f64,
    pub levels: Vec<(String, f64)>,
    pub residual: ResidualReport,
    /// At least ten correct decimal places in `M M^T`.
    pub meets_precision: bool,
}

pub const EXACT_INPUT_DECIMALS: u32 = 10;

pub fn compare_exact_float(cm: &CretanMatrix) -> Result<ComparisonReport, NumericError> {
    let m = FloatMatrix::try_from(cm)?;
    let res = residual(&m);
    let levels = cm
        .levels()
        .iter()
        .map(|l| Ok((l.value.to_string(), l.value.to_f64()?)))
        .collect::<Result<_, QfieldError>>()?;
    Ok(ComparisonReport {
        omega_exact: cm.weight().to_string(),
        omega_float: cm.weight().to_f64()?,
        det_from_weight: cm.det_float(),
        det_lu: float_det(&m).value.abs(),
        levels,
        residual: res,
        meets_precision: res.decimal_places >= EXACT_INPUT_DECIMALS,
    })
}

/// One cell of a template: a variable index and a sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Slot {
    pub var: usize,
    pub negative: bool,
}

impl Slot {
    pub const fn pos(var: usize) -> Self {
        Slot { var, negative: false }
    }

    pub const fn neg(var: usize) -> Self {
        Slot { var, negative: true }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.negative { '-' } else { '+' }, self.var)
    }
}

impl FromStr for Slot {
    type Err = NumericError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (negative, rest) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let var = rest
            .parse()
            .map_err(|_| NumericError::InvalidTemplate(format!("bad slot {s:?}")))?;
        Ok(Slot { var, negative })
    }
}

impl Serialize for Slot {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Slot {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateStructure {
    FullPattern,
    Circulant,
    BorderedCirculant,
    DiagonalPlusOffdiagonal,
}

/// A sign/variable pattern; variable 0 is the anchor level fixed at 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchTemplate {
    pub name: String,
    pub order: usize,
    pub variable_count: usize,
    pub structure: TemplateStructure,
    pub slots: Vec<Vec<Slot>>,
}

impl SearchTemplate {
    pub fn full(name: &str, slots: Vec<Vec<Slot>>) -> Result<Self, NumericError> {
        Self::assemble(name, slots, TemplateStructure::FullPattern)
    }

    pub fn circulant(name: &str, first_row: &[Slot]) -> Result<Self, NumericError> {
        let n = first_row.len();
        let slots = (0..n)
            .map(|i| (0..n).map(|j| first_row[(j + n - i) % n]).collect())
            .collect();
        Self::assemble(name, slots, TemplateStructure::Circulant)
    }

    /// `corner` at (0,0), `border` along the rest of the first row and
    /// column, and a circulant core developed from `core_row`.
    pub fn bordered_circulant(name: &str, corner: Slot, border: Slot, core_row: &[Slot]) -> Result<Self, NumericError> {
        let m = core_row.len();
        let slots = (0..=m)
            .map(|i| {
                (0..=m)
                    .map(|j| match (i, j) {
                        (0, 0) => corner,
                        (0, _) | (_, 0) => border,
                        _ => core_row[(j - 1 + m - (i - 1)) % m],
                    })
                    .collect()
            })
            .collect();
        Self::assemble(name, slots, TemplateStructure::BorderedCirculant)
    }

    /// `x` on the diagonal and `y` everywhere else.
    pub fn diagonal_plus_offdiagonal(name: &str, n: usize) -> Result<Self, NumericError> {
        let slots = (0..n)
            .map(|i| (0..n).map(|j| Slot::pos(if i == j { 0 } else { 1 })).collect())
            .collect();
        Self::assemble(name, slots, TemplateStructure::DiagonalPlusOffdiagonal)
    }

    fn assemble(name: &str, slots: Vec<Vec<Slot>>, structure: TemplateStructure) -> Result<Self, NumericError> {
        let variable_count = slots.iter().flatten().map(|s| s.var + 1).max().unwrap_or(0);
        let t = SearchTemplate { name: name.to_string(), order: slots.len(), variable_count, structure, slots };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), NumericError> {
        let bad = |msg: String| Err(NumericError::InvalidTemplate(msg));
        let n = self.order;
        if n == 0 || self.slots.len() != n || self.slots.iter().any(|r| r.len() != n) {
            return bad(format!("slot map is not {n} x {n}"));
        }
        if self.variable_count < 2 {
            return bad("at least two variables are needed".into());
        }
        let mut seen = vec![false; self.variable_count];
        for s in self.slots.iter().flatten() {
            match seen.get_mut(s.var) {
                Some(flag) => *flag = true,
                None => return bad(format!("variable {} outside 0..{}", s.var, self.variable_count)),
            }
        }
        if let Some(missing) = seen.iter().position(|&f| !f) {
            return bad(format!("variable {missing} never used"));
        }
        let at = |i: usize, j: usize| self.slots[i][j];
        let conforms = match self.structure {
            TemplateStructure::FullPattern => true,
            TemplateStructure::Circulant => {
                (0..n).all(|i| (0..n).all(|j| at(i, j) == at(0, (j + n - i) % n)))
            }
            TemplateStructure::BorderedCirculant => {
                let m = n - 1;
                (1..n).all(|i| at(0, i) == at(0, 1) && at(i, 0) == at(0, 1))
                    && (1..n).all(|i| (1..n).all(|j| at(i, j) == at(1, 1 + (j - 1 + m - (i - 1)) % m)))
            }
            TemplateStructure::DiagonalPlusOffdiagonal => (0..n).all(|i| {
                (0..n).all(|j| if i == j { at(i, j) == at(0, 0) } else { at(i, j) == at(0, 1.min(n - 1)) })
            }),
        };
        if !conforms {
            return bad(format!("slot map does not realize {:?}", self.structure));
        }
        Ok(())
    }

    /// Applies signs to `levels`; `levels.len()` must equal `variable_count`.
    pub fn instantiate(&self, levels: &[f64]) -> FloatMatrix {
        let rows: Vec<Vec<f64>> = self
            .slots
            .iter()
            .map(|r| {
                r.iter()
                    .map(|s| if s.negative { -levels[s.var] } else { levels[s.var] })
                    .collect()
            })
            .collect();
        FloatMatrix::from_rows(&rows).expect("validated square")
    }

    pub fn builtin(tag: &str) -> Option<SearchTemplate> {
        match tag {
            "circ5" => Some(circ5_template()),
            "s5d" => Some(s5d_template()),
            "dpo5" => Some(diagonal_template(5)),
            "a9" => Some(a9_template()),
            _ => None,
        }
    }
}

pub const BUILTIN_TEMPLATES: [&str; 4] = ["circ5", "s5d", "dpo5", "a9"];

use Slot as S;

/// Order-5 circulant `circ(c, b, -a, -a, b)` with `a = 1`.
pub fn circ5_template() -> SearchTemplate {
    let (a, b, c) = (0, 1, 2);
    SearchTemplate::circulant("circ5", &[S::pos(c), S::pos(b), S::neg(a), S::neg(a), S::pos(b)])
        .expect("valid built-in")
}

/// The order-5 three-level pattern with levels `a = 1`, `b`, `c`.
pub fn s5d_template() -> SearchTemplate {
    let (a, b, c) = (0, 1, 2);
    let rows = vec![
        vec![S::pos(a), S::neg(a), S::neg(b), S::neg(a), S::neg(c)],
        vec![S::pos(b), S::pos(a), S::neg(a), S::pos(c), S::neg(a)],
        vec![S::pos(a), S::pos(a), S::pos(c), S::neg(b), S::pos(a)],
        vec![S::pos(a), S::neg(c), S::pos(a), S::pos(a), S::neg(b)],
        vec![S::pos(c), S::neg(b), S::neg(a), S::pos(a), S::pos(a)],
    ];
    SearchTemplate::full("s5d", rows).expect("valid built-in")
}

pub fn diagonal_template(n: usize) -> SearchTemplate {
    SearchTemplate::diagonal_plus_offdiagonal(&format!("dpo{n}"), n).expect("valid built-in")
}

/// Order-9 bordered circulant: corner `-d`, border `b`, core
/// `circ(a, -a, c, c, a, c, -a, -a)`.
pub fn a9_template() -> SearchTemplate {
    let (a, b, c, d) = (0, 1, 2, 3);
    let core = [S::pos(a), S::neg(a), S::pos(c), S::pos(c), S::pos(a), S::pos(c), S::neg(a), S::neg(a)];
    SearchTemplate::bordered_circulant("a9", S::neg(d), S::pos(b), &core).expect("valid built-in")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub restarts: usize,
    /// Simplex iterations per penalty stage.
    pub max_iters: usize,
    pub seed: u64,
    pub tol: f64,
    /// Penalty weights, applied in order with warm starts.
    pub penalty_schedule: Vec<f64>,
    /// Worker threads; 0 lets the pool decide. Does not affect results.
    pub workers: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            restarts: 32,
            max_iters: 4000,
            seed: 0,
            tol: 1e-5,
            penalty_schedule: vec![1.0, 1e2, 1e4, 1e6, 1e8, 1e10],
            workers: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), NumericError> {
        let bad = |m: &str| Err(NumericError::InvalidConfig(m.to_string()));
        if self.restarts == 0 {
            return bad("restarts must be positive");
        }
        if self.max_iters == 0 {
            return bad("max-iters must be positive");
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad("tol must be positive");
        }
        if self.penalty_schedule.is_empty() || self.penalty_schedule.iter().any(|m| m.is_nan() || *m <= 0.0) {
            return bad("penalty schedule needs positive weights");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub restart: usize,
    pub penalty_weight: f64,
    pub iterations: usize,
    pub objective: f64,
    pub residual: f64,
    pub abs_det: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub template: String,
    pub order: usize,
    pub variable_count: usize,
    pub levels: Vec<f64>,
    pub matrix: FloatMatrix,
    pub residual: ResidualReport,
    pub abs_det: f64,
    /// `residual <= tol`; otherwise the best point was within ten times it.
    pub within_tolerance: bool,
    pub best_restart: usize,
    pub penalty_trace: Vec<TraceEntry>,
}

impl SearchResult {
    /// `order tau omega |det| residual`
    pub fn summary(&self) -> String {
        format!(
            "{} {} {:.6} {:.6e} {:.3e}",
            self.order,
            self.variable_count,
            self.residual.fitted_omega,
            self.abs_det,
            self.residual.max_residual()
        )
    }
}

/// Sum of squared deviations of `M M^T` from (mean diagonal) `* I`.
fn orthogonality_penalty(m: &FloatMatrix) -> f64 {
    let n = m.n;
    let g = m.gram();
    let mean = (0..n).map(|i| g[i * n + i]).sum::<f64>() / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = if i == j { g[i * n + j] - mean } else { g[i * n + j] };
            total += d * d;
        }
    }
    total
}

fn full_levels(free: &[f64]) -> Vec<f64> {
    std::iter::once(1.0).chain(free.iter().map(|x| x.clamp(-1.0, 1.0))).collect()
}

/// Minimizes `f` with a Nelder-Mead simplex started at `x0` with edge `step`.
/// Returns the best point, its value and the iteration count.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_iters: usize) -> (Vec<f64>, f64, usize) {
    let dim = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += if x[i] + step > 1.0 { -step } else { step };
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect()
    };
    let mut iterations = 0;
    while iterations < max_iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[dim].1);
        let spread = (worst - best).abs();
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= 1e-16 * (1.0 + best.abs()) && diameter < 1e-13 {
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|(x, _)| x[k]).sum::<f64>() / dim as f64)
            .collect();
        let worst_x = simplex[dim].0.clone();
        let reflected = combine(&centroid, &worst_x, -1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = combine(&centroid, &worst_x, -2.0);
            let fe = f(&expanded);
            simplex[dim] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
        } else {
            let (towards, f_towards) = if fr < worst { (&reflected, fr) } else { (&worst_x, worst) };
            let contracted = combine(&centroid, towards, 0.5);
            let fc = f(&contracted);
            if fc < f_towards {
                simplex[dim] = (contracted, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x = combine(&anchor, &entry.0, 0.5);
                    let fx = f(&x);
                    *entry = (x, fx);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    (x, fx, iterations)
}

struct RestartOutcome {
    levels: Vec<f64>,
    residual: ResidualReport,
    abs_det: f64,
    trace: Vec<TraceEntry>,
}

fn run_restart(template: &SearchTemplate, config: &SearchConfig, restart: usize) -> RestartOutcome {
    let seed = config.seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = template.variable_count - 1;
    let mut x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut trace = Vec::with_capacity(config.penalty_schedule.len());
    for (stage, &mu) in config.penalty_schedule.iter().enumerate() {
        let objective = |free: &[f64]| {
            let m = template.instantiate(&full_levels(free));
            let outside: f64 = free.iter().map(|v| (v - v.clamp(-1.0, 1.0)).powi(2)).sum();
            let log_det = (float_det(&m).value.abs() + 1e-300).ln();
            -log_det + mu * (orthogonality_penalty(&m) + outside)
        };
        let step = (0.25 * 10f64.powi(-(stage as i32))).max(1e-6);
        let (best, value, iterations) = nelder_mead(&objective, &x, step, config.max_iters);
        x = best.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        let m = template.instantiate(&full_levels(&x));
        trace.push(TraceEntry {
            restart,
            penalty_weight: mu,
            iterations,
            objective: value,
            residual: residual(&m).max_residual(),
            abs_det: float_det(&m).value.abs(),
        });
    }
    let levels = full_levels(&x);
    let m = template.instantiate(&levels);
    RestartOutcome { residual: residual(&m), abs_det: float_det(&m).value.abs(), levels, trace }
}

/// Maximizes `log|det M| - mu * penalty` over the free levels in `[-1, 1]`
/// (level 0 fixed at 1) with an escalating penalty schedule and seeded
/// multi-start. The best feasible restart wins by `|det|`, ties going to the
/// lower restart index, so the result does not depend on the worker count.
pub fn search(template: &SearchTemplate, config: &SearchConfig) -> Result<SearchResult, NumericError> {
    template.validate()?;
    config.validate()?;
    let run = || -> Vec<RestartOutcome> {
        (0..config.restarts)
            .into_par_iter()
            .map(|r| run_restart(template, config, r))
            .collect()
    };
    let outcomes = if config.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| NumericError::InvalidConfig(e.to_string()))?
            .install(run)
    } else {
        run()
    };

    let pick = |limit: f64| {
        outcomes
            .iter()
            .enumerate()
            .filter(|(_, o)| o.residual.max_residual() <= limit)
            .fold(None::<(usize, &RestartOutcome)>, |best, (i, o)| match best {
                Some((_, b)) if b.abs_det >= o.abs_det => best,
                _ => Some((i, o)),
            })
    };
    let (best_restart, best, within_tolerance) = match pick(config.tol) {
        Some((i, o)) => (i, o, true),
        None => match pick(10.0 * config.tol) {
            Some((i, o)) => (i, o, false),
            None => {
                let best = outcomes
                    .iter()
                    .map(|o| o.residual.max_residual())
                    .fold(f64::INFINITY, f64::min);
                return Err(NumericError::NoFeasiblePoint { best, tol: config.tol });
            }
        },
    };
    Ok(SearchResult {
        template: template.name.clone(),
        order: template.order,
        variable_count: template.variable_count,
        levels: best.levels.clone(),
        matrix: template.instantiate(&best.levels),
        residual: best.residual,
        abs_det: best.abs_det,
        within_tolerance,
        best_restart,
        penalty_trace: outcomes.iter().flat_map(|o| o.trace.iter().cloned()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cretan::{build_cretan, solve_characteristic};
    use crate::designs::{develop, DesignParams, DifferenceSet};

    fn cretan_5() -> CretanMatrix {
        let b = develop(&DifferenceSet::new(DesignParams::new(5, 1, 0).unwrap(), [0]).unwrap());
        build_cretan(&b, &solve_characteristic(b.params()).unwrap()[0]).unwrap()
    }

    /// Oracle: cofactor expansion, fine for small orders.
    fn cofactor_det(rows: &[Vec<f64>]) -> f64 {
        let n = rows.len();
        if n == 1 {
            return rows[0][0];
        }
        (0..n)
            .map(|c| {
                let minor: Vec<Vec<f64>> = rows[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, v)| *v).collect())
                    .collect();
                let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                sign * rows[0][c] * cofactor_det(&minor)
            })
            .sum()
    }

    #[test]
    fn residual_examples() {
        let id = residual(&FloatMatrix::identity(5));
        assert_eq!(id.max_offdiag, 0.0);
        assert_eq!(id.fitted_omega, 1.0);
        assert_eq!(id.decimal_places, MAX_DECIMAL_PLACES);

        let sb = circ5_template().instantiate(&[1.0, 0.381966, -0.309017]);
        let r = residual(&sb);
        // 2 + 2b^2 + c^2 with the six-place levels
        assert!((r.fitted_omega - 2.3872876).abs() < 1e-7);
        assert!(r.max_offdiag < 5e-8);
        assert_eq!(r.decimal_places, 7);

        let r5 = residual(&FloatMatrix::try_from(&cretan_5()).unwrap());
        assert!(r5.max_offdiag < 1e-12);
        assert!(r5.decimal_places >= 11);
    }

    #[test]
    fn residual_against_claimed_weight() {
        let r = residual_against(&FloatMatrix::identity(3), 2.0);
        assert_eq!(r.max_diag_dev, 1.0);
        assert_eq!(r.decimal_places, 0);
    }

    #[test]
    fn decimal_place_boundaries() {
        assert_eq!(decimal_places(4.9e-6), 5);
        assert_eq!(decimal_places(5e-6), 4);
        assert_eq!(decimal_places(0.6), 0);
    }

    #[test]
    fn determinant_examples() {
        let m5 = FloatMatrix::try_from(&cretan_5()).unwrap();
        let d = float_det(&m5);
        assert!((d.value + (5.0f64 / 3.0).powi(5)).abs() < 1e-9, "{}", d.value);
        assert!(!d.singular);
        assert_eq!(float_det(&FloatMatrix::identity(5)).value, 1.0);
        let zero = FloatMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(float_det(&zero).singular);
    }

    #[test]
    fn lu_matches_cofactor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..7 {
            let rows: Vec<Vec<f64>> =
                (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let lu = float_det(&FloatMatrix::from_rows(&rows).unwrap()).value;
            let oracle = cofactor_det(&rows);
            assert!((lu - oracle).abs() < 1e-12 * (1.0 + oracle.abs()), "n={n}: {lu} vs {oracle}");
        }
    }

    #[test]
    fn comparison_for_order_5() {
        let report = compare_exact_float(&cretan_5()).unwrap();
        assert_eq!(report.omega_exact, "25/9");
        assert_eq!(report.levels[1].0, "-2/3");
        assert!((report.levels[1].1 + 0.666667).abs() < 1e-6);
        assert!(report.meets_precision);
        assert!((report.det_lu / report.det_from_weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn templates() {
        let a9 = a9_template();
        assert_eq!(a9.order, 9);
        assert_eq!(a9.variable_count, 4);
        assert_eq!(a9.slots[1][1..].len(), 8);
        let core: Vec<String> = a9.slots[1][1..].iter().map(|s| s.to_string()).collect();
        assert_eq!(core, ["+0", "-0", "+2", "+2", "+0", "+2", "-0", "-0"]);
        assert_eq!(a9.slots[0][0], Slot::neg(3));
        assert!(a9.slots[0][1..].iter().all(|&s| s == Slot::pos(1)));
        assert_eq!(circ5_template().variable_count, 3);
        assert_eq!(s5d_template().variable_count, 3);
        for tag in BUILTIN_TEMPLATES {
            SearchTemplate::builtin(tag).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn template_validation() {
        let mut t = circ5_template();
        t.slots[1][1] = Slot::pos(1);
        assert!(t.validate().is_err());
        let gap = SearchTemplate::full("gap", vec![vec![Slot::pos(0), Slot::pos(2)], vec![Slot::pos(2), Slot::pos(0)]]);
        assert!(gap.is_err());
        let json = serde_json::to_string(&a9_template()).unwrap();
        let back: SearchTemplate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a9_template());
    }

    #[test]
    fn search_diagonal_template_finds_exact_root() {
        let config = SearchConfig { restarts: 32, seed: 11, ..SearchConfig::default() };
        let result = search(&diagonal_template(5), &config).unwrap();
        assert!((result.levels[1] + 2.0 / 3.0).abs() < 1e-4, "{:?}", result.levels);
        assert!((result.residual.fitted_omega - 25.0 / 9.0).abs() < 1e-4);
        assert_eq!(result.levels[0], 1.0);
        assert!(result.within_tolerance);
    }

    #[test]
    fn search_levels_stay_in_box() {
        let config = SearchConfig { restarts: 6, seed: 3, ..SearchConfig::default() };
        let result = search(&circ5_template(), &config).unwrap();
        assert!(result.levels.iter().all(|l| l.abs() <= 1.0));
        assert_eq!(result.levels[0], 1.0);
        assert_eq!(result.penalty_trace.len(), 6 * config.penalty_schedule.len());
    }

    #[test]
    fn search_rejects_bad_config() {
        let config = SearchConfig { restarts: 0, ..SearchConfig::default() };
        assert!(matches!(search(&circ5_template(), &config), Err(NumericError::InvalidConfig(_))));
    }

    #[test]
    fn infeasible_template_is_reported() {
        // equal rows have inner product 1 + b^2, never zero
        let twin = SearchTemplate::full(
            "twin-rows",
            vec![vec![Slot::pos(0), Slot::pos(1)], vec![Slot::pos(0), Slot::pos(1)]],
        )
        .unwrap();
        let config = SearchConfig { restarts: 4, ..SearchConfig::default() };
        assert!(matches!(search(&twin, &config), Err(NumericError::NoFeasiblePoint { .. })));
    }
}
