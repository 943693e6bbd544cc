//! The `cretan` command line.
//!
//! Exit codes: 0 success or pass, 1 verification failure, 2 usage or parse
//! error, 3 infeasible or unavailable.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cretan::{all_solutions, verify_exact, Branch, CretanError, CretanMatrix, Source};
use crate::designs::{
    self, develop, find_difference_set, load_difference_sets, menon_family, qr_family, twin_prime_family,
    verify_sbibd, DesignError, DesignParams, IncidenceMatrix,
};
use crate::documents::{parse_csv, to_csv, Document, DocumentError, MatrixDocument, SolutionBundle};
use crate::numeric::{
    float_det, residual_against, search, FloatMatrix, NumericError, SearchConfig, SearchTemplate,
};
use crate::portrait::{CellValue, PortraitSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNAVAILABLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cretan", version, about = "Two-level Cretan matrices from symmetric designs")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the built-in design families.
    Catalog,
    /// Build a design and its Cretan matrices.
    Generate(GenerateArgs),
    /// Check a design or matrix file.
    Verify(VerifyArgs),
    /// Numerical search over a structured template.
    Search(SearchArgs),
    /// Write a matrix portrait as a binary graymap.
    Render(RenderArgs),
    /// Convert between JSON and CSV.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    Qr,
    Twin,
    Menon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SourceArg {
    Original,
    Complement,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BranchArg {
    Plus,
    Minus,
    Linear,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, value_enum, conflicts_with_all = ["sbibd", "difference_sets"])]
    family: Option<Family>,
    /// Prime for the qr and twin families.
    #[arg(long)]
    p: Option<u64>,
    /// Parameter of the Menon family (order 4m^2).
    #[arg(long)]
    m: Option<u64>,
    /// Explicit parameters V K LAMBDA.
    #[arg(long, num_args = 3, value_names = ["V", "K", "LAMBDA"], conflicts_with = "difference_sets")]
    sbibd: Option<Vec<u64>>,
    /// Difference-set file; the set at --index is developed.
    #[arg(long)]
    difference_sets: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Node budget for difference-set search.
    #[arg(long, default_value_t = 10_000_000)]
    budget: u64,
    /// Emit every admissible solution instead of the one of largest weight.
    #[arg(long)]
    all_solutions: bool,
    #[arg(long, value_enum)]
    source: Option<SourceArg>,
    #[arg(long, value_enum)]
    branch: Option<BranchArg>,
    /// Write only the incidence matrix.
    #[arg(long)]
    design_only: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Float,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "exact")]
    mode: Mode,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Weight the diagonal must match; defaults to the document's weight or
    /// the mean diagonal.
    #[arg(long)]
    omega: Option<f64>,
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// Built-in template (circ5, s5d, dpo5, a9) or a template JSON file.
    #[arg(long)]
    template: String,
    /// Key-value (TOML) file with search settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Comma-separated penalty weights.
    #[arg(long, value_delimiter = ',')]
    penalty_schedule: Option<Vec<f64>>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RenderArgs {
    input: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u16).range(1..))]
    cell_size: u16,
}

#[derive(Debug, Args)]
struct ExportArgs {
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Format,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// An error carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Failure { code: EXIT_USAGE, message: message.to_string() }
    }

    fn unavailable(message: impl ToString) -> Self {
        Failure { code: EXIT_UNAVAILABLE, message: message.to_string() }
    }
}

impl From<DesignError> for Failure {
    fn from(e: DesignError) -> Self {
        match e {
            DesignError::UnsupportedOrder(_)
            | DesignError::NotFound(_)
            | DesignError::BudgetExceeded(..)
            | DesignError::OrderTooLarge(_) => Failure::unavailable(e),
            _ => Failure::usage(e),
        }
    }
}

impl From<CretanError> for Failure {
    fn from(e: CretanError) -> Self {
        match e {
            CretanError::Design(d) => d.into(),
            CretanError::NoDesignAvailable(_) | CretanError::InadmissibleRoot(_) => Failure::unavailable(e),
            _ => Failure::usage(e),
        }
    }
}

impl From<DocumentError> for Failure {
    fn from(e: DocumentError) -> Self {
        Failure::usage(e)
    }
}

impl From<NumericError> for Failure {
    fn from(e: NumericError) -> Self {
        match e {
            NumericError::NoFeasiblePoint { .. } => Failure::unavailable(e),
            _ => Failure::usage(e),
        }
    }
}

type Outcome = Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command, writing
/// to `out`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Catalog => catalog(out),
        Command::Generate(a) => generate(&a, out),
        Command::Verify(a) => verify(&a, out),
        Command::Search(a) => run_search(&a, out),
        Command::Render(a) => render(&a),
        Command::Export(a) => export(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::usage(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write_output(path: Option<&Path>, bytes: &[u8], out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| io_err(p, e)),
        None => out.write_all(bytes).map_err(|e| Failure::usage(e.to_string())),
    }
}

fn say(out: &mut dyn Write, line: &str) {
    let _ = writeln!(out, "{line}");
}

/// Built-in family members listed by `catalog`.
pub fn catalog_entries() -> Vec<(DesignParams, &'static str)> {
    let mut entries = Vec::new();
    for p in (3..=43).filter(|&p| designs::is_prime(p) && p % 4 == 3) {
        entries.push((qr_family(p).expect("catalog prime").params(), "quadratic residue"));
    }
    for p in [3, 5, 11, 17] {
        entries.push((twin_prime_family(p).expect("catalog twin primes").params(), "twin prime"));
    }
    for m in 1..=3 {
        entries.push((DesignParams { v: 4 * m * m, k: 2 * m * m - m, lambda: m * m - m }, "Menon"));
    }
    entries
}

fn catalog(out: &mut dyn Write) -> Outcome {
    say(out, "family             parameters");
    for (params, family) in catalog_entries() {
        say(out, &format!("{params} {family}"));
    }
    say(out, &format!("difference-set search for any valid (v,k,lambda) with v <= {}", designs::MAX_SEARCH_ORDER));
    Ok(EXIT_OK)
}

/// A design for `params`: a catalog family when one matches, else a search.
fn design_for(params: DesignParams, budget: u64) -> Result<IncidenceMatrix, Failure> {
    let params = params.validate()?;
    let v = params.v;
    if designs::is_prime(v) && v % 4 == 3 && params == qr_family(v)?.params() {
        return Ok(develop(&qr_family(v)?));
    }
    if let Some(p) = (2..v).find(|p| p * (p + 2) == v) {
        if let Ok(ds) = twin_prime_family(p) {
            if ds.params() == params {
                return Ok(develop(&ds));
            }
        }
    }
    let m = (1..=v).find(|m| 4 * m * m >= v).unwrap_or(1);
    if 4 * m * m == v && params == (DesignParams { v, k: 2 * m * m - m, lambda: m * m - m }) {
        if let Ok(b) = menon_family(m) {
            return Ok(b);
        }
    }
    Ok(develop(&find_difference_set(params, budget)?))
}

fn chosen_design(a: &GenerateArgs) -> Result<IncidenceMatrix, Failure> {
    let need = |v: Option<u64>, flag: &str| v.ok_or_else(|| Failure::usage(format!("--{flag} is required")));
    if let Some(family) = a.family {
        return Ok(match family {
            Family::Qr => develop(&qr_family(need(a.p, "p")?)?),
            Family::Twin => develop(&twin_prime_family(need(a.p, "p")?)?),
            Family::Menon => menon_family(need(a.m, "m")?)?,
        });
    }
    if let Some(v) = &a.sbibd {
        return design_for(DesignParams { v: v[0], k: v[1], lambda: v[2] }, a.budget);
    }
    if let Some(path) = &a.difference_sets {
        let sets = load_difference_sets(path)?;
        let ds = sets
            .get(a.index)
            .ok_or_else(|| Failure::usage(format!("{} holds {} sets", path.display(), sets.len())))?;
        return Ok(develop(ds));
    }
    Err(Failure::usage("one of --family, --sbibd or --difference-sets is required"))
}

fn generate(a: &GenerateArgs, out: &mut dyn Write) -> Outcome {
    let b = chosen_design(a)?;
    let report = verify_sbibd(&b);
    if !report.passed() {
        return Err(Failure::usage(format!("design {} fails verification", b.params())));
    }
    if a.design_only {
        let bytes = match a.format {
            Format::Json => pretty(&crate::documents::DesignDocument::from_incidence(&b)),
            Format::Csv => to_csv(&b.rows().iter().map(|r| r.iter().map(|&c| c as u8).collect()).collect::<Vec<_>>()),
        };
        write_output(a.out.as_deref(), bytes.as_bytes(), out)?;
        return Ok(EXIT_OK);
    }
    let sols = all_solutions(b.params(), &b)?;
    let wanted_source = a.source.map(|s| match s {
        SourceArg::Original => Source::Original,
        SourceArg::Complement => Source::Complement,
    });
    let wanted_branch = a.branch.map(|b| match b {
        BranchArg::Plus => Branch::Plus,
        BranchArg::Minus => Branch::Minus,
        BranchArg::Linear => Branch::Linear,
    });
    let filtered: Vec<&CretanMatrix> = sols
        .matrices
        .iter()
        .filter(|m| {
            let p = m.provenance().expect("built matrices carry provenance");
            wanted_source.is_none_or(|s| s == p.source) && wanted_branch.is_none_or(|b| b == p.branch)
        })
        .collect();
    let chosen: Vec<&CretanMatrix> = if a.all_solutions || wanted_source.is_some() || wanted_branch.is_some() {
        filtered
    } else {
        sols.principal().into_iter().collect()
    };
    if chosen.is_empty() {
        return Err(Failure::unavailable(format!("no admissible solution for {} with the requested root", b.params())));
    }
    match a.format {
        Format::Json => {
            let bundle = SolutionBundle::new(&b, &sols, &chosen).map_err(Failure::usage)?;
            write_output(a.out.as_deref(), pretty(&bundle).as_bytes(), out)?;
        }
        Format::Csv => {
            for (i, cm) in chosen.iter().enumerate() {
                let rows = cm.to_f64_rows().map_err(Failure::usage)?;
                let text = to_csv(&rows);
                let path = a.out.as_ref().map(|p| {
                    if chosen.len() == 1 {
                        p.clone()
                    } else {
                        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("matrix");
                        p.with_file_name(format!("{stem}-{i}.csv"))
                    }
                });
                write_output(path.as_deref(), text.as_bytes(), out)?;
            }
        }
    }
    for cm in &chosen {
        let p = cm.provenance().expect("built");
        eprintln!(
            "{} {} {}: y = {}, omega = {} ({:.4}), |det| = {:.4e}",
            p.design,
            p.source,
            p.branch,
            cm.y().map(|y| y.to_string()).unwrap_or_default(),
            cm.weight(),
            cm.weight().to_f64().unwrap_or(f64::NAN),
            cm.det_float()
        );
    }
    Ok(EXIT_OK)
}

fn pretty<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

enum Input {
    Doc(Document),
    Csv(FloatMatrix),
}

fn load_input(path: &Path) -> Result<Input, Failure> {
    let text = read(path)?;
    if text.trim_start().starts_with('{') {
        Ok(Input::Doc(Document::from_json(&text)?))
    } else {
        Ok(Input::Csv(parse_csv(&text)?))
    }
}

fn verify(a: &VerifyArgs, out: &mut dyn Write) -> Outcome {
    let matrices: Vec<MatrixDocument> = match load_input(&a.input)? {
        Input::Csv(m) => {
            if a.mode == Mode::Exact {
                return Err(Failure::usage("exact verification needs a level-indexed JSON matrix"));
            }
            return Ok(verify_float(&m, a.omega, a.tol, out));
        }
        Input::Doc(Document::Design(d)) => {
            return Ok(verify_design(&d.to_incidence()?, out));
        }
        Input::Doc(Document::Matrix(m)) => vec![m],
        Input::Doc(Document::Bundle(b)) => {
            if verify_design(&b.design.to_incidence()?, out) != EXIT_OK {
                return Ok(EXIT_FAIL);
            }
            b.matrices
        }
    };
    let mut code = EXIT_OK;
    for doc in &matrices {
        let result = match a.mode {
            Mode::Exact => verify_exact_doc(doc, out)?,
            Mode::Float => {
                let omega = a.omega.or(doc.omega.as_ref().map(|o| o.float));
                verify_float(&doc.to_float()?, omega, a.tol, out)
            }
        };
        code = code.max(result);
    }
    Ok(code)
}

fn verify_design(b: &IncidenceMatrix, out: &mut dyn Write) -> i32 {
    let r = verify_sbibd(b);
    say(
        out,
        &format!(
            "design {}: params {} rows {} columns {} row-products {} column-products {}",
            r.params,
            ok(r.params_ok),
            ok(r.row_sums_ok),
            ok(r.column_sums_ok),
            ok(r.row_products_ok),
            ok(r.column_products_ok)
        ),
    );
    if r.passed() {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

fn ok(flag: bool) -> &'static str {
    if flag {
        "ok"
    } else {
        "FAIL"
    }
}

fn verify_exact_doc(doc: &MatrixDocument, out: &mut dyn Write) -> Result<i32, Failure> {
    let cm = doc.to_cretan()?;
    let r = verify_exact(&cm);
    say(
        out,
        &format!(
            "exact order {}: omega = {}, off-diagonal defects {}, diagonal defects {}, oversized levels {}, rows without 1 {}, columns without 1 {}",
            cm.order(),
            cm.weight(),
            r.offdiagonal_defects.len(),
            r.diagonal_defects.len(),
            r.oversized_levels.len(),
            r.rows_without_one.len(),
            r.columns_without_one.len()
        ),
    );
    Ok(if r.passed() { EXIT_OK } else { EXIT_FAIL })
}

fn verify_float(m: &FloatMatrix, omega: Option<f64>, tol: f64, out: &mut dyn Write) -> i32 {
    let r = match omega {
        Some(w) => residual_against(m, w),
        None => crate::numeric::residual(m),
    };
    let pass = r.max_residual() <= tol && m.max_abs() <= 1.0 + 1e-12;
    say(
        out,
        &format!(
            "float order {}: fitted omega {:.6}, max off-diagonal {:.3e}, max diagonal deviation {:.3e}, decimal places {}, |det| {:.6e}: {}",
            m.order(),
            r.fitted_omega,
            r.max_offdiag,
            r.max_diag_dev,
            r.decimal_places,
            float_det(m).value.abs(),
            if pass { "pass" } else { "FAIL" }
        ),
    );
    if pass {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

fn load_template(spec: &str) -> Result<SearchTemplate, Failure> {
    if let Some(t) = SearchTemplate::builtin(spec) {
        return Ok(t);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Failure::usage(format!(
            "unknown template {spec:?}; built-ins are {}",
            crate::numeric::BUILTIN_TEMPLATES.join(", ")
        )));
    }
    let t: SearchTemplate = serde_json::from_str(&read(path)?).map_err(Failure::usage)?;
    t.validate()?;
    Ok(t)
}

fn run_search(a: &SearchArgs, out: &mut dyn Write) -> Outcome {
    let template = load_template(&a.template)?;
    let mut config = match &a.config {
        Some(path) => toml::from_str::<SearchConfig>(&read(path)?).map_err(Failure::usage)?,
        None => SearchConfig::default(),
    };
    if let Some(v) = a.restarts {
        config.restarts = v;
    }
    if let Some(v) = a.max_iters {
        config.max_iters = v;
    }
    if let Some(v) = a.seed {
        config.seed = v;
    }
    if let Some(v) = a.tol {
        config.tol = v;
    }
    if let Some(v) = &a.penalty_schedule {
        config.penalty_schedule = v.clone();
    }
    if let Some(v) = a.workers {
        config.workers = v;
    }
    let result = search(&template, &config)?;
    if let Some(path) = &a.out {
        fs::write(path, pretty(&result)).map_err(|e| io_err(path, e))?;
    }
    say(out, &result.summary());
    if !result.within_tolerance {
        eprintln!("warning: best residual is above the tolerance {:e}", config.tol);
    }
    Ok(EXIT_OK)
}

fn cells_of(input: Input) -> Result<Vec<Vec<CellValue>>, Failure> {
    let float_cells = |m: &FloatMatrix| -> Vec<Vec<CellValue>> {
        m.rows().into_iter().map(|r| r.into_iter().map(CellValue::Float).collect()).collect()
    };
    let from_matrix = |doc: &MatrixDocument| -> Result<Vec<Vec<CellValue>>, Failure> {
        match doc.exact_cells()? {
            Some(cells) => Ok(cells
                .into_iter()
                .map(|r| r.into_iter().map(CellValue::Exact).collect())
                .collect()),
            None => Ok(float_cells(&doc.to_float()?)),
        }
    };
    match input {
        Input::Csv(m) => Ok(float_cells(&m)),
        Input::Doc(Document::Matrix(doc)) => from_matrix(&doc),
        Input::Doc(Document::Bundle(b)) => match b.matrices.first() {
            Some(doc) => from_matrix(doc),
            None => Err(Failure::usage("bundle holds no matrices")),
        },
        Input::Doc(Document::Design(d)) => Ok(d
            .cells
            .iter()
            .map(|r| r.iter().map(|&c| CellValue::Float(c as f64)).collect())
            .collect()),
    }
}

fn render(a: &RenderArgs) -> Outcome {
    let cells = cells_of(load_input(&a.input)?)?;
    let bytes = PortraitSpec { cell_size: a.cell_size as usize }.render(&cells);
    fs::write(&a.out, bytes).map_err(|e| io_err(&a.out, e))?;
    Ok(EXIT_OK)
}

fn export(a: &ExportArgs, out: &mut dyn Write) -> Outcome {
    let input = load_input(&a.input)?;
    let text = match (input, a.format) {
        (Input::Csv(m), Format::Json) => pretty(&MatrixDocument::from_float(&m, None)),
        (Input::Csv(m), Format::Csv) => to_csv(&m.rows()),
        (Input::Doc(Document::Design(d)), Format::Csv) => to_csv(&d.cells),
        (Input::Doc(Document::Design(d)), Format::Json) => pretty(&d),
        (Input::Doc(Document::Matrix(doc)), Format::Csv) => to_csv(&doc.to_float()?.rows()),
        (Input::Doc(Document::Matrix(doc)), Format::Json) => pretty(&doc),
        (Input::Doc(Document::Bundle(b)), Format::Csv) => match b.matrices.first() {
            Some(doc) => to_csv(&doc.to_float()?.rows()),
            None => to_csv(&b.design.cells),
        },
        (Input::Doc(Document::Bundle(b)), Format::Json) => pretty(&b),
    };
    write_output(a.out.as_deref(), text.as_bytes(), out)?;
    Ok(EXIT_OK)
}
