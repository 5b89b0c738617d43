//! The `steinx` command line: coefficient tables, symbolic reductions,
//! multi-engine evaluation with cross-checking, exact identity verification
//! suites, and the closed-form-vs-recursive benchmark.
//!
//! Exit codes are stable across commands: 0 success, 1 verification or
//! cross-check failure (including non-convergence), 2 usage error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num::bigint::BigInt;
use num::BigRational;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    self, GenFactorialTable, HermiteCoeffTable, StirlingTables,
};
use crate::function_model::AnalyticFunction;
use crate::ibd::{self, AveragedShiftConfig};
use crate::oracle;
use crate::stein_core::{
    self, GaussianLaw, LawKind, Reduction, ReductionMethod, ReductionTerm,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Human,
    Json,
    Csv,
    Latex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CoeffTableKind {
    Hermite,
    Genfact,
    Stirling1,
    Stirling2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMethod {
    Stein,
    Ibd,
    Quad,
    Mc,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifySuite {
    Recurrence,
    Lemma2,
    Falling,
    SteinVsRecursive,
    All,
}

#[derive(Debug, Parser)]
#[command(name = "steinx", version, about = "Gaussian expectations E[g(X) X^n] via extended Stein reduction")]
pub struct Cli {
    /// Optional key=value config file (also via STEINX_CONFIG)
    #[arg(long, global = true)]
    pub config: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emit a coefficient triangle row-major
    Coeff {
        #[arg(long, value_enum)]
        table: CoeffTableKind,
        #[arg(long)]
        max_n: usize,
        #[arg(long, value_enum, default_value = "human")]
        format: OutputFormat,
    },
    /// Render the symbolic reduction of E[g(X) X^n]
    Reduce {
        #[arg(long)]
        n: usize,
        /// Non-zero mean: use the general-mean reduction
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        sigma2: Option<f64>,
        #[arg(long, value_enum, default_value = "human")]
        format: OutputFormat,
    },
    /// Evaluate E[g(X) X^n] with one or all engines and cross-check
    Eval {
        /// Function spec: poly:<c0,c1,...> (rationals as p/q), exp:<a>, sin:<a>, cos:<a>
        #[arg(long)]
        g: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        sigma2: Option<f64>,
        #[arg(long, value_enum, default_value = "all")]
        method: EvalMethod,
        /// Cross-check tolerance for --method all
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        max_terms: Option<usize>,
        #[arg(long)]
        quad_order: Option<usize>,
        #[arg(long, value_enum, default_value = "human")]
        format: OutputFormat,
    },
    /// Run the exact identity suites
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: VerifySuite,
        #[arg(long, default_value_t = 60)]
        max_n: usize,
    },
    /// Benchmark closed-form reduction against the recursive rewriter
    Bench {
        #[arg(long)]
        n_max: usize,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
    },
}

/// Defaults resolvable from a key=value config file. Precedence everywhere
/// is: explicit flag, then config file, then the built-in default.
#[derive(Debug, Clone, Default)]
pub struct Config {
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub max_terms: Option<usize>,
    pub quad_order: Option<usize>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = Config::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key=value", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            macro_rules! parse_value {
                () => {
                    value.parse().map_err(|_| {
                        format!("config line {}: bad value for {key}", lineno + 1)
                    })?
                };
            }
            match key {
                "tol" => cfg.tol = Some(parse_value!()),
                "seed" => cfg.seed = Some(parse_value!()),
                "samples" => cfg.samples = Some(parse_value!()),
                "max_terms" => cfg.max_terms = Some(parse_value!()),
                "quad_order" => cfg.quad_order = Some(parse_value!()),
                _ => return Err(format!("config line {}: unknown key '{key}'", lineno + 1)),
            }
        }
        Ok(cfg)
    }

    fn load(path_flag: &Option<String>) -> Result<Self, String> {
        let path = path_flag.clone().or_else(|| std::env::var("STEINX_CONFIG").ok());
        match path {
            None => Ok(Config::default()),
            Some(p) => {
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| format!("cannot read config {p}: {e}"))?;
                Config::parse(&text)
            }
        }
    }
}

/// Entry point used by `main`; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let config = match Config::load(&cli.config) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let result = match cli.command {
        Command::Coeff { table, max_n, format } => cmd_coeff(table, max_n, format),
        Command::Reduce { n, mu, sigma2, format } => cmd_reduce(n, mu, sigma2, format),
        Command::Eval { g, n, mu, sigma2, method, tol, seed, samples, max_terms, quad_order, format } => {
            let opts = EvalOptions {
                tol: tol.or(config.tol).unwrap_or(1e-8),
                seed: seed.or(config.seed).unwrap_or(0),
                samples: samples.or(config.samples).unwrap_or(1_000_000),
                max_terms: max_terms.or(config.max_terms).unwrap_or(200),
                quad_order: quad_order.or(config.quad_order).unwrap_or(64),
            };
            cmd_eval(&g, n, mu, sigma2, method, &opts, format)
        }
        Command::Verify { suite, max_n } => cmd_verify(suite, max_n),
        Command::Bench { n_max, repeats, format } => cmd_bench(n_max, repeats, format),
    };
    match result {
        Ok(code) => code,
        Err(CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CmdError::Failure(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAILURE
        }
    }
}

#[derive(Debug)]
pub enum CmdError {
    Usage(String),
    Failure(String),
}

// ---------------------------------------------------------------- coeff

fn cmd_coeff(table: CoeffTableKind, max_n: usize, format: OutputFormat) -> Result<i32, CmdError> {
    if max_n > 200 {
        return Err(CmdError::Usage(format!("max_n {max_n} exceeds the supported cap of 200")));
    }
    let (name, rows): (&str, Vec<Vec<BigInt>>) = match table {
        CoeffTableKind::Hermite => {
            let t = HermiteCoeffTable::build(max_n);
            ("hermite", (0..=max_n).map(|n| t.row(n).to_vec()).collect())
        }
        CoeffTableKind::Genfact => {
            let t = GenFactorialTable::build(max_n);
            ("genfact", (0..=max_n).map(|n| t.row(n).to_vec()).collect())
        }
        CoeffTableKind::Stirling1 => {
            let t = StirlingTables::build(max_n);
            ("stirling1", (0..=max_n).map(|n| t.first_row(n).to_vec()).collect())
        }
        CoeffTableKind::Stirling2 => {
            let t = StirlingTables::build(max_n);
            ("stirling2", (0..=max_n).map(|n| t.second_row(n).to_vec()).collect())
        }
    };
    let rows_str: Vec<Vec<String>> =
        rows.iter().map(|r| r.iter().map(|v| v.to_string()).collect()).collect();
    match format {
        OutputFormat::Csv => {
            for row in &rows_str {
                println!("{}", row.join(","));
            }
        }
        OutputFormat::Json => {
            let doc = serde_json::json!({ "table": name, "max_n": max_n, "rows": rows_str });
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
        }
        OutputFormat::Human => {
            for (n, row) in rows_str.iter().enumerate() {
                println!("n={n:>3}: {}", row.join(" "));
            }
        }
        OutputFormat::Latex => {
            for row in &rows_str {
                println!("{} \\\\", row.join(" & "));
            }
        }
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------- reduce

/// JSON image of a [`Reduction`]; coefficients as decimal strings so that no
/// digit is lost past 64-bit range.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ReductionJson {
    pub n: usize,
    pub law_kind: LawKind,
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct TermJson {
    pub order: usize,
    pub coeff: String,
    pub mu_power: usize,
    pub sigma2_power: usize,
}

impl ReductionJson {
    pub fn from_reduction(red: &Reduction) -> Self {
        ReductionJson {
            n: red.n,
            law_kind: red.law_kind,
            terms: red
                .terms
                .iter()
                .map(|t| TermJson {
                    order: t.derivative_order,
                    coeff: t.coeff.to_string(),
                    mu_power: t.mu_power,
                    sigma2_power: t.sigma2_power,
                })
                .collect(),
        }
    }

    pub fn to_reduction(&self) -> Result<Reduction, String> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let coeff: BigInt =
                t.coeff.parse().map_err(|_| format!("bad coefficient '{}'", t.coeff))?;
            terms.push(ReductionTerm {
                derivative_order: t.order,
                coeff,
                mu_power: t.mu_power,
                sigma2_power: t.sigma2_power,
            });
        }
        Ok(Reduction::canonicalize(terms, self.n, self.law_kind))
    }
}

fn superscript(n: usize) -> String {
    const DIGITS: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];
    n.to_string().chars().map(|c| DIGITS[c.to_digit(10).unwrap() as usize]).collect()
}

fn render_term_human(t: &ReductionTerm) -> String {
    let mut out = String::new();
    let coeff_one = t.coeff == BigInt::from(1);
    if !coeff_one {
        write!(out, "{} ", t.coeff).unwrap();
    }
    if t.mu_power > 0 {
        out.push('μ');
        if t.mu_power > 1 {
            out.push_str(&superscript(t.mu_power));
        }
        out.push(' ');
    }
    if t.sigma2_power > 0 {
        out.push('σ');
        out.push_str(&superscript(2 * t.sigma2_power));
        out.push(' ');
    }
    if t.derivative_order == 0 {
        out.push_str("E[g(X)]");
    } else {
        write!(out, "E[g⁽{}⁾(X)]", superscript(t.derivative_order)).unwrap();
    }
    out
}

fn render_term_latex(t: &ReductionTerm) -> String {
    let mut out = String::new();
    if t.coeff != BigInt::from(1) {
        write!(out, "{}\\,", t.coeff).unwrap();
    }
    if t.mu_power == 1 {
        out.push_str("\\mu ");
    } else if t.mu_power > 1 {
        write!(out, "\\mu^{{{}}}", t.mu_power).unwrap();
    }
    if t.sigma2_power > 0 {
        write!(out, "\\sigma^{{{}}}", 2 * t.sigma2_power).unwrap();
    }
    if t.derivative_order == 0 {
        out.push_str("\\mathbb{E}\\left[g(X)\\right]");
    } else {
        write!(out, "\\mathbb{{E}}\\left[g^{{({})}}(X)\\right]", t.derivative_order).unwrap();
    }
    out
}

pub fn render_reduction_human(red: &Reduction) -> String {
    let rhs = if red.terms.is_empty() {
        "0".to_string()
    } else {
        red.terms.iter().map(render_term_human).collect::<Vec<_>>().join(" + ")
    };
    format!("E[g(X) X^{}] = {rhs}", red.n)
}

pub fn render_reduction_latex(red: &Reduction) -> String {
    let rhs = if red.terms.is_empty() {
        "0".to_string()
    } else {
        red.terms.iter().map(render_term_latex).collect::<Vec<_>>().join(" + ")
    };
    format!("\\mathbb{{E}}\\left[g(X)X^{{{}}}\\right] = {rhs}", red.n)
}

fn cmd_reduce(
    n: usize,
    mu: Option<f64>,
    sigma2: Option<f64>,
    format: OutputFormat,
) -> Result<i32, CmdError> {
    if n > 60 {
        return Err(CmdError::Usage(format!("n {n} exceeds the supported cap of 60")));
    }
    if let Some(s2) = sigma2 {
        if !(s2 > 0.0) {
            return Err(CmdError::Usage(format!("sigma2 must be > 0, got {s2}")));
        }
    }
    let general = mu.is_some_and(|m| m != 0.0);
    let red = if general {
        stein_core::reduce_general_mean(n)
    } else {
        stein_core::reduce_zero_mean(n)
    };
    match format {
        OutputFormat::Human => println!("{}", render_reduction_human(&red)),
        OutputFormat::Latex => println!("{}", render_reduction_latex(&red)),
        OutputFormat::Json => {
            let doc = ReductionJson::from_reduction(&red);
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
        }
        OutputFormat::Csv => {
            println!("order,coeff,mu_power,sigma2_power");
            for t in &red.terms {
                println!(
                    "{},{},{},{}",
                    t.derivative_order, t.coeff, t.mu_power, t.sigma2_power
                );
            }
        }
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------- eval

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub tol: f64,
    pub seed: u64,
    pub samples: usize,
    pub max_terms: usize,
    pub quad_order: usize,
}

/// Value of E[g(X) X^n] through the extended-Stein reduction with exact
/// derivative averages from the catalog.
pub fn eval_stein(f: &AnalyticFunction, n: usize, law: &GaussianLaw) -> Result<f64, String> {
    let red = if law.mu() == 0.0 {
        stein_core::reduce_zero_mean(n)
    } else {
        stein_core::reduce_general_mean(n)
    };
    let averages: BTreeMap<usize, f64> = red
        .derivative_orders()
        .into_iter()
        .map(|o| (o, f.derivative_average(o, law)))
        .collect();
    stein_core::evaluate_reduction(&red, law, &averages).map_err(|e| e.to_string())
}

fn eval_one(
    f: &AnalyticFunction,
    n: usize,
    law: &GaussianLaw,
    method: EvalMethod,
    opts: &EvalOptions,
) -> Result<(f64, Option<f64>), CmdError> {
    match method {
        EvalMethod::Stein => Ok((eval_stein(f, n, law).map_err(CmdError::Failure)?, None)),
        EvalMethod::Ibd => {
            let cfg = AveragedShiftConfig { max_terms: opts.max_terms, ..Default::default() };
            let r = ibd::ibd_product_expectation(f, n, law, &cfg);
            if !r.converged {
                return Err(CmdError::Failure(format!(
                    "ibd series did not converge within {} terms (last term magnitude {:e})",
                    r.terms_used, r.last_term_magnitude
                )));
            }
            Ok((r.value, None))
        }
        EvalMethod::Quad => {
            let v = oracle::quadrature_expectation(|x| f.eval(x), n, law, opts.quad_order)
                .map_err(|e| CmdError::Failure(e.to_string()))?;
            Ok((v, None))
        }
        EvalMethod::Mc => {
            let est =
                oracle::monte_carlo_expectation(|x| f.eval(x), n, law, opts.samples, opts.seed)
                    .map_err(|e| CmdError::Failure(e.to_string()))?;
            Ok((est.estimate, Some(est.std_error)))
        }
        EvalMethod::All => unreachable!("handled by caller"),
    }
}

/// Largest pairwise difference scaled by the largest magnitude (floored at 1
/// so exact zeros compare absolutely).
pub fn cross_discrepancy(values: &[f64]) -> f64 {
    let scale = values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let mut worst = 0.0f64;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    worst
}

fn cmd_eval(
    g_spec: &str,
    n: usize,
    mu: Option<f64>,
    sigma2: Option<f64>,
    method: EvalMethod,
    opts: &EvalOptions,
    format: OutputFormat,
) -> Result<i32, CmdError> {
    let f = AnalyticFunction::parse(g_spec).map_err(|e| CmdError::Usage(e.to_string()))?;
    let law = GaussianLaw::new(mu.unwrap_or(0.0), sigma2.unwrap_or(1.0))
        .map_err(|e| CmdError::Usage(e.to_string()))?;

    let mut rows: Vec<(&str, f64, Option<f64>)> = Vec::new();
    match method {
        EvalMethod::All => {
            rows.push(("stein", eval_one(&f, n, &law, EvalMethod::Stein, opts)?.0, None));
            rows.push(("ibd", eval_one(&f, n, &law, EvalMethod::Ibd, opts)?.0, None));
            rows.push(("quad", eval_one(&f, n, &law, EvalMethod::Quad, opts)?.0, None));
            let (mc, se) = eval_one(&f, n, &law, EvalMethod::Mc, opts)?;
            rows.push(("mc", mc, se));
        }
        m => {
            let name = match m {
                EvalMethod::Stein => "stein",
                EvalMethod::Ibd => "ibd",
                EvalMethod::Quad => "quad",
                EvalMethod::Mc => "mc",
                EvalMethod::All => unreachable!(),
            };
            let (v, se) = eval_one(&f, n, &law, m, opts)?;
            rows.push((name, v, se));
        }
    }

    // cross-check over the deterministic engines only; Monte Carlo is judged
    // by its own standard error, not by the symbolic tolerance
    let mut exit = EXIT_OK;
    let mut discrepancy = None;
    if method == EvalMethod::All {
        let det: Vec<f64> =
            rows.iter().filter(|(name, ..)| *name != "mc").map(|(_, v, _)| *v).collect();
        let d = cross_discrepancy(&det);
        discrepancy = Some(d);
        if d > opts.tol {
            exit = EXIT_FAILURE;
        }
    }

    match format {
        OutputFormat::Json => {
            let mut doc = serde_json::Map::new();
            doc.insert("g".into(), g_spec.into());
            doc.insert("n".into(), n.into());
            doc.insert("mu".into(), law.mu().into());
            doc.insert("sigma2".into(), law.sigma2().into());
            let mut vals = serde_json::Map::new();
            for (name, v, se) in &rows {
                if let Some(se) = se {
                    vals.insert(
                        (*name).into(),
                        serde_json::json!({ "estimate": v, "std_error": se }),
                    );
                } else {
                    vals.insert((*name).into(), (*v).into());
                }
            }
            doc.insert("values".into(), vals.into());
            if let Some(d) = discrepancy {
                doc.insert("max_discrepancy".into(), d.into());
                doc.insert("tol".into(), opts.tol.into());
            }
            println!("{}", serde_json::to_string_pretty(&serde_json::Value::Object(doc)).unwrap());
        }
        OutputFormat::Csv => {
            println!("method,value,std_error");
            for (name, v, se) in &rows {
                match se {
                    Some(se) => println!("{name},{v:.17e},{se:.17e}"),
                    None => println!("{name},{v:.17e},"),
                }
            }
        }
        _ => {
            println!("E[g(X) X^{n}] with g = {g_spec}, mu = {}, sigma2 = {}", law.mu(), law.sigma2());
            for (name, v, se) in &rows {
                match se {
                    Some(se) => println!("  {name:>5}: {v:.12}  (std error {se:.3e})"),
                    None => println!("  {name:>5}: {v:.12}"),
                }
            }
            if let Some(d) = discrepancy {
                println!("  max pairwise discrepancy (stein/ibd/quad): {d:.3e}  (tol {:.1e})", opts.tol);
            }
        }
    }
    if exit != EXIT_OK {
        eprintln!(
            "error: cross-check discrepancy {:.3e} exceeds tolerance {:.1e}",
            discrepancy.unwrap(),
            opts.tol
        );
    }
    Ok(exit)
}

// ---------------------------------------------------------------- verify

pub struct SuiteOutcome {
    pub name: &'static str,
    pub checks: usize,
    pub failure: Option<String>,
}

pub fn verify_recurrence(max_n: usize) -> SuiteOutcome {
    let table = HermiteCoeffTable::build(max_n);
    let mut checks = 0;
    for n in 0..=max_n {
        for k in 0..=(n / 2 + 1) as i64 {
            let direct = combinatorics::hermite_coeff(n, k);
            let via_rec = table.get(n, k);
            checks += 1;
            if direct != via_rec {
                return SuiteOutcome {
                    name: "recurrence",
                    checks,
                    failure: Some(format!(
                        "H({n},{k}): recurrence {via_rec} vs formula {direct}"
                    )),
                };
            }
            if n < max_n {
                // the recurrence identity itself
                let lhs = table.get(n + 1, k);
                let rhs = table.get(n, k - 1) * BigInt::from(n as i64 - 2 * k + 2)
                    + table.get(n, k);
                checks += 1;
                if lhs != rhs {
                    return SuiteOutcome {
                        name: "recurrence",
                        checks,
                        failure: Some(format!("H({},{k}): {lhs} vs {rhs}", n + 1)),
                    };
                }
            }
        }
    }
    SuiteOutcome { name: "recurrence", checks, failure: None }
}

pub fn verify_lemma2(max_n: usize) -> SuiteOutcome {
    let hermite = HermiteCoeffTable::build(max_n);
    let genfact = GenFactorialTable::build(max_n);
    let mut checks = 0;
    for n in 0..=max_n {
        for k in 0..=n / 2 {
            let lhs = hermite.get(n, k as i64) << (n - k);
            let rhs = genfact.get(n, (n - k) as i64);
            checks += 1;
            if lhs != rhs {
                return SuiteOutcome {
                    name: "lemma2",
                    checks,
                    failure: Some(format!(
                        "n={n} k={k}: 2^{} H = {lhs} vs C = {rhs}",
                        n - k
                    )),
                };
            }
        }
    }
    SuiteOutcome { name: "lemma2", checks, failure: None }
}

pub fn verify_falling(max_n: usize) -> SuiteOutcome {
    let cap = max_n.min(20);
    let mut checks = 0;
    for n in 0..=cap {
        for m in 0..=40usize {
            checks += 1;
            if !combinatorics::verify_falling_identity(n, m) {
                return SuiteOutcome {
                    name: "falling",
                    checks,
                    failure: Some(format!("identity fails at n={n}, m={m}")),
                };
            }
        }
    }
    SuiteOutcome { name: "falling", checks, failure: None }
}

pub fn verify_stein_vs_recursive(max_n: usize) -> SuiteOutcome {
    let cap = max_n.min(12);
    let mut checks = 0;
    for n in 0..=cap {
        for kind in [LawKind::ZeroMean, LawKind::GeneralMean] {
            let closed = match kind {
                LawKind::ZeroMean => stein_core::reduce_zero_mean(n),
                LawKind::GeneralMean => stein_core::reduce_general_mean(n),
            };
            let recursive = stein_core::recursive_stein_rewriter(n, kind).reduction;
            checks += 1;
            if closed.terms != recursive.terms {
                return SuiteOutcome {
                    name: "stein-vs-recursive",
                    checks,
                    failure: Some(format!(
                        "n={n} {kind}: closed {:?} vs recursive {:?}",
                        closed.terms, recursive.terms
                    )),
                };
            }
        }
    }
    SuiteOutcome { name: "stein-vs-recursive", checks, failure: None }
}

fn cmd_verify(suite: VerifySuite, max_n: usize) -> Result<i32, CmdError> {
    if max_n > 60 {
        return Err(CmdError::Usage(format!("max_n {max_n} exceeds the supported cap of 60")));
    }
    let outcomes: Vec<SuiteOutcome> = match suite {
        VerifySuite::Recurrence => vec![verify_recurrence(max_n)],
        VerifySuite::Lemma2 => vec![verify_lemma2(max_n)],
        VerifySuite::Falling => vec![verify_falling(max_n)],
        VerifySuite::SteinVsRecursive => vec![verify_stein_vs_recursive(max_n)],
        VerifySuite::All => vec![
            verify_recurrence(max_n),
            verify_lemma2(max_n),
            verify_falling(max_n),
            verify_stein_vs_recursive(max_n),
        ],
    };
    let mut failed = false;
    for o in &outcomes {
        match &o.failure {
            None => println!("PASS {} ({} checks)", o.name, o.checks),
            Some(msg) => {
                println!("FAIL {} after {} checks: {msg}", o.name, o.checks);
                failed = true;
            }
        }
    }
    Ok(if failed { EXIT_FAILURE } else { EXIT_OK })
}

// ---------------------------------------------------------------- bench

#[derive(Debug, Clone, Serialize)]
pub struct BenchRecord {
    pub n: usize,
    pub method: ReductionMethod,
    pub wall_time_ns: u128,
    pub final_terms: usize,
    pub peak_terms: usize,
    pub steps: usize,
}

pub fn bench_records(n_max: usize, repeats: usize) -> Vec<BenchRecord> {
    let mut records = Vec::new();
    for n in 1..=n_max {
        for method in [ReductionMethod::ClosedForm, ReductionMethod::Recursive] {
            let mut best = u128::MAX;
            let mut stats = None;
            for _ in 0..repeats {
                let start = Instant::now();
                let s = stein_core::reduction_stats(n, method, LawKind::ZeroMean);
                let elapsed = start.elapsed().as_nanos();
                best = best.min(elapsed.max(1));
                stats = Some(s);
            }
            let stats = stats.unwrap();
            records.push(BenchRecord {
                n,
                method,
                wall_time_ns: best,
                final_terms: stats.final_term_count,
                peak_terms: stats.peak_intermediate_term_count,
                steps: stats.rewrite_steps,
            });
        }
    }
    records
}

pub const BENCH_CSV_HEADER: &str = "n,method,wall_time_ns,final_terms,peak_terms,steps";

fn cmd_bench(n_max: usize, repeats: usize, format: OutputFormat) -> Result<i32, CmdError> {
    if n_max > 30 {
        return Err(CmdError::Usage(format!("n_max {n_max} exceeds the supported cap of 30")));
    }
    if repeats == 0 {
        return Err(CmdError::Usage("repeats must be >= 1".to_string()));
    }
    let records = bench_records(n_max, repeats);
    match format {
        OutputFormat::Json => {
            println!("{}", serde_json::to_string_pretty(&records).unwrap());
        }
        OutputFormat::Human => {
            for r in &records {
                println!(
                    "n={:>2} {:<11} {:>10} ns  final={:<3} peak={:<4} steps={}",
                    r.n, r.method.to_string(), r.wall_time_ns, r.final_terms, r.peak_terms, r.steps
                );
            }
        }
        _ => {
            println!("{BENCH_CSV_HEADER}");
            for r in &records {
                println!(
                    "{},{},{},{},{},{}",
                    r.n, r.method, r.wall_time_ns, r.final_terms, r.peak_terms, r.steps
                );
            }
        }
    }
    Ok(EXIT_OK)
}

// ------------------------------------------------------------- helpers

/// Exact rational expectation helper shared with the acceptance tests:
/// E[p(X) X^n] through the reduction route (closed-form reduction with exact rational
/// derivative averages), as opposed to the direct moment expansion.
pub fn rational_reduction_expectation(
    p: &crate::function_model::RationalPolynomial,
    n: usize,
    mu: &BigRational,
    sigma2: &BigRational,
) -> BigRational {
    use num::Zero;
    let red = if mu.is_zero() {
        stein_core::reduce_zero_mean(n)
    } else {
        stein_core::reduce_general_mean(n)
    };
    let averages: BTreeMap<usize, BigRational> = red
        .derivative_orders()
        .into_iter()
        .map(|o| (o, p.derivative(o).expectation_rational(mu, sigma2)))
        .collect();
    stein_core::evaluate_reduction_rational(&red, mu, sigma2, &averages)
        .expect("rational evaluation cannot fail with complete averages")
}
