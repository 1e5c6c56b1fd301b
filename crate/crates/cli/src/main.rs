use clap::{Args, Parser, Subcommand, ValueEnum};
use csk_core::catalog::{catalog, standard_laws};
use csk_core::harness::table::iterated_table;
use csk_core::harness::{parse_grid, table, verify, Quantity, Suite, Table, TableRequest, VerificationReport, VerifyOptions};
use csk_core::{build_family, extend, iterate, law_from_spec, CskError, QuadratureConfig};
use serde_json::{json, Value};
use std::process::ExitCode;

// A closed pipe (`csk laws | head`) is not an error worth a panic.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = write!(std::io::stdout(), $($t)*);
    }};
}

macro_rules! outln {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

#[derive(Parser)]
#[command(name = "csk", version, about = "Cauchy-Stieltjes kernel families: domains of means, pseudo-variance functions, iteration and extension")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in laws.
    Laws {
        #[arg(long)]
        json: bool,
        /// Keep laws whose name or tags contain this string (e.g. `atom`).
        #[arg(long)]
        filter: Option<String>,
    },
    /// Support bounds, domain of means and both extension bounds of a law.
    Describe {
        #[arg(long)]
        law: String,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Tabulate one quantity over a grid.
    Table {
        #[arg(long)]
        law: String,
        #[arg(long)]
        quantity: String,
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long, allow_hyphen_values = true)]
        m: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        m1: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Run verification suites; every law in the catalog when `--law` is omitted.
    Verify {
        #[arg(long)]
        law: Option<String>,
        #[arg(long, default_value = "all")]
        suite: String,
        /// Override the tolerance of every numeric check.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        m1: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// The family generated by the member of mean `m1`.
    Iterate {
        #[arg(long)]
        law: String,
        #[arg(long, allow_hyphen_values = true)]
        m1: f64,
        /// Print the iterated domain of means.
        #[arg(long)]
        domain: bool,
        #[arg(long)]
        quantity: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Mean of the base family to send through the mean map.
        #[arg(long, allow_hyphen_values = true)]
        m: Option<f64>,
        /// Mean of the iterated family to evaluate at.
        #[arg(long, allow_hyphen_values = true)]
        mbar: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        quad: QuadArgs,
    },
}

#[derive(Args)]
struct QuadArgs {
    /// Relative quadrature tolerance (default 1e-10, or CSK_QUAD_RELTOL).
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Maximum number of quadrature subdivisions.
    #[arg(long)]
    max_subdiv: Option<usize>,
}

impl QuadArgs {
    fn config(&self) -> Result<QuadratureConfig, CskError> {
        let mut cfg = QuadratureConfig::from_env()?;
        if let Some(t) = self.rel_tol {
            cfg.rel_tol = t;
        }
        if let Some(n) = self.max_subdiv {
            cfg.max_subdivisions = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Same as `--format json`.
    #[arg(long)]
    json: bool,
}

impl OutArgs {
    fn json(&self) -> bool {
        self.json || self.format == Format::Json
    }
}

enum Failure {
    Usage(String),
    Numeric(String),
    Verification,
}

impl From<CskError> for Failure {
    fn from(e: CskError) -> Self {
        if e.is_numeric() {
            Failure::Numeric(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

/// Shortest representation of `x` rounded to 12 significant digits, with
/// residue below `1e-12` shown as `0`.
fn show(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else if x.abs() < 1e-12 {
        "0".into()
    } else {
        let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
        format!("{r}")
    }
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(show(x)), Value::Number)
}

fn emit_table(t: &Table, json: bool) {
    if json {
        outln!("{}", t.to_json());
    } else {
        out!("{}", t.to_csv());
    }
}

fn cmd_laws(json: bool, filter: Option<&str>) {
    let entries: Vec<_> = catalog()
        .into_iter()
        .filter(|e| filter.map_or(true, |f| e.name.contains(f) || e.tags.iter().any(|t| t.contains(f))))
        .collect();
    if json {
        outln!("{}", serde_json::to_string_pretty(&entries).expect("catalog serializes"));
        return;
    }
    for e in entries {
        let params: Vec<String> = e.params.iter().map(|(k, v)| format!("{k}: {v}")).collect();
        outln!("{}", e.name);
        if !e.aliases.is_empty() {
            outln!("  aliases          {}", e.aliases.join(", "));
        }
        if !params.is_empty() {
            outln!("  params           {}", params.join("; "));
        }
        outln!("  support          {}", e.support);
        outln!("  domain of means  {}", e.domain);
        outln!("  pseudo-variance  {}", e.pseudo_variance);
        outln!("  tags             {}", e.tags.join(", "));
    }
}

fn cmd_describe(spec: &str, json: bool, cfg: &QuadratureConfig) -> Result<(), Failure> {
    let law = law_from_spec(spec)?;
    let fam = build_family(&law, cfg)?;
    let ext = extend(&fam)?;
    let b = fam.bounds();
    let routes = ext.first_extension();
    let big = ext.second_extension_bound().ok();
    let pv = law.closed_pseudo_variance().map(|p| p.to_string());
    if json {
        let opt = |v: Option<f64>| v.map_or(Value::Null, num);
        let out = json!({
            "law": spec,
            "A": num(b.a),
            "B": num(b.b),
            "theta_plus": num(b.theta_plus),
            "m0": num(fam.m0()),
            "m_plus": num(fam.m_plus()),
            "m_plus_bold": num(ext.first_extension_bound()),
            "m_plus_bold_level_set": opt(routes.level_set),
            "m_plus_bold_theta_limit": opt(routes.theta_limit),
            "M_plus_bold": opt(big),
            "pseudo_variance": pv,
        });
        outln!("{}", serde_json::to_string_pretty(&out).expect("json"));
        return Ok(());
    }
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), show);
    outln!("law          {spec}");
    outln!("A            {}", show(b.a));
    outln!("B            {}", show(b.b));
    outln!("theta_plus   {}", show(b.theta_plus));
    outln!("m0           {}", show(fam.m0()));
    outln!("m_plus       {}", show(fam.m_plus()));
    outln!("m_plus_bold  {}", show(ext.first_extension_bound()));
    outln!("  level set    {}", opt(routes.level_set));
    outln!("  theta limit  {}", opt(routes.theta_limit));
    if let (Some(l), Some(t)) = (routes.level_set, routes.theta_limit) {
        if (l - t).abs() > 1e-6 {
            outln!("  warning: the two routes differ by {}", show((l - t).abs()));
        }
    }
    outln!("M_plus_bold  {}", big.map_or_else(|| "n/a (needs a closed-form pseudo-variance)".into(), show));
    outln!("V(m)         {}", pv.unwrap_or_else(|| "numerical inverse only".into()));
    Ok(())
}

fn print_report(r: &VerificationReport) {
    let passed = r.checks.iter().filter(|c| c.status == csk_core::harness::Status::Pass).count();
    outln!("# {} suite={} checks={} passed={} time={}ms", r.law_spec, r.suite, r.checks.len(), passed, r.wall_time_ms);
    for c in &r.checks {
        let status = match c.status {
            csk_core::harness::Status::Pass => "PASS",
            csk_core::harness::Status::Fail => "FAIL",
        };
        out!("{status} {:<48} residual={:<12} tol={:e}", c.name, format!("{:.3e}", c.residual), c.tolerance);
        if let Some(d) = &c.detail {
            out!("  ({d})");
        }
        outln!();
    }
}

fn cmd_verify(
    law: Option<&str>,
    suite: &str,
    tol: Option<f64>,
    m1: Option<f64>,
    json: bool,
    cfg: QuadratureConfig,
) -> Result<(), Failure> {
    let suite: Suite = suite.parse()?;
    let opts = VerifyOptions { cfg, tol, m1 };
    let specs: Vec<String> = match law {
        Some(s) => vec![s.to_string()],
        None => standard_laws().iter().map(|l| l.name().to_string()).collect(),
    };
    let mut reports = Vec::new();
    for spec in &specs {
        reports.push(verify(spec, suite, &opts)?);
    }
    if json {
        let v = if law.is_some() {
            serde_json::to_value(&reports[0])
        } else {
            serde_json::to_value(&reports)
        };
        outln!("{}", serde_json::to_string_pretty(&v.expect("report serializes")).expect("json"));
    } else {
        for r in &reports {
            print_report(r);
        }
    }
    if reports.iter().all(|r| r.passed()) {
        Ok(())
    } else if reports.iter().any(|r| r.numeric_failure()) {
        Err(Failure::Numeric("some checks did not converge".into()))
    } else {
        Err(Failure::Verification)
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_iterate(
    spec: &str,
    m1: f64,
    domain: bool,
    quantity: Option<&str>,
    grid: Option<&str>,
    m: Option<f64>,
    mbar: Option<f64>,
    json: bool,
    cfg: &QuadratureConfig,
) -> Result<(), Failure> {
    if let Some(q) = quantity {
        let grid = grid.ok_or_else(|| Failure::Usage("--quantity needs --grid".into()))?;
        let t = iterated_table(spec, m1, q.parse()?, &parse_grid(grid)?, cfg)?;
        emit_table(&t, json);
        return Ok(());
    }
    let law = law_from_spec(spec)?;
    let it = iterate(&build_family(&law, cfg)?, m1)?;
    let (lo, hi) = it.domain();
    let mut fields: Vec<(&str, f64)> = Vec::new();
    if domain || (m.is_none() && mbar.is_none()) {
        fields.push(("lower", lo));
        fields.push(("upper", hi));
    }
    if !domain && m.is_none() && mbar.is_none() {
        fields.insert(0, ("theta1", it.theta1()));
    }
    if let Some(m) = m {
        fields.push(("m", m));
        fields.push(("mean_map", it.mean_map(m)?));
    }
    if let Some(mb) = mbar {
        fields.push(("mbar", mb));
        fields.push(("m_of_mbar", it.mean_map_inverse(mb)?));
        fields.push(("pv", it.pseudo_variance(mb)?));
        fields.push(("v1", it.variance(mb)?));
    }
    if json {
        let obj: serde_json::Map<String, Value> = fields.iter().map(|&(k, v)| (k.to_string(), num(v))).collect();
        outln!("{}", serde_json::to_string_pretty(&Value::Object(obj)).expect("json"));
    } else {
        let keys: Vec<&str> = fields.iter().map(|f| f.0).collect();
        let vals: Vec<String> = fields.iter().map(|f| num(f.1).to_string().trim_matches('"').to_string()).collect();
        outln!("{}", keys.join(","));
        outln!("{}", vals.join(","));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Laws { json, filter } => {
            cmd_laws(json, filter.as_deref());
            Ok(())
        }
        Command::Describe { law, json, quad } => cmd_describe(&law, json, &quad.config()?),
        Command::Table { law, quantity, grid, m, m1, out, quad } => {
            let req = TableRequest {
                law_spec: law,
                quantity: quantity.parse::<Quantity>()?,
                grid: parse_grid(&grid)?,
                m,
                m1,
                cfg: quad.config()?,
            };
            emit_table(&table(&req)?, out.json());
            Ok(())
        }
        Command::Verify { law, suite, tol, m1, out, quad } => {
            cmd_verify(law.as_deref(), &suite, tol, m1, out.json(), quad.config()?)
        }
        Command::Iterate { law, m1, domain, quantity, grid, m, mbar, out, quad } => cmd_iterate(
            &law,
            m1,
            domain,
            quantity.as_deref(),
            grid.as_deref(),
            m,
            mbar,
            out.json(),
            &quad.config()?,
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
