//! Command-line front end.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use katobound::report::BoundReport;

use crate::config::{Format, RunConfig};
use crate::constants_table::{self, ConstantInputs};
use crate::error::{exit, CliError};
use crate::oracle::{self, OracleRecord, ORACLE_RELTOL};
use crate::output::{format_float, to_json, write_json, write_text, Table};
use crate::pipeline::{self, Manifest, SweepManifest, Timing, SWEEP_COLUMNS};

#[derive(Debug, Parser)]
#[command(name = "katobound", version, about = "Kato-class heat-kernel and Betti bounds on metric tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print every closed-form constant at one parameter tuple.
    Constants(ConstantArgs),
    /// Run the full check suite on one configuration.
    Verify(RunArgs),
    /// Run the suite over the values of one parameter.
    Sweep(RunArgs),
    /// Re-evaluate the constants in high precision and compare.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
struct ConstantArgs {
    #[arg(long)]
    delta: f64,
    #[arg(long = "d")]
    d: usize,
    /// Diameter bound.
    #[arg(long = "D")]
    diameter: f64,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Kato constant `b_Kato(V, beta)`.
    #[arg(long, default_value_t = 0.0)]
    b: f64,
    #[arg(long, default_value_t = 1.0)]
    vol: f64,
    #[arg(long, default_value_t = 1.0)]
    kprime: f64,
    #[arg(long, default_value_t = 1.0)]
    rho0: f64,
    /// L^p mean of rho_- for the L^p Betti bound.
    #[arg(long, default_value_t = 0.0)]
    rho_mean: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Print the manifest instead of the summary table.
    #[arg(long)]
    json: bool,
    /// Output directory (overrides `output.directory`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Seed of the random probe potentials.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    kprime: Option<f64>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
    #[arg(long, default_value_t = 1.0)]
    kprime: f64,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let result = match cli.command {
        Command::Constants(a) => cmd_constants(a, stdout),
        Command::Verify(a) => cmd_verify(a, stdout),
        Command::Sweep(a) => cmd_sweep(a, stdout),
        Command::Oracle(a) => cmd_oracle(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit(stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    stdout.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
}

fn cmd_constants(a: ConstantArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let table = constants_table::evaluate(ConstantInputs {
        delta: a.delta,
        d: a.d,
        diameter: a.diameter,
        p: a.p,
        alpha: a.alpha,
        beta: a.beta,
        lambda: a.lambda,
        b: a.b,
        vol: a.vol,
        kprime: a.kprime,
        rho0: a.rho0,
        rho_mean: a.rho_mean,
    })?;
    if a.json {
        emit(stdout, &to_json(&table)?)?;
    } else {
        emit(stdout, &table.to_table().to_text())?;
    }
    Ok(exit::OK)
}

fn load(a: &RunArgs) -> Result<(RunConfig, PathBuf), CliError> {
    let mut cfg = RunConfig::load(&a.config)?;
    if let Some(k) = a.kprime {
        cfg.analysis.kprime = k;
    }
    if let Some(s) = a.seed {
        cfg.analysis.seed = s;
    }
    if a.workers == 0 {
        return Err(CliError::Config("--workers must be >= 1".to_string()));
    }
    cfg.validate()?;
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    Ok((cfg, out))
}

fn provenance_cell(m: &BTreeMap<String, f64>) -> String {
    m.iter().map(|(k, v)| format!("{k}={}", format_float(*v))).collect::<Vec<_>>().join(";")
}

pub const BOUND_COLUMNS: [&str; 14] = [
    "point",
    "check",
    "label",
    "verdict",
    "reason",
    "hypothesis_ok",
    "numeric_lhs",
    "paper_rhs",
    "margin",
    "relation",
    "abs_slack",
    "evidence",
    "provenance",
    "extras",
];

fn bounds_table<'a>(reports: impl IntoIterator<Item = (String, &'a BoundReport)>) -> Table {
    let mut t = Table::new(&BOUND_COLUMNS);
    for (point, r) in reports {
        let reason = match &r.verdict {
            katobound::report::Verdict::Skipped(s) => s.clone(),
            _ => String::new(),
        };
        t.push(vec![
            point,
            r.name.as_str().to_string(),
            r.label.clone(),
            r.verdict.label().to_string(),
            reason,
            r.hypothesis_ok.to_string(),
            format_float(r.numeric_lhs),
            format_float(r.paper_rhs),
            format_float(r.margin),
            format!("{:?}", r.relation).to_lowercase(),
            format_float(r.abs_slack),
            format!("{:?}", r.evidence).to_lowercase(),
            provenance_cell(&r.provenance),
            provenance_cell(&r.extras),
        ]);
    }
    t
}

fn write_table(dir: &Path, stem: &str, table: &Table, cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.output.wants(Format::Csv) {
        write_text(&dir.join(format!("{stem}.csv")), &table.to_csv()?)?;
    }
    if cfg.output.wants(Format::Dat) {
        write_text(&dir.join(format!("{stem}.dat")), &table.to_columns())?;
    }
    if cfg.output.wants(Format::Text) {
        write_text(&dir.join(format!("{stem}.txt")), &table.to_text())?;
    }
    Ok(())
}

fn write_timing(dir: &Path, timing: &Timing) -> Result<(), CliError> {
    let mut phases = BTreeMap::new();
    for (k, v) in &timing.phases {
        phases.insert(k.clone(), *v);
    }
    let mut doc = BTreeMap::new();
    doc.insert("phases", serde_json::to_value(phases)?);
    doc.insert("total_seconds", serde_json::to_value(timing.total())?);
    write_json(&dir.join("timing.json"), &doc)
}

fn summary_text(summary: &pipeline::Summary) -> String {
    let mut t = Table::new(&["check", "verified", "violated", "skipped"]);
    for (name, c) in &summary.by_check {
        t.push(vec![
            name.clone(),
            c.verified.to_string(),
            c.violated.to_string(),
            c.skipped.to_string(),
        ]);
    }
    t.push(vec![
        "total".to_string(),
        summary.total.verified.to_string(),
        summary.total.violated.to_string(),
        summary.total.skipped.to_string(),
    ]);
    t.to_text()
}

fn verify_text(m: &Manifest) -> String {
    let mut s = String::new();
    let mf = &m.manifold;
    s.push_str(&format!(
        "manifold {} d={} n={} volume={} diameter={} t_min={}\n",
        mf.family,
        mf.d,
        mf.n,
        format_float(mf.volume),
        format_float(mf.diameter),
        format_float(mf.t_min)
    ));
    for a in &m.admissibility {
        s.push_str(&format!(
            "admissibility {:?}: lhs={} rhs={} admitted={}\n",
            a.which,
            format_float(a.lhs),
            format_float(a.rhs),
            a.admitted
        ));
    }
    let o = &m.observables;
    s.push_str(&format!(
        "c_kato(W, rho0)={} min_eig(L+rho)={} harmonic_dim={}\n\n",
        format_float(o.c_kato_well),
        format_float(o.min_eig_schrodinger),
        o.harmonic_dim.map_or("n/a".to_string(), |c| c.to_string())
    ));
    s.push_str(&summary_text(&m.summary));
    for r in m.reports.iter().filter(|r| r.verdict.is_violated()) {
        s.push_str(&format!(
            "VIOLATED {} [{}] lhs={} rhs={} {}\n",
            r.name.as_str(),
            r.label,
            format_float(r.numeric_lhs),
            format_float(r.paper_rhs),
            provenance_cell(&r.provenance)
        ));
    }
    s
}

fn cmd_verify(a: RunArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let (cfg, dir) = load(&a)?;
    let outcome = pipeline::analyze(&cfg)?;
    let m = &outcome.manifest;
    write_json(&dir.join("manifest.json"), m)?;
    write_table(&dir, "bounds", &bounds_table(m.reports.iter().map(|r| (String::new(), r))), &cfg)?;
    write_timing(&dir, &outcome.timing)?;
    if a.json {
        emit(stdout, &to_json(m)?)?;
    } else {
        emit(stdout, &verify_text(m))?;
    }
    Ok(if m.violated() { exit::VIOLATED } else { exit::OK })
}

fn sweep_table(m: &SweepManifest) -> Table {
    let mut header = SWEEP_COLUMNS.to_vec();
    header[0] = m.parameter.as_str();
    let mut t = Table::new(&header);
    for r in &m.rows {
        t.push(r.cells());
    }
    t
}

fn cmd_sweep(a: RunArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let (cfg, dir) = load(&a)?;
    let (m, timing) = pipeline::run_sweep(&cfg, a.workers)?;
    write_json(&dir.join("manifest.json"), &m)?;
    let table = sweep_table(&m);
    write_text(&dir.join("sweep.csv"), &table.to_csv()?)?;
    if cfg.output.wants(Format::Dat) {
        write_text(&dir.join("sweep.dat"), &table.to_columns())?;
    }
    let bounds = if m.points.is_empty() {
        bounds_table(m.reports.iter().map(|r| (String::new(), r)))
    } else {
        bounds_table(
            m.rows
                .iter()
                .zip(&m.points)
                .flat_map(|(row, p)| p.reports.iter().map(move |r| (format_float(row.value), r))),
        )
    };
    write_table(&dir, "bounds", &bounds, &cfg)?;
    write_timing(&dir, &timing)?;
    if a.json {
        emit(stdout, &to_json(&m)?)?;
    } else {
        let mut s = table.to_text();
        if let Some(b) = &m.bracket {
            s.push_str(&format!(
                "\n{} crosses 1 in [{}, {}] (width {}, {} evaluations)\n",
                b.quantity,
                format_float(b.lo),
                format_float(b.hi),
                format_float(b.width),
                b.evaluations
            ));
        }
        s.push('\n');
        s.push_str(&summary_text(&m.summary));
        emit(stdout, &s)?;
    }
    Ok(if m.violated() { exit::VIOLATED } else { exit::OK })
}

fn oracle_table(records: &[OracleRecord]) -> Table {
    let mut by: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for r in records {
        let e = by.entry(r.quantity.as_str()).or_insert((0, 0.0));
        e.0 += 1;
        e.1 = e.1.max(r.rel_err);
    }
    let mut t = Table::new(&["quantity", "cases", "max_rel_err", "status"]);
    for (q, (n, err)) in by {
        let status = if err < ORACLE_RELTOL { "PASS" } else { "FAIL" };
        t.push(vec![q.to_string(), n.to_string(), format!("{err:.3e}"), status.to_string()]);
    }
    t
}

fn cmd_oracle(a: OracleArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let records = oracle::run_suite(a.kprime)?;
    let failed = records.iter().filter(|r| !r.passed()).count();
    if let Some(dir) = &a.out {
        write_json(&dir.join("oracle.json"), &records)?;
    }
    if a.json {
        emit(stdout, &to_json(&records)?)?;
    } else {
        let mut s = oracle_table(&records).to_text();
        s.push_str(&format!("\n{} cases, {} outside {:e}\n", records.len(), failed, ORACLE_RELTOL));
        emit(stdout, &s)?;
    }
    Ok(if failed > 0 { exit::VIOLATED } else { exit::OK })
}
