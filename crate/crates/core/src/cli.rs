//! `eikonal` command-line front end.
//!
//! Exit status: 0 when every verification passes, 1 when one fails, 2 on
//! usage, input or I/O errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dirichlet::{check_compatibility_weighted, solve_weighted, Solution};
use crate::error::{Error, Result};
use crate::monge::{default_radii_f, sample_vertices, verify_monge};
use crate::quadrature::Quadrature;
use crate::regularity::write_pairs_csv;
use crate::scenario_file::{load_scenario_file, parse_markings};
use crate::scenarios::{
    self, builtin_setup, convergence, regularity_of, run_generic, run_scenario, Resolution, ScenarioRun, Setup,
};
use crate::transversal::{solve_lax_transversal, verify_transversal_monge};

#[derive(Debug, Parser)]
#[command(name = "eikonal", version, about = "Eikonal equations on metric graphs via optical length")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the Dirichlet problem by the Lax formula.
    Solve(CommonArgs),
    /// Solve, then test the Monge property and the compatibility condition.
    Verify(CommonArgs),
    /// Dimension estimate and Hölder fit of the optical length.
    Regularity(CommonArgs),
    /// Maximal solution over null-set markings.
    Transversal(CommonArgs),
    /// Run a scenario with all of its checks.
    Scenario(CommonArgs),
    /// Error table over grid spacings and truncation levels.
    Convergence(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Registered scenario name.
    #[arg(long, conflicts_with = "file")]
    pub scenario: Option<String>,
    /// Scenario file (JSON).
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Grid spacing; a comma-separated list for `convergence`.
    #[arg(long, value_delimiter = ',')]
    pub h: Vec<f64>,
    /// Subdivide every edge into this many pieces.
    #[arg(long)]
    pub refine: Option<usize>,
    /// Quadrature points per unit length.
    #[arg(long, default_value_t = 64.0)]
    pub quad: f64,
    /// Decreasing radii for slope estimates, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub radii: Vec<f64>,
    /// Slope tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Truncation level of f; a comma-separated list for `convergence`.
    #[arg(long = "truncate-M", value_delimiter = ',')]
    pub truncate_m: Vec<f64>,
    /// JSON array of null-set markings.
    #[arg(long = "null-sets")]
    pub null_sets: Option<PathBuf>,
}

impl CommonArgs {
    fn resolution(&self, lists_allowed: bool) -> Result<Resolution> {
        if !lists_allowed && (self.h.len() > 1 || self.truncate_m.len() > 1) {
            return Err(Error::InvalidParameter(
                "--h and --truncate-M take a single value here".into(),
            ));
        }
        if !(self.quad > 0.0 && self.quad.is_finite()) {
            return Err(Error::InvalidParameter(format!("--quad must be positive, got {}", self.quad)));
        }
        Ok(Resolution {
            h: self.h.first().copied(),
            refine: self.refine,
            quad: Quadrature::with_density(self.quad),
            seed: self.seed,
            radii: (!self.radii.is_empty()).then(|| self.radii.clone()),
            tol: self.tol,
            truncate: self.truncate_m.first().copied(),
        })
    }

    fn setup(&self, res: &Resolution) -> Result<Setup> {
        let mut setup = match (&self.scenario, &self.file) {
            (Some(name), None) => builtin_setup(name, res)?,
            (None, Some(path)) => load_scenario_file(path)?,
            _ => return Err(Error::InvalidParameter("give exactly one of --scenario or --file".into())),
        };
        if let Some(path) = &self.null_sets {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
                Error::Parse(format!("{}: line {} column {}: {e}", path.display(), e.line(), e.column()))
            })?;
            setup.null_sets = parse_markings(&value, "null_sets", &setup.graph)?;
        }
        setup.adjusted(res)
    }
}

#[derive(Serialize)]
struct SolveReport<'a> {
    command: &'a str,
    scenario: &'a str,
    resolution: &'a Resolution,
    vertices: usize,
    edges: usize,
    sigma_g: Vec<&'a str>,
    diagnostics: &'a crate::dirichlet::Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    extra: Option<serde_json::Value>,
    pass: bool,
}

fn create(dir: &Path, file: String) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(file);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

fn write_json(dir: &Path, file: String, value: &impl Serialize) -> Result<()> {
    let mut w = create(dir, file)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w).map_err(io)?;
    w.flush().map_err(io)
}

fn write_solution(dir: &Path, setup: &Setup, s: &Solution) -> Result<()> {
    let mut w = create(dir, format!("{}_solution.csv", setup.name))?;
    s.write_csv(&setup.graph, &mut w).map_err(io)?;
    w.flush().map_err(io)
}

fn write_pairs(dir: &Path, name: &str, pairs: &[(f64, f64)]) -> Result<()> {
    let mut w = create(dir, format!("{name}_pairs.csv"))?;
    write_pairs_csv(pairs, &mut w).map_err(io)?;
    w.flush().map_err(io)
}

fn sigma_labels<'a>(setup: &'a Setup, s: &Solution) -> Vec<&'a str> {
    s.sigma_g.iter().map(|&v| setup.graph.vertex(v).label.as_str()).collect()
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_solve(args: &CommonArgs) -> Result<bool> {
    let res = args.resolution(false)?;
    let setup = args.setup(&res)?;
    let problem = setup.problem()?;
    let wg = problem.weighted(&res.quad);
    let s = solve_weighted(&problem, &wg)?;
    let d = &s.diagnostics;
    let pass = d.lax_inequality_max_violation <= scenarios::tol::LAX;
    let finite: Vec<f64> = s.u.iter().copied().filter(|v| v.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("{}: {} vertices, {} edges", setup.name, setup.graph.vertex_count(), setup.graph.edge_count());
    println!("u in [{lo:.6}, {hi:.6}], u(center) = {:.6}", s.u[setup.center]);
    println!(
        "effective boundary {} of {}, compatibility {}",
        s.sigma_g.len(),
        problem.boundary().len(),
        if d.compatibility_ok { "ok" } else { "violated" }
    );
    println!("lax inequality max violation {:.3e}", d.lax_inequality_max_violation);
    for w in &d.warnings {
        println!("warning: {w}");
    }
    write_solution(&args.out, &setup, &s)?;
    write_json(
        &args.out,
        format!("{}_report.json", setup.name),
        &SolveReport {
            command: "solve",
            scenario: &setup.name,
            resolution: &res,
            vertices: setup.graph.vertex_count(),
            edges: setup.graph.edge_count(),
            sigma_g: sigma_labels(&setup, &s),
            diagnostics: d,
            extra: None,
            pass,
        },
    )?;
    println!("{}", verdict(pass));
    Ok(pass)
}

fn cmd_verify(args: &CommonArgs) -> Result<bool> {
    let res = args.resolution(false)?;
    let setup = args.setup(&res)?;
    let problem = setup.problem()?;
    let wg = problem.weighted(&res.quad);
    let s = solve_weighted(&problem, &wg)?;
    let compat = check_compatibility_weighted(&problem, &wg)?;
    let candidates: Vec<usize> = (0..s.u.len())
        .filter(|&v| !problem.is_boundary(v) && s.u[v].is_finite())
        .collect();
    let sample = sample_vertices(&candidates, scenarios::tol::MONGE_SAMPLE, res.seed);
    let radii = res.radii.clone().unwrap_or_else(|| default_radii_f(&wg));
    let tol = res.tol.unwrap_or(scenarios::tol::MONGE);
    let reduced = !s.diagnostics.compatibility_ok;
    let m = verify_monge(&s.u, &problem, &wg, &s.sigma_g, &sample, &radii, tol, reduced)?;
    let pass = m.monge_fraction() >= scenarios::tol::MONGE_FRACTION
        && m.semicontinuity_ok()
        && s.diagnostics.lax_inequality_max_violation <= scenarios::tol::LAX;
    println!(
        "{}: monge fraction {:.4} over {} vertices (tol {tol}), semicontinuity {}",
        setup.name,
        m.monge_fraction(),
        m.entries.len(),
        if m.semicontinuity_ok() { "ok" } else { "violated" }
    );
    println!(
        "compatibility: {} violation(s){}",
        compat.violations.len(),
        if reduced { ", verified the reduced problem" } else { "" }
    );
    write_solution(&args.out, &setup, &s)?;
    let mut w = create(&args.out, format!("{}_monge.csv", setup.name))?;
    m.write_csv(&setup.graph, &mut w).map_err(io)?;
    w.flush().map_err(io)?;
    let extra = serde_json::json!({
        "monge_fraction": m.monge_fraction(),
        "semicontinuity_ok": m.semicontinuity_ok(),
        "radii": radii,
        "tol": tol,
        "compatibility": compat,
    });
    write_json(
        &args.out,
        format!("{}_report.json", setup.name),
        &SolveReport {
            command: "verify",
            scenario: &setup.name,
            resolution: &res,
            vertices: setup.graph.vertex_count(),
            edges: setup.graph.edge_count(),
            sigma_g: sigma_labels(&setup, &s),
            diagnostics: &s.diagnostics,
            extra: Some(extra),
            pass,
        },
    )?;
    println!("{}", verdict(pass));
    Ok(pass)
}

fn cmd_regularity(args: &CommonArgs) -> Result<bool> {
    let res = args.resolution(false)?;
    let setup = args.setup(&res)?;
    let (summary, pairs) = regularity_of(&setup, &res)?;
    let lipschitz_ok = summary.lipschitz.as_ref().is_none_or(|l| l.pass);
    let pass = !summary.below_prediction && lipschitz_ok;
    match summary.q {
        Some(q) => println!("{}: Q = {q:.4}", setup.name),
        None => println!("{}: Q not estimated (radii span under a decade)", setup.name),
    }
    println!(
        "holder exponent {:.4} in [{:.4}, {:.4}], constant {:.4}",
        summary.exponent, summary.band.0, summary.band.1, summary.constant
    );
    if let Some(p) = summary.predicted_exponent {
        println!("predicted exponent {p:.4}");
    }
    if let Some(l) = &summary.lipschitz {
        println!("lipschitz ratio {:.4} against bound {:.4}", l.max_ratio, l.bound);
    }
    write_pairs(&args.out, &setup.name, &pairs)?;
    write_json(
        &args.out,
        format!("{}_report.json", setup.name),
        &serde_json::json!({
            "command": "regularity",
            "scenario": setup.name,
            "resolution": res,
            "regularity": summary,
            "pass": pass,
        }),
    )?;
    println!("{}", verdict(pass));
    Ok(pass)
}

fn cmd_transversal(args: &CommonArgs) -> Result<bool> {
    let res = args.resolution(false)?;
    let setup = args.setup(&res)?;
    let problem = setup.problem()?;
    let wg = problem.weighted(&res.quad);
    let t = solve_lax_transversal(&problem, &wg, &setup.null_sets)?;
    let ordered = t.u.iter().zip(&t.solution.u).all(|(a, b)| a <= b);
    let candidates: Vec<usize> = (0..t.u.len())
        .filter(|&v| !problem.is_boundary(v) && t.solution.u[v].is_finite())
        .collect();
    let sample = sample_vertices(&candidates, scenarios::tol::MONGE_SAMPLE, res.seed);
    let radii = res.radii.clone().unwrap_or_else(|| default_radii_f(&wg));
    let tol = res.tol.unwrap_or(scenarios::tol::MONGE);
    let m = verify_transversal_monge(
        &t.solution.u,
        &problem,
        &wg,
        &setup.null_sets,
        &t.solution.sigma_g,
        &sample,
        &radii,
        tol,
        !t.solution.diagnostics.compatibility_ok,
    )?;
    let pass = ordered;
    println!(
        "{}: {} marking(s), method {:?}, gap |u~ - u| = {:.6}",
        setup.name,
        setup.null_sets.len(),
        t.method,
        t.gap
    );
    println!("u <= u~ {}", if ordered { "holds" } else { "fails" });
    println!("transversal monge fraction {:.4} (reported only)", m.monge_fraction());
    write_solution(&args.out, &setup, &t.solution)?;
    write_json(
        &args.out,
        format!("{}_report.json", setup.name),
        &SolveReport {
            command: "transversal",
            scenario: &setup.name,
            resolution: &res,
            vertices: setup.graph.vertex_count(),
            edges: setup.graph.edge_count(),
            sigma_g: sigma_labels(&setup, &t.solution),
            diagnostics: &t.solution.diagnostics,
            extra: Some(serde_json::json!({
                "markings": setup.null_sets,
                "method": t.method,
                "gap": t.gap,
                "unreachable": t.unreachable,
                "u_le_utilde": ordered,
                "monge_fraction": m.monge_fraction(),
            })),
            pass,
        },
    )?;
    println!("{}", verdict(pass));
    Ok(pass)
}

fn cmd_scenario(args: &CommonArgs) -> Result<bool> {
    let res = args.resolution(false)?;
    let run: ScenarioRun = match &args.scenario {
        Some(name) if args.null_sets.is_none() => run_scenario(name, &res)?,
        _ => run_generic(args.setup(&res)?, &res)?,
    };
    let r = &run.report;
    println!("{}: {} vertices, {} edges", r.scenario, r.vertices, r.edges);
    for c in &r.checks {
        let tag = if c.gating { "" } else { " (supplementary)" };
        println!("  [{}] {}: {} expected {}{tag}", verdict(c.pass), c.name, c.observed, c.expected);
    }
    for note in &r.notes {
        println!("  note: {note}");
    }
    for w in &r.warnings {
        println!("  warning: {w}");
    }
    println!("runtime {:.2}s", r.runtime_seconds);
    write_solution(&args.out, &run.setup, &run.solution)?;
    write_pairs(&args.out, &run.setup.name, &run.pairs)?;
    write_json(&args.out, format!("{}_report.json", run.setup.name), r)?;
    println!("{}", verdict(r.pass()));
    Ok(r.pass())
}

fn cmd_convergence(args: &CommonArgs) -> Result<bool> {
    let res = args.resolution(true)?;
    let name = args
        .scenario
        .as_deref()
        .ok_or_else(|| Error::InvalidParameter("convergence needs --scenario".into()))?;
    let hs = if args.h.is_empty() { vec![1e-1, 1e-2, 1e-3] } else { args.h.clone() };
    let ms = if args.truncate_m.is_empty() {
        vec![10.0, 100.0, 1000.0]
    } else {
        args.truncate_m.clone()
    };
    let t = convergence(name, &hs, &ms, &res.quad)?;
    println!("{:>10} {:>9} {:>14} {:>14}", "h", "vertices", "vertex_error", "sup_error");
    for r in &t.rows {
        println!("{:>10.3e} {:>9} {:>14.6e} {:>14.6e}", r.h, r.vertices, r.vertex_error, r.interpolant_error);
    }
    println!("{:>10} {:>14}", "M", "sup|u_M - u|");
    for r in &t.truncation {
        println!("{:>10.3e} {:>14.6e}", r.m, r.sup_diff);
    }
    let mut w = create(&args.out, format!("{name}_convergence.csv"))?;
    writeln!(w, "kind,parameter,vertex_error,sup_error").map_err(io)?;
    for r in &t.rows {
        writeln!(w, "grid,{},{},{}", r.h, r.vertex_error, r.interpolant_error).map_err(io)?;
    }
    for r in &t.truncation {
        writeln!(w, "truncation,{},,{}", r.m, r.sup_diff).map_err(io)?;
    }
    w.flush().map_err(io)?;
    write_json(&args.out, format!("{name}_convergence.json"), &t)?;
    let pass = t.errors_decreasing && t.truncation_decreasing;
    println!(
        "grid errors {}, truncation errors {}",
        if t.errors_decreasing { "decreasing" } else { "NOT decreasing" },
        if t.truncation_decreasing { "decreasing" } else { "NOT decreasing" }
    );
    println!("{}", verdict(pass));
    Ok(pass)
}

fn dispatch(cli: &Cli) -> Result<bool> {
    let args = match &cli.command {
        Command::Solve(a)
        | Command::Verify(a)
        | Command::Regularity(a)
        | Command::Transversal(a)
        | Command::Scenario(a)
        | Command::Convergence(a) => a,
    };
    if let Some(n) = args.workers {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Regularity(a) => cmd_regularity(a),
        Command::Transversal(a) => cmd_transversal(a),
        Command::Scenario(a) => cmd_scenario(a),
        Command::Convergence(a) => cmd_convergence(a),
    }
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "eikonal",
            "convergence",
            "--scenario",
            "interval_sqrt",
            "--h",
            "1e-1,1e-2",
            "--truncate-M",
            "10,100",
            "--radii",
            "0.1,0.01",
        ])
        .unwrap();
        let Command::Convergence(a) = cli.command else { panic!() };
        assert_eq!(a.h, vec![0.1, 0.01]);
        assert_eq!(a.truncate_m, vec![10.0, 100.0]);
        assert!(a.resolution(false).is_err());
        assert_eq!(a.resolution(true).unwrap().radii, Some(vec![0.1, 0.01]));
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["eikonal", "solve", "--scenario", "does_not_exist"]), 2);
        assert_eq!(run(["eikonal", "bogus"]), 2);
        assert_eq!(run(["eikonal", "solve", "--scenario", "comb", "--file", "x.json"]), 2);
        assert_eq!(run(["eikonal", "solve"]), 2);
    }
}
