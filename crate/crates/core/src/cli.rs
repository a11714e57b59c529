//! Batch front-end. Each command builds a [`ReportBundle`] holding a JSON
//! report and a text summary, plus fixed-column CSV plot data; all of it is
//! written under the output directory and the summary is echoed to stdout.
//!
//! Exit code 2 means a selection was diagnosed as diverging. Any other
//! failure exits 1, including an uncertified selection.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::approxvar::{eps_variation, prefix_eps_variation, profile, validate_ladder};
use crate::checks::{run_checks, Suite};
use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::families::{builtin_refining, builtin_sequence, REFINING_NAMES, SEQUENCE_NAMES};
use crate::gage::{GageSpace, PseudometricId};
use crate::gridfn::{jordan_variation, oscillation, prefix_variation, SampledFunction};
use crate::io::{function_to_csv_string, load_function};
use crate::regulated::{classify_regulated, step_approximant, RefiningFamily};
use crate::selection::{local_select, pointwise_select, FunctionSequence, SelectionConfig, SelectionOutcome};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_DIAGNOSIS: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "approxvar", version, about = "Approximate variation of sampled functions")]
pub struct Cli {
    /// Output directory for reports and CSV data.
    #[arg(long, global = true, env = "APPROXVAR_OUT", default_value = "approxvar-out")]
    pub out: PathBuf,
    /// Seed for every random fixture.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for parallel maps; results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct FunctionArgs {
    /// Function CSV (`t` then `v`, `v0..`, or `idx`).
    #[arg(long)]
    pub input: PathBuf,
    /// Space as inline JSON or a path to a JSON file; scalar by default.
    #[arg(long)]
    pub space: Option<String>,
    /// Pseudometric indices.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub p: Vec<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Jordan variation, oscillation and prefix variation.
    Var {
        #[command(flatten)]
        f: FunctionArgs,
    },
    /// Brackets of the ε-variation along a decreasing ε ladder.
    Profile {
        #[command(flatten)]
        f: FunctionArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        /// Write the witness function for every finite upper bound.
        #[arg(long)]
        witness: bool,
    },
    /// ε-variation bracket and prefix ε-variation at each ε.
    EpsVar {
        #[command(flatten)]
        f: FunctionArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long)]
        witness: bool,
    },
    /// Step function in the ε-tube with few jumps (scalar and coordinate).
    StepApprox {
        #[command(flatten)]
        f: FunctionArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
    },
    /// Growth of the ε-variation on refining grids.
    Classify {
        /// Built-in family name or a directory of function CSVs, one per
        /// refinement depth in file-name order.
        #[arg(long)]
        family: String,
        #[arg(long)]
        space: Option<String>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        p: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        /// Refinement depth of a built-in family.
        #[arg(long, default_value_t = 6)]
        depth: usize,
    },
    /// Pointwise selection with convergence certificates.
    Select {
        /// Built-in sequence name or a directory of function CSVs, one per
        /// member in file-name order.
        #[arg(long)]
        family: String,
        #[arg(long)]
        space: Option<String>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        p: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        /// Number of probed members.
        #[arg(long, default_value_t = 8)]
        probe: usize,
        /// Nested windows `a:b`, selected in order.
        #[arg(long, value_delimiter = ',', value_parser = parse_window)]
        window: Vec<(f64, f64)>,
        #[arg(long, default_value_t = 1e-9)]
        tau_conv: f64,
        #[arg(long, default_value_t = 4)]
        min_keep: usize,
    },
    /// Property suites against brute-force oracles.
    Check {
        /// One of ess, unif, selection, all.
        suite: Suite,
    },
}

fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("window {s:?} is not of the form a:b"))?;
    let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("window {s:?}: {e}"));
    Ok((parse(a)?, parse(b)?))
}

/// JSON report, text summary and CSV plot data of one command.
#[derive(Debug)]
pub struct ReportBundle {
    pub name: &'static str,
    pub json: Value,
    pub summary: String,
    /// File name and contents.
    pub csv: Vec<(String, String)>,
    pub exit: u8,
}

impl ReportBundle {
    fn new(name: &'static str, json: Value) -> Self {
        ReportBundle {
            name,
            json,
            summary: String::new(),
            csv: Vec::new(),
            exit: EXIT_OK,
        }
    }

    /// Writes `<name>.json`, `<name>.txt` and the CSV files into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |file: &str, text: &str| {
            let path = dir.join(file);
            fs::write(&path, text).map_err(|e| Error::io(path, e))
        };
        let mut json = serde_json::to_string_pretty(&self.json)?;
        json.push('\n');
        put(&format!("{}.json", self.name), &json)?;
        put(&format!("{}.txt", self.name), &self.summary)?;
        for (file, text) in &self.csv {
            put(file, text)?;
        }
        Ok(())
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

/// Inline JSON when the argument starts with `{`, a file path otherwise.
pub fn load_space(arg: Option<&str>) -> Result<Arc<GageSpace>> {
    let Some(arg) = arg else {
        return Ok(Arc::new(GageSpace::scalar()));
    };
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| Error::io(arg, e))?
    };
    Ok(Arc::new(GageSpace::from_json(&text)?))
}

fn pids(space: &GageSpace, ps: &[usize]) -> Result<Vec<PseudometricId>> {
    let ids: Vec<PseudometricId> = ps.iter().map(|&p| PseudometricId(p)).collect();
    for &p in &ids {
        space.check_pseudometric(p)?;
    }
    Ok(ids)
}

fn load_input(args: &FunctionArgs) -> Result<(SampledFunction, Vec<PseudometricId>)> {
    let space = load_space(args.space.as_deref())?;
    let ps = pids(&space, &args.p)?;
    Ok((load_function(&args.input, space)?, ps))
}

/// Every `*.csv` in `dir`, sorted by file name.
fn load_directory(dir: &Path, space: Arc<GageSpace>) -> Result<Vec<SampledFunction>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<Vec<_>>>()?;
    paths.retain(|p| p.extension().is_some_and(|x| x == "csv"));
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!("{} contains no .csv files", dir.display())));
    }
    paths.iter().map(|p| load_function(p, space.clone())).collect()
}

fn ext(v: ExtReal) -> String {
    v.to_string()
}

fn cmd_var(args: &FunctionArgs) -> Result<ReportBundle> {
    let (f, ps) = load_input(args)?;
    let mut rows = Vec::new();
    let mut csv = String::from("p,t,prefix\n");
    let mut summary = String::new();
    for &p in &ps {
        let v = jordan_variation(&f, p)?;
        let osc = oscillation(&f, p)?;
        for (t, s) in f.grid().points().iter().zip(prefix_variation(&f, p)?) {
            writeln!(csv, "{},{t},{s}", p.0).expect("string write");
        }
        writeln!(summary, "p={}: V={v} osc={osc}", p.0).expect("string write");
        rows.push(json!({"p": p, "variation": v, "oscillation": osc}));
    }
    let mut b = ReportBundle::new("var", json!({"n": f.len(), "results": rows}));
    b.summary = summary;
    b.csv.push(("var.csv".into(), csv));
    Ok(b)
}

fn cmd_profile(args: &FunctionArgs, eps: &[f64], witness: bool) -> Result<ReportBundle> {
    validate_ladder(eps)?;
    let (f, ps) = load_input(args)?;
    let mut profiles = Vec::new();
    let mut b = ReportBundle::new("profile", Value::Null);
    for &p in &ps {
        let prof = profile(&f, p, eps)?;
        let mut csv = String::from("eps,lower,upper,exact\n");
        writeln!(b.summary, "p={}", p.0).expect("string write");
        for (i, (e, br)) in prof.eps_ladder.iter().zip(&prof.brackets).enumerate() {
            writeln!(csv, "{e},{},{},{}", ext(br.lower), ext(br.upper), br.exact).expect("string write");
            writeln!(
                b.summary,
                "  eps={e}: [{}, {}]{}",
                ext(br.lower),
                ext(br.upper),
                if br.exact { " exact" } else { "" }
            )
            .expect("string write");
            if let (true, Some(w)) = (witness, &br.witness) {
                b.csv
                    .push((format!("witness_p{}_e{i}.csv", p.0), function_to_csv_string(w)?));
            }
        }
        b.csv.push((format!("profile_p{}.csv", p.0), csv));
        profiles.push(prof);
    }
    b.json = json!({"n": f.len(), "profiles": to_json(&profiles)?});
    Ok(b)
}

fn cmd_eps_var(args: &FunctionArgs, eps: &[f64], witness: bool) -> Result<ReportBundle> {
    let (f, ps) = load_input(args)?;
    let mut b = ReportBundle::new("eps-var", Value::Null);
    let mut rows = Vec::new();
    let mut brackets = String::from("p,eps,lower,upper,exact\n");
    let mut prefix = String::from("p,eps,t,prefix\n");
    for &p in &ps {
        for (i, &e) in eps.iter().enumerate() {
            let br = eps_variation(&f, p, e)?;
            writeln!(brackets, "{},{e},{},{},{}", p.0, ext(br.lower), ext(br.upper), br.exact).expect("string write");
            for (t, v) in f.grid().points().iter().zip(prefix_eps_variation(&f, p, e)?) {
                writeln!(prefix, "{},{e},{t},{}", p.0, ext(v)).expect("string write");
            }
            writeln!(b.summary, "p={} eps={e}: [{}, {}]", p.0, ext(br.lower), ext(br.upper)).expect("string write");
            if let (true, Some(w)) = (witness, &br.witness) {
                b.csv
                    .push((format!("witness_p{}_e{i}.csv", p.0), function_to_csv_string(w)?));
            }
            rows.push(json!({"p": p, "eps": e, "bracket": to_json(&br)?}));
        }
    }
    b.json = json!({"n": f.len(), "results": rows});
    b.csv.push(("eps-var.csv".into(), brackets));
    b.csv.push(("prefix.csv".into(), prefix));
    Ok(b)
}

fn cmd_step_approx(args: &FunctionArgs, eps: &[f64]) -> Result<ReportBundle> {
    let (f, ps) = load_input(args)?;
    let mut b = ReportBundle::new("step-approx", Value::Null);
    let mut rows = Vec::new();
    for &p in &ps {
        for (i, &e) in eps.iter().enumerate() {
            let s = step_approximant(&f, p, e)?;
            writeln!(b.summary, "p={} eps={e}: jumps={} V={}", p.0, s.jumps, s.variation).expect("string write");
            b.csv
                .push((format!("step_p{}_e{i}.csv", p.0), function_to_csv_string(&s.function)?));
            rows.push(json!({"p": p, "eps": e, "jumps": s.jumps, "variation": s.variation}));
        }
    }
    b.json = json!({"n": f.len(), "results": rows});
    Ok(b)
}

fn refining_family(name: &str, space: Option<&str>, depth: usize) -> Result<RefiningFamily> {
    if let Some(fam) = builtin_refining(name, depth) {
        return Ok(fam);
    }
    let dir = Path::new(name);
    if !dir.is_dir() {
        return Err(Error::Config(format!(
            "unknown family {name:?}: expected one of {REFINING_NAMES:?} or a directory"
        )));
    }
    let members = load_directory(dir, load_space(space)?)?;
    let label = dir
        .file_name()
        .map_or(name.to_string(), |s| s.to_string_lossy().into_owned());
    Ok(RefiningFamily::new(label, members.len(), move |k| {
        Ok(members[k].clone())
    }))
}

fn sequence(name: &str, space: Option<&str>) -> Result<FunctionSequence> {
    if let Some(seq) = builtin_sequence(name) {
        return Ok(seq);
    }
    let dir = Path::new(name);
    if !dir.is_dir() {
        return Err(Error::Config(format!(
            "unknown family {name:?}: expected one of {SEQUENCE_NAMES:?} or a directory"
        )));
    }
    let members = load_directory(dir, load_space(space)?)?;
    let label = dir
        .file_name()
        .map_or(name.to_string(), |s| s.to_string_lossy().into_owned());
    Ok(FunctionSequence::from_members(label, members))
}

fn cmd_classify(family: &str, space: Option<&str>, ps: &[usize], eps: &[f64], depth: usize) -> Result<ReportBundle> {
    validate_ladder(eps)?;
    let fam = refining_family(family, space, depth)?;
    let first = fam.member(0)?;
    let ps = pids(first.space(), ps)?;
    let rep = classify_regulated(&fam, eps, &ps)?;
    let mut b = ReportBundle::new("classify", to_json(&rep)?);
    let mut csv = String::from("eps,p,size,lower,upper\n");
    for c in &rep.cells {
        writeln!(
            b.summary,
            "eps={} p={}: {:?} (slope {})",
            c.eps, c.p.0, c.verdict, c.slope
        )
        .expect("string write");
        for ((n, l), u) in c.sizes.iter().zip(&c.lowers).zip(&c.uppers) {
            writeln!(csv, "{},{},{n},{l},{u}", c.eps, c.p.0).expect("string write");
        }
    }
    b.csv.push(("classify.csv".into(), csv));
    Ok(b)
}

fn outcome_exit(o: &SelectionOutcome) -> u8 {
    match o {
        SelectionOutcome::Certified(_) => EXIT_OK,
        SelectionOutcome::Uncertified(_) => EXIT_FAILURE,
        SelectionOutcome::Diagnosis(_) => EXIT_DIAGNOSIS,
    }
}

fn describe(o: &SelectionOutcome, out: &mut String) {
    match o {
        SelectionOutcome::Diagnosis(d) => writeln!(out, "{d}"),
        SelectionOutcome::Certified(t) | SelectionOutcome::Uncertified(t) => writeln!(
            out,
            "{}: selected {:?} after {} stages",
            if o.is_certified() { "certified" } else { "uncertified" },
            t.selected,
            t.stages.len()
        ),
    }
    .expect("string write");
}

fn hypothesis_csv(o: &SelectionOutcome) -> String {
    let rep = match o {
        SelectionOutcome::Diagnosis(d) => &d.hypothesis,
        SelectionOutcome::Certified(t) | SelectionOutcome::Uncertified(t) => &t.hypothesis,
    };
    let mut csv = String::from("eps,p,j,lower,upper\n");
    for c in &rep.cells {
        for (j, (l, u)) in c.lowers.iter().zip(&c.uppers).enumerate() {
            writeln!(csv, "{},{},{},{l},{u}", c.eps, c.p.0, j + 1).expect("string write");
        }
    }
    csv
}

#[allow(clippy::too_many_arguments)]
fn cmd_select(
    family: &str,
    space: Option<&str>,
    ps: &[usize],
    eps: &[f64],
    probe: usize,
    windows: &[(f64, f64)],
    tau_conv: f64,
    min_keep: usize,
) -> Result<ReportBundle> {
    let seq = sequence(family, space)?;
    let first = seq.member(1)?;
    let mut cfg = SelectionConfig::new(eps.to_vec(), pids(first.space(), ps)?, probe);
    cfg.tau_conv = tau_conv;
    cfg.min_keep = min_keep;
    cfg.validate()?;
    if windows.is_empty() {
        let out = pointwise_select(&seq, &cfg)?;
        let mut b = ReportBundle::new("select", to_json(&out)?);
        describe(&out, &mut b.summary);
        b.exit = outcome_exit(&out);
        if let Some(t) = out.trace() {
            b.csv.push(("limit.csv".into(), function_to_csv_string(&t.limit)?));
        }
        b.csv.push(("hypothesis.csv".into(), hypothesis_csv(&out)));
        return Ok(b);
    }
    let local = local_select(&seq, windows, &cfg)?;
    let mut b = ReportBundle::new("select", to_json(&local)?);
    for (i, w) in local.windows.iter().enumerate() {
        write!(b.summary, "window [{}, {}]: ", w.lo, w.hi).expect("string write");
        describe(&w.outcome, &mut b.summary);
        b.exit = b.exit.max(outcome_exit(&w.outcome));
        if let Some(t) = w.outcome.trace() {
            b.csv
                .push((format!("limit_w{i}.csv"), function_to_csv_string(&t.limit)?));
        }
    }
    match local.merged_window {
        Some(i) => writeln!(b.summary, "merged window {i}: selected {:?}", local.selected),
        None => writeln!(b.summary, "no certified window"),
    }
    .expect("string write");
    Ok(b)
}

fn cmd_check(suite: Suite, seed: u64) -> Result<ReportBundle> {
    let rep = run_checks(suite, seed)?;
    let mut b = ReportBundle::new("check", to_json(&rep)?);
    for prop in &rep.properties {
        writeln!(
            b.summary,
            "[{}] {}/{}: {} checked, {} failed",
            if prop.passed() { "PASS" } else { "FAIL" },
            prop.suite,
            prop.name,
            prop.checked,
            prop.failures
        )
        .expect("string write");
        if let Some(ce) = &prop.counterexample {
            writeln!(b.summary, "  counterexample: {ce}").expect("string write");
        }
    }
    if !rep.passed {
        b.exit = EXIT_FAILURE;
    }
    Ok(b)
}

/// Runs one parsed command without touching the file system beyond inputs.
pub fn run(cli: &Cli) -> Result<ReportBundle> {
    match &cli.command {
        Command::Var { f } => cmd_var(f),
        Command::Profile { f, eps, witness } => cmd_profile(f, eps, *witness),
        Command::EpsVar { f, eps, witness } => cmd_eps_var(f, eps, *witness),
        Command::StepApprox { f, eps } => cmd_step_approx(f, eps),
        Command::Classify {
            family,
            space,
            p,
            eps,
            depth,
        } => cmd_classify(family, space.as_deref(), p, eps, *depth),
        Command::Select {
            family,
            space,
            p,
            eps,
            probe,
            window,
            tau_conv,
            min_keep,
        } => cmd_select(family, space.as_deref(), p, eps, *probe, window, *tau_conv, *min_keep),
        Command::Check { suite } => cmd_check(*suite, cli.seed),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    }
    let bundle = match run(&cli).and_then(|b| b.write(&cli.out).map(|()| b)) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    };
    print!("{}", bundle.summary);
    ExitCode::from(bundle.exit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("approxvar").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn windows_parse() {
        assert_eq!(parse_window("0:1.5").unwrap(), (0.0, 1.5));
        assert!(parse_window("0-1").is_err());
        let cli = parse(&["select", "--family", "localized", "--eps", "0.5", "--window", "0:1,0:2"]);
        match cli.command {
            Command::Select { window, .. } => assert_eq!(window, vec![(0.0, 1.0), (0.0, 2.0)]),
            _ => panic!("wrong command"),
        }
    }

    #[test]
    fn select_exit_codes() {
        let b = run(&parse(&["select", "--family", "constant", "--eps", "0.5,0.1"])).unwrap();
        assert_eq!(b.exit, EXIT_OK);
        let b = run(&parse(&[
            "select",
            "--family",
            "factorial",
            "--eps",
            "0.25",
            "--probe",
            "5",
        ]))
        .unwrap();
        assert_eq!(b.exit, EXIT_DIAGNOSIS);
        assert!(b.summary.starts_with("Diverging at (ε=0.25, p=0)"));
    }

    #[test]
    fn unknown_family_is_an_input_error() {
        assert!(run(&parse(&["select", "--family", "nope", "--eps", "0.5"])).is_err());
        assert!(run(&parse(&["classify", "--family", "nope", "--eps", "0.5"])).is_err());
    }

    #[test]
    fn inline_space() {
        let s = load_space(Some(r#"{"kind":"coordinate","dim":2}"#)).unwrap();
        assert_eq!(s.num_pseudometrics(), 2);
        assert!(load_space(None).unwrap().is_scalar());
    }
}
