//! The `mucert` command line.
//!
//! Exit codes: 0 on success or acceptance, 1 when a verification rejects,
//! 2 on any input error (parse, totality, unbound identifier).

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::checker::{parse_partition, verify_certificate, Rejection, Verdict};
use crate::formula::{parse_formula, parse_formula_with_vars, Closure, Formula, Name};
use crate::game::{build_game, export_pgsolver, label_product, parse_pgsolver, GamePosition};
use crate::lts::{parse_lts, Lts};
use crate::semantics::{negation, sem, Env};
use crate::states::StateSet;
use crate::strategy::{certify, parse_certificate, serialize_certificate};

#[derive(Parser, Debug)]
#[command(name = "mucert", version, about = "Certifying model checker for the modal mu-calculus")]
pub struct RunConfig {
    /// Print timings and sizes to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Instance {
    /// LTS file.
    pub lts: PathBuf,
    /// Formula file.
    pub formula: PathBuf,
    /// Interpretation of a free variable, e.g. `X=0,3,7` (`X=` for the empty set).
    #[arg(long = "env", value_name = "NAME=STATES")]
    pub env: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the states satisfying the formula, one per line.
    Solve(Instance),
    /// Write a certificate for the satisfying states.
    Certify {
        #[command(flatten)]
        instance: Instance,
        /// Certificate output path.
        #[arg(short, long)]
        output: PathBuf,
        /// Also certify the non-satisfying states, written to `<output>.neg`:
        /// a certificate for the dual formula in which every proposition and
        /// free variable stands for its complement. Check it with `verify`
        /// on the dual formula, declaring each complement with `--env`.
        #[arg(long)]
        negative: bool,
    },
    /// Check a certificate against the instance.
    Verify {
        #[command(flatten)]
        instance: Instance,
        /// Certificate file.
        certificate: PathBuf,
        /// States the certificate must cover: a list such as `0,2`, `all`,
        /// or `auto` for the states recorded at the root.
        #[arg(long)]
        claimed: String,
    },
    /// Export the parity game in PGSolver format.
    Game {
        #[command(flatten)]
        instance: Instance,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check a claimed solution of a PGSolver game.
    PgVerify {
        game: PathBuf,
        partition: PathBuf,
    },
    /// Print the dual of a formula.
    Dual { formula: PathBuf },
}

/// Failure of a command: a rejection verdict (exit 1) or bad input (exit 2).
enum Failure {
    Rejected,
    Input(String),
}

type Outcome = Result<(), Failure>;

fn input(msg: impl Into<String>) -> Failure {
    Failure::Input(msg.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn parse_states(text: &str, n: usize, what: &str) -> Result<StateSet, String> {
    let mut out = StateSet::empty(n);
    for w in text.split(',').map(str::trim).filter(|w| !w.is_empty()) {
        let s: usize = w
            .parse()
            .map_err(|_| format!("{what}: invalid state `{w}`"))?;
        if s >= n {
            return Err(format!("{what}: state {s} out of range (system has {n} states)"));
        }
        out.insert(s);
    }
    Ok(out)
}

struct Loaded {
    lts: Lts,
    phi: Formula,
    eta: Env,
}

fn load(inst: &Instance) -> Result<Loaded, Failure> {
    let lts = parse_lts(&read(&inst.lts)?)
        .map_err(|e| input(format!("{}:{}: {}", inst.lts.display(), e.line, e.message)))?;
    let n = lts.states();
    let mut eta = Env::new();
    for decl in &inst.env {
        let (name, states) = decl
            .split_once('=')
            .ok_or_else(|| input(format!("--env {decl}: expected NAME=STATES")))?;
        let set = parse_states(states, n, &format!("--env {name}")).map_err(input)?;
        eta = eta.with(name.trim(), set);
    }
    let declared: BTreeSet<String> = eta.iter().map(|(x, _)| x.to_string()).collect();
    let phi = parse_formula_with_vars(&read(&inst.formula)?, &declared).map_err(|e| {
        input(format!(
            "{}:{}:{}: {}",
            inst.formula.display(),
            e.line,
            e.column,
            e.message
        ))
    })?;
    let known: BTreeSet<&Name> = lts.propositions().collect();
    if let Some(p) = phi.props().iter().find(|p| !known.contains(p)) {
        return Err(input(format!(
            "{}: unknown identifier `{p}`: not a proposition of {} and not declared with --env",
            inst.formula.display(),
            inst.lts.display()
        )));
    }
    eta.check(&phi, &lts)
        .and_then(|()| lts.validate_total(&phi.actions()))
        .map_err(|e| input(format!("{}: {e}", inst.formula.display())))?;
    Ok(Loaded { lts, phi, eta })
}

fn print_states(out: &mut dyn Write, set: &StateSet) -> std::io::Result<()> {
    for s in set.iter() {
        writeln!(out, "{s}")?;
    }
    Ok(())
}

fn describe(pos: &GamePosition, closure: Option<&Closure>) -> String {
    match (pos, closure) {
        (GamePosition::Product { state, formula }, Some(c)) => {
            format!("state {state}, #{formula} {}", c.elements()[*formula])
        }
        _ => pos.to_string(),
    }
}

fn report(out: &mut dyn Write, verdict: &Verdict, closure: Option<&Closure>) -> Outcome {
    let io = |e: std::io::Error| input(format!("stdout: {e}"));
    writeln!(out, "{verdict}").map_err(io)?;
    match verdict.rejection() {
        None => Ok(()),
        Some(r) => {
            let positions: Vec<&GamePosition> = match r {
                Rejection::BadCycle(c) => c.iter().collect(),
                Rejection::DomainGap(p) => vec![p],
                Rejection::LocalViolation { position, .. } => vec![position],
                _ => vec![],
            };
            for p in positions {
                writeln!(out, "  {}", describe(p, closure)).map_err(io)?;
            }
            Err(Failure::Rejected)
        }
    }
}

fn run_command(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let start = Instant::now();
    let io = |e: std::io::Error| input(format!("stdout: {e}"));
    let mut note = |msg: String| {
        if cfg.verbose > 0 {
            let _ = writeln!(err, "[{:>8.3}s] {msg}", start.elapsed().as_secs_f64());
        }
    };
    match &cfg.command {
        Command::Solve(inst) => {
            let l = load(inst)?;
            let set = sem(&l.phi, &l.eta, &l.lts).map_err(|e| input(e.to_string()))?;
            note(format!("{} of {} states satisfy the formula", set.count(), l.lts.states()));
            print_states(out, &set).map_err(io)
        }
        Command::Certify {
            instance,
            output,
            negative,
        } => {
            let l = load(instance)?;
            let sigma = certify(&l.phi, &l.eta, &l.lts).map_err(|e| input(e.to_string()))?;
            note(format!("certificate with {} entries", sigma.len()));
            write_file(output, &serialize_certificate(&sigma, &l.phi))?;
            if *negative {
                let (dual, env) = negation(&l.phi, &l.eta, &l.lts);
                let sigma = certify(&dual, &env, &l.lts).map_err(|e| input(e.to_string()))?;
                note(format!("dual certificate with {} entries", sigma.len()));
                let mut neg = output.clone().into_os_string();
                neg.push(".neg");
                write_file(Path::new(&neg), &serialize_certificate(&sigma, &dual))?;
            }
            Ok(())
        }
        Command::Verify {
            instance,
            certificate,
            claimed,
        } => {
            let l = load(instance)?;
            let n = l.lts.states();
            let sigma = parse_certificate(&read(certificate)?, &l.phi).map_err(|e| {
                input(format!("{}:{}: {}", certificate.display(), e.line, e.message))
            })?;
            let claimed = match claimed.as_str() {
                "all" => StateSet::full(n),
                "auto" => sigma.projection(&l.phi, n),
                list => parse_states(list, n, "--claimed").map_err(input)?,
            };
            note(format!("checking {} entries for {} claimed states", sigma.len(), claimed.count()));
            let verdict = verify_certificate(&l.lts, &l.phi, &l.eta, &sigma, &claimed);
            note("checked".into());
            report(out, &verdict, Some(&Closure::new(&l.phi)))
        }
        Command::Game { instance, output } => {
            let l = load(instance)?;
            let mut g = build_game(&l.lts, &l.phi, &l.eta).map_err(|e| input(e.to_string()))?;
            label_product(&mut g, &Closure::new(&l.phi));
            note(format!("{} positions, {} edges", g.len(), g.edge_count()));
            write_file(output, &export_pgsolver(&g))
        }
        Command::PgVerify { game, partition } => {
            let g = parse_pgsolver(&read(game)?)
                .map_err(|e| input(format!("{}:{}: {}", game.display(), e.line, e.message)))?;
            let p = parse_partition(&read(partition)?, &g)
                .map_err(|e| input(format!("{}:{}: {}", partition.display(), e.line, e.message)))?;
            report(out, &p.verify(&g), None)
        }
        Command::Dual { formula } => {
            let phi = parse_formula(&read(formula)?).map_err(|e| {
                input(format!("{}:{}:{}: {}", formula.display(), e.line, e.column, e.message))
            })?;
            writeln!(out, "{}", phi.dual()).map_err(io)
        }
    }
}

/// Runs the command line on `args` (including the program name) and returns
/// the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(cfg) => cfg,
        Err(e) if e.use_stderr() => {
            let _ = write!(err, "{e}");
            return 2;
        }
        Err(e) => {
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match run_command(&cfg, out, err) {
        Ok(()) => 0,
        Err(Failure::Rejected) => 1,
        Err(Failure::Input(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}
