//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::{check_witness, instance, moves, mutate, rng, Instance, NOTEN};
use mucert::formula::{parse_formula, Closure, Fix, Formula};
use mucert::game::{build_game, GamePosition};
use mucert::gen::{cycle_lts, random_formula, random_game, random_lts, FormulaShape};
use mucert::oracle::{oracle_sem, oracle_solve_game, proponent_strategy_wins, strategy_wins_by_play, OracleError};
use mucert::{
    certify, negation, parse_certificate, parse_lts, sem, serialize_certificate, verify_certificate, Advice,
    Env, Rejection, StateSet,
};

const EXAMPLE_BUDGET: Duration = Duration::from_secs(1);
const PROJECTION_SUITE_BUDGET: Duration = Duration::from_secs(60);
const CERTIFY_BUDGET: Duration = Duration::from_secs(30);
const VERIFY_BUDGET: Duration = Duration::from_secs(5);
const MAX_DOUBLING_RATIO: f64 = 8.0;
const TIMING_REPEATS: usize = 5;

const RANDOM_INSTANCES: usize = 500;
const MUTATION_INSTANCES: usize = 100;
const MUTATIONS_PER_INSTANCE: usize = 10;
const LEMMA1_INSTANCES: usize = 1000;
const GAME_CHARACTERIZATION_INSTANCES: usize = 100;
const DETERMINACY_GAMES: usize = 200;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn example_2() -> Outcome {
    let start = Instant::now();
    let lts = parse_lts(NOTEN).map_err(|e| e.to_string())?;
    let phi = parse_formula("mu X. P | <a> X").map_err(|e| e.to_string())?;
    let eta = Env::new();
    let all = StateSet::full(2);
    ensure(sem(&phi, &eta, &lts).unwrap() == all, || "solve != {0,1}".into())?;
    let sigma = certify(&phi, &eta, &lts).unwrap();
    ensure(sigma.projection(&phi, 2) == all, || "root projection != {0,1}".into())?;
    let c = Closure::new(&phi);
    let [root, disj, p, dia] = [0, 1, 2, 3].map(|i| c.elements()[i].clone());
    let expected = [
        (&root, 0, Advice::Star),
        (&disj, 0, Advice::Right),
        (&dia, 0, Advice::GoTo(1)),
        (&root, 1, Advice::Star),
        (&disj, 1, Advice::Left),
        (&p, 1, Advice::Star),
    ];
    for (f, s, a) in expected {
        ensure(sigma.get(f, s) == Some(a), || format!("({f}, {s}) is {:?}, expected {a:?}", sigma.get(f, s)))?;
    }
    ensure(!sigma.contains(&p, 0), || "entry at (P, 0)".into())?;
    let sigma = parse_certificate(&serialize_certificate(&sigma, &phi), &phi).map_err(|e| e.to_string())?;
    let v = verify_certificate(&lts, &phi, &eta, &sigma, &all);
    ensure(v.is_accepted(), || v.to_string())?;
    let t = start.elapsed();
    ensure(t < EXAMPLE_BUDGET, || format!("took {t:?}"))?;
    Ok(format!("six advice entries match, no entry at (P,0), accepted in {t:?}"))
}

fn mutation_rejection() -> Outcome {
    let lts = parse_lts(NOTEN).unwrap();
    let phi = parse_formula("mu X. P | <a> X").unwrap();
    let eta = Env::new();
    let all = StateSet::full(2);
    let sigma = certify(&phi, &eta, &lts).unwrap();
    let c = Closure::new(&phi);
    let root0 = GamePosition::Product { state: 0, formula: 0 };

    // The move at state 0 that stays in the winning set but never reaches P.
    let mut trap = sigma.clone();
    trap.insert(&c.elements()[3], 0, Advice::GoTo(0));
    let v = verify_certificate(&lts, &phi, &eta, &trap, &all);
    match v.rejection() {
        Some(Rejection::BadCycle(cycle)) if cycle.contains(&root0) => {}
        _ => return Err(format!("diamond flip at state 0: {v}")),
    }
    // Choosing the false disjunct is caught before any cycle analysis.
    let mut left = sigma.clone();
    left.insert(&c.elements()[1], 0, Advice::Left);
    let literal = verify_certificate(&lts, &phi, &eta, &left, &all);
    ensure(!literal.is_accepted(), || "Right->Left flip accepted".into())?;

    let mut r = rng(2);
    let (mut total, mut rejected, mut confirmed, mut played, mut cycles) = (0, 0, 0, 0, 0);
    let mut instances = 0;
    while instances < MUTATION_INSTANCES {
        let inst = instance(&mut r, 4, 4);
        let sigma = certify(&inst.phi, &inst.eta, &inst.lts).unwrap();
        let n = inst.lts.states();
        let claimed = sigma.projection(&inst.phi, n);
        if claimed.is_empty() {
            continue;
        }
        instances += 1;
        let closure = Closure::new(&inst.phi);
        let g = build_game(&inst.lts, &inst.phi, &inst.eta).unwrap();
        let starts: Vec<usize> = claimed.iter().map(|s| s * closure.len()).collect();
        for _ in 0..MUTATIONS_PER_INSTANCE {
            let Some((bad, what)) = mutate(&mut r, &sigma, &closure, n) else {
                return Err("no mutation available".into());
            };
            total += 1;
            let v = verify_certificate(&inst.lts, &inst.phi, &inst.eta, &bad, &claimed);
            match v.rejection() {
                Some(rej) => {
                    rejected += 1;
                    if let Rejection::BadCycle(cycle) = rej {
                        cycles += 1;
                        check_witness(&inst, &bad, cycle).map_err(|e| format!("{what}: invalid witness: {e}"))?;
                    }
                }
                None => {
                    let m = moves(&bad, &inst.phi, n);
                    ensure(proponent_strategy_wins(&g, &m, &starts), || format!("false accept: {what} on {}", inst.phi))?;
                    match strategy_wins_by_play(&g, &m, &starts) {
                        Ok(true) => played += 1,
                        Ok(false) => return Err(format!("false accept by play-out: {what} on {}", inst.phi)),
                        Err(OracleError::GameTooLarge { .. }) => {}
                        Err(e) => return Err(e.to_string()),
                    }
                    confirmed += 1;
                }
            }
        }
    }
    Ok(format!(
        "diamond flip at state 0 gives a bad cycle through (phi,0); the literal Right->Left flip is rejected \
         ({}). {total} mutations on {instances} instances: {rejected} rejected ({cycles} by cycle, witnesses \
         re-checked), {confirmed} re-accepted and confirmed winning ({played} also by exhaustive play-out), 0 false accepts",
        literal.rejection().map(|r| r.to_string()).unwrap_or_default()
    ))
}

fn nesting_depth() -> Outcome {
    let nd = |t: &str| parse_formula(t).unwrap().nd();
    let x = |t: &str| {
        let vars: BTreeSet<String> = ["X".to_string(), "Y".to_string()].into();
        mucert::parse_formula_with_vars(t, &vars).unwrap().nd()
    };
    ensure(x("mu W. Y") == 1, || "nd(mu W. Y)".into())?;
    ensure(x("mu Y. X & mu W. Y") == 2, || "nd(mu Y. X & mu W. Y)".into())?;
    ensure(nd("mu X. mu Y. X & mu W. Y") == 3, || "nd(mu X. mu Y. X & mu W. Y)".into())?;
    let shape = |free| FormulaShape {
        depth: 3,
        actions: &["a", "b"],
        props: &["P", "Q"],
        free,
    };
    let mut r = rng(3);
    for i in 0..LEMMA1_INSTANCES {
        let psi1 = Formula::and(random_formula(&mut r, &shape(&["X", "Z"])), Formula::var("Z"));
        let psi2 = Formula::or(random_formula(&mut r, &shape(&["X", "Y"])), Formula::var("X"));
        let q = |i: usize| if i.is_multiple_of(2) { Fix::Mu } else { Fix::Nu };
        let inner = Formula::fixpoint(q(i), "Y", psi2);
        let phi = Formula::fixpoint(q(i / 2), "X", psi1.substitute("Z", &inner));
        ensure(inner.nd() < phi.nd(), || format!("nd({inner}) >= nd({phi})"))?;
    }
    Ok(format!("1/2/3 exactly; dependent-binder depth decrease on {LEMMA1_INSTANCES} instances"))
}

fn random_instances() -> Vec<Instance> {
    let mut r = rng(4);
    (0..RANDOM_INSTANCES).map(|_| instance(&mut r, 6, 4)).collect()
}

fn domain_projection(instances: &[Instance]) -> Outcome {
    let start = Instant::now();
    for Instance { lts, phi, eta } in instances {
        let sigma = certify(phi, eta, lts).unwrap();
        let want = sem(phi, eta, lts).unwrap();
        let got = sigma.projection(phi, lts.states());
        ensure(got == want, || format!("{phi}: dom {got:?} vs sem {want:?}"))?;
        let v = verify_certificate(lts, phi, eta, &sigma, &want);
        ensure(v.is_accepted(), || format!("{phi}: {v}"))?;
    }
    let t = start.elapsed();
    ensure(t < PROJECTION_SUITE_BUDGET, || format!("took {t:?}"))?;
    Ok(format!("{} instances, 0 mismatches, all certificates accepted, {t:?}", instances.len()))
}

fn oracle_agreement(instances: &[Instance]) -> Outcome {
    for Instance { lts, phi, eta } in instances {
        let a = sem(phi, eta, lts).unwrap();
        let b = oracle_sem(phi, eta, lts).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("{phi}: sem {a:?} vs lattice scan {b:?}"))?;
    }
    let mut r = rng(5);
    let (mut checked, mut tried) = (0, 0);
    while checked < GAME_CHARACTERIZATION_INSTANCES {
        tried += 1;
        let n = rand::Rng::gen_range(&mut r, 1..=3);
        let lts = random_lts(&mut r, n, &["a"], &["P", "Q"], 2);
        let shape = FormulaShape {
            depth: 3,
            actions: &["a"],
            props: &["P", "Q"],
            free: &[],
        };
        let phi = random_formula(&mut r, &shape);
        let m = Closure::new(&phi).len();
        if n * m > 14 {
            continue;
        }
        let g = build_game(&lts, &phi, &Env::new()).unwrap();
        let (w0, w1) = match oracle_solve_game(&g) {
            Ok(w) => w,
            Err(OracleError::GameTooLarge { .. }) => continue,
            Err(e) => return Err(e.to_string()),
        };
        let truth = sem(&phi, &Env::new(), &lts).unwrap();
        for s in 0..n {
            let p = s * m;
            ensure(truth.contains(s) == w0.contains(&p), || format!("{phi} at {s}: sem vs game"))?;
            ensure(w0.contains(&p) != w1.contains(&p), || format!("{phi} at {s}: not determined"))?;
        }
        checked += 1;
    }
    for i in 0..DETERMINACY_GAMES {
        let g = random_game(&mut r, 1 + i % 8, 3, 4);
        let (w0, w1) = oracle_solve_game(&g).map_err(|e| e.to_string())?;
        ensure(w0.is_disjoint(&w1) && w0.len() + w1.len() == g.len(), || format!("game {i} not partitioned"))?;
    }
    Ok(format!(
        "{} lattice-scan agreements; game characterization on {checked} games (of {tried} drawn); \
         determinacy on {DETERMINACY_GAMES} games",
        instances.len()
    ))
}

fn duality(instances: &[Instance]) -> Outcome {
    for Instance { lts, phi, eta } in instances {
        let yes = sem(phi, eta, lts).unwrap();
        let (dual, env) = negation(phi, eta, lts);
        let no = sem(&dual, &env, lts).unwrap();
        for s in 0..lts.states() {
            ensure(yes.contains(s) != no.contains(s), || format!("{phi} at {s}"))?;
        }
    }
    // The command-line route: certify --negative, then verify the dual.
    let dir = std::env::temp_dir().join(format!("mucert-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let (l, f, cert, dual) = (dir.join("t.lts"), dir.join("f.mu"), dir.join("c.cert"), dir.join("d.mu"));
    std::fs::write(&l, NOTEN).unwrap();
    std::fs::write(&f, "nu X. P & [a] X\n").unwrap();
    let bin = env!("CARGO_BIN_EXE_mucert");
    let run = |args: &[&std::ffi::OsStr]| Command::new(bin).args(args).output().map_err(|e| e.to_string());
    let solve = run(&["solve".as_ref(), l.as_os_str(), f.as_os_str()])?;
    ensure(solve.stdout == b"1\n", || "state 0 should be unsatisfied".into())?;
    let o = run(&["certify".as_ref(), l.as_os_str(), f.as_os_str(), "-o".as_ref(), cert.as_os_str(), "--negative".as_ref()])?;
    ensure(o.status.success(), || String::from_utf8_lossy(&o.stderr).into_owned())?;
    let o = run(&["dual".as_ref(), f.as_os_str()])?;
    std::fs::write(&dual, &o.stdout).unwrap();
    let neg = dir.join("c.cert.neg");
    let o = run(&[
        "verify".as_ref(),
        l.as_os_str(),
        dual.as_os_str(),
        neg.as_os_str(),
        "--env".as_ref(),
        "P=0".as_ref(),
        "--claimed".as_ref(),
        "0".as_ref(),
    ])?;
    ensure(o.status.success(), || String::from_utf8_lossy(&o.stdout).into_owned())?;
    Ok(format!(
        "xor holds on {} instances; negative certificate for state 0 of `nu X. P & [a] X` verifies against its dual",
        instances.len()
    ))
}

fn best_of<T>(f: impl Fn() -> T) -> (Duration, T) {
    let mut best = Duration::MAX;
    let mut out = None;
    for _ in 0..TIMING_REPEATS {
        let t = Instant::now();
        let v = f();
        best = best.min(t.elapsed());
        out = Some(v);
    }
    (best, out.expect("at least one repeat"))
}

fn scaling(instances: &[Instance]) -> Outcome {
    for Instance { lts, phi, eta } in instances {
        let sigma = certify(phi, eta, lts).unwrap();
        let bound = lts.states() * Closure::new(phi).len();
        ensure(sigma.len() <= bound, || format!("{phi}: {} entries > {bound}", sigma.len()))?;
    }
    let phi = parse_formula("mu X. P | <a> X").unwrap();
    let eta = Env::new();
    let mut verify_times = Vec::new();
    let mut certify_big = Duration::ZERO;
    for n in [2500, 5000, 10_000] {
        let lts = cycle_lts(n);
        let t = Instant::now();
        let sigma = certify(&phi, &eta, &lts).unwrap();
        let tc = t.elapsed();
        let bound = n * Closure::new(&phi).len();
        ensure(sigma.len() <= bound, || format!("cycle {n}: {} entries > {bound}", sigma.len()))?;
        let all = StateSet::full(n);
        let (tv, v) = best_of(|| verify_certificate(&lts, &phi, &eta, &sigma, &all));
        ensure(v.is_accepted(), || format!("cycle {n}: {v}"))?;
        if n == 10_000 {
            certify_big = tc;
            ensure(tc < CERTIFY_BUDGET, || format!("certify on {n} states took {tc:?}"))?;
            ensure(tv < VERIFY_BUDGET, || format!("verify on {n} states took {tv:?}"))?;
        }
        verify_times.push((n, tv));
    }
    let ratios: Vec<f64> = verify_times
        .windows(2)
        .map(|w| w[1].1.as_secs_f64() / w[0].1.as_secs_f64().max(1e-6))
        .collect();
    for (w, r) in verify_times.windows(2).zip(&ratios) {
        ensure(*r <= MAX_DOUBLING_RATIO, || format!("verify {} -> {}: ratio {r:.2}", w[0].0, w[1].0))?;
    }
    Ok(format!(
        "entry bound holds; 10000-state certify {certify_big:?}; verify {} ; doubling ratios {}",
        verify_times.iter().map(|(n, t)| format!("{n}:{t:?}")).collect::<Vec<_>>().join(" "),
        ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(", ")
    ))
}

fn main() -> ExitCode {
    let instances = random_instances();
    let criteria: Vec<Criterion> = vec![
        ("1 example end-to-end", Box::new(example_2)),
        ("2 mutation rejection", Box::new(mutation_rejection)),
        ("3 nesting depth", Box::new(nesting_depth)),
        ("4 domain projection", Box::new(|| domain_projection(&instances))),
        ("5 oracle agreement", Box::new(|| oracle_agreement(&instances))),
        ("6 duality", Box::new(|| duality(&instances))),
        ("7 scaling smoke", Box::new(|| scaling(&instances))),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        match check() {
            Ok(detail) => println!("criterion {name}: PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {name}: FAIL ({why})");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
