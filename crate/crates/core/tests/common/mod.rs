#![allow(dead_code)]

use std::collections::BTreeMap;

use mucert::formula::{Closure, Formula, Kind};
use mucert::game::{build_game, GamePosition};
use mucert::gen::{random_env, random_formula, random_lts, FormulaShape};
use mucert::{Advice, Env, Lts, PartialStrategy};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const NOTEN: &str = "states 2\nprop 1 P\ntrans 0 a 0\ntrans 0 a 1\ntrans 1 a 1\n";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct Instance {
    pub lts: Lts,
    pub phi: Formula,
    pub eta: Env,
}

/// Up to `max_states` states, formula height up to `depth`, one or two
/// actions, propositions `P`/`Q`, and a free variable `Z` half of the time.
pub fn instance<R: Rng>(rng: &mut R, max_states: usize, depth: usize) -> Instance {
    let n = rng.gen_range(1..=max_states);
    let actions: &[&str] = if rng.gen_bool(0.5) { &["a"] } else { &["a", "b"] };
    let props: &[&str] = if rng.gen_bool(0.5) { &["P"] } else { &["P", "Q"] };
    let free: &[&str] = if rng.gen_bool(0.5) { &[] } else { &["Z"] };
    let lts = random_lts(rng, n, actions, props, 2);
    let shape = FormulaShape {
        depth: rng.gen_range(1..=depth),
        actions,
        props,
        free,
    };
    let phi = random_formula(rng, &shape);
    let eta = random_env(rng, n, free);
    Instance { lts, phi, eta }
}

/// Index of a position of the game built for `closure`.
pub fn index(pos: &GamePosition, m: usize) -> usize {
    match *pos {
        GamePosition::Product { state, formula } => state * m + formula,
        GamePosition::Node(id) => id as usize,
    }
}

/// Re-checks a bad-cycle witness from scratch: consecutive positions are
/// edges of the game allowed by the advice, and the largest priority is odd.
pub fn check_witness(inst: &Instance, sigma: &PartialStrategy, cycle: &[GamePosition]) -> Result<(), String> {
    let closure = Closure::new(&inst.phi);
    let m = closure.len();
    let g = build_game(&inst.lts, &inst.phi, &inst.eta).map_err(|e| e.to_string())?;
    if cycle.is_empty() {
        return Err("empty cycle".into());
    }
    for (i, p) in cycle.iter().enumerate() {
        let (from, to) = (index(p, m), index(&cycle[(i + 1) % cycle.len()], m));
        if !g.successors(from).contains(&(to as u32)) {
            return Err(format!("{p} -> {} is not a move", cycle[(i + 1) % cycle.len()]));
        }
        let (s, c) = (from / m, from % m);
        let f = &closure.elements()[c];
        let advised = match (f.kind(), sigma.get(f, s)) {
            (Kind::Or(..), Some(Advice::Left)) => Some(s * m + closure.children(c)[0]),
            (Kind::Or(..), Some(Advice::Right)) => Some(s * m + closure.children(c)[1]),
            (Kind::Diamond(..), Some(Advice::GoTo(t))) => Some(t as usize * m + closure.children(c)[0]),
            (_, None) => return Err(format!("{p} is outside the domain")),
            _ => None,
        };
        if advised.is_some_and(|q| q != to) {
            return Err(format!("{p} does not follow its advice"));
        }
    }
    let top = cycle.iter().map(|p| g.priority(index(p, m))).max().unwrap_or(0);
    if top % 2 == 0 {
        return Err(format!("largest priority {top} is even"));
    }
    Ok(())
}

/// A single-entry change of `sigma` that keeps every advice kind legal for
/// its formula: re-pointing an existing choice, deleting an entry, or adding
/// one at a position outside the domain. `None` if no change is possible.
pub fn mutate<R: Rng>(
    rng: &mut R,
    sigma: &PartialStrategy,
    closure: &Closure,
    n: usize,
) -> Option<(PartialStrategy, String)> {
    let entries: Vec<(Formula, usize, Advice)> = sigma
        .entries()
        .filter(|(f, s, _)| closure.index_of(f).is_some() && *s < n)
        .map(|(f, s, a)| (f.clone(), s, a))
        .collect();
    let outside: Vec<(Formula, usize)> = closure
        .elements()
        .iter()
        .flat_map(|f| (0..n).map(move |s| (f.clone(), s)))
        .filter(|(f, s)| !sigma.contains(f, *s))
        .collect();
    let fresh = |rng: &mut R, f: &Formula| match f.kind() {
        Kind::Or(..) => *[Advice::Left, Advice::Right].choose(rng).expect("two"),
        Kind::Diamond(..) => Advice::GoTo(rng.gen_range(0..n) as u32),
        _ => Advice::Star,
    };
    for _ in 0..32 {
        let mut out = sigma.clone();
        match rng.gen_range(0..3) {
            0 if !entries.is_empty() => {
                let (f, s, a) = entries.choose(rng).expect("nonempty").clone();
                let b = fresh(rng, &f);
                if b == a {
                    continue;
                }
                out.insert(&f, s, b);
                return Some((out, format!("({f}, {s}): {a:?} -> {b:?}")));
            }
            1 if !entries.is_empty() => {
                let (f, s, a) = entries.choose(rng).expect("nonempty").clone();
                out.remove(&f, s);
                return Some((out, format!("({f}, {s}): delete {a:?}")));
            }
            2 if !outside.is_empty() => {
                let (f, s) = outside.choose(rng).expect("nonempty").clone();
                let b = fresh(rng, &f);
                out.insert(&f, s, b);
                return Some((out, format!("({f}, {s}): add {b:?}")));
            }
            _ => {}
        }
    }
    None
}

/// Proponent moves chosen by `sigma`, by game index.
pub fn moves(sigma: &PartialStrategy, phi: &Formula, n: usize) -> BTreeMap<usize, usize> {
    mucert::strategy::induced_moves(sigma, &Closure::new(phi), n)
}
