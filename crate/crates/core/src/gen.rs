//! Random instances for property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::formula::{Fix, Formula, Name};
use crate::game::{ParityGame, Player};
use crate::lts::{Lts, LtsBuilder};
use crate::semantics::Env;
use crate::states::StateSet;

/// An LTS in which every state has between 1 and `max_out` successors for
/// each action, and each proposition holds with probability 1/2.
pub fn random_lts<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    actions: &[&str],
    props: &[&str],
    max_out: usize,
) -> Lts {
    let mut b = LtsBuilder::new(n);
    for s in 0..n {
        for a in actions {
            for _ in 0..rng.gen_range(1..=max_out.max(1)) {
                b.edge(s, a, rng.gen_range(0..n));
            }
        }
        for p in props {
            if rng.gen_bool(0.5) {
                b.prop(s, p);
            }
        }
    }
    b.build()
}

/// Shape parameters for [`random_formula`].
#[derive(Clone, Debug)]
pub struct FormulaShape<'a> {
    pub depth: usize,
    pub actions: &'a [&'a str],
    pub props: &'a [&'a str],
    /// Variables that may occur free.
    pub free: &'a [&'a str],
}

/// A formula whose syntax tree has height at most `shape.depth`. Binders are
/// named `X0`, `X1`, ... in order of creation, so no two binders share a
/// name.
pub fn random_formula<R: Rng + ?Sized>(rng: &mut R, shape: &FormulaShape<'_>) -> Formula {
    let mut bound = Vec::new();
    let mut fresh = 0;
    build(rng, shape, shape.depth, &mut bound, &mut fresh)
}

fn build<R: Rng + ?Sized>(
    rng: &mut R,
    shape: &FormulaShape<'_>,
    depth: usize,
    bound: &mut Vec<Name>,
    fresh: &mut usize,
) -> Formula {
    if depth == 0 || rng.gen_bool(0.2) {
        let vars = bound.len() + shape.free.len();
        let pick = rng.gen_range(0..shape.props.len() + vars);
        return if pick < shape.props.len() {
            Formula::prop(shape.props[pick])
        } else if pick - shape.props.len() < bound.len() {
            Formula::var(&bound[pick - shape.props.len()])
        } else {
            Formula::var(shape.free[pick - shape.props.len() - bound.len()])
        };
    }
    let a = *shape.actions.choose(rng).expect("at least one action");
    match rng.gen_range(0..6) {
        0 => Formula::and(
            build(rng, shape, depth - 1, bound, fresh),
            build(rng, shape, depth - 1, bound, fresh),
        ),
        1 => Formula::or(
            build(rng, shape, depth - 1, bound, fresh),
            build(rng, shape, depth - 1, bound, fresh),
        ),
        2 => Formula::diamond(a, build(rng, shape, depth - 1, bound, fresh)),
        3 => Formula::boxed(a, build(rng, shape, depth - 1, bound, fresh)),
        k => {
            let x: Name = format!("X{fresh}").into();
            *fresh += 1;
            bound.push(x.clone());
            let body = build(rng, shape, depth - 1, bound, fresh);
            bound.pop();
            let q = if k == 4 { Fix::Mu } else { Fix::Nu };
            Formula::fixpoint(q, &x, body)
        }
    }
}

/// An environment assigning a uniformly random subset of `0..n` to each name.
pub fn random_env<R: Rng + ?Sized>(rng: &mut R, n: usize, vars: &[&str]) -> Env {
    vars.iter()
        .map(|&x| {
            let set = StateSet::from_states(n, (0..n).filter(|_| rng.gen_bool(0.5)));
            (Name::from(x), set)
        })
        .collect()
}

/// A game with random owners, priorities in `0..=max_priority`, and between
/// 1 and `max_out` successors per position.
pub fn random_game<R: Rng + ?Sized>(
    rng: &mut R,
    positions: usize,
    max_out: usize,
    max_priority: u32,
) -> ParityGame {
    let owners = (0..positions)
        .map(|_| if rng.gen_bool(0.5) { Player::Proponent } else { Player::Opponent })
        .collect();
    let priorities = (0..positions).map(|_| rng.gen_range(0..=max_priority)).collect();
    let succ = (0..positions)
        .map(|_| {
            (0..rng.gen_range(1..=max_out.max(1)))
                .map(|_| rng.gen_range(0..positions))
                .collect()
        })
        .collect();
    ParityGame::new(owners, priorities, succ).expect("nonempty successor lists")
}

/// The cycle `0 -a-> 1 -a-> ... -a-> n-1 -a-> 0` with `P` true at state 0.
pub fn cycle_lts(n: usize) -> Lts {
    let mut b = LtsBuilder::new(n);
    for s in 0..n {
        b.edge(s, "a", (s + 1) % n);
    }
    b.prop(0, "P");
    b.build()
}
