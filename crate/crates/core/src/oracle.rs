//! Brute-force reference implementations for desk-scale cross-checking.
//!
//! These use different algorithms from the main path on purpose: semantics
//! by scanning the whole powerset lattice, games by enumerating positional
//! strategies. Everything is bitmask arithmetic over at most 64 elements and
//! guarded by hard size limits.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::formula::{Fix, Formula, Kind, Name};
use crate::game::{ParityGame, Player};
use crate::lts::Lts;
use crate::semantics::Env;
use crate::states::StateSet;

pub const MAX_ORACLE_STATES: usize = 12;
pub const MAX_ORACLE_POSITIONS: usize = 14;
pub const MAX_STRATEGY_COMBINATIONS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{0} states exceed the oracle limit of {MAX_ORACLE_STATES}")]
    TooManyStates(usize),
    #[error("game with {positions} positions and {combinations} strategy combinations is too large")]
    GameTooLarge { positions: usize, combinations: u64 },
    #[error("unbound variable {0}")]
    Unbound(Name),
}

struct Lattice<'a> {
    n: usize,
    lts: &'a Lts,
    succ: HashMap<Name, Vec<u64>>,
}

impl Lattice<'_> {
    fn full(&self) -> u64 {
        (1u64 << self.n) - 1
    }

    fn succ_masks(&mut self, a: &Name) -> &[u64] {
        let (n, lts) = (self.n, self.lts);
        self.succ.entry(a.clone()).or_insert_with(|| {
            (0..n)
                .map(|s| lts.successors(a, s).iter().fold(0, |m, &t| m | 1 << t))
                .collect()
        })
    }

    fn eval(&mut self, phi: &Formula, env: &HashMap<Name, u64>) -> u64 {
        match phi.kind() {
            Kind::Prop(p) => (0..self.n)
                .filter(|&s| self.lts.holds(p, s))
                .fold(0, |m, s| m | 1 << s),
            Kind::Var(x) => env[x],
            Kind::And(l, r) => self.eval(l, env) & self.eval(r, env),
            Kind::Or(l, r) => self.eval(l, env) | self.eval(r, env),
            Kind::Diamond(a, b) => {
                let u = self.eval(b, env);
                self.succ_masks(a)
                    .iter()
                    .enumerate()
                    .filter(|(_, &m)| m & u != 0)
                    .fold(0, |acc, (s, _)| acc | 1 << s)
            }
            Kind::Box(a, b) => {
                let u = self.eval(b, env);
                self.succ_masks(a)
                    .iter()
                    .enumerate()
                    .filter(|(_, &m)| m & !u == 0)
                    .fold(0, |acc, (s, _)| acc | 1 << s)
            }
            Kind::Fix(q, x, b) => {
                // Knaster-Tarski: meet of pre-fixpoints, join of post-fixpoints.
                let mut result = match q {
                    Fix::Mu => self.full(),
                    Fix::Nu => 0,
                };
                let mut env = env.clone();
                for u in 0..=self.full() {
                    env.insert(x.clone(), u);
                    let fu = self.eval(b, &env);
                    match q {
                        Fix::Mu if fu & !u == 0 => result &= u,
                        Fix::Nu if u & !fu == 0 => result |= u,
                        _ => {}
                    }
                }
                result
            }
        }
    }
}

/// `[[phi]]eta` by powerset scan, for at most [`MAX_ORACLE_STATES`] states.
pub fn oracle_sem(phi: &Formula, eta: &Env, lts: &Lts) -> Result<StateSet, OracleError> {
    let n = lts.states();
    if n > MAX_ORACLE_STATES {
        return Err(OracleError::TooManyStates(n));
    }
    if let Some(x) = phi.free_vars().into_iter().find(|x| !eta.contains(x)) {
        return Err(OracleError::Unbound(x));
    }
    let env = eta
        .iter()
        .map(|(x, u)| (x.clone(), u.iter().filter(|&s| s < n).fold(0, |m, s| m | 1 << s)))
        .collect();
    let mut lat = Lattice {
        n,
        lts,
        succ: HashMap::new(),
    };
    let mask = lat.eval(phi, &env);
    Ok(StateSet::from_states(n, (0..n).filter(|s| mask >> s & 1 == 1)))
}

/// The play from a position under two positional strategies: a finite stem
/// followed by a cycle repeated forever.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlayOutcome {
    pub stem: Vec<usize>,
    pub cycle: Vec<usize>,
    pub winner: Player,
}

/// `play(start, sigma0, sigma1)`. `sigma_i[p]` is the move at `p` when `p`
/// belongs to player `i`; entries at the other player's positions are
/// ignored.
pub fn play(g: &ParityGame, sigma0: &[usize], sigma1: &[usize], start: usize) -> PlayOutcome {
    let next = |p: usize| {
        let q = match g.owner(p) {
            Player::Proponent => sigma0[p],
            Player::Opponent => sigma1[p],
        };
        assert!(g.successors(p).contains(&(q as u32)), "illegal move {p} -> {q}");
        q
    };
    let mut seen = vec![usize::MAX; g.len()];
    let mut path = Vec::new();
    let mut p = start;
    while seen[p] == usize::MAX {
        seen[p] = path.len();
        path.push(p);
        p = next(p);
    }
    let cycle = path.split_off(seen[p]);
    let top = cycle.iter().map(|&q| g.priority(q)).max().expect("nonempty cycle");
    PlayOutcome {
        stem: path,
        cycle,
        winner: Player::of_priority(top),
    }
}

/// Winner of every position when both players are fixed, as a bitmask of
/// player-0 wins.
fn outcome_mask(g: &ParityGame, next: &[usize]) -> u64 {
    const UNKNOWN: u8 = 2;
    const ON_PATH: u8 = 3;
    let mut win = vec![UNKNOWN; g.len()];
    let mut path = Vec::new();
    for start in 0..g.len() {
        let mut p = start;
        while win[p] == UNKNOWN {
            win[p] = ON_PATH;
            path.push(p);
            p = next[p];
        }
        let w = if win[p] == ON_PATH {
            let from = path.iter().position(|&q| q == p).expect("on path");
            let top = path[from..].iter().map(|&q| g.priority(q)).max().expect("cycle");
            Player::of_priority(top).index() as u8
        } else {
            win[p]
        };
        for q in path.drain(..) {
            win[q] = w;
        }
    }
    win.iter()
        .enumerate()
        .filter(|(_, &w)| w == 0)
        .fold(0, |m, (p, _)| m | 1 << p)
}

/// Mixed-radix enumeration of the positional strategies of one player.
struct Choices {
    positions: Vec<usize>,
    digits: Vec<usize>,
}

impl Choices {
    fn new(g: &ParityGame, player: Player) -> Choices {
        let positions: Vec<usize> = (0..g.len()).filter(|&p| g.owner(p) == player).collect();
        Choices {
            digits: vec![0; positions.len()],
            positions,
        }
    }

    fn apply(&self, g: &ParityGame, next: &mut [usize]) {
        for (&p, &d) in self.positions.iter().zip(&self.digits) {
            next[p] = g.successors(p)[d] as usize;
        }
    }

    fn advance(&mut self, g: &ParityGame) -> bool {
        for (i, &p) in self.positions.iter().enumerate() {
            self.digits[i] += 1;
            if self.digits[i] < g.successors(p).len() {
                return true;
            }
            self.digits[i] = 0;
        }
        false
    }
}

fn combinations(g: &ParityGame) -> u64 {
    (0..g.len()).fold(1u64, |acc, p| acc.saturating_mul(g.successors(p).len() as u64))
}

/// Winning regions by exhaustive enumeration:
/// `w_i = {p | ∃σ_i ∀σ_{1-i}: play(p, σ0, σ1) is won by i}`.
///
/// Each region is computed separately, so that their forming a partition is
/// a checkable consequence rather than a construction.
pub fn oracle_solve_game(g: &ParityGame) -> Result<(BTreeSet<usize>, BTreeSet<usize>), OracleError> {
    let combos = combinations(g);
    if g.len() > MAX_ORACLE_POSITIONS || combos > MAX_STRATEGY_COMBINATIONS {
        return Err(OracleError::GameTooLarge {
            positions: g.len(),
            combinations: combos,
        });
    }
    let all = (1u64 << g.len()) - 1;
    let mut regions = [0u64; 2];
    for me in [Player::Proponent, Player::Opponent] {
        let mut next = vec![0; g.len()];
        let mut mine = Choices::new(g, me);
        loop {
            mine.apply(g, &mut next);
            let mut forced = all;
            let mut theirs = Choices::new(g, me.other());
            loop {
                theirs.apply(g, &mut next);
                let wins0 = outcome_mask(g, &next);
                forced &= if me == Player::Proponent { wins0 } else { all & !wins0 };
                if forced == 0 || !theirs.advance(g) {
                    break;
                }
            }
            regions[me.index()] |= forced;
            if !mine.advance(g) {
                break;
            }
        }
    }
    let set = |m: u64| (0..g.len()).filter(|p| m >> p & 1 == 1).collect();
    Ok((set(regions[0]), set(regions[1])))
}

/// Positions reachable from `starts` when proponent positions in `moves`
/// keep only that move.
fn reachable(g: &ParityGame, moves: &BTreeMap<usize, usize>, starts: &[usize]) -> Vec<bool> {
    let mut seen = vec![false; g.len()];
    let mut stack: Vec<usize> = starts.to_vec();
    while let Some(p) = stack.pop() {
        if std::mem::replace(&mut seen[p], true) {
            continue;
        }
        match moves.get(&p) {
            Some(&q) if g.owner(p) == Player::Proponent => stack.push(q),
            _ => stack.extend(g.successors(p).iter().map(|&q| q as usize)),
        }
    }
    seen
}

/// Whether the proponent, moving as `moves` says wherever it has an entry,
/// wins from every start against every opponent. Proponent positions without
/// an entry are treated as adversarial.
///
/// Decided naively: the opponent can win iff some reachable odd-priority
/// position lies on a cycle through positions of no larger priority.
pub fn proponent_strategy_wins(
    g: &ParityGame,
    moves: &BTreeMap<usize, usize>,
    starts: &[usize],
) -> bool {
    let live = reachable(g, moves, starts);
    let step = |p: usize| -> Vec<usize> {
        match moves.get(&p) {
            Some(&q) if g.owner(p) == Player::Proponent => vec![q],
            _ => g.successors(p).iter().map(|&q| q as usize).collect(),
        }
    };
    for v in (0..g.len()).filter(|&v| live[v] && g.priority(v) % 2 == 1) {
        let cap = g.priority(v);
        let mut seen = vec![false; g.len()];
        let mut stack = step(v);
        while let Some(p) = stack.pop() {
            if g.priority(p) > cap || std::mem::replace(&mut seen[p], true) {
                continue;
            }
            if p == v {
                return false;
            }
            stack.extend(step(p));
        }
    }
    true
}

/// As [`proponent_strategy_wins`], but by playing out every positional
/// opponent strategy over the reachable opponent positions. Proponent
/// positions without an entry take their first successor.
pub fn strategy_wins_by_play(
    g: &ParityGame,
    moves: &BTreeMap<usize, usize>,
    starts: &[usize],
) -> Result<bool, OracleError> {
    let live = reachable(g, moves, starts);
    let mut free: Vec<usize> = Vec::new();
    let mut combos = 1u64;
    let mut next: Vec<usize> = (0..g.len()).map(|p| g.successors(p)[0] as usize).collect();
    for p in 0..g.len() {
        match (g.owner(p), moves.get(&p)) {
            (Player::Proponent, Some(&q)) => next[p] = q,
            (Player::Proponent, None) => {}
            (Player::Opponent, _) if live[p] => {
                free.push(p);
                combos = combos.saturating_mul(g.successors(p).len() as u64);
            }
            (Player::Opponent, _) => {}
        }
    }
    if combos > MAX_STRATEGY_COMBINATIONS {
        return Err(OracleError::GameTooLarge {
            positions: g.len(),
            combinations: combos,
        });
    }
    let sigma0: Vec<usize> = next.clone();
    let mut digits = vec![0usize; free.len()];
    loop {
        for (&p, &d) in free.iter().zip(&digits) {
            next[p] = g.successors(p)[d] as usize;
        }
        if starts
            .iter()
            .any(|&s| play(g, &sigma0, &next, s).winner != Player::Proponent)
        {
            return Ok(false);
        }
        let mut carried = true;
        for (i, &p) in free.iter().enumerate() {
            digits[i] += 1;
            if digits[i] < g.successors(p).len() {
                carried = false;
                break;
            }
            digits[i] = 0;
        }
        if carried {
            return Ok(true);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::game::build_game;
    use crate::lts::parse_lts;

    const NOTEN: &str = "states 2\nprop 1 P\ntrans 0 a 0\ntrans 0 a 1\ntrans 1 a 1\n";

    #[test]
    fn example_semantics() {
        let l = parse_lts(NOTEN).unwrap();
        let phi = parse_formula("mu X. P | <a> X").unwrap();
        assert_eq!(oracle_sem(&phi, &Env::new(), &l).unwrap(), StateSet::full(2));
        let u = StateSet::from_states(2, [1]);
        let env = Env::new().with("X", u.clone());
        assert_eq!(oracle_sem(&Formula::var("X"), &env, &l).unwrap(), u);
        assert!(oracle_sem(&Formula::var("Y"), &env, &l).is_err());
    }

    #[test]
    fn self_loops() {
        for (prio, winner) in [(0, Player::Proponent), (1, Player::Opponent)] {
            let g = ParityGame::new(vec![Player::Proponent], vec![prio], vec![vec![0]]).unwrap();
            let out = play(&g, &[0], &[0], 0);
            assert_eq!(out.winner, winner);
            assert_eq!(out.cycle, vec![0]);
            assert!(out.stem.is_empty());
        }
        let g = ParityGame::new(vec![Player::Proponent], vec![0], vec![vec![0]]).unwrap();
        assert_eq!(oracle_solve_game(&g).unwrap(), ([0].into(), BTreeSet::new()));
    }

    #[test]
    fn example_game_regions() {
        let l = parse_lts(NOTEN).unwrap();
        let phi = parse_formula("mu X. P | <a> X").unwrap();
        let g = build_game(&l, &phi, &Env::new()).unwrap();
        let (w0, w1) = oracle_solve_game(&g).unwrap();
        let p0 = g.product_index(0, 2).unwrap();
        assert_eq!(w1, [p0].into());
        assert_eq!(w0.len(), 7);
        // The worked strategy: Right at (disj, 0), -> 1 at the diamonds, Left at (disj, 1).
        let at = |s, c| g.product_index(s, c).unwrap();
        let mut sigma0: Vec<usize> = (0..8).map(|p| g.successors(p)[0] as usize).collect();
        sigma0[at(0, 1)] = at(0, 3);
        sigma0[at(0, 3)] = at(1, 0);
        sigma0[at(1, 1)] = at(1, 2);
        sigma0[at(1, 3)] = at(1, 0);
        let out = play(&g, &sigma0, &sigma0, at(0, 0));
        assert_eq!(out.winner, Player::Proponent);
        assert_eq!(out.cycle, vec![at(1, 2)]);
        let moves: BTreeMap<usize, usize> = [(at(0, 1), at(0, 3)), (at(0, 3), at(1, 0)), (at(1, 1), at(1, 2))].into();
        assert!(proponent_strategy_wins(&g, &moves, &[at(0, 0), at(1, 0)]));
        assert_eq!(strategy_wins_by_play(&g, &moves, &[at(0, 0)]), Ok(true));
        let trap: BTreeMap<usize, usize> = [(at(0, 1), at(0, 3)), (at(0, 3), at(0, 0))].into();
        assert!(!proponent_strategy_wins(&g, &trap, &[at(0, 0)]));
        assert_eq!(strategy_wins_by_play(&g, &trap, &[at(0, 0)]), Ok(false));
    }

    #[test]
    fn size_guards() {
        let l = crate::lts::LtsBuilder::new(13).build();
        assert_eq!(
            oracle_sem(&Formula::prop("P"), &Env::new(), &l),
            Err(OracleError::TooManyStates(13))
        );
        let n = 15;
        let g = ParityGame::new(
            vec![Player::Proponent; n],
            vec![0; n],
            (0..n).map(|p| vec![p]).collect(),
        )
        .unwrap();
        assert!(oracle_solve_game(&g).is_err());
    }
}
