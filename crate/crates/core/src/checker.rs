//! Independent certificate checking.
//!
//! Nothing computed by the fixpoint iteration is trusted here: the game is
//! rebuilt from the instance, the advice is checked locally position by
//! position, and the remaining global condition (no reachable cycle whose
//! largest priority is odd) is decided by repeated SCC decomposition.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::exec::Exec;
use crate::formula::{Closure, Formula, Kind};
use crate::game::{build_game_with, GamePosition, ParityGame, Player};
use crate::lts::Lts;
use crate::semantics::Env;
use crate::states::StateSet;
use crate::strategy::{Advice, PartialStrategy};

/// The local condition a position failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Condition {
    /// The entry names a state the system does not have.
    StateOutOfRange,
    /// The advice kind does not fit the formula at the position.
    AdviceMismatch(Advice),
    /// A proposition or variable position claimed at a state where it is false.
    AtomFalse,
    /// A successor the advice relies on is not in the domain.
    SuccessorOutside(GamePosition),
    /// `-> t` at a diamond, where `t` is not a successor of the state.
    NotAnEdge { target: usize },
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::StateOutOfRange => write!(f, "state out of range"),
            Condition::AdviceMismatch(a) => write!(f, "advice {a:?} does not fit the formula"),
            Condition::AtomFalse => write!(f, "atom is false in this state"),
            Condition::SuccessorOutside(p) => write!(f, "successor {p} is not in the domain"),
            Condition::NotAnEdge { target } => write!(f, "state {target} is not a successor"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rejection {
    LocalViolation {
        position: GamePosition,
        condition: Condition,
    },
    /// A cycle of the induced graph, listed from a position of maximal
    /// priority; the last position moves back to the first.
    BadCycle(Vec<GamePosition>),
    DomainGap(GamePosition),
    PartitionError(String),
    /// The instance itself is invalid (unbound variable, non-total relation,
    /// environment of the wrong width).
    Malformed(String),
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::LocalViolation {
                position,
                condition,
            } => write!(f, "local violation at {position}: {condition}"),
            Rejection::BadCycle(cycle) => {
                write!(f, "bad cycle:")?;
                for p in cycle {
                    write!(f, " {p} ->")?;
                }
                match cycle.first() {
                    Some(p) => write!(f, " {p}"),
                    None => Ok(()),
                }
            }
            Rejection::DomainGap(p) => write!(f, "position {p} is not in the domain"),
            Rejection::PartitionError(m) => write!(f, "invalid partition: {m}"),
            Rejection::Malformed(m) => write!(f, "invalid instance: {m}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accepted,
    Rejected(Rejection),
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted)
    }

    pub fn rejection(&self) -> Option<&Rejection> {
        match self {
            Verdict::Accepted => None,
            Verdict::Rejected(r) => Some(r),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Accepted => write!(f, "accepted"),
            Verdict::Rejected(r) => write!(f, "rejected: {r}"),
        }
    }
}

/// A game graph restricted by positional choices, over local vertices
/// `0..len()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RestrictedGraph {
    priority: Vec<u32>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl RestrictedGraph {
    pub fn new(priority: Vec<u32>, successors: Vec<Vec<usize>>) -> RestrictedGraph {
        assert_eq!(priority.len(), successors.len());
        let mut offsets = vec![0];
        let mut targets = Vec::new();
        for row in successors {
            targets.extend(row.into_iter().map(|q| q as u32));
            offsets.push(targets.len());
        }
        RestrictedGraph {
            priority,
            offsets,
            targets,
        }
    }

    pub fn len(&self) -> usize {
        self.priority.len()
    }

    pub fn is_empty(&self) -> bool {
        self.priority.is_empty()
    }

    pub fn priority(&self, v: usize) -> u32 {
        self.priority[v]
    }

    pub fn successors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Whether `cycle` is a closed walk of the graph.
    pub fn is_cycle(&self, cycle: &[usize]) -> bool {
        !cycle.is_empty()
            && cycle.iter().all(|&v| v < self.len())
            && (0..cycle.len()).all(|i| {
                let next = cycle[(i + 1) % cycle.len()];
                self.successors(cycle[i]).contains(&(next as u32))
            })
    }

    pub fn max_priority(&self, cycle: &[usize]) -> Option<u32> {
        cycle.iter().map(|&v| self.priority[v]).max()
    }
}

const UNSET: u32 = u32::MAX;

struct Tarjan {
    index: Vec<u32>,
    low: Vec<u32>,
    on_stack: Vec<bool>,
    stack: Vec<u32>,
    calls: Vec<(u32, usize)>,
}

impl Tarjan {
    fn new(n: usize) -> Tarjan {
        Tarjan {
            index: vec![UNSET; n],
            low: vec![0; n],
            on_stack: vec![false; n],
            stack: Vec::new(),
            calls: Vec::new(),
        }
    }

    /// SCCs of the subgraph induced by the vertices `v` with
    /// `stamp[v] == cur`, in order of completion.
    fn sccs(
        &mut self,
        g: &RestrictedGraph,
        members: &[u32],
        stamp: &[u32],
        cur: u32,
    ) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        let mut counter = 0u32;
        for &root in members {
            if self.index[root as usize] != UNSET {
                continue;
            }
            self.open(root, &mut counter);
            while let Some(&(v, ei)) = self.calls.last() {
                let succ = g.successors(v as usize);
                if ei < succ.len() {
                    self.calls.last_mut().expect("nonempty").1 += 1;
                    let w = succ[ei];
                    if stamp[w as usize] != cur {
                        continue;
                    }
                    if self.index[w as usize] == UNSET {
                        self.open(w, &mut counter);
                    } else if self.on_stack[w as usize] {
                        let l = self.low[v as usize].min(self.index[w as usize]);
                        self.low[v as usize] = l;
                    }
                    continue;
                }
                self.calls.pop();
                if let Some(&(u, _)) = self.calls.last() {
                    let l = self.low[u as usize].min(self.low[v as usize]);
                    self.low[u as usize] = l;
                }
                if self.low[v as usize] == self.index[v as usize] {
                    let mut scc = Vec::new();
                    loop {
                        let w = self.stack.pop().expect("tarjan stack");
                        self.on_stack[w as usize] = false;
                        scc.push(w);
                        if w == v {
                            break;
                        }
                    }
                    out.push(scc);
                }
            }
        }
        for &v in members {
            self.index[v as usize] = UNSET;
        }
        out
    }

    fn open(&mut self, v: u32, counter: &mut u32) {
        self.index[v as usize] = *counter;
        self.low[v as usize] = *counter;
        *counter += 1;
        self.stack.push(v);
        self.on_stack[v as usize] = true;
        self.calls.push((v, 0));
    }
}

/// A cycle through `start` inside the vertices stamped `cur`.
fn cycle_through(g: &RestrictedGraph, start: u32, stamp: &[u32], cur: u32) -> Vec<usize> {
    let mut parent = vec![UNSET; g.len()];
    let mut queue = VecDeque::from([start]);
    parent[start as usize] = start;
    while let Some(u) = queue.pop_front() {
        for &w in g.successors(u as usize) {
            if stamp[w as usize] != cur {
                continue;
            }
            if w == start {
                let mut path = vec![u as usize];
                let mut x = u;
                while x != start {
                    x = parent[x as usize];
                    path.push(x as usize);
                }
                path.reverse();
                if path.len() > 1 && path[0] == path[path.len() - 1] {
                    path.pop();
                }
                return path;
            }
            if parent[w as usize] == UNSET {
                parent[w as usize] = u;
                queue.push_back(w);
            }
        }
    }
    unreachable!("start lies on a nontrivial SCC")
}

/// A cycle whose largest priority has the parity losing for `good`, or
/// `None` if every cycle of `g` is won by `good`.
///
/// Each nontrivial SCC with a losing maximum yields a witness through a
/// position of maximal priority. Otherwise the positions carrying that
/// maximum are deleted and the fragments are decomposed again, so the
/// recursion depth is bounded by the number of distinct priorities.
pub fn find_bad_scc(g: &RestrictedGraph, good: Player) -> Option<Vec<usize>> {
    let n = g.len();
    let mut tarjan = Tarjan::new(n);
    let mut stamp = vec![0u32; n];
    let mut cur = 0u32;
    let mut work: Vec<Vec<u32>> = vec![(0..n as u32).collect()];
    while let Some(members) = work.pop() {
        cur += 1;
        for &v in &members {
            stamp[v as usize] = cur;
        }
        let sccs = tarjan.sccs(g, &members, &stamp, cur);
        let mut fragments = Vec::new();
        for scc in sccs {
            let nontrivial = scc.len() > 1 || g.successors(scc[0] as usize).contains(&scc[0]);
            if !nontrivial {
                continue;
            }
            let top = scc.iter().map(|&v| g.priority(v as usize)).max().expect("nonempty");
            if Player::of_priority(top) != good {
                cur += 1;
                for &v in &scc {
                    stamp[v as usize] = cur;
                }
                let start = scc
                    .iter()
                    .copied()
                    .filter(|&v| g.priority(v as usize) == top)
                    .min()
                    .expect("maximum attained");
                return Some(cycle_through(g, start, &stamp, cur));
            }
            let rest: Vec<u32> = scc
                .into_iter()
                .filter(|&v| g.priority(v as usize) != top)
                .collect();
            if !rest.is_empty() {
                fragments.push(rest);
            }
        }
        // Fragments are examined in discovery order.
        work.extend(fragments.into_iter().rev());
    }
    None
}

/// The part of `game` reachable from `roots` when the positions for which
/// `choice` answers keep only that edge. Returns the graph and, for each
/// local vertex, its game index.
fn restrict(
    game: &ParityGame,
    roots: impl IntoIterator<Item = usize>,
    choice: impl Fn(usize) -> Option<usize>,
) -> (RestrictedGraph, Vec<usize>) {
    let mut local = vec![UNSET; game.len()];
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    for r in roots {
        if local[r] == UNSET {
            local[r] = order.len() as u32;
            order.push(r);
            queue.push_back(r);
        }
    }
    let mut succ_rows: Vec<Vec<usize>> = Vec::new();
    while let Some(p) = queue.pop_front() {
        let targets: Vec<usize> = match choice(p) {
            Some(q) => vec![q],
            None => game.successors(p).iter().map(|&q| q as usize).collect(),
        };
        let mut row = Vec::with_capacity(targets.len());
        for q in targets {
            if local[q] == UNSET {
                local[q] = order.len() as u32;
                order.push(q);
                queue.push_back(q);
            }
            row.push(local[q] as usize);
        }
        succ_rows.push(row);
    }
    let priority = order.iter().map(|&p| game.priority(p)).collect();
    (RestrictedGraph::new(priority, succ_rows), order)
}

/// Checks that `sigma` is a winning strategy for the proponent from
/// `(phi, s)` for every `s` in `claimed`.
pub fn verify_certificate(
    lts: &Lts,
    phi: &Formula,
    eta: &Env,
    sigma: &PartialStrategy,
    claimed: &StateSet,
) -> Verdict {
    verify_certificate_with(Exec::default(), lts, phi, eta, sigma, claimed)
}

pub fn verify_certificate_with(
    exec: Exec,
    lts: &Lts,
    phi: &Formula,
    eta: &Env,
    sigma: &PartialStrategy,
    claimed: &StateSet,
) -> Verdict {
    match check(exec, lts, phi, eta, sigma, claimed) {
        Ok(()) => Verdict::Accepted,
        Err(r) => Verdict::Rejected(r),
    }
}

fn check(
    exec: Exec,
    lts: &Lts,
    phi: &Formula,
    eta: &Env,
    sigma: &PartialStrategy,
    claimed: &StateSet,
) -> Result<(), Rejection> {
    let n = lts.states();
    if claimed.universe() != n {
        return Err(Rejection::Malformed(format!(
            "claimed set is over {} states, the system has {n}",
            claimed.universe()
        )));
    }
    let closure = Closure::new(phi);
    let game = build_game_with(exec, lts, &closure, eta)
        .map_err(|e| Rejection::Malformed(e.to_string()))?;
    let m = closure.len();
    let at = |s: usize, c: usize| GamePosition::Product { state: s, formula: c };

    // Keys outside the closure are not game positions and play no part.
    let mut dom: Vec<Option<Advice>> = vec![None; n * m];
    let mut out_of_range = None;
    for (c, f) in closure.elements().iter().enumerate() {
        let Some(row) = sigma.row(f) else { continue };
        for (s, a) in row.iter().enumerate() {
            match (a, s < n) {
                (Some(a), true) => dom[s * m + c] = Some(*a),
                (Some(_), false) => {
                    if out_of_range.is_none_or(|o| (s, c) < o) {
                        out_of_range = Some((s, c));
                    }
                }
                (None, _) => {}
            }
        }
    }

    if let Some(s) = claimed.iter().find(|&s| dom[s * m].is_none()) {
        return Err(Rejection::DomainGap(at(s, 0)));
    }

    let local = exec.find_first(n * m, |p| {
        let advice = dom[p]?;
        let (s, c) = (p / m, p % m);
        let kids = closure.children(c);
        let inside = |s2: usize, c2: usize| dom[s2 * m + c2].is_some();
        let fail = |condition| {
            Some(Rejection::LocalViolation {
                position: at(s, c),
                condition,
            })
        };
        let f = &closure.elements()[c];
        match (f.kind(), advice) {
            (Kind::Prop(q), Advice::Star) => (!lts.holds(q, s)).then(|| fail(Condition::AtomFalse))?,
            (Kind::Var(x), Advice::Star) => {
                let holds = eta.get(x).is_some_and(|u| u.contains(s));
                (!holds).then(|| fail(Condition::AtomFalse))?
            }
            (Kind::And(..) | Kind::Fix(..), Advice::Star) => kids
                .iter()
                .find(|&&k| !inside(s, k))
                .and_then(|&k| fail(Condition::SuccessorOutside(at(s, k)))),
            (Kind::Or(..), Advice::Left | Advice::Right) => {
                let k = kids[usize::from(advice == Advice::Right)];
                (!inside(s, k)).then(|| fail(Condition::SuccessorOutside(at(s, k))))?
            }
            (Kind::Box(a, _), Advice::Star) => lts
                .successors(a, s)
                .iter()
                .find(|&&t| !inside(t as usize, kids[0]))
                .and_then(|&t| fail(Condition::SuccessorOutside(at(t as usize, kids[0])))),
            (Kind::Diamond(a, _), Advice::GoTo(t)) => {
                let t = t as usize;
                if lts.successors(a, s).binary_search(&(t as u32)).is_err() {
                    fail(Condition::NotAnEdge { target: t })
                } else if !inside(t, kids[0]) {
                    fail(Condition::SuccessorOutside(at(t, kids[0])))
                } else {
                    None
                }
            }
            (_, a) => fail(Condition::AdviceMismatch(a)),
        }
    });
    if let Some(r) = local {
        return Err(r);
    }
    if let Some((s, c)) = out_of_range {
        return Err(Rejection::LocalViolation {
            position: at(s, c),
            condition: Condition::StateOutOfRange,
        });
    }

    let (graph, order) = restrict(&game, claimed.iter().map(|s| s * m), |p| {
        let c = p % m;
        let kids = closure.children(c);
        match dom[p]? {
            Advice::Left => Some(p - c + kids[0]),
            Advice::Right => Some(p - c + kids[1]),
            Advice::GoTo(t) => Some(t as usize * m + kids[0]),
            Advice::Star => None,
        }
    });
    if let Some(&p) = order.iter().find(|&&p| dom[p].is_none()) {
        return Err(Rejection::DomainGap(game.position(p)));
    }
    match find_bad_scc(&graph, Player::Proponent) {
        Some(cycle) => Err(Rejection::BadCycle(
            cycle.into_iter().map(|v| game.position(order[v])).collect(),
        )),
        None => Ok(()),
    }
}

/// Checks a claimed solution of an explicit game: `v0`/`v1` partition the
/// positions, `s0`/`s1` give a legal move at every position of their player,
/// and each `si` wins from every position of `vi`.
pub fn verify_partition(
    g: &ParityGame,
    v0: &BTreeSet<usize>,
    v1: &BTreeSet<usize>,
    s0: &BTreeMap<usize, usize>,
    s1: &BTreeMap<usize, usize>,
) -> Verdict {
    match check_partition(g, [v0, v1], [s0, s1]) {
        Ok(()) => Verdict::Accepted,
        Err(r) => Verdict::Rejected(r),
    }
}

fn check_partition(
    g: &ParityGame,
    v: [&BTreeSet<usize>; 2],
    s: [&BTreeMap<usize, usize>; 2],
) -> Result<(), Rejection> {
    let bad = |m: String| Err(Rejection::PartitionError(m));
    let n = g.len();
    for set in v {
        if let Some(&p) = set.iter().find(|&&p| p >= n) {
            return bad(format!("position index {p} does not exist"));
        }
    }
    if let Some(&p) = v[0].intersection(v[1]).next() {
        return bad(format!("position {} is in both sets", g.id(p)));
    }
    if let Some(p) = (0..n).find(|p| !v[0].contains(p) && !v[1].contains(p)) {
        return bad(format!("position {} is in neither set", g.id(p)));
    }
    for (i, si) in s.iter().enumerate() {
        for (&p, &q) in si.iter() {
            if p >= n || g.owner(p).index() != i {
                let name = if p < n { g.id(p).to_string() } else { format!("index {p}") };
                return bad(format!("player {i} has a move at position {name} it does not own"));
            }
            if q >= n || !g.successors(p).contains(&(q as u32)) {
                let name = if q < n { g.id(q).to_string() } else { format!("index {q}") };
                return bad(format!("move {} -> {name} is not an edge", g.id(p)));
            }
        }
        if let Some(p) = (0..n).find(|&p| g.owner(p).index() == i && !si.contains_key(&p)) {
            return bad(format!("no move for player {i} at position {}", g.id(p)));
        }
    }
    for (i, player) in [Player::Proponent, Player::Opponent].into_iter().enumerate() {
        let (graph, order) = restrict(g, v[i].iter().copied(), |p| {
            (g.owner(p) == player).then(|| s[i][&p])
        });
        if let Some(cycle) = find_bad_scc(&graph, player) {
            return Err(Rejection::BadCycle(
                cycle.into_iter().map(|v| g.position(order[v])).collect(),
            ));
        }
    }
    Ok(())
}

/// A claimed solution of an explicit game, by position index.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Partition {
    pub v0: BTreeSet<usize>,
    pub v1: BTreeSet<usize>,
    pub s0: BTreeMap<usize, usize>,
    pub s1: BTreeMap<usize, usize>,
}

impl Partition {
    pub fn verify(&self, g: &ParityGame) -> Verdict {
        verify_partition(g, &self.v0, &self.v1, &self.s0, &self.s1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct PartitionParseError {
    pub line: usize,
    pub message: String,
}

/// Reads `pos <id> in <0|1>` and `move <id> -> <id>` lines. Moves are
/// assigned to the owner of their source position.
pub fn parse_partition(text: &str, g: &ParityGame) -> Result<Partition, PartitionParseError> {
    let ids = g.id_index();
    let mut out = Partition::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| PartitionParseError { line, message };
        let body = raw.split('#').next().unwrap_or("");
        let words: Vec<&str> = body.split_whitespace().collect();
        let lookup = |w: &str| {
            let id: u64 = w.parse().map_err(|_| err(format!("invalid position id `{w}`")))?;
            ids.get(&id)
                .copied()
                .ok_or_else(|| err(format!("unknown position {id}")))
        };
        match words.as_slice() {
            [] => {}
            ["pos", p, "in", side] => {
                let p = lookup(p)?;
                match *side {
                    "0" => out.v0.insert(p),
                    "1" => out.v1.insert(p),
                    _ => return Err(err(format!("player must be 0 or 1, found `{side}`"))),
                };
            }
            ["move", p, "->", q] => {
                let (p, q) = (lookup(p)?, lookup(q)?);
                let moves = match g.owner(p) {
                    Player::Proponent => &mut out.s0,
                    Player::Opponent => &mut out.s1,
                };
                if moves.insert(p, q).is_some() {
                    return Err(err(format!("second move for position {}", g.id(p))));
                }
            }
            _ => {
                return Err(err(
                    "expected `pos <id> in <0|1>` or `move <id> -> <id>`".into()
                ))
            }
        }
    }
    Ok(out)
}
