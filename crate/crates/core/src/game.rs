//! Explicit parity games.
//!
//! Games either arise from a model-checking instance ([`build_game`]), with
//! positions `S × closure(φ)`, or are read from PGSolver text
//! ([`parse_pgsolver`]) with opaque integer ids.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::error::Error;
use crate::exec::Exec;
use crate::formula::{Closure, Fix, Formula, Kind};
use crate::lts::Lts;
use crate::semantics::Env;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    /// Player 0.
    Proponent,
    /// Player 1.
    Opponent,
}

impl Player {
    pub fn index(self) -> usize {
        match self {
            Player::Proponent => 0,
            Player::Opponent => 1,
        }
    }

    pub fn from_index(i: u64) -> Option<Player> {
        match i {
            0 => Some(Player::Proponent),
            1 => Some(Player::Opponent),
            _ => None,
        }
    }

    pub fn other(self) -> Player {
        match self {
            Player::Proponent => Player::Opponent,
            Player::Opponent => Player::Proponent,
        }
    }

    /// The player favoured by a priority: even for player 0, odd for player 1.
    pub fn of_priority(priority: u32) -> Player {
        if priority.is_multiple_of(2) {
            Player::Proponent
        } else {
            Player::Opponent
        }
    }
}

/// A position named in terms of the game it belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GamePosition {
    /// `(state, closure element)` of a constructed game.
    Product { state: usize, formula: usize },
    /// Identifier of an imported game.
    Node(u64),
}

impl fmt::Display for GamePosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GamePosition::Product { state, formula } => write!(f, "(state {state}, #{formula})"),
            GamePosition::Node(id) => write!(f, "{id}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Product {
    states: usize,
    closure_len: usize,
}

/// A finite parity game with a total edge relation. Successor lists are
/// ascending and free of duplicates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityGame {
    owner: Vec<Player>,
    priority: Vec<u32>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    ids: Vec<u64>,
    labels: Vec<Option<String>>,
    product: Option<Product>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("position {0} has no successors")]
    NoSuccessor(u64),
    #[error("position {pos} has successor {succ} which does not exist")]
    DanglingSuccessor { pos: u64, succ: u64 },
    #[error("duplicate position id {0}")]
    DuplicateId(u64),
}

impl ParityGame {
    /// Builds a game over positions `0..owners.len()`.
    pub fn new(
        owners: Vec<Player>,
        priorities: Vec<u32>,
        successors: Vec<Vec<usize>>,
    ) -> Result<ParityGame, GameError> {
        let ids = (0..owners.len() as u64).collect();
        Self::with_ids(ids, owners, priorities, successors, vec![])
    }

    fn with_ids(
        ids: Vec<u64>,
        owner: Vec<Player>,
        priority: Vec<u32>,
        successors: Vec<Vec<usize>>,
        labels: Vec<Option<String>>,
    ) -> Result<ParityGame, GameError> {
        let n = owner.len();
        assert!(priority.len() == n && successors.len() == n && ids.len() == n);
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        for (p, succ) in successors.into_iter().enumerate() {
            if succ.is_empty() {
                return Err(GameError::NoSuccessor(ids[p]));
            }
            let mut succ = succ;
            succ.sort_unstable();
            succ.dedup();
            for q in succ {
                if q >= n {
                    return Err(GameError::DanglingSuccessor {
                        pos: ids[p],
                        succ: q as u64,
                    });
                }
                targets.push(q as u32);
            }
            offsets.push(targets.len());
        }
        let mut labels = labels;
        labels.resize(n, None);
        Ok(ParityGame {
            owner,
            priority,
            offsets,
            targets,
            ids,
            labels,
            product: None,
        })
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    pub fn owner(&self, p: usize) -> Player {
        self.owner[p]
    }

    pub fn priority(&self, p: usize) -> u32 {
        self.priority[p]
    }

    pub fn successors(&self, p: usize) -> &[u32] {
        &self.targets[self.offsets[p]..self.offsets[p + 1]]
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn id(&self, p: usize) -> u64 {
        self.ids[p]
    }

    pub fn label(&self, p: usize) -> Option<&str> {
        self.labels[p].as_deref()
    }

    pub fn set_label(&mut self, p: usize, label: impl Into<String>) {
        self.labels[p] = Some(label.into());
    }

    /// Index of the position with the given id.
    pub fn index_of_id(&self, id: u64) -> Option<usize> {
        if self.ids.iter().enumerate().all(|(i, &x)| x == i as u64) {
            return (id < self.len() as u64).then_some(id as usize);
        }
        self.ids.iter().position(|&x| x == id)
    }

    /// Map from ids to indices, for bulk lookups.
    pub fn id_index(&self) -> HashMap<u64, usize> {
        self.ids.iter().enumerate().map(|(i, &id)| (id, i)).collect()
    }

    pub fn distinct_priorities(&self) -> BTreeSet<u32> {
        self.priority.iter().copied().collect()
    }

    /// Index of `(state, closure element)` in a constructed game.
    pub fn product_index(&self, state: usize, formula: usize) -> Option<usize> {
        let p = self.product?;
        (state < p.states && formula < p.closure_len).then_some(state * p.closure_len + formula)
    }

    pub fn position(&self, p: usize) -> GamePosition {
        match self.product {
            Some(prod) => GamePosition::Product {
                state: p / prod.closure_len,
                formula: p % prod.closure_len,
            },
            None => GamePosition::Node(self.ids[p]),
        }
    }
}

fn owner_of(f: &Formula) -> Player {
    match f.kind() {
        Kind::And(..) | Kind::Box(..) => Player::Opponent,
        _ => Player::Proponent,
    }
}

/// `G(T, η)` over `S × closure(phi)`.
pub fn build_game(lts: &Lts, phi: &Formula, eta: &Env) -> Result<ParityGame, Error> {
    build_game_with(Exec::default(), lts, &Closure::new(phi), eta)
}

/// [`build_game`] over a precomputed closure.
///
/// Position `(s, c)` has index `s * closure.len() + c`. Moves follow the
/// formula: both conjuncts/disjuncts, every `a`-successor under a modality,
/// the unwinding under a fixpoint, and a self-loop at propositions and
/// variables. Priorities are `2·nd + 1` at μ, `2·nd` at ν, 0/1 at atoms
/// according to truth in the state, and 0 elsewhere.
pub fn build_game_with(
    exec: Exec,
    lts: &Lts,
    closure: &Closure,
    eta: &Env,
) -> Result<ParityGame, Error> {
    let root = closure.root();
    eta.check(root, lts)?;
    lts.validate_total(&root.actions())?;
    let n = lts.states();
    let m = closure.len();
    let owners_row: Vec<Player> = closure.elements().iter().map(owner_of).collect();

    let rows = exec.map_sized(n, n * m, |s| {
        let mut prio = Vec::with_capacity(m);
        let mut lens = Vec::with_capacity(m);
        let mut targets = Vec::new();
        for (c, f) in closure.elements().iter().enumerate() {
            let start = targets.len();
            let kids = closure.children(c);
            let here = (s * m + c) as u32;
            let p = match f.kind() {
                Kind::Prop(p) => {
                    targets.push(here);
                    u32::from(!lts.holds(p, s))
                }
                Kind::Var(x) => {
                    targets.push(here);
                    u32::from(!eta.get(x).is_some_and(|u| u.contains(s)))
                }
                Kind::And(..) | Kind::Or(..) => {
                    let (a, b) = ((s * m + kids[0]) as u32, (s * m + kids[1]) as u32);
                    let (a, b) = (a.min(b), a.max(b));
                    targets.push(a);
                    if b != a {
                        targets.push(b);
                    }
                    0
                }
                Kind::Diamond(a, _) | Kind::Box(a, _) => {
                    targets.extend(
                        lts.successors(a, s)
                            .iter()
                            .map(|&t| (t as usize * m + kids[0]) as u32),
                    );
                    0
                }
                Kind::Fix(q, _, _) => {
                    targets.push((s * m + kids[0]) as u32);
                    match q {
                        Fix::Mu => 2 * f.nd() + 1,
                        Fix::Nu => 2 * f.nd(),
                    }
                }
            };
            prio.push(p);
            lens.push(targets.len() - start);
        }
        (prio, lens, targets)
    });

    let mut priority = Vec::with_capacity(n * m);
    let mut offsets = Vec::with_capacity(n * m + 1);
    let mut targets = Vec::new();
    offsets.push(0);
    for (prio, lens, ts) in rows {
        priority.extend(prio);
        let mut at = targets.len();
        for len in lens {
            at += len;
            offsets.push(at);
        }
        targets.extend(ts);
    }
    let owner = (0..n).flat_map(|_| owners_row.iter().copied()).collect();
    Ok(ParityGame {
        owner,
        priority,
        offsets,
        targets,
        ids: (0..(n * m) as u64).collect(),
        labels: vec![None; n * m],
        product: Some(Product {
            states: n,
            closure_len: m,
        }),
    })
}

/// Labels every position of a constructed game with its state and formula.
pub fn label_product(game: &mut ParityGame, closure: &Closure) {
    for p in 0..game.len() {
        if let GamePosition::Product { state, formula } = game.position(p) {
            game.set_label(p, format!("{state} {}", closure.elements()[formula]));
        }
    }
}

/// PGSolver text. Unlabelled positions are written with label `p<id>`.
pub fn export_pgsolver(game: &ParityGame) -> String {
    let max_id = game.ids.iter().copied().max().unwrap_or(0);
    let mut out = format!("parity {max_id};\n");
    for p in 0..game.len() {
        let succ: Vec<String> = game
            .successors(p)
            .iter()
            .map(|&q| game.ids[q as usize].to_string())
            .collect();
        let label = match game.label(p) {
            Some(l) => l.to_string(),
            None => format!("p{}", game.ids[p]),
        };
        let _ = writeln!(
            out,
            "{} {} {} {} \"{}\";",
            game.ids[p],
            game.priority[p],
            game.owner[p].index(),
            succ.join(","),
            label
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct PgParseError {
    pub line: usize,
    pub message: String,
}

struct Record {
    line: usize,
    body: String,
    label: Option<String>,
}

/// Splits the input into `;`-terminated records, keeping quoted labels apart.
fn records(text: &str) -> Result<Vec<Record>, PgParseError> {
    let mut out = Vec::new();
    let mut body = String::new();
    let mut label: Option<String> = None;
    let mut in_label = false;
    let mut line = 1;
    let mut start_line = None;
    for c in text.chars() {
        if in_label {
            match c {
                '"' => in_label = false,
                '\n' => {
                    return Err(PgParseError {
                        line,
                        message: "unterminated label".into(),
                    })
                }
                _ => label.get_or_insert_with(String::new).push(c),
            }
            continue;
        }
        match c {
            '"' => {
                if label.is_some() {
                    return Err(PgParseError {
                        line,
                        message: "more than one label in record".into(),
                    });
                }
                label = Some(String::new());
                in_label = true;
            }
            ';' => {
                out.push(Record {
                    line: start_line.unwrap_or(line),
                    body: std::mem::take(&mut body),
                    label: label.take(),
                });
                start_line = None;
            }
            _ => {
                if label.is_some() && !c.is_whitespace() {
                    return Err(PgParseError {
                        line,
                        message: "text after label".into(),
                    });
                }
                if start_line.is_none() && !c.is_whitespace() {
                    start_line = Some(line);
                }
                body.push(c);
            }
        }
        if c == '\n' {
            line += 1;
        }
    }
    if in_label || label.is_some() || !body.trim().is_empty() {
        return Err(PgParseError {
            line,
            message: "record not terminated by `;`".into(),
        });
    }
    Ok(out)
}

pub fn parse_pgsolver(text: &str) -> Result<ParityGame, PgParseError> {
    let mut ids = Vec::new();
    let mut owners = Vec::new();
    let mut priorities = Vec::new();
    let mut succ_ids: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut labels = Vec::new();
    let mut seen = HashMap::new();
    for (k, rec) in records(text)?.into_iter().enumerate() {
        let err = |message: String| PgParseError {
            line: rec.line,
            message,
        };
        let words: Vec<&str> = rec.body.split_whitespace().collect();
        if words.is_empty() && rec.label.is_none() {
            continue;
        }
        match words.first().copied() {
            Some("parity") => {
                if k != 0 {
                    return Err(err("`parity` header must come first".into()));
                }
                if words.len() != 2 || words[1].parse::<u64>().is_err() {
                    return Err(err("malformed `parity` header".into()));
                }
                continue;
            }
            Some("start") => continue,
            _ => {}
        }
        if words.len() < 4 {
            return Err(err("expected `<id> <priority> <owner> <successors>`".into()));
        }
        let num = |w: &str, what: &str| {
            w.parse::<u64>()
                .map_err(|_| err(format!("invalid {what} `{w}`")))
        };
        let id = num(words[0], "id")?;
        let prio = num(words[1], "priority")?;
        let prio = u32::try_from(prio).map_err(|_| err(format!("priority {prio} too large")))?;
        let owner = Player::from_index(num(words[2], "owner")?)
            .ok_or_else(|| err(format!("owner must be 0 or 1, found `{}`", words[2])))?;
        let succ_text = words[3..].join("");
        let succ = succ_text
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|w| num(w, "successor"))
            .collect::<Result<Vec<_>, _>>()?;
        if succ.is_empty() {
            return Err(err(format!("position {id} has no successors")));
        }
        if seen.insert(id, ids.len()).is_some() {
            return Err(err(format!("duplicate position id {id}")));
        }
        ids.push(id);
        owners.push(owner);
        priorities.push(prio);
        succ_ids.push((rec.line, succ));
        labels.push(rec.label);
    }
    let mut successors = Vec::with_capacity(ids.len());
    for (p, (line, succ)) in succ_ids.into_iter().enumerate() {
        let row = succ
            .into_iter()
            .map(|q| {
                seen.get(&q).copied().ok_or_else(|| PgParseError {
                    line,
                    message: format!("position {} has successor {q} which does not exist", ids[p]),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        successors.push(row);
    }
    ParityGame::with_ids(ids, owners, priorities, successors, labels).map_err(|e| PgParseError {
        line: 0,
        message: e.to_string(),
    })
}
