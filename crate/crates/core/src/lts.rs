//! Labelled transition systems.
//!
//! Text format, one directive per line, `#` starts a comment:
//!
//! ```text
//! states 2
//! prop 1 P
//! trans 0 a 0
//! trans 0 a 1
//! trans 1 a 1
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::error::Error;
use crate::exec::Exec;
use crate::formula::Name;
use crate::states::{StateSet, BLOCK_BITS};

/// Largest accepted state count.
pub const MAX_STATES: usize = 1 << 24;

#[derive(Clone, Debug, Default)]
struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Adjacency {
    fn from_edges(n: usize, mut edges: Vec<(u32, u32)>) -> Adjacency {
        edges.sort_unstable();
        edges.dedup();
        let mut offsets = vec![0usize; n + 1];
        for &(s, _) in &edges {
            offsets[s as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Adjacency {
            offsets,
            targets: edges.into_iter().map(|(_, t)| t).collect(),
        }
    }

    fn row(&self, s: usize) -> &[u32] {
        &self.targets[self.offsets[s]..self.offsets[s + 1]]
    }
}

#[derive(Clone, Debug)]
struct Relation {
    forward: Adjacency,
    reverse: Adjacency,
}

/// A finite labelled transition system over states `0..n`.
#[derive(Clone, Debug)]
pub struct Lts {
    n: usize,
    relations: BTreeMap<Name, Relation>,
    props: BTreeMap<Name, StateSet>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct LtsParseError {
    pub line: usize,
    pub message: String,
}

/// Incremental construction of an [`Lts`].
#[derive(Clone, Debug)]
pub struct LtsBuilder {
    n: usize,
    edges: BTreeMap<Name, Vec<(u32, u32)>>,
    props: BTreeMap<Name, StateSet>,
}

impl LtsBuilder {
    /// Panics when `n` is zero or exceeds [`MAX_STATES`].
    pub fn new(n: usize) -> LtsBuilder {
        assert!(n > 0 && n <= MAX_STATES, "state count {n} out of range");
        LtsBuilder {
            n,
            edges: BTreeMap::new(),
            props: BTreeMap::new(),
        }
    }

    pub fn edge(&mut self, src: usize, action: &str, dst: usize) -> &mut Self {
        assert!(src < self.n && dst < self.n, "edge endpoint out of range");
        self.edges
            .entry(Name::from(action))
            .or_default()
            .push((src as u32, dst as u32));
        self
    }

    pub fn prop(&mut self, state: usize, p: &str) -> &mut Self {
        let n = self.n;
        self.props
            .entry(Name::from(p))
            .or_insert_with(|| StateSet::empty(n))
            .insert(state);
        self
    }

    pub fn build(&self) -> Lts {
        let n = self.n;
        let relations = self
            .edges
            .iter()
            .map(|(a, es)| {
                let rev = es.iter().map(|&(s, t)| (t, s)).collect();
                (
                    a.clone(),
                    Relation {
                        forward: Adjacency::from_edges(n, es.clone()),
                        reverse: Adjacency::from_edges(n, rev),
                    },
                )
            })
            .collect();
        Lts {
            n,
            relations,
            props: self.props.clone(),
        }
    }
}

impl Lts {
    pub fn states(&self) -> usize {
        self.n
    }

    pub fn actions(&self) -> impl Iterator<Item = &Name> {
        self.relations.keys()
    }

    pub fn propositions(&self) -> impl Iterator<Item = &Name> {
        self.props.keys()
    }

    /// `a`-successors of `s` in ascending order; empty for unknown actions.
    pub fn successors(&self, action: &str, s: usize) -> &[u32] {
        self.relations
            .get(action)
            .map(|r| r.forward.row(s))
            .unwrap_or(&[])
    }

    pub fn predecessors(&self, action: &str, s: usize) -> &[u32] {
        self.relations
            .get(action)
            .map(|r| r.reverse.row(s))
            .unwrap_or(&[])
    }

    pub fn edges(&self, action: &str) -> impl Iterator<Item = (usize, usize)> + '_ {
        let rel = self.relations.get(action);
        (0..self.n).flat_map(move |s| {
            rel.map(|r| r.forward.row(s))
                .unwrap_or(&[])
                .iter()
                .map(move |&t| (s, t as usize))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.relations.values().map(|r| r.forward.targets.len()).sum()
    }

    pub fn holds(&self, p: &str, s: usize) -> bool {
        self.props.get(p).is_some_and(|set| set.contains(s))
    }

    /// States satisfying proposition `p`.
    pub fn prop_set(&self, p: &str) -> StateSet {
        self.props
            .get(p)
            .cloned()
            .unwrap_or_else(|| StateSet::empty(self.n))
    }

    /// Propositions true in `s`, i.e. `T(s)`.
    pub fn props_at(&self, s: usize) -> BTreeSet<Name> {
        self.props
            .iter()
            .filter(|(_, set)| set.contains(s))
            .map(|(p, _)| p.clone())
            .collect()
    }

    /// Checks that every state has at least one successor for each action.
    /// Reports the smallest offending state of the first offending action.
    pub fn validate_total<'a>(&self, actions: impl IntoIterator<Item = &'a Name>) -> Result<(), Error> {
        for a in actions {
            if let Some(s) = (0..self.n).find(|&s| self.successors(a, s).is_empty()) {
                return Err(Error::NotTotal {
                    state: s,
                    action: a.clone(),
                });
            }
        }
        Ok(())
    }

    /// Preimage: states with some `a`-successor in `u`.
    pub fn pre(&self, action: &str, u: &StateSet) -> StateSet {
        self.pre_with(Exec::default(), action, u)
    }

    /// Weakest precondition: states all of whose `a`-successors are in `u`.
    pub fn pretilde(&self, action: &str, u: &StateSet) -> StateSet {
        self.pretilde_with(Exec::default(), action, u)
    }

    pub fn pre_with(&self, exec: Exec, action: &str, u: &StateSet) -> StateSet {
        let Some(rel) = self.relations.get(action) else {
            return StateSet::empty(self.n);
        };
        self.per_block(exec, |s| rel.forward.row(s).iter().any(|&t| u.contains(t as usize)))
    }

    pub fn pretilde_with(&self, exec: Exec, action: &str, u: &StateSet) -> StateSet {
        let Some(rel) = self.relations.get(action) else {
            return StateSet::full(self.n);
        };
        self.per_block(exec, |s| rel.forward.row(s).iter().all(|&t| u.contains(t as usize)))
    }

    fn per_block<F>(&self, exec: Exec, member: F) -> StateSet
    where
        F: Fn(usize) -> bool + Sync + Send,
    {
        let n = self.n;
        let blocks = n.div_ceil(BLOCK_BITS);
        let words = exec.map_sized(blocks, n, |b| {
            let lo = b * BLOCK_BITS;
            let hi = (lo + BLOCK_BITS).min(n);
            (lo..hi).fold(0usize, |w, s| if member(s) { w | 1 << (s - lo) } else { w })
        });
        StateSet::from_blocks(n, words)
    }

    /// Renders the system in the text format read by [`parse_lts`].
    pub fn to_text(&self) -> String {
        let mut out = format!("states {}\n", self.n);
        for s in 0..self.n {
            let ps = self.props_at(s);
            if !ps.is_empty() {
                let names: Vec<&str> = ps.iter().map(|p| &**p).collect();
                let _ = writeln!(out, "prop {s} {}", names.join(" "));
            }
        }
        for a in self.relations.keys() {
            for (s, t) in self.edges(a) {
                let _ = writeln!(out, "trans {s} {a} {t}");
            }
        }
        out
    }
}

fn parse_index(tok: Option<&str>, what: &str, line: usize) -> Result<usize, LtsParseError> {
    let tok = tok.ok_or_else(|| LtsParseError {
        line,
        message: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| LtsParseError {
        line,
        message: format!("invalid {what} `{tok}`"),
    })
}

fn is_name(s: &str) -> bool {
    let mut cs = s.chars();
    cs.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

pub fn parse_lts(text: &str) -> Result<Lts, LtsParseError> {
    let mut builder: Option<LtsBuilder> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut words = content.split_whitespace();
        let head = words.next().unwrap_or_default();
        let err = |message: String| LtsParseError { line, message };
        match head {
            "states" => {
                if builder.is_some() {
                    return Err(err("duplicate `states` header".into()));
                }
                let n = parse_index(words.next(), "state count", line)?;
                if n == 0 || n > MAX_STATES {
                    return Err(err(format!("state count {n} must be in 1..={MAX_STATES}")));
                }
                if let Some(extra) = words.next() {
                    return Err(err(format!("unexpected `{extra}`")));
                }
                builder = Some(LtsBuilder::new(n));
            }
            "prop" | "trans" => {
                let b = builder
                    .as_mut()
                    .ok_or_else(|| err("`states` header must come first".into()))?;
                let check = |s: usize| {
                    if s < b.n {
                        Ok(s)
                    } else {
                        Err(LtsParseError {
                            line,
                            message: format!("state index {s} out of range (states {})", b.n),
                        })
                    }
                };
                if head == "prop" {
                    let s = check(parse_index(words.next(), "state", line)?)?;
                    let names: Vec<&str> = words.collect();
                    if names.is_empty() {
                        return Err(err("`prop` needs at least one proposition".into()));
                    }
                    for p in names {
                        if !is_name(p) {
                            return Err(err(format!("invalid proposition name `{p}`")));
                        }
                        b.prop(s, p);
                    }
                } else {
                    let s = check(parse_index(words.next(), "source state", line)?)?;
                    let a = words.next().ok_or_else(|| err("missing action".into()))?;
                    if !is_name(a) {
                        return Err(err(format!("invalid action name `{a}`")));
                    }
                    let t = check(parse_index(words.next(), "target state", line)?)?;
                    if let Some(extra) = words.next() {
                        return Err(err(format!("unexpected `{extra}`")));
                    }
                    b.edge(s, a, t);
                }
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }
    builder.map(|b| b.build()).ok_or(LtsParseError {
        line: text.lines().count().max(1),
        message: "missing `states` header".into(),
    })
}
