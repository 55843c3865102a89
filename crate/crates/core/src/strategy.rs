//! Partial winning strategies and their computation by instrumented fixpoint
//! iteration.
//!
//! A [`PartialStrategy`] assigns advice to game positions `(formula, state)`.
//! [`certify`] follows the shape of the plain fixpoint iteration, but
//! every clause also returns a strategy whose domain at the clause's own
//! formula is exactly the set of satisfying states. The result is the
//! certificate that [`crate::checker::verify_certificate`] re-validates.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::error::Error;
use crate::exec::Exec;
use crate::formula::{Closure, Fix, Formula, Kind};
use crate::lts::{Lts, MAX_STATES};
use crate::semantics::{Env, Evaluator};
use crate::states::StateSet;

/// Advice at a position: `Star` (no choice to make), `Left`/`Right` at a
/// disjunction, or the successor state to move to at a `<a>` position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Advice {
    Star,
    Left,
    Right,
    GoTo(u32),
}

type Row = Vec<Option<Advice>>;

/// A finite map from positions `(formula, state)` to [`Advice`].
///
/// Stored as one dense row per formula, indexed by state.
#[derive(Clone, Debug, Default)]
pub struct PartialStrategy {
    rows: BTreeMap<Formula, Row>,
}

impl PartialEq for PartialStrategy {
    fn eq(&self, other: &Self) -> bool {
        self.entries().eq(other.entries())
    }
}

impl Eq for PartialStrategy {}

fn fill_from(base: &mut Row, other: &Row) {
    if base.len() < other.len() {
        base.resize(other.len(), None);
    }
    for (slot, adv) in base.iter_mut().zip(other) {
        if slot.is_none() {
            *slot = *adv;
        }
    }
}

impl PartialStrategy {
    pub fn new() -> PartialStrategy {
        PartialStrategy::default()
    }

    pub fn get(&self, f: &Formula, s: usize) -> Option<Advice> {
        self.rows.get(f).and_then(|r| r.get(s).copied().flatten())
    }

    pub fn contains(&self, f: &Formula, s: usize) -> bool {
        self.get(f, s).is_some()
    }

    /// Sets the advice at `(f, s)`, returning the previous advice.
    pub fn insert(&mut self, f: &Formula, s: usize, advice: Advice) -> Option<Advice> {
        let row = self.rows.entry(f.clone()).or_default();
        if row.len() <= s {
            row.resize(s + 1, None);
        }
        row[s].replace(advice)
    }

    pub fn remove(&mut self, f: &Formula, s: usize) -> Option<Advice> {
        self.rows
            .get_mut(f)
            .and_then(|r| r.get_mut(s))
            .and_then(Option::take)
    }

    /// Number of positions in the domain.
    pub fn len(&self) -> usize {
        self.rows.values().map(|r| r.iter().flatten().count()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All entries, ordered by formula identity and then by state.
    pub fn entries(&self) -> impl Iterator<Item = (&Formula, usize, Advice)> + '_ {
        self.rows.iter().flat_map(|(f, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(s, a)| a.map(|a| (f, s, a)))
        })
    }

    /// Formulas with at least one entry.
    pub fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.rows
            .iter()
            .filter(|(_, r)| r.iter().any(Option::is_some))
            .map(|(f, _)| f)
    }

    /// `{s < n | (f, s) ∈ dom}`.
    pub fn projection(&self, f: &Formula, n: usize) -> StateSet {
        let mut out = StateSet::empty(n);
        if let Some(row) = self.rows.get(f) {
            for (s, a) in row.iter().enumerate().take(n) {
                if a.is_some() {
                    out.insert(s);
                }
            }
        }
        out
    }

    /// Dense advice row of `f`, indexed by state; may be shorter or longer
    /// than the number of states.
    pub(crate) fn row(&self, f: &Formula) -> Option<&[Option<Advice>]> {
        self.rows.get(f).map(Vec::as_slice)
    }

    fn put_row(&mut self, f: Formula, row: Row) {
        match self.rows.get_mut(&f) {
            Some(existing) => fill_from(existing, &row),
            None => {
                self.rows.insert(f, row);
            }
        }
    }

    /// `self + other`: entries of `self` win where both are defined.
    pub fn union(mut self, other: PartialStrategy) -> PartialStrategy {
        for (f, row) in other.rows {
            self.put_row(f, row);
        }
        self
    }
}

/// `a + b`, left-biased.
pub fn strategy_union(a: PartialStrategy, b: PartialStrategy) -> PartialStrategy {
    a.union(b)
}

/// `sigma[x := phi, sigma_prime]`: `sigma`'s positions `(ρ, s)` re-keyed to
/// `(ρ[x := phi], s)`, with the entries of `sigma_prime` taking precedence.
///
/// Panics if two distinct formulas of `sigma` collapse onto the same key.
pub fn strategy_subst(
    sigma: PartialStrategy,
    x: &str,
    phi: &Formula,
    sigma_prime: PartialStrategy,
) -> PartialStrategy {
    let mut memo = HashMap::new();
    subst_memo(sigma, x, phi, sigma_prime, &mut memo)
}

fn subst_memo(
    sigma: PartialStrategy,
    x: &str,
    phi: &Formula,
    sigma_prime: PartialStrategy,
    memo: &mut HashMap<Formula, Formula>,
) -> PartialStrategy {
    let mut rekeyed: BTreeMap<Formula, (Formula, Row)> = BTreeMap::new();
    for (rho, row) in sigma.rows {
        if row.iter().all(Option::is_none) {
            continue;
        }
        let key = rho.substitute_memo(x, phi, memo);
        if let Some((prev, _)) = rekeyed.get(&key) {
            panic!("substitution [{x} := {phi}] is not injective: {prev} and {rho} both map to {key}");
        }
        rekeyed.insert(key, (rho, row));
    }
    let mut out = sigma_prime;
    for (key, (_, row)) in rekeyed {
        out.put_row(key, row);
    }
    out
}

/// Domain projections of one least-fixpoint loop of [`Certifier`], one per
/// round.
#[derive(Clone, Debug)]
pub struct MuTrace {
    pub binder: Formula,
    pub projections: Vec<StateSet>,
}

/// Computes winning strategies by instrumented fixpoint iteration.
pub struct Certifier<'a> {
    lts: &'a Lts,
    exec: Exec,
    trace: Option<Vec<MuTrace>>,
}

impl<'a> Certifier<'a> {
    pub fn new(lts: &'a Lts) -> Self {
        Certifier {
            lts,
            exec: Exec::default(),
            trace: None,
        }
    }

    pub fn exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn traced(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn take_trace(&mut self) -> Vec<MuTrace> {
        self.trace.take().unwrap_or_default()
    }

    pub fn certify(&mut self, phi: &Formula, eta: &Env) -> Result<PartialStrategy, Error> {
        eta.check(phi, self.lts)?;
        self.lts.validate_total(&phi.actions())?;
        Ok(self.sem(phi, eta))
    }

    fn star_row(&self, states: impl Fn(usize) -> bool + Sync + Send) -> Row {
        let n = self.lts.states();
        self.exec.map(n, |s| states(s).then_some(Advice::Star))
    }

    fn in_dom(sigma: &PartialStrategy, f: &Formula, s: usize) -> bool {
        sigma.contains(f, s)
    }

    fn sem(&mut self, phi: &Formula, eta: &Env) -> PartialStrategy {
        let mut out = PartialStrategy::new();
        match phi.kind() {
            Kind::Var(x) => {
                let u = eta.get(x).expect("checked on entry");
                out.put_row(phi.clone(), self.star_row(|s| u.contains(s)));
            }
            Kind::Prop(p) => {
                let u = self.lts.prop_set(p);
                out.put_row(phi.clone(), self.star_row(|s| u.contains(s)));
            }
            Kind::And(l, r) => {
                let sl = self.sem(l, eta);
                let sr = self.sem(r, eta);
                let row = self.star_row(|s| Self::in_dom(&sl, l, s) && Self::in_dom(&sr, r, s));
                out = sl.union(sr);
                out.put_row(phi.clone(), row);
            }
            Kind::Or(l, r) => {
                let sl = self.sem(l, eta);
                let sr = self.sem(r, eta);
                let row = self.exec.map(self.lts.states(), |s| {
                    if Self::in_dom(&sl, l, s) {
                        Some(Advice::Left)
                    } else if Self::in_dom(&sr, r, s) {
                        Some(Advice::Right)
                    } else {
                        None
                    }
                });
                out = sl.union(sr);
                out.put_row(phi.clone(), row);
            }
            Kind::Diamond(a, b) => {
                let sb = self.sem(b, eta);
                let lts = self.lts;
                // Smallest successor whose body position is won.
                let row = self.exec.map(lts.states(), |s| {
                    lts.successors(a, s)
                        .iter()
                        .find(|&&t| Self::in_dom(&sb, b, t as usize))
                        .map(|&t| Advice::GoTo(t))
                });
                out = sb;
                out.put_row(phi.clone(), row);
            }
            Kind::Box(a, b) => {
                let sb = self.sem(b, eta);
                let lts = self.lts;
                let row = self.star_row(|s| {
                    lts.successors(a, s)
                        .iter()
                        .all(|&t| Self::in_dom(&sb, b, t as usize))
                });
                out = sb;
                out.put_row(phi.clone(), row);
            }
            Kind::Fix(Fix::Mu, x, b) => out = self.least(phi, x, b, eta),
            Kind::Fix(Fix::Nu, x, b) => out = self.greatest(phi, x, b, eta),
        }
        out
    }

    /// Stars the fixpoint positions whose unwinding is in the domain.
    fn star_binder(&self, sigma: &mut PartialStrategy, phi: &Formula, unwinding: &Formula) {
        let n = self.lts.states();
        let won: Vec<bool> = (0..n).map(|s| sigma.contains(unwinding, s)).collect();
        let mut row = sigma.rows.remove(phi).unwrap_or_default();
        row.resize(row.len().max(n), None);
        for (s, w) in won.into_iter().enumerate() {
            if w && row[s].is_none() {
                row[s] = Some(Advice::Star);
            }
        }
        sigma.rows.insert(phi.clone(), row);
    }

    fn least(&mut self, phi: &Formula, x: &str, body: &Formula, eta: &Env) -> PartialStrategy {
        let n = self.lts.states();
        let unwinding = phi.unwind().expect("fixpoint");
        let mut memo = HashMap::new();
        let mut sigma = PartialStrategy::new();
        let mut current = StateSet::empty(n);
        let mut projections = Vec::new();
        loop {
            let step = self.sem(body, &eta.with(x, current.clone()));
            // Entries of the previous round take precedence over the new ones.
            let mut next = subst_memo(step, x, phi, sigma, &mut memo);
            self.star_binder(&mut next, phi, &unwinding);
            let proj = next.projection(phi, n);
            if self.trace.is_some() {
                projections.push(proj.clone());
            }
            sigma = next;
            if proj == current {
                break;
            }
            current = proj;
        }
        if let Some(t) = self.trace.as_mut() {
            t.push(MuTrace {
                binder: phi.clone(),
                projections,
            });
        }
        sigma
    }

    fn greatest(&mut self, phi: &Formula, x: &str, body: &Formula, eta: &Env) -> PartialStrategy {
        let unwinding = phi.unwind().expect("fixpoint");
        let fixed = Evaluator::new(self.lts)
            .exec(self.exec)
            .eval(phi, eta)
            .expect("checked on entry");
        let step = self.sem(body, &eta.with(x, fixed));
        // Re-keying sends (X, s) to (phi, s), which redirects every move into
        // the variable back to the binder.
        let mut sigma = strategy_subst(step, x, phi, PartialStrategy::new());
        self.star_binder(&mut sigma, phi, &unwinding);
        sigma
    }
}

/// `SEM(phi)eta`: a winning strategy whose domain at `phi` is `[[phi]]eta`.
pub fn certify(phi: &Formula, eta: &Env, lts: &Lts) -> Result<PartialStrategy, Error> {
    Certifier::new(lts).certify(phi, eta)
}

/// Moves chosen by `sigma` at proponent choice positions of the game built
/// from `closure`, as `(position index, successor index)` pairs using the
/// indexing of [`crate::game::build_game_with`].
pub fn induced_moves(sigma: &PartialStrategy, closure: &Closure, n: usize) -> BTreeMap<usize, usize> {
    let m = closure.len();
    let mut out = BTreeMap::new();
    for (c, f) in closure.elements().iter().enumerate() {
        for s in 0..n {
            let target = match (f.kind(), sigma.get(f, s)) {
                (Kind::Or(..), Some(Advice::Left)) => s * m + closure.children(c)[0],
                (Kind::Or(..), Some(Advice::Right)) => s * m + closure.children(c)[1],
                (Kind::Diamond(..), Some(Advice::GoTo(t))) if (t as usize) < n => {
                    t as usize * m + closure.children(c)[0]
                }
                _ => continue,
            };
            out.insert(s * m + c, target);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct CertificateError {
    pub line: usize,
    pub message: String,
}

fn advice_text(a: Advice) -> String {
    match a {
        Advice::Star => "*".into(),
        Advice::Left => "L".into(),
        Advice::Right => "R".into(),
        Advice::GoTo(t) => format!("-> {t}"),
    }
}

/// Serializes the entries of `sigma` at closure positions of `phi`.
///
/// ```text
/// certificate v1
/// formula <canonical formula>
/// closure:
/// <index> <canonical formula>
/// entries:
/// <state> <closure index> <* | L | R | -> state>
/// ```
///
/// Entries are sorted by state, then closure index; entries whose formula
/// lies outside the closure are not positions of the game and are omitted.
pub fn serialize_certificate(sigma: &PartialStrategy, phi: &Formula) -> String {
    let closure = Closure::new(phi);
    let mut out = String::from("certificate v1\n");
    let _ = writeln!(out, "formula {phi}");
    out.push_str("closure:\n");
    for (i, f) in closure.elements().iter().enumerate() {
        let _ = writeln!(out, "{i} {f}");
    }
    out.push_str("entries:\n");
    let mut entries: Vec<(usize, usize, Advice)> = sigma
        .entries()
        .filter_map(|(f, s, a)| closure.index_of(f).map(|c| (s, c, a)))
        .collect();
    entries.sort_unstable();
    for (s, c, a) in entries {
        let _ = writeln!(out, "{s} {c} {}", advice_text(a));
    }
    out
}

/// Reads a certificate for `phi`. The embedded formula and closure table must
/// match `phi` exactly, and every entry's advice must fit the kind of its
/// closure formula.
pub fn parse_certificate(text: &str, phi: &Formula) -> Result<PartialStrategy, CertificateError> {
    let closure = Closure::new(phi);
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.trim().is_empty());
    let mut expect = |want: &str| -> Result<(usize, &str), CertificateError> {
        lines.next().ok_or_else(|| CertificateError {
            line: text.lines().count(),
            message: format!("unexpected end of certificate, expected {want}"),
        })
    };

    let (ln, header) = expect("header")?;
    if header != "certificate v1" {
        return Err(CertificateError {
            line: ln,
            message: format!("expected `certificate v1`, found `{header}`"),
        });
    }
    let (ln, formula_line) = expect("formula line")?;
    let canon = phi.canonical();
    match formula_line.strip_prefix("formula ") {
        Some(f) if f == canon => {}
        Some(f) => {
            return Err(CertificateError {
                line: ln,
                message: format!("certificate is for `{f}`, not `{canon}`"),
            })
        }
        None => {
            return Err(CertificateError {
                line: ln,
                message: "expected `formula <text>`".into(),
            })
        }
    }
    let (ln, c) = expect("`closure:`")?;
    if c != "closure:" {
        return Err(CertificateError {
            line: ln,
            message: "expected `closure:`".into(),
        });
    }
    for (i, f) in closure.elements().iter().enumerate() {
        let (ln, l) = expect("closure entry")?;
        let want = format!("{i} {f}");
        if l != want {
            return Err(CertificateError {
                line: ln,
                message: format!("closure table mismatch: expected `{want}`"),
            });
        }
    }
    let (ln, e) = expect("`entries:`")?;
    if e != "entries:" {
        return Err(CertificateError {
            line: ln,
            message: format!("expected `entries:` after {} closure entries", closure.len()),
        });
    }

    let mut sigma = PartialStrategy::new();
    for (ln, l) in lines {
        let err = |message: String| CertificateError { line: ln, message };
        let words: Vec<&str> = l.split_whitespace().collect();
        let num = |w: &str, what: &str| {
            w.parse::<usize>()
                .map_err(|_| err(format!("invalid {what} `{w}`")))
        };
        if words.len() < 3 {
            return Err(err("expected `<state> <closure index> <advice>`".into()));
        }
        let s = num(words[0], "state")?;
        if s >= MAX_STATES {
            return Err(err(format!("state {s} out of range")));
        }
        let c = num(words[1], "closure index")?;
        let f = closure
            .get(c)
            .ok_or_else(|| err(format!("unknown closure index {c} (closure has {})", closure.len())))?;
        let advice = match &words[2..] {
            ["*"] => Advice::Star,
            ["L"] => Advice::Left,
            ["R"] => Advice::Right,
            ["->", t] => {
                let t = num(t, "target state")?;
                if t >= MAX_STATES {
                    return Err(err(format!("state {t} out of range")));
                }
                Advice::GoTo(t as u32)
            }
            _ => return Err(err(format!("invalid advice `{}`", words[2..].join(" ")))),
        };
        let fits = match (f.kind(), advice) {
            (Kind::Or(..), Advice::Left | Advice::Right) => true,
            (Kind::Diamond(..), Advice::GoTo(_)) => true,
            (Kind::Or(..) | Kind::Diamond(..), _) => false,
            (_, Advice::Star) => true,
            _ => false,
        };
        if !fits {
            return Err(err(format!(
                "advice `{}` does not fit closure formula {c} `{f}`",
                advice_text(advice)
            )));
        }
        if sigma.insert(f, s, advice).is_some() {
            return Err(err(format!("duplicate entry for state {s}, closure index {c}")));
        }
    }
    Ok(sigma)
}
