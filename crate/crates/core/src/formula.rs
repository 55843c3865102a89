//! Modal μ-calculus formulas.
//!
//! Formulas are hash-consed: every structurally distinct formula is stored
//! exactly once in a process-wide intern table, so equality, hashing and
//! ordering are O(1) comparisons of the node identity. Each node caches its
//! free variables together with the nesting depth of every free variable,
//! which makes [`Formula::nd`] and [`Formula::nd_var`] constant-time lookups.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, LazyLock, Mutex};

use thiserror::Error;

/// Identifier used for propositions, variables and actions.
pub type Name = Arc<str>;

/// The fixpoint quantifier of a binder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fix {
    Mu,
    Nu,
}

impl Fix {
    pub fn dual(self) -> Fix {
        match self {
            Fix::Mu => Fix::Nu,
            Fix::Nu => Fix::Mu,
        }
    }

    fn keyword(self) -> &'static str {
        match self {
            Fix::Mu => "mu",
            Fix::Nu => "nu",
        }
    }
}

/// Top-level constructor of a formula node.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Prop(Name),
    Var(Name),
    And(Formula, Formula),
    Or(Formula, Formula),
    Diamond(Name, Formula),
    Box(Name, Formula),
    Fix(Fix, Name, Formula),
}

#[derive(Debug)]
struct Node {
    id: u32,
    kind: Kind,
    /// Sorted by name; the number is `nd(X, self)` for that free variable.
    free: Vec<(Name, u32)>,
    nd: u32,
    size: u64,
}

/// An interned μ-calculus formula.
#[derive(Clone)]
pub struct Formula(Arc<Node>);

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        self.0.id == other.0.id
    }
}

impl Eq for Formula {}

impl Hash for Formula {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.id.hash(state)
    }
}

impl PartialOrd for Formula {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Formula {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.id.cmp(&other.0.id)
    }
}

struct Interner {
    table: HashMap<Kind, Formula>,
}

static INTERNER: LazyLock<Mutex<Interner>> = LazyLock::new(|| {
    Mutex::new(Interner {
        table: HashMap::new(),
    })
});

fn merge_free(a: &[(Name, u32)], b: &[(Name, u32)]) -> Vec<(Name, u32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[i].0.clone(), a[i].1.max(b[j].1)));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn intern(kind: Kind) -> Formula {
    let mut store = INTERNER.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(f) = store.table.get(&kind) {
        return f.clone();
    }
    let (free, nd, size) = match &kind {
        Kind::Prop(_) => (Vec::new(), 0, 1),
        Kind::Var(x) => (vec![(x.clone(), 0)], 0, 1),
        Kind::And(l, r) | Kind::Or(l, r) => (
            merge_free(&l.0.free, &r.0.free),
            0,
            1u64.saturating_add(l.0.size).saturating_add(r.0.size),
        ),
        Kind::Diamond(_, b) | Kind::Box(_, b) => (b.0.free.clone(), 0, b.0.size.saturating_add(1)),
        Kind::Fix(_, x, b) => {
            let nd = 1 + b.nd_var(x);
            let free = b
                .0
                .free
                .iter()
                .filter(|(v, _)| v != x)
                .map(|(v, d)| (v.clone(), nd.max(*d)))
                .collect();
            (free, nd, b.0.size.saturating_add(1))
        }
    };
    let id = u32::try_from(store.table.len()).expect("formula store exhausted");
    let f = Formula(Arc::new(Node {
        id,
        kind: kind.clone(),
        free,
        nd,
        size,
    }));
    store.table.insert(kind, f.clone());
    f
}

fn name(s: impl AsRef<str>) -> Name {
    Arc::from(s.as_ref())
}

impl Formula {
    pub fn prop(p: impl AsRef<str>) -> Formula {
        intern(Kind::Prop(name(p)))
    }

    pub fn var(x: impl AsRef<str>) -> Formula {
        intern(Kind::Var(name(x)))
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        intern(Kind::And(l, r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        intern(Kind::Or(l, r))
    }

    pub fn diamond(a: impl AsRef<str>, body: Formula) -> Formula {
        intern(Kind::Diamond(name(a), body))
    }

    pub fn boxed(a: impl AsRef<str>, body: Formula) -> Formula {
        intern(Kind::Box(name(a), body))
    }

    pub fn mu(x: impl AsRef<str>, body: Formula) -> Formula {
        intern(Kind::Fix(Fix::Mu, name(x), body))
    }

    pub fn nu(x: impl AsRef<str>, body: Formula) -> Formula {
        intern(Kind::Fix(Fix::Nu, name(x), body))
    }

    pub fn fixpoint(q: Fix, x: impl AsRef<str>, body: Formula) -> Formula {
        intern(Kind::Fix(q, name(x), body))
    }

    pub fn from_kind(kind: Kind) -> Formula {
        intern(kind)
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    /// Identity of this node in the intern table.
    pub fn id(&self) -> u32 {
        self.0.id
    }

    /// Number of syntactic subformula occurrences.
    pub fn size(&self) -> u64 {
        self.0.size
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        self.0.free.iter().map(|(v, _)| v.clone()).collect()
    }

    pub fn has_free(&self, x: &str) -> bool {
        self.0
            .free
            .binary_search_by(|(v, _)| v.as_ref().cmp(x))
            .is_ok()
    }

    pub fn is_closed(&self) -> bool {
        self.0.free.is_empty()
    }

    /// Nesting depth of a fixpoint formula; zero for every other node.
    pub fn nd(&self) -> u32 {
        self.0.nd
    }

    /// Nesting depth of the free variable `x` in this formula: the largest
    /// nesting depth of a fixpoint formula crossed on the way to a free
    /// occurrence of `x`, or zero when `x` is not free.
    pub fn nd_var(&self, x: &str) -> u32 {
        match self.0.free.binary_search_by(|(v, _)| v.as_ref().cmp(x)) {
            Ok(i) => self.0.free[i].1,
            Err(_) => 0,
        }
    }

    /// Replaces every free occurrence of `z` by `psi`.
    ///
    /// Capture is not checked: binders produced by the parser are unique, and
    /// the fixpoint formulas substituted during unwinding only have free
    /// variables that are bound outside the binder being unwound.
    pub fn substitute(&self, z: &str, psi: &Formula) -> Formula {
        let mut memo = HashMap::new();
        self.substitute_memo(z, psi, &mut memo)
    }

    pub(crate) fn substitute_memo(
        &self,
        z: &str,
        psi: &Formula,
        memo: &mut HashMap<Formula, Formula>,
    ) -> Formula {
        if !self.has_free(z) {
            return self.clone();
        }
        if let Some(f) = memo.get(self) {
            return f.clone();
        }
        let out = match self.kind() {
            Kind::Var(_) => psi.clone(),
            Kind::Prop(_) => self.clone(),
            Kind::And(l, r) => Formula::and(
                l.substitute_memo(z, psi, memo),
                r.substitute_memo(z, psi, memo),
            ),
            Kind::Or(l, r) => Formula::or(
                l.substitute_memo(z, psi, memo),
                r.substitute_memo(z, psi, memo),
            ),
            Kind::Diamond(a, b) => {
                intern(Kind::Diamond(a.clone(), b.substitute_memo(z, psi, memo)))
            }
            Kind::Box(a, b) => intern(Kind::Box(a.clone(), b.substitute_memo(z, psi, memo))),
            Kind::Fix(q, x, b) => intern(Kind::Fix(*q, x.clone(), b.substitute_memo(z, psi, memo))),
        };
        memo.insert(self.clone(), out.clone());
        out
    }

    /// One-step unwinding `ψ[X := QX.ψ]` of a fixpoint formula.
    pub fn unwind(&self) -> Option<Formula> {
        match self.kind() {
            Kind::Fix(_, x, b) => Some(b.substitute(x, self)),
            _ => None,
        }
    }

    /// De Morgan dual: swaps ∧/∨, ⟨a⟩/[a] and μ/ν, leaving atoms fixed.
    pub fn dual(&self) -> Formula {
        match self.kind() {
            Kind::Prop(_) | Kind::Var(_) => self.clone(),
            Kind::And(l, r) => Formula::or(l.dual(), r.dual()),
            Kind::Or(l, r) => Formula::and(l.dual(), r.dual()),
            Kind::Diamond(a, b) => intern(Kind::Box(a.clone(), b.dual())),
            Kind::Box(a, b) => intern(Kind::Diamond(a.clone(), b.dual())),
            Kind::Fix(q, x, b) => intern(Kind::Fix(q.dual(), x.clone(), b.dual())),
        }
    }

    /// The formula with every proposition `P` read as the variable `P`.
    /// Binders that would capture one of them are renamed first.
    pub fn props_as_vars(&self) -> Formula {
        let props = self.props();
        if props.is_empty() {
            return self.clone();
        }
        let mut taken = self.identifiers();
        self.lift_props(&props, &mut taken)
    }

    fn lift_props(&self, props: &BTreeSet<Name>, taken: &mut BTreeSet<Name>) -> Formula {
        match self.kind() {
            Kind::Prop(p) => Formula::var(p),
            Kind::Var(_) => self.clone(),
            Kind::And(l, r) => Formula::and(l.lift_props(props, taken), r.lift_props(props, taken)),
            Kind::Or(l, r) => Formula::or(l.lift_props(props, taken), r.lift_props(props, taken)),
            Kind::Diamond(a, b) => intern(Kind::Diamond(a.clone(), b.lift_props(props, taken))),
            Kind::Box(a, b) => intern(Kind::Box(a.clone(), b.lift_props(props, taken))),
            Kind::Fix(q, x, b) => {
                if !props.contains(x) {
                    return intern(Kind::Fix(*q, x.clone(), b.lift_props(props, taken)));
                }
                let fresh: Name = (1..)
                    .map(|k| Name::from(format!("{x}_{k}")))
                    .find(|y| !taken.contains(y))
                    .expect("unbounded supply");
                taken.insert(fresh.clone());
                let body = b.substitute(x, &Formula::var(&fresh));
                intern(Kind::Fix(*q, fresh, body.lift_props(props, taken)))
            }
        }
    }

    /// Every proposition, variable and binder name in the formula.
    fn identifiers(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        let mut stack = vec![self.clone()];
        while let Some(f) = stack.pop() {
            match f.kind() {
                Kind::Prop(x) | Kind::Var(x) => {
                    out.insert(x.clone());
                }
                Kind::And(l, r) | Kind::Or(l, r) => {
                    stack.push(l.clone());
                    stack.push(r.clone());
                }
                Kind::Diamond(_, b) | Kind::Box(_, b) => stack.push(b.clone()),
                Kind::Fix(_, x, b) => {
                    out.insert(x.clone());
                    stack.push(b.clone());
                }
            }
        }
        out
    }

    /// Actions occurring in modalities anywhere in the formula.
    pub fn actions(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        let mut seen = HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(f) = stack.pop() {
            if !seen.insert(f.clone()) {
                continue;
            }
            match f.kind() {
                Kind::Prop(_) | Kind::Var(_) => {}
                Kind::And(l, r) | Kind::Or(l, r) => {
                    stack.push(l.clone());
                    stack.push(r.clone());
                }
                Kind::Diamond(a, b) | Kind::Box(a, b) => {
                    out.insert(a.clone());
                    stack.push(b.clone());
                }
                Kind::Fix(_, _, b) => stack.push(b.clone()),
            }
        }
        out
    }

    /// Propositions occurring anywhere in the formula.
    pub fn props(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        let mut stack = vec![self.clone()];
        while let Some(f) = stack.pop() {
            match f.kind() {
                Kind::Prop(p) => {
                    out.insert(p.clone());
                }
                Kind::Var(_) => {}
                Kind::And(l, r) | Kind::Or(l, r) => {
                    stack.push(l.clone());
                    stack.push(r.clone());
                }
                Kind::Diamond(_, b) | Kind::Box(_, b) | Kind::Fix(_, _, b) => {
                    stack.push(b.clone())
                }
            }
        }
        out
    }

    /// Fully parenthesized text that [`parse_formula`] reads back to the
    /// same formula.
    pub fn canonical(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            Kind::Prop(p) => write!(f, "{p}"),
            Kind::Var(x) => write!(f, "{x}"),
            Kind::And(l, r) => write!(f, "({l} & {r})"),
            Kind::Or(l, r) => write!(f, "({l} | {r})"),
            Kind::Diamond(a, b) => write!(f, "(<{a}> {b})"),
            Kind::Box(a, b) => write!(f, "([{a}] {b})"),
            Kind::Fix(q, x, b) => write!(f, "({} {x} . {b})", q.keyword()),
        }
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

pub fn print_canonical(phi: &Formula) -> String {
    phi.canonical()
}

/// The formulas that can occur as second component of a game position
/// reachable from the root: subformulas and one-step unwindings.
///
/// Element 0 is the root. Elements are enumerated breadth-first, children in
/// syntactic order (left before right); a fixpoint node has its unwinding as
/// its only child.
#[derive(Clone, Debug)]
pub struct Closure {
    elements: Vec<Formula>,
    index: HashMap<Formula, usize>,
    children: Vec<Vec<usize>>,
}

impl Closure {
    pub fn new(root: &Formula) -> Closure {
        let mut elements = vec![root.clone()];
        let mut index = HashMap::from([(root.clone(), 0)]);
        let mut children = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let f = elements[i].clone();
            let kids: Vec<Formula> = match f.kind() {
                Kind::Prop(_) | Kind::Var(_) => vec![],
                Kind::And(l, r) | Kind::Or(l, r) => vec![l.clone(), r.clone()],
                Kind::Diamond(_, b) | Kind::Box(_, b) => vec![b.clone()],
                Kind::Fix(..) => vec![f.unwind().expect("fixpoint")],
            };
            let mut ids = Vec::with_capacity(kids.len());
            for k in kids {
                let next = elements.len();
                let id = *index.entry(k.clone()).or_insert_with(|| {
                    elements.push(k);
                    queue.push_back(next);
                    next
                });
                ids.push(id);
            }
            if children.len() <= i {
                children.resize(i + 1, Vec::new());
            }
            children[i] = ids;
        }
        children.resize(elements.len(), Vec::new());
        Closure {
            elements,
            index,
            children,
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn root(&self) -> &Formula {
        &self.elements[0]
    }

    pub fn get(&self, i: usize) -> Option<&Formula> {
        self.elements.get(i)
    }

    pub fn index_of(&self, f: &Formula) -> Option<usize> {
        self.index.get(f).copied()
    }

    pub fn elements(&self) -> &[Formula] {
        &self.elements
    }

    /// Closure indices of the syntactic successors of element `i`.
    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }
}

pub fn closure(phi: &Formula) -> Closure {
    Closure::new(phi)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Mu,
    Nu,
    And,
    Or,
    LAngle,
    RAngle,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Dot,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Mu => write!(f, "`mu`"),
            Tok::Nu => write!(f, "`nu`"),
            Tok::And => write!(f, "`&`"),
            Tok::Or => write!(f, "`|`"),
            Tok::LAngle => write!(f, "`<`"),
            Tok::RAngle => write!(f, "`>`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
    let mut toks = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let simple = match c {
                '&' => Some(Tok::And),
                '|' => Some(Tok::Or),
                '<' => Some(Tok::LAngle),
                '>' => Some(Tok::RAngle),
                '[' => Some(Tok::LBracket),
                ']' => Some(Tok::RBracket),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                '.' => Some(Tok::Dot),
                _ => None,
            };
            if let Some(t) = simple {
                toks.push((t, lineno + 1, col));
                i += 1;
            } else if c.is_whitespace() {
                i += 1;
            } else if is_ident_start(c) {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let tok = match word.as_str() {
                    "mu" => Tok::Mu,
                    "nu" => Tok::Nu,
                    _ => Tok::Ident(word),
                };
                toks.push((tok, lineno + 1, col));
            } else {
                return Err(ParseError {
                    line: lineno + 1,
                    column: col,
                    message: format!("unexpected character `{c}`"),
                });
            }
        }
    }
    let (line, column) = text
        .lines()
        .enumerate()
        .last()
        .map(|(i, l)| (i + 1, l.chars().count() + 1))
        .unwrap_or((1, 1));
    toks.push((Tok::Eof, line, column));
    Ok(toks)
}

const MAX_NESTING: usize = 512;

struct Parser<'a> {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    depth: usize,
    /// Original binder name and the name it was renamed to.
    scope: Vec<(String, String)>,
    declared: &'a BTreeSet<String>,
    used_idents: HashSet<String>,
    binders: HashSet<String>,
    open_parens: Vec<(usize, usize)>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let (_, line, column) = self.toks[self.pos];
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {want}, found {}", self.peek())))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.error(format!("expected {what}, found {other}"))),
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(self.error("formula nested too deeply"));
        }
        Ok(())
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn fresh(&self, base: &str) -> String {
        (1..)
            .map(|k| format!("{base}_{k}"))
            .find(|c| {
                !self.used_idents.contains(c)
                    && !self.binders.contains(c)
                    && !self.declared.contains(c)
            })
            .expect("unbounded search")
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        self.enter()?;
        let out = match self.peek().clone() {
            Tok::LAngle => {
                self.bump();
                let a = self.ident("action name")?;
                self.expect(Tok::RAngle)?;
                Formula::diamond(a, self.unary()?)
            }
            Tok::LBracket => {
                self.bump();
                let a = self.ident("action name")?;
                self.expect(Tok::RBracket)?;
                Formula::boxed(a, self.unary()?)
            }
            Tok::Mu | Tok::Nu => {
                let q = if self.bump() == Tok::Mu { Fix::Mu } else { Fix::Nu };
                let x = self.ident("variable name")?;
                self.expect(Tok::Dot)?;
                let renamed = if self.binders.contains(&x) || self.declared.contains(&x) {
                    self.fresh(&x)
                } else {
                    x.clone()
                };
                self.binders.insert(renamed.clone());
                self.scope.push((x, renamed.clone()));
                let body = self.or()?;
                self.scope.pop();
                Formula::fixpoint(q, renamed, body)
            }
            Tok::LParen => {
                let (_, line, col) = self.toks[self.pos];
                self.open_parens.push((line, col));
                self.bump();
                let inner = self.or()?;
                if *self.peek() != Tok::RParen {
                    let (line, column) = self.open_parens.last().copied().unwrap_or((line, col));
                    return Err(ParseError {
                        line,
                        column,
                        message: format!("unbalanced parentheses: `(` never closed, found {}", self.peek()),
                    });
                }
                self.bump();
                self.open_parens.pop();
                inner
            }
            Tok::Ident(s) => {
                self.bump();
                if let Some((_, renamed)) = self.scope.iter().rev().find(|(orig, _)| *orig == s) {
                    Formula::var(renamed)
                } else if self.declared.contains(&s) {
                    Formula::var(&s)
                } else {
                    Formula::prop(&s)
                }
            }
            Tok::RParen => return Err(self.error("unbalanced parentheses: unexpected `)`")),
            other => return Err(self.error(format!("expected a formula, found {other}"))),
        };
        self.depth -= 1;
        Ok(out)
    }
}

/// Parses a formula; every identifier not bound by an enclosing binder is a
/// proposition.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    parse_formula_with_vars(text, &BTreeSet::new())
}

/// Parses a formula in which the identifiers in `free_vars` denote free
/// variables (to be interpreted by an environment) rather than propositions.
///
/// Binders that reuse a name already bound elsewhere in the formula, or a
/// declared free variable, are renamed to `name_k` for the smallest `k` that
/// does not clash with any identifier of the input.
pub fn parse_formula_with_vars(
    text: &str,
    free_vars: &BTreeSet<String>,
) -> Result<Formula, ParseError> {
    let toks = tokenize(text)?;
    let used_idents = toks
        .iter()
        .filter_map(|(t, _, _)| match t {
            Tok::Ident(s) => Some(s.clone()),
            _ => None,
        })
        .collect();
    let mut p = Parser {
        toks,
        pos: 0,
        depth: 0,
        scope: Vec::new(),
        declared: free_vars,
        used_idents,
        binders: HashSet::new(),
        open_parens: Vec::new(),
    };
    if *p.peek() == Tok::Eof {
        return Err(p.error("empty formula"));
    }
    let f = p.or()?;
    match p.peek() {
        Tok::Eof => Ok(f),
        Tok::RParen => Err(p.error("unbalanced parentheses: unexpected `)`")),
        other => Err(p.error(format!("expected end of input, found {other}"))),
    }
}
