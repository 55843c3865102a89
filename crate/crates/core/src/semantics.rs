//! Fixpoint-iteration semantics.

use std::collections::BTreeMap;

use crate::error::Error;
use crate::exec::Exec;
use crate::formula::{Fix, Formula, Kind, Name};
use crate::lts::Lts;
use crate::states::StateSet;

/// Interpretation of free variables as state sets.
///
/// Updates return a new environment and leave the receiver untouched.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Env(BTreeMap<Name, StateSet>);

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn get(&self, x: &str) -> Option<&StateSet> {
        self.0.get(x)
    }

    pub fn contains(&self, x: &str) -> bool {
        self.0.contains_key(x)
    }

    pub fn with(&self, x: impl Into<Name>, set: StateSet) -> Env {
        let mut next = self.0.clone();
        next.insert(x.into(), set);
        Env(next)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &StateSet)> {
        self.0.iter()
    }

    /// Pointwise complement, `η'(X) = S \ η(X)`.
    pub fn complement(&self) -> Env {
        Env(self.0.iter().map(|(k, v)| (k.clone(), v.complement())).collect())
    }

    /// Checks `FV(phi) ⊆ dom(self)` and that every set has the width of `lts`.
    pub fn check(&self, phi: &Formula, lts: &Lts) -> Result<(), Error> {
        if let Some(x) = phi.free_vars().into_iter().find(|x| !self.contains(x)) {
            return Err(Error::UnboundVariable(x));
        }
        for (x, set) in &self.0 {
            if set.universe() != lts.states() {
                return Err(Error::EnvWidth {
                    var: x.clone(),
                    got: set.universe(),
                    want: lts.states(),
                });
            }
        }
        Ok(())
    }
}

impl FromIterator<(Name, StateSet)> for Env {
    fn from_iter<I: IntoIterator<Item = (Name, StateSet)>>(iter: I) -> Self {
        Env(iter.into_iter().collect())
    }
}

/// Number of functional applications one fixpoint evaluation needed until
/// two consecutive iterates agreed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixTrace {
    pub binder: Formula,
    pub applications: usize,
}

/// The naive fixpoint iteration: least fixpoints from the empty set, greatest
/// fixpoints from the full set, each iterated until stable.
pub struct Evaluator<'a> {
    lts: &'a Lts,
    exec: Exec,
    trace: Option<Vec<FixTrace>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(lts: &'a Lts) -> Self {
        Evaluator {
            lts,
            exec: Exec::default(),
            trace: None,
        }
    }

    pub fn exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    /// Records a [`FixTrace`] for every fixpoint evaluation.
    pub fn traced(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn take_trace(&mut self) -> Vec<FixTrace> {
        self.trace.take().unwrap_or_default()
    }

    pub fn eval(&mut self, phi: &Formula, eta: &Env) -> Result<StateSet, Error> {
        eta.check(phi, self.lts)?;
        Ok(self.go(phi, eta))
    }

    fn go(&mut self, phi: &Formula, eta: &Env) -> StateSet {
        let n = self.lts.states();
        match phi.kind() {
            Kind::Prop(p) => self.lts.prop_set(p),
            Kind::Var(x) => eta.get(x).cloned().expect("checked on entry"),
            Kind::And(l, r) => self.go(l, eta).intersection(&self.go(r, eta)),
            Kind::Or(l, r) => self.go(l, eta).union(&self.go(r, eta)),
            Kind::Diamond(a, b) => {
                let inner = self.go(b, eta);
                self.lts.pre_with(self.exec, a, &inner)
            }
            Kind::Box(a, b) => {
                let inner = self.go(b, eta);
                self.lts.pretilde_with(self.exec, a, &inner)
            }
            Kind::Fix(q, x, b) => {
                let mut current = match q {
                    Fix::Mu => StateSet::empty(n),
                    Fix::Nu => StateSet::full(n),
                };
                let mut applications = 0;
                loop {
                    let next = self.go(b, &eta.with(x.clone(), current.clone()));
                    applications += 1;
                    if next == current {
                        break;
                    }
                    current = next;
                }
                if let Some(t) = self.trace.as_mut() {
                    t.push(FixTrace {
                        binder: phi.clone(),
                        applications,
                    });
                }
                current
            }
        }
    }
}

/// `[[phi]]eta` by fixpoint iteration.
pub fn sem(phi: &Formula, eta: &Env, lts: &Lts) -> Result<StateSet, Error> {
    Evaluator::new(lts).eval(phi, eta)
}

/// The instance whose satisfying states are exactly the states falsifying
/// `phi` under `eta`: the dual formula under the complemented environment.
///
/// Propositions are dualized like variables: each `P` of `phi` becomes a
/// variable interpreted by the complement of the states labelled `P`.
/// Keeping `P` fixed would make `P` and its dual agree everywhere.
pub fn negation(phi: &Formula, eta: &Env, lts: &Lts) -> (Formula, Env) {
    let mut env = eta.complement();
    for p in phi.props() {
        env = env.with(p.clone(), lts.prop_set(&p).complement());
    }
    (phi.props_as_vars().dual(), env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::lts::parse_lts;

    const NOTEN: &str = "states 2\nprop 1 P\ntrans 0 a 0\ntrans 0 a 1\ntrans 1 a 1\n";

    #[test]
    fn example_values() {
        let l = parse_lts(NOTEN).unwrap();
        let e = Env::new();
        let reach = parse_formula("mu X. P | <a> X").unwrap();
        assert_eq!(sem(&reach, &e, &l).unwrap(), StateSet::full(2));
        let p = parse_formula("P").unwrap();
        assert_eq!(sem(&p, &e, &l).unwrap(), StateSet::from_states(2, [1]));
        let inv = parse_formula("nu X. [a] X").unwrap();
        assert_eq!(sem(&inv, &e, &l).unwrap(), StateSet::full(2));
        let u = StateSet::from_states(2, [0]);
        let env = e.with("X", u.clone());
        assert_eq!(sem(&Formula::var("X"), &env, &l).unwrap(), u);
        // Globally P fails at 0.
        let always = parse_formula("nu X. P & [a] X").unwrap();
        assert_eq!(sem(&always, &e, &l).unwrap(), StateSet::from_states(2, [1]));
    }

    #[test]
    fn unbound_variable_is_reported() {
        let l = parse_lts(NOTEN).unwrap();
        let err = sem(&Formula::var("Z"), &Env::new(), &l).unwrap_err();
        assert_eq!(err, Error::UnboundVariable(Name::from("Z")));
        let bad = Env::new().with("Z", StateSet::empty(3));
        assert!(matches!(
            sem(&Formula::var("Z"), &bad, &l),
            Err(Error::EnvWidth { .. })
        ));
    }

    #[test]
    fn env_updates_are_persistent() {
        let e = Env::new().with("X", StateSet::empty(2));
        let f = e.with("X", StateSet::full(2));
        assert_eq!(e.get("X"), Some(&StateSet::empty(2)));
        assert_eq!(f.get("X"), Some(&StateSet::full(2)));
        assert_eq!(e.complement().get("X"), Some(&StateSet::full(2)));
    }

    #[test]
    fn negation_complements() {
        let l = parse_lts(NOTEN).unwrap();
        let p = Formula::prop("P");
        // Without lifting the proposition, P and its dual coincide.
        assert_eq!(sem(&p.dual(), &Env::new(), &l).unwrap(), sem(&p, &Env::new(), &l).unwrap());
        for text in ["P", "mu X. P | <a> X", "nu X. P & [a] X", "<a> P & [a] P"] {
            let phi = parse_formula(text).unwrap();
            let (neg, env) = negation(&phi, &Env::new(), &l);
            let yes = sem(&phi, &Env::new(), &l).unwrap();
            assert_eq!(sem(&neg, &env, &l).unwrap(), yes.complement(), "{text}");
        }
    }

    #[test]
    fn trace_counts_applications() {
        let l = parse_lts(NOTEN).unwrap();
        let reach = parse_formula("mu X. P | <a> X").unwrap();
        let mut ev = Evaluator::new(&l).traced();
        ev.eval(&reach, &Env::new()).unwrap();
        let t = ev.take_trace();
        // {} -> {1} -> {0,1} -> {0,1}
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].applications, 3);
    }
}
