//! Substitutions, unification, renaming and variance.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::term::{Term, Var};

/// A finite map from variables to terms. Identity bindings are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<Var, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `v -> t`; identity bindings are dropped.
    pub fn bind(&mut self, v: Var, t: Term) {
        if matches!(&t, Term::Var(w) if *w == v) {
            self.map.remove(&v);
        } else {
            self.map.insert(v, t);
        }
    }

    pub fn get(&self, v: &Var) -> Option<&Term> {
        self.map.get(v)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.map.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.map.keys()
    }

    /// Keeps only bindings of the given variables.
    pub fn restrict(&self, vars: &[Var]) -> Substitution {
        Substitution {
            map: self.map.iter().filter(|(v, _)| vars.contains(v)).map(|(v, t)| (v.clone(), t.clone())).collect(),
        }
    }

    /// No variable of the range is also in the domain.
    pub fn is_idempotent(&self) -> bool {
        self.map.values().all(|t| t.vars().iter().all(|v| !self.map.contains_key(v)))
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{} -> {}", v, t)?;
        }
        f.write_str("}")
    }
}

/// Replaces bound variables until no bound variable remains. A variable met
/// again while its own binding is being expanded is left in place, so cyclic
/// substitutions terminate.
pub fn apply(s: &Substitution, t: &Term) -> Term {
    let mut active = Vec::new();
    apply_inner(s, t, &mut active)
}

fn apply_inner(s: &Substitution, t: &Term, active: &mut Vec<Var>) -> Term {
    match t {
        Term::Var(v) => match s.get(v) {
            Some(b) if !active.contains(v) => {
                active.push(v.clone());
                let r = apply_inner(s, b, active);
                active.pop();
                r
            }
            _ => t.clone(),
        },
        Term::Compound(_) => t.map_vars(&mut |v| apply_inner(s, &Term::Var(v.clone()), active)),
        _ => t.clone(),
    }
}

/// `apply(compose(s1, s2), t) == apply(s2, apply(s1, t))` whenever both are
/// idempotent and `s2` does not reintroduce variables of `dom(s1)`.
pub fn compose(s1: &Substitution, s2: &Substitution) -> Substitution {
    let mut out = Substitution::new();
    for (v, t) in s1.iter() {
        out.bind(v.clone(), apply(s2, t));
    }
    for (v, t) in s2.iter() {
        if s1.get(v).is_none() {
            out.bind(v.clone(), t.clone());
        }
    }
    out
}

/// Most general unifier with the occurs check.
pub fn unify(a: &Term, b: &Term) -> Option<Substitution> {
    unify_with(a, b, true)
}

pub fn unify_with(a: &Term, b: &Term, occurs_check: bool) -> Option<Substitution> {
    let mut bindings = Bindings::new();
    if !bindings.unify(a, b, occurs_check) {
        return None;
    }
    Some(bindings.to_substitution())
}

/// Renames every variable to a fresh one, consistently across the term.
pub fn rename_apart(t: &Term) -> Term {
    let mut map = HashMap::new();
    rename_with(t, &mut map)
}

pub(crate) fn rename_with(t: &Term, map: &mut HashMap<Var, Term>) -> Term {
    t.map_vars(&mut |v| map.entry(v.clone()).or_insert_with(|| Term::Var(v.renamed())).clone())
}

/// Equal up to a bijective renaming of variables.
pub fn variant(a: &Term, b: &Term) -> bool {
    let mut fwd = HashMap::new();
    let mut bwd = HashMap::new();
    variant_inner(a, b, &mut fwd, &mut bwd)
}

fn variant_inner(a: &Term, b: &Term, fwd: &mut HashMap<Var, Var>, bwd: &mut HashMap<Var, Var>) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => {
            let f = fwd.entry(x.clone()).or_insert_with(|| y.clone()).clone();
            let g = bwd.entry(y.clone()).or_insert_with(|| x.clone()).clone();
            f == *y && g == *x
        }
        (Term::Compound(p), Term::Compound(q)) => {
            p.functor == q.functor
                && p.args.len() == q.args.len()
                && p.args.iter().zip(&q.args).all(|(s, t)| variant_inner(s, t, fwd, bwd))
        }
        (Term::Var(_), _) | (_, Term::Var(_)) => false,
        _ => a == b,
    }
}

/// Mutable variable bindings with a trail, used by the resolution machine.
#[derive(Debug, Default)]
pub struct Bindings {
    map: HashMap<Var, Term>,
    trail: Vec<Var>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn mark(&self) -> usize {
        self.trail.len()
    }

    pub fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().expect("trail underflow");
            self.map.remove(&v);
        }
    }

    /// Follows variable bindings until an unbound variable or a non-variable.
    pub fn deref(&self, t: &Term) -> Term {
        let mut cur = t.clone();
        while let Term::Var(v) = &cur {
            match self.map.get(v) {
                Some(b) => cur = b.clone(),
                None => break,
            }
        }
        cur
    }

    /// Fully instantiates `t` under the current bindings. A variable met
    /// again inside its own binding is left unexpanded, so cyclic bindings
    /// made without the occurs check terminate.
    pub fn resolve(&self, t: &Term) -> Term {
        let mut active = Vec::new();
        self.resolve_inner(t, &mut active)
    }

    fn resolve_inner(&self, t: &Term, active: &mut Vec<Var>) -> Term {
        match t {
            Term::Var(v) => match self.map.get(v) {
                Some(b) if !active.contains(v) => {
                    active.push(v.clone());
                    let r = self.resolve_inner(b, active);
                    active.pop();
                    r
                }
                _ => t.clone(),
            },
            Term::Compound(_) => t.map_vars(&mut |v| self.resolve_inner(&Term::Var(v.clone()), active)),
            _ => t.clone(),
        }
    }

    fn bind(&mut self, v: Var, t: Term) {
        self.map.insert(v.clone(), t);
        self.trail.push(v);
    }

    fn occurs(&self, v: &Var, t: &Term) -> bool {
        match self.deref(t) {
            Term::Var(w) => w == *v,
            Term::Compound(c) => c.args.iter().any(|a| self.occurs(v, a)),
            _ => false,
        }
    }

    /// Unifies `a` and `b`, extending the bindings. On failure the bindings
    /// may be partially extended; callers restore with `undo_to`.
    pub fn unify(&mut self, a: &Term, b: &Term, occurs_check: bool) -> bool {
        let mut stack = vec![(a.clone(), b.clone())];
        while let Some((x, y)) = stack.pop() {
            let x = self.deref(&x);
            let y = self.deref(&y);
            match (&x, &y) {
                (Term::Var(v), Term::Var(w)) if v == w => {}
                (Term::Var(v), _) => {
                    if occurs_check && self.occurs(v, &y) {
                        return false;
                    }
                    self.bind(v.clone(), y.clone());
                }
                (_, Term::Var(w)) => {
                    if occurs_check && self.occurs(w, &x) {
                        return false;
                    }
                    self.bind(w.clone(), x.clone());
                }
                (Term::Compound(p), Term::Compound(q)) => {
                    if p.functor != q.functor || p.args.len() != q.args.len() {
                        return false;
                    }
                    for (s, t) in p.args.iter().zip(q.args.iter()).rev() {
                        stack.push((s.clone(), t.clone()));
                    }
                }
                _ => {
                    if x != y {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Unifies without leaving partial bindings behind on failure.
    pub fn unify_or_undo(&mut self, a: &Term, b: &Term, occurs_check: bool) -> bool {
        let m = self.mark();
        if self.unify(a, b, occurs_check) {
            true
        } else {
            self.undo_to(m);
            false
        }
    }

    /// The idempotent substitution equivalent to the current bindings.
    pub fn to_substitution(&self) -> Substitution {
        let mut s = Substitution::new();
        for v in self.map.keys() {
            s.bind(v.clone(), self.resolve(&Term::Var(v.clone())));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Var;

    fn v(name: &str) -> (Var, Term) {
        let x = Var::named(name);
        (x.clone(), Term::Var(x))
    }

    #[test]
    fn unify_binds_both_sides() {
        let (_, x) = v("X");
        let (_, y) = v("Y");
        let a = Term::compound("f", vec![x.clone(), Term::atom("b")]);
        let b = Term::compound("f", vec![Term::atom("a"), y.clone()]);
        let s = unify(&a, &b).unwrap();
        assert_eq!(apply(&s, &x), Term::atom("a"));
        assert_eq!(apply(&s, &y), Term::atom("b"));
    }

    #[test]
    fn occurs_check_rejects_cycles() {
        let (_, x) = v("X");
        let fx = Term::compound("f", vec![x.clone()]);
        assert!(unify(&x, &fx).is_none());
        assert!(unify_with(&x, &fx, false).is_some());
    }

    #[test]
    fn apply_chases_bindings() {
        let (xv, x) = v("X");
        let (yv, y) = v("Y");
        let mut s = Substitution::new();
        s.bind(xv, y);
        s.bind(yv, Term::atom("a"));
        assert_eq!(apply(&s, &x), Term::atom("a"));
    }

    #[test]
    fn compose_example() {
        let (xv, x) = v("X");
        let (yv, y) = v("Y");
        let mut s1 = Substitution::new();
        s1.bind(xv, y.clone());
        let mut s2 = Substitution::new();
        s2.bind(yv, Term::atom("a"));
        let c = compose(&s1, &s2);
        assert_eq!(apply(&c, &x), Term::atom("a"));
        assert_eq!(apply(&c, &y), Term::atom("a"));
    }

    #[test]
    fn variant_needs_bijection() {
        let (_, x) = v("X");
        let (_, y) = v("Y");
        let a = Term::compound("f", vec![x.clone(), y.clone()]);
        let b = Term::compound("f", vec![x.clone(), x.clone()]);
        assert!(!variant(&a, &b));
        assert!(variant(&a, &rename_apart(&a)));
    }

    #[test]
    fn bindings_undo() {
        let (_, x) = v("X");
        let mut b = Bindings::new();
        let m = b.mark();
        assert!(b.unify(&x, &Term::int(3), true));
        assert_eq!(b.resolve(&x), Term::int(3));
        b.undo_to(m);
        assert_eq!(b.resolve(&x), x);
    }
}
