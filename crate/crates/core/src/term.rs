//! First-order terms.
//!
//! Variables carry a process-unique id; the optional name is for display
//! only and never participates in equality.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

static NEXT_VAR: AtomicU64 = AtomicU64::new(1);

/// A logic variable. Two variables are equal iff their ids are equal.
#[derive(Clone, Debug)]
pub struct Var {
    id: u64,
    name: Option<Arc<str>>,
}

impl Var {
    pub fn fresh() -> Var {
        Var { id: NEXT_VAR.fetch_add(1, Ordering::Relaxed), name: None }
    }

    pub fn named(name: &str) -> Var {
        Var { id: NEXT_VAR.fetch_add(1, Ordering::Relaxed), name: Some(Arc::from(name)) }
    }

    /// A fresh variable that keeps this variable's display name.
    pub fn renamed(&self) -> Var {
        Var { id: NEXT_VAR.fetch_add(1, Ordering::Relaxed), name: self.name.clone() }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }
}

impl PartialEq for Var {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}
impl Eq for Var {}
impl Hash for Var {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state)
    }
}
impl PartialOrd for Var {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Var {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.id.cmp(&other.id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom(Arc<str>);

impl Atom {
    pub fn new(name: &str) -> Atom {
        Atom(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Atom {
    fn from(s: &str) -> Atom {
        Atom::new(s)
    }
}

/// Numbers compare structurally: `1` and `1.0` are different terms.
#[derive(Clone, Copy, Debug)]
pub enum Number {
    Int(i64),
    Float(f64),
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Number::Int(a), Number::Int(b)) => a == b,
            (Number::Float(a), Number::Float(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}
impl Eq for Number {}
impl Hash for Number {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Number::Int(i) => {
                0u8.hash(state);
                i.hash(state)
            }
            Number::Float(f) => {
                1u8.hash(state);
                f.to_bits().hash(state)
            }
        }
    }
}

impl Number {
    pub fn as_f64(self) -> f64 {
        match self {
            Number::Int(i) => i as f64,
            Number::Float(f) => f,
        }
    }
}

/// A compound term; `args` is never empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Compound {
    pub functor: Atom,
    pub args: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Var),
    Atom(Atom),
    Number(Number),
    Str(Arc<str>),
    Compound(Arc<Compound>),
}

pub const NIL: &str = "[]";
pub const CONS: &str = ".";

impl Term {
    pub fn var(v: Var) -> Term {
        Term::Var(v)
    }

    pub fn fresh_var() -> Term {
        Term::Var(Var::fresh())
    }

    pub fn atom(name: &str) -> Term {
        Term::Atom(Atom::new(name))
    }

    pub fn int(i: i64) -> Term {
        Term::Number(Number::Int(i))
    }

    pub fn float(f: f64) -> Term {
        Term::Number(Number::Float(f))
    }

    pub fn string(s: &str) -> Term {
        Term::Str(Arc::from(s))
    }

    /// Builds `functor(args..)`; with no arguments this is the atom `functor`.
    pub fn compound(functor: &str, args: Vec<Term>) -> Term {
        Term::compound_atom(Atom::new(functor), args)
    }

    pub fn compound_atom(functor: Atom, args: Vec<Term>) -> Term {
        if args.is_empty() {
            Term::Atom(functor)
        } else {
            Term::Compound(Arc::new(Compound { functor, args }))
        }
    }

    pub fn nil() -> Term {
        Term::atom(NIL)
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::compound(CONS, vec![head, tail])
    }

    pub fn list(items: Vec<Term>) -> Term {
        Term::list_with_tail(items, Term::nil())
    }

    pub fn list_with_tail(items: Vec<Term>, tail: Term) -> Term {
        items.into_iter().rev().fold(tail, |acc, t| Term::cons(t, acc))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_callable(&self) -> bool {
        matches!(self, Term::Atom(_) | Term::Compound(_))
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Term::Atom(_) | Term::Number(_) | Term::Str(_))
    }

    /// Name and arity of a callable term.
    pub fn functor(&self) -> Option<(&Atom, usize)> {
        match self {
            Term::Atom(a) => Some((a, 0)),
            Term::Compound(c) => Some((&c.functor, c.args.len())),
            _ => None,
        }
    }

    pub fn has_functor(&self, name: &str, arity: usize) -> bool {
        matches!(self.functor(), Some((a, n)) if a.as_str() == name && n == arity)
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(c) => &c.args,
            _ => &[],
        }
    }

    pub fn arg(&self, i: usize) -> Option<&Term> {
        self.args().get(i)
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Term::Atom(a) => Some(a.as_str()),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Term::Str(s) => Some(s),
            _ => None,
        }
    }

    /// Text of an atom or a string.
    pub fn text(&self) -> Option<&str> {
        match self {
            Term::Atom(a) => Some(a.as_str()),
            Term::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Term::Number(Number::Int(i)) => Some(*i),
            _ => None,
        }
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Term::Atom(a) if a.as_str() == NIL)
    }

    /// Elements of a proper list.
    pub fn as_list(&self) -> Option<Vec<Term>> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            if cur.is_nil() {
                return Some(out);
            }
            if cur.has_functor(CONS, 2) {
                out.push(cur.args()[0].clone());
                cur = &cur.args()[1];
            } else {
                return None;
            }
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Compound(c) => c.args.iter().all(Term::is_ground),
            _ => true,
        }
    }

    /// Variables in first-occurrence order, without duplicates.
    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone())
                }
            }
            Term::Compound(c) => c.args.iter().for_each(|a| a.collect_vars(out)),
            _ => {}
        }
    }

    pub fn occurs(&self, v: &Var) -> bool {
        match self {
            Term::Var(w) => w == v,
            Term::Compound(c) => c.args.iter().any(|a| a.occurs(v)),
            _ => false,
        }
    }

    /// Rebuilds the term bottom-up, replacing each variable by `f(var)`.
    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Term) -> Term {
        match self {
            Term::Var(v) => f(v),
            Term::Compound(c) => Term::Compound(Arc::new(Compound {
                functor: c.functor.clone(),
                args: c.args.iter().map(|a| a.map_vars(f)).collect(),
            })),
            t => t.clone(),
        }
    }

    /// Number of nodes in the term tree.
    pub fn size(&self) -> usize {
        match self {
            Term::Compound(c) => 1 + c.args.iter().map(Term::size).sum::<usize>(),
            _ => 1,
        }
    }
}

impl From<Var> for Term {
    fn from(v: Var) -> Term {
        Term::Var(v)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::print::to_text(self))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.name {
            Some(n) if n.as_ref() != "_" => write!(f, "{}", n),
            _ => write!(f, "_G{}", self.id),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::print::quote_atom(self.as_str()))
    }
}
