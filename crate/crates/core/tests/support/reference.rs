//! A naive reference resolver, independent of the engine: its own terms,
//! substitution, unification and depth-first search with cut.
//!
//! Supported goals: user predicates, `true`, `fail`, `!`, `=`, `\=`, `==`
//! and `\==`. Conjunctions are flattened into clause bodies.

use std::collections::HashMap;
use std::fmt;

use logicweb::Term;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum R {
    Var(u32),
    Atom(String),
    Int(i64),
    Str(String),
    Fun(String, Vec<R>),
}

impl R {
    pub fn atom(a: &str) -> R {
        R::Atom(a.to_string())
    }

    pub fn fun(f: &str, args: Vec<R>) -> R {
        if args.is_empty() {
            R::Atom(f.to_string())
        } else {
            R::Fun(f.to_string(), args)
        }
    }

    pub fn string(s: &str) -> R {
        R::Str(s.to_string())
    }

    fn max_var(&self) -> Option<u32> {
        match self {
            R::Var(v) => Some(*v),
            R::Fun(_, args) => args.iter().filter_map(R::max_var).max(),
            _ => None,
        }
    }

    fn offset(&self, by: u32) -> R {
        match self {
            R::Var(v) => R::Var(v + by),
            R::Fun(f, args) => R::Fun(f.clone(), args.iter().map(|a| a.offset(by)).collect()),
            t => t.clone(),
        }
    }

    /// Converts an engine term; variables are numbered by first occurrence
    /// through `names`.
    pub fn from_term(t: &Term, names: &mut HashMap<u64, u32>) -> R {
        match t {
            Term::Var(v) => {
                let n = names.len() as u32;
                R::Var(*names.entry(v.id()).or_insert(n))
            }
            Term::Atom(a) => R::Atom(a.as_str().to_string()),
            Term::Number(logicweb::term::Number::Int(i)) => R::Int(*i),
            Term::Number(logicweb::term::Number::Float(f)) => R::Atom(format!("float:{}", f)),
            Term::Str(s) => R::Str(s.to_string()),
            Term::Compound(c) => {
                R::Fun(c.functor.as_str().to_string(), c.args.iter().map(|a| R::from_term(a, names)).collect())
            }
        }
    }
}

fn name(a: &str) -> String {
    let plain = a.chars().next().is_some_and(|c| c.is_ascii_lowercase()) && a.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain || matches!(a, "!" | "[]" | "#") {
        a.to_string()
    } else {
        format!("'{}'", a.replace('\\', "\\\\").replace('\'', "\\'"))
    }
}

/// Source syntax. Variables print as `V<n>`.
impl fmt::Display for R {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            R::Var(v) => write!(f, "V{}", v),
            R::Atom(a) => f.write_str(&name(a)),
            R::Int(i) => write!(f, "{}", i),
            R::Str(s) => write!(f, "\"{}\"", s),
            R::Fun(op, args) if args.len() == 2 && matches!(op.as_str(), "=" | "\\=" | "==" | "\\==") => {
                write!(f, "{} {} {}", args[0], op, args[1])
            }
            R::Fun(functor, args) => {
                write!(f, "{}(", name(functor))?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", a)?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct RClause {
    pub head: R,
    pub body: Vec<R>,
}

impl fmt::Display for RClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        for (i, g) in self.body.iter().enumerate() {
            f.write_str(if i == 0 { " :- " } else { ", " })?;
            write!(f, "{}", g)?;
        }
        f.write_str(".")
    }
}

pub fn program_text(clauses: &[RClause]) -> String {
    clauses.iter().map(|c| format!("{}\n", c)).collect()
}

#[derive(Default)]
struct Subst(HashMap<u32, R>);

impl Subst {
    fn walk(&self, t: &R) -> R {
        let mut cur = t.clone();
        while let R::Var(v) = &cur {
            match self.0.get(v) {
                Some(b) => cur = b.clone(),
                None => break,
            }
        }
        cur
    }

    fn resolve(&self, t: &R) -> R {
        match self.walk(t) {
            R::Fun(f, args) => R::Fun(f, args.iter().map(|a| self.resolve(a)).collect()),
            t => t,
        }
    }

    fn occurs(&self, v: u32, t: &R) -> bool {
        match self.walk(t) {
            R::Var(w) => v == w,
            R::Fun(_, args) => args.iter().any(|a| self.occurs(v, a)),
            _ => false,
        }
    }
}

fn unify(a: &R, b: &R, s: &Subst) -> Option<Subst> {
    let mut out = Subst(s.0.clone());
    let mut stack = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = stack.pop() {
        let (x, y) = (out.walk(&x), out.walk(&y));
        match (&x, &y) {
            (R::Var(v), R::Var(w)) if v == w => {}
            (R::Var(v), t) | (t, R::Var(v)) => {
                if out.occurs(*v, t) {
                    return None;
                }
                out.0.insert(*v, t.clone());
            }
            (R::Fun(f, xs), R::Fun(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return None;
                }
                stack.extend(xs.iter().cloned().zip(ys.iter().cloned()));
            }
            _ if x == y => {}
            _ => return None,
        }
    }
    Some(out)
}

#[derive(PartialEq)]
enum Signal {
    Normal,
    Cut,
}

/// Raised when the search exceeds its budget.
#[derive(Debug)]
pub struct OutOfFuel;

pub struct Resolver<'a> {
    clauses: &'a [RClause],
    next_var: u32,
    fuel: usize,
}

impl<'a> Resolver<'a> {
    pub fn new(clauses: &'a [RClause]) -> Self {
        Resolver { clauses, next_var: 1_000_000, fuel: 200_000 }
    }

    /// Every answer to the conjunction, in depth-first order, as the
    /// resolved instances of `vars`.
    pub fn solve(&mut self, goals: &[R], vars: &[R]) -> Result<Vec<Vec<R>>, OutOfFuel> {
        let mut out = Vec::new();
        self.conj(goals, Subst::default(), &mut out)?;
        Ok(out.iter().map(|s| vars.iter().map(|v| s.resolve(v)).collect()).collect())
    }

    /// Whether the goal has at least one proof.
    pub fn provable(&mut self, goal: &R) -> Result<bool, OutOfFuel> {
        Ok(!self.solve(std::slice::from_ref(goal), &[])?.is_empty())
    }

    fn conj(&mut self, goals: &[R], s: Subst, out: &mut Vec<Subst>) -> Result<Signal, OutOfFuel> {
        let Some((first, rest)) = goals.split_first() else {
            out.push(s);
            return Ok(Signal::Normal);
        };
        if matches!(first, R::Atom(a) if a == "!") {
            self.conj(rest, s, out)?;
            return Ok(Signal::Cut);
        }
        for s1 in self.call(first, &s)? {
            if self.conj(rest, s1, out)? == Signal::Cut {
                return Ok(Signal::Cut);
            }
        }
        Ok(Signal::Normal)
    }

    fn call(&mut self, goal: &R, s: &Subst) -> Result<Vec<Subst>, OutOfFuel> {
        if self.fuel == 0 {
            return Err(OutOfFuel);
        }
        self.fuel -= 1;
        let g = s.walk(goal);
        let copy = |s: &Subst| Subst(s.0.clone());
        match &g {
            R::Atom(a) if a == "true" => return Ok(vec![copy(s)]),
            R::Atom(a) if a == "fail" => return Ok(vec![]),
            R::Fun(op, args) if args.len() == 2 => match op.as_str() {
                "=" => return Ok(unify(&args[0], &args[1], s).into_iter().collect()),
                "\\=" => return Ok(if unify(&args[0], &args[1], s).is_none() { vec![copy(s)] } else { vec![] }),
                "==" => return Ok(if s.resolve(&args[0]) == s.resolve(&args[1]) { vec![copy(s)] } else { vec![] }),
                "\\==" => return Ok(if s.resolve(&args[0]) != s.resolve(&args[1]) { vec![copy(s)] } else { vec![] }),
                _ => {}
            },
            _ => {}
        }
        let mut out = Vec::new();
        for c in self.clauses {
            let width = c.head.max_var().into_iter().chain(c.body.iter().filter_map(R::max_var)).max();
            let base = self.next_var;
            self.next_var += width.map_or(0, |w| w + 1);
            let head = c.head.offset(base);
            let Some(s1) = unify(&g, &head, s) else { continue };
            let body: Vec<R> = c.body.iter().map(|b| b.offset(base)).collect();
            if self.conj(&body, s1, &mut out)? == Signal::Cut {
                break;
            }
        }
        Ok(out)
    }
}

/// Renders an answer tuple with variables renumbered by first occurrence,
/// so answers compare up to variance.
pub fn canonical(answer: &[R]) -> String {
    fn go(t: &R, names: &mut HashMap<u32, usize>, out: &mut String) {
        match t {
            R::Var(v) => {
                let n = names.len();
                out.push_str(&format!("_{}", names.entry(*v).or_insert(n)));
            }
            R::Fun(f, args) => {
                out.push_str(&format!("{}(", f));
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    go(a, names, out);
                }
                out.push(')');
            }
            R::Atom(a) => out.push_str(&format!("'{}'", a)),
            R::Int(i) => out.push_str(&i.to_string()),
            R::Str(s) => out.push_str(&format!("\"{}\"", s)),
        }
    }
    let mut names = HashMap::new();
    let mut out = String::new();
    for (i, t) in answer.iter().enumerate() {
        if i > 0 {
            out.push_str(" | ");
        }
        go(t, &mut names, &mut out);
    }
    out
}
