//! Lazy clause selection over program expressions.
//!
//! Every stream yields clauses renamed apart from everything else. The goal
//! passed in is fully resolved; it only narrows the stream (functor filter,
//! intersection pairing, encapsulated proofs) and is never bound here.

use std::rc::Rc;
use std::sync::Arc;

use super::machine::Machine;
use super::{Core, Env};
use crate::expr::{ProgramExpression, ProgramRef};
use crate::program::{Clause, Goal, ProgramId};
use crate::subst::{rename_apart, Bindings};
use crate::term::Term;

pub(crate) type ClauseStream = Box<dyn Iterator<Item = Clause>>;

/// Rewrites the reductions into nested binary operators, folding left.
pub(crate) fn unfold(e: &ProgramExpression) -> ProgramExpression {
    use ProgramExpression::*;
    match e {
        ReduceRestrict(base, refs) => refs.iter().fold(unfold(base), |acc, r| Restriction(Box::new(acc), r.clone())),
        ReduceOp(op, es) => {
            let mut it = es.iter().map(unfold);
            let first = it.next().unwrap_or(Empty);
            it.fold(first, |acc, x| match op {
                crate::expr::ReduceOp::Union => ProgramExpression::union(acc, x),
                crate::expr::ReduceOp::Intersection => ProgramExpression::intersection(acc, x),
            })
        }
        other => other.clone(),
    }
}

/// Clauses of `e` that may resolve `goal`, in selection order.
pub(crate) fn select(core: &Rc<Core>, env: &Rc<Env>, e: &ProgramExpression, goal: &Term) -> ClauseStream {
    use ProgramExpression::*;
    match e {
        Empty | CurrentContext => Box::new(std::iter::empty()),
        Id(p) => select_id(core, p, goal),
        Union(a, b) => {
            let (core2, env2, b, goal2) = (core.clone(), env.clone(), b.clone(), goal.clone());
            Box::new(select(core, env, a, goal).chain(LazyStream::new(move || select(&core2, &env2, &b, &goal2))))
        }
        Intersection(a, b) => Box::new(IntersectionStream {
            core: core.clone(),
            env: env.clone(),
            right: (**b).clone(),
            goal: goal.clone(),
            left: select(core, env, a, goal),
            current: None,
            occurs_check: core.config.occurs_check,
        }),
        Restriction(base, r) => {
            let hidden = match r {
                ProgramRef::Id(p) => p.clone(),
                ProgramRef::CurrentContext => return Box::new(std::iter::empty()),
            };
            let core2 = core.clone();
            Box::new(select(core, env, base, goal).filter(move |c| {
                let (name, arity) = c.key();
                !core2.store.borrow().defines(&hidden, name, arity)
            }))
        }
        Encapsulation(inner) => Box::new(EncapsulationStream::new(core, env, inner, goal)),
        ReduceRestrict(..) | ReduceOp(..) => select(core, env, &unfold(e), goal),
    }
}

fn select_id(core: &Rc<Core>, p: &ProgramId, goal: &Term) -> ClauseStream {
    let Some(program) = core.store.borrow().get(p) else { return Box::new(std::iter::empty()) };
    let Some((f, n)) = goal.functor() else { return Box::new(std::iter::empty()) };
    let (f, n) = (f.clone(), n);
    let mut i = 0;
    Box::new(std::iter::from_fn(move || {
        while i < program.clauses.len() {
            let c = &program.clauses[i];
            i += 1;
            if c.head.functor() == Some((&f, n)) {
                return Some(c.renamed());
            }
        }
        None
    }))
}

/// Defers building the right operand of a union until the left runs dry.
struct LazyStream<F: FnOnce() -> ClauseStream> {
    make: Option<F>,
    stream: Option<ClauseStream>,
}

impl<F: FnOnce() -> ClauseStream> LazyStream<F> {
    fn new(make: F) -> Self {
        LazyStream { make: Some(make), stream: None }
    }
}

impl<F: FnOnce() -> ClauseStream> Iterator for LazyStream<F> {
    type Item = Clause;
    fn next(&mut self) -> Option<Clause> {
        if let Some(make) = self.make.take() {
            self.stream = Some(make());
        }
        self.stream.as_mut()?.next()
    }
}

/// Pairs each clause `H1 :- G1` of the left operand with each clause
/// `H2 :- G2` of the right operand selected for the goal instantiated by
/// `H1`, yielding `H :- (G1, G2)` under their most general unifier.
struct IntersectionStream {
    core: Rc<Core>,
    env: Rc<Env>,
    right: ProgramExpression,
    goal: Term,
    left: ClauseStream,
    current: Option<(Clause, Bindings, ClauseStream)>,
    occurs_check: bool,
}

impl Iterator for IntersectionStream {
    type Item = Clause;
    fn next(&mut self) -> Option<Clause> {
        loop {
            if let Some((c1, b, rights)) = &mut self.current {
                for c2 in rights.by_ref() {
                    let mark = b.mark();
                    if b.unify(&c1.head, &c2.head, self.occurs_check) {
                        let body = Goal::Conj(c1.body.clone(), c2.body.clone());
                        let clause = Clause {
                            head: b.resolve(&c1.head),
                            body: Arc::new(body.map_terms(&mut |t| b.resolve(t))),
                        };
                        b.undo_to(mark);
                        return Some(clause);
                    }
                    b.undo_to(mark);
                }
                self.current = None;
            }
            let c1 = self.left.next()?;
            let mut b = Bindings::new();
            if !b.unify(&self.goal, &c1.head, self.occurs_check) {
                continue;
            }
            let narrowed = b.resolve(&self.goal);
            let rights = select(&self.core, &self.env, &self.right, &narrowed);
            self.current = Some((c1, b, rights));
        }
    }
}

/// Facts `A.` for every instance `A` of the goal provable in the operand.
struct EncapsulationStream {
    machine: Machine,
    goal: Term,
}

impl EncapsulationStream {
    fn new(core: &Rc<Core>, env: &Rc<Env>, inner: &ProgramExpression, goal: &Term) -> Self {
        let sub_env = Rc::new(env.enter_encapsulated(inner.clone()));
        let machine = Machine::new(core.clone(), Goal::Call(goal.clone()), sub_env);
        EncapsulationStream { machine, goal: goal.clone() }
    }
}

impl Iterator for EncapsulationStream {
    type Item = Clause;
    fn next(&mut self) -> Option<Clause> {
        if !self.machine.next_solution() {
            return None;
        }
        let instance = self.machine.resolve(&self.goal);
        Some(Clause::fact(rename_apart(&instance)))
    }
}
