//! The iterative resolution machine.
//!
//! Continuations are persistent linked lists so choicepoints can share them;
//! the choicepoint stack holds lazy clause streams. Cut truncates the stack
//! to the barrier recorded in the goal's environment.

use std::rc::Rc;
use std::sync::Arc;

use super::select::{select, ClauseStream};
use super::{Core, Env, PolicySet};
use crate::audit::{AuditKind, AuditSubject};
use crate::builtins::{BuiltinCtx, BuiltinKind};
use crate::expr::{ProgramExpression, ReduceOp};
use crate::guard::{Ancestor, GuardEvent};
use crate::program::{Goal, ProgramId};
use crate::subst::{rename_apart, Bindings};
use crate::term::Term;

enum Item {
    Solve(Arc<Goal>, Rc<Env>),
    /// Commits an if-then-else: drops the else branch and the condition's
    /// alternatives.
    CutTo(usize),
}

struct Node {
    item: Item,
    next: Cont,
}

type Cont = Option<Rc<Node>>;

impl Drop for Node {
    fn drop(&mut self) {
        let mut next = self.next.take();
        while let Some(rc) = next {
            match Rc::try_unwrap(rc) {
                Ok(mut node) => next = node.next.take(),
                Err(_) => break,
            }
        }
    }
}

fn push(item: Item, next: Cont) -> Cont {
    Some(Rc::new(Node { item, next }))
}

enum Alt {
    Clauses { goal: Term, env: Rc<Env>, stream: ClauseStream },
    Instances { goal: Term, instances: std::vec::IntoIter<Term> },
    Goal(Arc<Goal>, Rc<Env>),
}

struct ChoicePoint {
    mark: usize,
    cont: Cont,
    alt: Alt,
}

pub(crate) struct Machine {
    core: Rc<Core>,
    bindings: Bindings,
    cont: Cont,
    choices: Vec<ChoicePoint>,
    started: bool,
    exhausted: bool,
    pending_body: Option<Arc<Goal>>,
}

impl Machine {
    pub(crate) fn new(core: Rc<Core>, goal: Goal, env: Rc<Env>) -> Machine {
        Machine {
            core,
            bindings: Bindings::new(),
            cont: push(Item::Solve(Arc::new(goal), env), None),
            choices: Vec::new(),
            started: false,
            exhausted: false,
            pending_body: None,
        }
    }

    pub(crate) fn resolve(&self, t: &Term) -> Term {
        self.bindings.resolve(t)
    }

    /// Advances to the next solution. False once the search space is
    /// exhausted or a guard has stopped evaluation.
    pub(crate) fn next_solution(&mut self) -> bool {
        if self.exhausted {
            return false;
        }
        if self.started && !self.backtrack() {
            self.exhausted = true;
            return false;
        }
        self.started = true;
        if self.run() {
            true
        } else {
            self.exhausted = true;
            false
        }
    }

    fn stopped(&self) -> bool {
        self.core.guards.borrow_mut().check_deadline().is_some()
    }

    /// Runs until the continuation is empty (a solution) or nothing is left.
    fn run(&mut self) -> bool {
        loop {
            if self.stopped() {
                self.choices.clear();
                return false;
            }
            let Some(node) = self.cont.take() else { return true };
            self.cont = node.next.clone();
            let ok = match &node.item {
                Item::CutTo(h) => {
                    self.choices.truncate(*h);
                    true
                }
                Item::Solve(g, env) => self.step(g, env),
            };
            if !ok && !self.backtrack() {
                return false;
            }
        }
    }

    fn step(&mut self, g: &Arc<Goal>, env: &Rc<Env>) -> bool {
        match &**g {
            Goal::True => true,
            Goal::Cut => {
                self.choices.truncate(env.cut_barrier);
                true
            }
            Goal::Conj(a, b) => {
                let rest = push(Item::Solve(b.clone(), env.clone()), self.cont.take());
                self.cont = push(Item::Solve(a.clone(), env.clone()), rest);
                true
            }
            Goal::Disj(a, b) => {
                self.push_choice(Alt::Goal(b.clone(), env.clone()));
                self.cont = push(Item::Solve(a.clone(), env.clone()), self.cont.take());
                true
            }
            Goal::IfThenElse(c, t, e) => {
                self.if_then_else(c.clone(), t.clone(), e.clone(), env);
                true
            }
            Goal::ContextSwitch(e, body) => self.context_switch(e, body, env),
            Goal::Call(t) => self.call(t, env),
        }
    }

    fn if_then_else(&mut self, c: Arc<Goal>, t: Arc<Goal>, e: Arc<Goal>, env: &Rc<Env>) {
        let h = self.choices.len();
        self.push_choice(Alt::Goal(e, env.clone()));
        let then = push(Item::Solve(t, env.clone()), self.cont.take());
        let commit = push(Item::CutTo(h), then);
        let cond_env = Rc::new(env.with_barrier(h + 1));
        self.cont = push(Item::Solve(c, cond_env), commit);
    }

    fn push_choice(&mut self, alt: Alt) {
        self.choices.push(ChoicePoint { mark: self.bindings.mark(), cont: self.cont.clone(), alt });
    }

    fn diagnostic(&self, msg: String) {
        self.core.diagnostics.borrow_mut().push(msg);
    }

    fn call(&mut self, t: &Term, env: &Rc<Env>) -> bool {
        let goal = self.bindings.resolve(t);
        let Some((f, n)) = goal.functor() else {
            let what = if goal.is_var() { "instantiation error" } else { "type error: callable expected" };
            self.diagnostic(format!("{}: {}", what, goal));
            return false;
        };
        match (f.as_str(), n) {
            ("call", 1) => {
                let inner = Goal::from_term(&goal.args()[0]);
                if goal.args()[0].is_var() {
                    self.diagnostic(format!("instantiation error: {}", goal));
                    return false;
                }
                let opaque = Rc::new(env.with_barrier(self.choices.len()));
                self.cont = push(Item::Solve(Arc::new(inner), opaque), self.cont.take());
                return true;
            }
            ("\\+", 1) | ("not", 1) => {
                let inner = Arc::new(Goal::Call(Term::compound("call", vec![goal.args()[0].clone()])));
                let fail = Arc::new(Goal::Call(Term::atom("fail")));
                self.if_then_else(inner, fail, Arc::new(Goal::True), env);
                return true;
            }
            (":", 2) if goal.args()[0].as_atom() == Some("built_ins") => {
                return self.qualified_builtin(&goal, &goal.args()[1], env);
            }
            _ => {}
        }
        if let Some(spec) = self.core.builtins.lookup(&goal).copied() {
            return match spec.kind {
                BuiltinKind::Pure => self.run_builtin(&goal, env, false),
                BuiltinKind::System => self.system_call(&goal, env),
            };
        }
        self.resolve_user(goal, env)
    }

    /// `built_ins:call_builtin(G)` and `built_ins:builtin(G)` are reachable
    /// only from derivations with an empty policy set.
    fn qualified_builtin(&mut self, full: &Term, inner: &Term, env: &Rc<Env>) -> bool {
        if !env.sigma.is_empty() {
            self.diagnostic(format!("denied outside a policy program: {}", full));
            return false;
        }
        if inner.has_functor("call_builtin", 1) {
            let g = &inner.args()[0];
            if self.core.builtins.lookup(g).is_none() {
                self.diagnostic(format!("not a built-in: {}", g));
                return false;
            }
            return self.run_builtin(&g.clone(), env, true);
        }
        if inner.has_functor("builtin", 1) {
            return self.core.builtins.lookup(&inner.args()[0]).is_some();
        }
        self.diagnostic(format!("unknown built-in service: {}", full));
        false
    }

    /// Rules for system calls: with policies, check `valid_systemCall/1` in
    /// the intersection of all encapsulated policies, then hand the call to
    /// `call_system/1` of the oldest policy. Without policies, run the
    /// type-checked built-in directly.
    fn system_call(&mut self, goal: &Term, env: &Rc<Env>) -> bool {
        if env.sigma.is_empty() {
            return self.run_builtin(goal, env, true);
        }
        let check = Term::compound("valid_systemCall", vec![goal.clone()]);
        if !self.core.check_in_policies(&env.sigma, Goal::Call(check), env.depth) {
            return false;
        }
        let last = env.sigma.last().expect("non-empty policy set").clone();
        self.core.emit(AuditKind::Syscall, AuditSubject::Goal(goal.clone()), env, None);
        let switch = Goal::ContextSwitch(
            last.to_term(),
            Arc::new(Goal::Call(Term::compound("call_system", vec![goal.clone()]))),
        );
        let policy_env = Rc::new(Env::root(env.depth, self.choices.len()));
        self.cont = push(Item::Solve(Arc::new(switch), policy_env), self.cont.take());
        true
    }

    fn run_builtin(&mut self, goal: &Term, env: &Rc<Env>, audited: bool) -> bool {
        let Some(spec) = self.core.builtins.lookup(goal).copied() else { return false };
        if let Some(r) = self.core.observe(&GuardEvent::BuiltinInvoked { goal }) {
            self.core.guards.borrow_mut().terminate(r);
            return false;
        }
        let deadline = self.core.guards.borrow().deadline();
        let mut cx = BuiltinCtx {
            host: &self.core.host,
            store: &self.core.store,
            registry: &self.core.registry,
            context: &env.ctx,
            deadline,
            occurs_check: self.core.config.occurs_check,
            reported: Vec::new(),
        };
        let result = spec.call(&mut cx, goal);
        let reported = std::mem::take(&mut cx.reported);
        for cmd in reported {
            self.core.emit(AuditKind::Report, AuditSubject::Goal(Term::string(&cmd)), env, None);
        }
        if audited && spec.kind == BuiltinKind::System {
            let note = match &result {
                Ok(v) if v.is_empty() => "failed".to_string(),
                Ok(_) => "ok".to_string(),
                Err(e) => e.to_string(),
            };
            self.core.emit(AuditKind::Builtin, AuditSubject::Goal(goal.clone()), env, Some(note));
        }
        let instances = match result {
            Ok(v) => v,
            Err(e) => {
                self.diagnostic(format!("{}: {}", goal, e));
                return false;
            }
        };
        let mut it = instances.into_iter();
        match (it.next(), it.len()) {
            (None, _) => false,
            (Some(only), 0) => self.bindings.unify_or_undo(goal, &only, self.core.config.occurs_check),
            (Some(first), _) => {
                let rest: Vec<Term> = std::iter::once(first).chain(it).collect();
                self.push_choice(Alt::Instances { goal: goal.clone(), instances: rest.into_iter() });
                self.retry_top()
            }
        }
    }

    fn resolve_user(&mut self, goal: Term, env: &Rc<Env>) -> bool {
        let stream = select(&self.core, env, &env.ctx, &goal);
        self.push_choice(Alt::Clauses { goal, env: env.clone(), stream });
        self.retry_top()
    }

    /// Tries the next alternative of the topmost choicepoint; pops it when
    /// it has none left.
    fn retry_top(&mut self) -> bool {
        let occurs = self.core.config.occurs_check;
        let Some(cp) = self.choices.last() else { return false };
        self.bindings.undo_to(cp.mark);
        let base = cp.cont.clone();
        let barrier = self.choices.len() - 1;
        let (goal, env) = match &cp.alt {
            Alt::Goal(..) => {
                let Some(ChoicePoint { alt: Alt::Goal(g, env), .. }) = self.choices.pop() else { unreachable!() };
                self.cont = push(Item::Solve(g, env), base);
                return true;
            }
            Alt::Instances { goal, .. } => (goal.clone(), None),
            Alt::Clauses { goal, env, .. } => (goal.clone(), Some(env.clone())),
        };
        loop {
            if self.core.guards.borrow().terminated.is_some() {
                return false;
            }
            let candidate = match &mut self.choices.last_mut().expect("choicepoint").alt {
                Alt::Instances { instances, .. } => instances.next(),
                Alt::Clauses { stream, .. } => stream.next().map(|c| {
                    self.pending_body = Some(c.body);
                    c.head
                }),
                Alt::Goal(..) => unreachable!(),
            };
            let Some(candidate) = candidate else {
                self.choices.pop();
                return false;
            };
            if !self.bindings.unify_or_undo(&goal, &candidate, occurs) {
                continue;
            }
            let Some(env) = &env else {
                self.cont = base;
                return true;
            };
            if !self.on_clause_applied(&goal, env) {
                return false;
            }
            let body = self.pending_body.take().expect("clause body");
            let body_env = Rc::new(env.descend(&goal, barrier, self.core.tracks_ancestors()));
            self.cont = push(Item::Solve(body, body_env), base);
            return true;
        }
    }

    fn on_clause_applied(&mut self, goal: &Term, env: &Rc<Env>) -> bool {
        let depth = env.depth + 1;
        let ancestors = env.ancestor_refs();
        let event = GuardEvent::ClauseApplied { depth, context: &env.ctx, goal, ancestors: &ancestors };
        let tripped = self.core.guards.borrow_mut().on_clause_applied(depth, &env.ctx, goal, &ancestors);
        let observed = self.core.observe(&event);
        let tripped = tripped.or(observed);
        if let Some(r) = tripped {
            self.core.guards.borrow_mut().terminate(r);
            return false;
        }
        true
    }

    /// Backtracks to the most recent choicepoint with a remaining alternative.
    fn backtrack(&mut self) -> bool {
        while !self.choices.is_empty() {
            if self.core.guards.borrow_mut().check_deadline().is_some() {
                self.choices.clear();
                return false;
            }
            if self.retry_top() {
                return true;
            }
        }
        false
    }

    /// `E #> G`: resolve `#`, check every non-policy program of the new
    /// context against the current policies, install the programs, extend
    /// the policy set, then solve `G` in the new context.
    fn context_switch(&mut self, e: &Term, body: &Arc<Goal>, env: &Rc<Env>) -> bool {
        let e = self.bindings.resolve(e);
        let expr = match ProgramExpression::from_term(&e).and_then(|x| x.insert_current_context(&env.ctx)) {
            Ok(x) => x,
            Err(err) => {
                self.diagnostic(format!("context switch: {}", err));
                return false;
            }
        };
        let ids = expr.ids_in_order();
        let secured = self.core.config.security_enabled;
        if secured && !env.sigma.is_empty() {
            let mut unchecked: Vec<&ProgramId> = {
                let reg = self.core.registry.borrow();
                ids.iter().filter(|p| !reg.is_policy(p)).collect()
            };
            unchecked.sort_by_cached_key(|p| p.to_string());
            if !unchecked.is_empty() {
                let checks = Goal::conj(
                    unchecked
                        .iter()
                        .map(|p| Goal::Call(Term::compound("valid_program", vec![p.method().to_term(), Term::string(p.url())])))
                        .collect(),
                );
                if !self.core.check_in_policies(&env.sigma, checks, env.depth) {
                    return false;
                }
            }
        }
        if !self.core.add_programs(&ids, env) {
            return false;
        }
        let sigma = if secured {
            match self.core.extend_policies(&env.sigma, &ids) {
                Ok(s) => s,
                Err(err) => {
                    self.diagnostic(format!("context switch: {}", err));
                    return false;
                }
            }
        } else {
            env.sigma.clone()
        };
        let tripped = self.core.guards.borrow_mut().on_context_entered(&expr);
        let entered = Rc::new(env.switch(expr, sigma, self.choices.len()));
        let observed = self.core.observe(&GuardEvent::ContextEntered { context: &entered.ctx });
        if let Some(r) = tripped.or(observed) {
            self.core.guards.borrow_mut().terminate(r);
            return false;
        }
        self.core.emit(AuditKind::ContextSwitch, AuditSubject::Goal(body.to_term()), &entered, None);
        self.cont = push(Item::Solve(body.clone(), entered), self.cont.take());
        true
    }
}

/// `*Σ@`: the intersection of the encapsulations of every policy.
pub(crate) fn policy_intersection(sigma: &PolicySet) -> ProgramExpression {
    ProgramExpression::ReduceOp(
        ReduceOp::Intersection,
        sigma.iter().map(|p| ProgramExpression::encapsulation(ProgramExpression::Id(p.clone()))).collect(),
    )
}

/// Renamed-apart snapshot of a goal for the loop check.
pub(crate) fn ancestor(ctx: &ProgramExpression, goal: &Term) -> Ancestor {
    Ancestor { context: ctx.clone(), goal: rename_apart(goal) }
}
