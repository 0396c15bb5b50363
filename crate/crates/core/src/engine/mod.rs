//! The derivation engine and the session API.
//!
//! A [`Session`] owns the program store, the policy registry, the guards and
//! the host side effects. Queries start in the empty context with no
//! policies and switch into the main program, so the main program's policy
//! becomes the oldest element of the policy set.

mod machine;
mod select;

use std::cell::{Ref, RefCell, RefMut};
use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::rc::Rc;
use std::sync::Arc;

use crate::audit::{now_ms, AuditEvent, AuditHub, AuditKind, AuditSubject};
use crate::builtins::{BuiltinTable, CommandRunner, Host, ShellRunner};
use crate::expr::ProgramExpression;
use crate::fetch::{retrieve, FetchOutcome, Fetcher, MemoryFetcher};
use crate::guard::{Ancestor, Guard, GuardConfig, GuardEvent, GuardState, TerminationReason};
use crate::program::{Goal, LWProgram, ProgramId};
use crate::reader::{read_term, ParseError};
use crate::security::{PolicyError, PolicyRegistry};
use crate::signature::KeyStore;
use crate::store::ProgramStore;
use crate::term::{Term, Var};

use machine::{ancestor, policy_intersection, Machine};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    /// Without security the policy set stays empty, so no checks are made.
    pub security_enabled: bool,
    pub occurs_check: bool,
    /// Stop after this many answers.
    pub max_solutions: Option<usize>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { security_enabled: true, occurs_check: true, max_solutions: None }
    }
}

/// Ordered policy set, newest first. The last element is the policy of the
/// main program.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PolicySet(Rc<Vec<ProgramId>>);

impl PolicySet {
    pub fn new(newest_first: Vec<ProgramId>) -> Self {
        PolicySet(Rc::new(newest_first))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ProgramId> {
        self.0.iter()
    }

    /// The chronologically first policy.
    pub fn last(&self) -> Option<&ProgramId> {
        self.0.last()
    }

    pub fn contains(&self, p: &ProgramId) -> bool {
        self.0.contains(p)
    }

    pub fn to_vec(&self) -> Vec<ProgramId> {
        self.0.to_vec()
    }
}

struct SeqNode {
    ctx: Rc<ProgramExpression>,
    prev: Option<Rc<SeqNode>>,
}

struct AncNode {
    ancestor: Ancestor,
    prev: Option<Rc<AncNode>>,
}

/// Per-goal evaluation state: policies, context, context sequence, proof
/// depth, ancestors and the cut barrier.
pub(crate) struct Env {
    pub(crate) sigma: PolicySet,
    pub(crate) ctx: Rc<ProgramExpression>,
    seq: Rc<SeqNode>,
    pub(crate) depth: usize,
    ancestors: Option<Rc<AncNode>>,
    pub(crate) cut_barrier: usize,
}

impl Env {
    /// Empty context, no policies.
    pub(crate) fn root(depth: usize, cut_barrier: usize) -> Env {
        let ctx = Rc::new(ProgramExpression::Empty);
        Env {
            sigma: PolicySet::default(),
            seq: Rc::new(SeqNode { ctx: ctx.clone(), prev: None }),
            ctx,
            depth,
            ancestors: None,
            cut_barrier,
        }
    }

    fn clone_with(&self, cut_barrier: usize) -> Env {
        Env {
            sigma: self.sigma.clone(),
            ctx: self.ctx.clone(),
            seq: self.seq.clone(),
            depth: self.depth,
            ancestors: self.ancestors.clone(),
            cut_barrier,
        }
    }

    pub(crate) fn with_barrier(&self, cut_barrier: usize) -> Env {
        self.clone_with(cut_barrier)
    }

    /// Environment of a clause body applied to `goal`.
    pub(crate) fn descend(&self, goal: &Term, cut_barrier: usize, track: bool) -> Env {
        let mut e = self.clone_with(cut_barrier);
        e.depth += 1;
        if track {
            e.ancestors = Some(Rc::new(AncNode { ancestor: ancestor(&self.ctx, goal), prev: self.ancestors.clone() }));
        }
        e
    }

    pub(crate) fn switch(&self, ctx: ProgramExpression, sigma: PolicySet, cut_barrier: usize) -> Env {
        let ctx = Rc::new(ctx);
        Env {
            sigma,
            seq: Rc::new(SeqNode { ctx: ctx.clone(), prev: Some(self.seq.clone()) }),
            ctx,
            depth: self.depth,
            ancestors: self.ancestors.clone(),
            cut_barrier,
        }
    }

    /// Environment of the inner proof of an encapsulation.
    pub(crate) fn enter_encapsulated(&self, inner: ProgramExpression) -> Env {
        self.switch(inner, self.sigma.clone(), 0)
    }

    pub(crate) fn ancestor_refs(&self) -> Vec<&Ancestor> {
        let mut out = Vec::new();
        let mut cur = self.ancestors.as_deref();
        while let Some(n) = cur {
            out.push(&n.ancestor);
            cur = n.prev.as_deref();
        }
        out
    }

    /// Contexts entered so far, oldest first.
    pub(crate) fn sequence(&self) -> Vec<ProgramExpression> {
        let mut out = Vec::new();
        let mut cur = Some(&self.seq);
        while let Some(n) = cur {
            out.push((*n.ctx).clone());
            cur = n.prev.as_ref();
        }
        out.reverse();
        out
    }
}

/// Shared state of one session.
pub(crate) struct Core {
    pub(crate) store: RefCell<ProgramStore>,
    pub(crate) registry: RefCell<PolicyRegistry>,
    pub(crate) guards: RefCell<GuardState>,
    extra_guards: RefCell<Vec<Box<dyn Guard>>>,
    audit: RefCell<AuditHub>,
    pub(crate) host: RefCell<Host>,
    pub(crate) diagnostics: RefCell<Vec<String>>,
    pub(crate) config: EngineConfig,
    keys: KeyStore,
    fetcher: Arc<dyn Fetcher>,
    pub(crate) builtins: BuiltinTable,
}

impl Core {
    pub(crate) fn tracks_ancestors(&self) -> bool {
        self.guards.borrow().config.loop_check || !self.extra_guards.borrow().is_empty()
    }

    pub(crate) fn observe(&self, event: &GuardEvent<'_>) -> Option<TerminationReason> {
        self.extra_guards.borrow_mut().iter_mut().fold(None, |first, g| first.or(g.observe(event)))
    }

    pub(crate) fn emit(&self, kind: AuditKind, subject: AuditSubject, env: &Env, note: Option<String>) {
        let event = AuditEvent {
            timestamp_ms: now_ms(),
            kind,
            subject,
            context: (*env.ctx).clone(),
            sequence: env.sequence(),
            sigma: env.sigma.to_vec(),
            note,
        };
        self.audit.borrow_mut().emit(event);
    }

    /// Oracle call: a cached program or a fresh download, installed with its
    /// policy assignment.
    pub(crate) fn download(&self, id: &ProgramId) -> FetchOutcome {
        if let Some(p) = self.store.borrow().get(id) {
            return FetchOutcome::Program(p);
        }
        match retrieve(self.fetcher.as_ref(), id) {
            Err((reason, detail)) => {
                self.diagnostics.borrow_mut().push(format!("download {}: {}", id, detail));
                FetchOutcome::Bottom { reason, detail }
            }
            Ok(r) => {
                for w in &r.warnings {
                    self.diagnostics.borrow_mut().push(format!("{}: {}", id, w));
                }
                self.install(r.program, r.raw.as_deref());
                FetchOutcome::Program(self.store.borrow().get(id).expect("just installed"))
            }
        }
    }

    /// Installs a new program and assigns its policy once.
    fn install(&self, program: LWProgram, raw: Option<&str>) -> bool {
        let id = program.id.clone();
        let new = self.store.borrow_mut().insert(program);
        if new {
            self.registry.borrow_mut().assign_policy(&id, raw, &self.keys);
            let tripped = self.guards.borrow_mut().on_program_created();
            let count = self.guards.borrow().program_count;
            let observed = self.observe(&GuardEvent::ProgramCreated { count });
            let tripped = tripped.or(observed);
            if let Some(r) = tripped {
                self.guards.borrow_mut().terminate(r);
            }
        }
        new
    }

    /// Downloads every missing id in sorted order; true iff all are present
    /// afterwards.
    pub(crate) fn add_programs(&self, ids: &[ProgramId], env: &Env) -> bool {
        let mut sorted: Vec<&ProgramId> = ids.iter().collect();
        sorted.sort_by_cached_key(|p| p.to_string());
        for id in sorted {
            if self.store.borrow().contains(id) {
                continue;
            }
            self.emit(AuditKind::Fetch, AuditSubject::Program(id.clone()), env, None);
            self.download(id);
        }
        let store = self.store.borrow();
        ids.iter().all(|p| store.contains(p))
    }

    /// Prepends the policies of the non-policy ids not yet in `sigma`.
    pub(crate) fn extend_policies(&self, sigma: &PolicySet, ids: &[ProgramId]) -> Result<PolicySet, PolicyError> {
        let reg = self.registry.borrow();
        let mut added: Vec<ProgramId> = Vec::new();
        for id in ids {
            if reg.is_policy(id) {
                continue;
            }
            let p = reg.pol(id)?;
            if !sigma.contains(&p) && !added.contains(&p) {
                added.push(p);
            }
        }
        if added.is_empty() {
            return Ok(sigma.clone());
        }
        added.reverse();
        added.extend(sigma.iter().cloned());
        Ok(PolicySet::new(added))
    }

    /// First solution of `goal` in `*Σ@`, derived with no policies from the
    /// empty context. Bindings are discarded.
    pub(crate) fn check_in_policies(self: &Rc<Self>, sigma: &PolicySet, goal: Goal, depth: usize) -> bool {
        let switch = Goal::ContextSwitch(policy_intersection(sigma).to_term(), Arc::new(goal));
        Machine::new(self.clone(), switch, Rc::new(Env::root(depth, 0))).next_solution()
    }
}

/// One answer: bindings of the named query variables, in first-occurrence
/// order. Variables starting with `_` are omitted.
#[derive(Clone, Debug, PartialEq)]
pub struct Answer {
    pub bindings: Vec<(String, Term)>,
}

impl Answer {
    pub fn get(&self, name: &str) -> Option<&Term> {
        self.bindings.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bindings.is_empty() {
            return f.write_str("true");
        }
        for (i, (n, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{} = {}", n, t)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryOutcome {
    pub answers: Vec<Answer>,
    /// Set when a guard stopped evaluation; the answers found before are kept.
    pub termination: Option<TerminationReason>,
}

impl QueryOutcome {
    pub fn succeeded(&self) -> bool {
        !self.answers.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QueryError {
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Lazy answer stream of one query.
pub struct Solutions {
    core: Rc<Core>,
    machine: Machine,
    vars: Vec<(String, Var)>,
    produced: usize,
}

impl Solutions {
    /// Why evaluation stopped early, if it did.
    pub fn termination(&self) -> Option<TerminationReason> {
        self.core.guards.borrow().terminated
    }
}

impl Iterator for Solutions {
    type Item = Answer;
    fn next(&mut self) -> Option<Answer> {
        if self.core.config.max_solutions.is_some_and(|m| self.produced >= m) {
            return None;
        }
        if !self.machine.next_solution() {
            return None;
        }
        self.produced += 1;
        let bindings = self
            .vars
            .iter()
            .filter(|(n, _)| !n.starts_with('_'))
            .map(|(n, v)| (n.clone(), self.machine.resolve(&Term::Var(v.clone()))))
            .collect();
        Some(Answer { bindings })
    }
}

pub struct SessionBuilder {
    registry: PolicyRegistry,
    fetcher: Option<Arc<dyn Fetcher>>,
    keys: KeyStore,
    guards: GuardConfig,
    config: EngineConfig,
    out: Option<Box<dyn Write>>,
    runner: Arc<dyn CommandRunner>,
    builtins: BuiltinTable,
}

impl SessionBuilder {
    pub fn fetcher(mut self, f: impl Fetcher + 'static) -> Self {
        self.fetcher = Some(Arc::new(f));
        self
    }

    pub fn shared_fetcher(mut self, f: Arc<dyn Fetcher>) -> Self {
        self.fetcher = Some(f);
        self
    }

    pub fn keys(mut self, keys: KeyStore) -> Self {
        self.keys = keys;
        self
    }

    pub fn guards(mut self, g: GuardConfig) -> Self {
        self.guards = g;
        self
    }

    pub fn config(mut self, c: EngineConfig) -> Self {
        self.config = c;
        self
    }

    pub fn security(mut self, on: bool) -> Self {
        self.config.security_enabled = on;
        self
    }

    /// Destination of `write/1` and `nl/0`; stdout by default.
    pub fn output(mut self, w: impl Write + 'static) -> Self {
        self.out = Some(Box::new(w));
        self
    }

    pub fn command_runner(mut self, r: impl CommandRunner + 'static) -> Self {
        self.runner = Arc::new(r);
        self
    }

    pub fn builtins(mut self, t: BuiltinTable) -> Self {
        self.builtins = t;
        self
    }

    pub fn build(self) -> Session {
        let out = self.out.unwrap_or_else(|| Box::new(std::io::stdout()));
        Session {
            core: Rc::new(Core {
                store: RefCell::new(ProgramStore::new()),
                registry: RefCell::new(self.registry),
                guards: RefCell::new(GuardState::new(self.guards)),
                extra_guards: RefCell::new(Vec::new()),
                audit: RefCell::new(AuditHub::default()),
                host: RefCell::new(Host::new(out, self.runner)),
                diagnostics: RefCell::new(Vec::new()),
                config: self.config,
                keys: self.keys,
                fetcher: self.fetcher.unwrap_or_else(|| Arc::new(MemoryFetcher::new())),
                builtins: self.builtins,
            }),
        }
    }
}

/// An interpreter session. Not shareable across threads.
pub struct Session {
    core: Rc<Core>,
}

impl Session {
    pub fn builder(registry: PolicyRegistry) -> SessionBuilder {
        SessionBuilder {
            registry,
            fetcher: None,
            keys: KeyStore::new(),
            guards: GuardConfig::default(),
            config: EngineConfig::default(),
            out: None,
            runner: Arc::new(ShellRunner),
            builtins: BuiltinTable::default(),
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.core.config
    }

    /// Evaluates `lw(get, main) #> goal` from the empty context with no
    /// policies and collects every answer.
    pub fn query(&self, main: &ProgramId, goal: &str) -> Result<QueryOutcome, QueryError> {
        let mut s = self.solutions(main, goal)?;
        let answers: Vec<Answer> = s.by_ref().collect();
        Ok(QueryOutcome { answers, termination: s.termination() })
    }

    pub fn solutions(&self, main: &ProgramId, goal: &str) -> Result<Solutions, QueryError> {
        let r = read_term(goal)?;
        let body = Goal::ContextSwitch(main.to_term(), Arc::new(Goal::from_term(&r.term)));
        Ok(self.start(body, r.var_names))
    }

    /// Evaluates `goal` as written, from the empty context with no policies.
    pub fn solve(&self, goal: &str) -> Result<QueryOutcome, QueryError> {
        let r = read_term(goal)?;
        let mut s = self.start(Goal::from_term(&r.term), r.var_names);
        let answers: Vec<Answer> = s.by_ref().collect();
        Ok(QueryOutcome { answers, termination: s.termination() })
    }

    fn start(&self, goal: Goal, vars: Vec<(String, Var)>) -> Solutions {
        self.core.guards.borrow_mut().begin_query();
        let machine = Machine::new(self.core.clone(), goal, Rc::new(Env::root(0, 0)));
        Solutions { core: self.core.clone(), machine, vars, produced: 0 }
    }

    /// Whether `goal` passes `valid_systemCall/1` in every given policy,
    /// evaluated as the intersection of their encapsulations.
    pub fn system_call_allowed(&self, policies: &[ProgramId], goal: &Term) -> bool {
        self.core.guards.borrow_mut().begin_query();
        let check = Goal::Call(Term::compound("valid_systemCall", vec![goal.clone()]));
        self.core.check_in_policies(&PolicySet::new(policies.to_vec()), check, 0)
    }

    /// Whether every given policy allows switching into `id`.
    pub fn program_allowed(&self, policies: &[ProgramId], id: &ProgramId) -> bool {
        self.core.guards.borrow_mut().begin_query();
        let check = Goal::Call(Term::compound("valid_program", vec![id.method().to_term(), Term::string(id.url())]));
        self.core.check_in_policies(&PolicySet::new(policies.to_vec()), check, 0)
    }

    /// The oracle: cached program, fresh download, or bottom.
    pub fn download(&self, id: &ProgramId) -> FetchOutcome {
        self.core.download(id)
    }

    /// Downloads the missing ids; true iff all are present afterwards.
    pub fn add_programs(&self, ids: &[ProgramId]) -> bool {
        self.core.add_programs(ids, &Env::root(0, 0))
    }

    /// Installs a program directly, with policy assignment from unsigned
    /// contents. Returns false if the id was already present.
    pub fn install(&self, program: LWProgram) -> bool {
        self.core.install(program, None)
    }

    /// Restores a program and its recorded policy, e.g. from a disk cache.
    /// Does not count as a program creation.
    pub fn restore(&self, program: LWProgram, policy: Option<ProgramId>) -> Result<(), PolicyError> {
        let id = program.id.clone();
        self.core.store.borrow_mut().insert(program);
        if let Some(p) = policy {
            self.core.registry.borrow_mut().restore_assignment(id, p)?;
        }
        Ok(())
    }

    pub fn store(&self) -> Ref<'_, ProgramStore> {
        self.core.store.borrow()
    }

    pub fn store_mut(&self) -> RefMut<'_, ProgramStore> {
        self.core.store.borrow_mut()
    }

    pub fn registry(&self) -> Ref<'_, PolicyRegistry> {
        self.core.registry.borrow()
    }

    pub fn registry_mut(&self) -> RefMut<'_, PolicyRegistry> {
        self.core.registry.borrow_mut()
    }

    pub fn guard_state(&self) -> Ref<'_, GuardState> {
        self.core.guards.borrow()
    }

    pub fn add_guard(&self, g: impl Guard + 'static) {
        self.core.extra_guards.borrow_mut().push(Box::new(g));
    }

    pub fn subscribe(&self, f: impl FnMut(&AuditEvent) + 'static) {
        self.core.audit.borrow_mut().subscribe(f);
    }

    /// Writes syscall and fetch events, one line each.
    pub fn set_audit_log(&self, w: impl Write + 'static) {
        self.core.audit.borrow_mut().set_log(Box::new(w));
    }

    pub fn record_audit(&self, on: bool) {
        self.core.audit.borrow_mut().set_recording(on);
    }

    pub fn take_audit(&self) -> Vec<AuditEvent> {
        self.core.audit.borrow_mut().take_recorded()
    }

    pub fn take_diagnostics(&self) -> Vec<String> {
        std::mem::take(&mut *self.core.diagnostics.borrow_mut())
    }

    /// Commands reported by the deletion hook so far.
    pub fn reports(&self) -> Vec<String> {
        self.core.host.borrow().reports.clone()
    }

    pub fn open_streams(&self) -> usize {
        self.core.host.borrow().open_streams()
    }

    pub fn flush_output(&self) {
        let _ = self.core.host.borrow_mut().out.flush();
    }

    /// Ids of every program seen so far, policies included.
    pub fn known_ids(&self) -> HashSet<ProgramId> {
        self.core.store.borrow().ids().cloned().collect()
    }
}
