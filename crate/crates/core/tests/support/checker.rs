//! After-the-fact checks of audited derivations: the illegal-operation
//! definition and the policy-coverage lemma, evaluated with the reference
//! resolver against the generator's own view of programs and policies.

use std::collections::{BTreeMap, HashMap};

use logicweb::audit::{AuditEvent, AuditKind, AuditSubject};
use logicweb::builtins::RecordingRunner;
use logicweb::expr::ProgramExpression;
use logicweb::{GuardConfig, MemoryFetcher, PolicyRegistry, Session, Term};

use super::gen::{page, policy_source, SecCase};
use super::reference::{Resolver, R};

/// Program URLs named anywhere in a context, in order of occurrence.
pub fn urls_in(ctx: &ProgramExpression) -> Vec<String> {
    fn walk(t: &Term, out: &mut Vec<String>) {
        if t.has_functor("lw", 2) {
            if let Some(u) = t.args()[1].text() {
                out.push(u.to_string());
            }
            return;
        }
        for a in t.args() {
            walk(a, out);
        }
    }
    let mut out = Vec::new();
    walk(&ctx.to_term(), &mut out);
    out
}

/// The record of one randomized run.
pub struct Run {
    pub events: Vec<AuditEvent>,
    pub commands: Vec<String>,
    pub fetches: BTreeMap<String, usize>,
    pub answers: usize,
}

pub fn execute(case: &SecCase, security: bool) -> Run {
    let web = MemoryFetcher::new();
    for (u, src) in &case.programs {
        web.insert(u, &page(src));
    }
    for (u, clauses) in &case.policies {
        web.insert(u, &page(&policy_source(clauses)));
    }
    let registry = PolicyRegistry::from_config(&case.registry_config()).expect("generated config");
    let runner = RecordingRunner::new();
    let web = std::sync::Arc::new(web);
    let s = Session::builder(registry)
        .shared_fetcher(web.clone())
        .command_runner(runner.clone())
        .guards(GuardConfig { max_clauses: 5_000, ..GuardConfig::default() })
        .security(security)
        .build();
    s.record_audit(true);
    let main = logicweb::ProgramId::get(case.main()).unwrap();
    let answers = s.query(&main, "g0").expect("query parses").answers.len();
    let mut fetches = BTreeMap::new();
    for u in case.programs.iter().map(|p| &p.0).chain(case.policies.iter().map(|p| &p.0)) {
        fetches.insert(u.clone(), web.calls(u));
    }
    Run { events: s.take_audit(), commands: runner.commands(), fetches, answers }
}

fn holds(case: &SecCase, policy: &str, goal: &R) -> bool {
    Resolver::new(case.policy_clauses(policy)).provable(goal).expect("policy checks are small")
}

/// Violations of the illegal-operation definition: an audited system call
/// or oracle call on a non-policy program that some policy of an earlier
/// context in the event's sequence would reject.
pub fn illegal_operations(case: &SecCase, events: &[AuditEvent]) -> Vec<String> {
    let mut out = Vec::new();
    for e in events {
        let check = match (&e.kind, &e.subject) {
            (AuditKind::Syscall, AuditSubject::Goal(g)) => {
                R::fun("valid_systemCall", vec![R::from_term(g, &mut HashMap::new())])
            }
            (AuditKind::Fetch, AuditSubject::Program(id)) if !case.is_policy(id.url()) => {
                R::fun("valid_program", vec![R::atom("get"), R::string(id.url())])
            }
            _ => continue,
        };
        for (i, ctx) in e.sequence.iter().enumerate() {
            for u in urls_in(ctx) {
                if case.is_policy(&u) {
                    continue;
                }
                let p = &case.assignment[&u];
                if !holds(case, p, &check) {
                    out.push(format!("{} {} in context {} of {}: {} rejects {}", e.kind.as_str(), e.subject, i, ctx, p, check));
                }
            }
        }
    }
    out
}

/// Violations of the lemma: a context switch whose policy set misses the
/// policy of a non-policy program met so far.
pub fn lemma_violations(case: &SecCase, events: &[AuditEvent]) -> Vec<String> {
    let mut out = Vec::new();
    for e in events.iter().filter(|e| e.kind == AuditKind::ContextSwitch) {
        let sigma: Vec<&str> = e.sigma.iter().map(|p| p.url()).collect();
        for ctx in &e.sequence {
            for u in urls_in(ctx) {
                if !case.is_policy(&u) && !sigma.contains(&case.assignment[&u].as_str()) {
                    out.push(format!("switch to {}: {} missing for {}", e.context, case.assignment[&u], u));
                }
            }
        }
    }
    out
}

/// Every executed command and every download has an audit event.
pub fn unaudited(run: &Run) -> Vec<String> {
    let mut out = Vec::new();
    let mut syscalls: BTreeMap<String, usize> = BTreeMap::new();
    let mut fetched: BTreeMap<String, usize> = BTreeMap::new();
    for e in &run.events {
        match (&e.kind, &e.subject) {
            (AuditKind::Syscall, AuditSubject::Goal(g)) if g.has_functor("system", 1) => {
                *syscalls.entry(g.args()[0].text().unwrap_or_default().to_string()).or_default() += 1;
            }
            (AuditKind::Fetch, AuditSubject::Program(id)) => *fetched.entry(id.url().to_string()).or_default() += 1,
            _ => {}
        }
    }
    let mut ran: BTreeMap<String, usize> = BTreeMap::new();
    for c in &run.commands {
        *ran.entry(c.clone()).or_default() += 1;
    }
    if ran != syscalls {
        out.push(format!("commands {:?} vs audited {:?}", ran, syscalls));
    }
    for (u, n) in &run.fetches {
        if fetched.get(u).copied().unwrap_or(0) != *n {
            out.push(format!("{} fetched {} times, audited {}", u, n, fetched.get(u).copied().unwrap_or(0)));
        }
    }
    out
}
