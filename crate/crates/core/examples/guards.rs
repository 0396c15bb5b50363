//! Resource guards stopping runaway queries gracefully.
//!
//! cargo run --example guards

use std::time::{Duration, Instant};

use logicweb::{FixtureFetcher, GuardConfig, PolicyRegistry, ProgramId, Session};

fn run(guards: GuardConfig, main: &str, goal: &str) {
    let web = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/web");
    let registry = PolicyRegistry::new(ProgramId::get("file:///policies/permissive.html").unwrap());
    let s = Session::builder(registry).fetcher(FixtureFetcher::new(web)).guards(guards).build();
    let started = Instant::now();
    let outcome = s.query(&ProgramId::get(main).unwrap(), goal).unwrap();
    let reason = outcome.termination.map(|r| r.to_string()).unwrap_or_else(|| "completed".into());
    println!("{:<10} {:<45} {:>8.1?}  clauses {}", goal, reason, started.elapsed(), s.guard_state().clause_count);
}

fn main() {
    let guard = "http://www.guard.test/";
    let looping = GuardConfig { loop_check: true, ..GuardConfig::default() };
    run(looping.clone(), guard, "even");
    run(looping, "http://www.loop.test/a.html", "p");
    run(GuardConfig::default(), guard, "ancestor(a, c)");
    run(GuardConfig::default(), guard, "churn");
    run(GuardConfig::default(), "http://www.crawl.test/", "crawl");
    run(GuardConfig { timeout: Some(Duration::from_millis(200)), ..GuardConfig::default() }, guard, "nap");
}
