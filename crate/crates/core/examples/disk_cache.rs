//! Persisting downloaded programs between sessions.
//!
//! cargo run --example disk_cache

use logicweb::cache::DiskCache;
use logicweb::{FixtureFetcher, PolicyRegistry, ProgramId, Session};

fn session() -> Session {
    let web = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/web");
    let registry = PolicyRegistry::new(ProgramId::get("file:///policies/permissive.html").unwrap());
    Session::builder(registry).fetcher(FixtureFetcher::new(web)).build()
}

fn main() {
    let dir = std::env::temp_dir().join(format!("logicweb-cache-{}", std::process::id()));
    let cache = DiskCache::new(&dir);
    let home = ProgramId::get("http://www.cs.mu.oz.au/~swl/").unwrap();

    let first = session();
    let n = first.query(&home, "interested_in(_)").unwrap().answers.len();
    println!("first session: {} answers, {} programs created", n, first.guard_state().program_count);
    println!("saved {} programs", cache.save(&first).unwrap());

    let second = session();
    println!("restored {} programs", cache.load(&second).unwrap());
    for e in cache.entries().unwrap() {
        println!("  {}  ->  {}", e.program.id, e.policy.map(|p| p.to_string()).unwrap_or_default());
    }
    let n = second.query(&home, "interested_in(_)").unwrap().answers.len();
    println!("second session: {} answers, {} programs created", n, second.guard_state().program_count);
    cache.clear().unwrap();
    std::fs::remove_dir_all(dir).ok();
}
