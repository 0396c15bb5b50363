//! Subscribing to the audit stream: every fetch, context switch and system
//! call with the policies in force.
//!
//! cargo run --example audit_trace

use logicweb::{FixtureFetcher, PolicyRegistry, ProgramId, Session};

fn main() {
    let web = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/web");
    let registry = PolicyRegistry::new(ProgramId::get("file:///policies/ok.html").unwrap());
    let s = Session::builder(registry).fetcher(FixtureFetcher::new(web)).build();
    s.subscribe(|e| {
        let sigma: Vec<String> = e.sigma.iter().map(|p| p.url().to_string()).collect();
        println!("[{:<6}] {}  in {}  under [{}]", e.kind.as_str(), e.subject, e.context, sigma.join(", "));
    });
    let main = ProgramId::get("http://www.apps.test/files.html").unwrap();
    let path = std::env::temp_dir().join(format!("logicweb-audit-{}", std::process::id()));
    let outcome = s.query(&main, &format!("touch({:?})", path.to_str().unwrap())).unwrap();
    println!("touch succeeded: {}", outcome.succeeded());
    std::fs::remove_file(path).ok();
}
