//! A policy with memory: context switching is allowed until the program
//! opens a file.
//!
//! cargo run --example historical_policy

use logicweb::{FixtureFetcher, PolicyRegistry, ProgramId, Session};

fn main() {
    let web = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/web");
    let registry = PolicyRegistry::new(ProgramId::get("file:///policies/historical.html").unwrap());
    let s = Session::builder(registry).fetcher(FixtureFetcher::new(web)).build();
    let main = ProgramId::get("http://www.apps.test/files.html").unwrap();
    let dir = std::env::temp_dir().join(format!("logicweb-historical-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("dump.txt");

    let steps = [
        r#"visit("http://www.cs.mu.oz.au/")"#.to_string(),
        format!("touch({:?})", file.to_str().unwrap()),
        r#"visit("http://www.cs.mu.oz.au/")"#.to_string(),
        r#"visit("http://www.cs.rmit.edu.au/")"#.to_string(),
    ];
    for goal in &steps {
        let ok = s.query(&main, goal).unwrap().succeeded();
        println!("{:<60} {}", goal, if ok { "yes" } else { "no" });
    }
    std::fs::remove_dir_all(&dir).ok();
}
