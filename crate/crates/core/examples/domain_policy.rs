//! A policy that only admits programs from one domain, with and without
//! security enabled.
//!
//! cargo run --example domain_policy

use logicweb::{FixtureFetcher, PolicyRegistry, ProgramId, Session};

fn session(security: bool) -> Session {
    let web = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/web");
    let registry = PolicyRegistry::new(ProgramId::get("file:///policies/domain.html").unwrap());
    Session::builder(registry).fetcher(FixtureFetcher::new(web)).security(security).build()
}

fn main() {
    let main = ProgramId::get("http://www.cs.mu.oz.au/~swl/").unwrap();
    let goals = [
        r#"lw(get, "http://www.cs.rmit.edu.au/")#>h_text(_)"#,
        r#"lw(get, "http://www.cs.mu.oz.au/")#>h_text(_)"#,
    ];
    for security in [true, false] {
        println!("security {}", if security { "on" } else { "off" });
        let s = session(security);
        for g in goals {
            let outcome = s.query(&main, g).unwrap();
            println!("  {:<55} {}", g, if outcome.succeeded() { "yes" } else { "no" });
        }
    }
}
