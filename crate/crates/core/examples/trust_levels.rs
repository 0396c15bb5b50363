//! Three levels of trust: dangerous, ok and safe policies deciding system
//! calls, and sites mapped to levels by URL prefix.
//!
//! cargo run --example trust_levels

use logicweb::builtins::RecordingRunner;
use logicweb::reader::term;
use logicweb::{FixtureFetcher, PolicyRegistry, ProgramId, Session};

fn main() {
    let root = env!("CARGO_MANIFEST_DIR");
    let web = format!("{}/fixtures/web", root);
    let policy = |name: &str| ProgramId::get(&format!("file:///policies/{}.html", name)).unwrap();

    let s = Session::builder(PolicyRegistry::new(policy("safe"))).fetcher(FixtureFetcher::new(&web)).build();
    let calls = [r#"open("/tmp/out.txt", write, _)"#, r#"open("/etc/passwd", write, _)"#, r#"system("rm -rf /tmp/x")"#, r#"system("ls")"#];
    println!("{:<32} {:>10} {:>10} {:>10}", "call", "dangerous", "ok", "safe");
    for c in calls {
        let verdicts: Vec<&str> = ["dangerous", "ok", "safe"]
            .iter()
            .map(|p| if s.system_call_allowed(&[policy(p)], &term(c)) { "allow" } else { "deny" })
            .collect();
        println!("{:<32} {:>10} {:>10} {:>10}", c, verdicts[0], verdicts[1], verdicts[2]);
    }

    let config = std::fs::read_to_string(format!("{}/fixtures/registry/trust.conf", root)).unwrap();
    let registry = PolicyRegistry::from_config(&config).unwrap();
    let runner = RecordingRunner::new();
    let s = Session::builder(registry).fetcher(FixtureFetcher::new(&web)).command_runner(runner.clone()).build();
    for site in ["www.dangerous.test", "www.ok.test", "www.apps.test"] {
        let main = ProgramId::get(&format!("http://{}/files.html", site)).unwrap();
        for cmd in ["ls", "rm -f /tmp/scratch"] {
            let outcome = s.query(&main, &format!("run({:?})", cmd)).unwrap();
            println!("{:<20} system({:?}): {}", site, cmd, if outcome.succeeded() { "ran" } else { "refused" });
        }
    }
    println!("commands run: {:?}", runner.commands());
    println!("deletions reported: {:?}", s.reports());
}
