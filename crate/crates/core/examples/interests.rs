//! Translates the research-interests home page and asks who is interested
//! in what, following the friend links depth first.
//!
//! cargo run --example interests

use logicweb::fetch::retrieve;
use logicweb::{FixtureFetcher, Method, PolicyRegistry, ProgramId, Session};

fn main() {
    let web = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/web");
    let home = ProgramId::get("http://www.cs.mu.oz.au/~swl/").unwrap();

    let page = retrieve(&FixtureFetcher::new(web), &home).expect("fixture page");
    println!("-- {} as a program --", home);
    print!("{}", page.program.to_text());
    assert_eq!(*home.method(), Method::Get);

    let registry = PolicyRegistry::new(ProgramId::get("file:///policies/permissive.html").unwrap());
    let session = Session::builder(registry).fetcher(FixtureFetcher::new(web)).build();
    println!("-- interested_in(X) --");
    for answer in session.solutions(&home, "interested_in(X)").unwrap() {
        println!("{}", answer);
    }
}
