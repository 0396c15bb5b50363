//! A policy capping the number of simultaneously open files at ten.
//!
//! cargo run --example fd_limit_policy

use logicweb::{FixtureFetcher, PolicyRegistry, ProgramId, Session};

fn main() {
    let web = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/web");
    let registry = PolicyRegistry::new(ProgramId::get("file:///policies/fdlimit.html").unwrap());
    let s = Session::builder(registry).fetcher(FixtureFetcher::new(web)).build();
    let main = ProgramId::get("http://www.apps.test/files.html").unwrap();
    let path = std::env::temp_dir().join(format!("logicweb-fd-{}", std::process::id()));
    let p = format!("{:?}", path.to_str().unwrap());

    let opened = s.query(&main, &format!("open_many({}, 10, Ss)", p)).unwrap();
    println!("ten opens: {}, streams open: {}", opened.succeeded(), s.open_streams());
    let first = opened.answers[0].get("Ss").unwrap().as_list().unwrap()[0].clone();
    let eleventh = s.query(&main, &format!("open({}, write, _)", p)).unwrap();
    println!("eleventh open: {}", eleventh.succeeded());
    let closed = s.query(&main, &format!("close({})", first)).unwrap();
    println!("close one: {}, streams open: {}", closed.succeeded(), s.open_streams());
    let again = s.query(&main, &format!("open({}, write, _)", p)).unwrap();
    println!("open again: {}", again.succeeded());
    std::fs::remove_file(path).ok();
}
