//! Program composition: union, intersection, restriction, encapsulation and
//! the reductions over lists, plus the intersection of two policies.
//!
//! cargo run --example policy_composition

use logicweb::reader::term;
use logicweb::{MemoryFetcher, PolicyRegistry, ProgramId, Session};

fn main() {
    let web = MemoryFetcher::new()
        .with_page("http://a.test/", "<LW_CODE>p(1). p(2). q(X) :- p(X).</LW_CODE>")
        .with_page("http://b.test/", "<LW_CODE>p(2). p(3). r(X) :- q(X).</LW_CODE>")
        .with_page("http://c.test/", "<LW_CODE>p(X) :- X > 1.</LW_CODE>")
        .with_page("file:///p.html", "<LW_CODE>valid_systemCall(open(_, read, _)). valid_systemCall(open(_, write, _)).</LW_CODE>")
        .with_page("file:///q.html", "<LW_CODE>valid_systemCall(open(_, read, _)).</LW_CODE>");
    let registry = PolicyRegistry::new(ProgramId::get("file:///p.html").unwrap());
    let s = Session::builder(registry).fetcher(web).security(false).build();

    let (a, b, c) = (r#"lw(get, "http://a.test/")"#, r#"lw(get, "http://b.test/")"#, r#"lw(get, "http://c.test/")"#);
    let goals = [
        format!("({} + {})#>p(X)", a, b),
        format!("({} * {})#>p(X)", a, c),
        format!("({} + {})#>r(X)", a, b),
        format!("(({} + {}) / {})#>p(X)", a, b, a),
        format!("(@{} + {})#>r(X)", a, b),
        format!("(+)<>[{}, {}, {}]#>p(X)", a, b, c),
        format!("(*)<>[{}, {}]#>p(X)", a, b),
        format!("{}#>((# + {})#>r(X))", b, a),
    ];
    for g in &goals {
        let answers: Vec<String> = s.solve(g).unwrap().answers.iter().map(|x| x.to_string()).collect();
        println!("{}\n    {}", g, if answers.is_empty() { "no".to_string() } else { answers.join("; ") });
    }

    let p = ProgramId::get("file:///p.html").unwrap();
    let q = ProgramId::get("file:///q.html").unwrap();
    for call in [r#"open("f", read, _)"#, r#"open("f", write, _)"#] {
        let both = s.system_call_allowed(&[p.clone(), q.clone()], &term(call));
        println!("(@P * @Q) #> valid_systemCall({}): {}", call, both);
    }
}
