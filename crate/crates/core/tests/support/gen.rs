//! Random fixtures: pure single programs for the oracle comparison, and
//! small webs of programs and stateless policies for the security checks.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{RngExt, SeedableRng};

use super::reference::{R, RClause};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn term(rng: &mut StdRng, depth: u32, vars: u32) -> R {
    match rng.random_range(0..if depth > 0 { 9 } else { 7 }) {
        0 | 1 => R::Var(rng.random_range(0..vars)),
        2 => R::atom(["a", "b", "c"].choose(rng).unwrap()),
        3 => R::Int(rng.random_range(0..3)),
        4 => R::string(["s", "t"].choose(rng).unwrap()),
        5 | 6 => R::Var(rng.random_range(0..vars)),
        7 => R::fun("f", vec![term(rng, depth - 1, vars)]),
        _ => R::fun("g", vec![term(rng, depth - 1, vars), term(rng, depth - 1, vars)]),
    }
}

fn call(rng: &mut StdRng, name: &str, arity: usize, vars: u32) -> R {
    let args = (0..arity).map(|_| term(rng, 2, vars)).collect();
    R::fun(name, args)
}

/// A stratified program over `p0..p3`, and a query over `V0..V2`.
pub struct PureCase {
    pub clauses: Vec<RClause>,
    pub query: Vec<R>,
    pub vars: Vec<R>,
}

impl PureCase {
    pub fn query_text(&self) -> String {
        self.query.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(", ")
    }

    pub fn var_names(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.to_string()).collect()
    }
}

pub fn pure_case(rng: &mut StdRng) -> PureCase {
    let arities: Vec<usize> = (0..4).map(|_| rng.random_range(0..3)).collect();
    let mut clauses = Vec::new();
    for (i, &arity) in arities.iter().enumerate() {
        for _ in 0..rng.random_range(1..=4) {
            let head = call(rng, &format!("p{}", i), arity, 4);
            let mut body = Vec::new();
            for _ in 0..rng.random_range(0..=3) {
                let g = match rng.random_range(0..12) {
                    0..=4 if i > 0 => {
                        let j = rng.random_range(0..i);
                        call(rng, &format!("p{}", j), arities[j], 4)
                    }
                    0..=2 => R::fun("=", vec![term(rng, 1, 4), term(rng, 1, 4)]),
                    5 | 6 => R::fun("=", vec![term(rng, 1, 4), term(rng, 1, 4)]),
                    7 => R::fun(["\\=", "==", "\\=="].choose(rng).unwrap(), vec![term(rng, 1, 4), term(rng, 1, 4)]),
                    8 => R::atom("!"),
                    9 => R::atom("true"),
                    10 if rng.random_bool(0.3) => R::atom("fail"),
                    _ => R::atom("true"),
                };
                body.push(g);
            }
            clauses.push(RClause { head, body });
        }
    }
    let mut query = Vec::new();
    for _ in 0..rng.random_range(1..=2) {
        let j = rng.random_range(0..4);
        query.push(call(rng, &format!("p{}", j), arities[j], 3));
    }
    let mut vars = Vec::new();
    for g in &query {
        collect_vars(g, &mut vars);
    }
    PureCase { clauses, query, vars }
}

fn collect_vars(t: &R, out: &mut Vec<R>) {
    match t {
        R::Var(_) if !out.contains(t) => out.push(t.clone()),
        R::Fun(_, args) => args.iter().for_each(|a| collect_vars(a, out)),
        _ => {}
    }
}

pub fn page(body: &str) -> String {
    format!("<HTML><BODY>\n<LW_CODE>\n{}</LW_CODE>\n</BODY></HTML>\n", body)
}

pub const COMMANDS: [&str; 4] = ["cmd0", "cmd1", "cmd2", "cmd3"];

/// Up to four programs calling each other through composed contexts and
/// making system calls, governed by up to three stateless policies.
#[derive(Clone, Debug)]
pub struct SecCase {
    /// Program URL and page source.
    pub programs: Vec<(String, String)>,
    /// Policy URL and clauses.
    pub policies: Vec<(String, Vec<RClause>)>,
    /// Program URL to policy URL.
    pub assignment: BTreeMap<String, String>,
}

impl SecCase {
    pub fn registry_config(&self) -> String {
        let mut s = format!("default {}\n", self.policies[0].0);
        for (prog, pol) in &self.assignment {
            let prefix = prog.trim_end_matches("index.html");
            s.push_str(&format!("trusted {} {}\n", prefix, pol));
        }
        s.push_str("trusted-assignment on\n");
        s
    }

    pub fn is_policy(&self, url: &str) -> bool {
        self.policies.iter().any(|(u, _)| u == url)
    }

    pub fn policy_clauses(&self, url: &str) -> &[RClause] {
        &self.policies.iter().find(|(u, _)| u == url).expect("known policy").1
    }

    pub fn main(&self) -> &str {
        &self.programs[0].0
    }
}

fn lw(url: &str) -> String {
    format!("lw(get, \"{}\")", url)
}

fn context(rng: &mut StdRng, urls: &[String]) -> String {
    let mut pick = || lw(urls.choose(rng).unwrap());
    let (a, b) = (pick(), pick());
    match rng.random_range(0..7) {
        0 | 1 => a,
        2 => format!("({} + {})", a, b),
        3 => format!("({} * {})", a, b),
        4 => format!("(# + {})", a),
        5 => format!("@{}", a),
        _ => format!("({} / {})", a, b),
    }
}

fn system_call(rng: &mut StdRng) -> String {
    format!("system(\"{}\")", COMMANDS.choose(rng).unwrap())
}

fn program_source(rng: &mut StdRng, urls: &[String], is_main: bool) -> String {
    let mut clauses = Vec::new();
    let budget = rng.random_range(1..=6);
    for level in 0..3 {
        let n = if level == 0 && is_main { 2 } else { rng.random_range(0..=2) };
        for _ in 0..n {
            if clauses.len() >= budget {
                break;
            }
            let head = format!("g{}", level);
            if level == 2 {
                clauses.push(if rng.random_bool(0.5) { format!("{}.", head) } else { format!("{} :- {}.", head, system_call(rng)) });
                continue;
            }
            let next = format!("g{}", level + 1);
            let goals: Vec<String> = (0..rng.random_range(1..=3))
                .map(|_| match rng.random_range(0..10) {
                    0..=2 => system_call(rng),
                    3..=6 => format!("{}#>{}", context(rng, urls), next),
                    7 => next.clone(),
                    8 => "!".to_string(),
                    _ => "true".to_string(),
                })
                .collect();
            clauses.push(format!("{} :- {}.", head, goals.join(", ")));
        }
    }
    clauses.push("g2.".to_string());
    clauses.join("\n") + "\n"
}

fn policy(rng: &mut StdRng, urls: &[String]) -> Vec<RClause> {
    let fact = |head: R| RClause { head, body: vec![] };
    let mut out = Vec::new();
    match rng.random_range(0..4) {
        0 => out.push(fact(R::fun("valid_program", vec![R::Var(0), R::Var(1)]))),
        1 => {
            for u in urls {
                if rng.random_bool(0.6) {
                    out.push(fact(R::fun("valid_program", vec![R::atom("get"), R::string(u)])));
                }
            }
        }
        2 => out.push(RClause {
            head: R::fun("valid_program", vec![R::atom("get"), R::Var(0)]),
            body: vec![R::fun("\\==", vec![R::Var(0), R::string(urls.choose(rng).unwrap())])],
        }),
        _ => {}
    }
    let sys = |c: &str| R::fun("system", vec![R::string(c)]);
    match rng.random_range(0..4) {
        0 => out.push(fact(R::fun("valid_systemCall", vec![R::Var(0)]))),
        1 => {
            for c in COMMANDS {
                if rng.random_bool(0.6) {
                    out.push(fact(R::fun("valid_systemCall", vec![sys(c)])));
                }
            }
        }
        2 => out.push(RClause {
            head: R::fun("valid_systemCall", vec![R::fun("system", vec![R::Var(0)])]),
            body: vec![R::fun("\\==", vec![R::Var(0), R::string(COMMANDS.choose(rng).unwrap())])],
        }),
        _ => {}
    }
    out
}

/// Source of a policy page: the clauses plus the execution wrapper.
pub fn policy_source(clauses: &[RClause]) -> String {
    let mut s = super::reference::program_text(clauses);
    s.push_str("call_system(G) :- built_ins:call_builtin(G).\n");
    s
}

pub fn sec_case(rng: &mut StdRng) -> SecCase {
    let n = rng.random_range(1..=4);
    let m = rng.random_range(1..=3);
    let urls: Vec<String> = (0..n).map(|k| format!("http://p{}.test/index.html", k)).collect();
    let policies: Vec<(String, Vec<RClause>)> =
        (0..m).map(|k| (format!("file:///pol{}.html", k), policy(rng, &urls))).collect();
    let assignment = urls.iter().map(|u| (u.clone(), policies.choose(rng).unwrap().0.clone())).collect();
    let programs = urls.iter().enumerate().map(|(k, u)| (u.clone(), program_source(rng, &urls, k == 0))).collect();
    SecCase { programs, policies, assignment }
}

fn sys_call_term(rng: &mut StdRng) -> R {
    match rng.random_range(0..3) {
        0 => R::fun(
            "open",
            vec![R::string(["/tmp/a", "/etc/p"].choose(rng).unwrap()), R::atom(["read", "write"].choose(rng).unwrap()), R::Var(9)],
        ),
        1 => R::fun("system", vec![R::string(COMMANDS.choose(rng).unwrap())]),
        _ => R::fun("close", vec![R::fun("$stream", vec![R::Int(rng.random_range(1..3))])]),
    }
}

/// A random `valid_systemCall/1` policy mixing facts, guards and cuts.
pub fn call_policy(rng: &mut StdRng) -> Vec<RClause> {
    let vsc = |arg: R| R::fun("valid_systemCall", vec![arg]);
    let mut out = Vec::new();
    if rng.random_bool(0.3) {
        let denied = R::fun("system", vec![R::string(COMMANDS.choose(rng).unwrap())]);
        out.push(RClause { head: vsc(denied), body: vec![R::atom("!"), R::atom("fail")] });
    }
    for _ in 0..rng.random_range(0..=3) {
        let c = match rng.random_range(0..6) {
            0 => RClause { head: vsc(R::fun("open", vec![R::Var(0), R::atom("read"), R::Var(1)])), body: vec![] },
            1 => RClause { head: vsc(R::fun("open", vec![R::string("/tmp/a"), R::Var(0), R::Var(1)])), body: vec![] },
            2 => RClause {
                head: vsc(R::fun("system", vec![R::Var(0)])),
                body: vec![R::fun("\\==", vec![R::Var(0), R::string(COMMANDS.choose(rng).unwrap())])],
            },
            3 => RClause { head: vsc(R::fun("system", vec![R::string(COMMANDS.choose(rng).unwrap())])), body: vec![] },
            4 => RClause { head: vsc(R::fun("close", vec![R::Var(0)])), body: vec![] },
            _ => RClause { head: vsc(R::Var(0)), body: if rng.random_bool(0.5) { vec![] } else { vec![R::atom("fail")] } },
        };
        out.push(c);
    }
    out
}

/// A random system call for `call_policy` policies.
pub fn random_call(rng: &mut StdRng) -> R {
    sys_call_term(rng)
}
