#![allow(dead_code)]

pub mod checker;
pub mod gen;
pub mod reference;

use std::collections::HashMap;
use std::path::PathBuf;

use logicweb::{Answer, FixtureFetcher, PolicyRegistry, ProgramId, Session};

use reference::R;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn web() -> PathBuf {
    fixtures().join("web")
}

pub fn id(url: &str) -> ProgramId {
    ProgramId::get(url).unwrap()
}

pub fn policy(name: &str) -> ProgramId {
    id(&format!("file:///policies/{}.html", name))
}

pub fn registry(name: &str) -> PolicyRegistry {
    let text = std::fs::read_to_string(fixtures().join("registry").join(format!("{}.conf", name))).unwrap();
    PolicyRegistry::from_config(&text).unwrap()
}

/// A session over the fixture mirror whose pages all fall under one policy.
pub fn fixture_session(policy_name: &str) -> Session {
    Session::builder(registry(policy_name)).fetcher(FixtureFetcher::new(web())).build()
}

/// Engine answers in canonical form, for comparison with the reference.
pub fn canonical_answers(answers: &[Answer], names: &[String]) -> Vec<String> {
    answers
        .iter()
        .map(|a| {
            let mut ids = HashMap::new();
            let tuple: Vec<R> = names.iter().map(|n| R::from_term(a.get(n).expect("query variable bound"), &mut ids)).collect();
            reference::canonical(&tuple)
        })
        .collect()
}
