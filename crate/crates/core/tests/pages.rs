//! Properties of page translation and page signatures.

use logicweb::program::parse_clauses;
use logicweb::signature::{authenticate, sign_page, split_signed, SecretKey};
use logicweb::subst::variant;
use logicweb::translate::{translate_page, HttpResponse};
use logicweb::{KeyStore, Method, SignerId, Term};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Page {
    chunks: Vec<String>,
    links: Vec<(String, String)>,
    facts: Vec<(String, i64)>,
    wrapper: usize,
}

fn page() -> impl Strategy<Value = Page> {
    (
        prop::collection::vec("[a-zA-Z0-9 .,!?\n]{0,20}", 1..5),
        prop::collection::vec(("[A-Za-z]{1,8}( [A-Za-z]{1,8}){0,2}", "[a-z]{1,6}"), 0..4),
        prop::collection::vec(("[a-z][a-z0-9_]{0,5}", -50i64..50), 0..5),
        0usize..3,
    )
        .prop_map(|(chunks, links, facts, wrapper)| Page {
            chunks,
            links: links.into_iter().map(|(l, h)| (l, format!("http://links.test/{}.html", h))).collect(),
            facts,
            wrapper,
        })
}

impl Page {
    fn code(&self) -> String {
        let facts: String = self.facts.iter().map(|(p, n)| format!("{}({}).\n", p, n)).collect();
        match self.wrapper {
            0 => facts,
            1 => format!("<!--\n{}-->", facts),
            _ => format!("<PRE>\n{}</PRE>", facts),
        }
    }

    /// The page and the page without its code block.
    fn render(&self) -> (String, String) {
        let mut before = String::from("<HTML><BODY>\n");
        for (i, c) in self.chunks.iter().enumerate() {
            before.push_str(&format!("<P>{}</P>\n", c));
            if let Some((label, href)) = self.links.get(i) {
                before.push_str(&format!("<A HREF=\"{}\">{}</A>\n", href, label));
            }
        }
        for (label, href) in self.links.iter().skip(self.chunks.len()) {
            before.push_str(&format!("<a href='{}'>{}</a>\n", href, label));
        }
        let after = "</BODY></HTML>\n";
        (format!("{}<LW_CODE>{}</LW_CODE>{}", before, self.code(), after), format!("{}{}", before, after))
    }
}

fn response(body: &str) -> HttpResponse {
    HttpResponse {
        requested_url: "http://pages.test/p.html".into(),
        final_url: "http://pages.test/p.html".into(),
        status: 200,
        headers: vec![("Content-Type".into(), "text/html".into()), ("Server".into(), "test".into())],
        body: Some(body.into()),
    }
}

proptest! {
    #[test]
    fn translation_lays_out_every_part_in_order(p in page()) {
        let (html, stripped) = p.render();
        let t = translate_page(&response(&html), &Method::Get).unwrap();
        prop_assert!(t.warnings.is_empty(), "{:?}", t.warnings);
        let heads: Vec<Term> = t.program.clauses.iter().map(|c| c.to_term()).collect();
        let s = Term::string;
        let mut expected = vec![
            Term::compound("about", vec![s("content-type"), s("text/html")]),
            Term::compound("about", vec![s("server"), s("test")]),
            Term::compound("actual_url", vec![s("http://pages.test/p.html")]),
            Term::compound("my_id", vec![Term::atom("get"), s("http://pages.test/p.html")]),
            Term::compound("h_text", vec![s(&stripped)]),
        ];
        expected.extend(p.links.iter().map(|(l, h)| Term::compound("link", vec![s(l), s(h)])));
        expected.extend(p.facts.iter().map(|(f, n)| Term::compound(f, vec![Term::int(*n)])));
        prop_assert_eq!(heads.len(), expected.len());
        for (g, e) in heads.iter().zip(&expected) {
            prop_assert!(variant(g, e), "{} vs {}", g, e);
        }
    }

    #[test]
    fn pages_without_code_translate_to_metadata_and_links(p in page()) {
        let (_, stripped) = p.render();
        let form = vec![("q".to_string(), "1".to_string())];
        let t = translate_page(&response(&stripped), &Method::Post(form.clone())).unwrap();
        prop_assert_eq!(t.program.clauses.len(), 5 + p.links.len());
        prop_assert_eq!(t.program.id.method(), &Method::Post(form));
    }

    #[test]
    fn signed_pages_authenticate_and_split_back(body in "[ -~\n]{0,200}", seed in any::<[u8; 32]>(), name in "[A-Za-z][A-Za-z .@<>]{0,20}") {
        let signer = SignerId::new(name.trim());
        prop_assume!(!signer.is_unknown() && !signer.as_str().is_empty());
        let key = SecretKey::from_bytes(&seed);
        let mut keys = KeyStore::new();
        keys.insert(signer.clone(), key.public_key());
        let signed = sign_page(&body, &key, &signer);
        prop_assert_eq!(authenticate(&signed, &keys), signer.clone());
        let split = split_signed(&signed).unwrap();
        prop_assert_eq!(split.html, body.clone());
        prop_assert_eq!(split.signer, signer);
        let other = SecretKey::from_bytes(&seed.map(|b| b ^ 0x55));
        let mut wrong = KeyStore::new();
        wrong.insert(split_signed(&signed).unwrap().signer, other.public_key());
        prop_assert!(authenticate(&signed, &wrong).is_unknown());
        prop_assert!(authenticate(&body, &keys).is_unknown());
    }

    #[test]
    fn key_stores_round_trip_through_text(entries in prop::collection::btree_map("[a-z]{1,6}( [a-z]{1,6})?", any::<[u8; 32]>(), 0..5)) {
        let mut keys = KeyStore::new();
        for (name, seed) in &entries {
            keys.insert(SignerId::new(name), SecretKey::from_bytes(seed).public_key());
        }
        prop_assert_eq!(KeyStore::parse(&keys.to_text()).unwrap(), keys);
    }
}

#[test]
fn embedded_clause_text_parses_like_a_program() {
    let p = Page { chunks: vec!["x".into()], links: vec![], facts: vec![("a".into(), 1), ("b".into(), 2)], wrapper: 1 };
    let (html, _) = p.render();
    let t = translate_page(&response(&html), &Method::Get).unwrap();
    let own = parse_clauses("a(1).\nb(2).\n").unwrap();
    let tail = &t.program.clauses[5..];
    assert_eq!(tail.len(), own.len());
    assert!(tail.iter().zip(&own).all(|(x, y)| variant(&x.to_term(), &y.to_term())));
}
