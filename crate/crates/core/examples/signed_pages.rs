//! Signing pages and mapping signers to policies.
//!
//! cargo run --example signed_pages

use logicweb::signature::{authenticate, sign_page, SecretKey};
use logicweb::{KeyStore, MemoryFetcher, PolicyRegistry, ProgramId, Session, SignerId};

fn main() {
    let alice = SignerId::new("Alice <alice@example.test>");
    let key = SecretKey::generate();
    let mut keys = KeyStore::new();
    keys.insert(alice.clone(), key.public_key());

    let html = "<HTML><BODY><LW_CODE>motto(\"trust but verify\").</LW_CODE></BODY></HTML>\n";
    let signed = sign_page(html, &key, &alice);
    println!("signed by: {}", authenticate(&signed, &keys));
    let mut tampered = signed.clone().into_bytes();
    tampered[10] ^= 1;
    println!("tampered:  {}", authenticate(&String::from_utf8_lossy(&tampered), &keys));

    let trusted = ProgramId::get("file:///trusted.html").unwrap();
    let registry = PolicyRegistry::new(ProgramId::get("file:///default.html").unwrap()).with_signer(alice, trusted);
    let web = MemoryFetcher::new()
        .with_page("http://pages.test/motto.lwpgp.html", &signed)
        .with_page("http://pages.test/copy.lwpgp.html", &String::from_utf8_lossy(&tampered))
        .with_page("http://pages.test/plain.html", html);
    let s = Session::builder(registry).fetcher(web).keys(keys).build();
    for url in ["http://pages.test/motto.lwpgp.html", "http://pages.test/copy.lwpgp.html", "http://pages.test/plain.html"] {
        let id = ProgramId::get(url).unwrap();
        assert!(!s.download(&id).is_bottom());
        println!("{:<40} policy {}", url, s.registry().assignment(&id).unwrap());
    }
}
