//! Detached page signatures.
//!
//! A signed page ends with `<!-- LW-SIG v1 <signer-id> <base64-signature> -->`.
//! The signature is Ed25519 over the SHA-256 digest of every byte before the
//! trailer. Verification is behind [`Verifier`] so other schemes can plug in.

use std::collections::BTreeMap;
use std::fmt;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use ed25519_dalek::{Signature, Signer as _, SigningKey, Verifier as _, VerifyingKey};
use sha2::{Digest, Sha256};

pub const SIGNED_EXTENSION: &str = ".lwpgp.html";
const TRAILER_OPEN: &str = "<!-- LW-SIG v1 ";
const TRAILER_CLOSE: &str = " -->";

/// Identity of a signer. `unknown` is reserved for unauthenticated content.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignerId(String);

impl SignerId {
    pub const UNKNOWN: &'static str = "unknown";

    pub fn new(s: &str) -> SignerId {
        SignerId(s.to_string())
    }

    pub fn unknown() -> SignerId {
        SignerId(Self::UNKNOWN.to_string())
    }

    pub fn is_unknown(&self) -> bool {
        self.0 == Self::UNKNOWN
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SignerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SignatureError {
    #[error("no signature trailer")]
    MissingTrailer,
    #[error("malformed signature trailer: {0}")]
    Malformed(String),
    #[error("key store line {line}: {message}")]
    KeyStore { line: usize, message: String },
}

/// True iff the URL path ends with the signed-page extension.
pub fn is_signed(url: &str) -> bool {
    let path = match url::Url::parse(url) {
        Ok(u) => u.path().to_string(),
        Err(_) => url.split(['?', '#']).next().unwrap_or("").to_string(),
    };
    path.to_ascii_lowercase().ends_with(SIGNED_EXTENSION)
}

/// A page split at its signature trailer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedPage {
    pub html: String,
    pub signer: SignerId,
    pub signature: Vec<u8>,
}

impl SignedPage {
    pub fn digest(&self) -> [u8; 32] {
        digest(&self.html)
    }
}

pub fn digest(html: &str) -> [u8; 32] {
    Sha256::digest(html.as_bytes()).into()
}

/// Separates the html part from the trailer. Trailing whitespace after the
/// trailer is tolerated.
pub fn split_signed(contents: &str) -> Result<SignedPage, SignatureError> {
    let body = contents.trim_end_matches(['\n', '\r', ' ', '\t']);
    let start = body.rfind(TRAILER_OPEN).ok_or(SignatureError::MissingTrailer)?;
    let trailer = &body[start + TRAILER_OPEN.len()..];
    let inner = trailer.strip_suffix(TRAILER_CLOSE).ok_or_else(|| SignatureError::Malformed("unterminated".into()))?;
    let (signer, sig) = inner.rsplit_once(' ').ok_or_else(|| SignatureError::Malformed("missing fields".into()))?;
    if signer.trim().is_empty() {
        return Err(SignatureError::Malformed("empty signer".into()));
    }
    let signature = B64.decode(sig.trim()).map_err(|e| SignatureError::Malformed(e.to_string()))?;
    Ok(SignedPage { html: contents[..start].to_string(), signer: SignerId::new(signer.trim()), signature })
}

/// Checks a signature over a digest under one public key.
pub trait Verifier {
    fn verify(&self, public_key: &[u8], digest: &[u8], signature: &[u8]) -> bool;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Ed25519Verifier;

impl Verifier for Ed25519Verifier {
    fn verify(&self, public_key: &[u8], digest: &[u8], signature: &[u8]) -> bool {
        let Ok(pk) = <[u8; 32]>::try_from(public_key) else { return false };
        let Ok(vk) = VerifyingKey::from_bytes(&pk) else { return false };
        let Ok(sig) = Signature::from_slice(signature) else { return false };
        vk.verify(digest, &sig).is_ok()
    }
}

/// Public keys by owner. `unknown` never owns a key.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KeyStore {
    keys: BTreeMap<SignerId, Vec<u8>>,
}

impl KeyStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false when `signer` is `unknown`.
    pub fn insert(&mut self, signer: SignerId, public_key: Vec<u8>) -> bool {
        if signer.is_unknown() {
            return false;
        }
        self.keys.insert(signer, public_key);
        true
    }

    pub fn get(&self, signer: &SignerId) -> Option<&Vec<u8>> {
        self.keys.get(signer)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SignerId, &Vec<u8>)> {
        self.keys.iter()
    }

    /// Parses `<signer-id> <base64-public-key>` lines; `#` starts a comment.
    /// The key is the last whitespace-separated field, so ids may contain spaces.
    pub fn parse(text: &str) -> Result<KeyStore, SignatureError> {
        let mut ks = KeyStore::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: &str| SignatureError::KeyStore { line: i + 1, message: m.to_string() };
            let (id, key) = line.rsplit_once(char::is_whitespace).ok_or_else(|| err("expected `<signer-id> <key>`"))?;
            let id = id.trim().trim_matches('"');
            let key = B64.decode(key).map_err(|e| err(&e.to_string()))?;
            if !ks.insert(SignerId::new(id), key) {
                return Err(err("`unknown` cannot own a key"));
            }
        }
        Ok(ks)
    }

    pub fn to_text(&self) -> String {
        self.keys.iter().map(|(id, k)| format!("{} {}\n", id, B64.encode(k))).collect()
    }
}

/// The claimed signer if its stored key verifies the signature, else `unknown`.
pub fn authenticate_with(contents: &str, ks: &KeyStore, verifier: &dyn Verifier) -> SignerId {
    let Ok(page) = split_signed(contents) else { return SignerId::unknown() };
    match ks.get(&page.signer) {
        Some(key) if verifier.verify(key, &page.digest(), &page.signature) => page.signer,
        _ => SignerId::unknown(),
    }
}

pub fn authenticate(contents: &str, ks: &KeyStore) -> SignerId {
    authenticate_with(contents, ks, &Ed25519Verifier)
}

/// An Ed25519 signing key.
#[derive(Clone)]
pub struct SecretKey(SigningKey);

impl SecretKey {
    pub fn from_bytes(bytes: &[u8; 32]) -> SecretKey {
        SecretKey(SigningKey::from_bytes(bytes))
    }

    pub fn generate() -> SecretKey {
        let mut seed = [0u8; 32];
        getrandom::fill(&mut seed).expect("operating system randomness");
        SecretKey::from_bytes(&seed)
    }

    pub fn public_key(&self) -> Vec<u8> {
        self.0.verifying_key().to_bytes().to_vec()
    }

    pub fn to_base64(&self) -> String {
        B64.encode(self.0.to_bytes())
    }

    pub fn from_base64(s: &str) -> Result<SecretKey, SignatureError> {
        let bytes = B64.decode(s.trim()).map_err(|e| SignatureError::Malformed(e.to_string()))?;
        let arr = <[u8; 32]>::try_from(bytes.as_slice()).map_err(|_| SignatureError::Malformed("key length".into()))?;
        Ok(SecretKey::from_bytes(&arr))
    }
}

/// Appends a trailer signed by `key` on behalf of `signer`.
pub fn sign_page(html: &str, key: &SecretKey, signer: &SignerId) -> String {
    let sig = key.0.sign(&digest(html));
    format!("{}{}{} {}{}\n", html, TRAILER_OPEN, signer, B64.encode(sig.to_bytes()), TRAILER_CLOSE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(n: u8) -> SecretKey {
        SecretKey::from_bytes(&[n; 32])
    }

    #[test]
    fn signed_extension() {
        assert!(is_signed("http://h/a.lwpgp.html"));
        assert!(is_signed("http://h/a.lwpgp.html?x=1"));
        assert!(!is_signed("http://h/a.html"));
    }

    #[test]
    fn round_trip_and_wrong_key() {
        let alice = SignerId::new("Alice <a@h>");
        let page = sign_page("<p>hi</p>", &key(1), &alice);
        let mut ks = KeyStore::new();
        ks.insert(alice.clone(), key(1).public_key());
        assert_eq!(authenticate(&page, &ks), alice);
        let mut other = KeyStore::new();
        other.insert(SignerId::new("Bob"), key(2).public_key());
        assert!(authenticate(&page, &other).is_unknown());
        assert!(authenticate(&page, &KeyStore::new()).is_unknown());
        assert!(authenticate(&sign_page("", &key(1), &alice), &ks) == alice);
    }

    #[test]
    fn split_errors() {
        assert_eq!(split_signed("<p>x</p>"), Err(SignatureError::MissingTrailer));
        assert!(matches!(split_signed("x<!-- LW-SIG v1 a !!! -->"), Err(SignatureError::Malformed(_))));
        let page = sign_page("abc", &key(3), &SignerId::new("c"));
        assert_eq!(split_signed(&page).unwrap().html, "abc");
    }

    #[test]
    fn keystore_text_roundtrip() {
        let mut ks = KeyStore::new();
        ks.insert(SignerId::new("Sam Example <sam@example.test>"), key(4).public_key());
        assert_eq!(KeyStore::parse(&ks.to_text()).unwrap(), ks);
        assert!(KeyStore::parse("unknown AAAA").is_err());
    }
}
