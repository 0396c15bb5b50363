//! Page retrieval: HTTP, an offline fixture mirror, and in-memory pages.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use crate::program::{LWProgram, Method, ProgramId};
use crate::signature::{is_signed, split_signed};
use crate::translate::{translate_head, translate_page, HttpResponse};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FetchError {
    #[error("network error: {0}")]
    Network(String),
    #[error("unsupported URL: {0}")]
    Unsupported(String),
}

/// Obtains the raw response for a method and URL.
pub trait Fetcher: Send + Sync {
    fn fetch(&self, method: &Method, url: &str) -> Result<HttpResponse, FetchError>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BottomReason {
    Network,
    Status,
    Translate,
}

/// The oracle's answer: a program or ⊥ with a diagnostic.
#[derive(Clone, Debug, PartialEq)]
pub enum FetchOutcome {
    Program(std::sync::Arc<LWProgram>),
    Bottom { reason: BottomReason, detail: String },
}

impl FetchOutcome {
    pub fn is_bottom(&self) -> bool {
        matches!(self, FetchOutcome::Bottom { .. })
    }
}

/// A freshly retrieved and translated page.
#[derive(Clone, Debug)]
pub struct Retrieved {
    pub program: LWProgram,
    /// Full page contents as served, trailer included.
    pub raw: Option<String>,
    pub warnings: Vec<String>,
}

/// Fetches and translates one page without touching any store.
pub fn retrieve(fetcher: &dyn Fetcher, id: &ProgramId) -> Result<Retrieved, (BottomReason, String)> {
    let resp = fetcher.fetch(id.method(), id.url()).map_err(|e| (BottomReason::Network, e.to_string()))?;
    if !(200..300).contains(&resp.status) {
        return Err((BottomReason::Status, format!("{} returned status {}", id.url(), resp.status)));
    }
    if *id.method() == Method::Head {
        let program = translate_head(&resp).map_err(|e| (BottomReason::Translate, e.to_string()))?;
        return Ok(Retrieved { program, raw: None, warnings: Vec::new() });
    }
    let raw = resp.body.clone();
    let mut for_translation = resp;
    if is_signed(id.url()) {
        if let Some(body) = &for_translation.body {
            if let Ok(page) = split_signed(body) {
                for_translation.body = Some(page.html);
            }
        }
    }
    let t = translate_page(&for_translation, id.method()).map_err(|e| (BottomReason::Translate, e.to_string()))?;
    Ok(Retrieved { program: t.program, raw, warnings: t.warnings })
}

#[derive(Clone, Debug)]
pub struct HttpConfig {
    pub timeout: Duration,
    pub max_redirects: u32,
    pub user_agent: String,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            timeout: Duration::from_secs(10),
            max_redirects: 5,
            user_agent: concat!("logicweb/", env!("CARGO_PKG_VERSION")).to_string(),
        }
    }
}

/// Network fetcher over HTTP(S).
pub struct HttpFetcher {
    agent: ureq::Agent,
}

impl HttpFetcher {
    pub fn new(cfg: &HttpConfig) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(cfg.timeout)
            .redirects(cfg.max_redirects)
            .user_agent(&cfg.user_agent)
            .build();
        HttpFetcher { agent }
    }
}

impl Default for HttpFetcher {
    fn default() -> Self {
        HttpFetcher::new(&HttpConfig::default())
    }
}

fn convert(requested: &str, resp: ureq::Response, head: bool) -> Result<HttpResponse, FetchError> {
    let final_url = resp.get_url().to_string();
    let status = resp.status();
    let headers = resp
        .headers_names()
        .into_iter()
        .filter_map(|n| resp.header(&n).map(|v| (n.clone(), v.to_string())))
        .collect();
    let body = if head { None } else { Some(resp.into_string().map_err(|e| FetchError::Network(e.to_string()))?) };
    Ok(HttpResponse { requested_url: requested.to_string(), final_url, status, headers, body })
}

impl Fetcher for HttpFetcher {
    fn fetch(&self, method: &Method, url: &str) -> Result<HttpResponse, FetchError> {
        let result = match method {
            Method::Head => self.agent.head(url).call(),
            Method::Get => self.agent.get(url).call(),
            Method::Post(fields) => {
                let pairs: Vec<(&str, &str)> = fields.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
                self.agent.post(url).send_form(&pairs)
            }
        };
        let head = *method == Method::Head;
        match result {
            Ok(r) => convert(url, r, head),
            Err(ureq::Error::Status(_, r)) => convert(url, r, head),
            Err(e) => Err(FetchError::Network(e.to_string())),
        }
    }
}

/// Serves pages from a directory.
///
/// `http(s)://host/path` maps to `<root>/host/path` and `file:///path` maps
/// to `<root>/path`. A directory, or a path ending in `/`, serves its
/// `index.html`. Query strings are ignored.
#[derive(Clone, Debug)]
pub struct FixtureFetcher {
    root: PathBuf,
}

impl FixtureFetcher {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FixtureFetcher { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, url: &str) -> Result<PathBuf, FetchError> {
        let u = url::Url::parse(url).map_err(|_| FetchError::Unsupported(url.to_string()))?;
        let mut p = self.root.clone();
        match u.scheme() {
            "http" | "https" => p.push(u.host_str().ok_or_else(|| FetchError::Unsupported(url.to_string()))?),
            "file" => {}
            _ => return Err(FetchError::Unsupported(url.to_string())),
        }
        for seg in u.path_segments().into_iter().flatten() {
            let seg = percent_decode(seg);
            if seg == ".." {
                return Err(FetchError::Unsupported(url.to_string()));
            }
            if !seg.is_empty() {
                p.push(seg);
            }
        }
        if u.path().ends_with('/') || p.is_dir() {
            p.push("index.html");
        }
        Ok(p)
    }
}

fn percent_decode(s: &str) -> String {
    let b = s.as_bytes();
    let mut out = Vec::with_capacity(b.len());
    let mut i = 0;
    while i < b.len() {
        if b[i] == b'%' && i + 2 < b.len() {
            let hex = std::str::from_utf8(&b[i + 1..i + 3]).ok();
            if let Some(v) = hex.and_then(|h| u8::from_str_radix(h, 16).ok()) {
                out.push(v);
                i += 3;
                continue;
            }
        }
        out.push(b[i]);
        i += 1;
    }
    String::from_utf8_lossy(&out).into_owned()
}

impl Fetcher for FixtureFetcher {
    fn fetch(&self, method: &Method, url: &str) -> Result<HttpResponse, FetchError> {
        let path = self.path_for(url)?;
        match std::fs::read_to_string(&path) {
            Ok(body) => Ok(HttpResponse {
                requested_url: url.to_string(),
                final_url: url.to_string(),
                status: 200,
                headers: vec![
                    ("content-type".into(), "text/html".into()),
                    ("content-length".into(), body.len().to_string()),
                ],
                body: if *method == Method::Head { None } else { Some(body) },
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(HttpResponse {
                requested_url: url.to_string(),
                final_url: url.to_string(),
                status: 404,
                headers: Vec::new(),
                body: None,
            }),
            Err(e) => Err(FetchError::Network(format!("{}: {}", path.display(), e))),
        }
    }
}

/// Fixture mirror when a root is configured, otherwise the network for
/// `http(s)` and the local filesystem for `file`.
pub struct StandardFetcher {
    fixtures: Option<FixtureFetcher>,
    http: HttpFetcher,
}

impl StandardFetcher {
    pub fn new(fixture_root: Option<PathBuf>, cfg: &HttpConfig) -> Self {
        StandardFetcher { fixtures: fixture_root.map(FixtureFetcher::new), http: HttpFetcher::new(cfg) }
    }
}

impl Fetcher for StandardFetcher {
    fn fetch(&self, method: &Method, url: &str) -> Result<HttpResponse, FetchError> {
        if let Some(f) = &self.fixtures {
            return f.fetch(method, url);
        }
        if url.starts_with("file:") {
            let u = url::Url::parse(url).map_err(|_| FetchError::Unsupported(url.to_string()))?;
            let path = u.to_file_path().map_err(|_| FetchError::Unsupported(url.to_string()))?;
            let parent = path.parent().map(Path::to_path_buf).unwrap_or_default();
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let local = format!("file:///{}", name);
            let mut r = FixtureFetcher::new(parent).fetch(method, &local)?;
            r.requested_url = url.to_string();
            r.final_url = url.to_string();
            return Ok(r);
        }
        self.http.fetch(method, url)
    }
}

/// Pages held in memory, keyed by URL. Counts fetches per URL.
#[derive(Default)]
pub struct MemoryFetcher {
    pages: Mutex<HashMap<String, String>>,
    redirects: Mutex<HashMap<String, String>>,
    calls: Mutex<HashMap<String, usize>>,
}

impl MemoryFetcher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_page(self, url: &str, body: &str) -> Self {
        self.insert(url, body);
        self
    }

    pub fn insert(&self, url: &str, body: &str) {
        self.pages.lock().unwrap().insert(url.to_string(), body.to_string());
    }

    /// Requests for `from` are served from `to` and report `to` as final URL.
    pub fn redirect(&self, from: &str, to: &str) {
        self.redirects.lock().unwrap().insert(from.to_string(), to.to_string());
    }

    pub fn calls(&self, url: &str) -> usize {
        self.calls.lock().unwrap().get(url).copied().unwrap_or(0)
    }

    pub fn total_calls(&self) -> usize {
        self.calls.lock().unwrap().values().sum()
    }
}

impl Fetcher for MemoryFetcher {
    fn fetch(&self, method: &Method, url: &str) -> Result<HttpResponse, FetchError> {
        *self.calls.lock().unwrap().entry(url.to_string()).or_default() += 1;
        let target = self.redirects.lock().unwrap().get(url).cloned().unwrap_or_else(|| url.to_string());
        let body = self.pages.lock().unwrap().get(&target).cloned();
        match body {
            Some(b) => Ok(HttpResponse {
                requested_url: url.to_string(),
                final_url: target,
                status: 200,
                headers: vec![("content-type".into(), "text/html".into())],
                body: if *method == Method::Head { None } else { Some(b) },
            }),
            None => Err(FetchError::Network(format!("no route to {}", url))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_mapping() {
        let f = FixtureFetcher::new("/r");
        assert_eq!(f.path_for("http://www.cs.mu.oz.au/~swl/").unwrap(), PathBuf::from("/r/www.cs.mu.oz.au/~swl/index.html"));
        assert_eq!(f.path_for("file:///policies/ok.html").unwrap(), PathBuf::from("/r/policies/ok.html"));
        assert_eq!(f.path_for("http://h/a.html?x=1").unwrap(), PathBuf::from("/r/h/a.html"));
        assert!(f.path_for("ftp://h/a").is_err());
    }

    #[test]
    fn retrieve_strips_signature_trailer() {
        let k = crate::signature::SecretKey::from_bytes(&[9; 32]);
        let page = crate::signature::sign_page("<p>x</p>", &k, &crate::signature::SignerId::new("s"));
        let m = MemoryFetcher::new().with_page("http://h/a.lwpgp.html", &page);
        let r = retrieve(&m, &ProgramId::get("http://h/a.lwpgp.html").unwrap()).unwrap();
        let h_text = r.program.clauses.iter().find(|c| c.head.has_functor("h_text", 1)).unwrap();
        assert_eq!(h_text.head.args()[0], crate::term::Term::string("<p>x</p>"));
        assert_eq!(r.raw.as_deref(), Some(page.as_str()));
    }

    #[test]
    fn redirect_sets_actual_url() {
        let m = MemoryFetcher::new().with_page("http://h/b", "b");
        m.redirect("http://h/a", "http://h/b");
        let r = retrieve(&m, &ProgramId::get("http://h/a").unwrap()).unwrap();
        assert_eq!(r.program.id.url(), "http://h/a");
        assert!(r.program.clauses.iter().any(|c| c.head == crate::reader::term("actual_url(\"http://h/b\")")));
    }
}
