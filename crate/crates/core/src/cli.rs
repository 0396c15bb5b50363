//! Command-line front end.
//!
//! Exit codes: 0 success or allow, 1 no answers or deny, 2 stopped by a
//! guard, 3 usage, configuration or I/O error.

use std::cell::RefCell;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::rc::Rc;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::audit::AuditEvent;
use crate::cache::DiskCache;
use crate::engine::{QueryError, Session};
use crate::fetch::{FetchOutcome, Fetcher, HttpConfig, StandardFetcher};
use crate::guard::GuardConfig;
use crate::program::{Method, ProgramId};
use crate::reader::read_term;
use crate::security::PolicyRegistry;
use crate::signature::{sign_page, KeyStore, SecretKey, SignerId};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO: i32 = 1;
pub const EXIT_TERMINATED: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "logicweb", version, about = "Sandboxed interpreter for logic programs embedded in web pages")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Serve every URL from this mirror directory instead of the network.
    #[arg(long, global = true, env = "LOGICWEB_FIXTURES")]
    pub fixtures: Option<PathBuf>,
    /// Policy registry configuration file.
    #[arg(long, global = true, env = "LOGICWEB_REGISTRY")]
    pub registry: Option<PathBuf>,
    /// Key store file: `<signer-id> <base64-public-key>` per line.
    #[arg(long, global = true, env = "LOGICWEB_KEYS")]
    pub keys: Option<PathBuf>,
    /// Directory of the persistent program store.
    #[arg(long, global = true, env = "LOGICWEB_CACHE")]
    pub cache: Option<PathBuf>,
    /// Appends syscall and fetch audit lines to this file.
    #[arg(long, global = true, env = "LOGICWEB_AUDIT_LOG")]
    pub audit_log: Option<PathBuf>,
    #[arg(long, global = true, env = "LOGICWEB_MAX_DEPTH", default_value_t = 40)]
    pub max_depth: usize,
    #[arg(long, global = true, env = "LOGICWEB_MAX_CLAUSES", default_value_t = 500)]
    pub max_clauses: usize,
    #[arg(long, global = true, env = "LOGICWEB_MAX_PROGRAMS", default_value_t = 100)]
    pub max_programs: usize,
    #[arg(long, global = true, env = "LOGICWEB_MAX_CONTEXT_SIZE")]
    pub max_context_size: Option<usize>,
    #[arg(long, global = true, env = "LOGICWEB_TIMEOUT_MS")]
    pub timeout_ms: Option<u64>,
    #[arg(long, global = true, env = "LOGICWEB_LOOP_CHECK")]
    pub loop_check: bool,
    /// Never collect policies, so no checks are made.
    #[arg(long, global = true, env = "LOGICWEB_NO_SECURITY")]
    pub no_security: bool,
    #[arg(long, global = true, env = "LOGICWEB_HTTP_TIMEOUT_MS", default_value_t = 10_000)]
    pub http_timeout_ms: u64,
    #[arg(long, global = true, env = "LOGICWEB_MAX_REDIRECTS", default_value_t = 5)]
    pub max_redirects: u32,
    #[arg(long, global = true, env = "LOGICWEB_USER_AGENT")]
    pub user_agent: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate `lw(get, MAIN) #> GOAL` and print one answer per line.
    Query { main: String, goal: String },
    /// Like `query`, preceded by every audit event of the derivation.
    Trace { main: String, goal: String },
    /// Download a program into the store and print its policy.
    Fetch {
        url: String,
        #[arg(long, default_value = "get")]
        method: String,
    },
    /// List the programs of the persistent store with their policies.
    StoreList,
    /// Remove every program from the persistent store.
    StoreClear,
    /// Generate a signing key pair.
    Keygen {
        #[arg(long)]
        signer: String,
        /// Secret key file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Append a signature trailer to a page.
    Sign {
        input: PathBuf,
        #[arg(long)]
        secret: PathBuf,
        #[arg(long)]
        signer: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Decide a system call or a program under the intersection of policies.
    PolicyCheck {
        #[arg(long = "policy", required = true)]
        policies: Vec<String>,
        #[arg(long, conflicts_with = "program", required_unless_present = "program")]
        call: Option<String>,
        #[arg(long)]
        program: Option<String>,
    },
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type CmdResult = Result<i32, Failure>;

/// Session output collected for interleaving with the command's own lines.
#[derive(Clone, Default)]
struct SharedBuf(Rc<RefCell<Vec<u8>>>);

impl SharedBuf {
    fn drain_into(&self, out: &mut dyn Write) -> io::Result<()> {
        let bytes = std::mem::take(&mut *self.0.borrow_mut());
        out.write_all(&bytes)
    }
}

impl Write for SharedBuf {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.0.borrow_mut().extend_from_slice(buf);
        Ok(buf.len())
    }
    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    execute(&cli, out, err)
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let g = &cli.global;
    let r = match &cli.command {
        Command::Query { main, goal } => cmd_query(g, main, goal, false, out, err),
        Command::Trace { main, goal } => cmd_query(g, main, goal, true, out, err),
        Command::Fetch { url, method } => cmd_fetch(g, url, method, out),
        Command::StoreList => cmd_store_list(g, out),
        Command::StoreClear => cmd_store_clear(g, out),
        Command::Keygen { signer, out: path } => cmd_keygen(g, signer, path, out),
        Command::Sign { input, secret, signer, output } => cmd_sign(input, secret, signer, output.as_deref(), out),
        Command::PolicyCheck { policies, call, program } => {
            cmd_policy_check(g, policies, call.as_deref(), program.as_deref(), out, err)
        }
    };
    let _ = out.flush();
    match r {
        Ok(code) => code,
        Err(Failure(m)) => {
            let _ = writeln!(err, "error: {}", m);
            EXIT_ERROR
        }
    }
}

fn guard_config(g: &GlobalArgs) -> GuardConfig {
    GuardConfig {
        max_depth: g.max_depth,
        max_programs: g.max_programs,
        max_clauses: g.max_clauses,
        loop_check: g.loop_check,
        timeout: g.timeout_ms.map(Duration::from_millis),
        max_context_size: g.max_context_size,
    }
}

fn fetcher(g: &GlobalArgs) -> Arc<dyn Fetcher> {
    let mut http = HttpConfig {
        timeout: Duration::from_millis(g.http_timeout_ms),
        max_redirects: g.max_redirects,
        ..HttpConfig::default()
    };
    if let Some(ua) = &g.user_agent {
        http.user_agent = ua.clone();
    }
    Arc::new(StandardFetcher::new(g.fixtures.clone(), &http))
}

fn load_registry(g: &GlobalArgs) -> Result<PolicyRegistry, Failure> {
    let path = g.registry.as_ref().ok_or_else(|| Failure("no policy registry given (--registry)".into()))?;
    let text = read_file(path)?;
    PolicyRegistry::from_config(&text).map_err(|e| Failure(format!("{}: {}", path.display(), e)))
}

fn load_keys(g: &GlobalArgs) -> Result<KeyStore, Failure> {
    match &g.keys {
        Some(p) if p.exists() => Ok(KeyStore::parse(&read_file(p)?)?),
        _ => Ok(KeyStore::new()),
    }
}

fn read_file(p: &Path) -> Result<String, Failure> {
    fs::read_to_string(p).map_err(|e| Failure(format!("{}: {}", p.display(), e)))
}

fn session(g: &GlobalArgs, registry: PolicyRegistry, output: SharedBuf) -> Result<Session, Failure> {
    let s = Session::builder(registry)
        .shared_fetcher(fetcher(g))
        .keys(load_keys(g)?)
        .guards(guard_config(g))
        .security(!g.no_security)
        .output(output)
        .build();
    if let Some(p) = &g.audit_log {
        let f = fs::OpenOptions::new().create(true).append(true).open(p).map_err(|e| Failure(format!("{}: {}", p.display(), e)))?;
        s.set_audit_log(f);
    }
    if let Some(dir) = &g.cache {
        DiskCache::new(dir).load(&s)?;
    }
    Ok(s)
}

fn save_cache(g: &GlobalArgs, s: &Session) -> Result<(), Failure> {
    if let Some(dir) = &g.cache {
        DiskCache::new(dir).save(s)?;
    }
    Ok(())
}

fn parse_id(text: &str, method: Option<&str>) -> Result<ProgramId, Failure> {
    if text.trim_start().starts_with("lw(") {
        return Ok(ProgramId::parse(text)?);
    }
    let m = match method {
        None | Some("get") => Method::Get,
        Some("head") => Method::Head,
        Some(other) => return Err(Failure(format!("unsupported method {:?}", other))),
    };
    Ok(ProgramId::new(m, text)?)
}

fn trace_line(e: &AuditEvent) -> String {
    let sigma: Vec<String> = e.sigma.iter().map(|p| p.to_string()).collect();
    let mut line = format!("{}\t{}\tcontext={}\tsigma=[{}]", e.kind.as_str(), e.subject, e.context, sigma.join(", "));
    if let Some(n) = &e.note {
        line.push_str(&format!("\t{}", n));
    }
    line
}

fn cmd_query(g: &GlobalArgs, main: &str, goal: &str, trace: bool, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let registry = load_registry(g)?;
    let main = parse_id(main, None)?;
    let buf = SharedBuf::default();
    let s = session(g, registry, buf.clone())?;
    s.record_audit(trace);
    let mut solutions = match s.solutions(&main, goal) {
        Ok(x) => x,
        Err(QueryError::Parse(e)) => return Err(Failure(format!("goal: {}", e))),
    };
    let mut answers = Vec::new();
    for a in solutions.by_ref() {
        if !trace {
            buf.drain_into(out)?;
            writeln!(out, "{}", a)?;
        }
        answers.push(a);
    }
    let termination = solutions.termination();
    drop(solutions);
    buf.drain_into(out)?;
    if trace {
        for e in s.take_audit() {
            writeln!(out, "{}", trace_line(&e))?;
        }
        for a in &answers {
            writeln!(out, "{}", a)?;
        }
    }
    for d in s.take_diagnostics() {
        writeln!(err, "warning: {}", d)?;
    }
    save_cache(g, &s)?;
    if let Some(t) = termination {
        writeln!(out, "terminated: {}", t)?;
        return Ok(EXIT_TERMINATED);
    }
    Ok(if answers.is_empty() { EXIT_NO } else { EXIT_OK })
}

fn cmd_fetch(g: &GlobalArgs, url: &str, method: &str, out: &mut dyn Write) -> CmdResult {
    let registry = load_registry(g)?;
    let id = parse_id(url, Some(method))?;
    let s = session(g, registry, SharedBuf::default())?;
    match s.download(&id) {
        FetchOutcome::Program(p) => {
            let policy = s.registry().assignment(&id).map(|p| p.to_string()).unwrap_or_else(|| "none".into());
            writeln!(out, "{}\t{} clauses\tpolicy {}", p.id, p.clauses.len(), policy)?;
            save_cache(g, &s)?;
            Ok(EXIT_OK)
        }
        FetchOutcome::Bottom { reason, detail } => Err(Failure(format!("{}: {:?}: {}", id, reason, detail))),
    }
}

fn require_cache(g: &GlobalArgs) -> Result<DiskCache, Failure> {
    g.cache.as_ref().map(DiskCache::new).ok_or_else(|| Failure("no store directory given (--cache)".into()))
}

fn cmd_store_list(g: &GlobalArgs, out: &mut dyn Write) -> CmdResult {
    for e in require_cache(g)?.entries()? {
        let policy = e.policy.map(|p| p.to_string()).unwrap_or_else(|| "none".into());
        writeln!(out, "{}\t{} clauses\tpolicy {}", e.program.id, e.program.clauses.len(), policy)?;
    }
    Ok(EXIT_OK)
}

fn cmd_store_clear(g: &GlobalArgs, out: &mut dyn Write) -> CmdResult {
    let n = require_cache(g)?.clear()?;
    writeln!(out, "removed {} programs", n)?;
    Ok(EXIT_OK)
}

fn cmd_keygen(g: &GlobalArgs, signer: &str, path: &Path, out: &mut dyn Write) -> CmdResult {
    let key = SecretKey::generate();
    fs::write(path, format!("{}\n", key.to_base64())).map_err(|e| Failure(format!("{}: {}", path.display(), e)))?;
    let mut ks = KeyStore::new();
    ks.insert(SignerId::new(signer), key.public_key());
    let line = ks.to_text();
    if let Some(keys) = &g.keys {
        let mut f = fs::OpenOptions::new().create(true).append(true).open(keys).map_err(|e| Failure(format!("{}: {}", keys.display(), e)))?;
        f.write_all(line.as_bytes())?;
    }
    out.write_all(line.as_bytes())?;
    Ok(EXIT_OK)
}

fn cmd_sign(input: &Path, secret: &Path, signer: &str, output: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    let html = read_file(input)?;
    let key = SecretKey::from_base64(read_file(secret)?.trim())?;
    let signed = sign_page(&html, &key, &SignerId::new(signer));
    match output {
        Some(p) => fs::write(p, signed).map_err(|e| Failure(format!("{}: {}", p.display(), e)))?,
        None => out.write_all(signed.as_bytes())?,
    }
    Ok(EXIT_OK)
}

fn cmd_policy_check(
    g: &GlobalArgs,
    policies: &[String],
    call: Option<&str>,
    program: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let ids = policies.iter().map(|p| parse_id(p, None)).collect::<Result<Vec<_>, _>>()?;
    let mut registry = match &g.registry {
        Some(_) => load_registry(g)?,
        None => PolicyRegistry::new(ids[0].clone()),
    };
    for id in &ids {
        registry.register_policy(id.clone());
    }
    let s = session(g, registry, SharedBuf::default())?;
    for id in &ids {
        if let FetchOutcome::Bottom { reason, detail } = s.download(id) {
            return Err(Failure(format!("policy {}: {:?}: {}", id, reason, detail)));
        }
    }
    let allowed = match (call, program) {
        (Some(c), _) => {
            let t = read_term(c).map_err(|e| Failure(format!("call: {}", e)))?;
            s.system_call_allowed(&ids, &t.term)
        }
        (None, Some(p)) => s.program_allowed(&ids, &parse_id(p, None)?),
        (None, None) => return Err(Failure("give --call or --program".into())),
    };
    for d in s.take_diagnostics() {
        writeln!(err, "warning: {}", d)?;
    }
    writeln!(out, "{}", if allowed { "allow" } else { "deny" })?;
    Ok(if allowed { EXIT_OK } else { EXIT_NO })
}
