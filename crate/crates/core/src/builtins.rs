//! The built-in table.
//!
//! Pure built-ins run directly in any context. System built-ins touch the
//! outside world and are reachable only through the system-call rules: under
//! a non-empty policy set via `call_system/1` of the oldest policy, otherwise
//! through the type-checked `call_builtin` path. Text arguments accept atoms
//! and strings alike.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crate::expr::ProgramExpression;
use crate::program::{Clause, ProgramId};
use crate::security::PolicyRegistry;
use crate::store::ProgramStore;
use crate::subst::Bindings;
use crate::term::{Number, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinKind {
    Pure,
    System,
}

/// Why a built-in call failed with a diagnostic rather than plain failure.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuiltinFailure {
    #[error("type error: {0}")]
    Type(String),
    #[error("instantiation error: {0}")]
    Instantiation(String),
    #[error("operating system error: {0}")]
    Os(String),
    #[error("denied: {0}")]
    Denied(String),
}

/// Instances of the goal that hold; the engine unifies each with the call.
pub type BuiltinResult = Result<Vec<Term>, BuiltinFailure>;

type BuiltinFn = fn(&mut BuiltinCtx<'_>, &Term) -> BuiltinResult;

#[derive(Clone, Copy)]
pub struct BuiltinSpec {
    pub name: &'static str,
    pub arity: usize,
    pub kind: BuiltinKind,
    run: BuiltinFn,
}

impl std::fmt::Debug for BuiltinSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{} ({:?})", self.name, self.arity, self.kind)
    }
}

/// Runs external commands for `system/1`.
pub trait CommandRunner: Send + Sync {
    /// Exit status of the command.
    fn run(&self, cmd: &str) -> std::io::Result<i32>;
}

/// Runs commands with `sh -c`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ShellRunner;

impl CommandRunner for ShellRunner {
    fn run(&self, cmd: &str) -> std::io::Result<i32> {
        let status = std::process::Command::new("sh").arg("-c").arg(cmd).status()?;
        Ok(status.code().unwrap_or(-1))
    }
}

/// Records commands instead of running them; every command exits 0.
#[derive(Clone, Debug, Default)]
pub struct RecordingRunner {
    log: Arc<Mutex<Vec<String>>>,
}

impl RecordingRunner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn commands(&self) -> Vec<String> {
        self.log.lock().unwrap().clone()
    }
}

impl CommandRunner for RecordingRunner {
    fn run(&self, cmd: &str) -> std::io::Result<i32> {
        self.log.lock().unwrap().push(cmd.to_string());
        Ok(0)
    }
}

/// Side-effect state of a session: output, open streams, command runner.
pub struct Host {
    pub(crate) out: Box<dyn Write>,
    pub(crate) runner: Arc<dyn CommandRunner>,
    streams: BTreeMap<i64, File>,
    next_stream: i64,
    pub(crate) reports: Vec<String>,
}

impl Host {
    pub fn new(out: Box<dyn Write>, runner: Arc<dyn CommandRunner>) -> Self {
        Host { out, runner, streams: BTreeMap::new(), next_stream: 3, reports: Vec::new() }
    }

    pub fn open_streams(&self) -> usize {
        self.streams.len()
    }
}

/// What a built-in may see and touch.
pub struct BuiltinCtx<'a> {
    pub host: &'a RefCell<Host>,
    pub store: &'a RefCell<ProgramStore>,
    pub registry: &'a RefCell<PolicyRegistry>,
    pub context: &'a ProgramExpression,
    pub deadline: Option<Instant>,
    pub occurs_check: bool,
    /// Commands reported through `report_deletion/1` during this call.
    pub reported: Vec<String>,
}

fn text_of(t: &Term, what: &str) -> Result<String, BuiltinFailure> {
    match t {
        Term::Var(_) => Err(BuiltinFailure::Instantiation(format!("{} is unbound", what))),
        _ => t.text().map(str::to_string).ok_or_else(|| BuiltinFailure::Type(format!("{} must be text, got {}", what, t))),
    }
}

/// Same text kind as `like`: atom stays atom, anything else becomes a string.
fn text_like(like: &Term, s: &str) -> Term {
    match like {
        Term::Atom(_) => Term::atom(s),
        _ => Term::string(s),
    }
}

fn once(goal: &Term, holds: bool) -> BuiltinResult {
    Ok(if holds { vec![goal.clone()] } else { Vec::new() })
}

fn with_args(goal: &Term, args: Vec<Term>) -> Term {
    let (f, _) = goal.functor().expect("builtin goal is callable");
    Term::compound_atom(f.clone(), args)
}

fn unifiable(a: &Term, b: &Term, occurs_check: bool) -> bool {
    Bindings::new().unify(a, b, occurs_check)
}

// ----- control and unification -----

fn bi_fail(_: &mut BuiltinCtx<'_>, _: &Term) -> BuiltinResult {
    Ok(Vec::new())
}

fn bi_unify(cx: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let a = g.args();
    match crate::subst::unify_with(&a[0], &a[1], cx.occurs_check) {
        Some(s) => Ok(vec![crate::subst::apply(&s, g)]),
        None => Ok(Vec::new()),
    }
}

fn bi_not_unify(cx: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    once(g, !unifiable(&g.args()[0], &g.args()[1], cx.occurs_check))
}

fn bi_eq(_: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    once(g, g.args()[0] == g.args()[1])
}

fn bi_neq(_: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    once(g, g.args()[0] != g.args()[1])
}

fn bi_type_check(_: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let x = &g.args()[0];
    let holds = match g.functor().unwrap().0.as_str() {
        "var" => x.is_var(),
        "nonvar" => !x.is_var(),
        "atom" => matches!(x, Term::Atom(_)),
        "number" => matches!(x, Term::Number(_)),
        "integer" => matches!(x, Term::Number(Number::Int(_))),
        "float" => matches!(x, Term::Number(Number::Float(_))),
        "string" => matches!(x, Term::Str(_)),
        "atomic" => x.is_atomic(),
        "compound" => matches!(x, Term::Compound(_)),
        "callable" => x.is_callable(),
        "is_list" => x.as_list().is_some(),
        "ground" => x.is_ground(),
        _ => false,
    };
    once(g, holds)
}

fn bi_copy_term(_: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let copy = crate::subst::rename_apart(&g.args()[0]);
    Ok(vec![with_args(g, vec![g.args()[0].clone(), copy])])
}

fn bi_functor(_: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let a = g.args();
    match &a[0] {
        Term::Var(_) => {
            let n = a[2].as_int().ok_or_else(|| BuiltinFailure::Instantiation("functor/3 arity".into()))?;
            if !(0..=255).contains(&n) {
                return Err(BuiltinFailure::Type("functor/3 arity out of range".into()));
            }
            let t = match (&a[1], n) {
                (name, 0) => name.clone(),
                (Term::Atom(f), n) => Term::compound_atom(f.clone(), (0..n).map(|_| Term::fresh_var()).collect()),
                _ => return Err(BuiltinFailure::Type("functor/3 name must be an atom".into())),
            };
            Ok(vec![with_args(g, vec![t, a[1].clone(), a[2].clone()])])
        }
        t => {
            let (name, n) = match t.functor() {
                Some((f, n)) => (Term::Atom(f.clone()), n),
                None => (t.clone(), 0),
            };
            Ok(vec![with_args(g, vec![t.clone(), name, Term::int(n as i64)])])
        }
    }
}

fn bi_arg(_: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let a = g.args();
    let n = a[0].as_int().ok_or_else(|| BuiltinFailure::Instantiation("arg/3 index".into()))?;
    match a[1].args().get((n as usize).wrapping_sub(1)) {
        Some(x) if n >= 1 => Ok(vec![with_args(g, vec![a[0].clone(), a[1].clone(), x.clone()])]),
        _ => Ok(Vec::new()),
    }
}

fn bi_univ(_: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let a = g.args();
    match &a[0] {
        Term::Var(_) => {
            let items = a[1].as_list().ok_or_else(|| BuiltinFailure::Instantiation("=.. needs a list".into()))?;
            let (head, rest) = items.split_first().ok_or_else(|| BuiltinFailure::Type("=.. empty list".into()))?;
            let t = match head {
                Term::Atom(f) => Term::compound_atom(f.clone(), rest.to_vec()),
                x if rest.is_empty() => x.clone(),
                _ => return Err(BuiltinFailure::Type("=.. functor must be an atom".into())),
            };
            Ok(vec![with_args(g, vec![t, a[1].clone()])])
        }
        t => {
            let list = match t.functor() {
                Some((f, _)) => {
                    let mut v = vec![Term::Atom(f.clone())];
                    v.extend(t.args().iter().cloned());
                    v
                }
                None => vec![t.clone()],
            };
            Ok(vec![with_args(g, vec![t.clone(), Term::list(list)])])
        }
    }
}

// ----- arithmetic -----

pub(crate) fn eval(t: &Term) -> Result<Number, BuiltinFailure> {
    match t {
        Term::Number(n) => Ok(*n),
        Term::Var(_) => Err(BuiltinFailure::Instantiation("arithmetic on unbound variable".into())),
        Term::Compound(c) if c.args.len() == 2 => {
            let x = eval(&c.args[0])?;
            let y = eval(&c.args[1])?;
            binary(c.functor.as_str(), x, y)
        }
        Term::Compound(c) if c.args.len() == 1 => {
            let x = eval(&c.args[0])?;
            match (c.functor.as_str(), x) {
                ("-", Number::Int(i)) => Ok(Number::Int(i.checked_neg().ok_or_else(overflow)?)),
                ("-", Number::Float(f)) => Ok(Number::Float(-f)),
                ("+", n) => Ok(n),
                ("abs", Number::Int(i)) => Ok(Number::Int(i.checked_abs().ok_or_else(overflow)?)),
                ("abs", Number::Float(f)) => Ok(Number::Float(f.abs())),
                ("float", n) => Ok(Number::Float(n.as_f64())),
                ("integer", n) => Ok(Number::Int(n.as_f64().round() as i64)),
                ("truncate", n) => Ok(Number::Int(n.as_f64().trunc() as i64)),
                (f, _) => Err(BuiltinFailure::Type(format!("unknown function {}/1", f))),
            }
        }
        _ => Err(BuiltinFailure::Type(format!("not evaluable: {}", t))),
    }
}

fn overflow() -> BuiltinFailure {
    BuiltinFailure::Type("integer overflow".into())
}

fn binary(op: &str, x: Number, y: Number) -> Result<Number, BuiltinFailure> {
    use Number::*;
    let zero = || BuiltinFailure::Type("division by zero".into());
    Ok(match (op, x, y) {
        ("+", Int(a), Int(b)) => Int(a.checked_add(b).ok_or_else(overflow)?),
        ("-", Int(a), Int(b)) => Int(a.checked_sub(b).ok_or_else(overflow)?),
        ("*", Int(a), Int(b)) => Int(a.checked_mul(b).ok_or_else(overflow)?),
        ("//", Int(a), Int(b)) => Int(a.checked_div(b).ok_or_else(zero)?),
        ("mod", Int(a), Int(b)) => Int(a.checked_rem_euclid(b).ok_or_else(zero)?),
        ("/", Int(a), Int(b)) if b != 0 && a % b == 0 => Int(a / b),
        ("min", Int(a), Int(b)) => Int(a.min(b)),
        ("max", Int(a), Int(b)) => Int(a.max(b)),
        ("+", a, b) => Float(a.as_f64() + b.as_f64()),
        ("-", a, b) => Float(a.as_f64() - b.as_f64()),
        ("*", a, b) => Float(a.as_f64() * b.as_f64()),
        ("/", a, b) => {
            if b.as_f64() == 0.0 {
                return Err(zero());
            }
            Float(a.as_f64() / b.as_f64())
        }
        ("min", a, b) => Float(a.as_f64().min(b.as_f64())),
        ("max", a, b) => Float(a.as_f64().max(b.as_f64())),
        ("**", a, b) => Float(a.as_f64().powf(b.as_f64())),
        (f, _, _) => return Err(BuiltinFailure::Type(format!("unknown function {}/2", f))),
    })
}

fn bi_is(cx: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let v = Term::Number(eval(&g.args()[1])?);
    let inst = with_args(g, vec![v, g.args()[1].clone()]);
    once(&inst, unifiable(&g.args()[0], &inst.args()[0], cx.occurs_check))
}

fn bi_compare(_: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let x = eval(&g.args()[0])?;
    let y = eval(&g.args()[1])?;
    let ord = match (x, y) {
        (Number::Int(a), Number::Int(b)) => a.cmp(&b),
        (a, b) => a.as_f64().partial_cmp(&b.as_f64()).unwrap_or(std::cmp::Ordering::Equal),
    };
    use std::cmp::Ordering::*;
    let holds = match g.functor().unwrap().0.as_str() {
        "<" => ord == Less,
        ">" => ord == Greater,
        "=<" => ord != Greater,
        ">=" => ord != Less,
        "=:=" => ord == Equal,
        "=\\=" => ord != Equal,
        _ => false,
    };
    once(g, holds)
}

// ----- lists and text -----

fn list_prefix(t: &Term) -> Vec<Term> {
    let mut out = Vec::new();
    let mut cur = t;
    while cur.has_functor(crate::term::CONS, 2) {
        out.push(cur.args()[0].clone());
        cur = &cur.args()[1];
    }
    out
}

fn bi_member(_: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let list = &g.args()[1];
    Ok(list_prefix(list).into_iter().map(|x| with_args(g, vec![x, list.clone()])).collect())
}

fn is_text(t: &Term) -> bool {
    matches!(t, Term::Atom(_) | Term::Str(_)) && !t.is_nil()
}

fn bi_append(cx: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let (a, b, c) = (&g.args()[0], &g.args()[1], &g.args()[2]);
    if is_text(a) || is_text(b) || is_text(c) {
        return append_text(g, a, b, c);
    }
    if let Some(xs) = a.as_list() {
        let joined = Term::list_with_tail(xs, b.clone());
        let inst = with_args(g, vec![a.clone(), b.clone(), joined]);
        return once(&inst, unifiable(c, &inst.args()[2], cx.occurs_check));
    }
    if let Some(zs) = c.as_list() {
        return Ok((0..=zs.len())
            .map(|i| with_args(g, vec![Term::list(zs[..i].to_vec()), Term::list(zs[i..].to_vec()), c.clone()]))
            .collect());
    }
    Err(BuiltinFailure::Instantiation("append/3 needs a proper first or third argument".into()))
}

fn append_text(g: &Term, a: &Term, b: &Term, c: &Term) -> BuiltinResult {
    let txt = |t: &Term| if is_text(t) { t.text().map(str::to_string) } else { None };
    match (txt(a), txt(b), txt(c)) {
        (Some(x), Some(y), _) => {
            let joined = text_like(a, &(x + &y));
            let inst = with_args(g, vec![a.clone(), b.clone(), joined.clone()]);
            once(&inst, c.is_var() || c.text() == joined.text())
        }
        (Some(x), None, Some(z)) => match z.strip_prefix(x.as_str()) {
            Some(rest) if b.is_var() => Ok(vec![with_args(g, vec![a.clone(), text_like(c, rest), c.clone()])]),
            _ => Ok(Vec::new()),
        },
        (None, Some(y), Some(z)) => match z.strip_suffix(y.as_str()) {
            Some(front) if a.is_var() => Ok(vec![with_args(g, vec![text_like(c, front), b.clone(), c.clone()])]),
            _ => Ok(Vec::new()),
        },
        (None, None, Some(z)) if a.is_var() && b.is_var() => Ok(z
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(z.len()))
            .map(|i| with_args(g, vec![text_like(c, &z[..i]), text_like(c, &z[i..]), c.clone()]))
            .collect()),
        _ if c.is_var() && (a.is_var() || b.is_var()) => {
            Err(BuiltinFailure::Instantiation(format!("append/3 needs two text arguments: {}", g)))
        }
        _ => Ok(Vec::new()),
    }
}

fn bi_contains(_: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let hay = text_of(&g.args()[0], "contains/2 first argument")?;
    let needle = text_of(&g.args()[1], "contains/2 second argument")?;
    once(g, hay.contains(&needle))
}

fn bi_length(cx: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let (l, n) = (&g.args()[0], &g.args()[1]);
    let len = if let Some(xs) = l.as_list() {
        Some(xs.len())
    } else if let Term::Str(s) = l {
        Some(s.chars().count())
    } else {
        None
    };
    match (len, n) {
        (Some(k), _) => {
            let inst = with_args(g, vec![l.clone(), Term::int(k as i64)]);
            once(&inst, unifiable(n, &inst.args()[1], cx.occurs_check))
        }
        (None, Term::Number(Number::Int(k))) if l.is_var() && *k >= 0 => {
            let fresh = Term::list((0..*k).map(|_| Term::fresh_var()).collect());
            Ok(vec![with_args(g, vec![fresh, n.clone()])])
        }
        _ => Err(BuiltinFailure::Instantiation("length/2".into())),
    }
}

// ----- system built-ins -----

fn stream_id(t: &Term) -> Option<i64> {
    if t.has_functor("$stream", 1) {
        t.args()[0].as_int()
    } else {
        None
    }
}

fn bi_open(cx: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let a = g.args();
    let path = match &a[0] {
        Term::Atom(_) | Term::Str(_) if !a[0].is_nil() => a[0].text().unwrap().to_string(),
        other => return Err(BuiltinFailure::Type(format!("open/3 file name must be an atom, got {}", other))),
    };
    let mode = a[1].as_atom().unwrap_or("");
    if !matches!(mode, "read" | "write" | "append") {
        return Err(BuiltinFailure::Type(format!("open/3 mode must be read or write, got {}", a[1])));
    }
    if !a[2].is_var() {
        return Err(BuiltinFailure::Type(format!("open/3 stream must be a variable, got {}", a[2])));
    }
    let file = match mode {
        "read" => File::open(&path),
        "write" => File::create(&path),
        _ => OpenOptions::new().append(true).create(true).open(&path),
    }
    .map_err(|e| BuiltinFailure::Os(format!("{}: {}", path, e)))?;
    let mut host = cx.host.borrow_mut();
    let id = host.next_stream;
    host.next_stream += 1;
    host.streams.insert(id, file);
    Ok(vec![with_args(g, vec![a[0].clone(), a[1].clone(), Term::compound("$stream", vec![Term::int(id)])])])
}

fn bi_close(cx: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let s = &g.args()[0];
    let id = stream_id(s).ok_or_else(|| BuiltinFailure::Type(format!("close/1 needs a stream, got {}", s)))?;
    let removed = cx.host.borrow_mut().streams.remove(&id);
    match removed {
        Some(_) => once(g, true),
        None => Err(BuiltinFailure::Os(format!("stream {} is not open", id))),
    }
}

fn display(t: &Term) -> String {
    match t {
        Term::Str(s) => s.to_string(),
        Term::Atom(a) => a.as_str().to_string(),
        t => t.to_string(),
    }
}

fn bi_write(cx: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let text = display(&g.args()[0]);
    write!(cx.host.borrow_mut().out, "{}", text).map_err(|e| BuiltinFailure::Os(e.to_string()))?;
    once(g, true)
}

fn bi_write2(cx: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let s = &g.args()[0];
    let id = stream_id(s).ok_or_else(|| BuiltinFailure::Type(format!("write/2 needs a stream, got {}", s)))?;
    let text = display(&g.args()[1]);
    let mut host = cx.host.borrow_mut();
    let f = host.streams.get_mut(&id).ok_or_else(|| BuiltinFailure::Os(format!("stream {} is not open", id)))?;
    f.write_all(text.as_bytes()).map_err(|e| BuiltinFailure::Os(e.to_string()))?;
    once(g, true)
}

fn bi_nl(cx: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    writeln!(cx.host.borrow_mut().out).map_err(|e| BuiltinFailure::Os(e.to_string()))?;
    once(g, true)
}

fn bi_system(cx: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let cmd = text_of(&g.args()[0], "system/1 command")?;
    let runner = cx.host.borrow().runner.clone();
    let code = runner.run(&cmd).map_err(|e| BuiltinFailure::Os(e.to_string()))?;
    once(g, code == 0)
}

fn bi_sleep(cx: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let secs = match &g.args()[0] {
        Term::Number(n) if n.as_f64() >= 0.0 => n.as_f64(),
        other => return Err(BuiltinFailure::Type(format!("sleep/1 needs a non-negative number, got {}", other))),
    };
    let end = Instant::now() + Duration::from_secs_f64(secs);
    loop {
        let now = Instant::now();
        if now >= end {
            return once(g, true);
        }
        if cx.deadline.is_some_and(|d| now >= d) {
            return Ok(Vec::new());
        }
        std::thread::sleep((end - now).min(Duration::from_millis(10)));
    }
}

/// The policy program a mutation may touch: the current context, which must
/// be a single policy program.
fn mutable_target(cx: &BuiltinCtx<'_>, what: &str) -> Result<ProgramId, BuiltinFailure> {
    match cx.context {
        ProgramExpression::Id(p) if cx.registry.borrow().is_policy(p) => Ok(p.clone()),
        other => Err(BuiltinFailure::Denied(format!("{} is only available inside a policy program, not in {}", what, other))),
    }
}

fn bi_assert(cx: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let name = g.functor().unwrap().0.as_str().to_string();
    let target = mutable_target(cx, &name)?;
    let clause = Clause::from_term(&g.args()[0]).map_err(|e| BuiltinFailure::Type(e.to_string()))?;
    let added = cx.store.borrow_mut().add_clause(&target, clause, name == "asserta");
    once(g, added)
}

fn bi_retract(cx: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let target = mutable_target(cx, "retract")?;
    let removed = cx.store.borrow_mut().retract(&target, &g.args()[0], cx.occurs_check);
    Ok(removed.into_iter().map(|t| with_args(g, vec![t])).collect())
}

fn bi_program_exists(cx: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let id = ProgramId::from_term(&g.args()[0]).map_err(|e| BuiltinFailure::Type(e.to_string()))?;
    once(g, cx.store.borrow().contains(&id))
}

fn bi_report_deletion(cx: &mut BuiltinCtx<'_>, g: &Term) -> BuiltinResult {
    let cmd = text_of(&g.args()[0], "report_deletion/1 command")?;
    let mut host = cx.host.borrow_mut();
    writeln!(host.out, "deletion: {}", cmd).map_err(|e| BuiltinFailure::Os(e.to_string()))?;
    host.reports.push(cmd.clone());
    cx.reported.push(cmd);
    once(g, true)
}

const TABLE: &[BuiltinSpec] = &[
    BuiltinSpec { name: "fail", arity: 0, kind: BuiltinKind::Pure, run: bi_fail },
    BuiltinSpec { name: "false", arity: 0, kind: BuiltinKind::Pure, run: bi_fail },
    BuiltinSpec { name: "=", arity: 2, kind: BuiltinKind::Pure, run: bi_unify },
    BuiltinSpec { name: "\\=", arity: 2, kind: BuiltinKind::Pure, run: bi_not_unify },
    BuiltinSpec { name: "==", arity: 2, kind: BuiltinKind::Pure, run: bi_eq },
    BuiltinSpec { name: "\\==", arity: 2, kind: BuiltinKind::Pure, run: bi_neq },
    BuiltinSpec { name: "var", arity: 1, kind: BuiltinKind::Pure, run: bi_type_check },
    BuiltinSpec { name: "nonvar", arity: 1, kind: BuiltinKind::Pure, run: bi_type_check },
    BuiltinSpec { name: "atom", arity: 1, kind: BuiltinKind::Pure, run: bi_type_check },
    BuiltinSpec { name: "number", arity: 1, kind: BuiltinKind::Pure, run: bi_type_check },
    BuiltinSpec { name: "integer", arity: 1, kind: BuiltinKind::Pure, run: bi_type_check },
    BuiltinSpec { name: "float", arity: 1, kind: BuiltinKind::Pure, run: bi_type_check },
    BuiltinSpec { name: "string", arity: 1, kind: BuiltinKind::Pure, run: bi_type_check },
    BuiltinSpec { name: "atomic", arity: 1, kind: BuiltinKind::Pure, run: bi_type_check },
    BuiltinSpec { name: "compound", arity: 1, kind: BuiltinKind::Pure, run: bi_type_check },
    BuiltinSpec { name: "callable", arity: 1, kind: BuiltinKind::Pure, run: bi_type_check },
    BuiltinSpec { name: "is_list", arity: 1, kind: BuiltinKind::Pure, run: bi_type_check },
    BuiltinSpec { name: "ground", arity: 1, kind: BuiltinKind::Pure, run: bi_type_check },
    BuiltinSpec { name: "copy_term", arity: 2, kind: BuiltinKind::Pure, run: bi_copy_term },
    BuiltinSpec { name: "functor", arity: 3, kind: BuiltinKind::Pure, run: bi_functor },
    BuiltinSpec { name: "arg", arity: 3, kind: BuiltinKind::Pure, run: bi_arg },
    BuiltinSpec { name: "=..", arity: 2, kind: BuiltinKind::Pure, run: bi_univ },
    BuiltinSpec { name: "is", arity: 2, kind: BuiltinKind::Pure, run: bi_is },
    BuiltinSpec { name: "<", arity: 2, kind: BuiltinKind::Pure, run: bi_compare },
    BuiltinSpec { name: ">", arity: 2, kind: BuiltinKind::Pure, run: bi_compare },
    BuiltinSpec { name: "=<", arity: 2, kind: BuiltinKind::Pure, run: bi_compare },
    BuiltinSpec { name: ">=", arity: 2, kind: BuiltinKind::Pure, run: bi_compare },
    BuiltinSpec { name: "=:=", arity: 2, kind: BuiltinKind::Pure, run: bi_compare },
    BuiltinSpec { name: "=\\=", arity: 2, kind: BuiltinKind::Pure, run: bi_compare },
    BuiltinSpec { name: "member", arity: 2, kind: BuiltinKind::Pure, run: bi_member },
    BuiltinSpec { name: "append", arity: 3, kind: BuiltinKind::Pure, run: bi_append },
    BuiltinSpec { name: "contains", arity: 2, kind: BuiltinKind::Pure, run: bi_contains },
    BuiltinSpec { name: "length", arity: 2, kind: BuiltinKind::Pure, run: bi_length },
    BuiltinSpec { name: "open", arity: 3, kind: BuiltinKind::System, run: bi_open },
    BuiltinSpec { name: "close", arity: 1, kind: BuiltinKind::System, run: bi_close },
    BuiltinSpec { name: "write", arity: 1, kind: BuiltinKind::System, run: bi_write },
    BuiltinSpec { name: "write", arity: 2, kind: BuiltinKind::System, run: bi_write2 },
    BuiltinSpec { name: "nl", arity: 0, kind: BuiltinKind::System, run: bi_nl },
    BuiltinSpec { name: "system", arity: 1, kind: BuiltinKind::System, run: bi_system },
    BuiltinSpec { name: "sleep", arity: 1, kind: BuiltinKind::System, run: bi_sleep },
    BuiltinSpec { name: "assert", arity: 1, kind: BuiltinKind::System, run: bi_assert },
    BuiltinSpec { name: "asserta", arity: 1, kind: BuiltinKind::System, run: bi_assert },
    BuiltinSpec { name: "assertz", arity: 1, kind: BuiltinKind::System, run: bi_assert },
    BuiltinSpec { name: "retract", arity: 1, kind: BuiltinKind::System, run: bi_retract },
    BuiltinSpec { name: "program_exists", arity: 1, kind: BuiltinKind::System, run: bi_program_exists },
    BuiltinSpec { name: "report_deletion", arity: 1, kind: BuiltinKind::System, run: bi_report_deletion },
];

/// Lookup table of built-ins keyed by name and arity.
#[derive(Clone, Debug)]
pub struct BuiltinTable {
    specs: Vec<BuiltinSpec>,
}

impl Default for BuiltinTable {
    fn default() -> Self {
        BuiltinTable { specs: TABLE.to_vec() }
    }
}

impl BuiltinTable {
    pub fn lookup(&self, g: &Term) -> Option<&BuiltinSpec> {
        let (f, n) = g.functor()?;
        self.specs.iter().find(|s| s.name == f.as_str() && s.arity == n)
    }

    pub fn specs(&self) -> &[BuiltinSpec] {
        &self.specs
    }

    /// Removes a built-in; goals with that name become user predicates.
    pub fn without(mut self, name: &str, arity: usize) -> Self {
        self.specs.retain(|s| !(s.name == name && s.arity == arity));
        self
    }
}

impl BuiltinSpec {
    /// Validates argument types and runs the effect.
    pub fn call(&self, cx: &mut BuiltinCtx<'_>, goal: &Term) -> BuiltinResult {
        (self.run)(cx, goal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reader::term;

    fn run(goal: &str) -> BuiltinResult {
        let host = RefCell::new(Host::new(Box::new(std::io::sink()), Arc::new(RecordingRunner::new())));
        let store = RefCell::new(ProgramStore::new());
        let registry = RefCell::new(PolicyRegistry::new(ProgramId::get("file:///p/d.html").unwrap()));
        let ctx = ProgramExpression::Empty;
        let mut cx = BuiltinCtx {
            host: &host,
            store: &store,
            registry: &registry,
            context: &ctx,
            deadline: None,
            occurs_check: true,
            reported: Vec::new(),
        };
        let g = term(goal);
        BuiltinTable::default().lookup(&g).expect("registered").call(&mut cx, &g)
    }

    #[test]
    fn lookup() {
        let t = BuiltinTable::default();
        assert!(t.lookup(&term("open(F, read, S)")).is_some());
        assert!(t.lookup(&term("system(C)")).is_some());
        assert!(t.lookup(&term("interested_in(X)")).is_none());
    }

    #[test]
    fn text_append_and_contains() {
        assert_eq!(run("append(\"/tmp/\", X, \"/tmp/a\")").unwrap(), vec![term("append(\"/tmp/\", \"a\", \"/tmp/a\")")]);
        assert!(run("append(\"/tmp/\", _, '/etc/passwd')").unwrap().is_empty());
        assert_eq!(run("append(\"rm \", _, \"rm -rf /\")").unwrap().len(), 1);
        assert_eq!(run("append(X, Y, \"ab\")").unwrap().len(), 3);
        assert_eq!(run("contains(\"http://www.cs.mu.oz.au/x\", \"http://www.cs.mu.oz.au/\")").unwrap().len(), 1);
        assert!(run("contains(\"http://www.cs.rmit.edu.au/\", \"http://www.cs.mu.oz.au/\")").unwrap().is_empty());
    }

    #[test]
    fn list_append_and_member() {
        assert_eq!(run("append([1], [2], X)").unwrap(), vec![term("append([1], [2], [1, 2])")]);
        assert_eq!(run("append(X, Y, [1, 2])").unwrap().len(), 3);
        assert_eq!(run("member(X, [a, b, c])").unwrap().len(), 3);
    }

    #[test]
    fn arithmetic() {
        assert_eq!(run("X is 2 + 3 * 4").unwrap(), vec![term("14 is 2 + 3 * 4")]);
        assert!(run("3 < 2").unwrap().is_empty());
        assert!(matches!(run("X is Y + 1"), Err(BuiltinFailure::Instantiation(_))));
        assert_eq!(run("X is 7 / 2").unwrap()[0].args()[0], Term::float(3.5));
    }

    #[test]
    fn open_type_rules() {
        assert!(matches!(run("open(123, read, S)"), Err(BuiltinFailure::Type(_))));
        assert!(matches!(run("open('/tmp/x', sideways, S)"), Err(BuiltinFailure::Type(_))));
        assert!(matches!(run("open('/tmp/x', read, s)"), Err(BuiltinFailure::Type(_))));
        let dir = tempfile_path();
        let ok = run(&format!("open('{}', write, S)", dir)).unwrap();
        assert!(ok[0].args()[2].has_functor("$stream", 1));
    }

    fn tempfile_path() -> String {
        std::env::temp_dir().join(format!("lw-builtin-{}.txt", std::process::id())).to_string_lossy().into_owned()
    }

    #[test]
    fn mutation_outside_policy_denied() {
        assert!(matches!(run("assert(p(1))"), Err(BuiltinFailure::Denied(_))));
    }
}
