//! Audit events emitted at system-call and oracle-call sites.

use std::fmt;
use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::expr::ProgramExpression;
use crate::program::ProgramId;
use crate::term::Term;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AuditKind {
    /// `call_system/1` is about to be invoked for a goal.
    Syscall,
    /// The oracle is about to fetch a program.
    Fetch,
    /// A type-checked built-in ran with system effects.
    Builtin,
    /// A context switch completed its checks.
    ContextSwitch,
    /// The deletion-report hook fired.
    Report,
}

impl AuditKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AuditKind::Syscall => "syscall",
            AuditKind::Fetch => "fetch",
            AuditKind::Builtin => "builtin",
            AuditKind::ContextSwitch => "switch",
            AuditKind::Report => "report",
        }
    }

    /// Kinds written to the audit log file.
    pub fn is_logged(self) -> bool {
        matches!(self, AuditKind::Syscall | AuditKind::Fetch)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AuditSubject {
    Goal(Term),
    Program(ProgramId),
}

impl fmt::Display for AuditSubject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuditSubject::Goal(t) => write!(f, "{}", t),
            AuditSubject::Program(p) => write!(f, "{}", p),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditEvent {
    pub timestamp_ms: u128,
    pub kind: AuditKind,
    pub subject: AuditSubject,
    /// Context in which the event happened.
    pub context: ProgramExpression,
    /// Contexts entered so far in this derivation, oldest first; the last
    /// element equals `context`.
    pub sequence: Vec<ProgramExpression>,
    /// Policy set, newest first.
    pub sigma: Vec<ProgramId>,
    /// Free-form result note for built-in events.
    pub note: Option<String>,
}

pub(crate) fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

impl AuditEvent {
    /// `timestamp<TAB>kind<TAB>subject<TAB>context<TAB>[sigma]`.
    pub fn to_log_line(&self) -> String {
        let sigma: Vec<String> = self.sigma.iter().map(|p| p.to_string()).collect();
        format!(
            "{}\t{}\t{}\t{}\t[{}]",
            self.timestamp_ms,
            self.kind.as_str(),
            self.subject,
            self.context,
            sigma.join(", ")
        )
    }
}

type Subscriber = Box<dyn FnMut(&AuditEvent)>;

/// Fans events out to subscribers, an optional log sink and an optional
/// in-memory record.
#[derive(Default)]
pub struct AuditHub {
    subscribers: Vec<Subscriber>,
    log: Option<Box<dyn Write>>,
    record: Option<Vec<AuditEvent>>,
}

impl AuditHub {
    pub fn subscribe(&mut self, f: impl FnMut(&AuditEvent) + 'static) {
        self.subscribers.push(Box::new(f))
    }

    pub fn set_log(&mut self, w: Box<dyn Write>) {
        self.log = Some(w)
    }

    pub fn set_recording(&mut self, on: bool) {
        self.record = if on { Some(Vec::new()) } else { None }
    }

    pub fn take_recorded(&mut self) -> Vec<AuditEvent> {
        self.record.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn emit(&mut self, event: AuditEvent) {
        for s in &mut self.subscribers {
            s(&event);
        }
        if event.kind.is_logged() {
            if let Some(w) = &mut self.log {
                let _ = writeln!(w, "{}", event.to_log_line());
                let _ = w.flush();
            }
        }
        if let Some(r) = &mut self.record {
            r.push(event);
        }
    }
}
