//! Resource guards observing engine events.
//!
//! The engine reports clause applications, built-in invocations and program
//! installs; guards decide whether evaluation must stop. Stopping is
//! cooperative: the engine checks the termination flag at every step.

use std::fmt;
use std::time::{Duration, Instant};

use crate::expr::ProgramExpression;
use crate::subst::variant;
use crate::term::Term;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TerminationReason {
    LoopFound,
    DepthExceeded,
    ProgramCountExceeded,
    ClauseCountExceeded,
    ContextSizeExceeded,
    TimedOut,
}

impl TerminationReason {
    pub fn message(self) -> &'static str {
        match self {
            TerminationReason::LoopFound => "loop found",
            TerminationReason::DepthExceeded => "maximum recursion depth exceeded",
            TerminationReason::ProgramCountExceeded => "maximum LogicWeb program count exceeded",
            TerminationReason::ClauseCountExceeded => "maximum clause count exceeded",
            TerminationReason::ContextSizeExceeded => "maximum context size exceeded",
            TerminationReason::TimedOut => "timeout",
        }
    }
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.message())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuardConfig {
    /// Triggers when a clause is applied at a depth above this.
    pub max_depth: usize,
    /// Triggers when the session has created more programs than this.
    pub max_programs: usize,
    /// Triggers when a query has applied more clauses than this.
    pub max_clauses: usize,
    pub loop_check: bool,
    pub timeout: Option<Duration>,
    /// Triggers when a context expression has more nodes than this.
    pub max_context_size: Option<usize>,
}

impl Default for GuardConfig {
    fn default() -> Self {
        GuardConfig {
            max_depth: 40,
            max_programs: 100,
            max_clauses: 500,
            loop_check: false,
            timeout: None,
            max_context_size: None,
        }
    }
}

impl GuardConfig {
    /// No limits at all.
    pub fn unlimited() -> Self {
        GuardConfig {
            max_depth: usize::MAX,
            max_programs: usize::MAX,
            max_clauses: usize::MAX,
            loop_check: false,
            timeout: None,
            max_context_size: None,
        }
    }
}

/// One ancestor: the context and a renamed-apart copy of the goal.
#[derive(Clone, Debug)]
pub struct Ancestor {
    pub context: ProgramExpression,
    pub goal: Term,
}

/// Whether some ancestor has an equal context and a variant goal.
pub fn check_loop<'a>(ancestors: impl IntoIterator<Item = &'a Ancestor>, ctx: &ProgramExpression, goal: &Term) -> bool {
    ancestors.into_iter().any(|a| a.context == *ctx && variant(&a.goal, goal))
}

/// Event reported by the engine.
pub enum GuardEvent<'a> {
    ClauseApplied { depth: usize, context: &'a ProgramExpression, goal: &'a Term, ancestors: &'a [&'a Ancestor] },
    BuiltinInvoked { goal: &'a Term },
    ProgramCreated { count: usize },
    ContextEntered { context: &'a ProgramExpression },
}

/// An additional guard layer.
pub trait Guard {
    fn observe(&mut self, event: &GuardEvent<'_>) -> Option<TerminationReason>;
}

/// Counters and the termination flag of one session.
#[derive(Debug)]
pub struct GuardState {
    pub config: GuardConfig,
    pub clause_count: usize,
    pub program_count: usize,
    pub terminated: Option<TerminationReason>,
    deadline: Option<Instant>,
}

impl GuardState {
    pub fn new(config: GuardConfig) -> Self {
        GuardState { config, clause_count: 0, program_count: 0, terminated: None, deadline: None }
    }

    /// Resets per-query state. The program count persists.
    pub fn begin_query(&mut self) {
        self.clause_count = 0;
        self.terminated = None;
        self.deadline = self.config.timeout.map(|t| Instant::now() + t);
    }

    pub fn deadline(&self) -> Option<Instant> {
        self.deadline
    }

    fn trip(&mut self, r: TerminationReason) -> Option<TerminationReason> {
        if self.terminated.is_none() {
            self.terminated = Some(r);
        }
        self.terminated
    }

    /// Called at every engine step.
    pub fn check_deadline(&mut self) -> Option<TerminationReason> {
        if self.terminated.is_some() {
            return self.terminated;
        }
        match self.deadline {
            Some(d) if Instant::now() >= d => self.trip(TerminationReason::TimedOut),
            _ => None,
        }
    }

    pub fn on_clause_applied(
        &mut self,
        depth: usize,
        ctx: &ProgramExpression,
        goal: &Term,
        ancestors: &[&Ancestor],
    ) -> Option<TerminationReason> {
        self.clause_count += 1;
        if self.config.loop_check && check_loop(ancestors.iter().copied(), ctx, goal) {
            return self.trip(TerminationReason::LoopFound);
        }
        if depth > self.config.max_depth {
            return self.trip(TerminationReason::DepthExceeded);
        }
        if self.clause_count > self.config.max_clauses {
            return self.trip(TerminationReason::ClauseCountExceeded);
        }
        None
    }

    /// Only genuinely new installs are reported; cache hits are not.
    pub fn on_program_created(&mut self) -> Option<TerminationReason> {
        self.program_count += 1;
        if self.program_count > self.config.max_programs {
            return self.trip(TerminationReason::ProgramCountExceeded);
        }
        None
    }

    pub fn on_context_entered(&mut self, ctx: &ProgramExpression) -> Option<TerminationReason> {
        match self.config.max_context_size {
            Some(m) if ctx.size() > m => self.trip(TerminationReason::ContextSizeExceeded),
            _ => None,
        }
    }

    pub fn terminate(&mut self, r: TerminationReason) {
        self.trip(r);
    }
}
