//! Program identities, clauses and goals.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::reader::{read_terms, ParseError};
use crate::subst::rename_with;
use crate::term::{Term, Var};

/// How a program's page is obtained.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Head,
    Get,
    /// Form fields in submission order.
    Post(Vec<(String, String)>),
}

impl Method {
    pub fn to_term(&self) -> Term {
        match self {
            Method::Head => Term::atom("head"),
            Method::Get => Term::atom("get"),
            Method::Post(fields) => Term::compound(
                "post",
                vec![Term::list(
                    fields
                        .iter()
                        .map(|(k, v)| Term::compound("field", vec![Term::string(k), Term::string(v)]))
                        .collect(),
                )],
            ),
        }
    }

    pub fn from_term(t: &Term) -> Option<Method> {
        match t.as_atom() {
            Some("head") => return Some(Method::Head),
            Some("get") => return Some(Method::Get),
            _ => {}
        }
        if !t.has_functor("post", 1) {
            return None;
        }
        let mut fields = Vec::new();
        for f in t.args()[0].as_list()? {
            if !f.has_functor("field", 2) {
                return None;
            }
            fields.push((f.args()[0].text()?.to_string(), f.args()[1].text()?.to_string()));
        }
        Some(Method::Post(fields))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IdError {
    #[error("not a program id term: {0}")]
    Shape(String),
    #[error("invalid program URL {0:?}")]
    Url(String),
}

/// `lw(Method, URL)`. Identity is structural over method, fields and URL.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProgramId {
    method: Method,
    url: String,
}

impl ProgramId {
    pub fn new(method: Method, url: &str) -> Result<ProgramId, IdError> {
        match url::Url::parse(url) {
            Ok(u) if !u.cannot_be_a_base() || u.scheme() == "file" => {
                Ok(ProgramId { method, url: url.to_string() })
            }
            _ => Err(IdError::Url(url.to_string())),
        }
    }

    pub fn get(url: &str) -> Result<ProgramId, IdError> {
        ProgramId::new(Method::Get, url)
    }

    pub fn method(&self) -> &Method {
        &self.method
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn to_term(&self) -> Term {
        Term::compound("lw", vec![self.method.to_term(), Term::string(&self.url)])
    }

    /// Accepts the URL as a string or an atom.
    pub fn from_term(t: &Term) -> Result<ProgramId, IdError> {
        if !t.has_functor("lw", 2) {
            return Err(IdError::Shape(t.to_string()));
        }
        let method = Method::from_term(&t.args()[0]).ok_or_else(|| IdError::Shape(t.to_string()))?;
        let url = t.args()[1].text().ok_or_else(|| IdError::Shape(t.to_string()))?;
        ProgramId::new(method, url)
    }

    pub fn parse(text: &str) -> Result<ProgramId, IdError> {
        let t = crate::reader::read_term(text).map_err(|_| IdError::Shape(text.to_string()))?;
        ProgramId::from_term(&t.term)
    }
}

impl fmt::Display for ProgramId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

/// A goal body. Control constructs are explicit; everything else is a call.
#[derive(Clone, Debug, PartialEq)]
pub enum Goal {
    True,
    Cut,
    Call(Term),
    Conj(Arc<Goal>, Arc<Goal>),
    Disj(Arc<Goal>, Arc<Goal>),
    IfThenElse(Arc<Goal>, Arc<Goal>, Arc<Goal>),
    /// `E #> G`. The expression stays a term until the switch is executed.
    ContextSwitch(Term, Arc<Goal>),
}

impl Goal {
    pub fn from_term(t: &Term) -> Goal {
        match t {
            Term::Atom(a) if a.as_str() == "true" => Goal::True,
            Term::Atom(a) if a.as_str() == "!" => Goal::Cut,
            Term::Compound(c) if c.args.len() == 2 => {
                let (l, r) = (&c.args[0], &c.args[1]);
                match c.functor.as_str() {
                    "," => Goal::Conj(Arc::new(Goal::from_term(l)), Arc::new(Goal::from_term(r))),
                    ";" if l.has_functor("->", 2) => Goal::IfThenElse(
                        Arc::new(Goal::from_term(&l.args()[0])),
                        Arc::new(Goal::from_term(&l.args()[1])),
                        Arc::new(Goal::from_term(r)),
                    ),
                    ";" => Goal::Disj(Arc::new(Goal::from_term(l)), Arc::new(Goal::from_term(r))),
                    "->" => Goal::IfThenElse(
                        Arc::new(Goal::from_term(l)),
                        Arc::new(Goal::from_term(r)),
                        Arc::new(Goal::Call(Term::atom("fail"))),
                    ),
                    "#>" => Goal::ContextSwitch(l.clone(), Arc::new(Goal::from_term(r))),
                    _ => Goal::Call(t.clone()),
                }
            }
            _ => Goal::Call(t.clone()),
        }
    }

    pub fn to_term(&self) -> Term {
        match self {
            Goal::True => Term::atom("true"),
            Goal::Cut => Term::atom("!"),
            Goal::Call(t) => t.clone(),
            Goal::Conj(a, b) => Term::compound(",", vec![a.to_term(), b.to_term()]),
            Goal::Disj(a, b) => Term::compound(";", vec![a.to_term(), b.to_term()]),
            Goal::IfThenElse(c, t, e) => Term::compound(
                ";",
                vec![Term::compound("->", vec![c.to_term(), t.to_term()]), e.to_term()],
            ),
            Goal::ContextSwitch(e, g) => Term::compound("#>", vec![e.clone(), g.to_term()]),
        }
    }

    pub fn conj(goals: Vec<Goal>) -> Goal {
        let mut it = goals.into_iter().rev();
        match it.next() {
            None => Goal::True,
            Some(last) => it.fold(last, |acc, g| Goal::Conj(Arc::new(g), Arc::new(acc))),
        }
    }

    pub(crate) fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Goal {
        match self {
            Goal::True => Goal::True,
            Goal::Cut => Goal::Cut,
            Goal::Call(t) => Goal::Call(f(t)),
            Goal::Conj(a, b) => Goal::Conj(Arc::new(a.map_terms(f)), Arc::new(b.map_terms(f))),
            Goal::Disj(a, b) => Goal::Disj(Arc::new(a.map_terms(f)), Arc::new(b.map_terms(f))),
            Goal::IfThenElse(c, t, e) => {
                Goal::IfThenElse(Arc::new(c.map_terms(f)), Arc::new(t.map_terms(f)), Arc::new(e.map_terms(f)))
            }
            Goal::ContextSwitch(e, g) => Goal::ContextSwitch(f(e), Arc::new(g.map_terms(f))),
        }
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClauseError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("clause head is not callable: {0}")]
    Head(String),
    #[error("directives are not supported: {0}")]
    Directive(String),
}

/// `head :- body`; the head is always callable.
#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    pub head: Term,
    pub body: Arc<Goal>,
}

impl Clause {
    pub fn fact(head: Term) -> Clause {
        Clause { head, body: Arc::new(Goal::True) }
    }

    pub fn from_term(t: &Term) -> Result<Clause, ClauseError> {
        let (head, body) = if t.has_functor(":-", 2) {
            (t.args()[0].clone(), Goal::from_term(&t.args()[1]))
        } else if t.has_functor(":-", 1) || t.has_functor("?-", 1) {
            return Err(ClauseError::Directive(t.to_string()));
        } else {
            (t.clone(), Goal::True)
        };
        if !head.is_callable() {
            return Err(ClauseError::Head(head.to_string()));
        }
        Ok(Clause { head, body: Arc::new(body) })
    }

    pub fn to_term(&self) -> Term {
        match &*self.body {
            Goal::True => self.head.clone(),
            b => Term::compound(":-", vec![self.head.clone(), b.to_term()]),
        }
    }

    /// A copy with every variable replaced by a fresh one.
    pub fn renamed(&self) -> Clause {
        let mut map: HashMap<Var, Term> = HashMap::new();
        let head = rename_with(&self.head, &mut map);
        let body = self.body.map_terms(&mut |t| rename_with(t, &mut map));
        Clause { head, body: Arc::new(body) }
    }

    pub fn key(&self) -> (&str, usize) {
        let (a, n) = self.head.functor().expect("clause head is callable");
        (a.as_str(), n)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.", self.to_term())
    }
}

pub fn parse_clauses(src: &str) -> Result<Vec<Clause>, ClauseError> {
    read_terms(src)?.iter().map(|r| Clause::from_term(&r.term)).collect()
}

/// A translated page: its id, clauses in source order and origin metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct LWProgram {
    pub id: ProgramId,
    pub clauses: Vec<Clause>,
    /// URL after redirects, when known.
    pub final_url: Option<String>,
}

impl LWProgram {
    pub fn new(id: ProgramId, clauses: Vec<Clause>) -> LWProgram {
        LWProgram { id, clauses, final_url: None }
    }

    pub fn defines(&self, name: &str, arity: usize) -> bool {
        self.clauses.iter().any(|c| c.key() == (name, arity))
    }

    pub fn to_text(&self) -> String {
        self.clauses.iter().map(|c| format!("{}\n", c)).collect()
    }
}
