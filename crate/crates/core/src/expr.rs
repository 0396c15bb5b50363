//! Program expressions and their term syntax.
//!
//! | term                    | expression            |
//! |-------------------------|-----------------------|
//! | `lw(M, U)`              | program id            |
//! | `#`                     | current context       |
//! | `empty`                 | empty context         |
//! | `E1 + E2`, `E1 * E2`    | union, intersection   |
//! | `E / P`                 | restriction           |
//! | `@E`                    | encapsulation         |
//! | `(/)<>(E, [P..])`       | repeated restriction  |
//! | `(+)<>[E..]`, `(*)<>[E..]` | left fold of union / intersection |

use std::collections::BTreeSet;
use std::fmt;

use crate::program::{IdError, ProgramId};
use crate::term::Term;

/// Operand of a restriction: a concrete program or the current context.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ProgramRef {
    Id(ProgramId),
    CurrentContext,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReduceOp {
    Union,
    Intersection,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ProgramExpression {
    /// Contains no clauses.
    Empty,
    CurrentContext,
    Id(ProgramId),
    Union(Box<ProgramExpression>, Box<ProgramExpression>),
    Intersection(Box<ProgramExpression>, Box<ProgramExpression>),
    Restriction(Box<ProgramExpression>, ProgramRef),
    Encapsulation(Box<ProgramExpression>),
    ReduceRestrict(Box<ProgramExpression>, Vec<ProgramRef>),
    /// Non-empty operand list.
    ReduceOp(ReduceOp, Vec<ProgramExpression>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("not a program expression: {0}")]
    Shape(String),
    #[error(transparent)]
    Id(#[from] IdError),
    #[error("restriction operand is not a program id after context insertion: {0}")]
    RestrictionOperand(String),
    #[error("unresolved current-context marker in {0}")]
    UnresolvedContext(String),
    #[error("reduction over an empty list: {0}")]
    EmptyReduction(String),
}

impl ProgramExpression {
    pub fn id(id: ProgramId) -> Self {
        ProgramExpression::Id(id)
    }

    pub fn union(a: Self, b: Self) -> Self {
        ProgramExpression::Union(Box::new(a), Box::new(b))
    }

    pub fn intersection(a: Self, b: Self) -> Self {
        ProgramExpression::Intersection(Box::new(a), Box::new(b))
    }

    pub fn restriction(e: Self, p: ProgramRef) -> Self {
        ProgramExpression::Restriction(Box::new(e), p)
    }

    pub fn encapsulation(e: Self) -> Self {
        ProgramExpression::Encapsulation(Box::new(e))
    }

    pub fn from_term(t: &Term) -> Result<Self, ExprError> {
        let shape = || ExprError::Shape(t.to_string());
        if let Some(a) = t.as_atom() {
            return match a {
                "#" => Ok(ProgramExpression::CurrentContext),
                "empty" => Ok(ProgramExpression::Empty),
                _ => Err(shape()),
            };
        }
        let Some((f, n)) = t.functor() else { return Err(shape()) };
        let args = t.args();
        match (f.as_str(), n) {
            ("lw", 2) => Ok(ProgramExpression::Id(ProgramId::from_term(t)?)),
            ("+", 2) => Ok(Self::union(Self::from_term(&args[0])?, Self::from_term(&args[1])?)),
            ("*", 2) => Ok(Self::intersection(Self::from_term(&args[0])?, Self::from_term(&args[1])?)),
            ("/", 2) => Ok(Self::restriction(Self::from_term(&args[0])?, ref_from_term(&args[1])?)),
            ("@", 1) => Ok(Self::encapsulation(Self::from_term(&args[0])?)),
            ("<>", 2) => match args[0].as_atom() {
                Some("/") => {
                    let pair = &args[1];
                    if !pair.has_functor(",", 2) {
                        return Err(shape());
                    }
                    let e = Self::from_term(&pair.args()[0])?;
                    let refs = pair.args()[1]
                        .as_list()
                        .ok_or_else(shape)?
                        .iter()
                        .map(ref_from_term)
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(ProgramExpression::ReduceRestrict(Box::new(e), refs))
                }
                Some(op @ ("+" | "*")) => {
                    let items = args[1].as_list().ok_or_else(shape)?;
                    if items.is_empty() {
                        return Err(ExprError::EmptyReduction(t.to_string()));
                    }
                    let op = if op == "+" { ReduceOp::Union } else { ReduceOp::Intersection };
                    let es = items.iter().map(Self::from_term).collect::<Result<Vec<_>, _>>()?;
                    Ok(ProgramExpression::ReduceOp(op, es))
                }
                _ => Err(shape()),
            },
            _ => Err(shape()),
        }
    }

    pub fn to_term(&self) -> Term {
        use ProgramExpression::*;
        match self {
            Empty => Term::atom("empty"),
            CurrentContext => Term::atom("#"),
            Id(p) => p.to_term(),
            Union(a, b) => Term::compound("+", vec![a.to_term(), b.to_term()]),
            Intersection(a, b) => Term::compound("*", vec![a.to_term(), b.to_term()]),
            Restriction(e, p) => Term::compound("/", vec![e.to_term(), ref_to_term(p)]),
            Encapsulation(e) => Term::compound("@", vec![e.to_term()]),
            ReduceRestrict(e, refs) => Term::compound(
                "<>",
                vec![
                    Term::atom("/"),
                    Term::compound(",", vec![e.to_term(), Term::list(refs.iter().map(ref_to_term).collect())]),
                ],
            ),
            ReduceOp(op, es) => Term::compound(
                "<>",
                vec![
                    Term::atom(if *op == self::ReduceOp::Union { "+" } else { "*" }),
                    Term::list(es.iter().map(|e| e.to_term()).collect()),
                ],
            ),
        }
    }

    /// Program ids occurring in the expression. `#` and `empty` contribute none.
    pub fn expids(&self) -> BTreeSet<ProgramId> {
        self.ids_in_order().into_iter().collect()
    }

    /// Program ids in left-to-right first-occurrence order.
    pub fn ids_in_order(&self) -> Vec<ProgramId> {
        let mut out = Vec::new();
        self.collect_ids(&mut out);
        out
    }

    fn collect_ids(&self, out: &mut Vec<ProgramId>) {
        let push = |p: &ProgramId, out: &mut Vec<ProgramId>| {
            if !out.contains(p) {
                out.push(p.clone())
            }
        };
        let push_ref = |r: &ProgramRef, out: &mut Vec<ProgramId>| {
            if let ProgramRef::Id(p) = r {
                if !out.contains(p) {
                    out.push(p.clone())
                }
            }
        };
        use ProgramExpression::*;
        match self {
            Empty | CurrentContext => {}
            Id(p) => push(p, out),
            Union(a, b) | Intersection(a, b) => {
                a.collect_ids(out);
                b.collect_ids(out);
            }
            Restriction(e, r) => {
                e.collect_ids(out);
                push_ref(r, out);
            }
            Encapsulation(e) => e.collect_ids(out),
            ReduceRestrict(e, refs) => {
                e.collect_ids(out);
                refs.iter().for_each(|r| push_ref(r, out));
            }
            ReduceOp(_, es) => es.iter().for_each(|e| e.collect_ids(out)),
        }
    }

    pub fn contains_current_context(&self) -> bool {
        use ProgramExpression::*;
        match self {
            CurrentContext => true,
            Empty | Id(_) => false,
            Union(a, b) | Intersection(a, b) => a.contains_current_context() || b.contains_current_context(),
            Restriction(e, r) => e.contains_current_context() || *r == ProgramRef::CurrentContext,
            Encapsulation(e) => e.contains_current_context(),
            ReduceRestrict(e, refs) => {
                e.contains_current_context() || refs.contains(&ProgramRef::CurrentContext)
            }
            ReduceOp(_, es) => es.iter().any(|e| e.contains_current_context()),
        }
    }

    /// Replaces every `#` by `ctx`. A `#` in a restriction operand must be
    /// replaced by a single program id.
    pub fn insert_current_context(&self, ctx: &ProgramExpression) -> Result<Self, ExprError> {
        use ProgramExpression::*;
        let fix_ref = |r: &ProgramRef| -> Result<ProgramRef, ExprError> {
            match r {
                ProgramRef::Id(p) => Ok(ProgramRef::Id(p.clone())),
                ProgramRef::CurrentContext => match ctx {
                    Id(p) => Ok(ProgramRef::Id(p.clone())),
                    other => Err(ExprError::RestrictionOperand(other.to_string())),
                },
            }
        };
        Ok(match self {
            CurrentContext => ctx.clone(),
            Empty => Empty,
            Id(p) => Id(p.clone()),
            Union(a, b) => Self::union(a.insert_current_context(ctx)?, b.insert_current_context(ctx)?),
            Intersection(a, b) => {
                Self::intersection(a.insert_current_context(ctx)?, b.insert_current_context(ctx)?)
            }
            Restriction(e, r) => Self::restriction(e.insert_current_context(ctx)?, fix_ref(r)?),
            Encapsulation(e) => Self::encapsulation(e.insert_current_context(ctx)?),
            ReduceRestrict(e, refs) => ReduceRestrict(
                Box::new(e.insert_current_context(ctx)?),
                refs.iter().map(fix_ref).collect::<Result<_, _>>()?,
            ),
            ReduceOp(op, es) => {
                ReduceOp(*op, es.iter().map(|e| e.insert_current_context(ctx)).collect::<Result<_, _>>()?)
            }
        })
    }

    /// Number of nodes, counting each restriction operand as one.
    pub fn size(&self) -> usize {
        use ProgramExpression::*;
        match self {
            Empty | CurrentContext | Id(_) => 1,
            Union(a, b) | Intersection(a, b) => 1 + a.size() + b.size(),
            Restriction(e, _) => 2 + e.size(),
            Encapsulation(e) => 1 + e.size(),
            ReduceRestrict(e, refs) => 1 + e.size() + refs.len(),
            ReduceOp(_, es) => 1 + es.iter().map(Self::size).sum::<usize>(),
        }
    }
}

fn ref_from_term(t: &Term) -> Result<ProgramRef, ExprError> {
    if t.as_atom() == Some("#") {
        Ok(ProgramRef::CurrentContext)
    } else if t.has_functor("lw", 2) {
        Ok(ProgramRef::Id(ProgramId::from_term(t)?))
    } else {
        Err(ExprError::RestrictionOperand(t.to_string()))
    }
}

fn ref_to_term(r: &ProgramRef) -> Term {
    match r {
        ProgramRef::Id(p) => p.to_term(),
        ProgramRef::CurrentContext => Term::atom("#"),
    }
}

impl fmt::Display for ProgramExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reader::term;

    fn e(s: &str) -> ProgramExpression {
        ProgramExpression::from_term(&term(s)).unwrap()
    }

    fn id(u: &str) -> ProgramId {
        ProgramId::get(u).unwrap()
    }

    #[test]
    fn expids_examples() {
        let x = e("(lw(get, \"http://h/p\") + lw(get, \"http://h/q\")) / lw(get, \"http://h/r\")");
        let want: BTreeSet<_> = ["http://h/p", "http://h/q", "http://h/r"].iter().map(|u| id(u)).collect();
        assert_eq!(x.expids(), want);
        assert!(e("(#)").expids().is_empty());
        assert!(e("empty").expids().is_empty());
    }

    #[test]
    fn insert_cc_examples() {
        let ctx = e("lw(get, \"http://h/p\")");
        assert_eq!(e("#").insert_current_context(&ctx).unwrap(), ctx);
        let q = e("lw(get, \"http://h/q\") + (#)").insert_current_context(&ctx).unwrap();
        assert_eq!(q, e("lw(get, \"http://h/q\") + lw(get, \"http://h/p\")"));
        let bad = e("lw(get, \"http://h/q\") / (#)").insert_current_context(&e("lw(get, \"http://h/a\") + lw(get, \"http://h/b\")"));
        assert!(matches!(bad, Err(ExprError::RestrictionOperand(_))));
    }

    #[test]
    fn term_roundtrip() {
        for s in [
            "@lw(get, \"http://h/p\") * @lw(get, \"http://h/q\")",
            "(/)<>(lw(get, \"http://h/p\"), [lw(get, \"http://h/q\"), (#)])",
            "(*)<>[@lw(get, \"http://h/p\"), empty]",
        ] {
            let x = e(s);
            assert_eq!(ProgramExpression::from_term(&x.to_term()).unwrap(), x);
            assert_eq!(ProgramExpression::from_term(&term(&x.to_string())).unwrap(), x);
        }
    }

    #[test]
    fn rejects_malformed() {
        assert!(ProgramExpression::from_term(&term("foo")).is_err());
        assert!(ProgramExpression::from_term(&term("(+)<>[]")).is_err());
        assert!(ProgramExpression::from_term(&term("lw(get, \"a\") / (lw(get, \"http://h/b\") + (#))")).is_err());
    }
}
