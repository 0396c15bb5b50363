//! Term printer. Output reads back to an equal term up to variable identity.

use crate::ops::{self, OpKind};
use crate::term::{Number, Term, CONS};

pub fn to_text(t: &Term) -> String {
    let mut out = String::new();
    write_term(t, 1200, &mut out);
    out
}

const SYMBOL_CHARS: &str = "+-*/\\^<>=~:.?@#&$";

fn is_solo(s: &str) -> bool {
    matches!(s, "[]" | "!" | ";" | "{}" | ",")
}

/// Writes `s` as an atom, quoting when it would not read back as itself.
pub fn quote_atom(s: &str) -> String {
    let plain = {
        let mut cs = s.chars();
        match cs.next() {
            Some(c) if c.is_ascii_lowercase() => cs.all(|c| c.is_ascii_alphanumeric() || c == '_'),
            Some(_) => s.chars().all(|c| SYMBOL_CHARS.contains(c)) && s != "." && !s.starts_with("/*"),
            None => false,
        }
    };
    if (plain && s != ",") || is_solo(s) && s != "," {
        s.to_string()
    } else {
        let mut out = String::from("'");
        escape_into(s, '\'', &mut out);
        out.push('\'');
        out
    }
}

fn escape_into(s: &str, quote: char, out: &mut String) {
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c == quote => {
                out.push('\\');
                out.push(c)
            }
            c => out.push(c),
        }
    }
}

fn write_number(n: Number, out: &mut String) {
    match n {
        Number::Int(i) => out.push_str(&i.to_string()),
        Number::Float(f) => {
            if f.is_finite() && f.fract() == 0.0 && f.abs() < 1e15 {
                out.push_str(&format!("{:.1}", f))
            } else {
                out.push_str(&format!("{:?}", f))
            }
        }
    }
}

fn write_operand_atom(name: &str, out: &mut String) {
    if ops::is_op(name) {
        out.push('(');
        out.push_str(&quote_atom(name));
        out.push(')');
    } else {
        out.push_str(&quote_atom(name));
    }
}

fn write_term(t: &Term, max: u16, out: &mut String) {
    match t {
        Term::Var(v) => out.push_str(&v.to_string()),
        Term::Number(n) => {
            let neg = n.as_f64() < 0.0;
            if neg && max < 200 {
                out.push('(');
                write_number(*n, out);
                out.push(')');
            } else {
                write_number(*n, out)
            }
        }
        Term::Str(s) => {
            out.push('"');
            escape_into(s, '"', out);
            out.push('"');
        }
        Term::Atom(a) => {
            if max < 1200 && ops::is_op(a.as_str()) {
                write_operand_atom(a.as_str(), out)
            } else {
                out.push_str(&quote_atom(a.as_str()))
            }
        }
        Term::Compound(c) => {
            let name = c.functor.as_str();
            if name == CONS && c.args.len() == 2 {
                write_list(t, out);
                return;
            }
            if name == "{}" && c.args.len() == 1 {
                out.push('{');
                write_term(&c.args[0], 1200, out);
                out.push('}');
                return;
            }
            if c.args.len() == 2 {
                if let Some(op) = ops::infix(name) {
                    let (lp, rp) = op.arg_priorities();
                    let paren = op.priority > max;
                    if paren {
                        out.push('(');
                    }
                    let mut left = String::new();
                    write_term(&c.args[0], lp, &mut left);
                    let mut right = String::new();
                    write_term(&c.args[1], rp, &mut right);
                    let symbolic = |ch: Option<char>| ch.is_some_and(|ch| SYMBOL_CHARS.contains(ch));
                    out.push_str(&left);
                    match name {
                        "," => out.push_str(", "),
                        ":" if !symbolic(left.chars().last()) && !symbolic(right.chars().next()) => out.push(':'),
                        _ => {
                            out.push(' ');
                            out.push_str(&quote_atom(name));
                            out.push(' ');
                        }
                    }
                    out.push_str(&right);
                    if paren {
                        out.push(')');
                    }
                    return;
                }
            }
            if c.args.len() == 1 {
                if let Some(op) = ops::prefix(name) {
                    let arg = &c.args[0];
                    let numeric_arg = matches!(arg, Term::Number(_));
                    let operator_arg = matches!(arg, Term::Atom(a) if ops::is_op(a.as_str()));
                    // `- +(a)` would read as an infix `+` applied to `-` and `(a)`.
                    let operator_functor_arg = matches!(arg, Term::Compound(a) if ops::is_op(a.functor.as_str()));
                    if !numeric_arg && !operator_arg && !operator_functor_arg {
                        let (_, ap) = op.arg_priorities();
                        let paren = op.priority > max;
                        if paren {
                            out.push('(');
                        }
                        out.push_str(&quote_atom(name));
                        let alpha = name.chars().next().is_some_and(|ch| ch.is_alphabetic());
                        let arg_text = {
                            let mut s = String::new();
                            write_term(arg, ap, &mut s);
                            s
                        };
                        let glue_risk = arg_text.starts_with(|ch: char| SYMBOL_CHARS.contains(ch) || ch == '(');
                        if alpha || glue_risk || op.kind == OpKind::Fx {
                            out.push(' ');
                        }
                        out.push_str(&arg_text);
                        if paren {
                            out.push(')');
                        }
                        return;
                    }
                }
            }
            out.push_str(&quote_atom(name));
            out.push('(');
            for (i, a) in c.args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_term(a, 999, out);
            }
            out.push(')');
        }
    }
}

fn write_list(t: &Term, out: &mut String) {
    out.push('[');
    let mut cur = t;
    let mut first = true;
    loop {
        if cur.has_functor(CONS, 2) {
            if !first {
                out.push_str(", ");
            }
            first = false;
            write_term(&cur.args()[0], 999, out);
            cur = &cur.args()[1];
        } else if cur.is_nil() {
            break;
        } else {
            out.push('|');
            write_term(cur, 999, out);
            break;
        }
    }
    out.push(']');
}
