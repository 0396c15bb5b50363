//! Page-to-program translation.
//!
//! A GET or POST page becomes, in order: `about/2` per header, `actual_url/1`,
//! `my_id/2`, `h_text/1`, `link/2` per anchor, then the embedded clauses.
//! HTML handling is tag-level scanning; only anchors and `LW_CODE` matter.

use crate::program::{parse_clauses, Clause, LWProgram, Method, ProgramId};
use crate::term::Term;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HttpResponse {
    pub requested_url: String,
    pub final_url: String,
    pub status: u16,
    pub headers: Vec<(String, String)>,
    /// Absent for HEAD responses.
    pub body: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TranslateError {
    #[error("unbalanced LW_CODE tag at offset {0}")]
    Unbalanced(usize),
    #[error("response has no body")]
    NoBody,
    #[error("invalid program id: {0}")]
    Id(String),
}

/// A translated page plus any problems that were tolerated.
#[derive(Clone, Debug, PartialEq)]
pub struct Translation {
    pub program: LWProgram,
    pub warnings: Vec<String>,
}

const OPEN: &str = "<lw_code>";
const CLOSE: &str = "</lw_code>";

fn find_ci(hay: &str, needle: &str, from: usize) -> Option<usize> {
    let h = hay.as_bytes();
    let n = needle.as_bytes();
    if n.len() > h.len() {
        return None;
    }
    (from..=h.len() - n.len()).find(|&i| h[i..i + n.len()].eq_ignore_ascii_case(n))
}

fn strip_wrapper<'a>(s: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let t = s.trim();
    let head = t.get(..open.len())?;
    let tail = t.get(t.len().checked_sub(close.len())?..)?;
    if t.len() >= open.len() + close.len() && head.eq_ignore_ascii_case(open) && tail.eq_ignore_ascii_case(close) {
        Some(&t[open.len()..t.len() - close.len()])
    } else {
        None
    }
}

fn unwrap_block(mut s: &str) -> &str {
    loop {
        if let Some(inner) = strip_wrapper(s, "<!--", "-->") {
            s = inner;
        } else if let Some(inner) = strip_wrapper(s, "<pre>", "</pre>") {
            s = inner;
        } else {
            return s;
        }
    }
}

/// Splits out every `<LW_CODE>` block. Returns the concatenated clause text
/// and the page without the blocks (tags included).
pub fn extract_lw_code(html: &str) -> Result<(String, String), TranslateError> {
    let mut code = String::new();
    let mut stripped = String::new();
    let mut pos = 0;
    loop {
        let next_open = find_ci(html, OPEN, pos);
        let next_close = find_ci(html, CLOSE, pos);
        match (next_open, next_close) {
            (None, None) => break,
            (None, Some(c)) => return Err(TranslateError::Unbalanced(c)),
            (Some(o), close) => {
                let Some(c) = close else { return Err(TranslateError::Unbalanced(o)) };
                if c < o {
                    return Err(TranslateError::Unbalanced(c));
                }
                if let Some(o2) = find_ci(html, OPEN, o + OPEN.len()) {
                    if o2 < c {
                        return Err(TranslateError::Unbalanced(o2));
                    }
                }
                stripped.push_str(&html[pos..o]);
                let inner = unwrap_block(&html[o + OPEN.len()..c]);
                if !code.is_empty() && !code.ends_with('\n') {
                    code.push('\n');
                }
                code.push_str(inner.trim_matches('\n'));
                code.push('\n');
                pos = c + CLOSE.len();
            }
        }
    }
    stripped.push_str(&html[pos..]);
    Ok((code.trim_end_matches('\n').to_string() + if code.is_empty() { "" } else { "\n" }, stripped))
}

/// Removes only the tags, keeping block contents as text. Used when the
/// blocks are malformed.
fn remove_tags(html: &str) -> String {
    let mut out = String::new();
    let mut pos = 0;
    loop {
        let o = find_ci(html, OPEN, pos).map(|i| (i, OPEN.len()));
        let c = find_ci(html, CLOSE, pos).map(|i| (i, CLOSE.len()));
        let next = match (o, c) {
            (Some(a), Some(b)) => Some(if a.0 < b.0 { a } else { b }),
            (a, b) => a.or(b),
        };
        match next {
            Some((i, len)) => {
                out.push_str(&html[pos..i]);
                pos = i + len;
            }
            None => break,
        }
    }
    out.push_str(&html[pos..]);
    out
}

fn decode_entities(s: &str) -> String {
    let mut out = String::new();
    let mut rest = s;
    while let Some(i) = rest.find('&') {
        out.push_str(&rest[..i]);
        rest = &rest[i..];
        let end = rest.find(';').filter(|&e| e <= 10);
        let decoded = end.and_then(|e| {
            let ent = &rest[1..e];
            let c = match ent {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some(' '),
                _ => ent
                    .strip_prefix("#x")
                    .or_else(|| ent.strip_prefix("#X"))
                    .and_then(|h| u32::from_str_radix(h, 16).ok())
                    .or_else(|| ent.strip_prefix('#').and_then(|d| d.parse().ok()))
                    .and_then(char::from_u32),
            };
            c.map(|c| (c, e))
        });
        match decoded {
            Some((c, e)) => {
                out.push(c);
                rest = &rest[e + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn strip_markup(s: &str) -> String {
    let mut out = String::new();
    let mut in_tag = false;
    for c in s.chars() {
        match c {
            '<' => in_tag = true,
            '>' if in_tag => in_tag = false,
            c if !in_tag => out.push(c),
            _ => {}
        }
    }
    out
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn href_of(tag: &str) -> Option<String> {
    let lower = tag.to_ascii_lowercase();
    let mut from = 0;
    while let Some(i) = lower[from..].find("href") {
        let at = from + i;
        from = at + 4;
        let before_ok = at == 0 || lower.as_bytes()[at - 1].is_ascii_whitespace();
        let rest = tag[at + 4..].trim_start();
        let Some(rest) = rest.strip_prefix('=') else { continue };
        if !before_ok {
            continue;
        }
        let rest = rest.trim_start();
        let value = match rest.chars().next()? {
            q @ ('"' | '\'') => {
                let end = rest[1..].find(q)?;
                &rest[1..1 + end]
            }
            _ => rest.split(|c: char| c.is_whitespace() || c == '>').next()?,
        };
        return Some(decode_entities(value.trim()));
    }
    None
}

/// Anchors in document order as `(label, href)`. Labels have markup removed,
/// entities decoded and whitespace collapsed. Malformed anchors are skipped.
pub fn extract_links(html: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut pos = 0;
    while let Some(i) = find_ci(html, "<a", pos) {
        pos = i + 2;
        let after = html.as_bytes().get(i + 2).copied();
        if !matches!(after, Some(b) if b.is_ascii_whitespace()) {
            continue;
        }
        let Some(tag_end) = html[i..].find('>').map(|e| i + e) else { break };
        let tag = &html[i + 2..tag_end];
        let Some(close) = find_ci(html, "</a>", tag_end) else { break };
        pos = close + 4;
        if let Some(href) = href_of(tag) {
            let label = collapse_ws(&decode_entities(&strip_markup(&html[tag_end + 1..close])));
            out.push((label, href));
        }
    }
    out
}

fn resolve_href(base: &str, href: &str) -> String {
    url::Url::parse(base).and_then(|b| b.join(href)).map(|u| u.to_string()).unwrap_or_else(|_| href.to_string())
}

fn meta_facts(r: &HttpResponse) -> Vec<Clause> {
    let mut out: Vec<Clause> = r
        .headers
        .iter()
        .map(|(k, v)| Clause::fact(Term::compound("about", vec![Term::string(&k.to_ascii_lowercase()), Term::string(v)])))
        .collect();
    out.push(Clause::fact(Term::compound("actual_url", vec![Term::string(&r.final_url)])));
    out
}

/// `about/2` per header and `actual_url/1`, under `lw(head, requested_url)`.
pub fn translate_head(r: &HttpResponse) -> Result<LWProgram, TranslateError> {
    let id = ProgramId::new(Method::Head, &r.requested_url).map_err(|e| TranslateError::Id(e.to_string()))?;
    Ok(LWProgram { id, clauses: meta_facts(r), final_url: Some(r.final_url.clone()) })
}

/// Translates a GET or POST response. Malformed embedded code never aborts
/// translation: the clause block is dropped and a warning recorded.
pub fn translate_page(r: &HttpResponse, method: &Method) -> Result<Translation, TranslateError> {
    let body = r.body.as_deref().ok_or(TranslateError::NoBody)?;
    let id = ProgramId::new(method.clone(), &r.requested_url).map_err(|e| TranslateError::Id(e.to_string()))?;
    let mut warnings = Vec::new();
    let (code, text) = match extract_lw_code(body) {
        Ok(pair) => pair,
        Err(e) => {
            warnings.push(format!("{}: {}", r.requested_url, e));
            (String::new(), remove_tags(body))
        }
    };
    let mut clauses = meta_facts(r);
    clauses.push(Clause::fact(Term::compound("my_id", vec![method.to_term(), Term::string(&r.requested_url)])));
    clauses.push(Clause::fact(Term::compound("h_text", vec![Term::string(&text)])));
    for (label, href) in extract_links(&text) {
        let url = resolve_href(&r.final_url, &href);
        clauses.push(Clause::fact(Term::compound("link", vec![Term::string(&label), Term::string(&url)])));
    }
    if !code.trim().is_empty() {
        match parse_clauses(&code) {
            Ok(cs) => clauses.extend(cs),
            Err(e) => warnings.push(format!("{}: embedded clauses dropped: {}", r.requested_url, e)),
        }
    }
    Ok(Translation { program: LWProgram { id, clauses, final_url: Some(r.final_url.clone()) }, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resp(body: &str) -> HttpResponse {
        HttpResponse {
            requested_url: "http://h.test/a/".into(),
            final_url: "http://h.test/a/".into(),
            status: 200,
            headers: vec![("Content-Type".into(), "text/html".into())],
            body: Some(body.into()),
        }
    }

    #[test]
    fn no_tags_is_identity() {
        assert_eq!(extract_lw_code("<p>x</p>").unwrap(), (String::new(), "<p>x</p>".to_string()));
    }

    #[test]
    fn two_blocks_concatenate() {
        let (code, html) = extract_lw_code("a<LW_CODE>p(1).</LW_CODE>b<lw_code><PRE>p(2).</PRE></lw_code>c").unwrap();
        assert_eq!(parse_clauses(&code).unwrap().len(), 2);
        assert_eq!(html, "abc");
    }

    #[test]
    fn unbalanced_names_offset() {
        assert_eq!(extract_lw_code("xx<LW_CODE>p."), Err(TranslateError::Unbalanced(2)));
        assert_eq!(extract_lw_code("</LW_CODE>"), Err(TranslateError::Unbalanced(0)));
        assert_eq!(extract_lw_code("<LW_CODE><LW_CODE></LW_CODE>"), Err(TranslateError::Unbalanced(9)));
    }

    #[test]
    fn links_strip_nested_markup() {
        let l = extract_links("<A HREF=\"u1\"><b>Bold</b>  text</A> <a href='u2'>x &amp; y</a> <a name=z>no</a>");
        assert_eq!(l, vec![("Bold text".to_string(), "u1".to_string()), ("x & y".to_string(), "u2".to_string())]);
        assert!(extract_links("").is_empty());
    }

    #[test]
    fn relative_links_resolve_against_final_url() {
        let t = translate_page(&resp("<a href=\"b.html\">B</a>"), &Method::Get).unwrap();
        let link = t.program.clauses.iter().find(|c| c.head.has_functor("link", 2)).unwrap();
        assert_eq!(link.head.args()[1], Term::string("http://h.test/a/b.html"));
    }

    #[test]
    fn bad_code_keeps_facts() {
        let t = translate_page(&resp("x<LW_CODE>p(</LW_CODE>"), &Method::Get).unwrap();
        assert_eq!(t.program.clauses.len(), 4);
        assert_eq!(t.warnings.len(), 1);
        let t = translate_page(&resp("x<LW_CODE>p."), &Method::Get).unwrap();
        assert_eq!(t.program.clauses.len(), 4);
        assert!(!t.program.clauses[3].head.args()[0].as_str().unwrap().to_ascii_lowercase().contains("<lw_code>"));
    }

    #[test]
    fn head_translation() {
        let mut r = resp("");
        r.body = None;
        r.final_url = "http://h.test/moved".into();
        let p = translate_head(&r).unwrap();
        assert_eq!(p.id.method(), &Method::Head);
        assert_eq!(p.id.url(), "http://h.test/a/");
        assert_eq!(p.clauses[1].head, Term::compound("actual_url", vec![Term::string("http://h.test/moved")]));
    }
}
