//! On-disk program store shared between command-line invocations.
//!
//! One file per program, named by a hash of the id:
//!
//! ```text
//! % program lw(get, "http://host/page.html")
//! % policy lw(get, "file:///policies/default.html")
//! clause.
//! ...
//! ```
//!
//! Policy programs are never cached; they are fetched afresh by each session.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::engine::Session;
use crate::program::{parse_clauses, ClauseError, IdError, LWProgram, ProgramId};
use crate::security::PolicyError;

const EXTENSION: &str = "lwp";

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache I/O: {0}")]
    Io(#[from] io::Error),
    #[error("{file}: {message}")]
    Format { file: String, message: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CacheEntry {
    pub program: LWProgram,
    pub policy: Option<ProgramId>,
}

#[derive(Clone, Debug)]
pub struct DiskCache {
    dir: PathBuf,
}

impl DiskCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        DiskCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn file_for(&self, id: &ProgramId) -> PathBuf {
        let digest = Sha256::digest(id.to_string().as_bytes());
        let name: String = digest[..12].iter().map(|b| format!("{:02x}", b)).collect();
        self.dir.join(format!("{}.{}", name, EXTENSION))
    }

    /// Writes every non-policy program of the session. Returns the count.
    pub fn save(&self, session: &Session) -> Result<usize, CacheError> {
        fs::create_dir_all(&self.dir)?;
        let store = session.store();
        let reg = session.registry();
        let mut n = 0;
        for p in store.iter() {
            if reg.is_policy(&p.id) {
                continue;
            }
            let policy = reg.assignment(&p.id).map(|x| x.to_string()).unwrap_or_else(|| "none".into());
            let text = format!("% program {}\n% policy {}\n{}", p.id, policy, p.to_text());
            fs::write(self.file_for(&p.id), text)?;
            n += 1;
        }
        Ok(n)
    }

    /// Every cached program, sorted by id.
    pub fn entries(&self) -> Result<Vec<CacheEntry>, CacheError> {
        if !self.dir.exists() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some(EXTENSION) {
                continue;
            }
            out.push(read_entry(&path)?);
        }
        out.sort_by(|a, b| a.program.id.cmp(&b.program.id));
        Ok(out)
    }

    /// Restores the cached programs and their assignments into a session.
    pub fn load(&self, session: &Session) -> Result<usize, CacheError> {
        let entries = self.entries()?;
        let n = entries.len();
        for e in entries {
            let file = self.file_for(&e.program.id).display().to_string();
            session
                .restore(e.program, e.policy)
                .map_err(|err: PolicyError| CacheError::Format { file, message: err.to_string() })?;
        }
        Ok(n)
    }

    /// Removes every cached program. Returns the count.
    pub fn clear(&self) -> Result<usize, CacheError> {
        if !self.dir.exists() {
            return Ok(0);
        }
        let mut n = 0;
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) == Some(EXTENSION) {
                fs::remove_file(path)?;
                n += 1;
            }
        }
        Ok(n)
    }
}

fn read_entry(path: &Path) -> Result<CacheEntry, CacheError> {
    let file = path.display().to_string();
    let bad = |message: String| CacheError::Format { file: file.clone(), message };
    let text = fs::read_to_string(path)?;
    let mut lines = text.splitn(3, '\n');
    let id_line = lines.next().unwrap_or_default();
    let policy_line = lines.next().unwrap_or_default();
    let body = lines.next().unwrap_or_default();
    let id = id_line.strip_prefix("% program ").ok_or_else(|| bad("missing program header".into()))?;
    let id = ProgramId::parse(id).map_err(|e: IdError| bad(e.to_string()))?;
    let policy = match policy_line.strip_prefix("% policy ").ok_or_else(|| bad("missing policy header".into()))? {
        "none" => None,
        p => Some(ProgramId::parse(p).map_err(|e: IdError| bad(e.to_string()))?),
    };
    let clauses = parse_clauses(body).map_err(|e: ClauseError| bad(e.to_string()))?;
    Ok(CacheEntry { program: LWProgram::new(id, clauses), policy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::security::PolicyRegistry;

    #[test]
    fn save_load_clear() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DiskCache::new(dir.path());
        let pol = ProgramId::get("file:///policies/d.html").unwrap();
        let s = Session::builder(PolicyRegistry::new(pol.clone())).build();
        let id = ProgramId::get("http://h.test/a.html").unwrap();
        s.install(LWProgram::new(id.clone(), parse_clauses("p(\"a b\", 'X y'). q(X) :- p(X, _).").unwrap()));
        s.install(LWProgram::new(pol.clone(), parse_clauses("valid_program(_, _).").unwrap()));
        assert_eq!(cache.save(&s).unwrap(), 1);

        let t = Session::builder(PolicyRegistry::new(pol.clone())).build();
        assert_eq!(cache.load(&t).unwrap(), 1);
        let (a, b) = (t.store().get(&id).unwrap(), s.store().get(&id).unwrap());
        assert_eq!(a.clauses.len(), b.clauses.len());
        for (x, y) in a.clauses.iter().zip(&b.clauses) {
            assert!(crate::subst::variant(&x.to_term(), &y.to_term()), "{} vs {}", x.to_term(), y.to_term());
        }
        assert_eq!(t.registry().assignment(&id), Some(&pol));
        assert_eq!(t.guard_state().program_count, 0);
        assert_eq!(cache.clear().unwrap(), 1);
        assert!(cache.entries().unwrap().is_empty());
    }
}
