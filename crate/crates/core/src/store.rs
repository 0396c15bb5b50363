//! In-memory program store. Keys are unique and programs are shared
//! immutably; mutation replaces the stored program.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::program::{Clause, LWProgram, ProgramId};
use crate::subst::Bindings;
use crate::term::Term;

#[derive(Clone, Debug, Default)]
pub struct ProgramStore {
    programs: BTreeMap<ProgramId, Arc<LWProgram>>,
}

impl ProgramStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: &ProgramId) -> Option<Arc<LWProgram>> {
        self.programs.get(id).cloned()
    }

    pub fn contains(&self, id: &ProgramId) -> bool {
        self.programs.contains_key(id)
    }

    /// Installs `program` unless its id is present. Returns whether it was new.
    pub fn insert(&mut self, program: LWProgram) -> bool {
        if self.programs.contains_key(&program.id) {
            return false;
        }
        self.programs.insert(program.id.clone(), Arc::new(program));
        true
    }

    /// Installs or replaces.
    pub fn put(&mut self, program: LWProgram) {
        self.programs.insert(program.id.clone(), Arc::new(program));
    }

    pub fn remove(&mut self, id: &ProgramId) -> bool {
        self.programs.remove(id).is_some()
    }

    pub fn clear(&mut self) {
        self.programs.clear()
    }

    pub fn len(&self) -> usize {
        self.programs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.programs.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &ProgramId> {
        self.programs.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<LWProgram>> {
        self.programs.values()
    }

    pub fn defines(&self, id: &ProgramId, name: &str, arity: usize) -> bool {
        self.programs.get(id).is_some_and(|p| p.defines(name, arity))
    }

    /// Adds a clause at the front or the back of a stored program.
    pub fn add_clause(&mut self, id: &ProgramId, clause: Clause, front: bool) -> bool {
        let Some(p) = self.programs.get_mut(id) else { return false };
        let p = Arc::make_mut(p);
        if front {
            p.clauses.insert(0, clause);
        } else {
            p.clauses.push(clause);
        }
        true
    }

    /// Removes the first clause unifying with `pattern` and returns the
    /// clause term it matched (fresh variables).
    pub fn retract(&mut self, id: &ProgramId, pattern: &Term, occurs_check: bool) -> Option<Term> {
        let p = self.programs.get_mut(id)?;
        let idx = p.clauses.iter().position(|c| {
            let mut b = Bindings::new();
            b.unify(&c.renamed().to_term(), pattern, occurs_check)
        })?;
        let p = Arc::make_mut(p);
        Some(p.clauses.remove(idx).renamed().to_term())
    }
}
