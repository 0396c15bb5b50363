//! Policy registry: which policy governs which program.
//!
//! Policy programs (the set Φ) are exactly the ids appearing as a value of
//! the signer map, the trusted-prefix list or the program map, plus any
//! policy registered explicitly. Assignments live here and never inside a
//! downloaded program.

use std::collections::{BTreeMap, BTreeSet};

use crate::program::{IdError, ProgramId};
use crate::signature::{authenticate, is_signed, KeyStore, SignerId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("{0} is a policy program and has no policy")]
    IsPolicy(ProgramId),
    #[error("{0} has no policy assignment")]
    Unassigned(ProgramId),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("registry config line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyRegistry {
    signer_to_policy: BTreeMap<SignerId, ProgramId>,
    program_to_policy: BTreeMap<ProgramId, ProgramId>,
    trusted: Vec<(String, ProgramId)>,
    extra: BTreeSet<ProgramId>,
    trusted_assignment: bool,
}

impl PolicyRegistry {
    /// A registry whose `unknown` signer maps to `default_policy`.
    pub fn new(default_policy: ProgramId) -> Self {
        let mut signer_to_policy = BTreeMap::new();
        signer_to_policy.insert(SignerId::unknown(), default_policy);
        PolicyRegistry {
            signer_to_policy,
            program_to_policy: BTreeMap::new(),
            trusted: Vec::new(),
            extra: BTreeSet::new(),
            trusted_assignment: false,
        }
    }

    pub fn default_policy(&self) -> &ProgramId {
        &self.signer_to_policy[&SignerId::unknown()]
    }

    /// Mapping `unknown` replaces the default policy.
    pub fn with_signer(mut self, signer: SignerId, policy: ProgramId) -> Self {
        self.signer_to_policy.insert(signer, policy);
        self
    }

    pub fn add_trusted(&mut self, prefix: &str, policy: ProgramId) {
        self.trusted.push((prefix.to_string(), policy));
    }

    /// Adds a policy program that no mapping refers to.
    pub fn register_policy(&mut self, policy: ProgramId) {
        self.extra.insert(policy);
    }

    /// Enables URL-prefix assignment ahead of signature checks.
    pub fn set_trusted_assignment(&mut self, on: bool) {
        self.trusted_assignment = on;
    }

    pub fn trusted_assignment(&self) -> bool {
        self.trusted_assignment
    }

    pub fn signer_policy(&self, signer: &SignerId) -> Option<&ProgramId> {
        self.signer_to_policy.get(signer)
    }

    /// Φ.
    pub fn policy_ids(&self) -> BTreeSet<ProgramId> {
        self.signer_to_policy
            .values()
            .chain(self.trusted.iter().map(|(_, p)| p))
            .chain(self.program_to_policy.values())
            .chain(self.extra.iter())
            .cloned()
            .collect()
    }

    pub fn is_policy(&self, id: &ProgramId) -> bool {
        self.signer_to_policy.values().any(|p| p == id)
            || self.trusted.iter().any(|(_, p)| p == id)
            || self.program_to_policy.values().any(|p| p == id)
            || self.extra.contains(id)
    }

    pub fn pol(&self, id: &ProgramId) -> Result<ProgramId, PolicyError> {
        if self.is_policy(id) {
            return Err(PolicyError::IsPolicy(id.clone()));
        }
        self.program_to_policy.get(id).cloned().ok_or_else(|| PolicyError::Unassigned(id.clone()))
    }

    pub fn pols<'a>(&self, ids: impl IntoIterator<Item = &'a ProgramId>) -> Result<BTreeSet<ProgramId>, PolicyError> {
        ids.into_iter().map(|i| self.pol(i)).collect()
    }

    pub fn assignment(&self, id: &ProgramId) -> Option<&ProgramId> {
        self.program_to_policy.get(id)
    }

    pub fn assignments(&self) -> impl Iterator<Item = (&ProgramId, &ProgramId)> {
        self.program_to_policy.iter()
    }

    /// Policy for a newly created program with the given URL and raw contents.
    pub fn determine_policy_id(&self, url: &str, contents: Option<&str>, keys: &KeyStore) -> ProgramId {
        if self.trusted_assignment {
            if let Some((_, p)) = self.trusted.iter().find(|(prefix, _)| url.starts_with(prefix.as_str())) {
                return p.clone();
            }
        }
        let signer = match contents {
            Some(c) if is_signed(url) => authenticate(c, keys),
            _ => SignerId::unknown(),
        };
        self.signer_to_policy.get(&signer).unwrap_or_else(|| self.default_policy()).clone()
    }

    /// Records a policy for a just-created program. Policy programs and
    /// programs already assigned are left alone. Returns the recorded policy.
    pub fn assign_policy(&mut self, id: &ProgramId, contents: Option<&str>, keys: &KeyStore) -> Option<ProgramId> {
        if self.is_policy(id) || self.program_to_policy.contains_key(id) {
            return None;
        }
        let p = self.determine_policy_id(id.url(), contents, keys);
        self.program_to_policy.insert(id.clone(), p.clone());
        Some(p)
    }

    /// Restores a persisted assignment.
    pub fn restore_assignment(&mut self, id: ProgramId, policy: ProgramId) -> Result<(), PolicyError> {
        if self.is_policy(&id) {
            return Err(PolicyError::IsPolicy(id));
        }
        self.program_to_policy.entry(id).or_insert(policy);
        Ok(())
    }

    pub fn clear_assignments(&mut self) {
        self.program_to_policy.clear()
    }

    /// Parses the line-oriented config:
    ///
    /// ```text
    /// default <policy-url>
    /// signer <id-string> <policy-url>
    /// trusted <url-prefix> <policy-url>
    /// trusted-assignment on|off
    /// ```
    ///
    /// The policy URL is the last field; a signer id may contain spaces or be
    /// double-quoted. Policy URLs denote `lw(get, URL)`. `#` starts a comment.
    pub fn from_config(text: &str) -> Result<Self, ConfigError> {
        let mut default = None;
        let mut signers = Vec::new();
        let mut trusted = Vec::new();
        let mut trusted_on = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| ConfigError { line: i + 1, message: m };
            let policy = |u: &str| ProgramId::get(u).map_err(|e: IdError| err(e.to_string()));
            let (kw, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match kw {
                "default" => default = Some(policy(rest)?),
                "signer" | "trusted" => {
                    let (head, url) =
                        rest.rsplit_once(char::is_whitespace).ok_or_else(|| err(format!("`{}` needs two fields", kw)))?;
                    let head = head.trim().trim_matches('"').to_string();
                    if kw == "signer" {
                        signers.push((SignerId::new(&head), policy(url)?));
                    } else {
                        trusted.push((head, policy(url)?));
                    }
                }
                "trusted-assignment" => {
                    trusted_on = match rest {
                        "on" | "true" | "yes" => true,
                        "off" | "false" | "no" => false,
                        _ => return Err(err(format!("expected on/off, got {:?}", rest))),
                    }
                }
                _ => return Err(err(format!("unknown directive {:?}", kw))),
            }
        }
        let default = default
            .or_else(|| signers.iter().find(|(s, _)| s.is_unknown()).map(|(_, p)| p.clone()))
            .ok_or(ConfigError { line: 0, message: "no default policy".into() })?;
        let mut reg = PolicyRegistry::new(default);
        for (s, p) in signers {
            reg = reg.with_signer(s, p);
        }
        for (prefix, p) in trusted {
            reg.add_trusted(&prefix, p);
        }
        reg.set_trusted_assignment(trusted_on);
        Ok(reg)
    }
}
