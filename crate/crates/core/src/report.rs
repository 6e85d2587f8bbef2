//! Pass/fail bookkeeping shared by all verification routines.

use serde::Serialize;

/// One exact check and, on failure, a witness describing where it broke.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
    /// Informational notes that are not pass/fail, such as skipped points.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new() -> Report {
        Report::default()
    }

    pub fn record(&mut self, name: impl Into<String>, passed: bool, witness: impl FnOnce() -> String) {
        let witness = (!passed).then(witness);
        self.checks.push(Check {
            name: name.into(),
            passed,
            witness,
        });
    }

    pub fn pass(&mut self, name: impl Into<String>) {
        self.record(name, true, String::new);
    }

    pub fn fail(&mut self, name: impl Into<String>, witness: impl Into<String>) {
        let w = witness.into();
        self.record(name, false, || w);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// True when every recorded check passed (vacuously true when empty).
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn len(&self) -> usize {
        self.checks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checks.is_empty()
    }

    /// Appends the checks of `other`, prefixing their names.
    pub fn absorb(&mut self, prefix: &str, other: Report) {
        for mut c in other.checks {
            c.name = format!("{prefix}{}", c.name);
            self.checks.push(c);
        }
        self.notes.extend(other.notes.into_iter().map(|n| format!("{prefix}{n}")));
    }

    /// First failure as a one-line summary.
    pub fn first_failure(&self) -> Option<String> {
        self.failures().next().map(|c| match &c.witness {
            Some(w) => format!("{}: {w}", c.name),
            None => c.name.clone(),
        })
    }
}
