//! Persistent domain entities.

mod roster;
mod rubric;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use roster::{
    Assignment, AttendanceRecord, AttendanceStatus, Class, Course, Note, PasswordDigest, RosterError,
    Student, User,
};
pub use rubric::{builtin_rubrics, rubric_max_score, Criterion, PerformanceLevel, Rubric, RubricDraft, RubricError};

/// Opaque entity identifier.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Id(String);

impl Id {
    /// A fresh random identifier.
    pub fn generate() -> Id {
        Id(uuid::Uuid::new_v4().simple().to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Id {
    fn from(value: &str) -> Self {
        Id(value.to_string())
    }
}

impl From<String> for Id {
    fn from(value: String) -> Self {
        Id(value)
    }
}

impl AsRef<str> for Id {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Id({})", self.0)
    }
}
