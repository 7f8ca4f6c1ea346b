use std::collections::{BTreeMap, HashSet};
use std::fmt;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Id, Rubric};
use crate::score::Score;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RosterError {
    #[error("student {0} appears more than once on the roster")]
    DuplicateStudent(Id),
    #[error("student {0} is not enrolled in this class")]
    StudentNotEnrolled(Id),
    #[error("threshold {threshold} must lie between 0 and the rubric maximum {max}")]
    ThresholdOutOfRange { threshold: Score, max: Score },
    #[error("assignment uses rubric {expected}, not {found}")]
    RubricMismatch { expected: Id, found: Id },
    #[error("note title must not be empty")]
    EmptyTitle,
}

/// Stored password hash in PHC string form. Never printed.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct PasswordDigest(pub String);

impl fmt::Debug for PasswordDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PasswordDigest(..)")
    }
}

/// A grader account.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    pub id: Id,
    pub email: String,
    pub display_name: String,
    #[serde(skip)]
    pub credential: PasswordDigest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Student {
    pub id: Id,
    pub name: String,
    #[serde(default)]
    pub email: Option<String>,
}

impl Student {
    pub fn new(name: impl Into<String>, email: Option<String>) -> Student {
        let email = email.map(|e| e.trim().to_string()).filter(|e| !e.is_empty());
        Student { id: Id::generate(), name: name.into(), email }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Class {
    pub id: Id,
    pub owner_id: Id,
    pub name: String,
    /// Roster in enrolment order.
    pub student_ids: Vec<Id>,
}

impl Class {
    pub fn new(owner_id: Id, name: impl Into<String>, student_ids: Vec<Id>) -> Result<Class, RosterError> {
        let class = Class { id: Id::generate(), owner_id, name: name.into(), student_ids };
        class.validate()?;
        Ok(class)
    }

    pub fn validate(&self) -> Result<(), RosterError> {
        let mut seen = HashSet::new();
        for id in &self.student_ids {
            if !seen.insert(id) {
                return Err(RosterError::DuplicateStudent(id.clone()));
            }
        }
        Ok(())
    }

    pub fn is_enrolled(&self, student_id: &Id) -> bool {
        self.student_ids.contains(student_id)
    }

    pub fn require_enrolled(&self, student_id: &Id) -> Result<(), RosterError> {
        if self.is_enrolled(student_id) {
            Ok(())
        } else {
            Err(RosterError::StudentNotEnrolled(student_id.clone()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Course {
    pub id: Id,
    pub class_id: Id,
    pub name: String,
}

impl Course {
    pub fn new(class_id: Id, name: impl Into<String>) -> Course {
        Course { id: Id::generate(), class_id, name: name.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub id: Id,
    pub course_id: Id,
    pub name: String,
    pub rubric_id: Id,
    /// Cut-off for the threshold chart, in score units.
    #[serde(default)]
    pub threshold: Option<Score>,
}

impl Assignment {
    pub fn new(
        course_id: Id,
        name: impl Into<String>,
        rubric: &Rubric,
        threshold: Option<Score>,
    ) -> Result<Assignment, RosterError> {
        let assignment =
            Assignment { id: Id::generate(), course_id, name: name.into(), rubric_id: rubric.id().clone(), threshold };
        assignment.validate(rubric)?;
        Ok(assignment)
    }

    /// Checks the rubric link and `0 <= threshold <= rubric max`.
    pub fn validate(&self, rubric: &Rubric) -> Result<(), RosterError> {
        if &self.rubric_id != rubric.id() {
            return Err(RosterError::RubricMismatch { expected: self.rubric_id.clone(), found: rubric.id().clone() });
        }
        if let Some(threshold) = self.threshold {
            let max = rubric.max_score();
            if threshold.is_negative() || threshold > max {
                return Err(RosterError::ThresholdOutOfRange { threshold, max });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttendanceStatus {
    Present,
    Absent,
}

impl AttendanceStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttendanceStatus::Present => "present",
            AttendanceStatus::Absent => "absent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttendanceRecord {
    pub class_id: Id,
    /// Calendar date, serialized as `YYYY-MM-DD`.
    pub date: NaiveDate,
    pub statuses: BTreeMap<Id, AttendanceStatus>,
}

impl AttendanceRecord {
    pub fn new(
        class: &Class,
        date: NaiveDate,
        statuses: BTreeMap<Id, AttendanceStatus>,
    ) -> Result<AttendanceRecord, RosterError> {
        for student in statuses.keys() {
            class.require_enrolled(student)?;
        }
        Ok(AttendanceRecord { class_id: class.id.clone(), date, statuses })
    }

    pub fn count(&self, status: AttendanceStatus) -> usize {
        self.statuses.values().filter(|s| **s == status).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    pub id: Id,
    pub owner_id: Id,
    pub title: String,
    #[serde(default)]
    pub body: String,
    pub created_at: DateTime<Utc>,
}

impl Note {
    pub fn new(owner_id: Id, title: impl Into<String>, body: impl Into<String>, created_at: DateTime<Utc>) -> Result<Note, RosterError> {
        let note = Note { id: Id::generate(), owner_id, title: title.into(), body: body.into(), created_at };
        note.validate()?;
        Ok(note)
    }

    pub fn validate(&self) -> Result<(), RosterError> {
        if self.title.trim().is_empty() {
            return Err(RosterError::EmptyTitle);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Criterion, PerformanceLevel};

    fn rubric() -> Rubric {
        Rubric::new(
            "R",
            vec![Criterion::new("C", vec![PerformanceLevel::new("lo", 1), PerformanceLevel::new("hi", 2)])],
            false,
        )
        .unwrap()
    }

    #[test]
    fn roster_rejects_duplicates() {
        let a = Id::from("a");
        let err = Class::new(Id::from("u"), "7B", vec![a.clone(), Id::from("b"), a.clone()]).unwrap_err();
        assert_eq!(err, RosterError::DuplicateStudent(a));
    }

    #[test]
    fn threshold_must_fit_rubric() {
        let r = rubric();
        assert!(Assignment::new(Id::from("c"), "HW1", &r, Some(Score::from_integer(2))).is_ok());
        assert!(Assignment::new(Id::from("c"), "HW1", &r, Some(Score::ZERO)).is_ok());
        assert!(Assignment::new(Id::from("c"), "HW1", &r, None).is_ok());
        assert!(matches!(
            Assignment::new(Id::from("c"), "HW1", &r, Some(Score::from_integer(3))),
            Err(RosterError::ThresholdOutOfRange { .. })
        ));
        assert!(matches!(
            Assignment::new(Id::from("c"), "HW1", &r, Some(Score::from_integer(-1))),
            Err(RosterError::ThresholdOutOfRange { .. })
        ));
    }

    #[test]
    fn attendance_only_for_roster_students() {
        let class = Class::new(Id::from("u"), "7B", vec![Id::from("a"), Id::from("b")]).unwrap();
        let date = NaiveDate::from_ymd_opt(2024, 3, 1).unwrap();
        let ok = AttendanceRecord::new(
            &class,
            date,
            BTreeMap::from([(Id::from("a"), AttendanceStatus::Present), (Id::from("b"), AttendanceStatus::Absent)]),
        )
        .unwrap();
        assert_eq!(ok.count(AttendanceStatus::Present), 1);
        let err = AttendanceRecord::new(&class, date, BTreeMap::from([(Id::from("z"), AttendanceStatus::Present)]))
            .unwrap_err();
        assert_eq!(err, RosterError::StudentNotEnrolled(Id::from("z")));
    }

    #[test]
    fn attendance_serializes_iso_date() {
        let class = Class::new(Id::from("u"), "7B", vec![Id::from("a")]).unwrap();
        let date = NaiveDate::from_ymd_opt(2024, 3, 1).unwrap();
        let rec =
            AttendanceRecord::new(&class, date, BTreeMap::from([(Id::from("a"), AttendanceStatus::Present)])).unwrap();
        let json = serde_json::to_value(&rec).unwrap();
        assert_eq!(json["date"], "2024-03-01");
        assert_eq!(json["statuses"]["a"], "present");
    }

    #[test]
    fn note_title_required() {
        assert_eq!(Note::new(Id::from("u"), "  ", "body", Utc::now()).unwrap_err(), RosterError::EmptyTitle);
    }

    #[test]
    fn user_credential_never_serialized() {
        let user = User {
            id: Id::from("u"),
            email: "g@example.org".into(),
            display_name: "G".into(),
            credential: PasswordDigest("$argon2id$secret".into()),
        };
        let json = serde_json::to_string(&user).unwrap();
        assert!(!json.contains("argon2"));
        assert!(!format!("{user:?}").contains("secret"));
    }
}
