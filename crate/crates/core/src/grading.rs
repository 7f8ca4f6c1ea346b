//! Turning level selections into grade records.

use std::collections::{BTreeMap, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Assignment, Class, Id, Rubric, Student};
use crate::score::{Percentage, Score};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GradingError {
    #[error("assignment uses rubric {expected}, but rubric {found} was supplied")]
    RubricMismatch { expected: Id, found: Id },
    #[error("student {0} is not enrolled in the assignment's class")]
    StudentNotEnrolled(Id),
    #[error("no level selected for criterion {0:?}")]
    MissingCriterion(String),
    #[error("criterion {0:?} is not part of the rubric")]
    UnknownCriterion(String),
    #[error("criterion {criterion:?} has no level labelled {label:?}")]
    UnknownLevel { criterion: String, label: String },
    #[error("records belong to more than one assignment")]
    MixedAssignments,
}

/// Level label chosen per criterion name.
pub type Selections = BTreeMap<String, String>;

/// The current grade of one student on one assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradeRecord {
    pub id: Id,
    pub assignment_id: Id,
    pub student_id: Id,
    pub selections: Selections,
    pub total: Score,
    /// Rubric maximum at grading time; the percentage denominator.
    pub max_score: Score,
    pub graded_at: DateTime<Utc>,
    #[serde(default)]
    pub comment: String,
}

impl GradeRecord {
    pub fn percentage(&self) -> Percentage {
        Percentage::of(self.total, self.max_score).expect("rubric maximum is always positive")
    }

    /// Re-derives the total from the selections against `rubric`.
    pub fn recompute_total(&self, rubric: &Rubric) -> Result<Score, GradingError> {
        let mut total = Score::ZERO;
        for criterion in rubric.criteria() {
            let label = self
                .selections
                .get(&criterion.name)
                .ok_or_else(|| GradingError::MissingCriterion(criterion.name.clone()))?;
            let level = criterion.level(label).ok_or_else(|| GradingError::UnknownLevel {
                criterion: criterion.name.clone(),
                label: label.clone(),
            })?;
            total = total + level.points;
        }
        Ok(total)
    }

    /// Points of the level selected for `criterion`, if any.
    pub fn points_for(&self, rubric: &Rubric, criterion: &str) -> Option<Score> {
        let label = self.selections.get(criterion)?;
        rubric.criterion(criterion)?.level(label).map(|l| l.points)
    }

    /// Equality of graded content, ignoring id, timestamp and comment.
    pub fn same_grade(&self, other: &GradeRecord) -> bool {
        self.assignment_id == other.assignment_id
            && self.student_id == other.student_id
            && self.selections == other.selections
            && self.total == other.total
            && self.max_score == other.max_score
    }
}

/// Grades `student` on `assignment` from per-criterion level labels.
pub fn grade_submission(
    rubric: &Rubric,
    assignment: &Assignment,
    class: &Class,
    student: &Student,
    selections: &Selections,
    comment: &str,
    graded_at: DateTime<Utc>,
) -> Result<GradeRecord, GradingError> {
    if &assignment.rubric_id != rubric.id() {
        return Err(GradingError::RubricMismatch { expected: assignment.rubric_id.clone(), found: rubric.id().clone() });
    }
    if !class.is_enrolled(&student.id) {
        return Err(GradingError::StudentNotEnrolled(student.id.clone()));
    }
    for (criterion_name, label) in selections {
        let criterion =
            rubric.criterion(criterion_name).ok_or_else(|| GradingError::UnknownCriterion(criterion_name.clone()))?;
        if criterion.level(label).is_none() {
            return Err(GradingError::UnknownLevel { criterion: criterion_name.clone(), label: label.clone() });
        }
    }
    let mut record = GradeRecord {
        id: Id::generate(),
        assignment_id: assignment.id.clone(),
        student_id: student.id.clone(),
        selections: selections.clone(),
        total: Score::ZERO,
        max_score: rubric.max_score(),
        graded_at,
        comment: comment.to_string(),
    };
    record.total = record.recompute_total(rubric)?;
    Ok(record)
}

/// The stored total of a record.
pub fn total_marks(record: &GradeRecord) -> Score {
    record.total
}

/// Fails with `MixedAssignments` unless every record shares one assignment.
pub fn ensure_single_assignment(records: &[GradeRecord]) -> Result<Option<&Id>, GradingError> {
    let mut ids = records.iter().map(|r| &r.assignment_id);
    let first = ids.next();
    if let Some(first) = first {
        if ids.any(|id| id != first) {
            return Err(GradingError::MixedAssignments);
        }
    }
    Ok(first)
}

/// Keeps one record per student: the latest `graded_at`, later list position
/// winning ties.
pub fn current_records(records: &[GradeRecord]) -> Vec<&GradeRecord> {
    let mut latest: HashMap<&Id, &GradeRecord> = HashMap::new();
    for record in records {
        match latest.get(&record.student_id) {
            Some(existing) if existing.graded_at > record.graded_at => {}
            _ => {
                latest.insert(&record.student_id, record);
            }
        }
    }
    let mut out: Vec<_> = latest.into_values().collect();
    out.sort_by(|a, b| a.student_id.cmp(&b.student_id));
    out
}

/// Student names keyed by id.
pub fn name_index(roster: &[Student]) -> HashMap<Id, String> {
    roster.iter().map(|s| (s.id.clone(), s.name.clone())).collect()
}

/// Current records ordered by student name, then id. Students without a
/// known name sort last.
pub fn ordered_records<'a>(
    records: &'a [GradeRecord],
    names: &HashMap<Id, String>,
) -> Result<Vec<&'a GradeRecord>, GradingError> {
    ensure_single_assignment(records)?;
    let mut current = current_records(records);
    current.sort_by(|a, b| {
        let key = |r: &GradeRecord| (names.get(&r.student_id).is_none(), names.get(&r.student_id).cloned());
        key(a).cmp(&key(b)).then_with(|| a.student_id.cmp(&b.student_id))
    });
    Ok(current)
}

/// One `(student, total)` per graded student, in display order.
pub fn class_scores(records: &[GradeRecord], names: &HashMap<Id, String>) -> Result<Vec<(Id, Score)>, GradingError> {
    Ok(ordered_records(records, names)?.into_iter().map(|r| (r.student_id.clone(), r.total)).collect())
}
