//! Request and response bodies. Responses embed domain values unchanged and
//! add derived fields alongside them.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use rubrics_core::domain::{AttendanceStatus, Criterion, Id, Rubric, User};
use rubrics_core::grading::{GradeRecord, Selections};
use rubrics_core::stats::{ChartData, StatsSummary};
use rubrics_core::Score;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Deserialize)]
pub struct RegisterRequest {
    pub email: String,
    pub password: String,
    #[serde(default)]
    pub display_name: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct LoginRequest {
    pub email: String,
    pub password: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserView {
    pub id: Id,
    pub email: String,
    pub display_name: String,
}

impl From<&User> for UserView {
    fn from(u: &User) -> UserView {
        UserView { id: u.id.clone(), email: u.email.clone(), display_name: u.display_name.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub token: String,
    pub user: UserView,
    pub expires_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ClassRequest {
    pub name: String,
    /// Omitted on update to keep the current roster.
    pub student_ids: Option<Vec<Id>>,
}

/// Either enrols an existing student (`student_id`) or creates a new one.
#[derive(Debug, Clone, Deserialize)]
pub struct StudentRequest {
    pub student_id: Option<Id>,
    pub name: Option<String>,
    pub email: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CourseRequest {
    pub class_id: Id,
    pub name: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AssignmentRequest {
    pub course_id: Id,
    pub name: String,
    pub rubric_id: Id,
    #[serde(default)]
    pub threshold: Option<Score>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RubricRequest {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub criteria: Vec<Criterion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RubricView {
    #[serde(flatten)]
    pub rubric: Rubric,
    pub max_score: Score,
}

impl From<Rubric> for RubricView {
    fn from(rubric: Rubric) -> RubricView {
        let max_score = rubric.max_score();
        RubricView { rubric, max_score }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct GradeRequest {
    pub selections: Selections,
    #[serde(default)]
    pub comment: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeView {
    #[serde(flatten)]
    pub record: GradeRecord,
    /// Two-decimal rendering of `100 * total / max_score`.
    pub percentage: String,
}

impl From<GradeRecord> for GradeView {
    fn from(record: GradeRecord) -> GradeView {
        let percentage = record.percentage().render();
        GradeView { record, percentage }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataStatus {
    Ok,
    NoData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsView {
    pub assignment_id: Id,
    pub status: DataStatus,
    /// Number of graded students.
    pub n: usize,
    pub summary: Option<StatsSummary>,
    pub criteria: BTreeMap<String, StatsSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphsView {
    pub assignment_id: Id,
    pub status: DataStatus,
    pub threshold: Score,
    pub bar: ChartData,
    pub pie: ChartData,
}

#[derive(Debug, Clone, Deserialize)]
pub struct GraphsQuery {
    pub threshold: Option<Score>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AttendanceRequest {
    pub statuses: BTreeMap<Id, AttendanceStatus>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct NoteRequest {
    pub title: String,
    #[serde(default)]
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportView {
    pub imported: usize,
    pub grades: Vec<GradeView>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeliveryStatus {
    Sent,
    AlreadySent,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryView {
    pub student_id: Id,
    pub status: DeliveryStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackView {
    pub sent: usize,
    pub already_sent: usize,
    pub failed: usize,
    pub deliveries: Vec<DeliveryView>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ListQuery {
    pub class_id: Option<Id>,
    pub course_id: Option<Id>,
}
