use std::collections::BTreeMap;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::header::{CONTENT_DISPOSITION, CONTENT_TYPE};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use chrono::Utc;
use rubrics_core::domain::{Assignment, Id, Rubric, Student, User};
use rubrics_core::export::{
    export_grades_csv, import_grades_csv, render_report, send_feedback, Delivery, Report, ReportInput, SendOptions,
};
use rubrics_core::grading::{class_scores, current_records, grade_submission, name_index, GradeRecord};
use rubrics_core::stats::{
    bar_chart_data, central_tendency, criterion_breakdown, pie_chart_data, ChartData, Dataset, StatsSummary,
};
use rubrics_core::Score;
use rubrics_store::{Actor, AssignmentContext};

use super::{owned_assignment, owned_course, owned_student, require_name, visible_rubric, JsonBody, QueryParams};
use crate::auth::AuthUser;
use crate::error::{ApiError, ApiResult};
use crate::views::{
    AssignmentRequest, DataStatus, DeliveryStatus, DeliveryView, FeedbackView, GradeRequest, GradeView, GraphsQuery,
    GraphsView, ImportView, ListQuery, StatsView,
};
use crate::AppState;

pub(super) async fn list(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    QueryParams(query): QueryParams<ListQuery>,
) -> ApiResult<Json<Vec<Assignment>>> {
    let courses = match query.course_id {
        Some(course_id) => vec![owned_course(&state, &user, &course_id)?.0],
        None => {
            let mut all = Vec::new();
            for class in state.store.classes_owned_by(&user.id)? {
                all.extend(state.store.courses_in_class(&class.id)?);
            }
            all
        }
    };
    let mut out = Vec::new();
    for course in courses {
        out.extend(state.store.assignments_in_course(&course.id)?);
    }
    Ok(Json(out))
}

pub(super) async fn create(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    JsonBody(req): JsonBody<AssignmentRequest>,
) -> ApiResult<(StatusCode, Json<Assignment>)> {
    owned_course(&state, &user, &req.course_id)?;
    let rubric = visible_rubric(&state, &user, &req.rubric_id)?;
    let assignment = Assignment::new(req.course_id, require_name("name", &req.name)?, &rubric, req.threshold)?;
    state.store.put(&Actor::User(user.id.clone()), &assignment)?;
    Ok((StatusCode::CREATED, Json(assignment)))
}

pub(super) async fn get_one(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
) -> ApiResult<Json<Assignment>> {
    Ok(Json(owned_assignment(&state, &user, &id)?.0.assignment))
}

pub(super) async fn update(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
    JsonBody(req): JsonBody<AssignmentRequest>,
) -> ApiResult<Json<Assignment>> {
    let (ctx, _) = owned_assignment(&state, &user, &id)?;
    owned_course(&state, &user, &req.course_id)?;
    let rubric = visible_rubric(&state, &user, &req.rubric_id)?;
    let assignment = Assignment {
        id: ctx.assignment.id,
        course_id: req.course_id,
        name: require_name("name", &req.name)?,
        rubric_id: req.rubric_id,
        threshold: req.threshold,
    };
    assignment.validate(&rubric)?;
    state.store.put(&Actor::User(user.id.clone()), &assignment)?;
    Ok(Json(assignment))
}

pub(super) async fn delete(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
) -> ApiResult<StatusCode> {
    owned_assignment(&state, &user, &id)?;
    state.store.delete::<Assignment>(&Actor::User(user.id.clone()), &id)?;
    Ok(StatusCode::NO_CONTENT)
}

/// Everything analytics and exports are computed from, read for one
/// assignment.
struct Gradebook {
    ctx: AssignmentContext,
    rubric: Rubric,
    roster: Vec<Student>,
    grades: Vec<GradeRecord>,
}

fn gradebook(state: &AppState, user: &User, id: &Id) -> ApiResult<Gradebook> {
    let (ctx, rubric) = owned_assignment(state, user, id)?;
    let roster = state.store.students_in_class(&ctx.class.id)?;
    let grades = state.store.grades_for_assignment(id)?;
    Ok(Gradebook { ctx, rubric, roster, grades })
}

pub(super) async fn list_grades(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
) -> ApiResult<Json<Vec<GradeView>>> {
    let book = gradebook(&state, &user, &id)?;
    let names = name_index(&book.roster);
    let ordered = rubrics_core::grading::ordered_records(&book.grades, &names)?;
    Ok(Json(ordered.into_iter().cloned().map(GradeView::from).collect()))
}

fn roster_student(state: &AppState, user: &User, ctx: &AssignmentContext, student_id: &Id) -> ApiResult<Student> {
    if !ctx.class.is_enrolled(student_id) {
        let student = owned_student(state, user, student_id)?;
        return Err(rubrics_core::grading::GradingError::StudentNotEnrolled(student.id).into());
    }
    state.store.get::<Student>(student_id)?.ok_or_else(|| ApiError::not_found("student"))
}

pub(super) async fn put_grade(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path((id, student_id)): Path<(Id, Id)>,
    JsonBody(req): JsonBody<GradeRequest>,
) -> ApiResult<Json<GradeView>> {
    let (ctx, rubric) = owned_assignment(&state, &user, &id)?;
    let student = roster_student(&state, &user, &ctx, &student_id)?;
    let record =
        grade_submission(&rubric, &ctx.assignment, &ctx.class, &student, &req.selections, &req.comment, Utc::now())?;
    state.store.put(&Actor::User(user.id.clone()), &record)?;
    Ok(Json(record.into()))
}

fn current_grade(state: &AppState, id: &Id, student_id: &Id) -> ApiResult<GradeRecord> {
    state
        .store
        .grades_for_assignment(id)?
        .into_iter()
        .find(|g| &g.student_id == student_id)
        .ok_or_else(|| ApiError::not_found("grade"))
}

pub(super) async fn get_grade(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path((id, student_id)): Path<(Id, Id)>,
) -> ApiResult<Json<GradeView>> {
    owned_assignment(&state, &user, &id)?;
    Ok(Json(current_grade(&state, &id, &student_id)?.into()))
}

pub(super) async fn delete_grade(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path((id, student_id)): Path<(Id, Id)>,
) -> ApiResult<StatusCode> {
    owned_assignment(&state, &user, &id)?;
    let grade = current_grade(&state, &id, &student_id)?;
    state.store.delete::<GradeRecord>(&Actor::User(user.id.clone()), &grade.id)?;
    Ok(StatusCode::NO_CONTENT)
}

type ClassTotals = Vec<(Id, Score)>;

/// Summary over per-student totals, or `None` when nobody is graded.
fn summarize(book: &Gradebook) -> ApiResult<(ClassTotals, Option<StatsSummary>)> {
    let names = name_index(&book.roster);
    let scores = class_scores(&book.grades, &names)?;
    if scores.is_empty() {
        return Ok((scores, None));
    }
    let summary = central_tendency(&Dataset::from_scores(scores.iter().map(|(_, s)| s)))?;
    Ok((scores, Some(summary)))
}

pub(super) async fn stats(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
) -> ApiResult<Json<StatsView>> {
    let book = gradebook(&state, &user, &id)?;
    let (scores, summary) = summarize(&book)?;
    let current: Vec<GradeRecord> = current_records(&book.grades).into_iter().cloned().collect();
    let criteria = if current.is_empty() { BTreeMap::new() } else { criterion_breakdown(&current, &book.rubric)? };
    Ok(Json(StatsView {
        assignment_id: id,
        status: if summary.is_some() { DataStatus::Ok } else { DataStatus::NoData },
        n: scores.len(),
        summary,
        criteria,
    }))
}

/// Threshold used when a request names none: the assignment's own, else
/// half the rubric maximum (rounded down to a millionth).
pub(crate) fn default_threshold(assignment: &Assignment, rubric: &Rubric) -> Score {
    if let Some(t) = assignment.threshold {
        return t;
    }
    let max = rubric.max_score();
    Score::new(max.numer(), max.denom() * 2)
        .or_else(|_| Score::new((max.to_micros() / 2) as i64, 1_000_000))
        .expect("half of a valid score is representable")
}

fn charts(book: &Gradebook, scores: &[(Id, Score)], threshold: Score) -> ApiResult<(ChartData, ChartData)> {
    let names = name_index(&book.roster);
    let bar = bar_chart_data(scores, &names)?;
    let pie = pie_chart_data(&Dataset::from_scores(scores.iter().map(|(_, s)| s)), threshold.to_f64());
    Ok((bar, pie))
}

pub(super) async fn graphs(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
    QueryParams(query): QueryParams<GraphsQuery>,
) -> ApiResult<Json<GraphsView>> {
    let book = gradebook(&state, &user, &id)?;
    let threshold = match query.threshold {
        Some(t) => {
            let max = book.rubric.max_score();
            if t.is_negative() || t > max {
                return Err(rubrics_core::domain::RosterError::ThresholdOutOfRange { threshold: t, max }.into());
            }
            t
        }
        None => default_threshold(&book.ctx.assignment, &book.rubric),
    };
    let (scores, summary) = summarize(&book)?;
    let (bar, pie) = charts(&book, &scores, threshold)?;
    Ok(Json(GraphsView {
        assignment_id: id,
        status: if summary.is_some() { DataStatus::Ok } else { DataStatus::NoData },
        threshold,
        bar,
        pie,
    }))
}

fn file_name(assignment: &Assignment, ext: &str) -> String {
    let stem: String =
        assignment.name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
    format!("{stem}.{ext}")
}

pub(super) async fn export_csv(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
) -> ApiResult<Response> {
    let book = gradebook(&state, &user, &id)?;
    let bytes = export_grades_csv(&book.ctx.assignment, &book.grades, &book.rubric, &book.roster)?;
    let disposition = format!("attachment; filename=\"{}\"", file_name(&book.ctx.assignment, "csv"));
    Ok(([(CONTENT_TYPE, "text/csv; charset=utf-8".to_string()), (CONTENT_DISPOSITION, disposition)], bytes)
        .into_response())
}

/// Grades every row of an uploaded sheet in one transaction.
pub(super) async fn import_csv(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
    body: Bytes,
) -> ApiResult<Json<ImportView>> {
    let book = gradebook(&state, &user, &id)?;
    let records =
        import_grades_csv(&body, &book.ctx.assignment, &book.rubric, &book.ctx.class, &book.roster, Utc::now())?;
    state.store.write(&Actor::User(user.id.clone()), |tx| {
        for record in &records {
            tx.put(record)?;
        }
        Ok(())
    })?;
    Ok(Json(ImportView { imported: records.len(), grades: records.into_iter().map(GradeView::from).collect() }))
}

fn build_report(book: &Gradebook) -> ApiResult<Report> {
    let (scores, summary) = summarize(book)?;
    let threshold = default_threshold(&book.ctx.assignment, &book.rubric);
    let (bar, pie) = charts(book, &scores, threshold)?;
    let chart_list = [bar, pie];
    Ok(render_report(&ReportInput {
        assignment: &book.ctx.assignment,
        rubric: &book.rubric,
        records: &book.grades,
        roster: &book.roster,
        stats: summary.as_ref(),
        charts: if summary.is_some() { &chart_list } else { &[] },
        generated_at: Utc::now(),
    })?)
}

pub(super) async fn report_html(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
) -> ApiResult<Response> {
    let book = gradebook(&state, &user, &id)?;
    let report = build_report(&book)?;
    Ok(([(CONTENT_TYPE, "text/html; charset=utf-8")], report.class_report.body).into_response())
}

/// Renders each graded student's feedback and hands it to the configured
/// transport.
pub(super) async fn feedback(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
) -> ApiResult<Json<FeedbackView>> {
    let book = gradebook(&state, &user, &id)?;
    let report = build_report(&book)?;
    let transport = state.transport.clone();
    let options = SendOptions { max_in_flight: state.settings.max_in_flight, subject: state.settings.mail_subject.clone() };
    let roster = book.roster;
    let docs = report.feedback;
    let results = tokio::task::spawn_blocking(move || send_feedback(transport.as_ref(), &docs, &roster, &options))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?;

    let mut view = FeedbackView { sent: 0, already_sent: 0, failed: 0, deliveries: Vec::with_capacity(results.len()) };
    for delivery in results {
        let (status, location, error) = match delivery.result {
            Ok(Delivery::Sent { location }) => (DeliveryStatus::Sent, Some(location), None),
            Ok(Delivery::AlreadySent { location }) => (DeliveryStatus::AlreadySent, Some(location), None),
            Err(e) => (DeliveryStatus::Failed, None, Some(e.to_string())),
        };
        match status {
            DeliveryStatus::Sent => view.sent += 1,
            DeliveryStatus::AlreadySent => view.already_sent += 1,
            DeliveryStatus::Failed => view.failed += 1,
        }
        view.deliveries.push(DeliveryView { student_id: delivery.student_id, status, location, error });
    }
    tracing::info!(assignment_id = %id, sent = view.sent, already_sent = view.already_sent, failed = view.failed, "feedback dispatched");
    Ok(Json(view))
}
