use std::collections::HashSet;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::Json;
use chrono::{NaiveDate, Utc};
use rubrics_core::domain::{AttendanceRecord, Class, Course, Id, Note, Student};
use rubrics_store::{Actor, AttendanceKey, StoreError};

use super::{owned_class, owned_course, owned_student, require_name, JsonBody, QueryParams};
use crate::auth::AuthUser;
use crate::error::{ApiError, ApiResult};
use crate::views::{AttendanceRequest, ClassRequest, CourseRequest, ListQuery, NoteRequest, StudentRequest};
use crate::AppState;

fn actor(user: &rubrics_core::domain::User) -> Actor {
    Actor::User(user.id.clone())
}

fn check_students(state: &AppState, user: &rubrics_core::domain::User, ids: &[Id]) -> ApiResult<()> {
    let mut seen = HashSet::new();
    for id in ids {
        owned_student(state, user, id)?;
        if !seen.insert(id) {
            return Err(rubrics_core::domain::RosterError::DuplicateStudent(id.clone()).into());
        }
    }
    Ok(())
}

pub(super) async fn list_classes(State(state): State<AppState>, AuthUser(user): AuthUser) -> ApiResult<Json<Vec<Class>>> {
    Ok(Json(state.store.classes_owned_by(&user.id)?))
}

pub(super) async fn create_class(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    JsonBody(req): JsonBody<ClassRequest>,
) -> ApiResult<(StatusCode, Json<Class>)> {
    let name = require_name("name", &req.name)?;
    let student_ids = req.student_ids.unwrap_or_default();
    check_students(&state, &user, &student_ids)?;
    let class = Class::new(user.id.clone(), name, student_ids)?;
    state.store.put(&actor(&user), &class)?;
    Ok((StatusCode::CREATED, Json(class)))
}

pub(super) async fn get_class(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
) -> ApiResult<Json<Class>> {
    Ok(Json(owned_class(&state, &user, &id)?))
}

pub(super) async fn update_class(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
    JsonBody(req): JsonBody<ClassRequest>,
) -> ApiResult<Json<Class>> {
    let mut class = owned_class(&state, &user, &id)?;
    class.name = require_name("name", &req.name)?;
    if let Some(ids) = req.student_ids {
        check_students(&state, &user, &ids)?;
        class.student_ids = ids;
    }
    class.validate()?;
    state.store.put(&actor(&user), &class)?;
    Ok(Json(class))
}

pub(super) async fn delete_class(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
) -> ApiResult<StatusCode> {
    owned_class(&state, &user, &id)?;
    state.store.delete::<Class>(&actor(&user), &id)?;
    Ok(StatusCode::NO_CONTENT)
}

pub(super) async fn list_students(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
) -> ApiResult<Json<Vec<Student>>> {
    owned_class(&state, &user, &id)?;
    Ok(Json(state.store.students_in_class(&id)?))
}

/// Creates a student (or takes an existing one of the caller's) and
/// appends it to the roster.
pub(super) async fn add_student(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
    JsonBody(req): JsonBody<StudentRequest>,
) -> ApiResult<(StatusCode, Json<Student>)> {
    let class = owned_class(&state, &user, &id)?;
    let who = actor(&user);
    let student = match (req.student_id, req.name) {
        (Some(student_id), _) => owned_student(&state, &user, &student_id)?,
        (None, Some(name)) => Student::new(require_name("name", &name)?, req.email),
        (None, None) => return Err(ApiError::bad_request("either student_id or name is required")),
    };
    if class.is_enrolled(&student.id) {
        return Err(rubrics_core::domain::RosterError::DuplicateStudent(student.id.clone()).into());
    }
    state.store.write(&who, |tx| {
        if tx.get::<Student>(&student.id)?.is_none() {
            tx.put(&student)?;
        }
        let mut class = tx.require::<Class>(&class.id)?;
        class.student_ids.push(student.id.clone());
        tx.put(&class)?;
        Ok(())
    })?;
    Ok((StatusCode::CREATED, Json(student)))
}

fn enrolled_student(state: &AppState, user: &rubrics_core::domain::User, class_id: &Id, student_id: &Id) -> ApiResult<(Class, Student)> {
    let class = owned_class(state, user, class_id)?;
    if !class.is_enrolled(student_id) {
        return Err(ApiError::not_found("student"));
    }
    let student = state.store.get::<Student>(student_id)?.ok_or_else(|| ApiError::not_found("student"))?;
    Ok((class, student))
}

pub(super) async fn get_student(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path((id, student_id)): Path<(Id, Id)>,
) -> ApiResult<Json<Student>> {
    Ok(Json(enrolled_student(&state, &user, &id, &student_id)?.1))
}

pub(super) async fn update_student(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path((id, student_id)): Path<(Id, Id)>,
    JsonBody(req): JsonBody<StudentRequest>,
) -> ApiResult<Json<Student>> {
    let (_, current) = enrolled_student(&state, &user, &id, &student_id)?;
    let name = match req.name {
        Some(name) => require_name("name", &name)?,
        None => current.name.clone(),
    };
    let updated = Student { id: current.id, ..Student::new(name, req.email.or(current.email)) };
    state.store.put(&actor(&user), &updated)?;
    Ok(Json(updated))
}

/// Takes the student off the roster. The student record itself is deleted
/// once nothing refers to it any more.
pub(super) async fn remove_student(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path((id, student_id)): Path<(Id, Id)>,
) -> ApiResult<StatusCode> {
    let (mut class, _) = enrolled_student(&state, &user, &id, &student_id)?;
    class.student_ids.retain(|s| s != &student_id);
    let who = actor(&user);
    state.store.put(&who, &class)?;
    match state.store.delete::<Student>(&who, &student_id) {
        Ok(_) | Err(StoreError::ForeignKeyViolation(_)) => Ok(StatusCode::NO_CONTENT),
        Err(e) => Err(e.into()),
    }
}

fn parse_date(text: &str) -> ApiResult<NaiveDate> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .map_err(|_| ApiError::bad_request(format!("{text:?} is not a YYYY-MM-DD date")))
}

pub(super) async fn list_attendance(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
) -> ApiResult<Json<Vec<AttendanceRecord>>> {
    owned_class(&state, &user, &id)?;
    Ok(Json(state.store.attendance_for_class(&id)?))
}

pub(super) async fn get_attendance(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path((id, date)): Path<(Id, String)>,
) -> ApiResult<Json<AttendanceRecord>> {
    owned_class(&state, &user, &id)?;
    let key = AttendanceKey { class_id: id, date: parse_date(&date)? };
    Ok(Json(state.store.get::<AttendanceRecord>(&key)?.ok_or_else(|| ApiError::not_found("attendance"))?))
}

pub(super) async fn put_attendance(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path((id, date)): Path<(Id, String)>,
    JsonBody(req): JsonBody<AttendanceRequest>,
) -> ApiResult<Json<AttendanceRecord>> {
    let class = owned_class(&state, &user, &id)?;
    let record = AttendanceRecord::new(&class, parse_date(&date)?, req.statuses)?;
    let stored = state.store.record_attendance(&actor(&user), &class.id, record.date, record.statuses)?;
    Ok(Json(stored))
}

pub(super) async fn list_courses(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    QueryParams(query): QueryParams<ListQuery>,
) -> ApiResult<Json<Vec<Course>>> {
    let classes = match query.class_id {
        Some(class_id) => vec![owned_class(&state, &user, &class_id)?],
        None => state.store.classes_owned_by(&user.id)?,
    };
    let mut courses = Vec::new();
    for class in classes {
        courses.extend(state.store.courses_in_class(&class.id)?);
    }
    Ok(Json(courses))
}

pub(super) async fn create_course(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    JsonBody(req): JsonBody<CourseRequest>,
) -> ApiResult<(StatusCode, Json<Course>)> {
    owned_class(&state, &user, &req.class_id)?;
    let course = Course::new(req.class_id, require_name("name", &req.name)?);
    state.store.put(&actor(&user), &course)?;
    Ok((StatusCode::CREATED, Json(course)))
}

pub(super) async fn get_course(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
) -> ApiResult<Json<Course>> {
    Ok(Json(owned_course(&state, &user, &id)?.0))
}

pub(super) async fn update_course(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
    JsonBody(req): JsonBody<CourseRequest>,
) -> ApiResult<Json<Course>> {
    let (mut course, _) = owned_course(&state, &user, &id)?;
    owned_class(&state, &user, &req.class_id)?;
    course.class_id = req.class_id;
    course.name = require_name("name", &req.name)?;
    state.store.put(&actor(&user), &course)?;
    Ok(Json(course))
}

pub(super) async fn delete_course(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
) -> ApiResult<StatusCode> {
    owned_course(&state, &user, &id)?;
    state.store.delete::<Course>(&actor(&user), &id)?;
    Ok(StatusCode::NO_CONTENT)
}

fn owned_note(state: &AppState, user: &rubrics_core::domain::User, id: &Id) -> ApiResult<Note> {
    match state.store.get::<Note>(id)? {
        Some(note) if note.owner_id == user.id => Ok(note),
        _ => Err(ApiError::not_found("note")),
    }
}

pub(super) async fn list_notes(State(state): State<AppState>, AuthUser(user): AuthUser) -> ApiResult<Json<Vec<Note>>> {
    Ok(Json(state.store.notes_owned_by(&user.id)?))
}

pub(super) async fn create_note(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    JsonBody(req): JsonBody<NoteRequest>,
) -> ApiResult<(StatusCode, Json<Note>)> {
    let note = Note::new(user.id.clone(), req.title, req.body, Utc::now())?;
    state.store.put(&actor(&user), &note)?;
    Ok((StatusCode::CREATED, Json(note)))
}

pub(super) async fn get_note(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
) -> ApiResult<Json<Note>> {
    Ok(Json(owned_note(&state, &user, &id)?))
}

pub(super) async fn update_note(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
    JsonBody(req): JsonBody<NoteRequest>,
) -> ApiResult<Json<Note>> {
    let mut note = owned_note(&state, &user, &id)?;
    note.title = req.title;
    note.body = req.body;
    note.validate()?;
    state.store.put(&actor(&user), &note)?;
    Ok(Json(note))
}

pub(super) async fn delete_note(
    State(state): State<AppState>,
    AuthUser(user): AuthUser,
    Path(id): Path<Id>,
) -> ApiResult<StatusCode> {
    owned_note(&state, &user, &id)?;
    state.store.delete::<Note>(&actor(&user), &id)?;
    Ok(StatusCode::NO_CONTENT)
}
