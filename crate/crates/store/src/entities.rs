//! Per-kind persistence. Each entity maps to one row plus child rows for
//! nested collections (roster, criteria and levels, selections, statuses).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use rubrics_core::domain::{
    AttendanceRecord, AttendanceStatus, Class, Course, Criterion, Id, Note, PasswordDigest, PerformanceLevel, Rubric,
    Student, User,
};
use rubrics_core::domain::Assignment;
use rubrics_core::grading::GradeRecord;
use rubrics_core::Score;
use rusqlite::{params, Connection, OptionalExtension, Row};
use serde::Serialize;

use crate::audit::AuditKind;
use crate::{ts_from_sql, ts_to_sql, Actor, Result, StoreError};

/// Outcome of a save.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Saved {
    Created,
    Updated,
}

/// A persistable domain value.
pub trait Entity: Sized + Serialize {
    type Key: fmt::Display;
    const KIND: &'static str;

    fn key(&self) -> Self::Key;
    fn fetch(conn: &Connection, key: &Self::Key) -> Result<Option<Self>>;
    fn fetch_all(conn: &Connection) -> Result<Vec<Self>>;
    fn save(conn: &Connection, actor: &Actor, value: &Self) -> Result<Saved>;
    fn remove(conn: &Connection, key: &Self::Key) -> Result<Self>;

    fn audit_kind(saved: Saved) -> AuditKind {
        match saved {
            Saved::Created => AuditKind::EntityCreated,
            Saved::Updated => AuditKind::EntityUpdated,
        }
    }

    fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("domain values serialize to JSON")
    }
}

fn not_found<E: Entity>(key: &E::Key) -> StoreError {
    StoreError::NotFound { kind: E::KIND, key: key.to_string() }
}

fn exists(conn: &Connection, sql: &str, key: &dyn rusqlite::ToSql) -> Result<bool> {
    Ok(conn.query_row(sql, [key], |_| Ok(())).optional()?.is_some())
}

fn count(conn: &Connection, sql: &str, params: impl rusqlite::Params) -> Result<i64> {
    Ok(conn.query_row(sql, params, |row| row.get(0))?)
}

pub(crate) fn score_from(num: i64, den: i64) -> Result<Score> {
    Score::new(num, den).map_err(|e| StoreError::Corrupt(format!("score {num}/{den}: {e}")))
}

fn id_col(row: &Row<'_>, idx: usize) -> rusqlite::Result<Id> {
    row.get::<_, String>(idx).map(Id::from)
}

fn collect<T>(rows: impl Iterator<Item = rusqlite::Result<T>>) -> Result<Vec<T>> {
    Ok(rows.collect::<rusqlite::Result<Vec<T>>>()?)
}

fn keys(conn: &Connection, sql: &str) -> Result<Vec<Id>> {
    let mut stmt = conn.prepare(sql)?;
    let rows = stmt.query_map([], |row| id_col(row, 0))?;
    collect(rows)
}

impl Entity for User {
    type Key = Id;
    const KIND: &'static str = "user";

    fn key(&self) -> Id {
        self.id.clone()
    }

    fn fetch(conn: &Connection, key: &Id) -> Result<Option<User>> {
        Ok(conn
            .query_row(
                "SELECT id, email, display_name, credential FROM users WHERE id = ?1",
                [key.as_str()],
                user_row,
            )
            .optional()?)
    }

    fn fetch_all(conn: &Connection) -> Result<Vec<User>> {
        let mut stmt = conn.prepare("SELECT id, email, display_name, credential FROM users ORDER BY rowid")?;
        let rows = stmt.query_map([], user_row)?;
        collect(rows)
    }

    fn save(conn: &Connection, _actor: &Actor, value: &User) -> Result<Saved> {
        if value.email.trim().is_empty() {
            return Err(StoreError::Invalid("email must not be empty".into()));
        }
        let updated = conn.execute(
            "UPDATE users SET email = ?2, display_name = ?3, credential = ?4 WHERE id = ?1",
            params![value.id.as_str(), value.email, value.display_name, value.credential.0],
        )?;
        if updated > 0 {
            return Ok(Saved::Updated);
        }
        conn.execute(
            "INSERT INTO users (id, email, display_name, credential) VALUES (?1, ?2, ?3, ?4)",
            params![value.id.as_str(), value.email, value.display_name, value.credential.0],
        )?;
        Ok(Saved::Created)
    }

    fn remove(conn: &Connection, key: &Id) -> Result<User> {
        let user = Self::fetch(conn, key)?.ok_or_else(|| not_found::<Self>(key))?;
        conn.execute("DELETE FROM users WHERE id = ?1", [key.as_str()])?;
        Ok(user)
    }
}

pub(crate) fn user_row(row: &Row<'_>) -> rusqlite::Result<User> {
    Ok(User {
        id: id_col(row, 0)?,
        email: row.get(1)?,
        display_name: row.get(2)?,
        credential: PasswordDigest(row.get(3)?),
    })
}

impl Entity for Student {
    type Key = Id;
    const KIND: &'static str = "student";

    fn key(&self) -> Id {
        self.id.clone()
    }

    fn fetch(conn: &Connection, key: &Id) -> Result<Option<Student>> {
        Ok(conn
            .query_row("SELECT id, name, email FROM students WHERE id = ?1", [key.as_str()], student_row)
            .optional()?)
    }

    fn fetch_all(conn: &Connection) -> Result<Vec<Student>> {
        let mut stmt = conn.prepare("SELECT id, name, email FROM students ORDER BY rowid")?;
        let rows = stmt.query_map([], student_row)?;
        collect(rows)
    }

    fn save(conn: &Connection, actor: &Actor, value: &Student) -> Result<Saved> {
        if value.name.trim().is_empty() {
            return Err(StoreError::Invalid("student name must not be empty".into()));
        }
        let updated = conn.execute(
            "UPDATE students SET name = ?2, email = ?3 WHERE id = ?1",
            params![value.id.as_str(), value.name, value.email],
        )?;
        if updated > 0 {
            return Ok(Saved::Updated);
        }
        conn.execute(
            "INSERT INTO students (id, owner_id, name, email) VALUES (?1, ?2, ?3, ?4)",
            params![value.id.as_str(), actor.user_id().map(Id::as_str), value.name, value.email],
        )?;
        Ok(Saved::Created)
    }

    fn remove(conn: &Connection, key: &Id) -> Result<Student> {
        let student = Self::fetch(conn, key)?.ok_or_else(|| not_found::<Self>(key))?;
        conn.execute("DELETE FROM students WHERE id = ?1", [key.as_str()])?;
        Ok(student)
    }
}

pub(crate) fn student_row(row: &Row<'_>) -> rusqlite::Result<Student> {
    Ok(Student { id: id_col(row, 0)?, name: row.get(1)?, email: row.get(2)? })
}

impl Entity for Class {
    type Key = Id;
    const KIND: &'static str = "class";

    fn key(&self) -> Id {
        self.id.clone()
    }

    fn fetch(conn: &Connection, key: &Id) -> Result<Option<Class>> {
        let head = conn
            .query_row("SELECT id, owner_id, name FROM classes WHERE id = ?1", [key.as_str()], |row| {
                Ok((id_col(row, 0)?, id_col(row, 1)?, row.get::<_, String>(2)?))
            })
            .optional()?;
        let Some((id, owner_id, name)) = head else { return Ok(None) };
        let student_ids = roster(conn, &id)?;
        Ok(Some(Class { id, owner_id, name, student_ids }))
    }

    fn fetch_all(conn: &Connection) -> Result<Vec<Class>> {
        let ids = keys(conn, "SELECT id FROM classes ORDER BY rowid")?;
        ids.iter().map(|id| Self::fetch(conn, id)?.ok_or_else(|| not_found::<Self>(id))).collect()
    }

    fn save(conn: &Connection, _actor: &Actor, value: &Class) -> Result<Saved> {
        value.validate().map_err(|e| StoreError::Invalid(e.to_string()))?;
        if value.name.trim().is_empty() {
            return Err(StoreError::Invalid("class name must not be empty".into()));
        }
        let updated = conn.execute(
            "UPDATE classes SET owner_id = ?2, name = ?3 WHERE id = ?1",
            params![value.id.as_str(), value.owner_id.as_str(), value.name],
        )?;
        let saved = if updated > 0 {
            let keep: BTreeSet<&Id> = value.student_ids.iter().collect();
            for old in roster(conn, &value.id)? {
                if !keep.contains(&old) {
                    ensure_unreferenced_in_class(conn, &value.id, &old)?;
                }
            }
            conn.execute("DELETE FROM class_students WHERE class_id = ?1", [value.id.as_str()])?;
            Saved::Updated
        } else {
            conn.execute(
                "INSERT INTO classes (id, owner_id, name) VALUES (?1, ?2, ?3)",
                params![value.id.as_str(), value.owner_id.as_str(), value.name],
            )?;
            Saved::Created
        };
        let mut stmt =
            conn.prepare("INSERT INTO class_students (class_id, student_id, position) VALUES (?1, ?2, ?3)")?;
        for (position, student) in value.student_ids.iter().enumerate() {
            stmt.execute(params![value.id.as_str(), student.as_str(), position as i64])?;
        }
        Ok(saved)
    }

    fn remove(conn: &Connection, key: &Id) -> Result<Class> {
        let class = Self::fetch(conn, key)?.ok_or_else(|| not_found::<Self>(key))?;
        if count(conn, "SELECT COUNT(*) FROM attendance WHERE class_id = ?1", [key.as_str()])? > 0 {
            return Err(StoreError::ForeignKeyViolation(format!("class {key} has attendance records")));
        }
        conn.execute("DELETE FROM classes WHERE id = ?1", [key.as_str()])?;
        Ok(class)
    }
}

pub(crate) fn roster(conn: &Connection, class_id: &Id) -> Result<Vec<Id>> {
    let mut stmt = conn.prepare("SELECT student_id FROM class_students WHERE class_id = ?1 ORDER BY position")?;
    let rows = stmt.query_map([class_id.as_str()], |row| id_col(row, 0))?;
    collect(rows)
}

fn ensure_unreferenced_in_class(conn: &Connection, class_id: &Id, student_id: &Id) -> Result<()> {
    let grades = count(
        conn,
        "SELECT COUNT(*) FROM grades g
         JOIN assignments a ON a.id = g.assignment_id
         JOIN courses c ON c.id = a.course_id
         WHERE c.class_id = ?1 AND g.student_id = ?2",
        [class_id.as_str(), student_id.as_str()],
    )?;
    let attendance = count(
        conn,
        "SELECT COUNT(*) FROM attendance_statuses WHERE class_id = ?1 AND student_id = ?2",
        [class_id.as_str(), student_id.as_str()],
    )?;
    if grades + attendance > 0 {
        return Err(StoreError::ForeignKeyViolation(format!(
            "student {student_id} has grades or attendance in class {class_id}"
        )));
    }
    Ok(())
}

impl Entity for Course {
    type Key = Id;
    const KIND: &'static str = "course";

    fn key(&self) -> Id {
        self.id.clone()
    }

    fn fetch(conn: &Connection, key: &Id) -> Result<Option<Course>> {
        Ok(conn
            .query_row("SELECT id, class_id, name FROM courses WHERE id = ?1", [key.as_str()], course_row)
            .optional()?)
    }

    fn fetch_all(conn: &Connection) -> Result<Vec<Course>> {
        let mut stmt = conn.prepare("SELECT id, class_id, name FROM courses ORDER BY rowid")?;
        let rows = stmt.query_map([], course_row)?;
        collect(rows)
    }

    fn save(conn: &Connection, _actor: &Actor, value: &Course) -> Result<Saved> {
        if value.name.trim().is_empty() {
            return Err(StoreError::Invalid("course name must not be empty".into()));
        }
        if let Some(old) = Self::fetch(conn, &value.id)? {
            if old.class_id != value.class_id
                && count(conn, "SELECT COUNT(*) FROM assignments WHERE course_id = ?1", [value.id.as_str()])? > 0
            {
                return Err(StoreError::ForeignKeyViolation(format!(
                    "course {} has assignments and cannot move to another class",
                    value.id
                )));
            }
            conn.execute(
                "UPDATE courses SET class_id = ?2, name = ?3 WHERE id = ?1",
                params![value.id.as_str(), value.class_id.as_str(), value.name],
            )?;
            return Ok(Saved::Updated);
        }
        conn.execute(
            "INSERT INTO courses (id, class_id, name) VALUES (?1, ?2, ?3)",
            params![value.id.as_str(), value.class_id.as_str(), value.name],
        )?;
        Ok(Saved::Created)
    }

    fn remove(conn: &Connection, key: &Id) -> Result<Course> {
        let course = Self::fetch(conn, key)?.ok_or_else(|| not_found::<Self>(key))?;
        conn.execute("DELETE FROM courses WHERE id = ?1", [key.as_str()])?;
        Ok(course)
    }
}

pub(crate) fn course_row(row: &Row<'_>) -> rusqlite::Result<Course> {
    Ok(Course { id: id_col(row, 0)?, class_id: id_col(row, 1)?, name: row.get(2)? })
}

impl Entity for Rubric {
    type Key = Id;
    const KIND: &'static str = "rubric";

    fn key(&self) -> Id {
        self.id().clone()
    }

    fn fetch(conn: &Connection, key: &Id) -> Result<Option<Rubric>> {
        let head = conn
            .query_row(
                "SELECT name, description, predefined FROM rubrics WHERE id = ?1",
                [key.as_str()],
                |row| Ok((row.get::<_, String>(0)?, row.get::<_, String>(1)?, row.get::<_, bool>(2)?)),
            )
            .optional()?;
        let Some((name, description, predefined)) = head else { return Ok(None) };

        let mut stmt = conn.prepare("SELECT position, name FROM criteria WHERE rubric_id = ?1 ORDER BY position")?;
        let criteria_rows = collect(
            stmt.query_map([key.as_str()], |row| Ok((row.get::<_, i64>(0)?, row.get::<_, String>(1)?)))?,
        )?;
        let mut stmt = conn.prepare(
            "SELECT label, points_num, points_den FROM levels
             WHERE rubric_id = ?1 AND criterion_position = ?2 ORDER BY position",
        )?;
        let mut criteria = Vec::with_capacity(criteria_rows.len());
        for (position, criterion_name) in criteria_rows {
            let raw = collect(stmt.query_map(params![key.as_str(), position], |row| {
                Ok((row.get::<_, String>(0)?, row.get::<_, i64>(1)?, row.get::<_, i64>(2)?))
            })?)?;
            let levels = raw
                .into_iter()
                .map(|(label, num, den)| Ok(PerformanceLevel::new(label, score_from(num, den)?)))
                .collect::<Result<Vec<_>>>()?;
            criteria.push(Criterion::new(criterion_name, levels));
        }
        Rubric::with_id(key.clone(), name, description, predefined, criteria)
            .map(Some)
            .map_err(|e| StoreError::Corrupt(format!("rubric {key}: {e}")))
    }

    fn fetch_all(conn: &Connection) -> Result<Vec<Rubric>> {
        let ids = keys(conn, "SELECT id FROM rubrics ORDER BY rowid")?;
        ids.iter().map(|id| Self::fetch(conn, id)?.ok_or_else(|| not_found::<Self>(id))).collect()
    }

    fn save(conn: &Connection, actor: &Actor, value: &Rubric) -> Result<Saved> {
        let id = value.id().as_str();
        let saved = if exists(conn, "SELECT 1 FROM rubrics WHERE id = ?1", &id)? {
            if count(conn, "SELECT COUNT(*) FROM assignments WHERE rubric_id = ?1", [id])? > 0 {
                return Err(StoreError::ForeignKeyViolation(format!(
                    "rubric {id} is used by an assignment and cannot change"
                )));
            }
            conn.execute(
                "UPDATE rubrics SET name = ?2, description = ?3, predefined = ?4 WHERE id = ?1",
                params![id, value.name(), value.description(), value.is_predefined()],
            )?;
            conn.execute("DELETE FROM criteria WHERE rubric_id = ?1", [id])?;
            Saved::Updated
        } else {
            conn.execute(
                "INSERT INTO rubrics (id, owner_id, name, description, predefined) VALUES (?1, ?2, ?3, ?4, ?5)",
                params![id, actor.user_id().map(Id::as_str), value.name(), value.description(), value.is_predefined()],
            )?;
            Saved::Created
        };
        let mut criterion_stmt = conn.prepare("INSERT INTO criteria (rubric_id, position, name) VALUES (?1, ?2, ?3)")?;
        let mut level_stmt = conn.prepare(
            "INSERT INTO levels (rubric_id, criterion_position, position, label, points_num, points_den)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
        )?;
        for (cpos, criterion) in value.criteria().iter().enumerate() {
            criterion_stmt.execute(params![id, cpos as i64, criterion.name])?;
            for (lpos, level) in criterion.levels.iter().enumerate() {
                level_stmt.execute(params![
                    id,
                    cpos as i64,
                    lpos as i64,
                    level.label,
                    level.points.numer(),
                    level.points.denom()
                ])?;
            }
        }
        Ok(saved)
    }

    fn remove(conn: &Connection, key: &Id) -> Result<Rubric> {
        let rubric = Self::fetch(conn, key)?.ok_or_else(|| not_found::<Self>(key))?;
        conn.execute("DELETE FROM rubrics WHERE id = ?1", [key.as_str()])?;
        Ok(rubric)
    }
}

impl Entity for Assignment {
    type Key = Id;
    const KIND: &'static str = "assignment";

    fn key(&self) -> Id {
        self.id.clone()
    }

    fn fetch(conn: &Connection, key: &Id) -> Result<Option<Assignment>> {
        let raw = conn
            .query_row(
                "SELECT id, course_id, name, rubric_id, threshold_num, threshold_den FROM assignments WHERE id = ?1",
                [key.as_str()],
                assignment_raw,
            )
            .optional()?;
        raw.map(assignment_from_raw).transpose()
    }

    fn fetch_all(conn: &Connection) -> Result<Vec<Assignment>> {
        let mut stmt = conn.prepare(
            "SELECT id, course_id, name, rubric_id, threshold_num, threshold_den FROM assignments ORDER BY rowid",
        )?;
        let raw = collect(stmt.query_map([], assignment_raw)?)?;
        raw.into_iter().map(assignment_from_raw).collect()
    }

    fn save(conn: &Connection, _actor: &Actor, value: &Assignment) -> Result<Saved> {
        if value.name.trim().is_empty() {
            return Err(StoreError::Invalid("assignment name must not be empty".into()));
        }
        let rubric = Rubric::fetch(conn, &value.rubric_id)?
            .ok_or_else(|| StoreError::ForeignKeyViolation(format!("rubric {} does not exist", value.rubric_id)))?;
        value.validate(&rubric).map_err(|e| StoreError::Invalid(e.to_string()))?;
        let (tnum, tden) = match value.threshold {
            Some(t) => (Some(t.numer()), Some(t.denom())),
            None => (None, None),
        };
        if let Some(old) = Self::fetch(conn, &value.id)? {
            let graded = count(conn, "SELECT COUNT(*) FROM grades WHERE assignment_id = ?1", [value.id.as_str()])? > 0;
            if graded && (old.rubric_id != value.rubric_id || old.course_id != value.course_id) {
                return Err(StoreError::ForeignKeyViolation(format!(
                    "assignment {} has grades; its rubric and course are fixed",
                    value.id
                )));
            }
            conn.execute(
                "UPDATE assignments SET course_id = ?2, name = ?3, rubric_id = ?4, threshold_num = ?5, threshold_den = ?6
                 WHERE id = ?1",
                params![value.id.as_str(), value.course_id.as_str(), value.name, value.rubric_id.as_str(), tnum, tden],
            )?;
            return Ok(Saved::Updated);
        }
        conn.execute(
            "INSERT INTO assignments (id, course_id, name, rubric_id, threshold_num, threshold_den)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
            params![value.id.as_str(), value.course_id.as_str(), value.name, value.rubric_id.as_str(), tnum, tden],
        )?;
        Ok(Saved::Created)
    }

    fn remove(conn: &Connection, key: &Id) -> Result<Assignment> {
        let assignment = Self::fetch(conn, key)?.ok_or_else(|| not_found::<Self>(key))?;
        conn.execute("DELETE FROM assignments WHERE id = ?1", [key.as_str()])?;
        Ok(assignment)
    }
}

type AssignmentRaw = (Id, Id, String, Id, Option<i64>, Option<i64>);

pub(crate) fn assignment_raw(row: &Row<'_>) -> rusqlite::Result<AssignmentRaw> {
    Ok((id_col(row, 0)?, id_col(row, 1)?, row.get(2)?, id_col(row, 3)?, row.get(4)?, row.get(5)?))
}

pub(crate) fn assignment_from_raw(raw: AssignmentRaw) -> Result<Assignment> {
    let (id, course_id, name, rubric_id, tnum, tden) = raw;
    let threshold = match (tnum, tden) {
        (Some(n), Some(d)) => Some(score_from(n, d)?),
        (None, None) => None,
        _ => return Err(StoreError::Corrupt(format!("assignment {id} has a partial threshold"))),
    };
    Ok(Assignment { id, course_id, name, rubric_id, threshold })
}

impl Entity for GradeRecord {
    type Key = Id;
    const KIND: &'static str = "grade";

    fn key(&self) -> Id {
        self.id.clone()
    }

    fn fetch(conn: &Connection, key: &Id) -> Result<Option<GradeRecord>> {
        let raw = conn.query_row(&format!("{GRADE_SELECT} WHERE id = ?1"), [key.as_str()], grade_raw).optional()?;
        raw.map(|raw| grade_from_raw(conn, raw)).transpose()
    }

    fn fetch_all(conn: &Connection) -> Result<Vec<GradeRecord>> {
        let mut stmt = conn.prepare(&format!("{GRADE_SELECT} ORDER BY rowid"))?;
        let raw = collect(stmt.query_map([], grade_raw)?)?;
        raw.into_iter().map(|raw| grade_from_raw(conn, raw)).collect()
    }

    /// Upserts on (assignment, student): an existing grade for the pair is
    /// replaced. The record must be consistent with the assignment's rubric
    /// and the student must be on the class roster.
    fn save(conn: &Connection, _actor: &Actor, value: &GradeRecord) -> Result<Saved> {
        let assignment = Assignment::fetch(conn, &value.assignment_id)?.ok_or_else(|| {
            StoreError::ForeignKeyViolation(format!("assignment {} does not exist", value.assignment_id))
        })?;
        let class_id: String = conn.query_row(
            "SELECT class_id FROM courses WHERE id = ?1",
            [assignment.course_id.as_str()],
            |row| row.get(0),
        )?;
        let enrolled = count(
            conn,
            "SELECT COUNT(*) FROM class_students WHERE class_id = ?1 AND student_id = ?2",
            [class_id.as_str(), value.student_id.as_str()],
        )?;
        if enrolled == 0 {
            return Err(StoreError::StudentNotEnrolled(value.student_id.clone()));
        }
        let rubric = Rubric::fetch(conn, &assignment.rubric_id)?
            .ok_or_else(|| StoreError::Corrupt(format!("rubric {} is missing", assignment.rubric_id)))?;
        check_grade(value, &rubric).map_err(StoreError::Invalid)?;

        let replaced = conn.execute(
            "DELETE FROM grades WHERE assignment_id = ?1 AND student_id = ?2",
            [value.assignment_id.as_str(), value.student_id.as_str()],
        )? > 0;
        conn.execute(
            "INSERT INTO grades (id, assignment_id, student_id, total_num, total_den, max_num, max_den, graded_at, comment)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9)",
            params![
                value.id.as_str(),
                value.assignment_id.as_str(),
                value.student_id.as_str(),
                value.total.numer(),
                value.total.denom(),
                value.max_score.numer(),
                value.max_score.denom(),
                ts_to_sql(&value.graded_at),
                value.comment
            ],
        )?;
        let mut stmt = conn.prepare("INSERT INTO grade_selections (grade_id, criterion, level) VALUES (?1, ?2, ?3)")?;
        for (criterion, level) in &value.selections {
            stmt.execute(params![value.id.as_str(), criterion, level])?;
        }
        Ok(if replaced { Saved::Updated } else { Saved::Created })
    }

    fn remove(conn: &Connection, key: &Id) -> Result<GradeRecord> {
        let grade = Self::fetch(conn, key)?.ok_or_else(|| not_found::<Self>(key))?;
        conn.execute("DELETE FROM grades WHERE id = ?1", [key.as_str()])?;
        Ok(grade)
    }

    fn audit_kind(saved: Saved) -> AuditKind {
        match saved {
            Saved::Created => AuditKind::GradeCreated,
            Saved::Updated => AuditKind::GradeReplaced,
        }
    }
}

/// Checks selections, total and maximum of `grade` against `rubric`.
pub(crate) fn check_grade(grade: &GradeRecord, rubric: &Rubric) -> std::result::Result<(), String> {
    if let Some(unknown) = grade.selections.keys().find(|c| rubric.criterion(c).is_none()) {
        return Err(format!("grade {} selects unknown criterion {unknown:?}", grade.id));
    }
    let total = grade.recompute_total(rubric).map_err(|e| format!("grade {}: {e}", grade.id))?;
    if total != grade.total {
        return Err(format!("grade {} total {} does not match selections ({total})", grade.id, grade.total));
    }
    if grade.max_score != rubric.max_score() {
        return Err(format!("grade {} maximum {} does not match rubric ({})", grade.id, grade.max_score, rubric.max_score()));
    }
    Ok(())
}

pub(crate) const GRADE_SELECT: &str =
    "SELECT id, assignment_id, student_id, total_num, total_den, max_num, max_den, graded_at, comment FROM grades";

type GradeRaw = (Id, Id, Id, i64, i64, i64, i64, String, String);

pub(crate) fn grade_raw(row: &Row<'_>) -> rusqlite::Result<GradeRaw> {
    Ok((
        id_col(row, 0)?,
        id_col(row, 1)?,
        id_col(row, 2)?,
        row.get(3)?,
        row.get(4)?,
        row.get(5)?,
        row.get(6)?,
        row.get(7)?,
        row.get(8)?,
    ))
}

pub(crate) fn grade_from_raw(conn: &Connection, raw: GradeRaw) -> Result<GradeRecord> {
    let (id, assignment_id, student_id, tn, td, mn, md, graded_at, comment) = raw;
    let mut stmt = conn.prepare_cached("SELECT criterion, level FROM grade_selections WHERE grade_id = ?1")?;
    let selections = stmt
        .query_map([id.as_str()], |row| Ok((row.get::<_, String>(0)?, row.get::<_, String>(1)?)))?
        .collect::<rusqlite::Result<BTreeMap<_, _>>>()?;
    Ok(GradeRecord {
        id,
        assignment_id,
        student_id,
        selections,
        total: score_from(tn, td)?,
        max_score: score_from(mn, md)?,
        graded_at: ts_from_sql(&graded_at)?,
        comment,
    })
}

/// Attendance is keyed by class and calendar date.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttendanceKey {
    pub class_id: Id,
    pub date: NaiveDate,
}

impl fmt::Display for AttendanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.class_id, self.date)
    }
}

impl Entity for AttendanceRecord {
    type Key = AttendanceKey;
    const KIND: &'static str = "attendance";

    fn key(&self) -> AttendanceKey {
        AttendanceKey { class_id: self.class_id.clone(), date: self.date }
    }

    fn fetch(conn: &Connection, key: &AttendanceKey) -> Result<Option<AttendanceRecord>> {
        let date = key.date.to_string();
        let found = conn
            .query_row(
                "SELECT 1 FROM attendance WHERE class_id = ?1 AND date = ?2",
                [key.class_id.as_str(), date.as_str()],
                |_| Ok(()),
            )
            .optional()?;
        if found.is_none() {
            return Ok(None);
        }
        let mut stmt = conn.prepare_cached(
            "SELECT student_id, present FROM attendance_statuses WHERE class_id = ?1 AND date = ?2",
        )?;
        let statuses = stmt
            .query_map([key.class_id.as_str(), date.as_str()], |row| {
                let status = if row.get::<_, bool>(1)? { AttendanceStatus::Present } else { AttendanceStatus::Absent };
                Ok((id_col(row, 0)?, status))
            })?
            .collect::<rusqlite::Result<BTreeMap<_, _>>>()?;
        Ok(Some(AttendanceRecord { class_id: key.class_id.clone(), date: key.date, statuses }))
    }

    fn fetch_all(conn: &Connection) -> Result<Vec<AttendanceRecord>> {
        let mut stmt = conn.prepare("SELECT class_id, date FROM attendance ORDER BY class_id, date")?;
        let raw = collect(stmt.query_map([], |row| Ok((id_col(row, 0)?, row.get::<_, String>(1)?)))?)?;
        raw.into_iter()
            .map(|(class_id, date)| {
                let date = parse_date(&date)?;
                let key = AttendanceKey { class_id, date };
                Self::fetch(conn, &key)?.ok_or_else(|| not_found::<Self>(&key))
            })
            .collect()
    }

    fn save(conn: &Connection, _actor: &Actor, value: &AttendanceRecord) -> Result<Saved> {
        let class = Class::fetch(conn, &value.class_id)?.ok_or_else(|| StoreError::UnknownClass(value.class_id.clone()))?;
        if let Some(student) = value.statuses.keys().find(|s| !class.is_enrolled(s)) {
            return Err(StoreError::StudentNotEnrolled(student.clone()));
        }
        let date = value.date.to_string();
        let replaced = conn.execute(
            "DELETE FROM attendance WHERE class_id = ?1 AND date = ?2",
            [value.class_id.as_str(), date.as_str()],
        )? > 0;
        conn.execute(
            "INSERT INTO attendance (class_id, date) VALUES (?1, ?2)",
            [value.class_id.as_str(), date.as_str()],
        )?;
        let mut stmt = conn.prepare(
            "INSERT INTO attendance_statuses (class_id, date, student_id, present) VALUES (?1, ?2, ?3, ?4)",
        )?;
        for (student, status) in &value.statuses {
            stmt.execute(params![
                value.class_id.as_str(),
                date,
                student.as_str(),
                *status == AttendanceStatus::Present
            ])?;
        }
        Ok(if replaced { Saved::Updated } else { Saved::Created })
    }

    fn remove(conn: &Connection, key: &AttendanceKey) -> Result<AttendanceRecord> {
        let record = Self::fetch(conn, key)?.ok_or_else(|| not_found::<Self>(key))?;
        conn.execute(
            "DELETE FROM attendance WHERE class_id = ?1 AND date = ?2",
            [key.class_id.as_str(), key.date.to_string().as_str()],
        )?;
        Ok(record)
    }

    fn audit_kind(_saved: Saved) -> AuditKind {
        AuditKind::AttendanceRecorded
    }
}

pub(crate) fn parse_date(text: &str) -> Result<NaiveDate> {
    text.parse().map_err(|e| StoreError::Corrupt(format!("date {text:?}: {e}")))
}

impl Entity for Note {
    type Key = Id;
    const KIND: &'static str = "note";

    fn key(&self) -> Id {
        self.id.clone()
    }

    fn fetch(conn: &Connection, key: &Id) -> Result<Option<Note>> {
        let raw = conn
            .query_row(
                "SELECT id, owner_id, title, body, created_at FROM notes WHERE id = ?1",
                [key.as_str()],
                note_raw,
            )
            .optional()?;
        raw.map(note_from_raw).transpose()
    }

    fn fetch_all(conn: &Connection) -> Result<Vec<Note>> {
        let mut stmt = conn.prepare("SELECT id, owner_id, title, body, created_at FROM notes ORDER BY rowid")?;
        let raw = collect(stmt.query_map([], note_raw)?)?;
        raw.into_iter().map(note_from_raw).collect()
    }

    fn save(conn: &Connection, _actor: &Actor, value: &Note) -> Result<Saved> {
        value.validate().map_err(|e| StoreError::Invalid(e.to_string()))?;
        let updated = conn.execute(
            "UPDATE notes SET owner_id = ?2, title = ?3, body = ?4, created_at = ?5 WHERE id = ?1",
            params![value.id.as_str(), value.owner_id.as_str(), value.title, value.body, ts_to_sql(&value.created_at)],
        )?;
        if updated > 0 {
            return Ok(Saved::Updated);
        }
        conn.execute(
            "INSERT INTO notes (id, owner_id, title, body, created_at) VALUES (?1, ?2, ?3, ?4, ?5)",
            params![value.id.as_str(), value.owner_id.as_str(), value.title, value.body, ts_to_sql(&value.created_at)],
        )?;
        Ok(Saved::Created)
    }

    fn remove(conn: &Connection, key: &Id) -> Result<Note> {
        let note = Self::fetch(conn, key)?.ok_or_else(|| not_found::<Self>(key))?;
        conn.execute("DELETE FROM notes WHERE id = ?1", [key.as_str()])?;
        Ok(note)
    }
}

type NoteRaw = (Id, Id, String, String, String);

pub(crate) fn note_raw(row: &Row<'_>) -> rusqlite::Result<NoteRaw> {
    Ok((id_col(row, 0)?, id_col(row, 1)?, row.get(2)?, row.get(3)?, row.get(4)?))
}

pub(crate) fn note_from_raw(raw: NoteRaw) -> Result<Note> {
    let (id, owner_id, title, body, created_at) = raw;
    Ok(Note { id, owner_id, title, body, created_at: ts_from_sql(&created_at)? })
}
