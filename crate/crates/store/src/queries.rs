//! Scoped lookups used by the service layer.

use rubrics_core::domain::{Assignment, AttendanceRecord, Class, Course, Note, Rubric, Student, User};
use rubrics_core::grading::GradeRecord;
use rubrics_core::Id;
use rusqlite::{Connection, OptionalExtension};

use crate::entities::{
    assignment_from_raw, assignment_raw, course_row, grade_from_raw, grade_raw, note_from_raw, note_raw, parse_date,
    roster, student_row, user_row, AttendanceKey, Entity, GRADE_SELECT,
};
use crate::{Result, Store};

fn ids(conn: &Connection, sql: &str, key: &str) -> Result<Vec<Id>> {
    let mut stmt = conn.prepare(sql)?;
    let rows = stmt.query_map([key], |row| row.get::<_, String>(0).map(Id::from))?;
    Ok(rows.collect::<rusqlite::Result<Vec<_>>>()?)
}

/// An assignment together with the course and class it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentContext {
    pub assignment: Assignment,
    pub course: Course,
    pub class: Class,
}

impl Store {
    /// Case-insensitive lookup by email.
    pub fn user_by_email(&self, email: &str) -> Result<Option<User>> {
        self.read(|conn| {
            Ok(conn
                .query_row(
                    "SELECT id, email, display_name, credential FROM users WHERE email = ?1",
                    [email.trim()],
                    user_row,
                )
                .optional()?)
        })
    }

    pub fn classes_owned_by(&self, owner: &Id) -> Result<Vec<Class>> {
        self.read(|conn| {
            ids(conn, "SELECT id FROM classes WHERE owner_id = ?1 ORDER BY rowid", owner.as_str())?
                .iter()
                .filter_map(|id| Class::fetch(conn, id).transpose())
                .collect()
        })
    }

    pub fn courses_in_class(&self, class_id: &Id) -> Result<Vec<Course>> {
        self.read(|conn| {
            let mut stmt = conn.prepare("SELECT id, class_id, name FROM courses WHERE class_id = ?1 ORDER BY rowid")?;
            let rows = stmt.query_map([class_id.as_str()], course_row)?;
            Ok(rows.collect::<rusqlite::Result<Vec<_>>>()?)
        })
    }

    pub fn assignments_in_course(&self, course_id: &Id) -> Result<Vec<Assignment>> {
        self.read(|conn| {
            let mut stmt = conn.prepare(
                "SELECT id, course_id, name, rubric_id, threshold_num, threshold_den FROM assignments
                 WHERE course_id = ?1 ORDER BY rowid",
            )?;
            let raw = stmt.query_map([course_id.as_str()], assignment_raw)?.collect::<rusqlite::Result<Vec<_>>>()?;
            raw.into_iter().map(assignment_from_raw).collect()
        })
    }

    /// Current grades of one assignment, one per graded student.
    pub fn grades_for_assignment(&self, assignment_id: &Id) -> Result<Vec<GradeRecord>> {
        self.read(|conn| {
            let mut stmt = conn.prepare(&format!("{GRADE_SELECT} WHERE assignment_id = ?1 ORDER BY rowid"))?;
            let raw = stmt.query_map([assignment_id.as_str()], grade_raw)?.collect::<rusqlite::Result<Vec<_>>>()?;
            raw.into_iter().map(|raw| grade_from_raw(conn, raw)).collect()
        })
    }

    /// Students on the class roster, in roster order.
    pub fn students_in_class(&self, class_id: &Id) -> Result<Vec<Student>> {
        self.read(|conn| {
            let mut stmt = conn.prepare(
                "SELECT s.id, s.name, s.email FROM class_students cs JOIN students s ON s.id = cs.student_id
                 WHERE cs.class_id = ?1 ORDER BY cs.position",
            )?;
            let rows = stmt.query_map([class_id.as_str()], student_row)?;
            Ok(rows.collect::<rusqlite::Result<Vec<_>>>()?)
        })
    }

    /// Students created by `owner`.
    pub fn students_owned_by(&self, owner: &Id) -> Result<Vec<Student>> {
        self.read(|conn| {
            let mut stmt = conn.prepare("SELECT id, name, email FROM students WHERE owner_id = ?1 ORDER BY rowid")?;
            let rows = stmt.query_map([owner.as_str()], student_row)?;
            Ok(rows.collect::<rusqlite::Result<Vec<_>>>()?)
        })
    }

    pub fn student_owner(&self, student_id: &Id) -> Result<Option<Option<Id>>> {
        self.read(|conn| {
            Ok(conn
                .query_row("SELECT owner_id FROM students WHERE id = ?1", [student_id.as_str()], |row| {
                    row.get::<_, Option<String>>(0)
                })
                .optional()?
                .map(|owner| owner.map(Id::from)))
        })
    }

    /// Rubrics owned by `user` plus shared ones (predefined or system-owned).
    pub fn rubrics_visible_to(&self, user: &Id) -> Result<Vec<Rubric>> {
        self.read(|conn| {
            ids(
                conn,
                "SELECT id FROM rubrics WHERE predefined = 1 OR owner_id IS NULL OR owner_id = ?1 ORDER BY rowid",
                user.as_str(),
            )?
            .iter()
            .filter_map(|id| Rubric::fetch(conn, id).transpose())
            .collect()
        })
    }

    /// `None` if the rubric does not exist; `Some(None)` if it is shared.
    pub fn rubric_owner(&self, rubric_id: &Id) -> Result<Option<Option<Id>>> {
        self.read(|conn| {
            Ok(conn
                .query_row("SELECT owner_id, predefined FROM rubrics WHERE id = ?1", [rubric_id.as_str()], |row| {
                    Ok((row.get::<_, Option<String>>(0)?, row.get::<_, bool>(1)?))
                })
                .optional()?
                .map(|(owner, predefined)| if predefined { None } else { owner.map(Id::from) }))
        })
    }

    pub fn notes_owned_by(&self, owner: &Id) -> Result<Vec<Note>> {
        self.read(|conn| {
            let mut stmt = conn.prepare(
                "SELECT id, owner_id, title, body, created_at FROM notes WHERE owner_id = ?1 ORDER BY created_at, rowid",
            )?;
            let raw = stmt.query_map([owner.as_str()], note_raw)?.collect::<rusqlite::Result<Vec<_>>>()?;
            raw.into_iter().map(note_from_raw).collect()
        })
    }

    pub fn attendance_for_class(&self, class_id: &Id) -> Result<Vec<AttendanceRecord>> {
        self.read(|conn| {
            let mut stmt = conn.prepare("SELECT date FROM attendance WHERE class_id = ?1 ORDER BY date")?;
            let dates = stmt
                .query_map([class_id.as_str()], |row| row.get::<_, String>(0))?
                .collect::<rusqlite::Result<Vec<_>>>()?;
            dates
                .iter()
                .filter_map(|date| {
                    let key = match parse_date(date) {
                        Ok(date) => AttendanceKey { class_id: class_id.clone(), date },
                        Err(e) => return Some(Err(e)),
                    };
                    AttendanceRecord::fetch(conn, &key).transpose()
                })
                .collect()
        })
    }

    /// Resolves an assignment with its course and class in one snapshot.
    pub fn assignment_context(&self, assignment_id: &Id) -> Result<Option<AssignmentContext>> {
        self.read(|conn| {
            let Some(assignment) = Assignment::fetch(conn, assignment_id)? else { return Ok(None) };
            let Some(course) = Course::fetch(conn, &assignment.course_id)? else { return Ok(None) };
            let Some(class) = Class::fetch(conn, &course.class_id)? else { return Ok(None) };
            Ok(Some(AssignmentContext { assignment, course, class }))
        })
    }

    /// Student ids enrolled in `class_id`, in roster order.
    pub fn roster_of(&self, class_id: &Id) -> Result<Vec<Id>> {
        self.read(|conn| roster(conn, class_id))
    }
}
