//! Full-scan consistency check.

use std::collections::{BTreeMap, HashMap};

use rubrics_core::domain::{Assignment, AttendanceRecord, Class, Course, Note, Rubric};
use rubrics_core::grading::GradeRecord;
use rubrics_core::Id;
use rusqlite::Connection;

use crate::audit::{read_log, replay_grades};
use crate::entities::{check_grade, Entity};
use crate::{Result, Store};

impl Store {
    /// Scans the whole database and returns every violation found. An empty
    /// list means the store is consistent.
    pub fn check_integrity(&self) -> Result<Vec<String>> {
        self.read(check)
    }
}

fn check(conn: &Connection) -> Result<Vec<String>> {
    let mut problems = Vec::new();

    let quick: String = conn.query_row("PRAGMA quick_check", [], |row| row.get(0))?;
    if quick != "ok" {
        problems.push(format!("sqlite quick_check: {quick}"));
    }
    let mut stmt = conn.prepare("PRAGMA foreign_key_check")?;
    let dangling = stmt
        .query_map([], |row| Ok((row.get::<_, String>(0)?, row.get::<_, Option<i64>>(1)?, row.get::<_, String>(2)?)))?
        .collect::<rusqlite::Result<Vec<_>>>()?;
    for (table, rowid, parent) in dangling {
        problems.push(format!("{table} row {rowid:?} references a missing {parent} row"));
    }

    let rubrics: HashMap<Id, Rubric> = Rubric::fetch_all(conn)?.into_iter().map(|r| (r.id().clone(), r)).collect();
    let classes: HashMap<Id, Class> = Class::fetch_all(conn)?.into_iter().map(|c| (c.id.clone(), c)).collect();
    let courses: HashMap<Id, Course> = Course::fetch_all(conn)?.into_iter().map(|c| (c.id.clone(), c)).collect();
    let assignments: HashMap<Id, Assignment> =
        Assignment::fetch_all(conn)?.into_iter().map(|a| (a.id.clone(), a)).collect();

    for class in classes.values() {
        if let Err(e) = class.validate() {
            problems.push(format!("class {}: {e}", class.id));
        }
    }
    for assignment in assignments.values() {
        match rubrics.get(&assignment.rubric_id) {
            Some(rubric) => {
                if let Err(e) = assignment.validate(rubric) {
                    problems.push(format!("assignment {}: {e}", assignment.id));
                }
            }
            None => problems.push(format!("assignment {} has no rubric", assignment.id)),
        }
    }

    let grades = GradeRecord::fetch_all(conn)?;
    let mut table = BTreeMap::new();
    for grade in &grades {
        let class = assignments
            .get(&grade.assignment_id)
            .and_then(|a| courses.get(&a.course_id))
            .and_then(|c| classes.get(&c.class_id));
        match class {
            Some(class) if !class.is_enrolled(&grade.student_id) => {
                problems.push(format!("grade {} is for student {} outside the roster", grade.id, grade.student_id));
            }
            Some(_) => {}
            None => problems.push(format!("grade {} has no assignment, course or class", grade.id)),
        }
        if let Some(rubric) = assignments.get(&grade.assignment_id).and_then(|a| rubrics.get(&a.rubric_id)) {
            if let Err(e) = check_grade(grade, rubric) {
                problems.push(e);
            }
        }
        table.insert((grade.assignment_id.clone(), grade.student_id.clone()), grade.clone());
    }

    for record in AttendanceRecord::fetch_all(conn)? {
        match classes.get(&record.class_id) {
            Some(class) => {
                for student in record.statuses.keys().filter(|s| !class.is_enrolled(s)) {
                    problems.push(format!(
                        "attendance {}@{} lists student {student} outside the roster",
                        record.class_id, record.date
                    ));
                }
            }
            None => problems.push(format!("attendance for missing class {}", record.class_id)),
        }
    }

    for note in Note::fetch_all(conn)? {
        if let Err(e) = note.validate() {
            problems.push(format!("note {}: {e}", note.id));
        }
    }

    let events = read_log(conn)?;
    if events.windows(2).any(|w| w[0].seq >= w[1].seq) {
        problems.push("audit log sequence is not strictly increasing".into());
    }
    match replay_grades(&events) {
        Ok(replayed) if replayed != table => problems.push("audit replay disagrees with the grade table".into()),
        Ok(_) => {}
        Err(e) => problems.push(format!("audit replay failed: {e}")),
    }

    Ok(problems)
}
