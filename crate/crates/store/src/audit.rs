//! Append-only audit log and grade replay.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rubrics_core::grading::GradeRecord;
use rubrics_core::Id;
use rusqlite::{params, Connection};
use serde::Serialize;

use crate::{ts_from_sql, ts_to_sql, Result, Store, StoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditKind {
    EntityCreated,
    EntityUpdated,
    EntityDeleted,
    GradeCreated,
    GradeReplaced,
    AttendanceRecorded,
}

impl AuditKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AuditKind::EntityCreated => "entity_created",
            AuditKind::EntityUpdated => "entity_updated",
            AuditKind::EntityDeleted => "entity_deleted",
            AuditKind::GradeCreated => "grade_created",
            AuditKind::GradeReplaced => "grade_replaced",
            AuditKind::AttendanceRecorded => "attendance_recorded",
        }
    }
}

impl fmt::Display for AuditKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AuditKind {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<AuditKind> {
        Ok(match s {
            "entity_created" => AuditKind::EntityCreated,
            "entity_updated" => AuditKind::EntityUpdated,
            "entity_deleted" => AuditKind::EntityDeleted,
            "grade_created" => AuditKind::GradeCreated,
            "grade_replaced" => AuditKind::GradeReplaced,
            "attendance_recorded" => AuditKind::AttendanceRecorded,
            other => return Err(StoreError::Corrupt(format!("unknown audit kind {other:?}"))),
        })
    }
}

/// One audit log entry. `payload` is `{"entity": <kind>, "value": <snapshot>}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditEvent {
    pub seq: i64,
    pub at: DateTime<Utc>,
    pub actor: String,
    pub kind: AuditKind,
    pub payload: serde_json::Value,
}

impl AuditEvent {
    pub fn entity(&self) -> Option<&str> {
        self.payload.get("entity").and_then(|v| v.as_str())
    }

    pub fn value(&self) -> Option<&serde_json::Value> {
        self.payload.get("value")
    }
}

pub(crate) fn append(
    conn: &Connection,
    at: DateTime<Utc>,
    actor: &str,
    kind: AuditKind,
    payload: &serde_json::Value,
) -> Result<()> {
    conn.execute(
        "INSERT INTO audit_log (at, actor, kind, payload) VALUES (?1, ?2, ?3, ?4)",
        params![ts_to_sql(&at), actor, kind.as_str(), payload.to_string()],
    )?;
    Ok(())
}

pub(crate) fn read_log(conn: &Connection) -> Result<Vec<AuditEvent>> {
    let mut stmt = conn.prepare("SELECT seq, at, actor, kind, payload FROM audit_log ORDER BY seq")?;
    let raw = stmt
        .query_map([], |row| {
            Ok((
                row.get::<_, i64>(0)?,
                row.get::<_, String>(1)?,
                row.get::<_, String>(2)?,
                row.get::<_, String>(3)?,
                row.get::<_, String>(4)?,
            ))
        })?
        .collect::<rusqlite::Result<Vec<_>>>()?;
    raw.into_iter()
        .map(|(seq, at, actor, kind, payload)| {
            Ok(AuditEvent {
                seq,
                at: ts_from_sql(&at)?,
                actor,
                kind: kind.parse()?,
                payload: serde_json::from_str(&payload)
                    .map_err(|e| StoreError::Corrupt(format!("audit payload {seq}: {e}")))?,
            })
        })
        .collect()
}

impl Store {
    /// The full audit log in append order.
    pub fn audit_log(&self) -> Result<Vec<AuditEvent>> {
        self.read(read_log)
    }
}

/// Rebuilds the current grade table, keyed by (assignment, student), from
/// audit events alone.
pub fn replay_grades(events: &[AuditEvent]) -> Result<BTreeMap<(Id, Id), GradeRecord>> {
    let mut table = BTreeMap::new();
    for event in events {
        if event.entity() != Some("grade") {
            continue;
        }
        let value = event.value().ok_or_else(|| StoreError::Corrupt(format!("audit event {} has no value", event.seq)))?;
        let grade: GradeRecord = serde_json::from_value(value.clone())
            .map_err(|e| StoreError::Corrupt(format!("audit event {}: {e}", event.seq)))?;
        let key = (grade.assignment_id.clone(), grade.student_id.clone());
        match event.kind {
            AuditKind::GradeCreated | AuditKind::GradeReplaced => {
                table.insert(key, grade);
            }
            AuditKind::EntityDeleted => {
                table.remove(&key);
            }
            other => {
                return Err(StoreError::Corrupt(format!("audit event {} has kind {other} for a grade", event.seq)));
            }
        }
    }
    Ok(table)
}
