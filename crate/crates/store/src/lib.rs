//! Embedded single-file store for the gradebook.
//!
//! One SQLite database file holds every entity plus an append-only audit
//! log. Writes serialize through a single writer connection inside immediate
//! transactions; reads use a small pool of read-only connections and see
//! committed snapshots (WAL mode).
//!
//! ```no_run
//! use rubrics_store::{Actor, Store};
//! use rubrics_core::domain::builtin_rubrics;
//!
//! let store = Store::open("gradebook.db")?;
//! store.seed_rubrics(&builtin_rubrics())?;
//! let rubrics = store.list::<rubrics_core::domain::Rubric>()?;
//! # Ok::<(), rubrics_store::StoreError>(())
//! ```

mod audit;
mod entities;
mod integrity;
mod queries;
mod schema;
mod sessions;

use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use chrono::{DateTime, Utc};
use rubrics_core::domain::{AttendanceRecord, AttendanceStatus, Class, Id, Rubric};
use rusqlite::{Connection, OpenFlags, TransactionBehavior};
use thiserror::Error;

pub use audit::{replay_grades, AuditEvent, AuditKind};
pub use entities::{AttendanceKey, Entity, Saved};
pub use queries::AssignmentContext;
pub use schema::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("{kind} {key} not found")]
    NotFound { kind: &'static str, key: String },
    #[error("foreign key violation: {0}")]
    ForeignKeyViolation(String),
    #[error("unique constraint violated: {0}")]
    UniqueViolation(String),
    #[error("database schema version {found} is newer than supported version {supported}")]
    SchemaTooNew { found: u32, supported: u32 },
    #[error("class {0} does not exist")]
    UnknownClass(Id),
    #[error("student {0} is not enrolled in the class")]
    StudentNotEnrolled(Id),
    #[error("invalid value: {0}")]
    Invalid(String),
    #[error("stored data is corrupt: {0}")]
    Corrupt(String),
    #[error("I/O failure: {0}")]
    IoFailure(String),
    #[error("database error: {0}")]
    Sqlite(String),
}

impl From<rusqlite::Error> for StoreError {
    fn from(e: rusqlite::Error) -> Self {
        use rusqlite::ffi;
        if let rusqlite::Error::SqliteFailure(failure, message) = &e {
            let message = message.clone().unwrap_or_else(|| e.to_string());
            match failure.extended_code {
                ffi::SQLITE_CONSTRAINT_FOREIGNKEY => return StoreError::ForeignKeyViolation(message),
                ffi::SQLITE_CONSTRAINT_UNIQUE | ffi::SQLITE_CONSTRAINT_PRIMARYKEY => {
                    return StoreError::UniqueViolation(message)
                }
                _ => {}
            }
            match failure.code {
                ffi::ErrorCode::CannotOpen
                | ffi::ErrorCode::ReadOnly
                | ffi::ErrorCode::SystemIoFailure
                | ffi::ErrorCode::DiskFull
                | ffi::ErrorCode::PermissionDenied
                | ffi::ErrorCode::NotADatabase => return StoreError::IoFailure(message),
                _ => {}
            }
        }
        StoreError::Sqlite(e.to_string())
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

/// Who performs a write; recorded in the audit log and used as the owner of
/// newly created rubrics and students.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Actor {
    System,
    User(Id),
}

impl Actor {
    pub fn user_id(&self) -> Option<&Id> {
        match self {
            Actor::System => None,
            Actor::User(id) => Some(id),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            Actor::System => "system",
            Actor::User(id) => id.as_str(),
        }
    }
}

const READER_POOL: usize = 8;

/// Handle to one database file. Shareable across threads.
pub struct Store {
    path: PathBuf,
    writer: Mutex<Connection>,
    readers: Mutex<Vec<Connection>>,
    schema_version: u32,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("path", &self.path).field("schema_version", &self.schema_version).finish()
    }
}

/// Opens or creates the database at `path`.
pub fn open_store(path: impl AsRef<Path>) -> Result<Store> {
    Store::open(path)
}

impl Store {
    pub fn open(path: impl AsRef<Path>) -> Result<Store> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| StoreError::IoFailure(e.to_string()))?;
        }
        let mut conn = Connection::open(&path)?;
        conn.busy_timeout(Duration::from_secs(5))?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        conn.pragma_update(None, "foreign_keys", "ON")?;
        conn.pragma_update(None, "synchronous", "NORMAL")?;
        let schema_version = migrate(&mut conn)?;
        Ok(Store { path, writer: Mutex::new(conn), readers: Mutex::new(Vec::new()), schema_version })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn schema_version(&self) -> u32 {
        self.schema_version
    }

    /// Runs `f` against a consistent read snapshot.
    pub fn read<T>(&self, f: impl FnOnce(&Connection) -> Result<T>) -> Result<T> {
        let conn = match self.readers.lock().unwrap_or_else(|p| p.into_inner()).pop() {
            Some(conn) => conn,
            None => {
                let conn = Connection::open_with_flags(
                    &self.path,
                    OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX | OpenFlags::SQLITE_OPEN_URI,
                )?;
                conn.busy_timeout(Duration::from_secs(5))?;
                conn
            }
        };
        let result = (|| {
            let tx = conn.unchecked_transaction()?;
            let out = f(&tx)?;
            tx.finish()?;
            Ok(out)
        })();
        let mut pool = self.readers.lock().unwrap_or_else(|p| p.into_inner());
        if pool.len() < READER_POOL {
            pool.push(conn);
        }
        result
    }

    /// Runs `f` in one immediate write transaction. Nothing is committed if
    /// `f` fails.
    pub fn write<T>(&self, actor: &Actor, f: impl FnOnce(&mut WriteTx<'_>) -> Result<T>) -> Result<T> {
        let mut conn = self.writer.lock().unwrap_or_else(|p| p.into_inner());
        let tx = conn.transaction_with_behavior(TransactionBehavior::Immediate)?;
        let mut wtx = WriteTx { tx, actor: actor.clone(), at: Utc::now() };
        let out = f(&mut wtx)?;
        wtx.tx.commit()?;
        Ok(out)
    }

    pub fn get<E: Entity>(&self, key: &E::Key) -> Result<Option<E>> {
        self.read(|conn| E::fetch(conn, key))
    }

    /// Like [`Store::get`] but a missing entity is an error.
    pub fn require<E: Entity>(&self, key: &E::Key) -> Result<E> {
        self.get::<E>(key)?.ok_or_else(|| StoreError::NotFound { kind: E::KIND, key: key.to_string() })
    }

    pub fn list<E: Entity>(&self) -> Result<Vec<E>> {
        self.read(|conn| E::fetch_all(conn))
    }

    pub fn put<E: Entity>(&self, actor: &Actor, value: &E) -> Result<Saved> {
        self.write(actor, |tx| tx.put(value))
    }

    pub fn delete<E: Entity>(&self, actor: &Actor, key: &E::Key) -> Result<E> {
        self.write(actor, |tx| tx.delete::<E>(key))
    }

    /// Upserts the attendance of `class_id` on `date`.
    pub fn record_attendance(
        &self,
        actor: &Actor,
        class_id: &Id,
        date: chrono::NaiveDate,
        statuses: std::collections::BTreeMap<Id, AttendanceStatus>,
    ) -> Result<AttendanceRecord> {
        self.write(actor, |tx| tx.record_attendance(class_id, date, statuses))
    }

    /// Inserts any of `rubrics` not yet stored. Existing ones are left alone.
    pub fn seed_rubrics(&self, rubrics: &[Rubric]) -> Result<usize> {
        self.write(&Actor::System, |tx| {
            let mut inserted = 0;
            for rubric in rubrics {
                if tx.get::<Rubric>(rubric.id())?.is_none() {
                    tx.put(rubric)?;
                    inserted += 1;
                }
            }
            Ok(inserted)
        })
    }
}

/// An open write transaction. Every mutation appends to the audit log.
pub struct WriteTx<'conn> {
    tx: rusqlite::Transaction<'conn>,
    actor: Actor,
    at: DateTime<Utc>,
}

impl WriteTx<'_> {
    pub fn connection(&self) -> &Connection {
        &self.tx
    }

    pub fn actor(&self) -> &Actor {
        &self.actor
    }

    pub fn get<E: Entity>(&self, key: &E::Key) -> Result<Option<E>> {
        E::fetch(&self.tx, key)
    }

    pub fn require<E: Entity>(&self, key: &E::Key) -> Result<E> {
        self.get::<E>(key)?.ok_or_else(|| StoreError::NotFound { kind: E::KIND, key: key.to_string() })
    }

    pub fn put<E: Entity>(&mut self, value: &E) -> Result<Saved> {
        let saved = E::save(&self.tx, &self.actor, value)?;
        self.append(E::audit_kind(saved), E::KIND, value)?;
        Ok(saved)
    }

    pub fn delete<E: Entity>(&mut self, key: &E::Key) -> Result<E> {
        let removed = E::remove(&self.tx, key)?;
        self.append(AuditKind::EntityDeleted, E::KIND, &removed)?;
        Ok(removed)
    }

    pub fn record_attendance(
        &mut self,
        class_id: &Id,
        date: chrono::NaiveDate,
        statuses: std::collections::BTreeMap<Id, AttendanceStatus>,
    ) -> Result<AttendanceRecord> {
        let class = self.get::<Class>(class_id)?.ok_or_else(|| StoreError::UnknownClass(class_id.clone()))?;
        let record = AttendanceRecord::new(&class, date, statuses).map_err(|e| match e {
            rubrics_core::domain::RosterError::StudentNotEnrolled(id) => StoreError::StudentNotEnrolled(id),
            other => StoreError::Invalid(other.to_string()),
        })?;
        self.put(&record)?;
        Ok(record)
    }

    fn append<E: Entity>(&self, kind: AuditKind, entity: &'static str, value: &E) -> Result<()> {
        let payload = serde_json::json!({ "entity": entity, "value": value.snapshot() });
        audit::append(&self.tx, self.at, self.actor.label(), kind, &payload)
    }
}

fn migrate(conn: &mut Connection) -> Result<u32> {
    let has_meta: bool = conn.query_row(
        "SELECT COUNT(*) FROM sqlite_master WHERE type = 'table' AND name = 'meta'",
        [],
        |row| row.get::<_, i64>(0).map(|n| n > 0),
    )?;
    let current: u32 = if has_meta {
        let raw: Option<String> = conn
            .query_row("SELECT value FROM meta WHERE key = 'schema_version'", [], |row| row.get(0))
            .map(Some)
            .or_else(|e| if e == rusqlite::Error::QueryReturnedNoRows { Ok(None) } else { Err(e) })?;
        raw.map(|v| v.parse().map_err(|_| StoreError::Corrupt(format!("schema version {v:?}")))).transpose()?.unwrap_or(0)
    } else {
        0
    };
    if current > SCHEMA_VERSION {
        return Err(StoreError::SchemaTooNew { found: current, supported: SCHEMA_VERSION });
    }
    if current < SCHEMA_VERSION {
        let tx = conn.transaction_with_behavior(TransactionBehavior::Immediate)?;
        for sql in &schema::MIGRATIONS[current as usize..] {
            tx.execute_batch(sql)?;
        }
        tx.execute(
            "INSERT INTO meta (key, value) VALUES ('schema_version', ?1)
             ON CONFLICT(key) DO UPDATE SET value = excluded.value",
            [SCHEMA_VERSION.to_string()],
        )?;
        tx.commit()?;
    }
    Ok(SCHEMA_VERSION)
}

pub(crate) fn ts_to_sql(at: &DateTime<Utc>) -> String {
    at.to_rfc3339_opts(chrono::SecondsFormat::Nanos, true)
}

pub(crate) fn ts_from_sql(text: &str) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(text)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| StoreError::Corrupt(format!("timestamp {text:?}: {e}")))
}
