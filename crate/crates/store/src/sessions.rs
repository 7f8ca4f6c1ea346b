//! Login sessions. Only a digest of each token is stored.

use chrono::{DateTime, Utc};
use rubrics_core::domain::User;
use rubrics_core::Id;
use rusqlite::{params, OptionalExtension};

use crate::entities::user_row;
use crate::{ts_from_sql, ts_to_sql, Result, Store};

impl Store {
    /// Records a session for `user_id` identified by `token_hash`.
    pub fn create_session(&self, token_hash: &str, user_id: &Id, expires_at: DateTime<Utc>) -> Result<()> {
        let mut conn = self.writer.lock().unwrap_or_else(|p| p.into_inner());
        let tx = conn.transaction()?;
        tx.execute("DELETE FROM sessions WHERE expires_at <= ?1", [ts_to_sql(&Utc::now())])?;
        tx.execute(
            "INSERT INTO sessions (token_hash, user_id, expires_at) VALUES (?1, ?2, ?3)",
            params![token_hash, user_id.as_str(), ts_to_sql(&expires_at)],
        )?;
        tx.commit()?;
        Ok(())
    }

    /// The user owning an unexpired session, if any.
    pub fn session_user(&self, token_hash: &str, now: DateTime<Utc>) -> Result<Option<User>> {
        self.read(|conn| {
            let found = conn
                .query_row(
                    "SELECT u.id, u.email, u.display_name, u.credential, s.expires_at
                     FROM sessions s JOIN users u ON u.id = s.user_id WHERE s.token_hash = ?1",
                    [token_hash],
                    |row| Ok((user_row(row)?, row.get::<_, String>(4)?)),
                )
                .optional()?;
            match found {
                Some((user, expires_at)) if ts_from_sql(&expires_at)? > now => Ok(Some(user)),
                _ => Ok(None),
            }
        })
    }

    /// Returns whether a session was removed.
    pub fn revoke_session(&self, token_hash: &str) -> Result<bool> {
        let conn = self.writer.lock().unwrap_or_else(|p| p.into_inner());
        Ok(conn.execute("DELETE FROM sessions WHERE token_hash = ?1", [token_hash])? > 0)
    }
}
