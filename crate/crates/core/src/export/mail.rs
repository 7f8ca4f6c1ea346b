//! Feedback delivery through a pluggable mail transport.

use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use chrono::Utc;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::report::{Attachment, FeedbackDocument};
use crate::domain::{Id, Student};

/// A fully rendered message ready for a transport.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutgoingMessage {
    /// Stable per content; transports use it to drop duplicates.
    pub message_id: String,
    pub recipient: String,
    pub subject: String,
    /// HTML body.
    pub body: String,
    pub attachments: Vec<Attachment>,
    /// Caller reference, here the student id.
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Delivery {
    Sent { location: String },
    /// The transport already holds a message with this id.
    AlreadySent { location: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("message rejected: {0}")]
    Rejected(String),
    #[error("transport I/O failure: {0}")]
    Io(String),
}

pub trait MailTransport: Send + Sync {
    /// Must be idempotent per `(recipient, message_id)`.
    fn send(&self, message: &OutgoingMessage) -> Result<Delivery, TransportError>;
}

fn check_header(name: &str, value: &str) -> Result<(), TransportError> {
    if value.contains(['\r', '\n']) {
        return Err(TransportError::Rejected(format!("{name} contains a line break")));
    }
    Ok(())
}

/// Writes each message as a `.eml`-style text file into a directory instead
/// of sending it.
///
/// File names are `<UTC timestamp>-<reference>-<message id>.eml`.
#[derive(Debug)]
pub struct FileOutbox {
    dir: PathBuf,
    lock: Mutex<()>,
}

impl FileOutbox {
    pub fn new(dir: impl Into<PathBuf>) -> io::Result<FileOutbox> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(FileOutbox { dir, lock: Mutex::new(()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Delivered message files, sorted by name.
    pub fn messages(&self) -> io::Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "eml") {
                out.push(path);
            }
        }
        out.sort();
        Ok(out)
    }

    fn find(&self, message_id: &str) -> io::Result<Option<PathBuf>> {
        let suffix = format!("-{message_id}.eml");
        Ok(self.messages()?.into_iter().find(|p| {
            p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(&suffix))
        }))
    }
}

fn sanitize(text: &str) -> String {
    text.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn render_eml(message: &OutgoingMessage, date: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("Message-ID: <{}@rubrics.invalid>\r\n", message.message_id));
    out.push_str(&format!("Date: {date}\r\n"));
    out.push_str(&format!("To: {}\r\n", message.recipient));
    out.push_str(&format!("Subject: {}\r\n", message.subject));
    out.push_str(&format!("X-Reference: {}\r\n", message.reference));
    out.push_str("MIME-Version: 1.0\r\nContent-Type: text/html; charset=utf-8\r\n\r\n");
    out.push_str(&message.body);
    out.push_str("\r\n\r\n--- attachments ---\r\n");
    for a in &message.attachments {
        out.push_str(&format!(
            "{}; {}; {} bytes; sha256={}\r\n",
            a.filename,
            a.media_type,
            a.bytes.len(),
            hex::encode(Sha256::digest(&a.bytes))
        ));
    }
    out
}

impl MailTransport for FileOutbox {
    fn send(&self, message: &OutgoingMessage) -> Result<Delivery, TransportError> {
        check_header("recipient", &message.recipient)?;
        check_header("subject", &message.subject)?;
        let io_err = |e: io::Error| TransportError::Io(e.to_string());
        let _guard = self.lock.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(existing) = self.find(&message.message_id).map_err(io_err)? {
            return Ok(Delivery::AlreadySent { location: existing.display().to_string() });
        }
        let now = Utc::now();
        let name = format!(
            "{}-{}-{}.eml",
            now.format("%Y%m%dT%H%M%S%.3fZ"),
            sanitize(&message.reference),
            sanitize(&message.message_id)
        );
        let path = self.dir.join(&name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let mut file = fs::File::create(&tmp).map_err(io_err)?;
        file.write_all(render_eml(message, &now.to_rfc2822()).as_bytes()).map_err(io_err)?;
        file.sync_all().map_err(io_err)?;
        fs::rename(&tmp, &path).map_err(io_err)?;
        Ok(Delivery::Sent { location: path.display().to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SendError {
    #[error("student has no email address")]
    MissingEmail,
    #[error("student is not on the roster")]
    UnknownStudent,
    #[error(transparent)]
    TransportFailure(#[from] TransportError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StudentDelivery {
    pub student_id: Id,
    pub result: Result<Delivery, SendError>,
}

#[derive(Debug, Clone)]
pub struct SendOptions {
    /// Upper bound on concurrent transport calls.
    pub max_in_flight: usize,
    pub subject: String,
}

impl Default for SendOptions {
    fn default() -> Self {
        SendOptions { max_in_flight: 4, subject: "Your feedback".into() }
    }
}

/// Content-derived id: equal documents to the same recipient share an id.
pub fn message_id(doc: &FeedbackDocument, recipient: &str, subject: &str) -> String {
    let mut h = Sha256::new();
    for part in [doc.assignment_id.as_str(), doc.student_id.as_str(), recipient, subject, doc.body.as_str()] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    for a in &doc.attachments {
        h.update(a.filename.as_bytes());
        h.update(&a.bytes);
    }
    hex::encode(&h.finalize()[..16])
}

/// Sends each document to its student's email. Results follow roster order;
/// documents for students missing from the roster come last.
pub fn send_feedback(
    transport: &dyn MailTransport,
    docs: &[FeedbackDocument],
    roster: &[Student],
    options: &SendOptions,
) -> Vec<StudentDelivery> {
    let position = |id: &Id| roster.iter().position(|s| &s.id == id);
    let mut order: Vec<&FeedbackDocument> = docs.iter().collect();
    order.sort_by_key(|d| position(&d.student_id).unwrap_or(usize::MAX));

    let jobs: Vec<(Id, Result<OutgoingMessage, SendError>)> = order
        .iter()
        .map(|doc| {
            let message = match position(&doc.student_id).map(|i| &roster[i]) {
                None => Err(SendError::UnknownStudent),
                Some(Student { email: None, .. }) => Err(SendError::MissingEmail),
                Some(Student { email: Some(email), .. }) => Ok(OutgoingMessage {
                    message_id: message_id(doc, email, &options.subject),
                    recipient: email.clone(),
                    subject: options.subject.clone(),
                    body: doc.body.clone(),
                    attachments: doc.attachments.clone(),
                    reference: doc.student_id.to_string(),
                }),
            };
            (doc.student_id.clone(), message)
        })
        .collect();

    let results: Vec<Mutex<Option<Result<Delivery, SendError>>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = options.max_in_flight.max(1).min(jobs.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((_, job)) = jobs.get(i) else { break };
                let outcome = match job {
                    Ok(message) => transport.send(message).map_err(SendError::from),
                    Err(e) => Err(e.clone()),
                };
                *results[i].lock().unwrap_or_else(|p| p.into_inner()) = Some(outcome);
            });
        }
    });

    jobs.into_iter()
        .zip(results)
        .map(|((student_id, _), slot)| StudentDelivery {
            student_id,
            result: slot.into_inner().unwrap_or_else(|p| p.into_inner()).expect("every job ran"),
        })
        .collect()
}
