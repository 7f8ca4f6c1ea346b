//! Grade exchange, printable reports and feedback delivery.

mod grades_csv;
mod html;
mod mail;
mod report;
mod svg;

pub use grades_csv::{csv_header, export_grades_csv, import_grades_csv, CsvError, RowCause};
pub use html::escape as escape_html;
pub use mail::{
    message_id, send_feedback, Delivery, FileOutbox, MailTransport, OutgoingMessage, SendError, SendOptions,
    StudentDelivery, TransportError,
};
pub use report::{render_report, Attachment, ClassReport, FeedbackDocument, Report, ReportError, ReportInput};
pub use svg::render_chart;
