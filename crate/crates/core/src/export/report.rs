//! Printable HTML reports: one feedback document per graded student plus a
//! class overview with embedded charts.

use std::fmt::Write;

use chrono::{DateTime, SecondsFormat, Utc};
use thiserror::Error;

use super::html::{escape, STYLE};
use super::svg::render_chart;
use crate::domain::{Assignment, Id, Rubric, Student};
use crate::grading::{name_index, ordered_records, GradeRecord};
use crate::stats::{ChartData, StatsSummary};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("records belong to more than one assignment")]
    MixedAssignments,
    #[error("record for student {student} has no valid level for criterion {criterion:?}")]
    InconsistentRecord { student: Id, criterion: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attachment {
    pub filename: String,
    pub media_type: String,
    pub bytes: Vec<u8>,
}

/// Feedback for one student on one assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedbackDocument {
    pub student_id: Id,
    pub assignment_id: Id,
    /// Self-contained HTML document.
    pub body: String,
    pub attachments: Vec<Attachment>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassReport {
    pub filename: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub class_report: ClassReport,
    /// In display (student name) order.
    pub feedback: Vec<FeedbackDocument>,
}

/// Everything a report is built from. `generated_at` is stamped into the
/// class report only.
#[derive(Debug, Clone, Copy)]
pub struct ReportInput<'a> {
    pub assignment: &'a Assignment,
    pub rubric: &'a Rubric,
    pub records: &'a [GradeRecord],
    pub roster: &'a [Student],
    /// `None` when nothing has been graded.
    pub stats: Option<&'a StatsSummary>,
    pub charts: &'a [ChartData],
    pub generated_at: DateTime<Utc>,
}

fn stat(v: f64) -> String {
    format!("{v:.2}")
}

fn modes_text(stats: &StatsSummary) -> String {
    if stats.is_uniform() {
        return "no dominant mode".into();
    }
    stats.modes.iter().map(|m| stat(*m)).collect::<Vec<_>>().join(", ")
}

fn document(title: &str, content: &str) -> String {
    format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n<style>{}</style>\n</head>\n<body>\n{}</body>\n</html>\n",
        escape(title),
        STYLE,
        content
    )
}

fn safe_filename(text: &str) -> String {
    text.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

pub fn render_report(input: &ReportInput<'_>) -> Result<Report, ReportError> {
    if input.records.iter().any(|r| r.assignment_id != input.assignment.id) {
        return Err(ReportError::MixedAssignments);
    }
    let names = name_index(input.roster);
    let ordered = ordered_records(input.records, &names).map_err(|_| ReportError::MixedAssignments)?;

    let mut feedback = Vec::with_capacity(ordered.len());
    for record in &ordered {
        let name = names.get(&record.student_id).map(String::as_str).unwrap_or("");
        let body = render_feedback(input, record, name)?;
        let filename = format!(
            "feedback-{}-{}.html",
            safe_filename(input.assignment.id.as_str()),
            safe_filename(record.student_id.as_str())
        );
        feedback.push(FeedbackDocument {
            student_id: record.student_id.clone(),
            assignment_id: input.assignment.id.clone(),
            attachments: vec![Attachment {
                filename,
                media_type: "text/html; charset=utf-8".into(),
                bytes: body.clone().into_bytes(),
            }],
            body,
        });
    }

    let class_report = ClassReport {
        filename: format!("class-report-{}.html", safe_filename(input.assignment.id.as_str())),
        body: render_class_report(input, &ordered, &names),
    };
    Ok(Report { class_report, feedback })
}

fn render_feedback(input: &ReportInput<'_>, record: &GradeRecord, name: &str) -> Result<String, ReportError> {
    let mut html = String::new();
    let _ = writeln!(html, "<h1>{}</h1>", escape(&input.assignment.name));
    let _ = writeln!(html, "<p>Feedback for <strong>{}</strong></p>", escape(name));
    let _ = writeln!(html, "<table>\n<tr><th>Criterion</th><th>Level</th><th>Points</th><th>Out of</th></tr>");
    for criterion in input.rubric.criteria() {
        let label = record.selections.get(&criterion.name);
        let points = record.points_for(input.rubric, &criterion.name).ok_or_else(|| ReportError::InconsistentRecord {
            student: record.student_id.clone(),
            criterion: criterion.name.clone(),
        })?;
        let _ = writeln!(
            html,
            "<tr><td>{}</td><td>{}</td><td class=\"num\">{}</td><td class=\"num\">{}</td></tr>",
            escape(&criterion.name),
            escape(label.map(String::as_str).unwrap_or("")),
            points,
            criterion.max_points()
        );
    }
    let _ = writeln!(html, "</table>");
    let _ = writeln!(html, "<p>Total: <strong>{} / {}</strong></p>", record.total, record.max_score);
    let _ = writeln!(html, "<p>Percentage: <strong>{}%</strong></p>", record.percentage().render());
    if let Some(stats) = input.stats {
        let _ = writeln!(html, "<p>Class mean: {} &middot; class median: {}</p>", stat(stats.mean), stat(stats.median));
    }
    if !record.comment.is_empty() {
        let _ = writeln!(html, "<h2>Comments</h2>\n<p>{}</p>", escape(&record.comment).replace('\n', "<br>"));
    }
    let _ = writeln!(html, "<p><small>Graded {}</small></p>", record.graded_at.to_rfc3339_opts(SecondsFormat::Secs, true));
    Ok(document(&format!("{}: {}", input.assignment.name, name), &html))
}

fn render_class_report(
    input: &ReportInput<'_>,
    ordered: &[&GradeRecord],
    names: &std::collections::HashMap<Id, String>,
) -> String {
    let mut html = String::new();
    let _ = writeln!(html, "<h1>{}</h1>", escape(&input.assignment.name));
    let _ = writeln!(
        html,
        "<p>Rubric: {} (maximum {})</p>",
        escape(input.rubric.name()),
        input.rubric.max_score()
    );
    match input.stats {
        Some(stats) => {
            let _ = writeln!(html, "<h2>Central tendency</h2>\n<table>");
            let _ = writeln!(html, "<tr><th>Graded</th><td class=\"num\">{}</td></tr>", stats.n);
            let _ = writeln!(html, "<tr><th>Mean</th><td class=\"num\">{}</td></tr>", stat(stats.mean));
            let _ = writeln!(html, "<tr><th>Median</th><td class=\"num\">{}</td></tr>", stat(stats.median));
            let _ = writeln!(html, "<tr><th>Mode</th><td class=\"num\">{}</td></tr>", modes_text(stats));
            let _ = writeln!(html, "<tr><th>Lowest</th><td class=\"num\">{}</td></tr>", stat(stats.min));
            let _ = writeln!(html, "<tr><th>Highest</th><td class=\"num\">{}</td></tr>", stat(stats.max));
            let _ = writeln!(html, "</table>");
        }
        None => {
            let _ = writeln!(html, "<p>No grades recorded.</p>");
        }
    }
    if !ordered.is_empty() {
        let _ = writeln!(html, "<h2>Total marks</h2>\n<table>\n<tr><th>Student</th><th>Total</th><th>Percentage</th></tr>");
        for record in ordered {
            let name = names.get(&record.student_id).map(String::as_str).unwrap_or("");
            let _ = writeln!(
                html,
                "<tr><td>{}</td><td class=\"num\">{}</td><td class=\"num\">{}%</td></tr>",
                escape(name),
                record.total,
                record.percentage().render()
            );
        }
        let _ = writeln!(html, "</table>");
    }
    for chart in input.charts {
        let _ = writeln!(html, "<figure>\n{}\n<figcaption>{}</figcaption>\n</figure>", render_chart(chart), escape(&chart.title));
    }
    let _ = writeln!(
        html,
        "<p><small>Generated {}</small></p>",
        input.generated_at.to_rfc3339_opts(SecondsFormat::Secs, true)
    );
    document(&format!("{}: class report", input.assignment.name), &html)
}
