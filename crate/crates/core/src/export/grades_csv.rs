//! Spreadsheet exchange format for grades.
//!
//! Layout: `student_id,student_name,<criterion...>,total,percentage`, UTF-8,
//! CRLF line endings, fields quoted only when they contain a comma, quote or
//! line break. Criterion cells hold the points of the selected level.

use std::collections::HashSet;

use chrono::{DateTime, Utc};
use csv::{QuoteStyle, ReaderBuilder, StringRecord, Terminator, WriterBuilder};
use thiserror::Error;

use crate::domain::{Assignment, Class, Id, Rubric, Student};
use crate::grading::{grade_submission, name_index, ordered_records, GradeRecord, GradingError, Selections};
use crate::score::Score;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CsvError {
    #[error("header does not match the rubric: expected {expected:?}, found {found:?}")]
    HeaderMismatch { expected: Vec<String>, found: Vec<String> },
    #[error("row {row}: {cause}")]
    RowError { row: usize, cause: RowCause },
    #[error("records belong to more than one assignment")]
    MixedAssignments,
    #[error("record for student {student} has no valid level for criterion {criterion:?}")]
    InconsistentRecord { student: Id, criterion: String },
    #[error("malformed CSV: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RowCause {
    #[error("expected {expected} fields, found {found}")]
    FieldCount { expected: usize, found: usize },
    #[error("{criterion:?}: {value:?} is not a score")]
    InvalidPoints { criterion: String, value: String },
    #[error("{criterion:?}: no level is worth {points} points")]
    UnknownPoints { criterion: String, points: String },
    #[error("total {found:?} does not match the selected levels ({computed})")]
    TotalMismatch { computed: String, found: String },
    #[error("percentage {found:?} does not match the total ({computed})")]
    PercentageMismatch { computed: String, found: String },
    #[error("student {0} appears on more than one row")]
    DuplicateStudent(Id),
    #[error(transparent)]
    Grading(#[from] GradingError),
}

/// Column names for `rubric`, in export order.
pub fn csv_header(rubric: &Rubric) -> Vec<String> {
    let mut header = vec!["student_id".to_string(), "student_name".to_string()];
    header.extend(rubric.criteria().iter().map(|c| c.name.clone()));
    header.push("total".into());
    header.push("percentage".into());
    header
}

pub fn export_grades_csv(
    assignment: &Assignment,
    records: &[GradeRecord],
    rubric: &Rubric,
    roster: &[Student],
) -> Result<Vec<u8>, CsvError> {
    if records.iter().any(|r| r.assignment_id != assignment.id) {
        return Err(CsvError::MixedAssignments);
    }
    let names = name_index(roster);
    let ordered = ordered_records(records, &names).map_err(|_| CsvError::MixedAssignments)?;

    let mut writer = WriterBuilder::new()
        .terminator(Terminator::CRLF)
        .quote_style(QuoteStyle::Necessary)
        .from_writer(Vec::new());
    let io = |e: csv::Error| CsvError::Malformed(e.to_string());
    writer.write_record(csv_header(rubric)).map_err(io)?;
    for record in ordered {
        let mut row = vec![
            record.student_id.to_string(),
            names.get(&record.student_id).cloned().unwrap_or_default(),
        ];
        for criterion in rubric.criteria() {
            let points = record.points_for(rubric, &criterion.name).ok_or_else(|| CsvError::InconsistentRecord {
                student: record.student_id.clone(),
                criterion: criterion.name.clone(),
            })?;
            row.push(points.to_string());
        }
        row.push(record.total.to_string());
        row.push(record.percentage().render());
        writer.write_record(&row).map_err(io)?;
    }
    writer.into_inner().map_err(|e| CsvError::Malformed(e.to_string()))
}

/// Grades every row of an exported sheet. Row numbers count the header as
/// row 1, matching spreadsheet numbering.
pub fn import_grades_csv(
    bytes: &[u8],
    assignment: &Assignment,
    rubric: &Rubric,
    class: &Class,
    roster: &[Student],
    graded_at: DateTime<Utc>,
) -> Result<Vec<GradeRecord>, CsvError> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    let expected = csv_header(rubric);
    let mut reader = ReaderBuilder::new().has_headers(false).flexible(true).from_reader(bytes);
    let mut rows = reader.records();

    let header = match rows.next() {
        Some(Ok(h)) => h.iter().map(str::to_string).collect::<Vec<_>>(),
        Some(Err(e)) => return Err(CsvError::Malformed(e.to_string())),
        None => Vec::new(),
    };
    if header != expected {
        return Err(CsvError::HeaderMismatch { expected, found: header });
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (index, row) in rows.enumerate() {
        let row_number = index + 2;
        let row = row.map_err(|e| CsvError::Malformed(e.to_string()))?;
        let record = import_row(&row, assignment, rubric, class, roster, graded_at)
            .map_err(|cause| CsvError::RowError { row: row_number, cause })?;
        if !seen.insert(record.student_id.clone()) {
            return Err(CsvError::RowError { row: row_number, cause: RowCause::DuplicateStudent(record.student_id) });
        }
        out.push(record);
    }
    Ok(out)
}

fn import_row(
    row: &StringRecord,
    assignment: &Assignment,
    rubric: &Rubric,
    class: &Class,
    roster: &[Student],
    graded_at: DateTime<Utc>,
) -> Result<GradeRecord, RowCause> {
    let criteria = rubric.criteria();
    let expected = criteria.len() + 4;
    if row.len() != expected {
        return Err(RowCause::FieldCount { expected, found: row.len() });
    }
    let student_id = Id::from(&row[0]);
    let student = roster
        .iter()
        .find(|s| s.id == student_id)
        .filter(|s| class.is_enrolled(&s.id))
        .ok_or_else(|| GradingError::StudentNotEnrolled(student_id.clone()))?;

    let mut selections = Selections::new();
    for (i, criterion) in criteria.iter().enumerate() {
        let cell = &row[2 + i];
        let points: Score = cell
            .parse()
            .map_err(|_| RowCause::InvalidPoints { criterion: criterion.name.clone(), value: cell.to_string() })?;
        let level = criterion
            .level_with_points(points)
            .ok_or_else(|| RowCause::UnknownPoints { criterion: criterion.name.clone(), points: cell.to_string() })?;
        selections.insert(criterion.name.clone(), level.label.clone());
    }

    let record = grade_submission(rubric, assignment, class, student, &selections, "", graded_at)?;

    let total_cell = &row[expected - 2];
    if total_cell.parse::<Score>().ok() != Some(record.total) {
        return Err(RowCause::TotalMismatch { computed: record.total.to_string(), found: total_cell.to_string() });
    }
    let percentage_cell = &row[expected - 1];
    let computed = record.percentage().render();
    if percentage_cell != computed {
        return Err(RowCause::PercentageMismatch { computed, found: percentage_cell.to_string() });
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Criterion, PerformanceLevel};
    use chrono::TimeZone;

    struct Fixture {
        rubric: Rubric,
        assignment: Assignment,
        class: Class,
        roster: Vec<Student>,
    }

    fn fixture() -> Fixture {
        let levels = || vec![PerformanceLevel::new("Poor", 1), PerformanceLevel::new("Good", 2)];
        let rubric = Rubric::new("R", vec![Criterion::new("C1", levels()), Criterion::new("C2, part \"b\"", levels())], false)
            .unwrap();
        let roster = vec![Student::new("Zed, Jr.", None), Student::new("Amy", None)];
        let class = Class::new(Id::from("u"), "K", roster.iter().map(|s| s.id.clone()).collect()).unwrap();
        let assignment = Assignment::new(Id::from("c"), "HW", &rubric, None).unwrap();
        Fixture { rubric, assignment, class, roster }
    }

    fn at() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 5, 1, 12, 0, 0).unwrap()
    }

    fn grade(f: &Fixture, student: usize, c1: &str, c2: &str) -> GradeRecord {
        let sel: Selections =
            [("C1".to_string(), c1.to_string()), ("C2, part \"b\"".to_string(), c2.to_string())].into_iter().collect();
        grade_submission(&f.rubric, &f.assignment, &f.class, &f.roster[student], &sel, "", at()).unwrap()
    }

    #[test]
    fn empty_export_is_header_only() {
        let f = fixture();
        let bytes = export_grades_csv(&f.assignment, &[], &f.rubric, &f.roster).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "student_id,student_name,C1,\"C2, part \"\"b\"\"\",total,percentage\r\n");
    }

    #[test]
    fn export_orders_and_quotes_rows() {
        let f = fixture();
        let records = vec![grade(&f, 0, "Good", "Poor"), grade(&f, 1, "Good", "Good")];
        let text = String::from_utf8(export_grades_csv(&f.assignment, &records, &f.rubric, &f.roster).unwrap()).unwrap();
        let lines: Vec<&str> = text.split("\r\n").collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], format!("{},Amy,2,2,4,100.00", f.roster[1].id));
        assert_eq!(lines[2], format!("{},\"Zed, Jr.\",2,1,3,75.00", f.roster[0].id));
        assert_eq!(lines[3], "");
    }

    #[test]
    fn round_trip_preserves_grades() {
        let f = fixture();
        let records = vec![grade(&f, 0, "Good", "Poor"), grade(&f, 1, "Poor", "Poor")];
        let bytes = export_grades_csv(&f.assignment, &records, &f.rubric, &f.roster).unwrap();
        let back = import_grades_csv(&bytes, &f.assignment, &f.rubric, &f.class, &f.roster, at()).unwrap();
        assert_eq!(back.len(), 2);
        for r in &records {
            assert!(back.iter().any(|b| b.same_grade(r)));
        }
    }

    #[test]
    fn import_errors_carry_row_numbers() {
        let f = fixture();
        let header = "student_id,student_name,C1,\"C2, part \"\"b\"\"\",total,percentage\r\n";
        let bad_points = format!("{header}{},Zed,2,7,9,100.00\r\n", f.roster[0].id);
        let err = import_grades_csv(bad_points.as_bytes(), &f.assignment, &f.rubric, &f.class, &f.roster, at()).unwrap_err();
        assert_eq!(
            err,
            CsvError::RowError { row: 2, cause: RowCause::UnknownPoints { criterion: "C2, part \"b\"".into(), points: "7".into() } }
        );

        let bad_total = format!("{header}{},Zed,2,1,3,75.00\r\n{},Amy,1,1,3,75.00\r\n", f.roster[0].id, f.roster[1].id);
        let err = import_grades_csv(bad_total.as_bytes(), &f.assignment, &f.rubric, &f.class, &f.roster, at()).unwrap_err();
        assert!(matches!(err, CsvError::RowError { row: 3, cause: RowCause::TotalMismatch { .. } }));

        let stranger = format!("{header}nobody,X,1,1,2,50.00\r\n");
        let err = import_grades_csv(stranger.as_bytes(), &f.assignment, &f.rubric, &f.class, &f.roster, at()).unwrap_err();
        assert!(matches!(
            err,
            CsvError::RowError { row: 2, cause: RowCause::Grading(GradingError::StudentNotEnrolled(_)) }
        ));
    }

    #[test]
    fn empty_file_is_header_mismatch() {
        let f = fixture();
        let err = import_grades_csv(b"", &f.assignment, &f.rubric, &f.class, &f.roster, at()).unwrap_err();
        assert!(matches!(err, CsvError::HeaderMismatch { found, .. } if found.is_empty()));
    }

    #[test]
    fn export_rejects_foreign_records() {
        let f = fixture();
        let mut r = grade(&f, 0, "Good", "Good");
        r.assignment_id = Id::from("elsewhere");
        assert_eq!(export_grades_csv(&f.assignment, &[r], &f.rubric, &f.roster), Err(CsvError::MixedAssignments));
    }
}
