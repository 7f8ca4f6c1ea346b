use std::collections::BTreeMap;

use super::{central_tendency, Dataset, StatsError, StatsSummary};
use crate::domain::Rubric;
use crate::grading::{current_records, ensure_single_assignment, GradeRecord};

/// Per-criterion summary over the points of the selected levels.
pub fn criterion_breakdown(
    records: &[GradeRecord],
    rubric: &Rubric,
) -> Result<BTreeMap<String, StatsSummary>, StatsError> {
    ensure_single_assignment(records).map_err(|_| StatsError::MixedAssignments)?;
    let current = current_records(records);
    if current.is_empty() {
        return Ok(BTreeMap::new());
    }
    let mut out = BTreeMap::new();
    for criterion in rubric.criteria() {
        let points = current
            .iter()
            .map(|r| {
                r.points_for(rubric, &criterion.name).ok_or_else(|| StatsError::InconsistentRecord {
                    student: r.student_id.clone(),
                    criterion: criterion.name.clone(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.insert(criterion.name.clone(), central_tendency(&Dataset::from_scores(&points))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Assignment, Class, Criterion, Id, PerformanceLevel, Student};
    use crate::grading::{grade_submission, Selections};
    use crate::score::Score;
    use chrono::Utc;
    use num_rational::Ratio;
    use proptest::prelude::*;

    fn rubric() -> Rubric {
        let levels = || vec![PerformanceLevel::new("Poor", 1), PerformanceLevel::new("Good", 2)];
        Rubric::new("R", vec![Criterion::new("C1", levels()), Criterion::new("C2", levels())], false).unwrap()
    }

    #[test]
    fn singleton_breakdown() {
        let r = rubric();
        let student = Student::new("A", None);
        let class = Class::new(Id::from("u"), "K", vec![student.id.clone()]).unwrap();
        let assignment = Assignment::new(Id::from("c"), "HW", &r, None).unwrap();
        let sel: Selections = [("C1", "Good"), ("C2", "Poor")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        let rec = grade_submission(&r, &assignment, &class, &student, &sel, "", Utc::now()).unwrap();
        let map = criterion_breakdown(&[rec], &r).unwrap();
        assert_eq!(map["C1"].mean, 2.0);
        assert_eq!(map["C2"].mean, 1.0);
        assert_eq!(map["C1"].n, 1);
    }

    #[test]
    fn empty_records_give_empty_map() {
        assert!(criterion_breakdown(&[], &rubric()).unwrap().is_empty());
    }

    proptest! {
        // Linearity oracle: the exact per-criterion means add up to the exact
        // mean of totals, and the float breakdown tracks both.
        #[test]
        fn criterion_means_sum_to_total_mean(choices in prop::collection::vec((0usize..3, 0usize..3, 0usize..3), 1..40)) {
            let levels = || vec![
                PerformanceLevel::new("a", Score::new(1, 4).unwrap()),
                PerformanceLevel::new("b", Score::from_integer(2)),
                PerformanceLevel::new("c", "3.5".parse::<Score>().unwrap()),
            ];
            let r = Rubric::new("R", vec![
                Criterion::new("X", levels()), Criterion::new("Y", levels()), Criterion::new("Z", levels()),
            ], false).unwrap();
            let students: Vec<Student> = (0..choices.len()).map(|i| Student::new(format!("S{i}"), None)).collect();
            let class = Class::new(Id::from("u"), "K", students.iter().map(|s| s.id.clone()).collect()).unwrap();
            let assignment = Assignment::new(Id::from("c"), "HW", &r, None).unwrap();
            let labels = ["a", "b", "c"];
            let records: Vec<_> = choices.iter().zip(&students).map(|((x, y, z), s)| {
                let sel: Selections = [("X", labels[*x]), ("Y", labels[*y]), ("Z", labels[*z])]
                    .iter().map(|(c, l)| (c.to_string(), l.to_string())).collect();
                grade_submission(&r, &assignment, &class, s, &sel, "", Utc::now()).unwrap()
            }).collect();

            let n = Ratio::from_integer(records.len() as i64);
            let exact_total_mean = records.iter().map(|rec| rec.total.ratio()).fold(Ratio::from_integer(0), |a, b| a + b) / n;
            let mut exact_sum_of_means = Ratio::from_integer(0);
            for c in ["X", "Y", "Z"] {
                let sum = records.iter().map(|rec| rec.points_for(&r, c).unwrap().ratio()).fold(Ratio::from_integer(0), |a, b| a + b);
                exact_sum_of_means += sum / n;
            }
            prop_assert_eq!(exact_sum_of_means, exact_total_mean);

            let map = criterion_breakdown(&records, &r).unwrap();
            let float_sum: f64 = map.values().map(|s| s.mean).sum();
            let expected = *exact_total_mean.numer() as f64 / *exact_total_mean.denom() as f64;
            prop_assert!((float_sum - expected).abs() <= 1e-9);
        }
    }
}
