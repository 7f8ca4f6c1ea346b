use std::collections::BTreeMap;

use chrono::{NaiveDate, TimeZone, Utc};
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rubrics_core::domain::{
    builtin_rubrics, Assignment, AttendanceRecord, AttendanceStatus, Class, Course, Criterion, Id, Note,
    PasswordDigest, PerformanceLevel, Rubric, Student, User,
};
use rubrics_core::grading::{grade_submission, GradeRecord, Selections};
use rubrics_core::Score;
use rubrics_store::{replay_grades, Actor, AttendanceKey, AuditKind, Entity, Store, StoreError};

fn open() -> (tempfile::TempDir, Store) {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path().join("gradebook.db")).unwrap();
    (dir, store)
}

fn user(email: &str) -> User {
    User {
        id: Id::generate(),
        email: email.into(),
        display_name: email.split('@').next().unwrap().into(),
        credential: PasswordDigest("$argon2id$stub".into()),
    }
}

fn all_first_levels(rubric: &Rubric) -> Selections {
    rubric.criteria().iter().map(|c| (c.name.clone(), c.levels[0].label.clone())).collect()
}

struct Fixture {
    owner: User,
    students: Vec<Student>,
    class: Class,
    course: Course,
    rubric: Rubric,
    assignment: Assignment,
}

fn fixture(store: &Store) -> Fixture {
    let owner = user("owner@example.org");
    let actor = Actor::User(owner.id.clone());
    store.put(&Actor::System, &owner).unwrap();
    let students: Vec<Student> =
        (0..3).map(|i| Student::new(format!("Student {i}"), Some(format!("s{i}@example.org")))).collect();
    for s in &students {
        store.put(&actor, s).unwrap();
    }
    let class = Class::new(owner.id.clone(), "7B", students.iter().map(|s| s.id.clone()).collect()).unwrap();
    store.put(&actor, &class).unwrap();
    let course = Course::new(class.id.clone(), "Science");
    store.put(&actor, &course).unwrap();
    let rubric = Rubric::new(
        "Lab",
        vec![
            Criterion::new("Method", vec![PerformanceLevel::new("Weak", 1), PerformanceLevel::new("Strong", 2)]),
            Criterion::new(
                "Report",
                vec![
                    PerformanceLevel::new("Thin", Score::new(1, 2).unwrap()),
                    PerformanceLevel::new("Full", Score::new(5, 2).unwrap()),
                ],
            ),
        ],
        false,
    )
    .unwrap()
    .with_description("Practical work");
    store.put(&actor, &rubric).unwrap();
    let assignment = Assignment::new(course.id.clone(), "Titration", &rubric, Some(Score::new(3, 2).unwrap())).unwrap();
    store.put(&actor, &assignment).unwrap();
    Fixture { owner, students, class, course, rubric, assignment }
}

fn grade(f: &Fixture, student: usize, selections: &Selections) -> GradeRecord {
    grade_submission(
        &f.rubric,
        &f.assignment,
        &f.class,
        &f.students[student],
        selections,
        "well done <b>",
        Utc.with_ymd_and_hms(2024, 3, 1, 9, 30, 0).unwrap() + chrono::Duration::nanoseconds(123_456_789),
    )
    .unwrap()
}

#[test]
fn every_entity_kind_round_trips() {
    let (_dir, store) = open();
    let f = fixture(&store);
    let actor = Actor::User(f.owner.id.clone());

    assert_eq!(store.get::<User>(&f.owner.id).unwrap().as_ref(), Some(&f.owner));
    for s in &f.students {
        assert_eq!(store.get::<Student>(&s.id).unwrap().as_ref(), Some(s));
    }
    assert_eq!(store.get::<Class>(&f.class.id).unwrap().as_ref(), Some(&f.class));
    assert_eq!(store.get::<Course>(&f.course.id).unwrap().as_ref(), Some(&f.course));
    assert_eq!(store.get::<Rubric>(f.rubric.id()).unwrap().as_ref(), Some(&f.rubric));
    assert_eq!(store.get::<Assignment>(&f.assignment.id).unwrap().as_ref(), Some(&f.assignment));

    let g = grade(&f, 0, &all_first_levels(&f.rubric));
    store.put(&actor, &g).unwrap();
    assert_eq!(store.get::<GradeRecord>(&g.id).unwrap().as_ref(), Some(&g));

    let date = NaiveDate::from_ymd_opt(2024, 3, 4).unwrap();
    let statuses = BTreeMap::from([
        (f.students[0].id.clone(), AttendanceStatus::Present),
        (f.students[1].id.clone(), AttendanceStatus::Absent),
    ]);
    let record = store.record_attendance(&actor, &f.class.id, date, statuses).unwrap();
    let key = AttendanceKey { class_id: f.class.id.clone(), date };
    assert_eq!(store.get::<AttendanceRecord>(&key).unwrap().as_ref(), Some(&record));

    let note = Note::new(f.owner.id.clone(), "Trip", "Bring forms\nand \"lunch\"", Utc::now()).unwrap();
    store.put(&actor, &note).unwrap();
    assert_eq!(store.get::<Note>(&note.id).unwrap().as_ref(), Some(&note));

    for rubric in builtin_rubrics() {
        store.put(&Actor::System, &rubric).unwrap();
        assert_eq!(store.get::<Rubric>(rubric.id()).unwrap(), Some(rubric));
    }
    assert!(store.check_integrity().unwrap().is_empty());
}

#[test]
fn regrading_replaces_and_is_audited() {
    let (_dir, store) = open();
    let f = fixture(&store);
    let actor = Actor::User(f.owner.id.clone());
    let first = grade(&f, 1, &all_first_levels(&f.rubric));
    store.put(&actor, &first).unwrap();
    let mut best = Selections::new();
    best.insert("Method".into(), "Strong".into());
    best.insert("Report".into(), "Full".into());
    let second = grade(&f, 1, &best);
    store.put(&actor, &second).unwrap();

    let grades = store.grades_for_assignment(&f.assignment.id).unwrap();
    assert_eq!(grades, vec![second.clone()]);
    assert_eq!(grades[0].total, Score::new(9, 2).unwrap());

    let kinds: Vec<AuditKind> = store
        .audit_log()
        .unwrap()
        .into_iter()
        .filter(|e| e.entity() == Some("grade"))
        .map(|e| e.kind)
        .collect();
    assert_eq!(kinds, vec![AuditKind::GradeCreated, AuditKind::GradeReplaced]);
    let replayed = replay_grades(&store.audit_log().unwrap()).unwrap();
    assert_eq!(replayed.into_values().collect::<Vec<_>>(), vec![second]);
}

#[test]
fn store_rejects_inconsistent_grades() {
    let (_dir, store) = open();
    let f = fixture(&store);
    let actor = Actor::User(f.owner.id.clone());

    let mut tampered = grade(&f, 0, &all_first_levels(&f.rubric));
    tampered.total = Score::from_integer(100);
    assert!(matches!(store.put(&actor, &tampered), Err(StoreError::Invalid(_))));

    let outsider = Student::new("Outsider", None);
    store.put(&actor, &outsider).unwrap();
    let mut stray = grade(&f, 0, &all_first_levels(&f.rubric));
    stray.student_id = outsider.id.clone();
    assert_eq!(store.put(&actor, &stray), Err(StoreError::StudentNotEnrolled(outsider.id.clone())));
    assert!(store.grades_for_assignment(&f.assignment.id).unwrap().is_empty());
}

#[test]
fn referenced_entities_cannot_be_deleted() {
    let (_dir, store) = open();
    let f = fixture(&store);
    let actor = Actor::User(f.owner.id.clone());
    store.put(&actor, &grade(&f, 2, &all_first_levels(&f.rubric))).unwrap();

    assert!(matches!(store.delete::<Rubric>(&actor, f.rubric.id()), Err(StoreError::ForeignKeyViolation(_))));
    assert!(matches!(store.delete::<Course>(&actor, &f.course.id), Err(StoreError::ForeignKeyViolation(_))));
    assert!(matches!(store.delete::<Student>(&actor, &f.students[2].id), Err(StoreError::ForeignKeyViolation(_))));
    assert!(matches!(store.delete::<Assignment>(&actor, &f.assignment.id), Err(StoreError::ForeignKeyViolation(_))));

    let mut shrunk = f.class.clone();
    shrunk.student_ids.retain(|id| id != &f.students[2].id);
    assert!(matches!(store.put(&actor, &shrunk), Err(StoreError::ForeignKeyViolation(_))));

    let edited = f.rubric.clone().with_description("changed");
    assert!(matches!(store.put(&actor, &edited), Err(StoreError::ForeignKeyViolation(_))));

    assert!(matches!(
        store.delete::<Note>(&actor, &Id::from("missing")),
        Err(StoreError::NotFound { kind: "note", .. })
    ));
    assert!(store.check_integrity().unwrap().is_empty());
}

#[test]
fn attendance_checks_class_and_roster() {
    let (_dir, store) = open();
    let f = fixture(&store);
    let actor = Actor::User(f.owner.id.clone());
    let date = NaiveDate::from_ymd_opt(2024, 5, 6).unwrap();
    let missing = Id::from("no-such-class");
    assert_eq!(store.record_attendance(&actor, &missing, date, BTreeMap::new()), Err(StoreError::UnknownClass(missing)));
    let stranger = Id::generate();
    let statuses = BTreeMap::from([(stranger.clone(), AttendanceStatus::Present)]);
    assert_eq!(
        store.record_attendance(&actor, &f.class.id, date, statuses),
        Err(StoreError::StudentNotEnrolled(stranger))
    );

    let first = BTreeMap::from([(f.students[0].id.clone(), AttendanceStatus::Absent)]);
    store.record_attendance(&actor, &f.class.id, date, first).unwrap();
    let second = BTreeMap::from([(f.students[0].id.clone(), AttendanceStatus::Present)]);
    let latest = store.record_attendance(&actor, &f.class.id, date, second).unwrap();
    assert_eq!(store.attendance_for_class(&f.class.id).unwrap(), vec![latest]);
}

#[test]
fn scoped_queries_respect_ownership() {
    let (_dir, store) = open();
    let f = fixture(&store);
    store.seed_rubrics(&builtin_rubrics()).unwrap();
    let other = user("other@example.org");
    store.put(&Actor::System, &other).unwrap();
    let private = Rubric::new(
        "Private",
        vec![Criterion::new("Only", vec![PerformanceLevel::new("a", 0), PerformanceLevel::new("b", 1)])],
        false,
    )
    .unwrap();
    store.put(&Actor::User(other.id.clone()), &private).unwrap();

    let mine: Vec<Id> = store.rubrics_visible_to(&f.owner.id).unwrap().iter().map(|r| r.id().clone()).collect();
    assert!(mine.contains(f.rubric.id()));
    assert!(mine.contains(&Id::from("builtin-exam")));
    assert!(!mine.contains(private.id()));
    assert_eq!(store.rubric_owner(private.id()).unwrap(), Some(Some(other.id.clone())));
    assert_eq!(store.rubric_owner(&Id::from("builtin-exam")).unwrap(), Some(None));

    assert_eq!(store.classes_owned_by(&f.owner.id).unwrap(), vec![f.class.clone()]);
    assert!(store.classes_owned_by(&other.id).unwrap().is_empty());
    assert_eq!(store.students_in_class(&f.class.id).unwrap(), f.students);
    assert_eq!(store.courses_in_class(&f.class.id).unwrap(), vec![f.course.clone()]);
    assert_eq!(store.assignments_in_course(&f.course.id).unwrap(), vec![f.assignment.clone()]);
    let ctx = store.assignment_context(&f.assignment.id).unwrap().unwrap();
    assert_eq!((ctx.course, ctx.class), (f.course.clone(), f.class.clone()));
}

/// Model of what the store should contain after a sequence of operations.
#[derive(Default)]
struct Model {
    users: BTreeMap<Id, User>,
    students: BTreeMap<Id, Student>,
    classes: BTreeMap<Id, Class>,
    courses: BTreeMap<Id, Course>,
    rubrics: BTreeMap<Id, Rubric>,
    assignments: BTreeMap<Id, Assignment>,
    grades: BTreeMap<(Id, Id), GradeRecord>,
    attendance: BTreeMap<AttendanceKey, AttendanceRecord>,
    notes: BTreeMap<Id, Note>,
}

fn random_rubric(rng: &mut StdRng) -> Rubric {
    let criteria = (0..rng.random_range(1..=3))
        .map(|c| {
            let mut points = 0i64;
            let levels = (0..rng.random_range(2..=4))
                .map(|l| {
                    points += rng.random_range(1..=3);
                    PerformanceLevel::new(format!("L{l}"), Score::new(points, 2).unwrap())
                })
                .collect();
            Criterion::new(format!("C{c}"), levels)
        })
        .collect();
    Rubric::new(format!("R{}", rng.random::<u16>()), criteria, false).unwrap()
}

fn pick<'a, K: Clone, V>(rng: &mut StdRng, map: &'a BTreeMap<K, V>) -> Option<(K, &'a V)> {
    if map.is_empty() {
        return None;
    }
    let (k, v) = map.iter().nth(rng.random_range(0..map.len()))?;
    Some((k.clone(), v))
}

fn sorted<E: Entity + Clone>(mut items: Vec<E>) -> Vec<E>
where
    E::Key: Ord,
{
    items.sort_by_key(|e| e.key());
    items
}

fn step(store: &Store, model: &mut Model, rng: &mut StdRng, at: chrono::DateTime<Utc>) {
    let owner = pick(rng, &model.users).map(|(id, _)| id);
    let actor = owner.clone().map(Actor::User).unwrap_or(Actor::System);
    match rng.random_range(0..14) {
        0 => {
            let u = user(&format!("u{}@example.org", rng.random::<u32>()));
            if store.put(&actor, &u).is_ok() {
                model.users.insert(u.id.clone(), u);
            }
        }
        1 => {
            let s = Student::new(format!("S{}", rng.random::<u16>()), None);
            store.put(&actor, &s).unwrap();
            model.students.insert(s.id.clone(), s);
        }
        2 => {
            let Some(owner) = owner else { return };
            let ids: Vec<Id> = model.students.keys().filter(|_| rng.random_bool(0.5)).cloned().collect();
            let class = Class::new(owner, format!("K{}", rng.random::<u8>()), ids).unwrap();
            store.put(&actor, &class).unwrap();
            model.classes.insert(class.id.clone(), class);
        }
        3 => {
            let Some((_, class)) = pick(rng, &model.classes) else { return };
            let mut class = class.clone();
            if rng.random_bool(0.5) && !class.student_ids.is_empty() {
                class.student_ids.remove(rng.random_range(0..class.student_ids.len()));
            } else if let Some((sid, _)) = pick(rng, &model.students) {
                if !class.is_enrolled(&sid) {
                    class.student_ids.push(sid);
                }
            }
            match store.put(&actor, &class) {
                Ok(_) => {
                    model.classes.insert(class.id.clone(), class);
                }
                Err(StoreError::ForeignKeyViolation(_)) => {}
                Err(e) => panic!("roster update: {e}"),
            }
        }
        4 => {
            let Some((cid, _)) = pick(rng, &model.classes) else { return };
            let course = Course::new(cid, "Course");
            store.put(&actor, &course).unwrap();
            model.courses.insert(course.id.clone(), course);
        }
        5 => {
            let rubric = random_rubric(rng);
            store.put(&actor, &rubric).unwrap();
            model.rubrics.insert(rubric.id().clone(), rubric);
        }
        6 => {
            let Some((rid, rubric)) = pick(rng, &model.rubrics) else { return };
            let edited = rubric.clone().with_description(format!("rev {}", rng.random::<u16>()));
            match store.put(&actor, &edited) {
                Ok(_) => {
                    model.rubrics.insert(rid, edited);
                }
                Err(StoreError::ForeignKeyViolation(_)) => {
                    assert!(model.assignments.values().any(|a| a.rubric_id == rid));
                }
                Err(e) => panic!("rubric update: {e}"),
            }
        }
        7 => {
            let (Some((cid, _)), Some((_, rubric))) = (pick(rng, &model.courses), pick(rng, &model.rubrics)) else {
                return;
            };
            let assignment = Assignment::new(cid, "Task", rubric, None).unwrap();
            store.put(&actor, &assignment).unwrap();
            model.assignments.insert(assignment.id.clone(), assignment);
        }
        8 | 9 => {
            let Some((_, assignment)) = pick(rng, &model.assignments) else { return };
            let class = &model.classes[&model.courses[&assignment.course_id].class_id];
            let Some(sid) = class.student_ids.choose(rng) else { return };
            let rubric = &model.rubrics[&assignment.rubric_id];
            let selections: Selections = rubric
                .criteria()
                .iter()
                .map(|c| (c.name.clone(), c.levels.choose(rng).unwrap().label.clone()))
                .collect();
            let record = grade_submission(rubric, assignment, class, &model.students[sid], &selections, "", at).unwrap();
            store.put(&actor, &record).unwrap();
            model.grades.insert((assignment.id.clone(), sid.clone()), record);
        }
        10 => {
            let Some((key, g)) = pick(rng, &model.grades) else { return };
            store.delete::<GradeRecord>(&actor, &g.id).unwrap();
            model.grades.remove(&key);
        }
        11 => {
            let Some((cid, class)) = pick(rng, &model.classes) else { return };
            let date = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap() + chrono::Days::new(rng.random_range(0..5));
            let statuses: BTreeMap<Id, AttendanceStatus> = class
                .student_ids
                .iter()
                .filter_map(|s| {
                    let status = match rng.random_range(0..10) {
                        0..=2 => return None,
                        3 => AttendanceStatus::Absent,
                        _ => AttendanceStatus::Present,
                    };
                    Some((s.clone(), status))
                })
                .collect();
            let record = store.record_attendance(&actor, &cid, date, statuses).unwrap();
            model.attendance.insert(AttendanceKey { class_id: cid, date }, record);
        }
        12 => {
            let Some(owner) = owner else { return };
            if rng.random_bool(0.3) {
                if let Some((nid, _)) = pick(rng, &model.notes) {
                    store.delete::<Note>(&actor, &nid).unwrap();
                    model.notes.remove(&nid);
                    return;
                }
            }
            let note = Note::new(owner, format!("N{}", rng.random::<u16>()), "body", at).unwrap();
            store.put(&actor, &note).unwrap();
            model.notes.insert(note.id.clone(), note);
        }
        _ => {
            // Deletions that may legitimately be refused.
            let outcome = match rng.random_range(0..5) {
                0 => pick(rng, &model.students).map(|(id, _)| (store.delete::<Student>(&actor, &id).map(|_| ()), id, 0)),
                1 => pick(rng, &model.courses).map(|(id, _)| (store.delete::<Course>(&actor, &id).map(|_| ()), id, 1)),
                2 => pick(rng, &model.rubrics).map(|(id, _)| (store.delete::<Rubric>(&actor, &id).map(|_| ()), id, 2)),
                3 => pick(rng, &model.assignments)
                    .map(|(id, _)| (store.delete::<Assignment>(&actor, &id).map(|_| ()), id, 3)),
                _ => pick(rng, &model.classes).map(|(id, _)| (store.delete::<Class>(&actor, &id).map(|_| ()), id, 4)),
            };
            let Some((result, id, kind)) = outcome else { return };
            match result {
                Ok(()) => match kind {
                    0 => drop(model.students.remove(&id)),
                    1 => drop(model.courses.remove(&id)),
                    2 => drop(model.rubrics.remove(&id)),
                    3 => drop(model.assignments.remove(&id)),
                    _ => drop(model.classes.remove(&id)),
                },
                Err(StoreError::ForeignKeyViolation(_)) => {}
                Err(e) => panic!("delete: {e}"),
            }
        }
    }
}

#[test]
fn random_crud_sequence_stays_consistent() {
    let (_dir, store) = open();
    let mut model = Model::default();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let start = Utc.with_ymd_and_hms(2024, 1, 1, 8, 0, 0).unwrap();
    for i in 0..500 {
        step(&store, &mut model, &mut rng, start + chrono::Duration::seconds(i));
    }

    assert!(model.grades.len() > 5 && model.attendance.len() > 1, "sequence too thin to be meaningful");
    assert_eq!(store.check_integrity().unwrap(), Vec::<String>::new());
    assert_eq!(sorted(store.list::<User>().unwrap()), model.users.values().cloned().collect::<Vec<_>>());
    assert_eq!(sorted(store.list::<Student>().unwrap()), model.students.values().cloned().collect::<Vec<_>>());
    assert_eq!(sorted(store.list::<Class>().unwrap()), model.classes.values().cloned().collect::<Vec<_>>());
    assert_eq!(sorted(store.list::<Course>().unwrap()), model.courses.values().cloned().collect::<Vec<_>>());
    assert_eq!(sorted(store.list::<Rubric>().unwrap()), model.rubrics.values().cloned().collect::<Vec<_>>());
    assert_eq!(sorted(store.list::<Assignment>().unwrap()), model.assignments.values().cloned().collect::<Vec<_>>());
    assert_eq!(sorted(store.list::<AttendanceRecord>().unwrap()), model.attendance.values().cloned().collect::<Vec<_>>());
    assert_eq!(sorted(store.list::<Note>().unwrap()), model.notes.values().cloned().collect::<Vec<_>>());

    let stored: BTreeMap<(Id, Id), GradeRecord> = store
        .list::<GradeRecord>()
        .unwrap()
        .into_iter()
        .map(|g| ((g.assignment_id.clone(), g.student_id.clone()), g))
        .collect();
    assert_eq!(stored, model.grades);
    assert_eq!(replay_grades(&store.audit_log().unwrap()).unwrap(), model.grades);
}
