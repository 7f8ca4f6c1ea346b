//! Forward-only schema migrations. `MIGRATIONS[i]` upgrades version `i` to
//! `i + 1`.

pub const SCHEMA_VERSION: u32 = 1;

pub(crate) const MIGRATIONS: &[&str] = &[r#"
CREATE TABLE meta (
    key   TEXT PRIMARY KEY,
    value TEXT NOT NULL
);

CREATE TABLE users (
    id           TEXT PRIMARY KEY,
    email        TEXT NOT NULL UNIQUE COLLATE NOCASE,
    display_name TEXT NOT NULL,
    credential   TEXT NOT NULL
);

CREATE TABLE sessions (
    token_hash TEXT PRIMARY KEY,
    user_id    TEXT NOT NULL REFERENCES users(id) ON DELETE CASCADE,
    expires_at TEXT NOT NULL
);

CREATE TABLE students (
    id       TEXT PRIMARY KEY,
    owner_id TEXT REFERENCES users(id),
    name     TEXT NOT NULL,
    email    TEXT
);

CREATE TABLE classes (
    id       TEXT PRIMARY KEY,
    owner_id TEXT NOT NULL REFERENCES users(id),
    name     TEXT NOT NULL
);

CREATE TABLE class_students (
    class_id   TEXT NOT NULL REFERENCES classes(id) ON DELETE CASCADE,
    student_id TEXT NOT NULL REFERENCES students(id),
    position   INTEGER NOT NULL,
    PRIMARY KEY (class_id, student_id)
);

CREATE TABLE courses (
    id       TEXT PRIMARY KEY,
    class_id TEXT NOT NULL REFERENCES classes(id),
    name     TEXT NOT NULL
);

CREATE TABLE rubrics (
    id          TEXT PRIMARY KEY,
    owner_id    TEXT REFERENCES users(id),
    name        TEXT NOT NULL,
    description TEXT NOT NULL,
    predefined  INTEGER NOT NULL
);

CREATE TABLE criteria (
    rubric_id TEXT NOT NULL REFERENCES rubrics(id) ON DELETE CASCADE,
    position  INTEGER NOT NULL,
    name      TEXT NOT NULL,
    PRIMARY KEY (rubric_id, position),
    UNIQUE (rubric_id, name)
);

CREATE TABLE levels (
    rubric_id          TEXT NOT NULL,
    criterion_position INTEGER NOT NULL,
    position           INTEGER NOT NULL,
    label              TEXT NOT NULL,
    points_num         INTEGER NOT NULL,
    points_den         INTEGER NOT NULL,
    PRIMARY KEY (rubric_id, criterion_position, position),
    FOREIGN KEY (rubric_id, criterion_position) REFERENCES criteria(rubric_id, position) ON DELETE CASCADE
);

CREATE TABLE assignments (
    id            TEXT PRIMARY KEY,
    course_id     TEXT NOT NULL REFERENCES courses(id),
    name          TEXT NOT NULL,
    rubric_id     TEXT NOT NULL REFERENCES rubrics(id),
    threshold_num INTEGER,
    threshold_den INTEGER
);

CREATE TABLE grades (
    id            TEXT PRIMARY KEY,
    assignment_id TEXT NOT NULL REFERENCES assignments(id),
    student_id    TEXT NOT NULL REFERENCES students(id),
    total_num     INTEGER NOT NULL,
    total_den     INTEGER NOT NULL,
    max_num       INTEGER NOT NULL,
    max_den       INTEGER NOT NULL,
    graded_at     TEXT NOT NULL,
    comment       TEXT NOT NULL,
    UNIQUE (assignment_id, student_id)
);

CREATE TABLE grade_selections (
    grade_id  TEXT NOT NULL REFERENCES grades(id) ON DELETE CASCADE,
    criterion TEXT NOT NULL,
    level     TEXT NOT NULL,
    PRIMARY KEY (grade_id, criterion)
);

CREATE TABLE attendance (
    class_id TEXT NOT NULL REFERENCES classes(id),
    date     TEXT NOT NULL,
    PRIMARY KEY (class_id, date)
);

CREATE TABLE attendance_statuses (
    class_id   TEXT NOT NULL,
    date       TEXT NOT NULL,
    student_id TEXT NOT NULL REFERENCES students(id),
    present    INTEGER NOT NULL,
    PRIMARY KEY (class_id, date, student_id),
    FOREIGN KEY (class_id, date) REFERENCES attendance(class_id, date) ON DELETE CASCADE
);

CREATE TABLE notes (
    id         TEXT PRIMARY KEY,
    owner_id   TEXT NOT NULL REFERENCES users(id),
    title      TEXT NOT NULL,
    body       TEXT NOT NULL,
    created_at TEXT NOT NULL
);

CREATE TABLE audit_log (
    seq     INTEGER PRIMARY KEY AUTOINCREMENT,
    at      TEXT NOT NULL,
    actor   TEXT NOT NULL,
    kind    TEXT NOT NULL,
    payload TEXT NOT NULL
);

CREATE TRIGGER audit_log_no_update BEFORE UPDATE ON audit_log
BEGIN SELECT RAISE(ABORT, 'audit log is append-only'); END;
CREATE TRIGGER audit_log_no_delete BEFORE DELETE ON audit_log
BEGIN SELECT RAISE(ABORT, 'audit log is append-only'); END;

CREATE INDEX courses_by_class ON courses(class_id);
CREATE INDEX assignments_by_course ON assignments(course_id);
CREATE INDEX grades_by_assignment ON grades(assignment_id);
CREATE INDEX notes_by_owner ON notes(owner_id);
"#];
