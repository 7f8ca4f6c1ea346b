#![allow(dead_code)]

use std::path::PathBuf;

use axum::body::{Body, Bytes};
use axum::http::{HeaderMap, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use rubrics_core::domain::builtin_rubrics;
use rubrics_server::{app, mail, AppState, Settings};
use rubrics_store::Store;
use serde_json::{json, Value};
use tower::ServiceExt;

pub const PASSWORD: &str = "correct horse battery";

/// A service instance over a private database and outbox.
pub struct TestApp {
    pub state: AppState,
    pub router: Router,
    pub outbox: PathBuf,
    pub dir: tempfile::TempDir,
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Bytes,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body)
            .unwrap_or_else(|e| panic!("body is not JSON ({e}): {}", String::from_utf8_lossy(&self.body)))
    }

    pub fn text(&self) -> String {
        String::from_utf8(self.body.to_vec()).expect("body is UTF-8")
    }

    pub fn header(&self, name: &str) -> &str {
        self.headers.get(name).and_then(|v| v.to_str().ok()).unwrap_or("")
    }

    /// Panics with the body unless the status matches.
    pub fn expect(self, status: StatusCode) -> Reply {
        assert_eq!(self.status, status, "unexpected status; body: {}", String::from_utf8_lossy(&self.body));
        self
    }

    pub fn error_code(&self) -> String {
        self.json()["error"]["code"].as_str().unwrap_or_default().to_string()
    }
}

impl TestApp {
    pub fn new() -> TestApp {
        TestApp::with_settings(Settings::default())
    }

    pub fn with_settings(settings: Settings) -> TestApp {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path().join("gradebook.db")).unwrap();
        store.seed_rubrics(&builtin_rubrics()).unwrap();
        let outbox = dir.path().join("outbox");
        let transport = mail::file_transport(&outbox).unwrap();
        let state = AppState::new(store, transport, settings);
        let router = app(state.clone(), None);
        TestApp { state, router, outbox, dir }
    }

    pub async fn send(
        &self,
        method: Method,
        uri: &str,
        token: Option<&str>,
        content_type: Option<&str>,
        body: Vec<u8>,
    ) -> Reply {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(token) = token {
            req = req.header("authorization", format!("Bearer {token}"));
        }
        if let Some(ct) = content_type {
            req = req.header("content-type", ct);
        }
        let response = self.router.clone().oneshot(req.body(Body::from(body)).unwrap()).await.unwrap();
        let status = response.status();
        let headers = response.headers().clone();
        let body = response.into_body().collect().await.unwrap().to_bytes();
        Reply { status, headers, body }
    }

    pub async fn get(&self, uri: &str, token: &str) -> Reply {
        self.send(Method::GET, uri, Some(token), None, Vec::new()).await
    }

    pub async fn delete(&self, uri: &str, token: &str) -> Reply {
        self.send(Method::DELETE, uri, Some(token), None, Vec::new()).await
    }

    pub async fn post(&self, uri: &str, token: Option<&str>, body: &Value) -> Reply {
        self.send(Method::POST, uri, token, Some("application/json"), serde_json::to_vec(body).unwrap()).await
    }

    pub async fn put(&self, uri: &str, token: &str, body: &Value) -> Reply {
        self.send(Method::PUT, uri, Some(token), Some("application/json"), serde_json::to_vec(body).unwrap()).await
    }

    pub async fn register(&self, email: &str) -> Value {
        self.post("/api/v1/auth/register", None, &json!({ "email": email, "password": PASSWORD, "display_name": "Grader" }))
            .await
            .expect(StatusCode::CREATED)
            .json()
    }

    pub async fn login(&self, email: &str, password: &str) -> Reply {
        self.post("/api/v1/auth/login", None, &json!({ "email": email, "password": password })).await
    }

    /// Registers `email` and returns a bearer token for it.
    pub async fn sign_in(&self, email: &str) -> String {
        self.register(email).await;
        let session = self.login(email, PASSWORD).await.expect(StatusCode::OK).json();
        session["token"].as_str().unwrap().to_string()
    }

    pub async fn create_class(&self, token: &str, name: &str, students: &[(&str, &str)]) -> (String, Vec<String>) {
        let class = self.post("/api/v1/classes", Some(token), &json!({ "name": name })).await.expect(StatusCode::CREATED).json();
        let class_id = class["id"].as_str().unwrap().to_string();
        let mut ids = Vec::new();
        for (student, email) in students {
            let s = self
                .post(&format!("/api/v1/classes/{class_id}/students"), Some(token), &json!({ "name": student, "email": email }))
                .await
                .expect(StatusCode::CREATED)
                .json();
            ids.push(s["id"].as_str().unwrap().to_string());
        }
        (class_id, ids)
    }

    pub async fn create_course(&self, token: &str, class_id: &str) -> String {
        let course = self
            .post("/api/v1/courses", Some(token), &json!({ "class_id": class_id, "name": "Course" }))
            .await
            .expect(StatusCode::CREATED)
            .json();
        course["id"].as_str().unwrap().to_string()
    }

    pub async fn create_rubric(&self, token: &str, body: &Value) -> String {
        let rubric = self.post("/api/v1/rubrics", Some(token), body).await.expect(StatusCode::CREATED).json();
        rubric["id"].as_str().unwrap().to_string()
    }

    pub async fn create_assignment(&self, token: &str, course_id: &str, rubric_id: &str) -> String {
        let assignment = self
            .post(
                "/api/v1/assignments",
                Some(token),
                &json!({ "course_id": course_id, "name": "Task 1", "rubric_id": rubric_id }),
            )
            .await
            .expect(StatusCode::CREATED)
            .json();
        assignment["id"].as_str().unwrap().to_string()
    }

    pub async fn grade(&self, token: &str, assignment_id: &str, student_id: &str, selections: &Value) -> Reply {
        self.put(
            &format!("/api/v1/assignments/{assignment_id}/grades/{student_id}"),
            token,
            &json!({ "selections": selections, "comment": "" }),
        )
        .await
    }

    /// Every file in the outbox directory, hidden or not.
    pub fn outbox_files(&self) -> Vec<PathBuf> {
        let mut files: Vec<PathBuf> = match std::fs::read_dir(&self.outbox) {
            Ok(entries) => entries.map(|e| e.unwrap().path()).filter(|p| p.is_file()).collect(),
            Err(_) => Vec::new(),
        };
        files.sort();
        files
    }
}

/// Two criteria of two levels each, worth 1 and 2 points.
pub fn two_by_two_rubric() -> Value {
    json!({
        "name": "Short answer",
        "description": "Two criteria",
        "criteria": [
            { "name": "Accuracy", "levels": [ { "label": "Partial", "points": "1" }, { "label": "Full", "points": "2" } ] },
            { "name": "Clarity", "levels": [ { "label": "Partial", "points": "1" }, { "label": "Full", "points": "2" } ] }
        ]
    })
}
