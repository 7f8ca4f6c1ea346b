use std::collections::HashSet;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Id;
use crate::score::Score;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RubricError {
    #[error("a rubric needs at least one criterion")]
    EmptyCriteria,
    #[error("criterion {0:?} appears more than once")]
    DuplicateCriterion(String),
    #[error("criterion {criterion:?} has {count} level(s); at least 2 are required")]
    TooFewLevels { criterion: String, count: usize },
    #[error("level {level:?} of criterion {criterion:?} has negative points")]
    NegativePoints { criterion: String, level: String },
    #[error("level points of criterion {criterion:?} must be strictly increasing")]
    NonMonotonicLevels { criterion: String },
    #[error("criterion {criterion:?} has two levels labelled {label:?}")]
    DuplicateLevel { criterion: String, label: String },
    #[error("rubric file is malformed: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerformanceLevel {
    pub label: String,
    pub points: Score,
}

impl PerformanceLevel {
    pub fn new(label: impl Into<String>, points: impl Into<Score>) -> Self {
        PerformanceLevel { label: label.into(), points: points.into() }
    }
}

/// One assessed dimension; levels are ordered from weakest to strongest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub levels: Vec<PerformanceLevel>,
}

impl Criterion {
    pub fn new(name: impl Into<String>, levels: Vec<PerformanceLevel>) -> Self {
        Criterion { name: name.into(), levels }
    }

    pub fn level(&self, label: &str) -> Option<&PerformanceLevel> {
        self.levels.iter().find(|l| l.label == label)
    }

    pub fn level_with_points(&self, points: Score) -> Option<&PerformanceLevel> {
        self.levels.iter().find(|l| l.points == points)
    }

    pub fn max_points(&self) -> Score {
        // levels are strictly increasing, so the last one is the maximum
        self.levels.last().map(|l| l.points).unwrap_or(Score::ZERO)
    }

    pub fn min_points(&self) -> Score {
        self.levels.first().map(|l| l.points).unwrap_or(Score::ZERO)
    }
}

/// Unvalidated rubric shape, as read from JSON bodies and rubric files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RubricDraft {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<Id>,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub predefined: bool,
    pub criteria: Vec<Criterion>,
}

impl RubricDraft {
    pub fn build(self) -> Result<Rubric, RubricError> {
        let id = self.id.unwrap_or_else(Id::generate);
        Rubric::with_id(id, self.name, self.description, self.predefined, self.criteria)
    }
}

/// A validated rubric. Construction enforces every structural invariant, so
/// holders never need to re-check criteria or level ordering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RubricDraft")]
pub struct Rubric {
    id: Id,
    name: String,
    description: String,
    predefined: bool,
    criteria: Vec<Criterion>,
}

impl TryFrom<RubricDraft> for Rubric {
    type Error = RubricError;

    fn try_from(draft: RubricDraft) -> Result<Self, Self::Error> {
        draft.build()
    }
}

impl Rubric {
    /// Validates `criteria` and assigns a fresh id.
    pub fn new(name: impl Into<String>, criteria: Vec<Criterion>, predefined: bool) -> Result<Rubric, RubricError> {
        Rubric::with_id(Id::generate(), name, String::new(), predefined, criteria)
    }

    pub fn with_id(
        id: Id,
        name: impl Into<String>,
        description: impl Into<String>,
        predefined: bool,
        criteria: Vec<Criterion>,
    ) -> Result<Rubric, RubricError> {
        validate_criteria(&criteria)?;
        Ok(Rubric { id, name: name.into(), description: description.into(), predefined, criteria })
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Rubric {
        self.description = description.into();
        self
    }

    pub fn id(&self) -> &Id {
        &self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn is_predefined(&self) -> bool {
        self.predefined
    }

    pub fn criteria(&self) -> &[Criterion] {
        &self.criteria
    }

    pub fn criterion(&self, name: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.name == name)
    }

    pub fn max_score(&self) -> Score {
        self.criteria.iter().map(Criterion::max_points).sum()
    }

    pub fn to_draft(&self) -> RubricDraft {
        RubricDraft {
            id: Some(self.id.clone()),
            name: self.name.clone(),
            description: self.description.clone(),
            predefined: self.predefined,
            criteria: self.criteria.clone(),
        }
    }

    /// Parses a rubric definition file (TOML). A missing `id` gets a fresh one.
    pub fn from_toml_str(text: &str) -> Result<Rubric, RubricError> {
        let draft: RubricDraft = toml::from_str(text).map_err(|e| RubricError::Format(e.message().to_string()))?;
        draft.build()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_draft()).expect("rubric drafts always serialize to TOML")
    }
}

/// Sum over criteria of the highest level's points.
pub fn rubric_max_score(rubric: &Rubric) -> Score {
    rubric.max_score()
}

fn validate_criteria(criteria: &[Criterion]) -> Result<(), RubricError> {
    if criteria.is_empty() {
        return Err(RubricError::EmptyCriteria);
    }
    let mut seen = HashSet::new();
    for criterion in criteria {
        if !seen.insert(criterion.name.as_str()) {
            return Err(RubricError::DuplicateCriterion(criterion.name.clone()));
        }
        if criterion.levels.len() < 2 {
            return Err(RubricError::TooFewLevels { criterion: criterion.name.clone(), count: criterion.levels.len() });
        }
        if let Some(level) = criterion.levels.iter().find(|l| l.points.is_negative()) {
            return Err(RubricError::NegativePoints { criterion: criterion.name.clone(), level: level.label.clone() });
        }
        if criterion.levels.windows(2).any(|w| w[0].points >= w[1].points) {
            return Err(RubricError::NonMonotonicLevels { criterion: criterion.name.clone() });
        }
        let mut labels = HashSet::new();
        for level in &criterion.levels {
            if !labels.insert(level.label.as_str()) {
                return Err(RubricError::DuplicateLevel { criterion: criterion.name.clone(), label: level.label.clone() });
            }
        }
    }
    Ok(())
}

static BUILTIN: LazyLock<Vec<Rubric>> = LazyLock::new(|| {
    let general_levels = ["Beginning", "Developing", "Proficient", "Exemplary"];
    let general = ["Content", "Organization", "Presentation", "Mechanics"]
        .iter()
        .map(|name| {
            let levels = general_levels.iter().zip(1..).map(|(label, p)| PerformanceLevel::new(*label, p)).collect();
            Criterion::new(*name, levels)
        })
        .collect();

    let exam_levels = ["None", "Limited", "Partial", "Substantial", "Complete"];
    let exam = ["Conceptual Understanding", "Problem Solving", "Communication"]
        .iter()
        .map(|name| {
            let levels = exam_levels.iter().zip(0..).map(|(label, p)| PerformanceLevel::new(*label, p)).collect();
            Criterion::new(*name, levels)
        })
        .collect();

    vec![
        Rubric::with_id(
            Id::from("builtin-general-assignment"),
            "General Assignment",
            "Four criteria scored from 1 (beginning) to 4 (exemplary).",
            true,
            general,
        )
        .expect("builtin rubric is valid"),
        Rubric::with_id(
            Id::from("builtin-exam"),
            "Exam",
            "Three criteria scored from 0 (none) to 4 (complete).",
            true,
            exam,
        )
        .expect("builtin rubric is valid"),
    ]
});

/// The predefined rubric templates shipped with this release.
pub fn builtin_rubrics() -> Vec<Rubric> {
    BUILTIN.clone()
}
