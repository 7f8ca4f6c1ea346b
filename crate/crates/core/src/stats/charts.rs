use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{threshold_partition, Dataset, StatsError};
use crate::domain::Id;
use crate::score::Score;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    Bar,
    Pie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub label: String,
    pub value: f64,
}

/// A renderable series. Renderers draw it; they never recompute it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartData {
    pub kind: ChartKind,
    pub title: String,
    pub series: Vec<ChartPoint>,
}

/// Total marks per student, in the order of `scores`.
pub fn bar_chart_data(scores: &[(Id, Score)], names: &HashMap<Id, String>) -> Result<ChartData, StatsError> {
    let series = scores
        .iter()
        .map(|(id, total)| {
            let name = names.get(id).ok_or_else(|| StatsError::UnknownStudent(id.clone()))?;
            Ok(ChartPoint { label: name.clone(), value: total.to_f64() })
        })
        .collect::<Result<_, StatsError>>()?;
    Ok(ChartData { kind: ChartKind::Bar, title: "Total marks".into(), series })
}

/// Two slices: strictly below `threshold`, and at or above it.
pub fn pie_chart_data(d: &Dataset, threshold: f64) -> ChartData {
    let p = threshold_partition(d, threshold);
    ChartData {
        kind: ChartKind::Pie,
        title: "Threshold marks".into(),
        series: vec![
            ChartPoint { label: format!("below {threshold}"), value: p.below as f64 },
            ChartPoint { label: format!("at or above {threshold}"), value: p.at_or_above as f64 },
        ],
    }
}
