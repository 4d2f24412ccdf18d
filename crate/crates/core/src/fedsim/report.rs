//! Per-round CSV lines, the summary JSON and the printed table.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::Defense;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundReport {
    pub round: usize,
    pub defense: Defense,
    pub accepted: Vec<usize>,
    pub rejected: Vec<usize>,
    pub byzantine_submitted: usize,
    pub byzantine_accepted: usize,
    /// Median only: aggregate coordinates moved by the Byzantine inputs.
    pub influenced_coords: u64,
    pub total_coords: u64,
    /// Held-out accuracy after this round's tree.
    pub accuracy: f64,
    /// Verification and merge wall-clock, when timings are on.
    pub agg_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub defense: Defense,
    pub final_accuracy: f64,
    pub mean_agg_ms: Option<f64>,
    pub median_agg_ms: Option<f64>,
    pub poison_success: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub n_nodes: usize,
    pub n_byzantine: usize,
    pub rounds: usize,
    /// Gradient circuit size, when a zkp run took place.
    pub constraints: Option<usize>,
    pub records: Vec<SummaryRecord>,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// One row per defense: accuracy, aggregation time, poison success.
    pub fn table(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{:<8} {:>14} {:>16} {:>15}",
            "defense", "final_accuracy", "agg_ms_per_round", "poison_success"
        )
        .expect("string write");
        for r in &self.records {
            let ms = r
                .mean_agg_ms
                .map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
            let poison = match r.defense {
                Defense::Median => format!("{:.1}% (infl.)", 100.0 * r.poison_success),
                _ => format!("{:.1}%", 100.0 * r.poison_success),
            };
            writeln!(
                out,
                "{:<8} {:>13.1}% {:>16} {:>15}",
                r.defense.name(),
                100.0 * r.final_accuracy,
                ms,
                poison
            )
            .expect("string write");
        }
        out
    }
}

pub const ROUNDS_CSV_HEADER: &str = "round,defense,accepted,rejected,accuracy,agg_ms";

/// `round,defense,accepted,rejected,accuracy,agg_ms` with a header line;
/// `agg_ms` is empty without timings.
pub fn rounds_csv<'a>(reports: impl IntoIterator<Item = &'a RoundReport>) -> String {
    let mut out = String::from(ROUNDS_CSV_HEADER);
    out.push('\n');
    for r in reports {
        let ms = r.agg_ms.map_or_else(String::new, |v| format!("{v:.3}"));
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.round,
            r.defense.name(),
            r.accepted.len(),
            r.rejected.len(),
            r.accuracy,
            ms
        )
        .expect("string write");
    }
    out
}
