//! JSON-lines log of binary outcomes and post-measurement norms.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: usize,
    pub label: String,
    pub outcome: bool,
    pub norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceLog {
    pub events: Vec<TraceEvent>,
}

impl TraceLog {
    pub fn record(&mut self, label: &str, outcome: bool, norm: f64) {
        let step = self.events.len();
        self.events.push(TraceEvent { step, label: label.to_string(), outcome, norm });
    }

    pub fn to_jsonl(&self) -> String {
        self.events
            .iter()
            .map(|e| serde_json::to_string(e).expect("plain struct") + "\n")
            .collect()
    }

    pub fn max_norm_error(&self) -> f64 {
        self.events.iter().map(|e| (e.norm - 1.0).abs()).fold(0.0, f64::max)
    }
}
