//! Run artifacts: `result.json`, `report.csv`, and `log.txt` in one
//! directory per run. Documents are deterministic — sorted JSON keys,
//! fixed-width scientific floats, no timestamps — so identical configs
//! and seeds reproduce byte-identical files.

use std::path::Path;

use serde_json::{json, Map, Value};

use balayage_core::json::{fmt_f64, to_string_sci};
use balayage_core::{BalayageResult64, KktResiduals, RegionMask};

use crate::AppError;

pub struct Artifacts {
    pub result: Value,
    pub csv: String,
    pub log: String,
}

pub fn write_run(dir: &Path, artifacts: &Artifacts) -> Result<(), AppError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| AppError::config(format!("cannot create {}: {e}", dir.display())))?;
    let io = |e: std::io::Error| AppError::config(format!("cannot write results: {e}"));
    std::fs::write(dir.join("result.json"), to_string_sci(&artifacts.result)).map_err(io)?;
    std::fs::write(dir.join("report.csv"), &artifacts.csv).map_err(io)?;
    std::fs::write(dir.join("log.txt"), &artifacts.log).map_err(io)?;
    Ok(())
}

/// Shared metadata every result document embeds.
pub struct Meta {
    pub command: &'static str,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub kernel: Value,
    pub diag_rule: Value,
    pub solver: Value,
    pub space_id: Option<String>,
}

impl Meta {
    pub fn into_document(self, payload: Map<String, Value>) -> Value {
        let mut doc = Map::new();
        doc.insert("command".into(), json!(self.command));
        doc.insert("config_hash".into(), json!(self.config_hash));
        doc.insert("diag_rule".into(), self.diag_rule);
        doc.insert("kernel".into(), self.kernel);
        doc.insert(
            "seed".into(),
            self.seed.map(|s| json!(s)).unwrap_or(Value::Null),
        );
        doc.insert("solver".into(), self.solver);
        doc.insert(
            "space_id".into(),
            self.space_id.map(|s| json!(s)).unwrap_or(Value::Null),
        );
        doc.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
        for (k, v) in payload {
            doc.insert(k, v);
        }
        Value::Object(doc)
    }
}

pub fn kkt_json(kkt: &KktResiduals<f64>) -> Value {
    json!({
        "stationarity": kkt.stationarity,
        "feasibility": kkt.feasibility,
        "complementarity": kkt.complementarity,
    })
}

/// The sweep payload the CLI contract pins: swept weights, active set,
/// KKT residuals, distance, iterations, off-mask domination count.
pub fn sweep_json(r: &BalayageResult64) -> Value {
    json!({
        "swept": r.swept.weights(),
        "active_set": r.active_set,
        "kkt": kkt_json(&r.kkt),
        "distance": r.distance,
        "iterations": r.iterations,
        "scale": r.scale,
        "outer": r.outer,
        "domination_violations": r.domination.count_off_mask,
        "domination_violations_on_mask": r.domination.count_on_mask,
    })
}

pub fn mask_json(mask: &RegionMask) -> Value {
    json!({"size": mask.len(), "indices": mask.indices()})
}

/// CSV of index/weight rows for a weight vector.
pub fn weights_csv(weights: &[f64]) -> String {
    let mut out = String::from("index,weight\n");
    for (i, w) in weights.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", fmt_f64(*w)));
    }
    out
}
