//! Machine-readable run reports.
//!
//! Every command can emit one JSON document carrying the full-precision
//! results next to an echo of the parsed config, so a run can be reproduced
//! from its own report. CSV artifacts stay timestamp-free; the timestamp
//! lives only here.

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use serde_json::Value;

use crate::config::LoopConfigFile;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
pub struct RunReport<'a> {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub timestamp: String,
    pub config: &'a LoopConfigFile,
    pub results: Value,
}

impl<'a> RunReport<'a> {
    pub fn new(command: &'static str, config: &'a LoopConfigFile, results: Value) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
            config,
            results,
        }
    }

    pub fn print(&self) {
        println!(
            "{}",
            serde_json::to_string_pretty(self).expect("report serializes")
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_carries_schema_and_echo() {
        let cfg: LoopConfigFile = toml::from_str(
            "[plant]\nnum = [0.0, 1.0]\nden = [1.0, 0.5]\n[noise]\nsigma_w2 = 1.0\nsigma_v2 = 2.0\n",
        )
        .unwrap();
        let report = RunReport::new("analyze", &cfg, serde_json::json!({ "ok": true }));
        let value = serde_json::to_value(&report).unwrap();
        assert_eq!(value["schema_version"], 1);
        assert_eq!(value["command"], "analyze");
        assert_eq!(value["config"]["noise"]["sigma_v2"], 2.0);
        assert_eq!(value["results"]["ok"], true);
        let echoed: LoopConfigFile = serde_json::from_value(value["config"].clone()).unwrap();
        assert!(echoed.to_loop().is_ok());
    }
}
