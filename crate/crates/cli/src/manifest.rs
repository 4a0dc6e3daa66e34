use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use serde_json::Value;

/// Provenance attached to every report.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub seed: u64,
    pub versions: String,
    pub started_at: String,
    pub finished_at: Option<String>,
    /// Full search configuration, defaults included.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<Value>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn start(argv: &[String]) -> Self {
        let command = argv
            .iter()
            .skip(1)
            .take_while(|a| !a.starts_with('-'))
            .cloned()
            .collect::<Vec<_>>()
            .join(" ");
        Self {
            command,
            argv: argv.to_vec(),
            seed: 0,
            versions: format!("nildist {}", env!("CARGO_PKG_VERSION")),
            started_at: now(),
            finished_at: None,
            config: None,
        }
    }

    pub fn finish(&mut self) {
        self.finished_at = Some(now());
    }
}
