//! Versioned JSON document wrapping a fabric, with optional tables and
//! metrics attached.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use oxc_core::metrics::{CablingReport, ComponentCensus, LossBudget};
use oxc_core::shuffle::ConnectivityTable;
use oxc_core::topology::FabricTopology;

pub const SCHEMA_VERSION: u32 = 1;

/// Scalability and loss figures for one fabric dimensioning.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsReport {
    pub census: ComponentCensus,
    pub cabling: Vec<CablingReport>,
    pub loss: Vec<LossBudget>,
}

/// Self-describing export format: everything needed to reconstruct the
/// fabric, plus whatever reports the producer chose to attach.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExportDocument {
    pub schema_version: u32,
    pub topology: FabricTopology,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tables: Option<Vec<ConnectivityTable>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
}

impl ExportDocument {
    pub fn new(topology: FabricTopology) -> ExportDocument {
        ExportDocument {
            schema_version: SCHEMA_VERSION,
            topology,
            tables: None,
            metrics: None,
        }
    }

    /// Deterministic pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self).context("serializing document")?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<ExportDocument> {
        let document: ExportDocument =
            serde_json::from_str(text).context("parsing fabric document")?;
        if document.schema_version != SCHEMA_VERSION {
            bail!(
                "unsupported schema version {} (this build reads version {})",
                document.schema_version,
                SCHEMA_VERSION
            );
        }
        Ok(document)
    }
}
