use std::path::Path;

use serde::Serialize;

use iot_energy::units::{linear_to_db, watts_to_dbm};
use iot_energy::{ChannelSpec, RadioConfig};

use crate::args::Common;
use crate::Failure;

#[derive(Debug, Serialize)]
struct DbEcho {
    noise_dbm: f64,
    pathloss_db: f64,
    mean_interference_dbm: f64,
}

/// Everything needed to rerun a command and get identical CSV output.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a, P: Serialize> {
    pub command: &'a str,
    pub tool_version: &'static str,
    pub common: &'a Common,
    pub radio: RadioConfig,
    db: DbEcho,
    pub channel: &'a ChannelSpec,
    pub interference: String,
    pub parameters: &'a P,
    pub outputs: Vec<String>,
}

impl<'a, P: Serialize> RunManifest<'a, P> {
    pub fn new(
        command: &'a str,
        common: &'a Common,
        radio: RadioConfig,
        channel: &'a ChannelSpec,
        parameters: &'a P,
    ) -> Result<Self, Failure> {
        let mean = channel.interference.mean_watts()?;
        Ok(Self {
            command,
            tool_version: env!("CARGO_PKG_VERSION"),
            common,
            radio,
            db: DbEcho {
                noise_dbm: watts_to_dbm(radio.noise_w),
                pathloss_db: linear_to_db(radio.pathloss_const),
                mean_interference_dbm: watts_to_dbm(mean),
            },
            channel,
            interference: channel.interference.to_string(),
            parameters,
            outputs: Vec::new(),
        })
    }

    /// Writes `<command>.manifest.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), Failure> {
        let path = dir.join(format!("{}.manifest.json", self.command));
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Failure::Validation(format!("manifest: {e}")))?;
        std::fs::write(&path, text + "\n")
            .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
    }
}
