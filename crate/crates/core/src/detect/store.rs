//! Line-delimited JSON persistence.
//!
//! The profile log holds one full profile per line; the last line for a
//! device wins. Compaction rewrites the log with one line per device and
//! swaps it in by rename, so readers always see a complete file.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DetectError, DeviceProfile, Verdict};

fn io_err(e: std::io::Error) -> DetectError {
    DetectError::Io(e.to_string())
}

/// Single-writer handle: every mutation goes through `&mut self`.
#[derive(Debug)]
pub struct ProfileStore {
    path: PathBuf,
    profiles: BTreeMap<String, DeviceProfile>,
    log_lines: usize,
}

impl ProfileStore {
    /// Loads an existing log or starts an empty one.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, DetectError> {
        let path = path.as_ref().to_path_buf();
        let mut profiles = BTreeMap::new();
        let mut log_lines = 0;
        if path.exists() {
            let reader = BufReader::new(File::open(&path).map_err(io_err)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(io_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                let profile: DeviceProfile = serde_json::from_str(&line)
                    .map_err(|e| DetectError::Corrupt { line: i + 1, message: e.to_string() })?;
                profile.validate().map_err(|e| DetectError::Corrupt { line: i + 1, message: e.to_string() })?;
                profiles.insert(profile.device_id.clone(), profile);
                log_lines += 1;
            }
        }
        Ok(Self { path, profiles, log_lines })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, device_id: &str) -> Option<&DeviceProfile> {
        self.profiles.get(device_id)
    }

    pub fn devices(&self) -> impl Iterator<Item = &DeviceProfile> {
        self.profiles.values()
    }

    pub fn log_lines(&self) -> usize {
        self.log_lines
    }

    /// Appends the profile to the log and makes it current.
    pub fn put(&mut self, profile: DeviceProfile) -> Result<(), DetectError> {
        profile.validate()?;
        let mut file = OpenOptions::new().create(true).append(true).open(&self.path).map_err(io_err)?;
        let line = serde_json::to_string(&profile).map_err(|e| DetectError::Io(e.to_string()))?;
        writeln!(file, "{line}").map_err(io_err)?;
        self.log_lines += 1;
        self.profiles.insert(profile.device_id.clone(), profile);
        Ok(())
    }

    /// Rewrites the log with the current profile of each device.
    pub fn compact(&mut self) -> Result<(), DetectError> {
        let tmp = self.path.with_extension("jsonl.tmp");
        {
            let mut out = BufWriter::new(File::create(&tmp).map_err(io_err)?);
            for profile in self.profiles.values() {
                let line = serde_json::to_string(profile).map_err(|e| DetectError::Io(e.to_string()))?;
                writeln!(out, "{line}").map_err(io_err)?;
            }
            out.flush().map_err(io_err)?;
        }
        fs::rename(&tmp, &self.path).map_err(io_err)?;
        self.log_lines = self.profiles.len();
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictEvent {
    pub device_id: String,
    pub rx_time_ns: i64,
    pub verdict: Verdict,
    pub detail: String,
}

/// Writes one event as a JSON line.
pub fn write_verdict_event<W: Write>(out: &mut W, event: &VerdictEvent) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, event)?;
    out.write_all(b"\n")
}
