//! JSON file formats for pulse sequences and the bundled reference sequences.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Configuration, Layout, Pulse, PulseSequence, PulseStep};
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};
use crate::spin::SpinPair;

pub const TABLE1_CONFIG_A: &str = include_str!("../data/table1_configA.json");
pub const TABLE2_CONFIG_B: &str = include_str!("../data/table2_configB.json");
pub const TABLE3_WRAPPERS: &str = include_str!("../data/table3_wrappers.json");

/// Prefix selecting a bundled file instead of a path.
pub const BUILTIN_PREFIX: &str = "builtin:";

/// Bundled documents by name (with or without the `.json` suffix).
pub fn builtin(name: &str) -> Option<&'static str> {
    match name.trim_end_matches(".json") {
        "table1_configA" => Some(TABLE1_CONFIG_A),
        "table2_configB" => Some(TABLE2_CONFIG_B),
        "table3_wrappers" => Some(TABLE3_WRAPPERS),
        _ => None,
    }
}

pub const BUILTIN_NAMES: [&str; 3] = ["table1_configA", "table2_configB", "table3_wrappers"];

/// Reads `builtin:<name>` or a file path.
pub fn read_source(source: &str) -> Result<String> {
    if let Some(name) = source.strip_prefix(BUILTIN_PREFIX) {
        return builtin(name)
            .map(str::to_owned)
            .ok_or_else(|| Error::Parse(format!("no bundled file named {name:?}")));
    }
    Ok(std::fs::read_to_string(source)?)
}

fn default_fraction() -> f64 {
    0.5
}

fn default_strength() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseEntry {
    pub pair: SpinPair,
    pub duration: f64,
    #[serde(default = "default_strength")]
    pub strength: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepEntry {
    Pulses { pulses: Vec<PulseEntry> },
    Wait { wait: f64 },
}

/// On-disk form of a [`PulseSequence`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceFile {
    pub configuration: Layout,
    #[serde(default = "default_fraction")]
    pub jmax_fraction_fixed: f64,
    #[serde(default)]
    pub all_controllable: bool,
    pub steps: Vec<StepEntry>,
}

impl SequenceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(source: &str) -> Result<Self> {
        Self::from_json(&read_source(source)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sequence file serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn configuration(&self) -> Configuration {
        Configuration {
            layout: self.configuration,
            fully_controllable: self.all_controllable,
        }
    }

    /// Converts and validates.
    pub fn to_sequence<T: Real>(&self) -> Result<PulseSequence<T>> {
        let steps = self
            .steps
            .iter()
            .map(|s| match s {
                StepEntry::Wait { wait } => PulseStep::Wait(lit(*wait)),
                StepEntry::Pulses { pulses } => PulseStep::Pulses(
                    pulses
                        .iter()
                        .map(|p| Pulse::with_strength(p.pair, lit(p.duration), lit(p.strength)))
                        .collect(),
                ),
            })
            .collect();
        let seq = PulseSequence {
            configuration: self.configuration(),
            steps,
            jmax_fraction_fixed: lit(self.jmax_fraction_fixed),
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn from_sequence<T: Real>(seq: &PulseSequence<T>) -> Self {
        let steps = seq
            .steps
            .iter()
            .map(|s| match s {
                PulseStep::Wait(t) => StepEntry::Wait { wait: to_f64(*t) },
                PulseStep::Pulses(ps) => StepEntry::Pulses {
                    pulses: ps
                        .iter()
                        .map(|p| PulseEntry {
                            pair: p.pair,
                            duration: to_f64(p.duration),
                            strength: to_f64(p.strength),
                        })
                        .collect(),
                },
            })
            .collect();
        SequenceFile {
            configuration: seq.configuration.layout,
            jmax_fraction_fixed: to_f64(seq.jmax_fraction_fixed),
            all_controllable: seq.configuration.fully_controllable,
            steps,
        }
    }
}

/// Single-qubit sequences applied before and after a central gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WrappersFile {
    pub before: SequenceFile,
    pub after: SequenceFile,
}

impl WrappersFile {
    pub fn load(source: &str) -> Result<Self> {
        Ok(serde_json::from_str(&read_source(source)?)?)
    }
}

pub fn table1<T: Real>() -> PulseSequence<T> {
    SequenceFile::from_json(TABLE1_CONFIG_A)
        .and_then(|f| f.to_sequence())
        .expect("bundled table 1 is valid")
}

pub fn table2<T: Real>() -> PulseSequence<T> {
    SequenceFile::from_json(TABLE2_CONFIG_B)
        .and_then(|f| f.to_sequence())
        .expect("bundled table 2 is valid")
}

/// `(before, after)` wrappers of table 3.
pub fn table3<T: Real>() -> (PulseSequence<T>, PulseSequence<T>) {
    let w: WrappersFile = serde_json::from_str(TABLE3_WRAPPERS).expect("bundled table 3 parses");
    (
        w.before.to_sequence().expect("bundled table 3 is valid"),
        w.after.to_sequence().expect("bundled table 3 is valid"),
    )
}
