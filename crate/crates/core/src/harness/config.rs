use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{AnnealingSchedule, DEFAULT_FINAL_TEMPERATURE, DEFAULT_INITIAL_TEMPERATURE};
use crate::error::{Error, Result};
use crate::game::{ActivationOptions, ScanOrder, DEFAULT_MAX_CYCLES, DEFAULT_SHAPLEY_CAP};
use crate::geometry::Scenario;

/// Antenna-activation strategies compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Only the antenna closest to Bob.
    InitialSingleAntenna,
    Shapley,
    CoalitionValue,
    BruteForce,
    Annealing,
    FixedUla,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::InitialSingleAntenna,
        Method::Shapley,
        Method::CoalitionValue,
        Method::BruteForce,
        Method::Annealing,
        Method::FixedUla,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::InitialSingleAntenna => "initial-single-antenna",
            Method::Shapley => "shapley",
            Method::CoalitionValue => "coalition-value",
            Method::BruteForce => "brute-force",
            Method::Annealing => "annealing",
            Method::FixedUla => "fixed-ula",
        }
    }

    pub(crate) fn id(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.as_str() == s.trim()).ok_or_else(|| {
            let known: Vec<_> = Method::ALL.iter().map(|m| m.as_str()).collect();
            Error::Config(format!("unknown method {s:?}; expected one of {}", known.join(", ")))
        })
    }
}

/// Parses a comma-separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let methods = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(Method::from_str)
        .collect::<Result<Vec<_>>>()?;
    if methods.is_empty() {
        return Err(Error::Config("method list is empty".into()));
    }
    Ok(methods)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub trials: usize,
    pub master_seed: u64,
    pub workers: usize,
    pub methods: Vec<Method>,
    pub output: PathBuf,
    /// Fill the wall-time column. Off by default so reruns are byte-identical.
    pub timing: bool,
    /// Reuse the same drops at every sweep point (common random numbers), so
    /// differences between points are not swamped by drop-to-drop spread.
    pub paired_drops: bool,
}

impl RunSection {
    /// Sweep index that feeds the drop seed for sweep point `index`.
    pub fn drop_index(&self, index: usize) -> usize {
        if self.paired_drops {
            0
        } else {
            index
        }
    }
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            trials: 500,
            master_seed: 1,
            workers: 1,
            methods: vec![
                Method::InitialSingleAntenna,
                Method::Shapley,
                Method::CoalitionValue,
                Method::FixedUla,
            ],
            output: PathBuf::from("out"),
            timing: false,
            paired_drops: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerSweep {
    pub powers_dbm: Vec<f64>,
    pub antennas: usize,
}

impl Default for PowerSweep {
    fn default() -> Self {
        PowerSweep {
            powers_dbm: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            antennas: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaSweep {
    pub antennas: Vec<usize>,
    pub power_dbm: f64,
}

impl Default for AntennaSweep {
    fn default() -> Self {
        AntennaSweep {
            antennas: vec![5, 10, 15, 20],
            power_dbm: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceStudy {
    pub antennas: usize,
    pub power_dbm: f64,
}

impl Default for ConvergenceStudy {
    fn default() -> Self {
        ConvergenceStudy {
            antennas: 20,
            power_dbm: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameSection {
    pub max_cycles: usize,
    pub shapley_cap: usize,
    /// Seed for a shuffled scan order; ascending index order when absent.
    pub shuffle_seed: Option<u64>,
}

impl Default for GameSection {
    fn default() -> Self {
        GameSection {
            max_cycles: DEFAULT_MAX_CYCLES,
            shapley_cap: DEFAULT_SHAPLEY_CAP,
            shuffle_seed: None,
        }
    }
}

impl GameSection {
    pub fn options(&self) -> ActivationOptions {
        ActivationOptions {
            max_cycles: self.max_cycles,
            scan: match self.shuffle_seed {
                Some(seed) => ScanOrder::Shuffled { seed },
                None => ScanOrder::Ascending,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealingSection {
    pub steps: usize,
    pub initial_temperature: f64,
    pub final_temperature: f64,
}

impl Default for AnnealingSection {
    fn default() -> Self {
        AnnealingSection {
            steps: 100_000,
            initial_temperature: DEFAULT_INITIAL_TEMPERATURE,
            final_temperature: DEFAULT_FINAL_TEMPERATURE,
        }
    }
}

impl AnnealingSection {
    pub fn schedule(&self) -> Result<AnnealingSchedule> {
        AnnealingSchedule::decaying(self.initial_temperature, self.final_temperature, self.steps)
    }
}

/// Everything an experiment needs, loadable from a TOML file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub scenario: Scenario,
    pub power_sweep: PowerSweep,
    pub antenna_sweep: AntennaSweep,
    pub convergence: ConvergenceStudy,
    pub game: GameSection,
    pub annealing: AnnealingSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        ExperimentConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.run.trials == 0 {
            return fail("trials must be at least 1");
        }
        if self.run.workers == 0 {
            return fail("workers must be at least 1");
        }
        if self.run.methods.is_empty() {
            return fail("at least one method is required");
        }
        if self.power_sweep.powers_dbm.is_empty() || self.power_sweep.powers_dbm.iter().any(|p| !p.is_finite()) {
            return fail("power sweep needs a nonempty list of finite powers");
        }
        if self.antenna_sweep.antennas.is_empty() || self.antenna_sweep.antennas.contains(&0) {
            return fail("antenna sweep needs a nonempty list of positive counts");
        }
        let counts = self
            .antenna_sweep
            .antennas
            .iter()
            .chain([&self.power_sweep.antennas, &self.convergence.antennas]);
        for &n in counts {
            if n == 0 || n > 64 {
                return Err(Error::Config(format!("antenna count {n} outside 1..=64")));
            }
        }
        if self.game.max_cycles == 0 {
            return fail("max_cycles must be at least 1");
        }
        self.annealing.schedule()?;
        Ok(())
    }
}
