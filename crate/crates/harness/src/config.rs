//! Experiment configuration and result records, with per-experiment
//! defaults matching the built-in studies.

use serde::{Deserialize, Serialize};

use qst_core::noise::{DephasingSpec, NoiseConfig, ReadoutSpec};

use crate::{HarnessError, Result};

/// Dimensions the sweep study covers: qubit registers up to four qubits.
pub const SWEEP_DIMS: [usize; 4] = [2, 4, 8, 16];

/// Readout error rates measured on the reference superconducting qubit:
/// 16/1024 and 85/1024 calibration flips.
pub const CALIBRATED_P10: f64 = 0.015625;
pub const CALIBRATED_P01: f64 = 0.0830078125;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Compare,
    Sweep,
    QuditDephasing,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Compare => "compare",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::QuditDephasing => "qudit_dephasing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Pauli,
    Mub,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Standard,
    Fuzzy,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Standard => "standard",
            ModelKind::Fuzzy => "fuzzy",
        }
    }
}

/// One experiment, fully specified. `dims` lists the Hilbert-space
/// dimensions (a single entry except for sweeps); `states` holds explicit
/// probe states as unnormalized (re, im) amplitude pairs and is only used
/// by the compare study, which probes fixed states rather than Haar draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_qubits: Option<usize>,
    pub protocol: ProtocolKind,
    #[serde(default, skip_serializing_if = "NoiseConfig::is_empty")]
    pub noise: NoiseConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub noise_levels: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub states: Vec<Vec<(f64, f64)>>,
    pub n_total: u64,
    pub n_trials: usize,
    pub n_haar_states: usize,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

impl ExperimentConfig {
    /// Standard-vs-fuzzy comparison on the four reference qubit states
    /// under the calibrated readout rates.
    pub fn default_compare() -> Self {
        Self {
            experiment: ExperimentKind::Compare,
            dims: vec![2],
            n_qubits: None,
            protocol: ProtocolKind::Pauli,
            noise: NoiseConfig {
                readout: Some(ReadoutSpec::Uniform {
                    p10: CALIBRATED_P10,
                    p01: CALIBRATED_P01,
                }),
                dephasing: None,
            },
            noise_levels: Vec::new(),
            states: vec![
                vec![(1.0, 0.0), (0.0, -1.0)],
                vec![(1.0, 0.0), (0.0, 1.0)],
                vec![(1.0, 0.0), (1.0, 0.0)],
                vec![(1.0, 0.0), (-1.0, 0.0)],
            ],
            n_total: 3072,
            n_trials: 100,
            n_haar_states: 1,
            master_seed: 20260813,
            output_path: None,
        }
    }

    /// Theoretical loss-functional sweep over dimension and symmetric
    /// readout level, Haar-averaged with common states across levels.
    pub fn default_sweep() -> Self {
        Self {
            experiment: ExperimentKind::Sweep,
            dims: SWEEP_DIMS.to_vec(),
            n_qubits: None,
            protocol: ProtocolKind::Pauli,
            noise: NoiseConfig::default(),
            noise_levels: vec![0.0, 0.03, 0.1],
            states: Vec::new(),
            n_total: 10_000,
            n_trials: 1,
            n_haar_states: 200,
            master_seed: 20260813,
            output_path: None,
        }
    }

    /// Desk-scale qudit dephasing study: dimension 8, nine mutually
    /// unbiased bases, g = 0.05. Shot count is the multiple of the nine
    /// settings nearest 10^4 from above.
    pub fn default_qudit() -> Self {
        Self {
            experiment: ExperimentKind::QuditDephasing,
            dims: vec![8],
            n_qubits: None,
            protocol: ProtocolKind::Mub,
            noise: NoiseConfig {
                readout: None,
                dephasing: Some(DephasingSpec { g: 0.05 }),
            },
            noise_levels: Vec::new(),
            states: Vec::new(),
            n_total: 10_008,
            n_trials: 20,
            n_haar_states: 20,
            master_seed: 20260813,
            output_path: None,
        }
    }

    /// Full-scale variant of the qudit study: 10^6 shots (rounded to a
    /// multiple of nine settings), 200 trials. Minutes, not seconds.
    pub fn paper_scale_qudit() -> Self {
        Self {
            n_total: 999_999,
            n_trials: 200,
            n_haar_states: 200,
            ..Self::default_qudit()
        }
    }

    pub fn default_for(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::Compare => Self::default_compare(),
            ExperimentKind::Sweep => Self::default_sweep(),
            ExperimentKind::QuditDephasing => Self::default_qudit(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(HarnessError::Config(msg));
        if self.n_total == 0 || self.n_trials == 0 || self.n_haar_states == 0 {
            return err("n_total, n_trials and n_haar_states must be positive".into());
        }
        if let Some(n) = self.n_qubits {
            if !self.dims.is_empty() {
                return err("give dims or n_qubits, not both".into());
            }
            if n == 0 || n > 4 {
                return err(format!("n_qubits {n} outside 1..=4"));
            }
        } else if self.dims.is_empty() {
            return err("dims (or n_qubits) required".into());
        }
        let dims = self.resolved_dims();
        for &d in &dims {
            let ok = match self.protocol {
                ProtocolKind::Pauli => d.is_power_of_two() && d <= 16,
                ProtocolKind::Mub => qst_core::protocols::SUPPORTED_DIMS.contains(&d),
            };
            if !ok {
                return err(format!(
                    "dim {d} unsupported for the {:?} protocol",
                    self.protocol
                ));
            }
        }
        match self.experiment {
            ExperimentKind::Compare => {
                if self.noise.is_empty() {
                    return err("compare requires a noise block".into());
                }
                if self.states.is_empty() {
                    return err("compare requires at least one probe state".into());
                }
                if dims.len() != 1 {
                    return err("compare runs at a single dimension".into());
                }
                for (i, s) in self.states.iter().enumerate() {
                    if s.len() != dims[0] {
                        return err(format!(
                            "state {i} has {} amplitudes, expected {}",
                            s.len(),
                            dims[0]
                        ));
                    }
                }
            }
            ExperimentKind::Sweep => {
                if self.protocol != ProtocolKind::Pauli {
                    return err("sweep requires the pauli protocol".into());
                }
                if !dims.iter().all(|d| SWEEP_DIMS.contains(d)) {
                    return err(format!("sweep dims must lie in {SWEEP_DIMS:?}"));
                }
                if self.noise_levels.is_empty() {
                    return err("sweep requires noise_levels".into());
                }
                if !self.noise_levels.iter().all(|p| (0.0..1.0).contains(p)) {
                    return err("noise_levels must lie in [0, 1)".into());
                }
                if !self.noise.is_empty() {
                    return err("sweep takes noise_levels, not a noise block".into());
                }
            }
            ExperimentKind::QuditDephasing => {
                if self.protocol != ProtocolKind::Mub {
                    return err("the qudit study requires the mub protocol".into());
                }
                if dims.len() != 1 {
                    return err("the qudit study runs at a single dimension".into());
                }
                if self.noise.is_empty() {
                    return err("the qudit study requires a noise block".into());
                }
            }
        }
        Ok(())
    }

    /// Dimension list with `n_qubits` shorthand expanded.
    pub fn resolved_dims(&self) -> Vec<usize> {
        match self.n_qubits {
            Some(n) => vec![1usize << n],
            None => self.dims.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One reconstruction outcome. The compare study numbers its fixed probe
/// states; Haar studies set `state_id` to the trial index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub state_id: usize,
    pub model: ModelKind,
    pub fidelity: f64,
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// One theoretical loss-functional evaluation L = n·Σd_j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryRecord {
    pub dim: usize,
    pub noise: f64,
    pub state_id: usize,
    #[serde(rename = "L")]
    pub l: f64,
}

/// Per-model loss summary; `state_id` is None when pooled over Haar draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAggregate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_id: Option<usize>,
    pub model: ModelKind,
    pub mean_fidelity: f64,
    pub min_loss: f64,
    pub mean_loss: f64,
    pub max_loss: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupremacyEntry {
    pub state_id: usize,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAggregate {
    pub dim: usize,
    pub noise: f64,
    #[serde(rename = "min_L")]
    pub min_l: f64,
    #[serde(rename = "mean_L")]
    pub mean_l: f64,
    #[serde(rename = "max_L")]
    pub max_l: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<ModelAggregate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub supremacy: Vec<SupremacyEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepAggregate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub improvement_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory_mean_loss: Option<f64>,
}

/// Complete experiment output. Aggregates are stored redundantly and
/// cross-checked against the records on load; the timestamp (unix seconds)
/// is the one field excluded from reproducibility comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub timestamp: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<TrialRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theory_records: Vec<TheoryRecord>,
    pub aggregates: Aggregates,
}
