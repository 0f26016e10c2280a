//! Experiment configuration: JSON-mirrored records resolving to model
//! parameters, initial states, observables, and time grids.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::hilbert::{kron, Ket, Operator};
use crate::models::ModelParams;
use crate::operators::{
    atom_ket, coherent_state, collective_spin, composite_ket, fock_state, number_operator,
    pauli_ops, AtomState,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Tomography,
    RatioCurves,
    Qfi,
    Validate,
}

/// Complex number as a {re, im} pair in config files.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ComplexSpec {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl From<ComplexSpec> for Complex64 {
    fn from(c: ComplexSpec) -> Self {
        Complex64::new(c.re, c.im)
    }
}

/// Initial-state specification. Field-only specs are completed with the
/// model's all-ground atomic state by the experiment drivers.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSpec {
    /// Number state of the field.
    Fock { n: usize },
    /// Coherent state of the field.
    Coherent { re: f64, im: f64 },
    /// Two-level atomic state by its ground/excited amplitudes.
    Atom { c_g: ComplexSpec, c_e: ComplexSpec },
    /// Collective all-ground state |N/2, -N/2>.
    DickeGround,
    /// Explicit field (x) atom product.
    Product {
        field: Box<StateSpec>,
        atom: Box<StateSpec>,
    },
}

impl StateSpec {
    /// Resolve a field-only spec on the model's Fock space.
    pub fn resolve_field(&self, params: &ModelParams) -> Result<Ket> {
        match self {
            StateSpec::Fock { n } => fock_state(*n, params.cutoff),
            StateSpec::Coherent { re, im } => coherent_state(Complex64::new(*re, *im), params.cutoff),
            other => Err(Error::Config {
                reason: format!("expected a field state (fock/coherent), got {other:?}"),
            }),
        }
    }

    /// Resolve an atom-only spec on the model's atomic space.
    pub fn resolve_atom(&self, params: &ModelParams) -> Result<Ket> {
        match self {
            StateSpec::Atom { c_g, c_e } => {
                if params.kind.is_collective() {
                    return Err(Error::Config {
                        reason: "two-level atom amplitudes need a single-atom model".into(),
                    });
                }
                Ok(atom_ket(AtomState::new((*c_g).into(), (*c_e).into())?))
            }
            StateSpec::DickeGround => params.ground_atom(),
            other => Err(Error::Config {
                reason: format!("expected an atom state (atom/dicke_ground), got {other:?}"),
            }),
        }
    }

    /// Resolve to a ket on the full field (x) atom space; bare field specs
    /// are completed with the all-ground atomic state, bare atom specs with
    /// the field vacuum.
    pub fn resolve_full(&self, params: &ModelParams) -> Result<Ket> {
        match self {
            StateSpec::Product { field, atom } => {
                let f = field.resolve_field(params)?;
                let a = atom.resolve_atom(params)?;
                composite_ket(&f, &a)
            }
            StateSpec::Fock { .. } | StateSpec::Coherent { .. } => {
                let f = self.resolve_field(params)?;
                composite_ket(&f, &params.ground_atom()?)
            }
            StateSpec::Atom { .. } | StateSpec::DickeGround => {
                let f = fock_state(0, params.cutoff)?;
                let a = self.resolve_atom(params)?;
                composite_ket(&f, &a)
            }
        }
    }
}

/// Directly measured observable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    #[serde(rename = "sigma_z")]
    SigmaZ,
    #[serde(rename = "photon_number")]
    PhotonNumber,
    #[serde(rename = "J_z")]
    Jz,
}

impl Observable {
    pub fn label(self) -> &'static str {
        match self {
            Observable::SigmaZ => "sigma_z",
            Observable::PhotonNumber => "photon_number",
            Observable::Jz => "J_z",
        }
    }

    /// Build the observable on the full product space of the model.
    pub fn build(self, params: &ModelParams) -> Result<Operator> {
        let id_field = Operator::identity(params.cutoff.dim());
        let id_atom = Operator::identity(params.atom_dim());
        match self {
            Observable::SigmaZ => {
                if params.kind.is_collective() {
                    return Err(Error::Config {
                        reason: "sigma_z readout needs a single-atom model; use J_z".into(),
                    });
                }
                kron(&id_field, &pauli_ops().z)
            }
            Observable::Jz => {
                if !params.kind.is_collective() {
                    return Err(Error::Config {
                        reason: "J_z readout needs a collective model; use sigma_z".into(),
                    });
                }
                kron(&id_field, &collective_spin(params.n_atoms)?.z)
            }
            Observable::PhotonNumber => kron(&number_operator(params.cutoff)?, &id_atom),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpacing {
    Linear,
    Log,
}

/// Sampling grid in units of 1/g, matching the experiment time axes.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub spacing: GridSpacing,
}

/// Limit studies default to a dense log grid near the origin; plot-oriented
/// runs override it with a linear grid in their configs.
impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid {
            t_min: 1e-5,
            t_max: 1e-1,
            points: 400,
            spacing: GridSpacing::Log,
        }
    }
}

impl TimeGrid {
    pub fn validate(&self) -> Result<()> {
        if self.t_min.is_nan() || self.t_min < 0.0 {
            return Err(Error::Config {
                reason: "t_min must be nonnegative".into(),
            });
        }
        if self.points < 2 {
            return Err(Error::Config {
                reason: "time grid needs at least 2 points".into(),
            });
        }
        if self.t_max <= self.t_min {
            return Err(Error::Config {
                reason: "t_max must exceed t_min".into(),
            });
        }
        if self.spacing == GridSpacing::Log && self.t_min <= 0.0 {
            return Err(Error::Config {
                reason: "log spacing needs t_min > 0".into(),
            });
        }
        Ok(())
    }

    /// Times in units of 1/g.
    pub fn times(&self) -> Vec<f64> {
        let n = self.points;
        match self.spacing {
            GridSpacing::Linear => (0..n)
                .map(|k| self.t_min + (self.t_max - self.t_min) * k as f64 / (n - 1) as f64)
                .collect(),
            GridSpacing::Log => {
                let (a, b) = (self.t_min.ln(), self.t_max.ln());
                (0..n)
                    .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
                    .collect()
            }
        }
    }
}

/// One experiment run, mirrored one-to-one by the JSON config files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: ModelParams,
    pub target_state: StateSpec,
    pub reference_state: StateSpec,
    pub observable: Observable,
    /// Sampling grid in 1/g units; defaults to the dense log grid of
    /// [`TimeGrid::default`] when omitted.
    #[serde(default)]
    pub time_grid: TimeGrid,
    pub output_dir: PathBuf,
    /// Free-form notes for anything the experiment definition leaves open
    /// (the value of g, Fock cutoffs, grid density); carried into the run
    /// report verbatim.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumptions: Option<serde_json::Value>,
}

impl ExperimentConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.time_grid.validate()?;
        // state specs must resolve on this model
        self.target_state.resolve_full(&self.model)?;
        self.reference_state.resolve_full(&self.model)?;
        self.observable.build(&self.model)?;
        Ok(())
    }

    /// Optional numeric entry in the assumptions block.
    pub fn assumption_f64(&self, key: &str) -> Option<f64> {
        self.assumptions
            .as_ref()
            .and_then(|v| v.get(key))
            .and_then(|v| v.as_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelKind;

    #[test]
    fn config_round_trips_through_json() {
        let json = r#"{
            "experiment": "ratio-curves",
            "model": {"kind": "JC", "omega_a": 1.0, "omega_0": 1.0, "g": 0.05,
                      "U": 0.1, "gamma": 0.2, "p": 1, "N": 1, "cutoff": 30},
            "target_state": {"fock": {"n": 6}},
            "reference_state": {"fock": {"n": 3}},
            "observable": "sigma_z",
            "time_grid": {"t_min": 1e-5, "t_max": 0.1, "points": 50, "spacing": "log"},
            "output_dir": "out/test",
            "assumptions": {"coupling_note": "g unstated upstream; 0.05 chosen", "qfi_t0": 1e-3}
        }"#;
        let config: ExperimentConfig = serde_json::from_str(json).unwrap();
        config.validate().unwrap();
        assert_eq!(config.model.kind, ModelKind::Jc);
        assert_eq!(config.assumption_f64("qfi_t0"), Some(1e-3));
        let back = serde_json::to_string(&config).unwrap();
        let again: ExperimentConfig = serde_json::from_str(&back).unwrap();
        again.validate().unwrap();
    }

    #[test]
    fn field_spec_completes_with_ground_atom() {
        let params = ModelParams::defaults(ModelKind::Tc).with_cutoff(8);
        let spec = StateSpec::Fock { n: 3 };
        let ket = spec.resolve_full(&params).unwrap();
        assert_eq!(ket.dim(), 8 * 11);
    }

    #[test]
    fn atom_spec_on_collective_model_is_rejected() {
        let params = ModelParams::defaults(ModelKind::Dicke).with_cutoff(8);
        let spec = StateSpec::Atom {
            c_g: ComplexSpec { re: 1.0, im: 0.0 },
            c_e: ComplexSpec { re: 0.0, im: 0.0 },
        };
        assert!(spec.resolve_full(&params).is_err());
    }

    #[test]
    fn observable_model_mismatch_is_rejected() {
        let params = ModelParams::defaults(ModelKind::Dicke).with_cutoff(8);
        assert!(Observable::SigmaZ.build(&params).is_err());
        assert!(Observable::Jz.build(&params).is_ok());
        let params = ModelParams::defaults(ModelKind::Jc).with_cutoff(8);
        assert!(Observable::Jz.build(&params).is_err());
    }

    #[test]
    fn grids_are_validated_and_generated() {
        let grid = TimeGrid {
            t_min: 1e-4,
            t_max: 1e-1,
            points: 4,
            spacing: GridSpacing::Log,
        };
        grid.validate().unwrap();
        let t = grid.times();
        assert_eq!(t.len(), 4);
        assert!((t[0] - 1e-4).abs() <= 1e-18);
        assert!((t[3] - 1e-1).abs() <= 1e-12);
        assert!(t.windows(2).all(|w| w[1] > w[0]));

        let bad = TimeGrid {
            t_min: 0.0,
            t_max: 1.0,
            points: 5,
            spacing: GridSpacing::Log,
        };
        assert!(bad.validate().is_err());
    }
}
