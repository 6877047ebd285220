//! Builds bases, propagators and operators from a [`ModelConfig`].

use std::f64::consts::PI;

use anyhow::{bail, Result};
use cellscope_core::classical::ClassicalSystem;
use cellscope_core::models::{IhoSpec, KickedRotorSpec, KineticScheme, LmgSpec};
use cellscope_core::numerics::{self, CMatrix, SpectralDecomp};
use cellscope_core::otoc::{Evolution, Observable, Operand};
use cellscope_core::planck::PlanckBasis;

use crate::config::{Kinetic, ModelConfig, ValidationError};

pub enum Dynamics {
    Floquet(CMatrix),
    Spectral {
        hamiltonian: CMatrix,
        decomp: SpectralDecomp,
    },
}

pub struct Model {
    pub config: ModelConfig,
    pub basis: PlanckBasis,
    pub dynamics: Dynamics,
    pub classical: ClassicalSystem,
    kicked: Option<KickedRotorSpec>,
    lmg: Option<LmgSpec>,
    iho: Option<IhoSpec>,
}

/// Operator data in the form the core kernels accept.
pub enum OperatorData {
    Cell(Vec<f64>),
    Dense(CMatrix),
}

impl OperatorData {
    pub fn operand(&self) -> Operand<'_> {
        match self {
            OperatorData::Cell(v) => Operand::CellDiagonal(v),
            OperatorData::Dense(m) => Operand::Computational(m.as_ref()),
        }
    }

    /// Dense matrix in the computational frame.
    pub fn dense(&self, basis: &PlanckBasis) -> Result<CMatrix> {
        Ok(match self {
            OperatorData::Cell(v) => basis.from_cell_frame(numerics::diagonal(v).as_ref())?,
            OperatorData::Dense(m) => m.clone(),
        })
    }
}

impl Model {
    pub fn build(config: &ModelConfig) -> Result<Model> {
        let invalid = |field: &str, e: cellscope_core::Error| {
            ValidationError::new(format!("model.{field}"), e.to_string())
        };
        let model = match *config {
            ModelConfig::KickedRotor { kick, cells } => {
                let spec = KickedRotorSpec::new(kick, cells).map_err(|e| invalid("cells", e))?;
                Model {
                    config: config.clone(),
                    basis: spec.basis()?,
                    dynamics: Dynamics::Floquet(spec.floquet()?),
                    classical: ClassicalSystem::StandardMap { kick },
                    kicked: Some(spec),
                    lmg: None,
                    iho: None,
                }
            }
            ModelConfig::Lmg {
                n_bosons,
                xi,
                q_origin,
            } => {
                let spec = LmgSpec::new(n_bosons, xi).map_err(|e| invalid("n_bosons", e))?;
                let origin = match q_origin {
                    Some(q) => q,
                    None => spec.saddle_origin().map_err(|e| invalid("n_bosons", e))?,
                };
                let basis = spec.basis(origin).map_err(|e| invalid("n_bosons", e))?;
                let hamiltonian = spec.hamiltonian();
                let decomp = numerics::eig_hermitian(hamiltonian.as_ref(), 1e-10)?;
                Model {
                    config: config.clone(),
                    basis,
                    dynamics: Dynamics::Spectral {
                        hamiltonian,
                        decomp,
                    },
                    classical: ClassicalSystem::LmgMeanField { xi },
                    kicked: None,
                    lmg: Some(spec),
                    iho: None,
                }
            }
            ModelConfig::Iho {
                hbar,
                dx,
                p_cutoff,
                curvature,
                kinetic,
                q_min,
                q_max,
            } => {
                let spec = IhoSpec {
                    hbar,
                    dx,
                    p_cutoff,
                    curvature,
                    kinetic: match kinetic {
                        Kinetic::Spectral => KineticScheme::Spectral,
                        Kinetic::FiniteDifference => KineticScheme::FiniteDifference,
                    },
                    q_min,
                    q_max,
                };
                spec.layout().map_err(|e| invalid("dx", e))?;
                let hamiltonian = spec.hamiltonian()?;
                let decomp = numerics::eig_hermitian(hamiltonian.as_ref(), 1e-10)?;
                Model {
                    config: config.clone(),
                    basis: spec.basis()?,
                    dynamics: Dynamics::Spectral {
                        hamiltonian,
                        decomp,
                    },
                    classical: ClassicalSystem::Oscillator { curvature },
                    kicked: None,
                    lmg: None,
                    iho: Some(spec),
                }
            }
        };
        Ok(model)
    }

    /// Unit in which phase-space coordinates are read and written.
    pub fn unit(&self) -> f64 {
        if self.kicked.is_some() {
            2.0 * PI
        } else {
            1.0
        }
    }

    pub fn hbar(&self) -> f64 {
        self.basis.grid.hbar
    }

    /// Evolution sampled every `dt` (ignored for the kicked rotor).
    pub fn evolution(&self, dt: Option<f64>) -> Evolution {
        match &self.dynamics {
            Dynamics::Floquet(u) => Evolution::Floquet(u.clone()),
            Dynamics::Spectral { decomp, .. } => Evolution::Spectral {
                decomp: decomp.clone(),
                hbar: 1.0,
                dt: dt.unwrap_or(1.0),
            },
        }
    }

    pub fn decomp(&self) -> Option<&SpectralDecomp> {
        match &self.dynamics {
            Dynamics::Spectral { decomp, .. } => Some(decomp),
            Dynamics::Floquet(_) => None,
        }
    }

    pub fn operator(&self, observable: Observable) -> Result<OperatorData> {
        Ok(match observable {
            Observable::MacroQ => OperatorData::Cell(self.basis.q_values()),
            Observable::MacroP => OperatorData::Cell(self.basis.p_values()),
            Observable::MicroQ => {
                if let Some(s) = &self.kicked {
                    OperatorData::Dense(s.position_operator())
                } else if let Some(s) = &self.iho {
                    OperatorData::Dense(s.position_operator()?)
                } else {
                    bail!(ValidationError::new(
                        "pair",
                        "the two-mode model has no microscopic position operator",
                    ))
                }
            }
            Observable::MicroP => {
                if let Some(s) = &self.kicked {
                    OperatorData::Dense(s.momentum_operator())
                } else if let Some(s) = &self.lmg {
                    OperatorData::Dense(s.momentum_operator())
                } else {
                    OperatorData::Dense(self.iho.as_ref().expect("one model").momentum_operator()?)
                }
            }
        })
    }

    /// Cell containing a point given in the model's coordinate unit.
    pub fn cell_at(&self, point: [f64; 2], field: &str) -> Result<usize> {
        let u = self.unit();
        match self.basis.cell_containing(point[0] * u, point[1] * u) {
            Some(c) => Ok(c),
            None => bail!(ValidationError::new(
                field,
                format!(
                    "point ({}, {}) lies outside the cell grid",
                    point[0], point[1]
                ),
            )),
        }
    }

    /// `#`-prefixed lines describing the model and grid.
    pub fn header(&self) -> Vec<String> {
        let g = &self.basis.grid;
        let params = match self.config {
            ModelConfig::KickedRotor { kick, cells } => {
                format!("kicked_rotor kick={kick} cells={cells}")
            }
            ModelConfig::Lmg { n_bosons, xi, .. } => format!("lmg n_bosons={n_bosons} xi={xi}"),
            ModelConfig::Iho {
                hbar,
                dx,
                p_cutoff,
                curvature,
                kinetic,
                q_min,
                q_max,
            } => format!(
                "iho hbar={hbar} dx={dx} p_cutoff={p_cutoff} curvature={curvature} kinetic={kinetic:?} box=[{q_min},{q_max}]"
            ),
        };
        vec![
            format!("model: {params}"),
            format!("hbar: {}", self.hbar()),
            format!(
                "grid: {} {}x{} cells, origin ({}, {}), cell {} x {}, dimension {}",
                self.basis.kind.name(),
                g.q_cells,
                g.p_cells,
                g.q_origin,
                g.p_origin,
                g.dq(),
                g.dp(),
                self.basis.dim()
            ),
            format!(
                "coordinate unit: {}",
                if self.unit() == 1.0 { "1" } else { "2pi" }
            ),
        ]
    }
}
