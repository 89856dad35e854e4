//! TOML experiment configuration.
//!
//! Lengths and energies carry their unit in the key name: `_au` for atomic
//! units in the quantum systems, `_angstrom`, `_mev` and `_inv_mev` for the
//! classical atom-molecule surface.

use serde::{Deserialize, Serialize};

use geomopt_core::hamiltonian::DEFAULT_DENSE_CAP;
use geomopt_core::pite::{InitialGuess, ReferenceSpec};
use geomopt_core::potentials::{
    ExternalField, IljBondParams, IljParams, InteractionModel, MoleculeGeometry, PairPotential,
};
use geomopt_core::propagator::{PiteParams, TauSchedule};
use geomopt_core::registers::{ActiveCoordinate, GeometryGrid, Nucleus, RegisterLayout};
use geomopt_core::resources::CostModel;
use geomopt_core::vite::{PauliAxis, ViteConfig};
use geomopt_core::{Error, Result};

pub const PRESETS: &[(&str, &str)] = &[
    ("lih-1d", include_str!("../presets/lih-1d.toml")),
    ("h2plus-1d", include_str!("../presets/h2plus-1d.toml")),
    ("benzene-argon", include_str!("../presets/benzene-argon.toml")),
];

pub fn preset(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| {
            let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            Error::invalid("preset", format!("unknown preset {name:?}; known: {}", known.join(", ")))
        })
}

pub fn parse(text: &str) -> Result<ExperimentConfig> {
    toml::from_str(text).map_err(|e| Error::invalid("config", e.to_string().trim_end().to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: String,
    pub layout: Option<LayoutConfig>,
    #[serde(default)]
    pub nuclei: Vec<NucleusConfig>,
    #[serde(default)]
    pub active: Vec<ActiveConfig>,
    pub potentials: Option<PotentialsConfig>,
    pub diagonalize: Option<DiagonalizeConfig>,
    pub pite: Option<PiteSection>,
    pub vite: Option<ViteSection>,
    pub classical: Option<ClassicalSection>,
    pub resources: Option<ResourcesSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutConfig {
    pub n_electrons: usize,
    pub spatial_dim: usize,
    pub n_qe: u32,
    pub cell_length_au: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NucleusConfig {
    pub label: String,
    pub charge: f64,
    pub position_au: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActiveConfig {
    /// Label of the displaced nucleus.
    pub nucleus: String,
    pub axis: Axis,
    pub n_qn: u32,
    pub max_displacement_au: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NucleusPairConfig {
    pub a: String,
    pub b: String,
    pub potential: PairPotential,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalConfig {
    pub field_au: [f64; 3],
    #[serde(default)]
    pub origin_au: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialsConfig {
    pub electron_electron: PairPotential,
    /// One entry per nucleus, in the order of `[[nuclei]]`.
    pub electron_nucleus: Vec<PairPotential>,
    /// Default for every nucleus pair not listed in `nucleus_pair`.
    pub nucleus_nucleus: PairPotential,
    #[serde(default)]
    pub nucleus_pair: Vec<NucleusPairConfig>,
    pub external: Option<ExternalConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalizeConfig {
    #[serde(default = "default_eigenvalues")]
    pub eigenvalues: usize,
    #[serde(default = "default_dense_cap")]
    pub dense_cap: usize,
}

fn default_eigenvalues() -> usize {
    3
}

fn default_dense_cap() -> usize {
    DEFAULT_DENSE_CAP
}

fn default_gamma() -> f64 {
    0.9
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub dtau_min_inv_au: f64,
    pub dtau_max_inv_au: f64,
    pub kappa_steps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    GaussianSymmetric,
    GaussianAntisymmetric,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub kind: ReferenceKind,
    pub width_au: f64,
}

impl ReferenceConfig {
    pub fn to_spec(&self) -> ReferenceSpec {
        match self.kind {
            ReferenceKind::GaussianSymmetric => ReferenceSpec::GaussianSymmetric { width: self.width_au },
            ReferenceKind::GaussianAntisymmetric => ReferenceSpec::GaussianAntisymmetric { width: self.width_au },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiteSection {
    pub n_steps: usize,
    pub schedule: ScheduleConfig,
    pub reference: ReferenceConfig,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub energy_shift_au: Option<f64>,
    /// Uniform when absent.
    pub initial_weights: Option<Vec<f64>>,
    #[serde(default)]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub ground_state_weights: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViteSection {
    pub depth: usize,
    pub dtau_inv_au: f64,
    pub steps: usize,
    pub seed: u64,
    pub lambda_reg: f64,
    #[serde(default = "default_axis")]
    pub axis: PauliAxis,
    pub tracked_geometry: Option<usize>,
    #[serde(default = "default_tracked")]
    pub tracked_states: usize,
}

fn default_axis() -> PauliAxis {
    PauliAxis::Y
}

fn default_tracked() -> usize {
    3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IljBondConfig {
    pub d_perp_mev: f64,
    pub d_par_mev: f64,
    pub lambda_perp_angstrom: f64,
    pub lambda_par_angstrom: f64,
}

impl From<&IljBondConfig> for IljBondParams {
    fn from(c: &IljBondConfig) -> Self {
        Self {
            d_perp: c.d_perp_mev,
            d_par: c.d_par_mev,
            lambda_perp: c.lambda_perp_angstrom,
            lambda_par: c.lambda_par_angstrom,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IljConfig {
    pub cc: IljBondConfig,
    pub ch: IljBondConfig,
    pub beta: f64,
    pub m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalActiveConfig {
    pub axis: Axis,
    pub n_qn: u32,
    pub max_displacement_angstrom: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub x_range_angstrom: [f64; 2],
    pub z_range_angstrom: [f64; 2],
    pub step_angstrom: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalSection {
    pub cc_bond_angstrom: f64,
    pub ch_bond_angstrom: f64,
    pub ilj: IljConfig,
    pub probe_label: String,
    pub probe_base_angstrom: [f64; 3],
    pub active: Vec<ClassicalActiveConfig>,
    pub n_steps: usize,
    pub dtau_inv_mev: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub initial_weights: Option<Vec<f64>>,
    #[serde(default)]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    pub scan: Option<ScanConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourcesSection {
    pub n_e: usize,
    pub n_nucl: usize,
    pub n_qe: u32,
    pub n_qn: u32,
    #[serde(default)]
    pub redundant: bool,
    #[serde(default)]
    pub cost: CostModel,
}

impl ResourcesSection {
    pub fn validate(&self) -> Result<()> {
        self.cost.validate().map_err(|e| prefix("resources.cost", e))?;
        if self.n_e == 0 || self.n_qe == 0 || self.n_qn == 0 {
            return Err(Error::invalid("resources", "n_e, n_qe and n_qn must be at least 1"));
        }
        if self.n_nucl > self.n_e {
            return Err(Error::invalid("resources.n_nucl", "must not exceed n_e"));
        }
        Ok(())
    }
}

fn missing(section: &str) -> Error {
    Error::invalid(section, "section is required for this experiment")
}

fn vec3(v: &[f64], field: &str) -> Result<[f64; 3]> {
    if v.is_empty() || v.len() > 3 {
        return Err(Error::invalid(field, "must have 1 to 3 components"));
    }
    let mut out = [0.0; 3];
    out[..v.len()].copy_from_slice(v);
    Ok(out)
}

fn check_schedule(s: &ScheduleConfig) -> Result<TauSchedule> {
    if s.dtau_min_inv_au > s.dtau_max_inv_au {
        return Err(Error::invalid(
            "pite.schedule.dtau_min_inv_au",
            format!("{} exceeds dtau_max_inv_au {}", s.dtau_min_inv_au, s.dtau_max_inv_au),
        ));
    }
    TauSchedule::new(s.dtau_min_inv_au, s.dtau_max_inv_au, s.kappa_steps)
        .map_err(|e| prefix("pite.schedule", e))
}

fn prefix(section: &str, e: Error) -> Error {
    match e {
        Error::Invalid { field, reason } if !field.starts_with(section) => Error::Invalid {
            field: format!("{section}.{field}"),
            reason,
        },
        other => other,
    }
}

fn guess(weights: &Option<Vec<f64>>, count: usize, section: &str) -> Result<InitialGuess> {
    match weights {
        None => Ok(InitialGuess::uniform(count)),
        Some(w) if w.len() != count => Err(Error::invalid(
            format!("{section}.initial_weights"),
            format!("{} entries for {} candidate geometries", w.len(), count),
        )),
        Some(w) => InitialGuess::new(w.clone()).map_err(|e| prefix(section, e)),
    }
}

impl ExperimentConfig {
    pub fn layout(&self) -> Result<RegisterLayout> {
        let l = self.layout.as_ref().ok_or_else(|| missing("layout"))?;
        if l.n_qe == 0 {
            return Err(Error::invalid("layout.n_qe", "must be at least 1"));
        }
        RegisterLayout::new(l.n_electrons, l.spatial_dim, l.n_qe, l.cell_length_au).map_err(|e| prefix("layout", e))
    }

    pub fn grid(&self) -> Result<GeometryGrid> {
        if self.nuclei.is_empty() {
            return Err(Error::invalid("nuclei", "at least one nucleus is required"));
        }
        let nuclei = self
            .nuclei
            .iter()
            .map(|n| Ok(Nucleus::new(n.label.clone(), n.charge, vec3(&n.position_au, "nuclei.position_au")?)))
            .collect::<Result<Vec<_>>>()?;
        let active = self
            .active
            .iter()
            .map(|a| {
                Ok(ActiveCoordinate {
                    nucleus: self.nucleus_index(&a.nucleus, "active.nucleus")?,
                    axis: a.axis.index(),
                    qubits: a.n_qn,
                    max_displacement: a.max_displacement_au,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        GeometryGrid::new(nuclei, active).map_err(|e| prefix("active", e))
    }

    fn nucleus_index(&self, label: &str, field: &str) -> Result<usize> {
        self.nuclei
            .iter()
            .position(|n| n.label == label)
            .ok_or_else(|| Error::invalid(field, format!("no nucleus labelled {label:?}")))
    }

    pub fn interactions(&self) -> Result<InteractionModel> {
        let p = self.potentials.as_ref().ok_or_else(|| missing("potentials"))?;
        let n = self.nuclei.len();
        let mut nn = vec![p.nucleus_nucleus.clone(); n * n.saturating_sub(1) / 2];
        for pair in &p.nucleus_pair {
            let a = self.nucleus_index(&pair.a, "potentials.nucleus_pair.a")?;
            let b = self.nucleus_index(&pair.b, "potentials.nucleus_pair.b")?;
            if a == b {
                return Err(Error::invalid("potentials.nucleus_pair", "a and b must differ"));
            }
            let (i, j) = (a.min(b), a.max(b));
            nn[i * n - i * (i + 1) / 2 + (j - i - 1)] = pair.potential.clone();
        }
        let model = InteractionModel {
            electron_electron: p.electron_electron.clone(),
            electron_nucleus: p.electron_nucleus.clone(),
            nucleus_nucleus: nn,
            external: match &p.external {
                Some(e) => ExternalField::uniform(e.field_au, e.origin_au),
                None => ExternalField::zero(),
            },
        };
        model.validate(n).map_err(|e| prefix("potentials", e))?;
        Ok(model)
    }

    pub fn pite_parts(&self, geometries: usize) -> Result<geomopt_core::pite::PiteConfig> {
        let s = self.pite.as_ref().ok_or_else(|| missing("pite"))?;
        if s.n_steps == 0 {
            return Err(Error::invalid("pite.n_steps", "must be at least 1"));
        }
        let schedule = check_schedule(&s.schedule)?;
        let reference = s.reference.to_spec();
        reference.validate().map_err(|e| prefix("pite.reference", e))?;
        let params = PiteParams {
            gamma: s.gamma,
            energy_shift: s.energy_shift_au,
        };
        params.validate().map_err(|e| prefix("pite", e))?;
        Ok(geomopt_core::pite::PiteConfig {
            guess: guess(&s.initial_weights, geometries, "pite")?,
            reference,
            n_steps: s.n_steps,
            schedule,
            params,
            shots: s.shots,
            seed: s.seed,
            ground_state_weights: s.ground_state_weights,
        })
    }

    pub fn vite_config(&self) -> Result<ViteConfig> {
        let s = self.vite.as_ref().ok_or_else(|| missing("vite"))?;
        let c = ViteConfig {
            depth: s.depth,
            dtau: s.dtau_inv_au,
            steps: s.steps,
            seed: s.seed,
            lambda_reg: s.lambda_reg,
            axis: s.axis,
            tracked_geometry: s.tracked_geometry,
            tracked_states: s.tracked_states,
        };
        c.validate().map_err(|e| prefix("vite", e))?;
        Ok(c)
    }

    pub fn classical(&self) -> Result<ClassicalSystem> {
        let s = self.classical.as_ref().ok_or_else(|| missing("classical"))?;
        for (f, v) in [("cc_bond_angstrom", s.cc_bond_angstrom), ("ch_bond_angstrom", s.ch_bond_angstrom)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("classical.{f}"), "must be positive"));
            }
        }
        let params = IljParams {
            cc: (&s.ilj.cc).into(),
            ch: (&s.ilj.ch).into(),
            beta: s.ilj.beta,
            m: s.ilj.m,
        };
        params.validate().map_err(|e| prefix("classical", e))?;
        if s.active.is_empty() {
            return Err(Error::invalid("classical.active", "at least one searched coordinate is required"));
        }
        let grid = GeometryGrid::new(
            vec![Nucleus::new(s.probe_label.clone(), 0.0, s.probe_base_angstrom)],
            s.active
                .iter()
                .map(|a| ActiveCoordinate {
                    nucleus: 0,
                    axis: a.axis.index(),
                    qubits: a.n_qn,
                    max_displacement: a.max_displacement_angstrom,
                })
                .collect(),
        )
        .map_err(|e| prefix("classical.active", e))?;
        if s.n_steps == 0 {
            return Err(Error::invalid("classical.n_steps", "must be at least 1"));
        }
        if !(s.dtau_inv_mev > 0.0 && s.dtau_inv_mev.is_finite()) {
            return Err(Error::invalid("classical.dtau_inv_mev", "must be positive"));
        }
        let pite = PiteParams {
            gamma: s.gamma,
            energy_shift: None,
        };
        pite.validate().map_err(|e| prefix("classical", e))?;
        if let Some(scan) = &s.scan {
            if !(scan.step_angstrom > 0.0) {
                return Err(Error::invalid("classical.scan.step_angstrom", "must be positive"));
            }
        }
        let guess = guess(&s.initial_weights, grid.geometry_count(), "classical")?;
        Ok(ClassicalSystem {
            molecule: MoleculeGeometry::benzene(s.cc_bond_angstrom, s.ch_bond_angstrom),
            params,
            grid,
            guess,
            schedule: TauSchedule::constant(s.dtau_inv_mev),
            pite,
        })
    }

    pub fn resources(&self) -> Result<&ResourcesSection> {
        let r = self.resources.as_ref().ok_or_else(|| missing("resources"))?;
        r.validate()?;
        Ok(r)
    }

    pub fn dense_settings(&self) -> DiagonalizeConfig {
        self.diagonalize.clone().unwrap_or(DiagonalizeConfig {
            eigenvalues: default_eigenvalues(),
            dense_cap: default_dense_cap(),
        })
    }

    /// Every violation found without running, one message per problem.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |r: Result<()>| {
            if let Err(e) = r {
                out.push(e.to_string());
            }
        };
        let quantum = self.layout.is_some() || !self.nuclei.is_empty() || self.potentials.is_some();
        let mut geometries = None;
        if quantum {
            check(self.layout().map(|_| ()));
            match self.grid() {
                Ok(g) => geometries = Some(g.geometry_count()),
                Err(e) => check(Err(e)),
            }
            check(self.interactions().map(|_| ()));
        }
        if self.pite.is_some() {
            match geometries {
                Some(g) => check(self.pite_parts(g).map(|_| ())),
                None => check(Err(Error::invalid("pite", "requires a valid quantum system"))),
            }
        }
        if self.vite.is_some() {
            check(self.vite_config().map(|_| ()));
        }
        if self.classical.is_some() {
            check(self.classical().map(|_| ()));
        }
        if self.resources.is_some() {
            check(self.resources().map(|_| ()));
        }
        if !quantum && self.classical.is_none() && self.resources.is_none() {
            check(Err(Error::invalid("config", "defines no system and no experiment section")));
        }
        out
    }
}

pub struct ClassicalSystem {
    pub molecule: MoleculeGeometry,
    pub params: IljParams,
    pub grid: GeometryGrid,
    pub guess: InitialGuess,
    pub schedule: TauSchedule,
    pub pite: PiteParams,
}
