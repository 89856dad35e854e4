//! Circuit-depth accounting for the position-dependent evolution.
//!
//! Pairwise interaction phases are scheduled into layers in which no
//! register is touched twice. Each pairwise gate computes a distance into a
//! distance register, applies the interaction phase and uncomputes, so gates
//! sharing a distance register serialize.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    Ee,
    En,
    Nn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "register", content = "index", rename_all = "snake_case")]
pub enum Register {
    Electron(usize),
    Redundant(usize),
    Nucleus(usize),
    Distance(DistanceKind, usize),
}

impl fmt::Display for Register {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Electron(i) => write!(f, "e{i}"),
            Self::Redundant(i) => write!(f, "r{i}"),
            Self::Nucleus(i) => write!(f, "n{i}"),
            Self::Distance(DistanceKind::Ee, i) => write!(f, "d_ee{i}"),
            Self::Distance(DistanceKind::En, i) => write!(f, "d_en{i}"),
            Self::Distance(DistanceKind::Nn, i) => write!(f, "d_nn{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    Ee,
    En,
    Nn,
    Ext,
    /// Register-wide CNOT copy into, or back out of, the redundant register.
    Copy,
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ee => "ee",
            Self::En => "en",
            Self::Nn => "nn",
            Self::Ext => "ext",
            Self::Copy => "copy",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub registers: Vec<Register>,
}

impl Gate {
    fn new(kind: GateKind, registers: Vec<Register>) -> Self {
        Self { kind, registers }
    }

    /// The two particles a pairwise gate couples, as plain indices
    /// `(first, second)` in the order they were listed.
    pub fn particles(&self) -> Option<(usize, usize)> {
        let idx = |r: &Register| match r {
            Register::Electron(i) | Register::Redundant(i) | Register::Nucleus(i) => Some(*i),
            Register::Distance(..) => None,
        };
        let mut it = self.registers.iter().filter_map(idx);
        Some((it.next()?, it.next()?))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSchedule {
    pub layers: Vec<Vec<Gate>>,
}

impl GateSchedule {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn count_of(&self, kind: GateKind) -> usize {
        self.gates().filter(|g| g.kind == kind).count()
    }

    /// Number of layers holding at least one gate of `kind`.
    pub fn depth_of(&self, kind: GateKind) -> usize {
        self.layers
            .iter()
            .filter(|l| l.iter().any(|g| g.kind == kind))
            .count()
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.layers.iter().flatten()
    }

    /// No register appears twice within any layer.
    pub fn is_register_disjoint(&self) -> bool {
        self.layers.iter().all(|layer| {
            let mut seen = std::collections::HashSet::new();
            layer.iter().flat_map(|g| &g.registers).all(|r| seen.insert(*r))
        })
    }

    /// One line per layer, gates separated by spaces.
    pub fn netlist(&self) -> String {
        let mut out = String::new();
        for (i, layer) in self.layers.iter().enumerate() {
            let _ = write!(out, "layer {i}:");
            for g in layer {
                let regs: Vec<String> = g.registers.iter().map(|r| r.to_string()).collect();
                let _ = write!(out, " {}({})", g.kind, regs.join(","));
            }
            out.push('\n');
        }
        out
    }
}

/// Pairs `(ℓ, ℓ')` with `ℓ > ℓ'`, ordered by `ℓ'` then `ℓ`.
fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |b| (b + 1..n).map(move |a| (a, b)))
}

/// Greedy first-fit packing of pairwise gates onto `registers` distance
/// registers of one kind.
fn pack_pairs(
    n: usize,
    registers: usize,
    kind: GateKind,
    dist: DistanceKind,
    particle: fn(usize) -> Register,
) -> GateSchedule {
    let mut layers: Vec<Vec<Gate>> = Vec::new();
    for (a, b) in pairs(n) {
        let (pa, pb) = (particle(a), particle(b));
        let slot = layers.iter().position(|l| {
            l.len() < registers && l.iter().all(|g| !g.registers.contains(&pa) && !g.registers.contains(&pb))
        });
        let i = match slot {
            Some(i) => i,
            None => {
                layers.push(Vec::new());
                layers.len() - 1
            }
        };
        let d = Register::Distance(dist, layers[i].len());
        layers[i].push(Gate::new(kind, vec![pa, pb, d]));
    }
    GateSchedule { layers }
}

pub fn schedule_ee(n_e: usize, registers_available: usize) -> Result<GateSchedule> {
    if n_e < 2 {
        return Err(Error::invalid("n_e", "electron-electron terms need at least two electrons"));
    }
    if registers_available == 0 {
        return Err(Error::invalid("registers_available", "must be at least 1"));
    }
    Ok(pack_pairs(n_e, registers_available, GateKind::Ee, DistanceKind::Ee, Register::Electron))
}

pub fn schedule_nn(n_nucl: usize) -> Result<GateSchedule> {
    if n_nucl < 2 {
        return Err(Error::invalid("n_nucl", "nucleus-nucleus terms need at least two nuclei"));
    }
    Ok(pack_pairs(n_nucl, 1, GateKind::Nn, DistanceKind::Nn, Register::Nucleus))
}

/// Round-robin electron-nucleus schedule: layer `d` couples electron
/// `(ν + d) mod n_e` with nucleus `ν`, one distance register per nucleus.
pub fn schedule_en(n_e: usize, n_nucl: usize) -> Result<GateSchedule> {
    if n_e == 0 || n_nucl == 0 {
        return Err(Error::invalid("n_e/n_nucl", "must be at least 1"));
    }
    if n_nucl > n_e {
        return Err(Error::Unsupported(format!(
            "round-robin electron-nucleus schedule requires n_e >= n_nucl (got {n_e} < {n_nucl})"
        )));
    }
    let layers = (0..n_e)
        .map(|d| {
            (0..n_nucl)
                .map(|nu| {
                    Gate::new(
                        GateKind::En,
                        vec![
                            Register::Electron((nu + d) % n_e),
                            Register::Nucleus(nu),
                            Register::Distance(DistanceKind::En, nu),
                        ],
                    )
                })
                .collect()
        })
        .collect();
    Ok(GateSchedule { layers })
}

/// Electron-electron phases through a redundant copy of the electronic
/// register: copy layer, `n_e − 1` phase layers, uncopy layer.
pub fn schedule_ee_redundant(n_e: usize) -> Result<GateSchedule> {
    if n_e < 2 {
        return Err(Error::invalid("n_e", "electron-electron terms need at least two electrons"));
    }
    let copy = || -> Vec<Gate> {
        (0..n_e)
            .map(|l| Gate::new(GateKind::Copy, vec![Register::Electron(l), Register::Redundant(l)]))
            .collect()
    };
    let mut layers = vec![copy()];
    for d in 1..n_e {
        layers.push(
            (0..n_e - d)
                .map(|lp| {
                    Gate::new(
                        GateKind::Ee,
                        vec![
                            Register::Electron(lp + d),
                            Register::Redundant(lp),
                            Register::Distance(DistanceKind::Ee, lp),
                        ],
                    )
                })
                .collect(),
        );
    }
    layers.push(copy());
    Ok(GateSchedule { layers })
}

/// One-body external-field phases, all electrons in parallel.
pub fn schedule_ext(n_e: usize) -> Result<GateSchedule> {
    if n_e == 0 {
        return Err(Error::invalid("n_e", "must be at least 1"));
    }
    Ok(GateSchedule {
        layers: vec![(0..n_e)
            .map(|l| Gate::new(GateKind::Ext, vec![Register::Electron(l)]))
            .collect()],
    })
}

/// Distance-register widths `(n_ee, n_en, n_nn)`, each scaled by `multiplier`.
pub fn distance_register_sizes(n_qe: u32, n_qn: u32) -> Result<(u32, u32, u32)> {
    distance_register_sizes_scaled(n_qe, n_qn, 1)
}

pub fn distance_register_sizes_scaled(n_qe: u32, n_qn: u32, multiplier: u32) -> Result<(u32, u32, u32)> {
    if n_qe == 0 || n_qn == 0 || multiplier == 0 {
        return Err(Error::invalid("register widths", "must be positive"));
    }
    Ok((multiplier * n_qe, multiplier * n_qe.max(n_qn), multiplier * n_qn))
}

/// Polynomial `Σ c_i x^i` with non-negative coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial(pub Vec<f64>);

impl Polynomial {
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.0.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::invalid(name, "coefficients must be finite and non-negative"));
        }
        // With x >= 1 and non-negative coefficients, p(x) >= p(1).
        if self.0.iter().sum::<f64>() < 1.0 {
            return Err(Error::invalid(name, "cost must be at least 1 for every width"));
        }
        Ok(())
    }
}

/// Depths of the sub-circuits of one pairwise gate as functions of the
/// distance-register width, plus the remaining per-term constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostModel {
    pub dist_compute: Polynomial,
    pub phase: Polynomial,
    pub uncompute: Polynomial,
    /// Depth of one register-wide CNOT copy layer.
    pub copy_depth: f64,
    /// `c` in the kinetic depth `c · n_qe²`.
    pub kinetic_coefficient: f64,
    pub width_multiplier: u32,
    pub ee_registers: usize,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            dist_compute: Polynomial(vec![0.0, 0.0, 1.0]),
            phase: Polynomial(vec![0.0, 0.0, 1.0]),
            uncompute: Polynomial(vec![0.0, 0.0, 1.0]),
            copy_depth: 1.0,
            kinetic_coefficient: 1.0,
            width_multiplier: 1,
            ee_registers: 1,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        self.dist_compute.validate("dist_compute")?;
        self.phase.validate("phase")?;
        self.uncompute.validate("uncompute")?;
        if !(self.copy_depth >= 1.0 && self.copy_depth.is_finite()) {
            return Err(Error::invalid("copy_depth", "must be at least 1"));
        }
        if !(self.kinetic_coefficient > 0.0 && self.kinetic_coefficient.is_finite()) {
            return Err(Error::invalid("kinetic_coefficient", "must be positive"));
        }
        if self.width_multiplier == 0 || self.ee_registers == 0 {
            return Err(Error::invalid("cost model", "register counts must be at least 1"));
        }
        Ok(())
    }

    /// Depth of one pairwise phase gate on a width-`n_d` distance register.
    pub fn pair_gate(&self, n_d: u32) -> f64 {
        let x = n_d as f64;
        self.dist_compute.eval(x) + self.phase.eval(x) + self.uncompute.eval(x)
    }

    /// Depth of one external-field phase on a width-`n_qe` coordinate.
    pub fn one_body_gate(&self, n_qe: u32) -> f64 {
        self.phase.eval(n_qe as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDepth {
    pub term: String,
    pub gates: usize,
    pub layers: usize,
    pub depth: f64,
    pub asymptotic: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthReport {
    pub n_e: usize,
    pub n_nucl: usize,
    pub n_qe: u32,
    pub n_qn: u32,
    pub redundant: bool,
    pub distance_widths: (u32, u32, u32),
    pub terms: Vec<TermDepth>,
    /// `max(depth(V_ee), depth(V_nn))`: the two branches run side by side.
    pub ee_nn_parallel: f64,
    pub potential_total: f64,
    pub total: f64,
    pub total_asymptotic: String,
    /// Class of the fully parallel electron-electron variant; reported only.
    pub fully_parallel_ee: String,
}

impl DepthReport {
    pub fn term(&self, name: &str) -> Option<&TermDepth> {
        self.terms.iter().find(|t| t.term == name)
    }

    /// Plain-text table `term gates layers depth class`.
    pub fn table(&self) -> String {
        let mut out = format!("{:<6} {:>8} {:>8} {:>14}  {}\n", "term", "gates", "layers", "depth", "class");
        for t in &self.terms {
            let _ = writeln!(
                out,
                "{:<6} {:>8} {:>8} {:>14.1}  {}",
                t.term, t.gates, t.layers, t.depth, t.asymptotic
            );
        }
        let _ = writeln!(out, "{:<6} {:>8} {:>8} {:>14.1}  {}", "total", "", "", self.total, self.total_asymptotic);
        out
    }
}

const LOG_X: &str = "log(n_e^(1/3)/dx)";
const LOG_R: &str = "log(dR_max/dR)";

fn weighted_depth(s: &GateSchedule, cost: impl Fn(&Gate) -> f64) -> f64 {
    s.layers
        .iter()
        .map(|l| l.iter().map(&cost).fold(0.0, f64::max))
        .sum()
}

pub fn depth_report(
    n_e: usize,
    n_nucl: usize,
    n_qe: u32,
    n_qn: u32,
    cost: &CostModel,
    redundant: bool,
) -> Result<DepthReport> {
    cost.validate()?;
    if n_e == 0 {
        return Err(Error::invalid("n_e", "must be at least 1"));
    }
    let widths = distance_register_sizes_scaled(n_qe, n_qn, cost.width_multiplier)?;
    let (w_ee, w_en, w_nn) = widths;

    let ee = match (n_e >= 2, redundant) {
        (false, _) => GateSchedule::default(),
        (true, false) => schedule_ee(n_e, cost.ee_registers)?,
        (true, true) => schedule_ee_redundant(n_e)?,
    };
    let en = if n_nucl > 0 { schedule_en(n_e, n_nucl)? } else { GateSchedule::default() };
    let nn = if n_nucl >= 2 { schedule_nn(n_nucl)? } else { GateSchedule::default() };
    let ext = schedule_ext(n_e)?;

    let ee_depth = weighted_depth(&ee, |g| match g.kind {
        GateKind::Copy => cost.copy_depth,
        _ => cost.pair_gate(w_ee),
    });
    let en_depth = weighted_depth(&en, |_| cost.pair_gate(w_en));
    let nn_depth = weighted_depth(&nn, |_| cost.pair_gate(w_nn));
    let ext_depth = weighted_depth(&ext, |_| cost.one_body_gate(n_qe));
    let t_depth = cost.kinetic_coefficient * (n_qe as f64).powi(2);

    let ee_class = if redundant {
        format!("O(n_e poly({LOG_X}))")
    } else {
        format!("O(n_e^2 poly({LOG_X}))")
    };
    let terms = vec![
        TermDepth {
            term: "T".into(),
            gates: n_e,
            layers: 1,
            depth: t_depth,
            asymptotic: format!("O(n_e^0 n_qe^2) = O(({LOG_X})^2)"),
        },
        TermDepth {
            term: "V_ee".into(),
            gates: ee.count_of(GateKind::Ee),
            layers: ee.depth(),
            depth: ee_depth,
            asymptotic: ee_class.clone(),
        },
        TermDepth {
            term: "V_en".into(),
            gates: en.gate_count(),
            layers: en.depth(),
            depth: en_depth,
            asymptotic: format!("O(n_e poly(max({LOG_X}, {LOG_R})))"),
        },
        TermDepth {
            term: "V_nn".into(),
            gates: nn.gate_count(),
            layers: nn.depth(),
            depth: nn_depth,
            asymptotic: format!("O(n_nucl^2 poly({LOG_R}))"),
        },
        TermDepth {
            term: "V_ext".into(),
            gates: ext.gate_count(),
            layers: ext.depth(),
            depth: ext_depth,
            asymptotic: format!("O(poly({LOG_X}))"),
        },
    ];
    let parallel = ee_depth.max(nn_depth);
    let potential = parallel + en_depth + ext_depth;
    Ok(DepthReport {
        n_e,
        n_nucl,
        n_qe,
        n_qn,
        redundant,
        distance_widths: widths,
        terms,
        ee_nn_parallel: parallel,
        potential_total: potential,
        total: potential + t_depth,
        total_asymptotic: ee_class,
        fully_parallel_ee: format!("O(poly({LOG_X})) with O(n_e^2 n_qe) extra qubits"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_electrons_three_nuclei() {
        let ee = schedule_ee(4, 1).unwrap();
        assert_eq!((ee.gate_count(), ee.depth()), (6, 6));
        let en = schedule_en(4, 3).unwrap();
        assert_eq!((en.gate_count(), en.depth()), (12, 4));
        assert!(en.layers.iter().all(|l| l.len() == 3));
        assert_eq!(schedule_nn(3).unwrap().gate_count(), 3);
        let red = schedule_ee_redundant(4).unwrap();
        assert_eq!(red.depth_of(GateKind::Ee), 3);
        assert_eq!(red.count_of(GateKind::Ee), 6);
        assert_eq!(red.depth_of(GateKind::Copy), 2);
        for s in [&ee, &en, &red] {
            assert!(s.is_register_disjoint());
        }
    }

    #[test]
    fn small_cases() {
        assert_eq!(schedule_ee(2, 1).unwrap().depth(), 1);
        assert_eq!(schedule_nn(2).unwrap().gate_count(), 1);
        let en = schedule_en(1, 1).unwrap();
        assert_eq!((en.gate_count(), en.depth()), (1, 1));
        assert_eq!(schedule_ee_redundant(2).unwrap().depth_of(GateKind::Ee), 1);
        assert!(matches!(schedule_en(2, 3), Err(Error::Unsupported(_))));
        assert!(schedule_ee(1, 1).is_err());
        assert!(schedule_nn(1).is_err());
    }

    #[test]
    fn more_registers_pack_layers() {
        let s = schedule_ee(6, 3).unwrap();
        assert!(s.is_register_disjoint());
        assert_eq!(s.gate_count(), 15);
        assert!(s.depth() < 15 && s.depth() >= 5);
    }

    #[test]
    fn widths() {
        assert_eq!(distance_register_sizes(6, 3).unwrap(), (6, 6, 3));
        assert_eq!(distance_register_sizes(1, 1).unwrap(), (1, 1, 1));
        assert_eq!(distance_register_sizes_scaled(2, 5, 3).unwrap(), (6, 15, 15));
        assert!(distance_register_sizes(0, 1).is_err());
    }

    #[test]
    fn cost_model_validation() {
        let mut c = CostModel::default();
        assert!(c.validate().is_ok());
        c.phase = Polynomial(vec![0.5]);
        assert!(c.validate().is_err());
        c.phase = Polynomial(vec![-1.0, 3.0]);
        assert!(c.validate().is_err());
        assert_eq!(Polynomial(vec![1.0, 2.0, 3.0]).eval(2.0), 17.0);
    }

    #[test]
    fn report_parallel_rule_and_netlist() {
        let r = depth_report(4, 3, 6, 3, &CostModel::default(), false).unwrap();
        let ee = r.term("V_ee").unwrap().depth;
        let nn = r.term("V_nn").unwrap().depth;
        assert_eq!(r.ee_nn_parallel, ee.max(nn));
        assert_eq!(r.term("T").unwrap().depth, 36.0);
        assert!(r.table().contains("V_en"));
        let net = schedule_en(4, 3).unwrap().netlist();
        assert_eq!(net.lines().count(), 4);
        assert!(net.starts_with("layer 0: en(e0,n0,d_en0) en(e1,n1,d_en1) en(e2,n2,d_en2)"));
    }
}
