//! Pair interactions, external fields and the improved Lennard-Jones
//! atom-bond model used for the benzene-argon surface.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `1/sqrt(λ² + r²)`.
pub fn soft_coulomb(r: f64, softness_sq: f64) -> f64 {
    1.0 / (softness_sq + r * r).sqrt()
}

/// Radial pair interaction `v(r)`. Charges and signs are applied by callers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairPotential {
    SoftCoulomb { softness_sq: f64 },
    /// `1/r`, singular at the origin.
    BareCoulomb,
    /// `Σ c_i r^i`.
    Polynomial { coefficients: Vec<f64> },
    /// Piecewise-linear interpolation; constant beyond the end points.
    Tabulated { r: Vec<f64>, values: Vec<f64> },
}

impl PairPotential {
    pub fn soft(softness_sq: f64) -> Self {
        PairPotential::SoftCoulomb { softness_sq }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PairPotential::SoftCoulomb { softness_sq } => {
                if !(*softness_sq > 0.0 && softness_sq.is_finite()) {
                    return Err(Error::invalid("softness_sq", "must be positive"));
                }
            }
            PairPotential::BareCoulomb => {}
            PairPotential::Polynomial { coefficients } => {
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::invalid("coefficients", "must be finite"));
                }
            }
            PairPotential::Tabulated { r, values } => {
                if r.len() != values.len() || r.is_empty() {
                    return Err(Error::invalid(
                        "tabulated potential",
                        "r and values must be nonempty and equally long",
                    ));
                }
                if r.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::invalid("tabulated potential", "r must be increasing"));
                }
            }
        }
        Ok(())
    }

    pub fn is_singular_at_zero(&self) -> bool {
        matches!(self, PairPotential::BareCoulomb)
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            PairPotential::SoftCoulomb { softness_sq } => soft_coulomb(r, *softness_sq),
            PairPotential::BareCoulomb => 1.0 / r,
            PairPotential::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * r + c)
            }
            PairPotential::Tabulated { r: grid, values } => {
                if r <= grid[0] {
                    return values[0];
                }
                let last = grid.len() - 1;
                if r >= grid[last] {
                    return values[last];
                }
                let hi = grid.partition_point(|&g| g <= r);
                let lo = hi - 1;
                let t = (r - grid[lo]) / (grid[hi] - grid[lo]);
                values[lo] + t * (values[hi] - values[lo])
            }
        }
    }
}

type FieldFn = dyn Fn(&[f64; 3]) -> f64 + Send + Sync;

/// Scalar potential felt by every electron. Defaults to zero.
#[derive(Clone, Default)]
pub struct ExternalField {
    field: Option<Arc<FieldFn>>,
}

impl ExternalField {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_fn(f: impl Fn(&[f64; 3]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            field: Some(Arc::new(f)),
        }
    }

    /// Potential of a uniform electric field acting on charge −1:
    /// `v(r) = E · (r − origin)`.
    pub fn uniform(field: [f64; 3], origin: [f64; 3]) -> Self {
        Self::from_fn(move |r| (0..3).map(|i| field[i] * (r[i] - origin[i])).sum())
    }

    pub fn is_zero(&self) -> bool {
        self.field.is_none()
    }

    pub fn eval(&self, r: &[f64; 3]) -> f64 {
        self.field.as_ref().map_or(0.0, |f| f(r))
    }
}

impl fmt::Debug for ExternalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_some() {
            f.write_str("ExternalField(custom)")
        } else {
            f.write_str("ExternalField(zero)")
        }
    }
}

/// All interactions entering the position-diagonal part of the Hamiltonian.
#[derive(Debug, Clone)]
pub struct InteractionModel {
    pub electron_electron: PairPotential,
    /// One potential per nucleus.
    pub electron_nucleus: Vec<PairPotential>,
    /// Upper-triangle pairs `(ν, ν')`, `ν < ν'`, in lexicographic order.
    pub nucleus_nucleus: Vec<PairPotential>,
    pub external: ExternalField,
}

impl InteractionModel {
    /// The same `v` for every pair, as in the generic Hamiltonian.
    pub fn common(v: PairPotential, n_nuclei: usize) -> Self {
        Self {
            electron_electron: v.clone(),
            electron_nucleus: vec![v.clone(); n_nuclei],
            nucleus_nucleus: vec![v; n_nuclei * n_nuclei.saturating_sub(1) / 2],
            external: ExternalField::zero(),
        }
    }

    pub fn validate(&self, n_nuclei: usize) -> Result<()> {
        if self.electron_nucleus.len() != n_nuclei {
            return Err(Error::invalid(
                "electron_nucleus",
                format!("expected {n_nuclei} potentials, got {}", self.electron_nucleus.len()),
            ));
        }
        let pairs = n_nuclei * n_nuclei.saturating_sub(1) / 2;
        if self.nucleus_nucleus.len() != pairs {
            return Err(Error::invalid(
                "nucleus_nucleus",
                format!("expected {pairs} potentials, got {}", self.nucleus_nucleus.len()),
            ));
        }
        self.electron_electron.validate()?;
        for v in self.electron_nucleus.iter().chain(&self.nucleus_nucleus) {
            v.validate()?;
        }
        Ok(())
    }

    /// Potential between nuclei `a` and `b` (any order, `a != b`).
    pub fn nucleus_pair(&self, a: usize, b: usize, n_nuclei: usize) -> &PairPotential {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        // Offset of row i in the packed upper triangle.
        let row = i * n_nuclei - i * (i + 1) / 2;
        &self.nucleus_nucleus[row + (j - i - 1)]
    }
}

/// Soft-Coulomb parameters of the one-dimensional LiH model.
pub mod lih {
    pub const SOFTNESS_EE: f64 = 0.6;
    pub const SOFTNESS_EH: f64 = 0.7;
    pub const SOFTNESS_ELI: f64 = 2.25;
    /// `λ_eH² + λ_eLi² − λ_ee²`.
    pub const SOFTNESS_LIH: f64 = SOFTNESS_EH + SOFTNESS_ELI - SOFTNESS_EE;
    pub const CHARGE_H: f64 = 1.0;
    pub const CHARGE_LI: f64 = 1.0;
}

/// Potential felt by one electron at `x` from the H and Li ions.
pub fn lih_electron_nucleus_potential(x: f64, x_h: f64, x_li: f64) -> f64 {
    -lih::CHARGE_H * soft_coulomb((x - x_h).abs(), lih::SOFTNESS_EH)
        - lih::CHARGE_LI * soft_coulomb((x - x_li).abs(), lih::SOFTNESS_ELI)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BondType {
    CC,
    CH,
}

/// Well depths (meV) and positions (Å) for one atom-bond pair type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IljBondParams {
    #[serde(rename = "D_perp")]
    pub d_perp: f64,
    #[serde(rename = "D_par")]
    pub d_par: f64,
    pub lambda_perp: f64,
    pub lambda_par: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IljParams {
    #[serde(rename = "CC")]
    pub cc: IljBondParams,
    #[serde(rename = "CH")]
    pub ch: IljBondParams,
    pub beta: f64,
    pub m: f64,
}

impl IljParams {
    /// Ar interacting with the C-C and C-H bonds of benzene.
    pub fn benzene_argon() -> Self {
        Self {
            cc: IljBondParams {
                d_perp: 3.895,
                d_par: 4.910,
                lambda_perp: 3.879,
                lambda_par: 4.189,
            },
            ch: IljBondParams {
                d_perp: 4.814,
                d_par: 3.981,
                lambda_perp: 3.641,
                lambda_par: 3.851,
            },
            beta: 10.0,
            m: 6.0,
        }
    }

    pub fn bond(&self, kind: BondType) -> &IljBondParams {
        match kind {
            BondType::CC => &self.cc,
            BondType::CH => &self.ch,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, b) in [("CC", &self.cc), ("CH", &self.ch)] {
            for (field, v) in [
                ("D_perp", b.d_perp),
                ("D_par", b.d_par),
                ("lambda_perp", b.lambda_perp),
                ("lambda_par", b.lambda_par),
            ] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::invalid(format!("ilj.{name}.{field}"), "must be positive"));
                }
            }
        }
        if !(self.beta.is_finite() && self.m.is_finite() && self.m > 0.0) {
            return Err(Error::invalid("ilj.beta/m", "must be finite with m > 0"));
        }
        // n(s) − m = β + 4s² − m must stay positive for all s > 0.
        if self.beta < self.m {
            return Err(Error::invalid("ilj.beta", "must be at least m"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub element: String,
    pub position: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub kind: BondType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeGeometry {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
}

impl MoleculeGeometry {
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self> {
        for b in &bonds {
            for idx in [b.a, b.b] {
                if idx >= atoms.len() {
                    return Err(Error::OutOfBounds {
                        what: "bond endpoint",
                        index: idx,
                        len: atoms.len(),
                    });
                }
            }
            if b.a == b.b {
                return Err(Error::invalid("bond", "endpoints must differ"));
            }
        }
        Ok(Self { atoms, bonds })
    }

    /// Planar hexagonal benzene in the xy plane, centred at the origin,
    /// with two C-H bonds along the y axis.
    pub fn benzene(cc: f64, ch: f64) -> Self {
        let mut atoms = Vec::with_capacity(12);
        for (element, radius) in [("C", cc), ("H", cc + ch)] {
            for i in 0..6 {
                let phi = std::f64::consts::FRAC_PI_2 + i as f64 * std::f64::consts::FRAC_PI_3;
                atoms.push(Atom {
                    element: element.into(),
                    position: [radius * phi.cos(), radius * phi.sin(), 0.0],
                });
            }
        }
        let mut bonds = Vec::with_capacity(12);
        for i in 0..6 {
            bonds.push(Bond {
                a: i,
                b: (i + 1) % 6,
                kind: BondType::CC,
            });
        }
        for i in 0..6 {
            bonds.push(Bond {
                a: i,
                b: i + 6,
                kind: BondType::CH,
            });
        }
        Self { atoms, bonds }
    }

    /// Benzene with C-C 1.39 Å and C-H 1.09 Å.
    pub fn benzene_default() -> Self {
        Self::benzene(1.39, 1.09)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn bond_endpoints(&self, bond: &Bond) -> ([f64; 3], [f64; 3]) {
        (self.atoms[bond.a].position, self.atoms[bond.b].position)
    }
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// ILJ radial form `D/(n−m)·(m/s^n − n/s^m)` with `n = β + 4s²`.
pub fn ilj_radial(s: f64, depth: f64, beta: f64, m: f64) -> f64 {
    let n = beta + 4.0 * s * s;
    depth / (n - m) * (m / s.powf(n) - n / s.powf(m))
}

/// Interaction (meV) between an atom and one bond with endpoints `a`, `b`.
///
/// Depth and well position are mixed as `X⊥ sin²θ + X∥ cos²θ`, where θ is
/// the angle between the bond vector and the vector from the bond centre to
/// the atom.
pub fn ilj_atom_bond(
    atom: &[f64; 3],
    a: &[f64; 3],
    b: &[f64; 3],
    params: &IljBondParams,
    beta: f64,
    m: f64,
) -> Result<f64> {
    let bond = sub(b, a);
    let bond_len = dot(&bond, &bond).sqrt();
    if bond_len == 0.0 {
        return Err(Error::Singular("bond has zero length".into()));
    }
    let centre = [
        0.5 * (a[0] + b[0]),
        0.5 * (a[1] + b[1]),
        0.5 * (a[2] + b[2]),
    ];
    let rel = sub(atom, &centre);
    let dist = dot(&rel, &rel).sqrt();
    if dist == 0.0 {
        return Err(Error::Singular("atom coincides with bond centre (s = 0)".into()));
    }
    let cos = dot(&bond, &rel) / (bond_len * dist);
    let cos2 = cos * cos;
    let sin2 = 1.0 - cos2;
    let depth = params.d_perp * sin2 + params.d_par * cos2;
    let lambda = params.lambda_perp * sin2 + params.lambda_par * cos2;
    Ok(ilj_radial(dist / lambda, depth, beta, m))
}

/// Sum of atom-bond terms over every bond of `molecule`.
pub fn ilj_interaction_energy(
    atom: &[f64; 3],
    molecule: &MoleculeGeometry,
    params: &IljParams,
) -> Result<f64> {
    if molecule.bonds().is_empty() {
        return Err(Error::invalid("molecule", "needs at least one bond"));
    }
    molecule.bonds().iter().try_fold(0.0, |acc, bond| {
        let (a, b) = molecule.bond_endpoints(bond);
        let p = params.bond(bond.kind);
        Ok(acc + ilj_atom_bond(atom, &a, &b, p, params.beta, params.m)?)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanMinimum {
    pub x: f64,
    pub z: f64,
    pub energy: f64,
}

/// Grid search of the atom-molecule energy over the plane `y = y`, with
/// inclusive ranges and spacing `step`. Ties keep the first point in
/// row-major (z outer, x inner) order.
pub fn ilj_scan_xz(
    molecule: &MoleculeGeometry,
    params: &IljParams,
    x_range: (f64, f64),
    z_range: (f64, f64),
    y: f64,
    step: f64,
) -> Result<ScanMinimum> {
    params.validate()?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid("scan step", "must be positive"));
    }
    let count = |(a, b): (f64, f64), name: &str| -> Result<usize> {
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return Err(Error::invalid(name, "must be a finite range with start <= end"));
        }
        Ok(((b - a) / step + 1e-9).floor() as usize + 1)
    };
    let nx = count(x_range, "x range")?;
    let nz = count(z_range, "z range")?;
    let rows: Vec<Result<ScanMinimum>> = (0..nz)
        .into_par_iter()
        .map(|iz| {
            let z = z_range.0 + iz as f64 * step;
            let mut best: Option<ScanMinimum> = None;
            for ix in 0..nx {
                let x = x_range.0 + ix as f64 * step;
                let e = ilj_interaction_energy(&[x, y, z], molecule, params)?;
                if best.is_none_or(|b| e < b.energy) {
                    best = Some(ScanMinimum { x, z, energy: e });
                }
            }
            Ok(best.expect("at least one point"))
        })
        .collect();
    let mut best: Option<ScanMinimum> = None;
    for r in rows {
        let r = r?;
        if best.is_none_or(|b| r.energy < b.energy) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one row"))
}
