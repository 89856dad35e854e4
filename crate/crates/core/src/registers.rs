//! Discretization of the electronic and nuclear registers.
//!
//! The electronic register holds `n_e` electrons, each on a periodic grid of
//! `N = 2^n_qe` points per direction over a cell of edge `L`. The nuclear
//! register enumerates candidate geometries: every active nuclear coordinate
//! takes one of `2^n_qn` equally spaced displacements from its base value.
//!
//! Flattened composite indices put the electronic index fastest, so the
//! electronic block of a given geometry is contiguous in memory:
//! `flat = K + electronic_dim * J`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of complex amplitudes any single array may hold.
pub const MAX_AMPLITUDES: u128 = 1 << 27;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterLayout {
    n_electrons: usize,
    spatial_dim: usize,
    qubits_per_direction: u32,
    cell_length: f64,
    points_per_direction: usize,
    spacing: f64,
    volume_element: f64,
    electronic_dim: usize,
}

impl RegisterLayout {
    pub fn new(
        n_electrons: usize,
        spatial_dim: usize,
        qubits_per_direction: u32,
        cell_length: f64,
    ) -> Result<Self> {
        if n_electrons == 0 {
            return Err(Error::invalid("n_electrons", "must be at least 1"));
        }
        if !(1..=3).contains(&spatial_dim) {
            return Err(Error::invalid("spatial_dim", "must be 1, 2 or 3"));
        }
        if qubits_per_direction == 0 {
            return Err(Error::invalid("n_qe", "must be at least 1"));
        }
        if !(cell_length > 0.0 && cell_length.is_finite()) {
            return Err(Error::invalid("cell_length", "must be positive and finite"));
        }
        if qubits_per_direction >= 64 {
            return Err(Error::Capacity {
                what: "electronic register".into(),
                required: u128::MAX,
                limit: MAX_AMPLITUDES,
            });
        }
        let points = 1u128 << qubits_per_direction;
        let exponent = (spatial_dim * n_electrons) as u32;
        let required = points.checked_pow(exponent).unwrap_or(u128::MAX);
        if required > MAX_AMPLITUDES {
            return Err(Error::Capacity {
                what: "electronic register".into(),
                required,
                limit: MAX_AMPLITUDES,
            });
        }
        let points_per_direction = points as usize;
        let spacing = cell_length / points_per_direction as f64;
        Ok(Self {
            n_electrons,
            spatial_dim,
            qubits_per_direction,
            cell_length,
            points_per_direction,
            spacing,
            volume_element: spacing.powi(spatial_dim as i32),
            electronic_dim: required as usize,
        })
    }

    pub fn n_electrons(&self) -> usize {
        self.n_electrons
    }

    pub fn spatial_dim(&self) -> usize {
        self.spatial_dim
    }

    pub fn qubits_per_direction(&self) -> u32 {
        self.qubits_per_direction
    }

    pub fn cell_length(&self) -> f64 {
        self.cell_length
    }

    pub fn points_per_direction(&self) -> usize {
        self.points_per_direction
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn volume_element(&self) -> f64 {
        self.volume_element
    }

    /// `N^(spatial_dim * n_e)`, the number of electronic basis states.
    pub fn electronic_dim(&self) -> usize {
        self.electronic_dim
    }

    /// Number of grid points seen by one electron (`N^spatial_dim`).
    pub fn single_electron_dim(&self) -> usize {
        self.points_per_direction.pow(self.spatial_dim as u32)
    }

    /// Number of one-dimensional axes in the electronic register.
    pub fn axis_count(&self) -> usize {
        self.n_electrons * self.spatial_dim
    }

    /// Stride of axis `(electron, direction)` in the flat electronic index.
    pub fn axis_stride(&self, electron: usize, direction: usize) -> usize {
        self.points_per_direction
            .pow((electron * self.spatial_dim + direction) as u32)
    }

    /// Factor that turns a grid-normalized continuum wave function into
    /// register amplitudes, `dV^(n_e/2)`.
    pub fn amplitude_scale(&self) -> f64 {
        self.volume_element.powf(self.n_electrons as f64 / 2.0)
    }

    pub fn coordinate(&self, k: usize) -> f64 {
        k as f64 * self.spacing
    }

    /// Grid integers of every axis, electron-major: `[k_00, k_01, .., k_10, ..]`.
    pub fn electron_grid_indices(&self, flat: usize) -> Result<Vec<usize>> {
        if flat >= self.electronic_dim {
            return Err(Error::OutOfBounds {
                what: "electronic",
                index: flat,
                len: self.electronic_dim,
            });
        }
        let mut digits = Vec::with_capacity(self.axis_count());
        let mut rest = flat;
        for _ in 0..self.axis_count() {
            digits.push(rest % self.points_per_direction);
            rest /= self.points_per_direction;
        }
        Ok(digits)
    }

    pub fn electron_flat_index(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.axis_count() {
            return Err(Error::invalid(
                "electron index",
                format!("expected {} grid integers, got {}", self.axis_count(), digits.len()),
            ));
        }
        let mut flat = 0usize;
        for &d in digits.iter().rev() {
            if d >= self.points_per_direction {
                return Err(Error::OutOfBounds {
                    what: "grid",
                    index: d,
                    len: self.points_per_direction,
                });
            }
            flat = flat * self.points_per_direction + d;
        }
        Ok(flat)
    }

    /// Cartesian positions of every electron for basis state `flat`.
    /// Unused directions are zero.
    pub fn electron_positions(&self, flat: usize) -> Result<Vec<[f64; 3]>> {
        let digits = self.electron_grid_indices(flat)?;
        Ok(self.positions_from_digits(&digits))
    }

    pub(crate) fn positions_from_digits(&self, digits: &[usize]) -> Vec<[f64; 3]> {
        digits
            .chunks(self.spatial_dim)
            .map(|c| {
                let mut r = [0.0; 3];
                for (mu, &k) in c.iter().enumerate() {
                    r[mu] = self.coordinate(k);
                }
                r
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nucleus {
    pub label: String,
    pub charge: f64,
    /// Base position `R_ν0`; frozen coordinates keep this value.
    pub position: [f64; 3],
}

impl Nucleus {
    pub fn new(label: impl Into<String>, charge: f64, position: [f64; 3]) -> Self {
        Self {
            label: label.into(),
            charge,
            position,
        }
    }
}

/// One searched coordinate `(ν, μ)` of the nuclear register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveCoordinate {
    pub nucleus: usize,
    pub axis: usize,
    pub qubits: u32,
    pub max_displacement: f64,
}

impl ActiveCoordinate {
    pub fn points(&self) -> usize {
        1usize << self.qubits
    }

    /// Displacement between neighbouring candidates, `ΔR_max / N_qn`.
    pub fn step(&self) -> f64 {
        self.max_displacement / self.points() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryGrid {
    nuclei: Vec<Nucleus>,
    active: Vec<ActiveCoordinate>,
    geometry_count: usize,
}

impl GeometryGrid {
    pub fn new(nuclei: Vec<Nucleus>, active: Vec<ActiveCoordinate>) -> Result<Self> {
        let mut count: u128 = 1;
        for (i, c) in active.iter().enumerate() {
            if c.nucleus >= nuclei.len() {
                return Err(Error::OutOfBounds {
                    what: "nucleus",
                    index: c.nucleus,
                    len: nuclei.len(),
                });
            }
            if c.axis >= 3 {
                return Err(Error::invalid("axis", "must be 0 (x), 1 (y) or 2 (z)"));
            }
            if c.qubits == 0 || c.qubits > 20 {
                return Err(Error::invalid("n_qn", "must be between 1 and 20"));
            }
            if !c.max_displacement.is_finite() {
                return Err(Error::invalid("max_displacement", "must be finite"));
            }
            if active[..i]
                .iter()
                .any(|o| o.nucleus == c.nucleus && o.axis == c.axis)
            {
                return Err(Error::invalid(
                    "active coordinates",
                    format!("nucleus {} axis {} listed twice", c.nucleus, c.axis),
                ));
            }
            count *= c.points() as u128;
            if count > MAX_AMPLITUDES {
                return Err(Error::Capacity {
                    what: "nuclear register".into(),
                    required: count,
                    limit: MAX_AMPLITUDES,
                });
            }
        }
        for n in &nuclei {
            if !n.charge.is_finite() || n.position.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("nucleus", format!("{} is not finite", n.label)));
            }
        }
        Ok(Self {
            nuclei,
            active,
            geometry_count: count as usize,
        })
    }

    /// Grid with a single candidate: every coordinate frozen.
    pub fn fixed(nuclei: Vec<Nucleus>) -> Result<Self> {
        Self::new(nuclei, Vec::new())
    }

    pub fn nuclei(&self) -> &[Nucleus] {
        &self.nuclei
    }

    pub fn active(&self) -> &[ActiveCoordinate] {
        &self.active
    }

    pub fn geometry_count(&self) -> usize {
        self.geometry_count
    }

    pub fn charges(&self) -> Vec<f64> {
        self.nuclei.iter().map(|n| n.charge).collect()
    }

    /// Flatten a multi-index (first active coordinate fastest).
    pub fn flat_index(&self, j: &[usize]) -> Result<usize> {
        if j.len() != self.active.len() {
            return Err(Error::invalid(
                "geometry index",
                format!("expected {} components, got {}", self.active.len(), j.len()),
            ));
        }
        let mut flat = 0usize;
        for (c, &ji) in self.active.iter().zip(j).rev() {
            if ji >= c.points() {
                return Err(Error::OutOfBounds {
                    what: "geometry coordinate",
                    index: ji,
                    len: c.points(),
                });
            }
            flat = flat * c.points() + ji;
        }
        Ok(flat)
    }

    pub fn multi_index(&self, flat: usize) -> Result<Vec<usize>> {
        if flat >= self.geometry_count {
            return Err(Error::OutOfBounds {
                what: "geometry",
                index: flat,
                len: self.geometry_count,
            });
        }
        let mut rest = flat;
        Ok(self
            .active
            .iter()
            .map(|c| {
                let j = rest % c.points();
                rest /= c.points();
                j
            })
            .collect())
    }

    /// Nuclear positions for multi-index `j`: `R_ν0μ + j·ΔR_max/N_qn` on
    /// active coordinates, base values elsewhere.
    pub fn geometry_coordinates(&self, j: &[usize]) -> Result<Vec<[f64; 3]>> {
        self.flat_index(j)?;
        let mut pos: Vec<[f64; 3]> = self.nuclei.iter().map(|n| n.position).collect();
        for (c, &ji) in self.active.iter().zip(j) {
            pos[c.nucleus][c.axis] += ji as f64 * c.step();
        }
        Ok(pos)
    }

    pub fn positions(&self, flat: usize) -> Result<Vec<[f64; 3]>> {
        let j = self.multi_index(flat)?;
        self.geometry_coordinates(&j)
    }
}

/// A fully resolved composite basis index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositeIndex {
    pub electron: Vec<usize>,
    pub geometry: Vec<usize>,
    pub flat: usize,
}

/// Index arithmetic over `electrons ⊗ geometries`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSpace {
    layout: RegisterLayout,
    grid: GeometryGrid,
}

impl CompositeSpace {
    pub fn new(layout: RegisterLayout, grid: GeometryGrid) -> Result<Self> {
        let total = layout.electronic_dim() as u128 * grid.geometry_count() as u128;
        if total > MAX_AMPLITUDES {
            return Err(Error::Capacity {
                what: "composite register".into(),
                required: total,
                limit: MAX_AMPLITUDES,
            });
        }
        Ok(Self { layout, grid })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn grid(&self) -> &GeometryGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.layout.electronic_dim() * self.grid.geometry_count()
    }

    pub fn flatten(&self, electron: usize, geometry: usize) -> Result<usize> {
        let ne = self.layout.electronic_dim();
        if electron >= ne {
            return Err(Error::OutOfBounds {
                what: "electronic",
                index: electron,
                len: ne,
            });
        }
        if geometry >= self.grid.geometry_count() {
            return Err(Error::OutOfBounds {
                what: "geometry",
                index: geometry,
                len: self.grid.geometry_count(),
            });
        }
        Ok(electron + ne * geometry)
    }

    pub fn unflatten(&self, flat: usize) -> Result<(usize, usize)> {
        if flat >= self.dim() {
            return Err(Error::OutOfBounds {
                what: "composite",
                index: flat,
                len: self.dim(),
            });
        }
        let ne = self.layout.electronic_dim();
        Ok((flat % ne, flat / ne))
    }

    pub fn resolve(&self, flat: usize) -> Result<CompositeIndex> {
        let (k, j) = self.unflatten(flat)?;
        Ok(CompositeIndex {
            electron: self.layout.electron_grid_indices(k)?,
            geometry: self.grid.multi_index(j)?,
            flat,
        })
    }

    pub fn compose(&self, electron: &[usize], geometry: &[usize]) -> Result<CompositeIndex> {
        let k = self.layout.electron_flat_index(electron)?;
        let j = self.grid.flat_index(geometry)?;
        Ok(CompositeIndex {
            electron: electron.to_vec(),
            geometry: geometry.to_vec(),
            flat: self.flatten(k, j)?,
        })
    }
}
