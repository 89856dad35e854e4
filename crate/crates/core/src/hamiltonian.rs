//! Composite Hamiltonian with nuclear positions looked up per geometry.
//!
//! The position-dependent terms form one real diagonal over the flattened
//! `(K, J)` space. The kinetic term is diagonal in the momentum basis of
//! each electron axis and is applied through unitary DFTs. The dense
//! per-geometry matrices used as oracles share the same spectral kinetic
//! definition, so both routes describe the identical operator.

use std::f64::consts::PI;

use faer::{Mat, Side};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::GridFft;
use crate::potentials::InteractionModel;
use crate::registers::{GeometryGrid, RegisterLayout};

/// Default limit on the electronic dimension of dense matrices.
pub const DEFAULT_DENSE_CAP: usize = 8192;

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Position-diagonal potential over the flattened composite index, with each
/// contribution kept separately.
#[derive(Debug, Clone)]
pub struct PotentialDiagonal {
    electronic_dim: usize,
    geometry_count: usize,
    electron_electron: Vec<f64>,
    external: Vec<f64>,
    electron_nucleus: Vec<f64>,
    nucleus_nucleus: Vec<f64>,
    total: Vec<f64>,
}

impl PotentialDiagonal {
    pub fn electronic_dim(&self) -> usize {
        self.electronic_dim
    }

    pub fn geometry_count(&self) -> usize {
        self.geometry_count
    }

    /// `V_ee + V_en + V_nn + V_ext` at every flat index.
    pub fn values(&self) -> &[f64] {
        &self.total
    }

    pub fn block(&self, geometry: usize) -> &[f64] {
        let n = self.electronic_dim;
        &self.total[geometry * n..(geometry + 1) * n]
    }

    /// Electron-electron term, indexed by electronic index only.
    pub fn electron_electron(&self) -> &[f64] {
        &self.electron_electron
    }

    pub fn external(&self) -> &[f64] {
        &self.external
    }

    /// Electron-nucleus term over the composite index.
    pub fn electron_nucleus(&self) -> &[f64] {
        &self.electron_nucleus
    }

    /// Nucleus-nucleus energy per geometry.
    pub fn nucleus_nucleus(&self) -> &[f64] {
        &self.nucleus_nucleus
    }

    pub fn min(&self) -> f64 {
        self.total.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn build_potential_diagonal(
    layout: &RegisterLayout,
    grid: &GeometryGrid,
    interactions: &InteractionModel,
) -> Result<PotentialDiagonal> {
    let n_nuclei = grid.nuclei().len();
    interactions.validate(n_nuclei)?;
    let ne = layout.electronic_dim();
    let ng = grid.geometry_count();
    let n_el = layout.n_electrons();
    let charges = grid.charges();
    let geometries: Vec<Vec<[f64; 3]>> = (0..ng).map(|j| grid.positions(j)).collect::<Result<_>>()?;
    let electrons: Vec<Vec<[f64; 3]>> = (0..ne)
        .map(|k| layout.electron_positions(k))
        .collect::<Result<_>>()?;

    let softened = "use a softened (soft_coulomb) potential";
    let v_ee = &interactions.electron_electron;
    if v_ee.is_singular_at_zero() && n_el > 1 {
        // Two electrons always share a grid point somewhere.
        return Err(Error::Singular(format!(
            "bare Coulomb electron-electron interaction diverges at coincident grid points; {softened}"
        )));
    }
    let electron_electron: Vec<f64> = electrons
        .par_iter()
        .map(|r| {
            let mut v = 0.0;
            for a in 0..n_el {
                for b in a + 1..n_el {
                    v += v_ee.eval(distance(&r[a], &r[b]));
                }
            }
            v
        })
        .collect();
    let external: Vec<f64> = if interactions.external.is_zero() {
        vec![0.0; ne]
    } else {
        electrons
            .par_iter()
            .map(|r| r.iter().map(|p| interactions.external.eval(p)).sum())
            .collect()
    };

    let mut nucleus_nucleus = Vec::with_capacity(ng);
    for (j, pos) in geometries.iter().enumerate() {
        let mut e = 0.0;
        for a in 0..n_nuclei {
            for b in a + 1..n_nuclei {
                let v = interactions.nucleus_pair(a, b, n_nuclei);
                let d = distance(&pos[a], &pos[b]);
                if v.is_singular_at_zero() && d == 0.0 {
                    return Err(Error::Singular(format!(
                        "nuclei {a} and {b} coincide in geometry {j}; {softened}"
                    )));
                }
                e += charges[a] * charges[b] * v.eval(d);
            }
        }
        nucleus_nucleus.push(e);
    }

    for (nu, v) in interactions.electron_nucleus.iter().enumerate() {
        if !v.is_singular_at_zero() || charges[nu] == 0.0 {
            continue;
        }
        for (j, pos) in geometries.iter().enumerate() {
            if electrons.iter().any(|r| r.iter().any(|p| distance(p, &pos[nu]) == 0.0)) {
                return Err(Error::Singular(format!(
                    "nucleus {nu} sits on an electron grid point in geometry {j}; {softened}"
                )));
            }
        }
    }

    let mut electron_nucleus = vec![0.0; ne * ng];
    electron_nucleus
        .par_chunks_mut(ne)
        .zip(geometries.par_iter())
        .for_each(|(chunk, pos)| {
            for (k, out) in chunk.iter_mut().enumerate() {
                let mut v = 0.0;
                for r in &electrons[k] {
                    for (nu, rn) in pos.iter().enumerate() {
                        v -= charges[nu] * interactions.electron_nucleus[nu].eval(distance(r, rn));
                    }
                }
                *out = v;
            }
        });

    let mut total = vec![0.0; ne * ng];
    total
        .par_chunks_mut(ne)
        .enumerate()
        .for_each(|(j, chunk)| {
            for (k, out) in chunk.iter_mut().enumerate() {
                *out = electron_electron[k]
                    + electron_nucleus[j * ne + k]
                    + nucleus_nucleus[j]
                    + external[k];
            }
        });

    Ok(PotentialDiagonal {
        electronic_dim: ne,
        geometry_count: ng,
        electron_electron,
        external,
        electron_nucleus,
        nucleus_nucleus,
        total,
    })
}

/// Centred integer frequency of FFT bin `m` on an `n`-point axis, in `[−n/2, n/2)`.
pub fn centered_frequency(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// `Σ_ℓ p_ℓ²/2` over electron momentum multi-indices, stored in FFT bin order.
#[derive(Debug, Clone)]
pub struct KineticSpectrum {
    values: Vec<f64>,
    single_axis: Vec<f64>,
}

impl KineticSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Kinetic energy of each frequency bin of a single axis.
    pub fn single_axis(&self) -> &[f64] {
        &self.single_axis
    }
}

pub fn build_kinetic_spectrum(layout: &RegisterLayout) -> KineticSpectrum {
    let n = layout.points_per_direction();
    let l = layout.cell_length();
    let single_axis: Vec<f64> = (0..n)
        .map(|m| {
            let p = 2.0 * PI * centered_frequency(m, n) as f64 / l;
            0.5 * p * p
        })
        .collect();
    let axes = layout.axis_count();
    let values = (0..layout.electronic_dim())
        .map(|flat| {
            let mut rest = flat;
            let mut t = 0.0;
            for _ in 0..axes {
                t += single_axis[rest % n];
                rest /= n;
            }
            t
        })
        .collect();
    KineticSpectrum {
        values,
        single_axis,
    }
}

/// Real-space matrix of the single-axis kinetic operator, `F† diag(T) F`,
/// row-major `n × n`. It is real because the spectrum is even in frequency
/// and the unpaired `−n/2` bin contributes `(−1)^(a−b)`.
pub fn single_axis_kinetic_matrix(layout: &RegisterLayout) -> Vec<f64> {
    let n = layout.points_per_direction();
    let spectrum = build_kinetic_spectrum(layout);
    let mut by_offset = vec![0.0; n];
    for (delta, out) in by_offset.iter_mut().enumerate() {
        *out = spectrum
            .single_axis
            .iter()
            .enumerate()
            .map(|(m, t)| t * (2.0 * PI * (centered_frequency(m, n) * delta as i64) as f64 / n as f64).cos())
            .sum::<f64>()
            / n as f64;
    }
    let mut k = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            k[a * n + b] = by_offset[(a + n - b) % n];
        }
    }
    k
}

/// Dense real-symmetric electronic Hamiltonian of geometry `geometry`.
pub fn dense_hamiltonian(
    layout: &RegisterLayout,
    potential: &PotentialDiagonal,
    geometry: usize,
    cap: usize,
) -> Result<Mat<f64>> {
    let dim = layout.electronic_dim();
    if dim > cap {
        return Err(Error::Capacity {
            what: "dense Hamiltonian".into(),
            required: dim as u128,
            limit: cap as u128,
        });
    }
    if geometry >= potential.geometry_count() {
        return Err(Error::OutOfBounds {
            what: "geometry",
            index: geometry,
            len: potential.geometry_count(),
        });
    }
    let n = layout.points_per_direction();
    let k1 = single_axis_kinetic_matrix(layout);
    let v = potential.block(geometry);
    let axes = layout.axis_count();
    let mut h = Mat::<f64>::zeros(dim, dim);
    for row in 0..dim {
        h[(row, row)] += v[row];
        for axis in 0..axes {
            let stride = n.pow(axis as u32);
            let digit = (row / stride) % n;
            let base = row - digit * stride;
            for other in 0..n {
                h[(row, base + other * stride)] += k1[digit * n + other];
            }
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExchangeParity {
    Symmetric,
    Antisymmetric,
}

/// Eigenpairs in ascending energy order. Columns of `vectors` are eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub energies: Vec<f64>,
    pub vectors: Mat<f64>,
    /// `⟨φ|SWAP|φ⟩` for two-electron layouts.
    pub swap_expectation: Option<Vec<f64>>,
    pub parity: Option<Vec<ExchangeParity>>,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn vector(&self, n: usize) -> Vec<f64> {
        self.vectors.col(n).iter().copied().collect()
    }

    /// Label each eigenvector by the sign of its exchange expectation.
    pub fn label_exchange_parity(&mut self, layout: &RegisterLayout) -> Result<()> {
        let perm = swap_permutation(layout)?;
        let mut swaps = Vec::with_capacity(self.vectors.ncols());
        for c in 0..self.vectors.ncols() {
            let col = self.vectors.col(c);
            let s: f64 = (0..perm.len()).map(|k| col[k] * col[perm[k]]).sum();
            swaps.push(s);
        }
        self.parity = Some(
            swaps
                .iter()
                .map(|&s| {
                    if s >= 0.0 {
                        ExchangeParity::Symmetric
                    } else {
                        ExchangeParity::Antisymmetric
                    }
                })
                .collect(),
        );
        self.swap_expectation = Some(swaps);
        Ok(())
    }

    /// Keep only the lowest `keep` eigenvectors (all energies are retained).
    pub fn truncate_vectors(&mut self, keep: usize) {
        let keep = keep.min(self.vectors.ncols());
        self.vectors = self.vectors.subcols(0, keep).to_owned();
        if let Some(s) = &mut self.swap_expectation {
            s.truncate(keep);
        }
        if let Some(p) = &mut self.parity {
            p.truncate(keep);
        }
    }
}

/// Permutation exchanging the coordinates of electrons 0 and 1.
pub fn swap_permutation(layout: &RegisterLayout) -> Result<Vec<usize>> {
    if layout.n_electrons() != 2 {
        return Err(Error::Unsupported(
            "exchange parity is defined here for two electrons only".into(),
        ));
    }
    let d = layout.spatial_dim();
    (0..layout.electronic_dim())
        .map(|k| {
            let mut digits = layout.electron_grid_indices(k)?;
            for mu in 0..d {
                digits.swap(mu, d + mu);
            }
            layout.electron_flat_index(&digits)
        })
        .collect()
}

pub fn diagonalize(h: &Mat<f64>) -> Result<SpectralDecomposition> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::invalid("hamiltonian", "matrix is not square"));
    }
    let mut scale = 1.0f64;
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            scale = scale.max(h[(i, j)].abs());
            if j > i {
                asym = asym.max((h[(i, j)] - h[(j, i)]).abs());
            }
        }
    }
    if asym > 1e-12 * scale {
        return Err(Error::invalid(
            "hamiltonian",
            format!("not Hermitian: max |H - H^T| = {asym:e}"),
        ));
    }
    let eig = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Collapse(format!("eigensolver failed: {e:?}")))?;
    let s = eig.S();
    let energies: Vec<f64> = (0..n).map(|i| s[i]).collect();
    let vectors = eig.U().to_owned();
    Ok(SpectralDecomposition {
        energies,
        vectors,
        swap_expectation: None,
        parity: None,
    })
}

/// Amplitude types whose squared modulus can be taken.
pub trait Amplitude: Copy + Send + Sync {
    fn norm_sqr(self) -> f64;
}

impl Amplitude for f64 {
    fn norm_sqr(self) -> f64 {
        self * self
    }
}

impl Amplitude for Complex64 {
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
}

/// One-electron density `n(r)` on the single-electron grid. Sums over
/// electrons, so `Σ n(r)·dV = n_e` for a normalized input.
pub fn electron_density<A: Amplitude>(amplitudes: &[A], layout: &RegisterLayout) -> Result<Vec<f64>> {
    if amplitudes.len() != layout.electronic_dim() {
        return Err(Error::invalid(
            "state",
            format!(
                "expected {} amplitudes, got {}",
                layout.electronic_dim(),
                amplitudes.len()
            ),
        ));
    }
    let single = layout.single_electron_dim();
    let mut density = vec![0.0; single];
    for (k, a) in amplitudes.iter().enumerate() {
        let p = a.norm_sqr();
        let mut rest = k;
        for _ in 0..layout.n_electrons() {
            density[rest % single] += p;
            rest /= single;
        }
    }
    let dv = layout.volume_element();
    density.iter_mut().for_each(|d| *d /= dv);
    Ok(density)
}

/// Hermitian operator acting on complex vectors.
pub trait Operator: Sync {
    fn dim(&self) -> usize;
    fn apply_into(&self, psi: &[Complex64], out: &mut [Complex64]);

    fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        self.apply_into(psi, &mut out);
        out
    }

    fn expectation(&self, psi: &[Complex64]) -> f64 {
        let h = self.apply(psi);
        psi.iter().zip(&h).map(|(a, b)| (a.conj() * b).re).sum()
    }
}

/// Operator diagonal in the computational basis.
#[derive(Debug, Clone)]
pub struct DiagonalOperator(pub Vec<f64>);

impl Operator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn apply_into(&self, psi: &[Complex64], out: &mut [Complex64]) {
        for ((o, p), d) in out.iter_mut().zip(psi).zip(&self.0) {
            *o = p * d;
        }
    }
}

/// Dense operator stored row-major.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseOperator {
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::invalid("dense operator", "data length must be dim²"));
        }
        Ok(Self { dim, data })
    }
}

impl Operator for DenseOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, psi: &[Complex64], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.data[i * self.dim..(i + 1) * self.dim]
                .iter()
                .zip(psi)
                .map(|(a, b)| a * b)
                .sum();
        }
    }
}

/// Composite Hamiltonian in split form: potential diagonal plus the
/// Fourier-diagonal kinetic term, block by block over geometries.
#[derive(Debug, Clone)]
pub struct GridHamiltonian {
    layout: RegisterLayout,
    grid: GeometryGrid,
    potential: PotentialDiagonal,
    kinetic: KineticSpectrum,
    fft: GridFft,
}

impl GridHamiltonian {
    pub fn new(
        layout: &RegisterLayout,
        grid: &GeometryGrid,
        interactions: &InteractionModel,
    ) -> Result<Self> {
        crate::registers::CompositeSpace::new(layout.clone(), grid.clone())?;
        Ok(Self {
            layout: layout.clone(),
            grid: grid.clone(),
            potential: build_potential_diagonal(layout, grid, interactions)?,
            kinetic: build_kinetic_spectrum(layout),
            fft: GridFft::new(layout),
        })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn grid(&self) -> &GeometryGrid {
        &self.grid
    }

    pub fn potential(&self) -> &PotentialDiagonal {
        &self.potential
    }

    pub fn kinetic(&self) -> &KineticSpectrum {
        &self.kinetic
    }

    pub fn composite_dim(&self) -> usize {
        self.potential.values().len()
    }

    pub fn dense_block(&self, geometry: usize, cap: usize) -> Result<Mat<f64>> {
        dense_hamiltonian(&self.layout, &self.potential, geometry, cap)
    }

    /// Multiply every electronic block, in momentum space, by `f(T)`.
    pub(crate) fn kinetic_map(&self, amps: &mut [Complex64], f: impl Fn(f64) -> Complex64 + Sync) {
        let block = self.fft.block_len();
        let t = self.kinetic.values();
        amps.par_chunks_mut(block).for_each(|chunk| {
            let mut work = Vec::new();
            self.fft.forward(chunk, &mut work);
            for (a, &ti) in chunk.iter_mut().zip(t) {
                *a *= f(ti);
            }
            self.fft.inverse(chunk, &mut work);
        });
    }

    /// Kinetic and potential parts of `⟨ψ|H|ψ⟩`, summed in a fixed order.
    pub fn energy_terms(&self, psi: &[Complex64]) -> (f64, f64) {
        let block = self.fft.block_len();
        let t = self.kinetic.values();
        let per_block: Vec<f64> = psi
            .par_chunks(block)
            .map(|chunk| {
                let mut buf = chunk.to_vec();
                self.fft.forward(&mut buf, &mut Vec::new());
                buf.iter().zip(t).map(|(a, ti)| a.norm_sqr() * ti).sum()
            })
            .collect();
        let kinetic = per_block.iter().sum();
        let potential = psi
            .iter()
            .zip(self.potential.values())
            .map(|(a, v)| a.norm_sqr() * v)
            .sum();
        (kinetic, potential)
    }
}

impl Operator for GridHamiltonian {
    fn dim(&self) -> usize {
        self.composite_dim()
    }

    fn apply_into(&self, psi: &[Complex64], out: &mut [Complex64]) {
        out.copy_from_slice(psi);
        self.kinetic_map(out, |t| Complex64::new(t, 0.0));
        for ((o, p), v) in out.iter_mut().zip(psi).zip(self.potential.values()) {
            *o += p * v;
        }
    }

    fn expectation(&self, psi: &[Complex64]) -> f64 {
        let (t, v) = self.energy_terms(psi);
        t + v
    }
}
