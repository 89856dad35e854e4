//! Variational imaginary-time evolution on a statevector simulator.
//!
//! The trial state is a layered hardware-efficient circuit acting on the
//! combined electronic and nuclear register. Qubit `q` is bit `q` of the
//! flattened composite index, so the electronic qubits come first.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{diagonalize, GridHamiltonian, Operator};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Layer layout recorded in every report.
pub const LAYER_LAYOUT: &str = "rotation layer, then depth x [all-pairs CZ, rotation layer]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    /// `e^{−iθσ/2}` as a 2×2 row-major matrix.
    fn rotation(self, theta: f64) -> [Complex64; 4] {
        let (s, c) = (theta / 2.0).sin_cos();
        match self {
            Self::X => [
                Complex64::new(c, 0.0),
                Complex64::new(0.0, -s),
                Complex64::new(0.0, -s),
                Complex64::new(c, 0.0),
            ],
            Self::Y => [
                Complex64::new(c, 0.0),
                Complex64::new(-s, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(c, 0.0),
            ],
            Self::Z => [
                Complex64::new(c, -s),
                ZERO,
                ZERO,
                Complex64::new(c, s),
            ],
        }
    }

    /// `(−i/2)σ`.
    fn generator(self) -> [Complex64; 4] {
        let h = 0.5;
        match self {
            Self::X => [ZERO, Complex64::new(0.0, -h), Complex64::new(0.0, -h), ZERO],
            Self::Y => [ZERO, Complex64::new(-h, 0.0), Complex64::new(h, 0.0), ZERO],
            Self::Z => [Complex64::new(0.0, -h), ZERO, ZERO, Complex64::new(0.0, h)],
        }
    }
}

fn apply_1q(psi: &mut [Complex64], q: usize, m: &[Complex64; 4]) {
    let bit = 1usize << q;
    for i in 0..psi.len() {
        if i & bit == 0 {
            let a = psi[i];
            let b = psi[i | bit];
            psi[i] = m[0] * a + m[1] * b;
            psi[i | bit] = m[2] * a + m[3] * b;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViteAnsatz {
    n_qubits: usize,
    depth: usize,
    axes: Vec<PauliAxis>,
    /// Product of every CZ in one entangling layer: `(−1)^{c(c−1)/2}` with
    /// `c` the number of set bits.
    entangler: Vec<f64>,
}

impl ViteAnsatz {
    pub fn new(n_qubits: usize, depth: usize, axis: PauliAxis) -> Result<Self> {
        let n = n_qubits * (depth + 1);
        Self::with_axes(n_qubits, depth, vec![axis; n])
    }

    /// One axis per parameter, ordered layer by layer, qubit fastest.
    pub fn with_axes(n_qubits: usize, depth: usize, axes: Vec<PauliAxis>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 26 {
            return Err(Error::invalid("n_q", "must be between 1 and 26"));
        }
        if axes.len() != n_qubits * (depth + 1) {
            return Err(Error::invalid(
                "axes",
                format!("expected {} entries, got {}", n_qubits * (depth + 1), axes.len()),
            ));
        }
        let entangler = (0..1usize << n_qubits)
            .map(|i| {
                let c = i.count_ones() as usize;
                if (c * c.saturating_sub(1) / 2) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        Ok(Self {
            n_qubits,
            depth,
            axes,
            entangler,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn n_params(&self) -> usize {
        self.axes.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn axes(&self) -> &[PauliAxis] {
        &self.axes
    }

    /// Unordered qubit pairs of one entangling layer, in application order.
    pub fn entangler_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_qubits;
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::invalid(
                "theta",
                format!("expected {} parameters, got {}", self.n_params(), theta.len()),
            ));
        }
        Ok(())
    }

    fn entangle(&self, psi: &mut [Complex64]) {
        for (a, s) in psi.iter_mut().zip(&self.entangler) {
            *a *= s;
        }
    }

    /// Apply parameters `from..` (with the entanglers between them).
    fn apply_from(&self, psi: &mut [Complex64], theta: &[f64], from: usize) {
        let n = self.n_qubits;
        for p in from..theta.len() {
            if p % n == 0 && p > 0 && p != from {
                self.entangle(psi);
            }
            apply_1q(psi, p % n, &self.axes[p].rotation(theta[p]));
        }
    }

    fn zero_state(&self) -> Vec<Complex64> {
        let mut psi = vec![ZERO; self.dim()];
        psi[0] = Complex64::new(1.0, 0.0);
        psi
    }
}

pub fn apply_ansatz(ansatz: &ViteAnsatz, theta: &[f64]) -> Result<Vec<Complex64>> {
    ansatz.check(theta)?;
    let mut psi = ansatz.zero_state();
    ansatz.apply_from(&mut psi, theta, 0);
    Ok(psi)
}

/// `∂Φ/∂θ_j`.
pub fn gradient_state(ansatz: &ViteAnsatz, theta: &[f64], j: usize) -> Result<Vec<Complex64>> {
    ansatz.check(theta)?;
    if j >= ansatz.n_params() {
        return Err(Error::OutOfBounds {
            what: "parameter",
            index: j,
            len: ansatz.n_params(),
        });
    }
    let mut psi = ansatz.zero_state();
    ansatz.apply_from(&mut psi, &theta[..=j], 0);
    apply_1q(&mut psi, j % ansatz.n_qubits, &ansatz.axes[j].generator());
    if j + 1 < theta.len() {
        if (j + 1) % ansatz.n_qubits == 0 {
            ansatz.entangle(&mut psi);
        }
        ansatz.apply_from(&mut psi, theta, j + 1);
    }
    Ok(psi)
}

/// `Φ` together with every `∂_jΦ`, sharing the circuit prefixes.
pub fn gradient_states(ansatz: &ViteAnsatz, theta: &[f64]) -> Result<(Vec<Complex64>, Vec<Vec<Complex64>>)> {
    ansatz.check(theta)?;
    let n = ansatz.n_qubits;
    let mut prefixes = Vec::with_capacity(theta.len());
    let mut psi = ansatz.zero_state();
    for p in 0..theta.len() {
        if p % n == 0 && p > 0 {
            ansatz.entangle(&mut psi);
        }
        apply_1q(&mut psi, p % n, &ansatz.axes[p].rotation(theta[p]));
        prefixes.push(psi.clone());
    }
    let grads = prefixes
        .into_par_iter()
        .enumerate()
        .map(|(j, mut g)| {
            apply_1q(&mut g, j % n, &ansatz.axes[j].generator());
            if j + 1 < theta.len() {
                if (j + 1) % n == 0 {
                    ansatz.entangle(&mut g);
                }
                ansatz.apply_from(&mut g, theta, j + 1);
            }
            g
        })
        .collect();
    Ok((psi, grads))
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `M_jj' = Re⟨∂_jΦ|∂_j'Φ⟩` from precomputed gradient states.
pub fn m_matrix_from(grads: &[Vec<Complex64>]) -> Mat<f64> {
    let n = grads.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..=i).map(|j| inner(&grads[i], &grads[j]).re).collect())
        .collect();
    Mat::from_fn(n, n, |i, j| if j <= i { rows[i][j] } else { rows[j][i] })
}

pub fn m_matrix(ansatz: &ViteAnsatz, theta: &[f64]) -> Result<Mat<f64>> {
    let (_, grads) = gradient_states(ansatz, theta)?;
    Ok(m_matrix_from(&grads))
}

/// `𝒱_j = −Re⟨∂_jΦ|H|Φ⟩` from precomputed gradient states and `H|Φ⟩`.
pub fn v_vector_from(grads: &[Vec<Complex64>], h_phi: &[Complex64]) -> Vec<f64> {
    grads.par_iter().map(|g| -inner(g, h_phi).re).collect()
}

pub fn v_vector(ansatz: &ViteAnsatz, theta: &[f64], h: &dyn Operator) -> Result<Vec<f64>> {
    if h.dim() != ansatz.dim() {
        return Err(Error::invalid(
            "hamiltonian",
            format!("acts on {} amplitudes, ansatz has {}", h.dim(), ansatz.dim()),
        ));
    }
    let (phi, grads) = gradient_states(ansatz, theta)?;
    Ok(v_vector_from(&grads, &h.apply(&phi)))
}

/// `θ' = θ + Δτ (M + λI)⁻¹ 𝒱`, solved by Cholesky factorization.
pub fn vite_update(theta: &[f64], m: &Mat<f64>, v: &[f64], dtau: f64, lambda_reg: f64) -> Result<Vec<f64>> {
    let n = theta.len();
    if m.nrows() != n || m.ncols() != n || v.len() != n {
        return Err(Error::invalid("vite update", "inconsistent shapes"));
    }
    if !(lambda_reg >= 0.0 && lambda_reg.is_finite()) {
        return Err(Error::invalid("lambda_reg", "must be finite and non-negative"));
    }
    let a = Mat::from_fn(n, n, |i, j| m[(i, j)] + if i == j { lambda_reg } else { 0.0 });
    let llt = a.llt(Side::Lower).map_err(|e| {
        Error::Singular(format!(
            "M + {lambda_reg:e} I is not positive definite ({e:?}); increase lambda_reg"
        ))
    })?;
    let rhs = Mat::from_fn(n, 1, |i, _| v[i]);
    let x = llt.solve(&rhs);
    let out: Vec<f64> = (0..n).map(|i| theta[i] + dtau * x[(i, 0)]).collect();
    if out.iter().any(|t| !t.is_finite()) {
        return Err(Error::Singular("parameter update is not finite".into()));
    }
    Ok(out)
}

/// Outcome probabilities of the one-ancilla interference circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AncillaProbe {
    pub phi: f64,
    pub derivative_index: Option<usize>,
    /// `probabilities[s][k] = P_{s,k}`.
    pub probabilities: [Vec<f64>; 2],
}

impl AncillaProbe {
    pub fn total(&self) -> f64 {
        self.probabilities.iter().flatten().sum()
    }

    /// `Σ_{s,k} (−1)^s V_kk P_{s,k}`.
    pub fn recover(&self, v_diag: &[f64]) -> f64 {
        let [p0, p1] = &self.probabilities;
        v_diag
            .iter()
            .zip(p0.iter().zip(p1))
            .map(|(v, (a, b))| v * (a - b))
            .sum()
    }
}

/// Probabilities of `½ Σ_s |s⟩ ⊗ (W + (−1)^s e^{iφ} U)|0⟩` for the states
/// `w = W|0⟩` and `u = U|0⟩`, plus the value recovered with `V̂`; at
/// `φ = π/2` that value is `−Im⟨0|W†V̂U|0⟩`.
pub fn ancilla_probabilities(
    w: &[Complex64],
    u: &[Complex64],
    phi: f64,
    v_diag: &[f64],
    derivative_index: Option<usize>,
) -> Result<(AncillaProbe, f64)> {
    if w.len() != u.len() || v_diag.len() != u.len() || !u.len().is_power_of_two() {
        return Err(Error::invalid(
            "ancilla probe",
            "W|0>, U|0> and the diagonal must share one power-of-two length",
        ));
    }
    let e = Complex64::from_polar(1.0, phi);
    let probs = |sign: f64| -> Vec<f64> {
        w.iter()
            .zip(u)
            .map(|(a, b)| (0.5 * (a + sign * e * b)).norm_sqr())
            .collect()
    };
    let probe = AncillaProbe {
        phi,
        derivative_index,
        probabilities: [probs(1.0), probs(-1.0)],
    };
    let value = probe.recover(v_diag);
    Ok((probe, value))
}

/// `W_j|0⟩ = 2i ∂_jΦ`, the unitary circuit with `σ` inserted after rotation `j`.
pub fn derivative_circuit_state(ansatz: &ViteAnsatz, theta: &[f64], j: usize) -> Result<Vec<Complex64>> {
    Ok(gradient_state(ansatz, theta, j)?
        .into_iter()
        .map(|a| a * Complex64::new(0.0, 2.0))
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViteConfig {
    pub depth: usize,
    pub dtau: f64,
    pub steps: usize,
    pub seed: u64,
    pub lambda_reg: f64,
    pub axis: PauliAxis,
    /// Geometry whose eigencomponents are tracked; `None` picks the
    /// geometry with the lowest ground energy.
    pub tracked_geometry: Option<usize>,
    /// Number of tracked eigencomponents (ground state first).
    pub tracked_states: usize,
}

impl Default for ViteConfig {
    fn default() -> Self {
        Self {
            depth: 12,
            dtau: 0.01,
            steps: 6000,
            seed: 0,
            lambda_reg: 1e-6,
            axis: PauliAxis::Y,
            tracked_geometry: None,
            tracked_states: 3,
        }
    }
}

impl ViteConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dtau > 0.0 && self.dtau.is_finite()) {
            return Err(Error::invalid("dtau", "must be positive"));
        }
        if self.steps == 0 {
            return Err(Error::invalid("steps", "must be at least 1"));
        }
        if !(self.lambda_reg > 0.0 && self.lambda_reg.is_finite()) {
            return Err(Error::invalid("lambda_reg", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViteRecord {
    pub step: usize,
    pub energy: f64,
    pub energy_error: f64,
    /// Nuclear-register marginal `w_J`.
    pub weights: Vec<f64>,
    /// `|⟨φ_n[J*]|ψ[J*]⟩|² / w_J*` for the tracked geometry `J*`.
    pub eigen_weights: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViteReport {
    pub n_qubits: usize,
    pub depth: usize,
    pub n_params: usize,
    pub layer_layout: String,
    pub seed: u64,
    pub dtau: f64,
    pub lambda_reg: f64,
    pub exact_energy: f64,
    pub tracked_geometry: usize,
    pub tracked_energies: Vec<f64>,
    pub theta_initial: Vec<f64>,
    pub theta_final: Vec<f64>,
    /// Row 0 is the initial circuit; row `s` follows `s` updates.
    pub records: Vec<ViteRecord>,
}

fn record(
    step: usize,
    h: &GridHamiltonian,
    phi: &[Complex64],
    h_phi: &[Complex64],
    exact: f64,
    tracked: usize,
    eigvecs: &[Vec<f64>],
) -> ViteRecord {
    let energy = inner(phi, h_phi).re;
    let ne = h.layout().electronic_dim();
    let weights: Vec<f64> = phi
        .chunks(ne)
        .map(|b| b.iter().map(|a| a.norm_sqr()).sum())
        .collect();
    let block = &phi[tracked * ne..(tracked + 1) * ne];
    let wj = weights[tracked];
    let eigen_weights = eigvecs
        .iter()
        .map(|v| {
            let o: Complex64 = block.iter().zip(v).map(|(a, b)| a * b).sum();
            if wj > 0.0 {
                o.norm_sqr() / wj
            } else {
                0.0
            }
        })
        .collect();
    ViteRecord {
        step,
        energy,
        energy_error: energy - exact,
        weights,
        eigen_weights,
    }
}

/// Seeded initial parameters, uniform on `[0, 2π)`.
pub fn initial_parameters(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
        .collect()
}

/// Runs VITE on the composite register of `h`, calling `observe` after each
/// record is made.
pub fn run_vite(
    h: &GridHamiltonian,
    config: &ViteConfig,
    mut observe: impl FnMut(&ViteRecord),
) -> Result<ViteReport> {
    config.validate()?;
    let dim = h.composite_dim();
    if !dim.is_power_of_two() {
        return Err(Error::invalid("layout", "composite dimension must be a power of two"));
    }
    let n_qubits = dim.trailing_zeros() as usize;
    let ansatz = ViteAnsatz::new(n_qubits, config.depth, config.axis)?;

    let g = h.grid().geometry_count();
    let mut spectra = Vec::with_capacity(g);
    for j in 0..g {
        spectra.push(diagonalize(&h.dense_block(j, crate::hamiltonian::DEFAULT_DENSE_CAP)?)?);
    }
    let ground: Vec<f64> = spectra.iter().map(|s| s.energies[0]).collect();
    let exact = ground.iter().copied().fold(f64::INFINITY, f64::min);
    let tracked = match config.tracked_geometry {
        Some(j) if j >= g => {
            return Err(Error::OutOfBounds {
                what: "tracked geometry",
                index: j,
                len: g,
            })
        }
        Some(j) => j,
        None => (0..g).fold(0, |b, j| if ground[j] < ground[b] { j } else { b }),
    };
    let keep = config.tracked_states.min(spectra[tracked].len());
    let eigvecs: Vec<Vec<f64>> = (0..keep).map(|n| spectra[tracked].vector(n)).collect();
    let tracked_energies = spectra[tracked].energies[..keep].to_vec();
    drop(spectra);

    let theta0 = initial_parameters(ansatz.n_params(), config.seed);
    let mut theta = theta0.clone();
    let mut records = Vec::with_capacity(config.steps + 1);
    for step in 0..=config.steps {
        let (phi, grads) = gradient_states(&ansatz, &theta)?;
        let h_phi = h.apply(&phi);
        let rec = record(step, h, &phi, &h_phi, exact, tracked, &eigvecs);
        observe(&rec);
        records.push(rec);
        if step == config.steps {
            break;
        }
        let m = m_matrix_from(&grads);
        let v = v_vector_from(&grads, &h_phi);
        theta = vite_update(&theta, &m, &v, config.dtau, config.lambda_reg)?;
    }
    Ok(ViteReport {
        n_qubits,
        depth: config.depth,
        n_params: ansatz.n_params(),
        layer_layout: LAYER_LAYOUT.into(),
        seed: config.seed,
        dtau: config.dtau,
        lambda_reg: config.lambda_reg,
        exact_energy: exact,
        tracked_geometry: tracked,
        tracked_energies,
        theta_initial: theta0,
        theta_final: theta,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::DiagonalOperator;

    fn random_theta(n: usize, seed: u64) -> Vec<f64> {
        initial_parameters(n, seed)
    }

    #[test]
    fn trivial_circuits() {
        let a = ViteAnsatz::new(3, 2, PauliAxis::Y).unwrap();
        let psi = apply_ansatz(&a, &vec![0.0; 9]).unwrap();
        assert_eq!(psi[0], Complex64::new(1.0, 0.0));
        assert!(psi[1..].iter().all(|x| x.norm() == 0.0));
        let one = ViteAnsatz::new(1, 0, PauliAxis::Y).unwrap();
        let psi = apply_ansatz(&one, &[std::f64::consts::PI]).unwrap();
        assert!(psi[0].norm() < 1e-15 && (psi[1].re - 1.0).abs() < 1e-15);
        assert!(apply_ansatz(&one, &[0.0, 1.0]).is_err());
        assert!(gradient_state(&one, &[0.0], 1).is_err());
    }

    #[test]
    fn entangler_matches_pairwise_cz() {
        let a = ViteAnsatz::new(4, 1, PauliAxis::Y).unwrap();
        assert_eq!(a.entangler_pairs().len(), 6);
        for i in 0..16usize {
            let mut s = 1.0;
            for (p, q) in a.entangler_pairs() {
                if (i >> p) & 1 == 1 && (i >> q) & 1 == 1 {
                    s = -s;
                }
            }
            assert_eq!(a.entangler[i], s);
        }
    }

    #[test]
    fn unitarity_on_large_circuit() {
        let a = ViteAnsatz::new(9, 12, PauliAxis::Y).unwrap();
        assert_eq!(a.n_params(), 117);
        for seed in 0..100 {
            let psi = apply_ansatz(&a, &random_theta(117, seed)).unwrap();
            let n: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        for axis in [PauliAxis::X, PauliAxis::Y, PauliAxis::Z] {
            let a = ViteAnsatz::new(4, 2, axis).unwrap();
            // Start from a nontrivial state for z rotations.
            let a = if axis == PauliAxis::Z {
                let mut axes = vec![PauliAxis::Y; 4];
                axes.extend(vec![PauliAxis::Z; 8]);
                ViteAnsatz::with_axes(4, 2, axes).unwrap()
            } else {
                a
            };
            let theta = random_theta(12, 5);
            let (phi, grads) = gradient_states(&a, &theta).unwrap();
            let eps = 1e-5;
            for j in 0..12 {
                let single = gradient_state(&a, &theta, j).unwrap();
                let mut tp = theta.clone();
                tp[j] += eps;
                let mut tm = theta.clone();
                tm[j] -= eps;
                let p = apply_ansatz(&a, &tp).unwrap();
                let m = apply_ansatz(&a, &tm).unwrap();
                let err: f64 = (0..16)
                    .map(|k| ((p[k] - m[k]) / (2.0 * eps) - grads[j][k]).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(err < 1e-6, "{axis:?} j={j} err={err}");
                assert!(single.iter().zip(&grads[j]).all(|(x, y)| (x - y).norm() < 1e-14));
                assert!(inner(&grads[j], &phi).re.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn one_qubit_analytic() {
        let a = ViteAnsatz::new(1, 0, PauliAxis::Y).unwrap();
        let theta = [std::f64::consts::FRAC_PI_2];
        let m = m_matrix(&a, &theta).unwrap();
        assert!((m[(0, 0)] - 0.25).abs() < 1e-12);
        let sz = DiagonalOperator(vec![1.0, -1.0]);
        let v = v_vector(&a, &theta, &sz).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-12);
        for t in [0.3, 1.1, 2.9] {
            let v = v_vector(&a, &[t], &sz).unwrap();
            assert!((v[0] - t.sin() / 2.0).abs() < 1e-12);
        }
        let next = vite_update(&theta, &m, &v, 0.01, 0.0).unwrap();
        assert!((next[0] - theta[0] - 0.02).abs() < 1e-12);
    }

    #[test]
    fn m_is_symmetric_psd() {
        let a = ViteAnsatz::new(4, 2, PauliAxis::Y).unwrap();
        for seed in 0..20 {
            let m = m_matrix(&a, &random_theta(12, seed)).unwrap();
            for i in 0..12 {
                for j in 0..12 {
                    assert_eq!(m[(i, j)], m[(j, i)]);
                }
            }
            let eig = m.self_adjoint_eigen(Side::Lower).unwrap();
            for i in 0..12 {
                assert!(eig.S()[i] >= -1e-10);
            }
        }
    }

    #[test]
    fn v_is_half_energy_gradient() {
        let a = ViteAnsatz::new(3, 2, PauliAxis::Y).unwrap();
        let h = DiagonalOperator((0..8).map(|k| (k as f64 * 0.7).cos()).collect());
        let theta = random_theta(9, 9);
        let v = v_vector(&a, &theta, &h).unwrap();
        let eps = 1e-5;
        for j in 0..9 {
            let mut tp = theta.clone();
            tp[j] += eps;
            let mut tm = theta.clone();
            tm[j] -= eps;
            let ep = h.expectation(&apply_ansatz(&a, &tp).unwrap());
            let em = h.expectation(&apply_ansatz(&a, &tm).unwrap());
            assert!((v[j] + 0.5 * (ep - em) / (2.0 * eps)).abs() < 1e-6);
        }
    }

    #[test]
    fn update_limits() {
        let m = Mat::from_fn(2, 2, |i, j| if i == j { 0.5 } else { 0.1 });
        let theta = [0.2, -0.4];
        assert_eq!(vite_update(&theta, &m, &[0.0, 0.0], 0.1, 1e-6).unwrap(), theta.to_vec());
        let lam = 1e8;
        let v = [0.3, -0.7];
        let t = vite_update(&theta, &m, &v, 0.1, lam).unwrap();
        for i in 0..2 {
            let want = 0.1 * v[i] / lam;
            assert!(((t[i] - theta[i]) - want).abs() < 1e-6 * want.abs());
        }
        let singular = Mat::from_fn(2, 2, |_, _| 1.0);
        assert!(matches!(
            vite_update(&theta, &singular, &v, 0.1, 0.0),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn ancilla_trivial_and_complete() {
        let a = ViteAnsatz::new(2, 1, PauliAxis::Y).unwrap();
        let u = apply_ansatz(&a, &random_theta(4, 1)).unwrap();
        let (probe, value) = ancilla_probabilities(&u, &u, std::f64::consts::FRAC_PI_2, &[1.0; 4], None).unwrap();
        assert!(value.abs() < 1e-12);
        assert!((probe.total() - 1.0).abs() < 1e-12);
    }
}
