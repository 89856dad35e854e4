//! Geometry optimization by probabilistic imaginary-time evolution.
//!
//! The input state is a superposition over candidate geometries, each
//! carrying a reference electronic state. Imaginary-time evolution of the
//! composite state concentrates weight on the lowest-energy candidate, which
//! is then read out by measuring the nuclear register.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{diagonalize, GridHamiltonian, DEFAULT_DENSE_CAP};
use crate::potentials::{ilj_interaction_energy, IljParams, MoleculeGeometry, PairPotential};
use crate::propagator::{evolve_ite, CompositeState, PiteParams, StepOutcome, TauSchedule};
use crate::registers::{GeometryGrid, RegisterLayout};

/// Name recorded alongside every sampled histogram.
pub const SAMPLER_ALGORITHM: &str = "chacha20-inverse-cdf-v1";

/// Overlaps below this are treated as exact zeros by the spectral oracle.
const OVERLAP_FLOOR: f64 = 1e-24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialGuess {
    weights: Vec<f64>,
}

impl InitialGuess {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("initial weights", "must be nonempty"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("initial weights", "must be finite and non-negative"));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("initial weights", format!("must sum to 1, got {s}")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn point(n: usize, j: usize) -> Result<Self> {
        if j >= n {
            return Err(Error::OutOfBounds {
                what: "geometry",
                index: j,
                len: n,
            });
        }
        let mut weights = vec![0.0; n];
        weights[j] = 1.0;
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// User-supplied reference state: `(J, layout, grid) -> amplitudes`.
#[derive(Clone)]
pub struct CustomReference(
    pub Arc<dyn Fn(usize, &RegisterLayout, &GeometryGrid) -> Result<Vec<Complex64>> + Send + Sync>,
);

impl fmt::Debug for CustomReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomReference(..)")
    }
}

/// Electronic reference state for each candidate geometry, centered on the
/// midpoint of the nuclei at that geometry.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceSpec {
    GaussianSymmetric { width: f64 },
    GaussianAntisymmetric { width: f64 },
    #[serde(skip)]
    Custom(CustomReference),
}

impl ReferenceSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::GaussianSymmetric { width } | Self::GaussianAntisymmetric { width } => {
                if !(*width > 0.0 && width.is_finite()) {
                    return Err(Error::invalid("reference width", "must be positive"));
                }
                Ok(())
            }
            Self::Custom(_) => Ok(()),
        }
    }
}

/// Mean position of all nuclei at geometry `j`.
pub fn nuclear_midpoint(grid: &GeometryGrid, j: usize) -> Result<[f64; 3]> {
    let pos = grid.positions(j)?;
    if pos.is_empty() {
        return Err(Error::invalid("geometry", "no nuclei to center the reference on"));
    }
    let mut m = [0.0; 3];
    for p in &pos {
        for (a, b) in m.iter_mut().zip(p) {
            *a += b / pos.len() as f64;
        }
    }
    Ok(m)
}

/// Normalized reference electronic state at geometry `j`.
pub fn prepare_reference(
    j: usize,
    spec: &ReferenceSpec,
    layout: &RegisterLayout,
    grid: &GeometryGrid,
) -> Result<Vec<Complex64>> {
    spec.validate()?;
    if j >= grid.geometry_count() {
        return Err(Error::OutOfBounds {
            what: "geometry",
            index: j,
            len: grid.geometry_count(),
        });
    }
    let mut amps = match spec {
        ReferenceSpec::Custom(f) => {
            let a = (f.0)(j, layout, grid)?;
            if a.len() != layout.electronic_dim() {
                return Err(Error::invalid(
                    "reference",
                    format!("custom state has {} amplitudes, expected {}", a.len(), layout.electronic_dim()),
                ));
            }
            a
        }
        ReferenceSpec::GaussianSymmetric { width } | ReferenceSpec::GaussianAntisymmetric { width } => {
            let antisym = matches!(spec, ReferenceSpec::GaussianAntisymmetric { .. });
            if layout.n_electrons() != 2 {
                return Err(Error::Unsupported(
                    "built-in Gaussian references require exactly two electrons".into(),
                ));
            }
            let d = layout.spatial_dim();
            let center = nuclear_midpoint(grid, j)?;
            (0..layout.electronic_dim())
                .into_par_iter()
                .map(|k| {
                    let digits = layout.electron_grid_indices(k).expect("index in range");
                    let r = layout.positions_from_digits(&digits);
                    let r2: f64 = r
                        .iter()
                        .flat_map(|p| (0..d).map(move |mu| (p[mu] - center[mu]).powi(2)))
                        .sum();
                    let mut v = (-r2 / (width * width)).exp();
                    if antisym {
                        v *= (r[0][0] - r[1][0]) / width;
                    }
                    Complex64::new(v, 0.0)
                })
                .collect()
        }
    };
    let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if !(n > 1e-300 && n.is_finite()) {
        return Err(Error::invalid(
            "reference",
            format!("state at geometry {j} vanishes on the grid; increase the resolution or the width"),
        ));
    }
    amps.iter_mut().for_each(|a| *a /= n);
    Ok(amps)
}

/// `Σ_J √w_0J |ψ_ref[J]⟩ ⊗ |J⟩`.
pub fn prepare_input(
    guess: &InitialGuess,
    spec: &ReferenceSpec,
    layout: &RegisterLayout,
    grid: &GeometryGrid,
) -> Result<CompositeState> {
    let g = grid.geometry_count();
    if guess.weights().len() != g {
        return Err(Error::invalid(
            "initial weights",
            format!("{} weights for {} geometries", guess.weights().len(), g),
        ));
    }
    let ne = layout.electronic_dim();
    let mut amps = Vec::with_capacity(ne * g);
    for (j, &w) in guess.weights().iter().enumerate() {
        if w == 0.0 {
            amps.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), ne));
            continue;
        }
        let s = w.sqrt();
        amps.extend(prepare_reference(j, spec, layout, grid)?.into_iter().map(|a| a * s));
    }
    CompositeState::new(amps, ne, g)
}

pub fn extract_weights(state: &CompositeState) -> Vec<f64> {
    state.weights()
}

/// Index of the largest weight; ties go to the smallest index.
pub fn argmax_geometry(weights: &[f64]) -> usize {
    let mut best = 0;
    for (j, &w) in weights.iter().enumerate() {
        if w > weights[best] {
            best = j;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub algorithm: String,
    pub seed: u64,
    pub shots: u64,
    pub counts: Vec<u64>,
}

/// Multinomial draw by inverse-CDF lookup of uniform ChaCha20 variates.
pub fn sample_histogram(weights: &[f64], shots: u64, seed: u64) -> Result<Histogram> {
    if shots == 0 {
        return Err(Error::invalid("shots", "must be at least 1"));
    }
    if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::invalid("weights", "must be nonempty, finite and non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("weights", "must not all be zero"));
    }
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w / total;
        cdf.push(acc);
    }
    // Guard the last nonzero bin against round-off in the running sum.
    let last = weights.iter().rposition(|&w| w > 0.0).expect("nonzero total");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; weights.len()];
    for _ in 0..shots {
        let u: f64 = rng.random();
        let j = cdf.partition_point(|&c| c <= u).min(last);
        counts[j] += 1;
    }
    Ok(Histogram {
        algorithm: SAMPLER_ALGORITHM.into(),
        seed,
        shots,
        counts,
    })
}

/// Per-geometry eigen-decompositions needed for ground-state overlaps and
/// the exact weight oracle.
#[derive(Debug, Clone)]
pub struct GeometrySpectra {
    pub energies: Vec<Vec<f64>>,
    /// `|⟨φ_n[J]|ψ_ref[J]⟩|²` for every eigenstate.
    pub reference_overlaps: Vec<Vec<f64>>,
    pub ground_states: Vec<Vec<f64>>,
}

impl GeometrySpectra {
    pub fn compute(h: &GridHamiltonian, spec: &ReferenceSpec, cap: usize) -> Result<Self> {
        let g = h.grid().geometry_count();
        let mut energies = Vec::with_capacity(g);
        let mut reference_overlaps = Vec::with_capacity(g);
        let mut ground_states = Vec::with_capacity(g);
        // Serial over geometries: each eigensolve already saturates memory
        // bandwidth, and the peak footprint stays at one dense block.
        for j in 0..g {
            let block = h.dense_block(j, cap)?;
            let dec = diagonalize(&block)?;
            drop(block);
            let reference = prepare_reference(j, spec, h.layout(), h.grid())?;
            let n = dec.len();
            let overlaps: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|c| {
                    let col = dec.vectors.col(c);
                    let o: Complex64 = reference.iter().enumerate().map(|(k, r)| r * col[k]).sum();
                    o.norm_sqr()
                })
                .collect();
            ground_states.push(dec.vector(0));
            energies.push(dec.energies);
            reference_overlaps.push(overlaps);
        }
        Ok(Self {
            energies,
            reference_overlaps,
            ground_states,
        })
    }

    pub fn ground_energies(&self) -> Vec<f64> {
        self.energies.iter().map(|e| e[0]).collect()
    }

    /// `w_{J,gs} = |⟨φ_gs[J]|ψ[J]⟩|²` for the unnormalized block `ψ[J]`,
    /// which already carries the factor `w_J`.
    pub fn ground_state_weights(&self, state: &CompositeState) -> Vec<f64> {
        self.ground_states
            .iter()
            .enumerate()
            .map(|(j, g)| {
                let o: Complex64 = state.block(j).iter().zip(g).map(|(a, b)| a * b).sum();
                o.norm_sqr()
            })
            .collect()
    }
}

/// Exact imaginary-time weights from the per-geometry spectra.
#[derive(Debug, Clone)]
pub struct SpectralWeightOracle {
    initial: Vec<f64>,
    energies: Vec<Vec<f64>>,
    overlaps: Vec<Vec<f64>>,
}

impl SpectralWeightOracle {
    pub fn new(guess: &InitialGuess, spectra: &GeometrySpectra) -> Result<Self> {
        if guess.weights().len() != spectra.energies.len() {
            return Err(Error::invalid("initial weights", "length differs from geometry count"));
        }
        Ok(Self {
            initial: guess.weights().to_vec(),
            energies: spectra.energies.clone(),
            overlaps: spectra.reference_overlaps.clone(),
        })
    }

    /// `w_J(τ) ∝ w_0J Σ_n |⟨φ_n[J]|ψ_ref[J]⟩|² e^{−2E_n[J]τ}`.
    pub fn weights_at(&self, tau: f64) -> Vec<f64> {
        let logs: Vec<f64> = self
            .initial
            .iter()
            .zip(self.energies.iter().zip(&self.overlaps))
            .map(|(&w0, (e, o))| {
                if w0 == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let terms: Vec<f64> = e
                    .iter()
                    .zip(o)
                    .filter(|(_, &c)| c > OVERLAP_FLOOR)
                    .map(|(&en, &c)| c.ln() - 2.0 * en * tau)
                    .collect();
                w0.ln() + log_sum_exp(&terms)
            })
            .collect();
        softmax(&logs)
    }
}

/// Convenience wrapper: diagonalize every geometry and evaluate the oracle.
pub fn spectral_weight_oracle(
    h: &GridHamiltonian,
    guess: &InitialGuess,
    spec: &ReferenceSpec,
    tau: f64,
) -> Result<Vec<f64>> {
    let spectra = GeometrySpectra::compute(h, spec, DEFAULT_DENSE_CAP)?;
    Ok(SpectralWeightOracle::new(guess, &spectra)?.weights_at(tau))
}

fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn softmax(logs: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(logs);
    logs.iter().map(|l| (l - z).exp()).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PiteConfig {
    pub guess: InitialGuess,
    pub reference: ReferenceSpec,
    pub n_steps: usize,
    pub schedule: TauSchedule,
    pub params: PiteParams,
    /// Shots drawn from the final weights; `0` skips sampling.
    pub shots: u64,
    pub seed: u64,
    pub ground_state_weights: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PiteReport {
    pub geometry_count: usize,
    pub n_steps: usize,
    pub gamma: f64,
    pub energy_shift: f64,
    /// `Δτ_k` of each step.
    pub dtau: Vec<f64>,
    /// Row `s` holds the weights after `s` steps; row 0 is the input.
    pub weights: Vec<Vec<f64>>,
    pub ground_state_weights: Option<Vec<Vec<f64>>>,
    pub steps: Vec<StepOutcome>,
    pub cumulative_success: f64,
    pub argmax: Vec<usize>,
    pub histogram: Option<Histogram>,
}

impl PiteReport {
    pub fn final_weights(&self) -> &[f64] {
        self.weights.last().expect("at least the input row")
    }

    pub fn optimal_geometry(&self) -> usize {
        *self.argmax.last().expect("at least the input row")
    }

    pub fn accumulated_tau(&self, step: usize) -> f64 {
        self.dtau[..step].iter().sum()
    }
}

/// Full pipeline on the grid Hamiltonian. `spectra` is used for the
/// ground-state weights if given; otherwise they are computed on demand.
pub fn run_pite(
    h: &GridHamiltonian,
    config: &PiteConfig,
    spectra: Option<&GeometrySpectra>,
) -> Result<PiteReport> {
    config.params.validate()?;
    config.schedule.validate()?;
    let owned;
    let spectra = match (config.ground_state_weights, spectra) {
        (false, _) => None,
        (true, Some(s)) => Some(s),
        (true, None) => {
            owned = GeometrySpectra::compute(h, &config.reference, DEFAULT_DENSE_CAP)?;
            Some(&owned)
        }
    };
    let mut state = prepare_input(&config.guess, &config.reference, h.layout(), h.grid())?;
    let shift = config.params.resolve_shift(h);
    let mut weights = vec![extract_weights(&state)];
    let mut gs = spectra.map(|s| vec![s.ground_state_weights(&state)]);
    let traj = evolve_ite(
        h,
        &mut state,
        config.n_steps,
        &config.schedule,
        config.params.gamma,
        shift,
        |_, s| {
            weights.push(extract_weights(s));
            if let (Some(rows), Some(sp)) = (gs.as_mut(), spectra) {
                rows.push(sp.ground_state_weights(s));
            }
        },
    )?;
    let argmax = weights.iter().map(|w| argmax_geometry(w)).collect();
    let histogram = if config.shots > 0 {
        Some(sample_histogram(weights.last().unwrap(), config.shots, config.seed)?)
    } else {
        None
    };
    Ok(PiteReport {
        geometry_count: h.grid().geometry_count(),
        n_steps: config.n_steps,
        gamma: config.params.gamma,
        energy_shift: shift,
        dtau: traj.steps.iter().map(|s| s.dtau).collect(),
        weights,
        ground_state_weights: gs,
        steps: traj.steps,
        cumulative_success: traj.cumulative_success,
        argmax,
        histogram,
    })
}

/// Classical candidate energies from the ILJ surface of `probe` (a nucleus
/// of the grid) around `molecule`.
pub fn ilj_candidate_energies(
    grid: &GeometryGrid,
    probe: usize,
    molecule: &MoleculeGeometry,
    params: &IljParams,
) -> Result<Vec<f64>> {
    params.validate()?;
    if probe >= grid.nuclei().len() {
        return Err(Error::OutOfBounds {
            what: "probe nucleus",
            index: probe,
            len: grid.nuclei().len(),
        });
    }
    (0..grid.geometry_count())
        .into_par_iter()
        .map(|j| ilj_interaction_energy(&grid.positions(j)?[probe], molecule, params))
        .collect()
}

/// Classical point-charge energies `Σ_{a<b} Z_a Z_b v(|R_a − R_b|)`.
pub fn point_charge_energies(grid: &GeometryGrid, v: &PairPotential) -> Result<Vec<f64>> {
    v.validate()?;
    let z = grid.charges();
    (0..grid.geometry_count())
        .map(|j| {
            let r = grid.positions(j)?;
            let mut e = 0.0;
            for a in 0..r.len() {
                for b in a + 1..r.len() {
                    let d = dist(&r[a], &r[b]);
                    if d == 0.0 && v.is_singular_at_zero() {
                        return Err(Error::Singular(format!(
                            "nuclei {a} and {b} coincide at geometry {j}; use a softened potential"
                        )));
                    }
                    e += z[a] * z[b] * v.eval(d);
                }
            }
            Ok(e)
        })
        .collect()
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Imaginary-time evolution of a diagonal classical Hamiltonian, evaluated
/// in closed form at each accumulated `τ`.
pub fn run_classical_pite(
    energies: &[f64],
    guess: &InitialGuess,
    schedule: &TauSchedule,
    n_steps: usize,
    params: &PiteParams,
    shots: u64,
    seed: u64,
) -> Result<PiteReport> {
    params.validate()?;
    schedule.validate()?;
    if energies.len() != guess.weights().len() {
        return Err(Error::invalid("energies", "length differs from the initial weights"));
    }
    if energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::invalid("energies", "must be finite"));
    }
    if n_steps == 0 {
        return Err(Error::invalid("n_steps", "must be at least 1"));
    }
    let shift = params
        .energy_shift
        .unwrap_or_else(|| energies.iter().copied().fold(f64::INFINITY, f64::min));
    let log0: Vec<f64> = guess
        .weights()
        .iter()
        .map(|&w| if w > 0.0 { w.ln() } else { f64::NEG_INFINITY })
        .collect();
    let at = |tau: f64| -> Vec<f64> {
        let logs: Vec<f64> = log0.iter().zip(energies).map(|(l, e)| l - 2.0 * e * tau).collect();
        softmax(&logs)
    };
    let mean = |w: &[f64]| -> f64 { w.iter().zip(energies).map(|(a, b)| a * b).sum() };
    let mut weights = vec![guess.weights().to_vec()];
    let mut steps = Vec::with_capacity(n_steps);
    let mut dtau = Vec::with_capacity(n_steps);
    let mut tau = 0.0;
    let mut cumulative = 1.0;
    for k in 0..n_steps {
        let dt = schedule.tau_at(k);
        let prev = weights.last().unwrap().clone();
        let raw_sq: f64 = prev
            .iter()
            .zip(energies)
            .map(|(w, e)| w * (-2.0 * (e - shift) * dt).exp())
            .sum();
        if !(raw_sq.sqrt() >= 1e-300 && raw_sq.is_finite()) {
            return Err(Error::Collapse(format!(
                "classical step norm {:e} out of range; use a smaller dtau or a larger energy shift",
                raw_sq.sqrt()
            )));
        }
        tau += dt;
        let next = at(tau);
        let p = (params.gamma * params.gamma * raw_sq).min(1.0);
        cumulative *= p;
        steps.push(StepOutcome {
            dtau: dt,
            energy_before: mean(&prev),
            energy_after: mean(&next),
            raw_norm: raw_sq.sqrt(),
            success_probability: p,
        });
        dtau.push(dt);
        weights.push(next);
    }
    let argmax = weights.iter().map(|w| argmax_geometry(w)).collect();
    let histogram = if shots > 0 {
        Some(sample_histogram(weights.last().unwrap(), shots, seed)?)
    } else {
        None
    };
    Ok(PiteReport {
        geometry_count: energies.len(),
        n_steps,
        gamma: params.gamma,
        energy_shift: shift,
        dtau,
        weights,
        ground_state_weights: None,
        steps,
        cumulative_success: cumulative,
        argmax,
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::InteractionModel;
    use crate::registers::{ActiveCoordinate, Nucleus};

    fn lih_like(qe: u32) -> (RegisterLayout, GeometryGrid) {
        let layout = RegisterLayout::new(2, 1, qe, 15.0).unwrap();
        let grid = GeometryGrid::new(
            vec![
                Nucleus::new("H", 1.0, [6.0, 0.0, 0.0]),
                Nucleus::new("Li", 1.0, [6.55, 0.0, 0.0]),
            ],
            vec![ActiveCoordinate {
                nucleus: 1,
                axis: 0,
                qubits: 3,
                max_displacement: 4.0,
            }],
        )
        .unwrap();
        (layout, grid)
    }

    #[test]
    fn reference_parity() {
        let (layout, grid) = lih_like(4);
        let perm = crate::hamiltonian::swap_permutation(&layout).unwrap();
        for (spec, sign) in [
            (ReferenceSpec::GaussianSymmetric { width: 3.0 }, 1.0),
            (ReferenceSpec::GaussianAntisymmetric { width: 3.0 }, -1.0),
        ] {
            let r = prepare_reference(2, &spec, &layout, &grid).unwrap();
            let norm: f64 = r.iter().map(|a| a.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            let swap: f64 = (0..r.len()).map(|k| (r[k].conj() * r[perm[k]]).re).sum();
            assert!((swap - sign).abs() < 1e-12);
        }
        let a = prepare_reference(0, &ReferenceSpec::GaussianAntisymmetric { width: 3.0 }, &layout, &grid).unwrap();
        for x in 0..16 {
            assert_eq!(a[x + 16 * x], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn reference_center_tracks_midpoint() {
        let (layout, grid) = lih_like(5);
        assert_eq!(nuclear_midpoint(&grid, 0).unwrap()[0], 6.275);
        assert_eq!(nuclear_midpoint(&grid, 4).unwrap()[0], 6.275 + 1.0);
        let r = prepare_reference(4, &ReferenceSpec::GaussianSymmetric { width: 1.0 }, &layout, &grid).unwrap();
        let best = (0..r.len()).max_by(|a, b| r[*a].re.total_cmp(&r[*b].re)).unwrap();
        let d = layout.electron_grid_indices(best).unwrap();
        for x in d {
            assert!((layout.coordinate(x) - 7.275).abs() <= layout.spacing() / 2.0 + 1e-12);
        }
    }

    #[test]
    fn unresolvable_reference() {
        let (layout, grid) = lih_like(3);
        let err = prepare_reference(0, &ReferenceSpec::GaussianSymmetric { width: 1e-3 }, &layout, &grid).unwrap_err();
        assert!(matches!(err, Error::Invalid { .. }));
        let one = RegisterLayout::new(1, 1, 3, 15.0).unwrap();
        assert!(prepare_reference(0, &ReferenceSpec::GaussianSymmetric { width: 1.0 }, &one, &grid).is_err());
    }

    #[test]
    fn custom_reference() {
        let (layout, grid) = lih_like(3);
        let spec = ReferenceSpec::Custom(CustomReference(Arc::new(|_, l, _| {
            Ok(vec![Complex64::new(2.0, 0.0); l.electronic_dim()])
        })));
        let r = prepare_reference(1, &spec, &layout, &grid).unwrap();
        assert!((r[0].re - 1.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn input_weights_round_trip() {
        let (layout, grid) = lih_like(4);
        let spec = ReferenceSpec::GaussianSymmetric { width: 3.0 };
        let uni = prepare_input(&InitialGuess::uniform(8), &spec, &layout, &grid).unwrap();
        for w in extract_weights(&uni) {
            assert!((w - 0.125).abs() < 1e-12);
        }
        let g = InitialGuess::new(vec![0.05, 0.1, 0.3, 0.05, 0.2, 0.1, 0.1, 0.1]).unwrap();
        let s = prepare_input(&g, &spec, &layout, &grid).unwrap();
        for (a, b) in extract_weights(&s).iter().zip(g.weights()) {
            assert!((a - b).abs() < 1e-12);
        }
        let p = prepare_input(&InitialGuess::point(8, 2).unwrap(), &spec, &layout, &grid).unwrap();
        assert_eq!(argmax_geometry(&extract_weights(&p)), 2);
        assert!(p.block(1).iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn guess_validation() {
        assert!(InitialGuess::new(vec![0.5, 0.4]).is_err());
        assert!(InitialGuess::new(vec![1.5, -0.5]).is_err());
        assert!(InitialGuess::new(vec![]).is_err());
        assert!(InitialGuess::point(3, 3).is_err());
    }

    #[test]
    fn argmax_ties() {
        assert_eq!(argmax_geometry(&[0.1, 0.7, 0.2]), 1);
        assert_eq!(argmax_geometry(&[0.25; 4]), 0);
        assert_eq!(argmax_geometry(&[0.1, 0.4, 0.4, 0.1]), 1);
    }

    #[test]
    fn histogram_properties() {
        let h = sample_histogram(&[0.0, 1.0, 0.0], 1000, 7).unwrap();
        assert_eq!(h.counts, vec![0, 1000, 0]);
        assert_eq!(h.algorithm, SAMPLER_ALGORITHM);
        let w = [0.1, 0.25, 0.05, 0.6];
        let a = sample_histogram(&w, 1_000_000, 11).unwrap();
        assert_eq!(a, sample_histogram(&w, 1_000_000, 11).unwrap());
        assert_ne!(a.counts, sample_histogram(&w, 1_000_000, 12).unwrap().counts);
        for (c, p) in a.counts.iter().zip(w) {
            assert!((*c as f64 / 1e6 - p).abs() < 5e-3);
        }
        assert!(sample_histogram(&w, 0, 1).is_err());
        assert!(sample_histogram(&[0.0, 0.0], 5, 1).is_err());
    }

    #[test]
    fn classical_two_level_closed_form() {
        let e = [-1.3, -0.8];
        let sched = TauSchedule::constant(0.05);
        let r = run_classical_pite(&e, &InitialGuess::uniform(2), &sched, 40, &PiteParams::default(), 0, 0).unwrap();
        for (s, row) in r.weights.iter().enumerate() {
            let tau = 0.05 * s as f64;
            let want = 1.0 / (1.0 + (-2.0 * 0.5 * tau).exp());
            assert!((row[0] - want).abs() < 1e-12);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(r.weights[0], vec![0.5, 0.5]);
    }

    #[test]
    fn classical_log_ratio_is_linear() {
        let e = [0.3, -0.2, 0.9, 0.1];
        let sched = TauSchedule::new(0.1, 0.4, 3.0).unwrap();
        let r = run_classical_pite(&e, &InitialGuess::uniform(4), &sched, 12, &PiteParams::default(), 0, 0).unwrap();
        for s in 0..=12 {
            let tau = r.accumulated_tau(s);
            let w = &r.weights[s];
            let slope = (w[0] / w[1]).ln();
            assert!((slope + 2.0 * 0.5 * tau).abs() < 1e-12);
        }
        assert!(r.steps.iter().all(|s| s.energy_after <= s.energy_before));
    }

    #[test]
    fn point_charges() {
        let grid = GeometryGrid::new(
            vec![Nucleus::new("A", 1.0, [0.0; 3]), Nucleus::new("B", 2.0, [1.0, 0.0, 0.0])],
            vec![ActiveCoordinate {
                nucleus: 1,
                axis: 0,
                qubits: 1,
                max_displacement: 2.0,
            }],
        )
        .unwrap();
        let e = point_charge_energies(&grid, &PairPotential::BareCoulomb).unwrap();
        assert!((e[0] - 2.0).abs() < 1e-15 && (e[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn oracle_limits_and_single_geometry() {
        let layout = RegisterLayout::new(2, 1, 3, 15.0).unwrap();
        let (_, grid) = lih_like(3);
        let model = InteractionModel::common(PairPotential::soft(1.0), 2);
        let h = GridHamiltonian::new(&layout, &grid, &model).unwrap();
        let spec = ReferenceSpec::GaussianSymmetric { width: 3.0 };
        let spectra = GeometrySpectra::compute(&h, &spec, 1024).unwrap();
        let oracle = SpectralWeightOracle::new(&InitialGuess::uniform(8), &spectra).unwrap();
        assert!(oracle.weights_at(0.0).iter().all(|w| (w - 0.125).abs() < 1e-12));
        let far = oracle.weights_at(1e4);
        let ground = spectra.ground_energies();
        let jmin = (0..8).min_by(|a, b| ground[*a].total_cmp(&ground[*b])).unwrap();
        assert!((far[jmin] - 1.0).abs() < 1e-9);

        let fixed = GeometryGrid::fixed(grid.nuclei().to_vec()).unwrap();
        let h1 = GridHamiltonian::new(&layout, &fixed, &model).unwrap();
        let cfg = PiteConfig {
            guess: InitialGuess::uniform(1),
            reference: spec,
            n_steps: 5,
            schedule: TauSchedule::constant(0.2),
            params: PiteParams::default(),
            shots: 10,
            seed: 3,
            ground_state_weights: true,
        };
        let r = run_pite(&h1, &cfg, None).unwrap();
        assert!(r.weights.iter().all(|w| (w[0] - 1.0).abs() < 1e-12));
        assert_eq!(r.histogram.unwrap().counts, vec![10]);
        let gs = r.ground_state_weights.unwrap();
        assert!(gs.windows(2).all(|w| w[1][0] >= w[0][0] - 1e-12));
    }
}
