//! First-order split-operator steps on the composite state.
//!
//! Both real- and imaginary-time steps apply the position-diagonal factor
//! first and the Fourier-diagonal kinetic factor second. The imaginary-time
//! step models the success branch of a probabilistic imaginary-time step:
//! the state after `e^{−(H−E_shift)Δτ}` is renormalized and the squared raw
//! norm, scaled by `γ²`, is reported as the success probability.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{GridHamiltonian, Operator};

/// Normalized amplitudes over the flattened `(K, J)` index.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeState {
    amplitudes: Vec<Complex64>,
    electronic_dim: usize,
    geometry_count: usize,
}

impl CompositeState {
    /// Builds a state from raw amplitudes and normalizes them.
    pub fn new(amplitudes: Vec<Complex64>, electronic_dim: usize, geometry_count: usize) -> Result<Self> {
        if amplitudes.len() != electronic_dim * geometry_count {
            return Err(Error::invalid(
                "state",
                format!(
                    "expected {} amplitudes, got {}",
                    electronic_dim * geometry_count,
                    amplitudes.len()
                ),
            ));
        }
        let mut s = Self {
            amplitudes,
            electronic_dim,
            geometry_count,
        };
        let n = s.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::invalid("state", "amplitudes have zero or non-finite norm"));
        }
        s.scale(1.0 / n);
        Ok(s)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn electronic_dim(&self) -> usize {
        self.electronic_dim
    }

    pub fn geometry_count(&self) -> usize {
        self.geometry_count
    }

    pub fn block(&self, geometry: usize) -> &[Complex64] {
        let n = self.electronic_dim;
        &self.amplitudes[geometry * n..(geometry + 1) * n]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `w_J = Σ_K |c_{K,J}|²`.
    pub fn weights(&self) -> Vec<f64> {
        self.amplitudes
            .chunks(self.electronic_dim)
            .map(|b| b.iter().map(|a| a.norm_sqr()).sum())
            .collect()
    }

    fn scale(&mut self, f: f64) {
        self.amplitudes.iter_mut().for_each(|a| *a *= f);
    }

    fn check_against(&self, h: &GridHamiltonian) -> Result<()> {
        if self.amplitudes.len() != h.composite_dim() {
            return Err(Error::invalid(
                "state",
                format!(
                    "state has {} amplitudes but the Hamiltonian acts on {}",
                    self.amplitudes.len(),
                    h.composite_dim()
                ),
            ));
        }
        Ok(())
    }
}

/// `Δτ_k = (1 − e^{−k/κ})(Δτ_max − Δτ_min) + Δτ_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauSchedule {
    pub min: f64,
    pub max: f64,
    pub kappa: f64,
}

impl TauSchedule {
    pub fn new(min: f64, max: f64, kappa: f64) -> Result<Self> {
        let s = Self { min, max, kappa };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(dtau: f64) -> Self {
        Self {
            min: dtau,
            max: dtau,
            kappa: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min > 0.0 && self.min.is_finite()) {
            return Err(Error::invalid("dtau_min", "must be positive"));
        }
        if !(self.max.is_finite() && self.min <= self.max) {
            return Err(Error::invalid("dtau_max", "must satisfy dtau_min <= dtau_max"));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid("kappa", "must be positive"));
        }
        Ok(())
    }

    pub fn tau_at(&self, k: usize) -> f64 {
        tau_at(k, self)
    }

    /// Accumulated imaginary time after `steps` steps.
    pub fn total(&self, steps: usize) -> f64 {
        (0..steps).map(|k| self.tau_at(k)).sum()
    }
}

pub fn tau_at(k: usize, schedule: &TauSchedule) -> f64 {
    (1.0 - (-(k as f64) / schedule.kappa).exp()) * (schedule.max - schedule.min) + schedule.min
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub dtau: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    /// `‖e^{−T Δτ} e^{−(V−E_shift) Δτ} ψ‖`.
    pub raw_norm: f64,
    pub success_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<StepOutcome>,
    pub cumulative_success: f64,
}

/// Success-branch parameters of the imaginary-time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiteParams {
    pub gamma: f64,
    /// `None` selects the minimum of the potential diagonal.
    pub energy_shift: Option<f64>,
}

impl Default for PiteParams {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            energy_shift: None,
        }
    }
}

impl PiteParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid("gamma", "must lie in (0, 1]"));
        }
        if let Some(e) = self.energy_shift {
            if !e.is_finite() {
                return Err(Error::invalid("energy_shift", "must be finite"));
            }
        }
        Ok(())
    }

    pub fn resolve_shift(&self, h: &GridHamiltonian) -> f64 {
        self.energy_shift.unwrap_or_else(|| default_energy_shift(h))
    }
}

/// Lower bound on the spectrum: minimum potential plus zero kinetic energy.
pub fn default_energy_shift(h: &GridHamiltonian) -> f64 {
    h.potential().min()
}

pub fn energy(h: &GridHamiltonian, state: &CompositeState) -> f64 {
    h.expectation(state.amplitudes())
}

/// `ψ ← e^{−iTΔt} e^{−iVΔt} ψ`.
pub fn rte_step(h: &GridHamiltonian, state: &mut CompositeState, dt: f64) -> Result<()> {
    state.check_against(h)?;
    if dt == 0.0 {
        return Ok(());
    }
    for (a, v) in state.amplitudes.iter_mut().zip(h.potential().values()) {
        *a *= Complex64::from_polar(1.0, -v * dt);
    }
    h.kinetic_map(&mut state.amplitudes, |t| Complex64::from_polar(1.0, -t * dt));
    Ok(())
}

/// One success-branch imaginary-time step, renormalizing in place.
pub fn ite_step(
    h: &GridHamiltonian,
    state: &mut CompositeState,
    dtau: f64,
    gamma: f64,
    energy_shift: f64,
) -> Result<StepOutcome> {
    state.check_against(h)?;
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid("gamma", "must lie in (0, 1]"));
    }
    if !(dtau >= 0.0 && dtau.is_finite()) {
        return Err(Error::invalid("dtau", "must be finite and non-negative"));
    }
    let energy_before = energy(h, state);
    for (a, v) in state.amplitudes.iter_mut().zip(h.potential().values()) {
        *a *= (-(v - energy_shift) * dtau).exp();
    }
    h.kinetic_map(&mut state.amplitudes, |t| Complex64::new((-t * dtau).exp(), 0.0));
    let raw_norm = state.norm();
    if !(raw_norm >= 1e-300 && raw_norm.is_finite()) {
        return Err(Error::Collapse(format!(
            "imaginary-time step norm {raw_norm:e} out of range; use a smaller dtau or a larger energy shift"
        )));
    }
    state.scale(1.0 / raw_norm);
    let energy_after = energy(h, state);
    let p = (gamma * gamma * raw_norm * raw_norm).min(1.0);
    Ok(StepOutcome {
        dtau,
        energy_before,
        energy_after,
        raw_norm,
        success_probability: p,
    })
}

/// Runs `n_steps` steps with `Δτ_k = tau_at(k)`, calling `observe` with the
/// 1-based step number and the post-step state.
pub fn evolve_ite(
    h: &GridHamiltonian,
    state: &mut CompositeState,
    n_steps: usize,
    schedule: &TauSchedule,
    gamma: f64,
    energy_shift: f64,
    mut observe: impl FnMut(usize, &CompositeState),
) -> Result<Trajectory> {
    if n_steps == 0 {
        return Err(Error::invalid("n_steps", "must be at least 1"));
    }
    schedule.validate()?;
    let mut steps = Vec::with_capacity(n_steps);
    let mut cumulative = 1.0;
    for k in 0..n_steps {
        let out = ite_step(h, state, schedule.tau_at(k), gamma, energy_shift)?;
        cumulative *= out.success_probability;
        steps.push(out);
        observe(k + 1, state);
    }
    Ok(Trajectory {
        steps,
        cumulative_success: cumulative,
    })
}
