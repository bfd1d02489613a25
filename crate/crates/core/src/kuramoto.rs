//! Phase-oscillator network with sinusoidal mean-field coupling.
//!
//! N oscillators with natural frequencies `ω_τ` and coupling gain `D` follow
//!
//! ```text
//! dφ_τ/dt = ω_τ + (D/N) Σ_τ' sin(φ_τ' - φ_τ)  (+ noise)
//! ```
//!
//! integrated with RK4. The canonical representation keeps phases wrapped to
//! `[0, 2π)`; an unwrapped copy is maintained alongside for drift
//! diagnostics. Coherence is measured by the order parameter
//! `r e^{iψ} = N⁻¹ Σ e^{iφ}`. The coupling runs over the complete graph by
//! default; an adjacency mask restricts the interactions when set.

use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

/// Phases, natural frequencies, and the coupling gain of the ensemble.
#[derive(Debug, Clone)]
pub struct OscillatorState {
    /// Wrapped phases in `[0, 2π)` (canonical).
    pub phases: Vec<f64>,
    /// Unwrapped phases accumulated across steps (drift diagnostics).
    pub unwrapped: Vec<f64>,
    pub omegas: Vec<f64>,
    /// Coupling gain `D`.
    pub coupling: f64,
    /// Optional adjacency mask (row-major N×N); `None` means complete graph.
    pub mask: Option<Vec<bool>>,
}

impl OscillatorState {
    pub fn new(phases: Vec<f64>, omegas: Vec<f64>, coupling: f64) -> Result<Self> {
        if phases.is_empty() || phases.len() != omegas.len() {
            return Err(Error::ShapeMismatch(format!(
                "need matching nonempty phases/omegas, got {} and {}",
                phases.len(),
                omegas.len()
            )));
        }
        if phases.iter().chain(&omegas).any(|v| !v.is_finite()) || !coupling.is_finite() {
            return Err(Error::Config("phases, omegas, coupling must be finite".into()));
        }
        let wrapped: Vec<f64> = phases.iter().map(|p| p.rem_euclid(TAU)).collect();
        Ok(Self {
            unwrapped: wrapped.clone(),
            phases: wrapped,
            omegas,
            coupling,
            mask: None,
        })
    }

    /// Restrict interactions to a directed adjacency mask (`mask[i*n + j]`
    /// gates the influence of oscillator `j` on `i`).
    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        let n = self.len();
        if mask.len() != n * n {
            return Err(Error::ShapeMismatch(format!(
                "mask needs {} entries, got {}",
                n * n,
                mask.len()
            )));
        }
        self.mask = Some(mask);
        Ok(self)
    }

    /// Random phases with the given frequencies, seeded.
    pub fn random(omegas: Vec<f64>, coupling: f64, rng: &mut ChaCha8Rng) -> Result<Self> {
        let phases = (0..omegas.len()).map(|_| rng.gen_range(0.0..TAU)).collect();
        Self::new(phases, omegas, coupling)
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    fn derivative(&self, phases: &[f64]) -> Vec<f64> {
        let n = self.len();
        match &self.mask {
            None => {
                // complete graph: (D/N) Σ sin(φ_j - φ_i) = D·r·sin(ψ - φ_i)
                let (r, psi) = order_parameter_of(phases);
                phases
                    .iter()
                    .zip(&self.omegas)
                    .map(|(phi, om)| om + self.coupling * r * (psi - phi).sin())
                    .collect()
            }
            Some(mask) => (0..n)
                .map(|i| {
                    let sum: f64 = (0..n)
                        .filter(|&j| mask[i * n + j] && j != i)
                        .map(|j| (phases[j] - phases[i]).sin())
                        .sum();
                    self.omegas[i] + self.coupling / n as f64 * sum
                })
                .collect(),
        }
    }

    /// One deterministic RK4 step of size `dt`; phases re-wrapped, the
    /// unwrapped copy advanced by the same increments.
    pub fn step(&self, dt: f64) -> Result<OscillatorState> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        let k1 = self.derivative(&self.unwrapped);
        let mid1: Vec<f64> = self
            .unwrapped
            .iter()
            .zip(&k1)
            .map(|(p, k)| p + 0.5 * dt * k)
            .collect();
        let k2 = self.derivative(&mid1);
        let mid2: Vec<f64> = self
            .unwrapped
            .iter()
            .zip(&k2)
            .map(|(p, k)| p + 0.5 * dt * k)
            .collect();
        let k3 = self.derivative(&mid2);
        let end: Vec<f64> = self
            .unwrapped
            .iter()
            .zip(&k3)
            .map(|(p, k)| p + dt * k)
            .collect();
        let k4 = self.derivative(&end);

        let unwrapped: Vec<f64> = (0..self.len())
            .map(|i| self.unwrapped[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        Ok(OscillatorState {
            phases: unwrapped.iter().map(|p| p.rem_euclid(TAU)).collect(),
            unwrapped,
            omegas: self.omegas.clone(),
            coupling: self.coupling,
            mask: self.mask.clone(),
        })
    }

    /// RK4 step followed by seeded Gaussian phase kicks of scale
    /// `noise·sqrt(dt)`.
    pub fn step_noisy(&self, dt: f64, noise: f64, rng: &mut ChaCha8Rng) -> Result<OscillatorState> {
        let mut next = self.step(dt)?;
        if noise > 0.0 {
            let scale = noise * dt.sqrt();
            for i in 0..next.len() {
                let kick = scale * gaussian(rng);
                next.unwrapped[i] += kick;
                next.phases[i] = next.unwrapped[i].rem_euclid(TAU);
            }
        }
        Ok(next)
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

fn order_parameter_of(phases: &[f64]) -> (f64, f64) {
    let n = phases.len() as f64;
    let re: f64 = phases.iter().map(|p| p.cos()).sum::<f64>() / n;
    let im: f64 = phases.iter().map(|p| p.sin()).sum::<f64>() / n;
    ((re * re + im * im).sqrt().min(1.0), im.atan2(re))
}

/// Coherence `(r, ψ)` with `r ∈ [0, 1]`: `r e^{iψ} = N⁻¹ Σ e^{iφ}`.
pub fn order_parameter(state: &OscillatorState) -> (f64, f64) {
    order_parameter_of(&state.phases)
}
