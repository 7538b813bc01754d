//! Quantities extracted from the reduced density matrix `ρ_0`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DVector;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::generator::SystemModel;
use crate::linalg;
use crate::{CMatrix, Complex64};

pub use crate::linalg::trace_distance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub norm: f64,
}

impl BlochVector {
    pub fn distance(&self, other: &Self) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

fn check_density(rho: &CMatrix, trace_tol: f64) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::InvalidParameter("density matrix must be square".into()));
    }
    let tr = rho.trace();
    if (tr - Complex64::new(1.0, 0.0)).norm() > trace_tol {
        return Err(Error::InvalidParameter(format!("density matrix trace {tr} deviates from 1")));
    }
    Ok(())
}

/// `(tr σ_x ρ, tr σ_y ρ, tr σ_z ρ, |σ̄|)` for a two-level density matrix.
pub fn pauli_expectations(rho: &CMatrix) -> Result<BlochVector> {
    if rho.shape() != (2, 2) {
        return Err(Error::Unsupported(format!("Bloch components need d = 2, got {:?}", rho.shape())));
    }
    check_density(rho, 1e-8)?;
    if linalg::hermiticity_defect(rho) > 1e-8 {
        return Err(Error::InvalidParameter("density matrix is not Hermitian".into()));
    }
    let x = 2.0 * rho[(0, 1)].re;
    let y = -2.0 * rho[(0, 1)].im;
    let z = (rho[(0, 0)] - rho[(1, 1)]).re;
    Ok(BlochVector { x, y, z, norm: (x * x + y * y + z * z).sqrt() })
}

/// `−Σ p ln p` over the (clamped non-negative) eigenvalues.
pub fn vn_entropy(rho: &CMatrix) -> Result<f64> {
    check_density(rho, 1e-6)?;
    let (values, _) = linalg::hermitian_eigen(rho);
    Ok(values
        .iter()
        .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
        .sum())
}

/// Smallest eigenvalue of a Hermitian matrix; negative values flag an
/// unphysical (non-positive) density matrix.
pub fn min_eigenvalue(rho: &CMatrix) -> f64 {
    linalg::hermitian_eigen(rho).0.first().copied().unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPopulations {
    /// Eigenvalues in descending order.
    pub populations: Vec<f64>,
    /// Matching eigenvectors; the first non-negligible component is real positive.
    pub vectors: Vec<DVector<Complex64>>,
}

impl EigenPopulations {
    pub fn p_plus(&self) -> f64 {
        self.populations[0]
    }

    pub fn p_minus(&self) -> f64 {
        self.populations[self.populations.len() - 1]
    }

    /// `Σ_i P_i |ψ_i⟩⟨ψ_i|`.
    pub fn reconstruct(&self) -> CMatrix {
        let d = self.vectors[0].len();
        let mut out = CMatrix::zeros(d, d);
        for (p, v) in self.populations.iter().zip(&self.vectors) {
            out += v * v.adjoint() * Complex64::new(*p, 0.0);
        }
        out
    }
}

fn fix_phase(v: &mut DVector<Complex64>) {
    if let Some(lead) = v.iter().copied().find(|z| z.norm() > 1e-12) {
        let phase = lead.conj() / lead.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

/// Eigen-decomposition `ρ = Σ P_i |ψ_i⟩⟨ψ_i|` sorted by descending population.
pub fn eigen_populations(rho: &CMatrix) -> Result<EigenPopulations> {
    check_density(rho, 1e-6)?;
    let (values, vectors) = linalg::hermitian_eigen(rho);
    let d = values.len();
    let mut populations = Vec::with_capacity(d);
    let mut vecs = Vec::with_capacity(d);
    for j in (0..d).rev() {
        populations.push(values[j]);
        let mut v: DVector<Complex64> = vectors.column(j).into_owned();
        fix_phase(&mut v);
        vecs.push(v);
    }
    Ok(EigenPopulations { populations, vectors: vecs })
}

/// Reorders `current` to follow `previous` by maximal eigenvector overlap.
/// Returns whether the order differs from the descending-population order.
pub fn align_with_previous(previous: &EigenPopulations, current: &EigenPopulations) -> (EigenPopulations, bool) {
    let d = current.populations.len();
    let mut taken = alloc::vec![false; d];
    let mut order = Vec::with_capacity(d);
    for prev in &previous.vectors {
        let best = (0..d)
            .filter(|&j| !taken[j])
            .max_by(|&a, &b| {
                let oa = prev.dotc(&current.vectors[a]).norm();
                let ob = prev.dotc(&current.vectors[b]).norm();
                oa.total_cmp(&ob)
            })
            .expect("dimensions agree");
        taken[best] = true;
        order.push(best);
    }
    let flipped = order.iter().enumerate().any(|(i, &j)| i != j);
    let aligned = EigenPopulations {
        populations: order.iter().map(|&j| current.populations[j]).collect(),
        vectors: order.iter().map(|&j| current.vectors[j].clone()).collect(),
    };
    (aligned, flipped)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanForce {
    /// Traceless `H_eff` with `ρ = e^{−β H_eff} / Z_eff`.
    pub h_eff: CMatrix,
    pub ln_z: f64,
}

/// `H_eff = −ln(ρ)/β`, with the additive constant split off as `ln Z_eff`.
pub fn hamiltonian_of_mean_force(rho: &CMatrix, beta: f64) -> Result<MeanForce> {
    check_density(rho, 1e-6)?;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be positive and finite, got {beta}")));
    }
    let (values, _) = linalg::hermitian_eigen(rho);
    if values.iter().any(|&p| p <= 1e-12) {
        return Err(Error::RankDeficient(values));
    }
    let d = rho.nrows() as f64;
    let ln_rho = linalg::hermitian_map(rho, |p| Complex64::new(p.ln(), 0.0));
    let ln_z = -ln_rho.trace().re / d;
    let mut h_eff = ln_rho * Complex64::new(-1.0 / beta, 0.0);
    let shift = h_eff.trace() / d;
    for i in 0..rho.nrows() {
        h_eff[(i, i)] -= shift;
    }
    Ok(MeanForce { h_eff, ln_z })
}

/// `2√(ε² + 4α²g²)`, the level splitting of `H_S + 2gS` for the two-level benchmark.
pub fn frequency_estimate(model: &SystemModel, g: f64) -> Result<f64> {
    let params = model
        .two_level_params()
        .ok_or_else(|| Error::Unsupported("frequency estimate needs the two-level benchmark model".into()))?;
    let (e, a) = (params.epsilon_s, params.alpha);
    Ok(2.0 * (e * e + 4.0 * a * a * g * g).sqrt())
}

/// Angular frequency of the largest spectral peak of `values(t)` for `t ≤ t_end`.
///
/// The mean is removed, a Hann window applied, and the discrete-time Fourier
/// amplitude is scanned on a grid of `resolution` spacing up to `omega_max`,
/// then refined by parabolic interpolation.
pub fn dominant_frequency(times: &[f64], values: &[f64], t_end: f64, omega_max: f64, resolution: f64) -> Option<f64> {
    let n = times.iter().take_while(|&&t| t <= t_end + 1e-12).count().min(values.len());
    if n < 4 {
        return None;
    }
    let (t0, t1) = (times[0], times[n - 1]);
    let span = t1 - t0;
    let mean = values[..n].iter().sum::<f64>() / n as f64;
    let windowed: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let w = 0.5 - 0.5 * (2.0 * core::f64::consts::PI * (times[j] - t0) / span).cos();
            (times[j], w * (values[j] - mean))
        })
        .collect();
    let amplitude = |omega: f64| -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(t, v) in &windowed {
            acc += Complex64::from_polar(v, omega * t);
        }
        acc.norm()
    };
    let steps = (omega_max / resolution).ceil() as usize;
    let grid: Vec<f64> = (1..=steps).map(|s| s as f64 * resolution).collect();
    let amps: Vec<f64> = grid.iter().map(|&w| amplitude(w)).collect();
    let (best, _) = amps.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    if best == 0 || best + 1 == amps.len() {
        return Some(grid[best]);
    }
    let (a, b, c) = (amps[best - 1], amps[best], amps[best + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    Some(grid[best] + shift * resolution)
}

/// `‖[ρ, H]‖_F`.
pub fn commutator_norm(rho: &CMatrix, h: &CMatrix) -> f64 {
    linalg::frobenius(&linalg::commutator(rho, h))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
    pub bloch_norm: f64,
    pub entropy: f64,
    pub p_plus: f64,
    pub p_minus: f64,
}

impl TrajectoryRow {
    pub fn from_density(t: f64, rho: &CMatrix) -> Result<Self> {
        let b = pauli_expectations(rho)?;
        let pops = eigen_populations(rho)?;
        Ok(Self {
            t,
            sx: b.x,
            sy: b.y,
            sz: b.z,
            bloch_norm: b.norm,
            entropy: vn_entropy(rho)?,
            p_plus: pops.p_plus(),
            p_minus: pops.p_minus(),
        })
    }

    pub fn bloch(&self) -> BlochVector {
        BlochVector { x: self.sx, y: self.sy, z: self.sz, norm: self.bloch_norm }
    }
}

/// Observable time series plus free-form `key = value` metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub metadata: Vec<(String, String)>,
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    pub fn from_series(times: &[f64], rhos: &[CMatrix], metadata: Vec<(String, String)>) -> Result<Self> {
        let rows = times
            .iter()
            .zip(rhos)
            .map(|(&t, rho)| TrajectoryRow::from_density(t, rho))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { metadata, rows })
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, pick: impl Fn(&TrajectoryRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(pick).collect()
    }

    /// Largest Bloch-vector distance between two trajectories on the same grid.
    pub fn max_bloch_deviation(&self, other: &Self) -> Result<f64> {
        if self.rows.len() != other.rows.len()
            || self.rows.iter().zip(&other.rows).any(|(a, b)| a.t != b.t)
        {
            return Err(Error::Configuration("trajectories are sampled on different time grids".into()));
        }
        Ok(self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.bloch().distance(&b.bloch()))
            .fold(0.0, f64::max))
    }
}
