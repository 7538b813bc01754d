//! Exact dynamics of the system coupled to a few truncated harmonic modes.
//!
//! Each mode has `H_B = ω n̂` (zero-point energy dropped) and coordinate
//! `x̂ = (â + â†)/√2`, so that `F̂ = Σ_j c_j x̂_j`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::bath::{bose_occupation, discrete_mode_decompose};
use crate::error::{Error, Result};
use crate::generator::SystemModel;
use crate::hierarchy::CouplingKind;
use crate::linalg::{self, c};
use crate::{CMatrix, Complex64};

pub const MAX_DIMENSION: usize = 100_000;

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathMode {
    pub omega: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBath {
    modes: Vec<BathMode>,
    n_max: usize,
    beta: f64,
    tail_tolerance: f64,
}

impl DiscreteBath {
    /// Validates `n_max ≥ 2` and that the Boltzmann weight `e^{−βω(n_max+1)}`
    /// of the first discarded level is below [`DEFAULT_TAIL_TOLERANCE`].
    pub fn new(modes: Vec<BathMode>, n_max: usize, beta: f64) -> Result<Self> {
        Self::with_tolerance(modes, n_max, beta, DEFAULT_TAIL_TOLERANCE)
    }

    pub fn with_tolerance(modes: Vec<BathMode>, n_max: usize, beta: f64, tail_tolerance: f64) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidParameter("discrete bath needs at least one mode".into()));
        }
        if n_max < 2 {
            return Err(Error::InvalidParameter(format!("Fock truncation must be at least 2, got {n_max}")));
        }
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        for m in &modes {
            if !(m.omega > 0.0) || !m.omega.is_finite() || !m.c.is_finite() {
                return Err(Error::InvalidParameter(format!("invalid bath mode {m:?}")));
            }
        }
        let bath = Self { modes, n_max, beta, tail_tolerance };
        let tail = bath.truncation_tail();
        if tail > tail_tolerance {
            return Err(Error::Truncation { tail, tolerance: tail_tolerance });
        }
        Ok(bath)
    }

    pub fn single(omega: f64, c: f64, n_max: usize, beta: f64) -> Result<Self> {
        Self::new(vec![BathMode { omega, c }], n_max, beta)
    }

    pub fn modes(&self) -> &[BathMode] {
        &self.modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }

    /// Largest `e^{−βω_j(n_max+1)}` over the modes.
    pub fn truncation_tail(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| (-self.beta * m.omega * (self.n_max + 1) as f64).exp())
            .fold(0.0, f64::max)
    }

    /// Dimension of the truncated Fock space.
    pub fn fock_dimension(&self) -> Result<usize> {
        let per = self.n_max + 1;
        self.modes.iter().try_fold(1usize, |acc, _| {
            acc.checked_mul(per).filter(|&d| d <= MAX_DIMENSION).ok_or(Error::DimensionOverflow(acc.saturating_mul(per)))
        })
    }

    fn embed(&self, j: usize, op: &CMatrix) -> CMatrix {
        let id = linalg::identity(self.n_max + 1);
        let mut out = if j == 0 { op.clone() } else { id.clone() };
        for i in 1..self.modes.len() {
            out = linalg::kron(&out, if i == j { op } else { &id });
        }
        out
    }

    /// `Σ_j c_j x̂_j`.
    pub fn coordinate(&self) -> CMatrix {
        let x = position(self.n_max + 1);
        let mut f: Option<CMatrix> = None;
        for (j, m) in self.modes.iter().enumerate() {
            let term = self.embed(j, &x) * c(m.c, 0.0);
            f = Some(match f {
                Some(acc) => acc + term,
                None => term,
            });
        }
        f.expect("at least one mode")
    }

    /// `Σ_j ω_j n̂_j`.
    pub fn hamiltonian(&self) -> CMatrix {
        let d = self.n_max + 1;
        let number = CMatrix::from_fn(d, d, |i, k| if i == k { c(i as f64, 0.0) } else { c(0.0, 0.0) });
        let mut h: Option<CMatrix> = None;
        for (j, m) in self.modes.iter().enumerate() {
            let term = self.embed(j, &number) * c(m.omega, 0.0);
            h = Some(match h {
                Some(acc) => acc + term,
                None => term,
            });
        }
        h.expect("at least one mode")
    }
}

/// `(â + â†)/√2` on `dim` Fock levels.
fn position(dim: usize) -> CMatrix {
    let mut x = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        let v = c((n as f64 / 2.0).sqrt(), 0.0);
        x[(n - 1, n)] = v;
        x[(n, n - 1)] = v;
    }
    x
}

/// Bath operator entering `H_SB = Ŝ ⊗ B̂`: `2cos(λF̂)` for PCL, `F̂` for CL.
pub fn coupling_operator(model: &SystemModel, bath: &DiscreteBath, kind: CouplingKind) -> CMatrix {
    let f = bath.coordinate();
    match kind {
        CouplingKind::Cl => f,
        CouplingKind::Pcl => {
            let lambda = model.lambda();
            linalg::hermitian_map(&f, |x| c(2.0 * (lambda * x).cos(), 0.0))
        }
    }
}

/// `H_S ⊗ 1 + Ŝ ⊗ B̂ + 1 ⊗ H_B`.
pub fn build_total_hamiltonian(model: &SystemModel, bath: &DiscreteBath, kind: CouplingKind) -> Result<CMatrix> {
    let d_b = bath.fock_dimension()?;
    let total = model.dim().checked_mul(d_b).filter(|&d| d <= MAX_DIMENSION);
    if total.is_none() {
        return Err(Error::DimensionOverflow(model.dim().saturating_mul(d_b)));
    }
    let id_s = linalg::identity(model.dim());
    let id_b = linalg::identity(d_b);
    let b = coupling_operator(model, bath, kind);
    Ok(linalg::kron(model.h_s(), &id_b) + linalg::kron(model.s(), &b) + linalg::kron(&id_s, &bath.hamiltonian()))
}

/// `⊗_j e^{−βω_j n̂_j}/Z_j` on the truncated space, renormalized to unit trace.
pub fn thermal_bath_state(bath: &DiscreteBath) -> CMatrix {
    let d = bath.n_max + 1;
    let mut out: Option<CMatrix> = None;
    for m in &bath.modes {
        let weights: Vec<f64> = (0..d).map(|n| (-bath.beta * m.omega * n as f64).exp()).collect();
        let z: f64 = weights.iter().sum();
        let rho = CMatrix::from_fn(d, d, |i, k| if i == k { c(weights[i] / z, 0.0) } else { c(0.0, 0.0) });
        out = Some(match out {
            Some(acc) => linalg::kron(&acc, &rho),
            None => rho,
        });
    }
    out.expect("at least one mode")
}

#[derive(Debug, Clone)]
pub struct ExactPropagation {
    pub times: Vec<f64>,
    pub rho_s: Vec<CMatrix>,
    /// `tr[H_T ρ_T(t)]` at each time.
    pub energy: Vec<f64>,
}

/// `ρ_S(t) = tr_B[e^{−iH_T t}(ρ_S(0) ⊗ ρ_B^eq)e^{iH_T t}]` from one
/// eigendecomposition of `H_T`.
pub fn propagate_exact(
    model: &SystemModel,
    bath: &DiscreteBath,
    kind: CouplingKind,
    rho_s0: &CMatrix,
    times: &[f64],
) -> Result<ExactPropagation> {
    if rho_s0.shape() != (model.dim(), model.dim()) {
        return Err(Error::InvalidParameter("initial state does not match the system dimension".into()));
    }
    let h = build_total_hamiltonian(model, bath, kind)?;
    let d_s = model.dim();
    let d_b = h.nrows() / d_s;
    let (energies, v) = linalg::hermitian_eigen(&h);
    let rho0 = linalg::kron(rho_s0, &thermal_bath_state(bath));
    let v_dag = v.adjoint();
    let rho_eig = &v_dag * rho0 * &v;
    let n = h.nrows();
    let mut out = ExactPropagation { times: times.to_vec(), rho_s: Vec::with_capacity(times.len()), energy: Vec::new() };
    for &t in times {
        let phases: Vec<Complex64> = energies.iter().map(|&e| Complex64::from_polar(1.0, -e * t)).collect();
        let evolved = CMatrix::from_fn(n, n, |a, b| rho_eig[(a, b)] * phases[a] * phases[b].conj());
        let energy: f64 = (0..n).map(|a| evolved[(a, a)].re * energies[a]).sum();
        let rho_t = &v * evolved * &v_dag;
        out.rho_s.push(linalg::partial_trace_second(&rho_t, d_s, d_b));
        out.energy.push(energy);
    }
    Ok(out)
}

/// Largest `|⟨F̂(t)F̂(0)⟩ − Σ_k η_k e^{−γ_k t}|` over `times` for a single mode,
/// with the correlation taken in the Heisenberg picture of the truncated space.
pub fn mode_correlation_check(bath: &DiscreteBath, times: &[f64]) -> Result<f64> {
    if bath.modes.len() != 1 {
        return Err(Error::Unsupported("mode correlation check needs a single mode".into()));
    }
    let mode = bath.modes[0];
    let spec = discrete_mode_decompose(mode.omega, mode.c, bath.beta)?;
    let f = bath.coordinate();
    let rho_b = thermal_bath_state(bath);
    let d = f.nrows();
    let f_rho = &f * &rho_b;
    let mut worst: f64 = 0.0;
    for &t in times {
        // ⟨F(t)F⟩ = tr[e^{iHt} F e^{−iHt} F ρ] with diagonal H = ω n̂.
        let mut acc = c(0.0, 0.0);
        for n in 0..d {
            for m in 0..d {
                let phase = Complex64::from_polar(1.0, mode.omega * (n as f64 - m as f64) * t);
                acc += phase * f[(n, m)] * f_rho[(m, n)];
            }
        }
        worst = worst.max((acc - spec.correlation(t)).norm());
    }
    Ok(worst)
}

/// Mean occupation of each mode.
pub fn occupations(bath: &DiscreteBath) -> Vec<f64> {
    bath.modes.iter().map(|m| bose_occupation(m.omega, bath.beta)).collect()
}
