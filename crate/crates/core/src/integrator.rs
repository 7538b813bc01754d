//! Fixed-step RK4 propagation, steady-state search and truncation scans.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DVector;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::generator::{Generator, HierarchyState};
use crate::linalg;
use crate::observables::Trajectory;
use crate::{CMatrix, Complex64};

/// Scratch buffers for the classical fourth-order Runge–Kutta scheme.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4 {
    pub fn new(len: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); len];
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }

    /// Advances `y` by `dt` in place. `block` is the number of scalars per
    /// hierarchy row, used to name the offending row on divergence.
    #[allow(clippy::needless_range_loop)]
    pub fn step(
        &mut self,
        y: &mut [Complex64],
        t: f64,
        dt: f64,
        block: usize,
        rhs: &impl Fn(&[Complex64], &mut [Complex64]),
    ) -> Result<()> {
        let n = y.len();
        rhs(y, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = y[i] + self.k1[i] * (0.5 * dt);
        }
        rhs(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = y[i] + self.k2[i] * (0.5 * dt);
        }
        rhs(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = y[i] + self.k3[i] * dt;
        }
        rhs(&self.tmp, &mut self.k4);
        let sixth = dt / 6.0;
        for i in 0..n {
            y[i] += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * sixth;
        }
        if let Some(bad) = y.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Divergence { time: t + dt, row: bad / block.max(1) });
        }
        Ok(())
    }
}

/// One RK4 step of `state` under `rhs`.
pub fn rk4_step(
    state: &HierarchyState,
    dt: f64,
    rhs: impl Fn(&[Complex64], &mut [Complex64]),
) -> Result<HierarchyState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    let mut next = state.clone();
    let block = state.dim() * state.dim();
    Rk4::new(state.as_slice().len()).step(next.as_mut_slice(), state.time, dt, block, &rhs)?;
    next.time = state.time + dt;
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Output every `stride` steps.
    pub stride: usize,
    pub initial: CMatrix,
}

impl PropagationConfig {
    /// `dt = 10⁻³`, `t_final = 50`, output every 10 steps, `ρ_S(0) = |0⟩⟨0|`.
    pub fn new(initial: CMatrix) -> Self {
        Self { dt: 1e-3, t_final: 50.0, stride: 10, initial }
    }

    fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !(self.t_final >= 0.0) || self.stride == 0 {
            return Err(Error::InvalidParameter(format!(
                "need dt > 0, t_final >= 0, stride >= 1 (got {}, {}, {})",
                self.dt, self.t_final, self.stride
            )));
        }
        Ok((self.t_final / self.dt).round() as usize)
    }
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self::new(linalg::density_from_bloch(0.0, 0.0, 1.0))
    }
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub times: Vec<f64>,
    pub rho_s: Vec<CMatrix>,
    pub final_state: HierarchyState,
    /// Largest `|tr ρ_0 − 1|` seen at output times.
    pub max_trace_defect: f64,
    /// Largest `|ρ_{n̄} − ρ_n†|` seen at output times.
    pub max_hermiticity_defect: f64,
}

impl Propagation {
    /// Observable table for a two-level system.
    pub fn trajectory(&self, metadata: Vec<(alloc::string::String, alloc::string::String)>) -> Result<Trajectory> {
        Trajectory::from_series(&self.times, &self.rho_s, metadata)
    }
}

/// Propagates from `ρ_0 = ρ_S(0)`, `ρ_{n>0} = 0`. Output times are
/// `step·dt` for multiples of the stride, plus the final step.
pub fn evolve(generator: &Generator, cfg: &PropagationConfig) -> Result<Propagation> {
    let steps = cfg.steps()?;
    let mut state = generator.initial_state(&cfg.initial)?;
    let block = generator.dim() * generator.dim();
    let mut rk = Rk4::new(generator.state_len());
    let rhs = |y: &[Complex64], out: &mut [Complex64]| generator.rhs_into(y, out);
    let mut out = Propagation {
        times: Vec::new(),
        rho_s: Vec::new(),
        final_state: state.clone(),
        max_trace_defect: 0.0,
        max_hermiticity_defect: 0.0,
    };
    let record = |state: &HierarchyState, out: &mut Propagation| {
        out.times.push(state.time);
        out.rho_s.push(state.rho_s());
        out.max_trace_defect = out.max_trace_defect.max(state.trace_defect());
        out.max_hermiticity_defect = out.max_hermiticity_defect.max(generator.hermiticity_defect(state));
    };
    record(&state, &mut out);
    for step in 1..=steps {
        let t = state.time;
        rk.step(state.as_mut_slice(), t, cfg.dt, block, &rhs)?;
        state.time = step as f64 * cfg.dt;
        if step % cfg.stride == 0 || step == steps {
            record(&state, &mut out);
        }
    }
    out.final_state = state;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateConfig {
    pub dt: f64,
    pub t_max: f64,
    /// Convergence threshold on `‖dρ_0/dt‖_F`.
    pub tolerance: f64,
    pub check_every: usize,
    pub initial: CMatrix,
}

impl Default for SteadyStateConfig {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            t_max: 2000.0,
            tolerance: 1e-10,
            check_every: 50,
            initial: linalg::density_from_bloch(0.0, 0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: CMatrix,
    pub time: f64,
    pub residual: f64,
    pub state: HierarchyState,
}

fn rho0_residual(generator: &Generator, y: &[Complex64], scratch: &mut [Complex64]) -> f64 {
    generator.rhs_into(y, scratch);
    let b = generator.dim() * generator.dim();
    scratch[..b].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Long-time propagation until `‖dρ_0/dt‖_F ≤ tolerance`.
pub fn steady_state(generator: &Generator, cfg: &SteadyStateConfig) -> Result<SteadyState> {
    if !(cfg.dt > 0.0) || cfg.check_every == 0 {
        return Err(Error::InvalidParameter("steady-state search needs dt > 0 and check_every >= 1".into()));
    }
    let mut state = generator.initial_state(&cfg.initial)?;
    let block = generator.dim() * generator.dim();
    let mut rk = Rk4::new(generator.state_len());
    let mut scratch = vec![Complex64::new(0.0, 0.0); generator.state_len()];
    let rhs = |y: &[Complex64], out: &mut [Complex64]| generator.rhs_into(y, out);
    let max_steps = (cfg.t_max / cfg.dt).ceil() as usize;
    let mut residual = rho0_residual(generator, state.as_slice(), &mut scratch);
    let mut step = 0;
    // Require the criterion over a full check interval so a momentary
    // stationary point of an oscillation is not mistaken for convergence.
    let mut below = 0;
    while step < max_steps {
        let t = state.time;
        rk.step(state.as_mut_slice(), t, cfg.dt, block, &rhs)?;
        step += 1;
        state.time = step as f64 * cfg.dt;
        if step % cfg.check_every == 0 {
            residual = rho0_residual(generator, state.as_slice(), &mut scratch);
            if residual <= cfg.tolerance {
                below += 1;
                if below >= 2 {
                    return Ok(SteadyState { rho: state.rho_s(), time: state.time, residual, state });
                }
            } else {
                below = 0;
            }
        }
    }
    Err(Error::NotConverged { time: state.time, residual, last: state.rho_s() })
}

/// Null vector of the assembled superoperator normalized by `tr ρ_0 = 1`.
///
/// The `ρ_0[0,0]` equation is redundant with trace conservation and is
/// replaced by the normalization condition.
pub fn dense_steady_state(generator: &Generator) -> Result<SteadyState> {
    let mut m = generator.assemble_dense();
    let n = m.nrows();
    let d = generator.dim();
    let mut rhs = DVector::from_element(n, Complex64::new(0.0, 0.0));
    for j in 0..n {
        m[(0, j)] = Complex64::new(0.0, 0.0);
    }
    for i in 0..d {
        m[(0, i * d + i)] = Complex64::new(1.0, 0.0);
    }
    rhs[0] = Complex64::new(1.0, 0.0);
    let x = m.lu().solve(&rhs).ok_or(Error::Singular("steady-state system has no unique solution"))?;
    let state = HierarchyState::from_vec(d, x.iter().copied().collect(), f64::INFINITY);
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    let residual = rho0_residual(generator, state.as_slice(), &mut scratch);
    Ok(SteadyState { rho: state.rho_s(), time: f64::INFINITY, residual, state })
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub levels: Vec<usize>,
    pub trajectories: Vec<Trajectory>,
    /// `deviations[i]` compares `levels[i]` with `levels[i + 1]`.
    pub deviations: Vec<f64>,
    pub monotone: bool,
}

/// Propagates one hierarchy per truncation level and reports the largest
/// Bloch-vector deviation between successive levels.
pub fn tier_convergence_scan(
    levels: &[usize],
    build: impl Fn(usize) -> Generator,
    cfg: &PropagationConfig,
) -> Result<ScanReport> {
    if levels.len() < 2 {
        return Err(Error::InvalidParameter("a truncation scan needs at least two levels".into()));
    }
    let mut trajectories = Vec::with_capacity(levels.len());
    for &l in levels {
        let prop = evolve(&build(l), cfg)?;
        trajectories.push(prop.trajectory(vec![("levels".into(), l.to_string())])?);
    }
    let deviations = trajectories
        .windows(2)
        .map(|w| w[0].max_bloch_deviation(&w[1]))
        .collect::<Result<Vec<_>>>()?;
    let monotone = deviations.windows(2).all(|w| w[1] < w[0]);
    Ok(ScanReport { levels: levels.to_vec(), trajectories, deviations, monotone })
}
