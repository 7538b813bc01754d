//! Right-hand side of the hierarchy equations of motion.
//!
//! For every row `n`:
//!
//! `dρ_n = −i[H_S, ρ_n] − (Σ_k n_k γ_k) ρ_n − i S Σ_{n'} A_left ρ_{n'} + i Σ_{n'} A_right ρ_{n'} S`
//!
//! The exponential and linear couplings differ only in their tables.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;


use crate::algebra::binomial;
use crate::bath::DissipatonSpectrum;
use crate::error::{Error, Result};
use crate::hierarchy::{build_cl_coupling, build_pcl_coupling, CouplingKind, CouplingTable, IndexSet, SignConvention};
use crate::linalg;
use crate::{CMatrix, Complex64};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Scenario scalars of the two-level benchmark `H_S = ε σ_z`, `S = α σ_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevel {
    pub epsilon_s: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    h_s: CMatrix,
    s: CMatrix,
    lambda: f64,
    two_level: Option<TwoLevel>,
}

impl SystemModel {
    pub fn new(h_s: CMatrix, s: CMatrix, lambda: f64) -> Result<Self> {
        if !h_s.is_square() || h_s.shape() != s.shape() || h_s.nrows() == 0 {
            return Err(Error::InvalidParameter(format!(
                "H_S {:?} and S {:?} must be square with equal shapes",
                h_s.shape(),
                s.shape()
            )));
        }
        if !linalg::is_hermitian(&h_s, 1e-12) || !linalg::is_hermitian(&s, 1e-12) {
            return Err(Error::InvalidParameter("H_S and S must be Hermitian".into()));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be finite, got {lambda}")));
        }
        Ok(Self { h_s, s, lambda, two_level: None })
    }

    /// `H_S = ε σ_z`, `S = α σ_x`.
    pub fn two_level(epsilon_s: f64, alpha: f64, lambda: f64) -> Self {
        let h_s = linalg::sigma_z() * Complex64::new(epsilon_s, 0.0);
        let s = linalg::sigma_x() * Complex64::new(alpha, 0.0);
        Self { h_s, s, lambda, two_level: Some(TwoLevel { epsilon_s, alpha }) }
    }

    pub fn dim(&self) -> usize {
        self.h_s.nrows()
    }

    pub fn h_s(&self) -> &CMatrix {
        &self.h_s
    }

    pub fn s(&self) -> &CMatrix {
        &self.s
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn two_level_params(&self) -> Option<TwoLevel> {
        self.two_level
    }
}

/// One `d×d` block per multi-index, stored row-major and contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyState {
    dim: usize,
    data: Vec<Complex64>,
    pub time: f64,
}

impl HierarchyState {
    pub fn zeros(dim: usize, rows: usize) -> Self {
        Self { dim, data: vec![ZERO; rows * dim * dim], time: 0.0 }
    }

    /// `ρ_0 = ρ_S(0)`, all higher rows zero.
    pub fn initial(dim: usize, rows: usize, rho_s: &CMatrix) -> Result<Self> {
        if rho_s.shape() != (dim, dim) {
            return Err(Error::Configuration(format!(
                "initial density matrix has shape {:?}, expected ({dim}, {dim})",
                rho_s.shape()
            )));
        }
        let tr = rho_s.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-10 || !linalg::is_hermitian(rho_s, 1e-10) {
            return Err(Error::InvalidParameter(format!("initial density matrix must be Hermitian with unit trace (trace {tr})")));
        }
        let mut state = Self::zeros(dim, rows);
        state.set_block(0, rho_s);
        Ok(state)
    }

    pub fn from_vec(dim: usize, data: Vec<Complex64>, time: f64) -> Self {
        assert_eq!(data.len() % (dim * dim), 0);
        Self { dim, data, time }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.data.len() / (self.dim * self.dim)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn block(&self, row: usize) -> &[Complex64] {
        let b = self.dim * self.dim;
        &self.data[row * b..(row + 1) * b]
    }

    pub fn matrix(&self, row: usize) -> CMatrix {
        CMatrix::from_row_slice(self.dim, self.dim, self.block(row))
    }

    pub fn set_block(&mut self, row: usize, m: &CMatrix) {
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                self.data[row * d * d + i * d + j] = m[(i, j)];
            }
        }
    }

    /// The reduced density matrix `ρ_0`.
    pub fn rho_s(&self) -> CMatrix {
        self.matrix(0)
    }

    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        let tr: Complex64 = (0..d).map(|i| self.data[i * d + i]).sum();
        (tr - Complex64::new(1.0, 0.0)).norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct Generator {
    kind: CouplingKind,
    dim: usize,
    h: Vec<Complex64>,
    s: Vec<Complex64>,
    damping: Vec<Complex64>,
    table: CouplingTable,
    indices: IndexSet,
    conjugates: Vec<usize>,
}

fn row_major(m: &CMatrix) -> Vec<Complex64> {
    let d = m.nrows();
    (0..d * d).map(|q| m[(q / d, q % d)]).collect()
}

impl Generator {
    /// Exponential-coupling hierarchy truncated at tier `levels`.
    pub fn pcl(model: &SystemModel, spec: &DissipatonSpectrum, levels: usize, convention: SignConvention) -> Self {
        let indices = IndexSet::new(spec.len(), levels);
        let table = build_pcl_coupling(spec, model.lambda(), &indices, convention);
        Self::assemble(model, spec, indices, table)
    }

    /// Linear-coupling hierarchy truncated at tier `levels`.
    pub fn cl(model: &SystemModel, spec: &DissipatonSpectrum, levels: usize) -> Self {
        let indices = IndexSet::new(spec.len(), levels);
        let table = build_cl_coupling(spec, &indices);
        Self::assemble(model, spec, indices, table)
    }

    pub fn build(
        kind: CouplingKind,
        model: &SystemModel,
        spec: &DissipatonSpectrum,
        levels: usize,
        convention: SignConvention,
    ) -> Self {
        match kind {
            CouplingKind::Pcl => Self::pcl(model, spec, levels, convention),
            CouplingKind::Cl => Self::cl(model, spec, levels),
        }
    }

    /// Wraps an externally built table after checking it fits the model and spectrum.
    pub fn from_table(model: &SystemModel, spec: &DissipatonSpectrum, table: CouplingTable) -> Result<Self> {
        let rows = table.rows.len();
        let modes = spec.len();
        let levels = (0..=64usize)
            .find(|&l| binomial(l + modes, modes) as usize >= rows)
            .filter(|&l| binomial(l + modes, modes) as usize == rows)
            .ok_or_else(|| Error::Configuration(format!("{rows} table rows do not match any truncation for K = {modes}")))?;
        if table.kind == CouplingKind::Pcl && table.lambda != model.lambda() {
            return Err(Error::Configuration(format!(
                "table built for lambda = {} but model has lambda = {}",
                table.lambda,
                model.lambda()
            )));
        }
        if table.rows.iter().flatten().any(|e| e.column >= rows) {
            return Err(Error::Configuration("table column out of range".into()));
        }
        Ok(Self::assemble(model, spec, IndexSet::new(modes, levels), table))
    }

    fn assemble(model: &SystemModel, spec: &DissipatonSpectrum, indices: IndexSet, table: CouplingTable) -> Self {
        let damping = indices
            .iter()
            .map(|n| {
                n.counts()
                    .iter()
                    .zip(spec.gamma())
                    .map(|(&c, g)| g * c as f64)
                    .sum()
            })
            .collect();
        let conjugates = indices.conjugate_map(spec.pair());
        Self {
            kind: table.kind,
            dim: model.dim(),
            h: row_major(model.h_s()),
            s: row_major(model.s()),
            damping,
            table,
            indices,
            conjugates,
        }
    }

    pub fn kind(&self) -> CouplingKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &IndexSet {
        &self.indices
    }

    pub fn table(&self) -> &CouplingTable {
        &self.table
    }

    /// Length of the flattened state vector.
    pub fn state_len(&self) -> usize {
        self.rows() * self.dim * self.dim
    }

    pub fn initial_state(&self, rho_s: &CMatrix) -> Result<HierarchyState> {
        HierarchyState::initial(self.dim, self.rows(), rho_s)
    }

    /// Writes the time derivative of `state` into `out`.
    pub fn rhs_into(&self, state: &[Complex64], out: &mut [Complex64]) {
        let d = self.dim;
        let b = d * d;
        debug_assert_eq!(state.len(), self.state_len());
        debug_assert_eq!(out.len(), self.state_len());
        let mut left = vec![ZERO; b];
        let mut right = vec![ZERO; b];
        for (r, row) in self.table.rows.iter().enumerate() {
            left.iter_mut().for_each(|z| *z = ZERO);
            right.iter_mut().for_each(|z| *z = ZERO);
            for e in row {
                let src = &state[e.column * b..(e.column + 1) * b];
                for q in 0..b {
                    left[q] += e.left * src[q];
                    right[q] += e.right * src[q];
                }
            }
            let rho = &state[r * b..(r + 1) * b];
            let damp = self.damping[r];
            let dst = &mut out[r * b..(r + 1) * b];
            for i in 0..d {
                for j in 0..d {
                    let mut comm = ZERO;
                    let mut coupling = ZERO;
                    for k in 0..d {
                        comm += self.h[i * d + k] * rho[k * d + j] - rho[i * d + k] * self.h[k * d + j];
                        coupling += self.s[i * d + k] * left[k * d + j] - right[i * d + k] * self.s[k * d + j];
                    }
                    dst[i * d + j] = -I * (comm + coupling) - damp * rho[i * d + j];
                }
            }
        }
    }

    pub fn rhs(&self, state: &HierarchyState) -> Result<HierarchyState> {
        if state.dim() != self.dim || state.as_slice().len() != self.state_len() {
            return Err(Error::Configuration(format!(
                "state has {} rows of dimension {}, generator expects {} rows of dimension {}",
                state.rows(),
                state.dim(),
                self.rows(),
                self.dim
            )));
        }
        let mut out = HierarchyState::zeros(self.dim, self.rows());
        out.time = state.time;
        self.rhs_into(state.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    /// Largest `|ρ_{n̄} − ρ_n†|` entry over all rows.
    pub fn hermiticity_defect(&self, state: &HierarchyState) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for (r, &c) in self.conjugates.iter().enumerate() {
            let a = state.block(r);
            let b = state.block(c);
            for i in 0..d {
                for j in 0..d {
                    worst = worst.max((b[i * d + j] - a[j * d + i].conj()).norm());
                }
            }
        }
        worst
    }

    /// Explicit superoperator on the flattened state, column by column.
    pub fn assemble_dense(&self) -> CMatrix {
        let n = self.state_len();
        let mut m = CMatrix::zeros(n, n);
        let mut unit = vec![ZERO; n];
        let mut col = vec![ZERO; n];
        for j in 0..n {
            unit[j] = Complex64::new(1.0, 0.0);
            self.rhs_into(&unit, &mut col);
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = *v;
            }
            unit[j] = ZERO;
        }
        m
    }

    /// Largest real part over the superoperator spectrum.
    pub fn spectral_abscissa(&self) -> Option<f64> {
        linalg::eigenvalues(&self.assemble_dense()).map(|ev| ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Derivative of the exponential-coupling hierarchy for a prebuilt table.
pub fn pcl_rhs(
    state: &HierarchyState,
    model: &SystemModel,
    spectrum: &DissipatonSpectrum,
    table: &CouplingTable,
) -> Result<HierarchyState> {
    if table.kind != CouplingKind::Pcl {
        return Err(Error::Configuration("pcl_rhs needs an exponential-coupling table".into()));
    }
    Generator::from_table(model, spectrum, table.clone())?.rhs(state)
}

/// Derivative of the linear-coupling hierarchy for a prebuilt table.
pub fn cl_rhs(
    state: &HierarchyState,
    model: &SystemModel,
    spectrum: &DissipatonSpectrum,
    table: &CouplingTable,
) -> Result<HierarchyState> {
    if table.kind != CouplingKind::Cl {
        return Err(Error::Configuration("cl_rhs needs a linear-coupling table".into()));
    }
    Generator::from_table(model, spectrum, table.clone())?.rhs(state)
}
