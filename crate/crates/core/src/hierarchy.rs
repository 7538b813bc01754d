//! Truncated multi-index space and precomputed coupling tables.
//!
//! A row `n` of a [`CouplingTable`] lists the columns `n'` with weights
//! `(A_left, A_right)` such that the bath-coupling part of the equation of
//! motion reads
//!
//! `dρ_n ⊃ −i Σ_{n'} A_left(n,n') S ρ_{n'} + i Σ_{n'} A_right(n,n') ρ_{n'} S`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

#[allow(unused_imports)]
use num_traits::Float;

use crate::algebra::{binomial, factorial, i_power};
use crate::bath::DissipatonSpectrum;
use crate::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative magnitude below which table entries are dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u16>);

impl MultiIndex {
    pub fn new(counts: Vec<u16>) -> Self {
        Self(counts)
    }

    pub fn zero(k: usize) -> Self {
        Self(vec![0; k])
    }

    pub fn counts(&self) -> &[u16] {
        &self.0
    }

    pub fn tier(&self) -> usize {
        self.0.iter().map(|&c| c as usize).sum()
    }

    /// Counts exchanged between conjugate-paired modes, `n̄_k = n_{k̄}`.
    pub fn conjugate(&self, pair: &[usize]) -> Self {
        Self((0..self.0.len()).map(|k| self.0[pair[k]]).collect())
    }

    fn shifted(&self, k: usize, delta: i32) -> Option<Self> {
        let v = self.0[k] as i32 + delta;
        if v < 0 {
            return None;
        }
        let mut c = self.0.clone();
        c[k] = v as u16;
        Some(Self(c))
    }
}

impl core::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// All multi-indices with `Σ n_k ≤ L`, ordered by tier and, within a tier,
/// with larger leading counts first.
#[derive(Debug, Clone)]
pub struct IndexSet {
    modes: usize,
    levels: usize,
    indices: Vec<MultiIndex>,
    offsets: BTreeMap<MultiIndex, usize>,
}

impl IndexSet {
    pub fn new(modes: usize, levels: usize) -> Self {
        assert!(modes >= 1, "at least one dissipaton mode is required");
        let indices = enumerate_indices(modes, levels);
        let offsets = indices.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Self { modes, levels, indices, offsets }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn get(&self, offset: usize) -> &MultiIndex {
        &self.indices[offset]
    }

    pub fn iter(&self) -> impl Iterator<Item = &MultiIndex> {
        self.indices.iter()
    }

    /// Offset of `counts`, or `None` if it lies beyond the truncation.
    pub fn index_lookup(&self, counts: &[u16]) -> Option<usize> {
        if counts.len() != self.modes {
            return None;
        }
        self.offsets.get(&MultiIndex(counts.to_vec())).copied()
    }

    /// Offset of the conjugate partner `n̄` of each row.
    pub fn conjugate_map(&self, pair: &[usize]) -> Vec<usize> {
        self.indices
            .iter()
            .map(|n| self.offsets[&n.conjugate(pair)])
            .collect()
    }
}

pub fn enumerate_indices(modes: usize, levels: usize) -> Vec<MultiIndex> {
    fn fill(out: &mut Vec<MultiIndex>, prefix: &mut Vec<u16>, remaining_modes: usize, total: usize) {
        if remaining_modes == 1 {
            prefix.push(total as u16);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in (0..=total).rev() {
            prefix.push(first as u16);
            fill(out, prefix, remaining_modes - 1, total - first);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for tier in 0..=levels {
        fill(&mut out, &mut Vec::with_capacity(modes), modes, tier);
    }
    out
}

/// Sign between the `e^{+iλF}` and `e^{−iλF}` branches of the coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConvention {
    /// `(iλ)^m + (−iλ)^m`, the expansion of `e^{iλF} + e^{−iλF}`.
    Even,
    /// `(iλ)^m − (−iλ)^m`, the literal printed form of the hierarchy.
    Odd,
}

impl SignConvention {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Even => "even",
            Self::Odd => "odd",
        }
    }

    /// `s(m)` multiplying `λ^m`-order terms.
    pub fn weight(&self, m: usize, lambda: f64) -> Complex64 {
        let lm = lambda.powi(m as i32);
        match self {
            Self::Even => (i_power(m, 1) + i_power(m, -1)) * lm,
            Self::Odd => (i_power(m, 1) - i_power(m, -1)) * lm,
        }
    }
}

impl core::str::FromStr for SignConvention {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s {
            "even" => Ok(Self::Even),
            "odd-paper-literal" | "odd" => Ok(Self::Odd),
            other => Err(format!("unknown sign convention `{other}` (expected `even` or `odd`)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    /// Exponential coupling `S (e^{iλF} + e^{−iλF})`.
    Pcl,
    /// Linear coupling `S F`.
    Cl,
}

impl CouplingKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Pcl => "pcl",
            Self::Cl => "cl",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingEntry {
    pub column: usize,
    pub left: Complex64,
    pub right: Complex64,
}

#[derive(Debug, Clone)]
pub struct CouplingTable {
    pub kind: CouplingKind,
    pub convention: SignConvention,
    pub g: f64,
    pub lambda: f64,
    pub rows: Vec<Vec<CouplingEntry>>,
}

impl CouplingTable {
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn entry(&self, row: usize, column: usize) -> Option<&CouplingEntry> {
        self.rows[row].iter().find(|e| e.column == column)
    }

    /// Plain-text dump, one line per entry:
    /// `row column re_left im_left re_right im_right`.
    pub fn dump(&self, indices: &IndexSet) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# coupling={} convention={} g={:e} lambda={:e} rows={} nnz={}",
            self.kind.name(),
            self.convention.name(),
            self.g,
            self.lambda,
            self.rows.len(),
            self.nnz()
        );
        for (r, row) in self.rows.iter().enumerate() {
            for e in row {
                let _ = writeln!(
                    out,
                    "{} {} {:.17e} {:.17e} {:.17e} {:.17e}",
                    indices.get(r),
                    indices.get(e.column),
                    e.left.re,
                    e.left.im,
                    e.right.re,
                    e.right.im
                );
            }
        }
        out
    }
}

/// Sum over admissible contraction vectors `l` of
/// `s(m) Π_k η_k^{l_k} C(n_k, l_k) / (m_k − l_k)!` with `m_k = n'_k − n_k + 2 l_k`.
fn pcl_weight(
    row: &[u16],
    column: &[u16],
    etas: &[Complex64],
    lambda: f64,
    convention: SignConvention,
) -> Complex64 {
    let k = row.len();
    let lower: Vec<usize> = (0..k).map(|q| (row[q] as usize).saturating_sub(column[q] as usize)).collect();
    let mut l: Vec<usize> = lower.clone();
    let mut total = ZERO;
    loop {
        let mut m = 0usize;
        let mut product = ONE;
        for q in 0..k {
            let n = row[q] as usize;
            let m_q = column[q] as usize + 2 * l[q] - n;
            m += m_q;
            product *= etas[q].powu(l[q] as u32) * (binomial(n, l[q]) / factorial(m_q - l[q]));
        }
        total += convention.weight(m, lambda) * product;
        // odometer over l_q ∈ [lower_q, n_q]
        let mut q = 0;
        loop {
            if q == k {
                return total;
            }
            if l[q] < row[q] as usize {
                l[q] += 1;
                break;
            }
            l[q] = lower[q];
            q += 1;
        }
    }
}

/// Coupling table of the exponential (phase-type) hierarchy.
///
/// Every pair of rows within the truncation is visited; for a fixed target
/// `n'` the contraction sum over `l` is finite because `l_k ≤ n_k`.
pub fn build_pcl_coupling(
    spec: &DissipatonSpectrum,
    lambda: f64,
    indices: &IndexSet,
    convention: SignConvention,
) -> CouplingTable {
    assert_eq!(spec.len(), indices.modes(), "spectrum size must match the index set");
    let g = spec.g_factor(lambda);
    let forward: Vec<Complex64> = spec.eta().to_vec();
    let backward: Vec<Complex64> = (0..spec.len()).map(|k| spec.eta_backward(k)).collect();
    let parity = match convention {
        SignConvention::Even => 0,
        SignConvention::Odd => 1,
    };
    let mut rows: Vec<Vec<CouplingEntry>> = Vec::with_capacity(indices.len());
    for n in indices.iter() {
        let mut row = Vec::new();
        for (col, np) in indices.iter().enumerate() {
            if (n.tier() + np.tier()) % 2 != parity {
                continue;
            }
            let left = pcl_weight(n.counts(), np.counts(), &forward, lambda, convention) * g;
            let right = pcl_weight(n.counts(), np.counts(), &backward, lambda, convention) * g;
            row.push(CouplingEntry { column: col, left, right });
        }
        rows.push(row);
    }
    let scale = rows
        .iter()
        .flatten()
        .map(|e| e.left.norm().max(e.right.norm()))
        .fold(0.0, f64::max);
    let floor = PRUNE_THRESHOLD * scale;
    for row in rows.iter_mut() {
        row.retain(|e| e.left.norm() > floor || e.right.norm() > floor);
    }
    CouplingTable { kind: CouplingKind::Pcl, convention, g, lambda, rows }
}

/// Nearest-tier table of the linear-coupling hierarchy:
/// `−i Σ_k [S, ρ_{n_k^+}] − i Σ_k n_k (η_k S ρ_{n_k^−} − conj(η_k̄) ρ_{n_k^−} S)`.
pub fn build_cl_coupling(spec: &DissipatonSpectrum, indices: &IndexSet) -> CouplingTable {
    assert_eq!(spec.len(), indices.modes(), "spectrum size must match the index set");
    let mut rows = Vec::with_capacity(indices.len());
    for n in indices.iter() {
        let mut row = Vec::new();
        for k in 0..indices.modes() {
            if let Some(col) = n.shifted(k, 1).and_then(|up| indices.index_lookup(up.counts())) {
                row.push(CouplingEntry { column: col, left: ONE, right: ONE });
            }
            let nk = n.counts()[k];
            if nk > 0 {
                let down = n.shifted(k, -1).expect("n_k > 0");
                let col = indices.index_lookup(down.counts()).expect("lower tier is inside the truncation");
                row.push(CouplingEntry {
                    column: col,
                    left: spec.eta()[k] * nk as f64,
                    right: spec.eta_backward(k) * nk as f64,
                });
            }
        }
        rows.push(row);
    }
    CouplingTable { kind: CouplingKind::Cl, convention: SignConvention::Even, g: 1.0, lambda: 0.0, rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{discrete_mode_decompose, matsubara_decompose_drude, SpectralDensity};

    fn counts(v: &[u16]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn single_mode_spectrum(eta: Complex64) -> DissipatonSpectrum {
        DissipatonSpectrum::new(vec![eta], vec![Complex64::new(1.0, 0.0)], vec![0], 1.0).unwrap()
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_indices(1, 2), vec![counts(&[0]), counts(&[1]), counts(&[2])]);
        assert_eq!(enumerate_indices(2, 1), vec![counts(&[0, 0]), counts(&[1, 0]), counts(&[0, 1])]);
        assert_eq!(enumerate_indices(2, 6).len(), 28);
        assert_eq!(enumerate_indices(3, 4).len(), binomial(7, 3) as usize);
    }

    #[test]
    fn lookup_examples() {
        let set = IndexSet::new(2, 6);
        assert_eq!(set.index_lookup(&[0, 0]), Some(0));
        assert!(set.index_lookup(&[6, 0]).is_some());
        assert_eq!(set.index_lookup(&[7, 0]), None);
        for (i, n) in set.iter().enumerate() {
            assert_eq!(set.index_lookup(n.counts()), Some(i));
        }
    }

    #[test]
    fn pcl_table_examples() {
        let eta = Complex64::new(0.8, -0.3);
        let spec = single_mode_spectrum(eta);
        let lambda = 0.5;
        let set = IndexSet::new(1, 6);
        let table = build_pcl_coupling(&spec, lambda, &set, SignConvention::Even);
        let g = table.g;
        let e00 = table.entry(0, 0).unwrap();
        assert!((e00.left - Complex64::new(2.0 * g, 0.0)).norm() < 1e-15);
        assert_eq!(e00.left, e00.right);
        let e02 = table.entry(0, 2).unwrap();
        assert!((e02.left - Complex64::new(-g * lambda * lambda, 0.0)).norm() < 1e-15);
        let e11 = table.entry(1, 1).unwrap();
        let expected = (Complex64::new(2.0, 0.0) - eta * (2.0 * lambda * lambda)) * g;
        assert!((e11.left - expected).norm() < 1e-15);
        let expected_right = (Complex64::new(2.0, 0.0) - eta.conj() * (2.0 * lambda * lambda)) * g;
        assert!((e11.right - expected_right).norm() < 1e-15);
    }

    #[test]
    fn parity_selection() {
        let spec = matsubara_decompose_drude(&SpectralDensity::drude(1.0, 1.0).unwrap(), 0.5, 2).unwrap();
        let set = IndexSet::new(2, 5);
        for (convention, parity) in [(SignConvention::Even, 0), (SignConvention::Odd, 1)] {
            let table = build_pcl_coupling(&spec, 0.7, &set, convention);
            assert!(table.nnz() > 0);
            for (r, row) in table.rows.iter().enumerate() {
                for e in row {
                    assert_eq!((set.get(r).tier() + set.get(e.column).tier()) % 2, parity);
                }
            }
        }
    }

    #[test]
    fn vanishing_lambda_limit() {
        let spec = discrete_mode_decompose(1.0, 0.4, 0.5).unwrap();
        let set = IndexSet::new(2, 4);
        let even = build_pcl_coupling(&spec, 0.0, &set, SignConvention::Even);
        assert_eq!(even.g, 1.0);
        for (r, row) in even.rows.iter().enumerate() {
            assert_eq!(row.len(), 1);
            assert_eq!(row[0].column, r);
            assert_eq!(row[0].left, Complex64::new(2.0, 0.0));
            assert_eq!(row[0].right, Complex64::new(2.0, 0.0));
        }
        let odd = build_pcl_coupling(&spec, 0.0, &set, SignConvention::Odd);
        assert_eq!(odd.nnz(), 0);
    }

    #[test]
    fn trace_row_is_symmetric() {
        let spec = matsubara_decompose_drude(&SpectralDensity::drude(1.0, 1.0).unwrap(), 0.5, 3).unwrap();
        let set = IndexSet::new(3, 4);
        for convention in [SignConvention::Even, SignConvention::Odd] {
            let table = build_pcl_coupling(&spec, 1.1, &set, convention);
            for e in &table.rows[0] {
                assert_eq!(e.left, e.right);
            }
        }
    }

    #[test]
    fn cl_table_structure() {
        let spec = discrete_mode_decompose(1.0, 0.4, 0.5).unwrap();
        let set = IndexSet::new(2, 3);
        let table = build_cl_coupling(&spec, &set);
        let row0 = &table.rows[0];
        assert_eq!(row0.len(), 2);
        for e in row0 {
            assert_eq!(set.get(e.column).tier(), 1);
            assert_eq!((e.left, e.right), (ONE, ONE));
        }
        let r = set.index_lookup(&[1, 0]).unwrap();
        let down = table.entry(r, 0).unwrap();
        assert_eq!(down.left, spec.eta()[0]);
        assert_eq!(down.right, spec.eta()[spec.pair()[0]].conj());
        for (r, row) in table.rows.iter().enumerate() {
            for e in row {
                let dt = set.get(r).tier() as i64 - set.get(e.column).tier() as i64;
                assert_eq!(dt.abs(), 1);
            }
        }
    }

    #[test]
    fn conjugate_map_is_involution() {
        let spec = discrete_mode_decompose(1.0, 0.4, 0.5).unwrap();
        let set = IndexSet::new(2, 5);
        let map = set.conjugate_map(spec.pair());
        for (i, &j) in map.iter().enumerate() {
            assert_eq!(map[j], i);
            assert_eq!(set.get(i).counts()[0], set.get(j).counts()[1]);
        }
    }

    #[test]
    fn dump_lists_every_entry() {
        let spec = discrete_mode_decompose(1.0, 0.4, 0.5).unwrap();
        let set = IndexSet::new(2, 2);
        let table = build_pcl_coupling(&spec, 0.5, &set, SignConvention::Even);
        let text = table.dump(&set);
        assert_eq!(text.lines().count(), table.nnz() + 1);
        assert!(text.starts_with("# coupling=pcl convention=even"));
    }
}
