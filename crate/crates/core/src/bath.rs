//! Bath spectral densities, correlation functions and their exponential
//! (dissipaton) decompositions `C(t) = Σ_k η_k e^{−γ_k t}`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DVector;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg;
use crate::quad;
use crate::{CMatrix, Complex64};

/// Relative tolerance on `|Im Σ η| / |Re Σ η|` above which a warning is raised.
pub const DEFAULT_IMAG_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralDensity {
    /// `J(ω) = ξ ω / (ω² + γ²)`.
    Drude { xi: f64, gamma_c: f64 },
    /// A single harmonic mode of frequency `ω₀` entering `F` with weight `c`.
    DiscreteMode { omega0: f64, c: f64 },
}

impl SpectralDensity {
    pub fn drude(xi: f64, gamma_c: f64) -> Result<Self> {
        if !(xi >= 0.0) || !(gamma_c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Drude density needs xi >= 0 and gamma_c > 0 (got xi = {xi}, gamma_c = {gamma_c})"
            )));
        }
        Ok(Self::Drude { xi, gamma_c })
    }

    pub fn discrete_mode(omega0: f64, c: f64) -> Result<Self> {
        if !(omega0 > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "discrete mode needs omega0 > 0 (got {omega0}) and finite c"
            )));
        }
        Ok(Self::DiscreteMode { omega0, c })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Drude { .. } => "drude",
            Self::DiscreteMode { .. } => "discrete_mode",
        }
    }
}

pub fn spectral_density_eval(sd: &SpectralDensity, omega: f64) -> Result<f64> {
    match *sd {
        SpectralDensity::Drude { xi, gamma_c } => Ok(xi * omega / (omega * omega + gamma_c * gamma_c)),
        SpectralDensity::DiscreteMode { .. } => Err(Error::UnsupportedEvaluation("discrete_mode")),
    }
}

/// Exponential decomposition of a bath correlation function.
///
/// `pair[k]` is the index `k̄` with `γ_k̄ = conj(γ_k)`; the backward
/// correlation is `C*(t) = Σ_k conj(η_k̄) e^{−γ_k t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipatonSpectrum {
    eta: Vec<Complex64>,
    gamma: Vec<Complex64>,
    pair: Vec<usize>,
    beta: f64,
}

impl DissipatonSpectrum {
    /// Builds and validates a spectrum; fails on any structural invariant.
    pub fn new(eta: Vec<Complex64>, gamma: Vec<Complex64>, pair: Vec<usize>, beta: f64) -> Result<Self> {
        let spec = Self::new_unchecked(eta, gamma, pair, beta)?;
        validate_spectrum(&spec, DEFAULT_IMAG_TOLERANCE)?;
        Ok(spec)
    }

    /// Builds a spectrum checking only that the term arrays line up.
    pub fn new_unchecked(eta: Vec<Complex64>, gamma: Vec<Complex64>, pair: Vec<usize>, beta: f64) -> Result<Self> {
        if eta.is_empty() || eta.len() != gamma.len() || eta.len() != pair.len() {
            return Err(Error::InvalidParameter(format!(
                "spectrum arrays must be non-empty and equal length (eta {}, gamma {}, pair {})",
                eta.len(),
                gamma.len(),
                pair.len()
            )));
        }
        Ok(Self { eta, gamma, pair, beta })
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    pub fn eta(&self) -> &[Complex64] {
        &self.eta
    }

    pub fn gamma(&self) -> &[Complex64] {
        &self.gamma
    }

    pub fn pair(&self) -> &[usize] {
        &self.pair
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Backward coefficient `conj(η_k̄)`.
    pub fn eta_backward(&self, k: usize) -> Complex64 {
        self.eta[self.pair[k]].conj()
    }

    pub fn sum_eta(&self) -> Complex64 {
        self.eta.iter().sum()
    }

    /// `Σ_k η_k e^{−γ_k t}`.
    pub fn correlation(&self, t: f64) -> Complex64 {
        self.eta.iter().zip(&self.gamma).map(|(e, g)| e * (-g * t).exp()).sum()
    }

    /// `Σ_k conj(η_k̄) e^{−γ_k t}`, which should equal `conj(C(t))`.
    pub fn backward_correlation(&self, t: f64) -> Complex64 {
        (0..self.len()).map(|k| self.eta_backward(k) * (-self.gamma[k] * t).exp()).sum()
    }

    /// `g = exp(−λ² Re(Σ_k η_k) / 2)`, always from the working spectrum.
    pub fn g_factor(&self, lambda: f64) -> f64 {
        (-lambda * lambda * self.sum_eta().re / 2.0).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub sum_eta: Complex64,
    /// `|Im Σ η| / |Re Σ η|`.
    pub imag_residue: f64,
    pub warnings: Vec<String>,
}

impl SpectrumReport {
    pub fn g(&self, lambda: f64) -> f64 {
        (-lambda * lambda * self.sum_eta.re / 2.0).exp()
    }
}

/// Checks the pairing involution, the exact conjugate-exponent relation and
/// `Re γ ≥ 0`. A non-negligible `Im Σ η` is reported as a warning; it is
/// dropped when `g` is formed.
pub fn validate_spectrum(spec: &DissipatonSpectrum, imag_tolerance: f64) -> Result<SpectrumReport> {
    let k = spec.len();
    for (i, &p) in spec.pair.iter().enumerate() {
        if p >= k {
            return Err(Error::Validation {
                check: "pair-range",
                detail: format!("pair[{i}] = {p} is out of range for K = {k}"),
            });
        }
        if spec.pair[p] != i {
            return Err(Error::Validation {
                check: "pair-involution",
                detail: format!("pair[pair[{i}]] = {} != {i}", spec.pair[p]),
            });
        }
        if spec.gamma[p] != spec.gamma[i].conj() {
            return Err(Error::Validation {
                check: "conjugate-exponent",
                detail: format!("gamma[{p}] = {} is not conj(gamma[{i}] = {})", spec.gamma[p], spec.gamma[i]),
            });
        }
    }
    for (i, g) in spec.gamma.iter().enumerate() {
        if !(g.re >= 0.0) || !g.im.is_finite() {
            return Err(Error::Validation {
                check: "decaying-exponent",
                detail: format!("gamma[{i}] = {g} must have a non-negative real part"),
            });
        }
        if !spec.eta[i].re.is_finite() || !spec.eta[i].im.is_finite() {
            return Err(Error::Validation {
                check: "finite-coefficient",
                detail: format!("eta[{i}] = {} is not finite", spec.eta[i]),
            });
        }
    }
    if !(spec.beta > 0.0) {
        return Err(Error::Validation {
            check: "temperature",
            detail: format!("beta = {} must be positive (may be +inf)", spec.beta),
        });
    }
    let sum_eta = spec.sum_eta();
    let imag_residue = if sum_eta.re != 0.0 {
        (sum_eta.im / sum_eta.re).abs()
    } else if sum_eta.im == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let mut warnings = Vec::new();
    if imag_residue > imag_tolerance {
        warnings.push(format!(
            "Im(sum eta) = {:.6e} is {:.3e} of Re(sum eta); dropped when forming g",
            sum_eta.im, imag_residue
        ));
    }
    Ok(SpectrumReport { sum_eta, imag_residue, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Upper frequency of the directly integrated range; `None` selects
    /// `200·max(γ_c, 1/β)`.
    pub cutoff: Option<f64>,
    pub abs_tol: f64,
    /// Subdivision budget per integration panel.
    pub max_subdivisions: usize,
    /// Add the `[cutoff, ∞)` contribution by half-period summation with
    /// epsilon extrapolation (only meaningful for `t > 0`).
    pub oscillatory_tail: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { cutoff: None, abs_tol: 1e-10, max_subdivisions: 200, oscillatory_tail: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `C(t) = ⟨F(t)F(0)⟩`.
    Forward,
    /// `C(−t) = conj(C(t))`.
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdtValue {
    pub value: Complex64,
    pub error_estimate: f64,
    pub cutoff: f64,
    /// False when the result is the cutoff-truncated integral (always at `t = 0`,
    /// where the Drude integral diverges logarithmically in the cutoff).
    pub tail_included: bool,
}

/// `x coth x`, regular at the origin.
fn x_coth_x(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 3.0
    } else {
        x / x.tanh()
    }
}

/// `C(t) = (1/π) ∫ dω e^{−iωt} J(ω) / (1 − e^{−βω})`, evaluated on the
/// folded half-line as
/// `(1/π) ∫_0^∞ [J coth(βω/2) cos ωt − i J sin ωt] dω`.
pub fn correlation_fdt(
    sd: &SpectralDensity,
    beta: f64,
    t: f64,
    branch: Branch,
    cfg: &QuadratureConfig,
) -> Result<FdtValue> {
    let (xi, gamma_c) = match *sd {
        SpectralDensity::Drude { xi, gamma_c } => (xi, gamma_c),
        SpectralDensity::DiscreteMode { .. } => return Err(Error::UnsupportedEvaluation("discrete_mode")),
    };
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("correlation time must be >= 0, got {t}")));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be positive and finite, got {beta}")));
    }
    let cutoff = cfg.cutoff.unwrap_or(200.0 * gamma_c.max(1.0 / beta));
    let integrand = |w: f64| -> Complex64 {
        let lorentz = xi / (w * w + gamma_c * gamma_c);
        // J(ω) coth(βω/2) = ξ/(ω²+γ²) · (2/β) x coth x with x = βω/2.
        let even = lorentz * (2.0 / beta) * x_coth_x(0.5 * beta * w);
        let odd = lorentz * w;
        let (s, c) = (w * t).sin_cos();
        Complex64::new(even * c, -odd * s) / PI
    };

    let mut width = cutoff / 32.0;
    if t > 0.0 {
        width = width.min(PI / t);
    }
    let panels = (cutoff / width).ceil().max(1.0) as usize;
    let panel_tol = cfg.abs_tol / panels as f64;
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    for p in 0..panels {
        let a = cutoff * p as f64 / panels as f64;
        let b = cutoff * (p + 1) as f64 / panels as f64;
        let out = quad::integrate(&integrand, a, b, panel_tol, cfg.max_subdivisions);
        value += out.value;
        error += out.error;
        if !out.converged && out.error > cfg.abs_tol {
            return Err(Error::Accuracy { estimate: value, error, subdivisions: out.subdivisions });
        }
    }

    let mut tail_included = false;
    if cfg.oscillatory_tail && t > 0.0 {
        let half_period = PI / t;
        let mut partial = Vec::new();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut previous: Option<Complex64> = None;
        let mut tail = None;
        for j in 0..600 {
            let a = cutoff + j as f64 * half_period;
            let out = quad::integrate(&integrand, a, a + half_period, cfg.abs_tol * 1e-2, cfg.max_subdivisions);
            acc += out.value;
            partial.push(acc);
            if partial.len() >= 6 {
                let (estimate, _) = quad::wynn_epsilon(&partial);
                if let Some(prev) = previous {
                    let change = (estimate - prev).norm();
                    if change <= cfg.abs_tol {
                        tail = Some((estimate, change));
                        break;
                    }
                }
                previous = Some(estimate);
            }
        }
        match tail {
            Some((estimate, change)) => {
                value += estimate;
                error += change;
                tail_included = true;
            }
            None => {
                return Err(Error::Accuracy {
                    estimate: value + previous.unwrap_or(acc),
                    error: f64::NAN,
                    subdivisions: partial.len(),
                })
            }
        }
    }

    let value = match branch {
        Branch::Forward => value,
        Branch::Backward => value.conj(),
    };
    Ok(FdtValue { value, error_estimate: error, cutoff, tail_included })
}

/// Drude pole plus `K − 1` Matsubara terms from the residues of the
/// fluctuation–dissipation integrand.
pub fn matsubara_decompose_drude(sd: &SpectralDensity, beta: f64, k: usize) -> Result<DissipatonSpectrum> {
    let (xi, gamma_c) = match *sd {
        SpectralDensity::Drude { xi, gamma_c } => (xi, gamma_c),
        SpectralDensity::DiscreteMode { .. } => {
            return Err(Error::InvalidParameter("Matsubara decomposition needs a Drude density".into()))
        }
    };
    if k == 0 {
        return Err(Error::InvalidParameter("at least one exponential term is required".into()));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be positive and finite, got {beta}")));
    }
    let half = 0.5 * beta * gamma_c;
    let nearest = (half / PI).round() * PI;
    if (half - nearest).abs() < 1e-9 {
        return Err(Error::DegeneratePole { frequency: gamma_c });
    }
    let mut eta = Vec::with_capacity(k);
    let mut gamma = Vec::with_capacity(k);
    eta.push(Complex64::new(0.5 * xi / half.tan(), -0.5 * xi));
    gamma.push(Complex64::new(gamma_c, 0.0));
    for n in 1..k {
        let nu = 2.0 * PI * n as f64 / beta;
        if (nu - gamma_c).abs() <= 1e-9 * gamma_c.max(1.0) {
            return Err(Error::DegeneratePole { frequency: nu });
        }
        eta.push(Complex64::new(2.0 * xi * nu / (beta * (nu * nu - gamma_c * gamma_c)), 0.0));
        gamma.push(Complex64::new(nu, 0.0));
    }
    let pair = (0..k).collect();
    DissipatonSpectrum::new(eta, gamma, pair, beta)
}

/// Two-term spectrum of a single harmonic mode, `F = c x`, `H_B = ω₀ a†a`.
pub fn discrete_mode_decompose(omega0: f64, c: f64, beta: f64) -> Result<DissipatonSpectrum> {
    if !(omega0 > 0.0) {
        return Err(Error::InvalidParameter(format!("mode frequency must be positive, got {omega0}")));
    }
    let nbar = bose_occupation(omega0, beta);
    let c2 = c * c;
    DissipatonSpectrum::new(
        vec![Complex64::new(c2 * (nbar + 1.0) / 2.0, 0.0), Complex64::new(c2 * nbar / 2.0, 0.0)],
        vec![Complex64::new(0.0, omega0), Complex64::new(0.0, -omega0)],
        vec![1, 0],
        beta,
    )
}

/// `1 / (e^{βω} − 1)`; zero at `β = ∞`.
pub fn bose_occupation(omega: f64, beta: f64) -> f64 {
    1.0 / (beta * omega).exp_m1()
}

#[derive(Debug, Clone)]
pub struct PronyFit {
    pub spectrum: DissipatonSpectrum,
    /// Root-mean-square deviation of the fitted model over the samples.
    pub residual: f64,
    pub max_abs_error: f64,
}

/// Least-squares multi-exponential fit of uniformly sampled `C(t)`.
///
/// Exponents come from linear prediction; they are reflected to `Re γ ≥ 0`,
/// snapped onto exact conjugate pairs (adding a conjugate partner where
/// one is missing) and the amplitudes are then refitted by least squares,
/// so the returned spectrum can hold more than `k` terms.
pub fn prony_fit(samples: &[(f64, Complex64)], k: usize, beta: f64) -> Result<PronyFit> {
    let n = samples.len();
    if k == 0 {
        return Err(Error::InvalidParameter("at least one exponential term is required".into()));
    }
    if n < 4 * k {
        return Err(Error::InvalidParameter(format!("need at least {} samples for K = {k}, got {n}", 4 * k)));
    }
    let dt = samples[1].0 - samples[0].0;
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("sample times must increase".into()));
    }
    for (j, s) in samples.iter().enumerate() {
        let expected = samples[0].0 + j as f64 * dt;
        if (s.0 - expected).abs() > 1e-9 * dt.max(expected.abs()) {
            return Err(Error::InvalidParameter(format!("sample {j} at t = {} is off the uniform grid", s.0)));
        }
    }
    let y: Vec<Complex64> = samples.iter().map(|s| s.1).collect();

    // y_j = −Σ_{i=1..k} p_i y_{j−i}
    let rows = n - k;
    let mut a = CMatrix::zeros(rows, k);
    let mut b = DVector::zeros(rows);
    for r in 0..rows {
        for i in 1..=k {
            a[(r, i - 1)] = y[k + r - i];
        }
        b[r] = -y[k + r];
    }
    let (p, conditioning) = linalg::least_squares(&a, &b, 1e-14).ok_or_else(|| Error::FitFailure {
        reason: "prediction matrix is zero".into(),
        residual: f64::NAN,
    })?;
    if conditioning < 1e-12 {
        let residual = (&a * &p - &b).norm() / (rows as f64).sqrt();
        return Err(Error::FitFailure {
            reason: format!("rank-deficient Hankel system (sigma_min/sigma_max = {conditioning:.3e})"),
            residual,
        });
    }

    // Roots of z^k + p_1 z^{k−1} + … + p_k from the companion matrix.
    let mut companion = CMatrix::zeros(k, k);
    for i in 0..k {
        companion[(0, i)] = -p[i];
    }
    for i in 1..k {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    let roots = linalg::eigenvalues(&companion).ok_or_else(|| Error::FitFailure {
        reason: "companion eigenvalues did not converge".into(),
        residual: f64::NAN,
    })?;
    let mut exponents = Vec::with_capacity(k);
    for z in roots {
        if z.norm() == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::FitFailure { reason: format!("degenerate prediction root {z}"), residual: f64::NAN });
        }
        let g = -z.ln() / dt;
        exponents.push(Complex64::new(g.re.abs(), g.im));
    }
    let (gamma, pair) = symmetrize_exponents(&exponents);

    // Amplitudes by least squares on the symmetric exponent set.
    let m = gamma.len();
    let mut v = CMatrix::zeros(n, m);
    for (j, s) in samples.iter().enumerate() {
        for (q, g) in gamma.iter().enumerate() {
            v[(j, q)] = (-g * s.0).exp();
        }
    }
    let rhs = DVector::from_vec(y.clone());
    let (eta, _) = linalg::least_squares(&v, &rhs, 1e-14).ok_or_else(|| Error::FitFailure {
        reason: "amplitude system is zero".into(),
        residual: f64::NAN,
    })?;
    let fitted = &v * &eta;
    let mut sq = 0.0;
    let mut max_abs_error = 0.0f64;
    for j in 0..n {
        let d = (fitted[j] - y[j]).norm();
        sq += d * d;
        max_abs_error = max_abs_error.max(d);
    }
    let residual = (sq / n as f64).sqrt();
    let spectrum = DissipatonSpectrum::new_unchecked(eta.iter().copied().collect(), gamma, pair, beta)?;
    validate_spectrum(&spectrum, f64::INFINITY).map_err(|e| Error::FitFailure {
        reason: format!("fitted spectrum failed validation: {e}"),
        residual,
    })?;
    Ok(PronyFit { spectrum, residual, max_abs_error })
}

/// Snaps near-real exponents to the real axis, near-conjugate pairs onto exact
/// conjugates, and appends the conjugate of any unpaired complex exponent.
fn symmetrize_exponents(raw: &[Complex64]) -> (Vec<Complex64>, Vec<usize>) {
    let scale = raw.iter().map(|g| g.norm()).fold(1.0, f64::max);
    let tol = 1e-6 * scale;
    let mut gamma: Vec<Complex64> = Vec::new();
    let mut pair: Vec<usize> = Vec::new();
    let mut used = vec![false; raw.len()];
    for i in 0..raw.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let g = raw[i];
        if g.im.abs() <= tol {
            pair.push(gamma.len());
            gamma.push(Complex64::new(g.re, 0.0));
            continue;
        }
        let partner = (0..raw.len()).find(|&j| !used[j] && (raw[j] - g.conj()).norm() <= tol);
        let snapped = match partner {
            Some(j) => {
                used[j] = true;
                (g + raw[j].conj()) * 0.5
            }
            None => g,
        };
        let a = gamma.len();
        gamma.push(snapped);
        gamma.push(snapped.conj());
        pair.push(a + 1);
        pair.push(a);
    }
    (gamma, pair)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionReport {
    /// `max_t |Σ η e^{−γt} − C_quad(t)|`.
    pub max_abs_error: f64,
    /// `max_t |Σ η e^{−γt} − C_quad(t)| / |C_quad(t)|`.
    pub max_pointwise_relative: f64,
    /// Absolute error normalized by `max_t |C_quad(t)|` on the grid.
    pub max_relative_to_peak: f64,
    /// `max_t |Σ conj(η_k̄) e^{−γt} − conj(C_quad(t))|`, normalized like `max_relative_to_peak`.
    pub backward_relative_to_peak: f64,
}

/// Compares a decomposition against the quadrature correlation on `times`.
pub fn reconstruction_report(
    spec: &DissipatonSpectrum,
    sd: &SpectralDensity,
    times: &[f64],
    cfg: &QuadratureConfig,
) -> Result<ReconstructionReport> {
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    let mut max_back: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for &t in times {
        let reference = correlation_fdt(sd, spec.beta(), t, Branch::Forward, cfg)?.value;
        let d = (spec.correlation(t) - reference).norm();
        max_abs = max_abs.max(d);
        max_rel = max_rel.max(d / reference.norm());
        peak = peak.max(reference.norm());
        max_back = max_back.max((spec.backward_correlation(t) - reference.conj()).norm());
    }
    Ok(ReconstructionReport {
        max_abs_error: max_abs,
        max_pointwise_relative: max_rel,
        max_relative_to_peak: max_abs / peak,
        backward_relative_to_peak: max_back / peak,
    })
}

/// Logarithmically spaced grid on `[t_min, t_max]`.
pub fn log_grid(t_min: f64, t_max: f64, points: usize) -> Vec<f64> {
    assert!(t_min > 0.0 && t_max > t_min && points >= 2);
    let ratio = (t_max / t_min).ln();
    (0..points).map(|i| t_min * (ratio * i as f64 / (points - 1) as f64).exp()).collect()
}
