//! Adaptive Gauss–Kronrod (7/15) quadrature for complex integrands and a Wynn
//! epsilon accelerator for oscillatory tails.

#![allow(clippy::excessive_precision)]

use alloc::vec::Vec;

use crate::Complex64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod evaluation with its embedded 7-point Gauss estimate.
pub(crate) fn gk15(f: &impl Fn(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let kronrod = kronrod * half;
    let gauss = gauss * half;
    (kronrod, (kronrod - gauss).norm())
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct QuadOutcome {
    pub value: Complex64,
    pub error: f64,
    pub subdivisions: usize,
    pub converged: bool,
}

/// Globally adaptive bisection on `[a, b]` until the summed error estimate
/// falls below `abs_tol` or `max_subdivisions` intervals are in use.
pub(crate) fn integrate(
    f: &impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> QuadOutcome {
    struct Piece {
        a: f64,
        b: f64,
        value: Complex64,
        error: f64,
    }
    let (value, error) = gk15(f, a, b);
    let mut pieces = Vec::with_capacity(64);
    pieces.push(Piece { a, b, value, error });
    let mut total_error = error;
    while total_error > abs_tol && pieces.len() < max_subdivisions {
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let piece = pieces.swap_remove(worst);
        let mid = 0.5 * (piece.a + piece.b);
        if mid <= piece.a || mid >= piece.b {
            // Interval can no longer be split in floating point.
            pieces.push(piece);
            break;
        }
        let (lv, le) = gk15(f, piece.a, mid);
        let (rv, re) = gk15(f, mid, piece.b);
        total_error += le + re - piece.error;
        pieces.push(Piece { a: piece.a, b: mid, value: lv, error: le });
        pieces.push(Piece { a: mid, b: piece.b, value: rv, error: re });
    }
    let total_error: f64 = pieces.iter().map(|p| p.error).sum();
    QuadOutcome {
        value: pieces.iter().map(|p| p.value).sum(),
        error: total_error,
        subdivisions: pieces.len(),
        converged: total_error <= abs_tol,
    }
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums; returns
/// the most advanced even-column estimate and the change from the previous
/// one.
pub(crate) fn wynn_epsilon(partial_sums: &[Complex64]) -> (Complex64, f64) {
    let n = partial_sums.len();
    if n < 3 {
        let last = partial_sums[n - 1];
        let prev = if n > 1 { partial_sums[n - 2] } else { last };
        return (last, (last - prev).norm());
    }
    // Columns of the epsilon table; column 0 is the raw partial sums.
    let mut prev_col: Vec<Complex64> = Vec::new(); // column k - 1
    let mut col: Vec<Complex64> = partial_sums.to_vec(); // column k
    let mut best = col[n - 1];
    let mut best_prev = col[n - 2];
    let mut k = 0;
    loop {
        if col.len() < 2 {
            break;
        }
        let mut next = Vec::with_capacity(col.len() - 1);
        for i in 0..col.len() - 1 {
            let diff = col[i + 1] - col[i];
            let base = if k == 0 { Complex64::new(0.0, 0.0) } else { prev_col[i + 1] };
            if diff.norm() == 0.0 {
                // Converged exactly; stop extending the table.
                return (col[i + 1], 0.0);
            }
            next.push(base + diff.inv());
        }
        k += 1;
        prev_col = core::mem::replace(&mut col, next);
        if k % 2 == 0 && col.len() >= 2 {
            best = col[col.len() - 1];
            best_prev = col[col.len() - 2];
        }
    }
    (best, (best - best_prev).norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_rule_is_exact_for_degree_22() {
        // Σ w = 2 and odd moments vanish by symmetry; check even moments.
        for p in (0..=22).step_by(2) {
            let f = |x: f64| Complex64::new(x.powi(p), 0.0);
            let (v, _) = gk15(&f, -1.0, 1.0);
            let exact = 2.0 / (p as f64 + 1.0);
            assert!((v.re - exact).abs() < 1e-14, "degree {p}: {} vs {exact}", v.re);
        }
    }

    #[test]
    fn gauss_rule_is_exact_for_degree_13() {
        for p in (0..=12).step_by(2) {
            let f = |x: f64| Complex64::new(x.powi(p), 0.0);
            let (_, err) = gk15(&f, -1.0, 1.0);
            assert!(err < 1e-14, "degree {p}: embedded error {err}");
        }
    }

    #[test]
    fn adaptive_integration_of_peaked_function() {
        let f = |x: f64| Complex64::new(1.0 / (1e-4 + x * x), x.cos());
        let out = integrate(&f, -1.0, 1.0, 1e-10, 2000);
        assert!(out.converged);
        let exact_re = 2.0 / 1e-2 * (1.0f64 / 1e-2).atan();
        let exact_im = 2.0 * 1.0f64.sin();
        assert!((out.value.re - exact_re).abs() < 1e-8);
        assert!((out.value.im - exact_im).abs() < 1e-12);
    }

    #[test]
    fn wynn_accelerates_alternating_harmonic_series() {
        let mut sums = Vec::new();
        let mut acc = 0.0;
        for k in 1..=20 {
            acc += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
            sums.push(Complex64::new(acc, 0.0));
        }
        let (v, _) = wynn_epsilon(&sums);
        assert!((v.re - core::f64::consts::LN_2).abs() < 1e-12, "{}", v.re);
    }
}
