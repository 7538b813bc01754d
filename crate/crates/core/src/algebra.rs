//! Single-dissipaton algebra under the generalized normal ordering `O(·)`.
//!
//! Two coefficient bases are used:
//!
//! - [`PowerPolynomial`]: `Σ_j c_j f^j` in plain powers of the dissipaton operator.
//! - [`OrderedPolynomial`]: `Σ_j c_j O(f^j)` in ordered monomials.
//!
//! The bridge between the two is the Hermite family
//! `H_n(f) = d^n/dz^n exp(z f − η z²/2) |_{z=0}` with `O(f^n) = H_n(f)`.
//! Right-acting (`f^<`) quantities use the same functions with `η` replaced
//! by the backward coefficient `conj(η_k̄)`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest argument for which `n!` is finite in `f64`.
pub const MAX_FACTORIAL: usize = 170;

pub fn factorial(n: usize) -> f64 {
    assert!(n <= MAX_FACTORIAL, "factorial argument {n} overflows f64");
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `(i·σ)^m` for `σ = ±1`, computed exactly from `m mod 4`.
pub fn i_power(m: usize, sign: i32) -> Complex64 {
    let q = if sign >= 0 { m % 4 } else { (4 - m % 4) % 4 };
    match q {
        0 => ONE,
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Coefficients in plain powers `f^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerPolynomial(pub Vec<Complex64>);

/// Coefficients over ordered monomials `O(f^j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedPolynomial(pub Vec<Complex64>);

macro_rules! coefficient_vector {
    ($ty:ident) => {
        impl $ty {
            pub fn zero() -> Self {
                Self(Vec::new())
            }

            pub fn monomial(degree: usize, coefficient: Complex64) -> Self {
                let mut c = vec![ZERO; degree + 1];
                c[degree] = coefficient;
                Self(c)
            }

            /// Coefficient of degree `j` (zero outside the support).
            pub fn coeff(&self, j: usize) -> Complex64 {
                self.0.get(j).copied().unwrap_or(ZERO)
            }

            pub fn degree(&self) -> Option<usize> {
                self.0.iter().rposition(|c| *c != ZERO)
            }

            pub fn add_scaled(&mut self, other: &Self, scale: Complex64) {
                if self.0.len() < other.0.len() {
                    self.0.resize(other.0.len(), ZERO);
                }
                for (a, b) in self.0.iter_mut().zip(&other.0) {
                    *a += *b * scale;
                }
            }

            pub fn max_abs_diff(&self, other: &Self) -> f64 {
                let n = self.0.len().max(other.0.len());
                (0..n)
                    .map(|j| (self.coeff(j) - other.coeff(j)).norm())
                    .fold(0.0, f64::max)
            }
        }
    };
}

coefficient_vector!(PowerPolynomial);
coefficient_vector!(OrderedPolynomial);

impl PowerPolynomial {
    pub fn mul(&self, other: &Self) -> Self {
        if self.0.is_empty() || other.0.is_empty() {
            return Self::zero();
        }
        let mut out = vec![ZERO; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self(out)
    }

    /// Evaluates the polynomial at a scalar stand-in for `f`.
    pub fn eval(&self, f: Complex64) -> Complex64 {
        self.0.iter().rev().fold(ZERO, |acc, c| acc * f + c)
    }

    /// Re-expresses a power-basis polynomial in ordered monomials.
    pub fn to_ordered(&self, eta: Complex64) -> OrderedPolynomial {
        let mut out = OrderedPolynomial::zero();
        for (n, c) in self.0.iter().enumerate() {
            if *c != ZERO {
                out.add_scaled(&power_to_ordered(n, eta), *c);
            }
        }
        out
    }
}

impl OrderedPolynomial {
    /// Re-expresses ordered monomials in plain powers via `O(f^n) = H_n(f)`.
    pub fn to_power(&self, eta: Complex64) -> PowerPolynomial {
        let mut out = PowerPolynomial::zero();
        for (n, c) in self.0.iter().enumerate() {
            if *c != ZERO {
                out.add_scaled(&hermite_expand(n, eta), *c);
            }
        }
        out
    }

    /// Product of two ordered polynomials, term by term through [`ordered_product`].
    pub fn mul(&self, other: &Self, eta: Complex64) -> Self {
        let mut out = Self::zero();
        for (m, a) in self.0.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            for (n, b) in other.0.iter().enumerate() {
                if *b != ZERO {
                    out.add_scaled(&ordered_product(m, n, eta), a * b);
                }
            }
        }
        out
    }
}

/// Power-basis coefficients of `H_n(f)` from
/// `H_{n+1} = f H_n − η n H_{n−1}`, `H_0 = 1`, `H_1 = f`.
pub fn hermite_expand(n: usize, eta: Complex64) -> PowerPolynomial {
    let mut prev: Vec<Complex64> = vec![ONE];
    if n == 0 {
        return PowerPolynomial(prev);
    }
    let mut cur: Vec<Complex64> = vec![ZERO, ONE];
    for k in 1..n {
        let mut next = vec![ZERO; k + 2];
        for (j, c) in cur.iter().enumerate() {
            next[j + 1] += c;
        }
        let scale = eta * k as f64;
        for (j, c) in prev.iter().enumerate() {
            next[j] -= scale * c;
        }
        prev = core::mem::replace(&mut cur, next);
    }
    PowerPolynomial(cur)
}

/// Expansion of the plain power `f^n` over ordered monomials, from
/// `f^n = i^{−n} O[H_n(i f)]`.
pub fn power_to_ordered(n: usize, eta: Complex64) -> OrderedPolynomial {
    let h = hermite_expand(n, eta);
    // H_n(i f) puts i^j on the f^j coefficient; the prefactor i^{−n} leaves i^{j−n}.
    let coeffs = h
        .0
        .iter()
        .enumerate()
        .map(|(j, c)| {
            if *c == ZERO {
                ZERO
            } else {
                c * i_power(n - j, -1)
            }
        })
        .collect();
    OrderedPolynomial(coeffs)
}

/// `O(f^m) O(f^n) = Σ_l C(m,l) C(n,l) η^l l! O(f^{m+n−2l})`.
pub fn ordered_product(m: usize, n: usize, eta: Complex64) -> OrderedPolynomial {
    let mut out = vec![ZERO; m + n + 1];
    let mut eta_l = ONE;
    for l in 0..=m.min(n) {
        out[m + n - 2 * l] += eta_l * (binomial(m, l) * binomial(n, l) * factorial(l));
        eta_l *= eta;
    }
    OrderedPolynomial(out)
}

/// Ordered expansion of `O(f^n) e^{±iλf}` truncated to output degrees
/// `≤ max_degree`:
///
/// `e^{−ηλ²/2} Σ_{m,l} (±iλ)^m η^l / (m−l)! · C(n,l) · O(f^{n+m−2l})`.
///
/// For a fixed output degree `j` the admissible `(m, l)` satisfy
/// `m = j − n + 2l`, `max(0, n−j) ≤ l ≤ n`, so every coefficient is a finite sum.
pub fn exp_contraction(n: usize, lambda: f64, eta: Complex64, sign: i32, max_degree: usize) -> OrderedPolynomial {
    let prefactor = (-eta * (lambda * lambda / 2.0)).exp();
    let mut out = vec![ZERO; max_degree + 1];
    for (j, slot) in out.iter_mut().enumerate() {
        let mut acc = ZERO;
        for l in n.saturating_sub(j)..=n {
            let m = j + 2 * l - n;
            let term = i_power(m, sign) * lambda.powi(m as i32) * eta.powu(l as u32) * binomial(n, l)
                / factorial(m - l);
            acc += term;
        }
        *slot = prefactor * acc;
    }
    OrderedPolynomial(out)
}
