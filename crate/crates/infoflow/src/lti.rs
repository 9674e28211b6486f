//! Polynomial and rational transfer-function algebra for discrete-time LTI
//! loops: validation, stability, frequency response, sensitivity, impulse
//! response. Everything is expressed in ascending powers of z⁻¹.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::TAU;
use std::fmt;

/// Closed-loop poles must satisfy |z| < 1 − STABILITY_MARGIN.
pub const STABILITY_MARGIN: f64 = 1e-8;

/// A and B sharing a root closer than this counts as a hidden cancellation.
pub const CANCELLATION_TOL: f64 = 1e-9;

/// Real polynomial c₀ + c₁z⁻¹ + … + c_d z⁻ᵈ, trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: vec![0.0] }
    }

    pub fn one() -> Self {
        Polynomial { coeffs: vec![1.0] }
    }

    /// Builds ∏ (1 − rₖ z⁻¹) from the desired z-plane roots. Imaginary parts
    /// must cancel (conjugate-closed root sets); they are dropped after a
    /// consistency check.
    pub fn from_z_roots(roots: &[Complex64]) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (k, c) in acc.iter().enumerate() {
                next[k] += c;
                next[k + 1] -= c * r;
            }
            acc = next;
        }
        let scale: f64 = acc.iter().map(|c| c.norm()).fold(1.0, f64::max);
        debug_assert!(
            acc.iter().all(|c| c.im.abs() <= 1e-9 * scale),
            "root set not conjugate-closed"
        );
        Polynomial::new(acc.into_iter().map(|c| c.re).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of z⁻ᵏ (zero beyond the stored degree).
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs == [0.0]
    }

    /// Evaluates at z = e^{j2πθ}, i.e. the Horner sum Σ cₖ e^{−j2πθk}.
    pub fn eval_unit_circle(&self, theta: f64) -> Complex64 {
        let w = Complex64::from_polar(1.0, -TAU * theta);
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * w + c;
        }
        acc
    }

    pub fn scale(&self, s: f64) -> Self {
        Polynomial::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn sub(&self, other: &Polynomial) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Polynomial::new((0..len).map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    pub fn mul(&self, other: &Polynomial) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| match k {
                0 => format!("{c}"),
                1 => format!("{c}·z⁻¹"),
                _ => format!("{c}·z⁻{k}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// Roots in the z variable of z^d·p(z⁻¹), via companion-matrix eigenvalues.
///
/// When leading z-coefficients vanish (e.g. strictly proper numerators) the
/// z-polynomial simply has lower degree and fewer roots are returned.
pub fn poly_roots(p: &Polynomial) -> Result<Vec<Complex64>> {
    if p.is_zero() {
        return Err(Error::DegeneratePolynomial);
    }
    // Descending powers of z: c₀ z^d + c₁ z^{d−1} + … + c_d.
    let mut desc = p.coeffs.clone();
    while desc.len() > 1 && desc[0] == 0.0 {
        desc.remove(0);
    }
    let m = desc.len() - 1;
    if m == 0 {
        return Ok(Vec::new());
    }
    let lead = desc[0];
    let comp = DMatrix::from_fn(m, m, |i, j| {
        if i == 0 {
            -desc[j + 1] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    Ok(comp.complex_eigenvalues().iter().copied().collect())
}

/// Rational system B/A in z⁻¹, normalized so A(0) = 1, with zero instantaneous
/// feedthrough (B(0) = 0). The zero plant (B ≡ 0) is allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    num: Polynomial,
    den: Polynomial,
}

impl TransferFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DegeneratePolynomial);
        }
        let a0 = den.coeff(0);
        if a0 == 0.0 {
            return Err(Error::NonCausalDenominator);
        }
        let num = num.scale(1.0 / a0);
        let den = den.scale(1.0 / a0);
        if num.coeff(0) != 0.0 {
            return Err(Error::NotStrictlyProper);
        }
        Ok(TransferFunction { num, den })
    }

    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        TransferFunction::new(Polynomial::new(num.to_vec()), Polynomial::new(den.to_vec()))
    }

    /// The open-loop-free plant G = 0.
    pub fn zero() -> Self {
        TransferFunction {
            num: Polynomial::zero(),
            den: Polynomial::one(),
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }
}

/// Full problem instance: plant, channel noise variances, message model.
#[derive(Debug, Clone)]
pub struct FeedbackLoop {
    pub plant: TransferFunction,
    pub sigma_w2: f64,
    pub sigma_v2: f64,
    pub sigma_02: f64,
    /// Message-injection response (θ₁, θ₂, …): x_i gains θ_i·x₀.
    pub theta: Vec<f64>,
}

impl FeedbackLoop {
    pub fn new(
        plant: TransferFunction,
        sigma_w2: f64,
        sigma_v2: f64,
        sigma_02: f64,
        theta: Vec<f64>,
    ) -> Self {
        FeedbackLoop {
            plant,
            sigma_w2,
            sigma_v2,
            sigma_02,
            theta,
        }
    }

    pub fn validate(&self) -> ValidationReport {
        validate_loop(self)
    }

    /// Guard for operations whose precondition is a validated loop.
    pub(crate) fn require_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidLoop(report))
        }
    }
}

/// Every violated invariant of a loop, empty when the loop is usable.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            write!(f, "valid")
        } else {
            write!(f, "{}", self.violations.join("; "))
        }
    }
}

pub fn validate_loop(lp: &FeedbackLoop) -> ValidationReport {
    let mut violations = Vec::new();
    if !(lp.sigma_v2 > 0.0) {
        violations.push(format!(
            "noiseless channel C2: sigma_v2 must be > 0 (got {})",
            lp.sigma_v2
        ));
    }
    if !(lp.sigma_w2 >= 0.0) {
        violations.push(format!("sigma_w2 must be >= 0 (got {})", lp.sigma_w2));
    }
    if !(lp.sigma_02 > 0.0) {
        violations.push(format!("sigma_02 must be > 0 (got {})", lp.sigma_02));
    }
    if lp.theta.iter().any(|t| !t.is_finite()) {
        violations.push("theta contains a non-finite entry".to_string());
    }

    let char_poly = lp.plant.den().sub(lp.plant.num());
    if char_poly.is_zero() {
        violations.push("degenerate loop (G ≡ 1)".to_string());
    } else if let Ok(roots) = poly_roots(&char_poly) {
        for r in &roots {
            if r.norm() >= 1.0 - STABILITY_MARGIN {
                violations.push(format!(
                    "closed loop unstable: pole magnitude {:.9} outside stability margin",
                    r.norm()
                ));
            }
        }
    }

    if !lp.plant.num().is_zero() {
        if let (Ok(poles), Ok(zeros)) = (poly_roots(lp.plant.den()), poly_roots(lp.plant.num())) {
            for p in &poles {
                for z in &zeros {
                    if (p - z).norm() < CANCELLATION_TOL {
                        violations.push(format!(
                            "pole-zero cancellation near z = {:.6}+{:.6}j",
                            p.re, p.im
                        ));
                    }
                }
            }
        }
    }

    ValidationReport { violations }
}

/// G(e^{j2πθ}) = B(e^{−j2πθ}) / A(e^{−j2πθ}).
pub fn freq_response(g: &TransferFunction, theta: f64) -> Result<Complex64> {
    let den = g.den().eval_unit_circle(theta);
    if den.norm() < 1e-12 {
        return Err(Error::OpenLoopPoleOnCircle { theta });
    }
    Ok(g.num().eval_unit_circle(theta) / den)
}

/// Sensitivity S(e^{j2πθ}) = A/(A−B) = 1/(1−G) under the loop equations
/// e = x + w + v, x = G·e.
pub fn sensitivity(g: &TransferFunction, theta: f64) -> Result<Complex64> {
    let a = g.den().eval_unit_circle(theta);
    let c = g.den().sub(g.num()).eval_unit_circle(theta);
    if c.norm() < 1e-12 {
        return Err(Error::ClosedLoopPoleOnCircle { theta });
    }
    Ok(a / c)
}

/// A − B in canonical trimmed form; its z-roots are the closed-loop poles.
pub fn closed_loop_char_poly(g: &TransferFunction) -> Result<Polynomial> {
    let c = g.den().sub(g.num());
    if c.is_zero() {
        return Err(Error::DegenerateLoop);
    }
    Ok(c)
}

/// First `len` coefficients of the causal series num/den (den₀ ≠ 0).
pub(crate) fn expand_series(num: &Polynomial, den: &Polynomial, len: usize) -> Vec<f64> {
    let d0 = den.coeff(0);
    debug_assert!(d0 != 0.0);
    let mut h = vec![0.0; len];
    for i in 0..len {
        let mut acc = num.coeff(i);
        let kmax = den.degree().min(i);
        for k in 1..=kmax {
            acc -= den.coeff(k) * h[i - k];
        }
        h[i] = acc / d0;
    }
    h
}

/// Impulse response (g₁, …, g_n) of G = B/A; g₀ = 0 by strict properness.
pub fn impulse_response(g: &TransferFunction, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::EmptyHorizon);
    }
    let full = expand_series(g.num(), g.den(), n + 1);
    debug_assert_eq!(full[0], 0.0);
    Ok(full[1..].to_vec())
}
