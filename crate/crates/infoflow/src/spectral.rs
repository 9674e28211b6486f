//! Spectral densities and the frequency-domain integrals: the Gaussian
//! entropy-rate integral ½∫ln(2πe·S) dθ, the log-sensitivity integral
//! ∫ln|S| dθ, and the unstable-pole sum that serves as its classical oracle.
//! Frequencies are cycles/sample, θ ∈ [−½, ½].

use crate::error::{Error, Result};
use crate::exec::{default_parallel, map_indexed};
use crate::lti::{closed_loop_char_poly, poly_roots, sensitivity, FeedbackLoop, TransferFunction};
use std::f64::consts::PI;
use std::sync::Arc;

/// ln(2πe)/2, the entropy rate of unit white Gaussian noise.
pub const HALF_LN_TWO_PI_E: f64 = 1.418_938_533_204_672_7;

/// Poles (open- or closed-loop) closer than this to the unit circle make the
/// log integrand too sharp for the fixed quadrature rule.
pub const QUADRATURE_POLE_MARGIN: f64 = 1e-6;

/// Band around |z| = 1 in which an open-loop pole has no well-defined side
/// for the Bode pole sum.
pub const MARGINAL_POLE_BAND: f64 = 1e-8;

/// Power spectral density of a stationary signal on θ ∈ [−½, ½].
#[derive(Clone)]
pub struct SpectralDensity {
    name: String,
    kind: Kind,
}

#[derive(Clone)]
enum Kind {
    Analytic(Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>),
    Sampled { thetas: Vec<f64>, values: Vec<f64> },
}

impl std::fmt::Debug for SpectralDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            Kind::Analytic(_) => write!(f, "SpectralDensity({}, analytic)", self.name),
            Kind::Sampled { thetas, .. } => {
                write!(f, "SpectralDensity({}, {} samples)", self.name, thetas.len())
            }
        }
    }
}

impl SpectralDensity {
    pub fn from_fn(
        name: impl Into<String>,
        f: impl Fn(f64) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        SpectralDensity {
            name: name.into(),
            kind: Kind::Analytic(Arc::new(f)),
        }
    }

    pub fn constant(name: impl Into<String>, level: f64) -> Self {
        SpectralDensity::from_fn(name, move |_| Ok(level))
    }

    /// Samples on an ascending grid of nonnegative θ; the density is even, so
    /// negative frequencies are evaluated by reflection.
    pub fn from_samples(name: impl Into<String>, thetas: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(thetas.len(), values.len());
        assert!(!thetas.is_empty());
        SpectralDensity {
            name: name.into(),
            kind: Kind::Sampled { thetas, values },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, theta: f64) -> Result<f64> {
        match &self.kind {
            Kind::Analytic(f) => f(theta),
            Kind::Sampled { thetas, values } => {
                let t = theta.abs();
                if t <= thetas[0] {
                    return Ok(values[0]);
                }
                if t >= *thetas.last().unwrap() {
                    return Ok(*values.last().unwrap());
                }
                let hi = thetas.partition_point(|&x| x < t);
                let (t0, t1) = (thetas[hi - 1], thetas[hi]);
                let (v0, v1) = (values[hi - 1], values[hi]);
                let frac = (t - t0) / (t1 - t0);
                Ok(v0 + frac * (v1 - v0))
            }
        }
    }

    /// The raw grid for sampled densities (periodograms); None for analytic.
    pub fn samples(&self) -> Option<(&[f64], &[f64])> {
        match &self.kind {
            Kind::Analytic(_) => None,
            Kind::Sampled { thetas, values } => Some((thetas, values)),
        }
    }
}

/// Composite fixed-order Gauss–Legendre rule over θ ∈ [−½, ½].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    panels: usize,
    nodes_per_panel: usize,
    tol: f64,
}

impl QuadratureSpec {
    pub fn new(panels: usize, nodes_per_panel: usize, tol: f64) -> Result<Self> {
        if panels < 1 {
            return Err(Error::BadQuadratureSpec("panel count must be >= 1"));
        }
        if nodes_per_panel < 2 {
            return Err(Error::BadQuadratureSpec("nodes per panel must be >= 2"));
        }
        if !(tol > 0.0) {
            return Err(Error::BadQuadratureSpec("tolerance must be > 0"));
        }
        Ok(QuadratureSpec {
            panels,
            nodes_per_panel,
            tol,
        })
    }

    pub fn rule(&self) -> &'static str {
        "composite Gauss-Legendre"
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn nodes_per_panel(&self) -> usize {
        self.nodes_per_panel
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }
}

impl Default for QuadratureSpec {
    /// 64 panels × 16 nodes resolves the log-spectra of margin-respecting
    /// rational loops to well below the 1e−9 target.
    fn default() -> Self {
        QuadratureSpec {
            panels: 64,
            nodes_per_panel: 16,
            tol: 1e-9,
        }
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration on P_k.
fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k {
        let mut x = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_k(x) and P'_k(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=k {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// ∫_{−½}^{½} f(θ) dθ with the composite rule; node evaluations may run in
/// parallel but are summed in fixed node order.
pub(crate) fn integrate_with(
    quad: &QuadratureSpec,
    parallel: bool,
    f: impl Fn(f64) -> Result<f64> + Send + Sync,
) -> Result<f64> {
    let (nodes, weights) = gauss_legendre(quad.nodes_per_panel);
    let p = quad.panels;
    let k = quad.nodes_per_panel;
    let half_width = 0.5 / p as f64;
    let terms = map_indexed(p * k, parallel, |idx| {
        let panel = idx / k;
        let node = idx % k;
        let mid = -0.5 + (2 * panel + 1) as f64 * half_width;
        let theta = mid + half_width * nodes[node];
        f(theta).map(|v| weights[node] * half_width * v)
    });
    let mut acc = 0.0;
    for t in terms {
        acc += t?;
    }
    Ok(acc)
}

/// ½∫ ln(2πe·psd(θ)) dθ: the entropy rate of the stationary Gaussian process
/// with this spectral density.
pub fn entropy_rate_from_psd(psd: &SpectralDensity, quad: &QuadratureSpec) -> Result<f64> {
    entropy_rate_from_psd_with(psd, quad, default_parallel())
}

#[doc(hidden)]
pub fn entropy_rate_from_psd_with(
    psd: &SpectralDensity,
    quad: &QuadratureSpec,
    parallel: bool,
) -> Result<f64> {
    integrate_with(quad, parallel, |theta| {
        let v = psd.value(theta)?;
        if !(v > 1e-300) {
            return Err(Error::LogSingularity { theta, value: v });
        }
        Ok(0.5 * (2.0 * PI * std::f64::consts::E * v).ln())
    })
}

/// Power density of the loop error signal e: |S(e^{j2πθ})|²·(σ_v² + σ_w²).
pub fn output_psd(lp: &FeedbackLoop, theta: f64) -> Result<f64> {
    lp.require_valid()?;
    let s = sensitivity(&lp.plant, theta)?;
    Ok(s.norm_sqr() * (lp.sigma_v2 + lp.sigma_w2))
}

/// The e-signal PSD as an evaluator, for entropy-rate integration and CSV
/// export.
pub fn loop_output_psd(lp: &FeedbackLoop) -> Result<SpectralDensity> {
    lp.require_valid()?;
    let plant = lp.plant.clone();
    let level = lp.sigma_v2 + lp.sigma_w2;
    Ok(SpectralDensity::from_fn("e", move |theta| {
        Ok(sensitivity(&plant, theta)?.norm_sqr() * level)
    }))
}

/// ∫ ln|S(e^{j2πθ})| dθ by quadrature. Rejects loops whose open- or
/// closed-loop poles sit within 1e−6 of the unit circle: the integrand is
/// still integrable there, but a fixed-order rule cannot honor the tolerance.
pub fn log_sensitivity_integral(g: &TransferFunction, quad: &QuadratureSpec) -> Result<f64> {
    log_sensitivity_integral_with(g, quad, default_parallel())
}

#[doc(hidden)]
pub fn log_sensitivity_integral_with(
    g: &TransferFunction,
    quad: &QuadratureSpec,
    parallel: bool,
) -> Result<f64> {
    let char_poly = closed_loop_char_poly(g)?;
    let mut all_roots = poly_roots(&char_poly)?;
    all_roots.extend(poly_roots(g.den())?);
    for r in &all_roots {
        if (r.norm() - 1.0).abs() < QUADRATURE_POLE_MARGIN {
            return Err(Error::QuadratureUnreliable {
                magnitude: r.norm(),
                margin: QUADRATURE_POLE_MARGIN,
            });
        }
    }
    let den = g.den().clone();
    integrate_with(quad, parallel, move |theta| {
        // ln|S| = ln|A| − ln|A−B|; both factors are bounded away from zero by
        // the pole-margin guard above.
        let a = den.eval_unit_circle(theta).norm();
        let c = char_poly.eval_unit_circle(theta).norm();
        Ok(a.ln() - c.ln())
    })
}

/// Σ ln|p| over open-loop poles outside the unit circle: the classical Bode
/// value of ∫ln|S| dθ for a stabilized strictly proper loop, used as the
/// independent oracle for the quadrature path.
pub fn bode_integral_poles(g: &TransferFunction) -> Result<f64> {
    let poles = poly_roots(g.den())?;
    let mut acc = 0.0;
    for p in &poles {
        let m = p.norm();
        if (m - 1.0).abs() <= MARGINAL_POLE_BAND {
            return Err(Error::MarginalOpenLoopPole { magnitude: m });
        }
        if m > 1.0 {
            acc += m.ln();
        }
    }
    Ok(acc)
}
