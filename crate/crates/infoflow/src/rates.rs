//! Closed-form asymptotic information rates and the rate-level conservation
//! check. The total rate is computed twice, term sum and PSD entropy-rate
//! difference, so that the conservation residual measures real numerical
//! agreement instead of restating an algebraic identity.

use crate::error::Result;
use crate::lti::FeedbackLoop;
use crate::spectral::{
    entropy_rate_from_psd, log_sensitivity_integral, loop_output_psd, QuadratureSpec,
    SpectralDensity,
};
use serde::Serialize;

/// The three asymptotic rates in nats/sample plus consistency diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    /// Term-sum total rate: log_sens_term + snr_term.
    pub r_total: f64,
    /// Message-borne rate, the log-sensitivity integral.
    pub r_x: f64,
    /// Channel-noise-borne rate, ½ln(1 + σ_w²/σ_v²).
    pub r_cond: f64,
    /// r_total recomputed as an entropy-rate difference of spectral densities.
    pub r_total_psd: f64,
    /// r_total_psd − (r_x + r_cond): two independent quadratures of the same
    /// analytic quantity.
    pub conservation_residual: f64,
    pub snr_term: f64,
    pub log_sens_term: f64,
}

/// Evaluates the closed-form rates of the stabilized loop.
pub fn closed_form_rates(lp: &FeedbackLoop, quad: &QuadratureSpec) -> Result<RateReport> {
    lp.require_valid()?;
    let log_sens_term = log_sensitivity_integral(&lp.plant, quad)?;
    // Written as a log difference so the finite-horizon path cancels against
    // it exactly when σ_w² = 0.
    let snr_term = 0.5 * ((lp.sigma_v2 + lp.sigma_w2).ln() - lp.sigma_v2.ln());
    let r_x = log_sens_term;
    let r_cond = snr_term;
    let r_total = r_x + r_cond;

    let e_rate = entropy_rate_from_psd(&loop_output_psd(lp)?, quad)?;
    let v_rate = entropy_rate_from_psd(&SpectralDensity::constant("v", lp.sigma_v2), quad)?;
    let r_total_psd = e_rate - v_rate;

    Ok(RateReport {
        r_total,
        r_x,
        r_cond,
        r_total_psd,
        conservation_residual: r_total_psd - (r_x + r_cond),
        snr_term,
        log_sens_term,
    })
}

/// Residual of the conservation law at the rate level, using the PSD-based
/// total so the check is non-circular.
pub fn conservation_residual(report: &RateReport) -> f64 {
    report.r_total_psd - (report.r_x + report.r_cond)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::TransferFunction;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    fn quad() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn open_loop(sigma_w2: f64, sigma_v2: f64) -> FeedbackLoop {
        FeedbackLoop::new(TransferFunction::zero(), sigma_w2, sigma_v2, 1.0, vec![1.0])
    }

    fn system_b_loop() -> FeedbackLoop {
        let plant = TransferFunction::from_coeffs(&[0.0, -1.5], &[1.0, -2.0]).unwrap();
        FeedbackLoop::new(plant, 1.0, 1.0, 1.0, vec![1.0])
    }

    #[test]
    fn open_loop_rates() {
        let r = closed_form_rates(&open_loop(1.0, 1.0), &quad()).unwrap();
        assert_abs_diff_eq!(r.r_x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.r_cond, 0.5 * LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(r.r_total, 0.5 * LN_2, epsilon = 1e-12);
        assert!(conservation_residual(&r).abs() <= 1e-10);
    }

    #[test]
    fn system_b_rates() {
        let r = closed_form_rates(&system_b_loop(), &quad()).unwrap();
        assert_abs_diff_eq!(r.r_x, LN_2, epsilon = 1e-9);
        assert_abs_diff_eq!(r.r_cond, 0.5 * LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(r.r_total, 1.5 * LN_2, epsilon = 1e-9);
        assert!(conservation_residual(&r).abs() <= 1e-7);
        assert_abs_diff_eq!(r.conservation_residual, conservation_residual(&r), epsilon = 0.0);
    }

    #[test]
    fn noiseless_forward_channel_collapses_to_log_sensitivity() {
        let mut lp = system_b_loop();
        lp.sigma_w2 = 0.0;
        let r = closed_form_rates(&lp, &quad()).unwrap();
        assert_eq!(r.r_cond, 0.0);
        assert_eq!(r.r_total, r.r_x);
        assert!(conservation_residual(&r).abs() <= 1e-8);
    }

    #[test]
    fn joint_variance_scaling_leaves_rates_unchanged() {
        let base = closed_form_rates(&system_b_loop(), &quad()).unwrap();
        for &c in &[0.1, 10.0] {
            let mut lp = system_b_loop();
            lp.sigma_w2 *= c;
            lp.sigma_v2 *= c;
            let scaled = closed_form_rates(&lp, &quad()).unwrap();
            assert_abs_diff_eq!(scaled.r_x, base.r_x, epsilon = 1e-9);
            assert_abs_diff_eq!(scaled.r_cond, base.r_cond, epsilon = 1e-9);
            assert_abs_diff_eq!(scaled.r_total, base.r_total, epsilon = 1e-9);
        }
    }

    #[test]
    fn conditional_rate_is_monotone_in_forward_noise() {
        let mut last = -1.0;
        for &sw in &[0.0, 0.3, 0.7, 1.5, 4.0, 9.0] {
            let r = closed_form_rates(&open_loop(sw, 1.3), &quad()).unwrap();
            assert!(r.r_cond > last);
            assert_abs_diff_eq!(r.snr_term, 0.5 * (1.0 + sw / 1.3).ln(), epsilon = 1e-12);
            last = r.r_cond;
        }
    }

    #[test]
    fn message_rate_depends_only_on_the_plant() {
        let base = closed_form_rates(&system_b_loop(), &quad()).unwrap();
        let mut lp = system_b_loop();
        lp.sigma_w2 = 0.7;
        lp.sigma_v2 = 1.9;
        lp.sigma_02 = 4.2;
        lp.theta = vec![0.0, 2.0, -1.0];
        let other = closed_form_rates(&lp, &quad()).unwrap();
        assert_eq!(base.r_x, other.r_x);
    }
}
