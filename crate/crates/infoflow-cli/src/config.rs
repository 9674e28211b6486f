//! TOML loop-configuration schema.
//!
//! A config file fully describes one problem instance: the plant, the two
//! channel variances, the message model, and optional quadrature and run
//! parameters. Unknown keys are rejected so typos cannot silently fall back
//! to defaults.

use std::fs;
use std::path::Path;

use infoflow::{FeedbackLoop, QuadratureSpec, TransferFunction};
use serde::{Deserialize, Serialize};

fn default_sigma_02() -> f64 {
    1.0
}

fn default_theta() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LoopConfigFile {
    pub plant: PlantSection,
    pub noise: NoiseSection,
    #[serde(default)]
    pub message: MessageSection,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub run: RunSection,
}

/// Plant G = num/den, coefficients ascending in powers of z^-1.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub sigma_w2: f64,
    pub sigma_v2: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MessageSection {
    #[serde(default = "default_sigma_02")]
    pub sigma_02: f64,
    #[serde(default = "default_theta")]
    pub theta: Vec<f64>,
}

impl Default for MessageSection {
    fn default() -> Self {
        MessageSection {
            sigma_02: default_sigma_02(),
            theta: default_theta(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub panels: Option<usize>,
    pub nodes_per_panel: Option<usize>,
    pub tol: Option<f64>,
}

/// Defaults used by commands when the matching flag is absent.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub n: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

impl LoopConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("config parse error: {e}"))
    }

    /// Builds the loop and runs full validation; the error string carries the
    /// complete violation list.
    pub fn to_loop(&self) -> Result<FeedbackLoop, String> {
        let plant = TransferFunction::from_coeffs(&self.plant.num, &self.plant.den)
            .map_err(|e| format!("invalid plant: {e}"))?;
        let lp = FeedbackLoop::new(
            plant,
            self.noise.sigma_w2,
            self.noise.sigma_v2,
            self.message.sigma_02,
            self.message.theta.clone(),
        );
        let report = lp.validate();
        if report.is_valid() {
            Ok(lp)
        } else {
            Err(format!("invalid config: {report}"))
        }
    }

    pub fn quadrature(&self) -> Result<QuadratureSpec, String> {
        let d = QuadratureSpec::default();
        QuadratureSpec::new(
            self.quadrature.panels.unwrap_or_else(|| d.panels()),
            self.quadrature
                .nodes_per_panel
                .unwrap_or_else(|| d.nodes_per_panel()),
            self.quadrature.tol.unwrap_or_else(|| d.tol()),
        )
        .map_err(|e| format!("invalid quadrature section: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[plant]
num = [0.0, -1.5]
den = [1.0, -2.0]

[noise]
sigma_w2 = 1.0
sigma_v2 = 1.0
"#;

    #[test]
    fn parses_and_validates() {
        let cfg: LoopConfigFile = toml::from_str(SAMPLE).unwrap();
        let lp = cfg.to_loop().unwrap();
        assert_eq!(lp.plant.num().coeffs(), &[0.0, -1.5]);
        assert_eq!(lp.plant.den().coeffs(), &[1.0, -2.0]);
        assert_eq!(lp.sigma_02, 1.0);
        assert_eq!(lp.theta, vec![1.0]);
    }

    #[test]
    fn message_defaults_fill_partial_section() {
        let text = format!("{SAMPLE}\n[message]\nsigma_02 = 4.0\n");
        let cfg: LoopConfigFile = toml::from_str(&text).unwrap();
        assert_eq!(cfg.message.sigma_02, 4.0);
        assert_eq!(cfg.message.theta, vec![1.0]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{SAMPLE}\n[extra]\nfoo = 1\n");
        let err = toml::from_str::<LoopConfigFile>(&text).unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");

        let typo = SAMPLE.replace("sigma_w2", "sigma_w");
        let err = toml::from_str::<LoopConfigFile>(&typo).unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
    }

    #[test]
    fn round_trips_through_json_and_toml() {
        let cfg: LoopConfigFile = toml::from_str(SAMPLE).unwrap();

        let json = serde_json::to_value(&cfg).unwrap();
        let back: LoopConfigFile = serde_json::from_value(json).unwrap();
        let toml_text = toml::to_string(&cfg).unwrap();
        let again: LoopConfigFile = toml::from_str(&toml_text).unwrap();

        for other in [&back, &again] {
            let a = cfg.to_loop().unwrap();
            let b = other.to_loop().unwrap();
            assert_eq!(a.plant.num().coeffs(), b.plant.num().coeffs());
            assert_eq!(a.plant.den().coeffs(), b.plant.den().coeffs());
            assert_eq!(a.sigma_w2, b.sigma_w2);
            assert_eq!(a.sigma_v2, b.sigma_v2);
            assert_eq!(a.sigma_02, b.sigma_02);
            assert_eq!(a.theta, b.theta);
        }
    }

    #[test]
    fn quadrature_overrides_apply() {
        let text = format!("{SAMPLE}\n[quadrature]\npanels = 128\n");
        let cfg: LoopConfigFile = toml::from_str(&text).unwrap();
        let quad = cfg.quadrature().unwrap();
        assert_eq!(quad.panels(), 128);
        assert_eq!(quad.nodes_per_panel(), 16);

        let bad = format!("{SAMPLE}\n[quadrature]\npanels = 0\n");
        let cfg: LoopConfigFile = toml::from_str(&bad).unwrap();
        assert!(cfg.quadrature().is_err());
    }
}
