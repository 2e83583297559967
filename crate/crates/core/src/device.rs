//! A detector = validated parameters + its efficiency curve, and the bundled
//! four-channel presets.

use std::path::Path;

use crate::curve::EfficiencyCurve;
use crate::detector::{CurveAnchor, DetectorConfig, DetectorParams};
use crate::error::{Error, Result};

/// Lower anchor used when a detector file names neither a curve file nor an
/// anchor: the relative efficiency of the reference channel (0.122 % of
/// 18 %) at 72 % of the operating bias.
pub const DEFAULT_ANCHOR_RATIO: f64 = 0.72;
pub const DEFAULT_ANCHOR_RELATIVE: f64 = 0.00122 / 0.18;

const PRESETS: [(&str, &str); 4] = [
    ("ch2", include_str!("../presets/ch2.json")),
    ("ch4", include_str!("../presets/ch4.json")),
    ("ch5", include_str!("../presets/ch5.json")),
    ("ch6", include_str!("../presets/ch6.json")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

#[derive(Debug, Clone)]
pub struct Detector {
    pub params: DetectorParams,
    pub curve: EfficiencyCurve,
    /// How the curve was obtained, for report headers.
    pub curve_source: String,
}

impl Detector {
    pub fn new(params: DetectorParams, curve: EfficiencyCurve, curve_source: impl Into<String>) -> Self {
        Self {
            params,
            curve,
            curve_source: curve_source.into(),
        }
    }

    /// Builds a detector from its file form. A relative `curve_file` is
    /// resolved against `base_dir`.
    pub fn from_config(config: &DetectorConfig, base_dir: Option<&Path>) -> Result<Self> {
        let params = DetectorParams::new(config)?;
        if let Some(file) = &config.curve_file {
            let path = match base_dir {
                Some(dir) if file.is_relative() => dir.join(file),
                _ => file.clone(),
            };
            let curve = EfficiencyCurve::load_csv(&path, params.operating_fraction())?;
            let source = format!("table:{}", path.display());
            return Ok(Self::new(params, curve, source));
        }
        let anchor = config.curve_anchor.unwrap_or(CurveAnchor {
            bias_ratio: DEFAULT_ANCHOR_RATIO,
            efficiency: params.base_efficiency() * DEFAULT_ANCHOR_RELATIVE,
        });
        let curve = EfficiencyCurve::two_point(&params, anchor.bias_ratio, anchor.efficiency)?;
        let source = format!("two-point:ratio={},efficiency={}", anchor.bias_ratio, anchor.efficiency);
        Ok(Self::new(params, curve, source))
    }

    /// One of the bundled channels: `ch2`, `ch4`, `ch5`, `ch6`
    /// (case-insensitive, optional `.json`).
    pub fn preset(name: &str) -> Result<Self> {
        let key = name.trim_end_matches(".json").to_ascii_lowercase();
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == key)
            .ok_or_else(|| Error::config("detector", name, "no such bundled preset"))?;
        let config: DetectorConfig = serde_json::from_str(text)?;
        Self::from_config(&config, None)
    }

    /// Absolute efficiency at a time `t` after a reset.
    pub fn efficiency_after(&self, t: f64) -> Result<f64> {
        let i_b = self.params.bias_current(t)?;
        self.curve.efficiency_at_bias(&self.params, i_b)
    }

    /// Absolute efficiency at the discriminator threshold bias.
    pub fn efficiency_at_threshold(&self) -> Result<f64> {
        let i_b = self.params.threshold_bias_fraction() * self.params.operating_bias();
        self.curve.efficiency_at_bias(&self.params, i_b)
    }
}
