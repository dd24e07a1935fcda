use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Tunable parameters of the line detector.
///
/// Defaults: image scale 0.5, density threshold 0.6, length ratio 0.125, a
/// two-layer pyramid with ratio 0.5, angle tolerance 22.5 degrees and a
/// gradient quantization tolerance of 2 intensity levels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorParams {
    pub n_layers: usize,
    pub layer_ratio: f64,
    pub image_scale: f64,
    pub density_threshold: f64,
    /// Radians.
    pub angle_tolerance: f64,
    pub gradient_quant_tolerance: f64,
    pub length_ratio: f64,
    pub refine: bool,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            n_layers: 2,
            layer_ratio: 0.5,
            image_scale: 0.5,
            density_threshold: 0.6,
            angle_tolerance: 22.5f64.to_radians(),
            gradient_quant_tolerance: 2.0,
            length_ratio: 0.125,
            refine: true,
        }
    }
}

impl DetectorParams {
    /// Stock detector settings: scale 0.8, density 0.7, no length rejection.
    pub fn stock() -> Self {
        Self { image_scale: 0.8, density_threshold: 0.7, length_ratio: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_layers < 1 {
            return Err(invalid("n_layers must be at least 1"));
        }
        if !(self.layer_ratio > 0.0 && self.layer_ratio < 1.0) {
            return Err(invalid(format!("layer_ratio must be in (0, 1), got {}", self.layer_ratio)));
        }
        if !(self.image_scale > 0.0 && self.image_scale <= 1.0) {
            return Err(invalid(format!("image_scale must be in (0, 1], got {}", self.image_scale)));
        }
        if !(0.0..=1.0).contains(&self.density_threshold) {
            return Err(invalid(format!(
                "density_threshold must be in [0, 1], got {}",
                self.density_threshold
            )));
        }
        if !(self.angle_tolerance > 0.0 && self.angle_tolerance < PI / 2.0) {
            return Err(invalid(format!(
                "angle_tolerance must be in (0, pi/2), got {}",
                self.angle_tolerance
            )));
        }
        if !(self.gradient_quant_tolerance >= 0.0) {
            return Err(invalid("gradient_quant_tolerance must be non-negative"));
        }
        if !(self.length_ratio >= 0.0) || !self.length_ratio.is_finite() {
            return Err(invalid(format!("length_ratio must be >= 0, got {}", self.length_ratio)));
        }
        Ok(())
    }

    /// Minimum gradient norm a pixel needs to take part in a region.
    pub fn gradient_threshold(&self) -> f64 {
        self.gradient_quant_tolerance / self.angle_tolerance.sin()
    }

    /// Parses `key=value` pairs separated by commas, e.g. `s=0.5,d=0.6,eta=0.125`.
    /// Short keys `s`, `d`, `eta`, `n`, `r` are accepted alongside field names.
    pub fn parse_overrides(&self, spec: &str) -> Result<Self> {
        let mut p = *self;
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| invalid(format!("expected key=value, got `{item}`")))?;
            let num = || {
                value
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| invalid(format!("`{key}` needs a number, got `{value}`")))
            };
            match key.trim() {
                "s" | "image_scale" => p.image_scale = num()?,
                "d" | "density_threshold" => p.density_threshold = num()?,
                "eta" | "length_ratio" => p.length_ratio = num()?,
                "n" | "n_layers" => p.n_layers = num()? as usize,
                "r" | "layer_ratio" => p.layer_ratio = num()?,
                "angle_tolerance_deg" => p.angle_tolerance = num()?.to_radians(),
                "quant" | "gradient_quant_tolerance" => p.gradient_quant_tolerance = num()?,
                "refine" => {
                    p.refine = match value.trim() {
                        "1" | "true" => true,
                        "0" | "false" => false,
                        other => return Err(invalid(format!("refine must be true/false, got `{other}`"))),
                    }
                }
                other => return Err(invalid(format!("unknown detector parameter `{other}`"))),
            }
        }
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let p = DetectorParams::default();
        p.validate().unwrap();
        assert_eq!((p.image_scale, p.density_threshold, p.length_ratio), (0.5, 0.6, 0.125));
        assert_eq!((p.n_layers, p.layer_ratio), (2, 0.5));
        DetectorParams::stock().validate().unwrap();
    }

    #[test]
    fn overrides() {
        let p = DetectorParams::default().parse_overrides("s=0.8, d=0.7,eta=0").unwrap();
        assert_eq!(p, DetectorParams::stock());
        assert!(DetectorParams::default().parse_overrides("s=0").is_err());
        assert!(DetectorParams::default().parse_overrides("bogus=1").is_err());
        assert!(DetectorParams::default().parse_overrides("d").is_err());
    }

    #[test]
    fn invalid_ranges() {
        let bad = [
            DetectorParams { density_threshold: 1.2, ..Default::default() },
            DetectorParams { length_ratio: -0.1, ..Default::default() },
            DetectorParams { angle_tolerance: 2.0, ..Default::default() },
            DetectorParams { n_layers: 0, ..Default::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }
}
