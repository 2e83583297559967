//! Relative detection efficiency as a function of bias current.
//!
//! A curve stores f(x), x = I_b / I_c, normalised so that f equals one at the
//! detector's operating point; the absolute efficiency is η = η0·f. Two
//! shapes are supported:
//!
//! * tabulated points (e.g. digitised from a measured efficiency-vs-bias
//!   plot), interpolated piecewise log-linearly, which keeps a monotone table
//!   monotone and follows the near-exponential rise of such curves;
//! * a two-point exponential f(x) = exp(−c·(1 − x/x_op)) pinned at the
//!   operating point and at one lower anchor.
//!
//! Below the lowest tabulated point f is 0; above the highest it is held.

use std::io::Read;
use std::path::Path;

use crate::detector::DetectorParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Table(Vec<(f64, f64)>),
    Exponential { operating_fraction: f64, steepness: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyCurve {
    shape: Shape,
    dark_points: Option<Vec<(f64, f64)>>,
}

/// Interpolates a strictly-increasing-x table, log-linearly where both ends
/// are positive and linearly otherwise. Zero below the table, held above.
fn log_linear(points: &[(f64, f64)], x: f64) -> f64 {
    let (first_x, _) = points[0];
    if x < first_x {
        return 0.0;
    }
    let (last_x, last_y) = points[points.len() - 1];
    if x >= last_x {
        return last_y;
    }
    let i = points.partition_point(|&(px, _)| px <= x);
    let (x0, y0) = points[i - 1];
    let (x1, y1) = points[i];
    let t = (x - x0) / (x1 - x0);
    if y0 > 0.0 && y1 > 0.0 {
        (y0.ln() + t * (y1.ln() - y0.ln())).exp()
    } else {
        y0 + t * (y1 - y0)
    }
}

fn check_bias_fraction(row: usize, x: f64, prev: Option<f64>) -> Result<()> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::Format {
            row,
            reason: format!("bias_fraction {x} outside (0, 1]"),
        });
    }
    if let Some(p) = prev {
        if x <= p {
            return Err(Error::Format {
                row,
                reason: format!("bias_fraction {x} not strictly above previous {p}"),
            });
        }
    }
    Ok(())
}

impl EfficiencyCurve {
    /// Builds a tabulated curve from `(bias_fraction, efficiency)` points.
    ///
    /// Efficiencies may be absolute or already relative; they are divided by
    /// the interpolated value at `operating_fraction` (= I_0/I_c). Row
    /// numbers in errors are 1-based.
    pub fn from_points(points: &[(f64, f64)], operating_fraction: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Format {
                row: points.len(),
                reason: "at least two points are needed".into(),
            });
        }
        let mut prev: Option<(f64, f64)> = None;
        for (i, &(x, y)) in points.iter().enumerate() {
            let row = i + 1;
            check_bias_fraction(row, x, prev.map(|p| p.0))?;
            if !(0.0..=1.0).contains(&y) {
                return Err(Error::Format {
                    row,
                    reason: format!("efficiency {y} outside [0, 1]"),
                });
            }
            if let Some((_, py)) = prev {
                if y < py {
                    return Err(Error::Format {
                        row,
                        reason: format!("efficiency {y} decreases from previous {py}"),
                    });
                }
            }
            prev = Some((x, y));
        }
        let at_op = log_linear(points, operating_fraction);
        if !(at_op > 0.0) {
            return Err(Error::config(
                "operating_fraction",
                operating_fraction,
                "curve has zero efficiency at the operating point",
            ));
        }
        let table = points.iter().map(|&(x, y)| (x, y / at_op)).collect();
        Ok(Self {
            shape: Shape::Table(table),
            dark_points: None,
        })
    }

    /// Two-point exponential through f = 1 at I_0 and absolute efficiency
    /// `anchor_efficiency` at `anchor_ratio`·I_0.
    pub fn two_point(params: &DetectorParams, anchor_ratio: f64, anchor_efficiency: f64) -> Result<Self> {
        if !(anchor_ratio > 0.0 && anchor_ratio < 1.0) {
            return Err(Error::domain(
                "anchor bias ratio",
                anchor_ratio,
                "strictly between 0 and 1 (below I_0)",
            ));
        }
        let eta0 = params.base_efficiency();
        if !(anchor_efficiency > 0.0 && anchor_efficiency < eta0) {
            return Err(Error::domain(
                "anchor efficiency",
                anchor_efficiency,
                "strictly between 0 and the base efficiency",
            ));
        }
        let steepness = (eta0 / anchor_efficiency).ln() / (1.0 - anchor_ratio);
        Ok(Self {
            shape: Shape::Exponential {
                operating_fraction: params.operating_fraction(),
                steepness,
            },
            dark_points: None,
        })
    }

    /// Attaches a measured dark-rate table `(bias_fraction, rate_hz)`.
    pub fn with_dark_points(mut self, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Format {
                row: 0,
                reason: "empty dark-rate table".into(),
            });
        }
        let mut prev = None;
        for (i, &(x, r)) in points.iter().enumerate() {
            check_bias_fraction(i + 1, x, prev)?;
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::Format {
                    row: i + 1,
                    reason: format!("dark rate {r} must be finite and >= 0"),
                });
            }
            prev = Some(x);
        }
        self.dark_points = Some(points);
        Ok(self)
    }

    /// Exponent c of the two-point form, if this is one.
    pub fn steepness(&self) -> Option<f64> {
        match self.shape {
            Shape::Exponential { steepness, .. } => Some(steepness),
            Shape::Table(_) => None,
        }
    }

    pub fn has_dark_points(&self) -> bool {
        self.dark_points.is_some()
    }

    /// Relative efficiency f at bias fraction `x` = I_b/I_c.
    pub fn relative(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Table(points) => log_linear(points, x),
            Shape::Exponential {
                operating_fraction,
                steepness,
            } => {
                if x <= 0.0 {
                    0.0
                } else {
                    (-steepness * (1.0 - x / operating_fraction)).exp()
                }
            }
        }
    }

    /// η = η0·f(i_b/I_c), clamped to [0, 1].
    pub fn efficiency_at_bias(&self, params: &DetectorParams, i_b: f64) -> Result<f64> {
        let ic = params.critical_current();
        if !(i_b >= 0.0 && i_b <= ic) {
            return Err(Error::domain("bias current", i_b, "within [0, I_c]"));
        }
        Ok((params.base_efficiency() * self.relative(i_b / ic)).clamp(0.0, 1.0))
    }

    /// Dark-count rate at bias `i_b` from the attached table, if any.
    pub fn dark_rate_at_bias(&self, params: &DetectorParams, i_b: f64) -> Option<f64> {
        self.dark_points
            .as_ref()
            .map(|pts| log_linear(pts, i_b / params.critical_current()))
    }

    /// Reads the `bias_fraction,efficiency[,dark_rate_hz]` CSV format.
    pub fn read_csv<R: Read>(reader: R, operating_fraction: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let names: Vec<&str> = headers.iter().collect();
        let has_dark = match names.as_slice() {
            ["bias_fraction", "efficiency"] => false,
            ["bias_fraction", "efficiency", "dark_rate_hz"] => true,
            _ => {
                return Err(Error::Format {
                    row: 0,
                    reason: format!(
                        "expected header bias_fraction,efficiency[,dark_rate_hz], got {}",
                        names.join(",")
                    ),
                })
            }
        };
        let mut points = Vec::new();
        let mut dark = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec?;
            let field = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Format {
                        row,
                        reason: format!("missing column {k}"),
                    })?
                    .parse::<f64>()
                    .map_err(|e| Error::Format {
                        row,
                        reason: e.to_string(),
                    })
            };
            let x = field(0)?;
            points.push((x, field(1)?));
            if has_dark {
                dark.push((x, field(2)?));
            }
        }
        let curve = Self::from_points(&points, operating_fraction)?;
        if has_dark {
            curve.with_dark_points(dark)
        } else {
            Ok(curve)
        }
    }

    pub fn load_csv(path: &Path, operating_fraction: f64) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::File {
            path: path.to_owned(),
            source: Box::new(e.into()),
        })?;
        Self::read_csv(file, operating_fraction).map_err(|e| Error::File {
            path: path.to_owned(),
            source: Box::new(e),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{DetectorConfig, DetectorParams};

    fn ch5() -> DetectorParams {
        DetectorParams::new(&DetectorConfig {
            name: "CH5".into(),
            critical_current: 24.5e-6,
            kinetic_inductance: 1.12e-6,
            load_resistance: 25.0,
            shunt_resistance: 50.0,
            amplifier_gain: 100.0,
            discriminator_threshold: 40e-3,
            operating_bias: Some(22.2e-6),
            base_efficiency: 0.18,
            dark_count_rate: 100.0,
            curve_file: None,
            curve_anchor: None,
            note: None,
        })
        .unwrap()
    }

    #[test]
    fn two_point_hits_both_anchors() {
        let p = ch5();
        let c = EfficiencyCurve::two_point(&p, 0.72, 0.00122).unwrap();
        let k = c.steepness().unwrap();
        assert!((k - (0.18f64 / 0.00122).ln() / 0.28).abs() < 1e-12);
        assert!((k - 17.8).abs() < 0.05, "{k}");
        let at_op = c.efficiency_at_bias(&p, 22.2e-6).unwrap();
        assert!((at_op - 0.18).abs() <= 1e-12 * 0.18);
        let at_anchor = c.efficiency_at_bias(&p, 0.72 * 22.2e-6).unwrap();
        assert!((at_anchor - 0.00122).abs() <= 1e-12 * 0.00122, "{at_anchor}");
        assert_eq!(c.efficiency_at_bias(&p, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn two_point_rejects_bad_anchor() {
        let p = ch5();
        assert!(EfficiencyCurve::two_point(&p, 1.0, 0.001).is_err());
        assert!(EfficiencyCurve::two_point(&p, 0.5, 0.2).is_err());
        assert!(EfficiencyCurve::two_point(&p, 0.5, 0.0).is_err());
    }

    #[test]
    fn table_normalised_at_operating_point() {
        let p = ch5();
        let op = p.operating_fraction();
        let c = EfficiencyCurve::from_points(&[(0.653, 0.00122 / 0.18), (0.906, 1.0)], op).unwrap();
        assert!((c.relative(0.906) - 1.0).abs() < 1e-12);
        assert!((c.relative(op) - 1.0).abs() < 1e-12);
        assert_eq!(c.relative(0.5), 0.0);
        assert_eq!(c.relative(1.0), c.relative(0.906));
        // absolute input normalises the same way
        let abs = EfficiencyCurve::from_points(&[(0.653, 0.00122), (0.906, 0.18)], op).unwrap();
        assert!((abs.relative(0.8) - c.relative(0.8)).abs() < 1e-12);
    }

    #[test]
    fn log_linear_midpoint_is_geometric_mean() {
        let c = EfficiencyCurve::from_points(&[(0.5, 0.01), (0.9, 1.0)], 0.9).unwrap();
        assert!((c.relative(0.7) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn zero_segment_falls_back_to_linear() {
        let c = EfficiencyCurve::from_points(&[(0.2, 0.0), (0.4, 0.5), (0.9, 1.0)], 0.9).unwrap();
        assert!((c.relative(0.3) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn table_errors_name_the_row() {
        assert!(matches!(
            EfficiencyCurve::from_points(&[(0.5, 0.1)], 0.9),
            Err(Error::Format { .. })
        ));
        let e = EfficiencyCurve::from_points(&[(0.5, 0.1), (0.4, 0.2)], 0.9).unwrap_err();
        assert!(matches!(e, Error::Format { row: 2, .. }), "{e}");
        let e = EfficiencyCurve::from_points(&[(0.5, 0.2), (0.9, 0.1)], 0.9).unwrap_err();
        assert!(matches!(e, Error::Format { row: 2, .. }), "{e}");
        let e = EfficiencyCurve::from_points(&[(0.5, 1.5), (0.9, 1.6)], 0.9).unwrap_err();
        assert!(matches!(e, Error::Format { row: 1, .. }), "{e}");
        let e = EfficiencyCurve::from_points(&[(0.0, 0.1), (0.9, 0.2)], 0.9).unwrap_err();
        assert!(matches!(e, Error::Format { row: 1, .. }), "{e}");
    }

    #[test]
    fn efficiency_domain() {
        let p = ch5();
        let c = EfficiencyCurve::two_point(&p, 0.72, 0.00122).unwrap();
        assert!(c.efficiency_at_bias(&p, -1e-9).is_err());
        assert!(c.efficiency_at_bias(&p, 25e-6).is_err());
        // above I_0 the exponential exceeds f=1 but stays a probability
        let near_ic = c.efficiency_at_bias(&p, 24.5e-6).unwrap();
        assert!(near_ic > 0.18 && near_ic <= 1.0);
    }

    #[test]
    fn csv_round() {
        let text = "bias_fraction,efficiency,dark_rate_hz\n0.60,0.0005,0.1\n0.75,0.02,2\n0.906,0.18,100\n";
        let c = EfficiencyCurve::read_csv(text.as_bytes(), 0.906).unwrap();
        assert!((c.relative(0.906) - 1.0).abs() < 1e-12);
        assert!(c.has_dark_points());
        let p = ch5();
        let d = c.dark_rate_at_bias(&p, 0.906 * 24.5e-6).unwrap();
        assert!((d - 100.0).abs() < 1e-9);

        let no_dark = "bias_fraction,efficiency\n0.6,0.001\n0.9,0.18\n";
        assert!(!EfficiencyCurve::read_csv(no_dark.as_bytes(), 0.9)
            .unwrap()
            .has_dark_points());

        let bad_header = "x,y\n0.6,0.1\n0.9,0.2\n";
        assert!(matches!(
            EfficiencyCurve::read_csv(bad_header.as_bytes(), 0.9),
            Err(Error::Format { row: 0, .. })
        ));
        let bad_value = "bias_fraction,efficiency\n0.6,abc\n0.9,0.2\n";
        assert!(matches!(
            EfficiencyCurve::read_csv(bad_value.as_bytes(), 0.9),
            Err(Error::Format { row: 1, .. })
        ));
    }
}
