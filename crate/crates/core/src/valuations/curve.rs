use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when comparing curve values against each other.
const CURVE_TOL: f64 = 1e-9;
/// Arguments this close outside `[0, 1]` are clamped instead of rejected.
const DOMAIN_SLACK: f64 = 1e-12;

fn one() -> f64 {
    1.0
}

/// Shape of a valuation curve on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Curve {
    /// Linear interpolation between `(z, value)` breakpoints.
    PiecewiseLinear { points: Vec<[f64; 2]> },
    /// `scale * z`.
    Linear {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale * z^exponent`, `exponent >= 1`.
    Power {
        exponent: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `min(slope * z, cap)`.
    CappedLinear { slope: f64, cap: f64 },
    /// `scale * (1 - (1 - z)^exponent)`, `exponent >= 1`.
    ConcavePower {
        exponent: f64,
        #[serde(default = "one")]
        scale: f64,
    },
}

/// A non-decreasing, Lipschitz valuation curve with `f(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawValuation", into = "RawValuation")]
pub struct ValuationFn {
    curve: Curve,
    lipschitz: f64,
}

#[derive(Serialize, Deserialize)]
struct RawValuation {
    #[serde(flatten)]
    curve: Curve,
    lipschitz: f64,
}

impl TryFrom<RawValuation> for ValuationFn {
    type Error = Error;

    fn try_from(raw: RawValuation) -> Result<Self> {
        ValuationFn::new(raw.curve, raw.lipschitz)
    }
}

impl From<ValuationFn> for RawValuation {
    fn from(f: ValuationFn) -> Self {
        RawValuation {
            curve: f.curve,
            lipschitz: f.lipschitz,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidValuation(msg.into())
}

fn check_param(name: &str, value: f64, min: f64) -> Result<()> {
    if !value.is_finite() || value < min {
        return Err(invalid(format!("{name} must be finite and >= {min}, got {value}")));
    }
    Ok(())
}

impl ValuationFn {
    /// Validates the curve parameters and that `lipschitz` bounds the curve's slope.
    pub fn new(curve: Curve, lipschitz: f64) -> Result<Self> {
        check_param("lipschitz", lipschitz, 0.0)?;
        match &curve {
            Curve::PiecewiseLinear { points } => validate_points(points)?,
            Curve::Linear { scale } => check_param("scale", *scale, 0.0)?,
            Curve::Power { exponent, scale } | Curve::ConcavePower { exponent, scale } => {
                check_param("exponent", *exponent, 1.0)?;
                check_param("scale", *scale, 0.0)?;
            }
            Curve::CappedLinear { slope, cap } => {
                check_param("slope", *slope, 0.0)?;
                check_param("cap", *cap, 0.0)?;
            }
        }
        let f = ValuationFn { curve, lipschitz };
        let needed = f.slope_bound();
        if lipschitz < needed - CURVE_TOL {
            return Err(invalid(format!(
                "declared lipschitz constant {lipschitz} is below the curve's maximum slope {needed}"
            )));
        }
        Ok(f)
    }

    /// `z` with slope 1.
    pub fn linear() -> Self {
        Self::new(Curve::Linear { scale: 1.0 }, 1.0).expect("identity curve is valid")
    }

    /// `z^exponent`, with the tight Lipschitz constant `exponent`.
    pub fn power(exponent: f64) -> Result<Self> {
        Self::new(Curve::Power { exponent, scale: 1.0 }, exponent)
    }

    /// `1 - (1 - z)^exponent`, with the tight Lipschitz constant `exponent`.
    pub fn concave_power(exponent: f64) -> Result<Self> {
        Self::new(Curve::ConcavePower { exponent, scale: 1.0 }, exponent)
    }

    /// `min(slope * z, cap)`, with the tight Lipschitz constant.
    pub fn capped_linear(slope: f64, cap: f64) -> Result<Self> {
        let c = if cap > 0.0 { slope } else { 0.0 };
        Self::new(Curve::CappedLinear { slope, cap }, c)
    }

    /// Piecewise-linear curve with its tight Lipschitz constant.
    pub fn piecewise_linear(points: Vec<[f64; 2]>) -> Result<Self> {
        validate_points(&points)?;
        let c = max_segment_slope(&points);
        Self::new(Curve::PiecewiseLinear { points }, c)
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Exact maximum slope of the curve.
    pub fn slope_bound(&self) -> f64 {
        match &self.curve {
            Curve::PiecewiseLinear { points } => max_segment_slope(points),
            Curve::Linear { scale } => *scale,
            Curve::Power { exponent, scale } | Curve::ConcavePower { exponent, scale } => {
                scale * exponent
            }
            Curve::CappedLinear { slope, cap } => {
                if *cap > 0.0 {
                    *slope
                } else {
                    0.0
                }
            }
        }
    }

    /// `f(z)`, rejecting arguments outside `[0, 1]`.
    pub fn eval(&self, z: f64) -> Result<f64> {
        if !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&z) {
            return Err(Error::Domain(z));
        }
        Ok(self.value(z))
    }

    /// `f(z)` with `z` clamped into `[0, 1]`.
    pub fn value(&self, z: f64) -> f64 {
        let z = z.clamp(0.0, 1.0);
        match &self.curve {
            Curve::PiecewiseLinear { points } => interpolate(points, z),
            Curve::Linear { scale } => scale * z,
            Curve::Power { exponent, scale } => scale * z.powf(*exponent),
            Curve::CappedLinear { slope, cap } => (slope * z).min(*cap),
            Curve::ConcavePower { exponent, scale } => scale * (1.0 - (1.0 - z).powf(*exponent)),
        }
    }

    /// `f(1)`.
    pub fn full_value(&self) -> f64 {
        self.value(1.0)
    }

    /// Smallest `z` in `[0, 1]` with `f(z) = v`.
    pub fn cut(&self, v: f64) -> Result<f64> {
        if v.is_nan() || v < -DOMAIN_SLACK {
            return Err(Error::Domain(v));
        }
        let max = self.full_value();
        if v > max + CURVE_TOL {
            return Err(Error::Unattainable { value: v, max });
        }
        let v = v.clamp(0.0, max);
        if v == 0.0 {
            return Ok(0.0);
        }
        let z = match &self.curve {
            Curve::PiecewiseLinear { points } => invert_points(points, v),
            Curve::Linear { scale } => v / scale,
            Curve::Power { exponent, scale } => (v / scale).powf(exponent.recip()),
            Curve::CappedLinear { slope, .. } => v / slope,
            Curve::ConcavePower { exponent, scale } => {
                1.0 - (1.0 - v / scale).max(0.0).powf(exponent.recip())
            }
        };
        Ok(z.clamp(0.0, 1.0))
    }
}

fn validate_points(points: &[[f64; 2]]) -> Result<()> {
    if points.len() < 2 {
        return Err(invalid("piecewise-linear curve needs at least two points"));
    }
    if points.iter().flatten().any(|c| !c.is_finite()) {
        return Err(invalid("breakpoints must be finite"));
    }
    if points[0] != [0.0, 0.0] {
        return Err(invalid(format!("first breakpoint must be [0, 0], got {:?}", points[0])));
    }
    let last = points[points.len() - 1];
    if last[0] != 1.0 {
        return Err(invalid(format!("last breakpoint must be at z = 1, got {:?}", last)));
    }
    for (i, w) in points.windows(2).enumerate() {
        if w[1][0] <= w[0][0] {
            return Err(invalid(format!(
                "breakpoint z must strictly increase (points {i} and {})",
                i + 1
            )));
        }
        if w[1][1] < w[0][1] {
            return Err(invalid(format!(
                "curve decreases between breakpoints {i} and {}",
                i + 1
            )));
        }
    }
    Ok(())
}

fn max_segment_slope(points: &[[f64; 2]]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1][1] - w[0][1]) / (w[1][0] - w[0][0]))
        .fold(0.0, f64::max)
}

fn interpolate(points: &[[f64; 2]], z: f64) -> f64 {
    // first breakpoint strictly right of z
    let j = points.partition_point(|p| p[0] <= z);
    if j == points.len() {
        return points[j - 1][1];
    }
    let [x0, y0] = points[j - 1];
    let [x1, y1] = points[j];
    if x0 == y0 && x1 == y1 {
        // identity segment: answer exactly, so bent curves agree bitwise with `z` there
        return z;
    }
    y0 + (y1 - y0) * (z - x0) / (x1 - x0)
}

fn invert_points(points: &[[f64; 2]], v: f64) -> f64 {
    // first breakpoint reaching v; the segment before it rises strictly through v
    let j = points.partition_point(|p| p[1] < v);
    let [x1, y1] = points[j];
    if j == 0 {
        return x1;
    }
    let [x0, y0] = points[j - 1];
    if x0 == y0 && x1 == y1 {
        return v;
    }
    x0 + (v - y0) * (x1 - x0) / (y1 - y0)
}
