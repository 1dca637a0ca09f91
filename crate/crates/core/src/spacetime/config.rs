use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model family of a sampled spacetime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Flat chart `[t_lo, t_hi] x [x_lo, x_hi]`.
    Minkowski2d,
    /// Flat causal diamond `|t| + |x| <= half_width`.
    DiamondMinkowski,
    /// `(R x S^1, -dt^2 + dx^2)` truncated in time.
    CylinderProduct,
    /// `omega(t, x)^2 * (-dt^2 + dx^2)`.
    ConformalWarp,
    /// Flat chart with the closed future cone of the origin removed.
    CarvedMinkowski,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slice {
    Interval,
    Circle,
}

/// Family-specific parameters. Unused keys for a family are rejected by
/// [`ModelSpec::validate`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_range: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_range: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circumference: Option<f64>,
    /// Expression in `t`, `x`, `L` (circumference) and `pi`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warp: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slice: Option<Slice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: Family,
    #[serde(default)]
    pub params: ModelParams,
    /// Node counts `[n_t, n_x]`.
    pub resolution: [usize; 2],
}

impl ModelSpec {
    pub fn new(family: Family, n_t: usize, n_x: usize) -> Self {
        ModelSpec { family, params: ModelParams::default(), resolution: [n_t, n_x] }
    }

    pub fn validate(&self) -> Result<()> {
        let [n_t, n_x] = self.resolution;
        if n_t < 3 || n_x < 3 {
            return Err(Error::config("model.resolution", format!("need >= 3 nodes per axis, got [{n_t}, {n_x}]")));
        }
        let p = &self.params;
        let allowed: &[&str] = match self.family {
            Family::Minkowski2d | Family::CarvedMinkowski => &["t_range", "x_range"],
            Family::DiamondMinkowski => &["half_width"],
            Family::CylinderProduct => &["t_range", "circumference"],
            Family::ConformalWarp => &["t_range", "x_range", "circumference", "warp", "slice"],
        };
        let present = [
            ("t_range", p.t_range.is_some()),
            ("x_range", p.x_range.is_some()),
            ("half_width", p.half_width.is_some()),
            ("circumference", p.circumference.is_some()),
            ("warp", p.warp.is_some()),
            ("slice", p.slice.is_some()),
        ];
        for (key, set) in present {
            if set && !allowed.contains(&key) {
                return Err(Error::config(
                    format!("model.params.{key}"),
                    format!("not a parameter of {:?}", self.family),
                ));
            }
        }
        for (key, r) in [("t_range", p.t_range), ("x_range", p.x_range)] {
            if let Some([a, b]) = r {
                if !(a < b) || !a.is_finite() || !b.is_finite() {
                    return Err(Error::config(format!("model.params.{key}"), "range must be finite and increasing"));
                }
            }
        }
        for (key, v) in [("half_width", p.half_width), ("circumference", p.circumference)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::config(format!("model.params.{key}"), "must be positive"));
                }
            }
        }
        if self.family == Family::ConformalWarp && p.slice == Some(Slice::Interval) && p.circumference.is_some() {
            return Err(Error::config("model.params.circumference", "interval slices take x_range"));
        }
        if self.family == Family::ConformalWarp && p.slice != Some(Slice::Interval) && p.x_range.is_some() {
            return Err(Error::config("model.params.x_range", "circle slices take circumference"));
        }
        Ok(())
    }
}
