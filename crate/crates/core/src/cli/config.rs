//! Run configuration: one TOML document per model, unknown keys rejected.

use std::path::Path;

use evalexpr::{ContextWithMutableVariables, HashMapContext, Value};
use serde::Deserialize;

use crate::error::Error;
use crate::spacetime::{GroupSpec, ModelSpec, SampledSpacetime, SurfaceGraph};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub causal: CausalSection,
    #[serde(default)]
    pub geroch: GerochSection,
    #[serde(default)]
    pub steep: SteepSection,
    #[serde(default)]
    pub group: Option<GroupSpec>,
    #[serde(default)]
    pub surfaces: Option<SurfacesSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CausalSection {
    #[serde(default = "default_stencil")]
    pub stencil: usize,
}

impl Default for CausalSection {
    fn default() -> Self {
        CausalSection { stencil: default_stencil() }
    }
}

fn default_stencil() -> usize {
    2
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GerochSection {
    /// `t_scale` of the `sech^2` damping of the volume measure.
    #[serde(default)]
    pub damping: Option<f64>,
    /// Levels of `t` exported as surfaces.
    #[serde(default)]
    pub levels: Vec<f64>,
    /// `x` positions of the two chains compared by `--expect-noncauchy`.
    #[serde(default)]
    pub witness: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteepSection {
    #[serde(default = "default_band_rows")]
    pub band_rows: usize,
}

impl Default for SteepSection {
    fn default() -> Self {
        SteepSection { band_rows: default_band_rows() }
    }
}

fn default_band_rows() -> usize {
    4
}

/// Graph `t = height(x)`; `height` is an expression in `x`, `L`, `pi`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSurface {
    pub height: String,
    pub value: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSurface {
    pub height: String,
    pub bound: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfacesSection {
    #[serde(default)]
    pub level: Vec<LevelSurface>,
    pub plus: BoundSurface,
    pub minus: BoundSurface,
}

/// Schema violation with the dotted path of the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "schema error at `{}`: {}", self.path, self.message)
    }
}

impl From<Error> for SchemaError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { path, message } => SchemaError { path, message },
            other => SchemaError { path: "model".into(), message: other.to_string() },
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let de = toml::Deserializer::new(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            SchemaError { path: if path == "." { "<root>".into() } else { path }, message: inner.message().trim().to_string() }
        })?;
        cfg.model.validate()?;
        if !(1..=3).contains(&cfg.causal.stencil) {
            return Err(SchemaError { path: "causal.stencil".into(), message: "stencil radius must be 1, 2 or 3".into() });
        }
        if cfg.steep.band_rows < 2 {
            return Err(SchemaError { path: "steep.band_rows".into(), message: "need at least 2 rows per band".into() });
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SchemaError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SchemaError { path: "<file>".into(), message: format!("cannot read {}: {e}", path.display()) })?;
        Self::parse(&text)
    }
}

/// Sample `height(x)` at every column.
pub fn surface_from_expr(st: &SampledSpacetime, src: &str, path: &str) -> Result<SurfaceGraph, SchemaError> {
    let bad = |m: String| SchemaError { path: path.into(), message: m };
    let tree = evalexpr::build_operator_tree(src).map_err(|e| bad(format!("cannot parse `{src}`: {e}")))?;
    let mut ctx = HashMapContext::new();
    let l = st.grid.circumference().unwrap_or(0.0);
    let mut u = Vec::with_capacity(st.grid.n_x);
    for j in 0..st.grid.n_x {
        for (k, v) in [("x", st.grid.x_coord(j)), ("L", l), ("pi", std::f64::consts::PI)] {
            ctx.set_value(k.into(), Value::Float(v)).expect("context accepts floats");
        }
        let h = tree.eval_number_with_context(&ctx).map_err(|e| bad(format!("cannot evaluate `{src}`: {e}")))?;
        if !h.is_finite() {
            return Err(bad(format!("`{src}` is not finite at x = {}", st.grid.x_coord(j))));
        }
        u.push(h);
    }
    Ok(SurfaceGraph { u })
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIAMOND: &str = r#"
[model]
family = "diamond_minkowski"
resolution = [21, 21]
[model.params]
half_width = 1.0
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::parse(DIAMOND).unwrap();
        assert_eq!(c.causal.stencil, 2);
        assert_eq!(c.steep.band_rows, 4);
        assert!(c.group.is_none() && c.surfaces.is_none());
    }

    #[test]
    fn unknown_keys_report_their_path() {
        let e = RunConfig::parse(&format!("{DIAMOND}bogus = 1\n")).unwrap_err();
        assert_eq!(e.path, "model.params.bogus");
        let e = RunConfig::parse(&DIAMOND.replace("resolution = [21, 21]", "resolution = [21, 21]\nspeed = 3")).unwrap_err();
        assert_eq!(e.path, "model.speed");
        let e = RunConfig::parse(&format!("{DIAMOND}[geroch]\nlevels = [\"a\"]\n")).unwrap_err();
        assert_eq!(e.path, "geroch.levels[0]");
    }

    #[test]
    fn semantic_errors_report_their_path() {
        let e = RunConfig::parse(&DIAMOND.replace("[21, 21]", "[2, 21]")).unwrap_err();
        assert_eq!(e.path, "model.resolution");
        let e = RunConfig::parse(&format!("{DIAMOND}[causal]\nstencil = 7\n")).unwrap_err();
        assert_eq!(e.path, "causal.stencil");
    }
}
