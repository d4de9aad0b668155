//! Run configuration: TOML file, dotted command-line overrides, validation and hashing.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    /// `bump` or `square_well`.
    pub kind: String,
    pub strength: f64,
    pub radius: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig {
            kind: "bump".into(),
            strength: 10.0,
            radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlabConfig {
    pub n: u64,
    /// Defaults to `d/N`.
    pub a: Option<f64>,
    pub d: f64,
    pub ell: f64,
    /// Defaults to `N^{-13/2}`.
    pub h: Option<f64>,
}

impl Default for SlabConfig {
    fn default() -> Self {
        SlabConfig {
            n: 10_000,
            a: None,
            d: 0.1,
            ell: 0.25,
            h: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub ode_tol: f64,
    /// Agreement required between independent evaluations of one sum.
    pub sum_tol: f64,
    pub gp_slack: f64,
    pub eig_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ode_tol: 1e-10,
            sum_tol: 1e-6,
            gp_slack: 1e-9,
            eig_tol: 1e-9,
        }
    }
}

/// Resolution of the oscillatory transforms behind every torus coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub gauss_nodes: usize,
    pub nodes_per_period: f64,
    pub max_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            gauss_nodes: 16,
            nodes_per_period: 8.0,
            max_panels: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    pub lattice: u64,
    pub basis: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            lattice: 1 << 36,
            basis: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    pub c: f64,
    pub t1: f64,
    pub t2: f64,
    pub margin: f64,
}

impl Default for RegionConfig {
    fn default() -> Self {
        RegionConfig {
            c: 1.0,
            t1: 1.0 / 72.0,
            t2: 1.0 / 144.0,
            margin: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SumsConfig {
    /// `accelerated`, `shells` or `cesaro`.
    pub frak_method: String,
    /// Also evaluate the Cesàro-averaged direct sum and compare.
    pub cross_check: bool,
    pub ell_aux: Option<f64>,
    /// Shell cutoff `θ` for the `shells` method.
    pub theta_max: f64,
    pub ebog_radius: f64,
    /// Truncation of the thin-slab momentum sums in units of `1/a`.
    pub cutoff_over_a: f64,
    pub points_per_scale: f64,
    /// Also evaluate `𝒞_N` at the slab point.
    pub c_n: bool,
}

impl Default for SumsConfig {
    fn default() -> Self {
        SumsConfig {
            frak_method: "accelerated".into(),
            cross_check: false,
            ell_aux: None,
            theta_max: 80.0,
            ebog_radius: 2.0 * std::f64::consts::PI * 200.0,
            cutoff_over_a: 4.0,
            points_per_scale: 8.0,
            c_n: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    /// `auto`, `I` or `III`.
    pub region: String,
    pub allow_mismatch: bool,
    pub enforce_gp: bool,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            region: "auto".into(),
            allow_mismatch: false,
            enforce_gp: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionsSweep {
    pub n: u64,
    /// `gp` (a = d/N) or `fixed` (a = `a`).
    pub a_mode: String,
    pub a: f64,
    pub log10_d_min: f64,
    pub log10_d_max: f64,
    pub points: usize,
}

impl Default for RegionsSweep {
    fn default() -> Self {
        RegionsSweep {
            n: 1000,
            a_mode: "gp".into(),
            a: 1e-8,
            log10_d_min: -150.0,
            log10_d_max: -0.5,
            points: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverlapConfig {
    /// `(N, d)` pairs at `Na/d = 1`.
    pub points: Vec<(u64, f64)>,
    /// Threshold constant used to place the sweep in the overlap.
    pub c: f64,
    pub h: f64,
    pub cutoff_over_a: f64,
}

impl Default for OverlapConfig {
    fn default() -> Self {
        OverlapConfig {
            points: vec![(50, 0.04), (100, 0.02), (200, 0.01), (400, 0.005)],
            c: 3.0,
            h: 0.2,
            cutoff_over_a: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub f: f64,
    pub g: f64,
    pub n_max: u32,
    /// Generators `p` of the symmetric mode set `{0, ±p, ...}`.
    pub generators: Vec<[i64; 3]>,
    pub particles: u32,
    pub a: f64,
    pub d: f64,
    /// Particle numbers for the modified-operator pair comparison.
    pub pair_particles: Vec<u32>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            f: 2.0,
            g: 1.0,
            n_max: 60,
            generators: vec![[1, 0, 0], [0, 1, 0]],
            particles: 4,
            a: 0.05,
            d: 0.5,
            pair_particles: vec![4, 8, 16, 32, 64],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoeffsConfig {
    pub modes: Vec<[i64; 3]>,
}

impl Default for CoeffsConfig {
    fn default() -> Self {
        CoeffsConfig {
            modes: vec![[0, 0, 0], [1, 0, 0], [0, 0, 1], [1, 1, 0], [3, 2, 1], [10, 0, 2]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmasConfig {
    /// Ratios `a/(dℓ)` for the eigenvalue slope suite.
    pub ratios: Vec<f64>,
    pub h_values: Vec<f64>,
    pub a: f64,
    pub d: f64,
    /// Maximum constant accepted in fitted bounds.
    pub max_constant: f64,
}

impl Default for LemmasConfig {
    fn default() -> Self {
        LemmasConfig {
            ratios: vec![0.1, 0.05, 0.025],
            h_values: vec![0.05, 0.1, 0.2],
            a: 1e-4,
            d: 1e-2,
            max_constant: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    pub json: bool,
    pub csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: "out".into(),
            json: true,
            csv: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialConfig,
    pub slab: SlabConfig,
    pub tolerances: Tolerances,
    pub quadrature: QuadratureConfig,
    pub budgets: Budgets,
    pub region: RegionConfig,
    pub sums: SumsConfig,
    pub energy: EnergyConfig,
    pub regions: RegionsSweep,
    pub overlap: OverlapConfig,
    pub oracle: OracleConfig,
    pub coeffs: CoeffsConfig,
    pub lemmas: LemmasConfig,
    pub output: OutputConfig,
}

fn config_error(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {reason}"))
}

/// Parses an override value as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

pub fn apply_override(root: &mut toml::Table, key: &str, raw: &str) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.len() < 2 || parts.iter().any(|p| p.is_empty()) {
        return Err(config_error(key, "overrides take the form --section.key value"));
    }
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| config_error(key, format!("`{part}` is not a section")))?;
    }
    let mut value = parse_value(raw);
    // integers given for float fields are accepted by serde; floats for integer fields are not
    if let toml::Value::Float(x) = value {
        if x.fract() == 0.0 && matches!(table.get(parts[parts.len() - 1]), Some(toml::Value::Integer(_))) {
            value = toml::Value::Integer(x as i64);
        }
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut root = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| config_error(&p.display().to_string(), e))?;
                toml::from_str::<toml::Table>(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for (k, v) in overrides {
            apply_override(&mut root, k, v)?;
        }
        let cfg: RunConfig = toml::Value::Table(root)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.message().trim().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(config_error(name, format!("must be positive and finite, got {x}")))
            }
        };
        if !matches!(self.potential.kind.as_str(), "bump" | "square_well") {
            return Err(config_error("potential.kind", format!("expected `bump` or `square_well`, got `{}`", self.potential.kind)));
        }
        positive("potential.radius", self.potential.radius)?;
        if self.potential.strength.is_nan() || self.potential.strength < 0.0 {
            return Err(config_error("potential.strength", "must be non-negative"));
        }
        positive("slab.d", self.slab.d)?;
        positive("slab.ell", self.slab.ell)?;
        if let Some(a) = self.slab.a {
            positive("slab.a", a)?;
        }
        if let Some(h) = self.slab.h {
            positive("slab.h", h)?;
        }
        if self.slab.n < 1 {
            return Err(config_error("slab.n", "must be at least 1"));
        }
        let t = &self.tolerances;
        positive("tolerances.ode_tol", t.ode_tol)?;
        if !(4..=64).contains(&self.quadrature.gauss_nodes) {
            return Err(config_error("quadrature.gauss_nodes", "must lie in [4, 64]"));
        }
        if self.quadrature.nodes_per_period.is_nan() || self.quadrature.nodes_per_period < 8.0 {
            return Err(config_error("quadrature.nodes_per_period", "must be at least 8"));
        }
        positive("tolerances.sum_tol", t.sum_tol)?;
        positive("tolerances.gp_slack", t.gp_slack)?;
        positive("tolerances.eig_tol", t.eig_tol)?;
        positive("region.c", self.region.c)?;
        positive("region.margin", self.region.margin)?;
        if !matches!(self.sums.frak_method.as_str(), "accelerated" | "shells" | "cesaro") {
            return Err(config_error("sums.frak_method", format!("expected accelerated, shells or cesaro, got `{}`", self.sums.frak_method)));
        }
        if let Some(l) = self.sums.ell_aux {
            positive("sums.ell_aux", l)?;
        }
        positive("sums.ebog_radius", self.sums.ebog_radius)?;
        positive("sums.cutoff_over_a", self.sums.cutoff_over_a)?;
        positive("sums.points_per_scale", self.sums.points_per_scale)?;
        if !matches!(self.energy.region.as_str(), "auto" | "I" | "III") {
            return Err(config_error("energy.region", format!("expected auto, I or III, got `{}`", self.energy.region)));
        }
        if !matches!(self.regions.a_mode.as_str(), "gp" | "fixed") {
            return Err(config_error("regions.a_mode", format!("expected gp or fixed, got `{}`", self.regions.a_mode)));
        }
        if self.regions.points < 2 {
            return Err(config_error("regions.points", "need at least 2 points"));
        }
        if !(self.regions.log10_d_min < self.regions.log10_d_max && self.regions.log10_d_max < 0.0) {
            return Err(config_error("regions.log10_d_max", "need log10_d_min < log10_d_max < 0"));
        }
        positive("overlap.c", self.overlap.c)?;
        positive("overlap.h", self.overlap.h)?;
        positive("overlap.cutoff_over_a", self.overlap.cutoff_over_a)?;
        positive("oracle.f", self.oracle.f)?;
        positive("oracle.a", self.oracle.a)?;
        positive("oracle.d", self.oracle.d)?;
        positive("lemmas.a", self.lemmas.a)?;
        positive("lemmas.d", self.lemmas.d)?;
        positive("lemmas.max_constant", self.lemmas.max_constant)?;
        if self.output.dir.is_empty() {
            return Err(config_error("output.dir", "must not be empty"));
        }
        Ok(())
    }

    /// Canonical JSON of the resolved configuration.
    pub fn canonical_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.canonical_json()).expect("configuration serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_nested_fields() {
        let cfg = RunConfig::load(None, &[("slab.d".into(), "0.05".into()), ("slab.n".into(), "20".into())]).unwrap();
        assert_eq!(cfg.slab.d, 0.05);
        assert_eq!(cfg.slab.n, 20);
        let cfg = RunConfig::load(None, &[("energy.region".into(), "III".into())]).unwrap();
        assert_eq!(cfg.energy.region, "III");
    }

    #[test]
    fn bad_fields_are_named() {
        let e = RunConfig::load(None, &[("slab.d".into(), "-1".into())]).unwrap_err();
        assert!(e.to_string().contains("slab.d"), "{e}");
        let e = RunConfig::load(None, &[("slab.nonsense".into(), "1".into())]).unwrap_err();
        assert!(e.to_string().contains("nonsense"), "{e}");
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.slab.d = 0.2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
