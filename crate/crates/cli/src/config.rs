//! Scenario file schema (TOML).

use std::path::{Path, PathBuf};

use efl_core::field::EvenPoly;
use efl_core::{Fixture, FlowField, GridData, GridField, InflowFamily, Seed, ThresholdConfig, Waveform, Womersley};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub field: FieldSpec,
    #[serde(default)]
    pub seeds: SeedSpec,
    pub spans: Spans,
    #[serde(default)]
    pub thresholds: ThresholdConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub inflow: Option<InflowSpec>,
    #[serde(default)]
    pub streamtube: StreamtubeSpec,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fixture", deny_unknown_fields)]
pub enum FieldSpec {
    StraightTube { g: Waveform },
    ShearFlow { coeffs: Vec<f64> },
    RigidHelixFlow { omega: f64, w: f64 },
    StagnationSwirl { alpha: f64, omega0: f64 },
    Poiseuille { p_s: f64, nu: f64, ell: f64, radius: f64 },
    Womersley { p_o: f64, n: f64, nu: f64, radius: f64 },
    /// Tabulated field; relative paths resolve against the config file.
    Grid { path: PathBuf },
}

impl FieldSpec {
    pub fn build(&self, base_dir: &Path) -> efl_core::Result<Fixture> {
        let f = match self {
            FieldSpec::StraightTube { g } => Fixture::StraightTube { g: g.clone() },
            FieldSpec::ShearFlow { coeffs } => Fixture::ShearFlow { profile: EvenPoly::new(coeffs.clone()) },
            FieldSpec::RigidHelixFlow { omega, w } => Fixture::RigidHelixFlow { omega: *omega, w: *w },
            FieldSpec::StagnationSwirl { alpha, omega0 } => Fixture::StagnationSwirl { alpha: *alpha, omega0: *omega0 },
            FieldSpec::Poiseuille { p_s, nu, ell, radius } => Fixture::Poiseuille { p_s: *p_s, nu: *nu, ell: *ell, radius: *radius },
            FieldSpec::Womersley { p_o, n, nu, radius } => Fixture::Womersley(Womersley::new(*p_o, *n, *nu, *radius)?),
            FieldSpec::Grid { path } => {
                let path = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
                Fixture::Gridded(std::sync::Arc::new(GridField::new(GridData::load(&path)?)?))
            }
        };
        f.validate()?;
        Ok(f)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSpec {
    /// Explicit `[r0, theta0, z0]` triples.
    #[serde(default)]
    pub points: Vec<[f64; 3]>,
    #[serde(default)]
    pub lattice: Option<Lattice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lattice {
    pub r_count: usize,
    #[serde(default = "one")]
    pub z_count: usize,
    pub z_start: f64,
    #[serde(default)]
    pub theta0: f64,
    /// Outermost seed radius; defaults to 0.9 of the field radius or length scale.
    #[serde(default)]
    pub r_max: Option<f64>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spans {
    pub t_span: [f64; 2],
    pub z_span: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub ode_tol: f64,
    pub quad_tol: f64,
    /// Overrides `thresholds.fd_step` when set.
    pub fd_step: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { ode_tol: 1e-10, quad_tol: 1e-10, fd_step: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InflowSpec {
    /// Even-polynomial coefficients of `U_s(r)`.
    pub u_s: Vec<f64>,
    #[serde(default)]
    pub u_o: Vec<f64>,
    pub g: Waveform,
    #[serde(default)]
    pub strain: f64,
    #[serde(default)]
    pub swirl: f64,
    pub t_grid: Vec<f64>,
    #[serde(default = "default_delta_t")]
    pub delta_t: f64,
    /// Apply the swirl-region seed filter with `thresholds.gamma`.
    #[serde(default)]
    pub swirl_region: bool,
}

fn default_delta_t() -> f64 {
    0.05
}

impl InflowSpec {
    pub fn family(&self) -> InflowFamily {
        InflowFamily {
            u_s: EvenPoly::new(self.u_s.clone()),
            u_o: EvenPoly::new(self.u_o.clone()),
            g: self.g.clone(),
            strain: self.strain,
            swirl: self.swirl,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamtubeSpec {
    pub enabled: bool,
    pub r0_count: usize,
    pub r0_max: Option<f64>,
    /// Defaults to the start, middle and end of `t_span` (start only for steady fields).
    pub t_nodes: Option<Vec<f64>>,
    pub z_stations: usize,
}

impl Default for StreamtubeSpec {
    fn default() -> Self {
        Self { enabled: true, r0_count: 9, r0_max: None, t_nodes: None, z_stations: 11 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub directory: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Diagnose,
    Validate,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn fd_step(&self) -> f64 {
        self.tolerances.fd_step.unwrap_or(self.thresholds.fd_step)
    }

    pub fn thresholds(&self) -> ThresholdConfig {
        ThresholdConfig { fd_step: self.fd_step(), ..self.thresholds.clone() }
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = |name: &str, v: f64| if v > 0.0 && v.is_finite() { Ok(()) } else { Err(format!("{name} must be positive, got {v}")) };
        positive("tolerances.ode_tol", self.tolerances.ode_tol)?;
        positive("tolerances.quad_tol", self.tolerances.quad_tol)?;
        positive("tolerances.fd_step", self.fd_step())?;
        self.thresholds().validate().map_err(|e| e.to_string())?;
        let [t0, t1] = self.spans.t_span;
        let [z0, z1] = self.spans.z_span;
        if !(t1 > t0) || !(z1 > z0) {
            return Err("spans must be increasing intervals".into());
        }
        for p in &self.seeds.points {
            if !(p[0] >= 0.0) || !(p[2] >= z0 && p[2] < z1) {
                return Err(format!("seed {p:?} lies outside r >= 0, z in [{z0}, {z1})"));
            }
        }
        if let Some(l) = &self.seeds.lattice {
            if l.r_count == 0 || l.z_count == 0 {
                return Err("lattice counts must be positive".into());
            }
            if !(l.z_start >= z0 && l.z_start < z1) {
                return Err(format!("lattice z_start {} outside z_span", l.z_start));
            }
        }
        if self.streamtube.enabled && self.streamtube.r0_count < 5 {
            return Err("streamtube.r0_count must be at least 5".into());
        }
        if let Some(nodes) = &self.streamtube.t_nodes {
            if nodes.is_empty() || nodes.windows(2).any(|w| !(w[1] > w[0])) {
                return Err("streamtube.t_nodes must be non-empty and strictly increasing".into());
            }
        }
        if let Some(inflow) = &self.inflow {
            inflow.g.validate().map_err(|e| e.to_string())?;
            if inflow.t_grid.windows(2).any(|w| !(w[1] > w[0])) {
                return Err("inflow.t_grid must be strictly increasing".into());
            }
            positive("inflow.delta_t", inflow.delta_t)?;
        }
        Ok(())
    }

    /// Outermost seed or tube radius for a field.
    pub fn default_radius(field: &Fixture) -> f64 {
        0.9 * field.max_radius().unwrap_or_else(|| field.length_scale())
    }

    pub fn seeds(&self, field: &Fixture) -> Vec<Seed> {
        let mut seeds: Vec<Seed> = self.seeds.points.iter().map(|p| Seed::new(p[0], p[1], p[2])).collect();
        let lattice = self.seeds.lattice.clone().or_else(|| {
            seeds.is_empty().then(|| Lattice { r_count: 5, z_count: 1, z_start: self.spans.z_span[0], theta0: 0.0, r_max: None })
        });
        if let Some(l) = lattice {
            let r_max = l.r_max.unwrap_or_else(|| Self::default_radius(field));
            let dz = (self.spans.z_span[1] - l.z_start) / l.z_count as f64;
            for k in 0..l.z_count {
                for i in 0..l.r_count {
                    let r = if l.r_count == 1 { r_max } else { r_max * i as f64 / (l.r_count - 1) as f64 };
                    seeds.push(Seed::new(r, l.theta0, l.z_start + k as f64 * dz));
                }
            }
        }
        seeds
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
        [field]
        fixture = "StraightTube"
        g = { kind = "spike-train", base = 1.0, amplitude = 0.5, width = 0.1, times = [0.2, 0.6] }

        [spans]
        t_span = [0.0, 1.0]
        z_span = [0.0, 2.0]

        [seeds.lattice]
        r_count = 3
        z_count = 2
        z_start = 0.0
    "#;

    #[test]
    fn parses_and_expands_lattice() {
        let cfg = ScenarioConfig::parse(SAMPLE).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.mode, Mode::Diagnose);
        let f = cfg.field.build(Path::new(".")).unwrap();
        let seeds = cfg.seeds(&f);
        assert_eq!(seeds.len(), 6);
        assert_eq!(seeds[2].r0, 0.9);
        assert_eq!(seeds[3].z0, 1.0);
    }

    #[test]
    fn rejects_unsorted_spikes_and_unknown_keys() {
        let bad = SAMPLE.replace("[0.2, 0.6]", "[0.6, 0.2]");
        let cfg = ScenarioConfig::parse(&bad).unwrap();
        assert!(cfg.field.build(Path::new(".")).is_err());
        assert!(ScenarioConfig::parse(&format!("{SAMPLE}\n[outputs]\ncolour = 1\n")).is_err());
    }
}
