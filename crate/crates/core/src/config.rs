//! Scenario configuration: an INI-style `key = value` document with
//! `[section]` headers, plus `section.key=value` command-line overrides.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::measurement_engine::PointerGrid;
use crate::probe_model::{CouplingWindow, GaussianProbe};
use crate::spin_analytic::SpinGeometry;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    Auto,
    Explicit(PointerGrid),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Gamma,
    Phi,
    Lambda,
}

impl SweepVariable {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "gamma" => Some(Self::Gamma),
            "phi" => Some(Self::Phi),
            "lambda" => Some(Self::Lambda),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gamma => "gamma",
            Self::Phi => "phi",
            Self::Lambda => "lambda",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepSpec {
    /// Evenly spaced sweep values, endpoints included.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.start + i as f64 * h).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub geometry: SpinGeometry,
    pub probe: GaussianProbe,
    pub window: CouplingWindow,
    pub lambda: f64,
    pub grid: GridSpec,
    pub sweep: Option<SweepSpec>,
}

fn config_err(section: &str, key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        section: section.into(),
        key: key.into(),
        reason: reason.into(),
    }
}

type RawSections = BTreeMap<String, BTreeMap<String, String>>;

const SECTIONS: &[&str] = &["geometry", "probe", "window", "coupling", "grid", "sweep"];

fn parse_sections(text: &str) -> Result<RawSections> {
    let mut sections: RawSections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (lineno, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_string();
            if !SECTIONS.contains(&name.as_str()) {
                return Err(config_err(&name, "", "unknown section"));
            }
            sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(config_err(
                current.as_deref().unwrap_or(""),
                line,
                format!("line {}: expected `key = value`", lineno + 1),
            ));
        };
        let Some(section) = current.as_deref() else {
            return Err(config_err("", key.trim(), "key before any [section] header"));
        };
        sections
            .get_mut(section)
            .expect("current section exists")
            .insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(sections)
}

/// Applies `section.key=value` overrides on top of the parsed document.
fn apply_overrides(sections: &mut RawSections, overrides: &[String]) -> Result<()> {
    for entry in overrides {
        let Some((path, value)) = entry.split_once('=') else {
            return Err(config_err("", entry, "override must look like section.key=value"));
        };
        let Some((section, key)) = path.trim().split_once('.') else {
            return Err(config_err("", path.trim(), "override key must be section.key"));
        };
        if !SECTIONS.contains(&section) {
            return Err(config_err(section, key, "unknown section"));
        }
        sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.trim().to_string());
    }
    Ok(())
}

struct Section<'a> {
    name: &'a str,
    keys: BTreeMap<String, String>,
}

impl<'a> Section<'a> {
    fn take(sections: &mut RawSections, name: &'a str) -> Option<Self> {
        sections.remove(name).map(|keys| Section { name, keys })
    }

    fn required(sections: &mut RawSections, name: &'a str) -> Result<Self> {
        Self::take(sections, name)
            .ok_or_else(|| config_err(name, "", "required section is missing"))
    }

    fn number(&mut self, key: &str) -> Result<f64> {
        let raw = self
            .keys
            .remove(key)
            .ok_or_else(|| config_err(self.name, key, "required key is missing"))?;
        self.parse_number(key, &raw)
    }

    fn number_or(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.keys.remove(key) {
            Some(raw) => self.parse_number(key, &raw),
            None => Ok(default),
        }
    }

    fn parse_number(&self, key: &str, raw: &str) -> Result<f64> {
        if raw.eq_ignore_ascii_case("inf") {
            return Ok(f64::INFINITY);
        }
        raw.parse::<f64>()
            .map_err(|_| config_err(self.name, key, format!("unparsable number `{raw}`")))
    }

    fn string(&mut self, key: &str) -> Result<String> {
        self.keys
            .remove(key)
            .ok_or_else(|| config_err(self.name, key, "required key is missing"))
    }

    fn finish(self) -> Result<()> {
        if let Some(key) = self.keys.keys().next() {
            return Err(config_err(self.name, key, "unknown key"));
        }
        Ok(())
    }
}

/// Parses and validates a full scenario configuration.
///
/// `overrides` are `section.key=value` entries applied after the document;
/// with `degrees` set, geometry angles (and angle-sweep bounds) are
/// converted from degrees to radians.
pub fn parse_config(text: &str, overrides: &[String], degrees: bool) -> Result<ScenarioConfig> {
    let mut sections = parse_sections(text)?;
    apply_overrides(&mut sections, overrides)?;
    let to_rad = if degrees {
        std::f64::consts::PI / 180.0
    } else {
        1.0
    };

    let mut geometry = Section::required(&mut sections, "geometry")?;
    let theta = geometry.number("theta")? * to_rad;
    let gamma = geometry.number("gamma")? * to_rad;
    let phi = geometry.number("phi")? * to_rad;
    geometry.finish()?;
    let geometry = SpinGeometry::new(theta, gamma, phi)?;

    let mut probe = Section::required(&mut sections, "probe")?;
    let delta_p_spread = probe.number("delta_P")?;
    let delta_p_coherence = probe.number("delta_p")?;
    let p_phi = probe.number_or("p_phi", f64::INFINITY)?;
    let mass = probe.number_or("mass", 1.0)?;
    let hbar = probe.number_or("hbar", 1.0)?;
    probe.finish()?;
    let probe = GaussianProbe::new(delta_p_spread, delta_p_coherence, p_phi, mass, hbar)
        .map_err(|e| config_err("probe", "delta_p", e.to_string()))?;

    let mut window = Section::required(&mut sections, "window")?;
    let kind = window.string("kind")?;
    let prep_lead = window.number_or("prep_lead", 0.0)?;
    let parsed_window = match kind.as_str() {
        "instantaneous" => {
            window.finish()?;
            CouplingWindow::Instantaneous { prep_lead }
        }
        "rectangular" => {
            let duration = window.number("T")?;
            window.finish()?;
            CouplingWindow::Rectangular {
                duration,
                prep_lead,
            }
        }
        other => {
            return Err(config_err(
                "window",
                "kind",
                format!("must be `instantaneous` or `rectangular`, got `{other}`"),
            ))
        }
    };
    parsed_window
        .validate()
        .map_err(|e| config_err("window", "T", e.to_string()))?;

    let mut coupling = Section::required(&mut sections, "coupling")?;
    let lambda = coupling.number("lambda")?;
    coupling.finish()?;
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(config_err(
            "coupling",
            "lambda",
            format!("must be finite and nonzero, got {lambda}"),
        ));
    }

    let grid = match Section::take(&mut sections, "grid") {
        None => GridSpec::Auto,
        Some(section) if section.keys.is_empty() => {
            section.finish()?;
            GridSpec::Auto
        }
        Some(mut section) => {
            let p_min = section.number("p_min")?;
            let p_max = section.number("p_max")?;
            let n_points = section.number("n_points")?;
            section.finish()?;
            if n_points.fract() != 0.0 || n_points < 1.0 {
                return Err(config_err("grid", "n_points", "must be a positive integer"));
            }
            let grid = PointerGrid::new(p_min, p_max, n_points as usize)
                .map_err(|e| config_err("grid", "n_points", e.to_string()))?;
            GridSpec::Explicit(grid)
        }
    };

    let sweep = match Section::take(&mut sections, "sweep") {
        None => None,
        Some(section) if section.keys.is_empty() => None, // single-point mode
        Some(mut section) => {
            let variable_raw = section.string("variable")?;
            let variable = SweepVariable::parse(&variable_raw).ok_or_else(|| {
                config_err(
                    "sweep",
                    "variable",
                    format!("must be gamma, phi, or lambda, got `{variable_raw}`"),
                )
            })?;
            let angle_scale = match variable {
                SweepVariable::Gamma | SweepVariable::Phi => to_rad,
                SweepVariable::Lambda => 1.0,
            };
            let start = section.number("start")? * angle_scale;
            let stop = section.number("stop")? * angle_scale;
            let steps = section.number("steps")?;
            section.finish()?;
            if steps.fract() != 0.0 || steps < 1.0 {
                return Err(config_err("sweep", "steps", "must be a positive integer"));
            }
            validate_sweep_domain(variable, start, stop)?;
            Some(SweepSpec {
                variable,
                start,
                stop,
                steps: steps as usize,
            })
        }
    };

    if let Some(section) = sections.keys().next() {
        return Err(config_err(section, "", "unknown section"));
    }

    Ok(ScenarioConfig {
        geometry,
        probe,
        window: parsed_window,
        lambda,
        grid,
        sweep,
    })
}

fn validate_sweep_domain(variable: SweepVariable, start: f64, stop: f64) -> Result<()> {
    let (lo, hi) = (start.min(stop), start.max(stop));
    match variable {
        SweepVariable::Gamma => {
            if lo < 0.0 || hi > std::f64::consts::TAU + 1e-12 {
                return Err(config_err("sweep", "start", "gamma sweep must stay in [0, 2pi]"));
            }
        }
        SweepVariable::Phi => {
            if lo < 0.0 || hi > std::f64::consts::PI + 1e-12 {
                return Err(config_err("sweep", "start", "phi sweep must stay in [0, pi]"));
            }
        }
        SweepVariable::Lambda => {
            if lo <= 0.0 && hi >= 0.0 {
                return Err(config_err(
                    "sweep",
                    "start",
                    "lambda sweep must not contain zero",
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = "\
[geometry]
theta = 1.5707963267948966
gamma = 0.0
phi = 0.7853981633974483

[probe]
delta_P = 1.0
delta_p = 1.0
p_phi = inf

[window]
kind = rectangular
T = 1.0

[coupling]
lambda = 0.01

[sweep]
variable = gamma
start = 0.0
stop = 6.283185307179586
steps = 101
";

    #[test]
    fn reference_config_parses() {
        let cfg = parse_config(REFERENCE, &[], false).unwrap();
        assert_eq!(cfg.lambda, 0.01);
        assert!(cfg.probe.p_phi.is_infinite());
        assert_eq!(cfg.grid, GridSpec::Auto);
        let sweep = cfg.sweep.unwrap();
        assert_eq!(sweep.variable, SweepVariable::Gamma);
        assert_eq!(sweep.steps, 101);
    }

    #[test]
    fn probe_positivity_rejected() {
        let bad = REFERENCE.replace("delta_p = 1.0", "delta_p = 2.0");
        let err = parse_config(&bad, &[], false).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("probe"), "{msg}");
        assert!(msg.contains("positive semidefinite"), "{msg}");
    }

    #[test]
    fn unknown_key_rejected() {
        let bad = REFERENCE.replace("lambda = 0.01", "lambda = 0.01\nstrength = 2");
        let err = parse_config(&bad, &[], false).unwrap_err();
        assert!(err.to_string().contains("strength"));
    }

    #[test]
    fn missing_required_key_names_it() {
        let bad = REFERENCE.replace("theta = 1.5707963267948966\n", "");
        let err = parse_config(&bad, &[], false).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("geometry") && msg.contains("theta"), "{msg}");
    }

    #[test]
    fn unparsable_number_diagnosed() {
        let bad = REFERENCE.replace("lambda = 0.01", "lambda = tiny");
        let err = parse_config(&bad, &[], false).unwrap_err();
        assert!(err.to_string().contains("tiny"));
    }

    #[test]
    fn empty_sweep_is_single_point() {
        let doc = REFERENCE.split("[sweep]").next().unwrap().to_string() + "[sweep]\n";
        let cfg = parse_config(&doc, &[], false).unwrap();
        assert!(cfg.sweep.is_none());
    }

    #[test]
    fn overrides_apply() {
        let cfg = parse_config(REFERENCE, &["coupling.lambda=0.04".into()], false).unwrap();
        assert_eq!(cfg.lambda, 0.04);
        let err = parse_config(REFERENCE, &["coupling.oops=1".into()], false).unwrap_err();
        assert!(err.to_string().contains("oops"));
    }

    #[test]
    fn degrees_convert_angles_and_angle_sweeps() {
        let doc = REFERENCE
            .replace("theta = 1.5707963267948966", "theta = 90")
            .replace("gamma = 0.0", "gamma = 0")
            .replace("phi = 0.7853981633974483", "phi = 45")
            .replace("stop = 6.283185307179586", "stop = 360");
        let cfg = parse_config(&doc, &[], true).unwrap();
        assert!((cfg.geometry.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((cfg.geometry.phi - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        assert!((cfg.sweep.unwrap().stop - std::f64::consts::TAU).abs() < 1e-9);
    }

    #[test]
    fn explicit_grid_parses() {
        let doc = REFERENCE.replace(
            "[coupling]",
            "[grid]\np_min = -8\np_max = 8\nn_points = 2001\n\n[coupling]",
        );
        let cfg = parse_config(&doc, &[], false).unwrap();
        match cfg.grid {
            GridSpec::Explicit(g) => assert_eq!(g.n_points, 2001),
            GridSpec::Auto => panic!("expected explicit grid"),
        }
    }

    #[test]
    fn lambda_sweep_through_zero_rejected() {
        let doc = REFERENCE
            .replace("variable = gamma", "variable = lambda")
            .replace("start = 0.0", "start = -0.01")
            .replace("stop = 6.283185307179586", "stop = 0.01");
        assert!(parse_config(&doc, &[], false).is_err());
    }
}
