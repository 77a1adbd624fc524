//! Experiment specification: base settings, sweep points and seeds.

use oppsim_core::SimConfig;

use crate::settings::{ConfigFile, Settings};
use crate::presets::preset;
use crate::CliError;

/// One curve of an experiment: overrides applied on top of the base.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepPoint {
    /// Suffix distinguishing points that share scenario, policy and RT.
    pub tag: String,
    pub overrides: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentSpec {
    pub name: String,
    pub base: Settings,
    pub points: Vec<SweepPoint>,
    pub seeds: Vec<u64>,
}

/// A sweep point turned into a validated config (seed not yet applied).
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedPoint {
    pub label: String,
    /// File stem, unique within the experiment.
    pub stem: String,
    pub config: SimConfig,
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '-' })
        .collect()
}

impl ExperimentSpec {
    pub fn resolve(&self) -> Result<Vec<ResolvedPoint>, CliError> {
        let mut out: Vec<ResolvedPoint> = Vec::with_capacity(self.points.len());
        for point in &self.points {
            let mut settings = self.base.clone();
            settings.apply(&point.overrides)?;
            let config = settings.to_config()?;
            let label = if point.tag.is_empty() {
                config.label()
            } else {
                format!("{}_{}", config.label(), point.tag)
            };
            let mut stem = sanitize(&label);
            if out.iter().any(|p| p.stem == stem) {
                stem = format!("{stem}_{}", out.len());
            }
            out.push(ResolvedPoint { label, stem, config });
        }
        Ok(out)
    }
}

/// Combines an optional preset, an optional config file and flag overrides.
/// Precedence: preset, then file, then flags; sweep point overrides apply
/// last. File sweeps multiply the preset points. Seeds are the master seed
/// and its `runs - 1` successors.
pub fn build_spec(
    preset_tag: Option<&str>,
    file: Option<&ConfigFile>,
    flags: &[(String, String)],
    runs: usize,
) -> Result<ExperimentSpec, CliError> {
    let mut spec = match preset_tag {
        Some(tag) => preset(tag)?,
        None => ExperimentSpec {
            name: "custom".into(),
            base: Settings::default(),
            points: vec![SweepPoint {
                tag: String::new(),
                overrides: Vec::new(),
            }],
            seeds: Vec::new(),
        },
    };
    if let Some(file) = file {
        spec.base.apply(&file.values)?;
        for (key, values) in &file.sweeps {
            let mut next = Vec::with_capacity(spec.points.len() * values.len());
            for p in &spec.points {
                for v in values {
                    let mut overrides = p.overrides.clone();
                    overrides.push((key.clone(), v.clone()));
                    let part = format!("{}-{}", key.replace('.', "-"), v);
                    let tag = if p.tag.is_empty() { part } else { format!("{}_{part}", p.tag) };
                    next.push(SweepPoint { tag, overrides });
                }
            }
            spec.points = next;
        }
    }
    spec.base.apply(flags)?;
    let master: u64 = spec.base.get("seed").parse().expect("validated seed");
    spec.seeds = (0..runs.max(1) as u64).map(|i| master.wrapping_add(i)).collect();
    Ok(spec)
}
