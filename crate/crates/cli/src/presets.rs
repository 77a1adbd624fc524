//! Experiment presets named after the figures they reproduce.

use crate::experiment::{ExperimentSpec, SweepPoint};
use crate::settings::Settings;
use crate::CliError;

/// Tag and one-line description of every preset.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig1", "OT static: SCH RT 3/12, RH RT 30/75"),
    ("fig2", "ZT static: SCH RT 3, RH RT 3/30/75"),
    ("fig3", "TT static: SCH RT 3, RH RT 30/75"),
    ("fig4", "ZT, subscriptions rotate at 10000 s: SCH RT 5/3, RH RT 75/30"),
    ("fig5", "ZT, new channel at 10000 s with 15 subscribers per community"),
    ("fig6", "ZT, items doubled at 10000 s"),
    ("fig7", "ZT, 100 items per channel injected at 10000 s and every 30000 s, 100000 s run"),
    ("fig8", "ZT static, OC size 2"),
    ("fig9", "ZT static, OC size 5"),
    ("fig10", "ZT static, items placed by channel popularity"),
    ("fig11", "ZT static, items placed inversely to channel popularity"),
    ("fig12", "ZT, mean item TTL 7500 s"),
    ("fig13", "ZT, mean item TTL 10000 s"),
    ("fig14", "ZT, mean item TTL 15000 s"),
    ("fig15", "ZT, uniform exchange probability 0.9"),
    ("fig16", "ZT, uniform exchange probability 0.5"),
    ("fig17", "ZT, uniform exchange probability 0.33"),
    ("fig18", "ZT, SCH RT 3 under uniform exchange probabilities 1/0.9/0.5/0.33"),
    ("fig19", "ZT, SCH RT 3 with social direct/inverse gates, p0 1 and 0.75"),
    ("fig20", "ZT, social direct p0 1 against uniform p 0.58"),
    ("fig21", "ZT, social direct p0 0.75 against uniform p 0.33"),
    ("fig22", "ZT, social inverse p0 1 against uniform p 0.21"),
    ("fig23", "ZT, social inverse p0 0.75 against uniform p 0.12"),
];

fn kv(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn policies(list: &[&str]) -> Vec<SweepPoint> {
    list.iter()
        .map(|p| SweepPoint {
            tag: String::new(),
            overrides: kv(&[("policy", p)]),
        })
        .collect()
}

fn point(tag: &str, pairs: &[(&str, &str)]) -> SweepPoint {
    SweepPoint {
        tag: tag.to_string(),
        overrides: kv(pairs),
    }
}

const STATIC: &[&str] = &["sch:3", "rh:30", "rh:75"];

/// Uniform-versus-social comparison: SCH under the social gate, SCH and RH
/// under the equivalent uniform gate.
fn social_vs_uniform(direction: &str, p0: &str, p: &str) -> Vec<SweepPoint> {
    let social = [
        ("policy", "sch:3"),
        ("selfish", "social"),
        ("selfish.direction", direction),
        ("selfish.p0", p0),
    ];
    let mut points = vec![point(&format!("social-{direction}-p0-{p0}"), &social)];
    for policy in ["sch:3", "rh:30", "rh:75"] {
        points.push(point(
            &format!("uniform-p-{p}"),
            &[("policy", policy), ("selfish", "uniform"), ("selfish.p", p)],
        ));
    }
    points
}

pub fn preset(tag: &str) -> Result<ExperimentSpec, CliError> {
    let mut base = Settings::default();
    let mut set = |pairs: &[(&str, &str)]| -> Result<(), CliError> { base.apply(&kv(pairs)) };
    let points = match tag {
        "fig1" => {
            set(&[("scenario", "ot")])?;
            policies(&["sch:3", "sch:12", "rh:30", "rh:75"])
        }
        "fig2" => policies(&["sch:3", "rh:3", "rh:30", "rh:75"]),
        "fig3" => {
            set(&[("scenario", "tt")])?;
            policies(STATIC)
        }
        "fig4" => {
            set(&[("dynamics", "rotation"), ("dynamics.at", "10000")])?;
            policies(&["sch:5", "sch:3", "rh:75", "rh:30"])
        }
        "fig5" => {
            set(&[
                ("dynamics", "new_channel"),
                ("dynamics.at", "10000"),
                ("dynamics.subscribers_per_community", "15"),
                ("dynamics.items", "100"),
            ])?;
            policies(&["sch:3", "rh:3", "rh:30", "rh:75"])
        }
        "fig6" => {
            set(&[("dynamics", "doubling"), ("dynamics.at", "10000")])?;
            policies(STATIC)
        }
        "fig7" => {
            set(&[
                ("duration", "100000"),
                ("dynamics", "periodic"),
                ("dynamics.start", "10000"),
                ("dynamics.period", "30000"),
                ("dynamics.items_per_channel", "100"),
            ])?;
            policies(&["sch:3", "rh:75"])
        }
        "fig8" => {
            set(&[("oc.size", "2")])?;
            policies(STATIC)
        }
        "fig9" => {
            set(&[("oc.size", "5")])?;
            policies(STATIC)
        }
        "fig10" => {
            set(&[("placement", "popularity")])?;
            policies(STATIC)
        }
        "fig11" => {
            set(&[("placement", "inverse")])?;
            policies(STATIC)
        }
        "fig12" | "fig13" | "fig14" => {
            let mean = match tag {
                "fig12" => "7500",
                "fig13" => "10000",
                _ => "15000",
            };
            set(&[("ttl.enabled", "true"), ("ttl.mean", mean), ("ttl.sigma", "1500")])?;
            policies(STATIC)
        }
        "fig15" | "fig16" | "fig17" => {
            let p = match tag {
                "fig15" => "0.9",
                "fig16" => "0.5",
                _ => "0.33",
            };
            set(&[("selfish", "uniform"), ("selfish.p", p)])?;
            policies(STATIC)
        }
        "fig18" => {
            set(&[("policy", "sch:3")])?;
            ["1", "0.9", "0.5", "0.33"]
                .iter()
                .map(|p| point(&format!("uniform-p-{p}"), &[("selfish", "uniform"), ("selfish.p", p)]))
                .collect()
        }
        "fig19" => {
            set(&[("policy", "sch:3"), ("selfish", "social")])?;
            let mut points = Vec::new();
            for direction in ["direct", "inverse"] {
                for p0 in ["1", "0.75"] {
                    points.push(point(
                        &format!("social-{direction}-p0-{p0}"),
                        &[("selfish.direction", direction), ("selfish.p0", p0)],
                    ));
                }
            }
            points
        }
        "fig20" => social_vs_uniform("direct", "1", "0.58"),
        "fig21" => social_vs_uniform("direct", "0.75", "0.33"),
        "fig22" => social_vs_uniform("inverse", "1", "0.21"),
        "fig23" => social_vs_uniform("inverse", "0.75", "0.12"),
        _ => {
            return Err(CliError::UnknownPreset {
                name: tag.to_string(),
                available: PRESETS.iter().map(|(t, _)| *t).collect::<Vec<_>>().join(", "),
            })
        }
    };
    Ok(ExperimentSpec {
        name: tag.to_string(),
        base,
        points,
        seeds: (1..=10).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use oppsim_core::{DynamicsDescriptor, Policy, Scenario, SelfishnessDescriptor};

    #[test]
    fn every_preset_resolves() {
        for (tag, _) in PRESETS {
            let spec = preset(tag).unwrap();
            assert!(!spec.points.is_empty(), "{tag}");
            spec.resolve().unwrap();
        }
    }

    #[test]
    fn fig2_is_zt_static_with_policy_points() {
        let points = preset("fig2").unwrap().resolve().unwrap();
        let got: Vec<(Policy, u32)> = points.iter().map(|p| (p.config.policy, p.config.item_threshold)).collect();
        assert_eq!(got, vec![(Policy::Sch, 3), (Policy::Rh, 3), (Policy::Rh, 30), (Policy::Rh, 75)]);
        for p in &points {
            assert_eq!(p.config.scenario, Scenario::ZipfTravellers);
            assert_eq!(p.config.duration, 50_000);
            assert_eq!(p.config.dynamics, DynamicsDescriptor::None);
        }
    }

    #[test]
    fn fig7_injects_periodically() {
        let points = preset("fig7").unwrap().resolve().unwrap();
        let c = &points[0].config;
        assert_eq!(c.duration, 100_000);
        assert_eq!(c.dynamics.event_times(c.duration), vec![10_000, 40_000, 70_000]);
    }

    #[test]
    fn fig13_sets_ttl() {
        let c = &preset("fig13").unwrap().resolve().unwrap()[0].config;
        assert!(c.ttl.enabled);
        assert_eq!(c.ttl.mean, 10_000.0);
    }

    #[test]
    fn fig17_uses_uniform_gate() {
        let c = &preset("fig17").unwrap().resolve().unwrap()[0].config;
        assert_eq!(c.selfishness, SelfishnessDescriptor::Uniform { joint_p: 0.33 });
    }

    #[test]
    fn unknown_preset_lists_tags() {
        match preset("fig99") {
            Err(CliError::UnknownPreset { available, .. }) => assert!(available.contains("fig23")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
