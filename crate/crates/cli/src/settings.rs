//! Flat `key = value` settings with dotted names, resolved into a
//! [`SimConfig`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use oppsim_core::{
    CommunityMode, CommunityParams, DynamicsDescriptor, MobilityParams, Placement, Policy, Scenario,
    SelfishnessDescriptor, SimConfig, SocialDirection, TtlDescriptor,
};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Int { min: u64, max: u64 },
    Float { min: f64, max: f64 },
    Choice(&'static [&'static str]),
    Bool,
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub default: &'static str,
    pub kind: Kind,
    pub help: &'static str,
}

const U: u64 = u32::MAX as u64;

macro_rules! key {
    ($name:literal, $default:literal, $kind:expr, $help:literal) => {
        KeySpec {
            name: $name,
            default: $default,
            kind: $kind,
            help: $help,
        }
    };
}

pub const KEYS: &[KeySpec] = &[
    key!("area.width", "1000", Kind::Float { min: 1.0, max: 1e7 }, "area width, m"),
    key!("area.height", "1000", Kind::Float { min: 1.0, max: 1e7 }, "area height, m"),
    key!("grid.cols", "4", Kind::Int { min: 1, max: 1000 }, "grid columns"),
    key!("grid.rows", "4", Kind::Int { min: 1, max: 1000 }, "grid rows"),
    key!("channels", "4", Kind::Int { min: 1, max: 1000 }, "number of channels"),
    key!("items_per_channel", "100", Kind::Int { min: 1, max: 100_000 }, "initial items per channel"),
    key!("communities", "4", Kind::Int { min: 1, max: 1000 }, "number of communities"),
    key!("nodes_per_community", "25", Kind::Int { min: 1, max: 10_000 }, "nodes per community"),
    key!("speed.min", "1", Kind::Float { min: 0.001, max: 1000.0 }, "minimum speed, m/s"),
    key!("speed.max", "1.86", Kind::Float { min: 0.001, max: 1000.0 }, "maximum speed, m/s"),
    key!("range", "20", Kind::Float { min: 0.001, max: 1e6 }, "transmission range, m"),
    key!("duration", "50000", Kind::Int { min: 0, max: 100_000_000 }, "simulated seconds"),
    key!("oc.size", "10", Kind::Int { min: 1, max: 100_000 }, "opportunistic cache slots"),
    key!("threshold.channel", "3", Kind::Int { min: 1, max: U }, "channel recognition threshold"),
    key!("threshold.item", "3", Kind::Int { min: 1, max: U }, "item recognition threshold (RT)"),
    key!("policy", "sch", Kind::Choice(&["sch", "rh"]), "cache policy; `sch:N` also sets the RT"),
    key!("scenario", "zt", Kind::Choice(&["ot", "zt", "tt"]), "traveller scenario"),
    key!("placement", "uniform", Kind::Choice(&["uniform", "popularity", "inverse"]), "initial item placement"),
    key!("mobility.step_s", "1", Kind::Int { min: 1, max: 3600 }, "time step, s"),
    key!("mobility.stay_prob", "0.5", Kind::Float { min: 0.0, max: 1.0 }, "traveller stay probability"),
    key!("mobility.zipf_exp", "1", Kind::Float { min: 0.0, max: 100.0 }, "ZT destination Zipf exponent"),
    key!("community.mode", "oracle", Kind::Choice(&["oracle", "activation"]), "social group source"),
    key!("community.decay", "0.5", Kind::Float { min: 1e-6, max: 100.0 }, "activation decay"),
    key!("community.gap_ratio", "2", Kind::Float { min: 1e-6, max: 1e6 }, "group split gap ratio"),
    key!("community.refresh_period_s", "1000", Kind::Int { min: 1, max: 100_000_000 }, "group refresh period, s"),
    key!("community.max_groups", "4", Kind::Int { min: 1, max: 1000 }, "maximum detected peer groups"),
    key!(
        "dynamics",
        "none",
        Kind::Choice(&["none", "rotation", "new_channel", "doubling", "periodic"]),
        "dynamic event kind"
    ),
    key!("dynamics.at", "10000", Kind::Int { min: 0, max: 100_000_000 }, "event time, s"),
    key!("dynamics.subscribers_per_community", "15", Kind::Int { min: 0, max: 10_000 }, "new-channel subscribers per community"),
    key!("dynamics.items", "100", Kind::Int { min: 1, max: 100_000 }, "items of the new channel"),
    key!("dynamics.start", "10000", Kind::Int { min: 0, max: 100_000_000 }, "first periodic injection, s"),
    key!("dynamics.period", "30000", Kind::Int { min: 1, max: 100_000_000 }, "periodic injection period, s"),
    key!("dynamics.items_per_channel", "100", Kind::Int { min: 1, max: 100_000 }, "items per channel per periodic injection"),
    key!("ttl.enabled", "false", Kind::Bool, "enable item expiry"),
    key!("ttl.mean", "10000", Kind::Float { min: 1.0, max: 1e9 }, "mean item lifetime, s"),
    key!("ttl.sigma", "1500", Kind::Float { min: 0.0, max: 1e9 }, "lifetime standard deviation, s"),
    key!("ttl.floor", "60", Kind::Int { min: 1, max: 100_000_000 }, "minimum lifetime, s"),
    key!("selfish", "none", Kind::Choice(&["none", "uniform", "social"]), "exchange gate"),
    key!("selfish.p", "1", Kind::Float { min: 0.0, max: 1.0 }, "joint exchange probability (uniform gate)"),
    key!("selfish.p0", "1", Kind::Float { min: 0.0, max: 1.0 }, "rank-0 acceptance probability (social gate)"),
    key!("selfish.direction", "direct", Kind::Choice(&["direct", "inverse"]), "social gate ranking"),
    key!("seed", "1", Kind::Int { min: 0, max: u64::MAX }, "master seed"),
    key!("sample_period", "500", Kind::Int { min: 1, max: 100_000_000 }, "hit-rate sampling period, s"),
];

pub fn spec(name: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.name == name)
}

/// Long flag for a key: `oc.size` -> `oc-size`.
pub fn flag_name(key: &str) -> String {
    key.replace(['.', '_'], "-")
}

/// Resolved settings: defaults overlaid with file and flag values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<&'static str, String>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            values: KEYS.iter().map(|k| (k.name, k.default.to_string())).collect(),
        }
    }
}

impl Settings {
    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_default()
    }

    /// Sets one key after checking its type and declared range.
    /// `policy = sch:N` also sets `threshold.item`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        if key == "policy" {
            if let Some((policy, rt)) = value.split_once(':') {
                self.set("policy", policy)?;
                return self.set("threshold.item", rt);
            }
        }
        let spec = spec(key).ok_or_else(|| CliError::UnknownKey(key.to_string()))?;
        let normalized = check(spec, value)?;
        self.values.insert(spec.name, normalized);
        Ok(())
    }

    pub fn apply(&mut self, overrides: &[(String, String)]) -> Result<(), CliError> {
        for (k, v) in overrides {
            self.set(k, v)?;
        }
        Ok(())
    }

    fn int(&self, key: &str) -> u64 {
        self.get(key).parse().expect("validated integer")
    }

    fn uint(&self, key: &str) -> usize {
        self.int(key) as usize
    }

    fn float(&self, key: &str) -> f64 {
        self.get(key).parse().expect("validated float")
    }

    pub fn to_config(&self) -> Result<SimConfig, CliError> {
        let dynamics = match self.get("dynamics") {
            "none" => DynamicsDescriptor::None,
            "rotation" => DynamicsDescriptor::SubscriptionRotation {
                at: self.int("dynamics.at"),
            },
            "new_channel" => DynamicsDescriptor::NewChannel {
                at: self.int("dynamics.at"),
                subscribers_per_community: self.uint("dynamics.subscribers_per_community"),
                items: self.uint("dynamics.items"),
            },
            "doubling" => DynamicsDescriptor::ItemDoubling {
                at: self.int("dynamics.at"),
            },
            "periodic" => DynamicsDescriptor::PeriodicInjection {
                start: self.int("dynamics.start"),
                period: self.int("dynamics.period"),
                items_per_channel: self.uint("dynamics.items_per_channel"),
            },
            other => unreachable!("validated dynamics {other}"),
        };
        let selfishness = match self.get("selfish") {
            "none" => SelfishnessDescriptor::None,
            "uniform" => SelfishnessDescriptor::Uniform {
                joint_p: self.float("selfish.p"),
            },
            _ => SelfishnessDescriptor::Social {
                p0: self.float("selfish.p0"),
                direction: if self.get("selfish.direction") == "inverse" {
                    SocialDirection::Inverse
                } else {
                    SocialDirection::Direct
                },
            },
        };
        let config = SimConfig {
            area: (self.float("area.width"), self.float("area.height")),
            grid: (self.uint("grid.cols"), self.uint("grid.rows")),
            channels: self.uint("channels"),
            items_per_channel: self.uint("items_per_channel"),
            communities: self.uint("communities"),
            nodes_per_community: self.uint("nodes_per_community"),
            speed: (self.float("speed.min"), self.float("speed.max")),
            range: self.float("range"),
            duration: self.int("duration"),
            oc_size: self.uint("oc.size"),
            channel_threshold: self.int("threshold.channel") as u32,
            item_threshold: self.int("threshold.item") as u32,
            policy: if self.get("policy") == "rh" { Policy::Rh } else { Policy::Sch },
            scenario: match self.get("scenario") {
                "ot" => Scenario::OneTraveller,
                "tt" => Scenario::ThreeTravellers,
                _ => Scenario::ZipfTravellers,
            },
            mobility: MobilityParams {
                step: self.int("mobility.step_s"),
                stay_prob: self.float("mobility.stay_prob"),
                zipf_exponent: self.float("mobility.zipf_exp"),
            },
            dynamics,
            ttl: TtlDescriptor {
                enabled: self.get("ttl.enabled") == "true",
                mean: self.float("ttl.mean"),
                sigma: self.float("ttl.sigma"),
                floor: self.int("ttl.floor"),
            },
            selfishness,
            community: CommunityParams {
                mode: if self.get("community.mode") == "activation" {
                    CommunityMode::Activation
                } else {
                    CommunityMode::Oracle
                },
                decay: self.float("community.decay"),
                gap_ratio: self.float("community.gap_ratio"),
                refresh_period: self.int("community.refresh_period_s"),
                max_groups: self.uint("community.max_groups"),
            },
            placement: match self.get("placement") {
                "popularity" => Placement::Popularity,
                "inverse" => Placement::Inverse,
                _ => Placement::Uniform,
            },
            seed: self.int("seed"),
            sample_period: self.int("sample_period"),
        };
        config.validate()?;
        Ok(config)
    }

    /// Settings that differ from the defaults, as `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for k in KEYS {
            let v = self.get(k.name);
            if v != k.default {
                let _ = writeln!(out, "{} = {}", k.name, v);
            }
        }
        out
    }
}

fn check(spec: &KeySpec, value: &str) -> Result<String, CliError> {
    let invalid = |why: String| CliError::InvalidValue {
        key: spec.name.to_string(),
        value: value.to_string(),
        why,
    };
    match spec.kind {
        Kind::Int { min, max } => {
            let v: u64 = value.parse().map_err(|_| invalid("expected a non-negative integer".into()))?;
            if v < min || v > max {
                return Err(invalid(format!("outside [{min}, {max}]")));
            }
            Ok(v.to_string())
        }
        Kind::Float { min, max } => {
            let v: f64 = value.parse().map_err(|_| invalid("expected a number".into()))?;
            if !(min..=max).contains(&v) {
                return Err(invalid(format!("outside [{min}, {max}]")));
            }
            Ok(value.to_string())
        }
        Kind::Choice(options) => {
            let v = value.to_ascii_lowercase();
            if options.contains(&v.as_str()) {
                Ok(v)
            } else {
                Err(invalid(format!("expected one of {}", options.join(", "))))
            }
        }
        Kind::Bool => match value.to_ascii_lowercase().as_str() {
            "true" | "yes" | "on" | "1" => Ok("true".into()),
            "false" | "no" | "off" | "0" => Ok("false".into()),
            _ => Err(invalid("expected true or false".into())),
        },
    }
}

/// Contents of a config file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    pub values: Vec<(String, String)>,
    /// `sweep.<key> = v1, v2, ...`
    pub sweeps: Vec<(String, Vec<String>)>,
}

/// Parses `key = value` lines. `#` starts a comment; blank lines are
/// ignored.
pub fn parse_config(text: &str) -> Result<ConfigFile, CliError> {
    let mut file = ConfigFile::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Syntax {
            line: n + 1,
            text: raw.to_string(),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if let Some(key) = k.strip_prefix("sweep.") {
            if key != "policy" && spec(key).is_none() {
                return Err(CliError::UnknownKey(key.to_string()));
            }
            let values: Vec<String> = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            if values.is_empty() {
                return Err(CliError::Syntax {
                    line: n + 1,
                    text: raw.to_string(),
                });
            }
            file.sweeps.push((key.to_string(), values));
        } else {
            file.values.push((k.to_string(), v.to_string()));
        }
    }
    Ok(file)
}
