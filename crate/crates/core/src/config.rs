//! Full description of one simulation run.

use serde::{Deserialize, Serialize};

use crate::engine::{DynamicsDescriptor, Placement, SelfishnessDescriptor, SocialDirection, TtlDescriptor};
use crate::error::ConfigError;
use crate::heuristics::Thresholds;
use crate::mobility::{Grid, Scenario};
use crate::types::Seconds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Policy {
    /// Recognition heuristic only.
    Rh,
    /// Social-circle heuristic.
    Sch,
}

impl Policy {
    pub fn tag(self) -> &'static str {
        match self {
            Policy::Rh => "RH",
            Policy::Sch => "SCH",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CommunityMode {
    /// Ground-truth groups from the scenario wiring.
    Oracle,
    /// Groups detected from memory activation over contact history.
    Activation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommunityParams {
    pub mode: CommunityMode,
    pub decay: f64,
    pub gap_ratio: f64,
    pub refresh_period: Seconds,
    pub max_groups: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilityParams {
    pub step: Seconds,
    pub stay_prob: f64,
    pub zipf_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Width and height of the simulated area, meters.
    pub area: (f64, f64),
    /// Grid columns and rows.
    pub grid: (usize, usize),
    pub channels: usize,
    pub items_per_channel: usize,
    pub communities: usize,
    pub nodes_per_community: usize,
    /// Speed range, m/s.
    pub speed: (f64, f64),
    /// Transmission range, meters.
    pub range: f64,
    pub duration: Seconds,
    pub oc_size: usize,
    pub channel_threshold: u32,
    pub item_threshold: u32,
    pub policy: Policy,
    pub scenario: Scenario,
    pub mobility: MobilityParams,
    pub dynamics: DynamicsDescriptor,
    pub ttl: TtlDescriptor,
    pub selfishness: SelfishnessDescriptor,
    pub community: CommunityParams,
    pub placement: Placement,
    pub seed: u64,
    pub sample_period: Seconds,
}

impl Default for SimConfig {
    /// Static ZT scenario with the standard parameters, SCH with RT 3.
    fn default() -> Self {
        Self {
            area: (1000.0, 1000.0),
            grid: (4, 4),
            channels: 4,
            items_per_channel: 100,
            communities: 4,
            nodes_per_community: 25,
            speed: (1.0, 1.86),
            range: 20.0,
            duration: 50_000,
            oc_size: 10,
            channel_threshold: 3,
            item_threshold: 3,
            policy: Policy::Sch,
            scenario: Scenario::ZipfTravellers,
            mobility: MobilityParams {
                step: 1,
                stay_prob: 0.5,
                zipf_exponent: 1.0,
            },
            dynamics: DynamicsDescriptor::None,
            ttl: TtlDescriptor::default(),
            selfishness: SelfishnessDescriptor::None,
            community: CommunityParams {
                mode: CommunityMode::Oracle,
                decay: 0.5,
                gap_ratio: 2.0,
                refresh_period: 1000,
                max_groups: 4,
            },
            placement: Placement::Uniform,
            seed: 1,
            sample_period: 500,
        }
    }
}

impl SimConfig {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            channel: self.channel_threshold,
            item: self.item_threshold,
        }
    }

    pub fn node_count(&self) -> usize {
        self.communities * self.nodes_per_community
    }

    pub fn grid(&self) -> Grid {
        Grid {
            cols: self.grid.0,
            rows: self.grid.1,
            width: self.area.0,
            height: self.area.1,
        }
    }

    /// Short run label such as `ZT_SCH3`.
    pub fn label(&self) -> String {
        format!("{}_{}{}", self.scenario.tag(), self.policy.tag(), self.item_threshold)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (field, v) in [
            ("channels", self.channels),
            ("items_per_channel", self.items_per_channel),
            ("communities", self.communities),
            ("nodes_per_community", self.nodes_per_community),
            ("grid.cols", self.grid.0),
            ("grid.rows", self.grid.1),
            ("oc.size", self.oc_size),
            ("community.max_groups", self.community.max_groups),
        ] {
            if v == 0 {
                return Err(ConfigError::NotPositive { field });
            }
        }
        for (field, v) in [
            ("mobility.step_s", self.mobility.step),
            ("sample_period", self.sample_period),
            ("community.refresh_period_s", self.community.refresh_period),
        ] {
            if v == 0 {
                return Err(ConfigError::NotPositive { field });
            }
        }
        for (field, v) in [
            ("area.width", self.area.0),
            ("area.height", self.area.1),
            ("range", self.range),
            ("speed.min", self.speed.0),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::NotPositive { field });
            }
        }
        if self.channel_threshold < 1 {
            return Err(ConfigError::NotPositive { field: "threshold.channel" });
        }
        if self.item_threshold < 1 {
            return Err(ConfigError::NotPositive { field: "threshold.item" });
        }
        if !(self.speed.0 <= self.speed.1) || !self.speed.1.is_finite() {
            return Err(ConfigError::SpeedRange {
                min: self.speed.0,
                max: self.speed.1,
            });
        }
        if self.duration % self.sample_period != 0 {
            return Err(ConfigError::SamplingPeriod {
                period: self.sample_period,
                duration: self.duration,
            });
        }
        if self.sample_period % self.mobility.step != 0 {
            return Err(ConfigError::Invalid(format!(
                "sampling period {} s is not a multiple of the time step {} s",
                self.sample_period, self.mobility.step
            )));
        }
        if self.channels > usize::from(u16::MAX) {
            return Err(ConfigError::Invalid("too many channels".into()));
        }
        probability("mobility.stay_prob", self.mobility.stay_prob)?;
        if !(self.mobility.zipf_exponent >= 0.0) {
            return Err(ConfigError::Invalid("mobility.zipf_exp must be non-negative".into()));
        }
        if !(self.community.decay > 0.0) || !(self.community.gap_ratio > 0.0) {
            return Err(ConfigError::Invalid("community.decay and community.gap_ratio must be positive".into()));
        }
        let travellers = self.scenario.travellers_per_community(self.communities);
        if travellers > self.nodes_per_community {
            return Err(ConfigError::TooFewNodes {
                needed: travellers,
                nodes: self.nodes_per_community,
            });
        }
        self.grid().home_cells(self.communities)?;

        for at in self.dynamics.event_times(self.duration) {
            if at == 0 || at >= self.duration {
                return Err(ConfigError::EventAfterEnd {
                    at,
                    duration: self.duration,
                });
            }
            if at % self.mobility.step != 0 {
                return Err(ConfigError::Invalid(format!("dynamics event at {at} s is not on a time step")));
            }
        }
        match self.dynamics {
            DynamicsDescriptor::NewChannel {
                subscribers_per_community,
                items,
                ..
            } => {
                let non_travellers = self.nodes_per_community - travellers;
                if subscribers_per_community > non_travellers {
                    return Err(ConfigError::OutOfRange {
                        field: "dynamics.subscribers_per_community",
                        value: subscribers_per_community as f64,
                        min: 0.0,
                        max: non_travellers as f64,
                    });
                }
                if items == 0 {
                    return Err(ConfigError::NotPositive { field: "dynamics.items" });
                }
            }
            DynamicsDescriptor::PeriodicInjection { period, .. } if period == 0 => {
                return Err(ConfigError::NotPositive { field: "dynamics.period" });
            }
            _ => {}
        }
        if self.ttl.enabled {
            if !(self.ttl.mean > 0.0) || !(self.ttl.sigma >= 0.0) {
                return Err(ConfigError::Invalid("ttl.mean must be positive and ttl.sigma non-negative".into()));
            }
            if self.ttl.floor == 0 {
                return Err(ConfigError::NotPositive { field: "ttl.floor" });
            }
        }
        match self.selfishness {
            SelfishnessDescriptor::None => {}
            SelfishnessDescriptor::Uniform { joint_p } => probability("selfish.p", joint_p)?,
            SelfishnessDescriptor::Social { p0, direction } => {
                probability("selfish.p0", p0)?;
                let _: SocialDirection = direction;
            }
        }
        Ok(())
    }
}

fn probability(field: &'static str, value: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ConfigError::OutOfRange {
            field,
            value,
            min: 0.0,
            max: 1.0,
        })
    }
}
