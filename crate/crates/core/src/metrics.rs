//! Hit rate, message overhead and time-series output.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::MetricsError;
use crate::types::{ItemCatalog, NodeId, NodeState, Seconds};

pub const CSV_HEADER: &str = "t,hit_rate,overhead_total,overhead_data,overhead_control";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSample {
    pub t: Seconds,
    pub hit_rate: f64,
    pub overhead_total: f64,
    pub overhead_data: f64,
    pub overhead_control: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    /// Seeds that contributed; one for a single run.
    pub seeds: Vec<u64>,
    pub policy: String,
    pub item_threshold: u32,
    pub scenario: String,
    pub label: String,
}

impl RunMeta {
    pub fn for_config(config: &SimConfig) -> Self {
        Self {
            seeds: vec![config.seed],
            policy: config.policy.tag().to_string(),
            item_threshold: config.item_threshold,
            scenario: config.scenario.tag().to_string(),
            label: config.label(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSeries {
    pub meta: RunMeta,
    pub samples: Vec<MetricsSample>,
}

impl MetricsSeries {
    pub fn last(&self) -> Option<&MetricsSample> {
        self.samples.last()
    }

    /// Sample taken exactly at `t`.
    pub fn at(&self, t: Seconds) -> Option<&MetricsSample> {
        self.samples
            .binary_search_by_key(&t, |s| s.t)
            .ok()
            .map(|i| &self.samples[i])
    }

    /// Last sample taken strictly before `t`.
    pub fn before(&self, t: Seconds) -> Option<&MetricsSample> {
        let i = self.samples.partition_point(|s| s.t < t);
        i.checked_sub(1).map(|i| &self.samples[i])
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{},{},{}",
                s.t, s.hit_rate, s.overhead_total, s.overhead_data, s.overhead_control
            )?;
        }
        Ok(())
    }

    /// Whitespace-separated columns with a commented header, for gnuplot.
    pub fn write_dat<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "# {} seeds={:?}", self.meta.label, self.meta.seeds)?;
        writeln!(out, "# {}", CSV_HEADER.replace(',', " "))?;
        for s in &self.samples {
            writeln!(
                out,
                "{} {} {} {} {}",
                s.t, s.hit_rate, s.overhead_total, s.overhead_data, s.overhead_control
            )?;
        }
        Ok(())
    }
}

/// Mean over `population` (all nodes when `None`) of the fraction of the
/// subscribed channel's items each node has consumed. A channel without
/// items contributes 0.
pub fn hit_rate(nodes: &[NodeState], catalog: &ItemCatalog, population: Option<&[NodeId]>) -> f64 {
    let fraction = |n: &NodeState| {
        let total = catalog.items_in_channel(n.subscription);
        if total == 0 {
            0.0
        } else {
            n.delivered.len() as f64 / total as f64
        }
    };
    let (sum, count) = match population {
        None => (nodes.iter().map(fraction).sum::<f64>(), nodes.len()),
        Some(ids) => (ids.iter().map(|id| fraction(&nodes[id.index()])).sum(), ids.len()),
    };
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Pointwise mean of runs sampled at the same instants.
pub fn average_runs(series: &[MetricsSeries]) -> Result<MetricsSeries, MetricsError> {
    let first = series.first().ok_or(MetricsError::Empty)?;
    for (index, s) in series.iter().enumerate() {
        if s.samples.len() != first.samples.len() || s.samples.iter().zip(&first.samples).any(|(a, b)| a.t != b.t) {
            return Err(MetricsError::MismatchedInstants { index });
        }
    }
    let k = series.len() as f64;
    let samples = (0..first.samples.len())
        .map(|i| {
            let mean = |f: fn(&MetricsSample) -> f64| series.iter().map(|s| f(&s.samples[i])).sum::<f64>() / k;
            MetricsSample {
                t: first.samples[i].t,
                hit_rate: mean(|s| s.hit_rate),
                overhead_total: mean(|s| s.overhead_total),
                overhead_data: mean(|s| s.overhead_data),
                overhead_control: mean(|s| s.overhead_control),
            }
        })
        .collect();
    let mut meta = first.meta.clone();
    meta.seeds = series.iter().flat_map(|s| s.meta.seeds.iter().copied()).collect();
    Ok(MetricsSeries { meta, samples })
}
