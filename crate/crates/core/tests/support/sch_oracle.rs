//! Independent trace oracle for `sch_filter`, shared with the acceptance
//! suite.
//!
//! The oracle walks the recursion as a loop over integer levels, using raw
//! per-member level tables and integer arithmetic. It returns the items the
//! trace fixes deterministically plus the pool and size of the final uniform
//! choice, if the trace reaches one.

#![allow(dead_code)]

use std::collections::BTreeSet;

use oppsim_core::heuristics::{random_subset, sch_filter, GroupMeanProvider, Mean, SelectionContext, Subject};
use oppsim_core::{ChannelId, ItemCatalog, ItemId, ItemSet, Thresholds};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Levels reported by each member of each group; `None` marks a member
/// whose vector is unknown.
#[derive(Debug, Clone)]
pub struct Tables {
    /// `item_levels[g][m][i]`
    pub item_levels: Vec<Vec<Option<Vec<u32>>>>,
    /// `channel_levels[g][m][c]`
    pub channel_levels: Vec<Vec<Option<Vec<u32>>>>,
}

impl Tables {
    fn sum_count(rows: &[Option<Vec<u32>>], idx: usize) -> (u64, u64) {
        rows.iter()
            .flatten()
            .fold((0, 0), |(s, c), r| (s + u64::from(r[idx]), c + 1))
    }
}

impl GroupMeanProvider for Tables {
    fn last_group(&self) -> usize {
        self.item_levels.len() - 1
    }

    fn mean(&self, group: usize, subject: Subject) -> Mean {
        let rows = match subject {
            Subject::Item(_) => &self.item_levels[group],
            Subject::Channel(_) => &self.channel_levels[group],
        };
        let idx = match subject {
            Subject::Item(i) => i.index(),
            Subject::Channel(c) => c.index(),
        };
        Mean::of(rows.iter().flatten().map(|r| r[idx]))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub fixed: BTreeSet<u32>,
    pub pool: BTreeSet<u32>,
    pub random_slots: usize,
}

pub fn oracle(s: &BTreeSet<u32>, o: usize, j: usize, channel_of: &[u16], tables: &Tables, th: Thresholds) -> Trace {
    let last = tables.item_levels.len() - 1;
    let mut fixed = BTreeSet::new();
    let mut current = s.clone();
    let mut slots = o;
    let mut g = j;
    'outer: loop {
        if slots == 0 || current.is_empty() {
            return Trace { fixed, pool: BTreeSet::new(), random_slots: 0 };
        }
        if g > last {
            return Trace { fixed, pool: current, random_slots: slots };
        }
        let level = |i: u32| -> Option<u64> {
            let (cs, cc) = Tables::sum_count(&tables.channel_levels[g], channel_of[i as usize] as usize);
            let channel_ok = cc > 0 && cs >= u64::from(th.channel) * cc;
            if !channel_ok {
                return None;
            }
            let (is, ic) = Tables::sum_count(&tables.item_levels[g], i as usize);
            let l = if ic == 0 { 0 } else { (is / ic).min(u64::from(th.item)) };
            (l < u64::from(th.item)).then_some(l)
        };
        let mut round = BTreeSet::new();
        for lvl in 0..u64::from(th.item) {
            let bucket: BTreeSet<u32> = current.iter().copied().filter(|&i| level(i) == Some(lvl)).collect();
            if round.len() + bucket.len() > slots {
                slots -= round.len();
                fixed.extend(round);
                current = bucket;
                g += 1;
                continue 'outer;
            }
            round.extend(bucket);
        }
        fixed.extend(round);
        return Trace { fixed, pool: BTreeSet::new(), random_slots: 0 };
    }
}

/// One randomized case: |S| ≤ 8, O ≤ 4, at most 3 groups.
pub struct Case {
    pub s: BTreeSet<u32>,
    pub o: usize,
    pub j: usize,
    pub channel_of: Vec<u16>,
    pub tables: Tables,
    pub th: Thresholds,
}

pub fn random_case<R: Rng>(rng: &mut R) -> Case {
    let n_items = 8u32;
    let n_channels = 2usize;
    let groups = rng.random_range(1..=3);
    let th = Thresholds {
        channel: rng.random_range(1..=3),
        item: rng.random_range(1..=4),
    };
    let mut item_levels = Vec::new();
    let mut channel_levels = Vec::new();
    for g in 0..groups {
        let members = if g == 0 { 1 } else { rng.random_range(1..=4) };
        let mut irows = Vec::new();
        let mut crows = Vec::new();
        for _ in 0..members {
            if g > 0 && rng.random_bool(0.2) {
                irows.push(None);
                crows.push(None);
                continue;
            }
            irows.push(Some((0..n_items).map(|_| rng.random_range(0..=5)).collect()));
            crows.push(Some((0..n_channels).map(|_| rng.random_range(0..=5)).collect()));
        }
        item_levels.push(irows);
        channel_levels.push(crows);
    }
    let size = rng.random_range(0..=8usize);
    let s: BTreeSet<u32> = rand::seq::index::sample(rng, n_items as usize, size)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    Case {
        s,
        o: rng.random_range(0..=4),
        j: rng.random_range(0..=groups),
        channel_of: (0..n_items).map(|_| rng.random_range(0..n_channels as u16)).collect(),
        tables: Tables { item_levels, channel_levels },
        th,
    }
}

/// Checks `sch_filter` against the oracle on `cases` random cases. Returns
/// a description of the first mismatch.
pub fn check_equivalence(cases: usize, seed: u64) -> Result<(), String> {
    let mut gen = ChaCha8Rng::seed_from_u64(seed);
    for n in 0..cases {
        let case = random_case(&mut gen);
        let mut catalog = ItemCatalog::new(2);
        for &c in &case.channel_of {
            catalog.create(ChannelId(c), 0, None);
        }
        let ctx = SelectionContext {
            catalog: &catalog,
            groups: &case.tables,
            thresholds: case.th,
        };
        let s: ItemSet = case.s.iter().map(|&i| ItemId(i)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let mut replay = rng.clone();
        let got: BTreeSet<u32> = sch_filter(&s, case.o, case.j, &ctx, &mut rng).into_iter().map(|i| i.0).collect();

        let trace = oracle(&case.s, case.o, case.j, &case.channel_of, &case.tables, case.th);
        let pool: ItemSet = trace.pool.iter().map(|&i| ItemId(i)).collect();
        let mut expected = trace.fixed.clone();
        expected.extend(random_subset(&pool, trace.random_slots, &mut replay).into_iter().map(|i| i.0));

        let random_part: BTreeSet<u32> = got.difference(&trace.fixed).copied().collect();
        let structurally_ok = trace.fixed.is_subset(&got)
            && random_part.is_subset(&trace.pool)
            && random_part.len() == trace.random_slots.min(trace.pool.len());
        if !structurally_ok || got != expected {
            return Err(format!(
                "case {n}: S={:?} O={} j={} th={:?} got={got:?} oracle={trace:?}",
                case.s, case.o, case.j, case.th
            ));
        }
    }
    Ok(())
}
