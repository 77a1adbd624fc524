//! The simulation loop.
//!
//! Each tick applies scheduled dynamics, expires items, moves nodes and
//! handles every contact that starts in that tick, in node-id order.
//! Mobility, setup, dynamics and protocol decisions draw from separate
//! random streams, so runs that differ only in policy share the same
//! mobility trace and initial placement.

use std::collections::BinaryHeap;
use std::cmp::Reverse;
use std::io::Write;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::community::{detect_groups, oracle_groups, SocialGroups};
use crate::config::{CommunityMode, Policy, SimConfig};
use crate::error::{ConfigError, GateError};
use crate::heuristics::{rh_select, select_oc_contents, RecognitionVector, SelectionContext, SocialView};
use crate::metrics::{hit_rate, MetricsSample, MetricsSeries, RunMeta};
use crate::mobility::{community_preference, ContactTracker, MobilityWorld, Scenario, Traveller, TravellerPlan};
use crate::types::{ChannelId, ItemCatalog, ItemId, ItemSet, NodeId, NodeState, Seconds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DynamicsDescriptor {
    None,
    SubscriptionRotation {
        at: Seconds,
    },
    NewChannel {
        at: Seconds,
        subscribers_per_community: usize,
        items: usize,
    },
    ItemDoubling {
        at: Seconds,
    },
    PeriodicInjection {
        start: Seconds,
        period: Seconds,
        items_per_channel: usize,
    },
}

impl DynamicsDescriptor {
    /// Scheduled event instants before `duration`, ascending. For periodic
    /// injection the list stops at the last instant before the end.
    pub fn event_times(&self, duration: Seconds) -> Vec<Seconds> {
        match *self {
            DynamicsDescriptor::None => Vec::new(),
            DynamicsDescriptor::SubscriptionRotation { at }
            | DynamicsDescriptor::NewChannel { at, .. }
            | DynamicsDescriptor::ItemDoubling { at } => vec![at],
            DynamicsDescriptor::PeriodicInjection { start, period, .. } => {
                if period == 0 {
                    return vec![start];
                }
                let mut times = Vec::new();
                let mut t = start;
                while t < duration.max(start + 1) {
                    times.push(t);
                    t += period;
                }
                times
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TtlDescriptor {
    pub enabled: bool,
    pub mean: f64,
    pub sigma: f64,
    pub floor: Seconds,
}

impl Default for TtlDescriptor {
    fn default() -> Self {
        Self {
            enabled: false,
            mean: 10_000.0,
            sigma: 1500.0,
            floor: 60,
        }
    }
}

impl TtlDescriptor {
    /// Lifetime of one item: a Gaussian sample rounded to seconds, clamped
    /// from below at the floor.
    pub fn sample_lifetime<R: Rng + ?Sized>(&self, rng: &mut R) -> Seconds {
        let normal = Normal::new(self.mean, self.sigma).expect("valid TTL distribution");
        let v = normal.sample(rng).round();
        if v <= self.floor as f64 {
            self.floor
        } else {
            v as Seconds
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SocialDirection {
    /// Most frequently met group ranked first.
    Direct,
    /// Least frequently met group ranked first.
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SelfishnessDescriptor {
    None,
    Uniform { joint_p: f64 },
    Social { p0: f64, direction: SocialDirection },
}

/// Which nodes generate the initial items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Placement {
    Uniform,
    Popularity,
    Inverse,
}

/// Cumulative message counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overhead {
    pub control: u64,
    pub data: u64,
}

impl Overhead {
    pub fn total(&self) -> u64 {
        self.control + self.data
    }
}

/// Per-side outcome of the selfish gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateSide {
    /// Rank of the peer's group in this side's preference order (social
    /// gate only).
    pub rank: Option<usize>,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateOutcome {
    pub a: GateSide,
    pub b: GateSide,
}

impl GateOutcome {
    pub fn proceed(&self) -> bool {
        self.a.accepted && self.b.accepted
    }
}

/// Gate bookkeeping over a run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GateStats {
    pub offered: u64,
    pub proceeded: u64,
    /// Side decisions per peer-group rank.
    pub rank_trials: Vec<u64>,
    pub rank_accepts: Vec<u64>,
}

impl GateStats {
    fn record(&mut self, outcome: &GateOutcome) {
        self.offered += 1;
        self.proceeded += u64::from(outcome.proceed());
        for side in [outcome.a, outcome.b] {
            if let Some(r) = side.rank {
                if self.rank_trials.len() <= r {
                    self.rank_trials.resize(r + 1, 0);
                    self.rank_accepts.resize(r + 1, 0);
                }
                self.rank_trials[r] += 1;
                self.rank_accepts[r] += u64::from(side.accepted);
            }
        }
    }
}

/// Peer groups G_1..G_n of `node` in gate preference order. Frequency is
/// the number of contact starts with the group's members so far; ties keep
/// group order (direct) or reverse it (inverse).
pub fn group_preference(node: &NodeState, groups: &SocialGroups, direction: SocialDirection) -> Vec<usize> {
    let mut order: Vec<(usize, usize)> = (1..groups.len())
        .map(|g| {
            let contacts = groups.members(g).iter().map(|&p| node.contact_history[p.index()].count()).sum();
            (g, contacts)
        })
        .collect();
    order.sort_by(|(ga, ca), (gb, cb)| cb.cmp(ca).then(ga.cmp(gb)));
    if direction == SocialDirection::Inverse {
        order.reverse();
    }
    order.into_iter().map(|(g, _)| g).collect()
}

/// Rank of `peer`'s group in `node`'s preference order. Peers outside every
/// peer group take the last rank.
pub fn peer_rank(node: &NodeState, groups: &SocialGroups, peer: NodeId, direction: SocialDirection) -> usize {
    let order = group_preference(node, groups, direction);
    let last = order.len().saturating_sub(1);
    match groups.group_of(peer) {
        Some(g) if g > 0 => order.iter().position(|&x| x == g).unwrap_or(last),
        _ => last,
    }
}

/// Acceptance probability p_i = 2^-i p_0.
pub fn rank_probability(p0: f64, rank: usize) -> f64 {
    p0 * 0.5f64.powi(rank as i32)
}

/// Selfish gate at a contact start. Both sides draw, in order a then b.
pub fn exchange_gate<R: Rng + ?Sized>(
    a: &NodeState,
    groups_a: &SocialGroups,
    b: &NodeState,
    groups_b: &SocialGroups,
    descriptor: &SelfishnessDescriptor,
    rng: &mut R,
) -> GateOutcome {
    match *descriptor {
        SelfishnessDescriptor::None => {
            let side = GateSide { rank: None, accepted: true };
            GateOutcome { a: side, b: side }
        }
        SelfishnessDescriptor::Uniform { joint_p } => {
            let p = joint_p.sqrt();
            let accept_a = rng.random_bool(p);
            let accept_b = rng.random_bool(p);
            GateOutcome {
                a: GateSide { rank: None, accepted: accept_a },
                b: GateSide { rank: None, accepted: accept_b },
            }
        }
        SelfishnessDescriptor::Social { p0, direction } => {
            let rank_a = peer_rank(a, groups_a, b.id, direction);
            let rank_b = peer_rank(b, groups_b, a.id, direction);
            let accept_a = rng.random_bool(rank_probability(p0, rank_a));
            let accept_b = rng.random_bool(rank_probability(p0, rank_b));
            GateOutcome {
                a: GateSide { rank: Some(rank_a), accepted: accept_a },
                b: GateSide { rank: Some(rank_b), accepted: accept_b },
            }
        }
    }
}

/// Joint exchange probability of a uniform gate equivalent to per-group
/// probabilities `probs` weighted by mean group sizes `sizes`:
/// `(Σ n_k p_k / Σ n_k)^2`.
pub fn equivalent_uniform_p(sizes: &[f64], probs: &[f64]) -> Result<f64, GateError> {
    if sizes.len() != probs.len() {
        return Err(GateError::Misaligned {
            sizes: sizes.len(),
            probs: probs.len(),
        });
    }
    let total: f64 = sizes.iter().sum();
    if sizes.is_empty() || total <= 0.0 {
        return Err(GateError::EmptyGroups);
    }
    let weighted: f64 = sizes.iter().zip(probs).map(|(n, p)| n * p).sum();
    let root = weighted / total;
    Ok(root * root)
}

/// Zipf(exponent) split of `total` over `ranks` ranks with largest-remainder
/// rounding. Ties in the remainder go to the better rank.
pub fn zipf_counts(total: usize, ranks: usize, exponent: f64) -> Vec<usize> {
    if ranks == 0 {
        return Vec::new();
    }
    let w: Vec<f64> = (1..=ranks).map(|r| (r as f64).powf(-exponent)).collect();
    let sum: f64 = w.iter().sum();
    let quotas: Vec<f64> = w.iter().map(|x| total as f64 * x / sum).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| (q + 1e-9).floor() as usize).collect();
    let mut left = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..ranks).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - counts[a] as f64;
        let fb = quotas[b] - counts[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for r in order {
        if left == 0 {
            break;
        }
        counts[r] += 1;
        left -= 1;
    }
    counts
}

/// Rank of channel `channel` in community `community`'s subscription
/// popularity order (0 = most popular).
pub fn channel_rank(channel: usize, community: usize, channels: usize) -> usize {
    (channel + channels - community % channels) % channels
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Event {
    Rotate,
    NewChannel { subscribers_per_community: usize, items: usize },
    Inject { items_per_channel: usize },
}

const STREAM_SETUP: u64 = 1;
const STREAM_MOBILITY: u64 = 2;
const STREAM_DYNAMICS: u64 = 3;
const STREAM_PROTOCOL: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// One simulation run in progress.
pub struct Simulation {
    config: SimConfig,
    catalog: ItemCatalog,
    nodes: Vec<NodeState>,
    groups: Vec<SocialGroups>,
    members: Vec<Vec<NodeId>>,
    world: MobilityWorld,
    contacts: ContactTracker,
    t: Seconds,
    overhead: Overhead,
    gate: GateStats,
    events: Vec<(Seconds, Event)>,
    next_event: usize,
    expiries: BinaryHeap<Reverse<(Seconds, ItemId)>>,
    focus: Option<Vec<NodeId>>,
    capacity_violations: u64,
    samples: Vec<MetricsSample>,
    dynamics_rng: ChaCha8Rng,
    mobility_rng: ChaCha8Rng,
    protocol_rng: ChaCha8Rng,
    view_a: RecognitionVector,
    view_b: RecognitionVector,
    log: Option<Box<dyn Write + Send>>,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let mut setup = stream(config.seed, STREAM_SETUP);
        let mut mobility_rng = stream(config.seed, STREAM_MOBILITY);
        let dynamics_rng = stream(config.seed, STREAM_DYNAMICS);
        let protocol_rng = stream(config.seed, STREAM_PROTOCOL);

        let n = config.node_count();
        let npc = config.nodes_per_community;
        let travellers = config.scenario.travellers_per_community(config.communities);
        let counts = zipf_counts(npc, config.channels, 1.0);

        let mut nodes = Vec::with_capacity(n);
        let mut members = Vec::with_capacity(config.communities);
        for k in 0..config.communities {
            let mut subs: Vec<usize> = Vec::with_capacity(npc);
            for c in 0..config.channels {
                let count = counts[channel_rank(c, k, config.channels)];
                subs.extend(std::iter::repeat_n(c, count));
            }
            subs.shuffle(&mut setup);
            let mut ids = Vec::with_capacity(npc);
            for (i, &ch) in subs.iter().enumerate() {
                let id = NodeId((k * npc + i) as u32);
                let is_traveller = i >= npc - travellers;
                nodes.push(NodeState::new(id, k, is_traveller, ChannelId(ch as u16), n, config.oc_size));
                ids.push(id);
            }
            members.push(ids);
        }

        let mut sim_catalog = ItemCatalog::new(config.channels);
        let mut expiries = BinaryHeap::new();
        let weights = placement_weights(&config);
        for c in 0..config.channels {
            let ch = ChannelId(c as u16);
            for _ in 0..config.items_per_channel {
                let k = match &weights {
                    None => None,
                    Some(w) => Some(pick_weighted(&w[c], &mut setup)),
                };
                let node = match k {
                    None => setup.random_range(0..n),
                    Some(k) => members[k][setup.random_range(0..npc)].index(),
                };
                let expires = config.ttl.enabled.then(|| config.ttl.sample_lifetime(&mut setup));
                let id = sim_catalog.create(ch, 0, expires);
                if let Some(e) = expires {
                    expiries.push(Reverse((e, id)));
                }
                nodes[node].li.insert(id);
                nodes[node].consume(id, &sim_catalog);
            }
        }

        let groups = initial_groups(&config, &members);

        let homes: Vec<usize> = nodes.iter().map(|s| s.community).collect();
        let plans: Vec<Option<Traveller>> = nodes
            .iter()
            .map(|s| {
                s.is_traveller.then(|| Traveller {
                    plan: traveller_plan(&config, s.community, s.id.index() % npc - (npc - travellers)),
                    stay_prob: config.mobility.stay_prob,
                    visiting: None,
                })
            })
            .collect();
        let world = MobilityWorld::new(config.grid(), config.communities, config.speed, &homes, plans, &mut mobility_rng)?;
        for (node, p) in nodes.iter_mut().zip(world.positions()) {
            node.position = p;
        }
        let mut contacts = ContactTracker::new(config.range);
        // Pairs already in range at t = 0 count as meeting at the first tick
        // they are observed, which is now.
        let initial = contacts.update(&world.positions(), 0);

        let events = schedule(&config);
        let mut sim = Self {
            catalog: sim_catalog,
            nodes,
            groups,
            members,
            world,
            contacts,
            t: 0,
            overhead: Overhead::default(),
            gate: GateStats::default(),
            events,
            next_event: 0,
            expiries,
            focus: None,
            capacity_violations: 0,
            samples: Vec::new(),
            dynamics_rng,
            mobility_rng,
            protocol_rng,
            view_a: RecognitionVector::default(),
            view_b: RecognitionVector::default(),
            log: None,
            config,
        };
        for (a, b) in initial.started {
            sim.contact_start(a, b);
        }
        sim.sample();
        Ok(sim)
    }

    /// Writes one JSON object per event (contacts, dynamics, expiries).
    pub fn with_event_log(mut self, out: Box<dyn Write + Send>) -> Self {
        self.log = Some(out);
        self
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn now(&self) -> Seconds {
        self.t
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn catalog(&self) -> &ItemCatalog {
        &self.catalog
    }

    pub fn groups(&self, node: NodeId) -> &SocialGroups {
        &self.groups[node.index()]
    }

    pub fn world(&self) -> &MobilityWorld {
        &self.world
    }

    pub fn overhead(&self) -> Overhead {
        self.overhead
    }

    pub fn gate_stats(&self) -> &GateStats {
        &self.gate
    }

    /// Node-ticks on which an OC held more items than its capacity.
    pub fn capacity_violations(&self) -> u64 {
        self.capacity_violations
    }

    pub fn samples(&self) -> &[MetricsSample] {
        &self.samples
    }

    pub fn is_finished(&self) -> bool {
        self.t >= self.config.duration
    }

    /// Advances the simulation by one time step.
    pub fn step(&mut self) {
        let dt = self.config.mobility.step;
        self.t += dt;
        let t = self.t;

        while self.next_event < self.events.len() && self.events[self.next_event].0 <= t {
            let event = self.events[self.next_event].1;
            self.next_event += 1;
            self.apply_event(event);
        }
        self.expire_ttl();
        if self.config.community.mode == CommunityMode::Activation && t % self.config.community.refresh_period == 0 {
            self.refresh_groups();
        }

        self.world.step_positions(dt as f64, &mut self.mobility_rng);
        for (node, m) in self.nodes.iter_mut().zip(&self.world.movers) {
            node.position = m.position;
        }
        let positions = self.world.positions();
        let changes = self.contacts.update(&positions, t);
        for (a, b) in changes.started {
            self.contact_start(a, b);
        }

        for node in &self.nodes {
            if node.oc.len() > node.oc.capacity() {
                self.capacity_violations += 1;
            }
            debug_assert!(node.oc.len() <= node.oc.capacity(), "OC of {} over capacity at {t} s", node.id);
        }
        if t % self.config.sample_period == 0 {
            self.sample();
        }
    }

    /// Runs to the configured duration and returns the sampled series.
    pub fn run_to_end(mut self) -> MetricsSeries {
        while !self.is_finished() {
            self.step();
        }
        self.into_series()
    }

    pub fn into_series(mut self) -> MetricsSeries {
        if let Some(log) = &mut self.log {
            let _ = log.flush();
        }
        MetricsSeries {
            meta: RunMeta::for_config(&self.config),
            samples: self.samples,
        }
    }

    /// Average number of contacted peers in each gate rank over all nodes,
    /// ranks ordered by `direction`.
    pub fn social_census(&self, direction: SocialDirection) -> Vec<f64> {
        let mut sums: Vec<f64> = Vec::new();
        for node in &self.nodes {
            let groups = &self.groups[node.id.index()];
            for (rank, g) in group_preference(node, groups, direction).into_iter().enumerate() {
                let known = groups
                    .members(g)
                    .iter()
                    .filter(|p| !node.contact_history[p.index()].is_empty())
                    .count();
                if sums.len() <= rank {
                    sums.resize(rank + 1, 0.0);
                }
                sums[rank] += known as f64;
            }
        }
        let n = self.nodes.len() as f64;
        sums.into_iter().map(|s| s / n).collect()
    }

    fn sample(&mut self) {
        let hr = hit_rate(&self.nodes, &self.catalog, self.focus.as_deref());
        self.samples.push(MetricsSample {
            t: self.t,
            hit_rate: hr,
            overhead_total: self.overhead.total() as f64,
            overhead_data: self.overhead.data as f64,
            overhead_control: self.overhead.control as f64,
        });
    }

    fn contact_start(&mut self, a: NodeId, b: NodeId) {
        let t = self.t;
        self.nodes[a.index()].contact_history[b.index()].record(t);
        self.nodes[b.index()].contact_history[a.index()].record(t);
        let outcome = exchange_gate(
            &self.nodes[a.index()],
            &self.groups[a.index()],
            &self.nodes[b.index()],
            &self.groups[b.index()],
            &self.config.selfishness,
            &mut self.protocol_rng,
        );
        self.gate.record(&outcome);
        if !outcome.proceed() {
            self.log_event(json!({"t": t, "kind": "contact", "a": a.0, "b": b.0, "proceed": false}));
            return;
        }
        let fetched = self.handle_contact(a, b);
        self.log_event(json!({"t": t, "kind": "contact", "a": a.0, "b": b.0, "proceed": true, "fetched": fetched}));
    }

    /// Full exchange between `a` and `b`. Returns the number of item copies
    /// fetched by both sides.
    fn handle_contact(&mut self, a: NodeId, b: NodeId) -> u64 {
        let summary_a = self.nodes[a.index()].summary();
        let summary_b = self.nodes[b.index()].summary();
        let sub_a = self.nodes[a.index()].subscription;
        let sub_b = self.nodes[b.index()].subscription;
        self.nodes[a.index()].recognition.snapshot_into(&mut self.view_a);
        self.nodes[b.index()].recognition.snapshot_into(&mut self.view_b);
        self.overhead.control += 2;

        let view_a = std::mem::take(&mut self.view_a);
        let view_b = std::mem::take(&mut self.view_b);
        let fetched = self.absorb(a, b, sub_b, &summary_b, &view_b) + self.absorb(b, a, sub_a, &summary_a, &view_a);
        self.view_a = view_a;
        self.view_b = view_b;
        self.overhead.data += fetched;
        fetched
    }

    /// One direction of an exchange: `me` learns from `peer` and updates its
    /// OC. Returns the number of copies `me` fetched.
    fn absorb(&mut self, me: NodeId, peer: NodeId, peer_sub: ChannelId, peer_items: &ItemSet, peer_view: &RecognitionVector) -> u64 {
        let catalog = &self.catalog;
        let node = &mut self.nodes[me.index()];
        node.recognition.record_contact_knowledge(peer, peer_sub, peer_items);
        node.peer_views.store(peer, peer_view);

        let mut fetched = ItemSet::new();
        for &item in peer_items {
            if node.consume(item, catalog) && !node.holds(item) {
                fetched.insert(item);
            }
        }

        let candidates: ItemSet = peer_items.iter().copied().filter(|&i| !node.li.contains(i)).collect();
        let thresholds = self.config.thresholds();
        let capacity = node.oc.capacity();
        let new_oc = match self.config.policy {
            Policy::Sch => {
                let view = SocialView {
                    own: &node.recognition,
                    groups: &self.groups[me.index()],
                    peer_views: &node.peer_views,
                };
                let ctx = SelectionContext {
                    catalog,
                    groups: &view,
                    thresholds,
                };
                select_oc_contents(&node.recognition, node.oc.contents(), &candidates, capacity, &ctx, &mut self.protocol_rng)
            }
            Policy::Rh => rh_select(
                &node.recognition,
                node.oc.contents(),
                &candidates,
                capacity,
                catalog,
                thresholds,
                &mut self.protocol_rng,
            ),
        };
        debug_assert!(
            new_oc.iter().all(|i| node.oc.contains(*i) || peer_items.contains(i)),
            "selection produced an item neither held nor offered"
        );
        for &item in &new_oc {
            if !node.holds(item) {
                fetched.insert(item);
            }
        }
        node.oc
            .replace(new_oc)
            .unwrap_or_else(|e| panic!("policy broke the cache contract: {e}"));
        fetched.len() as u64
    }

    fn apply_event(&mut self, event: Event) {
        let t = self.t;
        match event {
            Event::Rotate => {
                let channels = self.catalog.channel_count();
                for node in self.nodes.iter_mut().filter(|n| !n.is_traveller) {
                    let next = ChannelId(((node.subscription.index() + 1) % channels) as u16);
                    node.recognition.reset_items(self.catalog.items_of(next));
                    node.resubscribe(next, &self.catalog);
                }
                self.log_event(json!({"t": t, "kind": "rotation"}));
            }
            Event::NewChannel {
                subscribers_per_community,
                items,
            } => {
                let ch = self.catalog.add_channel();
                let n = self.nodes.len();
                for _ in 0..items {
                    let node = self.dynamics_rng.random_range(0..n);
                    self.create_item(ch, NodeId(node as u32));
                }
                let mut focus = Vec::new();
                for k in 0..self.members.len() {
                    let residents: Vec<NodeId> = self.members[k]
                        .iter()
                        .copied()
                        .filter(|p| !self.nodes[p.index()].is_traveller)
                        .collect();
                    let mut chosen: Vec<NodeId> = residents
                        .choose_multiple(&mut self.dynamics_rng, subscribers_per_community)
                        .copied()
                        .collect();
                    chosen.sort_unstable();
                    for p in &chosen {
                        self.nodes[p.index()].resubscribe(ch, &self.catalog);
                    }
                    focus.extend(chosen);
                }
                self.log_event(json!({"t": t, "kind": "new_channel", "channel": ch.0, "subscribers": focus.len()}));
                self.focus = Some(focus);
            }
            Event::Inject { items_per_channel } => {
                let communities = self.members.len();
                for c in 0..self.catalog.channel_count() {
                    let ch = ChannelId(c as u16);
                    for j in 0..items_per_channel {
                        let community = &self.members[j % communities];
                        let node = community[self.dynamics_rng.random_range(0..community.len())];
                        self.create_item(ch, node);
                    }
                }
                self.log_event(json!({"t": t, "kind": "injection", "items_per_channel": items_per_channel}));
            }
        }
    }

    fn create_item(&mut self, channel: ChannelId, node: NodeId) {
        let t = self.t;
        let expires = self
            .config
            .ttl
            .enabled
            .then(|| t + self.config.ttl.sample_lifetime(&mut self.dynamics_rng));
        let id = self.catalog.create(channel, t, expires);
        if let Some(e) = expires {
            self.expiries.push(Reverse((e, id)));
        }
        let holder = &mut self.nodes[node.index()];
        holder.li.insert(id);
        holder.consume(id, &self.catalog);
    }

    fn expire_ttl(&mut self) {
        let t = self.t;
        while let Some(&Reverse((at, item))) = self.expiries.peek() {
            if at > t {
                break;
            }
            self.expiries.pop();
            for node in &mut self.nodes {
                node.li.remove(item);
                node.oc.remove(item);
            }
            self.log_event(json!({"t": t, "kind": "expiry", "item": item.0}));
        }
    }

    fn refresh_groups(&mut self) {
        let t = self.t;
        let params = self.config.community;
        for node in &mut self.nodes {
            let activations: Vec<(NodeId, f64)> = node
                .contact_history
                .iter_mut()
                .filter(|r| !r.is_empty())
                .map(|r| (r.peer, r.refresh(t, params.decay)))
                .collect();
            let peer_groups = detect_groups(&activations, params.max_groups, params.gap_ratio);
            self.groups[node.id.index()] = SocialGroups::new(node.id, node.contact_history.len(), peer_groups);
        }
    }

    fn log_event(&mut self, value: serde_json::Value) {
        if let Some(log) = &mut self.log {
            // A failing debug sink must not abort the run.
            let _ = writeln!(log, "{value}");
        }
    }
}

/// Runs one full simulation.
pub fn run(config: SimConfig) -> Result<MetricsSeries, ConfigError> {
    Ok(Simulation::new(config)?.run_to_end())
}

fn schedule(config: &SimConfig) -> Vec<(Seconds, Event)> {
    let times = config.dynamics.event_times(config.duration);
    let event = match config.dynamics {
        DynamicsDescriptor::None => return Vec::new(),
        DynamicsDescriptor::SubscriptionRotation { .. } => Event::Rotate,
        DynamicsDescriptor::NewChannel {
            subscribers_per_community,
            items,
            ..
        } => Event::NewChannel {
            subscribers_per_community,
            items,
        },
        DynamicsDescriptor::ItemDoubling { .. } => Event::Inject {
            items_per_channel: config.items_per_channel,
        },
        DynamicsDescriptor::PeriodicInjection { items_per_channel, .. } => Event::Inject { items_per_channel },
    };
    times.into_iter().map(|t| (t, event)).collect()
}

/// Per-channel community weights for initial placement, `None` for uniform.
fn placement_weights(config: &SimConfig) -> Option<Vec<Vec<f64>>> {
    let weight = match config.placement {
        Placement::Uniform => return None,
        Placement::Popularity => |rank: usize| 1.0 / (rank + 1) as f64,
        Placement::Inverse => |rank: usize| (rank + 1) as f64,
    };
    Some(
        (0..config.channels)
            .map(|c| {
                (0..config.communities)
                    .map(|k| weight(channel_rank(c, k, config.channels)))
                    .collect()
            })
            .collect(),
    )
}

fn pick_weighted<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}

fn traveller_plan(config: &SimConfig, community: usize, index: usize) -> TravellerPlan {
    let pref = community_preference(community, config.communities);
    match config.scenario {
        Scenario::OneTraveller => TravellerPlan::Ring { next: pref[0] },
        Scenario::ZipfTravellers => TravellerPlan::zipf(pref, config.mobility.zipf_exponent),
        Scenario::ThreeTravellers => TravellerPlan::Fixed {
            destination: pref[index % pref.len()],
        },
    }
}

fn initial_groups(config: &SimConfig, members: &[Vec<NodeId>]) -> Vec<SocialGroups> {
    let n = config.node_count();
    (0..n)
        .map(|i| {
            let id = NodeId(i as u32);
            let k = i / config.nodes_per_community;
            match config.community.mode {
                CommunityMode::Oracle => {
                    oracle_groups(id, k, members, &community_preference(k, config.communities))
                }
                CommunityMode::Activation => SocialGroups::new(id, n, Vec::new()),
            }
        })
        .collect()
}
