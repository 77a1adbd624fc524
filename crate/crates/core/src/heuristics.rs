//! Recognition counters and the two cache-selection policies.
//!
//! The recognition heuristic (RH) keeps an item when its channel is
//! recognised (enough distinct subscribers met) while the item itself is not
//! (seen fewer times than the item threshold). The social-circle heuristic
//! (SCH) starts from the RH verdict and, when that verdict does not fit the
//! cache exactly, prunes or tops up the candidate set using the mean
//! recognition levels of the node's social groups, closest group first, with
//! a uniform random choice as the last resort.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::index;
use rand::Rng;

use crate::community::SocialGroups;
use crate::types::{ChannelId, ItemCatalog, ItemId, ItemSet, NodeId};

/// Channel (`channel`, θ_C) and item (`item`, θ_I) recognition thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Thresholds {
    pub channel: u32,
    pub item: u32,
}

/// What a recognition level refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subject {
    Item(ItemId),
    Channel(ChannelId),
}

/// Per-node recognition counters.
///
/// The channel counter is the number of distinct subscribers met; the item
/// counter is the number of contacts in which the item was seen in the
/// peer's caches (at most one increment per contact).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecognitionStore {
    channel_subscribers: Vec<BTreeSet<NodeId>>,
    item_sightings: Vec<u32>,
}

impl RecognitionStore {
    /// Recognition level of `subject`; unknown subjects are at 0.
    pub fn level(&self, subject: Subject) -> u32 {
        match subject {
            Subject::Item(item) => self.item_level(item),
            Subject::Channel(ch) => self.channel_level(ch),
        }
    }

    pub fn channel_level(&self, channel: ChannelId) -> u32 {
        self.channel_subscribers
            .get(channel.index())
            .map_or(0, |s| s.len() as u32)
    }

    pub fn item_level(&self, item: ItemId) -> u32 {
        self.item_sightings.get(item.index()).copied().unwrap_or(0)
    }

    /// Folds one contact's worth of knowledge about `peer` into the counters.
    /// Must be called once per contact and direction.
    pub fn record_contact_knowledge(&mut self, peer: NodeId, peer_subscription: ChannelId, peer_items: &ItemSet) {
        let ch = peer_subscription.index();
        if self.channel_subscribers.len() <= ch {
            self.channel_subscribers.resize_with(ch + 1, BTreeSet::new);
        }
        self.channel_subscribers[ch].insert(peer);

        if let Some(max) = peer_items.last() {
            if self.item_sightings.len() <= max.index() {
                self.item_sightings.resize(max.index() + 1, 0);
            }
        }
        for item in peer_items {
            self.item_sightings[item.index()] += 1;
        }
    }

    /// Zeroes the sighting counters of `items`.
    pub fn reset_items(&mut self, items: impl IntoIterator<Item = ItemId>) {
        for item in items {
            if let Some(c) = self.item_sightings.get_mut(item.index()) {
                *c = 0;
            }
        }
    }

    pub fn snapshot(&self) -> RecognitionVector {
        let mut v = RecognitionVector::default();
        self.snapshot_into(&mut v);
        v
    }

    /// Writes the current levels into `out`, reusing its buffers.
    pub fn snapshot_into(&self, out: &mut RecognitionVector) {
        out.channels.clear();
        out.channels.extend(self.channel_subscribers.iter().map(|s| s.len() as u32));
        out.items.clone_from(&self.item_sightings);
    }
}

/// Levels of one node as advertised in a contact.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecognitionVector {
    channels: Vec<u32>,
    items: Vec<u32>,
}

impl RecognitionVector {
    pub fn from_levels(channels: Vec<u32>, items: Vec<u32>) -> Self {
        Self { channels, items }
    }

    pub fn level(&self, subject: Subject) -> u32 {
        match subject {
            Subject::Item(i) => self.items.get(i.index()).copied().unwrap_or(0),
            Subject::Channel(c) => self.channels.get(c.index()).copied().unwrap_or(0),
        }
    }
}

/// Latest recognition vector received from each peer, indexed by peer id.
/// Vectors are kept until replaced by a newer one.
#[derive(Debug, Clone, Default)]
pub struct PeerViews {
    views: Vec<Option<RecognitionVector>>,
}

impl PeerViews {
    pub fn new(node_count: usize) -> Self {
        Self {
            views: vec![None; node_count],
        }
    }

    pub fn get(&self, peer: NodeId) -> Option<&RecognitionVector> {
        self.views.get(peer.index()).and_then(Option::as_ref)
    }

    pub fn store(&mut self, peer: NodeId, vector: &RecognitionVector) {
        if self.views.len() <= peer.index() {
            self.views.resize(peer.index() + 1, None);
        }
        match &mut self.views[peer.index()] {
            Some(v) => v.clone_from(vector),
            slot => *slot = Some(vector.clone()),
        }
    }

    pub fn len(&self) -> usize {
        self.views.iter().filter(|v| v.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Exact arithmetic mean of non-negative integer levels.
#[derive(Debug, Clone, Copy, Default)]
pub struct Mean {
    sum: u64,
    count: u64,
}

impl Mean {
    pub const ZERO: Mean = Mean { sum: 0, count: 0 };

    /// `sum / count`; a zero count gives the zero mean.
    pub fn new(sum: u64, count: u64) -> Self {
        if count == 0 {
            Self::ZERO
        } else {
            Self { sum, count }
        }
    }

    pub fn of(levels: impl IntoIterator<Item = u32>) -> Self {
        let (sum, count) = levels
            .into_iter()
            .fold((0u64, 0u64), |(s, c), l| (s + u64::from(l), c + 1));
        Self::new(sum, count)
    }

    pub fn floor(self) -> u64 {
        if self.count == 0 {
            0
        } else {
            self.sum / self.count
        }
    }

    /// `mean >= threshold`, evaluated without rounding.
    pub fn at_least(self, threshold: u32) -> bool {
        if self.count == 0 {
            return threshold == 0;
        }
        self.sum >= u64::from(threshold) * self.count
    }

    pub fn value(self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum as f64 / self.count as f64
        }
    }
}

impl PartialEq for Mean {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (self.normalized(), other.normalized());
        u128::from(a.sum) * u128::from(b.count) == u128::from(b.sum) * u128::from(a.count)
    }
}

impl Mean {
    fn normalized(self) -> Self {
        if self.count == 0 {
            Self { sum: 0, count: 1 }
        } else {
            self
        }
    }
}

impl fmt::Display for Mean {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Discretized level used to bucket items: `floor(mean)` clamped to θ_I.
pub fn bucket_index(mean: Mean, item_threshold: u32) -> u32 {
    mean.floor().min(u64::from(item_threshold)) as u32
}

/// True when the item is relevant under the recognition heuristic.
pub fn rh_relevant(channel_level: u32, item_level: u32, thresholds: Thresholds) -> bool {
    channel_level >= thresholds.channel && item_level < thresholds.item
}

/// Mean level of `subject` inside social group `group`.
///
/// Group 0 is the node itself. For outer groups the mean is taken over the
/// members whose recognition vector has been received at least once; a group
/// with no such member has mean 0.
pub fn group_mean_levels(
    members: &[NodeId],
    peer_views: &PeerViews,
    own: &RecognitionStore,
    subject: Subject,
    group: usize,
) -> Mean {
    if group == 0 {
        return Mean::new(u64::from(own.level(subject)), 1);
    }
    Mean::of(
        members
            .iter()
            .filter_map(|m| peer_views.get(*m))
            .map(|v| v.level(subject)),
    )
}

/// Source of group-level recognition means for the social steps.
pub trait GroupMeanProvider {
    /// Index of the outermost social group; group 0 is the node itself.
    fn last_group(&self) -> usize;
    fn mean(&self, group: usize, subject: Subject) -> Mean;
}

/// The provider used during simulation: one node's own counters, its social
/// groups and the vectors it has cached from peers.
pub struct SocialView<'a> {
    pub own: &'a RecognitionStore,
    pub groups: &'a SocialGroups,
    pub peer_views: &'a PeerViews,
}

impl GroupMeanProvider for SocialView<'_> {
    fn last_group(&self) -> usize {
        self.groups.len() - 1
    }

    fn mean(&self, group: usize, subject: Subject) -> Mean {
        group_mean_levels(self.groups.members(group), self.peer_views, self.own, subject, group)
    }
}

/// Inputs shared by every step of one selection.
pub struct SelectionContext<'a> {
    pub catalog: &'a ItemCatalog,
    pub groups: &'a dyn GroupMeanProvider,
    pub thresholds: Thresholds,
}

/// Uniformly random `k`-subset of `set` (all of it when it is small enough).
pub fn random_subset<R: Rng + ?Sized>(set: &ItemSet, k: usize, rng: &mut R) -> ItemSet {
    if set.len() <= k {
        return set.clone();
    }
    if k == 0 {
        return ItemSet::new();
    }
    let items: Vec<ItemId> = set.iter().copied().collect();
    index::sample(rng, items.len(), k).into_iter().map(|i| items[i]).collect()
}

/// Recursive social filtering of `candidates` down to at most `slots`
/// items, starting at social group `group`.
///
/// Items are split into buckets by their discretized mean item level in the
/// group (only items whose channel is recognised in the group and whose
/// level is below θ_I take part). Buckets are taken whole, least recognised
/// first; the first bucket that does not fit is passed down intact to the
/// next group for the remaining space. Beyond the last group the choice is
/// uniformly random.
pub fn sch_filter<R: Rng + ?Sized>(
    candidates: &ItemSet,
    slots: usize,
    group: usize,
    ctx: &SelectionContext<'_>,
    rng: &mut R,
) -> ItemSet {
    if slots == 0 || candidates.is_empty() {
        return ItemSet::new();
    }
    if group > ctx.groups.last_group() {
        return random_subset(candidates, slots, rng);
    }

    let thresholds = ctx.thresholds;
    let mut channel_ok: BTreeMap<ChannelId, bool> = BTreeMap::new();
    let mut buckets: BTreeMap<u32, Vec<ItemId>> = BTreeMap::new();
    for &item in candidates {
        let ch = ctx.catalog.channel_of(item);
        let recognised = *channel_ok
            .entry(ch)
            .or_insert_with(|| ctx.groups.mean(group, Subject::Channel(ch)).at_least(thresholds.channel));
        if !recognised {
            continue;
        }
        let level = bucket_index(ctx.groups.mean(group, Subject::Item(item)), thresholds.item);
        if level < thresholds.item {
            buckets.entry(level).or_default().push(item);
        }
    }

    let mut selected = ItemSet::new();
    for bucket in buckets.into_values() {
        if selected.len() + bucket.len() > slots {
            let overflow: ItemSet = bucket.into_iter().collect();
            let rest = sch_filter(&overflow, slots - selected.len(), group + 1, ctx, rng);
            selected.extend(rest);
            return selected;
        }
        selected.extend(bucket);
    }
    selected
}

/// New opportunistic-cache contents chosen by the social-circle heuristic.
///
/// `encountered` is the peer's advertised LI ∪ OC; `own_oc` the current
/// cache contents. The RH verdict over both is kept as-is when it fills the
/// cache exactly, pruned socially from the node's own group when it
/// overflows, and topped up with socially relevant discarded items (starting
/// from the closest peer group) when it leaves room.
pub fn select_oc_contents<R: Rng + ?Sized>(
    own: &RecognitionStore,
    own_oc: &ItemSet,
    encountered: &ItemSet,
    capacity: usize,
    ctx: &SelectionContext<'_>,
    rng: &mut R,
) -> ItemSet {
    let pool: ItemSet = encountered.union(own_oc).copied().collect();
    let (relevant, rest) = split_relevant(own, &pool, ctx.catalog, ctx.thresholds);

    match relevant.len().cmp(&capacity) {
        std::cmp::Ordering::Equal => relevant,
        std::cmp::Ordering::Greater => sch_filter(&relevant, capacity, 0, ctx, rng),
        std::cmp::Ordering::Less => {
            let extra = sch_filter(&rest, capacity - relevant.len(), 1, ctx, rng);
            relevant.union(&extra).copied().collect()
        }
    }
}

/// New cache contents under the plain recognition heuristic: every relevant
/// item, or a uniformly random `capacity`-subset of them on overflow.
pub fn rh_select<R: Rng + ?Sized>(
    own: &RecognitionStore,
    own_oc: &ItemSet,
    encountered: &ItemSet,
    capacity: usize,
    catalog: &ItemCatalog,
    thresholds: Thresholds,
    rng: &mut R,
) -> ItemSet {
    let pool: ItemSet = encountered.union(own_oc).copied().collect();
    let (relevant, _) = split_relevant(own, &pool, catalog, thresholds);
    random_subset(&relevant, capacity, rng)
}

fn split_relevant(own: &RecognitionStore, pool: &ItemSet, catalog: &ItemCatalog, thresholds: Thresholds) -> (ItemSet, ItemSet) {
    pool.iter().partition(|&&item| {
        rh_relevant(
            own.channel_level(catalog.channel_of(item)),
            own.item_level(item),
            thresholds,
        )
    })
}
