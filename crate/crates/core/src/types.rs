//! Domain types shared by every part of the simulator: identifiers, data
//! items, the two per-node caches and the node record itself.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::community::ActivationRecord;
use crate::error::ContractError;
use crate::heuristics::{PeerViews, RecognitionStore};

/// Simulated time in whole seconds.
pub type Seconds = u64;

/// A content topic. Dense, assigned in creation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChannelId(pub u16);

impl ChannelId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ch{}", self.0)
    }
}

/// Identifier of a data item, unique over the whole run (including injected
/// items).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ItemId(pub u32);

impl ItemId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "i{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Ordered set of item ids. Ordered so that seeded random choices over a
/// set are reproducible.
pub type ItemSet = BTreeSet<ItemId>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataItem {
    pub id: ItemId,
    pub channel: ChannelId,
    pub created_at: Seconds,
    pub expires_at: Option<Seconds>,
}

impl DataItem {
    pub fn is_expired(&self, now: Seconds) -> bool {
        self.expires_at.is_some_and(|e| e <= now)
    }
}

/// Registry of every item created during a run, plus per-channel totals.
///
/// Item ids are dense indices into `items`; the channel of an item never
/// changes after creation.
#[derive(Debug, Clone, Default)]
pub struct ItemCatalog {
    items: Vec<DataItem>,
    per_channel: Vec<usize>,
}

impl ItemCatalog {
    pub fn new(channels: usize) -> Self {
        Self {
            items: Vec::new(),
            per_channel: vec![0; channels],
        }
    }

    pub fn channel_count(&self) -> usize {
        self.per_channel.len()
    }

    pub fn add_channel(&mut self) -> ChannelId {
        self.per_channel.push(0);
        ChannelId((self.per_channel.len() - 1) as u16)
    }

    /// Creates a new item. Panics if `channel` is unknown or if the expiry
    /// does not come strictly after creation.
    pub fn create(&mut self, channel: ChannelId, created_at: Seconds, expires_at: Option<Seconds>) -> ItemId {
        assert!(channel.index() < self.per_channel.len(), "unknown channel {channel}");
        if let Some(e) = expires_at {
            assert!(e > created_at, "item must expire after its creation");
        }
        let id = ItemId(self.items.len() as u32);
        self.items.push(DataItem {
            id,
            channel,
            created_at,
            expires_at,
        });
        self.per_channel[channel.index()] += 1;
        id
    }

    pub fn get(&self, id: ItemId) -> &DataItem {
        &self.items[id.index()]
    }

    pub fn channel_of(&self, id: ItemId) -> ChannelId {
        self.items[id.index()].channel
    }

    /// Number of items ever created for `channel`, expired ones included.
    pub fn items_in_channel(&self, channel: ChannelId) -> usize {
        self.per_channel.get(channel.index()).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &DataItem> {
        self.items.iter()
    }

    pub fn items_of(&self, channel: ChannelId) -> impl Iterator<Item = ItemId> + '_ {
        self.items.iter().filter(move |i| i.channel == channel).map(|i| i.id)
    }
}

/// The bounded cache a node donates to the dissemination process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpportunisticCache {
    capacity: usize,
    contents: ItemSet,
}

impl OpportunisticCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            contents: ItemSet::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn contents(&self) -> &ItemSet {
        &self.contents
    }

    pub fn len(&self) -> usize {
        self.contents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contents.is_empty()
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.contents.contains(&item)
    }

    /// Replaces the whole content with `new_contents`.
    ///
    /// A set larger than the capacity means the selection policy is broken,
    /// so it is rejected rather than truncated.
    pub fn replace(&mut self, new_contents: ItemSet) -> Result<(), ContractError> {
        if new_contents.len() > self.capacity {
            return Err(ContractError::CapacityExceeded {
                capacity: self.capacity,
                requested: new_contents.len(),
            });
        }
        self.contents = new_contents;
        Ok(())
    }

    pub fn remove(&mut self, item: ItemId) -> bool {
        self.contents.remove(&item)
    }
}

/// Items generated at (or assigned to) a node. Unbounded; only expiry
/// removes entries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LocalItemsCache {
    contents: ItemSet,
}

impl LocalItemsCache {
    pub fn contents(&self) -> &ItemSet {
        &self.contents
    }

    pub fn insert(&mut self, item: ItemId) {
        self.contents.insert(item);
    }

    pub fn remove(&mut self, item: ItemId) -> bool {
        self.contents.remove(&item)
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.contents.contains(&item)
    }

    pub fn len(&self) -> usize {
        self.contents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contents.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        self.distance_sq(other).sqrt()
    }

    pub fn distance_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Protocol-side state of one mobile node. Kinematics live in
/// [`crate::mobility::MobilityWorld`]; `position` mirrors it after each step.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub id: NodeId,
    pub community: usize,
    pub is_traveller: bool,
    pub subscription: ChannelId,
    pub position: Point,
    pub li: LocalItemsCache,
    pub oc: OpportunisticCache,
    pub recognition: RecognitionStore,
    pub peer_views: PeerViews,
    /// Items of the current subscription consumed so far.
    pub delivered: ItemSet,
    /// Contact start times per peer, indexed by peer id.
    pub contact_history: Vec<ActivationRecord>,
}

impl NodeState {
    pub fn new(id: NodeId, community: usize, is_traveller: bool, subscription: ChannelId, node_count: usize, oc_capacity: usize) -> Self {
        Self {
            id,
            community,
            is_traveller,
            subscription,
            position: Point::default(),
            li: LocalItemsCache::default(),
            oc: OpportunisticCache::new(oc_capacity),
            recognition: RecognitionStore::default(),
            peer_views: PeerViews::new(node_count),
            delivered: ItemSet::new(),
            contact_history: (0..node_count as u32).map(|p| ActivationRecord::new(NodeId(p))).collect(),
        }
    }

    /// Everything this node advertises in a contact summary: LI ∪ OC.
    pub fn summary(&self) -> ItemSet {
        self.li.contents().union(self.oc.contents()).copied().collect()
    }

    pub fn holds(&self, item: ItemId) -> bool {
        self.li.contains(item) || self.oc.contains(item)
    }

    /// Marks `item` as consumed if it belongs to the subscribed channel.
    /// Returns true when the item was not consumed before.
    pub fn consume(&mut self, item: ItemId, catalog: &ItemCatalog) -> bool {
        catalog.channel_of(item) == self.subscription && self.delivered.insert(item)
    }

    /// Switches subscription; the delivered set restarts empty for the new
    /// channel and is seeded with matching items already held locally.
    pub fn resubscribe(&mut self, channel: ChannelId, catalog: &ItemCatalog) {
        self.subscription = channel;
        self.delivered.clear();
        let held: Vec<ItemId> = self.li.contents().iter().chain(self.oc.contents()).copied().collect();
        for item in held {
            self.consume(item, catalog);
        }
    }

    pub fn contacts_with(&self, peer: NodeId) -> &[Seconds] {
        self.contact_history[peer.index()].contacts()
    }

    pub fn known_peers(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.contact_history
            .iter()
            .enumerate()
            .filter(|(_, h)| !h.is_empty())
            .map(|(i, _)| NodeId(i as u32))
    }
}
