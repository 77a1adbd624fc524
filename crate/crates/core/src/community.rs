//! Social groups G_0..G_n of a node.
//!
//! Two sources are supported: ground truth from the scenario wiring
//! (`oracle_groups`) and groups detected from memory activation over the
//! contact history (`update_activation` + `detect_groups`).

use serde::{Deserialize, Serialize};

use crate::types::{NodeId, Seconds};

/// Ordered, disjoint social groups. Group 0 is the owner itself; group 1 is
/// the socially closest peer group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialGroups {
    groups: Vec<Vec<NodeId>>,
    membership: Vec<Option<usize>>,
}

impl SocialGroups {
    /// Builds `[{owner}, peer_groups...]`. Empty peer groups are dropped and
    /// a peer listed twice stays in its first group.
    pub fn new(owner: NodeId, node_count: usize, peer_groups: Vec<Vec<NodeId>>) -> Self {
        let mut membership = vec![None; node_count.max(owner.index() + 1)];
        membership[owner.index()] = Some(0);
        let mut groups = vec![vec![owner]];
        for group in peer_groups {
            let mut kept = Vec::with_capacity(group.len());
            for peer in group {
                if membership.len() <= peer.index() {
                    membership.resize(peer.index() + 1, None);
                }
                if membership[peer.index()].is_none() {
                    membership[peer.index()] = Some(groups.len());
                    kept.push(peer);
                }
            }
            if !kept.is_empty() {
                groups.push(kept);
            }
        }
        Self { groups, membership }
    }

    pub fn owner(&self) -> NodeId {
        self.groups[0][0]
    }

    /// Number of groups, G_0 included.
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn members(&self, group: usize) -> &[NodeId] {
        self.groups.get(group).map_or(&[], Vec::as_slice)
    }

    /// Index of the group `peer` belongs to, if any.
    pub fn group_of(&self, peer: NodeId) -> Option<usize> {
        self.membership.get(peer.index()).copied().flatten()
    }

    /// Peer groups G_1..G_n.
    pub fn peer_groups(&self) -> &[Vec<NodeId>] {
        &self.groups[1..]
    }
}

/// Contact timestamps with one peer, plus the last computed activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationRecord {
    pub peer: NodeId,
    contacts: Vec<Seconds>,
    activation: f64,
}

impl ActivationRecord {
    pub fn new(peer: NodeId) -> Self {
        Self {
            peer,
            contacts: Vec::new(),
            activation: f64::NEG_INFINITY,
        }
    }

    /// Appends a contact start. Timestamps must be strictly increasing.
    pub fn record(&mut self, t: Seconds) {
        if let Some(&last) = self.contacts.last() {
            assert!(t > last, "contact at {t} s not after previous one at {last} s");
        }
        self.contacts.push(t);
    }

    pub fn contacts(&self) -> &[Seconds] {
        &self.contacts
    }

    pub fn count(&self) -> usize {
        self.contacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contacts.is_empty()
    }

    /// Recomputes and caches the activation at `now`.
    pub fn refresh(&mut self, now: Seconds, decay: f64) -> f64 {
        self.activation = update_activation(&self.contacts, now, decay);
        self.activation
    }

    pub fn activation(&self) -> f64 {
        self.activation
    }
}

/// Base-level memory activation `ln Σ_k (now - t_k)^(-decay)`.
///
/// Higher for frequent and recent contacts. No contacts gives `-inf`
/// (the peer stays unranked). Every contact must be strictly in the past.
pub fn update_activation(contacts: &[Seconds], now: Seconds, decay: f64) -> f64 {
    if contacts.is_empty() {
        return f64::NEG_INFINITY;
    }
    let total: f64 = contacts
        .iter()
        .map(|&t| {
            debug_assert!(now > t, "activation evaluated at {now} s for a contact at {t} s");
            let age = now.saturating_sub(t).max(1) as f64;
            age.powf(-decay)
        })
        .sum();
    total.ln()
}

/// Clusters peers by activation with one-dimensional gap splitting.
///
/// Peers are sorted by descending activation (ties by id). A boundary is
/// placed at every drop that exceeds `gap_ratio` times the mean of the
/// other drops; when that yields more than `max_groups` groups only the
/// largest drops are kept. Peers with non-finite activation are ignored.
pub fn detect_groups(activations: &[(NodeId, f64)], max_groups: usize, gap_ratio: f64) -> Vec<Vec<NodeId>> {
    let mut ranked: Vec<(NodeId, f64)> = activations.iter().copied().filter(|(_, a)| a.is_finite()).collect();
    if ranked.is_empty() || max_groups == 0 {
        return Vec::new();
    }
    ranked.sort_by(|(pa, a), (pb, b)| b.total_cmp(a).then(pa.cmp(pb)));

    let drops: Vec<f64> = ranked.windows(2).map(|w| w[0].1 - w[1].1).collect();
    let mut boundaries: Vec<usize> = Vec::new();
    if drops.len() >= 2 {
        let total: f64 = drops.iter().sum();
        let others = (drops.len() - 1) as f64;
        for (i, &d) in drops.iter().enumerate() {
            let baseline = (total - d) / others;
            if d > 0.0 && d > gap_ratio * baseline {
                boundaries.push(i);
            }
        }
    }
    if boundaries.len() >= max_groups {
        boundaries.sort_by(|&a, &b| drops[b].total_cmp(&drops[a]).then(a.cmp(&b)));
        boundaries.truncate(max_groups - 1);
        boundaries.sort_unstable();
    }

    let mut groups = Vec::with_capacity(boundaries.len() + 1);
    let mut start = 0;
    for b in boundaries.into_iter().chain(std::iter::once(ranked.len() - 1)) {
        groups.push(ranked[start..=b].iter().map(|(p, _)| *p).collect());
        start = b + 1;
    }
    groups
}

/// Ground-truth groups: G_1 is the owner's own community, then the other
/// communities in `order` (the owner community's traveller preference).
pub fn oracle_groups(owner: NodeId, community: usize, members: &[Vec<NodeId>], order: &[usize]) -> SocialGroups {
    let node_count = members.iter().map(Vec::len).sum();
    let own: Vec<NodeId> = members[community].iter().copied().filter(|&p| p != owner).collect();
    let mut peer_groups = vec![own];
    peer_groups.extend(order.iter().filter(|&&c| c != community).map(|&c| members[c].clone()));
    SocialGroups::new(owner, node_count, peer_groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    #[test]
    fn single_recent_contact_has_zero_activation() {
        assert_eq!(update_activation(&[99], 100, 0.5), 0.0);
    }

    #[test]
    fn two_contacts_sum_decayed_terms() {
        // ages 1 and 4: ln(1 + 4^-0.5) = ln 1.5
        let a = update_activation(&[96, 99], 100, 0.5);
        assert!((a - 1.5f64.ln()).abs() < 1e-12);
        assert!((a - 0.405_465).abs() < 1e-6);
    }

    #[test]
    fn no_contacts_is_unranked() {
        assert_eq!(update_activation(&[], 10, 0.5), f64::NEG_INFINITY);
    }

    #[test]
    fn activation_decays_with_time() {
        let h = [10, 50, 70];
        let mut prev = update_activation(&h, 71, 0.5);
        for now in [80, 200, 1_000, 50_000] {
            let a = update_activation(&h, now, 0.5);
            assert!(a < prev);
            prev = a;
        }
    }

    #[test]
    fn record_keeps_cache() {
        let mut r = ActivationRecord::new(n(3));
        assert_eq!(r.activation(), f64::NEG_INFINITY);
        r.record(5);
        r.record(9);
        assert_eq!(r.count(), 2);
        let a = r.refresh(10, 0.5);
        assert_eq!(a, r.activation());
    }

    #[test]
    #[should_panic(expected = "not after")]
    fn record_rejects_non_increasing_times() {
        let mut r = ActivationRecord::new(n(3));
        r.record(5);
        r.record(5);
    }

    #[test]
    fn gap_splits_distant_activations() {
        let groups = detect_groups(&[(n(1), 5.0), (n(2), 4.9), (n(3), 1.0)], 4, 2.0);
        assert_eq!(groups, vec![vec![n(1), n(2)], vec![n(3)]]);
    }

    #[test]
    fn one_peer_one_group() {
        assert_eq!(detect_groups(&[(n(4), -2.0)], 4, 2.0), vec![vec![n(4)]]);
    }

    #[test]
    fn uniform_activations_one_group() {
        let act: Vec<_> = (0..6).map(|i| (n(i), 1.25)).collect();
        assert_eq!(detect_groups(&act, 4, 2.0).len(), 1);
    }

    #[test]
    fn unranked_peers_are_ignored() {
        let groups = detect_groups(&[(n(1), 1.0), (n(2), f64::NEG_INFINITY)], 4, 2.0);
        assert_eq!(groups, vec![vec![n(1)]]);
    }

    #[test]
    fn group_count_is_capped_at_largest_gaps() {
        // drops: 10, 0.1, 5, 0.1, 20
        let act = [(n(0), 40.0), (n(1), 30.0), (n(2), 29.9), (n(3), 24.9), (n(4), 24.8), (n(5), 4.8)];
        let all = detect_groups(&act, 10, 1.0);
        assert_eq!(all.len(), 3);
        let capped = detect_groups(&act, 2, 1.0);
        assert_eq!(capped, vec![vec![n(0), n(1), n(2), n(3), n(4)], vec![n(5)]]);
    }

    #[test]
    fn social_groups_index_membership() {
        let g = SocialGroups::new(n(0), 6, vec![vec![n(1), n(2)], vec![], vec![n(3), n(1)]]);
        assert_eq!(g.len(), 3);
        assert_eq!(g.group_of(n(0)), Some(0));
        assert_eq!(g.group_of(n(1)), Some(1));
        assert_eq!(g.group_of(n(3)), Some(2));
        assert_eq!(g.members(2), &[n(3)]);
        assert_eq!(g.group_of(n(5)), None);
        assert!(g.members(9).is_empty());
    }

    fn communities(k: usize, size: u32) -> Vec<Vec<NodeId>> {
        (0..k as u32).map(|c| (0..size).map(|i| n(c * size + i)).collect()).collect()
    }

    #[test]
    fn oracle_puts_own_community_first() {
        let members = communities(4, 25);
        let g = oracle_groups(n(3), 0, &members, &[1, 2, 3]);
        assert_eq!(g.len(), 5);
        assert_eq!(g.members(1).len(), 24);
        assert!(!g.members(1).contains(&n(3)));
        assert_eq!(g.group_of(n(30)), Some(2));
        assert_eq!(g.group_of(n(99)), Some(4));
    }

    #[test]
    fn oracle_single_community() {
        let members = communities(1, 5);
        let g = oracle_groups(n(2), 0, &members, &[]);
        assert_eq!(g.len(), 2);
        assert_eq!(g.members(1), &[n(0), n(1), n(3), n(4)]);
    }
}
