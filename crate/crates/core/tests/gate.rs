use oppsim_core::community::oracle_groups;
use oppsim_core::engine::{exchange_gate, peer_rank, rank_probability};
use oppsim_core::{ChannelId, NodeId, NodeState, SelfishnessDescriptor, SocialDirection};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn node(i: u32) -> NodeState {
    NodeState::new(NodeId(i), (i / 5) as usize, false, ChannelId(0), 20, 4)
}

fn members() -> Vec<Vec<NodeId>> {
    (0..4).map(|c| (0..5).map(|i| NodeId(c * 5 + i)).collect()).collect()
}

#[test]
fn uniform_gate_proceeds_at_joint_p() {
    let (a, b) = (node(0), node(7));
    let m = members();
    let ga = oracle_groups(a.id, 0, &m, &[1, 2, 3]);
    let gb = oracle_groups(b.id, 1, &m, &[2, 3, 0]);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for p in [0.9, 0.58, 0.33, 0.21, 0.12] {
        let d = SelfishnessDescriptor::Uniform { joint_p: p };
        let n = 20_000;
        let ok = (0..n).filter(|_| exchange_gate(&a, &ga, &b, &gb, &d, &mut rng).proceed()).count();
        let rate = ok as f64 / n as f64;
        assert!((rate - p).abs() <= 0.02, "p={p} rate={rate}");
    }
}

#[test]
fn social_gate_accepts_per_rank() {
    let mut a = node(0);
    // contacts: own community 3x, community 1 twice, community 2 once, community 3 never
    for (peer, times) in [(1u32, 3u64), (6, 2), (11, 1)] {
        for t in 1..=times {
            a.contact_history[peer as usize].record(t);
        }
    }
    let m = members();
    let ga = oracle_groups(a.id, 0, &m, &[1, 2, 3]);
    assert_eq!(peer_rank(&a, &ga, NodeId(2), SocialDirection::Direct), 0);
    assert_eq!(peer_rank(&a, &ga, NodeId(16), SocialDirection::Direct), 3);
    assert_eq!(peer_rank(&a, &ga, NodeId(16), SocialDirection::Inverse), 0);
    assert_eq!(peer_rank(&a, &ga, NodeId(99), SocialDirection::Direct), 3);

    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for direction in [SocialDirection::Direct, SocialDirection::Inverse] {
        for p0 in [1.0, 0.75] {
            let d = SelfishnessDescriptor::Social { p0, direction };
            for peer in [2u32, 7, 12, 17] {
                let b = node(peer);
                let gb = oracle_groups(b.id, (peer / 5) as usize, &m, &[0]);
                let rank = peer_rank(&a, &ga, b.id, direction);
                let n = 20_000;
                let ok = (0..n)
                    .filter(|_| exchange_gate(&a, &ga, &b, &gb, &d, &mut rng).a.accepted)
                    .count();
                let rate = ok as f64 / n as f64;
                let want = rank_probability(p0, rank);
                assert!((rate - want).abs() <= 0.02, "{direction:?} p0={p0} rank={rank} rate={rate}");
            }
        }
    }
}
