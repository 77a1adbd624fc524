#[path = "support/sch_oracle.rs"]
mod support;

use oppsim_core::community::detect_groups;
use oppsim_core::heuristics::{bucket_index, sch_filter, Mean, SelectionContext};
use oppsim_core::mobility::detect_contacts;
use oppsim_core::types::{OpportunisticCache, Point};
use oppsim_core::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sch_filter_is_bounded_subset(seed in any::<u64>()) {
        let mut gen = ChaCha8Rng::seed_from_u64(seed);
        let case = support::random_case(&mut gen);
        let mut catalog = ItemCatalog::new(2);
        for &c in &case.channel_of {
            catalog.create(ChannelId(c), 0, None);
        }
        let ctx = SelectionContext { catalog: &catalog, groups: &case.tables, thresholds: case.th };
        let s: ItemSet = case.s.iter().map(|&i| ItemId(i)).collect();
        let out = sch_filter(&s, case.o, case.j, &ctx, &mut gen);
        prop_assert!(out.len() <= case.o);
        prop_assert!(out.is_subset(&s));
    }

    #[test]
    fn bucket_index_is_monotone(a in 0u64..1000, b in 0u64..1000, count in 1u64..50, th in 1u32..100) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let x = bucket_index(Mean::new(lo, count), th);
        let y = bucket_index(Mean::new(hi, count), th);
        prop_assert!(x <= y);
        prop_assert!(y <= th);
    }

    #[test]
    fn oc_replace_respects_capacity(cap in 0usize..12, n in 0u32..20) {
        let mut oc = OpportunisticCache::new(cap);
        let set: ItemSet = (0..n).map(ItemId).collect();
        let r = oc.replace(set.clone());
        prop_assert_eq!(r.is_ok(), set.len() <= cap);
        prop_assert!(oc.len() <= cap);
    }

    #[test]
    fn detect_groups_ignores_input_order(values in prop::collection::vec(-5.0f64..5.0, 1..20), seed in any::<u64>()) {
        let act: Vec<(NodeId, f64)> = values.iter().enumerate().map(|(i, &v)| (NodeId(i as u32), v)).collect();
        let mut shuffled = act.clone();
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = detect_groups(&act, 4, 2.0);
        prop_assert_eq!(&a, &detect_groups(&shuffled, 4, 2.0));
        prop_assert!(a.len() <= 4);
        prop_assert_eq!(a.iter().map(Vec::len).sum::<usize>(), values.len());
    }

    #[test]
    fn contacts_match_brute_force(coords in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 0..40)) {
        let pos: Vec<Point> = coords.iter().map(|&(x, y)| Point::new(x, y)).collect();
        let got = detect_contacts(&pos, 20.0);
        let mut want = Vec::new();
        for i in 0..pos.len() {
            for j in i + 1..pos.len() {
                if pos[i].distance(pos[j]) <= 20.0 {
                    want.push((NodeId(i as u32), NodeId(j as u32)));
                }
            }
        }
        prop_assert_eq!(got, want);
    }

    #[test]
    fn hit_rate_ignores_relabeling(fracs in prop::collection::vec(0usize..=10, 1..30), seed in any::<u64>()) {
        let mut catalog = ItemCatalog::new(1);
        let items: Vec<ItemId> = (0..10).map(|_| catalog.create(ChannelId(0), 0, None)).collect();
        let n = fracs.len();
        let mut nodes: Vec<NodeState> = fracs.iter().enumerate().map(|(i, &k)| {
            let mut s = NodeState::new(NodeId(i as u32), 0, false, ChannelId(0), n, 1);
            s.delivered.extend(&items[..k]);
            s
        }).collect();
        let before = hit_rate(&nodes, &catalog, None);
        use rand::seq::SliceRandom;
        nodes.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!((before - hit_rate(&nodes, &catalog, None)).abs() < 1e-12);
    }
}

fn tiny(seed: u64, policy: Policy, rt: u32, ttl: bool) -> SimConfig {
    SimConfig {
        communities: 2,
        nodes_per_community: 8,
        channels: 2,
        items_per_channel: 20,
        oc_size: 3,
        duration: 3000,
        sample_period: 100,
        policy,
        item_threshold: rt,
        seed,
        ttl: TtlDescriptor { enabled: ttl, mean: 1500.0, sigma: 300.0, floor: 60 },
        ..SimConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn run_invariants_hold(seed in 0u64..1000, sch in any::<bool>(), rt in 1u32..20, ttl in any::<bool>()) {
        let policy = if sch { Policy::Sch } else { Policy::Rh };
        let mut sim = Simulation::new(tiny(seed, policy, rt, ttl)).unwrap();
        let mut delivered: Vec<usize> = sim.nodes().iter().map(|n| n.delivered.len()).collect();
        let mut overhead = 0;
        while !sim.is_finished() {
            sim.step();
            let t = sim.now();
            prop_assert!(sim.overhead().total() >= overhead);
            overhead = sim.overhead().total();
            for (n, d) in sim.nodes().iter().zip(&mut delivered) {
                prop_assert!(n.oc.len() <= n.oc.capacity());
                prop_assert!(n.delivered.len() >= *d);
                *d = n.delivered.len();
                prop_assert!(n.delivered.iter().all(|&i| sim.catalog().channel_of(i) == n.subscription));
                for &i in n.li.contents().iter().chain(n.oc.contents()) {
                    prop_assert!(!sim.catalog().get(i).is_expired(t));
                }
            }
        }
        prop_assert_eq!(sim.capacity_violations(), 0);
        let series = sim.into_series();
        for w in series.samples.windows(2) {
            prop_assert!(w[0].t < w[1].t);
            prop_assert_eq!(w[1].overhead_total, w[1].overhead_data + w[1].overhead_control);
            if !ttl {
                prop_assert!(w[1].hit_rate >= w[0].hit_rate);
            }
        }
    }
}

#[test]
fn flooding_reaches_everyone() {
    let c = SimConfig {
        item_threshold: u32::MAX,
        oc_size: 10_000,
        policy: Policy::Rh,
        duration: 30_000,
        ..tiny(4, Policy::Rh, 1, false)
    };
    let series = run(c).unwrap();
    assert_eq!(series.last().unwrap().hit_rate, 1.0);
}

#[test]
fn single_node_sees_no_contacts() {
    let c = SimConfig {
        communities: 1,
        nodes_per_community: 1,
        duration: 1000,
        ..SimConfig::default()
    };
    let series = run(c).unwrap();
    let first = series.samples[0];
    assert!(series.samples.iter().all(|s| s.hit_rate == first.hit_rate && s.overhead_total == 0.0));
}

#[test]
fn gated_contacts_cost_nothing() {
    let c = SimConfig {
        selfishness: SelfishnessDescriptor::Uniform { joint_p: 0.0 },
        duration: 5000,
        ..SimConfig::default()
    };
    let mut sim = Simulation::new(c).unwrap();
    let initial: Vec<usize> = sim.nodes().iter().map(|n| n.delivered.len()).collect();
    while !sim.is_finished() {
        sim.step();
    }
    assert!(sim.gate_stats().offered > 0);
    assert_eq!(sim.gate_stats().proceeded, 0);
    assert_eq!(sim.overhead().total(), 0);
    assert!(sim.nodes().iter().all(|n| n.oc.is_empty()));
    assert_eq!(sim.nodes().iter().map(|n| n.delivered.len()).collect::<Vec<_>>(), initial);
}

#[test]
fn injection_dilutes_hit_rate_exactly() {
    // No exchanges, so the only new deliveries are items placed at the node itself.
    let c = SimConfig {
        dynamics: DynamicsDescriptor::ItemDoubling { at: 1000 },
        selfishness: SelfishnessDescriptor::Uniform { joint_p: 0.0 },
        duration: 2000,
        sample_period: 1000,
        ..SimConfig::default()
    };
    let mut sim = Simulation::new(c).unwrap();
    while sim.now() < 999 {
        sim.step();
    }
    let old: Vec<usize> = sim.nodes().iter().map(|n| n.delivered.len()).collect();
    sim.step();
    for (n, d) in sim.nodes().iter().zip(old) {
        let own_new = n.li.contents().iter().filter(|i| i.0 >= 400 && sim.catalog().channel_of(**i) == n.subscription).count();
        assert_eq!(n.delivered.len(), d + own_new);
        let before = d as f64 / 100.0;
        let after = n.delivered.len() as f64 / 200.0;
        assert!((after - (before * 100.0 / 200.0 + own_new as f64 / 200.0)).abs() < 1e-12);
    }
}
