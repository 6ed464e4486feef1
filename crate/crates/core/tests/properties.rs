//! Structural laws that hold for every channel and every instance, checked
//! on randomized inputs: the channel algebra, fan-out monotonicity, the
//! scenario refinement order, relabeling invariance, and the consistency
//! of the search routines with each other.

use std::collections::BTreeMap;

use advnet_core::catalog::build_network;
use advnet_core::channel::{
    concatenate, is_finer, is_unambiguous, one_shot_capacity, power, Channel, Space, TableChannel,
};
use advnet_core::net::{AdversaryModel, Alphabet, Scenario};
use advnet_core::search::{
    coincidence_argument_check, hamming_max_code, max_code_for_fixed_f, max_over_network_codes,
    DistanceRule, EnumerationOptions, SearchBudget,
};
use advnet_core::transfer::{fan_out_multishot, hamming_channel, terminal_channels};
use advnet_core::{
    bounds, word, FnTable, Instance, NetworkCode, NetworkKind, OuterCode, Symbol,
};
use proptest::prelude::*;

const SPACE: Space = Space { q: 2, len: 3 };

/// A random fan-out map over the 3-bit space: for each input, a nonempty
/// set of outputs.
fn fan_map() -> impl Strategy<Value = Vec<Vec<u64>>> {
    prop::collection::vec(prop::collection::btree_set(0..8u64, 1..4), 8)
        .prop_map(|sets| sets.into_iter().map(|s| s.into_iter().collect()).collect())
}

fn channel_of(map: Vec<Vec<u64>>) -> TableChannel {
    TableChannel::new(SPACE, SPACE, map)
}

fn capacity_of(ch: &TableChannel) -> u64 {
    one_shot_capacity(&[ch as &dyn Channel], None).unwrap().size
}

/// Keeps, per input, the subset of the fan-out selected by `mask`, falling
/// back to the first element so the channel stays total.
fn shrink(ch: &TableChannel, mask: &[u8]) -> TableChannel {
    let map = SPACE
        .words()
        .map(|x| {
            let fan = ch.eval(x);
            let keep: Vec<u64> = fan
                .iter()
                .enumerate()
                .filter(|(k, _)| mask[x as usize] >> k & 1 == 1)
                .map(|(_, &y)| y)
                .collect();
            if keep.is_empty() {
                vec![fan[0]]
            } else {
                keep
            }
        })
        .collect();
    TableChannel::new(SPACE, SPACE, map)
}

proptest! {
    #[test]
    fn refining_a_channel_never_loses_capacity(
        map in fan_map(),
        mask in prop::collection::vec(0u8..8, 8),
    ) {
        let coarse = channel_of(map);
        let fine = shrink(&coarse, &mask);
        prop_assert!(is_finer(&fine as &dyn Channel, &coarse as &dyn Channel).unwrap());
        prop_assert!(capacity_of(&fine) >= capacity_of(&coarse));
    }

    #[test]
    fn concatenation_is_capped_by_both_factors(first in fan_map(), second in fan_map()) {
        let first = channel_of(first);
        let second = channel_of(second);
        let joined = TableChannel::materialize(&concatenate(first.clone(), second.clone()).unwrap());
        prop_assert!(capacity_of(&joined) <= capacity_of(&first).min(capacity_of(&second)));
    }

    #[test]
    fn the_power_channel_keeps_the_product_code(map in fan_map()) {
        let base = channel_of(map);
        let squared = TableChannel::materialize(&power(base.clone(), 2));
        prop_assert!(capacity_of(&squared) >= capacity_of(&base).pow(2));
    }

    #[test]
    fn capacity_witnesses_stand_re_verification(map in fan_map()) {
        let ch = channel_of(map);
        let cap = one_shot_capacity(&[&ch as &dyn Channel], None).unwrap();
        prop_assert_eq!(cap.witness.len() as u64, cap.size);
        let witness = OuterCode::from_encoded(2, 3, cap.witness).unwrap();
        prop_assert!(is_unambiguous(&witness, &[&ch as &dyn Channel]).unwrap());
    }

    #[test]
    fn relabeling_preserves_unambiguity(map in fan_map(), shift in 1..8u64) {
        // Permuting the observation alphabet cannot create or destroy
        // fan-out overlaps.
        let ch = channel_of(map);
        let cap = one_shot_capacity(&[&ch as &dyn Channel], None).unwrap();
        let witness = OuterCode::from_encoded(2, 3, cap.witness).unwrap();
        let relabeled_map = SPACE
            .words()
            .map(|x| ch.eval(x).iter().map(|&y| (y + shift) % 8).collect())
            .collect();
        let relabeled = TableChannel::new(SPACE, SPACE, relabeled_map);
        prop_assert!(is_unambiguous(&witness, &[&relabeled as &dyn Channel]).unwrap());
    }
}

/// Diamond instance with a chosen adversary, for fan-out comparisons.
fn diamond_with(ids: &[&str], t: usize, rounds: usize, scenario: Scenario) -> Instance {
    let net = build_network(NetworkKind::Diamond).unwrap();
    let adv = AdversaryModel::new(&net, ids, t, rounds, scenario).unwrap();
    Instance::new(Alphabet::new(2).unwrap(), net, adv)
}

/// A per-round diamond network code indexed by the two inner tables.
fn diamond_code(v1: u128, v2: u128, rounds: usize) -> NetworkCode {
    let tables = BTreeMap::from([
        (1usize, FnTable::from_index(2, 1, 1, v1 % 4)),
        (2usize, FnTable::from_index(2, 2, 1, v2 % 16)),
    ]);
    NetworkCode::per_round_same(tables, rounds)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fan_outs_grow_with_budget_and_vulnerable_set(
        v1 in 0..4u128,
        v2 in 0..16u128,
        x in 0..64u64,
    ) {
        let code = diamond_code(v1, v2, 2);
        let xs = word::decode(2, 6, x);
        let fans = |ids: &[&str], t: usize, scenario: Scenario| {
            let inst = diamond_with(ids, t, 2, scenario);
            fan_out_multishot(&inst, &code, &xs).unwrap().per_terminal
        };
        let idle = fans(&[], 0, Scenario::FixedEdges);
        let narrow = fans(&["e1"], 1, Scenario::FixedEdges);
        let wide = fans(&["e1", "e2", "e3"], 1, Scenario::FixedEdges);
        let heavy = fans(&["e1", "e2", "e3"], 2, Scenario::FixedEdges);
        let free = fans(&["e1", "e2", "e3"], 1, Scenario::FreeEdges);
        for term in 0..idle.len() {
            prop_assert!(word::is_subset(&idle[term], &narrow[term]));
            prop_assert!(word::is_subset(&narrow[term], &wide[term]));
            prop_assert!(word::is_subset(&wide[term], &heavy[term]));
            prop_assert!(word::is_subset(&wide[term], &free[term]));
        }
    }

    #[test]
    fn fixed_edge_channels_refine_free_edge_channels(v1 in 0..4u128, v2 in 0..16u128) {
        let code = diamond_code(v1, v2, 2);
        let fixed = diamond_with(&["e1", "e2", "e3"], 1, 2, Scenario::FixedEdges);
        let free = diamond_with(&["e1", "e2", "e3"], 1, 2, Scenario::FreeEdges);
        let fixed_ch = terminal_channels(&fixed, &code).unwrap();
        let free_ch = terminal_channels(&free, &code).unwrap();
        for (fc, ec) in fixed_ch.iter().zip(&free_ch) {
            prop_assert!(is_finer(fc as &dyn Channel, ec as &dyn Channel).unwrap());
        }
    }

    #[test]
    fn no_fixed_code_beats_the_enumerated_maximum(v1 in 0..4u128, v2 in 0..16u128) {
        let budget = SearchBudget::default();
        let inst = diamond_with(&["e1", "e2", "e3"], 1, 1, Scenario::FixedEdges);
        let code = diamond_code(v1, v2, 1);
        let fixed = max_code_for_fixed_f(&inst, &code, &budget).unwrap();
        let options = EnumerationOptions { per_round_codes: false, pin_forwarding: false };
        let best = max_over_network_codes(&inst, options, &budget).unwrap();
        prop_assert!(fixed.size <= best.size);
    }
}

#[test]
fn restricting_the_adversary_to_fixed_edges_never_hurts() {
    let budget = SearchBudget::default();
    let options = EnumerationOptions { per_round_codes: false, pin_forwarding: true };
    for kind in [NetworkKind::Diamond, NetworkKind::MirroredDiamond] {
        let fixed = build_instance(kind, 2, Scenario::FixedEdges);
        let free = build_instance(kind, 2, Scenario::FreeEdges);
        let fixed_max = max_over_network_codes(&fixed, options, &budget).unwrap();
        let free_max = max_over_network_codes(&free, options, &budget).unwrap();
        assert!(fixed_max.size >= free_max.size, "{kind:?}");
    }
}

#[test]
fn two_rounds_dominate_the_squared_one_round_maximum() {
    let budget = SearchBudget::default();
    let options = EnumerationOptions { per_round_codes: false, pin_forwarding: true };
    let one = max_over_network_codes(&build_instance(NetworkKind::Diamond, 1, Scenario::FixedEdges), options, &budget)
        .unwrap();
    let two = max_over_network_codes(&build_instance(NetworkKind::Diamond, 2, Scenario::FixedEdges), options, &budget)
        .unwrap();
    assert!(two.size >= one.size.pow(2));
}

#[test]
fn enumeration_is_deterministic() {
    let budget = SearchBudget::default();
    let options = EnumerationOptions { per_round_codes: false, pin_forwarding: true };
    let inst = build_instance(NetworkKind::Diamond, 1, Scenario::FixedEdges);
    let first = max_over_network_codes(&inst, options, &budget).unwrap();
    let second = max_over_network_codes(&inst, options, &budget).unwrap();
    assert_eq!(first.size, second.size);
    assert_eq!(first.code.words(), second.code.words());
    assert_eq!(first.network_code, second.network_code);
}

fn build_instance(kind: NetworkKind, rounds: usize, scenario: Scenario) -> Instance {
    advnet_core::catalog::build_instance(kind, Alphabet::new(2).unwrap(), rounds, scenario)
        .unwrap()
}

/// Independent oracle for the smallest Hamming search: enumerate every
/// subset of the 3-bit space and keep the largest with pairwise distance 3.
#[test]
fn hamming_search_matches_the_subset_oracle() {
    let budget = SearchBudget::default();
    let distance = |a: u64, b: u64| -> usize {
        let mut d = 0;
        for pos in 0..3 {
            if (a >> pos) & 1 != (b >> pos) & 1 {
                d += 1;
            }
        }
        d
    };
    let mut oracle = 0u32;
    for subset in 0u32..256 {
        let words: Vec<u64> = (0..8).filter(|&w| subset >> w & 1 == 1).collect();
        if words
            .iter()
            .enumerate()
            .all(|(k, &a)| words[k + 1..].iter().all(|&b| distance(a, b) >= 3))
        {
            oracle = oracle.max(words.len() as u32);
        }
    }
    let searched = hamming_max_code(3, 1, Alphabet::new(2).unwrap(), 1, DistanceRule::UniqueDecoding, &budget)
        .unwrap();
    assert_eq!(searched.size, oracle as u64);
    assert_eq!(searched.size, 2);
}

/// The Hamming channel and the threshold rule agree: a code is unambiguous
/// for the ball channel exactly when all pairwise distances clear 2t+1.
#[test]
fn ball_channel_unambiguity_matches_the_distance_threshold() {
    let alphabet = Alphabet::new(2).unwrap();
    let ch = hamming_channel(4, 1, alphabet);
    let distance = |a: u64, b: u64| (0..4).filter(|&p| (a >> p) & 1 != (b >> p) & 1).count();
    for first in 0..16u64 {
        for second in first + 1..16 {
            let code = OuterCode::from_encoded(2, 4, vec![first, second]).unwrap();
            let unambiguous = is_unambiguous(&code, &[&ch as &dyn Channel]).unwrap();
            assert_eq!(unambiguous, distance(first, second) >= 3, "{first} vs {second}");
        }
    }
}

/// On profiles whose intermediate nodes cannot be isolated profitably, the
/// generalized bound coincides with the plain singleton bound of the
/// realized network; elsewhere it can only be tighter.
#[test]
fn generalized_bound_refines_the_singleton_bound() {
    for (ins, outs, t) in [
        (vec![1, 2], vec![1, 1], 1usize),
        (vec![2, 2], vec![1, 1], 1),
        (vec![2, 3], vec![2, 2], 2),
        (vec![1, 2], vec![1, 2], 1),
    ] {
        let profile = bounds::TwoLevelProfile::new(ins, outs).unwrap();
        let net = profile.realize();
        let ids: Vec<String> =
            net.out_edges(net.source()).iter().map(|&e| net.edge(e).id.clone()).collect();
        let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
        let adv = AdversaryModel::new(&net, &ids, t, 1, Scenario::FixedEdges).unwrap();
        let plain = bounds::singleton_cut_set_bound(&net, &adv).unwrap();
        let refined = bounds::generalized_network_singleton_bound(&profile, t);
        let value = |v: &bounds::BoundValue| match *v {
            bounds::BoundValue::Symbols(s) => s,
            _ => unreachable!("singleton bounds are symbol counts"),
        };
        assert!(value(&refined.value) <= value(&plain.value));
    }
}

/// The coincidence check is consistent with the raw Hamming maximum: when
/// even the unconstrained maximum stays at the target, no sharing pair can
/// extend past it.
#[test]
fn coincidence_confirmation_is_consistent_with_the_raw_maximum() {
    let budget = SearchBudget::default();
    let report = coincidence_argument_check(
        5,
        2,
        Alphabet::new(2).unwrap(),
        2,
        DistanceRule::UniqueDecoding,
        0,
        &budget,
    )
    .unwrap();
    assert!(report.confirmed);
    assert!(u128::from(report.max_code) >= report.target);
    if u128::from(report.max_code) == report.target {
        assert!(!report.extension_exists);
    }
}

/// Reserving a symbol removes its constant round block from the domain and
/// lowers the coincidence target.
#[test]
fn reserved_symbols_shrink_the_coincidence_domain() {
    let budget = SearchBudget::default();
    let open = coincidence_argument_check(
        3,
        1,
        Alphabet::new(3).unwrap(),
        1,
        DistanceRule::UniqueDecoding,
        0,
        &budget,
    )
    .unwrap();
    let reserved = coincidence_argument_check(
        3,
        1,
        Alphabet::new(3).unwrap(),
        1,
        DistanceRule::UniqueDecoding,
        1,
        &budget,
    )
    .unwrap();
    assert_eq!(open.domain_size, 27);
    assert_eq!(reserved.domain_size, 26);
    assert_eq!(open.target, 3);
    assert_eq!(reserved.target, 2);
}

/// Relabeling invariance at the instance level: when every inner table
/// commutes with the binary symbol swap, the fan-out of the swapped source
/// word is exactly the digitwise complement of the original fan-out.
#[test]
fn source_relabeling_permutes_fan_outs() {
    let inst = diamond_with(&["e1", "e2", "e3"], 1, 1, Scenario::FixedEdges);
    let tables = BTreeMap::from([
        (1usize, FnTable::identity(2, 1)),
        (2usize, FnTable::from_fn(2, 2, 1, |w| vec![w[0]])),
    ]);
    let code = NetworkCode::per_round_same(tables, 1);
    for x in 0..8u64 {
        let xs = word::decode(2, 3, x);
        let ys: Vec<Symbol> = xs.iter().map(|&s| 1 - s).collect();
        let fan_x = fan_out_multishot(&inst, &code, &xs).unwrap().per_terminal;
        let fan_y = fan_out_multishot(&inst, &code, &ys).unwrap().per_terminal;
        for (fx, fy) in fan_x.iter().zip(&fan_y) {
            // Terminal observations are two binary digits, so the swap acts
            // as complement against 0b11.
            let mut image: Vec<u64> = fx.iter().map(|&w| 3 - w).collect();
            image.sort_unstable();
            assert_eq!(&image, fy);
        }
    }
}
