mod common;

use std::collections::{BTreeSet, HashMap};

use bpcol::gen::{
    generate, sample_bipartite_regular, sample_bipartite_switch, sample_partition, GenParams,
    Sampler, SamplerPolicy,
};
use bpcol::graph::check_planted_regular;
use bpcol::io::graph_to_string;
use bpcol::rng;
use common::{chi_square_critical_99, chi_square_uniform};

/// All d-regular bipartite graphs on m + m vertices, as sorted edge lists.
fn enumerate_regular_bipartite(m: usize, d: usize) -> Vec<Vec<(usize, usize)>> {
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|l| (0..m).map(move |r| (l, r))).collect();
    (0u32..1 << (m * m))
        .filter(|mask| mask.count_ones() as usize == m * d)
        .map(|mask| {
            cells
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &c)| c)
                .collect::<Vec<_>>()
        })
        .filter(|edges| {
            (0..m).all(|x| {
                edges.iter().filter(|e| e.0 == x).count() == d
                    && edges.iter().filter(|e| e.1 == x).count() == d
            })
        })
        .collect()
}

fn assert_uniform_over(
    universe: &[Vec<(usize, usize)>],
    draws: usize,
    mut sample: impl FnMut() -> Vec<(usize, usize)>,
) {
    let index: HashMap<&Vec<(usize, usize)>, usize> =
        universe.iter().enumerate().map(|(i, g)| (g, i)).collect();
    let mut counts = vec![0usize; universe.len()];
    for _ in 0..draws {
        let mut e = sample();
        e.sort_unstable();
        counts[*index.get(&e).expect("sample is a regular bipartite graph")] += 1;
    }
    let stat = chi_square_uniform(&counts);
    let crit = chi_square_critical_99(universe.len() - 1);
    assert!(stat <= crit, "chi-square {stat} > {crit}");
}

#[test]
fn enumeration_sizes() {
    assert_eq!(enumerate_regular_bipartite(3, 1).len(), 6);
    assert_eq!(enumerate_regular_bipartite(3, 2).len(), 6);
    assert_eq!(enumerate_regular_bipartite(4, 1).len(), 24);
    assert_eq!(enumerate_regular_bipartite(4, 2).len(), 90);
}

#[test]
fn perfect_matchings_on_three_are_uniform() {
    let all = enumerate_regular_bipartite(3, 1);
    let mut r = rng::stream(11, 0);
    assert_uniform_over(&all, 100_000, || {
        sample_bipartite_regular(3, 1, 10_000, &mut r).unwrap()
    });
}

#[test]
fn two_regular_on_three_is_a_matching_complement() {
    let all = enumerate_regular_bipartite(3, 2);
    for g in &all {
        let missing: Vec<_> = (0..3)
            .flat_map(|l| (0..3).map(move |r| (l, r)))
            .filter(|c| !g.contains(c))
            .collect();
        assert_eq!(missing.len(), 3);
        let ls: BTreeSet<_> = missing.iter().map(|e| e.0).collect();
        let rs: BTreeSet<_> = missing.iter().map(|e| e.1).collect();
        assert_eq!((ls.len(), rs.len()), (3, 3));
    }
    let mut r = rng::stream(12, 0);
    assert_uniform_over(&all, 60_000, || {
        sample_bipartite_regular(3, 2, 10_000, &mut r).unwrap()
    });
}

#[test]
fn small_cases_match_enumeration() {
    for (m, d, seed) in [(4, 1, 13), (4, 2, 14)] {
        let all = enumerate_regular_bipartite(m, d);
        let mut r = rng::stream(seed, 0);
        assert_uniform_over(&all, 90_000, || {
            sample_bipartite_regular(m, d, 10_000, &mut r).unwrap()
        });
    }
}

#[test]
fn switch_sampler_is_regular_and_mixes() {
    let all = enumerate_regular_bipartite(4, 2);
    let mut r = rng::stream(15, 0);
    assert_uniform_over(&all, 20_000, || {
        sample_bipartite_switch(4, 2, 200, &mut r).unwrap()
    });
}

#[test]
fn partitions_are_uniform() {
    let mut r = rng::stream(16, 0);
    let mut counts: HashMap<Vec<u8>, usize> = HashMap::new();
    for _ in 0..60_000 {
        let c = sample_partition(2, &mut r);
        assert_eq!(c.class_sizes(), [2, 2, 2]);
        *counts.entry(c.classes().to_vec()).or_default() += 1;
    }
    assert_eq!(counts.len(), 90);
    let v: Vec<usize> = counts.into_values().collect();
    assert!(chi_square_uniform(&v) <= chi_square_critical_99(89));

    let mut counts: HashMap<Vec<u8>, usize> = HashMap::new();
    for _ in 0..60_000 {
        *counts
            .entry(sample_partition(1, &mut r).classes().to_vec())
            .or_default() += 1;
    }
    assert_eq!(counts.len(), 6);
    let v: Vec<usize> = counts.into_values().collect();
    assert!(chi_square_uniform(&v) <= chi_square_critical_99(5));
}

#[test]
fn complete_blocks_when_d_equals_m() {
    let inst = generate(&GenParams::new(2, 2, 5)).unwrap();
    assert_eq!(inst.graph.num_edges(), 12);
    assert_eq!(inst.coloring.class_sizes(), [2, 2, 2]);
    assert!(check_planted_regular(&inst.graph, &inst.coloring, 2).pass);
    let e = sample_bipartite_regular(5, 5, 1, &mut rng::stream(0, 0)).unwrap();
    assert_eq!(e.len(), 25);
}

#[test]
fn medium_instance_edge_count() {
    let inst = generate(&GenParams::new(50, 8, 21)).unwrap();
    assert_eq!(inst.graph.num_edges(), 1200);
    assert!(check_planted_regular(&inst.graph, &inst.coloring, 8).pass);
}

#[test]
fn same_seed_same_bytes() {
    for (m, d) in [(10, 3), (60, 16)] {
        let a = generate(&GenParams::new(m, d, 99)).unwrap();
        let b = generate(&GenParams::new(m, d, 99)).unwrap();
        let c = generate(&GenParams::new(m, d, 100)).unwrap();
        let text = |i: &bpcol::PlantedInstance| graph_to_string(&i.graph, Some(&i.coloring), d);
        assert_eq!(text(&a), text(&b));
        assert_ne!(text(&a), text(&c));
    }
}

#[test]
fn exact_only_policy_can_exhaust() {
    let mut p = GenParams::new(40, 20, 3);
    p.max_rejections = 1;
    p.policy = SamplerPolicy::ExactOnly;
    assert!(generate(&p).is_err());
    p.policy = SamplerPolicy::Auto;
    let inst = generate(&p).unwrap();
    assert_eq!(inst.sampler, Sampler::SwitchRepair);
    assert!(check_planted_regular(&inst.graph, &inst.coloring, 20).pass);
}
