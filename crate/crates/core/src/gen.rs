//! Sampler for the planted model: an equal random tripartition plus an
//! independent d-regular bipartite graph between every pair of classes.
//!
//! Stream layout for a seed `s`: stream 0 draws the partition, streams 1, 2
//! and 3 draw the bipartite blocks for class pairs (0,1), (0,2) and (1,2).

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, PlantedColoring};
use crate::rng;

pub const CLASS_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Which procedure produced a bipartite block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    /// Configuration model with rejection: exactly uniform.
    Exact,
    /// Configuration model, switch repair, then mixing switches: approximately uniform.
    SwitchRepair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerPolicy {
    /// Fail with [`Error::RejectionExhausted`] when the budget runs out.
    ExactOnly,
    /// Fall back to switch repair when the budget runs out.
    Auto,
}

#[derive(Clone, Debug)]
pub struct GenParams {
    pub per_class: usize,
    pub d: usize,
    pub seed: u64,
    pub max_rejections: usize,
    /// Extra switches after repair; `None` means `10 * m * d`.
    pub mixing_switches: Option<usize>,
    pub policy: SamplerPolicy,
}

impl GenParams {
    pub fn new(per_class: usize, d: usize, seed: u64) -> GenParams {
        GenParams {
            per_class,
            d,
            seed,
            max_rejections: 10_000,
            mixing_switches: None,
            policy: SamplerPolicy::Auto,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.d < 1 || self.d > self.per_class {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= d <= per_class, got d = {}, per_class = {}",
                self.d, self.per_class
            )));
        }
        if self.max_rejections < 1 {
            return Err(Error::InvalidParameter(
                "max_rejections must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct PlantedInstance {
    pub graph: Graph,
    pub coloring: PlantedColoring,
    pub d: usize,
    pub sampler: Sampler,
}

/// Uniformly random assignment of `3 * per_class` vertices to three classes of
/// equal size.
pub fn sample_partition<R: Rng + ?Sized>(per_class: usize, rng: &mut R) -> PlantedColoring {
    let mut class_of: Vec<u8> = (0..3u8)
        .flat_map(|c| std::iter::repeat_n(c, per_class))
        .collect();
    class_of.shuffle(rng);
    PlantedColoring::new(class_of).expect("classes are 0..3")
}

/// One attempt of the configuration model on `m + m` vertices. Returns `None`
/// as soon as a multi-edge appears. Stubs are drawn one at a time (a lazy
/// Fisher-Yates shuffle), so a rejected attempt stops early without changing
/// the distribution of accepted ones.
fn configuration_attempt<R: Rng + ?Sized>(
    m: usize,
    d: usize,
    stubs: &mut [usize],
    rng: &mut R,
) -> Option<Vec<(usize, usize)>> {
    let total = m * d;
    let mut edges = Vec::with_capacity(total);
    for l in 0..m {
        let start = l * d;
        for k in start..start + d {
            let pick = rng.random_range(k..total);
            stubs.swap(k, pick);
            let r = stubs[k];
            if stubs[start..k].contains(&r) {
                return None;
            }
            edges.push((l, r));
        }
    }
    Some(edges)
}

fn fresh_stubs(m: usize, d: usize) -> Vec<usize> {
    (0..m).flat_map(|r| std::iter::repeat_n(r, d)).collect()
}

fn complement(m: usize, edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let present: HashSet<_> = edges.iter().copied().collect();
    (0..m)
        .flat_map(|l| (0..m).map(move |r| (l, r)))
        .filter(|e| !present.contains(e))
        .collect()
}

/// Uniform simple d-regular bipartite graph on `m + m` vertices by rejection.
/// Edges are `(left index, right index)` pairs in sorted order.
pub fn sample_bipartite_regular<R: Rng + ?Sized>(
    m: usize,
    d: usize,
    max_rejections: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    if d > m {
        return Err(Error::InvalidParameter(format!("d = {d} exceeds m = {m}")));
    }
    if d == m {
        return Ok((0..m).flat_map(|l| (0..m).map(move |r| (l, r))).collect());
    }
    if 2 * d > m {
        let sparse = sample_bipartite_regular(m, m - d, max_rejections, rng)?;
        return Ok(complement(m, &sparse));
    }
    let mut stubs = fresh_stubs(m, d);
    for _ in 0..max_rejections {
        if let Some(mut edges) = configuration_attempt(m, d, &mut stubs, rng) {
            edges.sort_unstable();
            return Ok(edges);
        }
    }
    Err(Error::RejectionExhausted(max_rejections))
}

/// Approximately uniform simple d-regular bipartite graph: a configuration
/// pairing, 2-edge switches until simple, then `mixing` random switches.
pub fn sample_bipartite_switch<R: Rng + ?Sized>(
    m: usize,
    d: usize,
    mixing: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    if d > m {
        return Err(Error::InvalidParameter(format!("d = {d} exceeds m = {m}")));
    }
    if d == m {
        return Ok((0..m).flat_map(|l| (0..m).map(move |r| (l, r))).collect());
    }
    if 2 * d > m {
        let sparse = sample_bipartite_switch(m, m - d, mixing, rng)?;
        return Ok(complement(m, &sparse));
    }
    let mut stubs = fresh_stubs(m, d);
    stubs.shuffle(rng);
    let mut edges: Vec<(usize, usize)> =
        stubs.iter().enumerate().map(|(k, &r)| (k / d, r)).collect();
    let mut count: HashMap<(usize, usize), u32> = HashMap::new();
    for &e in &edges {
        *count.entry(e).or_default() += 1;
    }
    let total = edges.len();
    let budget = 1000 * total.max(1);
    let mut tries = 0usize;
    loop {
        let dups: Vec<usize> = (0..total).filter(|&i| count[&edges[i]] > 1).collect();
        if dups.is_empty() {
            break;
        }
        for i in dups {
            while count[&edges[i]] > 1 {
                tries += 1;
                if tries > budget {
                    return Err(Error::RejectionExhausted(budget));
                }
                let j = rng.random_range(0..total);
                try_switch(&mut edges, &mut count, i, j);
            }
        }
    }
    for _ in 0..mixing {
        let i = rng.random_range(0..total);
        let j = rng.random_range(0..total);
        try_switch(&mut edges, &mut count, i, j);
    }
    edges.sort_unstable();
    Ok(edges)
}

/// Replaces `(l1, r1), (l2, r2)` by `(l1, r2), (l2, r1)` when neither new edge
/// is present yet.
fn try_switch(
    edges: &mut [(usize, usize)],
    count: &mut HashMap<(usize, usize), u32>,
    i: usize,
    j: usize,
) -> bool {
    let (l1, r1) = edges[i];
    let (l2, r2) = edges[j];
    if l1 == l2 || r1 == r2 {
        return false;
    }
    let (a, b) = ((l1, r2), (l2, r1));
    if count.get(&a).copied().unwrap_or(0) > 0 || count.get(&b).copied().unwrap_or(0) > 0 {
        return false;
    }
    for old in [(l1, r1), (l2, r2)] {
        let c = count.get_mut(&old).expect("edge is counted");
        *c -= 1;
        if *c == 0 {
            count.remove(&old);
        }
    }
    *count.entry(a).or_default() += 1;
    *count.entry(b).or_default() += 1;
    edges[i] = a;
    edges[j] = b;
    true
}

pub fn generate(params: &GenParams) -> Result<PlantedInstance> {
    params.validate()?;
    let (m, d) = (params.per_class, params.d);
    let coloring = sample_partition(m, &mut rng::stream(params.seed, 0));
    let members: Vec<Vec<usize>> = (0..3).map(|c| coloring.members(c)).collect();
    let mut sampler = Sampler::Exact;
    let mut edges = Vec::with_capacity(3 * m * d);
    for (k, &(i, j)) in CLASS_PAIRS.iter().enumerate() {
        let mut rng = rng::stream(params.seed, 1 + k as u64);
        let block = match sample_bipartite_regular(m, d, params.max_rejections, &mut rng) {
            Ok(b) => b,
            Err(Error::RejectionExhausted(n)) if params.policy == SamplerPolicy::Auto => {
                log::debug!("pair ({i},{j}): {n} rejections, switching to repair sampler");
                sampler = Sampler::SwitchRepair;
                let mixing = params.mixing_switches.unwrap_or(10 * m * d);
                sample_bipartite_switch(m, d, mixing, &mut rng)?
            }
            Err(e) => return Err(e),
        };
        edges.extend(
            block
                .into_iter()
                .map(|(l, r)| (members[i][l], members[j][r])),
        );
    }
    let graph = Graph::from_edges(3 * m, edges)?;
    Ok(PlantedInstance {
        graph,
        coloring,
        d,
        sampler,
    })
}
