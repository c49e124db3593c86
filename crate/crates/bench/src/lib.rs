//! Fixtures shared by the benchmarks.

use bpcol::bp::{init_balanced, MessageState};
use bpcol::gen::{generate, GenParams, PlantedInstance};
use bpcol::graph::ArcTable;
use bpcol::rng;

pub struct Fixture {
    pub instance: PlantedInstance,
    pub arcs: ArcTable,
    pub state: MessageState,
}

/// A planted graph with a balanced start at `delta = 1e-3`.
pub fn fixture(per_class: usize, d: usize, seed: u64) -> Fixture {
    let instance = generate(&GenParams::new(per_class, d, seed)).expect("valid parameters");
    let arcs = ArcTable::new(&instance.graph);
    let (state, _) =
        init_balanced(&arcs, 1e-3, &mut rng::stream(seed, 8)).expect("n divisible by 3");
    Fixture {
        instance,
        arcs,
        state,
    }
}
