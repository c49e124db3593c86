//! Belief propagation 3-coloring of planted graphs.
//!
//! * [`graph`] and [`io`]: simple graphs, the directed arc index, planted
//!   colorings and the text file format.
//! * [`gen`]: the planted random model.
//! * [`bp`]: BPCol, the belief propagation coloring algorithm.
//! * [`spectral`]: regularity checks and the spectral coloring heuristic.
//! * [`lab`]: the linearized message operators and their diagnostics.
//! * [`experiment`]: seeded trials and parameter sweeps.

pub mod bp;
pub mod error;
pub mod experiment;
pub mod gen;
pub mod graph;
pub mod io;
pub mod lab;
pub mod rng;
pub mod spectral;

pub use bp::{BpOutcome, BpParams, InitMode, InitRecord, MessageState};
pub use error::{Error, Result};
pub use experiment::{SweepConfig, TrialRecord};
pub use gen::{GenParams, PlantedInstance, Sampler};
pub use graph::{ArcTable, Graph, PlantedColoring};
pub use lab::{ArcVector, EigBasis, TrajectoryRecord};
