pub mod auxtree;
pub mod cycles;
pub mod decompose;
pub mod dynamic;
pub mod error;
pub mod generate;
pub mod gprime;
pub mod graph;
pub mod io;
pub mod isolation;
pub mod normalize;
pub mod planar;
pub mod pullback;
pub mod treedec;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use graph::{
    circulation, combine_shifted, Bipartition, Cycle, DirectedEdge, DirectedWeights, Edge,
    EdgeId, EdgeTag, Graph, VertexId, WeightAssignment,
};
