use thiserror::Error;

use crate::graph::{EdgeId, VertexId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("weight assignment has no weight for edge {0}")]
    IncompleteAssignment(EdgeId),

    #[error("shift base {base} too small: needs to exceed {required}")]
    ShiftBaseTooSmall { base: String, required: String },

    #[error("cycle enumeration exceeded cap of {cap} cycles")]
    CycleCapExceeded { cap: usize },

    #[error("graph is not decomposable within width {width}: component on vertices {witness:?} is neither planar nor of bounded treewidth")]
    NotDecomposable { width: usize, witness: Vec<VertexId> },

    #[error("no tree decomposition of width at most {width} (treewidth is {actual})")]
    WidthExceeded { width: usize, actual: usize },

    #[error("graph is not planar")]
    NonPlanar,

    #[error("graph is not bipartite")]
    NotBipartite,

    #[error("structural invariant violated: {0}")]
    Structural(String),

    #[error("unknown bag {0}")]
    UnknownBag(usize),

    #[error("weight parameter error: {0}")]
    Parameter(String),

    #[error("zero circulation on cycle through vertices {vertices:?}")]
    ZeroCirculation { vertices: Vec<VertexId> },

    #[error("isolation violated: {0}")]
    IsolationViolated(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidGraph(msg.into())
    }
}
