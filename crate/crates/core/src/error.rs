use thiserror::Error;

use crate::lattice::Point;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("point {0:?} is outside the lattice")]
    OutOfBounds(Point),
    #[error("apex {apex:?} is not in the causal future of {base:?}")]
    NotInFuture { base: Point, apex: Point },
    #[error("slab [{t0}, {t0}+{thickness}) does not fit into {n_t} time rows")]
    SlabOutOfRange { t0: usize, thickness: usize, n_t: usize },
    #[error("slab thickness {0} is below the two rows required by second order dynamics")]
    SlabTooThin(usize),
    #[error("CFL bound violated: {0}")]
    Unstable(String),
    #[error("mass must be strictly positive, got {0}")]
    NonPositiveMass(f64),
    #[error("truncation orders differ: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("constant term is not invertible")]
    NotInvertible,
    #[error("exponential needs a vanishing constant term")]
    NonZeroConstant,
    #[error("configurations vary on overlapping supports")]
    OverlappingSupports,
    #[error("cutoff is not identically one on {0:?}")]
    CutoffNotUnity(Point),
    #[error("support {0:?} is too close to the time boundary (margin {1})")]
    MarginViolation(Point, usize),
    #[error("causal order violated: {0}")]
    CausalOrderViolated(String),
    #[error("regions are not spacelike separated")]
    NotSpacelike,
    #[error("decomposition does not sum to the label (residual {0:e})")]
    DecompositionMismatch(f64),
    #[error("wrong grading: {0}")]
    WrongGrading(String),
    #[error("letter position {0} out of range")]
    BadPosition(usize),
    #[error("unknown interaction kind {0:?}")]
    UnknownInteraction(String),
    #[error("invalid structure constants: {0}")]
    InvalidStructureConstants(String),
}
