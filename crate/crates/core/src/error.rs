use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("simplex pivot guard exceeded")]
    CyclingGuardExceeded,
    #[error("point is not in the set")]
    PointNotInSet,
    #[error("point is not in the domain")]
    PointNotInDomain,
    #[error("polyhedron is empty")]
    EmptyPolyhedron,
    #[error("objective is unbounded over the polyhedron")]
    Unbounded,
    #[error("face enumeration needs {rows} rows but the budget is {budget} (set IDKIT_FACE_BUDGET to raise it)")]
    FaceBudgetExceeded { rows: usize, budget: usize },
    #[error("pair is not in the graph")]
    PairNotInGraph,
    #[error("elimination produced more than {0} rows")]
    EliminationBudgetExceeded(usize),
    #[error("vector is not a subgradient")]
    NotASubgradient,
    #[error("vector is not a normal")]
    NotANormal,
    #[error("qualification condition fails")]
    QualificationFailure,
    #[error("function is not convex")]
    NotConvex,
    #[error("multiplier set is empty")]
    EmptyMultiplierSet,
    #[error("invalid subgradient split: {0}")]
    InvalidSplit(String),
    #[error("descriptor is not supported here: {0}")]
    UnsupportedDescriptor(String),
    #[error("equivalence violated: {0}")]
    EquivalenceViolation(String),
    #[error("zero is not a subgradient at the point")]
    NotCritical,
    #[error("growth function must vanish to second order at 0")]
    InvalidGrowthFunction,
    #[error("invalid manifold: {0}")]
    InvalidManifold(String),
    #[error("strict complementarity is required")]
    StrictComplementarityRequired,
    #[error("invalid function: {0}")]
    InvalidFunction(String),
    #[error("oracle mismatch: {0}")]
    OracleMismatch(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
