use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("node {0} is not in the tree")]
    UnknownNode(String),
    #[error("zero parent weight at node {0}")]
    ZeroParentWeight(String),
    #[error("kernel is not a nearest-neighbour random walk")]
    NotRandomWalk,
    #[error("resource limit: {what} exceeds cap {cap}")]
    ResourceLimit { what: String, cap: usize },
    #[error("missing annotation: {0}")]
    MissingAnnotation(String),
    #[error("measure is not invariant (residual {residual} at node {node})")]
    NotInvariant { node: String, residual: String },
    #[error("measure must be strictly positive (node {0})")]
    NonPositiveMeasure(String),
    #[error("{0} is not an eigenvalue")]
    NotAnEigenvalue(String),
    #[error("eigenvalue {lambda} is not simple (algebraic multiplicity {algebraic}, geometric {geometric})")]
    NonSimpleEigenvalue {
        lambda: String,
        algebraic: usize,
        geometric: usize,
    },
    #[error("the tree has leaves or is not annotated as leafless")]
    LeafyTree,
    #[error("the end set is infinite; use recurrence classification on the whole kernel")]
    InfiniteEnds,
    #[error("matrix is reducible")]
    Reducible,
    #[error("continued fraction diverges at depth {0}")]
    Divergence(usize),
    #[error("negative discriminant at level {0}")]
    NegativeDiscriminant(usize),
    #[error("invalid offspring law: {0}")]
    InvalidLaw(String),
    #[error("guard exceeded: {0}")]
    Guard(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Variant name, used as the `kind` of machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "Parse",
            Error::InvalidTree(_) => "InvalidTree",
            Error::InvalidKernel(_) => "InvalidKernel",
            Error::UnknownNode(_) => "UnknownNode",
            Error::ZeroParentWeight(_) => "ZeroParentWeight",
            Error::NotRandomWalk => "NotRandomWalk",
            Error::ResourceLimit { .. } => "ResourceLimit",
            Error::MissingAnnotation(_) => "MissingAnnotation",
            Error::NotInvariant { .. } => "NotInvariant",
            Error::NonPositiveMeasure(_) => "NonPositiveMeasure",
            Error::NotAnEigenvalue(_) => "NotAnEigenvalue",
            Error::NonSimpleEigenvalue { .. } => "NonSimpleEigenvalue",
            Error::LeafyTree => "LeafyTree",
            Error::InfiniteEnds => "InfiniteEnds",
            Error::Reducible => "Reducible",
            Error::Divergence(_) => "Divergence",
            Error::NegativeDiscriminant(_) => "NegativeDiscriminant",
            Error::InvalidLaw(_) => "InvalidLaw",
            Error::Guard(_) => "Guard",
            Error::Io(_) => "Io",
        }
    }
}
