use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("unknown location id {0}")]
    UnknownLocation(usize),
    #[error("duplicate location id {0}")]
    DuplicateLocation(usize),
    #[error("location {0} has non-finite coordinates")]
    NonFiniteCoordinate(usize),
    #[error("travel speed must be positive and finite, got {0}")]
    InvalidSpeed(f64),
    #[error("travel matrix is not square or does not match its id header")]
    NotSquare,
    #[error("travel matrix has no kitchen (id 0)")]
    MissingKitchen,
    #[error("travel time from {0} to {1} is negative or not finite")]
    NegativeEntry(usize, usize),
    #[error("cannot parse travel matrix: {0}")]
    Parse(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("order {0} is referenced but unknown")]
    UnknownOrder(usize),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("episode is incomplete: {0}")]
    IncompleteEpisode(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("instance exceeds oracle caps: {0}")]
    OverCaps(String),
}
