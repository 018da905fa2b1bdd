use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{0} must be positive and finite")]
    NotPositive(&'static str),
    #[error("inconsistent configuration: {0}")]
    Inconsistent(&'static str),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("could not place robot {robot} without overlap after {attempts} attempts")]
    Placement { robot: usize, attempts: usize },
    #[error("robot id {0} out of range")]
    UnknownRobot(usize),
    #[error("scripted layout has {got} robots, expected {expected}")]
    LayoutSize { expected: usize, got: usize },
    #[error("scripted layout is infeasible: {0}")]
    Layout(String),
}
