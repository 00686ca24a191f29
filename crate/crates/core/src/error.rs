use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("archive is empty")]
    EmptyArchive,
    #[error("empty sample")]
    EmptySample,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{name} = {value} is outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("generator returned {got} candidates, expected {expected}")]
    GeneratorContract { expected: usize, got: usize },
}
