use alloc::boxed::Box;
use alloc::string::String;
use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("extent {extent} m along {axis} is not a multiple of the {cell} m cell size (remainder {remainder} m)")]
    NonDivisibleExtent {
        axis: char,
        extent: f64,
        cell: f64,
        remainder: f64,
    },

    #[error("invalid station set: {0}")]
    InvalidStations(String),

    #[error("degenerate prism: every edge must have positive length")]
    DegeneratePrism,

    #[error("station ({x}, {y}, {z}) lies inside a prism")]
    StationInsidePrism { x: f64, y: f64, z: f64 },

    #[error("dense kernel needs {required} bytes which exceeds the {cap} byte cap; raise or unlock the cap")]
    MemoryCap { required: u64, cap: u64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("rank deficient: requested rank {requested}, achievable rank {achievable}")]
    RankDeficient { requested: usize, achievable: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("reference model is identically zero")]
    ZeroReference,

    #[error("noise standard deviation at datum {index} is {value}; use the absolute-value noise variant for signed data")]
    NonPositiveNoise { index: usize, value: f64 },

    #[error("non-finite density in cell {cell} at iteration {iteration}")]
    NonFiniteModel { iteration: usize, cell: usize },

    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::Iteration {
            iteration,
            source: Box::new(self),
        }
    }
}
