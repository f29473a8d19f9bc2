use crate::geom::Vec2;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite velocity at RK stage {stage} of sub-step {step}")]
    Evaluation { step: usize, stage: usize },

    #[error("flow map inversion of sub-step {step} did not converge at ({:.6}, {:.6}); residual {residual:e}", point.x, point.y)]
    Inversion { step: usize, point: Vec2, residual: f64 },

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("degenerate parametrization at l = {l} (speed {speed:e})")]
    DegenerateParametrization { l: f64, speed: f64 },

    #[error("tracked curve self-intersects between segments {first} and {second}")]
    Topology { first: usize, second: usize },

    #[error("moving domain left the computational box (curve bbox {lo:?}..{hi:?})")]
    DomainEscape { lo: Vec2, hi: Vec2 },

    #[error("cell ({}, {}) has {regions} disjoint regions; curve is under-resolved by the grid", cell.0, cell.1)]
    Resolution { cell: (usize, usize), regions: usize },

    #[error("cut-cell decomposition failed in cell ({}, {})", cell.0, cell.1)]
    Decomposition { cell: (usize, usize) },

    #[error("linear solve failed: {reason}")]
    Solver { reason: String, residuals: Vec<f64> },

    #[error("point ({:.6}, {:.6}) lies outside the computational domain", .0.x, .0.y)]
    OutsideDomain(Vec2),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("time step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Error {
        match self {
            e @ Error::Step { .. } => e,
            e => Error::Step { step, source: Box::new(e) },
        }
    }
}
