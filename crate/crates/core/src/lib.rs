pub mod coeffs;
pub mod error;
pub mod fdm;
pub mod fem;
pub mod history;
pub mod laplace;
pub mod manufactured;
pub mod model;
pub mod norms;
pub mod oracle;
pub mod quadrature;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use model::{
    ComplexVector, IcVariant, ModelParams, Potential, SolutionHistory, SpaceGrid, SpaceTimeFn,
    TimeGrid,
};
