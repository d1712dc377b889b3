//! Oscillation-index derivations and extension constructions on finite
//! metric spaces.

pub mod derivations;
pub mod error;
pub mod extend;
pub mod instances;
pub mod space;
pub mod unity;

pub use error::{Error, ErrorClass, Result};
pub use space::io::Instance;
pub use space::{
    cb_filtration, CbTerminal, Metric, NeighborIndex, PointRecord, ScalarField, ScalePolicy,
    ScatteredDecomposition, SpaceInstance, SubsetMask,
};
