//! SU(2) spinor decomposition of gauge potentials and the topological charges
//! built from it: the Chern-Simons knot charge, the Chern density and second
//! Chern number, and the zero ledger of a four-component map.

pub mod chern_density;
pub mod chern_simons;
pub mod conventions;
pub mod decomposition;
pub mod error;
pub mod fields;
pub mod generators;
pub mod io;
pub mod lattice;
pub mod phi_mapping;
pub mod pipeline;
pub mod report;
pub mod su2;

pub use error::{Error, Result};
pub use fields::{GaugeField, PhiField, SpinorField, Su2Field, UnitField};
pub use lattice::{Axis, Boundary, Grid, Mask, SampledField, ScalarField};
