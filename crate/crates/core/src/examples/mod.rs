//! Channel families with known peripheral structure, and a truncated
//! Toeplitz demonstration.

mod group;
mod toeplitz;
mod unitary;
mod weyl;

pub use group::{character_scan, group_walk_channel, CharacterScan, GroupSpec, GroupWalkFixture};
pub use toeplitz::{
    toeplitz_demo, toeplitz_ladder, toeplitz_product_defect, SymbolSpec, ToeplitzReport, ToeplitzTerm,
    SUP_NORM_GRID,
};
pub use unitary::{unitary_channel, UnitaryFixture, UNITARY_TOL};
pub use weyl::{weyl_channel, weyl_pair, WeylFixture};
