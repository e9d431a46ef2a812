//! Generators for verifiable index-2 test systems.

pub mod grid;
pub mod oseen;
pub mod planted;
pub mod random;

pub use grid::{CellRect, Component, GridGeometry, GridSpec};
pub use oseen::{full_domain_patch, generate_oseen, generate_output_patches, toy_patches, BaseFlow, Rect};
pub use planted::{generate_planted, PlantedOptions};
pub use random::{generate_random, RandomSpec};
