//! Water segmentation from multispectral imagery, one band at a time.
//!
//! The crate ranks individual reflectance bands by how well a panel of
//! classical classifiers separates water from everything else, and trains a
//! small feed-forward network on the best bands. Everything downstream of
//! the raw rasters — sampling, the classifiers themselves, the network, the
//! scoring — lives here with no native dependencies, so results are
//! reproducible from a seed alone.
//!
//! Modules, bottom-up:
//!
//! * [`rng`] — seeded generator and seed derivation; every stochastic step
//!   in the crate draws from it.
//! * [`raster`] — scenes, band grids, water masks, tiling, PGM export.
//! * [`sampling`] — balanced pixel sampling and train/val/test splits.
//! * [`metrics`] — confusion matrices, IoU / mean IoU, aggregate tables.
//! * [`classifiers`] — the eight classical models, trained from scratch.
//! * [`mlp`] — the small network: Adam, dropout, early stopping.
//! * [`ranking`] — the band x classifier evaluation grid.
//! * [`cli`] — command-line front end over all of the above.

pub mod classifiers;
pub mod cli;
pub mod error;
pub mod metrics;
pub mod mlp;
pub mod ranking;
pub mod raster;
pub mod rng;
pub mod sampling;

pub use error::{Error, Result};
