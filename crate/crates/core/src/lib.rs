//! Statistical toolkit for high-frequency exchange-rate series.
//!
//! The crate covers ingestion of regularly sampled price files, log and
//! triangle-residual returns, q-Gaussian distribution fits, autocorrelation,
//! random-matrix analysis of week-by-week correlations, multifractal
//! detrended fluctuation analysis and scale-dependent cross-correlations of
//! currency triples. Synthetic generators with known answers live in
//! [`synth`].

pub mod epps;
pub mod error;
pub mod ingest;
pub mod mfdfa;
pub mod model;
pub mod quadrature;
pub mod qgaussian;
pub mod returns;
pub mod rmt;
pub mod series_io;
pub mod stats;
pub mod synth;
pub mod temporal;

pub use error::{Error, Result};
pub use model::{ReturnKind, ReturnSeries, TickSeries, TimeGrid, Triangle};
