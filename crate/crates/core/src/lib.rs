//! Cramér–Rao bounds for near-field sources seen by a wideband hybrid
//! analog/digital uniform linear array.
//!
//! The crate evaluates the stochastic Fisher information of compressed OFDM
//! observations `y_k = W^H x_k`, aggregates it over subcarriers, and maps the
//! result to angle and range bounds. The gain of the wideband bound over the
//! narrowband one is split into a data-diversity part (`10 log10 K_s`) and a
//! geometric part coming from beam squint.
//!
//! ```
//! use nfcrb::{evaluate, Scenario};
//!
//! let scn = Scenario { elements: 64, rf_chains: 8, max_selected: 32, ..Scenario::default() };
//! let op = evaluate(&scn, 1, None).unwrap();
//! assert!(op.wideband.paths[0].range_var < op.narrowband.paths[0].range_var);
//! assert!((op.decomposition.delta_dd - 10.0 * 32f64.log10()).abs() < 1e-12);
//! ```

pub mod combiner;
pub mod covariance;
pub mod crb;
pub mod error;
pub mod experiment;
pub mod fim;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod verify;

pub use combiner::{Combiner, CombinerKind};
pub use covariance::{
    covariance_derivatives, generate_snapshots, kl_objective, mismatch_grid, model_covariance, CovarianceModel, MismatchGrid,
    SnapshotSet,
};
pub use crb::{compression_gap, decompose, gd_scalar_bound, propagate_crb, CompressionGap, CrbReport, CrbVariant, Decomposition, PathCrb};
pub use error::{Error, Result};
pub use experiment::{evaluate, evaluate_full_array, evaluate_on_grid, DbStats, OperatingPoint, Scenario, SweepPoint};
pub use fim::{beta_diagnostic, fim_pseudoinverse, fim_subcarrier, fim_subcarrier_structured, fim_wideband, FimBundle, FimCache, Pseudoinverse};
pub use model::{build_grid, steering_derivatives, steering_vector, ArrayConfig, OfdmGrid, ParamVector, PathSet, SPEED_OF_LIGHT};
