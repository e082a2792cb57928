//! Credal-set evaluation of uncertainty-aware classifier predictions.
//!
//! Heterogeneous prediction encodings (point vectors, prediction samples,
//! probability intervals, mass functions) are mapped to credal sets via
//! coherent lower probabilities and their Möbius masses. Each model is
//! scored with a composite metric `E = d + lambda * NS`, combining the
//! divergence from the ground truth to the nearest credal-set vertex with a
//! non-specificity term weighted by the trade-off parameter `lambda`, and
//! models are ranked across a lambda sweep for selection.
//!
//! Modules:
//! - [`setfn`]: masses, belief / plausibility / commonality, Möbius
//!   inversion, pignistic transform.
//! - [`credal`]: credal-set construction from every encoding and vertex
//!   enumeration (exact and 2N-approximate).
//! - [`divergence`]: KL and JS distances to the nearest vertex.
//! - [`uncertainty`]: non-specificity measures, entropy bounds over
//!   interval credal sets, entropy and mutual-information utilities.
//! - [`evaluator`]: the per-instance metric, aggregation, rankings.
//! - [`io`]: manifests, prediction files, result files, the run driver.
//! - [`oracle`]: brute-force reference implementations and the self-test.

pub mod credal;
pub mod divergence;
pub mod error;
pub mod evaluator;
pub mod io;
pub mod oracle;
pub mod setfn;
pub mod uncertainty;

pub use error::{Error, Result};
