//! Numerical laboratory for the norm-inflation mechanism of the 1D massless
//! Dirac-Klein-Gordon system in null coordinates:
//!
//! ```text
//! (d_t + d_x) u = -i phi v
//! (d_t - d_x) v = -i phi u
//! (d_t^2 - d_x^2) phi = 2 Re(u conj(v))
//! ```
//!
//! The crate builds the frequency-localized data family
//! `u0_hat = sigma 1_[5N,7N]`, `v0_hat = sigma (log N)^{-1/2} 1_[-N,0]`,
//! `phi0 = phi1 = 0`, computes Picard iterates with per-order norm ledgers,
//! validates the second iterate against an independent closed-form oracle
//! and a direct splitting solver, and sweeps the frequency scale `N` to
//! exhibit shrinking data with a bounded-below `H^{1/2}` norm of `phi`.

pub mod error;
pub mod norms;
pub mod oracle;
pub mod picard;
pub mod propagators;
pub mod quad;
pub mod refsolver;
pub mod schedule;
pub mod spectral;

pub use error::{Error, Result};
