//! Scaling of pairwise-comparison experiments onto an interval quality scale.
//!
//! Raw comparison trials are converted into count matrices ([`ingest`]),
//! scaled to just-objectionable-difference (JOD) units under the Thurstone
//! Case V observer model ([`scaling`]), and analysed for uncertainty
//! ([`stats`]) and unusual observers ([`outliers`]). The [`simulate`] module
//! generates synthetic experiments from known scores to evaluate designs.
//!
//! ```
//! use jodscale::scaling::{scale_mle, CountMatrix, ScaleOptions};
//!
//! // c_ij = how often condition i was preferred over condition j
//! let counts = CountMatrix::from_rows(&[[0, 3, 0], [27, 0, 7], [30, 23, 0]])?;
//! let result = scale_mle(&counts, &ScaleOptions::default())?;
//!
//! assert_eq!(result.jod[0], 0.0);
//! assert!(result.jod[0] < result.jod[1] && result.jod[1] < result.jod[2]);
//! # Ok::<(), jodscale::Error>(())
//! ```

mod error;
pub mod ingest;
pub mod normal;
pub mod outliers;
mod rng;
pub mod scaling;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};

// Code blocks in the guide run as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/scaling.md")]
    mod scaling {}
    #[doc = include_str!("../../../book/src/prior.md")]
    mod prior {}
    #[doc = include_str!("../../../book/src/uncertainty.md")]
    mod uncertainty {}
    #[doc = include_str!("../../../book/src/outliers.md")]
    mod outliers {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
