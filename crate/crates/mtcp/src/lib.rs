//! File formats, JSON schemas and the Monte Carlo harness around
//! [`mtcp_core`], plus the pieces the `mtcp` command-line tool is built from.

pub mod bench;
pub mod error;
pub mod io;
pub mod json;

pub use error::{Error, Result};

use mtcp_core::series::{impute_missing, standardize, Standardized};

/// Imputes masked entries, then standardizes every component series.
pub fn preprocess(loaded: &io::Loaded) -> Result<Standardized> {
    let series = if loaded.mask.count() > 0 {
        impute_missing(&loaded.series, &loaded.mask)?
    } else {
        loaded.series.clone()
    };
    Ok(standardize(&series)?)
}
