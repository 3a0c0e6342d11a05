//! Probing language models for geographic representation.
//!
//! The pipeline builds per-country concept datasets from news sentences,
//! ranks feed-forward units by average precision to find expert units,
//! connects countries whose expert sets overlap, and scores the resulting
//! network against real borders. A second branch analyzes generated text for
//! country favouritism and language drift.
//!
//! Numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix the common choices.

pub mod activation;
pub mod corpus;
pub mod country;
pub mod experts;
pub mod gazetteer;
pub mod generation;
pub mod georep;
pub mod metrics;
pub mod scalar;
pub mod synthetic;

use thiserror::Error;

pub use activation::{read_dump, write_dump, ActivationDump, DumpError};
pub use country::{CountryCode, LanguageTag};
pub use scalar::Scalar;

pub type ExpertSetF64 = experts::ExpertSet<f64>;
pub type ExpertSetF32 = experts::ExpertSet<f32>;
pub type ExpertUnitF64 = experts::ExpertUnit<f64>;
pub type ExpertUnitF32 = experts::ExpertUnit<f32>;
pub type GeoRepNetworkF64 = georep::GeoRepNetwork<f64>;
pub type GeoRepNetworkF32 = georep::GeoRepNetwork<f32>;
pub type WeightedGraphF64 = georep::WeightedGraph<f64>;
pub type WeightedGraphF32 = georep::WeightedGraph<f32>;

/// Any error raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Code(#[from] country::CodeError),
    #[error(transparent)]
    Gazetteer(#[from] gazetteer::GazetteerError),
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Dump(#[from] DumpError),
    #[error(transparent)]
    Expert(#[from] experts::ExpertError),
    #[error(transparent)]
    GeoRep(#[from] georep::GeoRepError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error(transparent)]
    Generation(#[from] generation::GenError),
    #[error(transparent)]
    LangId(#[from] generation::LangIdError),
    #[error(transparent)]
    Stats(#[from] generation::StatsError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
