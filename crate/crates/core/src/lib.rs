//! Semantic topic analysis of labeled camera images.
//!
//! The pipeline turns per-image label lists into bag-of-label-words vectors
//! ([`corpus`]), weights them with a per-camera tf-idf into a sparse
//! image-label matrix ([`weighting`]), decomposes that matrix with LDA
//! ([`lda`]) and bins the per-image topic mixtures into per-camera time
//! series ([`timeseries`]).

pub mod corpus;
pub mod lda;
pub mod rng;
pub mod timeseries;
pub mod weighting;
