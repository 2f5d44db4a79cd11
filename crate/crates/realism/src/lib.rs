//! Command-line tool, file formats and reproducibility machinery for the
//! `realism-core` discriminator pipeline.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod archive;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod io;
pub mod manifest;
pub mod selftest;
