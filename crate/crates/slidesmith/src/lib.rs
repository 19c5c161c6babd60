//! Standard-library companion to `slidesmith-core`: archive assembly, file
//! and network IO, model backends, the generation pipeline, and the CLI's
//! working parts. Everything deterministic lives in the core crate; this
//! crate supplies the parts that touch disks, sockets, and clocks.

pub mod archive;
pub mod backend;
pub mod canned;
pub mod config;
pub mod datagen;
pub mod eval;
pub mod media;
pub mod orchestrator;
pub mod preview;
pub mod prompts;

pub use archive::{assemble_deck, read_back, ArchiveError, DeckMeta, PptxArchive};
pub use media::MediaCache;
