//! Core of an anonymous, pre-moderated message board.
//!
//! Members prove eligibility with a one-time emailed token and post under a random
//! three-word pseudonym. Nothing links a session to the address that requested it.
//! Submissions are reviewed by a moderator panel and released in fixed-time batches.

pub mod access;
pub mod analytics;
mod board;
pub mod clock;
pub mod content;
pub mod moderation;
pub mod release;

pub use board::{Board, BoardConfig, BoardError, BoardSnapshot, WorklistItem};
