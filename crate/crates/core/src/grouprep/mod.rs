//! Finite group actions on φ-modules.

pub mod action;
pub mod characters;
pub mod group;

pub use group::FiniteGroup;
