//! Library side of the `wcm` tool: scene files, the subcommands and the
//! timing helpers. Kept separate from `main` so the integration tests can
//! drive the same code paths.

pub mod commands;
pub mod scene;
pub mod timing;
