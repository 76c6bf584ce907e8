//! Support library for the `oxc` command-line tool: the export document
//! format, renderers, and the batch request runner.

pub mod doc;
pub mod render;
pub mod script;
