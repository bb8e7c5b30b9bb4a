//! File formats, instance generators and the command-line front end.

pub mod conic_format;
pub mod generate;
pub mod model_format;
pub mod report;
