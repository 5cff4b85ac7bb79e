//! Self-organizing maps and related quantizers for quantitative and
//! qualitative data: Forgy, simple competitive learning, online and batch
//! Kohonen maps, the correspondence-analysis variants for categorical
//! tables, quality measures, super-classes and SVG map displays.

pub mod dataset;
pub mod error;
pub mod init;
pub mod linalg;
pub mod metrics;
pub mod qualitative;
pub mod quantize;
pub mod rng;
pub mod superclass;
pub mod topology;
pub mod viz;

pub use dataset::{DataMatrix, QualitativeColumn, StandardizeMode, Standardization};
pub use error::{Error, Result};
pub use init::InitMethod;
pub use quantize::{Assignment, CodeBook, GainKind, GainSchedule, MissingMode};
pub use superclass::{Linkage, SuperClassing};
pub use topology::{MapTopology, RadiusSchedule, TopologyKind};
