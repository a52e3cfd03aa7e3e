//! Ground-state levels of Schrodinger operators with several anisotropic
//! inverse-square singularities.

pub mod angular;
pub mod conditions;
pub mod asymptotics;
pub mod error;
pub mod harmonics;
pub mod linalg;
pub mod one_pole;
pub mod polarization;
pub mod profile_io;
pub mod profiles;
pub mod quadform;
pub mod special;
pub mod sphere_rule;
pub mod sphere_spectra;

pub use angular::AngularCoefficient;
pub use error::{Error, Result};
