//! Scattering theory for quasi-one-dimensional strips.
//!
//! A strip is a cable of width `W` (a Hermitian matrix repeated on every site)
//! with a finite scatterer inserted. This crate classifies the cable channels
//! at an energy, builds transfer matrices and their normal forms, reduces them
//! to the elliptic (propagating) channels, and turns them into scattering
//! matrices by several independent routes.
//!
//! All code is generic over the real scalar through [`Real`]; the `*64`
//! aliases at the crate root fix it to `f64`.

pub mod config;
pub mod embedding;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod random;
pub mod reduction;
pub mod scattering;
pub mod transfer;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

pub use config::Tolerances;
pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, Structure, StructuredMatrix};
pub use model::{
    classify_channels, ideal_lead_matrix, sample_disorder, ChannelClass, ChannelData, DisorderKind,
    DisorderSpec, StripModel,
};

/// Real scalar usable throughout the crate.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync {}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 converts to every Real")
}

pub type Complex64 = num_complex::Complex<f64>;
pub type Matrix64 = CMatrix<f64>;
pub type StripModel64 = StripModel<f64>;
pub type ChannelData64 = ChannelData<f64>;
pub type Tolerances64 = Tolerances<f64>;
