//! Simultaneous deformations of a symplectic form and a Lagrangian sub-torus,
//! modelled on flat tori with exact trigonometric coefficients.

pub mod cochain;
pub mod chart;
pub mod coeff;
pub mod derived;
pub mod error;
pub mod exterior;
pub mod flows;
pub mod json;
pub mod koszul;
pub mod linalg;
pub mod moduli;
pub mod numerics;
pub mod random;
pub mod suite;
pub mod symplectic;
pub mod torus;
pub mod trig;

pub use coeff::{Coeff, PiPoly, Rational};
pub use error::{Error, Result};
pub use exterior::{TrigForm, TrigMultiVector};
pub use torus::TorusModel;
pub use trig::TrigScalar;
