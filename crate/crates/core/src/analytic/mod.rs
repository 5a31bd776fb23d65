//! Fredholm-product Laplace functionals, Bromwich inversion and the law of
//! the incident power.

pub mod fredholm;
pub mod incident;
pub mod inversion;

pub use fredholm::{radial_fredholm_det, FadingModifier, RadialModifier, RadialProduct};
pub use incident::{closed_form_ppp_rayleigh_mu4, Diagnostics, IncidentPowerDistribution};
pub use inversion::{invert_laplace, InversionConfig, InversionMethod, Inverted};
