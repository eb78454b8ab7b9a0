//! Positive, generally non-monotone travelling fronts of the delayed
//! reaction-diffusion equation `u_t = d u_xx - u + g(u(t-h, x))`.
//!
//! The crate is organised bottom-up:
//!
//! * [`birth`]: birth functions, equilibria and scalar criteria
//! * [`charroots`]: real roots and root counts of the characteristic equations
//! * [`dde`]: the heteroclinic connection of the delay ODE (`c = ∞`)
//! * [`waveprofile`]: the wave profile at finite speed as an integral fixed point
//! * [`pdesim`]: direct method-of-lines simulation of the PDE
//! * [`region`]: classification of the `(p, h)` parameter plane

pub mod birth;
pub mod charroots;
pub mod dde;
pub mod numeric;
pub mod pdesim;
pub mod region;
pub mod waveprofile;

pub use birth::{BirthFunction, BirthSpec, Equilibria, ModelParams};
