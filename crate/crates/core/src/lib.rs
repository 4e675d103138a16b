//! Distributed reduced-attitude formation control on the unit sphere.
//!
//! `n` agents interconnected by a ring each steer a unit vector (their
//! reduced attitude) away from their neighbors. For even `n` the ring settles
//! into two antipodal clusters; for odd `n` it spreads evenly along a great
//! circle, rotating rigidly when the ring is directed.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod linearization;
pub mod search;
pub mod sphere_geom;
pub mod topology;

pub use error::{FormationError, Result};
