//! Spectral data of linear pseudo-Anosov maps on square-tiled surfaces.
//!
//! A square-tiled surface (origami) is encoded by two permutations of its
//! unit squares. An affine automorphism over a hyperbolic `SL(2,Z)` matrix
//! is synthesized geometrically, its action on homology is computed exactly,
//! and the predicted resonance spectrum is cross-checked against
//!
//! * exact Lefschetz fixed-point counts and the flat-trace identity,
//! * numerically measured correlation decay of the map,
//! * deviation exponents of weighted Birkhoff integrals along the
//!   contracting flow, and the explicit coboundary construction.
//!
//! Branch geometry is exact (`BigRational`); floating point enters only for
//! root extraction and the numerical experiments.

pub mod analysis;
pub mod automorphism;
pub mod dynamics;
pub mod fixedpoints;
pub mod geom;
pub mod homology;
pub mod poly;
pub mod report;
pub mod resonances;
pub mod surface;

pub use automorphism::{compose_power, search_automorphism, synthesize, AffineAutomorphism};
pub use surface::{cone_data, parse_origami, Origami, SingularityProfile};
