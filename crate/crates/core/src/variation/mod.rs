//! Legendrian variations `V = fξ + ½φ∇f` of an immersion: the deformation
//! potential, the variation field, the closed-form first and second
//! variations of volume and their finite-difference oracles.

mod field;
mod flow;
mod forms;
mod oracle;
mod potential;

pub(crate) use field::{require_legendrian, LEGENDRIAN_TOL};
pub use field::{variation_field, variation_jets, NodeVariation, VariationField};
pub use flow::{flow, FlowOptions, FlowedImmersion, FlowedNode};
pub use forms::{
    bochner_check, first_variation, l_minimality_defect, second_variation, BochnerCheck,
    FirstVariation, LMinimality, SecondVariation, VariationOptions, VariationReport,
};
pub use oracle::{
    first_derivative, second_derivative, FdEstimate, Realization, SprayField, SprayOracle,
};
pub use potential::{random_trig_potential, DeformationPotential, PotentialAt};

use crate::contact::AmbientStructure;
use crate::error::Result;
use crate::submanifold::{Immersion, InducedGeometry};

/// Volume of a space-like immersion by quadrature of the induced density.
pub fn volume(f: &Immersion, s: &AmbientStructure) -> Result<f64> {
    Ok(InducedGeometry::new(f, s, true)?.volume())
}
