//! Steep temporal functions built from sums of cone bumps.

pub mod cone;
pub mod ramp;

pub use cone::{cone_interval, conformally_flat, cover_nodes, fat_cone_covering, pick_constant, surface_nodes, ConeBump, FatConeCovering};
pub mod adapt;
pub mod band;

pub use band::{
    check_steep, forward_sum, globalize, level_rows, plan_bands, steep_cone_function, steep_temporal, BandSpec, BandTrace,
    ConeFunction, SteepOptions, SteepOutcome, SteepReport, SynthesisTrace, ESCALATION_CAP,
};

pub use adapt::{
    adapted_temporal, lift_over_surface, mirror_surface, nodes_below, restrict, signed_distance, steep_bounded, theta_fields, AdaptInputs,
    AdaptOutcome, AdaptReport, BoundedReport, Collar,
};

#[cfg(test)]
mod tests;
