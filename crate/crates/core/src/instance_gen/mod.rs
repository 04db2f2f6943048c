//! Benchmark instance generation: heavy-hex lattice, swap-layer
//! densification, Cauchy couplings and the instance file format.

pub mod family;
pub mod io;
pub mod lattice;
pub mod schedule;

pub use family::{
    default_recipe, default_schedule, family_seed, generate_family, generate_instance, generate_with_schedule,
    random_instance, sample_couplings, standard_cauchy, CouplingDistribution, Family, GenerationConfig,
    DEFAULT_SCHEDULE_NAME,
};
pub use io::{deserialize_instance, read_instance, serialize_instance, write_instance};
pub use lattice::{HeavyHexGraph, LatticeSize};
pub use schedule::{
    densify, edge_coloring, first_fit_slices, length_two_paths, PathCenters, ScheduleRecipe, Slice, SliceSchedule,
    SupportKey, SupportSet, SwapLayer,
};
