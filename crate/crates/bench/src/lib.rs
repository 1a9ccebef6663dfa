//! Shared fixtures for the benchmarks.

use logismos_core::phantom::{generate, PhantomOutput, PhantomRecipe, PhantomSpec};

/// The acceptance phantom: sphere r = 8 mm in a 32³ / 1 mm volume.
pub fn sphere_phantom() -> PhantomOutput {
    generate(&PhantomRecipe::new(PhantomSpec::centered_sphere(
        32, 8.0, 42,
    )))
    .expect("valid phantom")
}
