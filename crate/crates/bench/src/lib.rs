//! Fixtures shared by the benchmarks in `benches/`.

use qmi_core::random::{self, Family};
use qmi_core::{Effect, Instrument, Matrix, State};

/// Seeded inputs of one dimension.
pub struct Fixture {
    pub dim: usize,
    pub hermitian: Matrix,
    pub a: Effect,
    pub b: Effect,
    pub rho: State,
    pub luders: Instrument,
    pub kraus: Instrument,
}

impl Fixture {
    pub fn new(dim: usize, seed: u64) -> Self {
        let mut rng = random::rng(seed);
        let g = random::ginibre(&mut rng, dim);
        Fixture {
            dim,
            hermitian: (&g + &g.adjoint()).hermitian_part(),
            a: random::effect(&mut rng, dim),
            b: random::effect(&mut rng, dim),
            rho: random::state(&mut rng, dim),
            luders: random::instrument(&mut rng, dim, Family::Luders),
            kraus: random::instrument(&mut rng, dim, Family::Kraus),
        }
    }
}
