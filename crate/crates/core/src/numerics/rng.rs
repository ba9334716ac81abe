use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{CVector, C64};

pub type StreamRng = ChaCha20Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// A node in a tree of independent random streams.
///
/// Every stream is a ChaCha20 keystream addressed by `(key, stream)`, so any
/// node can be re-created from the root seed and its fork path alone. There
/// is no shared state: parallel trials fork their own streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SeedStream {
    key: u64,
    stream: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self { key: seed, stream: 0 }
    }

    pub fn fork(&self, index: u64) -> Self {
        Self {
            key: self.id(),
            stream: index,
        }
    }

    /// A single number identifying this node; reported as the trial seed.
    pub fn id(&self) -> u64 {
        splitmix64(self.key ^ splitmix64(self.stream))
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.key);
        rng.set_stream(self.stream);
        rng
    }
}

/// Entries `(a + i b) / sqrt(2)` with `a, b` independent standard normals, so
/// each complex entry has unit total variance.
pub fn complex_gaussian<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_fn(dim, |_, _| {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        C64::new(a * scale, b * scale)
    })
}
