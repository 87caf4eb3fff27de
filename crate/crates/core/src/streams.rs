//! Counter-based random streams.
//!
//! Every draw is addressed by `(seed, replicate, purpose, index)`. The tuple is
//! hashed with the SplitMix64 finaliser into a 64-bit key that seeds a fresh
//! xoshiro256++ generator, so a stream never depends on how many numbers were
//! consumed elsewhere. In particular the series coefficients `U_r`, `Z_r`
//! depend only on `(seed, replicate, r)` (and the dimension `K`): a truncated
//! series at `D'` extends the one at `D < D'` term by term, which is what the
//! coupled error estimators rely on. Replicates are independent of the worker
//! that runs them.
//!
//! Series coefficients are generated in blocks of [`SERIES_BLOCK`] indices per
//! generator, `U` and `Z` from separate streams, so that seeding is amortised
//! over many terms.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

/// What a stream is used for. Distinct purposes give independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    /// The standard normals `V` behind the Wiener increment.
    Increment = 1,
    /// Series coefficients `U_r`.
    SeriesU = 2,
    /// Series coefficients `Z_r`.
    SeriesZ = 3,
    /// The Gaussian tail vector `Υ` of the second algorithm.
    Tail = 4,
    /// Increments of the discarded modes `j > K` in projection studies.
    Projection = 5,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes the stream address into a generator key.
pub fn derive_key(seed: u64, replicate: u64, purpose: Purpose, index: u64) -> u64 {
    let mut k = splitmix64(seed);
    k = splitmix64(k ^ replicate);
    k = splitmix64(k ^ purpose as u64);
    splitmix64(k ^ index)
}

/// A generator positioned at the start of the addressed stream.
pub fn stream(seed: u64, replicate: u64, purpose: Purpose, index: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(derive_key(seed, replicate, purpose, index))
}

/// Callback of [`SeriesSource::visit_series`]: `(r_first, us, zs)`.
pub type SeriesVisitor<'a> = dyn FnMut(u64, &[f64], &[f64]) + 'a;

/// Source of the standard normals consumed by the Lévy-area samplers.
///
/// Implementations must hand out the same `U_r`, `Z_r` for the same `r`
/// regardless of call order.
pub trait SeriesSource {
    /// Fills `u` and `z` with `U_r` and `Z_r` (length `K` each), `r ≥ 1`.
    fn series(&mut self, r: u64, u: &mut [f64], z: &mut [f64]);

    /// Fills `z` with `Z_r` only.
    fn series_z(&mut self, r: u64, z: &mut [f64]);

    /// Fills `out` with the tail vector `Υ` (length `L`).
    fn tail(&mut self, out: &mut [f64]);

    /// Visits `U_r`, `Z_r` for `r_lo ≤ r ≤ r_hi` in increasing order of `r`.
    /// Each call of `f(r_first, us, zs)` covers `us.len() / k` consecutive
    /// indices, their vectors stored back to back.
    fn visit_series(&mut self, k: usize, r_lo: u64, r_hi: u64, f: &mut SeriesVisitor) {
        let (mut u, mut z) = (vec![0.0; k], vec![0.0; k]);
        for r in r_lo..=r_hi {
            self.series(r, &mut u, &mut z);
            f(r, &u, &z);
        }
    }
}

/// Number of consecutive series indices drawn from one generator.
pub const SERIES_BLOCK: u64 = 64;

/// The most recently generated block of one series purpose.
#[derive(Debug, Clone, Default)]
struct BlockCache {
    block: Option<u64>,
    k: usize,
    values: Vec<f64>,
}

impl BlockCache {
    /// Copies the coefficient vector of index `r ≥ 1` into `out`.
    #[inline]
    fn fetch(&mut self, streams: (u64, u64), purpose: Purpose, r: u64, out: &mut [f64]) {
        let k = out.len();
        let b = (r - 1) / SERIES_BLOCK;
        self.ensure(streams, purpose, b, k);
        let off = ((r - 1) % SERIES_BLOCK) as usize * k;
        out.copy_from_slice(&self.values[off..off + k]);
    }

    #[inline]
    fn ensure(&mut self, streams: (u64, u64), purpose: Purpose, b: u64, k: usize) {
        if self.block != Some(b) || self.k != k {
            self.refill(streams, purpose, b, k);
        }
    }

    #[inline(never)]
    fn refill(&mut self, streams: (u64, u64), purpose: Purpose, b: u64, k: usize) {
        self.values.resize(k * SERIES_BLOCK as usize, 0.0);
        let mut rng = stream(streams.0, streams.1, purpose, b);
        for x in self.values.iter_mut() {
            *x = StandardNormal.sample(&mut rng);
        }
        self.block = Some(b);
        self.k = k;
    }
}

/// All streams belonging to one replicate.
#[derive(Debug, Clone)]
pub struct ReplicateStreams {
    pub seed: u64,
    pub replicate: u64,
    u_cache: BlockCache,
    z_cache: BlockCache,
}

impl ReplicateStreams {
    pub fn new(seed: u64, replicate: u64) -> Self {
        Self {
            seed,
            replicate,
            u_cache: BlockCache::default(),
            z_cache: BlockCache::default(),
        }
    }

    pub fn rng(&self, purpose: Purpose, index: u64) -> Xoshiro256PlusPlus {
        stream(self.seed, self.replicate, purpose, index)
    }

    pub fn fill_normals(&self, purpose: Purpose, index: u64, out: &mut [f64]) {
        let mut rng = self.rng(purpose, index);
        for x in out.iter_mut() {
            *x = StandardNormal.sample(&mut rng);
        }
    }
}

impl SeriesSource for ReplicateStreams {
    fn series(&mut self, r: u64, u: &mut [f64], z: &mut [f64]) {
        let key = (self.seed, self.replicate);
        self.u_cache.fetch(key, Purpose::SeriesU, r, u);
        self.z_cache.fetch(key, Purpose::SeriesZ, r, z);
    }

    fn series_z(&mut self, r: u64, z: &mut [f64]) {
        let key = (self.seed, self.replicate);
        self.z_cache.fetch(key, Purpose::SeriesZ, r, z);
    }

    fn tail(&mut self, out: &mut [f64]) {
        self.fill_normals(Purpose::Tail, 0, out);
    }

    fn visit_series(&mut self, k: usize, r_lo: u64, r_hi: u64, f: &mut SeriesVisitor) {
        let key = (self.seed, self.replicate);
        let mut r = r_lo.max(1);
        while r <= r_hi {
            let b = (r - 1) / SERIES_BLOCK;
            let last = ((b + 1) * SERIES_BLOCK).min(r_hi);
            self.u_cache.ensure(key, Purpose::SeriesU, b, k);
            self.z_cache.ensure(key, Purpose::SeriesZ, b, k);
            let lo = ((r - 1) % SERIES_BLOCK) as usize * k;
            let hi = ((last - 1) % SERIES_BLOCK + 1) as usize * k;
            f(r, &self.u_cache.values[lo..hi], &self.z_cache.values[lo..hi]);
            r = last + 1;
        }
    }
}
