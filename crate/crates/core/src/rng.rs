//! Reproducible random streams.
//!
//! Everything random in this crate flows through [`RngStream`], a thin
//! wrapper over the counter-based ChaCha12 generator. A stream is addressed
//! by the pair `(seed, stream id)`, so independent streams never share state
//! and experiments replay bit-for-bit.
//!
//! Stream map used by the chain runners:
//!
//! * id `0` - root stream for one-off consumers;
//! * id `2c + 1` - initialization draw of chain `c`;
//! * id `2c + 2` - transition loop of chain `c` (lazy coins, oracle draws and
//!   accept uniforms are consumed sequentially within the step).

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha12Rng,
}

impl RngStream {
    pub fn root(seed: u64) -> Self {
        Self::substream(seed, 0)
    }

    pub fn substream(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha12Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self { inner }
    }

    pub fn chain_init(seed: u64, chain: u64) -> Self {
        Self::substream(seed, 2 * chain + 1)
    }

    pub fn chain_steps(seed: u64, chain: u64) -> Self {
        Self::substream(seed, 2 * chain + 2)
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        rand::Rng::gen::<f64>(&mut self.inner)
    }

    /// Standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        rand::Rng::sample(&mut self.inner, rand_distr::StandardNormal)
    }

    /// Unit-rate exponential draw.
    pub fn exponential(&mut self) -> f64 {
        rand::Rng::sample(&mut self.inner, rand_distr::Exp1)
    }

    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.standard_normal();
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}
