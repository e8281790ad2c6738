//! Counter-based random streams.
//!
//! A stream is ChaCha8 keyed by the run seed, with the 64-bit ChaCha stream
//! selector carrying the history identity. Every source history of every
//! timestep therefore owns an independent substream, and the numbers a
//! history sees never depend on how many draws another history consumed or
//! on which worker ran it. Secondaries (fission progeny, split daughters) of a
//! history are followed on the same worker in a fixed order and keep drawing
//! from their parent's stream.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::{Error, Result};

pub const MAX_BATCHES: usize = 1 << 12;

/// What a stream is used for; keeps e.g. combing draws disjoint from the
/// transport draws of the same bank slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    History = 0,
    Comb = 1,
    Source = 2,
}

/// 64-bit stream selector: `purpose:4 | step:16 | batch:12 | index:32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId(u64);

impl StreamId {
    pub fn new(purpose: StreamPurpose, step: u32, batch: u32, index: u32) -> Self {
        debug_assert!(step < 1 << 16);
        debug_assert!((batch as usize) < MAX_BATCHES);
        let id =
            ((purpose as u64) << 60) | ((step as u64 & 0xffff) << 44) | ((batch as u64 & 0xfff) << 32) | index as u64;
        Self(id)
    }

    pub fn raw(self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
    key: u64,
    id: StreamId,
}

impl RngStream {
    pub fn new(key: u64, id: StreamId) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(id.raw());
        Self { rng, key, id }
    }

    /// Stream positioned after `draws` raw 64-bit outputs.
    pub fn at(key: u64, id: StreamId, draws: u64) -> Self {
        let mut s = Self::new(key, id);
        s.rng.set_word_pos(2 * draws as u128);
        s
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    /// Raw 64-bit outputs consumed so far.
    pub fn draws(&self) -> u64 {
        (self.rng.get_word_pos() / 2) as u64
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        loop {
            let bits = self.rng.next_u64() >> 11;
            if bits != 0 {
                return bits as f64 * (1.0 / (1u64 << 53) as f64);
            }
        }
    }

    pub fn isotropic_mu(&mut self) -> f64 {
        mu_from_uniform(self.uniform())
    }

    pub fn flight_distance(&mut self, sigma_t: f64) -> Result<f64> {
        if !(sigma_t > 0.0) {
            return Err(Error::Parameter {
                name: "sigma_t",
                reason: alloc::format!("flight sampling needs sigma_t > 0, got {sigma_t}"),
            });
        }
        Ok(flight_distance_from_uniform(self.uniform(), sigma_t))
    }

    /// Optical depth to the next collision, `-ln(xi)`.
    pub fn optical_depth(&mut self) -> f64 {
        -libm::log(self.uniform())
    }

    pub fn multiplicity(&mut self, nu_bar: f64) -> u32 {
        multiplicity_from_uniform(nu_bar, self.uniform())
    }
}

/// Direction cosine of an isotropic emission in slab geometry.
#[inline]
pub fn mu_from_uniform(xi: f64) -> f64 {
    2.0 * xi - 1.0
}

#[inline]
pub fn flight_distance_from_uniform(xi: f64, sigma_t: f64) -> f64 {
    -libm::log(xi) / sigma_t
}

/// `floor(nu) + Bernoulli(nu - floor(nu))`, so the mean is exactly `nu`.
#[inline]
pub fn multiplicity_from_uniform(nu_bar: f64, xi: f64) -> u32 {
    let base = libm::floor(nu_bar);
    let frac = nu_bar - base;
    base as u32 + u32::from(xi < frac)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(index: u32) -> RngStream {
        RngStream::new(42, StreamId::new(StreamPurpose::History, 1, 0, index))
    }

    #[test]
    fn same_key_and_counter_repeat() {
        let mut a = stream(7);
        let mut b = stream(7);
        for _ in 0..100 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
        let mut c = RngStream::at(42, a.id(), a.draws());
        assert_eq!(a.uniform().to_bits(), c.uniform().to_bits());
    }

    #[test]
    fn histories_are_independent_of_neighbours() {
        // Draw counts of history 3 do not shift what history 4 sees.
        let mut h3 = stream(3);
        for _ in 0..17 {
            h3.uniform();
        }
        let first = stream(4).uniform();
        let mut h3 = stream(3);
        h3.uniform();
        assert_eq!(stream(4).uniform().to_bits(), first.to_bits());
        assert_ne!(stream(3).uniform().to_bits(), first.to_bits());
    }

    #[test]
    fn stream_ids_pack_disjoint_fields() {
        let a = StreamId::new(StreamPurpose::History, 1, 2, 3).raw();
        let b = StreamId::new(StreamPurpose::Comb, 1, 2, 3).raw();
        let c = StreamId::new(StreamPurpose::History, 2, 1, 3).raw();
        assert!(a != b && a != c && b != c);
        assert_eq!(a & 0xffff_ffff, 3);
    }

    #[test]
    fn uniform_mean_and_open_interval() {
        let mut s = stream(0);
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = s.uniform();
            assert!(u > 0.0 && u < 1.0);
            sum += u;
        }
        assert!((sum / n as f64 - 0.5).abs() < 0.002);
    }

    #[test]
    fn isotropic_mu_closed_forms() {
        assert_eq!(mu_from_uniform(0.5), 0.0);
        let below_one = 1.0 - f64::EPSILON;
        let mu = mu_from_uniform(below_one);
        assert!(mu < 1.0 && mu > 1.0 - 1e-15);
        let mut s = stream(1);
        let n = 1_000_000;
        let mean_abs: f64 = (0..n).map(|_| s.isotropic_mu().abs()).sum::<f64>() / n as f64;
        assert!((mean_abs - 0.5).abs() < 0.002);
    }

    #[test]
    fn flight_distance_closed_forms() {
        let xi = libm::exp(-1.0);
        assert!((flight_distance_from_uniform(xi, 1.0) - 1.0).abs() < 1e-15);
        assert!((flight_distance_from_uniform(xi, 2.0) - 0.5).abs() < 1e-15);
        let mut s = stream(2);
        assert!(s.flight_distance(0.0).is_err());
        assert!(s.flight_distance(-1.0).is_err());
        let n = 1_000_000;
        let mean: f64 = (0..n).map(|_| s.flight_distance(1.0).unwrap()).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.005);
    }

    #[test]
    fn multiplicity_sampler() {
        let mut s = stream(3);
        for _ in 0..1000 {
            assert_eq!(s.multiplicity(2.0), 2);
            assert_eq!(s.multiplicity(0.0), 0);
            let k = s.multiplicity(2.3);
            assert!(k == 2 || k == 3);
        }
        let n = 1_000_000;
        let mean = (0..n).map(|_| s.multiplicity(2.3) as f64).sum::<f64>() / n as f64;
        assert!((mean - 2.3).abs() < 0.003);
    }
}
