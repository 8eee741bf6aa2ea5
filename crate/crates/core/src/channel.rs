//! Seeded generation of bits, Rayleigh channels and AWGN.
//!
//! Every random draw comes from a ChaCha stream keyed by
//! `(run_seed, frame_index, stream, attempt)`, so a frame's realization does
//! not depend on which worker produced it or in what order.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::modem::BitFrame;
use crate::numerics::ComplexMatrix;
use crate::{Error, Result};

/// Average energy of a transmitted constellation symbol.
pub const SYMBOL_ENERGY: f64 = 1.0;

/// Independent random streams used per frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Bits = 0,
    Channel = 1,
    Noise = 2,
}

/// Identifies the randomness of one frame of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedPath {
    pub run_seed: u64,
    pub frame_index: u64,
}

impl SeedPath {
    pub fn new(run_seed: u64, frame_index: u64) -> Self {
        Self {
            run_seed,
            frame_index,
        }
    }

    /// Generator for `stream`; `attempt` separates channel redraws.
    pub fn rng(&self, stream: Stream, attempt: u32) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        seed[..8].copy_from_slice(&self.run_seed.to_le_bytes());
        seed[8..16].copy_from_slice(&self.frame_index.to_le_bytes());
        seed[16..20].copy_from_slice(&(stream as u32).to_le_bytes());
        seed[20..24].copy_from_slice(&attempt.to_le_bytes());
        seed[24..].copy_from_slice(b"sekbest\0");
        ChaCha8Rng::from_seed(seed)
    }
}

/// How the SNR axis maps to a noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrConvention {
    /// Average receive SNR per antenna: `E||Hx||^2 / E||n||^2`, i.e.
    /// `sigma2 = N_T Es / snr`.
    #[default]
    PerReceiveAntenna,
    /// SNR per transmitted stream: `sigma2 = Es / snr`.
    PerStream,
}

/// Complex noise variance per receive antenna for a given SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub snr_db: f64,
    pub sigma2: f64,
}

impl NoiseModel {
    /// `snr_db = +inf` gives the noise-free channel.
    pub fn new(snr_db: f64, n_t: usize, convention: SnrConvention) -> Result<Self> {
        if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
            return Err(Error::Config(format!("invalid SNR {snr_db} dB")));
        }
        let signal = match convention {
            SnrConvention::PerReceiveAntenna => n_t as f64 * SYMBOL_ENERGY,
            SnrConvention::PerStream => SYMBOL_ENERGY,
        };
        let sigma2 = signal / 10f64.powf(snr_db / 10.0);
        if !sigma2.is_finite() {
            return Err(Error::InvalidNoise(sigma2));
        }
        Ok(Self { snr_db, sigma2 })
    }

    pub fn is_noise_free(&self) -> bool {
        self.sigma2 == 0.0
    }
}

/// Uniform random bits.
pub fn draw_bits<R: Rng + ?Sized>(len: usize, rng: &mut R) -> BitFrame {
    BitFrame((0..len).map(|_| rng.random_range(0..2u8)).collect())
}

/// One `CN(0, variance)` sample.
pub fn complex_gaussian<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// `N_R x N_T` matrix of i.i.d. `CN(0, 1)` gains.
pub fn draw_channel<R: Rng + ?Sized>(n_t: usize, n_r: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if n_t == 0 || n_r == 0 {
        return Err(Error::Dimension(format!("{n_r}x{n_t} channel")));
    }
    let data = (0..n_t * n_r).map(|_| complex_gaussian(1.0, rng)).collect();
    ComplexMatrix::new(n_r, n_t, data)
}

/// A channel together with the seed path that produced it.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h: ComplexMatrix,
    pub seed_path: SeedPath,
    pub attempt: u32,
}

impl ChannelRealization {
    pub fn draw(n_t: usize, n_r: usize, seed_path: SeedPath, attempt: u32) -> Result<Self> {
        let mut rng = seed_path.rng(Stream::Channel, attempt);
        Ok(Self {
            h: draw_channel(n_t, n_r, &mut rng)?,
            seed_path,
            attempt,
        })
    }
}

/// `y = H x + n` with `n ~ CN(0, sigma2 I)`.
pub fn apply_channel<R: Rng + ?Sized>(
    h: &ComplexMatrix,
    x: &[Complex64],
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let mut y = h.mul_vec(x)?;
    if !noise.is_noise_free() {
        for v in &mut y {
            *v += complex_gaussian(noise.sigma2, rng);
        }
    }
    Ok(y)
}
