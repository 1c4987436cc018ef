//! The primary receiver's measurement path, as seen by the secondary
//! transmitter: one scalar interference reading per feedback cycle.
//!
//! Learners only get the [`Feedback`] trait. The channel behind a
//! [`FeedbackOracle`] is reachable from simulation code (metrics, traces)
//! but never through the trait.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::ChannelProcess;
use crate::error::{invalid, Result};
use crate::matcore::{vec_norm_sqr, ComplexMatrix, ComplexVector};
use crate::scalar::{db, from_db, Real};

/// Energy measurement the primary receiver applies over one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum MeasurementModel {
    /// Mean of per-slot powers, `(1/N) Σ ‖y(t)‖²`.
    #[default]
    Q1,
    /// Power of the slot mean, `‖(1/N) Σ y(t)‖²`.
    Q2,
}

impl MeasurementModel {
    pub fn measure<T: Real>(self, y: &[ComplexVector<T>]) -> Result<T> {
        match self {
            MeasurementModel::Q1 => measure_q1(y),
            MeasurementModel::Q2 => measure_q2(y),
        }
    }
}

/// `‖H x‖²`.
pub fn interference_power<T: Real>(h: &ComplexMatrix<T>, x: &[Complex<T>]) -> Result<T> {
    Ok(vec_norm_sqr(&h.mul_vec(x)?))
}

pub fn measure_q1<T: Real>(y: &[ComplexVector<T>]) -> Result<T> {
    if y.is_empty() {
        return invalid("measurement needs at least one slot");
    }
    let total: T = y.iter().map(|v| vec_norm_sqr(v)).sum();
    Ok(total / T::from_usize_lossy(y.len()))
}

pub fn measure_q2<T: Real>(y: &[ComplexVector<T>]) -> Result<T> {
    Ok(vec_norm_sqr(&slot_mean(y)?))
}

/// Element-wise mean of equal-length vectors.
pub fn slot_mean<T: Real>(y: &[ComplexVector<T>]) -> Result<ComplexVector<T>> {
    let first = y.first().ok_or_else(|| crate::Error::InvalidArgument("empty slot list".into()))?;
    if y.iter().any(|v| v.len() != first.len()) {
        return invalid("slot vectors differ in length");
    }
    let n = T::from_usize_lossy(y.len());
    Ok((0..first.len())
        .map(|i| y.iter().map(|v| v[i]).sum::<Complex<T>>() / n)
        .collect())
}

/// Uniform `bits`-bit quantiser of the reading in the dB domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackQuantizer<T> {
    pub bits: u32,
    pub min_db: T,
    pub max_db: T,
}

impl<T: Real> FeedbackQuantizer<T> {
    pub fn apply(&self, value: T) -> T {
        let levels = (1u64 << self.bits.min(63)) - 1;
        let x = db(value).max(self.min_db).min(self.max_db);
        let span = self.max_db - self.min_db;
        if levels == 0 || span <= T::zero() {
            return from_db(self.min_db);
        }
        let steps = T::from_u64(levels).expect("level count representable");
        let k = ((x - self.min_db) / span * steps).round();
        from_db(self.min_db + k / steps * span)
    }
}

/// Scalar feedback one learning transmission earns.
pub trait Feedback<T: Real> {
    /// Transmit antenna count.
    fn n_t(&self) -> usize;

    /// Symbol slots per feedback cycle.
    fn slots_per_cycle(&self) -> usize;

    /// Transmits one cycle and returns the primary's measurement of it.
    fn query(&mut self, transmit_slots: &[ComplexVector<T>]) -> Result<T>;

    /// One cycle of the constant learning signal `x`.
    fn probe(&mut self, x: &[Complex<T>]) -> Result<T> {
        let slots = vec![x.to_vec(); self.slots_per_cycle()];
        self.query(&slots)
    }

    fn query_count(&self) -> usize;

    /// Time at which the next cycle starts.
    fn clock(&self) -> T;
}

/// Parameters of the simulated measurement path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSetup<T> {
    /// Variance of each complex noise entry (split equally between I and Q).
    pub noise_variance: T,
    pub t_fb: T,
    pub t_s: T,
    pub model: MeasurementModel,
    pub quantizer: Option<FeedbackQuantizer<T>>,
    pub noise_seed: u64,
}

impl<T: Real> OracleSetup<T> {
    /// Noiseless Q1 feedback with the LTE-like timing `T_FB = 1 ms`, `T_s = 66.7 µs`.
    pub fn lte_noiseless() -> Self {
        Self {
            noise_variance: T::zero(),
            t_fb: T::lit(1e-3),
            t_s: T::lit(66.7e-6),
            model: MeasurementModel::Q1,
            quantizer: None,
            noise_seed: 0,
        }
    }

    /// `N = ⌈T_FB / T_s⌉`.
    pub fn slots_per_cycle(&self) -> Result<usize> {
        if !(self.t_fb > T::zero() && self.t_s > T::zero()) {
            return invalid("feedback timing must be positive");
        }
        (self.t_fb / self.t_s)
            .ceil()
            .to_usize()
            .filter(|&n| n >= 1)
            .ok_or_else(|| crate::Error::InvalidArgument("slot count out of range".into()))
    }
}

#[derive(Debug, Clone)]
pub struct FeedbackOracle<T> {
    channel: ChannelProcess<T>,
    setup: OracleSetup<T>,
    slots: usize,
    clock: T,
    query_count: usize,
    rng: ChaCha8Rng,
}

impl<T: Real> FeedbackOracle<T> {
    pub fn new(channel: ChannelProcess<T>, setup: OracleSetup<T>) -> Result<Self> {
        if !(setup.noise_variance >= T::zero()) {
            return invalid("noise variance must be >= 0");
        }
        let slots = setup.slots_per_cycle()?;
        Ok(Self {
            channel,
            rng: ChaCha8Rng::seed_from_u64(setup.noise_seed),
            setup,
            slots,
            clock: T::zero(),
            query_count: 0,
        })
    }

    pub fn setup(&self) -> &OracleSetup<T> {
        &self.setup
    }

    pub fn channel(&self) -> &ChannelProcess<T> {
        &self.channel
    }

    /// Interference channel during the current cycle (held constant within it).
    pub fn current_channel(&self) -> ComplexMatrix<T> {
        self.channel.sample_matrix(self.clock)
    }

    /// Lets one cycle pass without a learning transmission.
    pub fn advance_idle(&mut self) {
        self.clock += self.setup.t_fb;
    }

    fn noise(&mut self, n: usize) -> ComplexVector<T> {
        let sigma = (self.setup.noise_variance.to_f64_lossy() / 2.0).sqrt();
        (0..n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut self.rng);
                let im: f64 = StandardNormal.sample(&mut self.rng);
                Complex::new(T::lit(re * sigma), T::lit(im * sigma))
            })
            .collect()
    }
}

impl<T: Real> Feedback<T> for FeedbackOracle<T> {
    fn n_t(&self) -> usize {
        self.channel.cols()
    }

    fn slots_per_cycle(&self) -> usize {
        self.slots
    }

    fn query(&mut self, transmit_slots: &[ComplexVector<T>]) -> Result<T> {
        if transmit_slots.len() != self.slots {
            return invalid(format!(
                "a feedback cycle has {} slots, got {}",
                self.slots,
                transmit_slots.len()
            ));
        }
        let h = self.current_channel();
        let noisy = self.setup.noise_variance > T::zero();
        let mut received = Vec::with_capacity(self.slots);
        for x in transmit_slots {
            let mut y = h.mul_vec(x)?;
            if noisy {
                for (yi, ni) in y.iter_mut().zip(self.noise(h.rows())) {
                    *yi += ni;
                }
            }
            received.push(y);
        }
        let mut value = self.setup.model.measure(&received)?;
        if let Some(q) = &self.setup.quantizer {
            value = q.apply(value);
        }
        self.clock += self.setup.t_fb;
        self.query_count += 1;
        Ok(value)
    }

    fn query_count(&self) -> usize {
        self.query_count
    }

    fn clock(&self) -> T {
        self.clock
    }
}
