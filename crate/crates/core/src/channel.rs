//! Time-varying flat-fading MIMO channels.
//!
//! Every matrix entry is an independent Clarke-model Rayleigh process built
//! as a sum of `P` sinusoids,
//!
//! ```text
//! h(t) = P^{-1/2} Σ_p exp(i (2π F_d cos α_p · t + ψ_p))
//! ```
//!
//! with arrival angles `α_p` and phases `ψ_p` drawn once per entry from a
//! seed stream. Sampling is a pure function of `(seed, t)`.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::matcore::{null_space, spectral_norm, ComplexMatrix};
use crate::scalar::{db, mix_seed, Real};

/// Default number of multipath components per entry.
pub const DEFAULT_PATHS: usize = 40;

/// First positive zero of `J0`.
pub const J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClarkeConfig<T> {
    pub doppler_hz: T,
    pub num_paths: usize,
    pub seed: u64,
}

impl<T: Real> ClarkeConfig<T> {
    pub fn new(doppler_hz: T, num_paths: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            doppler_hz,
            num_paths,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.doppler_hz >= T::zero()) || !self.doppler_hz.is_finite() {
            return invalid(format!("doppler must be finite and >= 0, got {}", self.doppler_hz));
        }
        if self.num_paths == 0 {
            return invalid("need at least one multipath component");
        }
        Ok(())
    }
}

/// Sinusoid bank of one SISO link.
#[derive(Debug, Clone)]
pub struct SisoFader<T> {
    omega: Vec<T>,
    phase: Vec<T>,
    gain: T,
}

impl<T: Real> SisoFader<T> {
    pub fn new(cfg: &ClarkeConfig<T>) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let two_pi = std::f64::consts::TAU;
        let fd = cfg.doppler_hz.to_f64_lossy();
        let mut omega = Vec::with_capacity(cfg.num_paths);
        let mut phase = Vec::with_capacity(cfg.num_paths);
        for _ in 0..cfg.num_paths {
            let alpha: f64 = rng.random_range(0.0..two_pi);
            let psi: f64 = rng.random_range(0.0..two_pi);
            omega.push(T::lit(two_pi * fd * alpha.cos()));
            phase.push(T::lit(psi));
        }
        Self {
            omega,
            phase,
            gain: T::one() / T::from_usize_lossy(cfg.num_paths).sqrt(),
        }
    }

    pub fn sample(&self, t: T) -> Complex<T> {
        let sum: Complex<T> = self
            .omega
            .iter()
            .zip(&self.phase)
            .map(|(&w, &p)| Complex::from_polar(T::one(), w * t + p))
            .sum();
        sum * self.gain
    }
}

pub fn sample_siso<T: Real>(cfg: &ClarkeConfig<T>, t: T) -> Complex<T> {
    SisoFader::new(cfg).sample(t)
}

/// `rows × cols` matrix of independent Clarke processes.
#[derive(Debug, Clone)]
pub struct ChannelProcess<T> {
    rows: usize,
    cols: usize,
    doppler_hz: T,
    num_paths: usize,
    seed: u64,
    sample_period: T,
    faders: Vec<SisoFader<T>>,
}

impl<T: Real> ChannelProcess<T> {
    pub fn new(
        rows: usize,
        cols: usize,
        doppler_hz: T,
        num_paths: usize,
        seed: u64,
        sample_period: T,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return invalid("channel dimensions must be positive");
        }
        if !(sample_period > T::zero()) {
            return invalid("sample period must be positive");
        }
        ClarkeConfig::new(doppler_hz, num_paths, seed)?;
        let mut faders = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                faders.push(SisoFader::new(&ClarkeConfig {
                    doppler_hz,
                    num_paths,
                    seed: entry_seed(seed, i, j),
                }));
            }
        }
        Ok(Self {
            rows,
            cols,
            doppler_hz,
            num_paths,
            seed,
            sample_period,
            faders,
        })
    }

    /// Same geometry and Doppler, different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self::new(
            self.rows,
            self.cols,
            self.doppler_hz,
            self.num_paths,
            seed,
            self.sample_period,
        )
        .expect("parameters already validated")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn doppler_hz(&self) -> T {
        self.doppler_hz
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample_period(&self) -> T {
        self.sample_period
    }

    pub fn entry_config(&self, i: usize, j: usize) -> ClarkeConfig<T> {
        ClarkeConfig {
            doppler_hz: self.doppler_hz,
            num_paths: self.num_paths,
            seed: entry_seed(self.seed, i, j),
        }
    }

    pub fn sample_matrix(&self, t: T) -> ComplexMatrix<T> {
        ComplexMatrix::from_fn(self.rows, self.cols, |i, j| {
            self.faders[i * self.cols + j].sample(t)
        })
    }
}

fn entry_seed(seed: u64, i: usize, j: usize) -> u64 {
    mix_seed(seed, ((i as u64) << 32) | (j as u64 + 1))
}

/// Ensemble estimate of `E{h(t) h(t+Δt)*} / E{|h(t)|²}` over `num_samples`
/// independent `(seed, t)` draws derived from `cfg.seed`.
pub fn autocorrelation<T: Real>(cfg: &ClarkeConfig<T>, delta_t: T, num_samples: usize) -> Result<Complex<T>> {
    cfg.validate()?;
    if num_samples == 0 {
        return invalid("need at least one sample");
    }
    let mut anchors = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 0xA5));
    let mut num = Complex::new(T::zero(), T::zero());
    let mut den = T::zero();
    for k in 0..num_samples {
        let fader = SisoFader::new(&ClarkeConfig {
            seed: mix_seed(cfg.seed, k as u64 + 1),
            ..*cfg
        });
        let t = T::lit(anchors.random_range(0.0..100.0));
        let h0 = fader.sample(t);
        let h1 = fader.sample(t + delta_t);
        num += h0 * h1.conj();
        den += h0.norm_sqr();
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoherenceMethod {
    /// `9 / (16π F_d)`, the textbook 50% rule of thumb.
    Formula,
    /// Smallest `Δt > 0` with `J0(2π F_d Δt) = x/100`.
    Numeric,
}

pub fn coherence_time<T: Real>(doppler_hz: T, x_percent: T, method: CoherenceMethod) -> Result<T> {
    if !(doppler_hz > T::zero()) {
        return invalid("coherence time needs a positive Doppler frequency");
    }
    if !(x_percent > T::zero() && x_percent < T::lit(100.0)) {
        return invalid(format!("correlation level must be in (0, 100), got {x_percent}"));
    }
    let two_pi_fd = T::lit(2.0) * T::PI() * doppler_hz;
    match method {
        CoherenceMethod::Formula => {
            if x_percent != T::lit(50.0) {
                return invalid("the closed-form coherence time exists only for 50%");
            }
            Ok(T::lit(9.0) / (T::lit(16.0) * T::PI() * doppler_hz))
        }
        CoherenceMethod::Numeric => {
            let target = x_percent.to_f64_lossy() / 100.0;
            // J0 decreases monotonically from 1 to 0 on [0, j01]
            let (mut lo, mut hi) = (0.0_f64, J0_FIRST_ZERO);
            while hi - lo > 1e-14 * hi.max(1e-300) {
                let mid = 0.5 * (lo + hi);
                if bessel_j0(mid) > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if mid == lo && mid == hi {
                    break;
                }
            }
            Ok(T::lit(0.5 * (lo + hi)) / two_pi_fd)
        }
    }
}

/// Bessel function of the first kind, order zero. Power series for
/// `|x| ≤ 12`, Hankel asymptotic expansion beyond.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 12.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        let mut k = 1.0f64;
        while term.abs() > 1e-17 * sum.abs().max(1e-300) || k < 4.0 {
            term *= -q / (k * k);
            sum += term;
            k += 1.0;
            if k > 200.0 {
                break;
            }
        }
        sum
    } else {
        // P = Σ (-1)^k a_{2k} u^{2k}, Q = Σ (-1)^{k+1} a_{2k+1} u^{2k+1},
        // u = 1/(8x), a_j = Π_{i≤j} (2i-1)² / j!
        let u = 1.0 / (8.0 * x);
        let (mut p, mut q) = (1.0, 0.0);
        let mut a = 1.0f64;
        let mut prev = f64::INFINITY;
        for j in 1..40 {
            let odd = (2 * j - 1) as f64;
            a *= odd * odd * u / j as f64;
            if a.abs() >= prev || a.abs() < 1e-18 {
                break;
            }
            prev = a.abs();
            let sign = if (j / 2) % 2 == 0 { -1.0 } else { 1.0 };
            if j % 2 == 0 {
                p -= sign * a;
            } else {
                q += sign * a;
            }
        }
        let chi = x - std::f64::consts::FRAC_PI_4;
        (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}

/// Null-space drift: `10 log10 E{ ‖H(t+Δt) N(H(t))‖ / ‖H(t+Δt)‖ }`, with the
/// expectation over `num_draws` independent channel realisations (fresh
/// seeds derived from `ch`) and random anchor times. Norms are spectral.
pub fn dmi<T: Real>(ch: &ChannelProcess<T>, delta_t: T, num_draws: usize) -> Result<T> {
    if ch.cols() <= ch.rows() {
        return invalid("drift metric needs more transmit than receive antennas");
    }
    if num_draws == 0 {
        return invalid("need at least one draw");
    }
    let tol = T::epsilon().sqrt();
    let mut anchors = ChaCha8Rng::seed_from_u64(mix_seed(ch.seed(), 0xD41));
    let mut acc = T::zero();
    for k in 0..num_draws {
        let draw = ch.with_seed(mix_seed(ch.seed(), k as u64 + 1));
        let t = T::lit(anchors.random_range(0.0..100.0));
        let h_now = draw.sample_matrix(t);
        let h_later = draw.sample_matrix(t + delta_t);
        let kernel = null_space(&h_now, tol)?;
        acc += spectral_norm(&h_later.matmul(&kernel)?) / spectral_norm(&h_later);
    }
    Ok(db(acc / T::from_usize_lossy(num_draws)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_doppler_is_static() {
        let cfg = ClarkeConfig::new(0.0, 40, 9).unwrap();
        let h0 = sample_siso(&cfg, 0.0);
        for t in [0.1, 1.0, 37.5] {
            assert_eq!(sample_siso(&cfg, t), h0);
        }
        assert!((autocorrelation(&cfg, 0.3, 50).unwrap() - Complex::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn unit_average_power() {
        let mut acc = 0.0;
        let mut n = 0;
        for seed in 0..100u64 {
            let f = SisoFader::new(&ClarkeConfig::new(10.0, 40, seed).unwrap());
            for k in 0..1000 {
                acc += f.sample(k as f64 * 0.0137).norm_sqr();
                n += 1;
            }
        }
        let mean = acc / n as f64;
        assert!((0.95..=1.05).contains(&mean), "{mean}");
    }

    #[test]
    fn autocorrelation_zero_lag_is_one() {
        let cfg = ClarkeConfig::new(6.48, 40, 3).unwrap();
        let r = autocorrelation(&cfg, 0.0, 500).unwrap();
        assert!((r - Complex::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn autocorrelation_follows_bessel() {
        let fd = 5.0;
        let cfg = ClarkeConfig::new(fd, 40, 11).unwrap();
        for k in 1..=6 {
            let dt = 0.05 * k as f64 / fd;
            let r = autocorrelation(&cfg, dt, 4000).unwrap().norm();
            let want = bessel_j0(2.0 * std::f64::consts::PI * fd * dt).abs();
            assert!((r - want).abs() < 0.05, "dt*fd={} got {r} want {want}", dt * fd);
        }
    }

    #[test]
    fn autocorrelation_at_half_coherence() {
        let fd = 6.48;
        let dt = coherence_time(fd, 50.0, CoherenceMethod::Numeric).unwrap();
        let cfg = ClarkeConfig::new(fd, 40, 21).unwrap();
        let r = autocorrelation(&cfg, dt, 4000).unwrap().norm();
        assert!((0.45..=0.55).contains(&r), "{r}");
    }

    #[test]
    fn bessel_reference_values() {
        // Abramowitz & Stegun table 9.1
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j0(2.0) - 0.223_890_779_141_235_7).abs() < 1e-14);
        assert!((bessel_j0(5.0) + 0.177_596_771_314_338_3).abs() < 1e-12);
        assert!(bessel_j0(J0_FIRST_ZERO).abs() < 1e-14);
        assert!((bessel_j0(15.0) + 0.014_224_472_826_780_6).abs() < 1e-12);
        assert!((bessel_j0(50.0) - 0.055_812_327_669_252_09).abs() < 1e-12);
    }

    #[test]
    fn coherence_formula_value() {
        let t = coherence_time(6.48, 50.0, CoherenceMethod::Formula).unwrap();
        let want = 9.0 / (16.0 * std::f64::consts::PI * 6.48);
        assert_eq!(t, want);
        assert!((t - 0.02763).abs() < 5e-6);
        assert!(coherence_time(6.48, 90.0, CoherenceMethod::Formula).is_err());
        assert!(coherence_time(0.0, 50.0, CoherenceMethod::Numeric).is_err());
        assert!(coherence_time(1.0, 100.0, CoherenceMethod::Numeric).is_err());
    }

    #[test]
    fn coherence_numeric_inverts_bessel() {
        let t = coherence_time(1.0, 50.0, CoherenceMethod::Numeric).unwrap();
        assert!((bessel_j0(2.0 * std::f64::consts::PI * t) - 0.5).abs() < 1e-6);
        let mut prev = f64::INFINITY;
        for eps in [1.0, 0.1, 0.01, 0.001] {
            let t = coherence_time(3.0, 100.0 - eps, CoherenceMethod::Numeric).unwrap();
            assert!(t < prev);
            prev = t;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn matrix_sampling_is_deterministic_and_shaped() {
        let ch = ChannelProcess::new(1, 3, 6.48, 40, 77, 66.7e-6).unwrap();
        let a = ch.sample_matrix(0.25);
        let b = ch.clone().sample_matrix(0.25);
        assert_eq!(a, b);
        assert_eq!(a.shape(), (1, 3));
        let other = ch.with_seed(78).sample_matrix(0.25);
        assert_ne!(a, other);
    }

    #[test]
    fn entries_are_uncorrelated() {
        // sample covariance of vec(H) over independent realisations
        let n = 10_000;
        let base = ChannelProcess::new(2, 2, 3.0, 40, 5, 1e-3).unwrap();
        let mut cov = [[Complex::new(0.0, 0.0); 4]; 4];
        for k in 0..n {
            let h = base.with_seed(mix_seed(5, k)).sample_matrix(k as f64 * 0.01);
            let v = h.data();
            for i in 0..4 {
                for j in 0..4 {
                    cov[i][j] += v[i] * v[j].conj();
                }
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                let got = cov[i][j] / n as f64;
                assert!((got - want).norm() < 0.1, "cov[{i}][{j}] = {got}");
            }
        }
    }

    #[test]
    fn dmi_zero_lag_is_numerical_floor() {
        let ch = ChannelProcess::new(1, 3, 6.48, 40, 1, 66.7e-6).unwrap();
        assert!(dmi(&ch, 0.0, 50).unwrap() < -120.0);
    }

    #[test]
    fn dmi_decorrelated_limit() {
        // a lag of 1000 s makes the two samples effectively independent;
        // for independent draws E{sqrt(Beta(2,1))} = 0.8, i.e. -0.97 dB
        let ch = ChannelProcess::new(1, 3, 6.48, 40, 2, 66.7e-6).unwrap();
        let d = dmi(&ch, 1000.0, 400).unwrap();
        assert!((-6.0..=0.0).contains(&d), "{d}");
        assert!((d - 10.0 * 0.8f64.log10()).abs() < 0.5, "{d}");
    }

    #[test]
    fn dmi_rejects_square_channel() {
        let ch = ChannelProcess::new(2, 2, 1.0, 40, 1, 1e-3).unwrap();
        assert!(dmi(&ch, 0.01, 10).is_err());
    }

    #[test]
    fn rejects_bad_config() {
        assert!(ClarkeConfig::new(-1.0, 40, 0).is_err());
        assert!(ClarkeConfig::new(1.0, 0, 0).is_err());
        assert!(ChannelProcess::new(1, 2, 1.0, 40, 0, 0.0).is_err());
    }
}
