//! Data superimposed on the learning signal.
//!
//! During a learning cycle the transmitter sends `(1 + c(t))·r₁` instead of
//! `r₁`, with `c(t)` drawn from a small alphabet. The alphabet is chosen so
//! the primary's energy measurement does not change (on average for Q1,
//! per frame for Q2 with balanced sequences), while the secondary receiver
//! recovers `c(t)` by comparing each slot with the frame average.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::feedback::{slot_mean, MeasurementModel};
use crate::matcore::{vec_norm_sqr, ComplexMatrix, ComplexVector};
use crate::scalar::{db, Real};

const CONSTRAINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SuperpositionAlphabet<T> {
    symbols: Vec<Complex<T>>,
    priors: Vec<T>,
    model: MeasurementModel,
}

impl<T: Real> SuperpositionAlphabet<T> {
    pub fn new(symbols: Vec<Complex<T>>, priors: Vec<T>, model: MeasurementModel) -> Result<Self> {
        if symbols.is_empty() || symbols.len() != priors.len() {
            return invalid("need one prior per symbol and at least one symbol");
        }
        if priors.iter().any(|&p| !(p > T::zero())) {
            return invalid("priors must be positive");
        }
        let total: T = priors.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(1e-9) {
            return invalid(format!("priors sum to {total}, not 1"));
        }
        Ok(Self {
            symbols,
            priors,
            model,
        })
    }

    pub fn uniform(symbols: Vec<Complex<T>>, model: MeasurementModel) -> Result<Self> {
        let p = T::one() / T::from_usize_lossy(symbols.len().max(1));
        let priors = vec![p; symbols.len()];
        Self::new(symbols, priors, model)
    }

    pub fn symbols(&self) -> &[Complex<T>] {
        &self.symbols
    }

    pub fn priors(&self) -> &[T] {
        &self.priors
    }

    pub fn model(&self) -> MeasurementModel {
        self.model
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// `E{c}`.
    pub fn mean(&self) -> Complex<T> {
        self.symbols
            .iter()
            .zip(&self.priors)
            .map(|(&c, &p)| c * p)
            .sum()
    }

    /// `C = 1 + E{c}`, the receiver's average gain.
    pub fn gain(&self) -> Complex<T> {
        self.mean() + T::one()
    }

    /// `E{|1 + c|²}`.
    pub fn mean_shifted_power(&self) -> T {
        self.symbols
            .iter()
            .zip(&self.priors)
            .map(|(&c, &p)| (c + T::one()).norm_sqr() * p)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintViolation<T> {
    pub constraint: &'static str,
    pub residual: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphabetReport<T> {
    pub violations: Vec<ConstraintViolation<T>>,
}

impl<T> AlphabetReport<T> {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the constraints of the alphabet's measurement model.
///
/// Q1 needs `E{|1+c|²} = 1` and `E{c} ≠ −1`; Q2 needs `|1 + E{c}|² = 1`.
/// Residuals are `value − target`, or `|C|` for the nonzero-gain check.
pub fn validate_alphabet<T: Real>(a: &SuperpositionAlphabet<T>) -> AlphabetReport<T> {
    let tol = T::lit(CONSTRAINT_TOL);
    let mut violations = Vec::new();
    match a.model {
        MeasurementModel::Q1 => {
            let r = a.mean_shifted_power() - T::one();
            if r.abs() > tol {
                violations.push(ConstraintViolation {
                    constraint: "E{|1+c|^2} = 1",
                    residual: r,
                });
            }
            let g = a.gain().norm();
            if g <= tol {
                violations.push(ConstraintViolation {
                    constraint: "E{c} != -1",
                    residual: g,
                });
            }
        }
        MeasurementModel::Q2 => {
            let r = a.gain().norm_sqr() - T::one();
            if r.abs() > tol {
                violations.push(ConstraintViolation {
                    constraint: "|1+E{c}|^2 = 1",
                    residual: r,
                });
            }
        }
    }
    AlphabetReport { violations }
}

/// `{e^{iθ₀}, e^{−iθ₀}}` with uniform priors under Q1; `C = 1 + cos θ₀`.
pub fn binary_alphabet<T: Real>(theta0: T) -> Result<SuperpositionAlphabet<T>> {
    if !(theta0 > T::zero() && theta0 < T::PI()) {
        return invalid(format!("theta0 must be in (0, π), got {theta0}"));
    }
    if T::one() + theta0.cos() <= T::lit(1e-9) {
        return invalid("theta0 too close to π: the average gain vanishes");
    }
    SuperpositionAlphabet::uniform(
        vec![Complex::from_polar(T::one(), theta0), Complex::from_polar(T::one(), -theta0)],
        MeasurementModel::Q1,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperposedFrame<T> {
    pub r1: ComplexVector<T>,
    pub c_sequence: Vec<usize>,
    /// `(1 + c_{sequence[t]})·r₁` per slot.
    pub transmit_vectors: Vec<ComplexVector<T>>,
}

/// Builds one frame of `n_slots` transmissions.
pub fn superimpose<T: Real>(
    r1: &[Complex<T>],
    symbol_indices: &[usize],
    a: &SuperpositionAlphabet<T>,
    n_slots: usize,
) -> Result<SuperposedFrame<T>> {
    if symbol_indices.len() != n_slots {
        return invalid(format!(
            "frame needs {n_slots} symbols, got {}",
            symbol_indices.len()
        ));
    }
    let mut transmit_vectors = Vec::with_capacity(n_slots);
    for &i in symbol_indices {
        let c = a
            .symbols
            .get(i)
            .ok_or_else(|| Error::InvalidArgument(format!("symbol index {i} out of range")))?;
        let s = *c + T::one();
        transmit_vectors.push(r1.iter().map(|&x| x * s).collect());
    }
    Ok(SuperposedFrame {
        r1: r1.to_vec(),
        c_sequence: symbol_indices.to_vec(),
        transmit_vectors,
    })
}

/// `ȳ₂ = (1/N) Σ y₂(t)`.
pub fn receiver_average<T: Real>(y2: &[ComplexVector<T>]) -> Result<ComplexVector<T>> {
    slot_mean(y2)
}

/// Minimum-distance decision on `Δy₂(t) = y₂(t) − ȳ₂/C` against the
/// hypotheses `H_i = (c_i/C)·ȳ₂`; ties go to the lowest index.
pub fn decode_symbol<T: Real>(
    y2_t: &[Complex<T>],
    ybar: &[Complex<T>],
    a: &SuperpositionAlphabet<T>,
) -> Result<usize> {
    if y2_t.len() != ybar.len() {
        return invalid("received slot and average differ in length");
    }
    if vec_norm_sqr(ybar) == T::zero() {
        return Err(Error::DecodeFailure("frame average is zero".into()));
    }
    let gain = a.gain();
    if gain.norm() <= T::lit(CONSTRAINT_TOL) {
        return invalid("alphabet has zero average gain");
    }
    let base: ComplexVector<T> = ybar.iter().map(|&v| v / gain).collect();
    let delta: ComplexVector<T> = y2_t.iter().zip(&base).map(|(&y, &b)| y - b).collect();
    let mut best = 0;
    let mut best_d = T::infinity();
    for (i, &c) in a.symbols.iter().enumerate() {
        let d: T = delta
            .iter()
            .zip(&base)
            .map(|(&dy, &b)| (dy - b * c).norm_sqr())
            .sum();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    Ok(best)
}

/// Draws `n` vectors of i.i.d. `CN(0, σ²)` entries.
pub fn complex_noise<T: Real, R: Rng + ?Sized>(
    n: usize,
    len: usize,
    variance: T,
    rng: &mut R,
) -> Vec<ComplexVector<T>> {
    let sigma = (variance.to_f64_lossy() / 2.0).sqrt();
    (0..n)
        .map(|_| {
            (0..len)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    Complex::new(T::lit(re * sigma), T::lit(im * sigma))
                })
                .collect()
        })
        .collect()
}

/// `10 log10(Q(y₁)/Q(y₁⁰))`: the primary's reading with superposition over
/// the reading with the plain learning signal. Both frames see the same
/// noise realisation.
pub fn delta_y1_db<T: Real, R: Rng + ?Sized>(
    h12: &ComplexMatrix<T>,
    t: &ComplexMatrix<T>,
    frame: &SuperposedFrame<T>,
    noise_variance: T,
    model: MeasurementModel,
    rng: &mut R,
) -> Result<T> {
    let n = frame.transmit_vectors.len();
    let noise = if noise_variance > T::zero() {
        complex_noise(n, h12.rows(), noise_variance, rng)
    } else {
        vec![vec![Complex::new(T::zero(), T::zero()); h12.rows()]; n]
    };
    let plain = t.mul_vec(&frame.r1)?;
    let y0_clean = h12.mul_vec(&plain)?;
    let mut y = Vec::with_capacity(n);
    let mut y0 = Vec::with_capacity(n);
    for (x, nz) in frame.transmit_vectors.iter().zip(&noise) {
        let yt = h12.mul_vec(&t.mul_vec(x)?)?;
        y.push(yt.iter().zip(nz).map(|(&a, &b)| a + b).collect::<ComplexVector<T>>());
        y0.push(y0_clean.iter().zip(nz).map(|(&a, &b)| a + b).collect::<ComplexVector<T>>());
    }
    let q = model.measure(&y)?;
    let q0 = model.measure(&y0)?;
    Ok(db(q / q0))
}
