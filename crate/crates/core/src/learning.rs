//! Blind null-space learning.
//!
//! A sweep visits every index pair `(l, m)` once. For each pair the learner
//! transmits probes `x = W·R_{l,m}(θ, φ)e_l` and reads back only the scalar
//! interference, first searching φ at a fixed `θ = θ̃`, then θ at the found φ.
//! The chosen rotation is applied as `W ← W·R_{l,m}(θ̂, φ̂)`, which moves the
//! smaller-interference direction of the `(l, m)` plane into column `l`.
//! No channel access beyond [`Feedback`] is used here.

use std::cmp::Ordering;

use num_complex::Complex;

use crate::error::{invalid, Result};
use crate::feedback::Feedback;
use crate::matcore::{ComplexMatrix, ComplexVector, RotationParams};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SweepParams<T> {
    /// θ used while searching φ.
    pub theta_tilde: T,
    /// θ is searched over `[-theta_max, theta_max]`.
    pub theta_max: T,
    /// Search resolution as a fraction of the half range.
    pub eta: T,
}

impl<T: Real> SweepParams<T> {
    pub fn new(theta_tilde: T, theta_max: T, eta: T) -> Result<Self> {
        let p = Self {
            theta_tilde,
            theta_max,
            eta,
        };
        p.validate()?;
        Ok(p)
    }

    /// Full-range acquisition: `θ̃ = π/3`, `θ_max = π/2`, `η = 0.1`.
    pub fn acquisition() -> Self {
        Self {
            theta_tilde: T::FRAC_PI_3(),
            theta_max: T::FRAC_PI_2(),
            eta: T::lit(0.1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let half_pi = T::FRAC_PI_2();
        if !(self.theta_max > T::zero() && self.theta_max <= half_pi) {
            return invalid(format!("theta_max must be in (0, π/2], got {}", self.theta_max));
        }
        if !(self.theta_tilde >= T::zero() && self.theta_tilde <= half_pi) {
            return invalid(format!("theta_tilde must be in [0, π/2], got {}", self.theta_tilde));
        }
        if !(self.eta > T::zero() && self.eta < T::one()) {
            return invalid(format!("eta must be in (0, 1), got {}", self.eta));
        }
        Ok(())
    }

    /// Feedback cycles one learning stage spends (both line searches).
    pub fn cycles_per_stage(&self) -> usize {
        2 * line_search_probes(self.eta)
    }
}

/// Unitary basis estimate with per-column interference readings.
#[derive(Debug, Clone)]
pub struct EigenbasisEstimate<T> {
    pub w: ComplexMatrix<T>,
    /// Estimated interference power per column; `+∞` where nothing was measured yet.
    pub column_power: Vec<T>,
    pub timestamp: T,
}

impl<T: Real> EigenbasisEstimate<T> {
    pub fn identity(n: usize) -> Self {
        Self {
            w: ComplexMatrix::identity(n),
            column_power: vec![T::infinity(); n],
            timestamp: T::zero(),
        }
    }

    pub fn new(w: ComplexMatrix<T>, column_power: Vec<T>, timestamp: T) -> Result<Self> {
        if w.rows() != w.cols() || column_power.len() != w.cols() {
            return invalid("basis must be square with one power entry per column");
        }
        if w.orthonormality_defect() > T::lit(1e-8) {
            return invalid("basis is not unitary");
        }
        Ok(Self {
            w,
            column_power,
            timestamp,
        })
    }

    pub fn dim(&self) -> usize {
        self.w.cols()
    }

    /// Columns reordered by ascending estimated interference (stable).
    pub fn sorted(&self) -> Self {
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| {
            self.column_power[a]
                .partial_cmp(&self.column_power[b])
                .unwrap_or(Ordering::Equal)
        });
        Self {
            w: self.w.select_columns(&order).expect("indices in range"),
            column_power: order.iter().map(|&i| self.column_power[i]).collect(),
            timestamp: self.timestamp,
        }
    }

    /// `W·R_{l,m}(θ, φ)e_l`: the learning transmission for one probe.
    pub fn probe_vector(&self, l: usize, m: usize, theta: T, phi: T) -> ComplexVector<T> {
        let (s, c) = theta.sin_cos();
        let e = Complex::from_polar(s, phi);
        (0..self.dim())
            .map(|i| self.w[(i, l)] * c - self.w[(i, m)] * e)
            .collect()
    }
}

/// Index pair for stage `k` (zero-based) of a sweep over dimension `n_t`:
/// `(0,1), (0,2), …, (0,n_t−1), (1,2), …`.
pub fn next_element(k: usize, n_t: usize) -> Result<(usize, usize)> {
    let stages = n_t * n_t.saturating_sub(1) / 2;
    if k >= stages {
        return invalid(format!("stage {k} out of range for {stages} stages"));
    }
    let mut rem = k;
    for l in 0..n_t {
        let row = n_t - l - 1;
        if rem < row {
            return Ok((l, l + 1 + rem));
        }
        rem -= row;
    }
    unreachable!("stage index bounded above")
}

#[derive(Debug, Clone)]
pub struct LineSearchOutcome<T> {
    pub arg: T,
    pub value: T,
    pub probes: usize,
    /// Every `(angle, reading)` pair, in probe order.
    pub samples: Vec<(T, T)>,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Probes a line search with resolution `eta` spends, independent of the
/// half range and of the readings.
pub fn line_search_probes<T: Real>(eta: T) -> usize {
    let eta = eta.to_f64_lossy();
    let grid = grid_points(1.0, eta).len();
    let mut width = (2.0 * 4.0 * eta).min(2.0);
    if width <= eta {
        return grid;
    }
    // two interior points plus the closing midpoint
    let mut probes = grid + 3;
    loop {
        width *= GOLDEN;
        if width <= eta {
            break;
        }
        probes += 1;
    }
    probes
}

fn grid_points(half_range: f64, eta: f64) -> Vec<f64> {
    let step = 4.0 * eta * half_range;
    let n = ((2.0 * half_range / step - 1e-9).ceil() as usize).max(1);
    (0..=n)
        .map(|k| (-half_range + k as f64 * step).min(half_range))
        .collect()
}

/// Minimises a scalar feedback function over `[-half_range, half_range]`:
/// a coarse grid at spacing `4·eta·half_range`, then golden-section
/// refinement around the best grid point until the bracket is at most
/// `eta·half_range` wide, then one probe at the bracket midpoint. Returns the
/// best probe seen.
pub fn line_search<T, F>(mut w: F, half_range: T, eta: T) -> Result<LineSearchOutcome<T>>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    if !(half_range > T::zero()) || !(eta > T::zero() && eta < T::one()) {
        return invalid("line search needs half_range > 0 and eta in (0, 1)");
    }
    let r = half_range.to_f64_lossy();
    let e = eta.to_f64_lossy();
    let grid = grid_points(r, e);
    let mut samples: Vec<(T, T)> = Vec::new();
    let mut eval = |x: f64, samples: &mut Vec<(T, T)>| -> Result<f64> {
        let v = w(T::lit(x))?;
        samples.push((T::lit(x), v));
        Ok(v.to_f64_lossy())
    };

    let mut best = 0;
    let mut best_v = f64::INFINITY;
    for (i, &x) in grid.iter().enumerate() {
        let v = eval(x, &mut samples)?;
        if v < best_v {
            best_v = v;
            best = i;
        }
    }
    // Both ends read the same on a periodic objective; bracket on the side
    // whose interior neighbour is lower.
    let last = grid.len() - 1;
    if last >= 3 && (best == 0 || best == last) {
        let (v0, vn) = (samples[0].1.to_f64_lossy(), samples[last].1.to_f64_lossy());
        if (v0 - vn).abs() <= 1e-9 * (v0.abs() + vn.abs()) {
            let (n0, nn) = (samples[1].1.to_f64_lossy(), samples[last - 1].1.to_f64_lossy());
            best = if nn < n0 { last } else { 0 };
        }
    }
    // A bracket of fixed width around the best point keeps the probe count
    // independent of where the minimum lies.
    let width = (8.0 * e * r).min(2.0 * r);
    let mut lo = (grid[best] - 0.5 * width).max(-r);
    let mut hi = lo + width;
    if hi > r {
        hi = r;
        lo = r - width;
    }
    let tol = e * r;
    if hi - lo > tol {
        let mut x1 = hi - GOLDEN * (hi - lo);
        let mut x2 = lo + GOLDEN * (hi - lo);
        let mut f1 = eval(x1, &mut samples)?;
        let mut f2 = eval(x2, &mut samples)?;
        loop {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                if hi - lo <= tol {
                    break;
                }
                x1 = hi - GOLDEN * (hi - lo);
                f1 = eval(x1, &mut samples)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                if hi - lo <= tol {
                    break;
                }
                x2 = lo + GOLDEN * (hi - lo);
                f2 = eval(x2, &mut samples)?;
            }
        }
        eval(0.5 * (lo + hi), &mut samples)?;
    }
    let (arg, value) = samples
        .iter()
        .copied()
        .fold((T::zero(), T::infinity()), |acc, s| if s.1 < acc.1 { s } else { acc });
    Ok(LineSearchOutcome {
        arg,
        value,
        probes: samples.len(),
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageReport<T> {
    pub l: usize,
    pub m: usize,
    pub theta: T,
    pub phi: T,
    pub queries: usize,
}

/// One learning stage on the `(l, m)` plane.
pub fn learning_stage<T, F>(
    oracle: &mut F,
    est: &EigenbasisEstimate<T>,
    l: usize,
    m: usize,
    params: &SweepParams<T>,
) -> Result<(EigenbasisEstimate<T>, StageReport<T>)>
where
    T: Real,
    F: Feedback<T> + ?Sized,
{
    params.validate()?;
    let n = est.dim();
    if oracle.n_t() != n {
        return invalid(format!("basis has dimension {n}, transmitter has {}", oracle.n_t()));
    }
    // validates the pair
    RotationParams::new(n, l, m, T::zero(), T::zero())?;

    let phi_search = line_search(
        |phi| oracle.probe(&est.probe_vector(l, m, params.theta_tilde, phi)),
        T::PI(),
        params.eta,
    )?;
    let phi = phi_search.arg;
    let theta_search = line_search(
        |theta| oracle.probe(&est.probe_vector(l, m, theta, phi)),
        params.theta_max,
        params.eta,
    )?;
    let theta = theta_search.arg;

    let rot = RotationParams::new(n, l, m, theta, phi)?;
    let mut next = est.clone();
    next.w.rotate_columns(&rot);

    // Along θ the reading is μ + a·cos 2θ + b·sin 2θ with μ the mean power of
    // the two columns, so the samples give the partner column's power too.
    let power_l = theta_search.value;
    let power_m = match fit_double_angle(&theta_search.samples) {
        Some(mu) => mu + mu - power_l,
        None => est.column_power[l] + est.column_power[m] - power_l,
    };
    next.column_power[l] = power_l;
    next.column_power[m] = power_m.max(power_l);
    next.timestamp = oracle.clock();

    Ok((
        next,
        StageReport {
            l,
            m,
            theta: rot.theta,
            phi: rot.phi,
            queries: phi_search.probes + theta_search.probes,
        },
    ))
}

/// Least-squares fit of `μ + a cos 2θ + b sin 2θ`; returns `μ`.
fn fit_double_angle<T: Real>(samples: &[(T, T)]) -> Option<T> {
    if samples.len() < 3 {
        return None;
    }
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for &(theta, v) in samples {
        let t2 = 2.0 * theta.to_f64_lossy();
        let row = [1.0, t2.cos(), t2.sin()];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * v.to_f64_lossy();
        }
    }
    let det = det3(&ata);
    let scale = ata[0][0].powi(3);
    if !(det.abs() > 1e-12 * scale) {
        return None;
    }
    // Cramer's rule for the constant term
    let mut a0 = ata;
    for i in 0..3 {
        a0[i][0] = atb[i];
    }
    Some(T::lit(det3(&a0) / det))
}

fn det3(a: &[[f64; 3]; 3]) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

#[derive(Debug, Clone, Default)]
pub struct SweepReport<T> {
    pub stages: Vec<StageReport<T>>,
    pub queries: usize,
}

/// One full sweep of `n_t(n_t−1)/2` stages; the result is sorted by
/// ascending estimated interference so its leading columns form the precoder.
pub fn bnsl_sweep<T, F>(
    oracle: &mut F,
    init: &EigenbasisEstimate<T>,
    params: &SweepParams<T>,
) -> Result<(EigenbasisEstimate<T>, SweepReport<T>)>
where
    T: Real,
    F: Feedback<T> + ?Sized,
{
    let n = init.dim();
    if n < 2 {
        return invalid("a sweep needs at least two transmit antennas");
    }
    let mut est = init.clone();
    let mut report = SweepReport::default();
    for k in 0..n * (n - 1) / 2 {
        let (l, m) = next_element(k, n)?;
        let (next, stage) = learning_stage(oracle, &est, l, m, params)?;
        est = next;
        report.queries += stage.queries;
        report.stages.push(stage);
    }
    let mut est = est.sorted();
    est.timestamp = oracle.clock();
    Ok((est, report))
}
