//! Blind null-space tracking on a fading channel.
//!
//! One acquisition sweep from the identity, then slot by slot (one slot per
//! feedback cycle): while the current precoder's normalized interference
//! stays at or below the trigger, the slot carries data; once it rises above,
//! the tracker re-adapts with a modified sweep whose θ range is restricted
//! according to the Doppler frequency. Every learning probe occupies a slot
//! and is logged with the interference it actually induced.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelProcess;
use crate::error::{invalid, Error, Result};
use crate::feedback::{Feedback, FeedbackOracle, OracleSetup};
use crate::learning::{bnsl_sweep, EigenbasisEstimate, SweepParams, SweepReport};
use crate::matcore::{spectral_norm, vec_norm_sqr, ComplexMatrix, ComplexVector};
use crate::scalar::{db, from_db, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig<T> {
    /// Adaptation trigger on the normalized interference, in dB.
    pub p_tr_db: T,
    /// θ range for Doppler frequencies up to `doppler_split_hz`.
    pub theta_max_small: T,
    /// θ range above `doppler_split_hz`.
    pub theta_max_large: T,
    pub doppler_split_hz: T,
    pub theta_tilde_track: T,
    pub eta_track: T,
    pub acquisition: SweepParams<T>,
}

impl<T: Real> Default for TrackerConfig<T> {
    fn default() -> Self {
        Self {
            p_tr_db: T::lit(-20.0),
            theta_max_small: T::PI() / T::lit(10.0),
            theta_max_large: T::PI() / T::lit(5.0),
            doppler_split_hz: T::lit(2.0),
            theta_tilde_track: T::PI() / T::lit(20.0),
            eta_track: T::lit(0.2),
            acquisition: SweepParams::acquisition(),
        }
    }
}

impl<T: Real> TrackerConfig<T> {
    /// Plain blind learning: every re-adaptation is a full-range sweep with
    /// the acquisition parameters.
    pub fn bnsl() -> Self {
        let acq = SweepParams::acquisition();
        Self {
            theta_max_small: acq.theta_max,
            theta_max_large: acq.theta_max,
            theta_tilde_track: acq.theta_tilde,
            eta_track: acq.eta,
            acquisition: acq,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_tr_db < T::zero()) {
            return invalid(format!("p_tr_db must be negative, got {}", self.p_tr_db));
        }
        if !(self.theta_max_small > T::zero()
            && self.theta_max_small <= self.theta_max_large
            && self.theta_max_large <= T::FRAC_PI_2())
        {
            return invalid("need 0 < theta_max_small <= theta_max_large <= π/2");
        }
        if !(self.doppler_split_hz >= T::zero()) {
            return invalid("doppler_split_hz must be >= 0");
        }
        self.acquisition.validate()?;
        self.tracking_params(T::zero())?;
        Ok(())
    }

    /// θ range used by the modified sweep at this Doppler frequency.
    pub fn theta_max_for(&self, doppler_hz: T) -> T {
        if doppler_hz <= self.doppler_split_hz {
            self.theta_max_small
        } else {
            self.theta_max_large
        }
    }

    pub fn tracking_params(&self, doppler_hz: T) -> Result<SweepParams<T>> {
        SweepParams::new(self.theta_tilde_track, self.theta_max_for(doppler_hz), self.eta_track)
    }

    /// Sweep parameters by escalation level: 0 is the Doppler-selected range,
    /// 1 the large range, 2 and above a full-range acquisition sweep.
    fn escalated_params(&self, doppler_hz: T, level: usize) -> Result<SweepParams<T>> {
        match level {
            0 => self.tracking_params(doppler_hz),
            1 => SweepParams::new(self.theta_tilde_track, self.theta_max_large, self.eta_track),
            _ => Ok(self.acquisition),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Transmitting,
    Adapting,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Transmitting => "transmitting",
            Mode::Adapting => "adapting",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotRecord<T> {
    pub time: T,
    pub mode: Mode,
    /// Worst-case value while transmitting, induced value while adapting.
    pub interference_db: T,
    pub precoder_id: usize,
    pub queries_cum: usize,
}

#[derive(Debug, Clone, Default)]
pub struct TrackingTrace<T> {
    pub slots: Vec<SlotRecord<T>>,
    /// Completed sweeps, acquisition included.
    pub sweeps: usize,
    /// Times the trigger fired after transmission.
    pub adaptation_episodes: usize,
    /// Line-search probes spent by each sweep, in order.
    pub sweep_queries: Vec<usize>,
    pub total_queries: usize,
}

impl<T: Real> TrackingTrace<T> {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn interference_db(&self) -> Vec<T> {
        self.slots.iter().map(|s| s.interference_db).collect()
    }

    pub const CSV_HEADER: &'static str = "time_s,mode,interference_db,queries_cum";

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for s in &self.slots {
            writeln!(
                out,
                "{:.6},{},{:.4},{}",
                s.time.to_f64_lossy(),
                s.mode.as_str(),
                s.interference_db.to_f64_lossy(),
                s.queries_cum
            )?;
        }
        Ok(())
    }
}

/// First `N_t − n_r` columns of the (ascending) basis estimate.
pub fn precoder_from<T: Real>(w: &EigenbasisEstimate<T>, n_r: usize) -> Result<ComplexMatrix<T>> {
    let n_t = w.dim();
    if n_r >= n_t {
        return invalid(format!("need n_r < n_t, got n_r = {n_r}, n_t = {n_t}"));
    }
    let idx: Vec<usize> = (0..n_t - n_r).collect();
    w.w.select_columns(&idx)
}

/// `10 log10(‖H T‖² / ‖H‖²)` with spectral norms.
pub fn normalized_interference_db<T: Real>(h: &ComplexMatrix<T>, t: &ComplexMatrix<T>) -> Result<T> {
    let hn = spectral_norm(h);
    if !(hn > T::zero()) {
        return Err(Error::UndefinedInput("interference channel has zero norm".into()));
    }
    let ht = spectral_norm(&h.matmul(t)?);
    if ht.is_nan() || hn.is_nan() {
        return Err(Error::NumericFailure("spectral norm did not converge".into()));
    }
    Ok(T::lit(20.0) * (ht / hn).log10())
}

/// Re-adaptation sweep starting from the current estimate.
pub fn modified_sweep<T, F>(
    oracle: &mut F,
    w: &EigenbasisEstimate<T>,
    cfg: &TrackerConfig<T>,
    doppler_hz: T,
) -> Result<(EigenbasisEstimate<T>, SweepReport<T>)>
where
    T: Real,
    F: Feedback<T> + ?Sized,
{
    bnsl_sweep(oracle, w, &cfg.tracking_params(doppler_hz)?)
}

/// Logs every learning cycle as an adapting slot with the normalized
/// interference the probe actually caused.
struct Recorder<'a, T: Real> {
    oracle: &'a mut FeedbackOracle<T>,
    slots: &'a mut Vec<SlotRecord<T>>,
    precoder_id: usize,
}

impl<T: Real> Feedback<T> for Recorder<'_, T> {
    fn n_t(&self) -> usize {
        self.oracle.n_t()
    }

    fn slots_per_cycle(&self) -> usize {
        self.oracle.slots_per_cycle()
    }

    fn query(&mut self, transmit_slots: &[ComplexVector<T>]) -> Result<T> {
        let h = self.oracle.current_channel();
        let hn2 = spectral_norm(&h).powi(2);
        let mut induced = T::zero();
        for x in transmit_slots {
            induced += vec_norm_sqr(&h.mul_vec(x)?) / (vec_norm_sqr(x) * hn2);
        }
        induced /= T::from_usize_lossy(transmit_slots.len().max(1));
        let time = self.oracle.clock();
        let value = self.oracle.query(transmit_slots)?;
        self.slots.push(SlotRecord {
            time,
            mode: Mode::Adapting,
            interference_db: db(induced),
            precoder_id: self.precoder_id,
            queries_cum: self.oracle.query_count(),
        });
        Ok(value)
    }

    fn query_count(&self) -> usize {
        self.oracle.query_count()
    }

    fn clock(&self) -> T {
        self.oracle.clock()
    }
}

/// Runs the tracker for `duration_slots` feedback cycles on `channel`. The
/// number of primary receive antennas is the channel's row count.
pub fn track<T: Real>(
    channel: ChannelProcess<T>,
    setup: OracleSetup<T>,
    cfg: &TrackerConfig<T>,
    duration_slots: usize,
) -> Result<TrackingTrace<T>> {
    cfg.validate()?;
    if duration_slots == 0 {
        return invalid("duration_slots must be >= 1");
    }
    let n_r = channel.rows();
    let n_t = channel.cols();
    if n_r >= n_t {
        return invalid(format!("need n_r < n_t, got {n_r} x {n_t}"));
    }
    let doppler = channel.doppler_hz();
    let mut oracle = FeedbackOracle::new(channel, setup)?;
    let mut trace = TrackingTrace {
        slots: Vec::with_capacity(duration_slots),
        ..TrackingTrace::default()
    };
    let mut precoder_id = 0;

    let run_sweep = |oracle: &mut FeedbackOracle<T>,
                     slots: &mut Vec<SlotRecord<T>>,
                     w: &EigenbasisEstimate<T>,
                     params: &SweepParams<T>,
                     precoder_id: usize| {
        let mut rec = Recorder {
            oracle,
            slots,
            precoder_id,
        };
        bnsl_sweep(&mut rec, w, params)
    };

    let (mut w, report) = run_sweep(
        &mut oracle,
        &mut trace.slots,
        &EigenbasisEstimate::identity(n_t),
        &cfg.acquisition,
        precoder_id,
    )?;
    trace.sweeps += 1;
    trace.sweep_queries.push(report.queries);
    precoder_id += 1;
    let mut precoder = precoder_from(&w, n_r)?;
    let mut level = 0;
    let mut adapting = false;

    while trace.slots.len() < duration_slots {
        let h = oracle.current_channel();
        let current = normalized_interference_db(&h, &precoder)?;
        if current > cfg.p_tr_db {
            if !adapting {
                trace.adaptation_episodes += 1;
                adapting = true;
            }
            let params = cfg.escalated_params(doppler, level)?;
            let (next, report) = run_sweep(&mut oracle, &mut trace.slots, &w, &params, precoder_id)?;
            w = next;
            trace.sweeps += 1;
            trace.sweep_queries.push(report.queries);
            precoder_id += 1;
            precoder = precoder_from(&w, n_r)?;
            let after = normalized_interference_db(&oracle.current_channel(), &precoder)?;
            level = if after > cfg.p_tr_db { level + 1 } else { 0 };
        } else {
            adapting = false;
            level = 0;
            trace.slots.push(SlotRecord {
                time: oracle.clock(),
                mode: Mode::Transmitting,
                interference_db: current,
                precoder_id,
                queries_cum: oracle.query_count(),
            });
            oracle.advance_idle();
        }
    }
    trace.slots.truncate(duration_slots);
    trace.total_queries = oracle.query_count();
    Ok(trace)
}

/// Value at or below which `x_percent`% of the slots lie (nearest rank).
pub fn metric_px<T: Real>(trace: &TrackingTrace<T>, x_percent: T) -> Result<T> {
    quantile_db(&trace.interference_db(), x_percent)
}

/// Nearest-rank quantile of a dB series.
pub fn quantile_db<T: Real>(values: &[T], x_percent: T) -> Result<T> {
    if values.is_empty() {
        return invalid("quantile of an empty series");
    }
    if !(x_percent > T::zero() && x_percent < T::lit(100.0)) {
        return invalid(format!("percentile must be in (0, 100), got {x_percent}"));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = T::from_usize_lossy(v.len());
    let rank = (x_percent / T::lit(100.0) * n).ceil().to_usize().unwrap_or(1).max(1);
    Ok(v[rank.min(v.len()) - 1])
}

/// `10 log10` of the linear mean over all slots.
pub fn average_interference_db<T: Real>(trace: &TrackingTrace<T>) -> Result<T> {
    average_db(&trace.interference_db())
}

pub fn average_db<T: Real>(values: &[T]) -> Result<T> {
    if values.is_empty() {
        return invalid("average of an empty series");
    }
    let sum: T = values.iter().map(|&v| from_db(v)).sum();
    Ok(db(sum / T::from_usize_lossy(values.len())))
}
