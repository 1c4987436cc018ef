//! Monte-Carlo experiments and their CSV output.
//!
//! Every realisation draws its randomness from a seed derived from the
//! scenario seed and the realisation index, and parallel results are
//! collected in index order, so outputs do not depend on the worker count.
//! Each CSV starts with a `#` comment line carrying the seed and a SHA-256
//! of the canonical JSON configuration, followed by the column header.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{bessel_j0, dmi, ChannelProcess};
use crate::entypes::{bits_to_hex, TypeClassCodec};
use crate::error::{Error, Result};
use crate::feedback::{MeasurementModel, OracleSetup};
use crate::matcore::{random_gaussian, random_unitary, rotation_column, vec_norm_sqr, RotationParams};
use crate::scalar::{from_db, mix_seed};
use crate::superpose::{
    binary_alphabet, complex_noise, decode_symbol, delta_y1_db, receiver_average, superimpose,
    SuperpositionAlphabet,
};
use crate::tracking::{average_db, quantile_db, track, TrackerConfig, TrackingTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlphabetSpec {
    /// Binary alphabet `{e^{iθ₀}, e^{−iθ₀}}`.
    pub theta0: f64,
}

impl Default for AlphabetSpec {
    fn default() -> Self {
        Self {
            theta0: 2.0 * std::f64::consts::PI / 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodecSpec {
    pub n: usize,
    pub m: usize,
}

impl Default for CodecSpec {
    fn default() -> Self {
        Self { n: 16, m: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftSpec {
    /// Largest lag as a fraction of `1/F_d`.
    pub max_fraction: f64,
    pub points: usize,
    /// Independent channel realisations per lag.
    pub draws: usize,
}

impl Default for DriftSpec {
    fn default() -> Self {
        Self {
            max_fraction: 0.3,
            points: 31,
            draws: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BerSpec {
    pub snr_db: Vec<f64>,
    pub channels: usize,
    pub frames_per_channel: usize,
    /// Channels whose per-slot decisions go to `ber_frames.csv`.
    pub log_channels: usize,
}

impl Default for BerSpec {
    fn default() -> Self {
        Self {
            snr_db: (0..=8).map(f64::from).collect(),
            channels: 250,
            frames_per_channel: 50,
            log_channels: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub nt: usize,
    pub nr: usize,
    pub fc_hz: f64,
    pub fd_hz: f64,
    pub ts_s: f64,
    pub tfb_s: f64,
    pub num_channels: usize,
    pub num_slots: usize,
    pub num_paths: usize,
    pub noise_variance: f64,
    pub tracker: TrackerConfig<f64>,
    pub alphabet: AlphabetSpec,
    pub codec: CodecSpec,
    pub compare_dopplers: Vec<f64>,
    pub drift: DriftSpec,
    pub ber: BerSpec,
    pub seed: u64,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            nt: 2,
            nr: 1,
            fc_hz: 700e6,
            fd_hz: 1.3,
            ts_s: 66.7e-6,
            tfb_s: 1e-3,
            num_channels: 20,
            num_slots: 2000,
            num_paths: 40,
            noise_variance: 0.0,
            tracker: TrackerConfig::default(),
            alphabet: AlphabetSpec::default(),
            codec: CodecSpec::default(),
            compare_dopplers: vec![1.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            drift: DriftSpec::default(),
            ber: BerSpec::default(),
            seed: 1,
            workers: 0,
        }
    }
}

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Scales up to 100 channels × 10⁴ slots, 10³ BER channels × 10⁴ symbols
    /// and 1000 drift draws.
    pub fn full_scale(&mut self) {
        self.num_channels = 100;
        self.num_slots = 10_000;
        self.ber.channels = 1000;
        self.ber.frames_per_channel = 10_000 / self.codec.n.max(1);
        self.drift.draws = 1000;
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nt > self.nr && self.nr >= 1) {
            return config_err(format!("need nt > nr >= 1, got nt = {}, nr = {}", self.nt, self.nr));
        }
        if !(self.ts_s > 0.0 && self.tfb_s > 0.0 && self.fc_hz > 0.0) {
            return config_err("ts_s, tfb_s and fc_hz must be positive");
        }
        if !(self.fd_hz >= 0.0) || self.compare_dopplers.iter().any(|&f| !(f >= 0.0)) {
            return config_err("Doppler frequencies must be >= 0");
        }
        if self.num_channels == 0 || self.num_slots == 0 || self.num_paths == 0 {
            return config_err("num_channels, num_slots and num_paths must be >= 1");
        }
        if !(self.noise_variance >= 0.0) {
            return config_err("noise_variance must be >= 0");
        }
        if self.codec.m < 2 || !self.codec.n.is_multiple_of(self.codec.m) {
            return config_err(format!("codec M = {} must be >= 2 and divide N = {}", self.codec.m, self.codec.n));
        }
        if self.drift.points == 0 || self.drift.draws == 0 || !(self.drift.max_fraction > 0.0) {
            return config_err("drift needs points, draws >= 1 and max_fraction > 0");
        }
        if self.ber.channels == 0 || self.ber.frames_per_channel == 0 {
            return config_err("ber needs channels and frames_per_channel >= 1");
        }
        self.tracker
            .validate()
            .map_err(|e| Error::Config(format!("tracker: {e}")))?;
        binary_alphabet(self.alphabet.theta0).map_err(|e| Error::Config(format!("alphabet: {e}")))?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded. The worker count is
    /// left out since it does not affect results.
    pub fn config_hash(&self) -> String {
        let canonical = Self {
            workers: 0,
            ..self.clone()
        };
        let json = serde_json::to_string(&canonical).expect("config serialises");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn oracle_setup(&self, noise_seed: u64) -> OracleSetup<f64> {
        OracleSetup {
            noise_variance: self.noise_variance,
            t_fb: self.tfb_s,
            t_s: self.ts_s,
            model: MeasurementModel::Q1,
            quantizer: None,
            noise_seed,
        }
    }

    pub fn channel(&self, doppler_hz: f64, seed: u64) -> Result<ChannelProcess<f64>> {
        ChannelProcess::new(self.nr, self.nt, doppler_hz, self.num_paths, seed, self.ts_s)
    }

    /// Seed of realisation `k`.
    pub fn realisation_seed(&self, k: usize) -> u64 {
        mix_seed(self.seed, k as u64 + 1)
    }

    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> Result<R> {
        if self.workers == 0 {
            return Ok(f());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftRow {
    pub delta_t: f64,
    pub rho_abs: f64,
    pub dmi_db: f64,
}

/// Null-space drift `d_MI(Δt)` and `|ρ_Δt| = |J₀(2πF_dΔt)|` on a lag grid.
pub fn run_drift(cfg: &ScenarioConfig) -> Result<Vec<DriftRow>> {
    cfg.validate()?;
    if !(cfg.fd_hz > 0.0) {
        return config_err("drift needs fd_hz > 0");
    }
    let ch = cfg.channel(cfg.fd_hz, cfg.seed)?;
    let points = cfg.drift.points;
    cfg.install(|| {
        (0..points)
            .into_par_iter()
            .map(|i| {
                let frac = if points == 1 {
                    0.0
                } else {
                    cfg.drift.max_fraction * i as f64 / (points - 1) as f64
                };
                let delta_t = frac / cfg.fd_hz;
                let rho_abs = bessel_j0(2.0 * std::f64::consts::PI * cfg.fd_hz * delta_t).abs();
                let dmi_db = dmi(&ch, delta_t, cfg.drift.draws)?;
                Ok(DriftRow {
                    delta_t,
                    rho_abs,
                    dmi_db,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?
}

/// One tracking run on realisation 0 at `fd_hz`.
pub fn run_track(cfg: &ScenarioConfig) -> Result<TrackingTrace<f64>> {
    cfg.validate()?;
    let seed = cfg.realisation_seed(0);
    track(
        cfg.channel(cfg.fd_hz, seed)?,
        cfg.oracle_setup(mix_seed(seed, 0xFEED)),
        &cfg.tracker,
        cfg.num_slots,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Bnsl,
    Bnst,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Bnsl => "bnsl",
            Algorithm::Bnst => "bnst",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    pub fd: f64,
    pub algo: Algorithm,
    pub p95: f64,
    pub p90: f64,
    pub p85: f64,
    pub avg: f64,
    /// Feedback queries summed over channels.
    pub queries: usize,
    /// Line-search probes summed over every sweep of every channel.
    pub sweep_queries: usize,
}

/// Pools all slots of `num_channels` tracking runs and reports the metrics.
pub fn compare_point(cfg: &ScenarioConfig, fd: f64, algo: Algorithm) -> Result<CompareRow> {
    let tracker = match algo {
        Algorithm::Bnst => cfg.tracker,
        Algorithm::Bnsl => TrackerConfig {
            p_tr_db: cfg.tracker.p_tr_db,
            ..TrackerConfig::bnsl()
        },
    };
    let traces = cfg.install(|| {
        (0..cfg.num_channels)
            .into_par_iter()
            .map(|k| {
                let seed = cfg.realisation_seed(k);
                track(
                    cfg.channel(fd, seed)?,
                    cfg.oracle_setup(mix_seed(seed, 0xFEED)),
                    &tracker,
                    cfg.num_slots,
                )
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let pooled: Vec<f64> = traces.iter().flat_map(|t| t.interference_db()).collect();
    Ok(CompareRow {
        fd,
        algo,
        p95: quantile_db(&pooled, 95.0)?,
        p90: quantile_db(&pooled, 90.0)?,
        p85: quantile_db(&pooled, 85.0)?,
        avg: average_db(&pooled)?,
        queries: traces.iter().map(|t| t.total_queries).sum(),
        sweep_queries: traces.iter().flat_map(|t| t.sweep_queries.iter()).sum(),
    })
}

/// BNSL and BNST metrics for every Doppler frequency in the config.
pub fn run_compare(cfg: &ScenarioConfig) -> Result<Vec<CompareRow>> {
    cfg.validate()?;
    if cfg.compare_dopplers.is_empty() {
        return config_err("compare_dopplers is empty");
    }
    let mut rows = Vec::new();
    for &fd in &cfg.compare_dopplers {
        for algo in [Algorithm::Bnsl, Algorithm::Bnst] {
            rows.push(compare_point(cfg, fd, algo)?);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerRow {
    pub snr_db: f64,
    pub ps: f64,
    /// Mean of the per-frame `Δy₁` in dB.
    pub delta_y1_db: f64,
    pub symbols: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameLog {
    pub snr_db: f64,
    pub channel: usize,
    pub frame: usize,
    pub payload_hex: String,
    pub slot: usize,
    pub tx_index: usize,
    pub rx_index: usize,
}

#[derive(Debug, Clone, Default)]
pub struct BerResult {
    pub rows: Vec<BerRow>,
    pub frames: Vec<FrameLog>,
}

struct ChannelBer {
    errors: Vec<usize>,
    dy1_sum: Vec<f64>,
    frames: Vec<FrameLog>,
}

/// Symbol error rate of the superimposed scheme over an SNR grid, with
/// `SNR = ‖H₂₂ T r₁‖² / (n_rx σ²)` per slot and `n_rx = nt`.
pub fn run_ber(cfg: &ScenarioConfig) -> Result<BerResult> {
    cfg.validate()?;
    let grid = &cfg.ber.snr_db;
    if grid.is_empty() {
        return config_err("ber.snr_db is empty");
    }
    let alphabet = binary_alphabet(cfg.alphabet.theta0)?;
    let codec = TypeClassCodec::new(cfg.codec.n, cfg.codec.m)?;
    if codec.m() != alphabet.len() {
        return config_err(format!(
            "codec M = {} does not match the binary alphabet",
            codec.m()
        ));
    }
    let per_channel = cfg.install(|| {
        (0..cfg.ber.channels)
            .into_par_iter()
            .map(|k| ber_channel(cfg, k, &alphabet, &codec))
            .collect::<Result<Vec<_>>>()
    })??;
    let frames_total = cfg.ber.channels * cfg.ber.frames_per_channel;
    let symbols = frames_total * codec.n();
    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, &snr_db)| BerRow {
            snr_db,
            ps: per_channel.iter().map(|c| c.errors[i]).sum::<usize>() as f64 / symbols as f64,
            delta_y1_db: per_channel.iter().map(|c| c.dy1_sum[i]).sum::<f64>() / frames_total as f64,
            symbols,
        })
        .collect();
    let frames = per_channel.into_iter().flat_map(|c| c.frames).collect();
    Ok(BerResult { rows, frames })
}

fn ber_channel(
    cfg: &ScenarioConfig,
    k: usize,
    alphabet: &SuperpositionAlphabet<f64>,
    codec: &TypeClassCodec,
) -> Result<ChannelBer> {
    let grid = &cfg.ber.snr_db;
    let (nt, nr, n) = (cfg.nt, cfg.nr, codec.n());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.realisation_seed(k));
    let h12 = random_gaussian::<f64, _>(nr, nt, &mut rng);
    let h22 = random_gaussian::<f64, _>(nt, nt, &mut rng);
    let t = random_unitary::<f64, _>(nt, &mut rng);
    let l = rng.random_range(0..nt - 1);
    let m = rng.random_range(l + 1..nt);
    let theta = rng.random_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2);
    let phi = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let r1 = rotation_column(nt, &RotationParams::new(nt, l, m, theta, phi)?);

    let h22t = h22.matmul(&t)?;
    let signal = vec_norm_sqr(&h22t.mul_vec(&r1)?);
    let variances: Vec<f64> = grid
        .iter()
        .map(|&s| signal / (nt as f64 * from_db(s)))
        .collect();

    let mut out = ChannelBer {
        errors: vec![0; grid.len()],
        dy1_sum: vec![0.0; grid.len()],
        frames: Vec::new(),
    };
    for f in 0..cfg.ber.frames_per_channel {
        let bits: Vec<bool> = (0..codec.capacity_bits()).map(|_| rng.random()).collect();
        let seq = codec.encode_bits(&bits)?;
        let frame = superimpose(&r1, &seq, alphabet, n)?;
        let clean: Vec<Vec<Complex<f64>>> = frame
            .transmit_vectors
            .iter()
            .map(|x| h22t.mul_vec(x))
            .collect::<Result<_>>()?;
        let unit_noise = complex_noise(n, nt, 1.0, &mut rng);
        let dy1_seed = rng.random::<u64>();
        for (i, &var) in variances.iter().enumerate() {
            let sigma = var.sqrt();
            let y: Vec<Vec<Complex<f64>>> = clean
                .iter()
                .zip(&unit_noise)
                .map(|(c, z)| c.iter().zip(z).map(|(&a, &b)| a + b * sigma).collect())
                .collect();
            let ybar = receiver_average(&y)?;
            for (slot, (yt, &tx)) in y.iter().zip(&seq).enumerate() {
                let rx = decode_symbol(yt, &ybar, alphabet)?;
                if rx != tx {
                    out.errors[i] += 1;
                }
                if k < cfg.ber.log_channels {
                    out.frames.push(FrameLog {
                        snr_db: grid[i],
                        channel: k,
                        frame: f,
                        payload_hex: bits_to_hex(&bits),
                        slot,
                        tx_index: tx,
                        rx_index: rx,
                    });
                }
            }
            let mut dy1_rng = ChaCha8Rng::seed_from_u64(mix_seed(dy1_seed, i as u64));
            out.dy1_sum[i] += delta_y1_db(&h12, &t, &frame, var, MeasurementModel::Q1, &mut dy1_rng)?;
        }
    }
    Ok(out)
}

/// Writes the comment line, the header and `rows` to `path`.
pub fn write_csv(
    path: &Path,
    experiment: &str,
    cfg: &ScenarioConfig,
    extra_comment: Option<&str>,
    header: &str,
    rows: impl IntoIterator<Item = String>,
) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(
        out,
        "# bnst {experiment} seed={} config_sha256={}",
        cfg.seed,
        cfg.config_hash()
    )?;
    if let Some(c) = extra_comment {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{header}")?;
    for r in rows {
        writeln!(out, "{r}")?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Drift,
    Track,
    Compare,
    Ber,
}

/// Runs one experiment and writes its CSV files into `out_dir`.
pub fn run_experiment(exp: Experiment, cfg: &ScenarioConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    match exp {
        Experiment::Drift => {
            let rows = run_drift(cfg)?;
            let path = out_dir.join("drift.csv");
            write_csv(
                &path,
                "drift",
                cfg,
                None,
                "delta_t,rho_abs,dmi_db",
                rows.iter()
                    .map(|r| format!("{:.6e},{:.6},{:.4}", r.delta_t, r.rho_abs, r.dmi_db)),
            )?;
            Ok(vec![path])
        }
        Experiment::Track => {
            let trace = run_track(cfg)?;
            let path = out_dir.join("track.csv");
            let mut body = Vec::new();
            trace.write_csv(&mut body)?;
            let text = String::from_utf8(body).expect("ASCII CSV");
            let mut lines = text.lines();
            let header = lines.next().unwrap_or_default().to_string();
            write_csv(
                &path,
                "track",
                cfg,
                Some(&format!(
                    "sweeps={} adaptation_episodes={} total_queries={}",
                    trace.sweeps, trace.adaptation_episodes, trace.total_queries
                )),
                &header,
                lines.map(str::to_string),
            )?;
            Ok(vec![path])
        }
        Experiment::Compare => {
            let rows = run_compare(cfg)?;
            let path = out_dir.join("compare.csv");
            write_csv(
                &path,
                "compare",
                cfg,
                None,
                "fd,algo,p95,p90,p85,avg",
                rows.iter().map(|r| {
                    format!(
                        "{},{},{:.4},{:.4},{:.4},{:.4}",
                        r.fd,
                        r.algo.as_str(),
                        r.p95,
                        r.p90,
                        r.p85,
                        r.avg
                    )
                }),
            )?;
            Ok(vec![path])
        }
        Experiment::Ber => {
            let res = run_ber(cfg)?;
            let note = format!(
                "snr = |H22 T r1|^2 / (n_rx sigma^2) per slot, n_rx = {}; N = {}, M = {}",
                cfg.nt, cfg.codec.n, cfg.codec.m
            );
            let path = out_dir.join("ber.csv");
            write_csv(
                &path,
                "ber",
                cfg,
                Some(&note),
                "snr_db,ps,delta_y1_db",
                res.rows
                    .iter()
                    .map(|r| format!("{},{:.6e},{:.6}", r.snr_db, r.ps, r.delta_y1_db)),
            )?;
            let frames = out_dir.join("ber_frames.csv");
            write_csv(
                &frames,
                "ber",
                cfg,
                Some(&note),
                "snr_db,channel,frame,payload_hex,slot,tx_index,rx_index",
                res.frames.iter().map(|f| {
                    format!(
                        "{},{},{},{},{},{},{}",
                        f.snr_db, f.channel, f.frame, f.payload_hex, f.slot, f.tx_index, f.rx_index
                    )
                }),
            )?;
            Ok(vec![path, frames])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            num_channels: 3,
            num_slots: 400,
            compare_dopplers: vec![1.0],
            drift: DriftSpec {
                max_fraction: 0.2,
                points: 5,
                draws: 20,
            },
            ber: BerSpec {
                snr_db: vec![0.0, 6.0],
                channels: 4,
                frames_per_channel: 5,
                log_channels: 1,
            },
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn defaults_validate_and_roundtrip_json() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back = ScenarioConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.config_hash(), cfg.config_hash());
        let partial = ScenarioConfig::from_json(r#"{"nt": 3, "seed": 9}"#).unwrap();
        assert_eq!((partial.nt, partial.nr, partial.seed), (3, 1, 9));
        assert!(ScenarioConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            ScenarioConfig { nt: 1, ..small() },
            ScenarioConfig { ts_s: 0.0, ..small() },
            ScenarioConfig { codec: CodecSpec { n: 15, m: 2 }, ..small() },
            ScenarioConfig { alphabet: AlphabetSpec { theta0: 3.5 }, ..small() },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
        }
    }

    #[test]
    fn full_scale_sizes() {
        let mut cfg = ScenarioConfig::default();
        cfg.full_scale();
        assert_eq!((cfg.num_channels, cfg.num_slots), (100, 10_000));
        assert_eq!(cfg.ber.channels * cfg.ber.frames_per_channel * cfg.codec.n, 10_000_000);
    }

    #[test]
    fn drift_grid_shape() {
        let cfg = ScenarioConfig { nt: 3, fd_hz: 6.48, ..small() };
        let rows = run_drift(&cfg).unwrap();
        assert_eq!(rows.len(), cfg.drift.points);
        assert_eq!(rows[0].delta_t, 0.0);
        assert!((rows[0].rho_abs - 1.0).abs() < 1e-15);
        assert!(rows[0].dmi_db <= -120.0);
        assert!(rows.windows(2).all(|w| w[0].delta_t < w[1].delta_t));
    }

    #[test]
    fn static_track_never_readapts() {
        let cfg = ScenarioConfig { fd_hz: 0.0, ..small() };
        let trace = run_track(&cfg).unwrap();
        assert_eq!(trace.sweeps, 1);
        assert_eq!(trace.adaptation_episodes, 0);
    }

    #[test]
    fn fading_track_readapts() {
        let cfg = ScenarioConfig {
            fd_hz: 1.3,
            num_slots: 10_000,
            ..small()
        };
        assert!(run_track(&cfg).unwrap().adaptation_episodes >= 1);
    }

    #[test]
    fn compare_accounts_every_probe() {
        let rows = run_compare(&small()).unwrap();
        assert_eq!(rows.len(), 2);
        for r in rows {
            assert_eq!(r.queries, r.sweep_queries);
            assert!(r.p95 >= r.p90 && r.p90 >= r.p85);
        }
    }

    #[test]
    fn bnsl_equals_full_range_bnst() {
        let cfg = small();
        let bnsl = compare_point(&cfg, 1.0, Algorithm::Bnsl).unwrap();
        let full = ScenarioConfig {
            tracker: TrackerConfig {
                theta_max_small: std::f64::consts::FRAC_PI_2,
                theta_max_large: std::f64::consts::FRAC_PI_2,
                theta_tilde_track: std::f64::consts::FRAC_PI_3,
                eta_track: 0.1,
                ..cfg.tracker
            },
            ..cfg.clone()
        };
        let bnst = compare_point(&full, 1.0, Algorithm::Bnst).unwrap();
        for (a, b) in [(bnsl.p95, bnst.p95), (bnsl.p90, bnst.p90), (bnsl.p85, bnst.p85), (bnsl.avg, bnst.avg)] {
            assert!((a - b).abs() <= 1.0, "{a} vs {b}");
        }
    }

    #[test]
    fn ber_noiseless_point_is_error_free() {
        let cfg = ScenarioConfig {
            ber: BerSpec {
                snr_db: vec![f64::INFINITY],
                ..small().ber
            },
            ..small()
        };
        let res = run_ber(&cfg).unwrap();
        assert_eq!(res.rows[0].ps, 0.0);
        assert!(res.rows[0].delta_y1_db.abs() < 1e-12);
        assert_eq!(res.frames.len(), cfg.ber.frames_per_channel * cfg.codec.n);
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let one = ScenarioConfig { workers: 1, ..small() };
        let four = ScenarioConfig { workers: 4, ..small() };
        assert_eq!(run_compare(&one).unwrap(), run_compare(&four).unwrap());
        assert_eq!(run_ber(&one).unwrap().rows, run_ber(&four).unwrap().rows);
        assert_eq!(run_drift(&ScenarioConfig { fd_hz: 3.0, ..one }).unwrap(), run_drift(&ScenarioConfig { fd_hz: 3.0, ..four }).unwrap());
    }

    #[test]
    fn csv_files_carry_hash_and_header() {
        let dir = std::env::temp_dir().join(format!("bnst-harness-{}", std::process::id()));
        let cfg = small();
        let paths = run_experiment(Experiment::Compare, &cfg, &dir).unwrap();
        let text = fs::read_to_string(&paths[0]).unwrap();
        let mut lines = text.lines();
        let comment = lines.next().unwrap();
        assert!(comment.starts_with("# bnst compare seed=1 config_sha256="));
        assert!(comment.ends_with(&cfg.config_hash()));
        assert_eq!(lines.next().unwrap(), "fd,algo,p95,p90,p85,avg");
        assert_eq!(lines.count(), 2);
        fs::remove_dir_all(dir).unwrap();
    }
}
