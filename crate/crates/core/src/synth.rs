//! Synthetic 1 Hz drive-test telemetry.
//!
//! Throughput follows radio quality: an SNR process (periodic coverage
//! cycle plus an AR(1) fading term) drives a saturating capacity curve,
//! modulated by a diurnal load profile and multiplicative AR noise. The
//! radio indicators are derived from the same SNR so that they carry
//! signal about the target.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ingest::{Application, DownloadState, Mobility, NetworkMode, SessionDataset, TelemetryRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub duration_s: u64,
    /// Unix seconds of the first sample.
    pub start: i64,
    pub seed: u64,
    pub network_mode: NetworkMode,
    pub peak_kbps: f64,
    /// Period of the coverage cycle in seconds.
    pub cycle_s: f64,
    pub cycle_db: f64,
    pub fading_db: f64,
    pub fading_tau_s: f64,
    /// Relative depth of the diurnal load profile.
    pub diurnal: f64,
    pub noise_sd: f64,
    pub noise_tau_s: f64,
    pub white_sd: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            duration_s: 3600,
            start: 1_622_505_600,
            seed: 0,
            network_mode: NetworkMode::Nr,
            peak_kbps: 400_000.0,
            cycle_s: 480.0,
            cycle_db: 6.0,
            fading_db: 2.5,
            fading_tau_s: 300.0,
            diurnal: 0.25,
            noise_sd: 0.03,
            noise_tau_s: 30.0,
            white_sd: 0.10,
        }
    }
}

struct Ar1 {
    phi: f64,
    innov: f64,
    x: f64,
}

impl Ar1 {
    /// Stationary AR(1) with standard deviation `sd` and correlation time `tau` seconds.
    fn new<R: Rng>(sd: f64, tau: f64, rng: &mut R) -> Self {
        let phi = (-1.0 / tau.max(1e-9)).exp();
        let x = sd * rng.sample::<f64, _>(StandardNormal);
        Ar1 { phi, innov: sd * (1.0 - phi * phi).sqrt(), x }
    }

    fn step<R: Rng>(&mut self, rng: &mut R) -> f64 {
        self.x = self.phi * self.x + self.innov * rng.sample::<f64, _>(StandardNormal);
        self.x
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn round_to(v: f64, step: f64) -> f64 {
    (v / step).round() * step
}

/// One session of `duration_s` seconds sampled at 1 Hz.
pub fn generate(config: &SynthConfig) -> SessionDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut fading = Ar1::new(config.fading_db, config.fading_tau_s, &mut rng);
    let mut rsrp_noise = Ar1::new(1.0, 20.0, &mut rng);
    let mut load_noise = Ar1::new(config.noise_sd, config.noise_tau_s, &mut rng);
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let gauss = |rng: &mut ChaCha8Rng, sd: f64| sd * rng.sample::<f64, _>(StandardNormal);

    let mut records = Vec::with_capacity(config.duration_s as usize);
    for k in 0..config.duration_s {
        let t = config.start + k as i64;
        let cycle = (std::f64::consts::TAU * k as f64 / config.cycle_s + phase).sin();
        let snr = 12.0 + config.cycle_db * cycle + fading.step(&mut rng);
        let rsrp = -95.0 + 1.5 * (snr - 12.0) + rsrp_noise.step(&mut rng);
        let rsrq = -11.0 + 0.3 * (snr - 12.0) + gauss(&mut rng, 0.5);
        let quality = sigmoid((snr - 10.0) / 4.0);

        let hour = t.rem_euclid(86_400) as f64 / 3600.0;
        let load = 1.0 - config.diurnal * (std::f64::consts::TAU * hour / 24.0).cos();
        let mult = (1.0 + load_noise.step(&mut rng)) * (1.0 + gauss(&mut rng, config.white_sd));
        let dl = (config.peak_kbps * quality * load * mult).max(0.0);

        let mut r = TelemetryRecord::new(t, config.network_mode, DownloadState::Downloading, round_to(dl, 1.0));
        r.longitude = Some(-8.47);
        r.latitude = Some(51.89);
        r.speed = Some(0.0);
        r.operator_name = Some("SynthNet".into());
        r.cell_id = Some("1001".into());
        let ul = 8000.0 * quality * (1.0 + gauss(&mut rng, 0.2));
        r.ul_bitrate = Some(round_to(ul.max(0.0), 1.0));
        let ping = 20.0 + 15.0 * (1.0 - quality) + gauss(&mut rng, 2.0).abs();
        r.ping_avg = Some(round_to(ping, 0.1));
        r.ping_min = Some(round_to(ping * 0.8, 0.1));
        r.ping_max = Some(round_to(ping * 1.3, 0.1));
        r.ping_std = Some(round_to(ping * 0.1, 0.01));
        r.ping_loss = Some(0.0);
        r.cqi = Some((1.0 + 0.7 * snr).round().clamp(1.0, 15.0) as i64);
        r.snr = Some(round_to(snr + gauss(&mut rng, 0.3), 0.1));
        r.rsrp = Some(round_to(rsrp, 1.0));
        r.rsrq = Some(round_to(rsrq, 0.5));
        r.rssi = Some(round_to(rsrp + 25.0 + gauss(&mut rng, 1.0), 1.0));
        if config.network_mode == NetworkMode::Nr {
            r.nrx_rsrp = Some(round_to(rsrp + 3.0 + gauss(&mut rng, 2.0), 1.0));
            r.nrx_rsrq = Some(round_to(rsrq + gauss(&mut rng, 1.0), 0.5));
        }
        records.push(r);
    }
    let mut ds = SessionDataset::from_records(records, config.network_mode, Application::Downloading, Mobility::Static);
    ds.source_files.push(format!("synthetic-seed{}", config.seed));
    ds
}
