//! FMCW data-cube synthesis for scenes of extended targets in complex AWGN.
//!
//! A target is a cloud of point scatterers around a nominal range and radial
//! velocity. Each scatterer contributes one 2D complex exponential to the
//! down-converted cube: a beat frequency `2μR/c` along fast time and a Doppler
//! phase progression `2π f_D t_l`, `f_D = 2 v f₀ / c`, along slow time.
//! Range-Doppler coupling inside a chirp is ignored.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rd::{compute_rd_map, Window};
use crate::rng::{self, ChaCha8Rng, Purpose};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// FMCW waveform and frame parameters. Defaults are the 77 GHz automotive
/// configuration used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarConfig {
    pub carrier_freq_hz: f64,
    pub chirp_slope_hz_per_s: f64,
    pub chirp_repeat_interval_s: f64,
    pub sample_rate_hz: f64,
    pub fast_time_samples: usize,
    pub chirps_per_frame: usize,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self {
            carrier_freq_hz: 77e9,
            chirp_slope_hz_per_s: 16.67e12,
            chirp_repeat_interval_s: 50e-6,
            sample_rate_hz: 10e6,
            fast_time_samples: 256,
            chirps_per_frame: 128,
        }
    }
}

impl RadarConfig {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("chirp_slope_hz_per_s", self.chirp_slope_hz_per_s),
            ("chirp_repeat_interval_s", self.chirp_repeat_interval_s),
            ("sample_rate_hz", self.sample_rate_hz),
        ];
        for (name, v) in reals {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.fast_time_samples < 2 || self.chirps_per_frame < 2 {
            return Err(Error::param(format!(
                "need at least 2x2 samples per frame, got {}x{}",
                self.fast_time_samples, self.chirps_per_frame
            )));
        }
        let dr = self.range_resolution_m();
        if !(dr > 0.0 && dr.is_finite()) {
            return Err(Error::param(format!("range resolution {dr} is not finite and positive")));
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    /// Range spanned by one fast-time DFT bin, `c·f_s / (2·μ·N)`.
    pub fn range_resolution_m(&self) -> f64 {
        SPEED_OF_LIGHT * self.sample_rate_hz
            / (2.0 * self.chirp_slope_hz_per_s * self.fast_time_samples as f64)
    }

    /// Velocity spanned by one slow-time DFT bin, `λ / (2·L·T_cri)`.
    pub fn velocity_resolution_mps(&self) -> f64 {
        self.wavelength_m() / (2.0 * self.chirps_per_frame as f64 * self.chirp_repeat_interval_s)
    }

    /// Complex sampling: beat frequencies in `[0, f_s)` are unambiguous.
    pub fn max_range_m(&self) -> f64 {
        SPEED_OF_LIGHT * self.sample_rate_hz / (2.0 * self.chirp_slope_hz_per_s)
    }

    /// Velocities in `[-v_max, v_max)` are unambiguous.
    pub fn max_velocity_mps(&self) -> f64 {
        self.wavelength_m() / (4.0 * self.chirp_repeat_interval_s)
    }

    /// Doppler bin holding zero velocity after centring.
    pub fn zero_doppler_bin(&self) -> usize {
        self.chirps_per_frame / 2
    }

    /// Nearest (range, doppler) map bin for a range and velocity.
    pub fn bin_of(&self, range_m: f64, velocity_mps: f64) -> (usize, usize) {
        let r = (range_m / self.range_resolution_m()).round();
        let d = self.zero_doppler_bin() as f64 + (velocity_mps / self.velocity_resolution_mps()).round();
        let r = r.clamp(0.0, (self.fast_time_samples - 1) as f64) as usize;
        let d = d.clamp(0.0, (self.chirps_per_frame - 1) as f64) as usize;
        (r, d)
    }

    pub fn range_of_bin(&self, range_bin: usize) -> f64 {
        range_bin as f64 * self.range_resolution_m()
    }

    pub fn velocity_of_bin(&self, doppler_bin: usize) -> f64 {
        (doppler_bin as f64 - self.zero_doppler_bin() as f64) * self.velocity_resolution_mps()
    }
}

/// One point scatterer of an extended target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    /// Received power, linear units.
    pub power: f64,
    pub range_offset_m: f64,
    pub velocity_offset_mps: f64,
    pub phase_rad: f64,
}

/// Spatial and Doppler extent of the scatterer cloud about the nominal
/// position: offsets are uniform in `±range_m` and `±velocity_mps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpreadBounds {
    pub range_m: f64,
    pub velocity_mps: f64,
}

impl Default for SpreadBounds {
    fn default() -> Self {
        Self { range_m: 1.6, velocity_mps: 1.065 }
    }
}

fn default_count() -> (usize, usize) {
    (50, 100)
}

fn default_dither() -> f64 {
    0.3
}

fn default_rcs() -> f64 {
    20.0
}

/// Recipe for drawing one extended target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub range_m: f64,
    pub velocity_mps: f64,
    /// Sets the mean total scatterer power, `10^(rcs/10)`, before any SNR
    /// calibration.
    #[serde(default = "default_rcs")]
    pub rcs_dbsm: f64,
    /// RD-map peak SNR to calibrate to; `None` keeps the RCS budget as is.
    #[serde(default)]
    pub snr_db: Option<f64>,
    /// Inclusive bounds on the number of scatterers.
    #[serde(default = "default_count")]
    pub scatterer_count: (usize, usize),
    #[serde(default)]
    pub spread: SpreadBounds,
    /// Width of the uniform per-dwell velocity offset shared by all
    /// scatterers of the target.
    #[serde(default = "default_dither")]
    pub doppler_dither_mps: f64,
}

impl TargetSpec {
    pub fn new(range_m: f64, velocity_mps: f64) -> Self {
        Self {
            range_m,
            velocity_mps,
            rcs_dbsm: default_rcs(),
            snr_db: None,
            scatterer_count: default_count(),
            spread: SpreadBounds::default(),
            doppler_dither_mps: default_dither(),
        }
    }

    pub fn with_snr(mut self, snr_db: f64) -> Self {
        self.snr_db = Some(snr_db);
        self
    }

    /// A single scatterer at the nominal position with no Doppler dither.
    pub fn point(range_m: f64, velocity_mps: f64) -> Self {
        Self {
            scatterer_count: (1, 1),
            spread: SpreadBounds { range_m: 0.0, velocity_mps: 0.0 },
            doppler_dither_mps: 0.0,
            ..Self::new(range_m, velocity_mps)
        }
    }
}

/// Ground truth for one realised extended target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetTruth {
    pub nominal_range_m: f64,
    pub nominal_velocity_mps: f64,
    pub rcs_dbsm: f64,
    /// Calibrated RD-map peak SNR, if calibration was applied.
    pub snr_db: Option<f64>,
    /// Shared per-dwell velocity offset added to every scatterer.
    pub velocity_dither_mps: f64,
    pub scatterers: Vec<Scatterer>,
}

impl TargetTruth {
    pub fn total_power(&self) -> f64 {
        self.scatterers.iter().map(|s| s.power).sum()
    }

    fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.scatterers {
            s.power *= factor;
        }
        out
    }
}

/// Complex down-converted samples, fast time × slow time, row-major
/// (index `n * chirps_per_frame + l`).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexCube {
    pub samples: Vec<Complex64>,
    pub config: RadarConfig,
}

impl ComplexCube {
    pub fn zeros(config: RadarConfig) -> Self {
        let n = config.fast_time_samples * config.chirps_per_frame;
        Self { samples: vec![Complex64::new(0.0, 0.0); n], config }
    }

    pub fn fast_time_samples(&self) -> usize {
        self.config.fast_time_samples
    }

    pub fn chirps_per_frame(&self) -> usize {
        self.config.chirps_per_frame
    }

    pub fn at(&self, fast: usize, chirp: usize) -> Complex64 {
        self.samples[fast * self.config.chirps_per_frame + chirp]
    }

    pub fn add_assign(&mut self, other: &ComplexCube) {
        for (a, b) in self.samples.iter_mut().zip(&other.samples) {
            *a += *b;
        }
    }
}

/// Draws `n ~ U{count_min..=count_max}` scatterers with i.i.d. χ²₄ powers
/// (Swerling-3) scaled so the expected total power is `10^(rcs_dbsm/10)`,
/// and offsets uniform inside the spread bounds. All scatterers share one
/// uniform residual phase.
pub fn draw_swerling3_scatterers<R: Rng + ?Sized>(
    rng: &mut R,
    spec: &TargetSpec,
) -> Result<Vec<Scatterer>> {
    let (lo, hi) = spec.scatterer_count;
    if lo < 1 || hi < lo || hi > 10_000 {
        return Err(Error::param(format!("scatterer count range [{lo}, {hi}] must lie within [1, 10000]")));
    }
    let SpreadBounds { range_m, velocity_mps } = spec.spread;
    if !(range_m >= 0.0 && range_m.is_finite() && velocity_mps >= 0.0 && velocity_mps.is_finite()) {
        return Err(Error::param(format!("spread bounds must be non-negative, got ±{range_m} m, ±{velocity_mps} m/s")));
    }
    if !spec.rcs_dbsm.is_finite() {
        return Err(Error::param("rcs_dbsm must be finite"));
    }

    let count = rng.random_range(lo..=hi);
    let chi2 = ChiSquared::new(4.0).expect("4 degrees of freedom");
    let scale = 10f64.powf(spec.rcs_dbsm / 10.0) / (4.0 * count as f64);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);

    let scatterers = (0..count)
        .map(|_| {
            let power = chi2.sample(rng) * scale;
            Scatterer {
                power,
                range_offset_m: symmetric(rng, range_m),
                velocity_offset_mps: symmetric(rng, velocity_mps),
                phase_rad: phase,
            }
        })
        .collect();
    Ok(scatterers)
}

fn symmetric<R: Rng + ?Sized>(rng: &mut R, half_width: f64) -> f64 {
    if half_width > 0.0 {
        rng.random_range(-half_width..=half_width)
    } else {
        0.0
    }
}

/// Realises one target: scatterer cloud plus the shared Doppler dither.
/// The returned truth is uncalibrated (`snr_db` is `None`).
pub fn draw_target<R: Rng + ?Sized>(rng: &mut R, spec: &TargetSpec) -> Result<TargetTruth> {
    if !(spec.doppler_dither_mps >= 0.0 && spec.doppler_dither_mps.is_finite()) {
        return Err(Error::param("doppler_dither_mps must be non-negative"));
    }
    let scatterers = draw_swerling3_scatterers(rng, spec)?;
    let velocity_dither_mps = symmetric(rng, spec.doppler_dither_mps / 2.0);
    Ok(TargetTruth {
        nominal_range_m: spec.range_m,
        nominal_velocity_mps: spec.velocity_mps,
        rcs_dbsm: spec.rcs_dbsm,
        snr_db: None,
        velocity_dither_mps,
        scatterers,
    })
}

fn check_target(config: &RadarConfig, target: &TargetTruth) -> Result<()> {
    let r_max = config.max_range_m();
    let v_max = config.max_velocity_mps();
    if !(target.nominal_range_m >= 0.0 && target.nominal_range_m < r_max) {
        return Err(Error::param(format!(
            "target range {} m outside unambiguous interval [0, {r_max:.3}) m",
            target.nominal_range_m
        )));
    }
    if !(target.nominal_velocity_mps.abs() < v_max) {
        return Err(Error::param(format!(
            "target velocity {} m/s outside unambiguous interval ±{v_max:.3} m/s",
            target.nominal_velocity_mps
        )));
    }
    for s in &target.scatterers {
        let r = target.nominal_range_m + s.range_offset_m;
        let v = target.nominal_velocity_mps + target.velocity_dither_mps + s.velocity_offset_mps;
        if !(r >= 0.0 && r < r_max) || !(v >= -v_max && v < v_max) {
            return Err(Error::param(format!(
                "scatterer at {r:.3} m, {v:.3} m/s falls outside the unambiguous region"
            )));
        }
        if !(s.power >= 0.0 && s.power.is_finite()) {
            return Err(Error::param(format!("scatterer power {} must be finite and >= 0", s.power)));
        }
    }
    Ok(())
}

/// Noise-free cube for the given targets.
pub fn signal_cube(config: &RadarConfig, targets: &[TargetTruth]) -> Result<ComplexCube> {
    config.validate()?;
    for t in targets {
        check_target(config, t)?;
    }
    let n_fast = config.fast_time_samples;
    let n_slow = config.chirps_per_frame;
    let mut cube = ComplexCube::zeros(*config);
    let mut range_phasor = vec![Complex64::new(0.0, 0.0); n_fast];
    let mut doppler_phasor = vec![Complex64::new(0.0, 0.0); n_slow];
    let tau = std::f64::consts::TAU;

    for t in targets {
        for s in &t.scatterers {
            if s.power == 0.0 {
                continue;
            }
            let amp = s.power.sqrt();
            let f_range = 2.0 * config.chirp_slope_hz_per_s * (t.nominal_range_m + s.range_offset_m) / SPEED_OF_LIGHT;
            let velocity = t.nominal_velocity_mps + t.velocity_dither_mps + s.velocity_offset_mps;
            let f_doppler = 2.0 * velocity / config.wavelength_m();
            for (n, p) in range_phasor.iter_mut().enumerate() {
                let phase = tau * f_range * n as f64 / config.sample_rate_hz + s.phase_rad;
                *p = Complex64::from_polar(amp, phase);
            }
            for (l, p) in doppler_phasor.iter_mut().enumerate() {
                *p = Complex64::from_polar(1.0, tau * f_doppler * l as f64 * config.chirp_repeat_interval_s);
            }
            for (row, r) in cube.samples.chunks_exact_mut(n_slow).zip(&range_phasor) {
                for (y, d) in row.iter_mut().zip(&doppler_phasor) {
                    *y += r * d;
                }
            }
        }
    }
    Ok(cube)
}

/// Adds circularly-symmetric complex Gaussian noise whose real and imaginary
/// parts each have standard deviation `sigma`.
pub fn add_noise<R: Rng + ?Sized>(cube: &mut ComplexCube, sigma: f64, rng: &mut R) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("noise sigma must be finite and >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(());
    }
    for y in &mut cube.samples {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *y += Complex64::new(sigma * re, sigma * im);
    }
    Ok(())
}

/// Targets plus AWGN. Deterministic for a given generator state.
pub fn synthesize_cube<R: Rng + ?Sized>(
    config: &RadarConfig,
    targets: &[TargetTruth],
    noise_sigma: f64,
    rng: &mut R,
) -> Result<ComplexCube> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::param(format!("noise sigma must be finite and >= 0, got {noise_sigma}")));
    }
    let mut cube = signal_cube(config, targets)?;
    add_noise(&mut cube, noise_sigma, rng)?;
    Ok(cube)
}

/// Expected RD-map power of a noise-only cell: `2σ² · Σw_fast² · Σw_slow²`
/// for the unnormalised 2D DFT.
pub fn noise_floor(config: &RadarConfig, window: Window, noise_sigma: f64) -> f64 {
    let e_fast: f64 = window.coefficients(config.fast_time_samples).iter().map(|w| w * w).sum();
    let e_slow: f64 = window.coefficients(config.chirps_per_frame).iter().map(|w| w * w).sum();
    2.0 * noise_sigma * noise_sigma * e_fast * e_slow
}

/// Scales one target's scatterer powers so that its noise-free RD-map peak
/// sits `snr_db` above the mean noise floor. `-inf` yields zero power.
pub fn calibrate_target(
    config: &RadarConfig,
    window: Window,
    target: &TargetTruth,
    noise_sigma: f64,
    snr_db: f64,
) -> Result<TargetTruth> {
    if !(noise_sigma > 0.0 && noise_sigma.is_finite()) {
        return Err(Error::param(format!("SNR calibration needs noise sigma > 0, got {noise_sigma}")));
    }
    if snr_db.is_nan() || snr_db == f64::INFINITY {
        return Err(Error::param(format!("desired SNR must be finite or -inf, got {snr_db}")));
    }
    let mut out = if snr_db == f64::NEG_INFINITY {
        target.scaled(0.0)
    } else {
        let reference = compute_rd_map(&signal_cube(config, std::slice::from_ref(target))?, window)?;
        let peak = reference.max();
        if !(peak > 0.0) {
            return Err(Error::param("target has zero power; cannot calibrate SNR"));
        }
        let wanted = 10f64.powf(snr_db / 10.0) * noise_floor(config, window, noise_sigma);
        target.scaled(wanted / peak)
    };
    out.snr_db = Some(snr_db);
    Ok(out)
}

/// Calibrates every target independently to the same peak SNR.
pub fn scene_snr_calibrate(
    config: &RadarConfig,
    window: Window,
    targets: &[TargetTruth],
    noise_sigma: f64,
    desired_snr_db: f64,
) -> Result<Vec<TargetTruth>> {
    targets
        .iter()
        .map(|t| calibrate_target(config, window, t, noise_sigma, desired_snr_db))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Standard deviation of each quadrature component.
    pub sigma: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { sigma: 1.0 }
    }
}

/// JSON scene description: radar block, targets, noise and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    #[serde(default)]
    pub radar: RadarConfig,
    #[serde(default)]
    pub targets: Vec<TargetSpec>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub window: Window,
}

impl Scene {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Draws and calibrates the targets, then synthesises frame `frame`.
    /// Frame `k` uses stream `(Scene, 0, k)` of the scene seed.
    pub fn realize(&self, frame: u32) -> Result<(Vec<TargetTruth>, ComplexCube)> {
        let mut rng: ChaCha8Rng = rng::substream(self.seed, rng::stream_id(Purpose::Scene, 0, frame));
        let mut truths = Vec::with_capacity(self.targets.len());
        for spec in &self.targets {
            let t = draw_target(&mut rng, spec)?;
            let t = match spec.snr_db {
                Some(snr) => calibrate_target(&self.radar, self.window, &t, self.noise.sigma, snr)?,
                None => t,
            };
            truths.push(t);
        }
        let cube = synthesize_cube(&self.radar, &truths, self.noise.sigma, &mut rng)?;
        Ok((truths, cube))
    }
}
