use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rd::{compute_rd_map, RdMap, Window};
use crate::synth::{calibrate_target, draw_target, synthesize_cube, RadarConfig, SpreadBounds, TargetSpec, TargetTruth};

/// Random extended-target scenes for Monte Carlo work.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSampler {
    pub radar: RadarConfig,
    pub window: Window,
    pub noise_sigma: f64,
    /// Uniform nominal range interval in m.
    pub range_m: (f64, f64),
    /// Uniform nominal velocity interval in m/s.
    pub velocity_mps: (f64, f64),
    pub scatterer_count: (usize, usize),
    pub spread: SpreadBounds,
    pub doppler_dither_mps: f64,
}

impl Default for SceneSampler {
    fn default() -> Self {
        let t = TargetSpec::new(0.0, 0.0);
        Self {
            radar: RadarConfig::default(),
            window: Window::default(),
            noise_sigma: 1.0,
            range_m: (15.0, 65.0),
            velocity_mps: (-15.0, 15.0),
            scatterer_count: t.scatterer_count,
            spread: t.spread,
            doppler_dither_mps: t.doppler_dither_mps,
        }
    }
}

impl SceneSampler {
    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::param(format!("noise sigma must be positive, got {}", self.noise_sigma)));
        }
        let (r0, r1) = self.range_m;
        let (v0, v1) = self.velocity_mps;
        if !(r0 <= r1 && v0 <= v1) {
            return Err(Error::param("placement intervals must be ordered (lo, hi)"));
        }
        let r_margin = self.spread.range_m;
        let v_margin = self.spread.velocity_mps + self.doppler_dither_mps / 2.0;
        if r0 - r_margin < 0.0 || r1 + r_margin >= self.radar.max_range_m() {
            return Err(Error::param(format!(
                "range interval [{r0}, {r1}] m plus spread leaves [0, {:.3}) m",
                self.radar.max_range_m()
            )));
        }
        let v_max = self.radar.max_velocity_mps();
        if v0 - v_margin < -v_max || v1 + v_margin >= v_max {
            return Err(Error::param(format!("velocity interval [{v0}, {v1}] m/s plus spread leaves ±{v_max:.3} m/s")));
        }
        Ok(())
    }

    pub fn position<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let uniform = |rng: &mut R, (lo, hi): (f64, f64)| if hi > lo { rng.random_range(lo..hi) } else { lo };
        let r = uniform(rng, self.range_m);
        (r, uniform(rng, self.velocity_mps))
    }

    pub fn spec(&self, range_m: f64, velocity_mps: f64) -> TargetSpec {
        TargetSpec {
            scatterer_count: self.scatterer_count,
            spread: self.spread,
            doppler_dither_mps: self.doppler_dither_mps,
            ..TargetSpec::new(range_m, velocity_mps)
        }
    }

    /// Draws an extended target and calibrates its RD peak SNR.
    pub fn target<R: Rng + ?Sized>(&self, rng: &mut R, range_m: f64, velocity_mps: f64, snr_db: f64) -> Result<TargetTruth> {
        let t = draw_target(rng, &self.spec(range_m, velocity_mps))?;
        calibrate_target(&self.radar, self.window, &t, self.noise_sigma, snr_db)
    }

    pub fn render<R: Rng + ?Sized>(&self, truths: &[TargetTruth], rng: &mut R) -> Result<RdMap> {
        compute_rd_map(&synthesize_cube(&self.radar, truths, self.noise_sigma, rng)?, self.window)
    }

    pub fn truth_bin(&self, t: &TargetTruth) -> (usize, usize) {
        self.radar.bin_of(t.nominal_range_m, t.nominal_velocity_mps)
    }
}
