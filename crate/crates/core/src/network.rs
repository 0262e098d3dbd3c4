//! Physical layer of the star network: parameters, link transmissivity,
//! frame timing and the background-yield models.

use serde::Deserialize;

use crate::decoy::DecoyInputs;
use crate::error::{Error, Result};

/// Network-wide physical and timing parameters.
///
/// Field names double as configuration keys. Missing keys take the nominal
/// values returned by [`SystemParams::table_one`].
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    /// Mean photon number per signal pulse.
    pub mu: f64,
    /// Dark count rate, counts/ns.
    pub gamma_dc: f64,
    /// Classical-band crosstalk rate, counts/ns/GHz.
    pub gamma_xtalk: f64,
    /// Receiver optical bandwidth, GHz.
    pub b_opt: f64,
    /// Detector quantum efficiency.
    pub eta_d: f64,
    /// Coupling and path loss in dB, star splitting excluded.
    pub path_loss_db: f64,
    /// Star coupler size N.
    pub n_star: usize,
    /// Chips per frame, equal to the code length.
    pub n_chips: usize,
    /// Pulse width, ns.
    pub tau_p: f64,
    /// Detector gate width, ns.
    pub tau_d: f64,
    /// Chip period, ns.
    pub tau_c: f64,
    /// Frame period, ns.
    pub frame_t: f64,
    /// Detector dead time, ns.
    pub dead_time: f64,
    /// Error-correction inefficiency.
    pub f_ec: f64,
    /// Misalignment error probability.
    pub e_d: f64,
    /// Error probability of a background click.
    pub e0: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::table_one()
    }
}

/// Names accepted by [`SystemParams::set_field`].
pub const PARAM_FIELDS: &[&str] = &[
    "mu",
    "gamma_dc",
    "gamma_xtalk",
    "b_opt",
    "eta_d",
    "path_loss_db",
    "n_star",
    "n_chips",
    "tau_p",
    "tau_d",
    "tau_c",
    "frame_t",
    "dead_time",
    "f_ec",
    "e_d",
    "e0",
];

impl SystemParams {
    /// Nominal metro-network values: 16-user star, 1 ns chips, 16-chip frame.
    pub fn table_one() -> Self {
        Self {
            mu: 0.48,
            gamma_dc: 1e-7,
            gamma_xtalk: 8e-8,
            b_opt: 1.0,
            eta_d: 0.3,
            path_loss_db: 6.0,
            n_star: 16,
            n_chips: 16,
            tau_p: 1.0,
            tau_d: 1.0,
            tau_c: 1.0,
            frame_t: 16.0,
            dead_time: 0.0,
            f_ec: 1.22,
            e_d: 0.033,
            e0: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("gamma_dc", self.gamma_dc),
            ("gamma_xtalk", self.gamma_xtalk),
            ("b_opt", self.b_opt),
            ("path_loss_db", self.path_loss_db),
            ("dead_time", self.dead_time),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        let positive = [
            ("mu", self.mu),
            ("tau_p", self.tau_p),
            ("tau_d", self.tau_d),
            ("tau_c", self.tau_c),
            ("frame_t", self.frame_t),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [("eta_d", self.eta_d), ("e0", self.e0)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        if !(0.0..=0.5).contains(&self.e_d) {
            return Err(Error::param("e_d", format!("must lie in [0, 0.5], got {}", self.e_d)));
        }
        if !(self.f_ec.is_finite() && self.f_ec >= 1.0) {
            return Err(Error::param("f_ec", format!("must be >= 1, got {}", self.f_ec)));
        }
        if self.n_star < 2 {
            return Err(Error::param("n_star", format!("must be >= 2, got {}", self.n_star)));
        }
        if self.n_chips < 1 {
            return Err(Error::param("n_chips", "must be >= 1"));
        }
        if self.tau_p > self.tau_c {
            return Err(Error::param(
                "tau_p",
                format!("tau_p = {} exceeds tau_c = {}", self.tau_p, self.tau_c),
            ));
        }
        if self.tau_d > self.tau_c {
            return Err(Error::param(
                "tau_d",
                format!("tau_d = {} exceeds tau_c = {}", self.tau_d, self.tau_c),
            ));
        }
        // relative slack for frame periods computed as n_chips * tau_c
        let frame_min = self.n_chips as f64 * self.tau_c * (1.0 - 1e-12);
        if self.frame_t < frame_min {
            return Err(Error::param(
                "frame_t",
                format!(
                    "frame_t = {} is shorter than n_chips * tau_c = {}",
                    self.frame_t,
                    self.n_chips as f64 * self.tau_c
                ),
            ));
        }
        if self.frame_t < self.dead_time {
            return Err(Error::param(
                "frame_t",
                format!(
                    "frame_t = {} is shorter than dead_time = {}",
                    self.frame_t, self.dead_time
                ),
            ));
        }
        Ok(())
    }

    /// Inputs of the single-link bound for a given transmissivity and yield.
    pub fn decoy_inputs(&self, eta: f64, y0: f64) -> DecoyInputs {
        DecoyInputs {
            mu: self.mu,
            eta,
            y0,
            e_d: self.e_d,
            e0: self.e0,
            f_ec: self.f_ec,
        }
    }

    /// Sets a field by its configuration name. Integer fields require an
    /// integral value.
    pub fn set_field(&mut self, name: &str, value: f64) -> Result<()> {
        let as_count = |v: f64| -> Result<usize> {
            if v.fract() != 0.0 || v < 0.0 || !v.is_finite() {
                return Err(Error::param(name, format!("expects a non-negative integer, got {v}")));
            }
            Ok(v as usize)
        };
        match name {
            "mu" => self.mu = value,
            "gamma_dc" => self.gamma_dc = value,
            "gamma_xtalk" => self.gamma_xtalk = value,
            "b_opt" => self.b_opt = value,
            "eta_d" => self.eta_d = value,
            "path_loss_db" => self.path_loss_db = value,
            "n_star" => self.n_star = as_count(value)?,
            "n_chips" => self.n_chips = as_count(value)?,
            "tau_p" => self.tau_p = value,
            "tau_d" => self.tau_d = value,
            "tau_c" => self.tau_c = value,
            "frame_t" => self.frame_t = value,
            "dead_time" => self.dead_time = value,
            "f_ec" => self.f_ec = value,
            "e_d" => self.e_d = value,
            "e0" => self.e0 = value,
            _ => return Err(Error::param(name, "unknown parameter")),
        }
        Ok(())
    }
}

/// Wavelength layer of the hybrid network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WdmParams {
    /// Number of wavelength channels W.
    pub n_channels: usize,
    /// Inter-channel crosstalk power ratio.
    pub alpha_xt: f64,
}

impl WdmParams {
    pub fn new(n_channels: usize, alpha_xt: f64) -> Result<Self> {
        let w = Self { n_channels, alpha_xt };
        w.validate()?;
        Ok(w)
    }

    /// Crosstalk factor from a channel isolation given in dB.
    pub fn alpha_from_isolation_db(db: f64) -> f64 {
        10f64.powf(-db / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_channels < 1 {
            return Err(Error::param("n_channels", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.alpha_xt) {
            return Err(Error::param(
                "alpha_xt",
                format!("must lie in [0, 1], got {}", self.alpha_xt),
            ));
        }
        Ok(())
    }
}

/// Total link transmissivity: detector efficiency, path loss and the 1/N
/// star splitting.
pub fn link_transmissivity(p: &SystemParams) -> f64 {
    p.eta_d * 10f64.powf(-p.path_loss_db / 10.0) / p.n_star as f64
}

fn check_yield(model: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::YieldOutOfRange { model, value })
    }
}

/// Background yield of a TDMA slot: dark counts plus classical crosstalk
/// collected over one gate.
pub fn y_tdma(p: &SystemParams) -> Result<f64> {
    check_yield("TDMA", (p.gamma_dc + p.eta_d * p.gamma_xtalk * p.b_opt) * p.tau_d)
}

/// Background yield with `m` chip-synchronous interferers using weight-`w`
/// codes.
pub fn y_cdma(p: &SystemParams, eta: f64, m: usize, w: usize) -> Result<f64> {
    y_cdma_over(y_tdma(p)?, eta, p.mu, m, w)
}

/// [`y_cdma`] on top of an arbitrary base yield (e.g. the WDM-modified one).
pub(crate) fn y_cdma_over(base: f64, eta: f64, mu: f64, m: usize, w: usize) -> Result<f64> {
    if w < 1 {
        return Err(Error::Domain("code weight must be >= 1".into()));
    }
    check_yield("CDMA", base + m as f64 * eta * mu / w as f64)
}

/// Background yield of a TDMA slot when `n_channels - 1` other wavelengths
/// leak into it.
pub fn y_wdm(p: &SystemParams, eta: f64, wdm: &WdmParams) -> Result<f64> {
    wdm.validate()?;
    check_yield(
        "WDM",
        y_tdma(p)? + (wdm.n_channels - 1) as f64 * eta * p.mu * wdm.alpha_xt,
    )
}

/// Frame timing derived from a detector's resolution and dead time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub tau_p: f64,
    pub tau_c: f64,
    pub tau_d: f64,
    pub b_opt: f64,
    pub frame_t: f64,
    pub n_chips: usize,
}

impl Timing {
    pub fn apply(&self, p: &mut SystemParams) {
        p.tau_p = self.tau_p;
        p.tau_c = self.tau_c;
        p.tau_d = self.tau_d;
        p.b_opt = self.b_opt;
        p.frame_t = self.frame_t;
        p.n_chips = self.n_chips;
    }
}

/// Pulse, chip and gate all equal the detector resolution; the optical
/// bandwidth matches the pulse; the frame is long enough for both the dead
/// time and one chip per star port.
pub fn prescribe_timing(tau_detector: f64, dead_time: f64, n_star: usize) -> Result<Timing> {
    if !(tau_detector.is_finite() && tau_detector > 0.0) {
        return Err(Error::Domain(format!(
            "detector resolution must be > 0, got {tau_detector}"
        )));
    }
    let frame_t = dead_time.max(n_star as f64 * tau_detector);
    // guard against 16.000000000000004 style ratios
    let n_chips = ((frame_t / tau_detector) * (1.0 - 1e-12)).ceil() as usize;
    Ok(Timing {
        tau_p: tau_detector,
        tau_c: tau_detector,
        tau_d: tau_detector,
        b_opt: 1.0 / tau_detector,
        frame_t,
        n_chips,
    })
}
