//! Asymptotic decoy-state BB84 key-rate lower bound for a single link.
//!
//! Everything here is a pure function of [`DecoyInputs`]. The bound is
//! returned per transmitted pulse and is deliberately left unclamped so
//! callers can see the negative (no-key) regime; the `max(., 0)` lives in the
//! multiple-access layer.

use crate::error::{Error, Result};

/// Inputs of the per-pulse bound for one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyInputs {
    /// Mean photon number of a signal pulse.
    pub mu: f64,
    /// Total link transmissivity, detector efficiency included.
    pub eta: f64,
    /// Vacuum yield: click probability per gated pulse with no signal photon.
    pub y0: f64,
    /// Misalignment error probability.
    pub e_d: f64,
    /// Error probability of a background click.
    pub e0: f64,
    /// Error-correction inefficiency, taken as a constant.
    pub f_ec: f64,
}

impl DecoyInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::param("mu", format!("must be > 0, got {}", self.mu)));
        }
        for (name, v) in [("eta", self.eta), ("y0", self.y0), ("e0", self.e0)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        if !(0.0..=0.5).contains(&self.e_d) {
            return Err(Error::param(
                "e_d",
                format!("must lie in [0, 0.5], got {}", self.e_d),
            ));
        }
        if !(self.f_ec.is_finite() && self.f_ec >= 1.0) {
            return Err(Error::param(
                "f_ec",
                format!("must be >= 1, got {}", self.f_ec),
            ));
        }
        Ok(())
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }
}

/// Intermediate quantities of the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyBreakdown {
    /// Overall gain.
    pub q_mu: f64,
    /// Overall QBER.
    pub e_mu: f64,
    /// Single-photon gain.
    pub q1: f64,
    /// Single-photon error rate.
    pub e1: f64,
    /// Single-photon yield.
    pub y1: f64,
    /// Key bits per pulse, before clamping at zero.
    pub p_y0: f64,
}

/// Binary Shannon entropy in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "binary entropy argument {p} is not a probability"
        )));
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}

/// Gains, error rates and the resulting per-pulse key bits.
pub fn decoy_breakdown(input: &DecoyInputs) -> Result<DecoyBreakdown> {
    input.validate()?;
    let DecoyInputs {
        mu,
        eta,
        y0,
        e_d,
        e0,
        f_ec,
    } = *input;

    // 1 - e^{-eta mu}, accurate for small eta*mu
    let detect = -(-eta * mu).exp_m1();
    let q_mu = y0 + (1.0 - y0) * detect;
    if q_mu <= 0.0 {
        return Err(Error::DegenerateLink(
            "overall gain is zero (no background and no signal)".into(),
        ));
    }
    let e_mu = ((e0 * y0 + e_d * detect) / q_mu).min(1.0);

    let y1 = y0 + eta * (1.0 - y0);
    if y1 <= 0.0 {
        return Err(Error::DegenerateLink("single-photon yield is zero".into()));
    }
    let q1 = y1 * mu * (-mu).exp();
    let e1 = ((y0 / 2.0 + e_d * eta) / y1).min(1.0);

    let p_y0 = 0.5 * (-f_ec * q_mu * binary_entropy(e_mu)? + q1 * (1.0 - binary_entropy(e1)?));

    Ok(DecoyBreakdown {
        q_mu,
        e_mu,
        q1,
        e1,
        y1,
        p_y0,
    })
}

/// Lower bound on secret key bits per transmitted pulse, unclamped.
pub fn key_bits_per_pulse(input: &DecoyInputs) -> Result<f64> {
    Ok(decoy_breakdown(input)?.p_y0)
}

const MU_GRID_STEP: f64 = 0.005;

/// Mean photon number maximising [`key_bits_per_pulse`] over `[lo, hi]`.
///
/// A uniform grid with step 0.005 locates the best cell, then golden-section
/// search refines inside the neighbouring cells. Fully deterministic.
pub fn optimize_mu(input: &DecoyInputs, lo: f64, hi: f64) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi <= 2.0 && lo < hi) {
        return Err(Error::Domain(format!(
            "mu search range [{lo}, {hi}] must be a non-empty interval inside (0, 2]"
        )));
    }
    let eval = |mu: f64| key_bits_per_pulse(&input.with_mu(mu));

    let cells = ((hi - lo) / MU_GRID_STEP).ceil() as usize;
    let mut best_mu = lo;
    let mut best = eval(lo)?;
    for i in 1..=cells {
        let mu = (lo + i as f64 * MU_GRID_STEP).min(hi);
        let v = eval(mu)?;
        if v > best {
            best = v;
            best_mu = mu;
        }
    }

    let mut a = (best_mu - MU_GRID_STEP).max(lo);
    let mut b = (best_mu + MU_GRID_STEP).min(hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    for _ in 0..60 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d)?;
        }
    }
    let refined = 0.5 * (a + b);
    // a flat or noisy objective can leave the refinement worse than the grid
    if eval(refined)? >= best {
        Ok(refined)
    } else {
        Ok(best_mu)
    }
}
