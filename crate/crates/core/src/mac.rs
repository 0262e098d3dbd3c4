//! Effective per-user and network key rates for each multiple-access scheme.
//!
//! All schemes share one structure: a background yield for the interference
//! free case (TDMA, or its WDM-modified version), a conditional rate given
//! `m` interferers, and a binomial average over `m` with the scheme's
//! collision probability. TDMA is the degenerate case with no interferers.

use std::fmt;
use std::str::FromStr;

use crate::decoy::{decoy_breakdown, DecoyBreakdown};
use crate::error::{Error, Result};
use crate::network::{link_transmissivity, y_cdma_over, y_tdma, y_wdm, SystemParams, WdmParams};
use crate::ooc::{code_capacity, collision_probability};

/// Nanoseconds per second; rates per ns frame become bits/s.
const NS_PER_S: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Tdma,
    Cdma { weight: usize },
    Lbs { listen_periods: u64 },
}

/// A multiple-access scheme, optionally running on each wavelength of a
/// WDM hybrid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    pub wdm: Option<WdmParams>,
}

impl SchemeSpec {
    pub fn tdma() -> Self {
        Self {
            kind: SchemeKind::Tdma,
            wdm: None,
        }
    }

    pub fn cdma(weight: usize) -> Self {
        Self {
            kind: SchemeKind::Cdma { weight },
            wdm: None,
        }
    }

    pub fn lbs(listen_periods: u64) -> Self {
        Self {
            kind: SchemeKind::Lbs { listen_periods },
            wdm: None,
        }
    }

    pub fn with_wdm(self, wdm: WdmParams) -> Self {
        Self {
            wdm: Some(wdm),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let SchemeKind::Cdma { weight: 0 } = self.kind {
            return Err(Error::Domain("CDMA code weight must be >= 1".into()));
        }
        if let Some(w) = &self.wdm {
            w.validate()?;
        }
        Ok(())
    }

    /// Code weight seen by the receiver: LBS always uses single-pulse codes.
    pub fn code_weight(&self) -> usize {
        match self.kind {
            SchemeKind::Cdma { weight } => weight,
            _ => 1,
        }
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(w) = &self.wdm {
            write!(f, "wdm:{}:{}:", w.n_channels, w.alpha_xt)?;
        }
        match self.kind {
            SchemeKind::Tdma => f.write_str("tdma"),
            SchemeKind::Cdma { weight } => write!(f, "cdma:{weight}"),
            SchemeKind::Lbs { listen_periods } => write!(f, "lbs:{listen_periods}"),
        }
    }
}

impl FromStr for SchemeSpec {
    type Err = Error;

    /// `tdma`, `cdma:<w>`, `lbs:<k>` or `wdm:<W>:<alpha_xt>:<inner>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Config(format!("scheme `{s}`: {why}"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let spec = match parts.as_slice() {
            ["tdma"] => SchemeSpec::tdma(),
            ["cdma", w] => SchemeSpec::cdma(w.parse().map_err(|_| bad("bad code weight"))?),
            ["lbs", k] => SchemeSpec::lbs(k.parse().map_err(|_| bad("bad listen periods"))?),
            ["wdm", n, alpha, inner @ ..] if !inner.is_empty() => {
                let inner: SchemeSpec = inner.join(":").parse()?;
                if inner.wdm.is_some() {
                    return Err(bad("nested wdm"));
                }
                let wdm = WdmParams {
                    n_channels: n.parse().map_err(|_| bad("bad channel count"))?,
                    alpha_xt: alpha.parse().map_err(|_| bad("bad crosstalk factor"))?,
                };
                inner.with_wdm(wdm)
            }
            _ => return Err(bad("expected tdma, cdma:<w>, lbs:<k> or wdm:<W>:<alpha>:<inner>")),
        };
        spec.validate().map_err(|e| bad(&e.to_string()))?;
        Ok(spec)
    }
}

/// One summand of a binomial average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTerm {
    pub interferers: usize,
    pub probability: f64,
    /// Conditional per-user rate, bits/s.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub n_active: usize,
    /// Effective per-user rate, bits/s.
    pub per_user_rate: f64,
    /// Network total, bits/s.
    pub total_rate: f64,
    /// Per-user key bits per frame.
    pub per_user_bits_per_frame: f64,
    /// Interference-free background yield the scheme started from.
    pub y0_used: f64,
    /// Bound breakdown of the interference-free (m = 0) term.
    pub breakdown: DecoyBreakdown,
    /// Collision probability driving the average (0 for TDMA).
    pub collision_probability: f64,
    pub terms: Vec<RateTerm>,
    /// Closed form `(1 - p)^(n_active - 1) * R_TDMA`, bits/s.
    pub closed_form_rate: f64,
}

/// Resolved link: transmissivity and interference-free yield.
struct Link<'a> {
    params: &'a SystemParams,
    eta: f64,
    base_yield: f64,
}

impl<'a> Link<'a> {
    fn new(params: &'a SystemParams, wdm: Option<&WdmParams>) -> Result<Self> {
        params.validate()?;
        let eta = link_transmissivity(params);
        let base_yield = match wdm {
            Some(w) => y_wdm(params, eta, w)?,
            None => y_tdma(params)?,
        };
        Ok(Self {
            params,
            eta,
            base_yield,
        })
    }

    fn yield_with(&self, m: usize, w: usize) -> Result<f64> {
        y_cdma_over(self.base_yield, self.eta, self.params.mu, m, w)
    }

    fn bits_per_frame(&self, y0: f64) -> Result<f64> {
        Ok(decoy_breakdown(&self.params.decoy_inputs(self.eta, y0))?
            .p_y0
            .max(0.0))
    }

    fn to_bps(&self, bits_per_frame: f64) -> f64 {
        bits_per_frame / self.params.frame_t * NS_PER_S
    }

    fn conditional_rate(&self, m: usize, w: usize) -> Result<f64> {
        let y = self.yield_with(m, w)?;
        Ok(self.to_bps(self.bits_per_frame(y)?))
    }

    fn lbs_probability(&self, k: u64) -> Result<f64> {
        lbs_collision_probability(self.params, k, self.yield_with(1, 1)?)
    }

    fn report(&self, n_active: usize, w: usize, p: f64, exact: bool) -> Result<RateReport> {
        check_active(self.params, n_active)?;
        let breakdown = decoy_breakdown(&self.params.decoy_inputs(self.eta, self.base_yield))?;
        let r_tdma = self.to_bps(breakdown.p_y0.max(0.0));
        let n_int = n_active - 1;

        let mut terms = Vec::with_capacity(n_int + 1);
        let mut average = 0.0;
        for m in 0..=n_int {
            let probability = binomial_weight(m, n_int, p)?;
            let rate = if m == 0 {
                r_tdma
            } else {
                self.conditional_rate(m, w)?
            };
            average += probability * rate;
            terms.push(RateTerm {
                interferers: m,
                probability,
                rate,
            });
        }
        let closed_form_rate = (1.0 - p).powi(n_int as i32) * r_tdma;
        let per_user_rate = if exact { average } else { closed_form_rate }.max(0.0);

        Ok(RateReport {
            n_active,
            per_user_rate,
            total_rate: n_active as f64 * per_user_rate,
            per_user_bits_per_frame: per_user_rate * self.params.frame_t / NS_PER_S,
            y0_used: self.base_yield,
            breakdown,
            collision_probability: p,
            terms,
            closed_form_rate,
        })
    }
}

fn check_active(p: &SystemParams, n_active: usize) -> Result<()> {
    if n_active < 1 || n_active > p.n_star {
        return Err(Error::Domain(format!(
            "active pairs must lie in [1, {}], got {n_active}",
            p.n_star
        )));
    }
    Ok(())
}

/// TDMA: interference free, one slot per receiver.
pub fn rate_tdma(p: &SystemParams, n_active: usize) -> Result<RateReport> {
    Link::new(p, None)?.report(n_active, 1, 0.0, true)
}

/// Per-user rate, bits/s, when `m` chip-synchronous interferers with weight-`w`
/// codes share the receiver's chips.
pub fn rate_cdma_conditional(p: &SystemParams, m: usize, w: usize) -> Result<f64> {
    Link::new(p, None)?.conditional_rate(m, w)
}

/// Binomial probability of `m` successes in `n` trials, evaluated in log
/// space.
pub fn binomial_weight(m: usize, n: usize, p: f64) -> Result<f64> {
    if m > n {
        return Err(Error::Domain(format!("m = {m} exceeds n = {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("{p} is not a probability")));
    }
    if p == 0.0 {
        return Ok(if m == 0 { 1.0 } else { 0.0 });
    }
    if p == 1.0 {
        return Ok(if m == n { 1.0 } else { 0.0 });
    }
    let log_choose = ln_factorial(n) - ln_factorial(m) - ln_factorial(n - m);
    let log_w = log_choose + m as f64 * p.ln() + (n - m) as f64 * (-p).ln_1p();
    Ok(log_w.exp())
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// Effective CDMA rate. `exact` selects the binomial average over all
/// interferer counts; otherwise the closed form that keeps only the
/// interference-free term. Capacity of the code family is enforced unless
/// `ignore_capacity` is set.
pub fn rate_cdma(
    p: &SystemParams,
    n_active: usize,
    w: usize,
    exact: bool,
    ignore_capacity: bool,
) -> Result<RateReport> {
    cdma_on(&Link::new(p, None)?, n_active, w, exact, ignore_capacity)
}

fn cdma_on(link: &Link, n_active: usize, w: usize, exact: bool, ignore_capacity: bool) -> Result<RateReport> {
    let params = link.params;
    if !ignore_capacity {
        let capacity = code_capacity(params.n_chips, w)?;
        if n_active > capacity {
            return Err(Error::Capacity(format!(
                "{n_active} pairs need distinct codes but length {}, weight {w} supports {capacity}",
                params.n_chips
            )));
        }
    }
    let prob = collision_probability(params.n_chips, w)?;
    link.report(n_active, w, prob, exact)
}

/// Probability that a newcomer settles on an occupied chip after `k` empty
/// listening periods, given the single-interferer yield.
pub fn lbs_collision_probability(p: &SystemParams, k: u64, w1_yield: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&w1_yield) {
        return Err(Error::Domain(format!("yield {w1_yield} is not a probability")));
    }
    if p.n_chips < 1 {
        return Err(Error::param("n_chips", "must be >= 1"));
    }
    let miss = if k == 0 {
        1.0
    } else {
        (k as f64 * (-w1_yield).ln_1p()).exp()
    };
    Ok(miss / p.n_chips as f64)
}

/// Listen-before-send over single-pulse codes. `per_user_rate` is the
/// binomial average; the report also carries the closed form.
pub fn rate_lbs(p: &SystemParams, n_active: usize, k: u64) -> Result<RateReport> {
    lbs_on(&Link::new(p, None)?, n_active, k)
}

fn lbs_on(link: &Link, n_active: usize, k: u64) -> Result<RateReport> {
    let prob = link.lbs_probability(k)?;
    link.report(n_active, 1, prob, true)
}

/// Evaluates `inner` with the interference-free yield replaced by the
/// WDM-modified one. CDMA runs without a capacity check here, as in
/// [`evaluate`] with `ignore_capacity`.
pub fn rate_wdm(p: &SystemParams, wdm: &WdmParams, inner: &SchemeSpec, n_active: usize) -> Result<RateReport> {
    let spec = SchemeSpec {
        kind: inner.kind,
        wdm: Some(*wdm),
    };
    evaluate(p, &spec, n_active, true)
}

/// Dispatches on the scheme. CDMA uses the exact average.
pub fn evaluate(p: &SystemParams, scheme: &SchemeSpec, n_active: usize, ignore_capacity: bool) -> Result<RateReport> {
    scheme.validate()?;
    let link = Link::new(p, scheme.wdm.as_ref())?;
    match scheme.kind {
        SchemeKind::Tdma => link.report(n_active, 1, 0.0, true),
        SchemeKind::Cdma { weight } => cdma_on(&link, n_active, weight, true, ignore_capacity),
        SchemeKind::Lbs { listen_periods } => lbs_on(&link, n_active, listen_periods),
    }
}

/// Conditional per-user rates, bits/s, for `m = 0..n_active-1` interferers
/// under `scheme`. Used to turn simulated interferer counts into rates.
pub fn conditional_rates(p: &SystemParams, scheme: &SchemeSpec, n_active: usize) -> Result<Vec<f64>> {
    scheme.validate()?;
    check_active(p, n_active)?;
    let link = Link::new(p, scheme.wdm.as_ref())?;
    let w = scheme.code_weight();
    (0..n_active).map(|m| link.conditional_rate(m, w)).collect()
}

/// Collision probability the analytical model assigns to `scheme`.
pub fn model_collision_probability(p: &SystemParams, scheme: &SchemeSpec) -> Result<f64> {
    scheme.validate()?;
    let link = Link::new(p, scheme.wdm.as_ref())?;
    match scheme.kind {
        SchemeKind::Tdma => Ok(0.0),
        SchemeKind::Cdma { weight } => collision_probability(p.n_chips, weight),
        SchemeKind::Lbs { listen_periods } => link.lbs_probability(listen_periods),
    }
}

/// Largest channel count in `1..=w_max` whose subnetworks, fully loaded,
/// still have a positive per-user rate. Zero when none does.
pub fn max_wdm_channels(p: &SystemParams, alpha_xt: f64, inner: &SchemeSpec, w_max: usize) -> Result<usize> {
    let mut best = 0;
    for n_channels in 1..=w_max {
        let wdm = WdmParams::new(n_channels, alpha_xt)?;
        let rate = match rate_wdm(p, &wdm, inner, p.n_star) {
            Ok(r) => r.per_user_rate,
            Err(Error::YieldOutOfRange { .. }) => 0.0,
            Err(e) => return Err(e),
        };
        if rate > 0.0 {
            best = n_channels;
        }
    }
    Ok(best)
}
