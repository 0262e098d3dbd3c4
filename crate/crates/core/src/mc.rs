//! Monte Carlo check of the interference models behind the averaged rates.
//!
//! Three simulators share one harness:
//!
//! * bernoulli model: each interferer independently hits the tagged receiver
//!   with the model's collision probability;
//! * code level: interferers carry distinct codes from a generated OOC family
//!   and a uniform random cyclic offset, and a hit is any pulse overlap;
//! * LBS sensing: pairs activate one after another, each listening on a random
//!   chip and redrawing when it detects an occupant.
//!
//! Every trial draws from its own ChaCha8 stream selected by the trial index,
//! and trials are aggregated with integer sums, so results do not depend on
//! evaluation order or on the number of worker threads.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mac::{binomial_weight, conditional_rates, evaluate, model_collision_probability, SchemeKind, SchemeSpec};
use crate::network::{link_transmissivity, y_cdma_over, y_tdma, y_wdm, SystemParams};
use crate::ooc::generate_family;
use crate::report::sig6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McMode {
    /// Independent Bernoulli collisions with the analytical probability.
    Bernoulli,
    /// Explicit OOC codes with random cyclic offsets.
    CodeLevel,
}

#[derive(Debug, Clone)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    pub mode: McMode,
    pub scheme: SchemeSpec,
    pub params: SystemParams,
    pub n_active: usize,
    /// Spread trials over the rayon pool. Does not change results.
    pub parallel: bool,
    /// Overrides the per-period, per-occupant detection probability used by
    /// LBS sensing. `None` uses the single-interferer yield.
    pub sensing_yield: Option<f64>,
}

impl McConfig {
    pub fn new(params: SystemParams, scheme: SchemeSpec, n_active: usize, trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            mode: McMode::Bernoulli,
            scheme,
            params,
            n_active,
            parallel: false,
            sensing_yield: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Domain("trials must be >= 1".into()));
        }
        self.params.validate()?;
        self.scheme.validate()?;
        if self.n_active < 1 || self.n_active > self.params.n_star {
            return Err(Error::Domain(format!(
                "active pairs must lie in [1, {}], got {}",
                self.params.n_star, self.n_active
            )));
        }
        if let Some(y) = self.sensing_yield {
            if !(0.0..=1.0).contains(&y) {
                return Err(Error::Domain(format!("sensing yield {y} is not a probability")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub trials: u64,
    pub n_active: usize,
    /// Trials in which the tagged receiver saw `m` interferers, indexed by `m`.
    pub interferer_histogram: Vec<u64>,
    /// Mean per-user rate over trials, bits/s.
    pub empirical_rate: f64,
    /// Standard error of `empirical_rate`.
    pub rate_std_error: f64,
    /// Fraction of interferer draws that hit the tagged receiver.
    pub collision_freq: f64,
    /// 95% normal-approximation interval for `collision_freq`, clipped to [0, 1].
    pub collision_ci: (f64, f64),
}

impl McResult {
    pub fn frequencies(&self) -> Vec<f64> {
        self.interferer_histogram
            .iter()
            .map(|&c| c as f64 / self.trials as f64)
            .collect()
    }

    pub fn write_key_value<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "trials: {}", self.trials)?;
        writeln!(out, "n_active: {}", self.n_active)?;
        writeln!(out, "empirical_rate_bps: {}", sig6(self.empirical_rate))?;
        writeln!(out, "rate_std_error_bps: {}", sig6(self.rate_std_error))?;
        writeln!(out, "collision_freq: {}", sig6(self.collision_freq))?;
        writeln!(out, "collision_ci_low: {}", sig6(self.collision_ci.0))?;
        writeln!(out, "collision_ci_high: {}", sig6(self.collision_ci.1))?;
        for (m, c) in self.interferer_histogram.iter().enumerate() {
            writeln!(out, "histogram.{m}: {c}")?;
        }
        Ok(())
    }

    pub fn write_histogram_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "m,count,frequency")?;
        for (m, (&c, f)) in self.interferer_histogram.iter().zip(self.frequencies()).enumerate() {
            writeln!(out, "{m},{c},{}", sig6(f))?;
        }
        Ok(())
    }
}

/// Outcome of a single trial.
struct Trial {
    interferers: usize,
}

#[derive(Clone)]
struct Tally {
    hist: Vec<u64>,
}

impl Tally {
    fn new(n_active: usize) -> Self {
        Self {
            hist: vec![0; n_active],
        }
    }

    fn add(mut self, t: Trial) -> Self {
        self.hist[t.interferers] += 1;
        self
    }

    fn merge(mut self, other: Tally) -> Self {
        for (a, b) in self.hist.iter_mut().zip(other.hist) {
            *a += b;
        }
        self
    }
}

fn run_trials<F>(cfg: &McConfig, trial: F) -> Tally
where
    F: Fn(&mut ChaCha8Rng) -> Trial + Sync,
{
    let base = ChaCha8Rng::seed_from_u64(cfg.seed).get_seed();
    let one = |t: u64| {
        let mut rng = ChaCha8Rng::from_seed(base);
        rng.set_stream(t);
        trial(&mut rng)
    };
    let n = cfg.n_active;
    if cfg.parallel {
        (0..cfg.trials)
            .into_par_iter()
            .fold(|| Tally::new(n), |acc, t| acc.add(one(t)))
            .reduce(|| Tally::new(n), Tally::merge)
    } else {
        (0..cfg.trials).fold(Tally::new(n), |acc, t| acc.add(one(t)))
    }
}

fn summarize(cfg: &McConfig, tally: Tally) -> Result<McResult> {
    let rates = conditional_rates(&cfg.params, &cfg.scheme, cfg.n_active)?;
    let trials = cfg.trials as f64;
    let mean: f64 = tally
        .hist
        .iter()
        .zip(&rates)
        .map(|(&c, r)| c as f64 * r)
        .sum::<f64>()
        / trials;
    let var = if cfg.trials > 1 {
        tally
            .hist
            .iter()
            .zip(&rates)
            .map(|(&c, r)| c as f64 * (r - mean).powi(2))
            .sum::<f64>()
            / (trials - 1.0)
    } else {
        0.0
    };

    let draws = cfg.trials * (cfg.n_active as u64 - 1);
    let hits: u64 = tally.hist.iter().enumerate().map(|(m, &c)| m as u64 * c).sum();
    let (freq, ci) = if draws == 0 {
        (0.0, (0.0, 0.0))
    } else {
        let f = hits as f64 / draws as f64;
        let half = 1.96 * (f * (1.0 - f) / draws as f64).sqrt();
        (f, ((f - half).max(0.0), (f + half).min(1.0)))
    };

    Ok(McResult {
        trials: cfg.trials,
        n_active: cfg.n_active,
        interferer_histogram: tally.hist,
        empirical_rate: mean,
        rate_std_error: (var / trials).sqrt(),
        collision_freq: freq,
        collision_ci: ci,
    })
}

/// Counts interferers hitting a tagged receiver, in the configured mode.
pub fn simulate_interferers(cfg: &McConfig) -> Result<McResult> {
    cfg.validate()?;
    let n_int = cfg.n_active - 1;
    let tally = match cfg.mode {
        McMode::Bernoulli => {
            let p = model_collision_probability(&cfg.params, &cfg.scheme)?;
            run_trials(cfg, |rng| Trial {
                interferers: (0..n_int).filter(|_| rng.random::<f64>() < p).count(),
            })
        }
        McMode::CodeLevel => {
            let w = match cfg.scheme.kind {
                SchemeKind::Cdma { weight } => weight,
                _ => {
                    return Err(Error::Domain(
                        "code-level simulation needs a CDMA scheme".into(),
                    ))
                }
            };
            let n_chips = cfg.params.n_chips;
            let family = generate_family(n_chips, w, cfg.n_active)?;
            let tagged = family.codes()[0].shifted_mask(0);
            let others: Vec<Vec<usize>> = family.codes()[1..]
                .iter()
                .map(|c| c.positions().to_vec())
                .collect();
            run_trials(cfg, |rng| Trial {
                interferers: others
                    .iter()
                    .filter(|pos| {
                        let shift = rng.random_range(0..n_chips);
                        pos.iter().any(|&i| tagged[(i + shift) % n_chips])
                    })
                    .count(),
            })
        }
    };
    summarize(cfg, tally)
}

/// Sensing attempts after which a pair gives up and keeps its chip. Only
/// reachable when no chip is free and detection is certain.
const MAX_ATTEMPTS: u32 = 1_000_000;

/// Sequential listen-before-send. Pairs activate in index order; each picks a
/// uniform chip and listens for `k` frames. A chip with `n` occupants is
/// detected in one frame with probability `1 - (1 - y)^n`; on detection the
/// pair redraws. Once accepted a chip is never revisited. The tagged
/// receiver is one pair drawn uniformly per trial.
pub fn simulate_lbs_sensing(cfg: &McConfig) -> Result<McResult> {
    cfg.validate()?;
    let k = match cfg.scheme.kind {
        SchemeKind::Lbs { listen_periods } => listen_periods,
        _ => return Err(Error::Domain("LBS sensing needs an LBS scheme".into())),
    };
    let p = &cfg.params;
    let y1 = match cfg.sensing_yield {
        Some(y) => y,
        None => {
            let eta = link_transmissivity(p);
            let base = match &cfg.scheme.wdm {
                Some(w) => y_wdm(p, eta, w)?,
                None => y_tdma(p)?,
            };
            y_cdma_over(base, eta, p.mu, 1, 1)?
        }
    };
    let n = cfg.n_active;
    let n_chips = p.n_chips;
    // detect[n]: probability that k listening frames catch n occupants
    let detect: Vec<f64> = (0..=n)
        .map(|occ| {
            if occ == 0 || k == 0 {
                0.0
            } else if y1 >= 1.0 {
                1.0
            } else {
                1.0 - ((occ as f64) * (k as f64) * (-y1).ln_1p()).exp()
            }
        })
        .collect();

    let tally = run_trials(cfg, |rng| {
        let mut occupancy = vec![0usize; n_chips];
        let mut chosen = Vec::with_capacity(n);
        for _ in 0..n {
            let mut attempts = 0;
            let chip = loop {
                let c = rng.random_range(0..n_chips);
                attempts += 1;
                let occ = occupancy[c];
                if occ == 0 || attempts >= MAX_ATTEMPTS {
                    break c;
                }
                if rng.random::<f64>() >= detect[occ] {
                    break c;
                }
            };
            occupancy[chip] += 1;
            chosen.push(chip);
        }
        let tagged = chosen[rng.random_range(0..n)];
        Trial {
            interferers: occupancy[tagged] - 1,
        }
    });
    summarize(cfg, tally)
}

/// Simulated against analytical values for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct McComparison {
    /// Binomial-averaged per-user rate of the analytical model, bits/s.
    pub analytical_rate: f64,
    /// Collision probability assumed by the analytical model.
    pub model_probability: f64,
    /// Binomial interferer distribution of the model.
    pub analytical_histogram: Vec<f64>,
    /// Total-variation distance between simulated and model distributions.
    pub tv_distance: f64,
    /// (empirical - analytical) / standard error.
    pub rate_z: f64,
    /// (empirical - analytical) / analytical.
    pub relative_bias: f64,
}

/// Relative bias beyond which a disagreement is a finding about the model
/// rather than sampling noise.
pub const MODEL_GAP_THRESHOLD: f64 = 0.05;

impl McComparison {
    pub fn model_gap(&self) -> bool {
        self.relative_bias.abs() > MODEL_GAP_THRESHOLD
    }

    pub fn write_key_value<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "analytical_rate_bps: {}", sig6(self.analytical_rate))?;
        writeln!(out, "model_collision_probability: {}", sig6(self.model_probability))?;
        writeln!(out, "rate_z_score: {}", sig6(self.rate_z))?;
        writeln!(out, "relative_bias: {}", sig6(self.relative_bias))?;
        writeln!(out, "tv_distance: {}", sig6(self.tv_distance))?;
        writeln!(out, "model_gap: {}", if self.model_gap() { "yes" } else { "no" })?;
        Ok(())
    }
}

pub fn compare(cfg: &McConfig, result: &McResult) -> Result<McComparison> {
    let analytical_rate = evaluate(&cfg.params, &cfg.scheme, cfg.n_active, true)?.per_user_rate;
    let p = model_collision_probability(&cfg.params, &cfg.scheme)?;
    let n_int = cfg.n_active - 1;
    let analytical_histogram = (0..=n_int)
        .map(|m| binomial_weight(m, n_int, p))
        .collect::<Result<Vec<_>>>()?;
    let tv_distance = 0.5
        * result
            .frequencies()
            .iter()
            .zip(&analytical_histogram)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    let diff = result.empirical_rate - analytical_rate;
    let rate_z = if result.rate_std_error > 0.0 {
        diff / result.rate_std_error
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    let relative_bias = if analytical_rate != 0.0 {
        diff / analytical_rate
    } else {
        0.0
    };
    Ok(McComparison {
        analytical_rate,
        model_probability: p,
        analytical_histogram,
        tv_distance,
        rate_z,
        relative_bias,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(scheme: SchemeSpec, n_active: usize, trials: u64) -> McConfig {
        McConfig::new(SystemParams::table_one(), scheme, n_active, trials, 7)
    }

    #[test]
    fn single_pair_has_no_interferers() {
        for c in [
            cfg(SchemeSpec::cdma(1), 1, 1000),
            cfg(SchemeSpec::lbs(100), 1, 1000),
        ] {
            let r = if matches!(c.scheme.kind, SchemeKind::Lbs { .. }) {
                simulate_lbs_sensing(&c).unwrap()
            } else {
                simulate_interferers(&c).unwrap()
            };
            assert_eq!(r.interferer_histogram, vec![1000]);
            assert_eq!(r.collision_freq, 0.0);
            assert_eq!(r.rate_std_error, 0.0);
        }
    }

    #[test]
    fn histogram_sums_to_trials() {
        let mut c = cfg(SchemeSpec::cdma(2), 7, 5000);
        let r = simulate_interferers(&c).unwrap();
        assert_eq!(r.interferer_histogram.iter().sum::<u64>(), 5000);
        c.mode = McMode::CodeLevel;
        let r = simulate_interferers(&c).unwrap();
        assert_eq!(r.interferer_histogram.iter().sum::<u64>(), 5000);
        for f in r.frequencies() {
            assert!((0.0..=1.0).contains(&f));
        }
    }

    #[test]
    fn tdma_never_collides() {
        let r = simulate_interferers(&cfg(SchemeSpec::tdma(), 16, 100)).unwrap();
        assert_eq!(r.interferer_histogram[0], 100);
    }

    #[test]
    fn single_trial_run() {
        let r = simulate_interferers(&cfg(SchemeSpec::cdma(1), 16, 1)).unwrap();
        assert_eq!(r.interferer_histogram.iter().sum::<u64>(), 1);
        assert_eq!(r.rate_std_error, 0.0);
    }

    #[test]
    fn reproducible_and_partition_independent() {
        let mut c = cfg(SchemeSpec::cdma(1), 16, 20_000);
        let a = simulate_interferers(&c).unwrap();
        let b = simulate_interferers(&c).unwrap();
        c.parallel = true;
        let p = simulate_interferers(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, p);

        let mut l = cfg(SchemeSpec::lbs(100), 16, 5_000);
        let a = simulate_lbs_sensing(&l).unwrap();
        l.parallel = true;
        assert_eq!(a, simulate_lbs_sensing(&l).unwrap());
    }

    #[test]
    fn seeds_differ() {
        let mut c = cfg(SchemeSpec::cdma(1), 16, 10_000);
        let a = simulate_interferers(&c).unwrap();
        c.seed = 8;
        assert_ne!(a, simulate_interferers(&c).unwrap());
    }

    #[test]
    fn code_level_weight_one_collision_rate() {
        let mut c = cfg(SchemeSpec::cdma(1), 16, 200_000);
        c.mode = McMode::CodeLevel;
        let r = simulate_interferers(&c).unwrap();
        let draws: f64 = 200_000.0 * 15.0;
        let se = (1.0 / 16.0 * 15.0 / 16.0 / draws).sqrt();
        assert!((r.collision_freq - 1.0 / 16.0).abs() < 3.0 * se, "{}", r.collision_freq);
    }

    #[test]
    fn code_level_needs_capacity_and_cdma() {
        let mut c = cfg(SchemeSpec::cdma(3), 3, 10);
        c.mode = McMode::CodeLevel;
        assert!(matches!(simulate_interferers(&c), Err(Error::Capacity(_))));
        c.scheme = SchemeSpec::tdma();
        assert!(simulate_interferers(&c).is_err());
    }

    #[test]
    fn lbs_without_listening_matches_bernoulli() {
        let trials = 200_000;
        let lbs = simulate_lbs_sensing(&cfg(SchemeSpec::lbs(0), 16, trials)).unwrap();
        let p: f64 = 1.0 / 16.0;
        for (m, &count) in lbs.interferer_histogram.iter().enumerate().take(4) {
            let expect = binomial_weight(m, 15, p).unwrap();
            let se = (expect * (1.0 - expect) / trials as f64).sqrt();
            let f = count as f64 / trials as f64;
            assert!((f - expect).abs() < 4.0 * se, "m = {m}: {f} vs {expect}");
        }
    }

    #[test]
    fn perfect_sensing_packs_chips() {
        let mut c = cfg(SchemeSpec::lbs(1), 16, 2000);
        c.sensing_yield = Some(1.0);
        let r = simulate_lbs_sensing(&c).unwrap();
        assert_eq!(r.interferer_histogram[0], 2000);
        assert_eq!(r.collision_freq, 0.0);
    }

    #[test]
    fn lbs_sensing_needs_lbs_scheme() {
        assert!(simulate_lbs_sensing(&cfg(SchemeSpec::cdma(1), 16, 10)).is_err());
    }

    #[test]
    fn invalid_configs() {
        assert!(simulate_interferers(&cfg(SchemeSpec::cdma(1), 16, 0)).is_err());
        assert!(simulate_interferers(&cfg(SchemeSpec::cdma(1), 17, 10)).is_err());
        let mut c = cfg(SchemeSpec::lbs(1), 16, 10);
        c.sensing_yield = Some(2.0);
        assert!(simulate_lbs_sensing(&c).is_err());
    }

    #[test]
    fn key_value_output() {
        let r = simulate_interferers(&cfg(SchemeSpec::cdma(1), 2, 10)).unwrap();
        let mut buf = Vec::new();
        r.write_key_value(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("trials: 10\nn_active: 2\n"));
        assert!(text.contains("histogram.1: "));
    }
}
