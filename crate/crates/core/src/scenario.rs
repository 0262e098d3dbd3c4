//! Named figure presets and generic parameter sweeps, emitted as tables.

use std::io::Write;

use rayon::prelude::*;

use crate::config::{OutputFormat, SweepSpec};
use crate::error::{Error, Result};
use crate::mac::{evaluate, RateReport, SchemeKind, SchemeSpec};
use crate::network::{SystemParams, WdmParams};
use crate::report::{axis_value, sig6};

pub const SCENARIOS: &[&str] = &["fig5a", "fig5b", "fig6a", "fig6b", "fig7", "fig8", "fig10"];

/// Code lengths used by the code-length presets.
const CODE_LENGTHS: &[usize] = &[16, 32, 64, 128, 256, 512, 1024];

/// Classical crosstalk multipliers for the path-loss preset: nominal and
/// three orders of magnitude above it.
pub const XTALK_MULTIPLIERS: &[f64] = &[1.0, 1e3];

/// One evaluation point of a sweep.
#[derive(Debug, Clone)]
pub struct Point {
    pub label: String,
    pub x: f64,
    pub params: SystemParams,
    pub scheme: SchemeSpec,
    pub n_active: usize,
    pub ignore_capacity: bool,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub label: String,
    pub x: f64,
    pub report: RateReport,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub variable: String,
    pub rows: Vec<Row>,
    /// Free-form remarks about the run, not part of the table itself.
    pub notes: Vec<String>,
}

impl Table {
    /// Rows matching a scheme label, in sweep order.
    pub fn series<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.label == label)
    }

    pub fn write<W: Write>(&self, out: W, format: OutputFormat, per_frame: bool) -> std::io::Result<()> {
        match format {
            OutputFormat::Csv => self.write_csv(out, per_frame),
            OutputFormat::KeyValue => self.write_key_value(out, per_frame),
        }
    }

    fn rate_columns(per_frame: bool) -> (&'static str, &'static str) {
        if per_frame {
            ("per_user_bits_per_frame", "total_bits_per_frame")
        } else {
            ("per_user_rate_bps", "total_rate_bps")
        }
    }

    fn rates(r: &RateReport, per_frame: bool) -> (f64, f64) {
        if per_frame {
            let per = r.per_user_bits_per_frame;
            (per, per * r.n_active as f64)
        } else {
            (r.per_user_rate, r.total_rate)
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W, per_frame: bool) -> std::io::Result<()> {
        let (per, tot) = Self::rate_columns(per_frame);
        writeln!(out, "scheme,{},{per},{tot},y0,q_mu,e_mu", self.variable)?;
        for row in &self.rows {
            let (a, b) = Self::rates(&row.report, per_frame);
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                row.label,
                axis_value(row.x),
                sig6(a),
                sig6(b),
                sig6(row.report.y0_used),
                sig6(row.report.breakdown.q_mu),
                sig6(row.report.breakdown.e_mu),
            )?;
        }
        Ok(())
    }

    pub fn write_key_value<W: Write>(&self, mut out: W, per_frame: bool) -> std::io::Result<()> {
        let (per, tot) = Self::rate_columns(per_frame);
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                writeln!(out)?;
            }
            let (a, b) = Self::rates(&row.report, per_frame);
            writeln!(out, "scheme: {}", row.label)?;
            writeln!(out, "{}: {}", self.variable, axis_value(row.x))?;
            writeln!(out, "{per}: {}", sig6(a))?;
            writeln!(out, "{tot}: {}", sig6(b))?;
            writeln!(out, "y0: {}", sig6(row.report.y0_used))?;
            writeln!(out, "q_mu: {}", sig6(row.report.breakdown.q_mu))?;
            writeln!(out, "e_mu: {}", sig6(row.report.breakdown.e_mu))?;
        }
        Ok(())
    }
}

/// Evaluates every point and sorts rows by the sweep variable, keeping the
/// scheme order within one value.
pub fn evaluate_points(variable: &str, points: Vec<Point>, parallel: bool) -> Result<Table> {
    let eval = |pt: &Point| -> Result<Row> {
        let report = evaluate(&pt.params, &pt.scheme, pt.n_active, pt.ignore_capacity)?;
        Ok(Row {
            label: pt.label.clone(),
            x: pt.x,
            report,
        })
    };
    let mut rows: Vec<Row> = if parallel {
        points.par_iter().map(eval).collect::<Result<_>>()?
    } else {
        points.iter().map(eval).collect::<Result<_>>()?
    };
    rows.sort_by(|a, b| a.x.total_cmp(&b.x));
    Ok(Table {
        variable: variable.to_string(),
        rows,
        notes: Vec::new(),
    })
}

fn apply_scheme_field(scheme: &mut SchemeSpec, name: &str, value: f64) -> Result<()> {
    let count = || -> Result<u64> {
        if value.fract() != 0.0 || value < 0.0 || !value.is_finite() {
            return Err(Error::Config(format!("`{name}` expects a non-negative integer, got {value}")));
        }
        Ok(value as u64)
    };
    match (name, &mut scheme.kind, &mut scheme.wdm) {
        ("weight", SchemeKind::Cdma { weight }, _) => *weight = count()? as usize,
        ("listen_periods", SchemeKind::Lbs { listen_periods }, _) => *listen_periods = count()?,
        ("n_channels", _, Some(w)) => w.n_channels = count()? as usize,
        ("alpha_xt", _, Some(w)) => w.alpha_xt = value,
        _ => {}
    }
    Ok(())
}

/// Expands a configured sweep against base parameters.
pub fn sweep_points(base: &SystemParams, spec: &SweepSpec) -> Result<Vec<Point>> {
    let mut points = Vec::with_capacity(spec.values.len() * spec.schemes.len());
    for &x in &spec.values {
        let mut params = base.clone();
        let mut n_active = spec.n_active.resolve(base);
        if spec.variable == "n_active" {
            if x.fract() != 0.0 || x < 1.0 {
                return Err(Error::Config(format!("n_active value {x} is not a positive integer")));
            }
            n_active = x as usize;
        } else if crate::network::PARAM_FIELDS.contains(&spec.variable.as_str()) {
            params.set_field(&spec.variable, x)?;
            n_active = spec.n_active.resolve(&params);
        }
        for scheme in &spec.schemes {
            let mut scheme = *scheme;
            apply_scheme_field(&mut scheme, &spec.variable, x)?;
            points.push(Point {
                label: scheme.to_string(),
                x,
                params: params.clone(),
                scheme,
                n_active,
                ignore_capacity: spec.ignore_capacity,
            });
        }
    }
    Ok(points)
}

pub fn run_sweep(base: &SystemParams, spec: &SweepSpec, parallel: bool) -> Result<Table> {
    evaluate_points(&spec.variable, sweep_points(base, spec)?, parallel)
}

fn comparison_schemes() -> [SchemeSpec; 3] {
    [SchemeSpec::tdma(), SchemeSpec::cdma(1), SchemeSpec::lbs(500)]
}

fn point(label: String, x: f64, params: &SystemParams, scheme: SchemeSpec, n_active: usize) -> Point {
    Point {
        label,
        x,
        params: params.clone(),
        scheme,
        n_active,
        ignore_capacity: true,
    }
}

/// Runs a named figure preset on the nominal parameters.
pub fn run_scenario(name: &str, parallel: bool) -> Result<Table> {
    let t1 = SystemParams::table_one();
    let mut notes = Vec::new();
    let (variable, points) = match name {
        "fig5a" => {
            let schemes = [SchemeSpec::tdma(), SchemeSpec::cdma(1), SchemeSpec::cdma(2), SchemeSpec::cdma(3)];
            let pts = (1..=t1.n_star)
                .flat_map(|n| schemes.map(|s| point(s.to_string(), n as f64, &t1, s, n)))
                .collect();
            ("n_active", pts)
        }
        "fig5b" => {
            let schemes = [
                SchemeSpec::tdma(),
                SchemeSpec::lbs(0),
                SchemeSpec::lbs(100),
                SchemeSpec::lbs(500),
                SchemeSpec::lbs(1000),
            ];
            let pts = (1..=t1.n_star)
                .flat_map(|n| schemes.map(|s| point(s.to_string(), n as f64, &t1, s, n)))
                .collect();
            ("n_active", pts)
        }
        "fig6a" => {
            let pts = CODE_LENGTHS
                .iter()
                .flat_map(|&nc| {
                    let p = SystemParams {
                        n_chips: nc,
                        frame_t: nc as f64 * t1.tau_c,
                        ..t1.clone()
                    };
                    comparison_schemes().map(|s| point(s.to_string(), nc as f64, &p, s, 16))
                })
                .collect();
            ("n_chips", pts)
        }
        "fig6b" => {
            let frame = 16.0;
            let pts = CODE_LENGTHS
                .iter()
                .flat_map(|&nc| {
                    let chip = frame / nc as f64;
                    let p = SystemParams {
                        n_chips: nc,
                        frame_t: frame,
                        tau_c: chip,
                        tau_p: chip,
                        tau_d: chip,
                        b_opt: 1.0 / chip,
                        ..t1.clone()
                    };
                    comparison_schemes().map(|s| point(s.to_string(), nc as f64, &p, s, 16))
                })
                .collect();
            ("n_chips", pts)
        }
        "fig7" => {
            let pts = (4..=64)
                .step_by(4)
                .flat_map(|n| {
                    let p = SystemParams {
                        n_star: n,
                        n_chips: 128,
                        frame_t: 128.0 * t1.tau_c,
                        ..t1.clone()
                    };
                    comparison_schemes().map(|s| point(s.to_string(), n as f64, &p, s, n))
                })
                .collect();
            ("n_star", pts)
        }
        "fig8" => {
            notes.push(
                "classical crosstalk multipliers 1 and 1000; the intermediate curve's \
                 multiplier is unspecified and not reproduced"
                    .to_string(),
            );
            let mut pts = Vec::new();
            for db in 0..=40 {
                for &mult in XTALK_MULTIPLIERS {
                    let p = SystemParams {
                        path_loss_db: db as f64,
                        gamma_xtalk: t1.gamma_xtalk * mult,
                        ..t1.clone()
                    };
                    for s in comparison_schemes() {
                        pts.push(point(format!("{s}/xtalk_x{mult}"), db as f64, &p, s, t1.n_star));
                    }
                }
            }
            ("path_loss_db", pts)
        }
        "fig10" => {
            let mut pts = Vec::new();
            for n_channels in 1..=64usize {
                for isolation_db in [30.0, 20.0] {
                    let wdm = WdmParams {
                        n_channels,
                        alpha_xt: WdmParams::alpha_from_isolation_db(isolation_db),
                    };
                    let s = SchemeSpec::tdma().with_wdm(wdm);
                    let total = (n_channels * t1.n_star) as f64;
                    pts.push(point(format!("wdm-tdma/{isolation_db}dB"), total, &t1, s, t1.n_star));
                }
            }
            ("total_users", pts)
        }
        other => {
            return Err(Error::Config(format!(
                "unknown scenario `{other}`; expected one of {}",
                SCENARIOS.join(", ")
            )))
        }
    };
    let mut table = evaluate_points(variable, points, parallel)?;
    table.notes = notes;
    Ok(table)
}
