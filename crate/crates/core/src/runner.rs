//! Scenario runner: turns a parsed configuration into plot-ready tables
//! (sweeps, pointer distributions, extrema reports) and writes them as CSV.

use std::io::Write;

use crate::config::{GridSpec, ScenarioConfig, SweepVariable};
use crate::error::{Error, Result};
use crate::measurement_engine::{
    conditional_distribution, default_grid, weak_average_approx, weak_variance_approx,
    MeasurementSetup, PointerGrid, WeakValueReport,
};
use crate::probe_model::{coupling_moments, derived_scales};
use crate::spin_analytic::{
    conditional_pdf_spin, engine_setup, exact_average_spin, extremum, spin_weak_value,
    spread_extrema, Branch, Method, SpinGeometry, SpinScenario,
};

/// One row of a sweep table. Missing entries become empty CSV fields; the
/// flag column says why.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub exact_avg: Option<f64>,
    pub approx_avg: Option<f64>,
    pub re_aw: Option<f64>,
    pub im_aw: Option<f64>,
    pub var_exact: Option<f64>,
    pub var_approx: Option<f64>,
    pub post_prob: Option<f64>,
    pub flag: String,
}

#[derive(Debug, Clone, Copy)]
pub struct DistributionRow {
    pub p: f64,
    pub density: f64,
    pub closed_form: f64,
}

#[derive(Debug, Clone)]
pub struct ExtremaRow {
    pub quantity: &'static str,
    pub value: f64,
    pub gamma_star: f64,
    pub phi_star: Option<f64>,
    pub method: Method,
}

fn materialize(config: &ScenarioConfig, value: Option<f64>) -> (SpinGeometry, f64) {
    let mut geometry = config.geometry;
    let mut lambda = config.lambda;
    if let (Some(v), Some(sweep)) = (value, &config.sweep) {
        match sweep.variable {
            SweepVariable::Gamma => geometry.gamma = v,
            SweepVariable::Phi => geometry.phi = v,
            SweepVariable::Lambda => lambda = v,
        }
    }
    (geometry, lambda)
}

fn resolve_grid(config: &ScenarioConfig, setup: &MeasurementSetup) -> PointerGrid {
    match config.grid {
        GridSpec::Auto => default_grid(setup),
        GridSpec::Explicit(grid) => grid,
    }
}

fn scenario(config: &ScenarioConfig, geometry: SpinGeometry, lambda: f64) -> Result<SpinScenario> {
    SpinScenario::new(
        geometry,
        config.probe,
        coupling_moments(&config.window)?,
        lambda,
    )
}

fn compute_row(config: &ScenarioConfig, value: f64, swept: bool) -> Result<SweepRow> {
    let (geometry, lambda) = materialize(config, swept.then_some(value));
    let sc = scenario(config, geometry, lambda)?;
    let moments = sc.moments;
    let mut flags: Vec<&str> = Vec::new();

    let exact_avg = match exact_average_spin(&sc) {
        Ok(v) => Some(v),
        Err(Error::VanishingPostselection { .. }) => {
            flags.push("vanishing_postselection");
            None
        }
        Err(e) => return Err(e),
    };

    let weak = match spin_weak_value(&geometry) {
        Ok(a_w) => {
            let a2_w = num_complex::Complex64::ONE; // (n.sigma)^2 = 1
            Some(WeakValueReport {
                a_w,
                a2_w,
                delta_a2_w: a2_w - a_w * a_w,
                overlap: (geometry.gamma / 2.0).cos().powi(2),
            })
        }
        Err(Error::OrthogonalPostselection { .. }) => {
            flags.push("orthogonal_postselection");
            None
        }
        Err(e) => return Err(e),
    };
    let approx_avg = weak.map(|w| weak_average_approx(&w, &config.probe, &moments));
    let var_approx = weak.map(|w| weak_variance_approx(&w, &config.probe, &moments, lambda));

    let (var_exact, post_prob) = {
        let setup = engine_setup(&geometry, &config.probe, &config.window, lambda)?;
        let grid = resolve_grid(config, &setup);
        match conditional_distribution(&setup, &grid) {
            Ok(dist) => {
                if dist.weak_limit_flagged {
                    flags.push("weak_limit_suspect");
                }
                (
                    Some(dist.variance_p() / (lambda * lambda)),
                    Some(dist.postselection_probability),
                )
            }
            Err(Error::VanishingPostselection { probability }) => {
                if !flags.contains(&"vanishing_postselection") {
                    flags.push("vanishing_postselection");
                }
                (None, Some(probability))
            }
            Err(e) => return Err(e),
        }
    };

    Ok(SweepRow {
        value,
        exact_avg,
        approx_avg,
        re_aw: weak.map(|w| w.a_w.re),
        im_aw: weak.map(|w| w.a_w.im),
        var_exact,
        var_approx,
        post_prob,
        flag: flags.join(";"),
    })
}

/// Evaluates the sweep (or the single configured point when no sweep is
/// set), with `jobs` worker threads. Output order follows sweep order
/// regardless of completion order.
pub fn run_sweep(config: &ScenarioConfig, jobs: usize) -> Result<Vec<SweepRow>> {
    let (values, swept) = match &config.sweep {
        Some(sweep) => (sweep.values(), true),
        None => (vec![config.geometry.gamma], false),
    };
    let jobs = jobs.max(1).min(values.len().max(1));
    if jobs == 1 {
        return values
            .iter()
            .map(|&v| compute_row(config, v, swept))
            .collect();
    }
    let mut indexed: Vec<(usize, Result<SweepRow>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|worker| {
                let values = &values;
                scope.spawn(move || {
                    values
                        .iter()
                        .enumerate()
                        .skip(worker)
                        .step_by(jobs)
                        .map(|(i, &v)| (i, compute_row(config, v, swept)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    indexed.sort_by_key(|(i, _)| *i);
    indexed.into_iter().map(|(_, row)| row).collect()
}

/// Pointer density over the grid from the generic engine, with the spin
/// closed form as a cross-check column.
pub fn run_distribution(config: &ScenarioConfig) -> Result<Vec<DistributionRow>> {
    let (geometry, lambda) = materialize(config, None);
    let setup = engine_setup(&geometry, &config.probe, &config.window, lambda)?;
    let grid = resolve_grid(config, &setup);
    let dist = conditional_distribution(&setup, &grid)?;
    let sc = scenario(config, geometry, lambda)?;
    grid.points()
        .zip(&dist.density)
        .map(|(p, &density)| {
            Ok(DistributionRow {
                p,
                density,
                closed_form: conditional_pdf_spin(&sc, p)?,
            })
        })
        .collect()
}

/// Mean and variance of p/lambda under the closed-form spin pdf, used as the
/// numeric fallback when the closed-form spread extrema do not apply.
fn spin_variance_numeric(sc: &SpinScenario, grid: &PointerGrid) -> Result<f64> {
    let density: Vec<f64> = grid
        .points()
        .map(|p| conditional_pdf_spin(sc, p))
        .collect::<Result<_>>()?;
    let norm = grid.integrate(&density);
    let weighted: Vec<f64> = grid
        .points()
        .zip(&density)
        .map(|(p, d)| p * d)
        .collect();
    let mean = grid.integrate(&weighted) / norm;
    let second: Vec<f64> = grid
        .points()
        .zip(&density)
        .map(|(p, d)| (p - mean) * (p - mean) * d)
        .collect();
    Ok(grid.integrate(&second) / norm / (sc.lambda * sc.lambda))
}

fn numeric_spread_sweep(config: &ScenarioConfig, sc: &SpinScenario) -> Result<[ExtremaRow; 2]> {
    let nu = derived_scales(&sc.probe, &sc.moments).nu;
    let band = 20.0 * sc.lambda.abs() / nu;
    let pi = std::f64::consts::PI;
    let mut gammas: Vec<f64> = (0..200)
        .map(|i| std::f64::consts::TAU * i as f64 / 200.0)
        .collect();
    gammas.extend((0..=120).map(|i| pi - band + 2.0 * band * i as f64 / 120.0));
    gammas.retain(|g| (0.0..=std::f64::consts::TAU).contains(g));
    let phis: Vec<f64> = (0..=12).map(|i| pi * i as f64 / 12.0).collect();

    let mut min = (f64::INFINITY, 0.0, 0.0);
    let mut max = (f64::NEG_INFINITY, 0.0, 0.0);
    for &phi in &phis {
        for &gamma in &gammas {
            let geometry = SpinGeometry {
                gamma,
                phi,
                ..sc.geometry
            };
            let cand = SpinScenario {
                geometry,
                ..*sc
            };
            let setup = engine_setup(&geometry, &sc.probe, &config.window, sc.lambda)?;
            let grid = resolve_grid(config, &setup);
            let var = match spin_variance_numeric(&cand, &grid) {
                Ok(v) => v,
                Err(Error::VanishingPostselection { .. }) => continue,
                Err(e) => return Err(e),
            };
            if var < min.0 {
                min = (var, gamma, phi);
            }
            if var > max.0 {
                max = (var, gamma, phi);
            }
        }
    }
    Ok([
        ExtremaRow {
            quantity: "spread_min",
            value: min.0,
            gamma_star: min.1,
            phi_star: Some(min.2),
            method: Method::Numeric,
        },
        ExtremaRow {
            quantity: "spread_max",
            value: max.0,
            gamma_star: max.1,
            phi_star: Some(max.2),
            method: Method::Numeric,
        },
    ])
}

/// Extrema report: both branches of the average extremum plus the spread
/// extrema, each labeled analytic or numeric.
pub fn run_extrema(config: &ScenarioConfig) -> Result<Vec<ExtremaRow>> {
    let (geometry, lambda) = materialize(config, None);
    let sc = scenario(config, geometry, lambda)?;
    let mut rows = Vec::new();
    for (branch, name) in [(Branch::Upper, "average_max"), (Branch::Lower, "average_min")] {
        let ext = extremum(&sc, branch)?;
        rows.push(ExtremaRow {
            quantity: name,
            value: ext.value,
            gamma_star: ext.gamma_star,
            phi_star: None,
            method: ext.method,
        });
    }
    match spread_extrema(&sc) {
        Ok(spread) => {
            rows.push(ExtremaRow {
                quantity: "spread_min",
                value: spread.min,
                gamma_star: spread.min_gamma,
                phi_star: Some(spread.min_phi),
                method: Method::Analytic,
            });
            rows.push(ExtremaRow {
                quantity: "spread_max",
                value: spread.max,
                gamma_star: spread.max_gamma,
                phi_star: Some(spread.max_phi),
                method: Method::Analytic,
            });
        }
        Err(Error::RegimeNotApplicable { .. }) => {
            rows.extend(numeric_spread_sweep(config, &sc)?);
        }
        Err(e) => return Err(e),
    }
    Ok(rows)
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        // Display prints the shortest digit string that round-trips; NaN and
        // infinities are emitted as an empty (flagged) field instead.
        Some(x) if x.is_finite() => format!("{x}"),
        _ => String::new(),
    }
}

/// Writes a sweep table; with `compare` set, appends per-row
/// approximation-error columns.
pub fn write_sweep_csv(rows: &[SweepRow], compare: bool, out: &mut dyn Write) -> Result<()> {
    let mut header = String::from(
        "value,exact_avg,approx_avg,re_aw,im_aw,var_exact,var_approx,post_prob,flag",
    );
    if compare {
        header.push_str(",abs_err,rel_err");
    }
    writeln!(out, "{header}")?;
    for row in rows {
        let mut line = format!(
            "{},{},{},{},{},{},{},{},{}",
            fmt_opt(Some(row.value)),
            fmt_opt(row.exact_avg),
            fmt_opt(row.approx_avg),
            fmt_opt(row.re_aw),
            fmt_opt(row.im_aw),
            fmt_opt(row.var_exact),
            fmt_opt(row.var_approx),
            fmt_opt(row.post_prob),
            row.flag
        );
        if compare {
            let err = match (row.exact_avg, row.approx_avg) {
                (Some(e), Some(a)) => Some((e - a).abs()),
                _ => None,
            };
            let rel = match (err, row.exact_avg) {
                (Some(err), Some(e)) if e.abs() > 0.0 => Some(err / e.abs()),
                _ => None,
            };
            line.push_str(&format!(",{},{}", fmt_opt(err), fmt_opt(rel)));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn write_distribution_csv(rows: &[DistributionRow], out: &mut dyn Write) -> Result<()> {
    writeln!(out, "p,density,closed_form")?;
    for row in rows {
        writeln!(out, "{},{},{}", row.p, row.density, row.closed_form)?;
    }
    Ok(())
}

pub fn write_extrema_csv(rows: &[ExtremaRow], out: &mut dyn Write) -> Result<()> {
    writeln!(out, "quantity,value,gamma_star,phi_star,method")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.quantity,
            fmt_opt(Some(row.value)),
            fmt_opt(Some(row.gamma_star)),
            fmt_opt(row.phi_star),
            row.method.label()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    const PI: f64 = std::f64::consts::PI;

    fn reference_config(sweep: &str) -> ScenarioConfig {
        let doc = format!(
            "[geometry]\ntheta = {}\ngamma = 0.0\nphi = {}\n\n\
             [probe]\ndelta_P = 1.0\ndelta_p = 1.0\np_phi = inf\n\n\
             [window]\nkind = rectangular\nT = 1.0\n\n\
             [coupling]\nlambda = 0.01\n\n{sweep}",
            PI / 2.0,
            PI / 4.0,
        );
        parse_config(&doc, &[], false).unwrap()
    }

    #[test]
    fn single_point_mode_emits_one_row() {
        let cfg = reference_config("");
        let rows = run_sweep(&cfg, 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].exact_avg.is_some());
        assert!(rows[0].post_prob.is_some());
    }

    #[test]
    fn sweep_crossing_pi_flags_weak_value_columns() {
        let cfg = reference_config(&format!(
            "[sweep]\nvariable = gamma\nstart = {}\nstop = {}\nsteps = 3\n",
            PI - 0.5,
            PI + 0.5
        ));
        let rows = run_sweep(&cfg, 1).unwrap();
        assert_eq!(rows.len(), 3);
        // middle row is exactly gamma = pi
        assert!(rows[1].re_aw.is_none());
        assert!(rows[1].flag.contains("orthogonal_postselection"));
        assert!(rows[1].exact_avg.is_some());
        assert!(rows[1].exact_avg.unwrap().is_finite());
        assert!(rows[0].re_aw.is_some() && rows[2].re_aw.is_some());
    }

    #[test]
    fn parallel_sweep_matches_serial() {
        let cfg = reference_config("[sweep]\nvariable = gamma\nstart = 0.0\nstop = 3.0\nsteps = 9\n");
        let serial = run_sweep(&cfg, 1).unwrap();
        let parallel = run_sweep(&cfg, 4).unwrap();
        assert_eq!(serial.len(), parallel.len());
        for (a, b) in serial.iter().zip(&parallel) {
            assert_eq!(a.exact_avg, b.exact_avg);
            assert_eq!(a.var_exact, b.var_exact);
        }
    }

    #[test]
    fn csv_is_deterministic_and_round_trips() {
        let cfg = reference_config("[sweep]\nvariable = gamma\nstart = 0.0\nstop = 3.0\nsteps = 5\n");
        let rows = run_sweep(&cfg, 2).unwrap();
        let mut first = Vec::new();
        write_sweep_csv(&rows, false, &mut first).unwrap();
        let mut second = Vec::new();
        write_sweep_csv(&run_sweep(&cfg, 1).unwrap(), false, &mut second).unwrap();
        assert_eq!(first, second);
        let text = String::from_utf8(first).unwrap();
        for line in text.lines().skip(1) {
            for field in line.split(',') {
                if field.is_empty() || field.chars().any(|c| c.is_alphabetic() && c != 'e' && c != '-') {
                    continue;
                }
                let parsed: f64 = field.parse().unwrap();
                assert_eq!(format!("{parsed}"), field);
            }
        }
        assert!(!text.contains("NaN") && !text.contains("inf"));
    }

    #[test]
    fn distribution_engine_and_closed_form_agree() {
        // Near-orthogonal postselection amplifies normalization truncation
        // error, so use a wider grid than the automatic one.
        let mut cfg = reference_config("[grid]\np_min = -9\np_max = 9\nn_points = 6001\n");
        cfg.geometry.gamma = PI - 0.02;
        let rows = run_distribution(&cfg).unwrap();
        let peak = rows.iter().map(|r| r.density).fold(0.0, f64::max);
        let worst = rows
            .iter()
            .map(|r| (r.density - r.closed_form).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8 * peak, "worst {worst} peak {peak}");
    }

    #[test]
    fn distribution_orthogonal_postselection_is_bimodal() {
        // gamma = pi, phi = pi/2: the density ~ exp(-p^2/2)[1 - c cos(lambda p)]
        // dips at p = 0 and peaks near p = +-sqrt(2) delta_P.
        let mut cfg = reference_config("");
        cfg.geometry.gamma = PI;
        cfg.geometry.phi = PI / 2.0;
        let rows = run_distribution(&cfg).unwrap();
        let near = |target: f64| {
            rows.iter()
                .min_by(|a, b| {
                    (a.p - target)
                        .abs()
                        .partial_cmp(&(b.p - target).abs())
                        .unwrap()
                })
                .unwrap()
                .density
        };
        let root2 = 2.0_f64.sqrt();
        assert!(near(root2) > 5.0 * near(0.0));
        assert!(near(-root2) > 5.0 * near(0.0));
        let peak = rows
            .iter()
            .max_by(|a, b| a.density.partial_cmp(&b.density).unwrap())
            .unwrap();
        assert!((peak.p.abs() - root2).abs() < 0.1);
    }

    #[test]
    fn distribution_theta_zero_gaussian_at_lambda() {
        let mut cfg = reference_config("");
        cfg.geometry.theta = 0.0;
        cfg.geometry.gamma = 0.0;
        cfg.lambda = 0.5;
        let rows = run_distribution(&cfg).unwrap();
        let peak = rows
            .iter()
            .max_by(|a, b| a.density.partial_cmp(&b.density).unwrap())
            .unwrap();
        assert!((peak.p - 0.5).abs() < 0.01);
    }

    #[test]
    fn extrema_reference_bottom() {
        let cfg = reference_config("");
        let rows = run_extrema(&cfg).unwrap();
        let upper = rows.iter().find(|r| r.quantity == "average_max").unwrap();
        assert_eq!(upper.method, Method::Analytic);
        assert!((upper.value - 100.0).abs() < 1e-6);
        let nu = 1.0 / 2.0_f64.sqrt();
        assert!((upper.gamma_star - (PI - 0.01 / nu)).abs() < 1e-9);
        let smin = rows.iter().find(|r| r.quantity == "spread_min").unwrap();
        let smax = rows.iter().find(|r| r.quantity == "spread_max").unwrap();
        assert!((smin.value - 7500.0).abs() < 1e-6 * 7500.0);
        assert!((smax.value - 30000.0).abs() < 1e-6 * 30000.0);
    }

    #[test]
    fn extrema_numeric_fallback_for_small_p_phi() {
        let mut cfg = reference_config("");
        let nu = 1.0 / 2.0_f64.sqrt();
        cfg.probe.p_phi = 5.0 * nu;
        let rows = run_extrema(&cfg).unwrap();
        let smin = rows.iter().find(|r| r.quantity == "spread_min").unwrap();
        assert_eq!(smin.method, Method::Numeric);
        assert!(smin.value.is_finite() && smin.value > 0.0);
    }

    #[test]
    fn extrema_degenerate_theta_errors() {
        let mut cfg = reference_config("");
        cfg.geometry.theta = 0.0;
        assert!(matches!(
            run_extrema(&cfg),
            Err(Error::DegenerateGeometry)
        ));
    }
}
