//! The verification suites. Each appends rows and checks to the artifacts.

use lefschetz_core::checks::{property_suite, CheckOutcome};
use lefschetz_core::geometry::{GroupElement, Scenario};
use lefschetz_core::lefschetz::{
    atiyah_bott, equivariant_lefschetz, main_theorem_constant_term, ConstantTermMode, EquivariantMethod,
};
use lefschetz_core::numerics::fit_leading_order;
use lefschetz_core::oscillatory::{
    circle_test_amplitude, expansion_fit, leading_coefficient, sphere_heat_amplitude,
    torus_test_amplitude, LeadingOptions, OscillatoryOptions,
};
use lefschetz_core::parametrix::{equivariant_trace_parametrix_with, SphereTraceEngine, TraceOptions};
use lefschetz_core::spectral::{heat_character_sum, lefschetz_cohomology, supertrace};
use lefschetz_core::{Error, Result};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{EffectiveConfig, Suite};
use crate::emit::{Artifacts, ExpansionRow, HeatTraceRow, LefschetzRow};

/// Runs every suite selected by the configuration.
pub fn run_suites(cfg: &EffectiveConfig) -> Artifacts {
    let mut a = Artifacts::default();
    let steps: [(Suite, &str, fn(&EffectiveConfig, &mut Artifacts) -> Result<()>); 4] = [
        (Suite::Oracles, "oracles", oracles),
        (Suite::Parametrix, "parametrix", parametrix),
        (Suite::StationaryPhase, "stationary-phase", stationary_phase),
        (Suite::Lefschetz, "lefschetz", lefschetz),
    ];
    if cfg.suite.includes(Suite::Oracles) || cfg.suite.includes(Suite::Lefschetz) {
        if let Err(e) = equivariant_rows(cfg, &mut a) {
            a.checks.push(failure("equivariant", &e));
        }
    }
    for (suite, name, f) in steps {
        if cfg.suite.includes(suite) {
            if let Err(e) = f(cfg, &mut a) {
                a.checks.push(failure(name, &e));
            }
        }
    }
    a
}

fn failure(suite: &str, e: &Error) -> CheckOutcome {
    CheckOutcome::new(format!("{suite}: {e}"), f64::INFINITY, 0.0)
}

fn elements(cfg: &EffectiveConfig) -> Vec<GroupElement> {
    cfg.group_elements.iter().map(|g| GroupElement::new(g.clone())).collect()
}

fn trace_options(cfg: &EffectiveConfig) -> TraceOptions {
    let mut o = TraceOptions::for_scenario(cfg.scenario());
    o.k_max = cfg.k_max;
    o.flat_x_nodes = cfg.node("flat_x").max(8);
    o.radial_nodes = cfg.node("trace_radial");
    o.angular_nodes = cfg.node("trace_angular");
    o
}

fn oscillatory_options(cfg: &EffectiveConfig) -> OscillatoryOptions {
    OscillatoryOptions {
        flat_x_nodes: cfg.node("flat_x"),
        radial_nodes: cfg.node("radial"),
        angular_nodes: cfg.node("angular"),
        group_nodes: cfg.node("group"),
        ..OscillatoryOptions::default()
    }
}

fn oracles(cfg: &EffectiveConfig, a: &mut Artifacts) -> Result<()> {
    let sc = cfg.scenario();
    for &j in &cfg.degrees {
        for g in elements(cfg) {
            for &t in &cfg.t_grid {
                let (v, tail) = heat_character_sum(sc, j, &g, t, cfg.cutoff)?;
                a.heat_trace.push(HeatTraceRow {
                    scenario: cfg.scenario.clone(),
                    degree: j,
                    method: "heat-spectral".into(),
                    t,
                    g: g.angles().to_vec(),
                    value: v,
                    err_est: tail,
                });
            }
        }
    }
    let mut worst: f64 = 0.0;
    let mut fixed: Option<f64> = None;
    for g in elements(cfg) {
        let expect = lefschetz_cohomology(sc, &g);
        for &t in &cfg.t_grid {
            let (v, tail) = supertrace(sc, &g, t)?;
            worst = worst.max((v - expect).norm() + tail);
        }
        match atiyah_bott(sc, &g) {
            Ok(r) => {
                let (v, _) = supertrace(sc, &g, cfg.t_grid[0])?;
                fixed = Some(fixed.unwrap_or(0.0).max((r.value - v).norm()));
            }
            Err(Error::NonTransversal { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    a.checks.push(CheckOutcome::new("supertrace-vs-cohomology", worst, cfg.tolerance("supertrace")));
    if let Some(f) = fixed {
        a.checks.push(CheckOutcome::new("fixed-point-vs-supertrace", f, cfg.tolerance("fixed_point")));
    }
    a.checks.extend(property_suite(&mut ChaCha8Rng::seed_from_u64(cfg.seed))?);
    Ok(())
}

fn equivariant_rows(cfg: &EffectiveConfig, a: &mut Artifacts) -> Result<()> {
    let sc = cfg.scenario();
    let methods = [
        EquivariantMethod::Cohomology,
        EquivariantMethod::HeatSpectral { t: cfg.lefschetz_t },
        EquivariantMethod::FixedPoint {
            nodes: cfg.node("fixed_point"),
        },
    ];
    let mut worst: f64 = 0.0;
    for k in &cfg.rho {
        let mut reference = None;
        for m in methods {
            let r = equivariant_lefschetz(sc, k, m)?;
            let base = *reference.get_or_insert(r.value);
            worst = worst.max((r.value - base).norm());
            a.lefschetz.push(LefschetzRow {
                scenario: cfg.scenario.clone(),
                rho: k.clone(),
                method: r.method.tag().into(),
                value: r.value,
                err_est: r.error_estimate,
            });
        }
    }
    a.checks.push(CheckOutcome::new("equivariant-methods-agree", worst, cfg.tolerance("equivariant")));
    Ok(())
}

fn parametrix(cfg: &EffectiveConfig, a: &mut Artifacts) -> Result<()> {
    let sc = cfg.scenario();
    let opts = trace_options(cfg);
    let mut worst: f64 = 0.0;
    let mut identity_samples = Vec::new();
    for &j in &cfg.degrees {
        if sc == Scenario::Sphere2 && j > 0 {
            // no chart symbol in these degrees; the spectral rows stand alone
            continue;
        }
        let engine = if sc == Scenario::Sphere2 {
            Some(SphereTraceEngine::new(j, &opts)?)
        } else {
            None
        };
        for g in elements(cfg) {
            let values: Vec<(Complex64, f64)> = match &engine {
                Some(e) => {
                    let hint = e.error_hint();
                    e.trace(&g, &cfg.t_grid)?.into_iter().map(|v| (v, hint)).collect()
                }
                None => cfg
                    .t_grid
                    .iter()
                    .map(|&t| equivariant_trace_parametrix_with(sc, j, &g, t, &opts).map(|r| (r.value, r.error_estimate)))
                    .collect::<Result<_>>()?,
            };
            for (&t, &(v, err)) in cfg.t_grid.iter().zip(&values) {
                let (s, _) = heat_character_sum(sc, j, &g, t, cfg.cutoff)?;
                worst = worst.max((v - s).norm() / s.norm().max(1.0));
                if j == 0 && g.is_identity() {
                    identity_samples.push((t, v.re));
                }
                a.heat_trace.push(HeatTraceRow {
                    scenario: cfg.scenario.clone(),
                    degree: j,
                    method: "heat-parametrix".into(),
                    t,
                    g: g.angles().to_vec(),
                    value: v,
                    err_est: err,
                });
            }
        }
    }
    a.checks.push(CheckOutcome::new("parametrix-vs-spectral", worst, cfg.tolerance("parametrix")));
    if identity_samples.len() >= 3 {
        let fit = fit_leading_order(&identity_samples, 0.0)?;
        let expect = -(sc.dim() as f64) / 2.0;
        a.checks.push(CheckOutcome::new(
            "identity-trace-exponent",
            (fit.exponent - expect).abs(),
            cfg.tolerance("order"),
        ));
    }
    Ok(())
}

fn stationary_phase(cfg: &EffectiveConfig, a: &mut Artifacts) -> Result<()> {
    let sc = cfg.scenario();
    let amp = match sc {
        Scenario::Circle => circle_test_amplitude(),
        Scenario::Torus2 => torus_test_amplitude(),
        Scenario::Sphere2 => sphere_heat_amplitude(),
    };
    let opts = oscillatory_options(cfg);
    let l0 = leading_coefficient(&amp, &LeadingOptions::default())?;
    let report = expansion_fit(&amp, &cfg.mu_grid, Some(l0.value), &opts)?;
    for &(mu, i, lead, err) in &report.samples {
        a.expansion.push(ExpansionRow {
            scenario: cfg.scenario.clone(),
            mu,
            integral: i,
            leading: lead,
            abs_err: err,
        });
    }
    a.checks.push(CheckOutcome::new(
        "expansion-order",
        (report.order_fit.exponent - report.kappa as f64).abs(),
        cfg.tolerance("order"),
    ));
    let smallest = report
        .samples
        .iter()
        .zip(report.ratios())
        .min_by(|x, y| x.0 .0.total_cmp(&y.0 .0))
        .map(|(_, r)| r)
        .unwrap_or(f64::NAN);
    a.checks.push(CheckOutcome::new(
        "leading-ratio-at-smallest-mu",
        (smallest - 1.0).abs(),
        cfg.tolerance("leading_ratio"),
    ));
    if let Some(fit) = &report.remainder_fit {
        // passes when the fitted exponent reaches the configured minimum
        a.checks.push(CheckOutcome::new(
            "remainder-exponent-shortfall",
            cfg.tolerance("remainder_exponent") - fit.exponent,
            0.0,
        ));
    }
    Ok(())
}

fn lefschetz(cfg: &EffectiveConfig, a: &mut Artifacts) -> Result<()> {
    let sc = cfg.scenario();
    let (mode, tol) = if sc.is_flat() {
        (ConstantTermMode::Exact, cfg.tolerance("constant_term"))
    } else {
        (
            ConstantTermMode::Extraction {
                ts: cfg.extraction_t_grid.clone(),
            },
            cfg.tolerance("extraction"),
        )
    };
    let mut worst: f64 = 0.0;
    for k in &cfg.rho {
        let r = main_theorem_constant_term(sc, k, &mode, &[])?;
        let reference = equivariant_lefschetz(sc, k, EquivariantMethod::Cohomology)?.value;
        worst = worst.max((r.value - reference).norm());
        a.lefschetz.push(LefschetzRow {
            scenario: cfg.scenario.clone(),
            rho: k.clone(),
            method: r.method.tag().into(),
            value: r.value,
            err_est: r.error_estimate,
        });
    }
    a.checks.push(CheckOutcome::new("constant-term-vs-cohomology", worst, tol));
    Ok(())
}
