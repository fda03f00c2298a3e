//! Monte Carlo checks of the fitting machinery against simulated panels.

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use stergm::graph::Decision;
use stergm::inference::{fit_per_time_compiled, lr_test, maximize, maximize_compiled, FitConfig};
use stergm::likelihood::{CompiledPanel, ThetaVector};
use stergm::simulate::{simulate_panel, SimConfig, WealthRule};
use stergm::stats::{ModelSpec, TermSpec};

/// Asymptotic Kolmogorov-Smirnov p-value for a one-sample statistic `d`.
fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        p += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
    }
    p.clamp(0.0, 1.0)
}

fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn ks_helper_accepts_exact_uniform_grid() {
    let xs: Vec<f64> = (0..500).map(|i| (i as f64 + 0.5) / 500.0).collect();
    let d = ks_statistic(xs, |x| x);
    assert!(d <= 0.001 + 1e-12);
    assert!(ks_p_value(d, 500) > 0.99);
    assert!(ks_p_value(0.2, 500) < 1e-6);
}

#[test]
fn deviance_of_a_null_extra_term_is_chi_square() {
    let reduced = ModelSpec::symmetric(vec![TermSpec::Edges]);
    let full = ModelSpec::new(
        vec![TermSpec::Edges, TermSpec::nodematch(Decision::Cooperate)],
        vec![TermSpec::Edges],
    );
    let truth = ThetaVector::new(vec![-0.8], vec![0.6]);
    let cfg = FitConfig::default();
    let devs: Vec<f64> = (0..500u64)
        .into_par_iter()
        .map(|rep| {
            let mut sim = SimConfig::new(reduced.clone(), truth.clone());
            sim.n = 5;
            sim.initial_ties = 3;
            sim.games = 12;
            sim.transitions = 3;
            sim.seed = 10_000 + rep;
            let panel = simulate_panel(&sim, &WealthRule::default()).unwrap();
            let a = maximize(&panel, &reduced, &cfg).unwrap();
            let b = maximize(&panel, &full, &cfg).unwrap();
            assert!(a.is_clean() && b.is_clean());
            let lr = lr_test(&a, &b).unwrap();
            assert_eq!(lr.df, 1);
            lr.deviance
        })
        .collect();
    let chi = ChiSquared::new(1.0).unwrap();
    let d = ks_statistic(devs, |x| chi.cdf(x));
    let p = ks_p_value(d, 500);
    assert!(p > 0.01, "KS D = {d}, p = {p}");
}

#[test]
fn per_time_estimates_scatter_around_the_pooled_fit() {
    let spec = ModelSpec::symmetric(vec![TermSpec::Edges, TermSpec::nodematch(Decision::Cooperate)]);
    let truth = ThetaVector::new(vec![-1.0, 0.5], vec![0.8, 0.3]);
    let cfg = FitConfig::default();
    let (mut inside, mut total) = (0usize, 0usize);
    for rep in 0..20u64 {
        let mut sim = SimConfig::new(spec.clone(), truth.clone());
        sim.games = 40;
        sim.seed = 500 + rep;
        let panel = simulate_panel(&sim, &WealthRule::default()).unwrap();
        let cp = CompiledPanel::new(&panel, &spec).unwrap();
        let pooled = maximize_compiled(&cp, &cfg).unwrap();
        assert!(pooled.is_clean());
        for (_, slice) in fit_per_time_compiled(&cp, &cfg) {
            let slice = slice.unwrap();
            for k in 0..spec.dim() {
                if let (Some(est), Some(se), Some(pool)) = (slice.theta[k], slice.se[k], pooled.theta[k]) {
                    total += 1;
                    if (est - pool).abs() <= 3.0 * se {
                        inside += 1;
                    }
                }
            }
        }
    }
    let frac = inside as f64 / total as f64;
    assert!(total > 400);
    assert!(frac >= 0.95, "{inside}/{total}");
}

#[test]
fn uniform_panel_refits_near_zero() {
    let spec = ModelSpec::symmetric(vec![
        TermSpec::Edges,
        TermSpec::Triangles,
        TermSpec::nodematch(Decision::Cooperate),
        TermSpec::nodematch(Decision::Defect),
        TermSpec::absdiff(0.001).unwrap(),
    ]);
    let mut sim = SimConfig::new(spec.clone(), ThetaVector::zeros(&spec));
    sim.games = 60;
    sim.seed = 3;
    let panel = simulate_panel(&sim, &WealthRule::default()).unwrap();
    let fit = maximize(&panel, &spec, &FitConfig::default()).unwrap();
    assert!(fit.is_clean());
    for (est, se) in fit.theta.iter().zip(&fit.se) {
        assert!(est.unwrap().abs() < 3.0 * se.unwrap());
    }
}
