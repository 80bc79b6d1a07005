use approx::assert_relative_eq;
use dpim::linalg::{c, norm2, CVector};
use dpim::model::{duffing, two_dof, ForcingSpec, QuadSystem, TwoDofParams};
use dpim::multiindex::MultiIndex;
use dpim::parametrisation::{CoefficientDump, Parametrisation, Ratio, Settings, Style};
use dpim::romdyn::{backbone, GenericRom};
use dpim::spectral::Normalisation;
use dpim::validity::polar_point;
use dpim::Error;

fn forced_duffing(kappa: f64) -> QuadSystem {
    duffing(1.5, 0.02, 1.0).augment_forcing(&ForcingSpec::cosine(3, 1, 1.5, kappa)).unwrap()
}

fn homological_defect(par: &Parametrisation) -> f64 {
    let base = par.system().base();
    let ys = [par.master().right(0), par.master().right(1)];
    let mut worst = 0.0f64;
    for (alpha, coef) in par.iter().filter(|(a, _)| a.order() >= 2) {
        let mut lhs = (base.b() * coef.sigma - base.a()) * &coef.w;
        for s in 0..2 {
            lhs += base.b() * &ys[s] * coef.f[s];
        }
        let rhs = par.residual(&alpha);
        worst = worst.max(norm2(&(lhs - &rhs)) / norm2(&rhs).max(1.0));
    }
    worst
}

#[test]
fn every_coefficient_solves_its_homological_equation() {
    let auto = Parametrisation::build(&duffing(1.5, 0.0, 1.0), &Settings::new(Style::Cnf, 9, 1.5)).unwrap();
    assert!(homological_defect(&auto) < 1e-12);
    let graph = Parametrisation::build(&duffing(1.5, 0.0, 1.0), &Settings::new(Style::Graph, 7, 1.5)).unwrap();
    assert!(homological_defect(&graph) < 1e-12);
    let forced = Parametrisation::build(&forced_duffing(0.1), &Settings::new(Style::Cnf, 5, 1.5)).unwrap();
    assert!(homological_defect(&forced) < 1e-12);
    let twodof = Parametrisation::build(&two_dof(TwoDofParams::default()), &Settings::new(Style::Cnf, 7, 1.0)).unwrap();
    assert!(homological_defect(&twodof) < 1e-12);
}

#[test]
fn master_vectors_are_biorthonormal() {
    let sys = two_dof(TwoDofParams { xi1: 0.03, xi2: 0.01, ..TwoDofParams::default() });
    let par = Parametrisation::build(&sys, &Settings::new(Style::Cnf, 3, 1.0)).unwrap();
    let b = sys.base().b().clone();
    let m = par.master();
    for s in 0..2 {
        for t in 0..2 {
            let v = m.left(s).dotc(&(&b * m.right(t)));
            let expected = if s == t { 1.0 } else { 0.0 };
            assert_relative_eq!(v.re, expected, epsilon = 1e-12);
            assert!(v.im.abs() < 1e-12);
        }
    }
    assert_relative_eq!(m.displacement_amplitude().re, 1.0, epsilon = 1e-14);
}

#[test]
fn real_systems_give_conjugate_coefficients() {
    for (sys, ratio) in [
        (duffing(1.5, 0.0, 1.0), Ratio::PRIMARY),
        (forced_duffing(0.2), Ratio::PRIMARY),
        (
            duffing(1.5, 0.002, 1.0).augment_forcing(&ForcingSpec::cosine(3, 1, 0.5, 0.75)).unwrap(),
            Ratio::new(1, 3).unwrap(),
        ),
    ] {
        let par = Parametrisation::build(&sys, &Settings::new(Style::Cnf, 7, 1.5).with_ratio(ratio)).unwrap();
        for (alpha, coef) in par.iter() {
            let twin = par.coefficient(&alpha.conjugate()).expect("conjugate monomial present");
            for (a, b) in coef.w.iter().zip(twin.w.iter()) {
                assert!((a - b.conj()).norm() <= 1e-12 * (1.0 + a.norm()), "W at {alpha}");
            }
            assert!((coef.f[0] - twin.f[1].conj()).norm() <= 1e-12 * (1.0 + coef.f[0].norm()));
        }
    }
}

#[test]
fn forcing_coefficient_is_linear_in_kappa() {
    let settings = Settings::new(Style::Cnf, 5, 1.5).with_order_na(1);
    let one = Parametrisation::build(&forced_duffing(0.1), &settings).unwrap();
    let two = Parametrisation::build(&forced_duffing(0.2), &settings).unwrap();
    let f3 = |p: &Parametrisation| p.f_coefficient(&[0, 0, 1, 0], 0);
    assert!(f3(&one).norm() > 0.0);
    assert!((f3(&two) - f3(&one) * 2.0).norm() < 1e-14);
    let rom1 = GenericRom::extract(&one).unwrap();
    let rom2 = GenericRom::extract(&two).unwrap();
    assert!((rom1.c3 - rom2.c3).norm() < 1e-14);
    assert_relative_eq!(rom1.max_forcing(0.5).unwrap(), rom2.max_forcing(0.5).unwrap(), max_relative = 1e-12);
}

#[test]
fn zero_forcing_reproduces_autonomous_coefficients() {
    let auto = Parametrisation::build(&duffing(1.5, 0.02, 1.0), &Settings::new(Style::Cnf, 7, 1.5)).unwrap();
    let forced = Parametrisation::build(&forced_duffing(0.0), &Settings::new(Style::Cnf, 7, 1.5)).unwrap();
    for (alpha, coef) in auto.iter() {
        let mut e = alpha.exps().to_vec();
        e.extend([0, 0]);
        let other = forced.coefficient(&MultiIndex::new(&e)).unwrap();
        assert!(norm2(&(&coef.w - &other.w)) < 1e-12 * (1.0 + norm2(&coef.w)));
    }
}

#[test]
fn residual_expansion_matches_direct_evaluation() {
    let par = Parametrisation::build(&duffing(1.5, 0.0, 1.0), &Settings::new(Style::Cnf, 5, 1.5)).unwrap();
    let terms = par.residual_expansion();
    let ev = par.evaluator(5);
    for (rho, theta) in [(0.3, 0.0), (0.6, 1.1), (0.9, 2.5)] {
        let z = polar_point(2, Ratio::PRIMARY, rho, theta, 0.0);
        let mut e = CVector::zeros(3);
        for (alpha, coef) in &terms {
            e += coef * alpha.eval(&z);
        }
        let direct = ev.invariance_residual(&z);
        assert!(norm2(&(e - &direct)) <= 1e-10 * norm2(&direct));
    }
}

#[test]
fn rescaled_eigenvectors_rescale_coefficients() {
    let sys = duffing(1.5, 0.0, 1.0);
    let base = Parametrisation::build(&sys, &Settings::new(Style::Cnf, 7, 1.5)).unwrap();
    let gamma = 2.0f64;
    let scaled = Parametrisation::build(
        &sys,
        &Settings::new(Style::Cnf, 7, 1.5).with_normalisation(Normalisation::Scale(gamma)),
    )
    .unwrap();
    for (alpha, coef) in base.iter() {
        let other = scaled.coefficient(&alpha).unwrap();
        let k = gamma.powi(alpha.order() as i32);
        assert!(norm2(&(&other.w - &coef.w * c(k, 0.0))) <= 1e-11 * k * (1.0 + norm2(&coef.w)));
    }
}

#[test]
fn coefficient_dump_round_trips_bitwise() {
    let par = Parametrisation::build(&forced_duffing(0.175), &Settings::new(Style::Cnf, 5, 1.5)).unwrap();
    let text = par.to_json_string().unwrap();
    let back: CoefficientDump = serde_json::from_str(&text).unwrap();
    assert_eq!(back.monomials.len(), par.iter().count());
    for (m, (alpha, coef)) in back.monomials.iter().zip(par.iter()) {
        assert_eq!(m.alpha, alpha.exps());
        for (a, b) in m.w.iter().zip(coef.w.iter()) {
            assert_eq!(a[0].to_bits(), b.re.to_bits());
            assert_eq!(a[1].to_bits(), b.im.to_bits());
        }
    }
}

#[test]
fn graph_style_has_no_backbone() {
    let par = Parametrisation::build(&duffing(1.5, 0.0, 1.0), &Settings::new(Style::Graph, 7, 1.5)).unwrap();
    assert!(matches!(backbone(&par, &[0.5], 7), Err(Error::NotNormalForm)));
}

#[test]
fn invalid_orders_are_rejected() {
    let sys = duffing(1.5, 0.0, 1.0);
    assert!(matches!(Parametrisation::build(&sys, &Settings::new(Style::Cnf, 0, 1.5)), Err(Error::Config(_))));
    assert!(Ratio::new(0, 1).is_err());
}
