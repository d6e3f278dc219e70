//! Pullback and ideal properties across modules: the morphism law
//! `delta o I* = I* o delta`, pullback multiplicativity, agreement of the
//! integral residuals with the pullback coefficients (two independent
//! code paths), the dependency condition for differential ideals, and the
//! worked radial examples.

mod common;

use aeds_core::algebroid::{exterior_derivative, wedge, Algebroid, Form};
use aeds_core::chart::{is_zero, Chart, SampleSpec};
use aeds_core::eds::{
    dependency_residual, ideal_membership, integral_residual, is_differential_ideal, IdealSpec,
};
use aeds_core::expr::{parse, Expr};
use aeds_core::prolong::{prolong_connection, BundleSection, ConnectionData, ProlongedAlgebroid};

use common::{cartesian_radial_prolongation, radial_prolongation, random_form, semilinear_prolongation, Rng};

fn assert_form_zero(form: &Form, spec: &SampleSpec, context: &str) {
    let chart = form.algebroid().chart();
    for (key, coeff) in form.coefficients() {
        let check = is_zero(coeff, chart, spec).unwrap();
        assert!(
            check.pass,
            "{context}: coefficient {key:?} has residual {}",
            check.max_abs
        );
    }
}

fn test_sections(prolonged: &ProlongedAlgebroid) -> Vec<BundleSection> {
    let base_chart = prolonged.base().chart();
    let mut rng = Rng::new(907);
    let comps: Vec<Expr> = prolonged
        .fiber()
        .iter()
        .map(|_| common::random_poly(&mut rng, base_chart))
        .collect();
    vec![BundleSection::new(&prolonged.fiber().to_vec(), comps).unwrap()]
}

fn connection_prolongation() -> ProlongedAlgebroid {
    let base = Algebroid::tangent(Chart::new(&["x", "y"]));
    let full = Chart::new(&["x", "y", "u"]);
    let conn = ConnectionData {
        coeffs: vec![vec![parse("y*u", &full).unwrap(), Expr::zero()]],
    };
    prolong_connection(base, Chart::new(&["u"]), conn).unwrap()
}

#[test]
fn pullback_commutes_with_delta() {
    let spec = SampleSpec::default();
    let mut rng = Rng::new(606);
    let bundles = vec![
        ("semilinear", semilinear_prolongation()),
        ("radial-atiyah", radial_prolongation()),
        ("radial-manifold", cartesian_radial_prolongation()),
        ("connection", connection_prolongation()),
    ];
    for (name, prolonged) in bundles {
        let algebroid = prolonged.algebroid().clone();
        for section in test_sections(&prolonged) {
            for degree in 0..=2usize.min(algebroid.rank() - 1) {
                let omega = random_form(&mut rng, &algebroid, degree);
                let lhs = exterior_derivative(&prolonged.pullback(&section, &omega).unwrap());
                let rhs = prolonged
                    .pullback(&section, &exterior_derivative(&omega))
                    .unwrap();
                let diff = lhs.sub(&rhs).unwrap();
                assert_form_zero(&diff, &spec, &format!("{name} morphism at degree {degree}"));
            }
        }
    }
}

#[test]
fn pullback_is_multiplicative() {
    let spec = SampleSpec::default();
    let mut rng = Rng::new(707);
    let prolonged = semilinear_prolongation();
    let algebroid = prolonged.algebroid().clone();
    let section = test_sections(&prolonged).remove(0);
    let omega = random_form(&mut rng, &algebroid, 1);
    let eta = random_form(&mut rng, &algebroid, 1);
    let lhs = prolonged
        .pullback(&section, &wedge(&omega, &eta).unwrap())
        .unwrap();
    let rhs = wedge(
        &prolonged.pullback(&section, &omega).unwrap(),
        &prolonged.pullback(&section, &eta).unwrap(),
    )
    .unwrap();
    assert_form_zero(&lhs.sub(&rhs).unwrap(), &spec, "pullback multiplicativity");
}

#[test]
fn integral_residuals_match_pullback_coefficients() {
    // two independent code paths: the explicit residual formula and the
    // pullback machinery
    let spec = SampleSpec::default();
    let prolonged = semilinear_prolongation();
    let algebroid = prolonged.algebroid().clone();
    let full = algebroid.chart().clone();
    let base_chart = prolonged.base().chart().clone();

    let mut theta = Form::zero(algebroid.clone(), 1);
    theta.set(vec![1], Expr::one());
    theta.set(vec![0], parse("u", &full).unwrap().neg());
    let ideal = IdealSpec::new(algebroid, vec![("theta".into(), theta.clone())], false).unwrap();

    // a section that is not a solution, to keep the residuals nonzero
    let section = BundleSection::new(
        &["u".to_string()],
        vec![parse("x^2 - y", &base_chart).unwrap()],
    )
    .unwrap();

    let report = integral_residual(&prolonged, &ideal, &section, &spec).unwrap();
    let pulled = prolonged.pullback(&section, &theta).unwrap();

    // the single generator against the single base direction
    let residual_family = &report.families[0];
    let coeff = pulled.coefficient(&[0]);
    let points = aeds_core::chart::sample_points(&base_chart, &spec);
    let mut max_abs: f64 = 0.0;
    for p in &points {
        max_abs = max_abs.max(coeff.evaluate(p).unwrap().abs());
    }
    assert!(
        (residual_family.max_residual - max_abs).abs() < 1e-12,
        "paths disagree: {} vs {max_abs}",
        residual_family.max_residual
    );
}

#[test]
fn connection_prolongation_integral_residuals_match_pullback() {
    // on a connection splitting the fiber duals pick up -rho A
    // corrections; the residual formula and the pullback must still agree
    let spec = SampleSpec::default();
    let prolonged = connection_prolongation();
    let algebroid = prolonged.algebroid().clone();
    let full = algebroid.chart().clone();
    let base_chart = prolonged.base().chart().clone();

    let mut gen = Form::zero(algebroid.clone(), 1);
    gen.set(vec![0], parse("y - u", &full).unwrap());
    gen.set(vec![2], parse("1 + x^2", &full).unwrap());
    let ideal = IdealSpec::new(algebroid, vec![("g".into(), gen.clone())], false).unwrap();

    let section = BundleSection::new(
        &["u".to_string()],
        vec![parse("x*y - 0.5*y^2", &base_chart).unwrap()],
    )
    .unwrap();

    let report = integral_residual(&prolonged, &ideal, &section, &spec).unwrap();
    let pulled = prolonged.pullback(&section, &gen).unwrap();
    let points = aeds_core::chart::sample_points(&base_chart, &spec);
    for (a, fam) in report.families.iter().enumerate() {
        let coeff = pulled.coefficient(&[a]);
        let mut max_abs: f64 = 0.0;
        for p in &points {
            max_abs = max_abs.max(coeff.evaluate(p).unwrap().abs());
        }
        assert!(
            (fam.max_residual - max_abs).abs() < 1e-12,
            "direction {a}: {} vs {max_abs}",
            fam.max_residual
        );
    }
}

#[test]
fn differential_ideal_plus_integral_implies_dependency() {
    // the dependency condition follows from closure for any solution
    let spec = SampleSpec::default();

    let prolonged = semilinear_prolongation();
    let algebroid = prolonged.algebroid().clone();
    let full = algebroid.chart().clone();
    let mut theta = Form::zero(algebroid.clone(), 1);
    theta.set(vec![1], Expr::one());
    theta.set(vec![0], parse("u", &full).unwrap().neg());
    let ideal = IdealSpec::new(algebroid, vec![("theta".into(), theta)], false).unwrap();
    assert!(is_differential_ideal(&ideal, &spec).unwrap().pass());

    let base_chart = prolonged.base().chart().clone();
    let section = BundleSection::new(
        &["u".to_string()],
        vec![parse("sin(y - 2*x) * exp(x)", &base_chart).unwrap()],
    )
    .unwrap();
    let integral = integral_residual(&prolonged, &ideal, &section, &spec).unwrap();
    assert!(integral.pass());
    let dependency = dependency_residual(&prolonged, &ideal, &section, &spec).unwrap();
    assert!(dependency.pass(), "\n{dependency}");
}

#[test]
fn radial_quotient_ideal_is_differential_with_exact_solution() {
    let spec = SampleSpec::default();
    let prolonged = radial_prolongation();
    let algebroid = prolonged.algebroid().clone();
    let full = algebroid.chart().clone();

    // generator E^r - r e^t
    let mut gen = Form::zero(algebroid.clone(), 1);
    gen.set(vec![2], Expr::one());
    gen.set(vec![0], parse("-r", &full).unwrap());
    let ideal = IdealSpec::new(algebroid, vec![("sb".into(), gen)], false).unwrap();

    assert!(is_differential_ideal(&ideal, &spec).unwrap().pass());

    let base_chart = prolonged.base().chart().clone();
    let exact = BundleSection::new(
        &["r".to_string()],
        vec![parse("exp(t)", &base_chart).unwrap()],
    )
    .unwrap();
    let report = integral_residual(&prolonged, &ideal, &exact, &spec).unwrap();
    assert!(report.pass());
    assert!(report.max_residual() < 1e-9);
    let dep = dependency_residual(&prolonged, &ideal, &exact, &spec).unwrap();
    assert!(dep.pass());

    // a perturbed section fails with the expected magnitude
    let wrong = BundleSection::new(
        &["r".to_string()],
        vec![parse("exp(2*t)", &base_chart).unwrap()],
    )
    .unwrap();
    let report = integral_residual(&prolonged, &ideal, &wrong, &spec).unwrap();
    assert!(!report.pass());
    // residual field is 2e^{2t} - e^{2t} = e^{2t}, max over t in [0,1]
    let fam = &report.families[0];
    assert!(fam.max_residual > 1.0 && fam.max_residual < std::f64::consts::E.powi(2) + 1e-9);
}

#[test]
fn cartesian_radial_solution_is_integral_manifold() {
    let spec = SampleSpec::default();
    let prolonged = cartesian_radial_prolongation();
    let algebroid = prolonged.algebroid().clone();
    let full = algebroid.chart().clone();

    let mut gen_x = Form::zero(algebroid.clone(), 1);
    gen_x.set(vec![1], Expr::one());
    gen_x.set(vec![0], parse("-(x + y*(x^2 + y^2))", &full).unwrap());
    let mut gen_y = Form::zero(algebroid.clone(), 1);
    gen_y.set(vec![2], Expr::one());
    gen_y.set(vec![0], parse("-(y - x*(x^2 + y^2))", &full).unwrap());
    let ideal = IdealSpec::new(
        algebroid,
        vec![("dx".into(), gen_x), ("dy".into(), gen_y)],
        false,
    )
    .unwrap();
    assert!(is_differential_ideal(&ideal, &spec).unwrap().pass());

    // r0 = 1, theta0 = 0: x = e^t cos(theta(t)), y = e^t sin(theta(t))
    let base_chart = prolonged.base().chart().clone();
    let section = BundleSection::new(
        &["x".to_string(), "y".to_string()],
        vec![
            parse("exp(t)*cos(0.5*(1 - exp(2*t)))", &base_chart).unwrap(),
            parse("exp(t)*sin(0.5*(1 - exp(2*t)))", &base_chart).unwrap(),
        ],
    )
    .unwrap();
    let report = integral_residual(&prolonged, &ideal, &section, &spec).unwrap();
    assert!(report.pass(), "\n{report}");
}

#[test]
fn membership_in_differential_closure() {
    // with the closure flag set, delta(theta) joins the span even when
    // the plain algebraic span lacks it
    let spec = SampleSpec::default();
    let base = Algebroid::tangent(Chart::new(&["x", "y"]));
    let mut gen = Form::zero(base.clone(), 1);
    gen.set(vec![1], Expr::var("x"));
    let eta = exterior_derivative(&gen); // dx ^ dy

    let algebraic = IdealSpec::new(base.clone(), vec![("xdy".into(), gen.clone())], false).unwrap();
    let closed = IdealSpec::new(base, vec![("xdy".into(), gen)], true).unwrap();

    assert!(!ideal_membership(&algebraic, &eta, &spec).unwrap().member);
    assert!(ideal_membership(&closed, &eta, &spec).unwrap().member);
}
