//! Structural laws of the exterior calculus, checked with random
//! polynomial forms on every bundled algebroid: `delta^2 = 0`, the
//! antiderivation rule, agreement of the coefficientwise derivative with
//! the intrinsic alternating-sum formula, the Cartan formula against the
//! direct Lie-derivative formula, and anchor compatibility of the
//! bracket.

mod common;

use aeds_core::algebroid::{exterior_derivative, lie_derivative, wedge, Form};
use aeds_core::chart::{is_zero, SampleSpec};
use aeds_core::expr::Expr;

use common::{
    bundled_algebroids, direct_lie_apply, intrinsic_delta_apply, random_form, random_section, Rng,
};

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

#[test]
fn delta_squared_vanishes_on_all_bundled_algebroids() {
    let spec = SampleSpec::default();
    let mut rng = Rng::new(101);
    for (name, algebroid) in bundled_algebroids() {
        for degree in 0..=2usize.min(algebroid.rank().saturating_sub(1)) {
            let omega = random_form(&mut rng, &algebroid, degree);
            let ddo = exterior_derivative(&exterior_derivative(&omega));
            assert_form_zero(&ddo, &spec, &format!("{name} delta^2 on degree {degree}"));
        }
    }
}

#[test]
fn antiderivation_rule() {
    let spec = SampleSpec::default();
    let mut rng = Rng::new(202);
    for (name, algebroid) in bundled_algebroids() {
        for (q, r) in [(0usize, 1usize), (1, 1), (1, 2)] {
            if q + r + 1 > algebroid.rank() {
                continue;
            }
            let omega = random_form(&mut rng, &algebroid, q);
            let eta = random_form(&mut rng, &algebroid, r);
            let lhs = exterior_derivative(&wedge(&omega, &eta).unwrap());
            let mut rhs = wedge(&exterior_derivative(&omega), &eta).unwrap();
            let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
            rhs = rhs
                .add(&wedge(&omega, &exterior_derivative(&eta)).unwrap().scale_expr(&Expr::constant(sign)))
                .unwrap();
            let diff = lhs.sub(&rhs).unwrap();
            assert_form_zero(&diff, &spec, &format!("{name} antiderivation ({q},{r})"));
        }
    }
}

#[test]
fn coefficientwise_delta_agrees_with_intrinsic_formula() {
    let spec = SampleSpec::default();
    let mut rng = Rng::new(303);
    for (name, algebroid) in bundled_algebroids() {
        for degree in 0..=2usize.min(algebroid.rank().saturating_sub(1)) {
            let omega = random_form(&mut rng, &algebroid, degree);
            let domega = exterior_derivative(&omega);
            let sections: Vec<_> = (0..degree + 1)
                .map(|_| random_section(&mut rng, &algebroid))
                .collect();
            let refs: Vec<_> = sections.iter().collect();
            let coeffwise = domega.apply(&refs).unwrap();
            let intrinsic = intrinsic_delta_apply(&omega, &refs);
            let diff = coeffwise.sub(intrinsic);
            let check = is_zero(&diff, algebroid.chart(), &spec).unwrap();
            assert!(
                check.pass,
                "{name} intrinsic mismatch at degree {degree}: {}",
                check.max_abs
            );
        }
    }
}

#[test]
fn cartan_formula_agrees_with_direct_lie_derivative() {
    let spec = SampleSpec::default();
    let mut rng = Rng::new(404);
    for (name, algebroid) in bundled_algebroids() {
        for degree in 1..=2usize.min(algebroid.rank().saturating_sub(1)) {
            let omega = random_form(&mut rng, &algebroid, degree);
            let sigma = random_section(&mut rng, &algebroid);
            let lie = lie_derivative(&sigma, &omega).unwrap();
            let sections: Vec<_> = (0..degree)
                .map(|_| random_section(&mut rng, &algebroid))
                .collect();
            let refs: Vec<_> = sections.iter().collect();
            let via_cartan = lie.apply(&refs).unwrap();
            let direct = direct_lie_apply(&sigma, &omega, &refs);
            let diff = via_cartan.sub(direct);
            let check = is_zero(&diff, algebroid.chart(), &spec).unwrap();
            assert!(
                check.pass,
                "{name} Cartan mismatch at degree {degree}: {}",
                check.max_abs
            );
        }
    }
}

#[test]
fn bracket_is_anchor_compatible() {
    let spec = SampleSpec::default();
    let mut rng = Rng::new(505);
    for (name, algebroid) in bundled_algebroids() {
        let s1 = random_section(&mut rng, &algebroid);
        let s2 = random_section(&mut rng, &algebroid);
        let br = aeds_core::algebroid::bracket(&s1, &s2).unwrap();
        for coord in algebroid.chart().coords() {
            let f = Expr::var(coord);
            let lhs = algebroid.anchor_apply(&br, &f);
            let rhs = algebroid
                .anchor_apply(&s1, &algebroid.anchor_apply(&s2, &f))
                .sub(algebroid.anchor_apply(&s2, &algebroid.anchor_apply(&s1, &f)));
            let check = is_zero(&lhs.sub(rhs), algebroid.chart(), &spec).unwrap();
            assert!(
                check.pass,
                "{name}: anchor compatibility fails on {coord}, residual {}",
                check.max_abs
            );
        }
    }
}

#[test]
fn all_bundled_algebroids_validate() {
    let spec = SampleSpec::default();
    for (name, algebroid) in bundled_algebroids() {
        let report = algebroid.validate(&spec).unwrap();
        assert!(report.pass(), "{name} fails validation:\n{report}");
    }
}
