#![allow(dead_code)]

//! Shared fixtures for the integration tests: the bundled algebroids, a
//! seeded random-form generator, and the intrinsic evaluation oracles
//! kept independent of the coefficientwise implementation paths.

use std::sync::Arc;

use aeds_core::algebroid::{bracket, Algebroid, Form, Section};
use aeds_core::chart::Chart;
use aeds_core::expr::{parse, Expr};
use aeds_core::ip::IpData;
use aeds_core::prolong::{prolong_trivial, ProlongedAlgebroid};

pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn int(&mut self, lo: i64, hi: i64) -> i64 {
        lo + (self.next_u64() % (hi - lo + 1) as u64) as i64
    }
}

/// Random polynomial of degree <= 2 with small integer coefficients.
pub fn random_poly(rng: &mut Rng, chart: &Chart) -> Expr {
    let mut e = Expr::constant(rng.int(-2, 2) as f64);
    for c in chart.coords() {
        let lin = rng.int(-2, 2);
        if lin != 0 {
            e = e.add(Expr::var(c).scale(lin as f64));
        }
    }
    // one random quadratic cross term
    let coords = chart.coords();
    let a = (rng.next_u64() % coords.len() as u64) as usize;
    let b = (rng.next_u64() % coords.len() as u64) as usize;
    let q = rng.int(-1, 1);
    if q != 0 {
        e = e.add(Expr::var(&coords[a]).mul(Expr::var(&coords[b])).scale(q as f64));
    }
    e
}

/// Random form of the given degree with polynomial coefficients.
pub fn random_form(rng: &mut Rng, algebroid: &Arc<Algebroid>, degree: usize) -> Form {
    let rank = algebroid.rank();
    let mut form = Form::zero(algebroid.clone(), degree);
    let mut tuple = vec![0usize; degree];
    fn rec(
        rank: usize,
        degree: usize,
        start: usize,
        tuple: &mut Vec<usize>,
        pos: usize,
        rng: &mut Rng,
        algebroid: &Arc<Algebroid>,
        form: &mut Form,
    ) {
        if pos == degree {
            let coeff = random_poly(rng, algebroid.chart());
            form.set(tuple.clone(), coeff);
            return;
        }
        for i in start..rank {
            tuple[pos] = i;
            rec(rank, degree, i + 1, tuple, pos + 1, rng, algebroid, form);
        }
    }
    rec(rank, degree, 0, &mut tuple, 0, rng, algebroid, &mut form);
    form
}

/// Random section with polynomial components.
pub fn random_section(rng: &mut Rng, algebroid: &Arc<Algebroid>) -> Section {
    let comps = (0..algebroid.rank())
        .map(|_| random_poly(rng, algebroid.chart()))
        .collect();
    Section::new(algebroid.clone(), comps).unwrap()
}

/// Intrinsic alternating-sum formula for the exterior derivative,
/// evaluated symbolically on a tuple of sections. Independent of the
/// coefficientwise implementation.
pub fn intrinsic_delta_apply(form: &Form, sections: &[&Section]) -> Expr {
    let algebroid = form.algebroid().clone();
    let q1 = sections.len();
    let mut out = Expr::zero();
    for i in 0..q1 {
        let rest: Vec<&Section> = sections
            .iter()
            .enumerate()
            .filter(|(s, _)| *s != i)
            .map(|(_, s)| *s)
            .collect();
        let inner = form.apply(&rest).unwrap();
        let term = algebroid.anchor_apply(sections[i], &inner);
        out = if i % 2 == 0 { out.add(term) } else { out.sub(term) };
    }
    for i in 0..q1 {
        for j in (i + 1)..q1 {
            let br = bracket(sections[i], sections[j]).unwrap();
            let mut tuple: Vec<&Section> = vec![&br];
            for (s, sec) in sections.iter().enumerate() {
                if s != i && s != j {
                    tuple.push(sec);
                }
            }
            let term = form.apply(&tuple).unwrap();
            out = if (i + j) % 2 == 1 {
                out.sub(term)
            } else {
                out.add(term)
            };
        }
    }
    out
}

/// Direct Lie-derivative formula, evaluated symbolically:
/// `rho(sigma)(w(s1..sq)) - sum_i w(s1, .., [sigma, s_i], .., sq)`.
pub fn direct_lie_apply(sigma: &Section, form: &Form, sections: &[&Section]) -> Expr {
    let algebroid = form.algebroid().clone();
    let inner = form.apply(sections).unwrap();
    let mut out = algebroid.anchor_apply(sigma, &inner);
    for i in 0..sections.len() {
        let br = bracket(sigma, sections[i]).unwrap();
        let mut tuple: Vec<&Section> = Vec::with_capacity(sections.len());
        for (s, sec) in sections.iter().enumerate() {
            tuple.push(if s == i { &br } else { sec });
        }
        out = out.sub(form.apply(&tuple).unwrap());
    }
    out
}

// -- the bundled algebroids ---------------------------------------------

/// Semilinear transport bundle: rank-1 base over `(x, y)` with anchor
/// `(1, 2)`, prolonged by one fiber `u`.
pub fn semilinear_prolongation() -> ProlongedAlgebroid {
    let chart = Chart::new(&["x", "y"]);
    let base = Algebroid::new(
        chart.clone(),
        1,
        vec![vec![parse("1", &chart).unwrap(), parse("2", &chart).unwrap()]],
        vec![vec![vec![Expr::zero()]]],
        Some(vec!["ew".into()]),
    );
    prolong_trivial(base, Chart::new(&["u"])).unwrap()
}

/// Quotient algebroid of the radially symmetric system: rank-2 base over
/// `t` (time translation plus the isotropy direction with zero anchor),
/// prolonged by the radius fiber.
pub fn radial_prolongation() -> ProlongedAlgebroid {
    let chart = Chart::new(&["t"]).with_domain("t", 0.0, 1.0);
    let base = Algebroid::new(
        chart,
        2,
        vec![vec![Expr::one()], vec![Expr::zero()]],
        vec![vec![vec![Expr::zero(); 2]; 2]; 2],
        Some(vec!["et".into(), "es".into()]),
    );
    prolong_trivial(base, Chart::new(&["r"]).with_domain("r", 0.5, 1.5)).unwrap()
}

/// Planar radial system as an EDS over time: rank-1 base over `t`,
/// fibers `(x, y)`.
pub fn cartesian_radial_prolongation() -> ProlongedAlgebroid {
    let chart = Chart::new(&["t"]).with_domain("t", 0.0, 1.0);
    let base = Algebroid::tangent(chart);
    prolong_trivial(base, Chart::new(&["x", "y"])).unwrap()
}

pub fn heisenberg_c() -> Vec<Vec<Vec<f64>>> {
    let mut c = vec![vec![vec![0.0; 3]; 3]; 3];
    c[0][2][1] = 1.0;
    c[2][0][1] = -1.0;
    c
}

pub fn so3_c() -> Vec<Vec<Vec<f64>>> {
    let mut c = vec![vec![vec![0.0; 3]; 3]; 3];
    for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        c[i][j][k] = 1.0;
        c[j][i][k] = -1.0;
    }
    c
}

pub fn r1_ip() -> IpData {
    IpData::build(1, vec![vec![vec![0.0]]], vec![Expr::zero()]).unwrap()
}

pub fn heisenberg_ip() -> IpData {
    IpData::build(3, heisenberg_c(), vec![Expr::zero(); 3]).unwrap()
}

pub fn so3_ip() -> IpData {
    IpData::build(3, so3_c(), vec![Expr::zero(); 3]).unwrap()
}

/// so(3) with a reduced field quadratic in the fiber.
pub fn so3_quadratic_ip() -> IpData {
    let chart = aeds_core::ip::ip_chart(3);
    let gamma = vec![
        parse("w2*w3", &chart).unwrap(),
        parse("-w1*w3", &chart).unwrap(),
        parse("0.5*w1*w2", &chart).unwrap(),
    ];
    IpData::build(3, so3_c(), gamma).unwrap()
}

/// The six bundled algebroids the calculus laws are checked on.
pub fn bundled_algebroids() -> Vec<(String, Arc<Algebroid>)> {
    vec![
        (
            "semilinear".to_string(),
            semilinear_prolongation().algebroid().clone(),
        ),
        (
            "radial-atiyah".to_string(),
            radial_prolongation().algebroid().clone(),
        ),
        (
            "radial-manifold".to_string(),
            cartesian_radial_prolongation().algebroid().clone(),
        ),
        ("r1".to_string(), r1_ip().algebroid().clone()),
        ("heisenberg".to_string(), heisenberg_ip().algebroid().clone()),
        ("so3".to_string(), so3_ip().algebroid().clone()),
    ]
}
