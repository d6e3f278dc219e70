#![allow(dead_code)]

//! Test-side helpers for the acceptance suite: a seeded generator for
//! random polynomial forms and the intrinsic evaluation oracle for the
//! exterior derivative (kept independent of the coefficientwise
//! implementation).

use std::sync::Arc;

use aeds_core::algebroid::{bracket, Algebroid, Form, Section};
use aeds_core::chart::Chart;
use aeds_core::expr::Expr;

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

pub fn random_poly(rng: &mut Rng, chart: &Chart) -> Expr {
    let mut e = Expr::constant(rng.int(-2, 2) as f64);
    for c in chart.coords() {
        let lin = rng.int(-2, 2);
        if lin != 0 {
            e = e.add(Expr::var(c).scale(lin as f64));
        }
    }
    let coords = chart.coords();
    let a = (rng.next_u64() % coords.len() as u64) as usize;
    let b = (rng.next_u64() % coords.len() as u64) as usize;
    let q = rng.int(-1, 1);
    if q != 0 {
        e = e.add(Expr::var(&coords[a]).mul(Expr::var(&coords[b])).scale(q as f64));
    }
    e
}

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

pub fn random_section(rng: &mut Rng, algebroid: &Arc<Algebroid>) -> Section {
    let comps = (0..algebroid.rank())
        .map(|_| random_poly(rng, algebroid.chart()))
        .collect();
    Section::new(algebroid.clone(), comps).unwrap()
}

/// Intrinsic alternating-sum formula for the exterior derivative.
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
