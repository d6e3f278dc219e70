//! Lie algebroid calculus: algebroid data with axiom validation, sections,
//! sparse exterior forms, wedge product, exterior derivative, Lie
//! derivative and interior product.
//!
//! An algebroid over an `n`-dimensional chart is a rank-`r` bundle given by
//! its anchor components `rho[alpha][i]` and structure functions
//! `structure[alpha][beta][gamma]` (the `gamma`-component of the bracket of
//! the `alpha`-th and `beta`-th basis sections). The exterior derivative is
//! computed coefficientwise from the structure data; the intrinsic
//! alternating-sum formula is kept in the test suite as an oracle.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::chart::{is_zero, Chart, SampleSpec};
use crate::expr::{EvalError, Expr, Point};
use crate::report::Report;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AlgebroidError {
    #[error("operands belong to different algebroids")]
    AlgebroidMismatch,
    #[error("interior product of a degree-0 form")]
    DegreeZero,
    #[error("form of degree {degree} applied to {given} sections")]
    ArityMismatch { degree: usize, given: usize },
    #[error("component count {given} does not match rank {rank}")]
    RankMismatch { rank: usize, given: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Rank-`r` Lie algebroid data over a chart.
#[derive(Debug, PartialEq)]
pub struct Algebroid {
    chart: Chart,
    rank: usize,
    /// `anchor[alpha][i]`: coefficient of d/dx^i in the image of basis
    /// section `alpha`.
    anchor: Vec<Vec<Expr>>,
    /// `structure[alpha][beta][gamma]`: structure functions of the bracket
    /// of basis sections.
    structure: Vec<Vec<Vec<Expr>>>,
    basis_names: Vec<String>,
}

impl Algebroid {
    /// Build an algebroid; entries are simplified on construction.
    /// Shapes must match (`anchor` is rank x dim, `structure` is
    /// rank x rank x rank).
    pub fn new(
        chart: Chart,
        rank: usize,
        anchor: Vec<Vec<Expr>>,
        structure: Vec<Vec<Vec<Expr>>>,
        basis_names: Option<Vec<String>>,
    ) -> Arc<Algebroid> {
        assert_eq!(anchor.len(), rank, "anchor must have one row per basis section");
        for row in &anchor {
            assert_eq!(row.len(), chart.dim(), "anchor row length must equal chart dimension");
        }
        assert_eq!(structure.len(), rank);
        for plane in &structure {
            assert_eq!(plane.len(), rank);
            for line in plane {
                assert_eq!(line.len(), rank);
            }
        }
        let basis_names = basis_names
            .unwrap_or_else(|| (1..=rank).map(|a| format!("e{a}")).collect());
        assert_eq!(basis_names.len(), rank);
        Arc::new(Algebroid {
            chart,
            rank,
            anchor: anchor
                .into_iter()
                .map(|row| row.into_iter().map(|e| e.simplify()).collect())
                .collect(),
            structure: structure
                .into_iter()
                .map(|p| {
                    p.into_iter()
                        .map(|l| l.into_iter().map(|e| e.simplify()).collect())
                        .collect()
                })
                .collect(),
            basis_names,
        })
    }

    /// Tangent-bundle algebroid of the chart: identity anchor, zero bracket.
    pub fn tangent(chart: Chart) -> Arc<Algebroid> {
        let n = chart.dim();
        let anchor = (0..n)
            .map(|a| {
                (0..n)
                    .map(|i| if i == a { Expr::one() } else { Expr::zero() })
                    .collect()
            })
            .collect();
        let structure = vec![vec![vec![Expr::zero(); n]; n]; n];
        let names = chart.coords().iter().map(|c| format!("d{c}")).collect();
        Algebroid::new(chart, n, anchor, structure, Some(names))
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn anchor(&self, alpha: usize, i: usize) -> &Expr {
        &self.anchor[alpha][i]
    }

    pub fn structure(&self, alpha: usize, beta: usize, gamma: usize) -> &Expr {
        &self.structure[alpha][beta][gamma]
    }

    pub fn basis_names(&self) -> &[String] {
        &self.basis_names
    }

    pub fn basis_index(&self, name: &str) -> Option<usize> {
        self.basis_names.iter().position(|b| b == name)
    }

    /// The derivation `rho(e_alpha)` applied to a function.
    pub fn anchor_apply_basis(&self, alpha: usize, f: &Expr) -> Expr {
        let mut out = Expr::zero();
        for (i, coord) in self.chart.coords().iter().enumerate() {
            out = out.add(self.anchor[alpha][i].clone().mul(f.differentiate(coord)));
        }
        out
    }

    /// The derivation `rho(sigma)` applied to a function.
    pub fn anchor_apply(&self, sigma: &Section, f: &Expr) -> Expr {
        let mut out = Expr::zero();
        for alpha in 0..self.rank {
            if sigma.components[alpha].is_const_zero() {
                continue;
            }
            out = out.add(
                sigma.components[alpha]
                    .clone()
                    .mul(self.anchor_apply_basis(alpha, f)),
            );
        }
        out
    }

    /// Check the algebroid axioms on the sample sweep: antisymmetry of the
    /// structure functions, anchor compatibility and the Jacobi identity.
    pub fn validate(&self, spec: &SampleSpec) -> Result<Report, AlgebroidError> {
        let mut report = Report::new();
        let chart = &self.chart;
        let r = self.rank;

        let mut antisym = crate::chart::ZeroCheck::trivial();
        for a in 0..r {
            for b in a..r {
                for g in 0..r {
                    let e = self.structure[a][b][g]
                        .clone()
                        .add(self.structure[b][a][g].clone());
                    antisym.merge(is_zero(&e, chart, spec)?);
                }
            }
        }
        report.push_zero_check("antisymmetry", antisym);

        let mut compat = crate::chart::ZeroCheck::trivial();
        for a in 0..r {
            for b in a..r {
                for k in 0..chart.dim() {
                    // rho^k_g L^g_{ab} - rho^i_a d(rho^k_b)/dx^i + rho^j_b d(rho^k_a)/dx^j
                    let mut lhs = Expr::zero();
                    for g in 0..r {
                        lhs = lhs.add(self.anchor[g][k].clone().mul(self.structure[a][b][g].clone()));
                    }
                    let da = self.anchor_apply_basis(a, &self.anchor[b][k]);
                    let db = self.anchor_apply_basis(b, &self.anchor[a][k]);
                    let e = lhs.sub(da).add(db);
                    compat.merge(is_zero(&e, chart, spec)?);
                }
            }
        }
        report.push_zero_check("anchor_compatibility", compat);

        let mut jacobi = crate::chart::ZeroCheck::trivial();
        for a in 0..r {
            for b in (a + 1)..r {
                for c in (b + 1)..r {
                    for d in 0..r {
                        let mut e = Expr::zero();
                        for (x, y, z) in [(a, b, c), (b, c, a), (c, a, b)] {
                            e = e.add(self.anchor_apply_basis(x, &self.structure[y][z][d]));
                            for eps in 0..r {
                                e = e.add(
                                    self.structure[x][eps][d]
                                        .clone()
                                        .mul(self.structure[y][z][eps].clone()),
                                );
                            }
                        }
                        jacobi.merge(is_zero(&e, chart, spec)?);
                    }
                }
            }
        }
        report.push_zero_check("jacobi", jacobi);

        Ok(report)
    }
}

pub(crate) fn same_algebroid(a: &Arc<Algebroid>, b: &Arc<Algebroid>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Section of an algebroid: coefficient vector in the basis sections.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    algebroid: Arc<Algebroid>,
    components: Vec<Expr>,
}

impl Section {
    pub fn new(algebroid: Arc<Algebroid>, components: Vec<Expr>) -> Result<Section, AlgebroidError> {
        if components.len() != algebroid.rank() {
            return Err(AlgebroidError::RankMismatch {
                rank: algebroid.rank(),
                given: components.len(),
            });
        }
        Ok(Section {
            algebroid,
            components: components.into_iter().map(|e| e.simplify()).collect(),
        })
    }

    /// The `alpha`-th basis section.
    pub fn basis(algebroid: Arc<Algebroid>, alpha: usize) -> Section {
        let mut components = vec![Expr::zero(); algebroid.rank()];
        components[alpha] = Expr::one();
        Section {
            algebroid,
            components,
        }
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn algebroid(&self) -> &Arc<Algebroid> {
        &self.algebroid
    }

    pub fn add(&self, other: &Section) -> Result<Section, AlgebroidError> {
        if !same_algebroid(&self.algebroid, &other.algebroid) {
            return Err(AlgebroidError::AlgebroidMismatch);
        }
        Ok(Section {
            algebroid: self.algebroid.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.clone().add(b.clone()))
                .collect(),
        })
    }

    pub fn scale(&self, f: &Expr) -> Section {
        Section {
            algebroid: self.algebroid.clone(),
            components: self
                .components
                .iter()
                .map(|c| f.clone().mul(c.clone()))
                .collect(),
        }
    }
}

/// Bracket of two sections, extended from the basis bracket by the Leibniz
/// rule:
/// `[s1,s2]^g = s1^a s2^b L^g_{ab} + rho(s1)(s2^g) - rho(s2)(s1^g)`.
pub fn bracket(s1: &Section, s2: &Section) -> Result<Section, AlgebroidError> {
    if !same_algebroid(&s1.algebroid, &s2.algebroid) {
        return Err(AlgebroidError::AlgebroidMismatch);
    }
    let algebroid = s1.algebroid.clone();
    let r = algebroid.rank();
    let mut components = Vec::with_capacity(r);
    for g in 0..r {
        let mut c = Expr::zero();
        for a in 0..r {
            if s1.components[a].is_const_zero() {
                continue;
            }
            for b in 0..r {
                let l = algebroid.structure(a, b, g);
                if l.is_const_zero() || s2.components[b].is_const_zero() {
                    continue;
                }
                c = c.add(
                    s1.components[a]
                        .clone()
                        .mul(s2.components[b].clone())
                        .mul(l.clone()),
                );
            }
        }
        c = c.add(algebroid.anchor_apply(s1, &s2.components[g]));
        c = c.sub(algebroid.anchor_apply(s2, &s1.components[g]));
        components.push(c);
    }
    Section::new(algebroid, components)
}

/// Exterior form of fixed degree, stored sparsely: strictly increasing
/// basis-index tuples mapped to coefficient expressions. A degree-0 form
/// is the single coefficient at the empty tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    algebroid: Arc<Algebroid>,
    degree: usize,
    coeffs: BTreeMap<Vec<usize>, Expr>,
}

impl Form {
    pub fn zero(algebroid: Arc<Algebroid>, degree: usize) -> Form {
        Form {
            algebroid,
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn function(algebroid: Arc<Algebroid>, f: Expr) -> Form {
        let mut form = Form::zero(algebroid, 0);
        form.set(vec![], f);
        form
    }

    /// Dual basis 1-form `e^alpha`.
    pub fn basis_one_form(algebroid: Arc<Algebroid>, alpha: usize) -> Form {
        let mut form = Form::zero(algebroid, 1);
        form.set(vec![alpha], Expr::one());
        form
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn algebroid(&self) -> &Arc<Algebroid> {
        &self.algebroid
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&Vec<usize>, &Expr)> {
        self.coeffs.iter()
    }

    pub fn coefficient(&self, key: &[usize]) -> Expr {
        self.coeffs.get(key).cloned().unwrap_or_else(Expr::zero)
    }

    /// Set the coefficient at a strictly increasing tuple. Simplified
    /// zeros are dropped to keep the map sparse.
    pub fn set(&mut self, key: Vec<usize>, value: Expr) {
        assert_eq!(key.len(), self.degree, "tuple length must equal degree");
        assert!(
            key.windows(2).all(|w| w[0] < w[1]),
            "tuple must be strictly increasing"
        );
        assert!(
            key.iter().all(|&i| i < self.algebroid.rank()),
            "basis index out of range"
        );
        let value = value.simplify();
        if value.is_const_zero() {
            self.coeffs.remove(&key);
        } else {
            self.coeffs.insert(key, value);
        }
    }

    /// Add `value` times the (possibly unsorted, possibly degenerate) tuple.
    pub fn accumulate(&mut self, key: &[usize], value: Expr) {
        let Some((sorted, sign)) = sort_tuple(key) else {
            return; // repeated index: the monomial vanishes
        };
        let signed = if sign < 0 { value.neg() } else { value };
        let current = self.coefficient(&sorted);
        self.set(sorted, current.add(signed));
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &Form) -> Result<Form, AlgebroidError> {
        if !same_algebroid(&self.algebroid, &other.algebroid) || self.degree != other.degree {
            return Err(AlgebroidError::AlgebroidMismatch);
        }
        let mut out = self.clone();
        for (k, v) in &other.coeffs {
            let current = out.coefficient(k);
            out.set(k.clone(), current.add(v.clone()));
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Form) -> Result<Form, AlgebroidError> {
        self.add(&other.scale_expr(&Expr::constant(-1.0)))
    }

    pub fn scale_expr(&self, f: &Expr) -> Form {
        let mut out = Form::zero(self.algebroid.clone(), self.degree);
        for (k, v) in &self.coeffs {
            out.set(k.clone(), f.clone().mul(v.clone()));
        }
        out
    }

    pub fn simplified(&self) -> Form {
        let mut out = Form::zero(self.algebroid.clone(), self.degree);
        for (k, v) in &self.coeffs {
            out.set(k.clone(), v.simplify());
        }
        out
    }

    /// Evaluate the form on a tuple of sections symbolically:
    /// sum over stored monomials of coefficient times the determinant of
    /// section components.
    pub fn apply(&self, sections: &[&Section]) -> Result<Expr, AlgebroidError> {
        if sections.len() != self.degree {
            return Err(AlgebroidError::ArityMismatch {
                degree: self.degree,
                given: sections.len(),
            });
        }
        for s in sections {
            if !same_algebroid(&self.algebroid, &s.algebroid) {
                return Err(AlgebroidError::AlgebroidMismatch);
            }
        }
        let mut out = Expr::zero();
        for (key, coeff) in &self.coeffs {
            // matrix[a][b] = component key[b] of section a
            let entries: Vec<Vec<Expr>> = sections
                .iter()
                .map(|s| key.iter().map(|&i| s.components[i].clone()).collect())
                .collect();
            let det = det_expr(&entries);
            if det.is_const_zero() {
                continue;
            }
            out = out.add(coeff.clone().mul(det));
        }
        Ok(out)
    }

    /// Numeric evaluation of the form on sections at a point.
    pub fn eval(&self, sections: &[&Section], point: &Point) -> Result<f64, AlgebroidError> {
        Ok(self.apply(sections)?.evaluate(point)?)
    }
}

/// Sort a tuple, returning the permutation sign, or `None` when an index
/// repeats.
fn sort_tuple(key: &[usize]) -> Option<(Vec<usize>, i32)> {
    let mut v = key.to_vec();
    let mut sign = 1;
    // insertion sort, counting swaps
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, sign))
}

pub(crate) fn det_expr(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    if n == 0 {
        return Expr::one();
    }
    if n == 1 {
        return m[0][0].clone();
    }
    // Laplace expansion along the first row; sizes stay small.
    let mut out = Expr::zero();
    for (j, top) in m[0].iter().enumerate() {
        if top.is_const_zero() {
            continue;
        }
        let minor: Vec<Vec<Expr>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != j)
                    .map(|(_, e)| e.clone())
                    .collect()
            })
            .collect();
        let term = top.clone().mul(det_expr(&minor));
        out = if j % 2 == 0 {
            out.add(term)
        } else {
            out.sub(term)
        };
    }
    out
}

/// Wedge product with shuffle signs; `wedge(w, e) = (-1)^{qr} wedge(e, w)`.
pub fn wedge(a: &Form, b: &Form) -> Result<Form, AlgebroidError> {
    if !same_algebroid(&a.algebroid, &b.algebroid) {
        return Err(AlgebroidError::AlgebroidMismatch);
    }
    let mut out = Form::zero(a.algebroid.clone(), a.degree + b.degree);
    for (ka, va) in &a.coeffs {
        for (kb, vb) in &b.coeffs {
            let mut key = ka.clone();
            key.extend_from_slice(kb);
            out.accumulate(&key, va.clone().mul(vb.clone()));
        }
    }
    Ok(out)
}

/// Exterior derivative, coefficientwise:
/// `delta(f e^I) = delta f ^ e^I + f * sum_k (-1)^(k-1) e^{i1} ^ ... ^ delta e^{i_k} ^ ...`
/// with `delta f = rho^i_a df/dx^i e^a` and
/// `delta e^a = -1/2 L^a_{bg} e^b ^ e^g`.
pub fn exterior_derivative(form: &Form) -> Form {
    let algebroid = form.algebroid.clone();
    let r = algebroid.rank();
    let mut out = Form::zero(algebroid.clone(), form.degree + 1);
    for (key, coeff) in &form.coeffs {
        // delta f ^ e^I
        for a in 0..r {
            let df = algebroid.anchor_apply_basis(a, coeff);
            if df.is_const_zero() {
                continue;
            }
            let mut k = vec![a];
            k.extend_from_slice(key);
            out.accumulate(&k, df);
        }
        // f * sum over slots of e^{i1} ^ .. ^ delta e^{i_slot} ^ ..
        for (slot, &idx) in key.iter().enumerate() {
            // delta e^idx = -1/2 L^idx_{bg} e^b ^ e^g; enumerate b < g to
            // fold the antisymmetric pair into a single signed term.
            for b in 0..r {
                for g in (b + 1)..r {
                    let l = algebroid.structure(b, g, idx);
                    if l.is_const_zero() {
                        continue;
                    }
                    let mut k: Vec<usize> = Vec::with_capacity(key.len() + 1);
                    k.extend_from_slice(&key[..slot]);
                    k.push(b);
                    k.push(g);
                    k.extend_from_slice(&key[slot + 1..]);
                    let sign = if slot % 2 == 0 { 1.0 } else { -1.0 };
                    let term = coeff
                        .clone()
                        .mul(l.clone())
                        .mul(Expr::constant(-sign));
                    out.accumulate(&k, term);
                }
            }
        }
    }
    out
}

/// Interior product `i_sigma`; errors on degree-0 forms.
pub fn interior_product(sigma: &Section, form: &Form) -> Result<Form, AlgebroidError> {
    if form.degree == 0 {
        return Err(AlgebroidError::DegreeZero);
    }
    if !same_algebroid(&sigma.algebroid, &form.algebroid) {
        return Err(AlgebroidError::AlgebroidMismatch);
    }
    let mut out = Form::zero(form.algebroid.clone(), form.degree - 1);
    for (key, coeff) in &form.coeffs {
        for (slot, &idx) in key.iter().enumerate() {
            let c = sigma.components[idx].clone();
            if c.is_const_zero() {
                continue;
            }
            let reduced: Vec<usize> = key
                .iter()
                .enumerate()
                .filter(|(s, _)| *s != slot)
                .map(|(_, &i)| i)
                .collect();
            let sign = if slot % 2 == 0 { 1.0 } else { -1.0 };
            let term = coeff.clone().mul(c).mul(Expr::constant(sign));
            out.accumulate(&reduced, term);
        }
    }
    Ok(out)
}

/// Lie derivative along a section via the Cartan formula
/// `L_sigma = delta o i_sigma + i_sigma o delta` (for functions only the
/// second term applies).
pub fn lie_derivative(sigma: &Section, form: &Form) -> Result<Form, AlgebroidError> {
    let d_omega = exterior_derivative(form);
    let second = interior_product(sigma, &d_omega)?;
    if form.degree == 0 {
        return Ok(second);
    }
    let first = exterior_derivative(&interior_product(sigma, form)?);
    first.add(&second)
}
