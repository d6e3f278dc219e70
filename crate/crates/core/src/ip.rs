//! The inverse-problem algebroid over `R x g`: a rank-`2n+1` Lie algebroid
//! built from the structure constants of an `n`-dimensional Lie algebra
//! and a reduced second-order field `gamma^i(t, w)`.
//!
//! On this algebroid the reduced Helmholtz conditions for a multiplier
//! matrix `k_{ij}` become the closedness of the two-form
//! `Omega = k_{ij} Psi^i ^ Theta^j`. The module provides the derived
//! coefficient fields (`lambda`, `psi`, `phi`, `lambda_{ijk}`, `r`), the
//! residual checks of both formulations, the sigma-form system whose
//! integral manifolds encode multipliers, Euler-Poincare residuals, and
//! the Lie-algebra cohomology obstructions to an invariant Lagrangian.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::algebroid::{
    bracket, det_expr, exterior_derivative, interior_product, wedge, Algebroid, AlgebroidError,
    Form, Section,
};
use crate::chart::{is_zero, is_zero_at, sample_points, Chart, SampleSpec, ZeroCheck};
use crate::expr::{EvalError, Expr, Point};
use crate::linalg;
use crate::report::{CheckFamily, Report};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IpError {
    #[error("invalid structure constants: {0}")]
    InvalidStructureConstants(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("Euler-Poincare expressions are not affine in the fiber (worst residual {max_residual})")]
    NotAffine { max_residual: f64 },
    #[error("the symmetric two-form span does not generate a differential ideal")]
    PreconditionFailed(Box<Report>),
    #[error("cohomology data must have antisymmetric mu")]
    MuNotAntisymmetric,
    #[error(transparent)]
    Algebroid(#[from] AlgebroidError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Candidate multiplier matrix: `n x n` expressions over `(t, w)`.
/// Symmetry is a checked condition, not a construction invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateMultiplier {
    pub entries: Vec<Vec<Expr>>,
}

impl CandidateMultiplier {
    pub fn new(entries: Vec<Vec<Expr>>) -> CandidateMultiplier {
        CandidateMultiplier { entries }
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn det(&self) -> Expr {
        det_expr(&self.entries)
    }
}

/// Section data of the extended bundle in the sigma-form system:
/// `s_{ij}`, `P_{ijk}`, `Q_{ijk}` as expressions over `(t, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedSection {
    pub s: Vec<Vec<Expr>>,
    pub p: Vec<Vec<Vec<Expr>>>,
    pub q: Vec<Vec<Vec<Expr>>>,
}

/// The IP Lie algebroid with its derived coefficient fields.
#[derive(Debug)]
pub struct IpData {
    n: usize,
    /// `c[i][j][k] = C^k_{ij}`.
    c: Vec<Vec<Vec<f64>>>,
    gamma: Vec<Expr>,
    lambda: Vec<Vec<Expr>>,
    psi: Vec<Vec<Expr>>,
    phi: Vec<Vec<Expr>>,
    /// `lambda3[i][j][k] = d lambda_i^k / d w^j`.
    lambda3: Vec<Vec<Vec<Expr>>>,
    /// `r[i][j][k] = r^k_{ij}`.
    r: Vec<Vec<Vec<Expr>>>,
    algebroid: Arc<Algebroid>,
}

/// Chart `(t, w1..wn)` of the reduced phase space.
pub fn ip_chart(n: usize) -> Chart {
    let mut names = vec!["t".to_string()];
    names.extend((1..=n).map(|i| format!("w{i}")));
    Chart::from_names(names)
}

fn w_name(i: usize) -> String {
    format!("w{}", i + 1)
}

/// Validate antisymmetry and the Jacobi identity of constant structure
/// constants; tolerances are tight since the data is exact.
pub fn validate_structure_constants(c: &[Vec<Vec<f64>>]) -> Result<(), IpError> {
    let n = c.len();
    for i in 0..n {
        if c[i].len() != n || c[i].iter().any(|row| row.len() != n) {
            return Err(IpError::InvalidStructureConstants(
                "expected an n x n x n array".to_string(),
            ));
        }
    }
    let scale = c
        .iter()
        .flatten()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if (c[i][j][k] + c[j][i][k]).abs() > 1e-12 * scale {
                    return Err(IpError::InvalidStructureConstants(format!(
                        "antisymmetry fails at C^{}_{{{}{}}}",
                        k + 1,
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for m in 0..n {
                    let mut sum = 0.0;
                    for l in 0..n {
                        sum += c[i][l][m] * c[j][k][l]
                            + c[j][l][m] * c[k][i][l]
                            + c[k][l][m] * c[i][j][l];
                    }
                    if sum.abs() > 1e-12 * scale * scale {
                        return Err(IpError::InvalidStructureConstants(format!(
                            "Jacobi identity fails at indices ({},{},{})",
                            i + 1,
                            j + 1,
                            k + 1
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

impl IpData {
    /// Build the algebroid and all derived coefficient fields from the
    /// structure constants `C^k_{ij}` and the reduced field `gamma^i(t,w)`.
    pub fn build(n: usize, c: Vec<Vec<Vec<f64>>>, gamma: Vec<Expr>) -> Result<IpData, IpError> {
        if c.len() != n {
            return Err(IpError::InvalidStructureConstants(
                "structure constant array must be n x n x n".to_string(),
            ));
        }
        validate_structure_constants(&c)?;
        if gamma.len() != n {
            return Err(IpError::Shape(
                "gamma must provide one expression per fiber coordinate".to_string(),
            ));
        }
        let gamma: Vec<Expr> = gamma.into_iter().map(|g| g.simplify()).collect();
        let chart = ip_chart(n);

        // w^k C^j_{ki} as expressions
        let wc = |i: usize, j: usize| -> Expr {
            let mut out = Expr::zero();
            for k in 0..n {
                if c[k][i][j] != 0.0 {
                    out = out.add(Expr::var(&w_name(k)).scale(c[k][i][j]));
                }
            }
            out
        };

        let mut lambda = vec![vec![Expr::zero(); n]; n];
        let mut psi = vec![vec![Expr::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let dg = gamma[j].differentiate(&w_name(i));
                lambda[i][j] = wc(i, j).sub(dg.clone()).scale(0.5);
                psi[i][j] = wc(i, j).add(dg).scale(0.5);
            }
        }

        let gamma_apply = |f: &Expr| -> Expr {
            let mut out = f.differentiate("t");
            for (i, g) in gamma.iter().enumerate() {
                out = out.add(g.clone().mul(f.differentiate(&w_name(i))));
            }
            out
        };

        let mut phi = vec![vec![Expr::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut e = Expr::zero();
                // -w^k C^l_{ki} dgamma^j/dw^l
                for l in 0..n {
                    e = e.sub(wc(i, l).mul(gamma[j].differentiate(&w_name(l))));
                }
                // -gamma^k C^j_{ik}
                for k in 0..n {
                    if c[i][k][j] != 0.0 {
                        e = e.sub(gamma[k].clone().scale(c[i][k][j]));
                    }
                }
                e = e.sub(gamma_apply(&lambda[i][j]));
                for k in 0..n {
                    e = e.sub(lambda[i][k].clone().mul(lambda[k][j].clone()));
                }
                phi[i][j] = e.simplify();
            }
        }

        let mut lambda3 = vec![vec![vec![Expr::zero(); n]; n]; n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    lambda3[i][j][k] = lambda[i][k].differentiate(&w_name(j));
                }
            }
        }

        let mut r = vec![vec![vec![Expr::zero(); n]; n]; n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut e = Expr::zero();
                    for m in 0..n {
                        e = e.add(wc(j, m).mul(lambda3[i][m][k].clone()));
                        e = e.sub(wc(i, m).mul(lambda3[j][m][k].clone()));
                    }
                    for l in 0..n {
                        e = e.add(lambda[i][l].clone().mul(lambda3[j][l][k].clone()));
                        e = e.sub(lambda[j][l].clone().mul(lambda3[i][l][k].clone()));
                        if c[i][j][l] != 0.0 {
                            e = e.add(lambda[l][k].clone().scale(c[i][j][l]));
                        }
                        if c[j][l][k] != 0.0 {
                            e = e.add(lambda[i][l].clone().scale(c[j][l][k]));
                        }
                        if c[i][l][k] != 0.0 {
                            e = e.sub(lambda[j][l].clone().scale(c[i][l][k]));
                        }
                    }
                    r[i][j][k] = e.simplify();
                }
            }
        }

        // the underlying algebroid: basis T0, e_1..e_n, W_1..W_n
        let rank = 2 * n + 1;
        let dim = n + 1;
        let mut anchor = vec![vec![Expr::zero(); dim]; rank];
        anchor[0][0] = Expr::one();
        for i in 0..n {
            for j in 0..n {
                anchor[1 + i][1 + j] = wc(i, j);
            }
            anchor[1 + n + i][1 + i] = Expr::one();
        }
        let mut structure = vec![vec![vec![Expr::zero(); rank]; rank]; rank];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if c[i][j][k] != 0.0 {
                        structure[1 + i][1 + j][1 + k] = Expr::constant(c[i][j][k]);
                        structure[1 + i][1 + n + j][1 + n + k] = Expr::constant(c[i][j][k]);
                        structure[1 + n + j][1 + i][1 + n + k] = Expr::constant(-c[i][j][k]);
                    }
                }
            }
        }
        let mut names = vec!["T0".to_string()];
        names.extend((1..=n).map(|i| format!("e{i}")));
        names.extend((1..=n).map(|i| format!("W{i}")));
        let algebroid = Algebroid::new(chart, rank, anchor, structure, Some(names));

        Ok(IpData {
            n,
            c,
            gamma,
            lambda,
            psi,
            phi,
            lambda3,
            r,
            algebroid,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[i][j][k]
    }

    pub fn structure_constants(&self) -> &[Vec<Vec<f64>>] {
        &self.c
    }

    pub fn gamma(&self) -> &[Expr] {
        &self.gamma
    }

    pub fn lambda(&self, i: usize, j: usize) -> &Expr {
        &self.lambda[i][j]
    }

    pub fn psi_coeff(&self, i: usize, j: usize) -> &Expr {
        &self.psi[i][j]
    }

    pub fn phi(&self, i: usize, j: usize) -> &Expr {
        &self.phi[i][j]
    }

    pub fn lambda3(&self, i: usize, j: usize, k: usize) -> &Expr {
        &self.lambda3[i][j][k]
    }

    pub fn r(&self, i: usize, j: usize, k: usize) -> &Expr {
        &self.r[i][j][k]
    }

    pub fn algebroid(&self) -> &Arc<Algebroid> {
        &self.algebroid
    }

    pub fn chart(&self) -> &Chart {
        self.algebroid.chart()
    }

    /// `gamma(f) = df/dt + gamma^i df/dw^i`, the reduced dynamics applied
    /// to a function.
    pub fn gamma_apply(&self, f: &Expr) -> Expr {
        let mut out = f.differentiate("t");
        for (i, g) in self.gamma.iter().enumerate() {
            out = out.add(g.clone().mul(f.differentiate(&w_name(i))));
        }
        out
    }

    // -- sections -----------------------------------------------------

    pub fn section_t0(&self) -> Section {
        Section::basis(self.algebroid.clone(), 0)
    }

    pub fn section_e(&self, i: usize) -> Section {
        Section::basis(self.algebroid.clone(), 1 + i)
    }

    pub fn section_w(&self, i: usize) -> Section {
        Section::basis(self.algebroid.clone(), 1 + self.n + i)
    }

    /// `Gamma_0 = T_0 + w^j e_j + gamma^j W_j`, the dynamics section.
    pub fn section_gamma0(&self) -> Section {
        let mut comps = vec![Expr::zero(); 2 * self.n + 1];
        comps[0] = Expr::one();
        for j in 0..self.n {
            comps[1 + j] = Expr::var(&w_name(j));
            comps[1 + self.n + j] = self.gamma[j].clone();
        }
        Section::new(self.algebroid.clone(), comps).expect("component count matches rank")
    }

    /// `H_i = e_i - lambda_i^j W_j`, the horizontal sections.
    pub fn section_h(&self, i: usize) -> Section {
        let mut comps = vec![Expr::zero(); 2 * self.n + 1];
        comps[1 + i] = Expr::one();
        for j in 0..self.n {
            comps[1 + self.n + j] = self.lambda[i][j].clone().neg();
        }
        Section::new(self.algebroid.clone(), comps).expect("component count matches rank")
    }

    // -- dual forms, expanded in the T0/e/W dual basis ------------------

    /// `Gamma^0 = T^0`.
    pub fn form_gamma0(&self) -> Form {
        Form::basis_one_form(self.algebroid.clone(), 0)
    }

    /// `Theta^i = e^i - w^i T^0`.
    pub fn form_theta(&self, i: usize) -> Form {
        let mut f = Form::zero(self.algebroid.clone(), 1);
        f.set(vec![1 + i], Expr::one());
        f.set(vec![0], Expr::var(&w_name(i)).neg());
        f
    }

    /// `Psi^i = W^i - gamma^i T^0 + lambda_j^i Theta^j`.
    pub fn form_psi(&self, i: usize) -> Form {
        let mut f = Form::zero(self.algebroid.clone(), 1);
        f.set(vec![1 + self.n + i], Expr::one());
        let mut t0 = self.gamma[i].clone();
        for j in 0..self.n {
            f.set(vec![1 + j], self.lambda[j][i].clone());
            t0 = t0.add(self.lambda[j][i].clone().mul(Expr::var(&w_name(j))));
        }
        f.set(vec![0], t0.neg());
        f
    }

    /// `Omega = k_{ij} Psi^i ^ Theta^j`.
    pub fn two_form(&self, k: &CandidateMultiplier) -> Result<Form, IpError> {
        if k.n() != self.n || k.entries.iter().any(|row| row.len() != self.n) {
            return Err(IpError::Shape("multiplier must be n x n".to_string()));
        }
        let mut omega = Form::zero(self.algebroid.clone(), 2);
        for i in 0..self.n {
            let psi_i = self.form_psi(i);
            for j in 0..self.n {
                if k.entries[i][j].is_const_zero() {
                    continue;
                }
                let term = wedge(&psi_i, &self.form_theta(j))?.scale_expr(&k.entries[i][j]);
                omega = omega.add(&term)?;
            }
        }
        Ok(omega)
    }

    /// Compare generic `bracket()` output against the closed-form bracket
    /// table of the `Gamma_0/H_i/W_i` basis.
    pub fn bracket_table_check(&self, spec: &SampleSpec) -> Result<Report, IpError> {
        let n = self.n;
        let chart = self.chart();
        let gamma0 = self.section_gamma0();
        let h: Vec<Section> = (0..n).map(|i| self.section_h(i)).collect();
        let w: Vec<Section> = (0..n).map(|i| self.section_w(i)).collect();

        let mut report = Report::new();
        let check = |name: &str, lhs: &Section, rhs: &Section| -> Result<ZeroCheck, IpError> {
            let mut z = ZeroCheck::trivial();
            for a in 0..lhs.components().len() {
                let diff = lhs.components()[a].clone().sub(rhs.components()[a].clone());
                z.merge(is_zero(&diff, chart, spec)?);
            }
            let _ = name;
            Ok(z)
        };

        // [Gamma_0, W_i] = -H_i + lambda_i^j W_j
        let mut z = ZeroCheck::trivial();
        for i in 0..n {
            let lhs = bracket(&gamma0, &w[i])?;
            let mut rhs = h[i].scale(&Expr::constant(-1.0));
            for j in 0..n {
                rhs = rhs.add(&w[j].scale(&self.lambda[i][j]))?;
            }
            z.merge(check("g0w", &lhs, &rhs)?);
        }
        report.push_zero_check("bracket(G0,W)", z);

        // [Gamma_0, H_i] = lambda_i^j H_j + phi_i^j W_j
        let mut z = ZeroCheck::trivial();
        for i in 0..n {
            let lhs = bracket(&gamma0, &h[i])?;
            let mut rhs = Section::new(self.algebroid.clone(), vec![Expr::zero(); 2 * n + 1])
                .expect("zero section");
            for j in 0..n {
                rhs = rhs.add(&h[j].scale(&self.lambda[i][j]))?;
                rhs = rhs.add(&w[j].scale(&self.phi[i][j]))?;
            }
            z.merge(check("g0h", &lhs, &rhs)?);
        }
        report.push_zero_check("bracket(G0,H)", z);

        // [H_i, W_j] = (C^k_{ij} + lambda^k_{ij}) W_k
        let mut z = ZeroCheck::trivial();
        for i in 0..n {
            for j in 0..n {
                let lhs = bracket(&h[i], &w[j])?;
                let mut rhs = Section::new(self.algebroid.clone(), vec![Expr::zero(); 2 * n + 1])
                    .expect("zero section");
                for k in 0..n {
                    let coeff = Expr::constant(self.c[i][j][k]).add(self.lambda3[i][j][k].clone());
                    rhs = rhs.add(&w[k].scale(&coeff))?;
                }
                z.merge(check("hw", &lhs, &rhs)?);
            }
        }
        report.push_zero_check("bracket(H,W)", z);

        // [H_i, H_j] = C^k_{ij} H_k + r^k_{ij} W_k
        let mut z = ZeroCheck::trivial();
        for i in 0..n {
            for j in 0..n {
                let lhs = bracket(&h[i], &h[j])?;
                let mut rhs = Section::new(self.algebroid.clone(), vec![Expr::zero(); 2 * n + 1])
                    .expect("zero section");
                for k in 0..n {
                    rhs = rhs.add(&h[k].scale(&Expr::constant(self.c[i][j][k])))?;
                    rhs = rhs.add(&w[k].scale(&self.r[i][j][k]))?;
                }
                z.merge(check("hh", &lhs, &rhs)?);
            }
        }
        report.push_zero_check("bracket(H,H)", z);

        // r^k_{ij} + r^k_{ji} = 0
        let mut z = ZeroCheck::trivial();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let e = self.r[i][j][k].clone().add(self.r[j][i][k].clone());
                    z.merge(is_zero(&e, chart, spec)?);
                }
            }
        }
        report.push_zero_check("r_antisymmetry", z);

        Ok(report)
    }

    /// Compare generic exterior derivatives of `Psi^i` and `Theta^j`
    /// against their closed-form expansions.
    pub fn delta_psi_theta_check(&self, spec: &SampleSpec) -> Result<Report, IpError> {
        let n = self.n;
        let chart = self.chart();
        let gamma0 = self.form_gamma0();
        let theta: Vec<Form> = (0..n).map(|i| self.form_theta(i)).collect();
        let psi: Vec<Form> = (0..n).map(|i| self.form_psi(i)).collect();

        let mut report = Report::new();
        let mut z_psi = ZeroCheck::trivial();
        for i in 0..n {
            // -phi_k^i G0^Theta^k - lambda_k^i G0^Psi^k
            // - 1/2 r^i_{kl} Theta^k^Theta^l - (C^i_{kl}+lambda^i_{kl}) Theta^k^Psi^l
            let mut closed = Form::zero(self.algebroid.clone(), 2);
            for k in 0..n {
                closed = closed.add(
                    &wedge(&gamma0, &theta[k])?.scale_expr(&self.phi[k][i].clone().neg()),
                )?;
                closed = closed.add(
                    &wedge(&gamma0, &psi[k])?.scale_expr(&self.lambda[k][i].clone().neg()),
                )?;
                for l in 0..n {
                    let half_r = self.r[k][l][i].clone().scale(-0.5);
                    closed = closed.add(&wedge(&theta[k], &theta[l])?.scale_expr(&half_r))?;
                    let coeff = Expr::constant(self.c[k][l][i])
                        .add(self.lambda3[k][l][i].clone())
                        .neg();
                    closed = closed.add(&wedge(&theta[k], &psi[l])?.scale_expr(&coeff))?;
                }
            }
            let diff = exterior_derivative(&psi[i]).sub(&closed)?;
            for (_, coeff) in diff.coefficients() {
                z_psi.merge(is_zero(coeff, chart, spec)?);
            }
        }
        report.push_zero_check("delta_psi", z_psi);

        let mut z_theta = ZeroCheck::trivial();
        for j in 0..n {
            // -lambda_k^j G0^Theta^k + G0^Psi^j - 1/2 C^j_{kl} Theta^k^Theta^l
            let mut closed = wedge(&gamma0, &psi[j])?;
            for k in 0..n {
                closed = closed.add(
                    &wedge(&gamma0, &theta[k])?.scale_expr(&self.lambda[k][j].clone().neg()),
                )?;
                for l in 0..n {
                    if self.c[k][l][j] != 0.0 {
                        closed = closed.add(
                            &wedge(&theta[k], &theta[l])?
                                .scale_expr(&Expr::constant(-0.5 * self.c[k][l][j])),
                        )?;
                    }
                }
            }
            let diff = exterior_derivative(&theta[j]).sub(&closed)?;
            for (_, coeff) in diff.coefficients() {
                z_theta.merge(is_zero(coeff, chart, spec)?);
            }
        }
        report.push_zero_check("delta_theta", z_theta);

        Ok(report)
    }
}

// -- reduced Helmholtz conditions --------------------------------------

/// Residuals of the reduced Helmholtz conditions for a candidate
/// multiplier: symmetry, the `gamma(k)` family, the `phi` family, the
/// fiber-derivative family, the two redundant families, and the sampled
/// nondegeneracy margin `min |det k|` (certified only over the box).
pub fn helmholtz_residuals(
    ip: &IpData,
    k: &CandidateMultiplier,
    spec: &SampleSpec,
) -> Result<Report, IpError> {
    let n = ip.n;
    if k.n() != n || k.entries.iter().any(|row| row.len() != n) {
        return Err(IpError::Shape("multiplier must be n x n".to_string()));
    }
    let chart = ip.chart();
    let kk = &k.entries;
    let mut report = Report::new();

    let mut sym = ZeroCheck::trivial();
    for i in 0..n {
        for j in (i + 1)..n {
            let e = kk[i][j].clone().sub(kk[j][i].clone());
            sym.merge(is_zero(&e, chart, spec)?);
        }
    }
    report.push_zero_check("symmetry", sym);

    let mut gam = ZeroCheck::trivial();
    for i in 0..n {
        for j in 0..n {
            let mut e = ip.gamma_apply(&kk[i][j]);
            for m in 0..n {
                e = e.sub(kk[m][j].clone().mul(ip.lambda[i][m].clone()));
                e = e.sub(kk[i][m].clone().mul(ip.lambda[j][m].clone()));
            }
            gam.merge(is_zero(&e, chart, spec)?);
        }
    }
    report.push_zero_check("gamma", gam);

    let mut phi_fam = ZeroCheck::trivial();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut e = Expr::zero();
            for m in 0..n {
                e = e.add(kk[m][i].clone().mul(ip.phi[j][m].clone()));
                e = e.sub(kk[m][j].clone().mul(ip.phi[i][m].clone()));
            }
            phi_fam.merge(is_zero(&e, chart, spec)?);
        }
    }
    report.push_zero_check("phi", phi_fam);

    let mut dw = ZeroCheck::trivial();
    for i in 0..n {
        for j in (i + 1)..n {
            for m in 0..n {
                let e = kk[j][m]
                    .differentiate(&w_name(i))
                    .sub(kk[i][m].differentiate(&w_name(j)));
                dw.merge(is_zero(&e, chart, spec)?);
            }
        }
    }
    report.push_zero_check("dw", dw);

    // redundant family 1:
    // psi_l^m dk_{ij}/dw^m + 1/2 (k_{mi} C^m_{jl} + k_{mj} C^m_{il}
    //   - k_{ml} d2gamma^m/dw^i dw^j)
    // is symmetric under j <-> l
    let mut red1 = ZeroCheck::trivial();
    let half_term = |i: usize, j: usize, l: usize| -> Expr {
        let mut e = Expr::zero();
        for m in 0..n {
            e = e.add(ip.psi[l][m].clone().mul(kk[i][j].differentiate(&w_name(m))));
            if ip.c[j][l][m] != 0.0 {
                e = e.add(kk[m][i].clone().scale(0.5 * ip.c[j][l][m]));
            }
            if ip.c[i][l][m] != 0.0 {
                e = e.add(kk[m][j].clone().scale(0.5 * ip.c[i][l][m]));
            }
            let d2 = ip.gamma[m]
                .differentiate(&w_name(i))
                .differentiate(&w_name(j));
            e = e.sub(kk[m][l].clone().mul(d2).scale(0.5));
        }
        e
    };
    for i in 0..n {
        for j in 0..n {
            for l in (j + 1)..n {
                let e = half_term(i, j, l).sub(half_term(i, l, j));
                red1.merge(is_zero(&e, chart, spec)?);
            }
        }
    }
    report.push_zero_check("redundant_1", red1);

    // redundant family 2: r^l_{ij} k_{lm} cyclic sum
    let mut red2 = ZeroCheck::trivial();
    for i in 0..n {
        for j in (i + 1)..n {
            for m in (j + 1)..n {
                let mut e = Expr::zero();
                for l in 0..n {
                    e = e.add(ip.r[i][j][l].clone().mul(kk[l][m].clone()));
                    e = e.add(ip.r[j][m][l].clone().mul(kk[l][i].clone()));
                    e = e.add(ip.r[m][i][l].clone().mul(kk[l][j].clone()));
                }
                red2.merge(is_zero(&e, chart, spec)?);
            }
        }
    }
    report.push_zero_check("redundant_2", red2);

    report.push(det_margin_family(ip, &k.det(), spec)?);
    Ok(report)
}

/// Sampled nondegeneracy margin: `min |det|` over the sweep, passing when
/// it clears `tol_abs`. Global nondegeneracy is not decidable here; the
/// verdict speaks only for the declared box.
fn det_margin_family(ip: &IpData, det: &Expr, spec: &SampleSpec) -> Result<CheckFamily, IpError> {
    let points = sample_points(ip.chart(), spec);
    let mut min_abs = f64::INFINITY;
    let mut worst: Option<Point> = None;
    for p in &points {
        let v = det.evaluate(p)?.abs();
        if v < min_abs {
            min_abs = v;
            worst = Some(p.clone());
        }
    }
    Ok(CheckFamily::margin(
        "det_min",
        min_abs,
        worst,
        min_abs > spec.tol_abs,
    ))
}

// -- the two-form formulation ------------------------------------------

/// Check the closed-two-form characterization for a candidate multiplier:
/// maximal rank of `Omega^n`, vanishing on `(W, W)` pairs, annihilation by
/// the dynamics section, closedness, and the four component families of
/// `delta Omega` (which localize failures the same way the Helmholtz
/// families do). Cross-check identities tie the generic evaluation of
/// `delta Omega` on basis triples to the closed-form expressions.
pub fn two_form_checks(
    ip: &IpData,
    k: &CandidateMultiplier,
    spec: &SampleSpec,
) -> Result<Report, IpError> {
    let n = ip.n;
    let chart = ip.chart();
    let kk = &k.entries;
    let omega = ip.two_form(k)?;
    let mut report = Report::new();

    // (1) top coefficient of Omega^n: the monomial omitting T^0 in
    // G0 ^ Omega^n equals it, so read it off Omega^n directly.
    let mut power = omega.clone();
    for _ in 1..n {
        power = wedge(&power, &omega)?;
    }
    let top: Vec<usize> = (1..=2 * n).collect();
    let top_coeff = power.coefficient(&top);
    let points = sample_points(chart, spec);
    let mut min_abs = f64::INFINITY;
    let mut worst: Option<Point> = None;
    for p in &points {
        let v = top_coeff.evaluate(p)?.abs();
        if v < min_abs {
            min_abs = v;
            worst = Some(p.clone());
        }
    }
    report.push(CheckFamily::margin(
        "omega_top_min",
        min_abs,
        worst,
        min_abs > spec.tol_abs,
    ));

    // (2) Omega(W_i, W_j) = 0
    let w: Vec<Section> = (0..n).map(|i| ip.section_w(i)).collect();
    let mut z = ZeroCheck::trivial();
    for i in 0..n {
        for j in 0..n {
            let e = omega.apply(&[&w[i], &w[j]])?;
            z.merge(is_zero(&e, chart, spec)?);
        }
    }
    report.push_zero_check("omega_ww", z);

    // (3) iota_{Gamma_0} Omega = 0
    let gamma0 = ip.section_gamma0();
    let contracted = interior_product(&gamma0, &omega)?;
    let mut z = ZeroCheck::trivial();
    for (_, coeff) in contracted.coefficients() {
        z.merge(is_zero(coeff, chart, spec)?);
    }
    report.push_zero_check("iota_gamma0", z);

    // (4) delta Omega = 0, coefficientwise
    let domega = exterior_derivative(&omega);
    let mut z = ZeroCheck::trivial();
    for (_, coeff) in domega.coefficients() {
        z.merge(is_zero(coeff, chart, spec)?);
    }
    report.push_zero_check("domega_closed", z);

    // component families of delta Omega on basis triples, and their
    // cross-checks against the closed forms
    let h: Vec<Section> = (0..n).map(|i| ip.section_h(i)).collect();

    let mut fam = ZeroCheck::trivial();
    let mut xcheck = ZeroCheck::trivial();
    for i in 0..n {
        for j in 0..n {
            let val = domega.apply(&[&gamma0, &w[i], &w[j]])?;
            fam.merge(is_zero(&val, chart, spec)?);
            let closed = kk[i][j].clone().sub(kk[j][i].clone());
            xcheck.merge(is_zero(&val.sub(closed), chart, spec)?);
        }
    }
    report.push_zero_check("domega(G0,W,W)", fam);
    report.push_zero_check("xcheck(G0,W,W)", xcheck);

    let mut fam = ZeroCheck::trivial();
    let mut xcheck = ZeroCheck::trivial();
    for i in 0..n {
        for j in 0..n {
            let val = domega.apply(&[&gamma0, &w[i], &h[j]])?;
            fam.merge(is_zero(&val, chart, spec)?);
            let mut closed = ip.gamma_apply(&kk[i][j]);
            for m in 0..n {
                closed = closed.sub(kk[m][j].clone().mul(ip.lambda[i][m].clone()));
                closed = closed.sub(kk[i][m].clone().mul(ip.lambda[j][m].clone()));
            }
            xcheck.merge(is_zero(&val.sub(closed), chart, spec)?);
        }
    }
    report.push_zero_check("domega(G0,W,H)", fam);
    report.push_zero_check("xcheck(G0,W,H)", xcheck);

    let mut fam = ZeroCheck::trivial();
    let mut xcheck = ZeroCheck::trivial();
    for i in 0..n {
        for j in 0..n {
            let val = domega.apply(&[&gamma0, &h[i], &h[j]])?;
            fam.merge(is_zero(&val, chart, spec)?);
            let mut closed = Expr::zero();
            for m in 0..n {
                closed = closed.add(kk[m][i].clone().mul(ip.phi[j][m].clone()));
                closed = closed.sub(kk[m][j].clone().mul(ip.phi[i][m].clone()));
            }
            xcheck.merge(is_zero(&val.sub(closed), chart, spec)?);
        }
    }
    report.push_zero_check("domega(G0,H,H)", fam);
    report.push_zero_check("xcheck(G0,H,H)", xcheck);

    let mut fam = ZeroCheck::trivial();
    let mut xcheck = ZeroCheck::trivial();
    for i in 0..n {
        for j in 0..n {
            for m in 0..n {
                let val = domega.apply(&[&w[i], &w[j], &h[m]])?;
                fam.merge(is_zero(&val, chart, spec)?);
                let closed = kk[j][m]
                    .differentiate(&w_name(i))
                    .sub(kk[i][m].differentiate(&w_name(j)));
                xcheck.merge(is_zero(&val.sub(closed), chart, spec)?);
            }
        }
    }
    report.push_zero_check("domega(W,W,H)", fam);
    report.push_zero_check("xcheck(W,W,H)", xcheck);

    Ok(report)
}

// -- the sigma-form system ----------------------------------------------

/// Precondition of the sigma-form system: the span of symmetric two-forms
/// generates a differential ideal exactly when the `phi`-contraction and
/// `r`-contraction families vanish for every symmetric `s`. Checked on
/// the symmetric basis matrices.
pub fn sigma_precondition(ip: &IpData, spec: &SampleSpec) -> Result<Report, IpError> {
    let n = ip.n;
    let chart = ip.chart();
    let mut report = Report::new();

    let mut phi_fam = ZeroCheck::trivial();
    let mut r_fam = ZeroCheck::trivial();
    for a in 0..n {
        for b in a..n {
            // s = E_(ab) symmetrized
            let s = |i: usize, j: usize| -> f64 {
                let mut v = 0.0;
                if (i, j) == (a, b) || (i, j) == (b, a) {
                    v = 1.0;
                }
                v
            };
            for i in 0..n {
                for j in (i + 1)..n {
                    let mut e = Expr::zero();
                    for m in 0..n {
                        if s(i, m) != 0.0 {
                            e = e.add(ip.phi[j][m].clone().scale(s(i, m)));
                        }
                        if s(j, m) != 0.0 {
                            e = e.sub(ip.phi[i][m].clone().scale(s(j, m)));
                        }
                    }
                    phi_fam.merge(is_zero(&e, chart, spec)?);
                }
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    for m in (j + 1)..n {
                        let mut e = Expr::zero();
                        for l in 0..n {
                            if s(i, l) != 0.0 {
                                e = e.add(ip.r[j][m][l].clone().scale(s(i, l)));
                            }
                            if s(j, l) != 0.0 {
                                e = e.add(ip.r[m][i][l].clone().scale(s(j, l)));
                            }
                            if s(m, l) != 0.0 {
                                e = e.add(ip.r[i][j][l].clone().scale(s(m, l)));
                            }
                        }
                        r_fam.merge(is_zero(&e, chart, spec)?);
                    }
                }
            }
        }
    }
    report.push_zero_check("precondition_phi", phi_fam);
    report.push_zero_check("precondition_r", r_fam);
    Ok(report)
}

/// Residuals of the sigma-form system for an extended section
/// `(s, P, Q)`: the three pullback component families, total-symmetry
/// residuals of `P` and `Q`, symmetry of `s`, and the sampled
/// nondegeneracy margin of `s`. Errors with `PreconditionFailed` when the
/// symmetric span is not a differential ideal.
pub fn sigma_residual(
    ip: &IpData,
    ext: &ExtendedSection,
    spec: &SampleSpec,
) -> Result<Report, IpError> {
    let n = ip.n;
    let shape_ok = ext.s.len() == n
        && ext.s.iter().all(|r| r.len() == n)
        && ext.p.len() == n
        && ext.p.iter().all(|p| p.len() == n && p.iter().all(|r| r.len() == n))
        && ext.q.len() == n
        && ext.q.iter().all(|q| q.len() == n && q.iter().all(|r| r.len() == n));
    if !shape_ok {
        return Err(IpError::Shape(
            "extended section must have shapes n^2, n^3, n^3".to_string(),
        ));
    }

    let precondition = sigma_precondition(ip, spec)?;
    if !precondition.pass() {
        return Err(IpError::PreconditionFailed(Box::new(precondition)));
    }

    let chart = ip.chart();
    let mut report = precondition;

    let mut fam_a = ZeroCheck::trivial();
    for i in 0..n {
        for j in i..n {
            let mut e = ip.gamma_apply(&ext.s[i][j]);
            for m in 0..n {
                e = e.sub(ext.s[m][i].clone().mul(ip.lambda[j][m].clone()));
                e = e.sub(ext.s[m][j].clone().mul(ip.lambda[i][m].clone()));
            }
            fam_a.merge(is_zero(&e, chart, spec)?);
        }
    }
    report.push_zero_check("sigma_a", fam_a);

    let mut fam_b = ZeroCheck::trivial();
    for i in 0..n {
        for j in i..n {
            for l in 0..n {
                let e = ext.p[i][j][l]
                    .clone()
                    .add(ext.s[i][j].differentiate(&w_name(l)));
                fam_b.merge(is_zero(&e, chart, spec)?);
            }
        }
    }
    report.push_zero_check("sigma_b", fam_b);

    let mut fam_c = ZeroCheck::trivial();
    for i in 0..n {
        for j in i..n {
            for l in 0..n {
                let mut e = ext.q[i][j][l].clone();
                for m in 0..n {
                    e = e.add(
                        ip.psi[l][m]
                            .clone()
                            .mul(ext.s[i][j].differentiate(&w_name(m))),
                    );
                    if ip.c[j][l][m] != 0.0 {
                        e = e.add(ext.s[m][i].clone().scale(0.5 * ip.c[j][l][m]));
                    }
                    if ip.c[i][l][m] != 0.0 {
                        e = e.add(ext.s[m][j].clone().scale(0.5 * ip.c[i][l][m]));
                    }
                    let d2 = ip.gamma[m]
                        .differentiate(&w_name(i))
                        .differentiate(&w_name(j));
                    e = e.sub(ext.s[m][l].clone().mul(d2).scale(0.5));
                }
                fam_c.merge(is_zero(&e, chart, spec)?);
            }
        }
    }
    report.push_zero_check("sigma_c", fam_c);

    let mut s_sym = ZeroCheck::trivial();
    for i in 0..n {
        for j in (i + 1)..n {
            let e = ext.s[i][j].clone().sub(ext.s[j][i].clone());
            s_sym.merge(is_zero(&e, chart, spec)?);
        }
    }
    report.push_zero_check("s_symmetry", s_sym);

    let mut p_sym = ZeroCheck::trivial();
    let mut q_sym = ZeroCheck::trivial();
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let p_swap1 = ext.p[i][j][l].clone().sub(ext.p[j][i][l].clone());
                let p_swap2 = ext.p[i][j][l].clone().sub(ext.p[i][l][j].clone());
                p_sym.merge(is_zero(&p_swap1, chart, spec)?);
                p_sym.merge(is_zero(&p_swap2, chart, spec)?);
                let q_swap1 = ext.q[i][j][l].clone().sub(ext.q[j][i][l].clone());
                let q_swap2 = ext.q[i][j][l].clone().sub(ext.q[i][l][j].clone());
                q_sym.merge(is_zero(&q_swap1, chart, spec)?);
                q_sym.merge(is_zero(&q_swap2, chart, spec)?);
            }
        }
    }
    report.push_zero_check("p_symmetry", p_sym);
    report.push_zero_check("q_symmetry", q_sym);

    let det = det_expr(&ext.s);
    let mut fam = det_margin_family(ip, &det, spec)?;
    fam.name = "det_s_min".to_string();
    report.push(fam);

    Ok(report)
}

/// Extended section built from a multiplier via the closed-form solution
/// of the `P`/`Q` equations; a multiplier passing the Helmholtz residuals
/// yields a section with vanishing sigma residuals.
pub fn extended_from_multiplier(ip: &IpData, k: &CandidateMultiplier) -> ExtendedSection {
    let n = ip.n;
    let s = k.entries.clone();
    let mut p = vec![vec![vec![Expr::zero(); n]; n]; n];
    let mut q = vec![vec![vec![Expr::zero(); n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                p[i][j][l] = s[i][j].differentiate(&w_name(l)).neg();
                let mut e = Expr::zero();
                for m in 0..n {
                    e = e.sub(
                        ip.psi[l][m]
                            .clone()
                            .mul(s[i][j].differentiate(&w_name(m))),
                    );
                    if ip.c[j][l][m] != 0.0 {
                        e = e.sub(s[m][i].clone().scale(0.5 * ip.c[j][l][m]));
                    }
                    if ip.c[i][l][m] != 0.0 {
                        e = e.sub(s[m][j].clone().scale(0.5 * ip.c[i][l][m]));
                    }
                    let d2 = ip.gamma[m]
                        .differentiate(&w_name(i))
                        .differentiate(&w_name(j));
                    e = e.add(s[m][l].clone().mul(d2).scale(0.5));
                }
                q[i][j][l] = e.simplify();
            }
        }
    }
    ExtendedSection { s, p, q }
}

// -- Euler-Poincare expressions and cohomology ---------------------------

/// Euler-Poincare residual fields of a reduced Lagrangian:
/// `V_j = gamma(dl/dw^j) - C^k_{ij} (dl/dw^k) w^i`, together with the
/// fiber Hessian of `l` as a candidate multiplier.
pub fn euler_poincare_residual(ip: &IpData, l: &Expr) -> (Vec<Expr>, CandidateMultiplier) {
    let n = ip.n;
    let dl: Vec<Expr> = (0..n).map(|j| l.differentiate(&w_name(j))).collect();
    let mut v = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = ip.gamma_apply(&dl[j]);
        for i in 0..n {
            for k in 0..n {
                if ip.c[i][j][k] != 0.0 {
                    e = e.sub(
                        dl[k]
                            .clone()
                            .mul(Expr::var(&w_name(i)))
                            .scale(ip.c[i][j][k]),
                    );
                }
            }
        }
        v.push(e.simplify());
    }
    let hessian = CandidateMultiplier::new(
        (0..n)
            .map(|i| (0..n).map(|j| dl[j].differentiate(&w_name(i))).collect())
            .collect(),
    );
    (v, hessian)
}

/// Affine decomposition of the Euler-Poincare expressions:
/// `V_i = mu_{ji} w^j + nu_i` with `mu`, `nu` functions of `t` alone.
#[derive(Debug, Clone)]
pub struct MuNu {
    /// `mu[i][j] = mu_{ij}(t) = dV_j/dw^i` at `w = 0`.
    pub mu: Vec<Vec<Expr>>,
    pub nu: Vec<Expr>,
    pub affine_report: Report,
}

/// Extract `(mu, nu)` from the Euler-Poincare expressions of `l`,
/// rejecting Lagrangians whose expressions are not affine in the fiber.
pub fn extract_mu_nu(ip: &IpData, l: &Expr, spec: &SampleSpec) -> Result<MuNu, IpError> {
    let n = ip.n;
    let (v, _) = euler_poincare_residual(ip, l);
    let chart = ip.chart();

    let mut affine = ZeroCheck::trivial();
    for vj in &v {
        for a in 0..n {
            for b in a..n {
                let second = vj.differentiate(&w_name(a)).differentiate(&w_name(b));
                affine.merge(is_zero(&second, chart, spec)?);
            }
        }
    }
    if !affine.pass {
        return Err(IpError::NotAffine {
            max_residual: affine.max_abs,
        });
    }
    let mut affine_report = Report::new();
    affine_report.push_zero_check("affine", affine);

    let zero_w: std::collections::BTreeMap<String, Expr> =
        (0..n).map(|i| (w_name(i), Expr::zero())).collect();
    let nu: Vec<Expr> = v.iter().map(|vj| vj.substitute(&zero_w)).collect();
    let mu: Vec<Vec<Expr>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| v[j].differentiate(&w_name(i)).substitute(&zero_w))
                .collect()
        })
        .collect();
    Ok(MuNu {
        mu,
        nu,
        affine_report,
    })
}

/// Data of the invariant-Lagrangian obstruction: structure constants plus
/// `mu_{ij}(t)` (antisymmetric) and `nu_i(t)`.
#[derive(Debug, Clone)]
pub struct CohomologyProblem {
    pub n: usize,
    pub c: Vec<Vec<Vec<f64>>>,
    pub mu: Vec<Vec<Expr>>,
    pub nu: Vec<Expr>,
}

impl CohomologyProblem {
    pub fn new(
        n: usize,
        c: Vec<Vec<Vec<f64>>>,
        mu: Vec<Vec<Expr>>,
        nu: Vec<Expr>,
        spec: &SampleSpec,
    ) -> Result<CohomologyProblem, IpError> {
        validate_structure_constants(&c)?;
        if mu.len() != n || mu.iter().any(|r| r.len() != n) || nu.len() != n {
            return Err(IpError::Shape("mu must be n x n and nu length n".to_string()));
        }
        let chart = Chart::new(&["t"]);
        let points = sample_points(&chart, spec);
        for i in 0..n {
            for j in i..n {
                let e = mu[i][j].clone().add(mu[j][i].clone());
                if !is_zero_at(&e, &points, spec)?.pass {
                    return Err(IpError::MuNotAntisymmetric);
                }
            }
        }
        Ok(CohomologyProblem { n, c, mu, nu })
    }

    /// Constant matrix of the coboundary map `theta -> theta_k C^k_{ij}`,
    /// rows indexed by pairs `i < j`.
    pub fn d_matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        let mut d = DMatrix::zeros(pairs.len(), n);
        for (row, (i, j)) in pairs.iter().enumerate() {
            for k in 0..n {
                d[(row, k)] = self.c[*i][*j][k];
            }
        }
        d
    }
}

/// Decide the invariant-Lagrangian obstruction: consistency of the
/// `(mu, nu)` pair, exactness of `mu(t)` under the constant coboundary
/// map (degree-two stage), and membership of `nu + dtheta/dt` in the
/// annihilator of the derived subalgebra (degree-one stage), pointwise
/// over the `t`-samples.
pub fn cohomology_obstruction(
    prob: &CohomologyProblem,
    spec: &SampleSpec,
) -> Result<Report, IpError> {
    let n = prob.n;
    let chart = Chart::new(&["t"]);
    let points = sample_points(&chart, spec);
    let mut report = Report::new();

    // consistency: d(mu)/dt + C^l_{ij} nu_l = 0 and the cyclic condition
    let mut eq1 = ZeroCheck::trivial();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut e = prob.mu[i][j].differentiate("t");
            for l in 0..n {
                if prob.c[i][j][l] != 0.0 {
                    e = e.add(prob.nu[l].clone().scale(prob.c[i][j][l]));
                }
            }
            eq1.merge(is_zero_at(&e, &points, spec)?);
        }
    }
    report.push_zero_check("consistency_dt", eq1);

    let mut eq2 = ZeroCheck::trivial();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let mut e = Expr::zero();
                for l in 0..n {
                    if prob.c[j][k][l] != 0.0 {
                        e = e.add(prob.mu[i][l].clone().scale(prob.c[j][k][l]));
                    }
                    if prob.c[k][i][l] != 0.0 {
                        e = e.add(prob.mu[j][l].clone().scale(prob.c[k][i][l]));
                    }
                    if prob.c[i][j][l] != 0.0 {
                        e = e.add(prob.mu[k][l].clone().scale(prob.c[i][j][l]));
                    }
                }
                eq2.merge(is_zero_at(&e, &points, spec)?);
            }
        }
    }
    report.push_zero_check("consistency_cyclic", eq2);

    let d = prob.d_matrix();
    let rank = linalg::rank(&d);
    report.push(CheckFamily::value("d_matrix_rank", rank as f64, true));

    // degree-two stage: particular theta with D theta = mu, via the
    // pseudo-inverse applied to the symbolic mu entries
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let pinv = linalg::pseudo_inverse(&d);
    let mut theta_p = vec![Expr::zero(); n];
    for k in 0..n {
        for (row, (i, j)) in pairs.iter().enumerate() {
            let w = pinv[(k, row)];
            if w.abs() > 1e-14 {
                theta_p[k] = theta_p[k].clone().add(prob.mu[*i][*j].clone().scale(w));
            }
        }
    }
    let mut h2 = ZeroCheck::trivial();
    for (row, (i, j)) in pairs.iter().enumerate() {
        let mut e = prob.mu[*i][*j].clone().neg();
        for k in 0..n {
            let c = d[(row, k)];
            if c != 0.0 {
                e = e.add(theta_p[k].clone().scale(c));
            }
        }
        h2.merge(is_zero_at(&e, &points, spec)?);
    }
    report.push_zero_check("h2_coboundary", h2);

    // degree-one stage: xi = nu + theta_p' must annihilate the bracket
    let mut h1 = ZeroCheck::trivial();
    let xi: Vec<Expr> = (0..n)
        .map(|l| prob.nu[l].clone().add(theta_p[l].differentiate("t")))
        .collect();
    for (i, j) in &pairs {
        let mut e = Expr::zero();
        for l in 0..n {
            if prob.c[*i][*j][l] != 0.0 {
                e = e.add(xi[l].clone().scale(prob.c[*i][*j][l]));
            }
        }
        h1.merge(is_zero_at(&e, &points, spec)?);
    }
    report.push_zero_check("h1_annihilator", h1);

    Ok(report)
}

/// Least-squares coboundary solve at a single `t`: used by the tests as
/// an oracle against the symbolic path.
pub fn coboundary_solve_at(
    prob: &CohomologyProblem,
    t: f64,
) -> Result<(DVector<f64>, f64), IpError> {
    let n = prob.n;
    let d = prob.d_matrix();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let mut point = Point::new();
    point.insert("t".to_string(), t);
    let mut b = DVector::zeros(pairs.len());
    for (row, (i, j)) in pairs.iter().enumerate() {
        b[row] = prob.mu[*i][*j].evaluate(&point)?;
    }
    Ok(linalg::least_squares(&d, &b))
}
