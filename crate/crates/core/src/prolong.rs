//! Prolongation of a Lie algebroid over a product bundle: the extended
//! algebroid whose integral manifolds encode PDE solutions, the
//! connection-based splitting, and the pullback along a bundle section.
//!
//! Only trivial bundles `M x N` are constructed; a connection enters
//! through its coefficient matrix `A^mu_i(x, y)`, which twists the anchor
//! and bracket of the extended basis.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::algebroid::{wedge, Algebroid, AlgebroidError, Form};
use crate::chart::Chart;
use crate::expr::Expr;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProlongError {
    #[error("fiber coordinate `{0}` collides with a base coordinate")]
    NameCollision(String),
    #[error("connection coefficients have shape {rows}x{cols}, expected {want_rows}x{want_cols}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("section must provide one expression per fiber coordinate")]
    SectionShape,
    #[error(transparent)]
    Algebroid(#[from] AlgebroidError),
}

/// Ehresmann connection data on a product bundle: coefficients
/// `A^mu_i(x, y)` of the horizontal lifts `h_i = d/dx^i + A^mu_i d/dy^mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionData {
    /// `coeffs[mu][i] = A^mu_i`, indexed fiber coordinate then base
    /// coordinate.
    pub coeffs: Vec<Vec<Expr>>,
}

impl ConnectionData {
    pub fn zero(fiber_dim: usize, base_dim: usize) -> ConnectionData {
        ConnectionData {
            coeffs: vec![vec![Expr::zero(); base_dim]; fiber_dim],
        }
    }

    /// Horizontal-lift derivative `h_i(f) = df/dx^i + A^mu_i df/dy^mu`.
    fn h_apply(&self, base: &Chart, fiber: &[String], i: usize, f: &Expr) -> Expr {
        let mut out = f.differentiate(&base.coords()[i]);
        for (mu, y) in fiber.iter().enumerate() {
            out = out.add(self.coeffs[mu][i].clone().mul(f.differentiate(y)));
        }
        out
    }

    /// Curvature component `K^mu_{ij} = h_i(A^mu_j) - h_j(A^mu_i)`.
    pub fn curvature(&self, base: &Chart, fiber: &[String], mu: usize, i: usize, j: usize) -> Expr {
        self.h_apply(base, fiber, i, &self.coeffs[mu][j])
            .sub(self.h_apply(base, fiber, j, &self.coeffs[mu][i]))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Splitting {
    Trivial,
    Connection(ConnectionData),
}

/// Prolongation of a base algebroid over a product bundle: an algebroid on
/// the extended chart `(x, y)` whose basis splits into lifted base sections
/// followed by fiber sections.
#[derive(Debug)]
pub struct ProlongedAlgebroid {
    algebroid: Arc<Algebroid>,
    base: Arc<Algebroid>,
    fiber: Vec<String>,
    splitting: Splitting,
}

/// Section of the bundle: one expression `y^mu(x)` over the base chart per
/// fiber coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleSection {
    pub components: BTreeMap<String, Expr>,
}

impl BundleSection {
    pub fn new(fiber: &[String], components: Vec<Expr>) -> Result<BundleSection, ProlongError> {
        if components.len() != fiber.len() {
            return Err(ProlongError::SectionShape);
        }
        Ok(BundleSection {
            components: fiber.iter().cloned().zip(components).collect(),
        })
    }

    /// Substitution map sending fiber coordinates to their section values.
    pub fn substitution(&self) -> BTreeMap<String, Expr> {
        self.components
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }
}

impl ProlongedAlgebroid {
    pub fn algebroid(&self) -> &Arc<Algebroid> {
        &self.algebroid
    }

    pub fn base(&self) -> &Arc<Algebroid> {
        &self.base
    }

    pub fn fiber(&self) -> &[String] {
        &self.fiber
    }

    pub fn base_rank(&self) -> usize {
        self.base.rank()
    }

    /// Basis index of the fiber section attached to fiber coordinate `mu`.
    pub fn fiber_basis_index(&self, mu: usize) -> usize {
        self.base.rank() + mu
    }

    /// Express a 1-form given in this prolongation's basis in the trivial
    /// splitting `(theta_alpha, varpi_mu)`. For a trivial prolongation this
    /// is the identity; with a connection the fiber duals pick up
    /// `-rho^i_a A^mu_i` corrections along the base duals.
    pub fn trivial_coefficients(&self, form: &Form) -> (Vec<Expr>, Vec<Expr>) {
        assert_eq!(form.degree(), 1, "trivial splitting applies to 1-forms");
        let rb = self.base.rank();
        let mut theta: Vec<Expr> = (0..rb).map(|a| form.coefficient(&[a])).collect();
        let varpi: Vec<Expr> = (0..self.fiber.len())
            .map(|mu| form.coefficient(&[rb + mu]))
            .collect();
        if let Splitting::Connection(conn) = &self.splitting {
            // hat-E^mu = bar-E^mu - rho^i_a A^mu_i bar-e^a
            for a in 0..rb {
                let mut corr = Expr::zero();
                for (mu, v) in varpi.iter().enumerate() {
                    for i in 0..self.base.chart().dim() {
                        corr = corr.add(
                            v.clone()
                                .mul(self.base.anchor(a, i).clone())
                                .mul(conn.coeffs[mu][i].clone()),
                        );
                    }
                }
                theta[a] = theta[a].clone().sub(corr);
            }
        }
        (theta, varpi)
    }

    /// Pullback of a form along the section `i: x -> (x, ybar(x))`:
    /// coefficients are restricted to the section and each fiber dual is
    /// replaced by its base expression, extended multiplicatively.
    pub fn pullback(&self, section: &BundleSection, form: &Form) -> Result<Form, ProlongError> {
        let subs = section.substitution();
        let base = &self.base;
        let rb = base.rank();
        let n = base.chart().dim();

        // I* of each prolonged basis dual, as a 1-form on the base algebroid
        let mut pulled_basis: Vec<Form> = Vec::with_capacity(self.algebroid.rank());
        for a in 0..rb {
            pulled_basis.push(Form::basis_one_form(base.clone(), a));
        }
        for (mu, y) in self.fiber.iter().enumerate() {
            let ybar = &section.components[y];
            let mut f = Form::zero(base.clone(), 1);
            for a in 0..rb {
                let mut coeff = Expr::zero();
                for i in 0..n {
                    let dy = ybar.differentiate(&base.chart().coords()[i]);
                    coeff = coeff.add(base.anchor(a, i).clone().mul(dy));
                }
                if let Splitting::Connection(conn) = &self.splitting {
                    // hat-E^mu = bar-E^mu - rho^i_a A^mu_i bar-e^a
                    for i in 0..n {
                        let a_coeff = conn.coeffs[mu][i].substitute(&subs);
                        coeff = coeff.sub(base.anchor(a, i).clone().mul(a_coeff));
                    }
                }
                if !coeff.is_const_zero() {
                    f.set(vec![a], coeff);
                }
            }
            pulled_basis.push(f);
        }

        let mut out = Form::zero(base.clone(), form.degree());
        for (key, coeff) in form.coefficients() {
            let restricted = coeff.substitute(&subs);
            let mut factor = Form::function(base.clone(), restricted);
            for &idx in key {
                factor = wedge(&factor, &pulled_basis[idx])?;
            }
            out = out.add(&factor)?;
        }
        Ok(out)
    }
}

fn check_disjoint(base: &Chart, fiber: &Chart) -> Result<(), ProlongError> {
    for y in fiber.coords() {
        if base.has_coord(y) {
            return Err(ProlongError::NameCollision(y.clone()));
        }
    }
    Ok(())
}

fn fiber_basis_names(base: &Algebroid, fiber: &Chart) -> Vec<String> {
    let mut names = base.basis_names().to_vec();
    names.extend(fiber.coords().iter().map(|y| format!("E{y}")));
    names
}

/// Prolong over the product bundle with the trivial connection: lifted
/// base sections keep their anchor and brackets, fiber sections anchor to
/// the fiber derivatives and commute with everything.
pub fn prolong_trivial(
    base: Arc<Algebroid>,
    fiber: Chart,
) -> Result<ProlongedAlgebroid, ProlongError> {
    check_disjoint(base.chart(), &fiber)?;
    let chart = base.chart().extend(&fiber);
    let rb = base.rank();
    let m = fiber.dim();
    let rank = rb + m;
    let dim = chart.dim();
    let base_dim = base.chart().dim();

    let mut anchor = vec![vec![Expr::zero(); dim]; rank];
    for a in 0..rb {
        for i in 0..base_dim {
            anchor[a][i] = base.anchor(a, i).clone();
        }
    }
    for mu in 0..m {
        anchor[rb + mu][base_dim + mu] = Expr::one();
    }

    let mut structure = vec![vec![vec![Expr::zero(); rank]; rank]; rank];
    for a in 0..rb {
        for b in 0..rb {
            for g in 0..rb {
                structure[a][b][g] = base.structure(a, b, g).clone();
            }
        }
    }

    let names = fiber_basis_names(&base, &fiber);
    let algebroid = Algebroid::new(chart, rank, anchor, structure, Some(names));
    Ok(ProlongedAlgebroid {
        algebroid,
        base,
        fiber: fiber.coords().to_vec(),
        splitting: Splitting::Trivial,
    })
}

/// Prolong with a connection splitting: base sections lift horizontally,
/// so their anchors acquire `A^mu_i` components and the brackets pick up
/// curvature terms `M^mu_{ab} = rho^i_a rho^j_b K^mu_{ij}` and
/// `N^nu_{a mu} = -rho^i_a dA^nu_i/dy^mu`.
pub fn prolong_connection(
    base: Arc<Algebroid>,
    fiber: Chart,
    conn: ConnectionData,
) -> Result<ProlongedAlgebroid, ProlongError> {
    check_disjoint(base.chart(), &fiber)?;
    let base_dim = base.chart().dim();
    let m = fiber.dim();
    if conn.coeffs.len() != m || conn.coeffs.iter().any(|row| row.len() != base_dim) {
        return Err(ProlongError::ShapeMismatch {
            rows: conn.coeffs.len(),
            cols: conn.coeffs.first().map_or(0, Vec::len),
            want_rows: m,
            want_cols: base_dim,
        });
    }

    let chart = base.chart().extend(&fiber);
    let rb = base.rank();
    let rank = rb + m;
    let dim = chart.dim();
    let fiber_names = fiber.coords().to_vec();

    let mut anchor = vec![vec![Expr::zero(); dim]; rank];
    for a in 0..rb {
        for i in 0..base_dim {
            anchor[a][i] = base.anchor(a, i).clone();
        }
        // rho^i_a A^mu_i components along the fiber
        for mu in 0..m {
            let mut c = Expr::zero();
            for i in 0..base_dim {
                c = c.add(base.anchor(a, i).clone().mul(conn.coeffs[mu][i].clone()));
            }
            anchor[a][base_dim + mu] = c;
        }
    }
    for mu in 0..m {
        anchor[rb + mu][base_dim + mu] = Expr::one();
    }

    let mut structure = vec![vec![vec![Expr::zero(); rank]; rank]; rank];
    for a in 0..rb {
        for b in 0..rb {
            for g in 0..rb {
                structure[a][b][g] = base.structure(a, b, g).clone();
            }
            for mu in 0..m {
                let mut msum = Expr::zero();
                for i in 0..base_dim {
                    for j in 0..base_dim {
                        let k = conn.curvature(base.chart(), &fiber_names, mu, i, j);
                        if k.is_const_zero() {
                            continue;
                        }
                        msum = msum.add(
                            base.anchor(a, i)
                                .clone()
                                .mul(base.anchor(b, j).clone())
                                .mul(k),
                        );
                    }
                }
                structure[a][b][rb + mu] = msum;
            }
        }
        for mu in 0..m {
            for nu in 0..m {
                let mut nsum = Expr::zero();
                for i in 0..base_dim {
                    nsum = nsum.sub(
                        base.anchor(a, i)
                            .clone()
                            .mul(conn.coeffs[nu][i].differentiate(&fiber_names[mu])),
                    );
                }
                structure[a][rb + mu][rb + nu] = nsum.clone();
                structure[rb + mu][a][rb + nu] = nsum.neg();
            }
        }
    }

    let names = fiber_basis_names(&base, &fiber);
    let algebroid = Algebroid::new(chart, rank, anchor, structure, Some(names));
    Ok(ProlongedAlgebroid {
        algebroid,
        base,
        fiber: fiber_names,
        splitting: Splitting::Connection(conn),
    })
}
