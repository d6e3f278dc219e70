//! Polynomial-ansatz search for reduced multipliers: collocate the
//! linear-in-`k` Helmholtz families at sample points, extract the null
//! space of the stacked system, and hunt for a nondegenerate candidate.
//!
//! Candidates are never accepted on collocation evidence alone: every
//! trial vector is re-verified through `helmholtz_residuals` on a fresh
//! sample stream, which guards against grid aliasing. A "singular"
//! verdict means no nondegenerate candidate was found up to the given
//! degree; it is not a nonexistence proof.

use nalgebra::{DMatrix, DVector};

use crate::chart::{sample_points, SampleSpec};
use crate::expr::{Expr, Point};
use crate::ip::{helmholtz_residuals, CandidateMultiplier, IpData, IpError};
use crate::linalg;
use crate::report::Report;

/// Monomial basis of total degree `<= degree` in `(t, w1..wn)`, in graded
/// lexicographic order, together with the symmetric-entry layout of the
/// unknown coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz {
    pub n: usize,
    pub degree: u32,
    /// Exponent vectors over `(t, w1..wn)`.
    pub monomials: Vec<Vec<u32>>,
    /// Index pairs `i <= j` of the independent symmetric entries.
    pub entries: Vec<(usize, usize)>,
}

impl Ansatz {
    pub fn new(n: usize, degree: u32) -> Ansatz {
        let vars = n + 1;
        let mut monomials = Vec::new();
        for total in 0..=degree {
            let mut exps = vec![0u32; vars];
            enumerate_degree(total, 0, &mut exps, &mut monomials);
        }
        let entries = (0..n)
            .flat_map(|i| (i..n).map(move |j| (i, j)))
            .collect();
        Ansatz {
            n,
            degree,
            monomials,
            entries,
        }
    }

    pub fn unknowns(&self) -> usize {
        self.entries.len() * self.monomials.len()
    }

    /// Monomial as an expression over the reduced chart.
    pub fn monomial_expr(&self, mono: &[u32]) -> Expr {
        let mut out = Expr::one();
        let names: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=self.n).map(|i| format!("w{i}")))
            .collect();
        for (name, &e) in names.iter().zip(mono) {
            if e > 0 {
                out = out.mul(Expr::Pow(Box::new(Expr::var(name)), e as i32));
            }
        }
        out
    }

    /// Reconstruct the symmetric multiplier matrix from a coefficient
    /// vector laid out entry-major.
    pub fn multiplier(&self, coeffs: &[f64]) -> CandidateMultiplier {
        let mut k = vec![vec![Expr::zero(); self.n]; self.n];
        for (e, &(i, j)) in self.entries.iter().enumerate() {
            let mut sum = Expr::zero();
            for (m, mono) in self.monomials.iter().enumerate() {
                let c = coeffs[e * self.monomials.len() + m];
                if c != 0.0 {
                    sum = sum.add(self.monomial_expr(mono).scale(c));
                }
            }
            k[i][j] = sum.clone();
            k[j][i] = sum;
        }
        CandidateMultiplier::new(k)
    }
}

fn enumerate_degree(remaining: u32, var: usize, exps: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if var == exps.len() - 1 {
        exps[var] = remaining;
        out.push(exps.clone());
        exps[var] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        exps[var] = e;
        enumerate_degree(remaining - e, var + 1, exps, out);
        exps[var] = 0;
    }
}

/// Provenance of one collocation row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowTag {
    pub family: &'static str,
    pub indices: Vec<usize>,
    pub sample: usize,
}

/// The stacked linear system: one row per condition instance and sample
/// point, one column per unknown ansatz coefficient.
#[derive(Debug)]
pub struct CollocationSystem {
    pub matrix: DMatrix<f64>,
    pub tags: Vec<RowTag>,
    pub samples: usize,
}

const MAX_ROWS_PER_FAMILY: usize = 4096;

/// Assemble the collocation matrix of the three non-symmetry Helmholtz
/// families (symmetry is built into the ansatz layout). Entries are exact
/// evaluations of each condition against each monomial basis function.
pub fn build_collocation(
    ip: &IpData,
    ansatz: &Ansatz,
    spec: &SampleSpec,
) -> Result<CollocationSystem, IpError> {
    let n = ip.n();
    assert_eq!(ansatz.n, n, "ansatz dimension must match the algebroid");
    let unknowns = ansatz.unknowns();

    // instance index lists per family
    let gamma_instances: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let phi_instances: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let dw_instances: Vec<(usize, usize, usize)> = (0..n)
        .flat_map(|i| {
            ((i + 1)..n).flat_map(move |j| (0..n).map(move |l| (i, j, l)))
        })
        .collect();

    let max_instances = gamma_instances
        .len()
        .max(phi_instances.len())
        .max(dw_instances.len())
        .max(1);
    let samples = (4 * unknowns)
        .clamp(8, MAX_ROWS_PER_FAMILY / max_instances)
        .max(1);
    let mut sample_spec = spec.clone();
    sample_spec.count = samples;
    let points = sample_points(ip.chart(), &sample_spec);

    // per-unknown symbolic family expressions
    struct UnknownExprs {
        gamma: Vec<Expr>,
        phi: Vec<Expr>,
        dw: Vec<Expr>,
    }
    let w_name = |i: usize| format!("w{}", i + 1);
    let mut per_unknown = Vec::with_capacity(unknowns);
    for &(a, b) in &ansatz.entries {
        for mono in &ansatz.monomials {
            let m = ansatz.monomial_expr(mono);
            // k with entries (a,b) and (b,a) set to the monomial
            let k_entry = |i: usize, j: usize| -> Expr {
                if (i, j) == (a, b) || (i, j) == (b, a) {
                    m.clone()
                } else {
                    Expr::zero()
                }
            };
            let gamma = gamma_instances
                .iter()
                .map(|&(i, j)| {
                    let mut e = ip.gamma_apply(&k_entry(i, j));
                    for s in 0..n {
                        e = e.sub(k_entry(s, j).mul(ip.lambda(i, s).clone()));
                        e = e.sub(k_entry(i, s).mul(ip.lambda(j, s).clone()));
                    }
                    e
                })
                .collect();
            let phi = phi_instances
                .iter()
                .map(|&(i, j)| {
                    let mut e = Expr::zero();
                    for s in 0..n {
                        e = e.add(k_entry(s, i).mul(ip.phi(j, s).clone()));
                        e = e.sub(k_entry(s, j).mul(ip.phi(i, s).clone()));
                    }
                    e
                })
                .collect();
            let dw = dw_instances
                .iter()
                .map(|&(i, j, l)| {
                    k_entry(j, l)
                        .differentiate(&w_name(i))
                        .sub(k_entry(i, l).differentiate(&w_name(j)))
                })
                .collect();
            per_unknown.push(UnknownExprs { gamma, phi, dw });
        }
    }

    let rows = samples * (gamma_instances.len() + phi_instances.len() + dw_instances.len());
    let mut matrix = DMatrix::zeros(rows, unknowns);
    let mut tags = Vec::with_capacity(rows);
    let mut row = 0usize;
    let emit = |family: &'static str,
                    indices: Vec<usize>,
                    instance: usize,
                    pick: &dyn Fn(&UnknownExprs) -> &Vec<Expr>,
                    points: &[Point],
                    matrix: &mut DMatrix<f64>,
                    tags: &mut Vec<RowTag>,
                    row: &mut usize|
     -> Result<(), IpError> {
        for (s, p) in points.iter().enumerate() {
            for (u, exprs) in per_unknown.iter().enumerate() {
                matrix[(*row, u)] = pick(exprs)[instance].evaluate(p)?;
            }
            tags.push(RowTag {
                family,
                indices: indices.clone(),
                sample: s,
            });
            *row += 1;
        }
        Ok(())
    };

    for (idx, &(i, j)) in gamma_instances.iter().enumerate() {
        emit("gamma", vec![i, j], idx, &|u| &u.gamma, &points, &mut matrix, &mut tags, &mut row)?;
    }
    for (idx, &(i, j)) in phi_instances.iter().enumerate() {
        emit("phi", vec![i, j], idx, &|u| &u.phi, &points, &mut matrix, &mut tags, &mut row)?;
    }
    for (idx, &(i, j, l)) in dw_instances.iter().enumerate() {
        emit("dw", vec![i, j, l], idx, &|u| &u.dw, &points, &mut matrix, &mut tags, &mut row)?;
    }

    Ok(CollocationSystem {
        matrix,
        tags,
        samples,
    })
}

/// Orthonormal null-space basis of the collocation matrix.
pub fn nullspace(sys: &CollocationSystem) -> Vec<DVector<f64>> {
    linalg::nullspace(&sys.matrix)
}

/// A verified multiplier candidate.
#[derive(Debug, Clone)]
pub struct MultiplierCandidate {
    pub degree: u32,
    pub coefficients: Vec<f64>,
    pub k: CandidateMultiplier,
    pub report: Report,
    pub min_det: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchVerdict {
    Found,
    AllSingular,
    EmptyNullspace,
}

impl SearchVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            SearchVerdict::Found => "found",
            SearchVerdict::AllSingular => "nullspace nonempty but all singular",
            SearchVerdict::EmptyNullspace => "empty nullspace",
        }
    }
}

#[derive(Debug)]
pub struct SearchResult {
    pub verdict: SearchVerdict,
    /// Verified candidates, best nondegeneracy margin first.
    pub candidates: Vec<MultiplierCandidate>,
    /// Null-space dimension per degree tried.
    pub nullity_by_degree: Vec<(u32, usize)>,
    /// Largest `min |det|` any trial achieved (small values certify the
    /// "all singular" verdict over the box).
    pub best_trial_min_det: f64,
    pub trials: usize,
}

fn dedup_key(coeffs: &[f64]) -> String {
    let sign = coeffs
        .iter()
        .find(|c| c.abs() > 1e-9)
        .map_or(1.0, |c| c.signum());
    coeffs
        .iter()
        .map(|c| format!("{:.9}", sign * c))
        .collect::<Vec<_>>()
        .join(",")
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Search degrees `0..=max_degree` for a verified nondegenerate
/// multiplier: null-space basis vectors first, then up to `random_trials`
/// seeded unit combinations per degree. Deterministic for fixed inputs.
pub fn search_multiplier(
    ip: &IpData,
    max_degree: u32,
    random_trials: usize,
    spec: &SampleSpec,
) -> Result<SearchResult, IpError> {
    let verify_spec = spec.reseeded(0x7e57_5eed);
    let mut candidates: Vec<MultiplierCandidate> = Vec::new();
    let mut nullity_by_degree = Vec::new();
    let mut best_trial_min_det = 0.0f64;
    let mut trials = 0usize;
    let mut any_nullspace = false;

    for degree in 0..=max_degree {
        let ansatz = Ansatz::new(ip.n(), degree);
        let sys = build_collocation(ip, &ansatz, spec)?;
        let basis = nullspace(&sys);
        nullity_by_degree.push((degree, basis.len()));
        if basis.is_empty() {
            continue;
        }
        any_nullspace = true;

        let mut trial_vectors: Vec<DVector<f64>> = basis.clone();
        let mut state = spec.seed ^ (0xa076_1d64_78bd_642fu64.wrapping_mul(degree as u64 + 1));
        for _ in 0..random_trials {
            let mut v = DVector::zeros(ansatz.unknowns());
            for b in &basis {
                let u = splitmix64(&mut state);
                let c = (u >> 11) as f64 * (1.0 / (1u64 << 53) as f64) * 2.0 - 1.0;
                v += b * c;
            }
            let norm = v.norm();
            if norm > 1e-9 {
                trial_vectors.push(v / norm);
            }
        }

        // candidates equal up to overall sign are the same multiplier;
        // dedupe on a sign-normalized rounded key
        let mut seen = std::collections::BTreeSet::new();
        for v in trial_vectors {
            trials += 1;
            let coeffs: Vec<f64> = v.iter().cloned().collect();
            let key = dedup_key(&coeffs);
            let fresh = seen.insert(key);
            let k = ansatz.multiplier(&coeffs);
            let report = helmholtz_residuals(ip, &k, &verify_spec)?;
            let min_det = report
                .family("det_min")
                .map(|f| f.max_residual)
                .unwrap_or(0.0);
            best_trial_min_det = best_trial_min_det.max(min_det);
            if report.pass() && fresh {
                candidates.push(MultiplierCandidate {
                    degree,
                    coefficients: coeffs,
                    k,
                    report,
                    min_det,
                });
            }
        }
    }

    candidates.sort_by(|a, b| b.min_det.total_cmp(&a.min_det));
    let verdict = if !candidates.is_empty() {
        SearchVerdict::Found
    } else if any_nullspace {
        SearchVerdict::AllSingular
    } else {
        SearchVerdict::EmptyNullspace
    };
    Ok(SearchResult {
        verdict,
        candidates,
        nullity_by_degree,
        best_trial_min_det,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ip::IpData;

    fn r1_ip() -> IpData {
        IpData::build(1, vec![vec![vec![0.0]]], vec![Expr::zero()]).unwrap()
    }

    fn heisenberg_ip() -> IpData {
        let mut c = vec![vec![vec![0.0; 3]; 3]; 3];
        c[0][2][1] = 1.0;
        c[2][0][1] = -1.0;
        IpData::build(3, c, vec![Expr::zero(); 3]).unwrap()
    }

    #[test]
    fn graded_lex_monomials() {
        let ansatz = Ansatz::new(1, 2);
        // (t, w1), degrees 0..2, within degree lexicographic on exponents
        let expect: Vec<Vec<u32>> = vec![
            vec![0, 0],
            vec![1, 0],
            vec![0, 1],
            vec![2, 0],
            vec![1, 1],
            vec![0, 2],
        ];
        assert_eq!(ansatz.monomials, expect);
        assert_eq!(ansatz.unknowns(), 6);
    }

    #[test]
    fn degree_zero_abelian_system_is_zero_matrix() {
        let ip = r1_ip();
        let ansatz = Ansatz::new(1, 0);
        let sys = build_collocation(&ip, &ansatz, &SampleSpec::default()).unwrap();
        assert!(sys.matrix.amax() == 0.0);
        assert_eq!(nullspace(&sys).len(), 1);
    }

    #[test]
    fn r1_degree_two_nullity_three() {
        // the gamma family kills every t-dependent monomial
        let ip = r1_ip();
        let ansatz = Ansatz::new(1, 2);
        let sys = build_collocation(&ip, &ansatz, &SampleSpec::default()).unwrap();
        let basis = nullspace(&sys);
        assert_eq!(basis.len(), 3);
        // every null vector has zero t, t^2 and t*w coefficients
        for v in &basis {
            assert!(v[1].abs() < 1e-9, "t coefficient");
            assert!(v[3].abs() < 1e-9, "t^2 coefficient");
            assert!(v[4].abs() < 1e-9, "t*w coefficient");
        }
    }

    #[test]
    fn heisenberg_degree_zero_null_vectors_are_singular() {
        // constants: k12 = k22 = k23 = 0 is forced, so det vanishes
        let ip = heisenberg_ip();
        let ansatz = Ansatz::new(3, 0);
        let sys = build_collocation(&ip, &ansatz, &SampleSpec::default()).unwrap();
        let basis = nullspace(&sys);
        assert_eq!(basis.len(), 3);
        // entry order: (0,0),(0,1),(0,2),(1,1),(1,2),(2,2)
        for v in &basis {
            assert!(v[1].abs() < 1e-8, "k12 must vanish");
            assert!(v[3].abs() < 1e-8, "k22 must vanish");
            assert!(v[4].abs() < 1e-8, "k23 must vanish");
        }
    }

    #[test]
    fn search_r1_finds_nondegenerate_candidate() {
        let ip = r1_ip();
        let result = search_multiplier(&ip, 2, 32, &SampleSpec::default()).unwrap();
        assert_eq!(result.verdict, SearchVerdict::Found);
        let best = &result.candidates[0];
        assert!(best.min_det > 0.1, "best margin {}", best.min_det);
        assert!(best.report.pass());
    }

    #[test]
    fn search_heisenberg_all_singular() {
        let ip = heisenberg_ip();
        let result = search_multiplier(&ip, 0, 32, &SampleSpec::default()).unwrap();
        assert_eq!(result.verdict, SearchVerdict::AllSingular);
        assert!(result.best_trial_min_det < 1e-9);
        assert!(result.candidates.is_empty());
    }

    #[test]
    fn search_heisenberg_time_dependent_also_singular() {
        // the obstruction is not evaded by t- or w-dependent candidates
        let ip = heisenberg_ip();
        let result = search_multiplier(&ip, 2, 8, &SampleSpec::default()).unwrap();
        assert_eq!(result.verdict, SearchVerdict::AllSingular);
        assert!(result.best_trial_min_det < 1e-9);
    }

    #[test]
    fn search_abelian_n2_degree_zero_finds_identity_like() {
        let ip = IpData::build(
            2,
            vec![vec![vec![0.0; 2]; 2]; 2],
            vec![Expr::zero(), Expr::zero()],
        )
        .unwrap();
        let result = search_multiplier(&ip, 0, 32, &SampleSpec::default()).unwrap();
        assert_eq!(result.verdict, SearchVerdict::Found);
    }

    #[test]
    fn search_is_deterministic() {
        let ip = r1_ip();
        let a = search_multiplier(&ip, 2, 8, &SampleSpec::default()).unwrap();
        let b = search_multiplier(&ip, 2, 8, &SampleSpec::default()).unwrap();
        assert_eq!(a.candidates.len(), b.candidates.len());
        for (x, y) in a.candidates.iter().zip(&b.candidates) {
            assert_eq!(x.coefficients, y.coefficients);
        }
    }
}
