//! Fixed-step classical RK4 for expression-defined vector fields. Used to
//! check reduced/reconstructed dynamics against closed forms.

use thiserror::Error;

use crate::chart::Chart;
use crate::expr::{EvalError, Expr, Point};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OdeError {
    #[error("integration failed at t = {t}: {source}")]
    Eval { t: f64, source: EvalError },
    #[error("invalid integration setup: {0}")]
    Setup(String),
}

/// First-order system: one right-hand side per state coordinate,
/// expressions over `(time, states...)`.
#[derive(Debug, Clone)]
pub struct OdeSystem {
    pub time: String,
    pub states: Vec<String>,
    pub rhs: Vec<Expr>,
}

impl OdeSystem {
    pub fn new(time: &str, states: &[&str], rhs: Vec<Expr>) -> Result<OdeSystem, OdeError> {
        if rhs.len() != states.len() {
            return Err(OdeError::Setup(
                "one right-hand side per state coordinate".to_string(),
            ));
        }
        Ok(OdeSystem {
            time: time.to_string(),
            states: states.iter().map(|s| s.to_string()).collect(),
            rhs,
        })
    }

    pub fn chart(&self) -> Chart {
        let mut names = vec![self.time.clone()];
        names.extend(self.states.iter().cloned());
        Chart::from_names(names)
    }

    fn eval_rhs(&self, t: f64, x: &[f64]) -> Result<Vec<f64>, OdeError> {
        let mut p = Point::new();
        p.insert(self.time.clone(), t);
        for (name, v) in self.states.iter().zip(x) {
            p.insert(name.clone(), *v);
        }
        self.rhs
            .iter()
            .map(|e| e.evaluate(&p).map_err(|source| OdeError::Eval { t, source }))
            .collect()
    }
}

/// Integration output: `(t, state)` samples on a uniform grid (the last
/// step is shortened to land exactly on `t1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub step: f64,
}

/// Classical fourth-order Runge-Kutta with fixed step `h`.
pub fn rk4(sys: &OdeSystem, x0: &[f64], t0: f64, t1: f64, h: f64) -> Result<Trajectory, OdeError> {
    if h <= 0.0 {
        return Err(OdeError::Setup("step size must be positive".to_string()));
    }
    if t1 <= t0 {
        return Err(OdeError::Setup("t1 must exceed t0".to_string()));
    }
    if x0.len() != sys.states.len() {
        return Err(OdeError::Setup(
            "initial state length must match state count".to_string(),
        ));
    }

    let mut times = vec![t0];
    let mut states = vec![x0.to_vec()];
    let mut t = t0;
    let mut x = x0.to_vec();
    let n = sys.states.len();

    while t < t1 {
        let step = h.min(t1 - t);
        let k1 = sys.eval_rhs(t, &x)?;
        let mut xt: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * step * k1[i]).collect();
        let k2 = sys.eval_rhs(t + 0.5 * step, &xt)?;
        for i in 0..n {
            xt[i] = x[i] + 0.5 * step * k2[i];
        }
        let k3 = sys.eval_rhs(t + 0.5 * step, &xt)?;
        for i in 0..n {
            xt[i] = x[i] + step * k3[i];
        }
        let k4 = sys.eval_rhs(t + step, &xt)?;
        for i in 0..n {
            x[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        // advance on the grid; land exactly on t1 at the end
        t = if t1 - (t + step) < 1e-12 * h { t1 } else { t + step };
        times.push(t);
        states.push(x.clone());
    }

    Ok(Trajectory {
        times,
        states,
        step: h,
    })
}

/// Maximum deviation per coordinate between a trajectory and closed-form
/// expressions of the time coordinate.
pub fn compare_closed_form(
    sys: &OdeSystem,
    traj: &Trajectory,
    exact: &[Expr],
) -> Result<Vec<f64>, OdeError> {
    if exact.len() != sys.states.len() {
        return Err(OdeError::Setup(
            "one closed form per state coordinate".to_string(),
        ));
    }
    let mut max_err = vec![0.0f64; exact.len()];
    for (t, state) in traj.times.iter().zip(&traj.states) {
        let mut p = Point::new();
        p.insert(sys.time.clone(), *t);
        for (i, e) in exact.iter().enumerate() {
            let v = e
                .evaluate(&p)
                .map_err(|source| OdeError::Eval { t: *t, source })?;
            max_err[i] = max_err[i].max((state[i] - v).abs());
        }
    }
    Ok(max_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn constant_field_constant_trajectory() {
        let sys = OdeSystem::new("t", &["x"], vec![Expr::zero()]).unwrap();
        let traj = rk4(&sys, &[3.5], 0.0, 1.0, 0.1).unwrap();
        assert!(traj.states.iter().all(|s| s[0] == 3.5));
        assert!((traj.times.last().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_growth_matches_closed_form() {
        let chart = Chart::new(&["t", "r"]);
        let sys = OdeSystem::new("t", &["r"], vec![parse("r", &chart).unwrap()]).unwrap();
        let traj = rk4(&sys, &[1.0], 0.0, 1.0, 1e-3).unwrap();
        let last = traj.states.last().unwrap()[0];
        assert!((last - std::f64::consts::E).abs() < 1e-8);
    }

    #[test]
    fn group_motion_reconstruction() {
        // eps' = -r0^2 exp(2t) with eps(0) = 0, r0 = 1: eps(1) = (1 - e^2)/2
        let chart = Chart::new(&["t", "eps"]);
        let sys =
            OdeSystem::new("t", &["eps"], vec![parse("-exp(2*t)", &chart).unwrap()]).unwrap();
        let traj = rk4(&sys, &[0.0], 0.0, 1.0, 1e-3).unwrap();
        let last = traj.states.last().unwrap()[0];
        let exact = 0.5 * (1.0 - (2.0f64).exp());
        assert!((last - exact).abs() < 1e-6);
    }

    #[test]
    fn compare_reports_zero_against_own_interpolant() {
        let chart = Chart::new(&["t", "x"]);
        let sys = OdeSystem::new("t", &["x"], vec![parse("x", &chart).unwrap()]).unwrap();
        let traj = rk4(&sys, &[1.0], 0.0, 0.5, 1e-2).unwrap();
        let errs = compare_closed_form(&sys, &traj, &[parse("exp(t)", &chart).unwrap()]).unwrap();
        assert!(errs[0] < 1e-9);
    }

    #[test]
    fn order_four_convergence() {
        let chart = Chart::new(&["t", "r"]);
        let sys = OdeSystem::new("t", &["r"], vec![parse("r", &chart).unwrap()]).unwrap();
        let exact = [parse("exp(t)", &chart).unwrap()];
        let err_h = {
            let traj = rk4(&sys, &[1.0], 0.0, 1.0, 0.02).unwrap();
            compare_closed_form(&sys, &traj, &exact).unwrap()[0]
        };
        let err_h2 = {
            let traj = rk4(&sys, &[1.0], 0.0, 1.0, 0.01).unwrap();
            compare_closed_form(&sys, &traj, &exact).unwrap()[0]
        };
        let ratio = err_h / err_h2;
        assert!(
            (12.0..=20.0).contains(&ratio),
            "expected fourth-order decay, ratio {ratio}"
        );
    }

    #[test]
    fn reconstruction_composes_with_horizontal_lift() {
        // integrating the reduced polar system directly must agree with
        // the horizontal lift (r(t), theta0) composed with the group
        // motion eps(t) from the reconstruction equation, within twice
        // the individual integration errors
        let chart = Chart::new(&["t", "r", "theta"]);
        let polar = OdeSystem::new(
            "t",
            &["r", "theta"],
            vec![
                parse("r", &chart).unwrap(),
                parse("-r^2", &chart).unwrap(),
            ],
        )
        .unwrap();
        let h = 1e-3;
        let theta0 = 0.7;
        let direct = rk4(&polar, &[1.0, theta0], 0.0, 1.0, h).unwrap();

        let eps_chart = Chart::new(&["t", "eps"]);
        let rec = OdeSystem::new("t", &["eps"], vec![parse("-exp(2*t)", &eps_chart).unwrap()])
            .unwrap();
        let motion = rk4(&rec, &[0.0], 0.0, 1.0, h).unwrap();

        let t_chart = Chart::new(&["t"]);
        let err_direct = compare_closed_form(
            &polar,
            &direct,
            &[
                parse("exp(t)", &t_chart).unwrap(),
                parse("0.7 + 0.5*(1 - exp(2*t))", &t_chart).unwrap(),
            ],
        )
        .unwrap();
        let err_motion = compare_closed_form(
            &rec,
            &motion,
            &[parse("0.5*(1 - exp(2*t))", &t_chart).unwrap()],
        )
        .unwrap();
        let budget = 2.0 * (err_direct[1] + err_motion[0]) + 1e-12;

        assert_eq!(direct.times.len(), motion.times.len());
        for (d, m) in direct.states.iter().zip(&motion.states) {
            let composed = theta0 + m[0];
            assert!(
                (d[1] - composed).abs() <= budget,
                "direct theta {} vs lift-plus-motion {composed}",
                d[1]
            );
        }
    }

    #[test]
    fn blow_up_reports_time() {
        let chart = Chart::new(&["t", "x"]);
        // x' = x^2 from x(0) = 1 blows up at t = 1
        let sys = OdeSystem::new("t", &["x"], vec![parse("x^2", &chart).unwrap()]).unwrap();
        let res = rk4(&sys, &[1.0], 0.0, 2.0, 1e-3);
        match res {
            Err(OdeError::Eval { t, .. }) => assert!(t > 0.9),
            other => panic!("expected blow-up error, got {other:?}"),
        }
    }
}
