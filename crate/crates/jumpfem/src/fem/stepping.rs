//! Backward Euler time stepping: (M + dt A) c_i = dt F(t_i) + M c_{i-1}.
//!
//! The system matrix is time-independent, so one factorization serves all
//! steps. Every solve is checked against a relative residual tolerance, with
//! a single refinement pass before giving up.

use super::assemble::SparseSystem;
use super::solver::{Factorization, SolverKind, RESIDUAL_TOLERANCE};
use crate::{Error, Result};

/// Discrete trajectory on the equidistant time grid.
pub struct Trajectory {
    pub times: Vec<f64>,
    /// coefficient vectors per stored time node
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds at least c_0")
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

/// Which time nodes to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreMode {
    /// every node, for parabolic norms and trajectory dumps
    Full,
    /// initial and final node only
    Ends,
}

/// March the fully discrete system from `c0` to the horizon.
pub fn backward_euler(
    sys: &SparseSystem,
    load: &dyn Fn(f64) -> Vec<f64>,
    c0: Vec<f64>,
    dt: f64,
    horizon: f64,
    solver: SolverKind,
    store: StoreMode,
) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::config("dt", "time step must be positive"));
    }
    let steps_real = horizon / dt;
    let steps = steps_real.round() as usize;
    if steps == 0 || (steps_real - steps as f64).abs() > 1e-9 * steps as f64 {
        return Err(Error::config(
            "dt",
            format!("time step {dt} does not divide the horizon {horizon}"),
        ));
    }
    let n = sys.dofs();
    if c0.len() != n {
        return Err(Error::config("initial", "initial vector has wrong length"));
    }

    let system_matrix = sys.mass.add_scaled(&sys.stiffness, dt);
    let factorization = Factorization::new(&system_matrix, solver)?;

    let mut times = Vec::with_capacity(if store == StoreMode::Full {
        steps + 1
    } else {
        2
    });
    let mut states = Vec::with_capacity(times.capacity());
    times.push(0.0);
    states.push(c0);

    let mut current = states[0].clone();
    let mut mass_c = vec![0.0; n];
    let mut residual = vec![0.0; n];
    for step in 1..=steps {
        let t = step as f64 * dt;
        sys.mass.matvec(&current, &mut mass_c);
        let mut rhs = load(t);
        for (r, m) in rhs.iter_mut().zip(&mass_c) {
            *r = dt * *r + m;
        }
        let mut next = factorization
            .solve(&rhs)
            .map_err(|e| solver_step_error(e, step))?;

        let norm_rhs = rhs
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
            .max(f64::MIN_POSITIVE);
        system_matrix.matvec(&next, &mut residual);
        for (r, b) in residual.iter_mut().zip(&rhs) {
            *r = b - *r;
        }
        let mut res_norm = residual.iter().map(|v| v * v).sum::<f64>().sqrt();
        if res_norm > RESIDUAL_TOLERANCE * norm_rhs {
            let correction = factorization
                .solve(&residual)
                .map_err(|e| solver_step_error(e, step))?;
            for (x, c) in next.iter_mut().zip(&correction) {
                *x += c;
            }
            system_matrix.matvec(&next, &mut residual);
            for (r, b) in residual.iter_mut().zip(&rhs) {
                *r = b - *r;
            }
            res_norm = residual.iter().map(|v| v * v).sum::<f64>().sqrt();
            if res_norm > RESIDUAL_TOLERANCE * norm_rhs {
                return Err(Error::Solver {
                    step,
                    message: format!(
                        "relative residual {:.3e} after refinement",
                        res_norm / norm_rhs
                    ),
                });
            }
        }

        current = next;
        if store == StoreMode::Full {
            times.push(t);
            states.push(current.clone());
        }
    }
    if store == StoreMode::Ends {
        times.push(steps as f64 * dt);
        states.push(current);
    }
    Ok(Trajectory { times, states })
}

fn solver_step_error(e: Error, step: usize) -> Error {
    match e {
        Error::Solver { message, .. } => Error::Solver { step, message },
        other => other,
    }
}
