//! Three-stage Radau IIA (order 5, L-stable) for small stiff systems.
//!
//! Stage equations are solved by a damped Newton iteration on the full stage
//! Jacobian. A step whose Newton iteration fails is retried as two half steps,
//! down to a fixed depth.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{lu_solve, LinalgError};
use crate::math::{abs, sqrt};

/// A system `ẏ = f(t, y)` with an analytic Jacobian.
pub trait StiffSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]);
    /// Row-major `∂f/∂y`.
    fn jacobian(&self, t: f64, y: &[f64], out: &mut [f64]);
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StiffError {
    NewtonDiverged { t: f64, h: f64 },
    Linear(LinalgError),
}

impl core::fmt::Display for StiffError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            StiffError::NewtonDiverged { t, h } => {
                write!(f, "implicit stage equations did not converge at t = {t} (h = {h:e})")
            }
            StiffError::Linear(e) => write!(f, "implicit stage solve: {e}"),
        }
    }
}

impl core::error::Error for StiffError {}

const STAGES: usize = 3;
const MAX_NEWTON: usize = 60;
const MAX_SPLIT_DEPTH: u32 = 12;
const REL_TOL: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct RadauIIA {
    a: [[f64; STAGES]; STAGES],
    c: [f64; STAGES],
}

impl Default for RadauIIA {
    fn default() -> Self {
        Self::new()
    }
}

impl RadauIIA {
    pub fn new() -> Self {
        let s6 = sqrt(6.0);
        Self {
            a: [
                [(88.0 - 7.0 * s6) / 360.0, (296.0 - 169.0 * s6) / 1800.0, (-2.0 + 3.0 * s6) / 225.0],
                [(296.0 + 169.0 * s6) / 1800.0, (88.0 + 7.0 * s6) / 360.0, (-2.0 - 3.0 * s6) / 225.0],
                [(16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0],
            ],
            c: [(4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0],
        }
    }

    /// Advances `y` from `t` to `t + h`.
    pub fn step<S: StiffSystem>(&self, sys: &S, t: f64, h: f64, y: &mut [f64]) -> Result<(), StiffError> {
        self.step_split(sys, t, h, y, 0)
    }

    fn step_split<S: StiffSystem>(&self, sys: &S, t: f64, h: f64, y: &mut [f64], depth: u32) -> Result<(), StiffError> {
        match self.try_step(sys, t, h, y) {
            Ok(()) => Ok(()),
            Err(e) if depth >= MAX_SPLIT_DEPTH => Err(e),
            Err(_) => {
                let half = 0.5 * h;
                self.step_split(sys, t, half, y, depth + 1)?;
                self.step_split(sys, t + half, half, y, depth + 1)
            }
        }
    }

    /// Residual `G(Z) = Z − h (A ⊗ I) F(y + Z)`; also returns the largest stage slope.
    fn residual<S: StiffSystem>(&self, sys: &S, t: f64, h: f64, y: &[f64], z: &[f64], g: &mut [f64], work: &mut [f64]) -> f64 {
        let n = y.len();
        let mut fscale: f64 = 0.0;
        let mut stage = vec![0.0; n];
        for k in 0..STAGES {
            for i in 0..n {
                stage[i] = y[i] + z[k * n + i];
            }
            sys.rhs(t + self.c[k] * h, &stage, &mut work[k * n..(k + 1) * n]);
            for v in &work[k * n..(k + 1) * n] {
                fscale = fscale.max(abs(*v));
            }
        }
        for k in 0..STAGES {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..STAGES {
                    acc += self.a[k][j] * work[j * n + i];
                }
                g[k * n + i] = z[k * n + i] - h * acc;
            }
        }
        fscale
    }

    fn try_step<S: StiffSystem>(&self, sys: &S, t: f64, h: f64, y: &mut [f64]) -> Result<(), StiffError> {
        let n = sys.dim();
        let m = STAGES * n;
        let mut z = vec![0.0; m];
        let mut g = vec![0.0; m];
        let mut trial = vec![0.0; m];
        let mut g_trial = vec![0.0; m];
        let mut work = vec![0.0; m];
        let mut jac_stage: Vec<f64> = vec![0.0; n * n];
        let mut big = vec![0.0; m * m];
        let mut stage = vec![0.0; n];

        let mut fscale = self.residual(sys, t, h, y, &z, &mut g, &mut work);
        let mut g_norm = norm2(&g);
        for _ in 0..MAX_NEWTON {
            big.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..STAGES {
                for i in 0..n {
                    stage[i] = y[i] + z[j * n + i];
                }
                sys.jacobian(t + self.c[j] * h, &stage, &mut jac_stage);
                for k in 0..STAGES {
                    let w = h * self.a[k][j];
                    for r in 0..n {
                        let row = (k * n + r) * m + j * n;
                        for col in 0..n {
                            big[row + col] = -w * jac_stage[r * n + col];
                        }
                    }
                }
            }
            for d in 0..m {
                big[d * m + d] += 1.0;
            }
            let mut delta: Vec<f64> = g.iter().map(|v| -v).collect();
            lu_solve(&mut big, &mut delta).map_err(StiffError::Linear)?;

            let scale = max_abs(y).max(max_abs(&z));
            let tol = REL_TOL * scale + REL_TOL * h * fscale + f64::MIN_POSITIVE;
            let step_norm = max_abs(&delta);
            if step_norm <= tol {
                for (zi, di) in z.iter_mut().zip(&delta) {
                    *zi += di;
                }
                for i in 0..n {
                    y[i] += z[(STAGES - 1) * n + i];
                }
                return Ok(());
            }

            let mut alpha = 1.0;
            loop {
                for i in 0..m {
                    trial[i] = z[i] + alpha * delta[i];
                }
                let fs = self.residual(sys, t, h, y, &trial, &mut g_trial, &mut work);
                let tn = norm2(&g_trial);
                if tn.is_finite() && tn <= (1.0 - 1e-4 * alpha) * g_norm {
                    core::mem::swap(&mut z, &mut trial);
                    core::mem::swap(&mut g, &mut g_trial);
                    g_norm = tn;
                    fscale = fs;
                    break;
                }
                alpha *= 0.5;
                if alpha < 1e-6 {
                    return Err(StiffError::NewtonDiverged { t, h });
                }
            }
        }
        Err(StiffError::NewtonDiverged { t, h })
    }
}

fn norm2(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|x| x * x).sum())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(abs(*x)))
}
