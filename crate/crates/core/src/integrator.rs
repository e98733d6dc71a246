//! Classical fourth-order Runge–Kutta on flat state vectors.

use alloc::vec;
use alloc::vec::Vec;

/// RK4 stepper with preallocated stage buffers.
#[derive(Clone, Debug)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    pub fn new(len: usize) -> Self {
        Self {
            k1: vec![0.0; len],
            k2: vec![0.0; len],
            k3: vec![0.0; len],
            k4: vec![0.0; len],
            stage: vec![0.0; len],
        }
    }

    /// Advances `y` from `t` to `t + dt`.
    pub fn step<E, F>(&mut self, t: f64, dt: f64, y: &mut [f64], mut f: F) -> Result<(), E>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    {
        f(t, y, &mut self.k1)?;
        self.finish(t, dt, y, f)
    }

    /// Like [`Rk4::step`] when the slope at `(t, y)` is already known.
    pub fn step_with_slope<E, F>(&mut self, t: f64, dt: f64, y: &mut [f64], slope: &[f64], f: F) -> Result<(), E>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    {
        self.k1.copy_from_slice(slope);
        self.finish(t, dt, y, f)
    }

    fn finish<E, F>(&mut self, t: f64, dt: f64, y: &mut [f64], mut f: F) -> Result<(), E>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    {
        let half = 0.5 * dt;
        for i in 0..y.len() {
            self.stage[i] = y[i] + half * self.k1[i];
        }
        f(t + half, &self.stage, &mut self.k2)?;
        for i in 0..y.len() {
            self.stage[i] = y[i] + half * self.k2[i];
        }
        f(t + half, &self.stage, &mut self.k3)?;
        for i in 0..y.len() {
            self.stage[i] = y[i] + dt * self.k3[i];
        }
        f(t + dt, &self.stage, &mut self.k4)?;
        let sixth = dt / 6.0;
        for i in 0..y.len() {
            y[i] += sixth * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}
