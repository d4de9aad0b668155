//! Fixed-step RK4 for two-component systems, with step-doubling error control.

use alloc::vec::Vec;

/// Samples of a two-component solution on a uniform grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t0: f64,
    pub step: f64,
    pub y: Vec<[f64; 2]>,
}

impl Trajectory {
    pub fn t(&self, i: usize) -> f64 {
        self.t0 + self.step * i as f64
    }

    pub fn last(&self) -> [f64; 2] {
        *self.y.last().expect("trajectory is never empty")
    }
}

pub fn rk4<F>(mut f: F, t0: f64, t1: f64, y0: [f64; 2], n: usize) -> Trajectory
where
    F: FnMut(f64, [f64; 2]) -> [f64; 2],
{
    let h = (t1 - t0) / n as f64;
    let mut y = Vec::with_capacity(n + 1);
    y.push(y0);
    let mut cur = y0;
    for i in 0..n {
        let t = t0 + h * i as f64;
        let k1 = f(t, cur);
        let k2 = f(t + 0.5 * h, axpy(cur, 0.5 * h, k1));
        let k3 = f(t + 0.5 * h, axpy(cur, 0.5 * h, k2));
        let k4 = f(t + h, axpy(cur, h, k3));
        cur = [
            cur[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            cur[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        y.push(cur);
    }
    Trajectory { t0, step: h, y }
}

fn axpy(y: [f64; 2], a: f64, k: [f64; 2]) -> [f64; 2] {
    [y[0] + a * k[0], y[1] + a * k[1]]
}

/// Richardson combination of an n-step and a 2n-step run, sampled on the coarse grid.
/// Returns the extrapolated trajectory and the largest component error estimate.
pub fn richardson(coarse: &Trajectory, fine: &Trajectory) -> (Trajectory, f64) {
    debug_assert_eq!(fine.y.len(), 2 * coarse.y.len() - 1);
    let mut err: f64 = 0.0;
    let y = coarse
        .y
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let f = fine.y[2 * i];
            let d0 = (f[0] - c[0]) / 15.0;
            let d1 = (f[1] - c[1]) / 15.0;
            err = err.max(d0.abs()).max(d1.abs());
            [f[0] + d0, f[1] + d1]
        })
        .collect();
    (
        Trajectory {
            t0: coarse.t0,
            step: coarse.step,
            y,
        },
        err,
    )
}
