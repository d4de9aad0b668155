//! Interpolation on tabulated samples.

use alloc::vec::Vec;

/// Piecewise cubic Hermite interpolant on a uniform grid.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    pub x0: f64,
    pub step: f64,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

impl HermiteTable {
    pub fn new(x0: f64, step: f64, y: Vec<f64>, dy: Vec<f64>) -> Self {
        assert_eq!(y.len(), dy.len());
        assert!(y.len() >= 2);
        HermiteTable { x0, step, y, dy }
    }

    pub fn x_end(&self) -> f64 {
        self.x0 + self.step * (self.y.len() - 1) as f64
    }

    /// Value and derivative; arguments outside the table are clamped to the end intervals.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let n = self.y.len() - 1;
        let s = (x - self.x0) / self.step;
        let i = (libm::floor(s).max(0.0) as usize).min(n - 1);
        let t = s - i as f64;
        let h = self.step;
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (m0, m1) = (self.dy[i] * h, self.dy[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let dv = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        (v, dv)
    }
}

/// Six-point Lagrange interpolation on a uniform grid (exact at nodes).
#[derive(Debug, Clone)]
pub struct LagrangeTable {
    pub x0: f64,
    pub step: f64,
    pub y: Vec<f64>,
}

impl LagrangeTable {
    pub fn new(x0: f64, step: f64, y: Vec<f64>) -> Self {
        assert!(y.len() >= 6);
        LagrangeTable { x0, step, y }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.y.len();
        let s = (x - self.x0) / self.step;
        let i = libm::floor(s) as i64;
        let start = (i - 2).clamp(0, n as i64 - 6) as usize;
        let mut acc = 0.0;
        for j in 0..6 {
            let xj = (start + j) as f64;
            let mut l = 1.0;
            for k in 0..6 {
                if k != j {
                    let xk = (start + k) as f64;
                    l *= (s - xk) / (xj - xk);
                }
            }
            acc += l * self.y[start + j];
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubics() {
        let f = |x: f64| x * x * x - 2.0 * x;
        let df = |x: f64| 3.0 * x * x - 2.0;
        let xs: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let t = HermiteTable::new(0.0, 0.1, xs.iter().map(|&x| f(x)).collect(), xs.iter().map(|&x| df(x)).collect());
        for &x in &[0.03, 0.47, 0.99] {
            let (v, d) = t.eval(x);
            assert!((v - f(x)).abs() < 1e-14);
            assert!((d - df(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn lagrange_reproduces_quintics() {
        let f = |x: f64| x.powi(5) - x * x;
        let t = LagrangeTable::new(0.0, 0.1, (0..20).map(|i| f(i as f64 * 0.1)).collect());
        for &x in &[0.01, 0.55, 1.87] {
            assert!((t.eval(x) - f(x)).abs() < 1e-12);
        }
    }
}
