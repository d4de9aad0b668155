//! Gauss–Legendre rules and composite panel integration.

use alloc::vec::Vec;
use core::f64::consts::PI;

use super::sum::Neumaier;

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Newton iteration on the Legendre recurrence; accurate to a few ulps for n ≤ 200.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mut acc = Neumaier::default();
        for (x, w) in self.mapped(a, b) {
            acc.add(w * f(x));
        }
        acc.value()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Breakpoints from `a` to `b` growing geometrically by `ratio`, starting with a first panel of `first`.
pub fn geometric_breaks(a: f64, b: f64, first: f64, ratio: f64) -> Vec<f64> {
    let mut out = alloc::vec![a];
    if b <= a {
        return out;
    }
    let mut width = first.max((b - a) * 1e-14);
    let mut x = a;
    while x + width < b * (1.0 - 1e-12) && (b - x - width) > 0.25 * width {
        x += width;
        out.push(x);
        width *= ratio;
    }
    out.push(b);
    out
}

/// Splits each panel so no piece exceeds `max_width`.
pub fn refine_breaks(breaks: &[f64], max_width: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(breaks.len());
    if breaks.is_empty() {
        return out;
    }
    out.push(breaks[0]);
    for w in breaks.windows(2) {
        let len = w[1] - w[0];
        let pieces = if max_width.is_finite() && max_width > 0.0 {
            libm::ceil(len / max_width).max(1.0) as usize
        } else {
            1
        };
        for k in 1..=pieces {
            out.push(w[0] + len * k as f64 / pieces as f64);
        }
    }
    out
}

/// Composite Gauss rule over the panels given by `breaks`.
pub fn composite_nodes(rule: &GaussRule, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(rule.len() * breaks.len());
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            out.extend(rule.mapped(w[0], w[1]));
        }
    }
    out
}

pub fn integrate_panels<F: FnMut(f64) -> f64>(rule: &GaussRule, breaks: &[f64], mut f: F) -> f64 {
    let mut acc = Neumaier::default();
    for w in breaks.windows(2) {
        for (x, wt) in rule.mapped(w[0], w[1]) {
            acc.add(wt * f(x));
        }
    }
    acc.value()
}

/// Nodes on [0, 1] clustered at 1 through t = 1 - (1 - s)^2, absorbing a square-root edge at t = 1.
pub fn edge_nodes(rule: &GaussRule, panels: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for k in 0..panels {
        let a = k as f64 / panels as f64;
        let b = (k + 1) as f64 / panels as f64;
        for (s, w) in rule.mapped(a, b) {
            let t = 1.0 - (1.0 - s) * (1.0 - s);
            out.push((t, w * 2.0 * (1.0 - s)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        let g = GaussRule::new(10);
        let v = g.integrate(0.0, 2.0, |x| x.powi(19));
        assert!((v / (2f64.powi(20) / 20.0) - 1.0).abs() < 1e-14);
        let s: f64 = g.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn high_order_rule_is_accurate() {
        let g = GaussRule::new(64);
        let v = g.integrate(0.0, PI, libm::sin);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn geometric_breaks_cover_interval() {
        let b = geometric_breaks(1.0, 1000.0, 0.5, 1.5);
        assert_eq!(b[0], 1.0);
        assert_eq!(*b.last().unwrap(), 1000.0);
        assert!(b.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn edge_nodes_handle_sqrt() {
        let g = GaussRule::new(16);
        let v: f64 = edge_nodes(&g, 2).iter().map(|&(t, w)| w * libm::sqrt(1.0 - t * t)).sum();
        assert!((v - PI / 4.0).abs() < 1e-13);
    }
}
