//! Admissible radial pair potentials and their zero-energy scattering data.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::numerics::interp::HermiteTable;
use crate::numerics::ode::{richardson, rk4, Trajectory};
use crate::numerics::quad::{composite_nodes, refine_breaks, GaussRule};
use crate::numerics::special::sin_over;
use crate::numerics::sum::Neumaier;
use crate::torus_fourier::{AnisoMetric, LatticeVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PotentialKind {
    /// `V0 exp(-1/(1-(r/R0)^2))` inside the support.
    Bump,
    /// Constant `V0` on `[0, R0]`; discontinuous, meant for closed-form tests.
    SquareWell,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub strength: f64,
    pub radius: f64,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec {
            kind: PotentialKind::Bump,
            strength: 10.0,
            radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialPotential {
    pub kind: PotentialKind,
    pub strength: f64,
    pub support_radius: f64,
    pub smooth: bool,
}

pub fn make_potential(spec: PotentialSpec) -> Result<RadialPotential> {
    if !(spec.strength >= 0.0) || !spec.strength.is_finite() {
        return Err(invalid("strength", format!("must be finite and >= 0, got {}", spec.strength)));
    }
    if !(spec.radius > 0.0) || !spec.radius.is_finite() {
        return Err(invalid("radius", format!("must be finite and > 0, got {}", spec.radius)));
    }
    Ok(RadialPotential {
        kind: spec.kind,
        strength: spec.strength,
        support_radius: spec.radius,
        smooth: spec.kind == PotentialKind::Bump,
    })
}

impl RadialPotential {
    pub fn zero() -> Self {
        RadialPotential {
            kind: PotentialKind::Bump,
            strength: 0.0,
            support_radius: 1.0,
            smooth: true,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.strength == 0.0
    }

    /// v(r); the square well is taken closed at `R0` so that shooting up to `R0` sees the inner value.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        let r0 = self.support_radius;
        match self.kind {
            PotentialKind::Bump => {
                if r >= r0 {
                    return 0.0;
                }
                let t = (r / r0) * (r / r0);
                self.strength * libm::exp(-1.0 / (1.0 - t))
            }
            PotentialKind::SquareWell => {
                if r <= r0 {
                    self.strength
                } else {
                    0.0
                }
            }
        }
    }

    /// dv/dr inside the support (zero for the square well away from its edge).
    pub fn derivative(&self, r: f64) -> f64 {
        let r0 = self.support_radius;
        match self.kind {
            PotentialKind::Bump => {
                if r >= r0 {
                    return 0.0;
                }
                let t = (r / r0) * (r / r0);
                let one = 1.0 - t;
                -self.eval(r) * 2.0 * r / (r0 * r0 * one * one)
            }
            PotentialKind::SquareWell => 0.0,
        }
    }

    /// The potential `s^-2 v(r/s)`.
    pub fn scaled(&self, s: f64) -> Self {
        RadialPotential {
            strength: self.strength / (s * s),
            support_radius: self.support_radius * s,
            ..*self
        }
    }

    /// Radial nodes covering the support, resolving wavenumber `k` with at least 8 nodes per period.
    fn support_nodes(&self, k: f64) -> Vec<(f64, f64)> {
        let rule = GaussRule::new(24);
        let r0 = self.support_radius;
        let breaks: Vec<f64> = (0..=8).map(|i| r0 * i as f64 / 8.0).collect();
        let max_width = if k > 0.0 { 3.0 * 2.0 * PI / k } else { f64::INFINITY };
        composite_nodes(&rule, &refine_breaks(&breaks, max_width))
    }

    /// Three-dimensional Fourier transform at wavenumber `k`: `4π ∫ v(r) r sin(kr)/k dr`.
    pub fn transform(&self, k: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        match self.kind {
            PotentialKind::SquareWell => {
                self.strength * crate::numerics::special::ball_transform(self.support_radius, k)
            }
            PotentialKind::Bump => {
                let mut acc = Neumaier::default();
                for (r, w) in self.support_nodes(k) {
                    acc.add(w * self.eval(r) * r * sin_over(k, r));
                }
                4.0 * PI * acc.value()
            }
        }
    }

    /// `v̂(ξ) = ∫ v(x) e^{-2πi ξ·x} dx` at `|ξ| = xi`.
    pub fn fourier_hat(&self, xi: f64) -> f64 {
        self.transform(2.0 * PI * xi.abs())
    }

    /// `∫ v = v̂(0)`.
    pub fn integral(&self) -> f64 {
        self.transform(0.0)
    }

    /// Samples `(r, v(r))` on `[0, 1.25 R0]` for export.
    pub fn samples(&self, n: usize) -> Vec<(f64, f64)> {
        let r_max = 1.25 * self.support_radius;
        (0..=n)
            .map(|i| {
                let r = r_max * i as f64 / n as f64;
                (r, self.eval(r))
            })
            .collect()
    }
}

/// u = r f on a uniform grid over `[0, R0]`, with `u'(0) = 1` before rescaling.
#[derive(Debug, Clone)]
pub(crate) struct InnerSolution {
    pub table: HermiteTable,
    pub steps: usize,
    pub error_estimate: f64,
}

/// Adaptive RK4 shooting of `u'' = (v/2 - e) u` on `[0, R0]`, doubling the step count until the
/// Richardson estimate drops below `tol`.
pub(crate) fn shoot_inner(v: &RadialPotential, e: f64, tol: f64, min_steps: usize) -> Result<InnerSolution> {
    let r0 = v.support_radius;
    let run = |n: usize| -> Trajectory {
        rk4(|r, y| [y[1], (0.5 * v.eval(r) - e) * y[0]], 0.0, r0, [0.0, 1.0], n)
    };
    let mut n = min_steps.max(64);
    let mut coarse = run(n);
    loop {
        let fine = run(2 * n);
        let (ext, est) = richardson(&coarse, &fine);
        if est <= tol {
            return Ok(inner_from(ext, n, est, v, e));
        }
        if n >= 1 << 20 {
            return Err(Error::Solver {
                steps: 2 * n,
                estimate: est,
                tolerance: tol,
            });
        }
        n *= 2;
        coarse = fine;
    }
}

/// Reuses a fixed step count (used inside bisection so the mismatch is a smooth function of `e`).
pub(crate) fn shoot_fixed(v: &RadialPotential, e: f64, n: usize) -> InnerSolution {
    let r0 = v.support_radius;
    let run = |n: usize| rk4(|r, y| [y[1], (0.5 * v.eval(r) - e) * y[0]], 0.0, r0, [0.0, 1.0], n);
    let (ext, est) = richardson(&run(n), &run(2 * n));
    inner_from(ext, n, est, v, e)
}

fn inner_from(t: Trajectory, n: usize, est: f64, _v: &RadialPotential, _e: f64) -> InnerSolution {
    let u: Vec<f64> = t.y.iter().map(|y| y[0]).collect();
    let du: Vec<f64> = t.y.iter().map(|y| y[1]).collect();
    InnerSolution {
        table: HermiteTable::new(t.t0, t.step, u, du),
        steps: n,
        error_estimate: est,
    }
}

/// Composite Simpson rule on the uniform inner grid of `g(r, u, u')`.
pub(crate) fn simpson_inner<F: FnMut(f64, f64, f64) -> f64>(inner: &InnerSolution, mut g: F) -> f64 {
    let t = &inner.table;
    let n = t.y.len() - 1;
    let mut acc = Neumaier::default();
    for i in 0..=n {
        let r = t.x0 + t.step * i as f64;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc.add(w * g(r, t.y[i], t.dy[i]));
    }
    acc.value() * t.step / 3.0
}

#[derive(Debug, Clone)]
pub struct ScatteringData3D {
    pub a0: f64,
    pub integral_vf: f64,
    /// Zero-energy profile, normalized so that `f(r) = 1 - a0/r` beyond the support.
    pub zero_energy_profile: ZeroEnergyProfile,
    /// Relative rms deviation of `u` from the fitted line on `[R0, 2R0]`.
    pub fit_residual: f64,
    pub steps: usize,
    pub error_estimate: f64,
}

#[derive(Debug, Clone)]
pub struct ZeroEnergyProfile {
    inner: Option<InnerSolution>,
    scale: f64,
    a0: f64,
    support_radius: f64,
}

impl ZeroEnergyProfile {
    pub fn f(&self, r: f64) -> f64 {
        match &self.inner {
            None => 1.0,
            Some(inner) if r < self.support_radius => {
                if r == 0.0 {
                    return inner.table.dy[0] * self.scale;
                }
                inner.table.eval(r).0 * self.scale / r
            }
            Some(_) => 1.0 - self.a0 / r,
        }
    }

    /// `(r, f(r))` on `[0, r_max]`.
    pub fn samples(&self, r_max: f64, n: usize) -> Vec<(f64, f64)> {
        (0..=n)
            .map(|i| {
                let r = r_max * i as f64 / n as f64;
                (r, self.f(r))
            })
            .collect()
    }
}

pub fn scattering_length_3d(v: &RadialPotential, tol: f64) -> Result<ScatteringData3D> {
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    if v.is_zero() {
        return Ok(ScatteringData3D {
            a0: 0.0,
            integral_vf: 0.0,
            zero_energy_profile: ZeroEnergyProfile {
                inner: None,
                scale: 1.0,
                a0: 0.0,
                support_radius: v.support_radius,
            },
            fit_residual: 0.0,
            steps: 0,
            error_estimate: 0.0,
        });
    }
    let inner = shoot_inner(v, 0.0, tol, 256)?;
    let r0 = v.support_radius;
    let n = inner.table.y.len() - 1;
    let end = [*inner.table.y.last().unwrap(), *inner.table.dy.last().unwrap()];
    // free continuation on [R0, 2R0], then a least-squares line through the samples
    let outer = rk4(|_, y| [y[1], 0.0], r0, 2.0 * r0, end, n);
    let pts: Vec<(f64, f64)> = (0..=n).map(|i| (outer.t(i), outer.y[i][0])).collect();
    let (slope, intercept, rms) = line_fit(&pts);
    let a0 = -intercept / slope;
    let scale = 1.0 / slope;
    let integral_vf = 4.0 * PI * scale * simpson_inner(&inner, |r, u, _| v.eval(r) * u * r);
    Ok(ScatteringData3D {
        a0,
        integral_vf,
        fit_residual: rms / slope.abs(),
        steps: inner.steps,
        error_estimate: inner.error_estimate,
        zero_energy_profile: ZeroEnergyProfile {
            inner: Some(inner),
            scale,
            a0,
            support_radius: r0,
        },
    })
}

fn line_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = pts
        .iter()
        .map(|p| {
            let e = p.1 - (slope * p.0 + intercept);
            e * e
        })
        .sum();
    (slope, intercept, libm::sqrt(ss / n))
}

/// `v_p = (a/√d) v̂(a ℳ_d p / 2π)`, the torus coefficient of `a^-2 v(x/a)`.
pub fn potential_fourier(v: &RadialPotential, a: f64, d: f64, p: LatticeVector) -> Result<f64> {
    if a * v.support_radius >= 0.5 * d {
        return Err(Error::InvalidRegime(format!(
            "support a·R0 = {} does not fit in the slab half-height {}",
            a * v.support_radius,
            0.5 * d
        )));
    }
    let k = AnisoMetric::new(d).norm(p);
    Ok(a / libm::sqrt(d) * v.transform(a * k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn well() -> RadialPotential {
        make_potential(PotentialSpec {
            kind: PotentialKind::SquareWell,
            strength: 2.0,
            radius: 1.0,
        })
        .unwrap()
    }

    #[test]
    fn rejects_negative_inputs() {
        let bad = PotentialSpec {
            strength: -1.0,
            ..Default::default()
        };
        assert!(matches!(make_potential(bad), Err(Error::InvalidParameter { .. })));
        let bad = PotentialSpec {
            radius: 0.0,
            ..Default::default()
        };
        assert!(make_potential(bad).is_err());
    }

    #[test]
    fn square_well_closed_form() {
        let s = scattering_length_3d(&well(), 1e-12).unwrap();
        let exact = 1.0 - libm::tanh(1.0);
        assert!((s.a0 / exact - 1.0).abs() < 1e-9, "a0 = {}", s.a0);
        assert!(s.fit_residual < 1e-12);
        assert!((s.integral_vf / (8.0 * PI * s.a0) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_potential_has_zero_length() {
        let s = scattering_length_3d(&RadialPotential::zero(), 1e-10).unwrap();
        assert_eq!(s.a0, 0.0);
        assert_eq!(s.integral_vf, 0.0);
        assert_eq!(s.zero_energy_profile.f(0.3), 1.0);
    }

    #[test]
    fn bump_profile_is_monotone_and_positive() {
        let v = make_potential(PotentialSpec::default()).unwrap();
        let s = scattering_length_3d(&v, 1e-10).unwrap();
        let samples = s.zero_energy_profile.samples(2.0, 400);
        assert!(samples.iter().all(|&(_, f)| f > 0.0 && f <= 1.0));
        assert!(samples.windows(2).all(|w| w[1].1 >= w[0].1));
        assert!(v.integral() > 8.0 * PI * s.a0);
    }

    #[test]
    fn square_well_transform_matches_quadrature() {
        let w = well();
        let k = 3.7;
        let rule = GaussRule::new(40);
        let q = 4.0 * PI * rule.integrate(0.0, 1.0, |r| 2.0 * r * libm::sin(k * r) / k);
        assert!((w.transform(k) - q).abs() < 1e-13);
    }

    #[test]
    fn torus_coefficient_zero_mode() {
        let v = make_potential(PotentialSpec::default()).unwrap();
        let (a, d) = (1e-3, 0.1);
        let v0 = potential_fourier(&v, a, d, [0, 0, 0]).unwrap();
        assert!((v0 - a / libm::sqrt(d) * v.integral()).abs() < 1e-15);
        assert!(potential_fourier(&v, 0.06, 0.1, [1, 0, 0]).is_err());
    }
}
