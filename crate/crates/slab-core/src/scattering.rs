//! The three one-particle problems: the 3D Neumann ground state on the ball of radius `dℓ/a`,
//! the induced planar problem on the disk of radius `h/(dℓ)`, and the coupling profiles built from both.
//!
//! Units: 3D radial variables are in units of `a` (`s = |x|/a`), planar variables in units of `dℓ`
//! (`y = |x̄|/(dℓ)`). Eigenvalues are reported in those units.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::numerics::interp::{HermiteTable, LagrangeTable};
use crate::numerics::ode::{richardson, rk4, Trajectory};
use crate::numerics::quad::{composite_nodes, edge_nodes, geometric_breaks, refine_breaks, GaussRule};
use crate::numerics::special::{j0, j1, sin_over, y0, y1};
use crate::numerics::sum::Neumaier;
use crate::potentials::{scattering_length_3d, shoot_fixed, shoot_inner, InnerSolution, PotentialKind, RadialPotential, ScatteringData3D};

/// Physical parameters of one slab configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabParams {
    pub n: u64,
    pub a: f64,
    pub d: f64,
    pub ell: f64,
    pub h: f64,
}

/// Smallness/largeness thresholds for the scale separations the solvers rely on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleThresholds {
    pub max_a_over_dl: f64,
    pub min_h_over_dl: f64,
}

impl Default for ScaleThresholds {
    fn default() -> Self {
        ScaleThresholds {
            max_a_over_dl: 0.25,
            min_h_over_dl: 4.0,
        }
    }
}

impl SlabParams {
    pub fn new(n: u64, a: f64, d: f64, ell: f64, h: f64) -> Result<Self> {
        let p = SlabParams { n, a, d, ell, h };
        p.validate()?;
        Ok(p)
    }

    /// Gross–Pitaevskii normalization `Na/d = 1`.
    pub fn gross_pitaevskii(n: u64, d: f64, ell: f64, h: f64) -> Result<Self> {
        Self::new(n, d / n as f64, d, ell, h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("N", "must be positive"));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(invalid("a", format!("must be positive, got {}", self.a)));
        }
        if !(self.d > 0.0 && self.d < 1.0) {
            return Err(invalid("d", format!("must lie in (0, 1), got {}", self.d)));
        }
        if !(self.ell > 0.0 && self.ell < 0.5) {
            return Err(invalid("ell", format!("must lie in (0, 1/2), got {}", self.ell)));
        }
        if !(self.h > 0.0 && self.h < 0.5) {
            return Err(invalid("h", format!("must lie in (0, 1/2), got {}", self.h)));
        }
        if self.d * self.ell >= 0.5 * self.d {
            return Err(invalid("ell", "the ball of radius dℓ must fit in the slab"));
        }
        Ok(())
    }

    pub fn check_thresholds(&self, t: &ScaleThresholds, support_radius: f64) -> Result<()> {
        self.check_ball_thresholds(t, support_radius)?;
        self.check_disk_thresholds(t)
    }

    /// The part of [`Self::check_thresholds`] that concerns the ball of radius `dℓ`.
    pub fn check_ball_thresholds(&self, t: &ScaleThresholds, support_radius: f64) -> Result<()> {
        let r = self.a / (self.d * self.ell);
        if r > t.max_a_over_dl || support_radius >= self.radius_3d() {
            return Err(Error::InvalidRegime(format!(
                "a/(dℓ) = {r} exceeds the threshold {} (or the potential support reaches the ball edge)",
                t.max_a_over_dl
            )));
        }
        Ok(())
    }

    /// The part of [`Self::check_thresholds`] that concerns the disk of radius `h`.
    pub fn check_disk_thresholds(&self, t: &ScaleThresholds) -> Result<()> {
        let q = self.radius_2d();
        if q < t.min_h_over_dl {
            return Err(Error::InvalidRegime(format!(
                "h/(dℓ) = {q} is below the threshold {}",
                t.min_h_over_dl
            )));
        }
        Ok(())
    }

    /// Ball radius `dℓ/a` in units of `a`.
    pub fn radius_3d(&self) -> f64 {
        self.d * self.ell / self.a
    }

    /// Disk radius `h/(dℓ)` in units of `dℓ`.
    pub fn radius_2d(&self) -> f64 {
        self.h / (self.d * self.ell)
    }

    pub fn dl(&self) -> f64 {
        self.d * self.ell
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Absolute Richardson tolerance on the radial solutions.
    pub ode_tol: f64,
    pub bisection_steps: usize,
    /// Step count of the planar interior integration (doubled for the Richardson partner).
    pub planar_steps: usize,
    pub thresholds: ScaleThresholds,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            ode_tol: 1e-10,
            bisection_steps: 60,
            planar_steps: 1024,
            thresholds: ScaleThresholds::default(),
        }
    }
}

/// Even Taylor coefficients of `v` at the origin: `v ≈ c0 + c2 r² + c4 r⁴`.
fn potential_taylor(v: &RadialPotential) -> [f64; 3] {
    match v.kind {
        PotentialKind::SquareWell => [v.strength, 0.0, 0.0],
        PotentialKind::Bump => {
            let r0 = v.support_radius;
            let c = v.strength * libm::exp(-1.0);
            [c, -c / (r0 * r0), -0.5 * c / (r0 * r0 * r0 * r0)]
        }
    }
}

/// Neumann ground state of `-Δ + v/2` on the ball of radius `R = dℓ/a`, normalized by `f(R) = 1`
/// and extended by the constant 1 beyond `R`.
#[derive(Debug, Clone)]
pub struct ScatteringSolution3D {
    /// Eigenvalue in units of `a^-2`.
    pub lambda: f64,
    pub radius: f64,
    pub potential: RadialPotential,
    pub a0: f64,
    pub steps: usize,
    pub error_estimate: f64,
    pub bisection_steps: usize,
    /// `f = 1` for `s > R` is implied, never sampled.
    pub constant_extension: bool,
    inner: Option<InnerSolution>,
    scale: f64,
    edge_u: f64,
    edge_du: f64,
    series: [f64; 4],
}

impl ScatteringSolution3D {
    fn free(radius: f64, v: RadialPotential) -> Self {
        ScatteringSolution3D {
            lambda: 0.0,
            radius,
            potential: v,
            a0: 0.0,
            steps: 0,
            error_estimate: 0.0,
            bisection_steps: 0,
            constant_extension: true,
            inner: None,
            scale: 1.0,
            edge_u: 0.0,
            edge_du: 0.0,
            series: [1.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn is_free(&self) -> bool {
        self.inner.is_none()
    }

    /// `u = s f` and its first derivative, before normalization, for `s` in `[R0, R]`.
    fn outer_u(&self, s: f64) -> (f64, f64) {
        let k = libm::sqrt(self.lambda);
        let t = s - self.potential.support_radius;
        let c = libm::cos(k * t);
        let u = self.edge_u * c + self.edge_du * sin_over(k, t);
        let du = -self.edge_u * k * libm::sin(k * t) + self.edge_du * c;
        (u, du)
    }

    /// `[f, f', f'', f''']` at `s` (units of `a`).
    pub fn f_derivatives(&self, s: f64) -> [f64; 4] {
        let inner = match &self.inner {
            None => return [1.0, 0.0, 0.0, 0.0],
            Some(i) => i,
        };
        if s >= self.radius {
            return [1.0, 0.0, 0.0, 0.0];
        }
        let r0 = self.potential.support_radius;
        if s < 0.02 * r0 {
            let [c0, c2, c4, c6] = self.series;
            let s2 = s * s;
            return [
                c0 + s2 * (c2 + s2 * (c4 + s2 * c6)),
                s * (2.0 * c2 + s2 * (4.0 * c4 + 6.0 * c6 * s2)),
                2.0 * c2 + s2 * (12.0 * c4 + 30.0 * c6 * s2),
                s * (24.0 * c4 + 120.0 * c6 * s2),
            ];
        }
        let (u, du, q, dq) = if s < r0 {
            let (u, du) = inner.table.eval(s);
            let q = 0.5 * self.potential.eval(s) - self.lambda;
            (u, du, q, 0.5 * self.potential.derivative(s))
        } else {
            let (u, du) = self.outer_u(s);
            (u, du, -self.lambda, 0.0)
        };
        let (u, du) = (u * self.scale, du * self.scale);
        let d2 = q * u;
        let d3 = dq * u + q * du;
        let (r, r2, r3, r4) = (s, s * s, s * s * s, s * s * s * s);
        [
            u / r,
            du / r - u / r2,
            d2 / r - 2.0 * du / r2 + 2.0 * u / r3,
            d3 / r - 3.0 * d2 / r2 + 6.0 * du / r3 - 6.0 * u / r4,
        ]
    }

    pub fn f(&self, s: f64) -> f64 {
        self.f_derivatives(s)[0]
    }

    pub fn f_prime(&self, s: f64) -> f64 {
        self.f_derivatives(s)[1]
    }

    /// `w = 1 - f`.
    pub fn w(&self, s: f64) -> f64 {
        if s >= self.radius || self.inner.is_none() {
            return 0.0;
        }
        1.0 - self.f(s)
    }

    /// `[w, w', w'', w''']`.
    pub fn w_derivatives(&self, s: f64) -> [f64; 4] {
        let f = self.f_derivatives(s);
        [1.0 - f[0], -f[1], -f[2], -f[3]]
    }

    /// Quadrature nodes `(s, weight)` covering `[0, R]`; the potential support gets its own panels.
    pub fn radial_nodes(&self, rule: &GaussRule) -> Vec<(f64, f64)> {
        let r0 = self.potential.support_radius.min(self.radius);
        let mut breaks: Vec<f64> = (0..=8).map(|i| r0 * i as f64 / 8.0).collect();
        let outer = geometric_breaks(r0, self.radius, 0.5 * r0, 1.5);
        breaks.extend_from_slice(&outer[1..]);
        composite_nodes(rule, &breaks)
    }

    /// `∫_0^R g(s) s² ds` for a radial integrand given through `[f, f', ...]` at `s`.
    pub fn radial_integral<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        let rule = GaussRule::new(24);
        let mut acc = Neumaier::default();
        for (s, w) in self.radial_nodes(&rule) {
            acc.add(w * s * s * g(s));
        }
        acc.value()
    }

    /// `∫_{B_R} v f` (3D, units of `a`).
    pub fn integral_vf(&self) -> f64 {
        4.0 * PI * self.radial_integral(|s| self.potential.eval(s) * self.f(s))
    }

    /// `∫_{B_R} w` (3D, units of `a`).
    pub fn integral_w(&self) -> f64 {
        4.0 * PI * self.radial_integral(|s| self.w(s))
    }

    /// `∫_{B_R} f` (3D, units of `a`).
    pub fn integral_f(&self) -> f64 {
        4.0 * PI * self.radial_integral(|s| self.f(s))
    }

    /// Samples `(s, f, w, f', f'', f''')` on a grid graded toward the origin and the support edge.
    pub fn profile_table(&self, n: usize) -> Vec<[f64; 6]> {
        graded_grid(self.potential.support_radius, self.radius, n)
            .into_iter()
            .map(|s| {
                let d = self.f_derivatives(s);
                [s, d[0], 1.0 - d[0], d[1], d[2], d[3]]
            })
            .collect()
    }

    /// Pointwise residual of `(-Δ + v/2 - λ) f` by centered differences at `s`.
    pub fn pde_residual(&self, s: f64, h: f64) -> f64 {
        let u = |r: f64| r * self.f(r);
        let lap = (u(s + h) - 2.0 * u(s) + u(s - h)) / (h * h) / s;
        -lap + (0.5 * self.potential.eval(s) - self.lambda) * self.f(s)
    }
}

/// Grid on `[0, end]` with logarithmic refinement near 0 and near `edge`, uniform elsewhere.
pub fn graded_grid(edge: f64, end: f64, n: usize) -> Vec<f64> {
    let mut pts = Vec::with_capacity(n + 16);
    pts.push(0.0);
    let edge = edge.min(end);
    for k in (0..8).rev() {
        pts.push(edge * libm::pow(2.0, -(k as f64) - 2.0));
    }
    let inner = n / 2;
    for i in 1..=inner {
        pts.push(edge * (0.25 + 0.75 * i as f64 / inner as f64));
    }
    for k in 1..8 {
        let t = edge * (1.0 + libm::pow(2.0, k as f64 - 10.0));
        if t < end {
            pts.push(t);
        }
    }
    let outer = n - inner;
    let start = edge * (1.0 + libm::pow(2.0, -3.0));
    if end > start {
        for i in 0..=outer {
            pts.push(start + (end - start) * i as f64 / outer as f64);
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts
}

/// Neumann mismatch `u'(R) R - u(R)`, proportional to `f'(R)`.
fn neumann_mismatch(inner: &InnerSolution, lambda: f64, r0: f64, radius: f64) -> f64 {
    let u0 = *inner.table.y.last().unwrap();
    let du0 = *inner.table.dy.last().unwrap();
    let k = libm::sqrt(lambda);
    let t = radius - r0;
    let u = u0 * libm::cos(k * t) + du0 * sin_over(k, t);
    let du = -u0 * k * libm::sin(k * t) + du0 * libm::cos(k * t);
    du * radius - u
}

/// Shooting on `λ` with bisection of the sign of `f'(R)`.
pub fn solve_neumann_3d(v: &RadialPotential, params: &SlabParams, cfg: &SolverConfig) -> Result<ScatteringSolution3D> {
    params.validate()?;
    let radius = params.radius_3d();
    if v.is_zero() {
        return Ok(ScatteringSolution3D::free(radius, *v));
    }
    params.check_ball_thresholds(&cfg.thresholds, v.support_radius)?;
    let scat = scattering_length_3d(v, cfg.ode_tol)?;
    solve_neumann_3d_with(v, &scat, radius, cfg)
}

pub(crate) fn solve_neumann_3d_with(
    v: &RadialPotential,
    scat: &ScatteringData3D,
    radius: f64,
    cfg: &SolverConfig,
) -> Result<ScatteringSolution3D> {
    let r0 = v.support_radius;
    let a0 = scat.a0;
    let estimate = 3.0 * a0 / (radius * radius * radius) * (1.0 + 1.8 * a0 / radius);
    let probe = shoot_inner(v, estimate, cfg.ode_tol, scat.steps.max(256))?;
    let n = probe.steps;
    let mismatch = |lam: f64| neumann_mismatch(&shoot_fixed(v, lam, n), lam, r0, radius);
    let lo0 = 0.0;
    let mut hi = 2.0 * estimate * 10.0;
    let mut tries = 0;
    while mismatch(hi) >= 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 6 {
            return Err(Error::Bracket { lo: lo0, hi });
        }
    }
    if mismatch(lo0) <= 0.0 {
        return Err(Error::Bracket { lo: lo0, hi });
    }
    let (mut lo, mut hi_b) = (lo0, hi);
    for _ in 0..cfg.bisection_steps {
        let mid = 0.5 * (lo + hi_b);
        if mismatch(mid) > 0.0 {
            lo = mid;
        } else {
            hi_b = mid;
        }
    }
    let lambda = 0.5 * (lo + hi_b);
    let inner = shoot_fixed(v, lambda, n);
    let edge_u = *inner.table.y.last().unwrap();
    let edge_du = *inner.table.dy.last().unwrap();
    let mut sol = ScatteringSolution3D {
        lambda,
        radius,
        potential: *v,
        a0,
        steps: n,
        error_estimate: inner.error_estimate,
        bisection_steps: cfg.bisection_steps,
        constant_extension: true,
        scale: 1.0,
        edge_u,
        edge_du,
        series: [0.0; 4],
        inner: Some(inner),
    };
    let (u_r, _) = sol.outer_u(radius);
    sol.scale = radius / u_r;
    // u = Σ c_k s^k with c_1 = 1, from u'' = (v/2 - λ) u
    let q = potential_taylor(v);
    let q = [0.5 * q[0] - lambda, 0.5 * q[1], 0.5 * q[2]];
    let c1 = 1.0;
    let c3 = q[0] * c1 / 6.0;
    let c5 = (q[0] * c3 + q[1] * c1) / 20.0;
    let c7 = (q[0] * c5 + q[1] * c3 + q[2] * c1) / 42.0;
    sol.series = [c1 * sol.scale, c3 * sol.scale, c5 * sol.scale, c7 * sol.scale];
    Ok(sol)
}

/// The induced planar potential `u` on the unit disk (units of `dℓ`), tabulated against the
/// edge-clustering variable `σ` with `y = 1 - (1-σ)²`.
#[derive(Debug, Clone)]
pub struct InducedPotential {
    pub table: Option<LagrangeTable>,
    /// `∫_{ℝ²} u`.
    pub total: f64,
    /// `sup u` (attained at the origin for the built-in families).
    pub sup: f64,
    pub a: f64,
    pub d: f64,
    pub a0: f64,
    pub planar_steps: usize,
}

pub fn sigma_of_y(y: f64) -> f64 {
    1.0 - libm::sqrt((1.0 - y).max(0.0))
}

pub fn y_of_sigma(s: f64) -> f64 {
    1.0 - (1.0 - s) * (1.0 - s)
}

impl InducedPotential {
    pub fn is_zero(&self) -> bool {
        self.table.is_none()
    }

    pub fn eval(&self, y: f64) -> f64 {
        match &self.table {
            Some(t) if y < 1.0 => t.eval(sigma_of_y(y)).max(0.0),
            _ => 0.0,
        }
    }

    fn eval_sigma(&self, s: f64) -> f64 {
        match &self.table {
            Some(t) => t.eval(s),
            None => 0.0,
        }
    }
}

/// `u(y) = (2(dℓ)³/√d) ∫ W(dℓ·(y, ζ)) dζ`, evaluated by direct quadrature along the chord.
pub fn induced_value(sol: &ScatteringSolution3D, params: &SlabParams, y: f64) -> f64 {
    if sol.is_free() || y >= 1.0 {
        return 0.0;
    }
    let rr = sol.radius;
    let pref = 4.0 * params.a * rr * rr * rr * sol.lambda / params.d;
    let z_max = libm::sqrt(1.0 - y * y);
    let rule = GaussRule::new(16);
    let scale = sol.potential.support_radius / rr;
    let mut breaks = geometric_breaks(0.0, z_max, 0.25 * scale.max(1e-300), 1.6);
    if y < scale {
        let zs = libm::sqrt(scale * scale - y * y);
        if zs > 0.0 && zs < z_max {
            breaks.push(zs);
            breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
            breaks.dedup();
        }
    }
    let mut acc = Neumaier::default();
    for (z, w) in composite_nodes(&rule, &breaks) {
        acc.add(w * sol.f(rr * libm::sqrt(y * y + z * z)));
    }
    pref * acc.value()
}

pub fn induced_potential_2d(sol: &ScatteringSolution3D, params: &SlabParams, cfg: &SolverConfig) -> Result<InducedPotential> {
    let n = cfg.planar_steps;
    if sol.is_free() {
        return Ok(InducedPotential {
            table: None,
            total: 0.0,
            sup: 0.0,
            a: params.a,
            d: params.d,
            a0: sol.a0,
            planar_steps: n,
        });
    }
    let m = 4 * n;
    let step = 1.0 / m as f64;
    let values: Vec<f64> = (0..=m).map(|i| induced_value(sol, params, y_of_sigma(i as f64 * step))).collect();
    let sup = values.iter().cloned().fold(0.0, f64::max);
    let table = LagrangeTable::new(0.0, step, values);
    let rule = GaussRule::new(24);
    let total = 2.0
        * PI
        * edge_nodes(&rule, 16)
            .iter()
            .map(|&(y, w)| w * y * table.eval(sigma_of_y(y)))
            .collect::<Neumaier>()
            .value();
    Ok(InducedPotential {
        table: Some(table),
        total,
        sup,
        a: params.a,
        d: params.d,
        a0: sol.a0,
        planar_steps: n,
    })
}

/// Interior planar solution `(g, y g')` in `σ`, from a Taylor start at the first node.
fn planar_interior(u: &InducedPotential, mu: f64, n: usize) -> Trajectory {
    let h = 1.0 / n as f64;
    let c = 0.5 * u.eval_sigma(0.0) - mu;
    let y_start = y_of_sigma(h);
    let start = [1.0 + 0.25 * c * y_start * y_start, 0.5 * c * y_start * y_start];
    rk4(
        |s, st| {
            let y = y_of_sigma(s);
            let dy = 2.0 * (1.0 - s);
            let uval = u.eval_sigma(s);
            let g_rate = if y > 0.0 { st[1] / y * dy } else { 0.0 };
            [g_rate, y * (0.5 * uval - mu) * st[0] * dy]
        },
        h,
        1.0,
        start,
        n - 1,
    )
}

fn planar_interior_extrapolated(u: &InducedPotential, mu: f64, n: usize) -> (Trajectory, f64) {
    let coarse = planar_interior(u, mu, n);
    let fine = planar_interior(u, mu, 2 * n);
    // the coarse run starts at σ = 1/n, the fine run at 1/(2n): compare on the shared nodes
    let shifted = Trajectory {
        t0: fine.t0 + fine.step,
        step: fine.step,
        y: fine.y[1..].to_vec(),
    };
    richardson(&coarse, &shifted)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringLength2D {
    pub e_u: f64,
    /// `ln a_u`; `-∞` is the sentinel for `u ≡ 0`.
    pub ln_a_u: f64,
    pub a_u: f64,
    pub ln_gamma_u: f64,
    pub gamma_u: f64,
    pub error_estimate: f64,
}

/// `𝔈_u = min ∫_{B_1} |∇φ|² + u φ²/2` over `φ|_{∂B_1} = 1`, via the radial Euler–Lagrange problem.
pub fn scattering_length_2d(u: &InducedPotential, _tol: f64) -> Result<ScatteringLength2D> {
    if u.is_zero() {
        return Ok(ScatteringLength2D {
            e_u: 0.0,
            ln_a_u: f64::NEG_INFINITY,
            a_u: 0.0,
            ln_gamma_u: f64::NEG_INFINITY,
            gamma_u: 0.0,
            error_estimate: 0.0,
        });
    }
    let (traj, err) = planar_interior_extrapolated(u, 0.0, u.planar_steps);
    let [g1, psi1] = traj.last();
    let e_u = 2.0 * PI * psi1 / g1;
    if !(e_u > 0.0) {
        return Err(Error::InvalidPotential(format!("planar energy 𝔈_u = {e_u} is not positive")));
    }
    let ln_a_u = -2.0 * PI / e_u;
    let ln_gamma_u = ln_a_u + u.d / (2.0 * u.a * u.a0);
    Ok(ScatteringLength2D {
        e_u,
        ln_a_u,
        a_u: libm::exp(ln_a_u),
        ln_gamma_u,
        gamma_u: libm::exp(ln_gamma_u),
        error_estimate: err,
    })
}

/// Neumann ground state of `-Δ + u/2` on the disk of radius `h/(dℓ)`, normalized at the boundary.
#[derive(Debug, Clone)]
pub struct ScatteringSolution2D {
    pub mu: f64,
    pub radius: f64,
    pub e_u: f64,
    pub a_u: f64,
    pub ln_a_u: f64,
    pub gamma_u: f64,
    pub ln_gamma_u: f64,
    /// `m = ln(h/(dℓ)) - ln a_u`; infinite for the free problem.
    pub m: f64,
    pub error_estimate: f64,
    pub constant_extension: bool,
    g_table: Option<HermiteTable>,
    psi_table: Option<HermiteTable>,
    taylor: f64,
    edge: [f64; 2],
    scale: f64,
    first_node: f64,
}

impl ScatteringSolution2D {
    pub fn is_free(&self) -> bool {
        self.g_table.is_none()
    }

    /// `(g, g')` at `y` (units of `dℓ`).
    pub fn g_and_prime(&self, y: f64) -> (f64, f64) {
        let (gt, pt) = match (&self.g_table, &self.psi_table) {
            (Some(g), Some(p)) => (g, p),
            _ => return (1.0, 0.0),
        };
        if y >= self.radius {
            return (1.0, 0.0);
        }
        if y >= 1.0 {
            let (g, dg) = planar_exterior(self.edge, self.mu, y);
            return (g * self.scale, dg * self.scale);
        }
        if y < self.first_node {
            let c = self.taylor;
            return (self.scale * (1.0 + 0.25 * c * y * y), self.scale * 0.5 * c * y);
        }
        let s = sigma_of_y(y);
        let g = gt.eval(s).0;
        let psi = pt.eval(s).0;
        (g * self.scale, psi / y * self.scale)
    }

    pub fn g(&self, y: f64) -> f64 {
        self.g_and_prime(y).0
    }

    /// `z = 1 - g`, zero beyond the disk.
    pub fn z(&self, y: f64) -> f64 {
        if y >= self.radius || self.is_free() {
            return 0.0;
        }
        1.0 - self.g(y)
    }

    /// Quadrature nodes `(y, weight)` for `∫_0^{R_h} (...) dy`, edge-clustered on `[0, 1]`.
    pub fn planar_nodes(&self, rule: &GaussRule) -> Vec<(f64, f64)> {
        let mut nodes = edge_nodes(rule, 16);
        let outer = geometric_breaks(1.0, self.radius, 0.25, 1.4);
        nodes.extend(composite_nodes(rule, &outer));
        nodes
    }

    /// `∫_{|y| < R_h} F(y) d²y`.
    pub fn disk_integral<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let rule = GaussRule::new(24);
        let mut acc = Neumaier::default();
        for (y, w) in self.planar_nodes(&rule) {
            acc.add(w * 2.0 * PI * y * f(y));
        }
        acc.value()
    }

    /// Samples `(y, g, z, g')` graded toward the region edges.
    pub fn profile_table(&self, n: usize) -> Vec<[f64; 4]> {
        graded_grid(1.0, self.radius, n)
            .into_iter()
            .map(|y| {
                let (g, dg) = self.g_and_prime(y);
                [y, g, 1.0 - g, dg]
            })
            .collect()
    }
}

/// Exterior solution of `g'' + g'/y + μ g = 0` matched to `(g, g')` at `y = 1`.
fn planar_exterior(edge: [f64; 2], mu: f64, y: f64) -> (f64, f64) {
    let [g1, dg1] = edge;
    if mu == 0.0 {
        return (g1 + dg1 * libm::log(y), dg1 / y);
    }
    let k = libm::sqrt(mu);
    let a = -0.5 * PI * (k * y1(k) * g1 + y0(k) * dg1);
    let b = 0.5 * PI * (j0(k) * dg1 + k * j1(k) * g1);
    let x = k * y;
    (a * j0(x) + b * y0(x), -k * (a * j1(x) + b * y1(x)))
}

pub fn solve_neumann_2d(u: &InducedPotential, params: &SlabParams, cfg: &SolverConfig) -> Result<ScatteringSolution2D> {
    let radius = params.radius_2d();
    let sl = scattering_length_2d(u, cfg.ode_tol)?;
    if u.is_zero() {
        return Ok(ScatteringSolution2D {
            mu: 0.0,
            radius,
            e_u: 0.0,
            a_u: 0.0,
            ln_a_u: f64::NEG_INFINITY,
            gamma_u: 0.0,
            ln_gamma_u: f64::NEG_INFINITY,
            m: f64::INFINITY,
            error_estimate: 0.0,
            constant_extension: true,
            g_table: None,
            psi_table: None,
            taylor: 0.0,
            edge: [1.0, 0.0],
            scale: 1.0,
            first_node: 0.0,
        });
    }
    if radius < cfg.thresholds.min_h_over_dl {
        return Err(Error::InvalidRegime(format!(
            "h/(dℓ) = {radius} is below the threshold {}",
            cfg.thresholds.min_h_over_dl
        )));
    }
    let m = libm::log(radius) - sl.ln_a_u;
    let n = u.planar_steps;
    let estimate = 2.0 / (radius * radius * m) * (1.0 + 0.75 / m);
    let mismatch = |mu: f64| {
        let t = planar_interior(u, mu, n);
        let edge = t.last();
        let (g, dg) = planar_exterior(edge, mu, radius);
        dg * g.signum()
    };
    let mut hi = 20.0 * estimate;
    let mut tries = 0;
    while mismatch(hi) >= 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 6 {
            return Err(Error::Bracket { lo: 0.0, hi });
        }
    }
    let (mut lo, mut hi_b) = (0.0, hi);
    for _ in 0..cfg.bisection_steps {
        let mid = 0.5 * (lo + hi_b);
        if mismatch(mid) > 0.0 {
            lo = mid;
        } else {
            hi_b = mid;
        }
    }
    // final profile from the extrapolated pair of runs
    let mu = 0.5 * (lo + hi_b);
    let (traj, err) = planar_interior_extrapolated(u, mu, n);
    let edge = traj.last();
    let (g_edge, _) = planar_exterior(edge, mu, radius);
    let derivs: Vec<[f64; 2]> = traj
        .y
        .iter()
        .enumerate()
        .map(|(i, st)| {
            let s = traj.t(i);
            let y = y_of_sigma(s);
            let dy = 2.0 * (1.0 - s);
            [
                if y > 0.0 { st[1] / y * dy } else { 0.0 },
                y * (0.5 * u.eval_sigma(s) - mu) * st[0] * dy,
            ]
        })
        .collect();
    let g_table = HermiteTable::new(
        traj.t0,
        traj.step,
        traj.y.iter().map(|s| s[0]).collect(),
        derivs.iter().map(|d| d[0]).collect(),
    );
    let psi_table = HermiteTable::new(
        traj.t0,
        traj.step,
        traj.y.iter().map(|s| s[1]).collect(),
        derivs.iter().map(|d| d[1]).collect(),
    );
    Ok(ScatteringSolution2D {
        mu,
        radius,
        e_u: sl.e_u,
        a_u: sl.a_u,
        ln_a_u: sl.ln_a_u,
        gamma_u: sl.gamma_u,
        ln_gamma_u: sl.ln_gamma_u,
        m,
        error_estimate: err,
        constant_extension: true,
        g_table: Some(g_table),
        psi_table: Some(psi_table),
        taylor: 0.5 * u.eval_sigma(0.0) - mu,
        edge,
        scale: 1.0 / g_edge,
        first_node: y_of_sigma(traj.t0),
    })
}

/// All one-particle data for one parameter point.
#[derive(Debug, Clone)]
pub struct SlabSolution {
    pub params: SlabParams,
    pub potential: RadialPotential,
    pub scattering: ScatteringData3D,
    pub sol3d: ScatteringSolution3D,
    pub induced: InducedPotential,
    pub sol2d: ScatteringSolution2D,
}

impl SlabSolution {
    pub fn solve(v: &RadialPotential, params: &SlabParams, cfg: &SolverConfig) -> Result<Self> {
        params.validate()?;
        let scattering = scattering_length_3d(v, cfg.ode_tol)?;
        let sol3d = if v.is_zero() {
            ScatteringSolution3D::free(params.radius_3d(), *v)
        } else {
            params.check_thresholds(&cfg.thresholds, v.support_radius)?;
            solve_neumann_3d_with(v, &scattering, params.radius_3d(), cfg)?
        };
        let induced = induced_potential_2d(&sol3d, params, cfg)?;
        let sol2d = solve_neumann_2d(&induced, params, cfg)?;
        Ok(SlabSolution {
            params: *params,
            potential: *v,
            scattering,
            sol3d,
            induced,
            sol2d,
        })
    }

    pub fn coupling_profiles(&self) -> CouplingProfiles<'_> {
        CouplingProfiles { sol: self }
    }
}

/// Pointwise access to the coupling fields `k`, `q1`, `q2`, `𝔇` (physical coordinates `(ρ, z)`).
#[derive(Debug, Clone, Copy)]
pub struct CouplingProfiles<'a> {
    pub sol: &'a SlabSolution,
}

/// Values of the coupling fields at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CouplingValues {
    pub eta: f64,
    pub xi: f64,
    pub k: f64,
    pub q1: f64,
    pub q2: f64,
    pub d: f64,
}

impl CouplingProfiles<'_> {
    pub fn at(&self, rho: f64, z: f64) -> CouplingValues {
        let p = &self.sol.params;
        let sqd = libm::sqrt(p.d);
        let dl = p.dl();
        let r = libm::sqrt(rho * rho + z * z);
        let y = rho / dl;
        let z2 = self.sol.sol2d.z(y);
        let xi = -z2 / sqd;
        if r >= dl || self.sol.sol3d.is_free() {
            return CouplingValues { xi, ..Default::default() };
        }
        let s = r / p.a;
        let fd = self.sol.sol3d.f_derivatives(s);
        let w = 1.0 - fd[0];
        let (g, dg) = self.sol.sol2d.g_and_prime(y);
        let uy = self.sol.induced.eval(y);
        let mu = self.sol.sol2d.mu;
        let sin_t = if r > 0.0 { rho / r } else { 0.0 };
        let v = self.sol.potential.eval(s);
        let lam = self.sol.sol3d.lambda;
        CouplingValues {
            eta: -w / sqd,
            xi,
            k: w * z2 / sqd,
            q1: -2.0 / sqd * fd[1] * dg * sin_t / (p.a * dl),
            q2: -w * (mu - 0.5 * uy) * g / (sqd * dl * dl),
            d: -(0.5 * v - lam * fd[0]) * z2 / (sqd * p.a * p.a),
        }
    }

    /// `‖k‖₂²`, `‖∇k‖₂²`, `‖η‖₂²` over the ball `|x| < dℓ` and the largest `|k|/|η|` at the nodes.
    pub fn norms(&self) -> CouplingNorms {
        let p = &self.sol.params;
        let dl = p.dl();
        let sqd = libm::sqrt(p.d);
        let rule = GaussRule::new(16);
        let core = self.sol.potential.support_radius * p.a;
        let mut breaks = refine_breaks(&[0.0, core.min(dl)], 0.25 * core);
        breaks.extend(geometric_breaks(core.min(dl), dl, 0.25 * core, 1.4).into_iter().skip(1));
        let radial = composite_nodes(&rule, &breaks);
        let angular = composite_nodes(&rule, &[0.0, 0.25 * PI, 0.5 * PI]);
        let (mut k2, mut gk2, mut e2) = (Neumaier::default(), Neumaier::default(), Neumaier::default());
        let mut ratio: f64 = 0.0;
        for &(r, wr) in &radial {
            let fd = self.sol.sol3d.f_derivatives(r / p.a);
            let w = 1.0 - fd[0];
            let dw = -fd[1] / p.a;
            for &(t, wt) in &angular {
                let sin_t = libm::sin(t);
                let y = r * sin_t / dl;
                let z2 = self.sol.sol2d.z(y);
                let dz2 = -self.sol.sol2d.g_and_prime(y).1 / dl;
                // both hemispheres
                let vol = 2.0 * 2.0 * PI * r * r * sin_t * wr * wt;
                let k = w * z2 / sqd;
                let grad = (dw * z2) * (dw * z2) + (w * dz2) * (w * dz2) + 2.0 * dw * z2 * w * dz2 * sin_t;
                k2.add(vol * k * k);
                gk2.add(vol * grad / p.d);
                e2.add(vol * w * w / p.d);
                if w != 0.0 {
                    ratio = ratio.max(z2.abs());
                }
            }
        }
        CouplingNorms {
            k_sq: k2.value(),
            grad_k_sq: gk2.value(),
            eta_sq: e2.value(),
            max_k_over_eta: ratio,
        }
    }

    /// Tabulates the fields on a graded cylindrical grid (z ≥ 0 only, by mirror symmetry).
    pub fn tabulate(&self, min_cells_per_a: f64, n: usize) -> Result<CouplingGrid> {
        let p = &self.sol.params;
        let dl = p.dl();
        let base = graded_grid(self.sol.potential.support_radius * p.a, dl, n);
        let cells_per_a = base
            .windows(2)
            .filter(|w| w[1] <= p.a * self.sol.potential.support_radius)
            .count() as f64;
        if cells_per_a < min_cells_per_a {
            return Err(Error::Resolution(format!(
                "{cells_per_a} cells across the scale a, {min_cells_per_a} required"
            )));
        }
        let mut values = Vec::with_capacity(base.len() * base.len());
        for &z in &base {
            for &rho in &base {
                values.push(self.at(rho, z));
            }
        }
        Ok(CouplingGrid {
            rho: base.clone(),
            z: base,
            values,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingNorms {
    pub k_sq: f64,
    pub grad_k_sq: f64,
    pub eta_sq: f64,
    pub max_k_over_eta: f64,
}

#[derive(Debug, Clone)]
pub struct CouplingGrid {
    pub rho: Vec<f64>,
    pub z: Vec<f64>,
    /// Row-major in `z`, then `ρ`.
    pub values: Vec<CouplingValues>,
}

impl CouplingGrid {
    pub fn get(&self, iz: usize, irho: usize) -> CouplingValues {
        self.values[iz * self.rho.len() + irho]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{make_potential, PotentialSpec};

    fn bump() -> RadialPotential {
        make_potential(PotentialSpec::default()).unwrap()
    }

    fn params(a: f64) -> SlabParams {
        SlabParams::new(100, a, 1e-2, 0.25, 0.1).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(SlabParams::new(10, 1e-4, 1.5, 0.25, 0.1).is_err());
        assert!(SlabParams::new(10, 1e-4, 0.1, 0.6, 0.1).is_err());
        assert!(SlabParams::new(0, 1e-4, 0.1, 0.25, 0.1).is_err());
        let p = params(1e-4);
        assert!((p.radius_3d() - 25.0).abs() < 1e-12);
        assert!((p.radius_2d() - 40.0).abs() < 1e-12);
    }

    #[test]
    fn free_problem_is_constant() {
        let s = SlabSolution::solve(&RadialPotential::zero(), &params(1e-4), &SolverConfig::default()).unwrap();
        assert_eq!(s.sol3d.lambda, 0.0);
        assert_eq!(s.sol3d.f(3.0), 1.0);
        assert!(s.induced.is_zero());
        assert_eq!(s.sol2d.mu, 0.0);
        assert_eq!(s.sol2d.g(2.0), 1.0);
        let c = s.coupling_profiles().at(1e-4, 0.0);
        assert_eq!(c.k, 0.0);
        assert_eq!(c.d, 0.0);
    }

    #[test]
    fn neumann_boundary_conditions() {
        let s = solve_neumann_3d(&bump(), &params(1e-4), &SolverConfig::default()).unwrap();
        let r = s.radius;
        let d = s.f_derivatives(r * (1.0 - 1e-12));
        assert!((d[0] - 1.0).abs() < 1e-10);
        assert!(d[1].abs() < 1e-9);
        assert!(s.f(0.0) > 0.0);
        // eigenvalue identity: λ ∫ f = ½ ∫ v f
        let lhs = s.lambda * s.integral_f();
        let rhs = 0.5 * s.integral_vf();
        assert!((lhs / rhs - 1.0).abs() < 1e-8, "{lhs} vs {rhs}");
    }

    #[test]
    fn pde_residual_small() {
        let s = solve_neumann_3d(&bump(), &params(1e-4), &SolverConfig::default()).unwrap();
        for &x in &[0.3, 0.7, 1.5, 10.0] {
            assert!(s.pde_residual(x, 1e-3).abs() < 1e-5, "residual at {x}");
        }
    }

    #[test]
    fn series_matches_table_near_origin() {
        let s = solve_neumann_3d(&bump(), &params(1e-4), &SolverConfig::default()).unwrap();
        let x = 0.02 * s.potential.support_radius;
        let a = s.f_derivatives(x * (1.0 - 1e-9));
        let b = s.f_derivatives(x * (1.0 + 1e-9));
        assert!((a[0] - b[0]).abs() < 1e-10);
        assert!((a[1] - b[1]).abs() < 1e-7);
    }

    #[test]
    fn induced_potential_total_matches_vf() {
        let p = params(1e-4);
        let cfg = SolverConfig::default();
        let s = SlabSolution::solve(&bump(), &p, &cfg).unwrap();
        let expected = p.a / p.d * s.sol3d.integral_vf();
        assert!((s.induced.total / expected - 1.0).abs() < 1e-8);
        let direct = induced_value(&s.sol3d, &p, 0.37);
        assert!((s.induced.eval(0.37) / direct - 1.0).abs() < 1e-10);
    }

    #[test]
    fn planar_solution_boundary_values() {
        let s = SlabSolution::solve(&bump(), &params(1e-4), &SolverConfig::default()).unwrap();
        let (g, dg) = s.sol2d.g_and_prime(s.sol2d.radius * (1.0 - 1e-12));
        assert!((g - 1.0).abs() < 1e-10);
        assert!(dg.abs() < 1e-9);
        let (g_in, _) = s.sol2d.g_and_prime(1.0 - 1e-12);
        let (g_out, _) = s.sol2d.g_and_prime(1.0 + 1e-12);
        assert!((g_in - g_out).abs() < 1e-10);
        assert!(s.sol2d.m > 0.0);
    }

    #[test]
    fn coupling_grid_rejects_coarse_resolution() {
        let s = SlabSolution::solve(&bump(), &params(1e-4), &SolverConfig::default()).unwrap();
        assert!(matches!(s.coupling_profiles().tabulate(1e6, 64), Err(Error::Resolution(_))));
        let g = s.coupling_profiles().tabulate(4.0, 64).unwrap();
        assert_eq!(g.values.len(), g.rho.len() * g.z.len());
    }
}
