//! Coefficients on the torus `Λ_d` in the basis `d^{-1/2} exp(i p·ℳ_d x)`, `p ∈ 2πℤ³`.
//!
//! Every field used in the second-order energy is cylindrically symmetric and even in `z`,
//! so a coefficient depends on `(|p̄|, |p₃|)` only. Fields are split into a part supported in
//! the ball `|x| < dℓ` and a `z`-independent planar part; transforms of ball parts go through
//! `z`-cosine layers followed by a Hankel transform, planar parts through a Hankel transform.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::interp::HermiteTable;
use crate::numerics::quad::{composite_nodes, geometric_breaks, refine_breaks, GaussRule};
use crate::numerics::special::{ball_transform, disk_transform, j0, j1, sin_over};
use crate::numerics::sum::Neumaier;
use crate::potentials::potential_fourier;
use crate::scattering::{sigma_of_y, y_of_sigma, ScatteringSolution2D, ScatteringSolution3D, SlabParams, SlabSolution};

/// Integer coordinates `n` of `p = 2π n`.
pub type LatticeVector = [i64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisoMetric {
    pub d: f64,
}

impl AnisoMetric {
    pub fn new(d: f64) -> Self {
        AnisoMetric { d }
    }

    /// `|ℳ_d p|² = p₁² + p₂² + p₃²/d²`.
    pub fn norm_sq(&self, p: LatticeVector) -> f64 {
        let (a, b, c) = (p[0] as f64, p[1] as f64, p[2] as f64 / self.d);
        4.0 * PI * PI * (a * a + b * b + c * c)
    }

    pub fn norm(&self, p: LatticeVector) -> f64 {
        libm::sqrt(self.norm_sq(p))
    }

    /// `|p̄|`.
    pub fn planar(&self, p: LatticeVector) -> f64 {
        2.0 * PI * libm::sqrt((p[0] * p[0] + p[1] * p[1]) as f64)
    }

    /// `p₃/d`.
    pub fn vertical(&self, p: LatticeVector) -> f64 {
        2.0 * PI * p[2] as f64 / self.d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCoefficients {
    pub p: LatticeVector,
    pub eta: f64,
    pub w: f64,
    pub xi: f64,
    pub y: f64,
    pub k: f64,
    pub q: f64,
    pub d: f64,
    /// From the defining convolution form.
    pub wtilde: f64,
    /// From `Y_p + 𝔇_p - v_p ξ_0/(2√d)`.
    pub wtilde_rewrite: f64,
}

/// Fields with torus coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    Eta,
    W,
    Xi,
    Y1,
    Y2,
    Y,
    K,
    Q1,
    Q2,
    Q,
    D,
    /// `v_a ξ`.
    VaXi,
    /// `W ξ`.
    WXi,
}

impl Field {
    pub const ALL: [Field; 13] = [
        Field::Eta,
        Field::W,
        Field::Xi,
        Field::Y1,
        Field::Y2,
        Field::Y,
        Field::K,
        Field::Q1,
        Field::Q2,
        Field::Q,
        Field::D,
        Field::VaXi,
        Field::WXi,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Field::Eta => "eta",
            Field::W => "W",
            Field::Xi => "xi",
            Field::Y1 => "Y1",
            Field::Y2 => "Y2",
            Field::Y => "Y",
            Field::K => "k",
            Field::Q1 => "q1",
            Field::Q2 => "q2",
            Field::Q => "q",
            Field::D => "D",
            Field::VaXi => "va_xi",
            Field::WXi => "W_xi",
        }
    }

    fn has_plane(&self) -> bool {
        matches!(self, Field::Xi | Field::Y1 | Field::Y2 | Field::Y)
    }

    fn has_ball(&self) -> bool {
        !matches!(self, Field::Xi | Field::Y1)
    }
}

/// Ball-part values at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BallValues {
    pub eta: f64,
    pub w: f64,
    pub wg: f64,
    pub k: f64,
    pub q1: f64,
    pub q2: f64,
    pub d: f64,
    pub va_xi: f64,
    pub w_xi: f64,
}

impl BallValues {
    fn get(&self, f: Field) -> f64 {
        match f {
            Field::Eta => self.eta,
            Field::W => self.w,
            Field::Xi | Field::Y1 => 0.0,
            Field::Y2 | Field::Y => self.wg,
            Field::K => self.k,
            Field::Q1 => self.q1,
            Field::Q2 => self.q2,
            Field::Q => self.q1 + self.q2,
            Field::D => self.d,
            Field::VaXi => self.va_xi,
            Field::WXi => self.w_xi,
        }
    }
}

/// Planar-part values at one radius.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PlaneValues {
    pub xi: f64,
    pub y1: f64,
    /// `-⟨W⟩ g` (the z-average of `W` times `g̃`), supported in the disk `dℓ`.
    pub y2: f64,
}

impl PlaneValues {
    fn get(&self, f: Field) -> f64 {
        match f {
            Field::Xi => self.xi,
            Field::Y1 => self.y1,
            Field::Y2 => self.y2,
            Field::Y => self.y1 + self.y2,
            _ => 0.0,
        }
    }
}

/// Quadrature resolution controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub gauss_nodes: usize,
    /// Nodes per oscillation period required of every panel (at least 8).
    pub nodes_per_period: f64,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            gauss_nodes: 16,
            nodes_per_period: 8.0,
            max_panels: 200_000,
        }
    }
}

/// Coefficient evaluator bound to one parameter point.
#[derive(Debug, Clone)]
pub struct Torus<'a> {
    pub sol: &'a SlabSolution,
    pub metric: AnisoMetric,
    pub quad: QuadConfig,
    rule: GaussRule,
}

/// Nodes of the ball quadrature: `ρ` nodes, each with its `z ≥ 0` nodes.
#[derive(Debug, Clone)]
pub struct BallNodes {
    pub rho: Vec<(f64, f64)>,
    pub z: Vec<Vec<(f64, f64)>>,
}

/// `z`-cosine layer of a set of ball fields: `Z(ρ) = ∫ A(ρ, z) cos(κ₃ z) dz` over the chord.
#[derive(Debug, Clone)]
pub struct LayerProfile {
    pub fields: Vec<Field>,
    pub vertical: f64,
    pub rho: Vec<(f64, f64)>,
    pub values: Vec<Vec<f64>>,
}

impl LayerProfile {
    /// Ball-part coefficient `d^{-1/2} 2π ∫ Z(ρ) J0(κ̄ρ) ρ dρ` and its `κ̄` derivative.
    pub fn hankel(&self, idx: usize, kbar: f64, d: f64) -> (f64, f64) {
        let mut v = Neumaier::default();
        let mut dv = Neumaier::default();
        for (i, &(r, w)) in self.rho.iter().enumerate() {
            let a = w * r * self.values[idx][i];
            v.add(a * j0(kbar * r));
            dv.add(-a * r * j1(kbar * r));
        }
        let c = 2.0 * PI / libm::sqrt(d);
        (c * v.value(), c * dv.value())
    }
}

/// Planar profile of a set of fields on disk nodes.
#[derive(Debug, Clone)]
pub struct PlaneProfile {
    pub fields: Vec<Field>,
    pub rho: Vec<(f64, f64)>,
    pub values: Vec<Vec<f64>>,
}

impl PlaneProfile {
    /// Planar-part coefficient `√d 2π ∫ P(ρ) J0(κ̄ρ) ρ dρ` and its `κ̄` derivative.
    pub fn hankel(&self, idx: usize, kbar: f64, d: f64) -> (f64, f64) {
        let mut v = Neumaier::default();
        let mut dv = Neumaier::default();
        for (i, &(r, w)) in self.rho.iter().enumerate() {
            let a = w * r * self.values[idx][i];
            v.add(a * j0(kbar * r));
            dv.add(-a * r * j1(kbar * r));
        }
        let c = 2.0 * PI * libm::sqrt(d);
        (c * v.value(), c * dv.value())
    }
}

impl<'a> Torus<'a> {
    pub fn new(sol: &'a SlabSolution) -> Self {
        Self::with_quad(sol, QuadConfig::default())
    }

    pub fn with_quad(sol: &'a SlabSolution, quad: QuadConfig) -> Self {
        Torus {
            sol,
            metric: AnisoMetric::new(sol.params.d),
            rule: GaussRule::new(quad.gauss_nodes),
            quad,
        }
    }

    fn params(&self) -> &SlabParams {
        &self.sol.params
    }

    fn max_width(&self, k: f64) -> f64 {
        if k > 0.0 {
            2.0 * PI / k * self.quad.gauss_nodes as f64 / self.quad.nodes_per_period.max(8.0)
        } else {
            f64::INFINITY
        }
    }

    fn check_panels(&self, n: usize, what: &str) -> Result<()> {
        if n > self.quad.max_panels {
            return Err(Error::Resolution(format!(
                "{what}: {n} panels needed to resolve the oscillation, budget {}",
                self.quad.max_panels
            )));
        }
        Ok(())
    }

    pub fn ball_values(&self, rho: f64, z: f64) -> BallValues {
        let sol = self.sol;
        let p = &sol.params;
        let sqd = libm::sqrt(p.d);
        let dl = p.dl();
        let r = libm::sqrt(rho * rho + z * z);
        if r >= dl || sol.sol3d.is_free() {
            return BallValues::default();
        }
        let s = r / p.a;
        let fd = sol.sol3d.f_derivatives(s);
        let f = fd[0];
        let w = 1.0 - f;
        let y = rho / dl;
        let (g, dg) = sol.sol2d.g_and_prime(y);
        let zh = if sol.sol2d.is_free() { 0.0 } else { 1.0 - g };
        let xi = -zh / sqd;
        let lam = sol.sol3d.lambda / (p.a * p.a);
        let wfield = lam * f / sqd;
        let va = sol.potential.eval(s) / (p.a * p.a);
        let uy = sol.induced.eval(y);
        let mu = sol.sol2d.mu;
        let sin_t = if r > 0.0 { rho / r } else { 0.0 };
        BallValues {
            eta: -w / sqd,
            w: wfield,
            wg: wfield * g,
            k: w * zh / sqd,
            q1: -2.0 / sqd * fd[1] * dg * sin_t / (p.a * dl),
            q2: -w * (mu - 0.5 * uy) * g / (sqd * dl * dl),
            d: (0.5 * va - sqd * wfield) * xi,
            va_xi: va * xi,
            w_xi: wfield * xi,
        }
    }

    pub fn plane_values(&self, rho: f64) -> PlaneValues {
        let sol = self.sol;
        let p = &sol.params;
        let sqd = libm::sqrt(p.d);
        let dl = p.dl();
        let y = rho / dl;
        if sol.sol2d.is_free() || y >= sol.sol2d.radius {
            return PlaneValues::default();
        }
        let g = sol.sol2d.g(y);
        let mu = sol.sol2d.mu;
        let avg_w = sol.induced.eval(y) / (2.0 * sqd * dl * dl);
        PlaneValues {
            xi: -(1.0 - g) / sqd,
            y1: mu / (dl * dl * sqd) * g,
            y2: -avg_w * g,
        }
    }

    /// Ball nodes resolving radial wavenumber `kbar` and vertical wavenumber `kz`.
    pub fn ball_nodes(&self, kbar: f64, kz: f64) -> Result<BallNodes> {
        let p = self.params();
        let dl = p.dl();
        let a_edge = p.a * self.sol.potential.support_radius;
        // ρ = dℓ·y(σ): uniform near the axis, clustered at the sphere
        let first = (a_edge / (16.0 * dl)).min(0.05);
        let sig_breaks = geometric_breaks(0.0, 1.0, first, 1.5);
        let sig_w = self.max_width(kbar) / (2.0 * dl);
        let sig_breaks = refine_breaks(&sig_breaks, sig_w);
        self.check_panels(sig_breaks.len(), "ball ρ-panels")?;
        let rho: Vec<(f64, f64)> = composite_nodes(&self.rule, &sig_breaks)
            .into_iter()
            .map(|(s, w)| (dl * y_of_sigma(s), w * dl * 2.0 * (1.0 - s)))
            .collect();
        let zw = self.max_width(kz);
        let mut z = Vec::with_capacity(rho.len());
        for &(r, _) in &rho {
            let zmax = libm::sqrt((dl * dl - r * r).max(0.0));
            let mut br = geometric_breaks(0.0, zmax, 0.5 * r.max(0.25 * a_edge), 1.5);
            if r < a_edge {
                let zs = libm::sqrt(a_edge * a_edge - r * r);
                if zs < zmax {
                    br.push(zs);
                    br.sort_by(|x, y| x.partial_cmp(y).unwrap());
                    br.dedup();
                }
            }
            let br = refine_breaks(&br, zw);
            self.check_panels(br.len(), "ball z-panels")?;
            z.push(composite_nodes(&self.rule, &br));
        }
        Ok(BallNodes { rho, z })
    }

    /// Planar nodes on `[0, radius]` (physical), edge-clustered at `dℓ`.
    pub fn plane_nodes(&self, radius: f64, kbar: f64) -> Result<Vec<(f64, f64)>> {
        let dl = self.params().dl();
        let sw = self.max_width(kbar) / (2.0 * dl);
        let inner = refine_breaks(&geometric_breaks(0.0, 1.0, 0.05, 1.5), sw);
        let mut nodes: Vec<(f64, f64)> = composite_nodes(&self.rule, &inner)
            .into_iter()
            .map(|(s, w)| (dl * y_of_sigma(s), w * dl * 2.0 * (1.0 - s)))
            .collect();
        if radius > dl * (1.0 + 1e-12) {
            let outer = refine_breaks(&geometric_breaks(dl, radius, 0.25 * dl, 1.4), self.max_width(kbar));
            self.check_panels(outer.len() + inner.len(), "planar panels")?;
            nodes.extend(composite_nodes(&self.rule, &outer));
        }
        Ok(nodes)
    }

    fn plane_radius(&self, f: Field) -> f64 {
        match f {
            Field::Y2 => self.params().dl(),
            _ => self.params().h,
        }
    }

    pub fn layer_profile(&self, fields: &[Field], n3: i64, kbar_max: f64) -> Result<LayerProfile> {
        let kz = self.metric.vertical([0, 0, n3]).abs();
        let nodes = self.ball_nodes(kbar_max, kz)?;
        let mut values = alloc::vec![Vec::with_capacity(nodes.rho.len()); fields.len()];
        for (i, &(r, _)) in nodes.rho.iter().enumerate() {
            let mut acc = alloc::vec![Neumaier::default(); fields.len()];
            for &(z, w) in &nodes.z[i] {
                let bv = self.ball_values(r, z);
                let c = 2.0 * w * libm::cos(kz * z);
                for (j, f) in fields.iter().enumerate() {
                    acc[j].add(c * bv.get(*f));
                }
            }
            for j in 0..fields.len() {
                values[j].push(acc[j].value());
            }
        }
        Ok(LayerProfile {
            fields: fields.to_vec(),
            vertical: kz,
            rho: nodes.rho,
            values,
        })
    }

    pub fn plane_profile(&self, fields: &[Field], radius: f64, kbar_max: f64) -> Result<PlaneProfile> {
        let rho = self.plane_nodes(radius, kbar_max)?;
        let mut values = alloc::vec![Vec::with_capacity(rho.len()); fields.len()];
        for &(r, _) in &rho {
            let pv = self.plane_values(r);
            for (j, f) in fields.iter().enumerate() {
                values[j].push(pv.get(*f));
            }
        }
        Ok(PlaneProfile {
            fields: fields.to_vec(),
            rho,
            values,
        })
    }

    /// Coefficient of any field by the layered cylindrical quadrature.
    pub fn field(&self, f: Field, p: LatticeVector) -> Result<f64> {
        let kbar = self.metric.planar(p);
        let d = self.params().d;
        let mut total = 0.0;
        if f == Field::Y && p[2] == 0 {
            return self.y(p);
        }
        if f.has_ball() {
            let lp = self.layer_profile(&[f], p[2], kbar)?;
            total += lp.hankel(0, kbar, d).0;
        }
        if f.has_plane() && p[2] == 0 {
            let pp = self.plane_profile(&[f], self.plane_radius(f), kbar)?;
            total += pp.hankel(0, kbar, d).0;
        }
        Ok(total)
    }

    /// `η_p = -(4π/d) ∫_0^{dℓ} w(r/a) r sin(κr)/κ dr`.
    pub fn eta(&self, p: LatticeVector) -> Result<f64> {
        eta_coefficient(&self.sol.sol3d, self.params(), p)
    }

    pub fn w(&self, p: LatticeVector) -> Result<f64> {
        w_coefficient(&self.sol.sol3d, self.params(), p)
    }

    pub fn xi(&self, p: LatticeVector) -> Result<f64> {
        xi_coefficient(&self.sol.sol2d, self.params(), p)
    }

    /// `Y_p`: planar closed form for `p₃ = 0`, cylindrical transform of `W g̃` otherwise.
    pub fn y(&self, p: LatticeVector) -> Result<f64> {
        if self.sol.sol2d.is_free() && self.sol.sol3d.is_free() {
            return Ok(0.0);
        }
        if p[2] == 0 {
            let kbar = self.metric.planar(p);
            let dl = self.params().dl();
            let h = self.params().h;
            let xi = self.xi(p)?;
            return Ok(self.sol.sol2d.mu / (dl * dl) * (xi + disk_transform(h, kbar)));
        }
        let kbar = self.metric.planar(p);
        let lp = self.layer_profile(&[Field::Y2], p[2], kbar)?;
        Ok(lp.hankel(0, kbar, self.params().d).0)
    }

    /// `(k_p, q_p, 𝔇_p)`.
    pub fn coupling(&self, p: LatticeVector) -> Result<(f64, f64, f64)> {
        let kbar = self.metric.planar(p);
        let lp = self.layer_profile(&[Field::K, Field::Q, Field::D], p[2], kbar)?;
        let d = self.params().d;
        Ok((lp.hankel(0, kbar, d).0, lp.hankel(1, kbar, d).0, lp.hankel(2, kbar, d).0))
    }

    /// `W̃_p` from its definition and from the rewritten form.
    pub fn wtilde(&self, p: LatticeVector) -> Result<(f64, f64)> {
        let prm = self.params();
        let sqd = libm::sqrt(prm.d);
        let kbar = self.metric.planar(p);
        let xi0 = self.xi([0, 0, 0])?;
        let vp = potential_fourier(&self.sol.potential, prm.a, prm.d, p)?;
        let lp = self.layer_profile(&[Field::VaXi, Field::WXi, Field::D], p[2], kbar)?;
        let va_xi = lp.hankel(0, kbar, prm.d).0;
        let w_xi = lp.hankel(1, kbar, prm.d).0;
        let dp = lp.hankel(2, kbar, prm.d).0;
        let conv_v = 0.5 * va_xi - vp * xi0 / (2.0 * sqd);
        let def = if p[2] != 0 {
            self.w(p)? + conv_v
        } else {
            let dl = prm.dl();
            self.sol.sol2d.mu / (dl * dl) * (self.xi(p)? + disk_transform(prm.h, kbar)) + conv_v - sqd * w_xi
        };
        let rewrite = self.y(p)? + dp - vp * xi0 / (2.0 * sqd);
        Ok((def, rewrite))
    }

    pub fn mode(&self, p: LatticeVector) -> Result<ModeCoefficients> {
        let (k, q, d) = self.coupling(p)?;
        let (wt, wr) = self.wtilde(p)?;
        Ok(ModeCoefficients {
            p,
            eta: self.eta(p)?,
            w: self.w(p)?,
            xi: self.xi(p)?,
            y: self.y(p)?,
            k,
            q,
            d,
            wtilde: wt,
            wtilde_rewrite: wr,
        })
    }

    /// `A_0 = d^{-1/2} ∫_Λ A`.
    pub fn zero_mode(&self, f: Field) -> Result<f64> {
        self.field(f, [0, 0, 0])
    }

    /// `∫_Λ A B` by position-space quadrature.
    pub fn pair_integral(&self, a: Field, b: Field) -> Result<f64> {
        let d = self.params().d;
        let mut total = Neumaier::default();
        if a.has_ball() || b.has_ball() {
            let nodes = self.ball_nodes(0.0, 0.0)?;
            for (i, &(r, wr)) in nodes.rho.iter().enumerate() {
                let pv = self.plane_values(r);
                let (pa, pb) = (pv.get(a), pv.get(b));
                let mut acc = Neumaier::default();
                for &(z, wz) in &nodes.z[i] {
                    let bv = self.ball_values(r, z);
                    let (ba, bb) = (bv.get(a), bv.get(b));
                    acc.add(wz * (ba * bb + ba * pb + pa * bb));
                }
                total.add(2.0 * PI * r * wr * 2.0 * acc.value());
            }
        }
        if a.has_plane() && b.has_plane() {
            let radius = self.plane_radius(a).min(self.plane_radius(b));
            for (r, w) in self.plane_nodes(radius, 0.0)? {
                let pv = self.plane_values(r);
                total.add(d * 2.0 * PI * r * w * pv.get(a) * pv.get(b));
            }
        }
        Ok(total.value())
    }

    /// `Σ_{p≠0} A_p B_p = ∫ A B - A_0 B_0`.
    pub fn parseval_pair_sum(&self, a: Field, b: Field) -> Result<f64> {
        let ab = self.pair_integral(a, b)?;
        Ok(ab - self.zero_mode(a)? * self.zero_mode(b)?)
    }

    /// Residual of `|ℳp|² η_p + ½ (v_a η)_p + v_p/(2√d) = W_p`.
    pub fn eta_equation_residual(&self, p: LatticeVector) -> Result<f64> {
        let prm = self.params();
        let k = self.metric.norm(p);
        let sqd = libm::sqrt(prm.d);
        let vp = potential_fourier(&self.sol.potential, prm.a, prm.d, p)?;
        // (v_a η)_p as a 1D sine transform of v w
        let sol = &self.sol.sol3d;
        let a = prm.a;
        let nodes = self.radial_nodes_eta(k)?;
        let mut acc = Neumaier::default();
        for (s, w) in nodes {
            if s < sol.potential.support_radius {
                acc.add(w * sol.potential.eval(s) * sol.w(s) * s * sin_over(k, a * s));
            }
        }
        let va_eta = -4.0 * PI / prm.d * acc.value();
        Ok(k * k * self.eta(p)? + 0.5 * va_eta + vp / (2.0 * sqd) - self.w(p)?)
    }

    /// Residual of `|ℳp|² ξ_p + √d (W ξ)_p + W_p = Y_p` (both sides vanish identically... only for the `ξ` term when `p₃ ≠ 0`).
    pub fn xi_equation_residual(&self, p: LatticeVector) -> Result<f64> {
        let k = self.metric.norm(p);
        let sqd = libm::sqrt(self.params().d);
        let wxi = self.field(Field::WXi, p)?;
        Ok(k * k * self.xi(p)? + sqd * wxi + self.w(p)? - self.y(p)?)
    }

    fn radial_nodes_eta(&self, k: f64) -> Result<Vec<(f64, f64)>> {
        radial_transform_nodes(&self.sol.sol3d, &self.sol.params, k, &self.rule, &self.quad)
    }
}

fn radial_transform_nodes(
    sol: &ScatteringSolution3D,
    p: &SlabParams,
    k: f64,
    rule: &GaussRule,
    quad: &QuadConfig,
) -> Result<Vec<(f64, f64)>> {
    let r0 = sol.potential.support_radius.min(sol.radius);
    let mut breaks: Vec<f64> = (0..=8).map(|i| r0 * i as f64 / 8.0).collect();
    let outer = geometric_breaks(r0, sol.radius, 0.5 * r0, 1.5);
    breaks.extend_from_slice(&outer[1..]);
    let width = if k > 0.0 {
        2.0 * PI / (k * p.a) * rule.len() as f64 / quad.nodes_per_period.max(8.0)
    } else {
        f64::INFINITY
    };
    let breaks = refine_breaks(&breaks, width);
    if breaks.len() > quad.max_panels {
        return Err(Error::Resolution(format!(
            "radial sine transform at κ = {k}: {} panels exceed the budget {}",
            breaks.len(),
            quad.max_panels
        )));
    }
    Ok(composite_nodes(rule, &breaks))
}

pub fn eta_coefficient(sol3d: &ScatteringSolution3D, params: &SlabParams, p: LatticeVector) -> Result<f64> {
    if sol3d.is_free() {
        return Ok(0.0);
    }
    let k = AnisoMetric::new(params.d).norm(p);
    let rule = GaussRule::new(16);
    let a = params.a;
    let mut acc = Neumaier::default();
    for (s, w) in radial_transform_nodes(sol3d, params, k, &rule, &QuadConfig::default())? {
        acc.add(w * sol3d.w(s) * s * sin_over(k, a * s));
    }
    Ok(-4.0 * PI * a * a / params.d * acc.value())
}

/// `W_p = (λ/(a²d)) (χ̂_{dℓ}(ℳp/2π) + d η_p)` (λ in units of `a^-2`).
pub fn w_coefficient(sol3d: &ScatteringSolution3D, params: &SlabParams, p: LatticeVector) -> Result<f64> {
    if sol3d.is_free() {
        return Ok(0.0);
    }
    let k = AnisoMetric::new(params.d).norm(p);
    let chi = ball_transform(params.dl(), k);
    let eta = eta_coefficient(sol3d, params, p)?;
    Ok(sol3d.lambda / (params.a * params.a * params.d) * (chi + params.d * eta))
}

/// `ξ_p = -2π ∫_0^h z_h(ρ/dℓ) J0(|p̄|ρ) ρ dρ` for `p₃ = 0`, zero otherwise.
pub fn xi_coefficient(sol2d: &ScatteringSolution2D, params: &SlabParams, p: LatticeVector) -> Result<f64> {
    if p[2] != 0 || sol2d.is_free() {
        return Ok(0.0);
    }
    let kbar = AnisoMetric::new(params.d).planar(p);
    let dl = params.dl();
    let rule = GaussRule::new(16);
    let quad = QuadConfig::default();
    let width = if kbar > 0.0 {
        2.0 * PI / (kbar * dl) * rule.len() as f64 / quad.nodes_per_period
    } else {
        f64::INFINITY
    };
    let inner = refine_breaks(&geometric_breaks(0.0, 1.0, 0.05, 1.5), 0.5 * width);
    let outer = refine_breaks(&geometric_breaks(1.0, sol2d.radius, 0.25, 1.4), width);
    if inner.len() + outer.len() > quad.max_panels {
        return Err(Error::Resolution(format!("planar Hankel transform at |p̄| = {kbar}")));
    }
    let mut acc = Neumaier::default();
    for (s, w) in composite_nodes(&rule, &inner) {
        let y = y_of_sigma(s);
        acc.add(w * 2.0 * (1.0 - s) * y * sol2d.z(y) * j0(kbar * dl * y));
    }
    for (y, w) in composite_nodes(&rule, &outer) {
        acc.add(w * y * sol2d.z(y) * j0(kbar * dl * y));
    }
    let _ = sigma_of_y;
    Ok(-2.0 * PI * dl * dl * acc.value())
}

pub fn y_coefficient(sol: &SlabSolution, p: LatticeVector) -> Result<f64> {
    Torus::new(sol).y(p)
}

pub fn coupling_coefficients(
    profiles: &crate::scattering::CouplingProfiles<'_>,
    p: LatticeVector,
) -> Result<(f64, f64, f64)> {
    Torus::new(profiles.sol).coupling(p)
}

pub fn parseval_pair_sum(sol: &SlabSolution, a: Field, b: Field) -> Result<f64> {
    Torus::new(sol).parseval_pair_sum(a, b)
}

/// Interpolation tables of coefficients in `|p̄|`, one per `|n₃|` layer.
///
/// On the `n₃ = 0` layer, `ξ`, `Y1` and `Y` are stored through the transform `T` of the planar part
/// of `Y2` (supported in the disk `dℓ`); the planar equation `-Δg + (u/2(dℓ)²) g = μ' g` with
/// `z = z' = 0` at `h` gives `ẑ = (μ' χ̂_h + T)/(μ' - k²)`, so only the disk transform `χ̂_h` carries the
/// scale `h` and it is evaluated in closed form. The pole at `k² = μ'` is removable and lies below the
/// first nonzero lattice shell in the admissible regime.
#[derive(Debug, Clone)]
pub struct SpectralTables {
    pub fields: Vec<Field>,
    pub kbar_max: f64,
    pub layers: Vec<Vec<HermiteTable>>,
    /// Largest interpolation deviation found at check points between nodes.
    pub max_interp_error: f64,
    closure: PlanarClosure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PlanarClosure {
    /// `μ/(dℓ)²` in physical units.
    mu: f64,
    h: f64,
}

impl PlanarClosure {
    fn z_hat(&self, kbar: f64, t: f64) -> f64 {
        if self.mu == 0.0 && kbar == 0.0 {
            return 0.0;
        }
        (self.mu * disk_transform(self.h, kbar) + t) / (self.mu - kbar * kbar)
    }

    fn apply(&self, f: Field, kbar: f64, t: f64) -> f64 {
        match f {
            Field::Xi => -self.z_hat(kbar, t),
            Field::Y | Field::Y1 => self.mu * (disk_transform(self.h, kbar) - self.z_hat(kbar, t)),
            _ => t,
        }
    }
}

fn closed_on_plane(f: Field) -> bool {
    matches!(f, Field::Xi | Field::Y1 | Field::Y)
}

impl SpectralTables {
    /// Builds tables for `|n₃| ≤ n3_max`, `|p̄| ≤ kbar_max`, with `points_per_scale` samples per `1/dℓ`.
    pub fn build(torus: &Torus<'_>, fields: &[Field], n3_max: i64, kbar_max: f64, points_per_scale: f64) -> Result<Self> {
        let prm = torus.params();
        let d = prm.d;
        let dl = prm.dl();
        let step = 1.0 / (dl * points_per_scale);
        let npts = libm::ceil(kbar_max / step) as usize + 2;
        let closure = PlanarClosure {
            mu: if torus.sol.sol2d.is_free() { 0.0 } else { torus.sol.sol2d.mu / (dl * dl) },
            h: prm.h,
        };
        if closure.mu >= 4.0 * PI * PI {
            return Err(Error::InvalidRegime(format!(
                "μ/(dℓ)² = {} reaches the first lattice shell (2π)²; h is too small for the planar closure",
                closure.mu
            )));
        }
        let build_layer = |n3: i64| -> Result<Vec<HermiteTable>> {
            let ball_fields: Vec<Field> = fields
                .iter()
                .copied()
                .filter(|f| f.has_ball() && !(n3 == 0 && closed_on_plane(*f)))
                .collect();
            let lp = torus.layer_profile(&ball_fields, n3, kbar_max)?;
            let pp = if n3 == 0 && fields.iter().any(|f| f.has_plane()) {
                Some(torus.plane_profile(&[Field::Y2], dl, kbar_max + 2.0 * step)?)
            } else {
                None
            };
            let mut out = Vec::with_capacity(fields.len());
            for f in fields {
                let mut vals = Vec::with_capacity(npts);
                let mut ders = Vec::with_capacity(npts);
                let bi = ball_fields.iter().position(|g| g == f);
                for i in 0..npts {
                    let kb = step * i as f64;
                    let (mut v, mut dv) = (0.0, 0.0);
                    if let Some(bi) = bi {
                        let (a, b) = lp.hankel(bi, kb, d);
                        v += a;
                        dv += b;
                    }
                    if let Some(pp) = &pp {
                        if f.has_plane() {
                            let (a, b) = pp.hankel(0, kb, d);
                            v += a;
                            dv += b;
                        }
                    }
                    vals.push(v);
                    ders.push(dv);
                }
                out.push(HermiteTable::new(0.0, step, vals, ders));
            }
            Ok(out)
        };
        #[cfg(feature = "parallel")]
        let layers: Vec<Result<Vec<HermiteTable>>> = {
            use rayon::prelude::*;
            (0..=n3_max).into_par_iter().map(build_layer).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let layers: Vec<Result<Vec<HermiteTable>>> = (0..=n3_max).map(build_layer).collect();
        let layers = layers.into_iter().collect::<Result<Vec<_>>>()?;
        let mut tables = SpectralTables {
            fields: fields.to_vec(),
            kbar_max,
            layers,
            max_interp_error: 0.0,
            closure,
        };
        tables.max_interp_error = tables.self_check(torus)?;
        Ok(tables)
    }

    fn self_check(&self, torus: &Torus<'_>) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let probes = [0.37, 0.61, 0.83];
        for (li, layer) in self.layers.iter().enumerate().step_by(self.layers.len().div_ceil(3).max(1)) {
            for (fi, f) in self.fields.iter().enumerate() {
                let t = &layer[fi];
                let n = t.y.len();
                // keep clear of the removable pole of the planar closure
                let near_pole = |kb: f64| li == 0 && closed_on_plane(*f) && kb > 0.0 && kb * kb < 2.0 * self.closure.mu;
                let scale = (0..n)
                    .map(|j| t.step * j as f64)
                    .filter(|kb| !near_pole(*kb))
                    .map(|kb| self.eval(fi, kb, li as i64).abs())
                    .fold(0.0f64, f64::max)
                    .max(1e-300);
                for &frac in &probes {
                    let idx = ((n - 2) as f64 * frac) as usize;
                    let kb = t.step * (idx as f64 + 0.5);
                    if near_pole(kb) {
                        continue;
                    }
                    let approx = self.eval(fi, kb, li as i64);
                    let exact = self.direct(torus, *f, li as i64, kb)?;
                    worst = worst.max((approx - exact).abs() / scale);
                }
            }
        }
        Ok(worst)
    }

    fn direct(&self, torus: &Torus<'_>, f: Field, n3: i64, kbar: f64) -> Result<f64> {
        let d = torus.params().d;
        let mut v = 0.0;
        let ball = f.has_ball() && !(n3 == 0 && f == Field::Y);
        if ball {
            v += torus.layer_profile(&[f], n3, self.kbar_max)?.hankel(0, kbar, d).0;
        }
        if n3 == 0 && f.has_plane() {
            let g = if f == Field::Y { Field::Y1 } else { f };
            v += torus.plane_profile(&[g], torus.params().h, self.kbar_max)?.hankel(0, kbar, d).0;
        }
        Ok(v)
    }

    /// Coefficient of `fields[idx]` at `(|p̄|, n₃)`, zero beyond the tabulated range.
    pub fn eval(&self, idx: usize, kbar: f64, n3: i64) -> f64 {
        let layer = n3.unsigned_abs() as usize;
        if layer >= self.layers.len() || kbar > self.kbar_max {
            return 0.0;
        }
        let t = self.layers[layer][idx].eval(kbar).0;
        let f = self.fields[idx];
        if layer == 0 && closed_on_plane(f) {
            self.closure.apply(f, kbar, t)
        } else {
            t
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{make_potential, PotentialSpec, RadialPotential};
    use crate::scattering::SolverConfig;

    fn solution() -> SlabSolution {
        let v = make_potential(PotentialSpec::default()).unwrap();
        let p = SlabParams::new(100, 2e-3, 0.04, 0.25, 0.2).unwrap();
        SlabSolution::solve(&v, &p, &SolverConfig::default()).unwrap()
    }

    #[test]
    fn metric_dominates_euclidean() {
        let m = AnisoMetric::new(0.1);
        for p in [[1, 0, 0], [0, 0, 1], [1, -2, 3]] {
            assert!(m.norm(p) >= 2.0 * PI * libm::sqrt((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) as f64) - 1e-12);
        }
        assert!((m.norm([0, 0, 1]) - 20.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn free_fields_vanish() {
        let p = SlabParams::new(100, 2e-3, 0.04, 0.25, 0.2).unwrap();
        let s = SlabSolution::solve(&RadialPotential::zero(), &p, &SolverConfig::default()).unwrap();
        let t = Torus::new(&s);
        let m = t.mode([1, 0, 0]).unwrap();
        assert_eq!((m.eta, m.w, m.xi, m.y, m.k, m.q, m.d), (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn xi_vanishes_off_plane() {
        let s = solution();
        let t = Torus::new(&s);
        assert_eq!(t.xi([1, 0, 1]).unwrap(), 0.0);
        assert!(t.xi([1, 0, 0]).unwrap() != 0.0);
    }

    #[test]
    fn one_dimensional_and_layered_transforms_agree() {
        let s = solution();
        let t = Torus::new(&s);
        for p in [[0, 0, 0], [1, 0, 0], [2, 1, 1], [0, 0, 2]] {
            let a = t.eta(p).unwrap();
            let b = t.field(Field::Eta, p).unwrap();
            assert!((a - b).abs() <= 1e-8 * a.abs().max(1e-12), "eta {p:?}: {a} vs {b}");
            let a = t.w(p).unwrap();
            let b = t.field(Field::W, p).unwrap();
            assert!((a - b).abs() <= 1e-7 * a.abs(), "W {p:?}: {a} vs {b}");
            let a = t.xi(p).unwrap();
            let b = t.field(Field::Xi, p).unwrap();
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12), "xi {p:?}: {a} vs {b}");
        }
    }

    #[test]
    fn coefficients_even_in_p() {
        let s = solution();
        let t = Torus::new(&s);
        let a = t.mode([2, -1, 1]).unwrap();
        let b = t.mode([-2, 1, -1]).unwrap();
        let c = t.mode([1, 2, 1]).unwrap();
        assert_eq!(a.k, b.k);
        assert_eq!(a.q, b.q);
        assert_eq!(a.eta, c.eta);
    }

    #[test]
    fn wtilde_forms_agree() {
        let s = solution();
        let t = Torus::new(&s);
        for p in [[1, 0, 0], [1, 1, 1]] {
            let (a, b) = t.wtilde(p).unwrap();
            assert!((a - b).abs() <= 1e-7 * a.abs().max(b.abs()), "{p:?}: {a} vs {b}");
        }
    }

    #[test]
    fn discrete_equations_hold() {
        let s = solution();
        let t = Torus::new(&s);
        for p in [[1, 0, 0], [0, 1, 1], [3, 0, 0]] {
            let r = t.eta_equation_residual(p).unwrap();
            let scale = t.w(p).unwrap().abs();
            assert!(r.abs() < 1e-6 * scale, "eta residual {r} at {p:?} (scale {scale})");
            let r = t.xi_equation_residual(p).unwrap();
            let scale = t.y(p).unwrap().abs();
            assert!(r.abs() < 1e-6 * scale, "xi residual {r} at {p:?} (scale {scale})");
        }
    }

    #[test]
    fn parseval_of_factorized_pair() {
        // ∫ W ξ via the ball equals -½ ∫ u z over the unit disk
        let s = solution();
        let t = Torus::new(&s);
        let direct = t.pair_integral(Field::W, Field::Xi).unwrap();
        let planar = -0.5 * s.sol2d.disk_integral(|y| s.induced.eval(y) * s.sol2d.z(y));
        assert!((direct / planar - 1.0).abs() < 1e-8, "{direct} vs {planar}");
    }

    #[test]
    fn planar_closure_matches_direct_coefficients() {
        let s = solution();
        let t = Torus::new(&s);
        let fields = [Field::Xi, Field::Y, Field::W];
        let kmax = 40.0 / s.params.dl();
        let tab = SpectralTables::build(&t, &fields, 1, kmax, 8.0).unwrap();
        assert!(tab.max_interp_error < 1e-6, "interp {}", tab.max_interp_error);
        for p in [[0, 0, 0], [1, 0, 0], [7, 3, 0], [40, 11, 0], [3, 2, 1]] {
            let kb = t.metric.planar(p);
            let xi = t.xi(p).unwrap();
            let y = t.y(p).unwrap();
            let (tx, ty) = (tab.eval(0, kb, p[2]), tab.eval(1, kb, p[2]));
            assert!((tx - xi).abs() <= 1e-6 * xi.abs().max(1e-3 * t.xi([0, 0, 0]).unwrap().abs()), "xi {p:?}: {tx} vs {xi}");
            assert!((ty - y).abs() <= 1e-6 * y.abs().max(1e-3), "Y {p:?}: {ty} vs {y}");
        }
    }
}
