//! Regularized lattice sums over `p ∈ 2πℤ³ \ {0}` with the anisotropic metric `|ℳ_d p|`.
//!
//! Summands used here depend on `p` only through `(|p̄|², |p₃|)`, so sums run over
//! [`LatticeKey`]s weighted by their multiplicity. Reductions are deterministic: fixed chunks of
//! keys are summed with compensation, then reduced pairwise in chunk order.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::numerics::quad::GaussRule;
use crate::numerics::special::{k0, si_ci, EULER_GAMMA};
use crate::numerics::sum::{pairwise, Neumaier};
use crate::scattering::SlabParams;
use crate::torus_fourier::{Field, LatticeVector, SpectralTables, Torus};

const CHUNK: usize = 4096;

/// Which evaluation produced a [`LatticeSumResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumMethod {
    /// Absolutely convergent rewriting, summed layer by layer.
    Accelerated,
    /// The accelerated summand summed over shells up to a cutoff, plus an integral tail.
    AcceleratedShells,
    /// Window-averaged cube partial sums of the conditionally convergent series.
    DirectCesaro,
    /// Plain truncated summation with a tail correction.
    Direct,
}

impl SumMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SumMethod::Accelerated => "accelerated",
            SumMethod::AcceleratedShells => "accelerated-shells",
            SumMethod::DirectCesaro => "direct-cesaro",
            SumMethod::Direct => "direct",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSumResult {
    pub value: f64,
    pub truncation_radius: f64,
    pub tail_estimate: f64,
    pub terms_summed: u64,
    pub method: SumMethod,
    /// `(radius or window index, partial value)`.
    pub diagnostics: Vec<(f64, f64)>,
    /// Size of the known finite-radius correction already folded into `value` (zero if none).
    pub model_error: f64,
    /// Smallest summand encountered, where the summand has a sign to check.
    pub min_term: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticeKey {
    pub nbar_sq: u64,
    pub n3: u64,
    pub multiplicity: u64,
}

impl LatticeKey {
    pub fn norm_sq(&self, d: f64) -> f64 {
        let c = self.n3 as f64 / d;
        4.0 * PI * PI * (self.nbar_sq as f64 + c * c)
    }

    pub fn planar(&self) -> f64 {
        2.0 * PI * libm::sqrt(self.nbar_sq as f64)
    }

    /// Some lattice vector with this key, `n₁ ≥ n₂ ≥ 0`, `n₃ ≥ 0`.
    pub fn representative(&self) -> LatticeVector {
        let m = libm::sqrt(self.nbar_sq as f64) as i64 + 1;
        for n1 in (0..=m).rev() {
            let rest = self.nbar_sq as i64 - n1 * n1;
            if rest < 0 {
                continue;
            }
            let n2 = libm::sqrt(rest as f64) as i64;
            for c in [n2, n2 + 1] {
                if c * c == rest && c <= n1 {
                    return [n1, c, self.n3 as i64];
                }
            }
        }
        [0, 0, self.n3 as i64]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeShell {
    pub norm: f64,
    pub vectors: Vec<LatticeVector>,
}

/// Number of representations of `n` as `n₁² + n₂²`, for `n ≤ max`.
pub fn sum_of_two_squares_counts(max: u64) -> Vec<u32> {
    let mut r2 = vec![0u32; max as usize + 1];
    let m = libm::sqrt(max as f64) as u64 + 1;
    for a in 0..=m {
        let a2 = a * a;
        if a2 > max {
            break;
        }
        for b in 0..=m {
            let n = a2 + b * b;
            if n > max {
                break;
            }
            let w = (if a > 0 { 2 } else { 1 }) * (if b > 0 { 2 } else { 1 });
            r2[n as usize] += w;
        }
    }
    r2
}

fn estimated_count(d: f64, radius: f64) -> f64 {
    let r = radius / (2.0 * PI);
    4.0 / 3.0 * PI * r * r * r * d + PI * r * r + 4.0 * r + 1.0
}

/// Cap on the number of stored keys, separate from the term budget (keys cost memory, terms cost time).
pub const MAX_KEYS: u64 = 1 << 25;

/// Keys of all `p ≠ 0` with `|ℳ_d p| ≤ radius`, ordered by `|ℳ_d p|`, then `|n₃|`, then `|n̄|²`.
pub fn lattice_keys(d: f64, radius: f64, budget: u64) -> Result<Vec<LatticeKey>> {
    lattice_keys_within(d, radius, f64::INFINITY, budget)
}

/// As [`lattice_keys`], restricted to planar norm `|p̄| ≤ planar_max`.
pub fn lattice_keys_within(d: f64, radius: f64, planar_max: f64, budget: u64) -> Result<Vec<LatticeKey>> {
    if !(d > 0.0) {
        return Err(invalid("d", "must be positive"));
    }
    if !(radius >= 2.0 * PI) {
        return Err(invalid("radius", format!("must be at least 2π, got {radius}")));
    }
    let r = radius / (2.0 * PI);
    let r_sq = r * r;
    let n3_max = libm::floor(r * d) as u64;
    let planar_sq = if planar_max.is_finite() {
        let q = planar_max / (2.0 * PI);
        (q * q).min(r_sq)
    } else {
        r_sq
    };
    let est = estimated_count(d, radius).min((2 * n3_max + 1) as f64 * (PI * planar_sq + 4.0 * libm::sqrt(planar_sq) + 1.0));
    if est > 1.5 * budget as f64 {
        return Err(Error::Budget {
            required: est as u64,
            budget,
        });
    }
    let nbar_max = libm::floor(planar_sq) as u64;
    let r2 = sum_of_two_squares_counts(nbar_max);
    let key_bound = (n3_max + 1) * r2.iter().filter(|&&c| c > 0).count() as u64;
    if key_bound > MAX_KEYS {
        return Err(Error::Budget {
            required: key_bound,
            budget: MAX_KEYS,
        });
    }
    let mut keys = Vec::new();
    let mut total: u64 = 0;
    for n3 in 0..=n3_max {
        let c = n3 as f64 / d;
        let rem = r_sq - c * c;
        if rem < 0.0 {
            break;
        }
        let top = (libm::floor(rem) as u64).min(nbar_max);
        for nb in 0..=top {
            if nb == 0 && n3 == 0 {
                continue;
            }
            let count = r2[nb as usize] as u64;
            if count == 0 {
                continue;
            }
            let mult = count * if n3 == 0 { 1 } else { 2 };
            total += mult;
            keys.push(LatticeKey {
                nbar_sq: nb,
                n3,
                multiplicity: mult,
            });
        }
    }
    if total > budget {
        return Err(Error::Budget { required: total, budget });
    }
    keys.sort_by(|a, b| {
        a.norm_sq(d)
            .partial_cmp(&b.norm_sq(d))
            .unwrap()
            .then(a.n3.cmp(&b.n3))
            .then(a.nbar_sq.cmp(&b.nbar_sq))
    });
    Ok(keys)
}

/// All lattice vectors `p ≠ 0` with `|ℳ_d p| ≤ radius`, grouped into shells of equal norm.
pub fn lattice_enumerate(d: f64, radius: f64, budget: u64) -> Result<Vec<LatticeShell>> {
    let keys = lattice_keys(d, radius, budget)?;
    let mut shells: Vec<LatticeShell> = Vec::new();
    for key in keys {
        let ns = key.norm_sq(d);
        let norm = libm::sqrt(ns);
        let mut vecs = Vec::with_capacity(key.multiplicity as usize);
        let m = libm::sqrt(key.nbar_sq as f64) as i64 + 1;
        for n1 in -m..=m {
            let rest = key.nbar_sq as i64 - n1 * n1;
            if rest < 0 {
                continue;
            }
            let s = libm::sqrt(rest as f64) as i64;
            let mut roots = Vec::new();
            for cand in [s - 1, s, s + 1] {
                if cand >= 0 && cand * cand == rest {
                    roots.push(cand);
                }
            }
            roots.dedup();
            for n2 in roots {
                let n2s: &[i64] = if n2 == 0 { &[0] } else { &[-n2, n2] };
                for &b in n2s {
                    if key.n3 == 0 {
                        vecs.push([n1, b, 0]);
                    } else {
                        vecs.push([n1, b, -(key.n3 as i64)]);
                        vecs.push([n1, b, key.n3 as i64]);
                    }
                }
            }
        }
        vecs.sort();
        match shells.last_mut() {
            Some(last) if last.norm * last.norm == ns || last.norm == norm => last.vectors.extend(vecs),
            _ => shells.push(LatticeShell { norm, vectors: vecs }),
        }
    }
    for s in &mut shells {
        s.vectors.sort();
    }
    Ok(shells)
}

/// Deterministic `Σ_keys multiplicity·f(key)` for `M` simultaneous sums.
pub fn reduce_keys<const M: usize, F>(keys: &[LatticeKey], f: F) -> [f64; M]
where
    F: Fn(&LatticeKey) -> [f64; M] + Sync,
{
    let chunk_sum = |chunk: &[LatticeKey]| -> [f64; M] {
        let mut acc = [Neumaier::default(); M];
        for k in chunk {
            let v = f(k);
            let m = k.multiplicity as f64;
            for i in 0..M {
                acc[i].add(m * v[i]);
            }
        }
        let mut out = [0.0; M];
        for i in 0..M {
            out[i] = acc[i].value();
        }
        out
    };
    #[cfg(feature = "parallel")]
    let partial: Vec<[f64; M]> = {
        use rayon::prelude::*;
        keys.par_chunks(CHUNK).map(chunk_sum).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let partial: Vec<[f64; M]> = keys.chunks(CHUNK).map(chunk_sum).collect();
    let mut out = [0.0; M];
    let mut col = Vec::with_capacity(partial.len());
    for (i, o) in out.iter_mut().enumerate() {
        col.clear();
        col.extend(partial.iter().map(|p| p[i]));
        *o = pairwise(&col);
    }
    out
}

/// Smooth planar partition of unity: `1` below `k0`, `0` above `2k0`, `C^∞` in between.
pub fn planar_window(k: f64, k0: f64) -> f64 {
    if k <= k0 {
        return 1.0;
    }
    if k >= 2.0 * k0 {
        return 0.0;
    }
    let t = (k - k0) / k0;
    let a = libm::exp(-1.0 / (1.0 - t));
    let b = libm::exp(-1.0 / t);
    a / (a + b)
}

/// Planar resolution of [`windowed_sum`]: window start and integration panel widths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarWindow {
    pub start: f64,
    /// Panel width on the `n₃ = 0` layer.
    pub width_plane: f64,
    /// Panel width on the other layers.
    pub width_layers: f64,
}

/// `Σ_{p≠0, |ℳ_d p| ≤ radius} f(|p̄|, n₃, |ℳ_d p|²)` where, in each `n₃` layer, the planar lattice sum
/// of `(1-χ) f` is replaced by its integral `∫ (1-χ) f k dk/2π` (`χ` = [`planar_window`]).
///
/// For summands that are smooth on the scale `window.start ≫ 2π` the replacement error is the
/// Poisson aliasing of `(1-χ) f`, which is negligible. Returns the sums and the evaluation count.
pub fn windowed_sum<const M: usize, F>(d: f64, radius: f64, window: &PlanarWindow, budget: u64, f: F) -> Result<([f64; M], u64)>
where
    F: Fn(f64, i64, f64) -> [f64; M] + Sync,
{
    let k0 = window.start;
    let keys = lattice_keys_within(d, radius, 2.0 * k0, budget)?;
    let direct = reduce_keys(&keys, |k| {
        let w = planar_window(k.planar(), k0);
        if w == 0.0 {
            return [0.0; M];
        }
        let mut v = f(k.planar(), k.n3 as i64, k.norm_sq(d));
        for x in v.iter_mut() {
            *x *= w;
        }
        v
    });
    let mut count: u64 = keys.iter().map(|k| k.multiplicity).sum();
    let n3_max = libm::floor(radius * d / (2.0 * PI)) as i64;
    let rule = GaussRule::new(16);
    let layer = |n3: i64| -> ([f64; M], u64) {
        let kz = 2.0 * PI * n3 as f64 / d;
        let kmax = libm::sqrt((radius * radius - kz * kz).max(0.0));
        let mut acc = [Neumaier::default(); M];
        let mut nodes = 0;
        if kmax <= k0 {
            return ([0.0; M], 0);
        }
        let width = if n3 == 0 { window.width_plane } else { window.width_layers };
        let panels = libm::ceil((kmax - k0) / width).max(1.0) as usize;
        let step = (kmax - k0) / panels as f64;
        let mult = if n3 == 0 { 1.0 } else { 2.0 };
        for i in 0..panels {
            let a = k0 + step * i as f64;
            for (k, w) in rule.mapped(a, a + step) {
                let c = 1.0 - planar_window(k, k0);
                if c == 0.0 {
                    continue;
                }
                let v = f(k, n3, k * k + kz * kz);
                let wt = mult * c * w * k / (2.0 * PI);
                for j in 0..M {
                    acc[j].add(wt * v[j]);
                }
                nodes += 1;
            }
        }
        let mut out = [0.0; M];
        for j in 0..M {
            out[j] = acc[j].value();
        }
        (out, nodes)
    };
    #[cfg(feature = "parallel")]
    let layers: Vec<([f64; M], u64)> = {
        use rayon::prelude::*;
        (0..=n3_max).into_par_iter().map(layer).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let layers: Vec<([f64; M], u64)> = (0..=n3_max).map(layer).collect();
    let mut out = [0.0; M];
    let mut col = Vec::with_capacity(layers.len() + 1);
    for (j, o) in out.iter_mut().enumerate() {
        col.clear();
        col.push(direct[j]);
        col.extend(layers.iter().map(|l| l.0[j]));
        *o = pairwise(&col);
    }
    count += layers.iter().map(|l| l.1).sum::<u64>();
    Ok((out, count))
}

/// Evaluation methods for the box correction `𝔢_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrakMethod {
    Accelerated,
    /// Shell summation of the accelerated summand up to `θ = theta_max`.
    AcceleratedShells { theta_max: f64 },
    /// Cube partial sums averaged over `M ∈ [M₀, 2M₀]`; `M₀ = ⌈50/d⌉` when `None`.
    Cesaro { m0: Option<u64> },
}

/// `ℓ_aux = min(1/4, 1/(10√d))`.
pub fn default_ell_aux(d: f64) -> f64 {
    (0.25f64).min(1.0 / (10.0 * libm::sqrt(d)))
}

/// Lattice constant of the unit square torus: `G(x̄) = -(1/2π) ln|x̄| + this + |x̄|²/4 + O(|x̄|⁴)`.
pub fn square_lattice_constant() -> f64 {
    let mut s = 0.0;
    for m in 1..40 {
        s += libm::log1p(-libm::exp(-2.0 * PI * m as f64));
    }
    1.0 / 12.0 - libm::log(2.0 * PI) / (2.0 * PI) - s / PI
}

/// `Φ(c) = ∫_c^∞ (sin t/t⁴ - cos t/t³) dt`.
pub fn layer_profile_integral(c: f64) -> f64 {
    if c > 200.0 {
        layer_profile_asymptotic(c)
    } else {
        layer_profile_closed(c)
    }
}

fn layer_profile_closed(c: f64) -> f64 {
    let (_, ci) = si_ci(c);
    let (s, co) = (libm::sin(c), libm::cos(c));
    (s / c - co / (c * c) + s / (c * c * c) - ci) / 3.0
}

fn layer_profile_asymptotic(c: f64) -> f64 {
    let (s, co) = (libm::sin(c), libm::cos(c));
    let c2 = c * c;
    let c3 = c2 * c;
    let c4 = c2 * c2;
    let c6 = c4 * c2;
    s / c3 * (1.0 - 8.0 / c2 + 240.0 / c4 - 13440.0 / c6 + 1_209_600.0 / (c4 * c4))
        + co / c4 * (-2.0 + 40.0 / c2 - 1680.0 / c4 + 120_960.0 / c6 - 13_305_600.0 / (c4 * c4))
}

/// `F(θ) = sin θ/θ⁵ - cos θ/θ⁴`.
fn ball_summand(t: f64) -> f64 {
    if t < 1e-2 {
        let t2 = t * t;
        (1.0 / 3.0 - t2 / 30.0 + t2 * t2 / 840.0) / t2
    } else {
        (libm::sin(t) - t * libm::cos(t)) / (t * t * t * t * t)
    }
}

/// Closed form of `𝔢_d` via the Kronecker limit of the layered lattice, used as an oracle.
pub fn frak_e_d_closed_form(a0: f64, d: f64) -> f64 {
    let mut corr = Neumaier::default();
    let cutoff = 700.0;
    let kmax = libm::ceil(cutoff * d / (2.0 * PI)) as u64 + 1;
    let r2 = sum_of_two_squares_counts(kmax * kmax);
    for n in 1.. {
        let base = 2.0 * PI * n as f64 / d;
        if base > cutoff {
            break;
        }
        for (j, &c) in r2.iter().enumerate().skip(1) {
            if c == 0 {
                continue;
            }
            let x = base * libm::sqrt(j as f64);
            if x > cutoff {
                break;
            }
            corr.add(c as f64 * k0(x));
        }
    }
    let h = square_lattice_constant() + (EULER_GAMMA - libm::log(2.0 * d)) / (2.0 * PI) + corr.value() / PI;
    -16.0 * PI * PI * a0 * a0 * h
}

pub fn frak_e_d(a0: f64, d: f64, ell_aux: Option<f64>, method: FrakMethod, budget: u64) -> Result<LatticeSumResult> {
    if !(a0 >= 0.0) {
        return Err(invalid("a0", "must be nonnegative"));
    }
    if !(d > 0.0 && d < 1.0) {
        return Err(invalid("d", format!("must lie in (0, 1), got {d}")));
    }
    let ell = ell_aux.unwrap_or_else(|| default_ell_aux(d));
    if !(ell > 0.0 && ell < 0.5) {
        return Err(invalid("ell_aux", format!("must lie in (0, 1/2), got {ell}")));
    }
    if a0 == 0.0 {
        return Ok(LatticeSumResult {
            value: 0.0,
            truncation_radius: f64::INFINITY,
            tail_estimate: 0.0,
            terms_summed: 0,
            method: match method {
                FrakMethod::Accelerated => SumMethod::Accelerated,
                FrakMethod::AcceleratedShells { .. } => SumMethod::AcceleratedShells,
                FrakMethod::Cesaro { .. } => SumMethod::DirectCesaro,
            },
            diagnostics: Vec::new(),
            model_error: 0.0,
            min_term: 0.0,
        });
    }
    match method {
        FrakMethod::Accelerated => Ok(frak_accelerated(a0, d, ell)),
        FrakMethod::AcceleratedShells { theta_max } => frak_shells(a0, d, ell, theta_max, budget),
        FrakMethod::Cesaro { m0 } => frak_cesaro(a0, d, m0.unwrap_or(libm::ceil(50.0 / d) as u64), budget),
    }
}

/// Accelerated sum plus Cesàro check; disagreement beyond the combined tolerance is an error.
pub fn frak_e_d_verified(a0: f64, d: f64, ell_aux: Option<f64>, budget: u64) -> Result<(LatticeSumResult, LatticeSumResult)> {
    let acc = frak_e_d(a0, d, ell_aux, FrakMethod::Accelerated, budget)?;
    let ces = frak_e_d(a0, d, ell_aux, FrakMethod::Cesaro { m0: None }, budget)?;
    let tol = acc.tail_estimate + ces.tail_estimate;
    if (acc.value - ces.value).abs() > tol {
        return Err(Error::Consistency(format!(
            "accelerated {} and Cesàro {} differ by {:e} > {:e}",
            acc.value,
            ces.value,
            (acc.value - ces.value).abs(),
            tol
        )));
    }
    Ok((acc, ces))
}

fn frak_accelerated(a0: f64, d: f64, ell: f64) -> LatticeSumResult {
    let r = d * ell;
    let a2 = a0 * a0;
    let s = 2.0 * PI * ell * d;
    let c1 = 2.0 * PI * ell;
    // planar layer: exact ball average of the 2D torus Green function
    let vol = 4.0 / 3.0 * PI * r * r * r;
    let s0 = -vol * (libm::log(2.0 * r) - 4.0 / 3.0) / (2.0 * PI) + square_lattice_constant() * vol + 2.0 * PI * (r * r * r * r * r) / 15.0;
    let planar = 12.0 * PI * a2 / (r * r * r) * s0;
    // off-plane layers by Poisson summation in n̄
    let layers: u64 = 200_000;
    let mut phi = Neumaier::default();
    let mut diag = Vec::new();
    for n in 1..=layers {
        phi.add(layer_profile_integral(c1 * n as f64));
        if n.is_power_of_two() && n >= 16 {
            diag.push((n as f64, phi.value()));
        }
    }
    let mut bessel = Neumaier::default();
    let cutoff = 700.0;
    let kmax = libm::ceil(cutoff * d / (2.0 * PI)) as u64 + 1;
    let r2 = sum_of_two_squares_counts(kmax * kmax);
    for n in 1.. {
        let base = 2.0 * PI * n as f64 / d;
        if base > cutoff {
            break;
        }
        for (j, &cnt) in r2.iter().enumerate().skip(1) {
            if cnt == 0 {
                continue;
            }
            let x = base * libm::sqrt(j as f64);
            if x > cutoff {
                break;
            }
            bessel.add(cnt as f64 * k0(x));
        }
    }
    let pref = 48.0 * PI * PI * a2 * r * r * 2.0 / (s * s);
    let off_plane = pref * (2.0 * PI * phi.value() + 2.0 * PI / 3.0 * bessel.value());
    let raw = 6.0 * PI * a2 / ell - planar - off_plane;
    let correction = 8.0 * PI * PI / 5.0 * a2 * r * r;
    let tail = pref * 2.0 * PI / (2.0 * (c1 * c1 * c1) * (layers * layers) as f64);
    let diagnostics = diag
        .into_iter()
        .map(|(n, p)| (c1 * n, 6.0 * PI * a2 / ell - planar - pref * (2.0 * PI * p + 2.0 * PI / 3.0 * bessel.value()) + correction))
        .collect();
    LatticeSumResult {
        value: raw + correction,
        truncation_radius: c1 * layers as f64 / r,
        tail_estimate: tail + 1e-13 * raw.abs(),
        terms_summed: layers,
        method: SumMethod::Accelerated,
        diagnostics,
        model_error: correction,
        min_term: f64::NAN,
    }
}

/// `∫_Θ^∞ (sin t/t³ - cos t/t²) dt`.
fn shell_tail(theta: f64) -> f64 {
    let (si, _) = si_ci(theta);
    libm::sin(theta) / (2.0 * theta * theta) - 0.5 * (libm::cos(theta) / theta - (PI / 2.0 - si))
}

fn frak_shells(a0: f64, d: f64, ell: f64, theta_max: f64, budget: u64) -> Result<LatticeSumResult> {
    let r = d * ell;
    let radius = theta_max / r;
    let keys = lattice_keys(d, radius, budget)?;
    let [sum] = reduce_keys(&keys, |k| [ball_summand(r * libm::sqrt(k.norm_sq(d)))]);
    let s = 2.0 * PI * ell * d;
    let c = 2.0 * PI * ell;
    let density = 1.0 / (s * s * c);
    let tail = density * 4.0 * PI * shell_tail(theta_max);
    let pref = 48.0 * PI * PI * a0 * a0 * r * r;
    let correction = 8.0 * PI * PI / 5.0 * a0 * a0 * r * r;
    let value = 6.0 * PI * a0 * a0 / ell - pref * (sum + tail) + correction;
    // lattice-point fluctuation at a sharp cutoff: ~ surface count^(1/2) times the summand there
    let surface = 4.0 * PI * theta_max * theta_max * density;
    let tail_est = pref * (libm::sqrt(surface) / (theta_max * theta_max * theta_max * theta_max) + tail.abs() * 0.1);
    Ok(LatticeSumResult {
        value,
        truncation_radius: radius,
        tail_estimate: tail_est,
        terms_summed: keys.iter().map(|k| k.multiplicity).sum(),
        method: SumMethod::AcceleratedShells,
        diagnostics: vec![(radius, value)],
        model_error: correction,
        min_term: f64::NAN,
    })
}

fn frak_cesaro(a0: f64, d: f64, m0: u64, budget: u64) -> Result<LatticeSumResult> {
    let mmax = 2 * m0;
    let required = 4 * m0 * m0 * m0;
    if required > budget {
        return Err(Error::Budget { required, budget });
    }
    let d2 = d * d;
    let row = |n1: u64| -> Vec<f64> {
        let mut acc = vec![Neumaier::default(); mmax as usize + 1];
        for n2 in 0..=n1 {
            let w12 = (if n1 > 0 { 2.0 } else { 1.0 }) * (if n2 > 0 { 2.0 } else { 1.0 }) * (if n1 != n2 { 2.0 } else { 1.0 });
            let planar = (n1 * n1 + n2 * n2) as f64;
            for n3 in 0..=mmax {
                if n1 == 0 && n3 == 0 {
                    continue;
                }
                let q = d2 * planar + (n3 * n3) as f64;
                let term = libm::cos(libm::sqrt(q)) * d2 / q;
                let w = w12 * if n3 > 0 { 2.0 } else { 1.0 };
                acc[n1.max(n3) as usize].add(w * term);
            }
        }
        acc.iter().map(|a| a.value()).collect()
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..=mmax).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<f64>> = (0..=mmax).map(row).collect();
    let mut shells = vec![0.0; mmax as usize + 1];
    for (m, sh) in shells.iter_mut().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r[m]).collect();
        *sh = pairwise(&col);
    }
    let mut partial = Vec::with_capacity(mmax as usize + 1);
    let mut run = Neumaier::default();
    for sh in &shells {
        run.add(*sh);
        partial.push(2.0 * a0 * a0 * d2 - 4.0 * a0 * a0 * run.value());
    }
    let window = &partial[m0 as usize..=mmax as usize];
    let mean = |xs: &[f64]| xs.iter().copied().collect::<Neumaier>().value() / xs.len() as f64;
    let avg = mean(window);
    let half = window.len() / 2;
    let gap = (mean(&window[..half]) - mean(&window[half..])).abs();
    let model = 32.0 * a0 * a0 / (d2 * (m0 * m0) as f64);
    let diagnostics = (m0..=mmax).step_by(((m0 / 16).max(1)) as usize).map(|m| (m as f64, partial[m as usize])).collect();
    Ok(LatticeSumResult {
        value: avg,
        truncation_radius: 2.0 * PI * mmax as f64,
        tail_estimate: 2.0 * gap + model,
        terms_summed: (2 * mmax + 1).pow(3) - 1,
        method: SumMethod::DirectCesaro,
        diagnostics,
        model_error: 0.0,
        min_term: f64::NAN,
    })
}

/// `e_p` in rationalized form, with `x = |ℳ_d p|²` and `A = 8π a0`.
pub fn bogoliubov_term(x: f64, a: f64) -> f64 {
    let s = libm::sqrt(x * x + 2.0 * a * x);
    a * a * (2.0 * a * x / (s + x) + a) / (2.0 * x * (s + x + a))
}

/// `(1/4π) ∫_0^∞ e(c² + t) dt`: a full off-plane layer in the continuum limit.
fn bog_layer_integral(c: f64, a: f64, rule: &GaussRule) -> f64 {
    let x0 = c * c;
    let mut acc = Neumaier::default();
    for k in 0..4 {
        let lo = k as f64 / 4.0;
        for (s, w) in rule.mapped(lo, lo + 0.25) {
            if s == 0.0 {
                continue;
            }
            acc.add(w * bogoliubov_term(x0 / s, a) * x0 / (s * s));
        }
    }
    acc.value() / (4.0 * PI)
}

/// `E_Bog = ½ Σ_{p≠0} e_p` over the full lattice, direct inside `radius` with continuum tails.
pub fn e_bog_d(a0: f64, d: f64, radius: f64) -> Result<LatticeSumResult> {
    if !(a0 >= 0.0) {
        return Err(invalid("a0", "must be nonnegative"));
    }
    if !(d > 0.0 && d < 1.0) {
        return Err(invalid("d", format!("must lie in (0, 1), got {d}")));
    }
    if a0 == 0.0 {
        return Ok(LatticeSumResult {
            value: 0.0,
            truncation_radius: radius,
            tail_estimate: 0.0,
            terms_summed: 0,
            method: SumMethod::Direct,
            diagnostics: Vec::new(),
            model_error: 0.0,
            min_term: 0.0,
        });
    }
    let a = 8.0 * PI * a0;
    let c_direct = 40.0f64;
    if !(radius >= 2.0 * c_direct) {
        return Err(invalid("radius", format!("must be at least {}", 2.0 * c_direct)));
    }
    let rule = GaussRule::new(32);
    let layer_step = 2.0 * PI / d;
    let direct_layers = libm::ceil(c_direct / layer_step) as u64;
    let r_sq = radius * radius;
    let tail_per_layer = (a * a * a / (4.0 * r_sq) - 5.0 * a * a * a * a / (32.0 * r_sq * r_sq)) / (2.0 * PI);
    let mut total = Neumaier::default();
    let mut min_term = f64::INFINITY;
    let mut terms: u64 = 0;
    let nb_max = libm::floor(radius / (2.0 * PI)) as i64;
    for n3 in 0..direct_layers {
        let c = layer_step * n3 as f64;
        let mult = if n3 == 0 { 1.0 } else { 2.0 };
        let k_sq = r_sq - c * c;
        let mut layer = Neumaier::default();
        for n1 in 0..=nb_max {
            for n2 in 0..=n1 {
                if n1 == 0 && n3 == 0 {
                    continue;
                }
                let pb = 4.0 * PI * PI * (n1 * n1 + n2 * n2) as f64;
                if pb > k_sq {
                    break;
                }
                let w = (if n1 > 0 { 2.0 } else { 1.0 }) * (if n2 > 0 { 2.0 } else { 1.0 }) * (if n1 != n2 { 2.0 } else { 1.0 });
                let e = bogoliubov_term(pb + c * c, a);
                min_term = min_term.min(e);
                terms += w as u64 * mult as u64;
                layer.add(w * e);
            }
        }
        layer.add(tail_per_layer);
        total.add(mult * layer.value());
    }
    let int_layers: u64 = 4000;
    let mut integrals = Neumaier::default();
    for n3 in direct_layers..direct_layers + int_layers {
        integrals.add(2.0 * bog_layer_integral(layer_step * n3 as f64, a, &rule));
    }
    total.add(integrals.value());
    // asymptotic layers: (1/2π)[A³/(4c²) - 5A⁴/(32c⁴)]
    let m = (direct_layers + int_layers - 1) as f64;
    let inv2 = 1.0 / m - 0.5 / (m * m) + 1.0 / (6.0 * m * m * m);
    let inv4 = 1.0 / (3.0 * m * m * m) - 0.5 / (m * m * m * m);
    let l2 = layer_step * layer_step;
    let asym = 2.0 / (2.0 * PI) * (a * a * a / (4.0 * l2) * inv2 - 5.0 * (a * a * a * a) / (32.0 * l2 * l2) * inv4);
    total.add(asym);
    let value = 0.5 * total.value();
    let tail_estimate = 0.5 * (direct_layers as f64 * 2.0 * tail_per_layer.abs() * a / r_sq + asym.abs() * a / (l2 * m * m));
    Ok(LatticeSumResult {
        value,
        truncation_radius: radius,
        tail_estimate,
        terms_summed: terms,
        method: SumMethod::Direct,
        diagnostics: vec![(radius, value)],
        model_error: 0.0,
        min_term,
    })
}

/// Channels of the Region-III constant `𝒞_N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnParts {
    pub w_xi: f64,
    pub y_xi: f64,
    pub d_xi: f64,
    pub y_k: f64,
    pub d_k: f64,
    pub q_k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnBreakdown {
    pub w0: f64,
    pub sum_w_eta: f64,
    pub sum_quasi2d: f64,
    pub sum_coupling: f64,
    pub total: f64,
    pub parts: CnParts,
}

impl CnBreakdown {
    pub fn assemble(w0: f64, sum_w_eta: f64, parts: CnParts) -> Self {
        let sum_quasi2d = parts.w_xi + parts.y_xi + parts.d_xi;
        let sum_coupling = 2.0 * parts.y_k + parts.d_k + parts.q_k;
        CnBreakdown {
            w0,
            sum_w_eta,
            sum_quasi2d,
            sum_coupling,
            total: w0 + sum_w_eta + sum_quasi2d + sum_coupling,
            parts,
        }
    }

    pub fn zero() -> Self {
        Self::assemble(
            0.0,
            0.0,
            CnParts {
                w_xi: 0.0,
                y_xi: 0.0,
                d_xi: 0.0,
                y_k: 0.0,
                d_k: 0.0,
                q_k: 0.0,
            },
        )
    }
}

/// `𝒞_N` with every quadratic sum evaluated by Parseval in position space.
pub fn c_n(torus: &Torus<'_>) -> Result<CnBreakdown> {
    if torus.sol.sol3d.is_free() {
        return Ok(CnBreakdown::zero());
    }
    let ps = |a: Field, b: Field| torus.parseval_pair_sum(a, b);
    let parts = CnParts {
        w_xi: ps(Field::W, Field::Xi)?,
        y_xi: ps(Field::Y, Field::Xi)?,
        d_xi: ps(Field::D, Field::Xi)?,
        y_k: ps(Field::Y, Field::K)?,
        d_k: ps(Field::D, Field::K)?,
        q_k: ps(Field::Q, Field::K)?,
    };
    Ok(CnBreakdown::assemble(torus.w([0, 0, 0])?, ps(Field::W, Field::Eta)?, parts))
}

/// Fields needed by [`c_n_momentum`], in table order.
pub const CN_FIELDS: [Field; 7] = [Field::W, Field::Eta, Field::Xi, Field::Y, Field::D, Field::K, Field::Q];

/// `𝒞_N` with each sum truncated to `|ℳ_d p| ≤ radius` in momentum space.
pub fn c_n_momentum(torus: &Torus<'_>, tables: &SpectralTables, radius: f64, budget: u64) -> Result<CnBreakdown> {
    let idx = |f: Field| {
        tables
            .fields
            .iter()
            .position(|g| *g == f)
            .ok_or_else(|| Error::Consistency(format!("coefficient table lacks {}", f.name())))
    };
    let [iw, ie, ix, iy, id, ik, iq] = [
        idx(Field::W)?,
        idx(Field::Eta)?,
        idx(Field::Xi)?,
        idx(Field::Y)?,
        idx(Field::D)?,
        idx(Field::K)?,
        idx(Field::Q)?,
    ];
    let d = torus.sol.params.d;
    let keys = lattice_keys(d, radius, budget)?;
    let sums = reduce_keys(&keys, |k| {
        let kb = k.planar();
        let n3 = k.n3 as i64;
        let e = |i| tables.eval(i, kb, n3);
        let (w, eta, xi, y, dd, kk, q) = (e(iw), e(ie), e(ix), e(iy), e(id), e(ik), e(iq));
        [w * eta, w * xi, y * xi, dd * xi, y * kk, dd * kk, q * kk]
    });
    let parts = CnParts {
        w_xi: sums[1],
        y_xi: sums[2],
        d_xi: sums[3],
        y_k: sums[4],
        d_k: sums[5],
        q_k: sums[6],
    };
    Ok(CnBreakdown::assemble(torus.w([0, 0, 0])?, sums[0], parts))
}

/// Second-order sum of the Region-III energy.
#[derive(Debug, Clone, PartialEq)]
pub struct InSum {
    pub result: LatticeSumResult,
    /// `N(N-1)(𝒞_N - 4πg)`.
    pub head: f64,
    /// The momentum sum with the radicand `F̃² - 4N²(q+Y)` (unsquared), when it stays real.
    pub unsquared: Option<f64>,
}

impl PlanarWindow {
    /// Default resolution for a parameter point: window at `|p̄| = 2π·64`, panels resolving the
    /// disk scales `dℓ` and `h`.
    pub fn for_params(params: &SlabParams) -> Self {
        PlanarWindow {
            start: 2.0 * PI * 64.0,
            width_plane: PI / params.h.max(params.dl()),
            width_layers: PI / params.dl(),
        }
    }

    /// No window: every term is summed on the lattice.
    pub fn none() -> Self {
        PlanarWindow {
            start: f64::INFINITY,
            width_plane: 1.0,
            width_layers: 1.0,
        }
    }
}

/// `𝓘_N = N(N-1)(𝒞_N - 4πg) + ½ Σ_{p≠0} (-F̃_p + √(F̃_p² - G̃_p²))`, summed over `|ℳ_d p| ≤ radius`
/// plus a fitted `|ℳ_d p|⁻²`-decay tail.
pub fn i_n_sum(
    params: &SlabParams,
    c_n: f64,
    g: f64,
    tables: &SpectralTables,
    radius: f64,
    window: &PlanarWindow,
    budget: u64,
) -> Result<InSum> {
    let iq = tables.fields.iter().position(|f| *f == Field::Q);
    let iy = tables.fields.iter().position(|f| *f == Field::Y);
    let (iq, iy) = match (iq, iy) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Consistency(String::from("coefficient table needs q and Y"))),
    };
    let n = params.n as f64;
    let d = params.d;
    let head = n * (n - 1.0) * (c_n - 4.0 * PI * g);
    let split = radius * 0.5;
    let split_sq = split * split;
    let band_sq = 0.81 * radius * radius;
    let qy = |kb: f64, n3: i64| tables.eval(iq, kb, n3) + tables.eval(iy, kb, n3);
    let (sums, terms) = windowed_sum(d, radius, window, budget, |kb, n3, x| {
        let qy = qy(kb, n3);
        let f = x + 2.0 * n * c_n;
        let gt = 2.0 * n * qy;
        if gt.abs() >= f {
            return [0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        }
        let root = libm::sqrt((f - gt) * (f + gt));
        let term = -0.5 * gt * gt / (f + root);
        let rad_u = f * f - 4.0 * n * n * qy;
        let unsq = if rad_u >= 0.0 { 0.5 * (libm::sqrt(rad_u) - f) } else { f64::NAN };
        let inner = if x <= split_sq { term } else { 0.0 };
        // decay fit on the outer band: (q+Y)²|ℳp|⁴
        let (band, band_n) = if x > band_sq { (qy * qy * x * x, 1.0) } else { (0.0, 0.0) };
        [term, inner, unsq, band, band_n, 0.0]
    })?;
    if sums[5] > 0.0 {
        return Err(first_violation(d, radius, window, budget, |kb, n3, x| {
            let f = x + 2.0 * n * c_n;
            (f, 2.0 * n * qy(kb, n3))
        }));
    }
    let c_sq = if sums[4] > 0.0 { sums[3] / sums[4] } else { 0.0 };
    let tail = |k: f64| -n * n * c_sq * d / (6.0 * PI * PI * k * k * k);
    let value_full = sums[0] + tail(radius);
    let value_half = sums[1] + tail(split);
    let result = LatticeSumResult {
        value: head + value_full,
        truncation_radius: radius,
        tail_estimate: tail(radius).abs() + 0.1 * (value_full - value_half).abs(),
        terms_summed: terms,
        method: SumMethod::Direct,
        diagnostics: vec![(split, head + value_half), (radius, head + value_full)],
        model_error: 0.0,
        min_term: f64::NAN,
    };
    let unsquared = if sums[2].is_finite() { Some(head + sums[2]) } else { None };
    Ok(InSum { result, head, unsquared })
}

/// Locates a point with `|G| ≥ F` for the error report (lattice part first, then the planar
/// integration region, reported at the nearest lattice vector).
fn first_violation<F>(d: f64, radius: f64, window: &PlanarWindow, budget: u64, fg: F) -> Error
where
    F: Fn(f64, i64, f64) -> (f64, f64),
{
    if let Ok(keys) = lattice_keys_within(d, radius, 2.0 * window.start, budget) {
        for k in &keys {
            let (f, g) = fg(k.planar(), k.n3 as i64, k.norm_sq(d));
            if g.abs() >= f {
                return Error::WellDefinedness { p: k.representative(), f, g };
            }
        }
    }
    let n3_max = libm::floor(radius * d / (2.0 * PI)) as i64;
    for n3 in 0..=n3_max {
        let kz = 2.0 * PI * n3 as f64 / d;
        let kmax = libm::sqrt((radius * radius - kz * kz).max(0.0));
        let mut n1 = libm::ceil(window.start / (2.0 * PI)) as i64;
        while 2.0 * PI * n1 as f64 <= kmax {
            let kb = 2.0 * PI * n1 as f64;
            let (f, g) = fg(kb, n3, kb * kb + kz * kz);
            if g.abs() >= f {
                return Error::WellDefinedness { p: [n1, 0, n3], f, g };
            }
            n1 += 1;
        }
    }
    Error::Consistency(String::from("|G| >= F flagged inside the planar integral between lattice points"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_examples() {
        let s = lattice_enumerate(1.0, 2.0 * PI * 1.5, 1_000_000).unwrap();
        assert_eq!(s[0].vectors.len(), 6);
        let total: usize = s.iter().map(|x| x.vectors.len()).sum();
        assert_eq!(total, 6 + 12);
        let s = lattice_enumerate(0.1, 2.0 * PI * 1.5, 1_000_000).unwrap();
        let total: usize = s.iter().map(|x| x.vectors.len()).sum();
        assert_eq!(s[0].vectors.len(), 4);
        assert_eq!(total, 8);
        assert!(s.iter().all(|x| x.vectors.iter().all(|v| v[2] == 0)));
    }

    #[test]
    fn enumeration_budget() {
        match lattice_keys(0.5, 2.0 * PI * 100.0, 1000) {
            Err(Error::Budget { required, budget }) => assert!(required > budget),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn key_multiplicities_match_brute_force() {
        let d = 0.37;
        let r = 2.0 * PI * 6.3;
        let keys = lattice_keys(d, r, 10_000_000).unwrap();
        let total: u64 = keys.iter().map(|k| k.multiplicity).sum();
        let mut brute = 0u64;
        for a in -7i64..=7 {
            for b in -7i64..=7 {
                for c in -3i64..=3 {
                    let n = 4.0 * PI * PI * ((a * a + b * b) as f64 + (c * c) as f64 / (d * d));
                    if (a, b, c) != (0, 0, 0) && n <= r * r {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(total, brute);
    }

    #[test]
    fn layer_profile_branches_agree() {
        for c in [200.0, 203.7, 350.0] {
            let a = layer_profile_closed(c);
            let b = layer_profile_asymptotic(c);
            assert!((a - b).abs() < 1e-9 * a.abs(), "c={c}: {a} vs {b}");
        }
        // extended-precision reference
        assert!((layer_profile_integral(60.0) + 1.261_879_994_503_822_5e-6).abs() < 1e-17);
    }

    #[test]
    fn accelerated_matches_closed_form() {
        for d in [0.3, 0.1, 1e-2, 1e-3] {
            let acc = frak_e_d(1.0, d, None, FrakMethod::Accelerated, 1 << 30).unwrap();
            let cf = frak_e_d_closed_form(1.0, d);
            assert!((acc.value - cf).abs() < 1e-9 * cf.abs(), "d={d}: {} vs {cf}", acc.value);
        }
    }

    #[test]
    fn zero_scattering_length_gives_zero() {
        assert_eq!(frak_e_d(0.0, 0.1, None, FrakMethod::Accelerated, 1).unwrap().value, 0.0);
        assert_eq!(e_bog_d(0.0, 0.1, 1000.0).unwrap().value, 0.0);
    }

    #[test]
    fn shells_agree_with_layers() {
        let d = 0.3;
        let acc = frak_e_d(1.0, d, Some(0.25), FrakMethod::Accelerated, 1 << 30).unwrap();
        let sh = frak_e_d(1.0, d, Some(0.25), FrakMethod::AcceleratedShells { theta_max: 60.0 }, 1 << 30).unwrap();
        assert!((acc.value - sh.value).abs() < sh.tail_estimate.max(1e-3 * acc.value.abs()), "{} vs {} ± {}", acc.value, sh.value, sh.tail_estimate);
    }

    #[test]
    fn bogoliubov_term_matches_naive_form() {
        let a = 8.0 * PI;
        for x in [4.0 * PI * PI, 100.0, 1e3] {
            let naive = -x - a + libm::sqrt(x * x + 2.0 * a * x) + a * a / (2.0 * x);
            assert!((bogoliubov_term(x, a) - naive).abs() < 1e-10 * naive.abs());
        }
    }

    #[test]
    fn bog_layer_integral_matches_lattice_for_wide_layers() {
        let a = 8.0 * PI;
        let rule = GaussRule::new(32);
        let c = 45.0;
        let mut direct = Neumaier::default();
        for n1 in -400i64..=400 {
            for n2 in -400i64..=400 {
                direct.add(bogoliubov_term(4.0 * PI * PI * (n1 * n1 + n2 * n2) as f64 + c * c, a));
            }
        }
        let pb = 2.0 * PI * 400.0;
        let k2 = pb * pb + c * c;
        // the square cut at 400 is wider than the disk; add the continuum tail of the disk only approximately
        let tail = (a * a * a / (4.0 * k2)) / (2.0 * PI);
        let int = bog_layer_integral(c, a, &rule);
        assert!((direct.value() + 0.8 * tail - int).abs() < 0.5 * tail + 1e-12 * int, "{} vs {int}", direct.value());
    }

    #[test]
    fn reduction_is_order_stable() {
        let keys = lattice_keys(0.2, 2.0 * PI * 30.0, 10_000_000).unwrap();
        let a = reduce_keys(&keys, |k| [1.0 / k.norm_sq(0.2)]);
        let b = reduce_keys(&keys, |k| [1.0 / k.norm_sq(0.2)]);
        assert_eq!(a[0].to_bits(), b[0].to_bits());
    }
}
