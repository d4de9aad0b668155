//! Special functions not in libm, plus numerically safe small-argument forms.

use core::f64::consts::{FRAC_PI_2, PI};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

pub fn j0(x: f64) -> f64 {
    libm::j0(x)
}

pub fn j1(x: f64) -> f64 {
    libm::j1(x)
}

pub fn y0(x: f64) -> f64 {
    libm::y0(x)
}

pub fn y1(x: f64) -> f64 {
    libm::y1(x)
}

/// Modified Bessel K0 from K0(x) = ∫_0^∞ exp(-x cosh t) dt, trapezoid rule (spectrally accurate here).
pub fn k0(x: f64) -> f64 {
    assert!(x > 0.0, "k0 needs a positive argument");
    if x > 745.0 {
        return 0.0;
    }
    if x < 0.1 {
        return k0_series(x);
    }
    let h = 0.02;
    let mut acc = 0.5 * libm::exp(-x);
    let mut k = 1;
    loop {
        let t = h * k as f64;
        let e = x * libm::cosh(t);
        if e > 745.0 {
            break;
        }
        acc += libm::exp(-x * libm::cosh(t));
        k += 1;
    }
    acc * h
}

fn k0_series(x: f64) -> f64 {
    // K0 = -(ln(x/2) + γ) I0 + Σ (x²/4)^k / (k!)² H_k
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut i0 = 1.0;
    let mut tail = 0.0;
    let mut harmonic = 0.0;
    for k in 1..30 {
        let kf = k as f64;
        term *= q / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        tail += term * harmonic;
    }
    -(libm::log(0.5 * x) + EULER_GAMMA) * i0 + tail
}

/// Sine and cosine integrals (Si(x), Ci(x)) for x > 0.
pub fn si_ci(x: f64) -> (f64, f64) {
    let t = x.abs();
    if t == 0.0 {
        return (0.0, f64::NEG_INFINITY);
    }
    let (si, ci) = if t > 2.0 {
        // Lentz continued fraction for E1(i t)
        let fpmin = 1e-300;
        let mut b = (1.0, t);
        let mut c = (1.0 / fpmin, 0.0);
        let mut d = cinv(b);
        let mut h = d;
        for i in 2..200 {
            let a = -(((i - 1) * (i - 1)) as f64);
            b.0 += 2.0;
            d = cinv(cadd(cscale(d, a), b));
            c = cadd(b, cscale(cinv(c), a));
            let del = cmul(c, d);
            h = cmul(h, del);
            if (del.0 - 1.0).abs() + del.1.abs() < 1e-16 {
                break;
            }
        }
        let h = cmul((libm::cos(t), -libm::sin(t)), h);
        (FRAC_PI_2 + h.1, -h.0)
    } else {
        let mut sum = 0.0;
        let mut sums = 0.0;
        let mut sumc = 0.0;
        let mut sign = 1.0;
        let mut fact = 1.0;
        let mut odd = true;
        for k in 1..100 {
            fact *= t / k as f64;
            let term = fact / k as f64;
            sum += sign * term;
            let err = term / sum.abs();
            if odd {
                sign = -sign;
                sums = sum;
                sum = sumc;
            } else {
                sumc = sum;
                sum = sums;
            }
            if err < 1e-17 {
                break;
            }
            odd = !odd;
        }
        (sums, sumc + libm::log(t) + EULER_GAMMA)
    };
    if x < 0.0 {
        (-si, ci)
    } else {
        (si, ci)
    }
}

fn cadd(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 + b.0, a.1 + b.1)
}

fn cscale(a: (f64, f64), s: f64) -> (f64, f64) {
    (a.0 * s, a.1 * s)
}

fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn cinv(a: (f64, f64)) -> (f64, f64) {
    let n = a.0 * a.0 + a.1 * a.1;
    (a.0 / n, -a.1 / n)
}

/// sin(k r)/k, continuous at k = 0.
pub fn sin_over(k: f64, r: f64) -> f64 {
    let x = k * r;
    if x.abs() < 1e-4 {
        r * (1.0 - x * x / 6.0)
    } else {
        libm::sin(x) / k
    }
}

/// (sin x - x cos x)/x³, the radial profile of the unit-ball transform (value 1/3 at 0).
pub fn ball_profile(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0
    } else {
        (libm::sin(x) - x * libm::cos(x)) / (x * x * x)
    }
}

/// Fourier transform of the indicator of a 3D ball of radius `r` at wavenumber `k`.
pub fn ball_transform(r: f64, k: f64) -> f64 {
    4.0 * PI * r * r * r * ball_profile(k * r)
}

/// Fourier transform of the indicator of a disk of radius `r` at wavenumber `k`.
pub fn disk_transform(r: f64, k: f64) -> f64 {
    let x = k * r;
    if x.abs() < 1e-3 {
        PI * r * r * (1.0 - x * x / 8.0 + x * x * x * x / 192.0)
    } else {
        2.0 * PI * r * j1(x) / k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k0_reference_values() {
        // extended-precision reference values
        assert!((k0(1.0) - 0.421_024_438_240_708_3).abs() < 1e-15);
        assert!((k0(0.05) - 3.114_234_029_471_99).abs() < 1e-13);
        assert!((k0(10.0) / 1.778_006_231_616_765_2e-5 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn k0_branches_agree() {
        let a = k0_series(0.1);
        let mut acc = 0.5 * libm::exp(-0.1);
        for k in 1..2000 {
            acc += libm::exp(-0.1 * libm::cosh(0.02 * k as f64));
        }
        assert!((a - acc * 0.02).abs() < 1e-13);
    }

    #[test]
    fn sine_cosine_integrals() {
        let (si, ci) = si_ci(1.0);
        assert!((si - 0.946_083_070_367_183).abs() < 1e-15);
        assert!((ci - 0.337_403_922_900_968_1).abs() < 1e-15);
        let (si, ci) = si_ci(10.0);
        assert!((si - 1.658_347_594_218_874).abs() < 1e-14);
        assert!((ci + 0.045_456_433_004_455_4).abs() < 1e-15);
    }

    #[test]
    fn series_branches_are_continuous() {
        let a = ball_profile(0.999e-3);
        let b = ball_profile(1.001e-3);
        assert!((a - b).abs() < 1e-9);
        let k = 0.999e-3;
        let a = disk_transform(1.0, k);
        let b = 2.0 * PI * j1(k) / k;
        assert!((a - b).abs() < 1e-12);
    }
}
