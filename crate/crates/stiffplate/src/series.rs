//! Closed forms for the sums over `n >= 1` of
//! `cos(n t)/(n^2+k^2)^2`, `n sin(n t)/(n^2+k^2)^2` and `n^2 cos(n t)/(n^2+k^2)^2`.
//!
//! For `k > 1` the hyperbolic closed form is evaluated with every exponential
//! written as `exp(-k * nonnegative)`, so nothing overflows and no large
//! cosh values are subtracted. For `k <= 1` the hyperbolic form cancels badly
//! (its terms grow like `k^-4`), so the sums are split into the Bernoulli
//! polynomial sums of `1/n^4`, `1/n^6`, `1/n^8` plus a remainder that decays
//! like `n^-10` and is summed directly.

use std::f64::consts::PI;

const SERIES_SWITCH: f64 = 1.0;
const REMAINDER_TERMS: usize = 256;

#[derive(Debug, Clone, Copy)]
pub(crate) struct QuarticSums {
    k: f64,
}

impl QuarticSums {
    pub(crate) fn new(k: f64) -> Self {
        debug_assert!(k > 0.0);
        QuarticSums { k }
    }

    fn small(&self) -> bool {
        self.k <= SERIES_SWITCH
    }

    /// `sum cos(n t)/(n^2+k^2)^2` plus a constant that depends only on `k`.
    /// Differences at equal `k` are exact. `t` in `[0, 2 pi]`.
    pub(crate) fn even(&self, t: f64) -> f64 {
        let t = t.abs();
        if self.small() {
            self.series(t, 0)
        } else {
            let k = self.k;
            let h = Hyperbolic::new(k, t);
            PI / (4.0 * k * k) * (h.c / k + PI * h.coth * h.c - (PI - t) * h.s)
        }
    }

    /// The exact value of `sum cos(n t)/(n^2+k^2)^2`.
    #[cfg(test)]
    pub(crate) fn even_exact(&self, t: f64) -> f64 {
        if self.small() {
            self.even(t)
        } else {
            self.even(t) - 0.5 / self.k.powi(4)
        }
    }

    /// `sum n sin(n t)/(n^2+k^2)^2`, odd in `t`, `t` in `[-2 pi, 2 pi]`.
    pub(crate) fn odd(&self, t: f64) -> f64 {
        if t < 0.0 {
            return -self.odd(-t);
        }
        if self.small() {
            -self.series(t, 1)
        } else {
            let k = self.k;
            let h = Hyperbolic::new(k, t);
            -PI / (4.0 * k) * ((PI - t) * h.c - PI * h.coth * h.s)
        }
    }

    /// `sum n^2 cos(n t)/(n^2+k^2)^2`, even in `t`, `t` in `[-2 pi, 2 pi]`.
    pub(crate) fn second(&self, t: f64) -> f64 {
        let t = t.abs();
        if self.small() {
            -self.series(t, 2)
        } else {
            let k = self.k;
            let h = Hyperbolic::new(k, t);
            -PI / (4.0 * k) * (-h.c - k * (PI - t) * h.s + PI * k * h.coth * h.c)
        }
    }

    /// `d^order/dt^order` of `C4 - 2k^2 C6 + 3k^4 C8 - k^6 R`.
    fn series(&self, t: f64, order: u32) -> f64 {
        let k2 = self.k * self.k;
        let poly = bernoulli_cosine(4, t, order) - 2.0 * k2 * bernoulli_cosine(6, t, order)
            + 3.0 * k2 * k2 * bernoulli_cosine(8, t, order);
        let mut rem = 0.0;
        for n in (1..=REMAINDER_TERMS).rev() {
            let nf = n as f64;
            let n2 = nf * nf;
            let q = n2 + k2;
            let weight = (4.0 * n2 + 3.0 * k2) / (n2 * n2 * n2 * n2 * q * q);
            let arg = nf * t;
            rem += match order {
                0 => weight * arg.cos(),
                1 => -nf * weight * arg.sin(),
                _ => -n2 * weight * arg.cos(),
            };
        }
        poly - k2 * k2 * k2 * rem
    }
}

/// `cosh(k(pi-t))/sinh(k pi)`, `sinh(k(pi-t))/sinh(k pi)` and `coth(k pi)`.
struct Hyperbolic {
    c: f64,
    s: f64,
    coth: f64,
}

impl Hyperbolic {
    fn new(k: f64, t: f64) -> Self {
        let denom = -(-2.0 * k * PI).exp_m1();
        let near = (-k * t).exp();
        let far = (-k * (2.0 * PI - t)).exp();
        Hyperbolic {
            c: (near + far) / denom,
            s: (near - far) / denom,
            coth: (1.0 + (-2.0 * k * PI).exp()) / denom,
        }
    }
}

/// `d^order/dt^order` of `sum cos(n t)/n^p` for `p` in {4, 6, 8}, `t` in `[0, 2 pi]`.
pub(crate) fn bernoulli_cosine(p: u32, t: f64, order: u32) -> f64 {
    let x = t / (2.0 * PI);
    let tau = 2.0 * PI;
    // sum cos(n t)/n^p = scale * B_p(t / 2pi).
    let scale = match p {
        4 => -tau.powi(4) / 48.0,
        6 => tau.powi(6) / 1440.0,
        8 => -tau.powi(8) / 80640.0,
        _ => unreachable!("unsupported power"),
    };
    let mut falling = 1.0;
    for j in 0..order {
        falling *= (p - j) as f64;
    }
    scale * falling / tau.powi(order as i32) * bernoulli(p - order, x)
}

fn bernoulli(n: u32, x: f64) -> f64 {
    let coeffs: &[f64] = match n {
        2 => &[1.0 / 6.0, -1.0, 1.0],
        3 => &[0.0, 0.5, -1.5, 1.0],
        4 => &[-1.0 / 30.0, 0.0, 1.0, -2.0, 1.0],
        5 => &[0.0, -1.0 / 6.0, 0.0, 5.0 / 3.0, -2.5, 1.0],
        6 => &[1.0 / 42.0, 0.0, -0.5, 0.0, 2.5, -3.0, 1.0],
        7 => &[0.0, 1.0 / 6.0, 0.0, -7.0 / 6.0, 0.0, 3.5, -3.5, 1.0],
        8 => &[-1.0 / 30.0, 0.0, 2.0 / 3.0, 0.0, -7.0 / 3.0, 0.0, 14.0 / 3.0, -4.0, 1.0],
        _ => unreachable!("unsupported degree"),
    };
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(k: f64, t: f64, power: i32, sine: bool, terms: usize) -> f64 {
        let mut acc = 0.0;
        for n in (1..=terms).rev() {
            let nf = n as f64;
            let q = nf * nf + k * k;
            let trig = if sine { (nf * t).sin() } else { (nf * t).cos() };
            acc += nf.powi(power) * trig / (q * q);
        }
        acc
    }

    #[test]
    fn bernoulli_sums_match_direct_sums() {
        for &t in &[0.0, 0.3, 1.7, 3.0, 5.5, 2.0 * PI] {
            for &p in &[4u32, 6, 8] {
                let d: f64 = (1..200_000).rev().map(|n| (n as f64 * t).cos() / (n as f64).powi(p as i32)).sum();
                assert!((bernoulli_cosine(p, t, 0) - d).abs() < 1e-12, "p={p} t={t}");
            }
        }
    }

    #[test]
    fn both_branches_match_direct_sums() {
        let ks = [0.05, 0.4, 1.0, 1.0000001, 2.5, 9.0, 40.0];
        let ts = [0.0, 0.2, 1.1, PI, 4.0, 6.0];
        for &k in &ks {
            let q = QuarticSums::new(k);
            let shift = q.even_exact(0.0) - direct(k, 0.0, 0, false, 400_000);
            assert!(shift.abs() < 1e-10 * (1.0 + 1.0 / k.powi(4)), "k={k} shift={shift}");
            for &t in &ts {
                let e = direct(k, t, 0, false, 400_000);
                assert!((q.even_exact(t) - e).abs() <= 1e-10 * e.abs().max(1e-6), "even k={k} t={t}");
                let o = direct(k, t, 1, true, 400_000);
                assert!((q.odd(t) - o).abs() <= 1e-8 * o.abs().max(1e-4), "odd k={k} t={t}: {} vs {o}", q.odd(t));
            }
        }
    }

    #[test]
    fn second_moment_matches_direct_sum_away_from_kink() {
        // Terms decay like 1/n^2; compare with a long sum plus its tail estimate.
        for &k in &[0.3, 1.0, 3.0, 12.0] {
            let q = QuarticSums::new(k);
            for &t in &[0.5, 2.0, 3.5, 5.9] {
                let d = direct(k, t, 2, false, 2_000_000);
                assert!((q.second(t) - d).abs() < 1e-6, "k={k} t={t}: {} vs {d}", q.second(t));
            }
        }
    }

    #[test]
    fn odd_sum_is_odd_and_second_is_even() {
        let q = QuarticSums::new(0.7);
        assert_eq!(q.odd(-1.3), -q.odd(1.3));
        assert_eq!(q.second(-1.3), q.second(1.3));
        let r = QuarticSums::new(7.0);
        assert!(r.odd(0.0).abs() < 1e-15);
    }

    #[test]
    fn large_k_stays_finite() {
        let q = QuarticSums::new(2000.0);
        for &t in &[0.0, 1e-3, PI, 2.0 * PI] {
            assert!(q.even(t).is_finite() && q.odd(t).is_finite() && q.second(t).is_finite());
        }
    }
}
