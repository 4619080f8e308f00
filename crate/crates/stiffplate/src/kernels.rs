//! Closed-form interface kernels and the truncated direct sums they replace.
//!
//! Every kernel reduces to the pair sum
//! `Pi(u, v) = sum_n 2 sin(n pi u/L) sin(n pi v/L) / (n^2/L^2 + kappa^2)^2`
//! where `L` is the edge crossed by the stiffeners and `kappa` is the
//! harmonic wavenumber along them divided by `pi`. With `k = kappa L`,
//! `Pi = L^4 [E(pi|u-v|/L) - E(pi(u+v)/L)]` and `E` is the cosine sum of
//! [`crate::series`].

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::model::{Axis, PlateSpec, Stiffener};
use crate::series::QuarticSums;

/// Spectral weight of the point-load Green's function,
/// `4 / (pi^4 a b D (m^2/b^2 + r^2/a^2)^2)`.
pub fn navier_coefficient(m: usize, r: usize, plate: &PlateSpec) -> f64 {
    let q = spectral_q(m, r, plate);
    4.0 / (PI.powi(4) * plate.a * plate.b * plate.d * q)
}

/// `(m^2/b^2 + r^2/a^2)^2`.
pub fn spectral_q(m: usize, r: usize, plate: &PlateSpec) -> f64 {
    let t = (m as f64 / plate.b).powi(2) + (r as f64 / plate.a).powi(2);
    t * t
}

/// Truncated sum `sum_{n=1}^{n_terms} 2 sin(n pi x_j/b) sin(n pi x_i/b) / (n^2/b^2 + r^2/a^2)^2`,
/// with exact argument reduction and compensated summation.
pub fn direct_sum_oracle(x_j: f64, x_i: f64, r: usize, plate: &PlateSpec, n_terms: usize) -> f64 {
    let kappa2 = (r as f64 / plate.a).powi(2);
    let b2 = plate.b * plate.b;
    let (fj, fi) = (x_j / plate.b, x_i / plate.b);
    compensated_sum(n_terms, |n| {
        let q = n * n / b2 + kappa2;
        2.0 * reduced_sin(n, fj) * reduced_sin(n, fi) / (q * q)
    })
}

/// `n f` modulo 2, keeping the rounding error of the product.
fn reduced_angle(n: f64, f: f64) -> f64 {
    let p = n * f;
    p.rem_euclid(2.0) + n.mul_add(f, -p)
}

/// `sin(n pi f)` for large `n` without the error of forming `n f`.
pub fn reduced_sin(n: f64, f: f64) -> f64 {
    (PI * reduced_angle(n, f)).sin()
}

/// `cos(n pi f)`, as [`reduced_sin`].
pub fn reduced_cos(n: f64, f: f64) -> f64 {
    (PI * reduced_angle(n, f)).cos()
}

/// Kahan sum of `term(n)` for `n = n_terms, ..., 1`.
pub fn compensated_sum(n_terms: usize, term: impl Fn(f64) -> f64) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for n in (1..=n_terms).rev() {
        let y = term(n as f64) - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Pair sums over the harmonics across an edge of length `span`.
#[derive(Debug, Clone, Copy)]
pub struct PairSums {
    span: f64,
    sums: QuarticSums,
}

impl PairSums {
    pub fn new(span: f64, kappa: f64) -> Self {
        PairSums { span, sums: QuarticSums::new(kappa * span) }
    }

    /// Sums across the plate for stiffeners of `axis`, harmonic `r` along them.
    pub fn for_axis(plate: &PlateSpec, axis: Axis, r: usize) -> Self {
        match axis {
            Axis::EtaAligned => Self::new(plate.b, r as f64 / plate.a),
            Axis::XiAligned => Self::new(plate.a, r as f64 / plate.b),
        }
    }

    fn angle(&self, u: f64) -> f64 {
        PI * u / self.span
    }

    fn scale(&self) -> f64 {
        self.span.powi(4)
    }

    /// `sum 2 sin(n pi u/L) sin(n pi v/L) / q_n^2`.
    pub fn sin_sin(&self, u: f64, v: f64) -> f64 {
        let (tu, tv) = (self.angle(u), self.angle(v));
        self.scale() * (self.sums.even((tu - tv).abs()) - self.sums.even(tu + tv))
    }

    /// `sum n sin(n pi u/L) cos(n pi v/L) / q_n^2`.
    pub fn n_sin_cos(&self, u: f64, v: f64) -> f64 {
        let (tu, tv) = (self.angle(u), self.angle(v));
        0.5 * self.scale() * (self.sums.odd(tu + tv) + self.sums.odd(tu - tv))
    }

    /// `sum n^2 cos(n pi u/L) cos(n pi v/L) / q_n^2`.
    pub fn n2_cos_cos(&self, u: f64, v: f64) -> f64 {
        let (tu, tv) = (self.angle(u), self.angle(v));
        0.5 * self.scale() * (self.sums.second(tu - tv) + self.sums.second(tu + tv))
    }
}

/// Rigidity-free kernel between stiffeners `j` and `i` of one axis for
/// harmonic `r` along them: `(r^4 / (l^4 L D)) Pi(x_j, x_i)` where `l` is
/// the stiffener length and `L` the crossed edge.
pub fn geometric_coupling(j: usize, i: usize, r: usize, stiffeners: &[Stiffener], plate: &PlateSpec) -> f64 {
    let (sj, si) = (&stiffeners[j], &stiffeners[i]);
    debug_assert_eq!(sj.axis, si.axis);
    let sums = PairSums::for_axis(plate, sj.axis, r);
    coupling_prefactor(plate, sj.axis, r) * sums.sin_sin(sj.position, si.position)
}

/// `r^4 / (l^4 L D)` with `l` the stiffener length and `L` the crossed edge.
pub fn coupling_prefactor(plate: &PlateSpec, axis: Axis, r: usize) -> f64 {
    let (length, span) = match axis {
        Axis::EtaAligned => (plate.a, plate.b),
        Axis::XiAligned => (plate.b, plate.a),
    };
    (r as f64).powi(4) / (length.powi(4) * span * plate.d)
}

/// Interface kernel `B_jir = EI_j * S_jir`: deflection of stiffener `j`
/// per unit interface force spectrum on stiffener `i`, harmonic `r`.
pub fn stiffener_coupling(j: usize, i: usize, r: usize, stiffeners: &[Stiffener], plate: &PlateSpec) -> f64 {
    stiffeners[j].ei * geometric_coupling(j, i, r, stiffeners, plate)
}

/// Field kernel for an eta-aligned stiffener `j` under the load
/// `P sin(g pi xi/b) sin(h pi eta/a)`:
/// `(h^4 P sin(h pi eta/a) EI_j / (a^4 b D)) Pi(x_j, xi)`.
pub fn field_coupling(
    j: usize,
    h: usize,
    xi: f64,
    eta: f64,
    p_gh: f64,
    stiffeners: &[Stiffener],
    plate: &PlateSpec,
) -> f64 {
    let s = &stiffeners[j];
    let sums = PairSums::for_axis(plate, Axis::EtaAligned, h);
    let along = (h as f64 * PI * eta / plate.a).sin();
    coupling_prefactor(plate, Axis::EtaAligned, h) * p_gh * along * s.ei * sums.sin_sin(s.position, xi)
}

/// `B` and `S` matrices of one harmonic for a set of same-axis stiffeners.
#[derive(Debug, Clone)]
pub struct InterfaceKernel {
    pub harmonic: usize,
    pub b_matrix: DMatrix<f64>,
    pub s_matrix: DMatrix<f64>,
}

impl InterfaceKernel {
    pub fn assemble(plate: &PlateSpec, stiffeners: &[Stiffener], harmonic: usize) -> Self {
        let n = stiffeners.len();
        let mut s_matrix = DMatrix::zeros(n, n);
        if n > 0 {
            let axis = stiffeners[0].axis;
            let sums = PairSums::for_axis(plate, axis, harmonic);
            let pre = coupling_prefactor(plate, axis, harmonic);
            for j in 0..n {
                for i in j..n {
                    let v = pre * sums.sin_sin(stiffeners[j].position, stiffeners[i].position);
                    s_matrix[(j, i)] = v;
                    s_matrix[(i, j)] = v;
                }
            }
        }
        let mut b_matrix = s_matrix.clone();
        for j in 0..n {
            for i in 0..n {
                b_matrix[(j, i)] *= stiffeners[j].ei;
            }
        }
        InterfaceKernel { harmonic, b_matrix, s_matrix }
    }
}

/// Normalised interface kernel of the symmetric pair `x_hat`, `1 - x_hat`
/// on a plate with `a = 1`, `b = beta`, fundamental harmonic, divided by the
/// relative rigidity: `B_ij = 2 beta^3 sum sin(n pi x_i) sin(n pi x_j) / (n^2 + beta^2)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidKernel2x2 {
    pub b11: f64,
    pub b12: f64,
    pub b21: f64,
    pub b22: f64,
}

impl RigidKernel2x2 {
    pub fn det(&self) -> f64 {
        self.b11 * self.b22 - self.b12 * self.b21
    }

    /// Entries times `2 pi^4 sinh^2(pi beta)`.
    pub fn scaled(&self, beta: f64) -> Self {
        let f = 2.0 * PI.powi(4) * (PI * beta).sinh().powi(2);
        RigidKernel2x2 { b11: f * self.b11, b12: f * self.b12, b21: f * self.b21, b22: f * self.b22 }
    }

    /// Leading small-`beta` behaviour of the scaled entries:
    /// `2 pi^10 beta^5 x^2 (1-x)^2 / 3` and `pi^10 beta^5 x^2 (1 - 2x^2) / 3`.
    pub fn scaled_small_beta(x_hat: f64, beta: f64) -> Self {
        let c = PI.powi(10) * beta.powi(5) * x_hat * x_hat / 3.0;
        let diag = 2.0 * c * (1.0 - x_hat).powi(2);
        let off = c * (1.0 - 2.0 * x_hat * x_hat);
        RigidKernel2x2 { b11: diag, b12: off, b21: off, b22: diag }
    }
}

pub fn rigid_pair_kernel(x_hat: f64, beta: f64) -> RigidKernel2x2 {
    let sums = QuarticSums::new(beta);
    let x1 = PI * x_hat;
    let x2 = PI * (1.0 - x_hat);
    let pair = |u: f64, v: f64| beta.powi(3) * (sums.even((u - v).abs()) - sums.even(u + v));
    let b11 = pair(x1, x1);
    let b12 = pair(x1, x2);
    let b22 = pair(x2, x2);
    RigidKernel2x2 { b11, b12, b21: b12, b22 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> PlateSpec {
        PlateSpec::unit_square()
    }

    #[test]
    fn navier_weight_values() {
        let p = unit();
        assert!((navier_coefficient(1, 1, &p) - 1.0 / PI.powi(4)).abs() < 1e-18);
        assert_eq!(navier_coefficient(2, 3, &p), navier_coefficient(3, 2, &p));
        let q = PlateSpec::new(2.0, 1.0, 0.1, 1.0, 0.3).unwrap();
        // Second path: 4 b^3 a^3 / (pi^4 D (m^2 a^2 + r^2 b^2)^2) with a=2, b=1, m=2, r=3.
        let alt = 4.0 * 8.0 / (PI.powi(4) * (4.0 * 4.0 + 9.0_f64).powi(2));
        assert!((navier_coefficient(2, 3, &q) - alt).abs() < 1e-15 * alt);
    }

    #[test]
    fn direct_sum_trivial_cases() {
        let p = unit();
        assert_eq!(direct_sum_oracle(0.4, 0.0, 1, &p, 100), 0.0);
        assert_eq!(direct_sum_oracle(0.2, 0.7, 2, &p, 1000), direct_sum_oracle(0.7, 0.2, 2, &p, 1000));
    }

    #[test]
    fn coupling_matches_direct_sum_at_midspan() {
        let p = unit();
        let st = [Stiffener::eta(0.5, 1.0)];
        let closed = stiffener_coupling(0, 0, 1, &st, &p);
        let oracle = direct_sum_oracle(0.5, 0.5, 1, &p, 1_000_000);
        assert!((closed - oracle).abs() < 1e-8 * oracle, "{closed} vs {oracle}");
        assert!(closed > 0.0);
        let none = [Stiffener::eta(0.5, 0.0)];
        assert_eq!(stiffener_coupling(0, 0, 1, &none, &p), 0.0);
    }

    #[test]
    fn geometric_kernel_symmetry_and_oracle() {
        let p = unit();
        let st = [Stiffener::eta(0.3, 2.0), Stiffener::eta(0.6, 5.0)];
        let s01 = geometric_coupling(0, 1, 2, &st, &p);
        assert!((s01 - geometric_coupling(1, 0, 2, &st, &p)).abs() < 1e-15 * s01.abs());
        let oracle = 16.0 * direct_sum_oracle(0.3, 0.6, 2, &p, 1_000_000);
        assert!((s01 - oracle).abs() < 1e-8 * oracle.abs());
        let edge = [Stiffener::eta(1e-12, 1.0), Stiffener::eta(0.6, 1.0)];
        assert!(geometric_coupling(0, 1, 1, &edge, &p).abs() < 1e-10);
    }

    #[test]
    fn field_kernel_matches_series() {
        let p = unit();
        let st = [Stiffener::eta(0.5, 0.7)];
        let v = field_coupling(0, 1, 0.25, 0.5, 1.3, &st, &p);
        let series: f64 = (1..=1_000_000usize)
            .rev()
            .map(|n| {
                let nf = n as f64;
                let q = nf * nf + 1.0;
                2.0 * (nf * PI * 0.5).sin() * (nf * PI * 0.25).sin() / (q * q)
            })
            .sum::<f64>()
            * 1.3
            * 0.7;
        assert!((v - series).abs() < 1e-8 * series.abs());
        assert_eq!(field_coupling(0, 1, 0.25, 0.0, 1.3, &st, &p), 0.0);
        assert_eq!(field_coupling(0, 1, 0.25, 0.5, 0.0, &st, &p), 0.0);
    }

    #[test]
    fn xi_axis_kernel_is_the_transpose() {
        let p = PlateSpec::new(1.0, 2.5, 0.1, 1.0, 0.3).unwrap();
        let t = PlateSpec::new(2.5, 1.0, 0.1, 1.0, 0.3).unwrap();
        let xi = [Stiffener::xi(0.3, 1.0), Stiffener::xi(0.8, 1.0)];
        let eta = [Stiffener::eta(0.3, 1.0), Stiffener::eta(0.8, 1.0)];
        for r in 1..4 {
            let a = stiffener_coupling(0, 1, r, &xi, &p);
            let b = stiffener_coupling(0, 1, r, &eta, &t);
            assert!((a - b).abs() < 1e-13 * b.abs());
        }
    }

    #[test]
    fn torsion_sums_match_direct_sums() {
        let sums = PairSums::new(1.3, 2.0 / 0.8);
        let (u, v) = (0.35, 0.9);
        let mut ns = 0.0;
        let mut nc = 0.0;
        for n in (1..=2_000_000usize).rev() {
            let nf = n as f64;
            let q = (nf / 1.3).powi(2) + (2.0_f64 / 0.8).powi(2);
            let (su, cu, cv) = ((nf * PI * u / 1.3).sin(), (nf * PI * u / 1.3).cos(), (nf * PI * v / 1.3).cos());
            ns += nf * su * cv / (q * q);
            nc += nf * nf * cu * cv / (q * q);
        }
        assert!((sums.n_sin_cos(u, v) - ns).abs() < 1e-9 * ns.abs());
        assert!((sums.n2_cos_cos(u, v) - nc).abs() < 1e-6 * nc.abs());
    }

    #[test]
    fn rigid_kernel_matches_general_kernel() {
        // Plate a = 1, b = beta, EI = a D: B / eps is the normalised kernel.
        let beta = 1.0;
        let x = 0.3445;
        let plate = PlateSpec::new(1.0, beta, 0.1, 1.0, 0.3).unwrap();
        let st = [Stiffener::eta(x * beta, 1.0), Stiffener::eta((1.0 - x) * beta, 1.0)];
        let k = rigid_pair_kernel(x, beta);
        assert!((k.b11 - stiffener_coupling(0, 0, 1, &st, &plate)).abs() < 1e-10 * k.b11);
        assert!((k.b12 - stiffener_coupling(0, 1, 1, &st, &plate)).abs() < 1e-10 * k.b12);
        assert_eq!(k.b12, k.b21);
        assert!(k.det() > 0.0);
        assert!(rigid_pair_kernel(1e-9, 0.7).b11.abs() < 1e-12);
    }

    #[test]
    fn rigid_kernel_small_beta_limit() {
        let beta = 1e-3;
        for &x in &[0.2, 0.3445, 0.45] {
            let exact = rigid_pair_kernel(x, beta).scaled(beta);
            let lim = RigidKernel2x2::scaled_small_beta(x, beta);
            assert!((exact.b11 / lim.b11 - 1.0).abs() < 1e-4, "{} vs {}", exact.b11, lim.b11);
            assert!((exact.b12 / lim.b12 - 1.0).abs() < 1e-4, "{} vs {}", exact.b12, lim.b12);
        }
    }

    #[test]
    fn rigid_kernel_survives_large_beta() {
        let k = rigid_pair_kernel(0.3, 300.0);
        assert!(k.b11.is_finite() && k.b12.is_finite() && k.b11 > 0.0);
    }

    #[test]
    fn interface_kernel_positive_diagonal() {
        let p = PlateSpec::new(1.0, 1.7, 0.1, 2.0, 0.3).unwrap();
        let st = [Stiffener::eta(0.2, 1.0), Stiffener::eta(0.9, 3.0), Stiffener::eta(1.5, 0.5)];
        for r in [1, 5, 40] {
            let k = InterfaceKernel::assemble(&p, &st, r);
            for i in 0..3 {
                assert!(k.b_matrix[(i, i)] > 0.0);
                for j in 0..3 {
                    assert_eq!(k.s_matrix[(i, j)], k.s_matrix[(j, i)]);
                    assert_eq!(k.b_matrix[(i, j)], st[i].ei * k.s_matrix[(i, j)]);
                }
            }
        }
    }
}
