//! Closed-form asymptotic energies and optimal layouts.
//!
//! Three regimes are covered:
//! - flexible stiffeners (`eps -> 0`), to first and second order;
//! - rigid stiffeners (`eps^-1 -> 0`), to first order in `eps^-1`;
//! - flexible stiffeners with torsion, to first order in `eps` and `gamma`.
//!
//! The symmetric-pair formulas use a plate with `a = 1`, `b = beta`, the load
//! `sin(pi xi/b) sin(pi eta/a)` and two eta-aligned stiffeners at
//! `x_hat = x/b` and `1 - x_hat`, or `1/2 -+ delta`. Energies are reported as
//! `U_hat = 8 pi^4 D U / (a^6 P^2)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::kernels::{rigid_pair_kernel, spectral_q};
use crate::model::{Axis, LoadSpectrum, PlateSpec, Stiffener, Truncation};
use crate::optimizer::minimize_1d;
use crate::series::QuarticSums;
use crate::solver_uni::{unstiffened_energy, SolverError};

/// Largest `eps` treated as flexible.
pub const FLEXIBLE_THRESHOLD: f64 = 0.1;
/// Largest `beta^-5 eps^-1` treated as rigid.
pub const RIGID_THRESHOLD: f64 = 0.1;
/// Relative tolerance under which two maximizers count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptoticsError {
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    FlexibleFirst,
    FlexibleSecond,
    RigidFirst,
    FlexibleTorsionFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub beta: f64,
    pub epsilon: Option<f64>,
    pub gamma: Option<f64>,
    /// `beta^5 eps`.
    pub beta5_epsilon: Option<f64>,
    /// The small quantity of the regime.
    pub smallness: f64,
    pub threshold: f64,
    pub within_regime: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub regime: Regime,
    pub positions: Vec<f64>,
    pub energy: Option<f64>,
    pub diagnostics: Diagnostics,
}

pub fn flexible_diagnostics(epsilon: f64, beta: f64) -> Diagnostics {
    Diagnostics {
        beta,
        epsilon: Some(epsilon),
        gamma: None,
        beta5_epsilon: Some(beta.powi(5) * epsilon),
        smallness: epsilon,
        threshold: FLEXIBLE_THRESHOLD,
        within_regime: epsilon <= FLEXIBLE_THRESHOLD,
    }
}

pub fn rigid_diagnostics(epsilon: f64, beta: f64) -> Diagnostics {
    let smallness = 1.0 / (beta.powi(5) * epsilon);
    Diagnostics {
        beta,
        epsilon: Some(epsilon),
        gamma: None,
        beta5_epsilon: Some(beta.powi(5) * epsilon),
        smallness,
        threshold: RIGID_THRESHOLD,
        within_regime: smallness <= RIGID_THRESHOLD,
    }
}

// ---------------------------------------------------------------------------
// Flexible regime, general layouts.

/// `Y_s(x) = sum_n sin(n pi x/b) P_ns / Q_ns` for each loaded `s`.
fn eta_projection(plate: &PlateSpec, load: &LoadSpectrum, x: f64) -> Vec<(usize, f64)> {
    project(load, |n, s| ((n as f64 * PI * x / plate.b).sin(), spectral_q(n, s, plate)), false)
}

/// `Z_n(y) = sum_s sin(s pi y/a) P_ns / Q_ns` for each loaded `n`.
fn xi_projection(plate: &PlateSpec, load: &LoadSpectrum, y: f64) -> Vec<(usize, f64)> {
    project(load, |n, s| ((s as f64 * PI * y / plate.a).sin(), spectral_q(n, s, plate)), true)
}

/// `X_s(x) = sum_n n cos(n pi x/b) P_ns / Q_ns` for each loaded `s`.
fn twist_projection(plate: &PlateSpec, load: &LoadSpectrum, x: f64) -> Vec<(usize, f64)> {
    project(load, |n, s| (n as f64 * (n as f64 * PI * x / plate.b).cos(), spectral_q(n, s, plate)), false)
}

fn project(load: &LoadSpectrum, weight: impl Fn(usize, usize) -> (f64, f64), by_n: bool) -> Vec<(usize, f64)> {
    let mut acc: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
    for (n, s, p) in load.iter() {
        let (w, q) = weight(n, s);
        *acc.entry(if by_n { n } else { s }).or_insert(0.0) += w * p / q;
    }
    acc.into_iter().collect()
}

/// `sum_s s^4 Y_s(x)^2`, the energy gain per unit rigidity of an eta-aligned stiffener at `x`.
pub fn eta_square_sum(plate: &PlateSpec, load: &LoadSpectrum, x: f64) -> f64 {
    eta_projection(plate, load, x).iter().map(|&(s, y)| (s as f64).powi(4) * y * y).sum()
}

/// `sum_n n^4 Z_n(y)^2`, the same for a xi-aligned stiffener at `y`.
pub fn xi_square_sum(plate: &PlateSpec, load: &LoadSpectrum, y: f64) -> f64 {
    xi_projection(plate, load, y).iter().map(|&(n, z)| (n as f64).powi(4) * z * z).sum()
}

/// `sum_s s^2 X_s(x)^2`.
pub fn twist_square_sum(plate: &PlateSpec, load: &LoadSpectrum, x: f64) -> f64 {
    twist_projection(plate, load, x).iter().map(|&(s, t)| (s as f64).powi(2) * t * t).sum()
}

fn bending_gain(plate: &PlateSpec, load: &LoadSpectrum, st: &Stiffener) -> f64 {
    let d = plate.d;
    match st.axis {
        Axis::EtaAligned => st.ei * eta_square_sum(plate, load, st.position) / (4.0 * PI.powi(4) * plate.a.powi(3) * d * d),
        Axis::XiAligned => st.ei * xi_square_sum(plate, load, st.position) / (4.0 * PI.powi(4) * plate.b.powi(3) * d * d),
    }
}

fn torsion_gain(plate: &PlateSpec, load: &LoadSpectrum, st: &Stiffener) -> f64 {
    let d = plate.d;
    st.gc * twist_square_sum(plate, load, st.position) / (4.0 * PI.powi(4) * plate.a * plate.b * plate.b * d * d)
}

fn check_layout(plate: &PlateSpec, stiffeners: &[Stiffener], load: &LoadSpectrum, trunc: Truncation) -> Result<(), SolverError> {
    plate.validate()?;
    for s in stiffeners {
        s.validate(plate)?;
    }
    if !load.fits(trunc) {
        return Err(crate::model::ModelError::Validation("load harmonics exceed the truncation".into()).into());
    }
    Ok(())
}

/// First-order energy for flexible stiffeners of both axes:
/// `U0 - sum_eta EI_i sum_s s^4 Y_is^2 / (4 pi^4 a^3 D^2) - sum_xi EI_j sum_n n^4 Z_jn^2 / (4 pi^4 b^3 D^2)`.
pub fn flexible_first_order_energy(
    plate: &PlateSpec,
    stiffeners: &[Stiffener],
    load: &LoadSpectrum,
    trunc: Truncation,
) -> Result<f64, SolverError> {
    check_layout(plate, stiffeners, load, trunc)?;
    if stiffeners.iter().any(|s| s.gc != 0.0) {
        return Err(SolverError::Unsupported("torsional rigidity needs the torsion expansion".into()));
    }
    Ok(unstiffened_energy(plate, load) - stiffeners.iter().map(|s| bending_gain(plate, load, s)).sum::<f64>())
}

/// First-order energy for eta-aligned stiffeners with torsion:
/// the bending terms above minus `sum_i GC_i sum_s s^2 X_is^2 / (4 pi^4 a b^2 D^2)`.
pub fn torsion_first_order_energy(
    plate: &PlateSpec,
    stiffeners: &[Stiffener],
    load: &LoadSpectrum,
    trunc: Truncation,
) -> Result<f64, SolverError> {
    check_layout(plate, stiffeners, load, trunc)?;
    if stiffeners.iter().any(|s| s.axis != Axis::EtaAligned) {
        return Err(SolverError::Unsupported("torsion supported for single-axis only".into()));
    }
    let gain: f64 = stiffeners.iter().map(|s| bending_gain(plate, load, s) + torsion_gain(plate, load, s)).sum();
    Ok(unstiffened_energy(plate, load) - gain)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlexibleLayout {
    /// Every global maximizer of the eta square sum.
    pub x_eta: Vec<f64>,
    /// Every global maximizer of the xi square sum.
    pub x_xi: Vec<f64>,
    pub tie: bool,
    pub eta_positions: Vec<f64>,
    pub xi_positions: Vec<f64>,
}

fn maximizers(f: impl Fn(f64) -> f64, span: f64) -> Result<Vec<f64>, AsymptoticsError> {
    let lo = span * 1e-9;
    let hi = span * (1.0 - 1e-9);
    let m = minimize_1d(|x| -f(x), lo, hi, 1e-10 * span).map_err(|e| AsymptoticsError::Domain(e.to_string()))?;
    let best = m.value;
    let mut xs: Vec<f64> = m
        .local_minima
        .iter()
        .filter(|(_, v)| (v - best).abs() <= TIE_TOLERANCE * best.abs().max(f64::MIN_POSITIVE))
        .map(|(x, _)| *x)
        .collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-6 * span);
    if xs.is_empty() {
        xs.push(m.x);
    }
    Ok(xs)
}

/// Degenerate optimum of the first-order energy: every eta-aligned stiffener
/// at the maximizer of its square sum, likewise for xi-aligned ones.
pub fn flexible_optimal_layout(
    load: &LoadSpectrum,
    plate: &PlateSpec,
    trunc: Truncation,
    n_eta: usize,
    n_xi: usize,
) -> Result<FlexibleLayout, AsymptoticsError> {
    plate.validate().map_err(SolverError::from)?;
    if !load.fits(trunc) {
        return Err(AsymptoticsError::Domain("load harmonics exceed the truncation".into()));
    }
    let x_eta = if n_eta > 0 { maximizers(|x| eta_square_sum(plate, load, x), plate.b)? } else { Vec::new() };
    let x_xi = if n_xi > 0 { maximizers(|y| xi_square_sum(plate, load, y), plate.a)? } else { Vec::new() };
    let tie = x_eta.len() > 1 || x_xi.len() > 1;
    Ok(FlexibleLayout {
        eta_positions: x_eta.first().map(|&x| vec![x; n_eta]).unwrap_or_default(),
        xi_positions: x_xi.first().map(|&y| vec![y; n_xi]).unwrap_or_default(),
        x_eta,
        x_xi,
        tie,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparableReport {
    pub positions: Vec<f64>,
    pub common: bool,
}

/// Minimizes each stiffener's first-order term on its own. The first-order
/// energy has no cross terms, so the minimum of the sum is the sum of these minima.
pub fn separable_optimum_check(
    plate: &PlateSpec,
    stiffeners: &[Stiffener],
    load: &LoadSpectrum,
    trunc: Truncation,
) -> Result<SeparableReport, AsymptoticsError> {
    check_layout(plate, stiffeners, load, trunc)?;
    let mut positions = Vec::with_capacity(stiffeners.len());
    for st in stiffeners {
        let span = plate.span_across(st.axis);
        let gain = |x: f64| {
            let moved = Stiffener { position: x, ..*st };
            bending_gain(plate, load, &moved) + if st.axis == Axis::EtaAligned { torsion_gain(plate, load, &moved) } else { 0.0 }
        };
        positions.push(maximizers(gain, span)?[0]);
    }
    let common = positions.windows(2).all(|w| (w[0] - w[1]).abs() <= 1e-6 * plate.b.max(plate.a));
    Ok(SeparableReport { positions, common })
}

// ---------------------------------------------------------------------------
// Flexible regime, symmetric pair to second order.

fn coth(y: f64) -> f64 {
    let e = (-2.0 * y).exp();
    (1.0 + e) / (-(-2.0 * y).exp_m1())
}

/// `cosh(x)/sinh(y)` for `|x| <= y`.
fn ch_sh(x: f64, y: f64) -> f64 {
    let x = x.abs();
    ((x - y).exp() + (-x - y).exp()) / (-(-2.0 * y).exp_m1())
}

/// `sinh(x)/sinh(y)` for `|x| <= y`.
fn sh_sh(x: f64, y: f64) -> f64 {
    let ax = x.abs();
    x.signum() * ((ax - y).exp() - (-ax - y).exp()) / (-(-2.0 * y).exp_m1())
}

/// `S(beta) = sum_{n odd} 1/(n^2+beta^2)^2` in hyperbolic form.
pub fn odd_square_sum(beta: f64) -> f64 {
    let pb = PI * beta;
    let (c1, c2) = (coth(pb), coth(pb / 2.0));
    PI * c1 / (4.0 * beta.powi(3)) + PI * PI * c1 * c1 / (4.0 * beta * beta) - PI * c2 / (8.0 * beta.powi(3))
        - PI * PI * c2 * c2 / (16.0 * beta * beta)
        - 3.0 * PI * PI / (16.0 * beta * beta)
}

/// `C(delta, beta) = sum_{n odd} cos(2 n pi delta)/(n^2+beta^2)^2` in hyperbolic form.
pub fn odd_cosine_sum(delta: f64, beta: f64) -> f64 {
    let d = delta.abs();
    let pb = PI * beta;
    let x1 = pb * (1.0 - 2.0 * d);
    let x2 = pb * (0.5 - 2.0 * d);
    let (c1, c2) = (coth(pb), coth(pb / 2.0));
    PI * ch_sh(x1, pb) / (4.0 * beta.powi(3)) + PI * PI * c1 * ch_sh(x1, pb) / (4.0 * beta * beta)
        - PI * PI * (1.0 - 2.0 * d) * sh_sh(x1, pb) / (4.0 * beta * beta)
        - PI * ch_sh(x2, pb / 2.0) / (8.0 * beta.powi(3))
        - PI * PI * c2 * ch_sh(x2, pb / 2.0) / (16.0 * beta * beta)
        + PI * PI * (1.0 - 4.0 * d) * sh_sh(x2, pb / 2.0) / (16.0 * beta * beta)
}

/// `T(beta) = sum_{n odd} n^2/(n^2+beta^2)^2`.
pub fn odd_second_moment(beta: f64) -> f64 {
    QuarticSums::new(beta).second(0.0) - 0.25 * QuarticSums::new(beta / 2.0).second(0.0)
}

/// Second-order energy of the symmetric pair at offset `delta`:
/// `beta^5/(1+beta^2)^2 - 4 beta^8 eps cos^2(pi delta)/(1+beta^2)^4
///  + 8 beta^11 eps^2 cos^2(pi delta) [S + C(delta)]/(1+beta^2)^4`.
pub fn u_hat_second_order(delta: f64, epsilon: f64, beta: f64) -> f64 {
    let c2 = (PI * delta).cos().powi(2);
    let den = (1.0 + beta * beta).powi(4);
    beta.powi(5) / (1.0 + beta * beta).powi(2) - 4.0 * beta.powi(8) * epsilon * c2 / den
        + 8.0 * beta.powi(11) * epsilon * epsilon * c2 * (odd_square_sum(beta) + odd_cosine_sum(delta, beta)) / den
}

/// Same expansion with the odd-harmonic sums taken term by term.
pub fn u_hat_second_order_series(delta: f64, epsilon: f64, beta: f64, odd_terms: usize) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for k in (0..odd_terms).rev() {
        let n = (2 * k + 1) as f64;
        let q = (n * n + beta * beta).powi(2);
        s += 1.0 / q;
        c += (2.0 * n * PI * delta).cos() / q;
    }
    let lead = beta.powi(5) / (1.0 + beta * beta).powi(2);
    let bracket = 1.0 - 2.0 * beta.powi(3) * epsilon * s - 2.0 * beta.powi(3) * epsilon * c;
    lead * (1.0 - 4.0 * beta.powi(3) * epsilon * (PI * delta).cos().powi(2) / (1.0 + beta * beta).powi(2) * bracket)
}

/// `d U_hat / d delta` of [`u_hat_second_order`], zero at `delta = 0`.
pub fn u_hat_derivative(delta: f64, epsilon: f64, beta: f64) -> f64 {
    if delta == 0.0 {
        return 0.0;
    }
    let d = delta.abs();
    let sg = delta.signum();
    let pb = PI * beta;
    let den = (1.0 + beta * beta).powi(4);
    let (c1, c2) = (coth(pb), coth(pb / 2.0));
    let x1 = pb * (1.0 - 2.0 * d);
    let x2 = pb * (0.5 - 2.0 * d);
    let s2 = (2.0 * PI * delta).sin();
    let e2 = epsilon * epsilon;
    let first = 4.0 * PI * beta.powi(8) * epsilon * s2 / den;
    let constant = (4.0 * c1 + 4.0 * pb * c1 * c1 - 2.0 * c2 - pb * c2 * c2 - 3.0 * pb) * PI * PI * beta.powi(8) * e2 * s2
        / (2.0 * den);
    let shifted = PI * PI * beta.powi(8) * e2 * s2 / (2.0 * den)
        * (4.0 * (1.0 + pb * c1) * ch_sh(x1, pb) - 4.0 * pb * (1.0 - 2.0 * d) * sh_sh(x1, pb)
            - (2.0 + pb * c2) * ch_sh(x2, pb / 2.0)
            + pb * (1.0 - 4.0 * d) * sh_sh(x2, pb / 2.0));
    let slope = beta.powi(10) * e2 * (PI * delta).cos().powi(2) / den
        * (4.0 * PI.powi(3) * (1.0 - 2.0 * d) * ch_sh(x1, pb) - 4.0 * PI.powi(3) * c1 * sh_sh(x1, pb)
            + PI.powi(3) * c2 * sh_sh(x2, pb / 2.0)
            - PI.powi(3) * (1.0 - 4.0 * d) * ch_sh(x2, pb / 2.0))
        * sg;
    first - constant - shifted + slope
}

/// Closed form of the critical rigidity:
/// `4 / (pi {2(1+b^2)[coth(pi b/2) - 2 coth(pi b)] + pi b (b^2-1)[4 coth^2(pi b) - coth^2(pi b/2) - 3]})`.
pub fn epsilon_critical(beta: f64) -> f64 {
    let pb = PI * beta;
    let (c1, c2) = (coth(pb), coth(pb / 2.0));
    4.0 / (PI * (2.0 * (1.0 + beta * beta) * (c2 - 2.0 * c1) + pb * (beta * beta - 1.0) * (4.0 * c1 * c1 - c2 * c2 - 3.0)))
}

/// `-2 / (pi (1 + beta^2))`.
pub fn epsilon_critical_large_beta(beta: f64) -> f64 {
    -2.0 / (PI * (1.0 + beta * beta))
}

/// `-24 / (beta^3 (pi^4 + 12 pi^2))`, the leading small-`beta` behaviour.
pub fn epsilon_critical_small_beta(beta: f64) -> f64 {
    -24.0 / (beta.powi(3) * (PI.powi(4) + 12.0 * PI * PI))
}

/// `-24 / (pi^2 beta^3 [12 + 5 pi^2 beta (1 - beta)])`, the historical small-`beta` form.
pub fn epsilon_critical_small_beta_printed(beta: f64) -> f64 {
    -24.0 / (PI * PI * beta.powi(3) * (12.0 + 5.0 * PI * PI * beta * (1.0 - beta)))
}

/// Linear expansion about `beta = 1`.
pub fn epsilon_critical_near_one(beta: f64) -> f64 {
    let (c1, c2) = (coth(PI), coth(PI / 2.0));
    let k = 2.0 * c1 - c2;
    -1.0 / (PI * k) * (1.0 + (1.0 + PI * (3.0 + c2 * c2 - 4.0 * c1 * c1) / k) * (1.0 - beta))
}

/// `lim delta^-1 dU_hat/d delta = 8 pi^2 beta^8 eps (1 + eps/eps_cr) / (beta^2+1)^4`.
pub fn limit_slope_at_zero(epsilon: f64, beta: f64) -> f64 {
    8.0 * PI * PI * beta.powi(8) * epsilon * (1.0 + epsilon / epsilon_critical(beta)) / (beta * beta + 1.0).powi(4)
}

/// `f(beta) = [4 coth(pi b) + 4 pi b coth^2(pi b) - 2 coth(pi b/2) - pi b coth^2(pi b/2) - 3 pi b] pi/4`,
/// the relative size of the second-order term at `delta = 0`.
pub fn second_order_factor(beta: f64) -> f64 {
    let pb = PI * beta;
    let (c1, c2) = (coth(pb), coth(pb / 2.0));
    (4.0 * c1 + 4.0 * pb * c1 * c1 - 2.0 * c2 - pb * c2 * c2 - 3.0 * pb) * PI / 4.0
}

/// Largest blade height over plate thickness for which the flexible
/// expansion holds: `(1/2) (9 / f(beta))^(1/3)`.
pub fn blade_height_bound(beta: f64) -> f64 {
    0.5 * (9.0 / second_order_factor(beta)).cbrt()
}

// ---------------------------------------------------------------------------
// Rigid regime, symmetric pair.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RigidForm {
    /// Exact normalised kernel.
    #[default]
    General,
    /// Leading small-`beta` kernel.
    SmallBeta,
}

/// `B11 + B12` of the normalised pair kernel. `(1, 1)` is an eigenvector of
/// the symmetric pair's kernel, so this is all the energy needs.
fn pair_eigenvalue(x_hat: f64, beta: f64, form: RigidForm) -> f64 {
    match form {
        RigidForm::General => {
            let k = rigid_pair_kernel(x_hat, beta);
            0.5 * (k.b11 + k.b22) + k.b12
        }
        RigidForm::SmallBeta => {
            let bar = PI.powi(10) * beta.powi(5) * (3.0 * x_hat * x_hat - 4.0 * x_hat.powi(3)) / 3.0;
            bar / (2.0 * PI.powi(4) * (PI * beta).sinh().powi(2))
        }
    }
}

fn check_pair(x_hat: f64, beta: f64) -> Result<(), AsymptoticsError> {
    if !(x_hat > 0.0 && x_hat <= 0.5) {
        return Err(AsymptoticsError::Domain(format!("x_hat = {x_hat} is outside (0, 1/2]")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(AsymptoticsError::Domain(format!("beta = {beta} must be positive")));
    }
    Ok(())
}

/// First order in `eps^-1`:
/// `U_hat = beta^5/(1+beta^2)^2 - 4 beta^8 sin^2(pi x)/(1+beta^2)^4 [1/lambda - eps^-1/lambda^2]`
/// with `lambda = B11 + B12`.
pub fn rigid_energy(x_hat: f64, epsilon: f64, beta: f64, form: RigidForm) -> Result<f64, AsymptoticsError> {
    check_pair(x_hat, beta)?;
    let lambda = pair_eigenvalue(x_hat, beta, form);
    if !(lambda > 1e-300) {
        return Err(AsymptoticsError::Domain(format!("pair kernel is singular at x_hat = {x_hat}")));
    }
    let s2 = (PI * x_hat).sin().powi(2);
    let b2 = 1.0 + beta * beta;
    Ok(beta.powi(5) / (b2 * b2) - 4.0 * beta.powi(8) * s2 / b2.powi(4) * (1.0 / lambda - 1.0 / (epsilon * lambda * lambda)))
}

/// Energy of the symmetric pair to all orders, `... - 4 beta^8 sin^2 / ((1+beta^2)^4 (eps^-1 + lambda))`.
pub fn rigid_energy_all_orders(x_hat: f64, epsilon: f64, beta: f64) -> Result<f64, AsymptoticsError> {
    check_pair(x_hat, beta)?;
    let lambda = pair_eigenvalue(x_hat, beta, RigidForm::General);
    let s2 = (PI * x_hat).sin().powi(2);
    let b2 = 1.0 + beta * beta;
    Ok(beta.powi(5) / (b2 * b2) - 4.0 * beta.powi(8) * s2 / (b2.powi(4) * (1.0 / epsilon + lambda)))
}

/// `1 - 12 pi sin^2(pi x) / (3x^2 - 4x^3)`.
pub fn rigid_asymptote_objective(x: f64) -> f64 {
    1.0 - 12.0 * PI * (PI * x).sin().powi(2) / (3.0 * x * x - 4.0 * x.powi(3))
}

pub fn rigid_asymptote_objective_derivative(x: f64) -> f64 {
    let g = 3.0 * x * x - 4.0 * x.powi(3);
    let dg = 6.0 * x - 12.0 * x * x;
    let (s, c) = (PI * x).sin_cos();
    -12.0 * PI * (2.0 * PI * s * c * g - s * s * dg) / (g * g)
}

/// Limit position of the nearer of two infinitely rigid, finitely long stiffeners.
pub fn rigid_optimal_asymptote() -> f64 {
    static CELL: OnceLock<f64> = OnceLock::new();
    *CELL.get_or_init(|| {
        minimize_1d(rigid_asymptote_objective, 1e-3, 0.5, 1e-13)
            .expect("objective is finite on the bracket")
            .x
    })
}

/// Rate constant `q` of `(1/2 - x_opt)/(1/2 - x_as) = 1 - q beta^-5 eps^-1`,
/// from perturbing the minimizer of the small-`beta` rigid energy:
/// `q = -(3/(2 pi^5)) (g'/g^2) / ((1/2 - x)(sigma''/sigma - g''/g))`
/// with `g = 3x^2 - 4x^3`, `sigma = sin^2(pi x)` at `x = x_as`.
pub fn approach_rate() -> f64 {
    let x = rigid_optimal_asymptote();
    let g = 3.0 * x * x - 4.0 * x.powi(3);
    let dg = 6.0 * x - 12.0 * x * x;
    let cot = 1.0 / (PI * x).tan();
    let sigma2 = 2.0 * PI * PI * (cot * cot - 1.0);
    let g2 = (6.0 - 24.0 * x) / (x * x * (3.0 - 4.0 * x));
    -(3.0 / (2.0 * PI.powi(5))) * (dg / (g * g)) / ((0.5 - x) * (sigma2 - g2))
}

/// The historical closed form for the rate constant, evaluated as written.
pub fn approach_rate_printed() -> f64 {
    let x = rigid_optimal_asymptote();
    let cot = 1.0 / (PI * x).tan();
    let num = 3.0 / (2.0 * PI.powi(5)) / (x * x) * (cot / (0.5 - x) - 12.0 / (x * (3.0 - 4.0 * x)));
    let den = 12.0 * (x - 3.0) / (x * x) - 12.0 * (0.5 - x) / x + (3.0 - 4.0 * x) * (cot * cot - 1.0)
        - 24.0 * cot * (0.5 - x) / x;
    num / den
}

/// `x_opt = 1/2 - (1/2 - x_as)(1 - q beta^-5 eps^-1)`, with regime diagnostics.
/// The value is returned even outside the rigid regime.
pub fn rigid_optimal_position(epsilon: f64, beta: f64) -> AsymptoticReport {
    let x_as = rigid_optimal_asymptote();
    let diagnostics = rigid_diagnostics(epsilon, beta);
    let x = 0.5 - (0.5 - x_as) * (1.0 - approach_rate() * diagnostics.smallness);
    AsymptoticReport {
        regime: Regime::RigidFirst,
        positions: vec![x, 1.0 - x],
        energy: rigid_energy(x.clamp(f64::MIN_POSITIVE, 0.5), epsilon, beta, RigidForm::General).ok(),
        diagnostics,
    }
}

/// Coincident mid-span pair and its second-order energy.
pub fn flexible_pair_report(epsilon: f64, beta: f64) -> AsymptoticReport {
    AsymptoticReport {
        regime: Regime::FlexibleSecond,
        positions: vec![0.5, 0.5],
        energy: Some(u_hat_second_order(0.0, epsilon, beta)),
        diagnostics: flexible_diagnostics(epsilon, beta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver_uni::solve_general;

    fn pair_plate(beta: f64) -> PlateSpec {
        PlateSpec::new(1.0, beta, 0.01, 1.0, 0.3).unwrap()
    }

    /// Exact energy of the symmetric pair from the unidirectional solver.
    fn exact_pair(delta: f64, epsilon: f64, beta: f64) -> f64 {
        let p = pair_plate(beta);
        let st = [Stiffener::eta((0.5 - delta) * beta, epsilon), Stiffener::eta((0.5 + delta) * beta, epsilon)];
        let sol = solve_general(&p, &st, &LoadSpectrum::bisinusoidal(1, 1, 1.0), Truncation::square(2)).unwrap();
        sol.energy.u_hat.unwrap()
    }

    fn direct_odd(beta: f64, f: impl Fn(f64) -> f64) -> f64 {
        (0..2_000_000).rev().map(|k| {
            let n = (2 * k + 1) as f64;
            f(n) / (n * n + beta * beta).powi(2)
        }).sum()
    }

    #[test]
    fn odd_sums_match_direct_sums() {
        for &beta in &[0.2, 0.9, 1.0, 3.0, 12.0] {
            let s = direct_odd(beta, |_| 1.0);
            assert!((odd_square_sum(beta) - s).abs() <= 1e-10 * s, "beta={beta}");
            for &d in &[0.0, 0.1, 0.3, 0.45] {
                let c = direct_odd(beta, |n| (2.0 * n * PI * d).cos());
                assert!((odd_cosine_sum(d, beta) - c).abs() <= 1e-10 * s, "beta={beta} d={d}");
            }
            // The n^2 sum decays like 1/n^2; add its tail past the last odd term.
            let t = direct_odd(beta, |n| n * n) + 1.0 / (2.0 * 4_000_000.0);
            assert!((odd_second_moment(beta) - t).abs() <= 1e-6 * t, "beta={beta}");
        }
    }

    #[test]
    fn odd_cosine_sum_from_full_sums() {
        // Odd terms are all terms minus the even ones, n = 2m.
        for &beta in &[0.3f64, 1.0, 4.0] {
            for &d in &[0.0, 0.12, 0.37, 0.5] {
                let all = QuarticSums::new(beta).even_exact(2.0 * PI * d);
                let even = QuarticSums::new(beta / 2.0).even_exact(4.0 * PI * d) / 16.0;
                let c = odd_cosine_sum(d, beta);
                assert!((c - (all - even)).abs() <= 1e-11 * odd_square_sum(beta), "beta={beta} d={d}");
            }
        }
    }

    #[test]
    fn unstiffened_pair_energy() {
        assert!((u_hat_second_order(0.2, 0.0, 1.0) - 0.25).abs() < 1e-15);
        let beta: f64 = 1.7;
        assert!((u_hat_second_order(0.1, 0.0, beta) - beta.powi(5) / (1.0 + beta * beta).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn hyperbolic_form_matches_series() {
        for &beta in &[0.5, 1.0, 2.0] {
            for k in 0..10 {
                let d = 0.049 * k as f64;
                let closed = u_hat_second_order(d, 0.05, beta);
                let series = u_hat_second_order_series(d, 0.05, beta, 10_000);
                assert!((closed - series).abs() <= 1e-8 * closed, "beta={beta} d={d}");
            }
        }
    }

    #[test]
    fn first_order_term_at_coincidence() {
        let (beta, eps): (f64, f64) = (1.3, 0.02);
        let lead = beta.powi(5) / (1.0 + beta * beta).powi(2) - 4.0 * beta.powi(8) * eps / (1.0 + beta * beta).powi(4);
        let quad = u_hat_second_order(0.0, eps, beta) - lead;
        // Remaining term is 2 f(beta) eps^2 x the first-order coefficient.
        let expect = 4.0 * beta.powi(8) * eps * eps * second_order_factor(beta) / (1.0 + beta * beta).powi(4);
        assert!((quad - expect).abs() <= 1e-12 * lead);
    }

    #[test]
    fn second_order_error_is_cubic() {
        let (beta, d) = (1.0, 0.1);
        let gap = |e: f64| (exact_pair(d, e, beta) - u_hat_second_order(d, e, beta)).abs();
        let r1 = gap(0.04) / gap(0.02);
        let r2 = gap(0.02) / gap(0.01);
        assert!((6.0..=10.0).contains(&r1) && (6.0..=10.0).contains(&r2), "{r1} {r2}");
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let (eps, beta) = (0.08, 1.2);
        let h = 1e-6;
        for k in 0..20 {
            let d = 0.01 + 0.48 * k as f64 / 19.0;
            let fd = (u_hat_second_order(d + h, eps, beta) - u_hat_second_order(d - h, eps, beta)) / (2.0 * h);
            let an = u_hat_derivative(d, eps, beta);
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "d={d}: {fd} vs {an}");
            assert_eq!(u_hat_derivative(-d, eps, beta), -an);
        }
        assert!(u_hat_derivative(0.5 - 1e-12, eps, beta).is_finite());
    }

    #[test]
    fn slope_limit() {
        for &(eps, beta) in &[(0.05, 1.0), (0.2, 0.7), (0.01, 3.0)] {
            let d = 1e-4;
            let ratio = u_hat_derivative(d, eps, beta) / d;
            let lim = limit_slope_at_zero(eps, beta);
            assert!((ratio - lim).abs() <= 1e-3 * lim.abs(), "{ratio} vs {lim}");
        }
        assert_eq!(limit_slope_at_zero(0.0, 1.0), 0.0);
    }

    #[test]
    fn critical_rigidity_closed_form_equals_sum_form() {
        for &beta in &[0.1f64, 0.5, 1.0, 2.0, 8.0] {
            let sums = -1.0 / (4.0 * beta.powi(3) * (odd_square_sum(beta) + odd_second_moment(beta)));
            assert!((epsilon_critical(beta) - sums).abs() <= 1e-8 * sums.abs(), "beta={beta}");
        }
        assert!((epsilon_critical(1.0) + 0.3471).abs() < 5e-4);
        assert!((epsilon_critical_near_one(1.0) - epsilon_critical(1.0)).abs() < 1e-12);
    }

    #[test]
    fn critical_rigidity_limits() {
        let big = epsilon_critical(10.0) / epsilon_critical_large_beta(10.0);
        assert!((big - 1.0).abs() < 0.05);
        let small = epsilon_critical(0.05) / epsilon_critical_small_beta(0.05);
        assert!((small - 1.0).abs() < 0.01, "{small}");
        let mut beta = 0.05;
        while beta <= 20.0 {
            assert!(epsilon_critical(beta) < 0.0, "beta={beta}");
            beta += 0.05;
        }
    }

    #[test]
    fn second_order_factor_is_scaled_odd_sum() {
        for &beta in &[0.2f64, 1.0, 5.0] {
            let f = 4.0 * beta.powi(3) * odd_square_sum(beta);
            assert!((second_order_factor(beta) - f).abs() <= 1e-9 * f);
        }
    }

    #[test]
    fn blade_bounds() {
        assert!((blade_height_bound(50.0) / (9.0 / (4.0 * PI)).cbrt() - 1.0).abs() < 0.01);
        assert!((blade_height_bound(0.5) - 1.5).abs() < 0.075);
        assert!((blade_height_bound(1.0 / 6.0) - 4.0).abs() < 0.2);
    }

    #[test]
    fn rigid_asymptote() {
        let x = rigid_optimal_asymptote();
        assert!((x - 0.3445).abs() < 5e-4, "{x}");
        assert!(rigid_asymptote_objective_derivative(x - 1e-6) < 0.0);
        assert!(rigid_asymptote_objective_derivative(x + 1e-6) > 0.0);
        let grid = (1..10_000)
            .map(|k| 0.5 * k as f64 / 10_000.0)
            .min_by(|a, b| rigid_asymptote_objective(*a).partial_cmp(&rigid_asymptote_objective(*b)).unwrap())
            .unwrap();
        assert!((grid - x).abs() <= 0.5 / 10_000.0);
    }

    #[test]
    fn approach_rate_matches_perturbed_minimizer() {
        // Minimize the small-beta rigid energy bracket 3 s^2/g - k 9 s^2/(2 g^2) with k = (pi beta)^-5 eps^-1.
        let x_as = rigid_optimal_asymptote();
        let shift = |k: f64| {
            let obj = |x: f64| {
                let g = 3.0 * x * x - 4.0 * x.powi(3);
                let s2 = (PI * x).sin().powi(2);
                -(3.0 * s2 / g - k * 9.0 * s2 / (2.0 * g * g))
            };
            let xo = minimize_1d(obj, 0.2, 0.5, 1e-13).unwrap().x;
            (1.0 - (0.5 - xo) / (0.5 - x_as)) / (k * PI.powi(5))
        };
        let q1 = shift(1e-4);
        let q2 = shift(5e-5);
        let extrap = 2.0 * q2 - q1;
        assert!((extrap - approach_rate()).abs() < 1e-4, "{extrap} vs {}", approach_rate());
        assert!((approach_rate_printed() - 0.002656).abs() < 1e-5);
    }

    #[test]
    fn rigid_position_limits() {
        let far = rigid_optimal_position(1e12, 0.9);
        assert!((far.positions[0] - rigid_optimal_asymptote()).abs() < 1e-9);
        let r = rigid_optimal_position(11.25, 0.9);
        assert!((r.positions[0] - 0.35).abs() < 0.005, "{}", r.positions[0]);
        assert!(!r.diagnostics.within_regime);
        let mut last = 0.0;
        for eps in [12.0, 20.0, 50.0, 200.0] {
            let sep = 1.0 - 2.0 * rigid_optimal_position(eps, 0.9).positions[0];
            assert!(sep > last);
            last = sep;
        }
    }

    #[test]
    fn rigid_energy_is_continuous_at_mid_span() {
        let a = rigid_energy(0.5, 50.0, 0.8, RigidForm::General).unwrap();
        let b = rigid_energy(0.5 - 1e-7, 50.0, 0.8, RigidForm::General).unwrap();
        assert!((a - b).abs() < 1e-9);
        assert!(rigid_energy(0.0, 50.0, 0.8, RigidForm::General).is_err());
    }

    #[test]
    fn rigid_energy_matches_exact_pair() {
        let (beta, eps) = (0.9, 11.25);
        let x = 0.35;
        let exact = exact_pair(0.5 - x, eps, beta);
        let all = rigid_energy_all_orders(x, eps, beta).unwrap();
        assert!((exact - all).abs() <= 1e-10 * exact);
        let u0 = beta.powi(5) / (1.0 + beta * beta).powi(2);
        let first = rigid_energy(x, eps, beta, RigidForm::General).unwrap();
        let band = (first - exact).abs() / (u0 - exact);
        assert!(band <= 0.05, "{band}");
    }

    #[test]
    fn small_beta_rigid_form_converges() {
        let x = 0.3;
        let gap = |beta: f64| {
            let g = rigid_energy(x, 1e300, beta, RigidForm::General).unwrap();
            let s = rigid_energy(x, 1e300, beta, RigidForm::SmallBeta).unwrap();
            let u0 = beta.powi(5) / (1.0 + beta * beta).powi(2);
            ((u0 - s) / (u0 - g) - 1.0).abs()
        };
        let (g1, g2) = (gap(0.1), gap(0.05));
        assert!(g1 < 0.05 && (g1 / g2 - 4.0).abs() < 0.4, "{g1} {g2}");
    }

    #[test]
    fn first_order_energy_basics() {
        let p = PlateSpec::new(1.0, 1.4, 0.1, 1.0, 0.3).unwrap();
        let tr = Truncation::square(9);
        let load = LoadSpectrum::uniform(1.0, tr);
        let u0 = unstiffened_energy(&p, &load);
        let none = [Stiffener::eta(0.6, 0.0), Stiffener::xi(0.3, 0.0)];
        assert_eq!(flexible_first_order_energy(&p, &none, &load, tr).unwrap(), u0);
        let pair = [Stiffener::eta(0.6, 0.01), Stiffener::eta(0.6, 0.01), Stiffener::xi(0.3, 0.02)];
        let merged = [Stiffener::eta(0.6, 0.02), Stiffener::xi(0.3, 0.02)];
        let a = flexible_first_order_energy(&p, &pair, &load, tr).unwrap();
        let b = flexible_first_order_energy(&p, &merged, &load, tr).unwrap();
        assert!((a - b).abs() <= 1e-15 * u0 && a < u0);
        let tors = [Stiffener::eta(0.6, 0.02), Stiffener::eta(0.2, 0.01)];
        let t = torsion_first_order_energy(&p, &tors, &load, tr).unwrap();
        assert!((t - flexible_first_order_energy(&p, &tors, &load, tr).unwrap()).abs() <= 1e-15 * u0);
    }

    #[test]
    fn mid_span_has_no_twist_term() {
        let p = PlateSpec::unit_square();
        let load = LoadSpectrum::bisinusoidal(1, 1, 1.0);
        assert!(twist_square_sum(&p, &load, 0.5) < 1e-30);
        let mid = eta_square_sum(&p, &load, 0.5);
        for k in 1..20 {
            assert!(eta_square_sum(&p, &load, k as f64 / 20.0) <= mid);
        }
    }

    #[test]
    fn flexible_layouts() {
        let p = PlateSpec::new(1.0, 1.3, 0.1, 1.0, 0.3).unwrap();
        let tr = Truncation::square(15);
        let bis = flexible_optimal_layout(&LoadSpectrum::bisinusoidal(1, 1, 1.0), &p, tr, 2, 1).unwrap();
        assert!((bis.x_eta[0] - 0.65).abs() < 1e-7 && (bis.x_xi[0] - 0.5).abs() < 1e-7 && !bis.tie);
        assert_eq!(bis.eta_positions.len(), 2);
        let uni = flexible_optimal_layout(&LoadSpectrum::uniform(1.0, tr), &p, tr, 1, 1).unwrap();
        assert!((uni.x_eta[0] - 0.65).abs() < 1e-6 && (uni.x_xi[0] - 0.5).abs() < 1e-6);
        let sq = PlateSpec::unit_square();
        let sym = flexible_optimal_layout(&LoadSpectrum::uniform(1.0, tr), &sq, tr, 1, 1).unwrap();
        assert!((sym.x_eta[0] - sym.x_xi[0]).abs() < 1e-7);
        let two = flexible_optimal_layout(&LoadSpectrum::bisinusoidal(2, 1, 1.0), &sq, tr, 1, 0).unwrap();
        assert!(two.tie && two.x_eta.len() == 2, "{two:?}");
        assert!((two.x_eta[0] - 0.25).abs() < 1e-6 && (two.x_eta[1] - 0.75).abs() < 1e-6);
    }

    #[test]
    fn separable_optimum() {
        let p = PlateSpec::unit_square();
        let tr = Truncation::square(9);
        let load = LoadSpectrum::uniform(1.0, tr);
        let st = [Stiffener::eta(0.1, 0.01), Stiffener::eta(0.8, 0.01), Stiffener::eta(0.3, 0.01)];
        let r = separable_optimum_check(&p, &st, &load, tr).unwrap();
        assert!(r.common && (r.positions[0] - 0.5).abs() < 1e-6, "{r:?}");
        // Torsional rigidity pulls the optimum towards the edges, where the slope peaks.
        let twisted: Vec<Stiffener> = st.iter().map(|s| s.with_gc(0.05)).collect();
        let t = separable_optimum_check(&p, &twisted, &load, tr).unwrap();
        assert!(t.common && (t.positions[0] - 0.5).abs() > 0.1, "{t:?}");
        let one = separable_optimum_check(&p, &st[..1], &LoadSpectrum::bisinusoidal(1, 1, 1.0), tr).unwrap();
        assert!((one.positions[0] - 0.5).abs() < 1e-7);
    }
}
