//! Parallel eta-aligned stiffeners with bending and torsional rigidity.
//!
//! Besides the force spectra `v_is`, each stiffener transmits a distributed
//! couple. Its sine coefficients are
//! `t_is = -GC_i Int w_{xi eta eta}(x_i, eta) sin(s pi eta/a) d eta
//!       = GC_i (s^2 pi^2 / 2a) rho_is`,
//! with `rho_is` the coefficients of the cross-slope `w_xi` along the line.
//! The plate coefficients become
//! `W_ns = [P_ns - (4/ab) sum_i (sin_in v_is + (n pi/b) cos_in t_is)] / (pi^4 D Q_ns)`
//! and compatibility gives, per harmonic `s`,
//!
//! ```text
//! (1 + B_s) v_s + T_s t_s       = u_s
//! Lambda_s v_s + (1 + Omega_s) t_s = nu_s
//! ```
//!
//! with
//! `T_iks = (2 pi s^4 EI_i / (a^4 b^2 D)) sum_n n sin_in cos_kn / Q_ns`,
//! `Lambda_iks = (2 GC_i s^2 / (pi a^2 b^2 D)) sum_n n cos_in sin_kn / Q_ns`,
//! `Omega_iks = (2 GC_i s^2 / (a^2 b^3 D)) sum_n n^2 cos_in cos_kn / Q_ns`,
//! `nu_is = (GC_i s^2 / (2 pi a b D)) sum_n n cos_in P_ns / Q_ns`.
//! Every `n` sum is in closed form. Harmonics do not mix, so the stacked
//! matrix is block diagonal.
//!
//! [`TorsionCoupling::Printed`] keeps an older cross-harmonic variant of the
//! torque equation with coupling factor `(rs - (-1)^(r+s) s^2)/(r^2 - s^2)`
//! for comparison. It is not symmetric and is not the default.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::kernels::{navier_coefficient, spectral_q, InterfaceKernel, PairSums};
use crate::model::{
    sine_table, Axis, DeflectionField, EnergyReport, LoadSpectrum, ModelError, PlateSpec, Stiffener, Truncation,
};
use crate::solver_uni::{
    decompose_energy, eta_responses, factor_checked, harmonic_stiffness, interface_factor, stiffener_tables,
    synthesize_field, SolverError,
};

/// Value given to the cross-harmonic coupling factor at `r = s`, where the printed form is `0/0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalConvention {
    Zero,
    Half,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TorsionCoupling {
    /// Harmonic-diagonal model derived from the couple density.
    #[default]
    Consistent,
    /// Cross-harmonic model with the given diagonal convention.
    Printed { diagonal: DiagonalConvention },
}

/// `(rs - (-1)^(r+s) s^2) / (r^2 - s^2)`.
pub fn coupling_factor(r: usize, s: usize, diagonal: DiagonalConvention) -> f64 {
    if r == s {
        return match diagonal {
            DiagonalConvention::Zero => 0.0,
            DiagonalConvention::Half => 0.5,
        };
    }
    let (rf, sf) = (r as f64, s as f64);
    let sign = if (r + s) % 2 == 0 { 1.0 } else { -1.0 };
    (rf * sf - sign * sf * sf) / (rf * rf - sf * sf)
}

#[derive(Debug, Clone)]
pub struct TorsionSystem {
    pub coupling: TorsionCoupling,
    /// Harmonics carried by the system, ascending.
    pub harmonics: Vec<usize>,
    pub n_stiffeners: usize,
    pub u: Vec<DVector<f64>>,
    pub nu: Vec<DVector<f64>>,
    pub theta: Vec<DVector<f64>>,
    pub big_theta: Vec<DMatrix<f64>>,
    pub b: Vec<DMatrix<f64>>,
    pub t: Vec<DMatrix<f64>>,
    /// `Lambda_s`, `Omega_s` for the consistent model; the factor-free
    /// column blocks `Lambda~_s`, `Omega~_s` for the printed one.
    pub lambda: Vec<DMatrix<f64>>,
    pub omega: Vec<DMatrix<f64>>,
    pub phi_bar: DVector<f64>,
    psi_blocks: Vec<DMatrix<f64>>,
    psi_stacked: Option<DMatrix<f64>>,
}

impl TorsionSystem {
    fn factor(&self, r: usize, s: usize) -> f64 {
        match self.coupling {
            TorsionCoupling::Consistent => {
                if r == s {
                    1.0
                } else {
                    0.0
                }
            }
            TorsionCoupling::Printed { diagonal } => coupling_factor(r, s, diagonal),
        }
    }

    /// `Lambda_rs` by position in `harmonics`.
    pub fn lambda_block(&self, ri: usize, si: usize) -> DMatrix<f64> {
        match self.coupling {
            TorsionCoupling::Consistent if ri != si => DMatrix::zeros(self.n_stiffeners, self.n_stiffeners),
            _ => &self.lambda[si] * self.factor(self.harmonics[ri], self.harmonics[si]),
        }
    }

    pub fn omega_block(&self, ri: usize, si: usize) -> DMatrix<f64> {
        match self.coupling {
            TorsionCoupling::Consistent if ri != si => DMatrix::zeros(self.n_stiffeners, self.n_stiffeners),
            _ => &self.omega[si] * self.factor(self.harmonics[ri], self.harmonics[si]),
        }
    }

    /// `Psi_rs = delta_rs + Omega_rs - Lambda_rs Theta_s`.
    pub fn psi_block(&self, ri: usize, si: usize) -> DMatrix<f64> {
        let n = self.n_stiffeners;
        if let Some(full) = &self.psi_stacked {
            return full.view((ri * n, si * n), (n, n)).into_owned();
        }
        if ri == si {
            self.psi_blocks[ri].clone()
        } else {
            DMatrix::zeros(n, n)
        }
    }

    pub fn psi_bar(&self) -> DMatrix<f64> {
        if let Some(full) = &self.psi_stacked {
            return full.clone();
        }
        let n = self.n_stiffeners;
        let k = self.harmonics.len();
        let mut m = DMatrix::zeros(n * k, n * k);
        for (ri, blk) in self.psi_blocks.iter().enumerate() {
            m.view_mut((ri * n, ri * n), (n, n)).copy_from(blk);
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct TorsionSolution {
    pub plate: PlateSpec,
    pub stiffeners: Vec<Stiffener>,
    pub load: LoadSpectrum,
    pub trunc: Truncation,
    pub coupling: TorsionCoupling,
    pub t_spectra: BTreeMap<usize, DVector<f64>>,
    pub v_spectra: BTreeMap<usize, DVector<f64>>,
    pub field: DeflectionField,
    pub energy: EnergyReport,
}

fn check_inputs(plate: &PlateSpec, stiffeners: &[Stiffener], load: &LoadSpectrum, trunc: Truncation) -> Result<(), SolverError> {
    plate.validate()?;
    Truncation::new(trunc.m_f, trunc.s_f)?;
    for s in stiffeners {
        s.validate(plate)?;
        if s.axis != Axis::EtaAligned {
            return Err(SolverError::Unsupported("torsion supported for single-axis only".into()));
        }
    }
    if !load.fits(trunc) {
        return Err(ModelError::Validation("load harmonics exceed the truncation".into()).into());
    }
    Ok(())
}

fn numerical(source: crate::linalg::LinalgError) -> SolverError {
    SolverError::Numerical { source, condition: f64::NAN }
}

pub fn assemble_torsion(
    plate: &PlateSpec,
    stiffeners: &[Stiffener],
    load: &LoadSpectrum,
    trunc: Truncation,
    coupling: TorsionCoupling,
) -> Result<TorsionSystem, SolverError> {
    check_inputs(plate, stiffeners, load, trunc)?;
    let n = stiffeners.len();
    let (a, b, d) = (plate.a, plate.b, plate.d);
    let (sines, cosines) = stiffener_tables(plate, stiffeners, trunc.m_f);
    let mut cache = BTreeMap::new();
    let responses = eta_responses(plate, stiffeners, load, &sines, &mut cache)?;
    let harmonics: Vec<usize> = match coupling {
        TorsionCoupling::Consistent => responses.keys().copied().collect(),
        TorsionCoupling::Printed { .. } => (1..=trunc.s_f).collect(),
    };

    // sum_n n cos_in P_ns / Q_ns for every harmonic in the load.
    let mut twist_load: BTreeMap<usize, DVector<f64>> = BTreeMap::new();
    let mut bend_load: BTreeMap<usize, DVector<f64>> = BTreeMap::new();
    for (m, r, p) in load.iter() {
        let q = spectral_q(m, r, plate);
        let tw = twist_load.entry(r).or_insert_with(|| DVector::zeros(n));
        let be = bend_load.entry(r).or_insert_with(|| DVector::zeros(n));
        for i in 0..n {
            tw[i] += m as f64 * cosines[i][m - 1] * p / q;
            be[i] += sines[i][m - 1] * p / q;
        }
    }

    let mut sys = TorsionSystem {
        coupling,
        harmonics: harmonics.clone(),
        n_stiffeners: n,
        u: Vec::new(),
        nu: Vec::new(),
        theta: Vec::new(),
        big_theta: Vec::new(),
        b: Vec::new(),
        t: Vec::new(),
        lambda: Vec::new(),
        omega: Vec::new(),
        phi_bar: DVector::zeros(n * harmonics.len()),
        psi_blocks: Vec::new(),
        psi_stacked: None,
    };
    for &s in &harmonics {
        let sf = s as f64;
        let sums = PairSums::for_axis(plate, Axis::EtaAligned, s);
        let f = match cache.remove(&s) {
            Some(f) => f,
            None => interface_factor(plate, stiffeners, s)?,
        };
        let b_s = InterfaceKernel::assemble(plate, stiffeners, s).b_matrix;
        let t_s = DMatrix::from_fn(n, n, |i, k| {
            2.0 * PI * sf.powi(4) * stiffeners[i].ei / (a.powi(4) * b * b * d)
                * sums.n_sin_cos(stiffeners[i].position, stiffeners[k].position)
        });
        let (lambda, omega) = match coupling {
            TorsionCoupling::Consistent => (
                DMatrix::from_fn(n, n, |i, k| {
                    2.0 * stiffeners[i].gc * sf * sf / (PI * a * a * b * b * d)
                        * sums.n_sin_cos(stiffeners[k].position, stiffeners[i].position)
                }),
                DMatrix::from_fn(n, n, |i, k| {
                    2.0 * stiffeners[i].gc * sf * sf / (a * a * b.powi(3) * d)
                        * sums.n2_cos_cos(stiffeners[i].position, stiffeners[k].position)
                }),
            ),
            TorsionCoupling::Printed { .. } => (
                DMatrix::from_fn(n, n, |j, i| {
                    4.0 * stiffeners[j].gc / (PI.powi(3) * a * b * b * d)
                        * sums.n_sin_cos(stiffeners[i].position, stiffeners[j].position)
                }),
                DMatrix::from_fn(n, n, |j, i| {
                    4.0 * stiffeners[j].gc / (PI * PI * a * b.powi(3) * d)
                        * sums.n2_cos_cos(stiffeners[j].position, stiffeners[i].position)
                }),
            ),
        };
        let zero = DVector::zeros(n);
        let bl = bend_load.get(&s).unwrap_or(&zero);
        sys.u.push(DVector::from_fn(n, |i, _| sf.powi(4) * stiffeners[i].ei / (2.0 * a.powi(3) * d) * bl[i]));
        let theta = responses.get(&s).cloned().unwrap_or_else(|| DVector::zeros(n));
        let big_theta = f.solve_matrix(&t_s).map_err(numerical)?;
        sys.theta.push(theta);
        sys.big_theta.push(big_theta);
        sys.b.push(b_s);
        sys.t.push(t_s);
        sys.lambda.push(lambda);
        sys.omega.push(omega);
    }

    // nu
    for &r in &harmonics {
        let rf = r as f64;
        let nu = match coupling {
            TorsionCoupling::Consistent => {
                let tw = twist_load.get(&r).cloned().unwrap_or_else(|| DVector::zeros(n));
                DVector::from_fn(n, |i, _| stiffeners[i].gc * rf * rf / (2.0 * PI * a * b * d) * tw[i])
            }
            TorsionCoupling::Printed { diagonal } => {
                let mut acc = DVector::zeros(n);
                for (&s, tw) in &twist_load {
                    let c = coupling_factor(r, s, diagonal);
                    for j in 0..n {
                        acc[j] += c * stiffeners[j].gc * tw[j] / (PI.powi(3) * b * d);
                    }
                }
                acc
            }
        };
        sys.nu.push(nu);
    }

    let k = harmonics.len();
    match coupling {
        TorsionCoupling::Consistent => {
            for si in 0..k {
                let mut psi = &sys.omega[si] - &sys.lambda[si] * &sys.big_theta[si];
                for i in 0..n {
                    psi[(i, i)] += 1.0;
                }
                let phi = &sys.nu[si] - &sys.lambda[si] * &sys.theta[si];
                sys.phi_bar.rows_mut(si * n, n).copy_from(&phi);
                sys.psi_blocks.push(psi);
            }
        }
        TorsionCoupling::Printed { .. } => {
            let mut full = DMatrix::zeros(n * k, n * k);
            for ri in 0..k {
                let mut phi = sys.nu[ri].clone();
                for si in 0..k {
                    let lam = sys.lambda_block(ri, si);
                    let mut blk = sys.omega_block(ri, si) - &lam * &sys.big_theta[si];
                    if ri == si {
                        for i in 0..n {
                            blk[(i, i)] += 1.0;
                        }
                    }
                    phi -= &lam * &sys.theta[si];
                    full.view_mut((ri * n, si * n), (n, n)).copy_from(&blk);
                }
                sys.phi_bar.rows_mut(ri * n, n).copy_from(&phi);
            }
            sys.psi_stacked = Some(full);
        }
    }
    Ok(sys)
}

pub fn solve_torsion(
    system: &TorsionSystem,
    plate: &PlateSpec,
    stiffeners: &[Stiffener],
    load: &LoadSpectrum,
    trunc: Truncation,
) -> Result<TorsionSolution, SolverError> {
    let n = system.n_stiffeners;
    let k = system.harmonics.len();
    let t_bar = match &system.psi_stacked {
        Some(full) => {
            if k * n == 0 {
                DVector::zeros(0)
            } else {
                factor_checked(full)?.solve(&system.phi_bar).map_err(numerical)?
            }
        }
        None => {
            let mut t = DVector::zeros(n * k);
            for si in 0..k {
                if n == 0 {
                    continue;
                }
                let phi = system.phi_bar.rows(si * n, n).into_owned();
                let ts = factor_checked(&system.psi_blocks[si])?.solve(&phi).map_err(numerical)?;
                t.rows_mut(si * n, n).copy_from(&ts);
            }
            t
        }
    };
    let mut t_spectra = BTreeMap::new();
    let mut v_spectra = BTreeMap::new();
    for (si, &s) in system.harmonics.iter().enumerate() {
        let t = t_bar.rows(si * n, n).into_owned();
        let v = &system.theta[si] - &system.big_theta[si] * &t;
        t_spectra.insert(s, t);
        v_spectra.insert(s, v);
    }
    let (sines, cosines) = stiffener_tables(plate, stiffeners, trunc.m_f);
    let torques = Some((cosines.as_slice(), &t_spectra));
    let field = synthesize_field(plate, trunc, load, &sines, &v_spectra, torques);
    let energy = decompose_energy(plate, load, &field, &sines, &v_spectra, torques)?;
    Ok(TorsionSolution {
        plate: *plate,
        stiffeners: stiffeners.to_vec(),
        load: load.clone(),
        trunc,
        coupling: system.coupling,
        t_spectra,
        v_spectra,
        field,
        energy,
    })
}

/// Assembles and solves with the default coupling.
pub fn solve_with_torsion(
    plate: &PlateSpec,
    stiffeners: &[Stiffener],
    load: &LoadSpectrum,
    trunc: Truncation,
) -> Result<TorsionSolution, SolverError> {
    let sys = assemble_torsion(plate, stiffeners, load, trunc, TorsionCoupling::Consistent)?;
    solve_torsion(&sys, plate, stiffeners, load, trunc)
}

/// Relative residuals of the force and torque equations, largest over harmonics.
pub fn residuals(system: &TorsionSystem, solution: &TorsionSolution) -> (f64, f64) {
    let k = system.harmonics.len();
    let (mut force, mut torque) = (0.0f64, 0.0f64);
    for (ri, &r) in system.harmonics.iter().enumerate() {
        let v = &solution.v_spectra[&r];
        let t = &solution.t_spectra[&r];
        let rf = v + &system.b[ri] * v + &system.t[ri] * t - &system.u[ri];
        let scale = system.u[ri].amax().max(v.amax()).max(f64::MIN_POSITIVE);
        force = force.max(rf.amax() / scale);
        let mut rt = t - &system.nu[ri];
        for si in 0..k {
            let s = system.harmonics[si];
            rt += system.lambda_block(ri, si) * &solution.v_spectra[&s] + system.omega_block(ri, si) * &solution.t_spectra[&s];
        }
        let scale = system.nu[ri].amax().max(t.amax()).max(f64::MIN_POSITIVE);
        torque = torque.max(rt.amax() / scale);
    }
    (force, torque)
}

impl TorsionSolution {
    /// Sine coefficient `rho_is` of the cross-slope `w_xi` along stiffener `i`,
    /// summed over every `n` in closed form.
    pub fn cross_slope(&self, i: usize, s: usize) -> f64 {
        let plate = &self.plate;
        let x = self.stiffeners[i].position;
        let wave = PI / plate.b;
        let mut load_part = 0.0;
        for (n, r, p) in self.load.iter() {
            if r == s {
                load_part += n as f64 * (n as f64 * wave * x).cos() * p / harmonic_stiffness(n, s, plate);
            }
        }
        let sums = PairSums::for_axis(plate, Axis::EtaAligned, s);
        let (v, t) = match (self.v_spectra.get(&s), self.t_spectra.get(&s)) {
            (Some(v), Some(t)) => (v, t),
            _ => return wave * load_part,
        };
        let mut corr = 0.0;
        for (k, st) in self.stiffeners.iter().enumerate() {
            corr += sums.n_sin_cos(st.position, x) * v[k] + wave * sums.n2_cos_cos(x, st.position) * t[k];
        }
        wave * (load_part - 4.0 / (plate.a * plate.b * PI.powi(4) * plate.d) * corr)
    }

    /// Torque coefficient rebuilt from the field: `GC_i (s pi/a)^2 (a/2) rho_is`.
    pub fn shaft_torque(&self, i: usize, s: usize) -> f64 {
        let a = self.plate.a;
        self.stiffeners[i].gc * (s as f64 * PI / a).powi(2) * 0.5 * a * self.cross_slope(i, s)
    }
}

/// Deflection at `(xi, eta)` due to a unit couple about the eta direction at
/// `(alpha, beta)`: the `alpha` derivative of the point-load Green's function.
pub fn unit_couple_influence(plate: &PlateSpec, trunc: Truncation, xi: f64, eta: f64, alpha: f64, beta: f64) -> f64 {
    let sx = sine_table(xi / plate.b, trunc.m_f);
    let sy = sine_table(eta / plate.a, trunc.s_f);
    let sb = sine_table(beta / plate.a, trunc.s_f);
    let mut w = 0.0;
    for m in 1..=trunc.m_f {
        let wave = m as f64 * PI / plate.b;
        let slope = wave * (wave * alpha).cos();
        for r in 1..=trunc.s_f {
            w += navier_coefficient(m, r, plate) * sx[m - 1] * slope * sy[r - 1] * sb[r - 1];
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver_uni::{green_function, solve_general};

    fn unit() -> PlateSpec {
        PlateSpec::unit_square()
    }

    #[test]
    fn coupling_factor_values() {
        assert_eq!(coupling_factor(2, 2, DiagonalConvention::Zero), 0.0);
        assert_eq!(coupling_factor(3, 3, DiagonalConvention::Half), 0.5);
        // r=2, s=1: (2 - (-1) 1)/(4 - 1) = 1.
        assert_eq!(coupling_factor(2, 1, DiagonalConvention::Zero), 1.0);
        // r=3, s=1: (3 - 1)/(9 - 1) = 0.25.
        assert_eq!(coupling_factor(3, 1, DiagonalConvention::Zero), 0.25);
    }

    #[test]
    fn zero_torsional_rigidity_reproduces_unidirectional_bits() {
        let p = PlateSpec::new(1.0, 1.3, 0.1, 1.5, 0.3).unwrap();
        let st = [Stiffener::eta(0.3, 0.8), Stiffener::eta(0.9, 2.0)];
        let tr = Truncation::square(24);
        let load = LoadSpectrum::uniform(1.0, tr);
        let uni = solve_general(&p, &st, &load, tr).unwrap();
        for coupling in [
            TorsionCoupling::Consistent,
            TorsionCoupling::Printed { diagonal: DiagonalConvention::Zero },
            TorsionCoupling::Printed { diagonal: DiagonalConvention::Half },
        ] {
            let sys = assemble_torsion(&p, &st, &load, tr, coupling).unwrap();
            assert!(sys.lambda.iter().chain(&sys.omega).all(|m| m.iter().all(|&x| x == 0.0)));
            assert!(sys.nu.iter().all(|v| v.iter().all(|&x| x == 0.0)));
            let psi = sys.psi_bar();
            assert_eq!(psi, DMatrix::identity(psi.nrows(), psi.ncols()));
            let sol = solve_torsion(&sys, &p, &st, &load, tr).unwrap();
            for (x, y) in sol.field.coeffs.iter().zip(&uni.field.coeffs) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
            assert_eq!(sol.energy.u_total.to_bits(), uni.energy.u_total.to_bits());
        }
    }

    #[test]
    fn mid_span_stiffener_is_not_twisted() {
        let p = unit();
        let st = [Stiffener::eta(0.5, 1.0).with_gc(0.3)];
        let tr = Truncation::square(10);
        let load = LoadSpectrum::bisinusoidal(1, 1, 1.0);
        let sys = assemble_torsion(&p, &st, &load, tr, TorsionCoupling::Consistent).unwrap();
        let off = [Stiffener::eta(0.3, 1.0).with_gc(0.3)];
        let scale = assemble_torsion(&p, &off, &load, tr, TorsionCoupling::Consistent).unwrap().phi_bar.amax();
        assert!(scale > 0.0);
        assert!(sys.phi_bar.amax() <= 1e-13 * scale, "{} vs {scale}", sys.phi_bar.amax());
    }

    #[test]
    fn low_harmonic_blocks_stay_near_identity() {
        let p = unit();
        let gamma = 0.1;
        let st = [Stiffener::eta(0.35, 1.0).with_gc(gamma * p.b * p.d)];
        let tr = Truncation::square(6);
        let load = LoadSpectrum::explicit(&[(1, 1, 1.0), (1, 2, 1.0), (1, 3, 1.0)]).unwrap();
        let sys = assemble_torsion(&p, &st, &load, tr, TorsionCoupling::Consistent).unwrap();
        for ri in 0..3 {
            let mut d = sys.psi_block(ri, ri);
            d[(0, 0)] -= 1.0;
            assert!(d.norm() <= 10.0 * gamma, "r={} {}", ri + 1, d.norm());
        }
    }

    #[test]
    fn both_equation_sets_are_satisfied() {
        let p = PlateSpec::new(1.1, 0.9, 0.1, 1.0, 0.3).unwrap();
        let st = [Stiffener::eta(0.2, 0.7).with_gc(0.4), Stiffener::eta(0.55, 1.5).with_gc(0.1)];
        let tr = Truncation::square(16);
        let load = LoadSpectrum::uniform(1.0, tr);
        for coupling in [TorsionCoupling::Consistent, TorsionCoupling::Printed { diagonal: DiagonalConvention::Zero }] {
            let sys = assemble_torsion(&p, &st, &load, tr, coupling).unwrap();
            let sol = solve_torsion(&sys, &p, &st, &load, tr).unwrap();
            let (f, t) = residuals(&sys, &sol);
            assert!(f <= 1e-10 && t <= 1e-10, "{coupling:?}: {f} {t}");
        }
    }

    #[test]
    fn torque_follows_the_shaft_relation() {
        let p = PlateSpec::new(1.1, 0.9, 0.1, 1.0, 0.3).unwrap();
        let st = [Stiffener::eta(0.2, 0.7).with_gc(0.4), Stiffener::eta(0.55, 1.5).with_gc(0.1)];
        let tr = Truncation::square(16);
        let sol = solve_with_torsion(&p, &st, &LoadSpectrum::uniform(1.0, tr), tr).unwrap();
        let scale = sol.t_spectra.values().fold(0.0f64, |m, t| m.max(t.amax()));
        for (&s, t) in &sol.t_spectra {
            for i in 0..st.len() {
                assert!((t[i] - sol.shaft_torque(i, s)).abs() <= 1e-8 * scale, "s={s} i={i}");
            }
        }
    }

    #[test]
    fn torsional_rigidity_lowers_compliance() {
        let p = PlateSpec::new(1.0, 1.4, 0.1, 1.0, 0.3).unwrap();
        let tr = Truncation::square(14);
        let load = LoadSpectrum::uniform(1.0, tr);
        let mut last = f64::INFINITY;
        for gc in [0.0, 0.05, 0.5, 5.0] {
            let st = [Stiffener::eta(0.3, 0.5).with_gc(gc), Stiffener::eta(1.0, 0.5).with_gc(gc)];
            let u = solve_with_torsion(&p, &st, &load, tr).unwrap().energy.u_total;
            assert!(u <= last, "gc={gc}");
            last = u;
        }
    }

    #[test]
    fn contributions_include_torsion() {
        let p = unit();
        let st = [Stiffener::eta(0.3, 0.5).with_gc(0.2)];
        let tr = Truncation::square(12);
        let sol = solve_with_torsion(&p, &st, &LoadSpectrum::uniform(1.0, tr), tr).unwrap();
        let e = &sol.energy;
        assert!(e.contribution("torsion[0]").unwrap() < 0.0);
        assert!((e.contribution_sum() - e.u_total).abs() <= 1e-12 * e.u_total);
    }

    #[test]
    fn unit_couple_is_the_green_function_slope() {
        let p = PlateSpec::new(1.2, 0.8, 0.1, 1.0, 0.3).unwrap();
        let tr = Truncation::square(20);
        let h = 1e-5;
        for &(x, y, al, be) in &[(0.2, 0.3, 0.5, 0.7), (0.6, 0.9, 0.1, 0.4), (0.45, 0.5, 0.7, 1.0)] {
            let fd = (green_function(&p, tr, x, y, al + h, be) - green_function(&p, tr, x, y, al - h, be)) / (2.0 * h);
            let w = unit_couple_influence(&p, tr, x, y, al, be);
            assert!((fd - w).abs() <= 1e-8 * w.abs().max(1e-3), "{fd} vs {w}");
        }
    }

    #[test]
    fn rejects_xi_aligned() {
        let st = [Stiffener::xi(0.5, 1.0).with_gc(0.1)];
        let r = solve_with_torsion(&unit(), &st, &LoadSpectrum::bisinusoidal(1, 1, 1.0), Truncation::square(4));
        assert!(matches!(r, Err(SolverError::Unsupported(_))));
    }
}
