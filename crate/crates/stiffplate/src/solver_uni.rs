//! Exact solver for parallel eta-aligned stiffeners without torsion.
//!
//! For each eta harmonic `s` the interface spectra
//! `v_is = EI_i Int w''''(x_i, eta) sin(s pi eta/a) d eta` solve
//! `(1 + B_s) v_s = u_s` with
//! `u_is = (s^4 / (2 a^3 D)) EI_i sum_n sin(n pi x_i/b) P_ns / Q_ns`,
//! and the plate coefficients follow as
//! `W_ns = [P_ns - (4/ab) sum_i sin(n pi x_i/b) v_is] / (pi^4 D Q_ns)`.
//! `B_s` sums over all `n` in closed form, so only the load is truncated.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DVector;
use thiserror::Error;

use crate::kernels::{navier_coefficient, spectral_q, InterfaceKernel, PairSums};
use crate::linalg::{condition_estimate, identity_plus, Factorization, LinalgError};
use crate::model::{
    cosine_table, nondimensional_energy, sine_table, Axis, Contribution, DeflectionField, EnergyReport, LoadSpectrum,
    ModelError, PlateSpec, Stiffener, Truncation,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{source} (condition estimate {condition:.3e})")]
    Numerical { source: LinalgError, condition: f64 },
    #[error("{0}")]
    Unsupported(String),
}

pub(crate) fn factor_checked(a: &crate::linalg::DenseMatrix) -> Result<Factorization, SolverError> {
    Factorization::new(a).map_err(|source| SolverError::Numerical { source, condition: condition_estimate(a) })
}

/// `pi^4 D Q_ns`, the plate stiffness of harmonic `(n, s)`.
pub fn harmonic_stiffness(n: usize, s: usize, plate: &PlateSpec) -> f64 {
    PI.powi(4) * plate.d * spectral_q(n, s, plate)
}

#[derive(Debug, Clone)]
pub struct UniSolution {
    pub plate: PlateSpec,
    pub stiffeners: Vec<Stiffener>,
    pub load: LoadSpectrum,
    pub field: DeflectionField,
    /// `v_is` by eta harmonic; harmonics absent from the load are omitted.
    pub interface_spectra: BTreeMap<usize, DVector<f64>>,
    pub energy: EnergyReport,
}

fn check_inputs(plate: &PlateSpec, stiffeners: &[Stiffener], trunc: Truncation) -> Result<(), SolverError> {
    plate.validate()?;
    Truncation::new(trunc.m_f, trunc.s_f)?;
    for s in stiffeners {
        s.validate(plate)?;
        if s.axis != Axis::EtaAligned {
            return Err(SolverError::Unsupported("unidirectional solver takes eta-aligned stiffeners only".into()));
        }
        if s.gc != 0.0 {
            return Err(SolverError::Unsupported("torsional rigidity needs the torsion solver".into()));
        }
    }
    Ok(())
}

/// Closed-form solution for the load `P sin(g pi xi/b) sin(h pi eta/a)`.
pub fn solve_bisinusoidal(
    plate: &PlateSpec,
    stiffeners: &[Stiffener],
    g: usize,
    h: usize,
    p_gh: f64,
    trunc: Truncation,
) -> Result<UniSolution, SolverError> {
    if g < 1 || h < 1 {
        return Err(ModelError::Validation("load harmonic indices start at 1".into()).into());
    }
    solve_general(plate, stiffeners, &LoadSpectrum::bisinusoidal(g, h, p_gh), trunc)
}

/// Superposes the per-term closed forms over the load spectrum in ascending `(g, h)` order.
pub fn solve_general(
    plate: &PlateSpec,
    stiffeners: &[Stiffener],
    load: &LoadSpectrum,
    trunc: Truncation,
) -> Result<UniSolution, SolverError> {
    check_inputs(plate, stiffeners, trunc)?;
    if !load.fits(trunc) {
        return Err(ModelError::Validation("load harmonics exceed the truncation".into()).into());
    }
    let sines = stiffener_tables(plate, stiffeners, trunc.m_f).0;
    let mut factors = BTreeMap::new();
    let spectra = eta_responses(plate, stiffeners, load, &sines, &mut factors)?;
    let field = synthesize_field(plate, trunc, load, &sines, &spectra, None);
    let energy = decompose_energy(plate, load, &field, &sines, &spectra, None)?;
    Ok(UniSolution {
        plate: *plate,
        stiffeners: stiffeners.to_vec(),
        load: load.clone(),
        field,
        interface_spectra: spectra,
        energy,
    })
}

/// Compliance only, skipping the field: `U0 - (1/2) sum_s sum_i v_is X_is`
/// with `X_is = sum_n P_ns sin(n pi x_i/b) / (pi^4 D Q_ns)`.
pub fn energy_only(
    plate: &PlateSpec,
    stiffeners: &[Stiffener],
    load: &LoadSpectrum,
    trunc: Truncation,
) -> Result<f64, SolverError> {
    check_inputs(plate, stiffeners, trunc)?;
    if !load.fits(trunc) {
        return Err(ModelError::Validation("load harmonics exceed the truncation".into()).into());
    }
    let sines = stiffener_tables(plate, stiffeners, trunc.m_f).0;
    let spectra = eta_responses(plate, stiffeners, load, &sines, &mut BTreeMap::new())?;
    let mut u = unstiffened_energy(plate, load);
    for (n, s, p) in load.iter() {
        let v = &spectra[&s];
        let k = harmonic_stiffness(n, s, plate);
        for i in 0..stiffeners.len() {
            u -= 0.5 * p * sines[i][n - 1] * v[i] / k;
        }
    }
    Ok(u)
}

/// Sine and cosine tables `sin(n pi x_i/b)`, `cos(n pi x_i/b)` for `n = 1..=count`.
pub(crate) fn stiffener_tables(plate: &PlateSpec, stiffeners: &[Stiffener], count: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let sines = stiffeners.iter().map(|st| sine_table(st.position / plate.b, count)).collect();
    let cosines = stiffeners.iter().map(|st| cosine_table(st.position / plate.b, count)).collect();
    (sines, cosines)
}

/// Factorisation of `1 + B_s`.
pub(crate) fn interface_factor(plate: &PlateSpec, stiffeners: &[Stiffener], s: usize) -> Result<Factorization, SolverError> {
    let kernel = InterfaceKernel::assemble(plate, stiffeners, s);
    factor_checked(&identity_plus(&kernel.b_matrix))
}

/// `(1 + B_s)^-1 u_s` for every loaded `s`, one solve per load term,
/// accumulated in ascending `g`. Factorisations are cached in `factors`.
pub(crate) fn eta_responses(
    plate: &PlateSpec,
    stiffeners: &[Stiffener],
    load: &LoadSpectrum,
    sines: &[Vec<f64>],
    factors: &mut BTreeMap<usize, Factorization>,
) -> Result<BTreeMap<usize, DVector<f64>>, SolverError> {
    let n_st = stiffeners.len();
    let mut spectra: BTreeMap<usize, DVector<f64>> = BTreeMap::new();
    for (g, h, p) in load.iter() {
        let v = if n_st == 0 {
            DVector::zeros(0)
        } else {
            if !factors.contains_key(&h) {
                factors.insert(h, interface_factor(plate, stiffeners, h)?);
            }
            let rhs_scale = (h as f64).powi(4) / (2.0 * plate.a.powi(3) * plate.d) * p / spectral_q(g, h, plate);
            let u = DVector::from_fn(n_st, |i, _| rhs_scale * stiffeners[i].ei * sines[i][g - 1]);
            factors[&h].solve(&u).map_err(|source| SolverError::Numerical { source, condition: f64::NAN })?
        };
        spectra.entry(h).and_modify(|acc| *acc += &v).or_insert(v);
    }
    Ok(spectra)
}

/// `W_ns = [P_ns - (4/ab) sum_i (sin_in v_is + (n pi/b) cos_in t_is)] / (pi^4 D Q_ns)`
/// for every `s` present in `forces`.
pub(crate) fn synthesize_field(
    plate: &PlateSpec,
    trunc: Truncation,
    load: &LoadSpectrum,
    sines: &[Vec<f64>],
    forces: &BTreeMap<usize, DVector<f64>>,
    torques: Option<(&[Vec<f64>], &BTreeMap<usize, DVector<f64>>)>,
) -> DeflectionField {
    let mut field = DeflectionField::zeros(*plate, trunc);
    let scale = 4.0 / (plate.a * plate.b);
    for (&s, v) in forces {
        let t = torques.and_then(|(_, t)| t.get(&s));
        for n in 1..=trunc.m_f {
            let mut num = load.get(n, s);
            for i in 0..v.len() {
                num -= scale * sines[i][n - 1] * v[i];
            }
            if let (Some((cosines, _)), Some(t)) = (torques, t) {
                let wave = n as f64 * PI / plate.b;
                for i in 0..t.len() {
                    num -= scale * wave * cosines[i][n - 1] * t[i];
                }
            }
            field.set(n, s, num / harmonic_stiffness(n, s, plate));
        }
    }
    field
}

/// Energy with the labelled split `unstiffened`, `bending[i]` and, when torques
/// are given, `torsion[i]`.
pub(crate) fn decompose_energy(
    plate: &PlateSpec,
    load: &LoadSpectrum,
    field: &DeflectionField,
    sines: &[Vec<f64>],
    forces: &BTreeMap<usize, DVector<f64>>,
    torques: Option<(&[Vec<f64>], &BTreeMap<usize, DVector<f64>>)>,
) -> Result<EnergyReport, SolverError> {
    let mut report = strain_energy(field, load, plate)?;
    let n_st = sines.len();
    let mut bending = vec![0.0; n_st];
    let mut torsion = vec![0.0; n_st];
    for (n, s, p) in load.iter() {
        let k = harmonic_stiffness(n, s, plate);
        if let Some(v) = forces.get(&s) {
            for i in 0..n_st {
                bending[i] -= 0.5 * p * sines[i][n - 1] * v[i] / k;
            }
        }
        if let Some((cosines, t)) = torques {
            if let Some(t) = t.get(&s) {
                let wave = n as f64 * PI / plate.b;
                for i in 0..n_st {
                    torsion[i] -= 0.5 * p * wave * cosines[i][n - 1] * t[i] / k;
                }
            }
        }
    }
    let mut contributions = vec![Contribution { label: "unstiffened".into(), value: unstiffened_energy(plate, load) }];
    for (i, c) in bending.into_iter().enumerate() {
        contributions.push(Contribution { label: format!("bending[{i}]"), value: c });
    }
    if torques.is_some() {
        for (i, c) in torsion.into_iter().enumerate() {
            contributions.push(Contribution { label: format!("torsion[{i}]"), value: c });
        }
    }
    report.contributions = contributions;
    Ok(report)
}

/// Compliance of the bare plate, `(ab/8) sum P_ns^2 / (pi^4 D Q_ns)`.
pub fn unstiffened_energy(plate: &PlateSpec, load: &LoadSpectrum) -> f64 {
    load.iter()
        .map(|(m, r, p)| plate.a * plate.b / 8.0 * p * p / harmonic_stiffness(m, r, plate))
        .sum()
}

/// `U = (ab/8) sum P_ns W_ns`.
pub fn strain_energy(field: &DeflectionField, load: &LoadSpectrum, plate: &PlateSpec) -> Result<EnergyReport, SolverError> {
    if !load.fits(field.trunc) {
        let (m, r) = load.iter().fold((0, 0), |acc, (m, r, _)| (acc.0.max(m), acc.1.max(r)));
        return Err(ModelError::TruncationMismatch { field: (field.trunc.m_f, field.trunc.s_f), expected: (m, r) }.into());
    }
    let u: f64 = load.iter().map(|(m, r, p)| plate.a * plate.b / 8.0 * p * field.get(m, r)).sum();
    Ok(EnergyReport {
        u_total: u,
        u_hat: nondimensional_energy(u, plate, load),
        contributions: vec![Contribution { label: "total".into(), value: u }],
    })
}

pub fn evaluate_field(field: &DeflectionField, xi: f64, eta: f64) -> Result<f64, SolverError> {
    Ok(field.evaluate(xi, eta)?)
}

/// Point-load Green's function truncated at `trunc`, symmetric under
/// exchange of `(xi, eta)` and `(alpha, beta)` bit for bit.
pub fn green_function(plate: &PlateSpec, trunc: Truncation, xi: f64, eta: f64, alpha: f64, beta: f64) -> f64 {
    let sx = sine_table(xi / plate.b, trunc.m_f);
    let sa = sine_table(alpha / plate.b, trunc.m_f);
    let sy = sine_table(eta / plate.a, trunc.s_f);
    let sb = sine_table(beta / plate.a, trunc.s_f);
    let mut w = 0.0;
    for m in 1..=trunc.m_f {
        for r in 1..=trunc.s_f {
            w += navier_coefficient(m, r, plate) * (sx[m - 1] * sa[m - 1]) * (sy[r - 1] * sb[r - 1]);
        }
    }
    w
}

impl UniSolution {
    /// Deflection with the stiffener corrections summed over every `n` in closed form.
    pub fn deflection_at(&self, xi: f64, eta: f64) -> Result<f64, SolverError> {
        if !self.plate.contains(xi, eta) {
            return Err(ModelError::OutOfDomain { xi, eta }.into());
        }
        let plate = &self.plate;
        let mut w = 0.0;
        for (n, s, p) in self.load.iter() {
            w += p * (n as f64 * PI * xi / plate.b).sin() * (s as f64 * PI * eta / plate.a).sin()
                / harmonic_stiffness(n, s, plate);
        }
        for (&s, v) in &self.interface_spectra {
            let sums = PairSums::for_axis(plate, Axis::EtaAligned, s);
            let mut corr = 0.0;
            for (i, st) in self.stiffeners.iter().enumerate() {
                corr += sums.sin_sin(st.position, xi) * v[i];
            }
            w -= 2.0 / (plate.a * plate.b * PI.powi(4) * plate.d) * corr * (s as f64 * PI * eta / plate.a).sin();
        }
        Ok(w)
    }

    /// Beam deflection of stiffener `i` rebuilt from its interface spectrum:
    /// `sum_s 2 a^3 v_is / (EI_i s^4 pi^4) sin(s pi eta/a)`.
    pub fn beam_deflection(&self, i: usize, eta: f64) -> f64 {
        let st = &self.stiffeners[i];
        if st.ei == 0.0 {
            return f64::NAN;
        }
        let a = self.plate.a;
        self.interface_spectra
            .iter()
            .map(|(&s, v)| 2.0 * a.powi(3) * v[i] / (st.ei * (s as f64 * PI).powi(4)) * (s as f64 * PI * eta / a).sin())
            .sum()
    }

    /// Sine coefficients of the line force on stiffener `i`, `(2/a) v_is`.
    pub fn line_force_coefficients(&self, i: usize) -> BTreeMap<usize, f64> {
        self.interface_spectra.iter().map(|(&s, v)| (s, 2.0 / self.plate.a * v[i])).collect()
    }
}
