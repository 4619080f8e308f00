//! Bidirectional stiffening without torsion.
//!
//! Unknowns are the interface spectra `v_is` of the eta-aligned stiffeners
//! (eta harmonic `s <= s_f`) and `z_jn` of the xi-aligned ones (xi harmonic
//! `n <= m_f`). Compatibility on both families gives
//!
//! ```text
//! (1 + B_s) v_s + sum_n C_sn z_n = u_s
//! (1 + F_n) z_n + sum_s D_ns v_s = y_n
//! ```
//!
//! with `C_isjn = (2 s^4 EI_i/(a^4 b D)) sin_in mu_js / Q_ns`,
//! `D_jins = (2 n^4 EI_j/(a b^4 D)) mu_js sin_in / Q_ns`,
//! `mu_js = sin(s pi y_j/a)`. `B_s` and `F_n` sum over the crossed harmonic in
//! closed form. Eliminating `v` leaves `(1 - M) z = g` of size `N_xi m_f`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::kernels::{spectral_q, InterfaceKernel, PairSums};
use crate::linalg::condition_estimate;
use crate::model::{
    sine_table, Axis, Contribution, DeflectionField, EnergyReport, LoadSpectrum, ModelError, PlateSpec, Stiffener,
    Truncation,
};
use crate::solver_uni::{
    factor_checked, harmonic_stiffness, interface_factor, solve_general, strain_energy, unstiffened_energy,
    SolverError,
};

/// Layout of the harmonic blocks in the stacked system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockOrder {
    /// Highest harmonic first.
    #[default]
    Descending,
    Natural,
}

/// Which path produced a [`BiSolution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Bidirectional,
    /// Only eta-aligned stiffeners: closed-form unidirectional solver.
    Unidirectional,
    /// Only xi-aligned stiffeners: unidirectional solver on the transposed plate.
    Transposed,
}

impl Route {
    pub fn name(&self) -> &'static str {
        match self {
            Route::Bidirectional => "bidirectional",
            Route::Unidirectional => "unidirectional",
            Route::Transposed => "unidirectional-transposed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BiSystem {
    pub g_bar: DVector<f64>,
    pub m_bar: DMatrix<f64>,
    pub order: BlockOrder,
    pub m_tot: usize,
    /// Tail of the eta harmonics dropped from the inner sums, `1/(3 s_f^3)`.
    pub inner_tail_bound: f64,
    trunc: Truncation,
    eta: Vec<(usize, Stiffener)>,
    xi: Vec<(usize, Stiffener)>,
    /// `(1 + B_s)^-1 u_s`, index `s - 1`.
    theta: Vec<DVector<f64>>,
    /// `(1 + B_s)^-1 diag(c_s) sin`, `N_eta x m_f`, index `s - 1`.
    response: Vec<DMatrix<f64>>,
    /// `mu[j][s - 1]`.
    mu: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct BiSolution {
    pub plate: PlateSpec,
    pub stiffeners: Vec<Stiffener>,
    pub load: LoadSpectrum,
    pub route: Route,
    /// `z_jn` by xi harmonic, xi-aligned stiffeners in input order.
    pub z_spectra: BTreeMap<usize, DVector<f64>>,
    /// `v_is` by eta harmonic, eta-aligned stiffeners in input order.
    pub v_spectra: BTreeMap<usize, DVector<f64>>,
    pub field: DeflectionField,
    pub energy: EnergyReport,
    pub condition: Option<f64>,
    pub inner_tail_bound: f64,
}

fn split_axes(stiffeners: &[Stiffener]) -> (Vec<(usize, Stiffener)>, Vec<(usize, Stiffener)>) {
    let eta = stiffeners.iter().copied().enumerate().filter(|(_, s)| s.axis == Axis::EtaAligned).collect();
    let xi = stiffeners.iter().copied().enumerate().filter(|(_, s)| s.axis == Axis::XiAligned).collect();
    (eta, xi)
}

fn check_inputs(plate: &PlateSpec, stiffeners: &[Stiffener], load: &LoadSpectrum, trunc: Truncation) -> Result<(), SolverError> {
    plate.validate()?;
    Truncation::new(trunc.m_f, trunc.s_f)?;
    for s in stiffeners {
        s.validate(plate)?;
        if s.gc != 0.0 {
            return Err(SolverError::Unsupported("torsion supported for single-axis only".into()));
        }
    }
    if !load.fits(trunc) {
        return Err(ModelError::Validation("load harmonics exceed the truncation".into()).into());
    }
    Ok(())
}

impl BiSystem {
    fn block(&self, n: usize) -> usize {
        match self.order {
            BlockOrder::Descending => self.trunc.m_f - n,
            BlockOrder::Natural => n - 1,
        }
    }

    /// Position of `z_jn` in the stacked vector.
    pub fn index(&self, j: usize, n: usize) -> usize {
        self.block(n) * self.xi.len() + j
    }
}

/// Builds `g` and `M` of `(1 - M) z = g`.
pub fn assemble_bi(
    plate: &PlateSpec,
    stiffeners: &[Stiffener],
    load: &LoadSpectrum,
    trunc: Truncation,
    order: BlockOrder,
) -> Result<BiSystem, SolverError> {
    check_inputs(plate, stiffeners, load, trunc)?;
    let (eta, xi) = split_axes(stiffeners);
    let (n_eta, n_xi) = (eta.len(), xi.len());
    let (m_f, s_f) = (trunc.m_f, trunc.s_f);
    let (a, b, d) = (plate.a, plate.b, plate.d);
    let eta_st: Vec<Stiffener> = eta.iter().map(|e| e.1).collect();
    let xi_st: Vec<Stiffener> = xi.iter().map(|e| e.1).collect();

    let sigma: Vec<Vec<f64>> = eta_st.iter().map(|st| sine_table(st.position / b, m_f)).collect();
    let mu: Vec<Vec<f64>> = xi_st.iter().map(|st| sine_table(st.position / a, s_f)).collect();
    let q = |n: usize, s: usize| spectral_q(n, s, plate);

    // Eta side, every s: theta_s and the response to the cross coupling.
    let sin_mat = DMatrix::from_fn(n_eta, m_f, |i, m| sigma[i][m]);
    let mut theta = Vec::with_capacity(s_f);
    let mut response = Vec::with_capacity(s_f);
    for s in 1..=s_f {
        let sf = s as f64;
        let mut u = DVector::zeros(n_eta);
        for (n, r, p) in load.iter() {
            if r == s {
                for i in 0..n_eta {
                    u[i] += sigma[i][n - 1] * p / q(n, s);
                }
            }
        }
        let mut scaled = sin_mat.clone();
        for i in 0..n_eta {
            u[i] *= sf.powi(4) * eta_st[i].ei / (2.0 * a.powi(3) * d);
            let c = 2.0 * sf.powi(4) * eta_st[i].ei / (a.powi(4) * b * d);
            scaled.row_mut(i).scale_mut(c);
        }
        if n_eta == 0 {
            theta.push(u);
            response.push(scaled);
            continue;
        }
        let f = interface_factor(plate, &eta_st, s)?;
        theta.push(f.solve(&u).map_err(|source| SolverError::Numerical { source, condition: f64::NAN })?);
        response.push(f.solve_matrix(&scaled).map_err(|source| SolverError::Numerical { source, condition: f64::NAN })?);
    }

    let mut system = BiSystem {
        g_bar: DVector::zeros(n_xi * m_f),
        m_bar: DMatrix::zeros(n_xi * m_f, n_xi * m_f),
        order,
        m_tot: n_xi * m_f,
        inner_tail_bound: 1.0 / (3.0 * (s_f as f64).powi(3)),
        trunc,
        eta,
        xi,
        theta,
        response,
        mu,
    };
    if n_xi == 0 {
        return Ok(system);
    }

    // H_s[n, m] = sum_k sin_kn response_s[k, m].
    let h_mats: Vec<DMatrix<f64>> = system.response.iter().map(|g| sin_mat.transpose() * g).collect();
    // sin-weighted theta: sum_k sin_kn theta_s[k].
    let h_vecs: Vec<DVector<f64>> = system.theta.iter().map(|t| sin_mat.transpose() * t).collect();

    let mu = &system.mu;
    let mut weights = vec![0.0; s_f];
    let mut block = DMatrix::zeros(n_xi, n_xi);
    for n in 1..=m_f {
        let nf = n as f64;
        let f_fact = factor_checked(&crate::linalg::identity_plus(&InterfaceKernel::assemble(plate, &xi_st, n).b_matrix))?;
        let alpha: Vec<f64> = xi_st.iter().map(|st| 2.0 * nf.powi(4) * st.ei / (a * b.powi(4) * d)).collect();

        let mut rhs = DVector::zeros(n_xi);
        for (m, r, p) in load.iter() {
            if m == n {
                for j in 0..n_xi {
                    rhs[j] += mu[j][r - 1] * p / q(n, r);
                }
            }
        }
        for j in 0..n_xi {
            rhs[j] *= nf.powi(4) * xi_st[j].ei / (2.0 * b.powi(3) * d);
            let mut cross = 0.0;
            for s in 1..=s_f {
                cross += mu[j][s - 1] / q(n, s) * h_vecs[s - 1][n - 1];
            }
            rhs[j] -= alpha[j] * cross;
        }
        let g_n = f_fact.solve(&rhs).map_err(|source| SolverError::Numerical { source, condition: f64::NAN })?;
        let row0 = system.block(n) * n_xi;
        system.g_bar.rows_mut(row0, n_xi).copy_from(&g_n);

        if n_eta == 0 {
            continue;
        }
        for m in 1..=m_f {
            for s in 1..=s_f {
                weights[s - 1] = h_mats[s - 1][(n - 1, m - 1)] / (q(n, s) * q(m, s));
            }
            for j in 0..n_xi {
                for l in 0..n_xi {
                    let mut acc = 0.0;
                    for s in 0..s_f {
                        acc += weights[s] * mu[j][s] * mu[l][s];
                    }
                    block[(j, l)] = alpha[j] * acc;
                }
            }
            let m_nm = f_fact.solve_matrix(&block).map_err(|source| SolverError::Numerical { source, condition: f64::NAN })?;
            let col0 = system.block(m) * n_xi;
            system.m_bar.view_mut((row0, col0), (n_xi, n_xi)).copy_from(&m_nm);
        }
    }
    Ok(system)
}

/// Solves the stacked system and recovers the eta spectra and the field.
pub fn solve_bi(
    system: &BiSystem,
    plate: &PlateSpec,
    stiffeners: &[Stiffener],
    load: &LoadSpectrum,
    trunc: Truncation,
) -> Result<BiSolution, SolverError> {
    let (n_eta, n_xi) = (system.eta.len(), system.xi.len());
    let (m_f, s_f) = (trunc.m_f, trunc.s_f);
    let mut lhs = -system.m_bar.clone();
    for k in 0..system.m_tot {
        lhs[(k, k)] += 1.0;
    }
    let (z_bar, condition) = if system.m_tot == 0 {
        (DVector::zeros(0), None)
    } else {
        let f = factor_checked(&lhs)?;
        let cond = if system.m_tot <= 400 { Some(condition_estimate(&lhs)) } else { None };
        (f.solve(&system.g_bar).map_err(|source| SolverError::Numerical { source, condition: f64::NAN })?, cond)
    };

    let mut z_spectra = BTreeMap::new();
    for n in 1..=m_f {
        z_spectra.insert(n, DVector::from_fn(n_xi, |j, _| z_bar[system.index(j, n)]));
    }
    let mut v_spectra = BTreeMap::new();
    for s in 1..=s_f {
        let mut zeta = DVector::zeros(m_f);
        for m in 1..=m_f {
            let z = &z_spectra[&m];
            let mut acc = 0.0;
            for l in 0..n_xi {
                acc += system.mu[l][s - 1] * z[l];
            }
            zeta[m - 1] = acc / spectral_q(m, s, plate);
        }
        let v = if n_eta == 0 { DVector::zeros(0) } else { &system.theta[s - 1] - &system.response[s - 1] * zeta };
        v_spectra.insert(s, v);
    }

    let field = synthesize(plate, trunc, load, system, &v_spectra, &z_spectra);
    let energy = energy_report(plate, stiffeners, load, &field, system, &v_spectra, &z_spectra)?;
    Ok(BiSolution {
        plate: *plate,
        stiffeners: stiffeners.to_vec(),
        load: load.clone(),
        route: Route::Bidirectional,
        z_spectra,
        v_spectra,
        field,
        energy,
        condition,
        inner_tail_bound: system.inner_tail_bound,
    })
}

fn synthesize(
    plate: &PlateSpec,
    trunc: Truncation,
    load: &LoadSpectrum,
    system: &BiSystem,
    v: &BTreeMap<usize, DVector<f64>>,
    z: &BTreeMap<usize, DVector<f64>>,
) -> DeflectionField {
    let sigma: Vec<Vec<f64>> = system.eta.iter().map(|(_, st)| sine_table(st.position / plate.b, trunc.m_f)).collect();
    let scale = 4.0 / (plate.a * plate.b);
    let mut field = DeflectionField::zeros(*plate, trunc);
    for n in 1..=trunc.m_f {
        let zn = &z[&n];
        for s in 1..=trunc.s_f {
            let vs = &v[&s];
            let mut num = load.get(n, s);
            for i in 0..vs.len() {
                num -= scale * sigma[i][n - 1] * vs[i];
            }
            for j in 0..zn.len() {
                num -= scale * system.mu[j][s - 1] * zn[j];
            }
            field.set(n, s, num / harmonic_stiffness(n, s, plate));
        }
    }
    field
}

fn energy_report(
    plate: &PlateSpec,
    stiffeners: &[Stiffener],
    load: &LoadSpectrum,
    field: &DeflectionField,
    system: &BiSystem,
    v: &BTreeMap<usize, DVector<f64>>,
    z: &BTreeMap<usize, DVector<f64>>,
) -> Result<EnergyReport, SolverError> {
    let mut report = strain_energy(field, load, plate)?;
    let mut parts = vec![0.0; stiffeners.len()];
    for (n, s, p) in load.iter() {
        let k = harmonic_stiffness(n, s, plate);
        for (i, (orig, st)) in system.eta.iter().enumerate() {
            let sin = (n as f64 * PI * st.position / plate.b).sin();
            parts[*orig] -= 0.5 * p * sin * v[&s][i] / k;
        }
        for (j, (orig, _)) in system.xi.iter().enumerate() {
            parts[*orig] -= 0.5 * p * system.mu[j][s - 1] * z[&n][j] / k;
        }
    }
    let mut contributions = vec![Contribution { label: "unstiffened".into(), value: unstiffened_energy(plate, load) }];
    for (k, c) in parts.into_iter().enumerate() {
        contributions.push(Contribution { label: format!("bending[{k}]"), value: c });
    }
    report.contributions = contributions;
    Ok(report)
}

/// Entry point for mixed-axis layouts. Single-axis inputs go to the
/// closed-form unidirectional solver, transposing the plate when every
/// stiffener is xi-aligned.
pub fn solve_bidirectional(
    plate: &PlateSpec,
    stiffeners: &[Stiffener],
    load: &LoadSpectrum,
    trunc: Truncation,
) -> Result<BiSolution, SolverError> {
    check_inputs(plate, stiffeners, load, trunc)?;
    let (eta, xi) = split_axes(stiffeners);
    if xi.is_empty() {
        let uni = solve_general(plate, stiffeners, load, trunc)?;
        return Ok(BiSolution {
            plate: *plate,
            stiffeners: stiffeners.to_vec(),
            load: load.clone(),
            route: Route::Unidirectional,
            z_spectra: BTreeMap::new(),
            v_spectra: uni.interface_spectra,
            field: uni.field,
            energy: uni.energy,
            condition: None,
            inner_tail_bound: 0.0,
        });
    }
    if eta.is_empty() {
        let t_plate = PlateSpec { a: plate.b, b: plate.a, ..*plate };
        let t_st: Vec<Stiffener> = stiffeners.iter().map(|s| Stiffener { axis: Axis::EtaAligned, ..*s }).collect();
        let t_load = transpose_load(load);
        let t_trunc = Truncation { m_f: trunc.s_f, s_f: trunc.m_f };
        let uni = solve_general(&t_plate, &t_st, &t_load, t_trunc)?;
        let mut field = DeflectionField::zeros(*plate, trunc);
        for n in 1..=trunc.m_f {
            for s in 1..=trunc.s_f {
                field.set(n, s, uni.field.get(s, n));
            }
        }
        let mut energy = uni.energy;
        energy.u_hat = crate::model::nondimensional_energy(energy.u_total, plate, load);
        return Ok(BiSolution {
            plate: *plate,
            stiffeners: stiffeners.to_vec(),
            load: load.clone(),
            route: Route::Transposed,
            z_spectra: uni.interface_spectra,
            v_spectra: BTreeMap::new(),
            field,
            energy,
            condition: None,
            inner_tail_bound: 0.0,
        });
    }
    let system = assemble_bi(plate, stiffeners, load, trunc, BlockOrder::Descending)?;
    solve_bi(&system, plate, stiffeners, load, trunc)
}

pub fn transpose_load(load: &LoadSpectrum) -> LoadSpectrum {
    let entries: Vec<(usize, usize, f64)> = load.iter().map(|(m, r, p)| (r, m, p)).collect();
    LoadSpectrum::explicit(&entries).expect("entries come from a valid spectrum")
}

impl BiSolution {
    /// Deflection with the crossed-harmonic sums of both stiffener families in closed form.
    pub fn deflection_at(&self, xi: f64, eta: f64) -> Result<f64, SolverError> {
        if !self.plate.contains(xi, eta) {
            return Err(ModelError::OutOfDomain { xi, eta }.into());
        }
        let plate = &self.plate;
        let (eta_st, xi_st) = split_axes(&self.stiffeners);
        let mut w = 0.0;
        for (n, s, p) in self.load.iter() {
            w += p * (n as f64 * PI * xi / plate.b).sin() * (s as f64 * PI * eta / plate.a).sin()
                / harmonic_stiffness(n, s, plate);
        }
        let pre = 2.0 / (plate.a * plate.b * PI.powi(4) * plate.d);
        for (&s, v) in &self.v_spectra {
            let sums = PairSums::for_axis(plate, Axis::EtaAligned, s);
            let corr: f64 = eta_st.iter().enumerate().map(|(i, (_, st))| sums.sin_sin(st.position, xi) * v[i]).sum();
            w -= pre * corr * (s as f64 * PI * eta / plate.a).sin();
        }
        for (&n, z) in &self.z_spectra {
            let sums = PairSums::for_axis(plate, Axis::XiAligned, n);
            let corr: f64 = xi_st.iter().enumerate().map(|(j, (_, st))| sums.sin_sin(st.position, eta) * z[j]).sum();
            w -= pre * corr * (n as f64 * PI * xi / plate.b).sin();
        }
        Ok(w)
    }
}

/// Outcome of [`interaction_force_independence_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceReport {
    pub pass: bool,
    pub vacuous: bool,
    pub crossings: usize,
    /// Largest `|w1(P; Q) - w1(Q; P)|` over crossing pairs, relative to the largest `|w1|`.
    pub max_green_asymmetry: f64,
    /// Field with crossing forces applied to both beams and cancelled equals the field without them.
    pub dual_assembly_identical: bool,
}

/// Checks that the crossing forces between orthogonal stiffeners drop out.
///
/// The assembled system has no slot for them. Operationally a set of
/// arbitrary crossing forces is added to each beam of a crossing with
/// opposite signs, the pair is summed before it reaches the plate, and the
/// field must come out bit-identical.
pub fn interaction_force_independence_check(
    plate: &PlateSpec,
    stiffeners: &[Stiffener],
    load: &LoadSpectrum,
    trunc: Truncation,
) -> Result<IndependenceReport, SolverError> {
    let (eta, xi) = split_axes(stiffeners);
    let crossings: Vec<(f64, f64)> =
        eta.iter().flat_map(|(_, e)| xi.iter().map(move |(_, x)| (e.position, x.position))).collect();
    if crossings.is_empty() {
        return Ok(IndependenceReport {
            pass: true,
            vacuous: true,
            crossings: 0,
            max_green_asymmetry: 0.0,
            dual_assembly_identical: true,
        });
    }
    let green = |p: (f64, f64), q: (f64, f64)| crate::solver_uni::green_function(plate, trunc, p.0, p.1, q.0, q.1);
    let mut asym: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &p in &crossings {
        for &q in &crossings {
            let (g1, g2) = (green(p, q), green(q, p));
            asym = asym.max((g1 - g2).abs());
            scale = scale.max(g1.abs());
        }
    }
    let rel = if scale > 0.0 { asym / scale } else { asym };

    let base = solve_bidirectional(plate, stiffeners, load, trunc)?;
    let mut on_eta = LoadSpectrum::zero();
    for (k, &(x, y)) in crossings.iter().enumerate() {
        let f = 1.0 + 0.37 * k as f64;
        let mut entries = Vec::new();
        for n in 1..=trunc.m_f {
            for s in 1..=trunc.s_f {
                let phi = 4.0 / (plate.a * plate.b) * (n as f64 * PI * x / plate.b).sin() * (s as f64 * PI * y / plate.a).sin();
                entries.push((n, s, f * phi));
            }
        }
        on_eta = on_eta.add(&LoadSpectrum::explicit(&entries)?);
    }
    let on_xi = on_eta.scaled(-1.0);
    let net = on_eta.add(&on_xi);
    let perturbed = solve_bidirectional(plate, stiffeners, &load.add(&net), trunc)?;
    let identical = base
        .field
        .coeffs
        .iter()
        .zip(&perturbed.field.coeffs)
        .all(|(x, y)| x.to_bits() == y.to_bits());
    Ok(IndependenceReport {
        pass: identical && rel <= 1e-15,
        vacuous: false,
        crossings: crossings.len(),
        max_green_asymmetry: rel,
        dual_assembly_identical: identical,
    })
}

/// Largest residuals of the eta and xi compatibility equations, recomputed
/// term by term from the solved spectra. Each family is scaled by its largest
/// load term or spectrum entry, so harmonics the load barely excites do not
/// dominate.
pub fn compatibility_residuals(sol: &BiSolution, tr: Truncation) -> (f64, f64) {
    let p = &sol.plate;
    let (eta, xi) = split_axes(&sol.stiffeners);
    let q = |n: usize, s: usize| spectral_q(n, s, p);
    let sn = |u: f64, n: usize, l: f64| (n as f64 * PI * u / l).sin();
    let (mut worst_v, mut worst_z) = (0.0f64, 0.0f64);
    let (mut scale_v, mut scale_z) = (0.0f64, 0.0f64);
    for s in 1..=tr.s_f {
        let eta_st: Vec<Stiffener> = eta.iter().map(|e| e.1).collect();
        let b_s = InterfaceKernel::assemble(p, &eta_st, s).b_matrix;
        let v = &sol.v_spectra[&s];
        for (i, (_, st)) in eta.iter().enumerate() {
            let sf = s as f64;
            let mut u = 0.0;
            for (n, r, pp) in sol.load.iter() {
                if r == s {
                    u += sf.powi(4) * st.ei / (2.0 * p.a.powi(3) * p.d) * sn(st.position, n, p.b) * pp / q(n, s);
                }
            }
            let mut lhs = v[i] + (0..eta.len()).map(|k| b_s[(i, k)] * v[k]).sum::<f64>();
            for n in 1..=tr.m_f {
                for (j, (_, sx)) in xi.iter().enumerate() {
                    lhs += 2.0 * sf.powi(4) * st.ei / (p.a.powi(4) * p.b * p.d) * sn(st.position, n, p.b)
                        * sn(sx.position, s, p.a)
                        / q(n, s)
                        * sol.z_spectra[&n][j];
                }
            }
            worst_v = worst_v.max((lhs - u).abs());
            scale_v = scale_v.max(u.abs()).max(v[i].abs());
        }
    }
    for n in 1..=tr.m_f {
        let xi_st: Vec<Stiffener> = xi.iter().map(|e| e.1).collect();
        let f_n = InterfaceKernel::assemble(p, &xi_st, n).b_matrix;
        let z = &sol.z_spectra[&n];
        for (j, (_, st)) in xi.iter().enumerate() {
            let nf = n as f64;
            let mut y = 0.0;
            for (m, r, pp) in sol.load.iter() {
                if m == n {
                    y += nf.powi(4) * st.ei / (2.0 * p.b.powi(3) * p.d) * sn(st.position, r, p.a) * pp / q(n, r);
                }
            }
            let mut lhs = z[j] + (0..xi.len()).map(|l| f_n[(j, l)] * z[l]).sum::<f64>();
            for s in 1..=tr.s_f {
                for (i, (_, se)) in eta.iter().enumerate() {
                    lhs += 2.0 * nf.powi(4) * st.ei / (p.a * p.b.powi(4) * p.d) * sn(st.position, s, p.a)
                        * sn(se.position, n, p.b)
                        / q(n, s)
                        * sol.v_spectra[&s][i];
                }
            }
            worst_z = worst_z.max((lhs - y).abs());
            scale_z = scale_z.max(y.abs()).max(z[j].abs());
        }
    }
    (worst_v / scale_v.max(f64::MIN_POSITIVE), worst_z / scale_z.max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> PlateSpec {
        PlateSpec::unit_square()
    }


    #[test]
    fn stacked_dimension_counts_xi_harmonics() {
        let p = unit();
        let mut st = vec![Stiffener::eta(0.5, 0.1)];
        for j in 0..17 {
            st.push(Stiffener::xi((j as f64 + 1.0) / 18.0, 0.1));
        }
        let tr = Truncation::new(100, 4).unwrap();
        let sys = assemble_bi(&p, &st, &LoadSpectrum::bisinusoidal(1, 1, 1.0), tr, BlockOrder::Descending).unwrap();
        assert_eq!(sys.m_tot, 1700);
        assert_eq!(sys.m_bar.nrows(), 1700);
        assert_eq!(sys.index(0, 100), 0);
        assert_eq!(sys.index(16, 1), 1699);
    }

    #[test]
    fn zero_rigidity_leaves_only_the_load_terms() {
        let p = PlateSpec::new(1.0, 1.3, 0.1, 1.0, 0.3).unwrap();
        let st = [Stiffener::eta(0.4, 0.0), Stiffener::xi(0.6, 0.0)];
        let tr = Truncation::square(6);
        let sys = assemble_bi(&p, &st, &LoadSpectrum::uniform(1.0, tr), tr, BlockOrder::Descending).unwrap();
        assert!(sys.m_bar.iter().all(|&x| x == 0.0));
        assert!(sys.g_bar.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn eta_only_matches_unidirectional() {
        let p = unit();
        let st = [Stiffener::eta(0.3, 1.0), Stiffener::eta(0.7, 1.0)];
        let tr = Truncation::square(20);
        let load = LoadSpectrum::uniform(1.0, tr);
        let sys = assemble_bi(&p, &st, &load, tr, BlockOrder::Descending).unwrap();
        assert_eq!(sys.m_tot, 0);
        let bi = solve_bi(&sys, &p, &st, &load, tr).unwrap();
        let uni = solve_general(&p, &st, &load, tr).unwrap();
        let rel = (bi.energy.u_total - uni.energy.u_total).abs() / uni.energy.u_total;
        assert!(rel <= 1e-9, "{rel}");
        let routed = solve_bidirectional(&p, &st, &load, tr).unwrap();
        assert_eq!(routed.route, Route::Unidirectional);
        assert_eq!(routed.energy.u_total, uni.energy.u_total);
    }

    #[test]
    fn xi_only_general_path_matches_transposed_plate() {
        let p = PlateSpec::new(1.0, 1.6, 0.1, 1.2, 0.3).unwrap();
        let st = [Stiffener::xi(0.25, 0.8), Stiffener::xi(0.6, 0.3)];
        let tr = Truncation::new(14, 10).unwrap();
        let load = LoadSpectrum::explicit(&[(1, 1, 1.0), (2, 3, -0.4), (5, 2, 0.25)]).unwrap();
        let sys = assemble_bi(&p, &st, &load, tr, BlockOrder::Descending).unwrap();
        let general = solve_bi(&sys, &p, &st, &load, tr).unwrap();
        let routed = solve_bidirectional(&p, &st, &load, tr).unwrap();
        assert_eq!(routed.route, Route::Transposed);
        let rel = (general.energy.u_total - routed.energy.u_total).abs() / routed.energy.u_total;
        assert!(rel < 1e-12, "{rel}");
        for k in 0..general.field.coeffs.len() {
            let (x, y) = (general.field.coeffs[k], routed.field.coeffs[k]);
            assert!((x - y).abs() <= 1e-12 * routed.field.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs())));
        }
    }

    #[test]
    fn both_compatibility_sets_hold() {
        let p = PlateSpec::new(1.2, 0.9, 0.1, 1.0, 0.3).unwrap();
        let st = [Stiffener::eta(0.3, 0.7), Stiffener::xi(0.5, 1.3), Stiffener::eta(0.65, 0.2), Stiffener::xi(0.9, 0.4)];
        let tr = Truncation::new(12, 9).unwrap();
        let sol = solve_bidirectional(&p, &st, &LoadSpectrum::uniform(1.0, tr), tr).unwrap();
        assert_eq!(sol.route, Route::Bidirectional);
        let (rv, rz) = compatibility_residuals(&sol, tr);
        assert!(rv < 1e-10 && rz < 1e-10, "{rv} {rz}");
    }

    #[test]
    fn square_cross_is_symmetric() {
        let p = unit();
        let st = [Stiffener::eta(0.5, 0.8), Stiffener::xi(0.5, 0.8)];
        let tr = Truncation::square(16);
        let sol = solve_bidirectional(&p, &st, &LoadSpectrum::uniform(1.0, tr), tr).unwrap();
        for &(x, y) in &[(0.1, 0.3), (0.25, 0.7), (0.5, 0.2), (0.8, 0.45)] {
            let a = evaluate(&sol, x, y);
            let b = evaluate(&sol, y, x);
            assert!((a - b).abs() <= 1e-9 * a.abs(), "{a} vs {b}");
        }
    }

    fn evaluate(sol: &BiSolution, x: f64, y: f64) -> f64 {
        sol.field.evaluate(x, y).unwrap()
    }

    #[test]
    fn block_order_only_changes_round_off() {
        let p = PlateSpec::new(1.0, 1.2, 0.1, 1.0, 0.3).unwrap();
        let st = [Stiffener::eta(0.4, 2.0), Stiffener::xi(0.3, 1.5), Stiffener::xi(0.75, 0.5)];
        let tr = Truncation::square(15);
        let load = LoadSpectrum::uniform(1.0, tr);
        let a = solve_bi(&assemble_bi(&p, &st, &load, tr, BlockOrder::Descending).unwrap(), &p, &st, &load, tr).unwrap();
        let b = solve_bi(&assemble_bi(&p, &st, &load, tr, BlockOrder::Natural).unwrap(), &p, &st, &load, tr).unwrap();
        let scale = a.field.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        for k in 0..a.field.coeffs.len() {
            assert!((a.field.coeffs[k] - b.field.coeffs[k]).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn small_rigidity_matches_first_order_energy() {
        let p = PlateSpec::new(1.0, 1.25, 0.1, 1.0, 0.3).unwrap();
        let tr = Truncation::square(15);
        let load = LoadSpectrum::uniform(1.0, tr);
        let u0 = unstiffened_energy(&p, &load);
        let eps = 1e-4;
        let st = [Stiffener::eta(0.35 * p.b, eps * p.a * p.d), Stiffener::xi(0.6 * p.a, eps * p.a * p.d)];
        let exact = solve_bidirectional(&p, &st, &load, tr).unwrap().energy.u_total;
        let first = crate::asymptotics::flexible_first_order_energy(&p, &st, &load, tr).unwrap();
        assert!((exact - first).abs() / u0 <= 10.0 * eps * eps, "{}", (exact - first).abs() / u0);
    }

    #[test]
    fn truncation_converges() {
        let p = unit();
        // Flexible crossing; a stiff crossing carries a concentrated force and converges like m^-2.
        let st = [Stiffener::eta(0.3, 0.01), Stiffener::xi(0.45, 0.02)];
        let load = LoadSpectrum::bisinusoidal(1, 1, 1.0);
        let energies: Vec<f64> = [4, 8, 16, 32]
            .iter()
            .map(|&n| solve_bidirectional(&p, &st, &load, Truncation::square(n)).unwrap().energy.u_total)
            .collect();
        let d1 = (energies[1] - energies[0]).abs();
        let d2 = (energies[2] - energies[1]).abs();
        let d3 = (energies[3] - energies[2]).abs();
        assert!(d1 >= 4.0 * d2 && d2 >= 4.0 * d3, "{energies:?}");
    }

    #[test]
    fn stiffening_lowers_energy() {
        let p = unit();
        let tr = Truncation::square(10);
        let load = LoadSpectrum::uniform(1.0, tr);
        let mut last = unstiffened_energy(&p, &load);
        for ei in [0.01, 0.1, 1.0, 10.0] {
            let st = [Stiffener::eta(0.4, ei), Stiffener::xi(0.55, ei)];
            let u = solve_bidirectional(&p, &st, &load, tr).unwrap().energy.u_total;
            assert!(u > 0.0 && u < last);
            last = u;
        }
    }

    #[test]
    fn contributions_sum_to_total() {
        let p = unit();
        let tr = Truncation::square(10);
        let st = [Stiffener::xi(0.4, 0.5), Stiffener::eta(0.55, 1.5)];
        let sol = solve_bidirectional(&p, &st, &LoadSpectrum::uniform(1.0, tr), tr).unwrap();
        let e = &sol.energy;
        assert!((e.contribution_sum() - e.u_total).abs() <= 1e-12 * e.u_total);
    }

    #[test]
    fn closed_form_deflection_agrees_with_field() {
        let p = unit();
        let tr = Truncation::square(40);
        let st = [Stiffener::xi(0.4, 0.5), Stiffener::eta(0.55, 1.5)];
        let sol = solve_bidirectional(&p, &st, &LoadSpectrum::bisinusoidal(1, 1, 1.0), tr).unwrap();
        let a = sol.deflection_at(0.3, 0.7).unwrap();
        let b = sol.field.evaluate(0.3, 0.7).unwrap();
        assert!((a - b).abs() < 1e-4 * a.abs(), "{a} {b}");
    }

    #[test]
    fn crossing_forces_drop_out() {
        let p = unit();
        let tr = Truncation::square(8);
        let st = [Stiffener::eta(0.3, 1.0), Stiffener::eta(0.7, 1.0), Stiffener::xi(0.4, 1.0), Stiffener::xi(0.8, 1.0)];
        let r = interaction_force_independence_check(&p, &st, &LoadSpectrum::uniform(1.0, tr), tr).unwrap();
        assert!(r.pass && !r.vacuous && r.dual_assembly_identical, "{r:?}");
        assert_eq!(r.crossings, 4);
        let single = interaction_force_independence_check(&p, &st[..2], &LoadSpectrum::uniform(1.0, tr), tr).unwrap();
        assert!(single.pass && single.vacuous);
    }

    #[test]
    fn torsion_is_refused() {
        let p = unit();
        let st = [Stiffener::eta(0.3, 1.0).with_gc(0.1), Stiffener::xi(0.4, 1.0)];
        match solve_bidirectional(&p, &st, &LoadSpectrum::bisinusoidal(1, 1, 1.0), Truncation::square(4)) {
            Err(SolverError::Unsupported(m)) => assert_eq!(m, "torsion supported for single-axis only"),
            other => panic!("{other:?}"),
        }
    }
}
