//! Global search over stiffener positions against the exact solvers.
//!
//! Every search is a full tensor grid followed by local refinement, so the
//! answer is deterministic and never worse than the best grid sample.

use serde::Serialize;
use thiserror::Error;

use crate::asymptotics::Regime;
use crate::model::{LoadSpectrum, PlateSpec, Stiffener, Truncation};
use crate::solver_bi::solve_bidirectional;
use crate::solver_torsion::solve_with_torsion;
use crate::solver_uni::{energy_only, SolverError};

pub use crate::verify::verify_asymptotics;

pub const DEFAULT_RESOLUTION: usize = 512;
pub const MAX_FREE: usize = 3;
/// Largest number of exact solves a search may plan.
pub const MAX_SOLVES: usize = 4_000_000;
/// Refinement tolerance relative to the edge the coordinate runs along.
pub const RELATIVE_TOLERANCE: f64 = 1e-5;

const GOLDEN: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("objective is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("search refused: {free} free positions need an estimated {estimated} exact solves (limit {limit})")]
    CostGuard { free: usize, estimated: u128, limit: usize },
    #[error("invalid search: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Minimum1d {
    pub x: f64,
    pub value: f64,
    /// Refined local minima of the scan, lowest first.
    pub local_minima: Vec<(f64, f64)>,
}

/// Minimizes `f` on `[lo, hi]` with a 512-point scan and golden-section
/// refinement of every local minimum of the scan.
pub fn minimize_1d(f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<Minimum1d, OptimizerError> {
    minimize_1d_with(f, lo, hi, tol, DEFAULT_RESOLUTION)
}

pub fn minimize_1d_with(
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
    points: usize,
) -> Result<Minimum1d, OptimizerError> {
    if !(tol > 0.0) || !(hi > lo) || points < 3 {
        return Err(OptimizerError::InvalidSpec(format!("interval [{lo}, {hi}], tol {tol}, {points} points")));
    }
    let mut eval = |x: f64| {
        let v = f(x);
        if v.is_finite() { Ok(v) } else { Err(OptimizerError::NonFinite { x }) }
    };
    let xs: Vec<f64> = (0..points).map(|k| grid_point(lo, hi, k, points)).collect();
    let mut vs = Vec::with_capacity(points);
    for &x in &xs {
        vs.push(eval(x)?);
    }
    let mut minima = Vec::new();
    for k in local_minimum_indices(&vs) {
        let a = xs[k.saturating_sub(1)];
        let b = xs[(k + 1).min(points - 1)];
        let (x, v) = golden_section(&mut eval, a, b, tol)?;
        minima.push(if v <= vs[k] { (x, v) } else { (xs[k], vs[k]) });
    }
    minima.sort_by(|p, q| p.1.partial_cmp(&q.1).unwrap().then(p.0.partial_cmp(&q.0).unwrap()));
    let (x, value) = minima[0];
    Ok(Minimum1d { x, value, local_minima: minima })
}

fn grid_point(lo: f64, hi: f64, k: usize, points: usize) -> f64 {
    if k + 1 == points { hi } else { lo + (hi - lo) * k as f64 / (points - 1) as f64 }
}

/// Scan indices that are no higher than their neighbours, first of each plateau.
fn local_minimum_indices(vs: &[f64]) -> Vec<usize> {
    let n = vs.len();
    let mut out = Vec::new();
    for k in 0..n {
        let left_ok = k == 0 || vs[k] < vs[k - 1];
        let right_ok = k + 1 == n || vs[k] <= vs[k + 1];
        if left_ok && right_ok {
            out.push(k);
        }
    }
    if out.is_empty() {
        out.push(0);
    }
    out
}

fn golden_section(
    f: &mut impl FnMut(f64) -> Result<f64, OptimizerError>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64), OptimizerError> {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    #[default]
    Uni,
    Bi,
    Torsion,
}

/// Asymptotic prediction to compare against, positions in plate coordinates
/// for every stiffener of the template.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub positions: Vec<f64>,
    pub regime: Regime,
    pub within_regime: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpec {
    pub objective: Objective,
    /// Template indices whose positions are searched.
    pub free: Vec<usize>,
    /// `(dependent, source)`: the dependent stiffener mirrors the source, `x_dep = span - x_src`.
    pub mirrors: Vec<(usize, usize)>,
    /// Per free index; defaults to the open span.
    pub bounds: Option<Vec<(f64, f64)>>,
    pub resolution: usize,
    /// Absolute refinement tolerance; defaults to `1e-5` of each span.
    pub tol: Option<f64>,
    pub max_solves: usize,
    pub prediction: Option<Prediction>,
}

impl SearchSpec {
    pub fn new(objective: Objective, free: Vec<usize>) -> Self {
        SearchSpec {
            objective,
            free,
            mirrors: Vec::new(),
            bounds: None,
            resolution: DEFAULT_RESOLUTION,
            tol: None,
            max_solves: MAX_SOLVES,
            prediction: None,
        }
    }

    pub fn mirrored(mut self, dependent: usize, source: usize) -> Self {
        self.mirrors.push((dependent, source));
        self
    }

    pub fn with_resolution(mut self, resolution: usize) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn with_prediction(mut self, prediction: Prediction) -> Self {
        self.prediction = Some(prediction);
        self
    }

    /// Grid solves plus a generous allowance for refinement.
    pub fn estimated_solves(&self) -> u128 {
        (self.resolution as u128).pow(self.free.len() as u32) + 2_000 * self.free.len() as u128
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridDiagnostics {
    pub resolution: usize,
    pub dimensions: usize,
    pub samples: usize,
    pub best_grid_positions: Vec<f64>,
    pub best_grid_energy: f64,
    pub worst_grid_energy: f64,
    pub refinement_solves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalMinimum {
    pub positions: Vec<f64>,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub predicted_positions: Vec<f64>,
    /// Exact energy at the predicted layout.
    pub predicted_energy: f64,
    /// `best_energy - predicted_energy`, never positive.
    pub energy_gap: f64,
    /// Largest distance between found and predicted free positions.
    pub position_gap: f64,
    pub regime: Regime,
    pub within_regime: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimumReport {
    pub objective: Objective,
    pub free: Vec<usize>,
    /// Positions of every template stiffener at the optimum.
    pub best_positions: Vec<f64>,
    pub best_energy: f64,
    pub local_minima: Vec<LocalMinimum>,
    pub grid: GridDiagnostics,
    pub comparison: Option<Comparison>,
    /// Free coordinates and energy of every grid sample, in scan order.
    #[serde(skip)]
    pub landscape: Vec<(Vec<f64>, f64)>,
}

struct Problem<'a> {
    spec: &'a SearchSpec,
    plate: &'a PlateSpec,
    template: &'a [Stiffener],
    load: &'a LoadSpectrum,
    trunc: Truncation,
}

impl Problem<'_> {
    fn layout(&self, coords: &[f64]) -> Vec<Stiffener> {
        let mut st = self.template.to_vec();
        for (&i, &x) in self.spec.free.iter().zip(coords) {
            st[i].position = x;
        }
        for &(dep, src) in &self.spec.mirrors {
            st[dep].position = self.plate.span_across(st[src].axis) - st[src].position;
        }
        st
    }

    fn energy(&self, coords: &[f64]) -> Result<f64, OptimizerError> {
        self.energy_of(&self.layout(coords))
    }

    fn energy_of(&self, st: &[Stiffener]) -> Result<f64, OptimizerError> {
        let u = match self.spec.objective {
            Objective::Uni => energy_only(self.plate, st, self.load, self.trunc)?,
            Objective::Bi => solve_bidirectional(self.plate, st, self.load, self.trunc)?.energy.u_total,
            Objective::Torsion => solve_with_torsion(self.plate, st, self.load, self.trunc)?.energy.u_total,
        };
        if u.is_finite() {
            Ok(u)
        } else {
            Err(OptimizerError::NonFinite { x: st.iter().map(|s| s.position).fold(f64::NAN, f64::min) })
        }
    }
}

fn validate_spec(spec: &SearchSpec, plate: &PlateSpec, template: &[Stiffener]) -> Result<Vec<(f64, f64)>, OptimizerError> {
    let bad = |m: String| Err(OptimizerError::InvalidSpec(m));
    if spec.free.is_empty() {
        return bad("no free positions".into());
    }
    if spec.resolution < 3 {
        return bad(format!("resolution {} is below 3 points", spec.resolution));
    }
    let estimated = spec.estimated_solves();
    if spec.free.len() > MAX_FREE || estimated > spec.max_solves as u128 {
        return Err(OptimizerError::CostGuard { free: spec.free.len(), estimated, limit: spec.max_solves });
    }
    for (k, &i) in spec.free.iter().enumerate() {
        if i >= template.len() || spec.free[..k].contains(&i) {
            return bad(format!("free index {i} is out of range or repeated"));
        }
    }
    for &(dep, src) in &spec.mirrors {
        if dep >= template.len() || src >= template.len() || spec.free.contains(&dep) || dep == src {
            return bad(format!("mirror ({dep}, {src}) is invalid"));
        }
        if template[dep].axis != template[src].axis {
            return bad(format!("mirror ({dep}, {src}) crosses axes"));
        }
    }
    let bounds: Vec<(f64, f64)> = match &spec.bounds {
        Some(b) => b.clone(),
        None => spec
            .free
            .iter()
            .map(|&i| {
                let span = plate.span_across(template[i].axis);
                (span * 1e-6, span * (1.0 - 1e-6))
            })
            .collect(),
    };
    if bounds.len() != spec.free.len() {
        return bad("one bound pair per free index is required".into());
    }
    for (&i, &(lo, hi)) in spec.free.iter().zip(&bounds) {
        let span = plate.span_across(template[i].axis);
        if !(lo > 0.0 && hi < span && lo < hi) {
            return bad(format!("bounds [{lo}, {hi}] of stiffener {i} are not interior to (0, {span})"));
        }
    }
    Ok(bounds)
}

/// Grid-then-refine search for the positions that minimize the exact energy.
pub fn optimize_positions(
    spec: &SearchSpec,
    plate: &PlateSpec,
    template: &[Stiffener],
    load: &LoadSpectrum,
    trunc: Truncation,
) -> Result<OptimumReport, OptimizerError> {
    let bounds = validate_spec(spec, plate, template)?;
    let problem = Problem { spec, plate, template, load, trunc };
    let dims = spec.free.len();
    let res = spec.resolution;
    let axes: Vec<Vec<f64>> = bounds.iter().map(|&(lo, hi)| (0..res).map(|k| grid_point(lo, hi, k, res)).collect()).collect();
    let samples = res.pow(dims as u32);
    let coords_of = |flat: usize| -> Vec<f64> {
        let mut rem = flat;
        let mut c = vec![0.0; dims];
        for d in (0..dims).rev() {
            c[d] = axes[d][rem % res];
            rem /= res;
        }
        c
    };
    let values = scan(&problem, samples, &coords_of)?;

    let tols: Vec<f64> = spec
        .free
        .iter()
        .map(|&i| spec.tol.unwrap_or(RELATIVE_TOLERANCE * plate.span_across(template[i].axis)))
        .collect();
    let steps: Vec<f64> = bounds.iter().map(|&(lo, hi)| (hi - lo) / (res - 1) as f64).collect();

    let (best_flat, _) = values.iter().enumerate().fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
    let worst = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut starts = grid_local_minima(&values, dims, res);
    starts.sort_by(|&p, &q| values[p].partial_cmp(&values[q]).unwrap().then(p.cmp(&q)));
    starts.truncate(16);
    if !starts.contains(&best_flat) {
        starts.insert(0, best_flat);
    }

    // Exact energy at the predicted layout, also used as a refinement start.
    let predicted = match &spec.prediction {
        Some(pred) => {
            if pred.positions.len() != template.len() {
                return Err(OptimizerError::InvalidSpec("prediction needs one position per stiffener".into()));
            }
            let mut st = template.to_vec();
            for (s, &x) in st.iter_mut().zip(&pred.positions) {
                s.position = x;
            }
            let coords: Vec<f64> = spec.free.iter().map(|&i| pred.positions[i]).collect();
            let inside = coords.iter().zip(&bounds).all(|(&x, &(lo, hi))| (lo..=hi).contains(&x));
            Some((pred, problem.energy_of(&st)?, inside.then_some(coords)))
        }
        None => None,
    };

    let mut solves = 0usize;
    let mut seeds: Vec<(Vec<f64>, f64)> = starts.iter().map(|&flat| (coords_of(flat), values[flat])).collect();
    if let Some((_, energy, Some(coords))) = &predicted {
        seeds.push((coords.clone(), *energy));
    }
    let mut minima: Vec<LocalMinimum> = Vec::new();
    for (start, value) in seeds {
        let (coords, energy) = refine(&problem, start, value, &bounds, &steps, &tols, &mut solves)?;
        let positions: Vec<f64> = problem.layout(&coords).iter().map(|s| s.position).collect();
        let duplicate = minima.iter().position(|m| {
            spec.free.iter().all(|&i| (m.positions[i] - positions[i]).abs() <= 10.0 * tols.iter().cloned().fold(0.0, f64::max))
        });
        match duplicate {
            Some(k) if energy < minima[k].energy => minima[k] = LocalMinimum { positions, energy },
            Some(_) => {}
            None => minima.push(LocalMinimum { positions, energy }),
        }
    }
    minima.sort_by(|p, q| p.energy.partial_cmp(&q.energy).unwrap());
    let best = minima[0].clone();

    let comparison = predicted.map(|(pred, predicted_energy, _)| {
        let position_gap = spec.free.iter().map(|&i| (best.positions[i] - pred.positions[i]).abs()).fold(0.0, f64::max);
        Comparison {
            predicted_positions: pred.positions.clone(),
            predicted_energy,
            energy_gap: best.energy - predicted_energy,
            position_gap,
            regime: pred.regime,
            within_regime: pred.within_regime,
        }
    });

    let landscape = (0..samples).map(|k| (coords_of(k), values[k])).collect();
    Ok(OptimumReport {
        objective: spec.objective,
        free: spec.free.clone(),
        best_positions: best.positions.clone(),
        best_energy: best.energy,
        local_minima: minima,
        grid: GridDiagnostics {
            resolution: res,
            dimensions: dims,
            samples,
            best_grid_positions: problem.layout(&coords_of(best_flat)).iter().map(|s| s.position).collect(),
            best_grid_energy: values[best_flat],
            worst_grid_energy: worst,
            refinement_solves: solves,
        },
        comparison,
        landscape,
    })
}

/// Evaluates every grid sample, split across threads in contiguous chunks.
fn scan(problem: &Problem<'_>, samples: usize, coords_of: &(dyn Fn(usize) -> Vec<f64> + Sync)) -> Result<Vec<f64>, OptimizerError> {
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(samples).max(1);
    let chunk = samples.div_ceil(threads);
    let results: Vec<Result<Vec<f64>, OptimizerError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                scope.spawn(move || {
                    let range = (t * chunk)..((t + 1) * chunk).min(samples);
                    range.map(|k| problem.energy(&coords_of(k))).collect::<Result<Vec<f64>, _>>()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("grid worker panicked")).collect()
    });
    let mut values = Vec::with_capacity(samples);
    for r in results {
        values.extend(r?);
    }
    Ok(values)
}

/// Flat indices no higher than any neighbour along each grid axis.
fn grid_local_minima(values: &[f64], dims: usize, res: usize) -> Vec<usize> {
    let strides: Vec<usize> = (0..dims).map(|d| res.pow((dims - 1 - d) as u32)).collect();
    (0..values.len())
        .filter(|&k| {
            strides.iter().all(|&stride| {
                let i = (k / stride) % res;
                let v = values[k];
                (i == 0 || v < values[k - stride]) && (i + 1 == res || v <= values[k + stride])
            })
        })
        .collect()
}

/// Cyclic coordinate golden-section search inside one grid cell around the
/// start, widened as the point moves. Never returns a worse value than the start.
fn refine(
    problem: &Problem<'_>,
    start: Vec<f64>,
    start_value: f64,
    bounds: &[(f64, f64)],
    steps: &[f64],
    tols: &[f64],
    solves: &mut usize,
) -> Result<(Vec<f64>, f64), OptimizerError> {
    let mut x = start;
    let mut fx = start_value;
    for _sweep in 0..200 {
        let mut moved = 0.0f64;
        for d in 0..x.len() {
            let lo = (x[d] - steps[d]).max(bounds[d].0);
            let hi = (x[d] + steps[d]).min(bounds[d].1);
            let mut trial = x.clone();
            let mut f = |t: f64| {
                trial[d] = t;
                *solves += 1;
                problem.energy(&trial)
            };
            let (t, ft) = golden_section(&mut f, lo, hi, tols[d])?;
            if ft < fx {
                moved = moved.max((t - x[d]).abs() / tols[d]);
                x[d] = t;
                fx = ft;
            }
        }
        if moved <= 1.0 {
            break;
        }
    }
    Ok((x, fx))
}

/// Writes the grid samples as CSV with a `position...,U` header.
pub fn landscape_csv(report: &OptimumReport) -> String {
    let mut out = String::new();
    for i in &report.free {
        out.push_str(&format!("position{i},"));
    }
    out.push_str("U\n");
    for (coords, u) in &report.landscape {
        for c in coords {
            out.push_str(&format!("{c:.16e},"));
        }
        out.push_str(&format!("{u:.16e}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::rigid_asymptote_objective;
    use std::f64::consts::PI;

    #[test]
    fn quadratic_minimum() {
        let m = minimize_1d(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-9).unwrap();
        assert!((m.x - 0.3).abs() <= 1e-9);
        assert_eq!(m.local_minima.len(), 1);
    }

    #[test]
    fn rigid_bracket_minimum() {
        let m = minimize_1d(rigid_asymptote_objective, 1e-3, 0.5, 1e-8).unwrap();
        assert!((m.x - 0.3445).abs() < 5e-4);
    }

    #[test]
    fn multimodal_reports_both_minimizers() {
        let m = minimize_1d(|x| -(2.0 * PI * x).sin().powi(2), 0.0, 1.0, 1e-9).unwrap();
        let near = |t: f64| m.local_minima.iter().any(|&(x, v)| (x - t).abs() < 1e-6 && (v + 1.0).abs() < 1e-12);
        assert!(near(0.25) && near(0.75), "{:?}", m.local_minima);
    }

    #[test]
    fn non_finite_value_names_abscissa() {
        match minimize_1d(|x| if x > 0.5 { f64::NAN } else { x }, 0.0, 1.0, 1e-6) {
            Err(OptimizerError::NonFinite { x }) => assert!(x > 0.5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(minimize_1d(|x| x, 0.0, 1.0, 0.0), Err(OptimizerError::InvalidSpec(_))));
    }

    #[test]
    fn refinement_never_worse_than_grid() {
        // A narrow dip between samples is kept only if refinement finds it lower.
        let f = |x: f64| (x - 0.4).abs().sqrt() + 0.1 * (40.0 * x).sin();
        let m = minimize_1d_with(f, 0.0, 1.0, 1e-8, 17).unwrap();
        let best_grid = (0..17).map(|k| f(k as f64 / 16.0)).fold(f64::INFINITY, f64::min);
        assert!(m.value <= best_grid);
    }

    fn square_bis() -> (PlateSpec, LoadSpectrum, Truncation) {
        (PlateSpec::unit_square(), LoadSpectrum::bisinusoidal(1, 1, 1.0), Truncation::square(1))
    }

    #[test]
    fn single_stiffener_goes_to_mid_span() {
        let (p, load, tr) = square_bis();
        let spec = SearchSpec::new(Objective::Uni, vec![0]);
        let r = optimize_positions(&spec, &p, &[Stiffener::eta(0.2, 0.3)], &load, tr).unwrap();
        assert!((r.best_positions[0] - 0.5).abs() < 1e-4, "{:?}", r.best_positions);
        assert_eq!(r.landscape.len(), 512);
        assert!(r.landscape.iter().all(|(_, u)| r.best_energy <= *u));
        assert!(landscape_csv(&r).starts_with("position0,U\n"));
        assert_eq!(landscape_csv(&r).lines().count(), 513);
    }

    #[test]
    fn flexible_pair_coincides() {
        let (p, load, tr) = square_bis();
        let spec = SearchSpec::new(Objective::Uni, vec![0, 1]).with_resolution(41);
        let st = [Stiffener::eta(0.2, 0.05), Stiffener::eta(0.7, 0.05)];
        let r = optimize_positions(&spec, &p, &st, &load, tr).unwrap();
        assert!((r.best_positions[0] - 0.5).abs() < 1e-3 && (r.best_positions[1] - 0.5).abs() < 1e-3, "{:?}", r.best_positions);
    }

    #[test]
    fn mirrored_search_is_deterministic() {
        let p = PlateSpec::new(1.0, 0.9, 0.01, 1.0, 0.3).unwrap();
        let load = LoadSpectrum::bisinusoidal(1, 1, 1.0);
        let st = [Stiffener::eta(0.2, 50.0), Stiffener::eta(0.7, 50.0)];
        let spec = SearchSpec::new(Objective::Uni, vec![0]).mirrored(1, 0).with_bounds(vec![(0.01, 0.45)]).with_resolution(64);
        let a = optimize_positions(&spec, &p, &st, &load, Truncation::square(1)).unwrap();
        let b = optimize_positions(&spec, &p, &st, &load, Truncation::square(1)).unwrap();
        assert_eq!(a, b);
        assert!((a.best_positions[0] + a.best_positions[1] - 0.9).abs() < 1e-12);
        assert!(a.best_positions[0] < 0.44);
    }

    #[test]
    fn objectives_agree_without_torsion() {
        let (p, load, tr) = square_bis();
        let st = [Stiffener::eta(0.3, 0.2)];
        let run = |o| optimize_positions(&SearchSpec::new(o, vec![0]).with_resolution(9), &p, &st, &load, tr).unwrap();
        let (u, b, t) = (run(Objective::Uni), run(Objective::Bi), run(Objective::Torsion));
        assert!((u.best_energy - b.best_energy).abs() <= 1e-12 * u.best_energy);
        assert!((u.best_energy - t.best_energy).abs() <= 1e-12 * u.best_energy);
    }

    #[test]
    fn prediction_is_feasible_point() {
        let (p, load, tr) = square_bis();
        let st = [Stiffener::eta(0.3, 0.2)];
        let pred = Prediction { positions: vec![0.45], regime: Regime::FlexibleFirst, within_regime: false };
        let spec = SearchSpec::new(Objective::Uni, vec![0]).with_resolution(33).with_prediction(pred);
        let r = optimize_positions(&spec, &p, &st, &load, tr).unwrap();
        let c = r.comparison.unwrap();
        assert!(c.energy_gap <= 0.0 && (c.position_gap - 0.05).abs() < 1e-3);
    }

    #[test]
    fn cost_guard_and_validation() {
        let (p, load, tr) = square_bis();
        let st = [Stiffener::eta(0.1, 1.0), Stiffener::eta(0.3, 1.0), Stiffener::eta(0.5, 1.0), Stiffener::eta(0.7, 1.0)];
        let four = SearchSpec::new(Objective::Uni, vec![0, 1, 2, 3]).with_resolution(3);
        assert!(matches!(optimize_positions(&four, &p, &st, &load, tr), Err(OptimizerError::CostGuard { free: 4, .. })));
        let dense = SearchSpec::new(Objective::Uni, vec![0, 1, 2]);
        match optimize_positions(&dense, &p, &st, &load, tr) {
            Err(e @ OptimizerError::CostGuard { .. }) => assert!(e.to_string().contains("134")),
            other => panic!("{other:?}"),
        }
        let coarse = SearchSpec::new(Objective::Uni, vec![0]).with_resolution(2);
        assert!(matches!(optimize_positions(&coarse, &p, &st, &load, tr), Err(OptimizerError::InvalidSpec(_))));
        let edge = SearchSpec::new(Objective::Uni, vec![0]).with_bounds(vec![(0.0, 0.5)]);
        assert!(matches!(optimize_positions(&edge, &p, &st, &load, tr), Err(OptimizerError::InvalidSpec(_))));
    }
}
