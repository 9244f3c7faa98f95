//! Single-point runs and parameter grids.
//!
//! A point is resolved from a base [`Scenario`] plus parameter overrides,
//! validated, propagated (pure state without dissipation, master equation
//! otherwise), reduced to the resonators and scored against the EPR product.
//! Grid points run independently on the worker pool and are merged in
//! row-major grid order.

mod output;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub use output::{format_g, svg_heatmap, to_csv, write_atomic, CSV_HEADER};

use crate::analytic::{epr_fidelities, initial_state, reduce_to_resonators};
use crate::dynamics::{default_state_step, default_step, evolve_master_with, propagate_state_with, LindbladSet, PropagationOptions};
use crate::error::{Error, Result};
use crate::hamiltonian::build_full;
use crate::model::{derive, resolve_matching, units, validate_with, Status, SystemSpec, Thresholds};
use crate::par;
use crate::quantum::density_from_ket;

/// Parameters a sweep axis can vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Param {
    /// Normalized detuning Δ₁/g₁; couplings are re-matched.
    C1,
    /// Crosstalk strength as a fraction of g_m.
    GcsRatio,
    /// Pulse Rabi frequency Ω/2π in MHz.
    OmegaMhz,
    NMax,
    /// Integrator step in ps.
    DtPs,
}

impl Param {
    pub const ALL: [Param; 5] = [Param::C1, Param::GcsRatio, Param::OmegaMhz, Param::NMax, Param::DtPs];

    pub fn name(self) -> &'static str {
        match self {
            Param::C1 => "c1",
            Param::GcsRatio => "gcs_ratio",
            Param::OmegaMhz => "omega_mhz",
            Param::NMax => "n_max",
            Param::DtPs => "dt_ps",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown sweep parameter `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepAxis {
    pub param: Param,
    pub values: Vec<f64>,
}

impl SweepAxis {
    pub fn list(param: Param, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "axis {param} needs at least one finite value"
            )));
        }
        Ok(Self { param, values })
    }

    /// `count` evenly spaced values from `min` to `max` inclusive.
    pub fn linear(param: Param, min: f64, max: f64, count: usize) -> Result<Self> {
        let values = match count {
            0 => Vec::new(),
            1 => vec![min],
            _ => (0..count)
                .map(|k| min + (max - min) * k as f64 / (count - 1) as f64)
                .collect(),
        };
        Self::list(param, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Base configuration shared by every point of a run.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub spec: SystemSpec,
    /// μ_j/g_j, kept when c₁ is overridden and the couplings are re-matched.
    pub mu_ratio: Vec<f64>,
    /// Fixed step; `None` uses the default step of each point's Hamiltonian.
    pub dt_ps: Option<f64>,
    /// Fixed final time; `None` uses t_op of each point.
    pub t_final_ns: Option<f64>,
    /// Run points that fail hard validation.
    pub force: bool,
    pub thresholds: Thresholds,
}

impl Scenario {
    pub fn new(spec: SystemSpec) -> Self {
        let mu_ratio = spec.g.iter().zip(&spec.mu).map(|(g, m)| m / g).collect();
        Self {
            spec,
            mu_ratio,
            dt_ps: None,
            t_final_ns: None,
            force: false,
            thresholds: Thresholds::default(),
        }
    }

    /// The spec of one point: the base with `overrides` applied in order.
    pub fn resolve(&self, overrides: &[(Param, f64)]) -> Result<(SystemSpec, Option<f64>)> {
        let mut spec = self.spec.clone();
        let mut dt_ps = self.dt_ps;
        for &(param, value) in overrides {
            match param {
                Param::C1 => {
                    spec.g = resolve_matching(&spec.delta, value)?.g;
                    spec.mu = spec.g.iter().zip(&self.mu_ratio).map(|(g, r)| g * r).collect();
                }
                Param::GcsRatio => spec.gcs_ratio = value,
                Param::OmegaMhz => spec.omega = units::mhz(value),
                Param::NMax => {
                    if value < 1.0 || value.fract() != 0.0 {
                        return Err(Error::InvalidParameter(format!("n_max must be a positive integer, got {value}")));
                    }
                    spec.n_max = value as usize;
                }
                Param::DtPs => dt_ps = Some(value),
            }
        }
        spec.check()?;
        Ok((spec, dt_ps))
    }
}

/// Result of one point. Failed points keep their parameters and carry the
/// error; their numerical fields are NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub c: Vec<f64>,
    pub omega_mhz: f64,
    pub gcs_ratio: f64,
    pub g_mhz: Vec<f64>,
    pub mu_mhz: Vec<f64>,
    pub t_op_ns: f64,
    pub f_joint: f64,
    pub f_pairs: Vec<f64>,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
    pub steps: usize,
    pub wall_seconds: f64,
    pub validity: Status,
    pub error: Option<String>,
}

impl SweepRecord {
    pub fn c1(&self) -> f64 {
        self.c.first().copied().unwrap_or(f64::NAN)
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    fn from_spec(spec: &SystemSpec, validity: Status) -> Self {
        let d = derive(spec);
        Self {
            c: d.c,
            omega_mhz: units::to_mhz(spec.omega),
            gcs_ratio: spec.gcs_ratio,
            g_mhz: spec.g.iter().map(|&g| units::to_mhz(g)).collect(),
            mu_mhz: spec.mu.iter().map(|&m| units::to_mhz(m)).collect(),
            t_op_ns: d.t_op,
            f_joint: f64::NAN,
            f_pairs: vec![f64::NAN; spec.n_pairs()],
            trace_error: f64::NAN,
            min_eigenvalue: f64::NAN,
            steps: 0,
            wall_seconds: 0.0,
            validity,
            error: None,
        }
    }
}

/// Build, validate, propagate and score one point.
pub fn run_point(base: &Scenario, overrides: &[(Param, f64)]) -> Result<SweepRecord> {
    let started = Instant::now();
    let (spec, dt_ps) = base.resolve(overrides)?;
    let report = validate_with(&spec, base.thresholds);
    if report.worst() == Status::Fail && !base.force {
        let failed: Vec<String> = report.failures().map(|c| format!("{} = {:.3}", c.label, c.value)).collect();
        return Err(Error::Validity(failed.join(", ")));
    }
    let mut record = SweepRecord::from_spec(&spec, report.worst());
    let h = build_full(&spec)?;
    let layout = h.layout().clone();
    let psi0 = initial_state(&spec)?;
    let t_final = base.t_final_ns.unwrap_or(record.t_op_ns);
    let fixed_dt = dt_ps.map(|ps| ps * 1e-3);
    let opts = PropagationOptions {
        samples: 0,
        ..Default::default()
    };

    let (rho, diag) = if spec.include_dissipation {
        let lindblad = LindbladSet::from_spec(&spec)?;
        let dt = fixed_dt.unwrap_or_else(|| default_step(&h));
        let r = evolve_master_with(&h, &lindblad, &density_from_ket(&psi0), t_final, dt, &opts)?;
        (r.final_state, r.diagnostics)
    } else {
        let dt = fixed_dt.unwrap_or_else(|| default_state_step(&h));
        let r = propagate_state_with(&h, &psi0, t_final, dt, &opts)?;
        let mut diag = r.diagnostics;
        // A projector onto a normalized ket has smallest eigenvalue 0.
        diag.min_eigenvalue = Some(0.0);
        (density_from_ket(&r.final_state), diag)
    };
    let reduced = reduce_to_resonators(&rho, &layout)?;
    let fid = epr_fidelities(&reduced, spec.n_pairs(), spec.n_max)?;

    record.f_joint = fid.joint;
    record.f_pairs = fid.pairs;
    record.trace_error = diag.max_trace_deviation;
    record.min_eigenvalue = diag.min_eigenvalue.unwrap_or(f64::NAN);
    record.steps = diag.steps;
    record.wall_seconds = started.elapsed().as_secs_f64();
    Ok(record)
}

/// Records of a grid in row-major order (last axis fastest).
#[derive(Clone, Debug)]
pub struct SweepTable {
    pub axes: Vec<SweepAxis>,
    pub records: Vec<SweepRecord>,
}

impl SweepTable {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(SweepAxis::len).collect()
    }

    /// Grid coordinates of a flat record index.
    pub fn coords(&self, index: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut rest = index;
        let mut out = vec![0; shape.len()];
        for (k, &n) in shape.iter().enumerate().rev() {
            out[k] = rest % n;
            rest /= n;
        }
        out
    }

    fn index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(self.shape()).fold(0, |acc, (&c, n)| acc * n + c)
    }
}

/// Override lists of every grid point, row-major.
pub fn grid_points(axes: &[SweepAxis]) -> Vec<Vec<(Param, f64)>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push((axis.param, v));
                    q
                })
            })
            .collect();
    }
    points
}

/// Run every point of a one- or two-axis grid on at most `workers` threads
/// (0 = all cores). Failing points are kept as rows with their error.
pub fn sweep_grid(base: &Scenario, axes: &[SweepAxis], workers: usize) -> Result<SweepTable> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::InvalidParameter(format!("a sweep takes 1 or 2 axes, got {}", axes.len())));
    }
    if let Some(axis) = axes.iter().find(|a| a.is_empty()) {
        return Err(Error::InvalidParameter(format!("axis {} is empty", axis.param)));
    }
    let points = grid_points(axes);
    let records = par::with_workers(workers, || {
        par::map_collect(&points, |overrides| {
            run_point(base, overrides).unwrap_or_else(|err| {
                log::warn!("point {overrides:?} failed: {err}");
                let mut record = match base.resolve(overrides) {
                    Ok((spec, _)) => SweepRecord::from_spec(&spec, validate_with(&spec, base.thresholds).worst()),
                    Err(_) => SweepRecord::from_spec(&base.spec, Status::Fail),
                };
                record.error = Some(err.to_string());
                record
            })
        })
    });
    Ok(SweepTable {
        axes: axes.to_vec(),
        records,
    })
}

#[derive(Clone, Debug)]
pub struct Optimum {
    pub index: usize,
    pub record: SweepRecord,
    /// Indices of the records adjacent on the grid (one step along one axis).
    pub neighbors: Vec<usize>,
}

/// Row with the largest F_joint. Ties go to the smaller c₁, then to the
/// smaller Ω; failed rows are ignored.
pub fn find_optimum(table: &SweepTable) -> Option<Optimum> {
    let better = |a: &SweepRecord, b: &SweepRecord| {
        a.f_joint > b.f_joint
            || (a.f_joint == b.f_joint && (a.c1(), a.omega_mhz) < (b.c1(), b.omega_mhz))
    };
    let mut best: Option<usize> = None;
    for (i, r) in table.records.iter().enumerate() {
        if !r.is_ok() || r.f_joint.is_nan() {
            continue;
        }
        if best.map_or(true, |b| better(r, &table.records[b])) {
            best = Some(i);
        }
    }
    let index = best?;
    let coords = table.coords(index);
    let shape = table.shape();
    let mut neighbors = Vec::new();
    for k in 0..coords.len() {
        for step in [-1i64, 1] {
            let c = coords[k] as i64 + step;
            if c >= 0 && (c as usize) < shape[k] {
                let mut n = coords.clone();
                n[k] = c as usize;
                neighbors.push(table.index(&n));
            }
        }
    }
    Some(Optimum {
        index,
        record: table.records[index].clone(),
        neighbors,
    })
}

/// Preset grids over c₁ ∈ [7, 17] at the default resolutions.
pub mod presets {
    use super::*;
    use crate::model::SystemSpec;

    pub const C1_POINTS: usize = 21;
    pub const OMEGA_POINTS: usize = 16;
    pub const GCS_RATIOS: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

    /// Base for the fidelity-vs-c₁ curves: Ω/2π = 100 MHz. Forced, because the
    /// small-c₁ end fails the dispersive check.
    pub fn detuning_scenario() -> Result<Scenario> {
        let mut s = Scenario::new(SystemSpec::reference(11.0)?);
        s.force = true;
        Ok(s)
    }

    pub fn detuning_axes() -> Result<Vec<SweepAxis>> {
        Ok(vec![
            SweepAxis::list(Param::GcsRatio, GCS_RATIOS.to_vec())?,
            SweepAxis::linear(Param::C1, 7.0, 17.0, C1_POINTS)?,
        ])
    }

    /// Base for the (c₁, Ω) map: g_cs = 0.4 g_m. Forced, because Δ₁/Ω drops
    /// below the hard threshold at the high-Ω edge.
    pub fn drive_scenario() -> Result<Scenario> {
        detuning_scenario()
    }

    pub fn drive_axes() -> Result<Vec<SweepAxis>> {
        Ok(vec![
            SweepAxis::linear(Param::C1, 7.0, 17.0, C1_POINTS)?,
            SweepAxis::linear(Param::OmegaMhz, 50.0, 200.0, OMEGA_POINTS)?,
        ])
    }
}
