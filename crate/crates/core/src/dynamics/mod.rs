//! Fixed-step RK4 propagation of pure states and density matrices.
//!
//! The step is fixed so that runs are reproducible bit for bit; the default
//! step resolves the fastest harmonic in the Hamiltonian with 40 points per
//! period.

mod lindblad;
mod sparse;

use std::f64::consts::TAU;
use std::time::Instant;

pub use lindblad::{lindblad_rhs, Channel, LindbladSet, MasterGenerator};
pub use sparse::{CompiledHamiltonian, Csr};

use crate::error::{Error, Result};
use crate::hamiltonian::HarmonicHamiltonian;
use crate::par;
use crate::quantum::{norm, ComplexMatrix, Ket, C64, ZERO};

pub const POINTS_PER_PERIOD: f64 = 40.0;
/// Pure states are cheap, and RK4 is not norm-preserving: twice the
/// resolution keeps ‖ψ‖ within 1e-9 over a full operation.
pub const STATE_POINTS_PER_PERIOD: f64 = 80.0;
pub const DEFAULT_SAMPLES: usize = 200;
/// Largest tolerated drift of ‖ψ‖ or tr ρ before a run aborts.
pub const DRIFT_ABORT: f64 = 1e-6;
/// ρ is re-Hermitized every this many steps.
pub const REHERMITIZE_EVERY: usize = 1000;

/// Largest step that puts 40 points on the period of the fastest harmonic.
/// Static Hamiltonians use the 1-norm of H as the frequency scale.
pub fn default_step(h: &HarmonicHamiltonian) -> f64 {
    step_for(h, POINTS_PER_PERIOD)
}

/// Default step for pure-state propagation, 80 points per fastest period.
pub fn default_state_step(h: &HarmonicHamiltonian) -> f64 {
    step_for(h, STATE_POINTS_PER_PERIOD)
}

fn step_for(h: &HarmonicHamiltonian, points: f64) -> f64 {
    let fastest = h.max_frequency().max(h.static_term().norm_one());
    if fastest > 0.0 {
        TAU / fastest / points
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Debug)]
pub struct PropagationOptions {
    pub samples: usize,
    /// Observables sampled as ⟨O⟩ (real part).
    pub observables: Vec<ComplexMatrix>,
    /// Compute the smallest eigenvalue of the final density matrix.
    pub final_eigenvalue: bool,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            observables: Vec::new(),
            final_eigenvalue: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    /// ‖ψ‖² or tr ρ.
    pub trace: f64,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    /// max over all steps of |‖ψ‖² − 1| or |tr ρ − 1|.
    pub max_trace_deviation: f64,
    /// max |ρ − ρ†| seen before each re-Hermitization and at the end.
    pub max_hermiticity_drift: f64,
    pub min_eigenvalue: Option<f64>,
    pub steps: usize,
    pub dt: f64,
    pub rehermitizations: usize,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct PropagationResult<S> {
    pub final_state: S,
    pub samples: Vec<Sample>,
    pub diagnostics: Diagnostics,
}

fn step_count(t_final: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0) || !dt.is_finite() && dt != f64::INFINITY {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidParameter(format!("final time must be finite and >= 0, got {t_final}")));
    }
    if t_final == 0.0 {
        return Ok((0, 0.0));
    }
    let n = ((t_final / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok((n, t_final / n as f64))
}

fn sample_steps(n_steps: usize, samples: usize) -> Vec<usize> {
    if samples == 0 {
        return Vec::new();
    }
    let mut s: Vec<usize> = (0..samples)
        .map(|k| {
            if samples == 1 {
                n_steps
            } else {
                ((k as f64 * n_steps as f64) / (samples - 1) as f64).round() as usize
            }
        })
        .collect();
    s.dedup();
    s
}

/// Solve dψ/dt = −i H(t) ψ with fixed-step RK4.
pub fn propagate_state(h: &HarmonicHamiltonian, psi0: &[C64], t_final: f64, dt: f64) -> Result<PropagationResult<Ket>> {
    propagate_state_with(h, psi0, t_final, dt, &PropagationOptions::default())
}

pub fn propagate_state_with(
    h: &HarmonicHamiltonian,
    psi0: &[C64],
    t_final: f64,
    dt: f64,
    opts: &PropagationOptions,
) -> Result<PropagationResult<Ket>> {
    let started = Instant::now();
    let d = h.dim();
    if psi0.len() != d {
        return Err(Error::DimensionMismatch(format!("state of length {} for dimension {d}", psi0.len())));
    }
    if (norm(psi0) - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!("initial state has norm {}", norm(psi0))));
    }
    let (n_steps, dt) = step_count(t_final, dt)?;
    let compiled = CompiledHamiltonian::new(h, None);
    let observables: Vec<Csr> = opts.observables.iter().map(Csr::from_dense).collect();
    let sample_at = sample_steps(n_steps, opts.samples);

    let mut vals = compiled.values_buffer();
    let mut psi = psi0.to_vec();
    let mut acc = vec![ZERO; d];
    let mut tmp = vec![ZERO; d];
    let mut k = vec![ZERO; d];
    let mut obs_buf = vec![ZERO; d];
    let mut diag = Diagnostics {
        dt,
        ..Default::default()
    };
    let mut samples = Vec::with_capacity(sample_at.len());
    let mut next_sample = 0;

    let mut deriv = |t: f64, x: &[C64], out: &mut [C64]| {
        compiled.fill(t, &mut vals);
        compiled.apply_vec(&vals, x, out);
        out.iter_mut().for_each(|z| *z = C64::new(z.im, -z.re));
    };

    for step in 0..=n_steps {
        let t = step as f64 * dt;
        let norm_sq: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let dev = (norm_sq - 1.0).abs();
        diag.max_trace_deviation = diag.max_trace_deviation.max(dev);
        if dev > DRIFT_ABORT || !dev.is_finite() {
            return Err(Error::Integrator {
                t,
                reason: format!("norm drift {dev:.3e} after {step} steps of {dt:.3e} ns"),
            });
        }
        if sample_at.get(next_sample) == Some(&step) {
            let values = observables
                .iter()
                .map(|o| {
                    o.mul_vec(&psi, &mut obs_buf);
                    psi.iter().zip(&obs_buf).map(|(a, b)| (a.conj() * b).re).sum()
                })
                .collect();
            samples.push(Sample {
                t,
                trace: norm_sq,
                values,
            });
            next_sample += 1;
        }
        if step == n_steps {
            break;
        }

        acc.copy_from_slice(&psi);
        deriv(t, &psi, &mut k);
        rk_stage(&mut acc, &mut tmp, &psi, &k, dt / 6.0, dt / 2.0);
        deriv(t + dt / 2.0, &tmp, &mut k);
        rk_stage(&mut acc, &mut tmp, &psi, &k, dt / 3.0, dt / 2.0);
        deriv(t + dt / 2.0, &tmp, &mut k);
        rk_stage(&mut acc, &mut tmp, &psi, &k, dt / 3.0, dt);
        deriv(t + dt, &tmp, &mut k);
        for (a, &kk) in acc.iter_mut().zip(&k) {
            *a += kk * (dt / 6.0);
        }
        std::mem::swap(&mut psi, &mut acc);
    }
    diag.steps = n_steps;
    diag.wall_seconds = started.elapsed().as_secs_f64();
    Ok(PropagationResult {
        final_state: psi,
        samples,
        diagnostics: diag,
    })
}

/// acc += w k; tmp = base + h k.
fn rk_stage(acc: &mut [C64], tmp: &mut [C64], base: &[C64], k: &[C64], w: f64, h: f64) {
    for (((a, t), &b), &kk) in acc.iter_mut().zip(tmp.iter_mut()).zip(base).zip(k) {
        *a += kk * w;
        *t = b + kk * h;
    }
}

/// Row-parallel version of [`rk_stage`] for matrices.
fn rk_stage_mat(acc: &mut [C64], tmp: &mut [C64], base: &[C64], k: &[C64], w: f64, h: f64, n: usize) {
    par::for_each_row(acc, n, |i, row| {
        for (a, &kk) in row.iter_mut().zip(&k[i * n..(i + 1) * n]) {
            *a += kk * w;
        }
    });
    par::for_each_row(tmp, n, |i, row| {
        let range = i * n..(i + 1) * n;
        for ((t, &b), &kk) in row.iter_mut().zip(&base[range.clone()]).zip(&k[range]) {
            *t = b + kk * h;
        }
    });
}

/// Integrate the master equation with fixed-step RK4.
pub fn evolve_master(
    h: &HarmonicHamiltonian,
    lindblad: &LindbladSet,
    rho0: &ComplexMatrix,
    t_final: f64,
    dt: f64,
) -> Result<PropagationResult<ComplexMatrix>> {
    evolve_master_with(h, lindblad, rho0, t_final, dt, &PropagationOptions::default())
}

pub fn evolve_master_with(
    h: &HarmonicHamiltonian,
    lindblad: &LindbladSet,
    rho0: &ComplexMatrix,
    t_final: f64,
    dt: f64,
    opts: &PropagationOptions,
) -> Result<PropagationResult<ComplexMatrix>> {
    let started = Instant::now();
    let n = h.dim();
    if !rho0.is_square() || rho0.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} density matrix for dimension {n}",
            rho0.rows(),
            rho0.cols()
        )));
    }
    let herm = rho0.hermiticity_error();
    let tr = rho0.trace();
    if herm > 1e-10 || (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "initial density matrix must be Hermitian with unit trace (|ρ−ρ†| = {herm:.2e}, tr = {tr})"
        )));
    }
    let min0 = rho0.hermitian_eigenvalues().first().copied().unwrap_or(0.0);
    if min0 < -1e-10 {
        return Err(Error::InvalidParameter(format!(
            "initial density matrix is not positive semidefinite (λ_min = {min0:.2e})"
        )));
    }
    let (n_steps, dt) = step_count(t_final, dt)?;
    let mut gen = MasterGenerator::new(h, lindblad)?;
    let observables: Vec<Csr> = opts.observables.iter().map(Csr::from_dense).collect();
    let sample_at = sample_steps(n_steps, opts.samples);

    let mut rho0 = rho0.clone();
    rho0.hermitize();
    let mut rho = rho0.into_vec();
    let mut acc = vec![ZERO; n * n];
    let mut tmp = vec![ZERO; n * n];
    let mut k = vec![ZERO; n * n];
    let mut diag = Diagnostics {
        dt,
        ..Default::default()
    };
    let mut samples = Vec::with_capacity(sample_at.len());
    let mut next_sample = 0;

    for step in 0..=n_steps {
        let t = step as f64 * dt;
        let trace: f64 = (0..n).map(|i| rho[i * n + i].re).sum();
        let dev = (trace - 1.0).abs();
        diag.max_trace_deviation = diag.max_trace_deviation.max(dev);
        if dev > DRIFT_ABORT || !dev.is_finite() {
            return Err(Error::Integrator {
                t,
                reason: format!("trace drift {dev:.3e} after {step} steps of {dt:.3e} ns"),
            });
        }
        if step > 0 && step % REHERMITIZE_EVERY == 0 {
            diag.max_hermiticity_drift = diag.max_hermiticity_drift.max(hermiticity_error(&rho, n));
            hermitize(&mut rho, n);
            diag.rehermitizations += 1;
        }
        if sample_at.get(next_sample) == Some(&step) {
            let values = observables.iter().map(|o| trace_product(o, &rho, n)).collect();
            samples.push(Sample { t, trace, values });
            next_sample += 1;
        }
        if step == n_steps {
            break;
        }

        acc.copy_from_slice(&rho);
        gen.apply(t, &rho, &mut k);
        rk_stage_mat(&mut acc, &mut tmp, &rho, &k, dt / 6.0, dt / 2.0, n);
        gen.apply(t + dt / 2.0, &tmp, &mut k);
        rk_stage_mat(&mut acc, &mut tmp, &rho, &k, dt / 3.0, dt / 2.0, n);
        gen.apply(t + dt / 2.0, &tmp, &mut k);
        rk_stage_mat(&mut acc, &mut tmp, &rho, &k, dt / 3.0, dt, n);
        gen.apply(t + dt, &tmp, &mut k);
        par::for_each_row(&mut acc, n, |i, row| {
            for (a, &kk) in row.iter_mut().zip(&k[i * n..(i + 1) * n]) {
                *a += kk * (dt / 6.0);
            }
        });
        std::mem::swap(&mut rho, &mut acc);
    }
    diag.max_hermiticity_drift = diag.max_hermiticity_drift.max(hermiticity_error(&rho, n));
    let final_state = ComplexMatrix::from_vec(n, n, rho)?;
    if opts.final_eigenvalue {
        diag.min_eigenvalue = final_state.hermitian_eigenvalues().first().copied();
    }
    diag.steps = n_steps;
    diag.wall_seconds = started.elapsed().as_secs_f64();
    Ok(PropagationResult {
        final_state,
        samples,
        diagnostics: diag,
    })
}

fn hermiticity_error(rho: &[C64], n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((rho[i * n + j] - rho[j * n + i].conj()).norm());
        }
        worst = worst.max(rho[i * n + i].im.abs());
    }
    worst
}

fn hermitize(rho: &mut [C64], n: usize) {
    for i in 0..n {
        for j in i..n {
            let avg = (rho[i * n + j] + rho[j * n + i].conj()) * 0.5;
            rho[i * n + j] = avg;
            rho[j * n + i] = avg.conj();
        }
    }
}

/// Re tr(O ρ).
fn trace_product(o: &Csr, rho: &[C64], n: usize) -> f64 {
    (0..n)
        .map(|i| o.row(i).map(|(k, v)| v * rho[k * n + i]).sum::<C64>().re)
        .sum()
}
