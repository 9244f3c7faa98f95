//! Independent reference computations used to cross-check the integrators:
//! the explicit d²×d² Lindblad superoperator, exact propagation in a frame
//! where a harmonic Hamiltonian becomes static, and the closed-form pair
//! rotation against RK4.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::pair_evolution;
use crate::dynamics::{lindblad_rhs, propagate_state, LindbladSet};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_parallel, HarmonicHamiltonian};
use crate::model::{DissipationSpec, SystemSpec};
use crate::quantum::{expm_oracle, kron, ComplexMatrix, HilbertLayout, Ket, C64, I};

/// Generator 𝓛 with vec(dρ/dt) = 𝓛 vec(ρ), for row-major vec(ρ)[i·d + j] = ρ_ij.
/// Uses vec(AρB) = (A ⊗ Bᵀ) vec(ρ).
pub fn superoperator(h: &ComplexMatrix, lindblad: &LindbladSet) -> ComplexMatrix {
    let d = h.rows();
    let id = ComplexMatrix::identity(d);
    let mut s = &kron(h, &id) - &kron(&id, &h.transpose());
    s = s.scale(-I);
    for c in lindblad.channels() {
        let ldl = c.op.adjoint().matmul(&c.op);
        let conj_l = c.op.adjoint().transpose();
        s.add_scaled(C64::new(c.rate, 0.0), &kron(&c.op, &conj_l));
        s.add_scaled(C64::new(-0.5 * c.rate, 0.0), &kron(&ldl, &id));
        s.add_scaled(C64::new(-0.5 * c.rate, 0.0), &kron(&id, &ldl.transpose()));
    }
    s
}

/// Largest |lindblad_rhs − 𝓛 vec(ρ)| over `instances` random Hermitian H,
/// random collapse operators, a dephasing projector and random ρ of
/// dimension `d`.
pub fn superoperator_deviation(d: usize, instances: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let h = random_hermitian(&mut rng, d);
        let rho = random_hermitian(&mut rng, d);
        let mut set = LindbladSet::empty();
        for k in 0..3 {
            set.push_collapse(format!("L{k}"), random_matrix(&mut rng, d), rng.gen_range(0.05..2.0));
        }
        let mut p = ComplexMatrix::zeros(d, d);
        p[(d - 1, d - 1)] = C64::new(1.0, 0.0);
        set.push_dephasing("P".into(), p, rng.gen_range(0.05..2.0));

        let direct = lindblad_rhs(&rho, &h, &set)?;
        let vec = superoperator(&h, &set).mul_vec(rho.as_slice());
        let via = ComplexMatrix::from_vec(d, d, vec)?;
        worst = worst.max(direct.max_abs_diff(&via));
    }
    Ok(worst)
}

/// ψ(t) by matrix exponentials, if the Hamiltonian has a static frame:
/// ψ(t) = e^{iEt} e^{−i(H(0) + E)t} ψ₀ with E the frame energies.
pub fn frame_propagate(h: &HarmonicHamiltonian, psi0: &[C64], t: f64) -> Result<Ket> {
    let energies = h
        .static_frame()
        .ok_or_else(|| Error::InvalidParameter("Hamiltonian has no static frame".into()))?;
    if psi0.len() != h.dim() {
        return Err(Error::DimensionMismatch(format!("state of length {} for dimension {}", psi0.len(), h.dim())));
    }
    let mut gen = h.evaluate(0.0);
    for (k, &e) in energies.iter().enumerate() {
        gen[(k, k)] += C64::new(e, 0.0);
    }
    let u = expm_oracle(&gen.scale(C64::new(0.0, -t)));
    let mut psi = u.mul_vec(psi0);
    for (z, &e) in psi.iter_mut().zip(&energies) {
        *z *= C64::from_polar(1.0, e * t);
    }
    Ok(psi)
}

/// Largest deviation between RK4 under the resonator-only parallel
/// Hamiltonian and the closed-form pair rotation, over `times` evenly spaced
/// times in [0, π/λ_min] for random λ_j ∈ [λ_lo, λ_hi].
pub fn pair_rotation_deviation(n_pairs: usize, times: usize, seed: u64, dt_fraction: f64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = SystemSpec::reference(10.0)?;
    spec.delta = (0..n_pairs).map(|j| 4.0 + 2.0 * j as f64).collect();
    let lambda: Vec<f64> = (0..n_pairs).map(|_| rng.gen_range(0.02..0.08)).collect();
    spec.g = lambda.iter().zip(&spec.delta).map(|(l, d)| (l * d).sqrt()).collect();
    spec.mu = spec.g.clone();
    spec.n_max = 1;
    spec.dissipation = DissipationSpec::none(n_pairs);
    let layout = HilbertLayout::resonators(n_pairs, 1);
    let h = HarmonicHamiltonian::from_static(layout, build_parallel(&spec, false)?)?;
    let psi0 = pair_evolution(&lambda, 0.0).to_ket(1)?;
    let lmin = lambda.iter().copied().fold(f64::INFINITY, f64::min);
    let lmax = lambda.iter().copied().fold(0.0, f64::max);
    let t_end = std::f64::consts::PI / lmin;
    let mut worst: f64 = 0.0;
    for k in 0..times {
        let t = t_end * k as f64 / (times - 1).max(1) as f64;
        let got = propagate_state(&h, &psi0, t, dt_fraction / lmax)?.final_state;
        let want = pair_evolution(&lambda, t).to_ket(1)?;
        worst = worst.max(max_diff(&got, &want));
    }
    Ok(worst)
}

pub fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn random_matrix(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn random_hermitian(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    let a = random_matrix(rng, n);
    (&a + &a.adjoint()).scale_real(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::default_step;
    use crate::hamiltonian::build_full;
    use crate::quantum::{basis_ket, primitive, Primitive, ONE};

    #[test]
    fn superoperator_matches_direct_rhs() {
        assert!(superoperator_deviation(6, 5, 11).unwrap() < 1e-12);
    }

    #[test]
    fn superoperator_of_decay() {
        // Single two-level decay: d ρ₁₁/dt = −κ ρ₁₁.
        let mut set = LindbladSet::empty();
        set.push_collapse("a".into(), primitive(Primitive::Annihilate(2)).unwrap(), 0.3);
        let s = superoperator(&ComplexMatrix::zeros(2, 2), &set);
        assert!((s[(3, 3)] + C64::new(0.3, 0.0)).norm() < 1e-15);
        assert!((s[(0, 3)] - C64::new(0.3, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn frame_propagation_matches_rk4() {
        let mut spec = SystemSpec::reference(12.0).unwrap();
        spec.n_max = 1;
        spec.mu = spec.g.clone();
        spec.include_crosstalk = false;
        spec.include_leakage = false;
        let h = build_full(&spec).unwrap();
        let psi0 = crate::analytic::initial_state(&spec).unwrap();
        let exact = frame_propagate(&h, &psi0, 5.0).unwrap();
        let err = |k: f64| {
            let rk = propagate_state(&h, &psi0, 5.0, default_step(&h) / k).unwrap().final_state;
            max_diff(&exact, &rk)
        };
        let (e1, e2, e4) = (err(1.0), err(2.0), err(4.0));
        // Fourth order: each halving gains a factor of about 16.
        assert!(e1 / e2 > 14.0 && e2 / e4 > 14.0, "{e1} {e2} {e4}");
        assert!(e4 < 1e-9, "{e4}");

        // Leakage keeps a static frame; crosstalk does not.
        spec.include_leakage = true;
        let h = build_full(&spec).unwrap();
        let exact = frame_propagate(&h, &psi0, 2.0).unwrap();
        let rk = propagate_state(&h, &psi0, 2.0, default_step(&h) / 4.0).unwrap().final_state;
        assert!(max_diff(&exact, &rk) < 1e-9);
        spec.include_crosstalk = true;
        let h = build_full(&spec).unwrap();
        assert!(frame_propagate(&h, &psi0, 1.0).is_err());
    }

    #[test]
    fn frame_propagation_single_harmonic() {
        // H(t) = g(e^{iνt}|0⟩⟨1| + h.c.) solved exactly: Rabi oscillation
        // with detuning ν.
        let layout = HilbertLayout::new(vec![2]).unwrap();
        let mut h = HarmonicHamiltonian::new(layout);
        let (g, nu) = (0.3, 0.8);
        h.add_term(ComplexMatrix::from_real_rows(&[&[0.0, g], &[0.0, 0.0]]), nu).unwrap();
        let t = 4.0;
        let psi = frame_propagate(&h, &basis_ket(2, 1), t).unwrap();
        let w = (g * g + nu * nu / 4.0).sqrt();
        let p0 = g * g / (w * w) * (w * t).sin().powi(2);
        assert!((psi[0].norm_sqr() - p0).abs() < 1e-12);
        let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        assert!((n - ONE.re).abs() < 1e-12);
    }

    #[test]
    fn pair_rotation_agrees() {
        for n in 1..=3 {
            assert!(pair_rotation_deviation(n, 5, n as u64, 0.02).unwrap() < 1e-8);
        }
    }
}
