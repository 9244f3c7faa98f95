//! Closed-form states: the initial product state, beam-splitter evolution of
//! each pair, the frame phases that map it back to the interaction picture,
//! the EPR product target and the square-root fidelity.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::model::SystemSpec;
use crate::quantum::{
    density_from_ket, partial_trace, ComplexMatrix, HilbertLayout, Ket, Site, C64, I, ONE, QUTRIT_DIM, ZERO,
};

/// Per-pair amplitudes (c_j, s_j) of |1⟩_a|0⟩_b and |0⟩_a|1⟩_b.
#[derive(Clone, Debug, PartialEq)]
pub struct PairAmplitudes {
    pub pairs: Vec<(C64, C64)>,
}

impl PairAmplitudes {
    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Product state Π_j (c_j|10⟩ + s_j|01⟩) on the resonator layout.
    pub fn to_ket(&self, n_max: usize) -> Result<Ket> {
        let amps: Vec<[C64; 2]> = self.pairs.iter().map(|&(c, s)| [c, s]).collect();
        pair_product(&amps, n_max)
    }
}

/// |+⟩ ⊗ Π_j|1⟩_{a_j} ⊗ Π_j|0⟩_{b_j} on the qutrit + resonator layout.
pub fn initial_state(spec: &SystemSpec) -> Result<Ket> {
    let n = spec.n_pairs();
    let layout = HilbertLayout::qutrit_resonators(n, spec.n_max);
    let ones = vec![1; n];
    let zeros = vec![0; n];
    let mut psi = vec![ZERO; layout.total_dim()];
    for q in [0, 1] {
        psi[layout.fock_index(q, &ones, &zeros)?] = C64::new(FRAC_1_SQRT_2, 0.0);
    }
    Ok(psi)
}

/// c_j = cos(λ_j t/2), s_j = i sin(λ_j t/2).
pub fn pair_evolution(lambda: &[f64], t: f64) -> PairAmplitudes {
    PairAmplitudes {
        pairs: lambda
            .iter()
            .map(|&l| {
                let x = l * t / 2.0;
                (C64::new(x.cos(), 0.0), C64::new(0.0, x.sin()))
            })
            .collect(),
    }
}

/// A resonator state brought back to the original interaction picture.
#[derive(Clone, Debug)]
pub struct RestoredState {
    /// Resonator-layout state with the common phase removed.
    pub state: Ket,
    /// Common phase that was stripped: Σ_j of the mean of the two branch
    /// phases. Equals 3Nλt/2 when g_j = μ_j and g_j²/Δ_j = λ.
    pub global_phase: f64,
    /// Per pair, the phases applied to the c_j and s_j branches before the
    /// common part was removed.
    pub branch_phases: Vec<(f64, f64)>,
}

/// Apply e^{i g²t/Δ} e^{i μ²t/(2Δ)} to each c_j branch and
/// e^{i g²t/(2Δ)} e^{i μ²t/Δ} to each s_j branch, then strip the common phase.
/// The pulse factor e^{−iΩt} is a global phase and is not tracked.
pub fn restore_interaction_picture(amps: &PairAmplitudes, spec: &SystemSpec, t: f64) -> Result<RestoredState> {
    let n = spec.n_pairs();
    if amps.n_pairs() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} pair amplitudes for {n} pairs",
            amps.n_pairs()
        )));
    }
    let mut branch_phases = Vec::with_capacity(n);
    let mut global_phase = 0.0;
    let mut rotated = Vec::with_capacity(n);
    for (j, &(c, s)) in amps.pairs.iter().enumerate() {
        let (g2, m2, d) = (spec.g[j].powi(2), spec.mu[j].powi(2), spec.delta[j]);
        let phi_c = g2 * t / d + m2 * t / (2.0 * d);
        let phi_s = g2 * t / (2.0 * d) + m2 * t / d;
        let mean = (phi_c + phi_s) / 2.0;
        global_phase += mean;
        branch_phases.push((phi_c, phi_s));
        rotated.push([c * C64::from_polar(1.0, phi_c - mean), s * C64::from_polar(1.0, phi_s - mean)]);
    }
    Ok(RestoredState {
        state: pair_product(&rotated, spec.n_max)?,
        global_phase,
        branch_phases,
    })
}

/// Π_j (|1⟩_{a_j}|0⟩_{b_j} + i|0⟩_{a_j}|1⟩_{b_j})/√2 on the resonator layout.
pub fn epr_target(n_pairs: usize, n_max: usize) -> Result<Ket> {
    if n_pairs == 0 {
        return Err(Error::InvalidParameter("EPR target needs at least one pair".into()));
    }
    let r = C64::new(FRAC_1_SQRT_2, 0.0);
    pair_product(&vec![[r, I * r]; n_pairs], n_max)
}

/// (|10⟩ + i|01⟩)/√2 on the two-mode layout (a, b).
pub fn single_pair_target(n_max: usize) -> Result<Ket> {
    epr_target(1, n_max)
}

/// Π_j (x_j|1⟩_{a_j}|0⟩_{b_j} + y_j|0⟩_{a_j}|1⟩_{b_j}) in layout order.
fn pair_product(amps: &[[C64; 2]], n_max: usize) -> Result<Ket> {
    if n_max == 0 {
        return Err(Error::InvalidDimension(1));
    }
    let n = amps.len();
    let layout = HilbertLayout::resonators(n, n_max);
    let mut psi = vec![ZERO; layout.total_dim()];
    let mut a = vec![0; n];
    let mut b = vec![0; n];
    // Each pair picks branch 0 (photon in a) or 1 (photon in b).
    for mask in 0..(1usize << n) {
        let mut amp = ONE;
        for j in 0..n {
            let branch = (mask >> j) & 1;
            a[j] = 1 - branch;
            b[j] = branch;
            amp *= amps[j][branch];
        }
        psi[layout.fock_index(0, &a, &b)?] = amp;
    }
    Ok(psi)
}

/// √⟨target|ρ|target⟩, clamped to [0, 1].
pub fn fidelity(rho: &ComplexMatrix, target: &[C64]) -> Result<f64> {
    if !rho.is_square() || rho.rows() != target.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} state against a target of length {}",
            rho.rows(),
            rho.cols(),
            target.len()
        )));
    }
    Ok(rho.expectation(target).re.clamp(0.0, 1.0).sqrt())
}

/// Trace out the qutrit of a state on the qutrit + resonator layout.
pub fn reduce_to_resonators(rho: &ComplexMatrix, layout: &HilbertLayout) -> Result<ComplexMatrix> {
    if !layout.has_qutrit() {
        return Err(Error::DimensionMismatch("layout has no qutrit to trace out".into()));
    }
    let keep: Vec<usize> = (1..layout.n_subsystems()).collect();
    partial_trace(rho, layout, &keep)
}

/// Joint and per-pair fidelities of a resonator-only state.
#[derive(Clone, Debug, PartialEq)]
pub struct Fidelities {
    pub joint: f64,
    pub pairs: Vec<f64>,
}

/// Fidelity to the EPR product and, per pair, fidelity of the two-mode
/// reduced state to the single-pair EPR state.
pub fn epr_fidelities(rho: &ComplexMatrix, n_pairs: usize, n_max: usize) -> Result<Fidelities> {
    let layout = HilbertLayout::resonators(n_pairs, n_max);
    let joint = fidelity(rho, &epr_target(n_pairs, n_max)?)?;
    let single = single_pair_target(n_max)?;
    let pairs = (0..n_pairs)
        .map(|j| {
            let keep = [layout.site(Site::A(j))?, layout.site(Site::B(j))?];
            fidelity(&partial_trace(rho, &layout, &keep)?, &single)
        })
        .collect::<Result<_>>()?;
    Ok(Fidelities { joint, pairs })
}

/// Same as [`epr_fidelities`] for a pure resonator state.
pub fn epr_fidelities_pure(psi: &[C64], n_pairs: usize, n_max: usize) -> Result<Fidelities> {
    epr_fidelities(&density_from_ket(psi), n_pairs, n_max)
}

/// Express the qutrit factor in the basis {|+⟩, |−⟩, |f⟩}.
pub fn to_rotated_basis(psi: &[C64], layout: &HilbertLayout) -> Result<Ket> {
    rotate_qutrit(psi, layout)
}

/// Inverse of [`to_rotated_basis`].
pub fn from_rotated_basis(psi: &[C64], layout: &HilbertLayout) -> Result<Ket> {
    rotate_qutrit(psi, layout)
}

fn rotate_qutrit(psi: &[C64], layout: &HilbertLayout) -> Result<Ket> {
    if !layout.has_qutrit() || psi.len() != layout.total_dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of length {} on layout {:?}",
            psi.len(),
            layout.dims()
        )));
    }
    // The map is real, symmetric and unitary, hence its own inverse.
    let s = FRAC_1_SQRT_2;
    let stride = layout.strides()[0];
    let mut out = psi.to_vec();
    for r in 0..stride {
        let (g, e) = (psi[r], psi[stride + r]);
        out[r] = (g + e) * s;
        out[stride + r] = (g - e) * s;
    }
    debug_assert_eq!(layout.dims()[0], QUTRIT_DIM);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::propagate_state;
    use crate::hamiltonian::{build_parallel, rotated_basis, HarmonicHamiltonian};
    use crate::model::derive;
    use crate::quantum::{embed, inner, norm, primitive, Primitive};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn matched_spec(c1: f64) -> SystemSpec {
        let mut s = SystemSpec::reference(c1).unwrap();
        s.mu = s.g.clone();
        s
    }

    #[test]
    fn initial_state_populations() {
        let spec = SystemSpec::reference(11.0).unwrap();
        let psi = initial_state(&spec).unwrap();
        let l = HilbertLayout::qutrit_resonators(2, 2);
        assert!((norm(&psi) - 1.0).abs() < 1e-15);
        let num = primitive(Primitive::Number(3)).unwrap();
        for j in 0..2 {
            let na = embed(&num, l.site(Site::A(j)).unwrap(), &l).unwrap();
            let nb = embed(&num, l.site(Site::B(j)).unwrap(), &l).unwrap();
            assert!((na.expectation(&psi).re - 1.0).abs() < 1e-15);
            assert!(nb.expectation(&psi).norm() < 1e-15);
        }
        let q = partial_trace(&density_from_ket(&psi), &l, &[0]).unwrap();
        let plus: Vec<C64> = (0..3).map(|i| rotated_basis()[(i, 0)]).collect();
        assert!(q.max_abs_diff(&density_from_ket(&plus)) < 1e-15);
    }

    #[test]
    fn pair_evolution_landmarks() {
        let l = 0.04;
        let a = pair_evolution(&[l], 0.0);
        assert_eq!(a.pairs[0], (ONE, ZERO));
        let (c, s) = pair_evolution(&[l], PI / (2.0 * l)).pairs[0];
        assert!((c - C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((s - C64::new(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
        let (c, s) = pair_evolution(&[l], PI / l).pairs[0];
        assert!(c.norm() < 1e-15 && (s - I).norm() < 1e-15);
    }

    #[test]
    fn restore_matched_is_global_phase() {
        let spec = matched_spec(11.0);
        let lambda = derive(&spec).lambda;
        let t = 13.7;
        let amps = pair_evolution(&lambda, t);
        let r = restore_interaction_picture(&amps, &spec, t).unwrap();
        assert!((r.global_phase - 3.0 * 2.0 * lambda[0] * t / 2.0).abs() < 1e-12);
        let plain = amps.to_ket(spec.n_max).unwrap();
        let diff = r.state.iter().zip(&plain).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
        assert!((norm(&r.state) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn restore_at_zero_is_identity() {
        let spec = SystemSpec::reference(9.0).unwrap();
        let amps = pair_evolution(&derive(&spec).lambda, 0.0);
        let r = restore_interaction_picture(&amps, &spec, 0.0).unwrap();
        assert_eq!(r.global_phase, 0.0);
        assert_eq!(r.state, amps.to_ket(spec.n_max).unwrap());
    }

    #[test]
    fn restore_branch_splitting_for_inhomogeneous_coupling() {
        let spec = SystemSpec::reference(11.0).unwrap();
        let t = 40.0;
        let amps = pair_evolution(&derive(&spec).lambda, t);
        let r = restore_interaction_picture(&amps, &spec, t).unwrap();
        for (j, &(pc, ps)) in r.branch_phases.iter().enumerate() {
            let want = (1.0 - 0.95f64.powi(2)) * spec.g[j].powi(2) * t / (2.0 * spec.delta[j]);
            assert!((pc - ps - want).abs() < 1e-12);
        }
        assert!((norm(&r.state) - 1.0).abs() < 1e-14);
        assert!(restore_interaction_picture(&pair_evolution(&[1.0], t), &spec, t).is_err());
    }

    #[test]
    fn epr_target_amplitudes() {
        let t = epr_target(2, 2).unwrap();
        let l = HilbertLayout::resonators(2, 2);
        assert!((t[l.fock_index(0, &[1, 1], &[0, 0]).unwrap()] - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((t[l.fock_index(0, &[0, 0], &[1, 1]).unwrap()] - C64::new(-0.5, 0.0)).norm() < 1e-15);
        assert!((norm(&t) - 1.0).abs() < 1e-15);
        assert!(epr_target(0, 2).is_err());
    }

    #[test]
    fn epr_target_is_product_of_pairs() {
        for n_pairs in 1..=3 {
            let full = epr_target(n_pairs, 1).unwrap();
            let single = single_pair_target(1).unwrap();
            let l = HilbertLayout::resonators(n_pairs, 1);
            for (idx, amp) in full.iter().enumerate() {
                let m = l.multi_index(idx);
                let want: C64 = (0..n_pairs).map(|j| single[m[j] * 2 + m[n_pairs + j]]).product();
                assert!((amp - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn fidelity_examples() {
        let t = epr_target(2, 1).unwrap();
        let pure = density_from_ket(&t);
        assert!((fidelity(&pure, &t).unwrap() - 1.0).abs() < 1e-15);
        let mixed = ComplexMatrix::identity(16).scale_real(1.0 / 16.0);
        assert!((fidelity(&mixed, &t).unwrap() - 0.25).abs() < 1e-15);
        let rotated: Vec<C64> = t.iter().map(|z| z * C64::from_polar(1.0, 0.83)).collect();
        assert!((fidelity(&pure, &rotated).unwrap() - 1.0).abs() < 1e-15);
        assert!(fidelity(&pure, &t[..4]).is_err());
        let f = epr_fidelities(&pure, 2, 1).unwrap();
        assert!(f.pairs.iter().all(|p| (p - 1.0).abs() < 1e-15));
    }

    #[test]
    fn rotated_basis_round_trip() {
        let spec = SystemSpec::reference(11.0).unwrap();
        let l = HilbertLayout::qutrit_resonators(2, 2);
        let psi = initial_state(&spec).unwrap();
        let rot = to_rotated_basis(&psi, &l).unwrap();
        // All weight sits on |+⟩.
        let plus = l.fock_index(0, &[1, 1], &[0, 0]).unwrap();
        assert!((rot[plus] - ONE).norm() < 1e-15);
        let back = from_rotated_basis(&rot, &l).unwrap();
        assert!((inner(&back, &psi) - ONE).norm() < 1e-15);
        assert!(to_rotated_basis(&psi, &HilbertLayout::resonators(2, 2)).is_err());
    }

    #[test]
    fn pair_evolution_matches_propagation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut spec = matched_spec(10.0);
            spec.delta.truncate(1);
            spec.n_max = 1;
            let lambda = rng.gen_range(0.005..0.2);
            spec.g = vec![(lambda * spec.delta[0]).sqrt()];
            spec.mu = spec.g.clone();
            spec.dissipation = crate::model::DissipationSpec::none(1);
            let t = rng.gen_range(0.0..PI / lambda);
            let layout = HilbertLayout::resonators(1, 1);
            let h = HarmonicHamiltonian::from_static(layout.clone(), build_parallel(&spec, false).unwrap()).unwrap();
            let psi0 = pair_evolution(&[lambda], 0.0).to_ket(1).unwrap();
            let r = propagate_state(&h, &psi0, t, 0.01 / lambda).unwrap();
            let want = pair_evolution(&[lambda], t).to_ket(1).unwrap();
            let err = r.final_state.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-9, "λ={lambda} t={t} err={err}");
        }
    }
}
