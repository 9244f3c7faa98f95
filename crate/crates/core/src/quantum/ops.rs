//! Kronecker products, primitive operators, embedding and partial trace.

use super::layout::{HilbertLayout, QUTRIT_DIM};
use super::matrix::{ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Qutrit level, in basis order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    G = 0,
    E = 1,
    F = 2,
}

impl Level {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Standard single-subsystem operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Primitive {
    Annihilate(usize),
    Create(usize),
    Number(usize),
    /// |x⟩⟨y| on the qutrit.
    QutritTransfer(Level, Level),
    /// |x⟩⟨x| on the qutrit.
    QutritProject(Level),
}

pub fn primitive(kind: Primitive) -> Result<ComplexMatrix> {
    let fock_dim = |d: usize| if d < 2 { Err(Error::InvalidDimension(d)) } else { Ok(d) };
    Ok(match kind {
        Primitive::Annihilate(d) => annihilator(fock_dim(d)?),
        Primitive::Create(d) => annihilator(fock_dim(d)?).adjoint(),
        Primitive::Number(d) => {
            let d = fock_dim(d)?;
            ComplexMatrix::diagonal(&(0..d).map(|n| C64::new(n as f64, 0.0)).collect::<Vec<_>>())
        }
        Primitive::QutritTransfer(x, y) => {
            let mut m = ComplexMatrix::zeros(QUTRIT_DIM, QUTRIT_DIM);
            m[(x.index(), y.index())] = ONE;
            m
        }
        Primitive::QutritProject(x) => primitive(Primitive::QutritTransfer(x, x))?,
    })
}

fn annihilator(d: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    m
}

/// Shorthand for a qutrit transfer operator |x⟩⟨y|.
pub fn transfer(x: Level, y: Level) -> ComplexMatrix {
    primitive(Primitive::QutritTransfer(x, y)).expect("qutrit operators are always valid")
}

/// Standard Kronecker product A ⊗ B.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// `op` on subsystem `subsystem`, identity elsewhere.
pub fn embed(op: &ComplexMatrix, subsystem: usize, layout: &HilbertLayout) -> Result<ComplexMatrix> {
    embed_product(&[(op, subsystem)], layout)
}

/// Tensor product of local operators on distinct subsystems, identity on the
/// rest. Built directly in the full basis without intermediate Kronecker
/// factors.
pub fn embed_product(factors: &[(&ComplexMatrix, usize)], layout: &HilbertLayout) -> Result<ComplexMatrix> {
    let dims = layout.dims();
    for (k, &(op, s)) in factors.iter().enumerate() {
        if s >= dims.len() {
            return Err(Error::DimensionMismatch(format!("subsystem {s} out of range")));
        }
        if !op.is_square() || op.rows() != dims[s] {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} operator on subsystem {s} of dimension {}",
                op.rows(),
                op.cols(),
                dims[s]
            )));
        }
        if factors[..k].iter().any(|&(_, t)| t == s) {
            return Err(Error::DimensionMismatch(format!("subsystem {s} listed twice")));
        }
    }

    let total = layout.total_dim();
    let strides = layout.strides();
    let mut out = ComplexMatrix::zeros(total, total);
    // Enumerate, for every column, all output digit combinations of the
    // acted-on subsystems.
    let mut out_digits = vec![0usize; factors.len()];
    for col in 0..total {
        let in_digits: Vec<usize> = factors.iter().map(|&(_, s)| layout.digit(col, s)).collect();
        let base = col - factors.iter().zip(&in_digits).map(|(&(_, s), &m)| m * strides[s]).sum::<usize>();
        out_digits.iter_mut().for_each(|d| *d = 0);
        'combos: loop {
            let mut amp = ONE;
            for ((&(op, _), &o), &i) in factors.iter().zip(&out_digits).zip(&in_digits) {
                amp *= op[(o, i)];
                if amp == ZERO {
                    break;
                }
            }
            if amp != ZERO {
                let row = base + factors.iter().zip(&out_digits).map(|(&(_, s), &o)| o * strides[s]).sum::<usize>();
                out[(row, col)] = amp;
            }
            for (k, d) in out_digits.iter_mut().enumerate() {
                *d += 1;
                if *d < dims[factors[k].1] {
                    continue 'combos;
                }
                *d = 0;
            }
            break;
        }
    }
    Ok(out)
}

/// Reduced density matrix on the subsystems in `keep`, kept in layout order.
pub fn partial_trace(rho: &ComplexMatrix, layout: &HilbertLayout, keep: &[usize]) -> Result<ComplexMatrix> {
    if keep.is_empty() {
        return Err(Error::DimensionMismatch("partial trace with an empty keep set".into()));
    }
    let total = layout.total_dim();
    if !rho.is_square() || rho.rows() != total {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} density matrix for a layout of dimension {total}",
            rho.rows(),
            rho.cols()
        )));
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= layout.n_subsystems()) {
        return Err(Error::DimensionMismatch(format!("keep set {keep:?} out of range")));
    }
    let traced: Vec<usize> = (0..layout.n_subsystems()).filter(|k| !keep.contains(k)).collect();
    let kept_layout = layout.sublayout(&keep)?;
    let kept_dim = kept_layout.total_dim();
    let traced_dim: usize = traced.iter().map(|&k| layout.dims()[k]).product();

    // Flat index -> (kept index, traced index).
    let split = |i: usize| {
        let mut kept = 0;
        for &k in &keep {
            kept = kept * layout.dims()[k] + layout.digit(i, k);
        }
        let mut tr = 0;
        for &k in &traced {
            tr = tr * layout.dims()[k] + layout.digit(i, k);
        }
        (kept, tr)
    };
    let mut by_traced: Vec<Vec<(usize, usize)>> = vec![Vec::new(); traced_dim];
    for i in 0..total {
        let (k, t) = split(i);
        by_traced[t].push((k, i));
    }

    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for group in &by_traced {
        for &(ki, i) in group {
            for &(kj, j) in group {
                out[(ki, kj)] += rho[(i, j)];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::matrix::{basis_ket, density_from_ket, kron_vec};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn random_density(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
        let a = random_matrix(rng, n);
        let rho = a.matmul(&a.adjoint());
        let tr = rho.trace();
        rho.scale(ONE / tr)
    }

    #[test]
    fn kron_of_identities() {
        assert_eq!(kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(3)), ComplexMatrix::identity(6));
    }

    #[test]
    fn kron_index_formula() {
        let a = primitive(Primitive::Annihilate(2)).unwrap();
        let k = kron(&a, &ComplexMatrix::identity(2));
        // Enumerate the 4x4 result explicitly.
        let mut expected = ComplexMatrix::zeros(4, 4);
        expected[(0, 2)] = ONE;
        expected[(1, 3)] = ONE;
        assert_eq!(k, expected);
        assert_eq!(k[(0, 2)], ONE);
    }

    #[test]
    fn kron_adjoint_commutes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 3);
        let b = random_matrix(&mut rng, 3);
        assert_eq!(kron(&a, &b).adjoint(), kron(&a.adjoint(), &b.adjoint()));
    }

    #[test]
    fn primitives() {
        let a2 = primitive(Primitive::Annihilate(2)).unwrap();
        assert_eq!(a2, ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]));
        let a3 = primitive(Primitive::Annihilate(3)).unwrap();
        assert!((a3[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
        let t = transfer(Level::F, Level::G);
        for i in 0..3 {
            for j in 0..3 {
                let want = if (i, j) == (2, 0) { ONE } else { ZERO };
                assert_eq!(t[(i, j)], want);
            }
        }
        let n = primitive(Primitive::Number(4)).unwrap();
        let c = primitive(Primitive::Create(4)).unwrap();
        let a = primitive(Primitive::Annihilate(4)).unwrap();
        assert!(n.max_abs_diff(&c.matmul(&a)) < 1e-14);
        assert!(matches!(primitive(Primitive::Number(1)), Err(Error::InvalidDimension(1))));
    }

    #[test]
    fn embed_number_counts_photons() {
        let layout = HilbertLayout::qutrit_resonators(2, 2);
        let n = primitive(Primitive::Number(3)).unwrap();
        let op = embed(&n, layout.site(crate::quantum::Site::A(0)).unwrap(), &layout).unwrap();
        let idx = layout.fock_index(0, &[1, 1], &[0, 0]).unwrap();
        let psi = basis_ket(layout.total_dim(), idx);
        assert!((op.expectation(&psi).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn embed_identity_is_identity() {
        let layout = HilbertLayout::qutrit_resonators(1, 2);
        let op = embed(&ComplexMatrix::identity(3), 1, &layout).unwrap();
        assert_eq!(op, ComplexMatrix::identity(27));
    }

    #[test]
    fn embed_matches_kron_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let layout = HilbertLayout::new(vec![3, 2, 2]).unwrap();
        let x = random_matrix(&mut rng, 2);
        let by_kron = kron(&kron(&ComplexMatrix::identity(3), &x), &ComplexMatrix::identity(2));
        assert_eq!(embed(&x, 1, &layout).unwrap(), by_kron);
        let q = random_matrix(&mut rng, 3);
        let y = random_matrix(&mut rng, 2);
        let prod = embed_product(&[(&y, 2), (&q, 0)], &layout).unwrap();
        assert!(prod.max_abs_diff(&kron(&kron(&q, &ComplexMatrix::identity(2)), &y)) < 1e-15);
    }

    #[test]
    fn embed_rejects_mismatch() {
        let layout = HilbertLayout::qutrit_resonators(1, 1);
        assert!(embed(&ComplexMatrix::identity(3), 1, &layout).is_err());
        assert!(embed(&ComplexMatrix::identity(2), 5, &layout).is_err());
    }

    #[test]
    fn embeddings_on_distinct_modes_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let layout = HilbertLayout::qutrit_resonators(2, 1);
        let x = random_matrix(&mut rng, 2);
        let y = random_matrix(&mut rng, 2);
        let ex = embed(&x, layout.site(crate::quantum::Site::A(0)).unwrap(), &layout).unwrap();
        let ey = embed(&y, layout.site(crate::quantum::Site::B(1)).unwrap(), &layout).unwrap();
        assert!(ex.commutator(&ey).max_abs() < 1e-14);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ra = random_density(&mut rng, 3);
        let rb = random_density(&mut rng, 2);
        let layout = HilbertLayout::new(vec![3, 2]).unwrap();
        let rho = kron(&ra, &rb);
        assert!(partial_trace(&rho, &layout, &[0]).unwrap().max_abs_diff(&ra) < 1e-14);
        assert!(partial_trace(&rho, &layout, &[1]).unwrap().max_abs_diff(&rb) < 1e-14);
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = vec![C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)];
        let layout = HilbertLayout::new(vec![2, 2]).unwrap();
        let red = partial_trace(&density_from_ket(&psi), &layout, &[1]).unwrap();
        assert!(red.max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_errors() {
        let layout = HilbertLayout::new(vec![2, 2]).unwrap();
        let rho = ComplexMatrix::identity(4);
        assert!(partial_trace(&rho, &layout, &[]).is_err());
        assert!(partial_trace(&ComplexMatrix::identity(3), &layout, &[0]).is_err());
        assert!(partial_trace(&rho, &layout, &[2]).is_err());
    }

    #[test]
    fn partial_trace_keeps_layout_order() {
        // |0⟩|1⟩|0⟩ keep {2, 0} -> |0⟩|0⟩ in (0, 2) order
        let layout = HilbertLayout::new(vec![2, 2, 3]).unwrap();
        let psi = kron_vec(&kron_vec(&basis_ket(2, 0), &basis_ket(2, 1)), &basis_ket(3, 2));
        let red = partial_trace(&density_from_ket(&psi), &layout, &[2, 0]).unwrap();
        assert_eq!(red.rows(), 6);
        assert_eq!(red[(2, 2)], ONE);
    }

    proptest! {
        #[test]
        fn kron_is_associative(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, 2);
            let b = random_matrix(&mut rng, 3);
            let c = random_matrix(&mut rng, 2);
            // Each entry is a product of three factors either way; only the
            // multiplication order differs.
            prop_assert!(kron(&kron(&a, &b), &c).max_abs_diff(&kron(&a, &kron(&b, &c))) < 1e-15);
        }

        #[test]
        fn embed_preserves_hermiticity(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_matrix(&mut rng, 3);
            let h = &x + &x.adjoint();
            let layout = HilbertLayout::qutrit_resonators(1, 2);
            let e = embed(&h, rng.gen_range(0..3), &layout).unwrap();
            prop_assert!(e.is_hermitian(1e-12));
        }

        #[test]
        fn partial_trace_preserves_trace(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let layout = HilbertLayout::new(vec![3, 2, 2]).unwrap();
            let rho = random_density(&mut rng, 12);
            let keep = [rng.gen_range(0..3)];
            let red = partial_trace(&rho, &layout, &keep).unwrap();
            prop_assert!((red.trace() - rho.trace()).norm() < 1e-13);
        }

        #[test]
        fn partial_trace_of_unnormalized_factor(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_density(&mut rng, 3);
            let sigma = random_matrix(&mut rng, 2);
            let layout = HilbertLayout::new(vec![3, 2]).unwrap();
            let red = partial_trace(&kron(&rho, &sigma), &layout, &[0]).unwrap();
            prop_assert!(red.max_abs_diff(&rho.scale(sigma.trace())) < 1e-13);
        }
    }
}
