//! Master-equation generator.
//!
//! dρ/dt = −i[H, ρ] + Σ_c r_c (Λ_c ρ Λ_c† − ½Λ_c†Λ_c ρ − ½ρ Λ_c†Λ_c)
//!
//! Dephasing projectors σ_ll use the same dissipator form since σ_ll†σ_ll = σ_ll.

use super::sparse::{CompiledHamiltonian, Csr};
use crate::error::{Error, Result};
use crate::hamiltonian::HarmonicHamiltonian;
use crate::model::SystemSpec;
use crate::par;
use crate::quantum::{embed, primitive, transfer, ComplexMatrix, HilbertLayout, Level, Primitive, Site, C64, ZERO};

#[derive(Clone, Debug)]
pub struct Channel {
    pub label: String,
    pub op: ComplexMatrix,
    /// Rate in 1/ns.
    pub rate: f64,
}

/// Collapse operators and dephasing projectors on one layout.
#[derive(Clone, Debug, Default)]
pub struct LindbladSet {
    pub collapse: Vec<Channel>,
    pub dephasing: Vec<Channel>,
}

impl LindbladSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Resonator decay a_j, b_j; qutrit relaxation σ⁻_fe, σ⁻_fg, σ⁻_eg;
    /// dephasing of |e⟩ and |f⟩. Zero-rate channels are dropped.
    pub fn from_spec(spec: &SystemSpec) -> Result<Self> {
        spec.check()?;
        let n = spec.n_pairs();
        let layout = HilbertLayout::qutrit_resonators(n, spec.n_max);
        let d = &spec.dissipation;
        let a = primitive(Primitive::Annihilate(spec.n_max + 1))?;
        let mut set = Self::default();
        let on = |site: Site, op: &ComplexMatrix| embed(op, layout.site(site).expect("site in layout"), &layout);
        for j in 0..n {
            set.push_collapse(format!("a{}", j + 1), on(Site::A(j), &a)?, d.kappa_a[j]);
            set.push_collapse(format!("b{}", j + 1), on(Site::B(j), &a)?, d.kappa_b[j]);
        }
        set.push_collapse("sigma_fe".into(), on(Site::Qutrit, &transfer(Level::E, Level::F))?, d.gamma_fe);
        set.push_collapse("sigma_fg".into(), on(Site::Qutrit, &transfer(Level::G, Level::F))?, d.gamma_fg);
        set.push_collapse("sigma_eg".into(), on(Site::Qutrit, &transfer(Level::G, Level::E))?, d.gamma_eg);
        set.push_dephasing("sigma_ee".into(), on(Site::Qutrit, &transfer(Level::E, Level::E))?, d.gamma_phi_e);
        set.push_dephasing("sigma_ff".into(), on(Site::Qutrit, &transfer(Level::F, Level::F))?, d.gamma_phi_f);
        Ok(set)
    }

    pub fn push_collapse(&mut self, label: String, op: ComplexMatrix, rate: f64) {
        if rate > 0.0 {
            self.collapse.push(Channel { label, op, rate });
        }
    }

    pub fn push_dephasing(&mut self, label: String, op: ComplexMatrix, rate: f64) {
        if rate > 0.0 {
            self.dephasing.push(Channel { label, op, rate });
        }
    }

    pub fn channels(&self) -> impl Iterator<Item = &Channel> {
        self.collapse.iter().chain(&self.dephasing)
    }

    pub fn is_empty(&self) -> bool {
        self.collapse.is_empty() && self.dephasing.is_empty()
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        for c in self.channels() {
            if c.op.rows() != d || c.op.cols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "channel {} is {}x{}, expected {d}x{d}",
                    c.label,
                    c.op.rows(),
                    c.op.cols()
                )));
            }
            if !(c.rate >= 0.0) {
                return Err(Error::InvalidParameter(format!("negative rate on channel {}", c.label)));
            }
        }
        Ok(())
    }
}

/// Right-hand side of the master equation at one instant, by dense products.
/// Valid for any square ρ.
pub fn lindblad_rhs(rho: &ComplexMatrix, h: &ComplexMatrix, lindblad: &LindbladSet) -> Result<ComplexMatrix> {
    let d = rho.rows();
    if !rho.is_square() || h.rows() != d || h.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "rho {}x{}, H {}x{}",
            rho.rows(),
            rho.cols(),
            h.rows(),
            h.cols()
        )));
    }
    lindblad.check_dim(d)?;
    let mut out = h.commutator(rho).scale(C64::new(0.0, -1.0));
    for c in lindblad.channels() {
        let ld = c.op.adjoint();
        let ldl = ld.matmul(&c.op);
        let jump = c.op.matmul(rho).matmul(&ld);
        let anti = &ldl.matmul(rho) + &rho.matmul(&ldl);
        out.add_scaled(C64::new(c.rate, 0.0), &jump);
        out.add_scaled(C64::new(-0.5 * c.rate, 0.0), &anti);
    }
    Ok(out)
}

enum Jump {
    /// Row i maps to (column, √rate·value); `active` lists the mapped rows.
    Monomial {
        map: Vec<Option<(usize, C64)>>,
        active: Vec<(usize, usize, C64)>,
    },
    General(Csr),
}

/// Sparse master-equation generator for Hermitian ρ.
///
/// Uses H_eff = H − (i/2) Σ r Λ†Λ so that the coherent and anticommutator
/// parts become −i(H_eff ρ − (H_eff ρ)†), one sparse product per call.
pub struct MasterGenerator {
    heff: CompiledHamiltonian,
    jumps: Vec<Jump>,
    vals: Vec<C64>,
    product: Vec<C64>,
    rho_i: Vec<C64>,
    general_scratch: Vec<C64>,
}

impl MasterGenerator {
    pub fn new(h: &HarmonicHamiltonian, lindblad: &LindbladSet) -> Result<Self> {
        let d = h.dim();
        lindblad.check_dim(d)?;
        let mut decay = ComplexMatrix::zeros(d, d);
        let mut jumps = Vec::new();
        for c in lindblad.channels() {
            let mut csr = Csr::from_dense(&c.op);
            csr.scale(C64::new(c.rate.sqrt(), 0.0));
            // Σ_i conj(L[i,a]) L[i,b] accumulated row by row.
            for i in 0..d {
                let row: Vec<(usize, C64)> = csr.row(i).collect();
                for &(a, va) in &row {
                    for &(b, vb) in &row {
                        decay[(a, b)] += va.conj() * vb;
                    }
                }
            }
            jumps.push(match csr.as_monomial() {
                Some(map) => {
                    let active = map
                        .iter()
                        .enumerate()
                        .filter_map(|(j, e)| e.map(|(k, w)| (j, k, w.conj())))
                        .collect();
                    Jump::Monomial { map, active }
                }
                None => Jump::General(csr),
            });
        }
        let extra = decay.scale(C64::new(0.0, -0.5));
        let heff = CompiledHamiltonian::new(h, Some(&extra));
        let vals = heff.values_buffer();
        let needs_scratch = jumps.iter().any(|j| matches!(j, Jump::General(_)));
        Ok(Self {
            heff,
            jumps,
            vals,
            product: vec![ZERO; d * d],
            rho_i: vec![ZERO; d * d],
            general_scratch: if needs_scratch { vec![ZERO; d * d] } else { Vec::new() },
        })
    }

    pub fn dim(&self) -> usize {
        self.heff.dim()
    }

    /// out = dρ/dt at time t. ρ must be Hermitian; the result is then
    /// exactly Hermitian as well.
    pub fn apply(&mut self, t: f64, rho: &[C64], out: &mut [C64]) {
        let n = self.dim();
        self.heff.fill(t, &mut self.vals);
        par::for_each_row(&mut self.rho_i, n, |i, row| {
            for (o, r) in row.iter_mut().zip(&rho[i * n..(i + 1) * n]) {
                *o = C64::new(-r.im, r.re);
            }
        });
        self.heff.apply_mat_split(&self.vals, rho, &self.rho_i, &mut self.product);

        // Upper triangle only; the lower one is its mirror image.
        let product = &self.product;
        let jumps = &self.jumps;
        par::for_each_row(out, n, |i, row| {
            for (j, o) in row.iter_mut().enumerate().skip(i) {
                let a = product[i * n + j];
                let b = product[j * n + i];
                let x = C64::new(a.re - b.re, a.im + b.im);
                *o = C64::new(x.im, -x.re);
            }
            for jump in jumps {
                if let Jump::Monomial { map, active } = jump {
                    let Some((ki, wi)) = map[i] else { continue };
                    let src = &rho[ki * n..(ki + 1) * n];
                    let start = active.partition_point(|&(j, _, _)| j < i);
                    for &(j, kj, wj_conj) in &active[start..] {
                        row[j] += wi * wj_conj * src[kj];
                    }
                }
            }
        });
        for i in 1..n {
            for j in 0..i {
                out[i * n + j] = out[j * n + i].conj();
            }
        }
        out.iter_mut().step_by(n + 1).for_each(|z| z.im = 0.0);

        for jump in &self.jumps {
            if let Jump::General(l) = jump {
                add_general_jump(l, rho, out, &mut self.general_scratch);
            }
        }
    }

    /// Dense generator output for a dense ρ; convenience for tests.
    pub fn apply_dense(&mut self, t: f64, rho: &ComplexMatrix) -> ComplexMatrix {
        let n = self.dim();
        let mut out = vec![ZERO; n * n];
        self.apply(t, rho.as_slice(), &mut out);
        ComplexMatrix::from_vec(n, n, out).expect("square output")
    }
}

/// out += L ρ L† for a general sparse L.
fn add_general_jump(l: &Csr, rho: &[C64], out: &mut [C64], scratch: &mut [C64]) {
    let n = l.dim();
    // scratch = L ρ
    par::for_each_row(scratch, n, |i, row| {
        row.iter_mut().for_each(|z| *z = ZERO);
        for (k, v) in l.row(i) {
            for (o, &r) in row.iter_mut().zip(&rho[k * n..(k + 1) * n]) {
                *o += v * r;
            }
        }
    });
    let scratch = &*scratch;
    par::for_each_row(out, n, |i, row| {
        let t = &scratch[i * n..(i + 1) * n];
        for (j, o) in row.iter_mut().enumerate() {
            *o += l.row(j).map(|(c, v)| t[c] * v.conj()).sum::<C64>();
        }
    });
}
