//! Hamiltonians of the coupler-mediated resonator network.
//!
//! Every Hamiltonian here is a static Hermitian matrix plus single-frequency
//! harmonics O·e^{iνt} + O†·e^{−iνt}, all on the qutrit-first layout.

use std::collections::VecDeque;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::model::{derive, SystemSpec};
use crate::quantum::{
    embed_product, primitive, transfer, ComplexMatrix, HilbertLayout, Level, Primitive, Site, C64, ONE, ZERO,
};

#[derive(Clone, Debug)]
pub struct HarmonicTerm {
    pub op: ComplexMatrix,
    /// Angular frequency ν in rad/ns.
    pub nu: f64,
}

#[derive(Clone, Debug)]
pub struct HarmonicHamiltonian {
    layout: HilbertLayout,
    static_term: ComplexMatrix,
    terms: Vec<HarmonicTerm>,
}

impl HarmonicHamiltonian {
    pub fn new(layout: HilbertLayout) -> Self {
        let d = layout.total_dim();
        Self {
            layout,
            static_term: ComplexMatrix::zeros(d, d),
            terms: Vec::new(),
        }
    }

    /// Time-independent Hamiltonian.
    pub fn from_static(layout: HilbertLayout, h: ComplexMatrix) -> Result<Self> {
        let mut out = Self::new(layout);
        out.add_static(&h)?;
        Ok(out)
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn static_term(&self) -> &ComplexMatrix {
        &self.static_term
    }

    pub fn terms(&self) -> &[HarmonicTerm] {
        &self.terms
    }

    fn check_shape(&self, m: &ComplexMatrix) -> Result<()> {
        let d = self.dim();
        if m.rows() != d || m.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} term for a {d}-dimensional layout",
                m.rows(),
                m.cols()
            )));
        }
        Ok(())
    }

    /// Add a Hermitian matrix to the static part.
    pub fn add_static(&mut self, h: &ComplexMatrix) -> Result<()> {
        self.check_shape(h)?;
        debug_assert!(h.is_hermitian(1e-12), "static term is not Hermitian");
        self.static_term.add_scaled(ONE, h);
        Ok(())
    }

    /// Add O·e^{iνt} + O†·e^{−iνt}. A zero frequency folds into the static part.
    pub fn add_term(&mut self, op: ComplexMatrix, nu: f64) -> Result<()> {
        self.check_shape(&op)?;
        if !nu.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite harmonic frequency {nu}")));
        }
        if nu == 0.0 {
            let h = &op + &op.adjoint();
            self.static_term.add_scaled(ONE, &h);
        } else {
            self.terms.push(HarmonicTerm { op, nu });
        }
        Ok(())
    }

    /// H(t) = static + Σ_k (O_k e^{iν_k t} + O_k† e^{−iν_k t}).
    pub fn evaluate(&self, t: f64) -> ComplexMatrix {
        let mut h = self.static_term.clone();
        let d = self.dim();
        for term in &self.terms {
            let phase = C64::from_polar(1.0, term.nu * t);
            for i in 0..d {
                for j in 0..d {
                    let o = term.op[(i, j)];
                    if o != ZERO {
                        h[(i, j)] += o * phase;
                        h[(j, i)] += o.conj() * phase.conj();
                    }
                }
            }
        }
        h
    }

    /// Largest |ν_k|.
    pub fn max_frequency(&self) -> f64 {
        self.terms.iter().map(|t| t.nu.abs()).fold(0.0, f64::max)
    }

    /// Diagonal energies E with E_r − E_c = ν for every nonzero O[r, c] (and
    /// zero for static couplings), if such an assignment exists. In that
    /// frame the Hamiltonian is time independent:
    /// ψ(t) = e^{iEt} e^{−i(E + H(0))t} ψ(0).
    pub fn static_frame(&self) -> Option<Vec<f64>> {
        let d = self.dim();
        let mut edges: Vec<Vec<(usize, f64)>> = vec![Vec::new(); d];
        let mut push = |r: usize, c: usize, nu: f64| {
            edges[c].push((r, nu));
            edges[r].push((c, -nu));
        };
        for i in 0..d {
            for j in 0..d {
                if i != j && self.static_term[(i, j)] != ZERO {
                    push(i, j, 0.0);
                }
                for term in &self.terms {
                    if term.op[(i, j)] != ZERO {
                        push(i, j, term.nu);
                    }
                }
            }
        }
        let scale = self.max_frequency().max(1.0);
        let mut energy = vec![f64::NAN; d];
        for root in 0..d {
            if !energy[root].is_nan() {
                continue;
            }
            energy[root] = 0.0;
            let mut queue = VecDeque::from([root]);
            while let Some(c) = queue.pop_front() {
                for &(r, nu) in &edges[c] {
                    let want = energy[c] + nu;
                    if energy[r].is_nan() {
                        energy[r] = want;
                        queue.push_back(r);
                    } else if (energy[r] - want).abs() > 1e-9 * scale {
                        return None;
                    }
                }
            }
        }
        Some(energy)
    }
}

/// Local operator factory for one layout.
struct Ops<'a> {
    layout: &'a HilbertLayout,
    fock_dim: usize,
}

impl<'a> Ops<'a> {
    fn new(layout: &'a HilbertLayout, n_max: usize) -> Self {
        Self {
            layout,
            fock_dim: n_max + 1,
        }
    }

    fn annihilate(&self) -> ComplexMatrix {
        primitive(Primitive::Annihilate(self.fock_dim)).expect("n_max >= 1")
    }

    fn create(&self) -> ComplexMatrix {
        primitive(Primitive::Create(self.fock_dim)).expect("n_max >= 1")
    }

    /// a a† = n + 1, without the truncation artefact at the top Fock level.
    fn anti_number(&self) -> ComplexMatrix {
        let diag: Vec<C64> = (0..self.fock_dim).map(|n| C64::new(n as f64 + 1.0, 0.0)).collect();
        ComplexMatrix::diagonal(&diag)
    }

    fn product(&self, factors: &[(Site, &ComplexMatrix)]) -> ComplexMatrix {
        let resolved: Vec<(&ComplexMatrix, usize)> = factors
            .iter()
            .map(|&(site, op)| (op, self.layout.site(site).expect("site belongs to layout")))
            .collect();
        embed_product(&resolved, self.layout).expect("operator shapes match the layout")
    }
}

/// |±⟩ = (|g⟩ ± |e⟩)/√2 and |f⟩ as the columns of a 3x3 unitary.
pub fn rotated_basis() -> ComplexMatrix {
    let s = FRAC_1_SQRT_2;
    ComplexMatrix::from_real_rows(&[&[s, s, 0.0], &[s, -s, 0.0], &[0.0, 0.0, 1.0]])
}

/// S_x = |e⟩⟨g| + |g⟩⟨e|, which equals S̃_z = |+⟩⟨+| − |−⟩⟨−|.
pub fn s_x() -> ComplexMatrix {
    &transfer(Level::E, Level::G) + &transfer(Level::G, Level::E)
}

/// Interaction-picture Hamiltonian with the optional crosstalk and leakage
/// terms enabled by the spec's flags.
pub fn build_full(spec: &SystemSpec) -> Result<HarmonicHamiltonian> {
    spec.check()?;
    let n = spec.n_pairs();
    let layout = HilbertLayout::qutrit_resonators(n, spec.n_max);
    let ops = Ops::new(&layout, spec.n_max);
    let a = ops.annihilate();
    let ad = ops.create();
    let s_fg = transfer(Level::F, Level::G);
    let s_fe = transfer(Level::F, Level::E);

    let mut h = HarmonicHamiltonian::new(layout.clone());
    for j in 0..n {
        let op = ops.product(&[(Site::Qutrit, &s_fg), (Site::A(j), &a)]);
        h.add_term(op.scale_real(spec.g[j]), spec.delta[j])?;
        let op = ops.product(&[(Site::Qutrit, &s_fe), (Site::B(j), &a)]);
        h.add_term(op.scale_real(spec.mu[j]), spec.delta[j])?;
    }
    h.add_static(&ops.product(&[(Site::Qutrit, &s_x())]).scale_real(spec.omega))?;

    if spec.include_crosstalk {
        let derived = derive(spec);
        for link in derived.crosstalk {
            let op = ops.product(&[(link.annihilated, &a), (link.created, &ad)]);
            h.add_term(op.scale_real(derived.g_cs), link.detuning)?;
        }
    }
    if spec.include_leakage {
        let op = ops.product(&[(Site::Qutrit, &s_fe)]);
        h.add_term(op.scale_real(spec.leakage_rabi()), spec.leakage_detuning())?;
    }
    Ok(h)
}

/// Dispersive effective Hamiltonian: ac-Stark shifts −(g_j²/Δ_j) a_j a_j†|g⟩⟨g|
/// and −(μ_j²/Δ_j) b_j b_j†|e⟩⟨e|, Raman exchange −λ_j(a_j b_j† S⁺_eg + h.c.)
/// and the pulse Ω S_x. The |f⟩ level stays in the space, uncoupled.
pub fn build_effective(spec: &SystemSpec) -> Result<HarmonicHamiltonian> {
    spec.check()?;
    let n = spec.n_pairs();
    let layout = HilbertLayout::qutrit_resonators(n, spec.n_max);
    let ops = Ops::new(&layout, spec.n_max);
    let (a, ad, aad) = (ops.annihilate(), ops.create(), ops.anti_number());
    let pg = transfer(Level::G, Level::G);
    let pe = transfer(Level::E, Level::E);
    let s_eg = transfer(Level::E, Level::G);

    let d = layout.total_dim();
    let mut h = ComplexMatrix::zeros(d, d);
    for j in 0..n {
        let dj = spec.delta[j];
        let stark_a = ops.product(&[(Site::Qutrit, &pg), (Site::A(j), &aad)]);
        h.add_scaled(C64::new(-spec.g[j].powi(2) / dj, 0.0), &stark_a);
        let stark_b = ops.product(&[(Site::Qutrit, &pe), (Site::B(j), &aad)]);
        h.add_scaled(C64::new(-spec.mu[j].powi(2) / dj, 0.0), &stark_b);
        let raman = ops.product(&[(Site::Qutrit, &s_eg), (Site::A(j), &a), (Site::B(j), &ad)]);
        let raman = &raman + &raman.adjoint();
        h.add_scaled(C64::new(-spec.g[j] * spec.mu[j] / dj, 0.0), &raman);
    }
    h.add_scaled(C64::new(spec.omega, 0.0), &ops.product(&[(Site::Qutrit, &s_x())]));
    HarmonicHamiltonian::from_static(layout, h)
}

/// −Σ_j (λ_j/2)(a_j b_j† + a_j† b_j), times S̃_z on the qutrit when
/// `with_qutrit`, otherwise on the resonators alone.
pub fn build_parallel(spec: &SystemSpec, with_qutrit: bool) -> Result<ComplexMatrix> {
    spec.check()?;
    let n = spec.n_pairs();
    let layout = if with_qutrit {
        HilbertLayout::qutrit_resonators(n, spec.n_max)
    } else {
        HilbertLayout::resonators(n, spec.n_max)
    };
    let ops = Ops::new(&layout, spec.n_max);
    let (a, ad) = (ops.annihilate(), ops.create());
    let sz = s_x();
    let d = layout.total_dim();
    let mut h = ComplexMatrix::zeros(d, d);
    for j in 0..n {
        let lambda = spec.g[j] * spec.mu[j] / spec.delta[j];
        let mut factors = vec![(Site::A(j), &a), (Site::B(j), &ad)];
        if with_qutrit {
            factors.push((Site::Qutrit, &sz));
        }
        let hop = ops.product(&factors);
        let hop = &hop + &hop.adjoint();
        h.add_scaled(C64::new(-lambda / 2.0, 0.0), &hop);
    }
    Ok(h)
}

/// Beam-splitter coupling in the doubly rotated frame, before setting g = μ:
/// −Σ_j (λ_j/2)(e^{iδ_j t} a_j b_j† + e^{−iδ_j t} a_j† b_j) S̃_z.
pub fn build_rotated_frame(spec: &SystemSpec) -> Result<HarmonicHamiltonian> {
    spec.check()?;
    let n = spec.n_pairs();
    let layout = HilbertLayout::qutrit_resonators(n, spec.n_max);
    let ops = Ops::new(&layout, spec.n_max);
    let (a, ad) = (ops.annihilate(), ops.create());
    let sz = s_x();
    let derived = derive(spec);
    let mut h = HarmonicHamiltonian::new(layout.clone());
    for j in 0..n {
        let op = ops.product(&[(Site::A(j), &a), (Site::B(j), &ad), (Site::Qutrit, &sz)]);
        h.add_term(op.scale_real(-derived.lambda[j] / 2.0), derived.delta[j])?;
    }
    Ok(h)
}

/// Generators of the two frame changes: H₀ = Ω S_x and
/// H₀′ = −½ Σ_j [(g_j²/Δ_j) a_j a_j† + (μ_j²/Δ_j) b_j b_j†] ⊗ I.
pub fn frame_generators(spec: &SystemSpec) -> Result<(ComplexMatrix, ComplexMatrix)> {
    spec.check()?;
    let n = spec.n_pairs();
    let layout = HilbertLayout::qutrit_resonators(n, spec.n_max);
    let ops = Ops::new(&layout, spec.n_max);
    let aad = ops.anti_number();
    let h0 = ops.product(&[(Site::Qutrit, &s_x())]).scale_real(spec.omega);
    let d = layout.total_dim();
    let mut h0p = ComplexMatrix::zeros(d, d);
    for j in 0..n {
        let dj = spec.delta[j];
        h0p.add_scaled(C64::new(-0.5 * spec.g[j].powi(2) / dj, 0.0), &ops.product(&[(Site::A(j), &aad)]));
        h0p.add_scaled(C64::new(-0.5 * spec.mu[j].powi(2) / dj, 0.0), &ops.product(&[(Site::B(j), &aad)]));
    }
    Ok((h0, h0p))
}

/// Σ_j (n_{a_j} + n_{b_j}) + |f⟩⟨f| on the full layout.
pub fn excitation_number(spec: &SystemSpec) -> ComplexMatrix {
    let layout = HilbertLayout::qutrit_resonators(spec.n_pairs(), spec.n_max);
    let d = layout.total_dim();
    let diag: Vec<C64> = (0..d)
        .map(|i| {
            let m = layout.multi_index(i);
            let photons: usize = m[1..].iter().sum();
            C64::new((photons + usize::from(m[0] == Level::F.index())) as f64, 0.0)
        })
        .collect();
    ComplexMatrix::diagonal(&diag)
}
