//! Compressed sparse rows and the compiled time-dependent Hamiltonian used
//! by the integrators.

use crate::hamiltonian::HarmonicHamiltonian;
use crate::par;
use crate::quantum::{ComplexMatrix, C64, ZERO};

#[derive(Clone, Debug)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    pub fn from_dense(m: &ComplexMatrix) -> Self {
        let n = m.rows();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != ZERO {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// If every row and every column holds at most one entry, the per-row
    /// (column, value) map.
    pub fn as_monomial(&self) -> Option<Vec<Option<(usize, C64)>>> {
        let mut seen_col = vec![false; self.n];
        let mut map = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let mut row = self.row(i);
            let first = row.next();
            if row.next().is_some() {
                return None;
            }
            if let Some((c, _)) = first {
                if std::mem::replace(&mut seen_col[c], true) {
                    return None;
                }
            }
            map.push(first);
        }
        Some(map)
    }

    pub fn scale(&mut self, s: C64) {
        self.vals.iter_mut().for_each(|v| *v *= s);
    }

    pub fn mul_vec(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }
}

/// Sparse H(t) with a fixed pattern and per-term contributions.
#[derive(Clone, Debug)]
pub struct CompiledHamiltonian {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    static_vals: Vec<C64>,
    /// (ν, positions and values of O, positions and values of O†).
    harmonics: Vec<(f64, Vec<(usize, C64)>, Vec<(usize, C64)>)>,
}

impl CompiledHamiltonian {
    /// Compile `h`, adding the constant non-Hermitian part `extra` (may be
    /// `None`) to the static term.
    pub fn new(h: &HarmonicHamiltonian, extra: Option<&ComplexMatrix>) -> Self {
        let n = h.dim();
        let mut mask = vec![false; n * n];
        let mark = |m: &ComplexMatrix, mask: &mut [bool], transpose: bool| {
            for i in 0..n {
                for (j, &v) in m.row(i).iter().enumerate() {
                    if v != ZERO {
                        let (r, c) = if transpose { (j, i) } else { (i, j) };
                        mask[r * n + c] = true;
                    }
                }
            }
        };
        mark(h.static_term(), &mut mask, false);
        if let Some(e) = extra {
            mark(e, &mut mask, false);
        }
        for term in h.terms() {
            mark(&term.op, &mut mask, false);
            mark(&term.op, &mut mask, true);
        }

        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut position = vec![usize::MAX; n * n];
        row_ptr.push(0);
        for i in 0..n {
            for j in 0..n {
                if mask[i * n + j] {
                    position[i * n + j] = cols.len();
                    cols.push(j);
                }
            }
            row_ptr.push(cols.len());
        }

        let mut static_vals = vec![ZERO; cols.len()];
        let mut add_static = |m: &ComplexMatrix| {
            for i in 0..n {
                for (j, &v) in m.row(i).iter().enumerate() {
                    if v != ZERO {
                        static_vals[position[i * n + j]] += v;
                    }
                }
            }
        };
        add_static(h.static_term());
        if let Some(e) = extra {
            add_static(e);
        }
        let harmonics = h
            .terms()
            .iter()
            .map(|term| {
                let mut fwd = Vec::new();
                let mut bwd = Vec::new();
                for i in 0..n {
                    for (j, &v) in term.op.row(i).iter().enumerate() {
                        if v != ZERO {
                            fwd.push((position[i * n + j], v));
                            bwd.push((position[j * n + i], v.conj()));
                        }
                    }
                }
                (term.nu, fwd, bwd)
            })
            .collect();
        Self {
            n,
            row_ptr,
            cols,
            static_vals,
            harmonics,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn values_buffer(&self) -> Vec<C64> {
        vec![ZERO; self.cols.len()]
    }

    /// Values of H(t) in pattern order.
    pub fn fill(&self, t: f64, vals: &mut [C64]) {
        vals.copy_from_slice(&self.static_vals);
        for (nu, fwd, bwd) in &self.harmonics {
            let phase = C64::from_polar(1.0, nu * t);
            let back = phase.conj();
            for &(p, v) in fwd {
                vals[p] += v * phase;
            }
            for &(p, v) in bwd {
                vals[p] += v * back;
            }
        }
    }

    /// y = H x for a vector.
    pub fn apply_vec(&self, vals: &[C64], x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            *yi = self.cols[r.clone()].iter().zip(&vals[r]).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    /// out = H ρ, given `rho_i` = iρ. Each complex product is split into two
    /// real axpy passes over interleaved (re, im) rows, which vectorizes.
    pub fn apply_mat_split(&self, vals: &[C64], rho: &[C64], rho_i: &[C64], out: &mut [C64]) {
        let n = self.n;
        par::for_each_row(out, n, |i, row| {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            row_kernel(&self.cols[r.clone()], &vals[r], rho, rho_i, n, as_f64_mut(row));
        });
    }

    /// Dense copy of H(t); for tests.
    pub fn to_dense(&self, t: f64) -> ComplexMatrix {
        let mut vals = self.values_buffer();
        self.fill(t, &mut vals);
        let mut m = ComplexMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[p])] = vals[p];
            }
        }
        m
    }
}

fn row_kernel(cols: &[usize], vals: &[C64], rho: &[C64], rho_i: &[C64], n: usize, out: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx") {
            // SAFETY: the feature was detected at run time.
            return unsafe { row_kernel_avx(cols, vals, rho, rho_i, n, out) };
        }
    }
    row_kernel_generic(cols, vals, rho, rho_i, n, out)
}

// AVX without FMA: the same operations in the same order, so results are
// bitwise equal to the generic path.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx")]
unsafe fn row_kernel_avx(cols: &[usize], vals: &[C64], rho: &[C64], rho_i: &[C64], n: usize, out: &mut [f64]) {
    row_kernel_generic(cols, vals, rho, rho_i, n, out)
}

#[inline(always)]
fn row_kernel_generic(cols: &[usize], vals: &[C64], rho: &[C64], rho_i: &[C64], n: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|z| *z = 0.0);
    for (&c, &h) in cols.iter().zip(vals) {
        let re = as_f64(&rho[c * n..(c + 1) * n]);
        let im = as_f64(&rho_i[c * n..(c + 1) * n]);
        for ((o, &x), &y) in out.iter_mut().zip(re).zip(im) {
            *o += h.re * x + h.im * y;
        }
    }
}

fn as_f64(z: &[C64]) -> &[f64] {
    // SAFETY: Complex<f64> is repr(C) with two f64 fields.
    unsafe { std::slice::from_raw_parts(z.as_ptr().cast(), z.len() * 2) }
}

fn as_f64_mut(z: &mut [C64]) -> &mut [f64] {
    // SAFETY: as above.
    unsafe { std::slice::from_raw_parts_mut(z.as_mut_ptr().cast(), z.len() * 2) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::build_full;
    use crate::model::SystemSpec;

    #[test]
    fn compiled_matches_dense_evaluation() {
        let mut spec = SystemSpec::reference(10.0).unwrap();
        spec.n_max = 1;
        let h = build_full(&spec).unwrap();
        let c = CompiledHamiltonian::new(&h, None);
        for t in [0.0, 0.123, 17.5] {
            assert!(c.to_dense(t).max_abs_diff(&h.evaluate(t)) < 1e-14);
        }
        assert!(c.nnz() < h.dim() * h.dim() / 4);
    }

    #[test]
    fn split_product_matches_dense() {
        let mut spec = SystemSpec::reference(9.0).unwrap();
        spec.n_max = 1;
        let h = build_full(&spec).unwrap();
        let c = CompiledHamiltonian::new(&h, None);
        let n = c.dim();
        let rho = ComplexMatrix::from_fn(n, n, |i, j| C64::new((i as f64 * 0.3).sin(), (j as f64 * 0.7).cos()));
        let rho_i: Vec<C64> = rho.as_slice().iter().map(|z| z * crate::quantum::I).collect();
        let mut vals = c.values_buffer();
        c.fill(1.7, &mut vals);
        let mut out = vec![ZERO; n * n];
        c.apply_mat_split(&vals, rho.as_slice(), &rho_i, &mut out);
        let want = h.evaluate(1.7).matmul(&rho);
        let got = ComplexMatrix::from_vec(n, n, out).unwrap();
        assert!(got.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn monomial_detection() {
        let a = crate::quantum::primitive(crate::quantum::Primitive::Annihilate(3)).unwrap();
        let map = Csr::from_dense(&a).as_monomial().unwrap();
        assert_eq!(map[0].unwrap().0, 1);
        assert!(map[2].is_none());
        let x = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 0.0]]);
        assert!(Csr::from_dense(&x).as_monomial().is_none());
        let y = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[1.0, 0.0]]);
        assert!(Csr::from_dense(&y).as_monomial().is_none());
    }
}
