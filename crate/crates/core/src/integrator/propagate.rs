//! One-step propagators for the no-jump master equation
//!
//! ```text
//! dρ/dt = −i(Hρ − ρH†) + d(σᶻρσᶻ − ρ)
//! ```
//!
//! together with the decay accumulator dPₙ/dt = γ ρ^{ee}_{n,n}.
//!
//! Density matrices are advanced with the fourth-order exponential
//! Runge–Kutta scheme of Cox and Matthews (ETDRK4). The linear part is
//! entry-wise: the diagonal of H contributes −i(H_ii − H_jj*) to ρ_ij and the
//! dephasing damps the g–e coherence blocks at rate 2d. It is integrated
//! exactly; the off-diagonal couplings form the explicit part. With a purely
//! off-diagonal H and d = 0 the scheme is classical RK4.
//!
//! Pure states with d = 0 are advanced with the exact propagator
//! exp(−iH dt/2), applied twice per step via a Taylor series, and the decay
//! flux is integrated with Simpson's rule. Both routes are fourth order in dt,
//! and both rescale the step's decay increments to the exact trace loss so that
//! Σ Pₙ + Tr ρ is conserved to rounding.

use ndarray::Array2;

use crate::model::{HilbertSpace, OperatorMatrix, SparseRows, C64};

/// Global order of both propagation routes; calibrates the Richardson weights.
pub const SCHEME_ORDER: u32 = 4;

/// Diagonals of H are folded into the linear part only when they take at most
/// this many distinct values per qubit block.
const MAX_RATE_CLASSES: usize = 8;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const MINUS_I: C64 = C64 { re: 0.0, im: -1.0 };

/// φ₁, φ₂, φ₃ of a complex argument.
fn phi123(z: C64) -> (C64, C64, C64) {
    if z.norm() < 0.5 {
        // φ_k(z) = Σ_j z^j / (j + k)!
        let mut phi = [ZERO; 3];
        for (k, p) in phi.iter_mut().enumerate() {
            let k = k + 1;
            let mut term = ONE / (1..=k).map(|i| i as f64).product::<f64>();
            let mut sum = term;
            for j in 1..40 {
                term = term * z / (j + k) as f64;
                sum += term;
                if term.norm() < 1e-18 * sum.norm() {
                    break;
                }
            }
            *p = sum;
        }
        (phi[0], phi[1], phi[2])
    } else {
        let e = z.exp();
        let p1 = (e - 1.0) / z;
        let p2 = (e - 1.0 - z) / (z * z);
        let p3 = (e - 1.0 - z - z * z * 0.5) / (z * z * z);
        (p1, p2, p3)
    }
}

/// ETDRK4 coefficients for one linear rate.
#[derive(Debug, Clone, Copy)]
struct EtdCoefficients {
    half_exp: C64,
    full_exp: C64,
    half_phi: C64,
    f1: C64,
    f2: C64,
    f3: C64,
}

impl EtdCoefficients {
    fn new(rate: C64, h: f64) -> Self {
        let z = rate * h;
        let (p1, p2, p3) = phi123(z);
        let (q1, _, _) = phi123(z * 0.5);
        Self {
            half_exp: (z * 0.5).exp(),
            full_exp: z.exp(),
            half_phi: q1 * (0.5 * h),
            f1: (p1 - p2 * 3.0 + p3 * 4.0) * h,
            f2: (p2 - p3 * 2.0) * h,
            f3: (-p2 + p3 * 4.0) * h,
        }
    }
}

/// Operator stored by diagonals: `values[d][i] = A[i, i + offsets[d]]`.
#[derive(Debug, Clone)]
struct Bands {
    offsets: Vec<isize>,
    values: Vec<Vec<C64>>,
}

impl Bands {
    fn new(m: &Array2<C64>, skip_main: bool) -> Self {
        let n = m.nrows();
        let mut offsets: Vec<isize> = m
            .indexed_iter()
            .filter(|((i, j), v)| **v != ZERO && !(skip_main && i == j))
            .map(|((i, j), _)| j as isize - i as isize)
            .collect();
        offsets.sort_unstable();
        offsets.dedup();
        let values = offsets
            .iter()
            .map(|&o| {
                (0..n)
                    .map(|i| {
                        let j = i as isize + o;
                        if (0..n as isize).contains(&j) {
                            m[[i, j as usize]]
                        } else {
                            ZERO
                        }
                    })
                    .collect()
            })
            .collect();
        Self { offsets, values }
    }

    fn inf_norm(&self, n: usize) -> f64 {
        (0..n)
            .map(|i| self.values.iter().map(|v| v[i].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Splits indices into classes sharing (qubit block, H_ii). Returns `None`
/// when there are too many distinct diagonal values.
fn rate_classes(h: &Array2<C64>, block: usize) -> Option<(Vec<usize>, Vec<(bool, C64)>)> {
    let mut keys: Vec<(bool, C64)> = Vec::new();
    let mut class_of = Vec::with_capacity(h.nrows());
    for i in 0..h.nrows() {
        let key = (i >= block, h[[i, i]]);
        let c = match keys.iter().position(|k| *k == key) {
            Some(c) => c,
            None => {
                if keys.len() == MAX_RATE_CLASSES {
                    return None;
                }
                keys.push(key);
                keys.len() - 1
            }
        };
        class_of.push(c);
    }
    Some((class_of, keys))
}

/// Reusable ETDRK4 stepper for Hermitian density matrices.
#[derive(Debug, Clone)]
pub struct DensityStepper {
    couplings: Bands,
    dim: usize,
    block: usize,
    decay: f64,
    dt: f64,
    classes: usize,
    class_of: Vec<usize>,
    /// Maximal column runs of equal class: (start, end, class).
    runs: Vec<(usize, usize, usize)>,
    coefficients: Vec<EtdCoefficients>,
    work: [Vec<C64>; 6],
}

impl DensityStepper {
    pub fn new(h: &OperatorMatrix, decay: f64, dephase: f64, dt: f64) -> Self {
        let n = h.space().total_dim();
        let block = h.space().block_size();
        let m = h.matrix();
        let (class_of, keys, folded) = match rate_classes(m, block) {
            Some((c, k)) => (c, k, true),
            None => {
                let c = (0..n).map(|i| usize::from(i >= block)).collect();
                (c, vec![(false, ZERO), (true, ZERO)], false)
            }
        };
        let mut coefficients = Vec::with_capacity(keys.len() * keys.len());
        for &(ei, di) in &keys {
            for &(ej, dj) in &keys {
                let mut rate = MINUS_I * (di - dj.conj());
                if ei != ej {
                    rate -= 2.0 * dephase;
                }
                coefficients.push(EtdCoefficients::new(rate, dt));
            }
        }
        let mut runs: Vec<(usize, usize, usize)> = Vec::new();
        for (j, &c) in class_of.iter().enumerate() {
            match runs.last_mut() {
                Some(last) if last.2 == c => last.1 = j + 1,
                _ => runs.push((j, j + 1, c)),
            }
        }
        let z = || vec![ZERO; n * n];
        Self {
            couplings: Bands::new(m, folded),
            dim: n,
            block,
            decay,
            dt,
            classes: keys.len(),
            class_of,
            runs,
            coefficients,
            work: [z(), z(), z(), z(), z(), z()],
        }
    }

    /// Step-size cap 1/‖H_explicit‖∞ for the explicit stages.
    pub fn stable_dt(h: &OperatorMatrix) -> f64 {
        let folded = rate_classes(h.matrix(), h.space().block_size()).is_some();
        let norm = Bands::new(h.matrix(), folded).inf_norm(h.space().total_dim());
        if norm > 0.0 {
            1.0 / norm
        } else {
            f64::INFINITY
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Upper triangle (j ≥ i) of −i(Vρ − ρV†) for Hermitian ρ stored
    /// row-major, V the explicit bands. The strict lower triangle of `out` is
    /// left untouched.
    fn coupling_part(h: &Bands, n: usize, rho: &[C64], out: &mut [C64]) {
        for (i, out_row) in out.chunks_exact_mut(n).enumerate() {
            let out_row = &mut out_row[i..];
            out_row.fill(ZERO);
            for (&o, vals) in h.offsets.iter().zip(&h.values) {
                // −i V_{i,k} ρ_{k,j} with k = i + o
                let k = i as isize + o;
                if (0..n as isize).contains(&k) && vals[i] != ZERO {
                    let k = k as usize;
                    let s = MINUS_I * vals[i];
                    for (x, y) in out_row.iter_mut().zip(&rho[k * n + i..(k + 1) * n]) {
                        *x += s * y;
                    }
                }
                // +i ρ_{i,m} conj(V_{j,m}) with m = j + o
                let lo = i.max((-o).max(0) as usize);
                let hi = (n as isize - o).min(n as isize).max(0) as usize;
                if lo < hi {
                    let rho_row = &rho[i * n..(i + 1) * n];
                    let src = &rho_row[(lo as isize + o) as usize..(hi as isize + o) as usize];
                    for ((x, r), v) in out_row[lo - i..hi - i]
                        .iter_mut()
                        .zip(src)
                        .zip(&vals[lo..hi])
                    {
                        let t = r * v.conj();
                        *x += C64::new(-t.im, t.re);
                    }
                }
            }
        }
    }

    /// Fill the strict lower triangle from the upper one and drop the
    /// rounding-level imaginary part of the diagonal.
    fn mirror(n: usize, m: &mut [C64]) {
        for i in 0..n {
            m[i * n + i].im = 0.0;
            for j in (i + 1)..n {
                m[j * n + i] = m[i * n + j].conj();
            }
        }
    }

    /// Calls `f(range, coefficients)` for the runs of the upper triangle that
    /// share a linear rate.
    fn for_each_run(&self, mut f: impl FnMut(std::ops::Range<usize>, &EtdCoefficients)) {
        let n = self.dim;
        for i in 0..n {
            let row = self.class_of[i] * self.classes;
            for &(s, e, c) in &self.runs {
                let s = s.max(i);
                if s < e {
                    f(i * n + s..i * n + e, &self.coefficients[row + c]);
                }
            }
        }
    }

    fn flux(&self, rho: &[C64], weight: f64, acc: &mut [f64]) {
        let (n, b) = (self.dim, self.block);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += weight * self.decay * rho[(b + k) * n + b + k].re;
        }
    }

    fn trace(&self, rho: &[C64]) -> f64 {
        (0..self.dim).map(|i| rho[i * self.dim + i].re).sum()
    }

    /// Advance a Hermitian ρ by one step, adding the decay increments into
    /// `decayed`.
    pub fn step(&mut self, rho: &mut Array2<C64>, decayed: &mut [f64]) {
        if !rho.is_standard_layout() {
            *rho = rho.as_standard_layout().into_owned();
        }
        let n = self.dim;
        let u = rho.as_slice_mut().expect("standard layout");
        let before = self.trace(u);
        let mut w = std::mem::take(&mut self.work);
        let [nu, a, na, b, nb, c] = &mut w;
        let h = &self.couplings;

        Self::coupling_part(h, n, u, nu);
        self.for_each_run(|r, k| {
            for idx in r {
                a[idx] = u[idx] * k.half_exp + nu[idx] * k.half_phi;
            }
        });
        Self::mirror(n, a);
        Self::coupling_part(h, n, a, na);
        self.for_each_run(|r, k| {
            for idx in r {
                b[idx] = u[idx] * k.half_exp + na[idx] * k.half_phi;
            }
        });
        Self::mirror(n, b);
        Self::coupling_part(h, n, b, nb);
        self.for_each_run(|r, k| {
            for idx in r {
                c[idx] = a[idx] * k.half_exp + (nb[idx] * 2.0 - nu[idx]) * k.half_phi;
            }
        });
        Self::mirror(n, c);
        // The accumulator has no linear part, so its stage weights are RK4's.
        let mut inc = vec![0.0; decayed.len()];
        self.flux(u, 1.0, &mut inc);
        self.flux(a, 2.0, &mut inc);
        self.flux(b, 2.0, &mut inc);
        self.flux(c, 1.0, &mut inc);
        // Fold N(a) + N(b) into `na`, then reuse `nb` for N(c).
        for (x, y) in na.iter_mut().zip(nb.iter()) {
            *x += *y;
        }
        Self::coupling_part(h, n, c, nb);
        self.for_each_run(|r, k| {
            let f2 = k.f2 * 2.0;
            for idx in r {
                u[idx] = u[idx] * k.full_exp + nu[idx] * k.f1 + na[idx] * f2 + nb[idx] * k.f3;
            }
        });
        Self::mirror(n, u);
        let after = self.trace(u);
        self.work = w;
        add_rescaled(decayed, &inc, self.dt / 6.0, before - after);
    }
}

/// Adds `weight · inc` rescaled so the increments sum to `loss`.
fn add_rescaled(decayed: &mut [f64], inc: &[f64], weight: f64, loss: f64) {
    let quadrature: f64 = inc.iter().sum::<f64>() * weight;
    if quadrature <= 0.0 {
        return;
    }
    let scale = loss.max(0.0) / quadrature;
    for (d, i) in decayed.iter_mut().zip(inc) {
        *d += i * weight * scale;
    }
}

/// Exact-propagator stepper for pure states (dephasing must be zero).
#[derive(Debug, Clone)]
pub struct StateStepper {
    hamiltonian: SparseRows,
    block: usize,
    decay: f64,
    dt: f64,
    term: Vec<C64>,
    next: Vec<C64>,
    mid: Vec<C64>,
}

impl StateStepper {
    pub fn new(h: &OperatorMatrix, decay: f64, dt: f64) -> Self {
        let d = h.space().total_dim();
        Self {
            hamiltonian: h.to_sparse(),
            block: h.space().block_size(),
            decay,
            dt,
            term: vec![ZERO; d],
            next: vec![ZERO; d],
            mid: vec![ZERO; d],
        }
    }

    /// Step-size cap 1/‖H‖∞, which keeps the flux well resolved by Simpson.
    pub fn stable_dt(h: &OperatorMatrix) -> f64 {
        let norm = h.to_sparse().inf_norm();
        if norm > 0.0 {
            1.0 / norm
        } else {
            f64::INFINITY
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// ψ ← exp(−iHτ) ψ by Taylor summation to machine precision.
    fn propagate(h: &SparseRows, tau: f64, psi: &mut [C64], term: &mut [C64], next: &mut [C64]) {
        term.copy_from_slice(psi);
        let norm0: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm0 == 0.0 {
            return;
        }
        for k in 1..200 {
            h.apply(term, MINUS_I * (tau / k as f64), next);
            term.swap_with_slice(next);
            let mut tnorm = 0.0;
            for (p, t) in psi.iter_mut().zip(term.iter()) {
                *p += *t;
                tnorm += t.norm_sqr();
            }
            if tnorm.sqrt() < 1e-17 * norm0 {
                break;
            }
        }
    }

    fn flux<'s>(&'s self, psi: &'s [C64]) -> impl Iterator<Item = f64> + 's {
        psi[self.block..]
            .iter()
            .map(move |z| self.decay * z.norm_sqr())
    }

    pub fn step(&mut self, psi: &mut [C64], decayed: &mut [f64]) {
        let half = 0.5 * self.dt;
        let before: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let mut inc: Vec<f64> = self.flux(psi).collect();
        let mut mid = std::mem::take(&mut self.mid);
        mid.copy_from_slice(psi);
        Self::propagate(
            &self.hamiltonian,
            half,
            &mut mid,
            &mut self.term,
            &mut self.next,
        );
        for (d, f) in inc.iter_mut().zip(self.flux(&mid)) {
            *d += 4.0 * f;
        }
        psi.copy_from_slice(&mid);
        Self::propagate(&self.hamiltonian, half, psi, &mut self.term, &mut self.next);
        for (d, f) in inc.iter_mut().zip(self.flux(psi)) {
            *d += f;
        }
        self.mid = mid;
        let after: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        add_rescaled(decayed, &inc, self.dt / 6.0, before - after);
    }
}

pub(crate) fn top_populations(
    space: &HilbertSpace,
    populations: impl Fn(usize) -> f64,
) -> Vec<f64> {
    let mut top = vec![0.0; space.modes()];
    let b = space.block_size();
    for k in 0..b {
        let p = populations(k) + populations(k + b);
        for (mode, t) in top.iter_mut().enumerate() {
            if space.photon(k, mode) + 1 == space.truncations()[mode] {
                *t += p;
            }
        }
    }
    top
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_functions_continuous() {
        for z in [
            C64::new(-0.4999999, 0.0),
            C64::new(-0.5000001, 0.0),
            C64::new(-1e-9, 0.0),
            C64::new(-3.0, 2.0),
            C64::new(-40.0, 0.0),
            C64::new(0.0, 0.7),
        ] {
            let (p1, p2, p3) = phi123(z);
            let e = z.exp();
            if z.norm() > 0.3 {
                assert!((p1 - (e - 1.0) / z).norm() < 1e-13);
                assert!((p2 - (e - 1.0 - z) / (z * z)).norm() < 1e-12);
                assert!((p3 - (e - 1.0 - z - z * z / 2.0) / z.powi(3)).norm() < 1e-11);
            } else {
                assert!((p1 - 1.0).norm() < 1e-8);
                assert!((p2 - 0.5).norm() < 1e-8);
                assert!((p3 - 1.0 / 6.0).norm() < 1e-8);
            }
        }
        let a = phi123(C64::new(-0.4999999, 0.0));
        let b = phi123(C64::new(-0.5000001, 0.0));
        assert!((a.2 - b.2).norm() < 1e-7);
    }

    #[test]
    fn rk4_limit_of_coefficients() {
        let c = EtdCoefficients::new(ZERO, 0.1);
        assert!((c.f1 - 0.1 / 6.0).norm() < 1e-16);
        assert!((c.f2 - 0.1 / 6.0).norm() < 1e-16);
        assert!((c.f3 - 0.1 / 6.0).norm() < 1e-16);
        assert!((c.half_phi - 0.05).norm() < 1e-16);
    }

    #[test]
    fn bands_reproduce_matrix() {
        let m = Array2::from_shape_fn((5, 5), |(i, j)| {
            if (i as isize - j as isize).abs() == 2 || i == j {
                C64::new(i as f64 + 1.0, j as f64)
            } else {
                ZERO
            }
        });
        let b = Bands::new(&m, false);
        assert_eq!(b.offsets, vec![-2, 0, 2]);
        let b = Bands::new(&m, true);
        assert_eq!(b.offsets, vec![-2, 2]);
        assert_eq!(b.values[1][1], m[[1, 3]]);
    }
}
