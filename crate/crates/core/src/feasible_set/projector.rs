//! Euclidean projection onto the feasible set by operator splitting.
//!
//! With `x = [w, f]` and `C` the matrix of observation rows (each row reads
//! one chunk's `[r, a, b^(i)]` plus its own noise entry), the projection is
//!
//! ```text
//! min 1/2 |x - x_hat|^2   s.t.   C x in [lo, hi],   x in K
//! ```
//!
//! where `K` holds the noise box and the capped coefficient groups. Splitting
//! `x = z` (z in K) and `Cx = v` (v in the box) gives an ADMM whose x-step is
//! the linear system `(c I + rho C^T C) x = rhs`. It is solved through the
//! Woodbury identity with a Cholesky factor of the small matrix
//! `(c / rho) I + C C^T`, which depends only on the set and is computed once.
//! Both remaining steps are closed-form projections.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::FeasibleSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectorSettings {
    /// Initial penalty; adapted during the run.
    pub rho: f64,
    /// Over-relaxation factor in `[1, 2)`.
    pub relaxation: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Penalty adaptation period in iterations (0 disables it).
    pub adapt_every: usize,
}

impl Default for ProjectorSettings {
    fn default() -> Self {
        ProjectorSettings {
            rho: 1.0,
            relaxation: 1.6,
            tol: 1e-6,
            max_iter: 2000,
            adapt_every: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionOutcome {
    pub s: Vec<f64>,
    pub f: Vec<f64>,
    pub iterations: usize,
    /// Largest row violation of `(s, f)` in original units; the noise box
    /// and the caps hold exactly.
    pub residual: f64,
    pub converged: bool,
}

pub struct Projector<'a> {
    set: &'a FeasibleSet,
    settings: ProjectorSettings,
    rho: f64,
    /// Row-normalized observation rows over `[r, a, b^(i)]`.
    rows: Vec<f64>,
    noise_coef: Vec<f64>,
    row_norm: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    gram: DMatrix<f64>,
    factor: Option<Cholesky<f64, Dyn>>,
    // warm-start state; mu and nu are scaled by 1 / rho
    x: Vec<f64>,
    z: Vec<f64>,
    mu: Vec<f64>,
    v: Vec<f64>,
    nu: Vec<f64>,
    scratch_norms: Vec<f64>,
}

impl<'a> Projector<'a> {
    pub fn new(set: &'a FeasibleSet, settings: ProjectorSettings) -> Result<Self> {
        if !(settings.rho > 0.0 && settings.rho.is_finite())
            || !(1.0..2.0).contains(&settings.relaxation)
            || !(settings.tol > 0.0)
            || settings.max_iter == 0
        {
            return Err(Error::InvalidConfig(format!(
                "projector settings out of range: {settings:?}"
            )));
        }
        let layout = set.layout();
        let tl = layout.theta_len();
        let m = set.rows().len();
        let mut rows = vec![0.0; m * tl];
        let mut noise_coef = vec![0.0; m];
        let mut row_norm = vec![0.0; m];
        let mut lo = vec![0.0; m];
        let mut hi = vec![0.0; m];
        for (k, r) in set.rows().iter().enumerate() {
            let src = set.operator(r.chunk).row(r.sample);
            let norm = (src.iter().map(|v| v * v).sum::<f64>() + 1.0).sqrt();
            for (dst, s) in rows[k * tl..(k + 1) * tl].iter_mut().zip(src) {
                *dst = s / norm;
            }
            noise_coef[k] = 1.0 / norm;
            row_norm[k] = norm;
            lo[k] = r.lo / norm;
            hi[k] = r.hi / norm;
        }

        let shared = 1 + layout.coeff_len();
        let mut gram = DMatrix::<f64>::zeros(m, m);
        for p in 0..m {
            let rp = &rows[p * tl..(p + 1) * tl];
            for q in 0..=p {
                let rq = &rows[q * tl..(q + 1) * tl];
                let mut g = dot(&rp[..shared], &rq[..shared]);
                if set.rows()[p].chunk == set.rows()[q].chunk {
                    g += dot(&rp[shared..], &rq[shared..]);
                }
                if p == q {
                    g += noise_coef[p] * noise_coef[p];
                }
                gram[(p, q)] = g;
                gram[(q, p)] = g;
            }
        }

        let n = set.w_len() + set.groups();
        let mut p = Projector {
            set,
            settings,
            rho: settings.rho,
            rows,
            noise_coef,
            row_norm,
            lo,
            hi,
            gram,
            factor: None,
            x: vec![0.0; n],
            z: vec![0.0; n],
            mu: vec![0.0; n],
            v: vec![0.0; m],
            nu: vec![0.0; m],
            scratch_norms: Vec::with_capacity(set.layout().chunks() + 1),
        };
        p.refactor()?;
        Ok(p)
    }

    pub fn settings(&self) -> &ProjectorSettings {
        &self.settings
    }

    /// Current penalty.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.v.len();
        if m == 0 {
            self.factor = None;
            return Ok(());
        }
        let mut s = self.gram.clone();
        let diag = (1.0 + self.rho) / self.rho;
        for k in 0..m {
            s[(k, k)] += diag;
        }
        self.factor = Some(Cholesky::new(s).ok_or_else(|| {
            Error::InvalidConfig("observation Gram matrix is not positive definite".into())
        })?);
        Ok(())
    }

    /// `C x` (normalized rows).
    fn apply_c(&self, x: &[f64], out: &mut [f64]) {
        let layout = self.set.layout();
        let tl = layout.theta_len();
        let shared = 1 + layout.coeff_len();
        let cl = layout.coeff_len();
        let noise0 = layout.noise_start();
        for (k, r) in self.set.rows().iter().enumerate() {
            let row = &self.rows[k * tl..(k + 1) * tl];
            let b0 = layout.b_start(r.chunk);
            let mut acc = dot(&row[..shared], &x[..shared]);
            acc += dot(&row[shared..], &x[b0..b0 + cl]);
            acc += self.noise_coef[k] * x[noise0 + k];
            out[k] = acc;
        }
    }

    /// `out += C^T y`.
    fn add_ct(&self, y: &[f64], out: &mut [f64]) {
        let layout = self.set.layout();
        let tl = layout.theta_len();
        let shared = 1 + layout.coeff_len();
        let cl = layout.coeff_len();
        let noise0 = layout.noise_start();
        for (k, r) in self.set.rows().iter().enumerate() {
            let yk = y[k];
            if yk == 0.0 {
                continue;
            }
            let row = &self.rows[k * tl..(k + 1) * tl];
            let b0 = layout.b_start(r.chunk);
            axpy(yk, &row[..shared], &mut out[..shared]);
            axpy(yk, &row[shared..], &mut out[b0..b0 + cl]);
            out[noise0 + k] += yk * self.noise_coef[k];
        }
    }

    /// `x = (c I + rho C^T C)^{-1} rhs` with `c = 1 + rho`, overwriting `rhs`.
    fn solve_in_place(&self, rhs: &mut [f64], tmp: &mut DVector<f64>) {
        let c = 1.0 + self.rho;
        if let Some(factor) = &self.factor {
            self.apply_c(rhs, tmp.as_mut_slice());
            factor.solve_mut(tmp);
            tmp.neg_mut();
            self.add_ct(tmp.as_slice(), rhs);
        }
        for v in rhs.iter_mut() {
            *v /= c;
        }
    }

    /// Projection onto `K`: free feedthrough, noise box, capped groups.
    fn project_k(&mut self, x: &mut [f64]) {
        let set = self.set;
        let layout = set.layout();
        let eps = set.noise_bound();
        let noise0 = layout.noise_start();
        for n in &mut x[noise0..noise0 + layout.noise_len()] {
            *n = n.clamp(-eps, eps);
        }
        let f0 = set.w_len();
        let chunks = layout.chunks();
        for j in 0..layout.groups() {
            let (off, dof) = layout.group_slot(j);
            let starts = || std::iter::once(layout.a_start()).chain((0..chunks).map(|i| layout.b_start(i)));
            let norms = &mut self.scratch_norms;
            norms.clear();
            for s in starts() {
                norms.push(norm(&x[s + off..s + off + dof]));
            }
            let f = project_capped_group(norms, x[f0 + j]);
            for s in starts() {
                let g = &mut x[s + off..s + off + dof];
                let nrm = norm(g);
                if nrm > f {
                    let scale = if nrm > 0.0 { f / nrm } else { 0.0 };
                    g.iter_mut().for_each(|v| *v *= scale);
                }
            }
            x[f0 + j] = f;
        }
    }

    /// Largest violation of the row constraints for `cx = C x`, in original
    /// units.
    fn row_residual(&self, cx: &[f64]) -> f64 {
        cx.iter()
            .enumerate()
            .map(|(k, &v)| (self.lo[k] - v).max(v - self.hi[k]).max(0.0) * self.row_norm[k])
            .fold(0.0, f64::max)
    }

    /// Forget the warm-start state and the adapted penalty.
    pub fn reset(&mut self) -> Result<()> {
        for v in [&mut self.x, &mut self.z, &mut self.mu, &mut self.v, &mut self.nu] {
            v.iter_mut().for_each(|e| *e = 0.0);
        }
        if self.rho != self.settings.rho {
            self.rho = self.settings.rho;
            self.refactor()?;
        }
        Ok(())
    }

    /// Projection of `(w_hat, d_hat)`, warm-started from the previous call.
    pub fn project(&mut self, w_hat: &[f64], d_hat: &[f64]) -> Result<ProjectionOutcome> {
        self.set.check_dims(w_hat, d_hat)?;
        let n = self.x.len();
        let m = self.v.len();
        let alpha = self.settings.relaxation;
        let tol = self.settings.tol;
        let xhat: Vec<f64> = w_hat.iter().chain(d_hat).copied().collect();
        let xhat_scale = max_abs(&xhat);

        let mut rhs = vec![0.0; n];
        let mut tmp = DVector::<f64>::zeros(m);
        let mut cx = vec![0.0; m];
        let mut dv = vec![0.0; m];
        let mut zr = vec![0.0; n];
        let mut grad = vec![0.0; n];
        let mut cz = vec![0.0; m];
        let mut history: Vec<f64> = Vec::new();
        let mut converged = false;
        let mut iterations = 0;

        for it in 0..self.settings.max_iter {
            iterations = it + 1;
            let rho = self.rho;
            // x-step
            for i in 0..n {
                rhs[i] = xhat[i] + rho * (self.z[i] - self.mu[i]);
            }
            for k in 0..m {
                dv[k] = rho * (self.v[k] - self.nu[k]);
            }
            self.add_ct(&dv, &mut rhs);
            self.solve_in_place(&mut rhs, &mut tmp);
            std::mem::swap(&mut self.x, &mut rhs);
            self.apply_c(&self.x, &mut cx);

            // z- and v-steps on the relaxed iterate
            for i in 0..n {
                zr[i] = alpha * self.x[i] + (1.0 - alpha) * self.z[i] + self.mu[i];
            }
            let mut zk = std::mem::take(&mut zr);
            self.project_k(&mut zk);
            zr = zk;
            for i in 0..n {
                let xr = alpha * self.x[i] + (1.0 - alpha) * self.z[i];
                self.mu[i] += xr - zr[i];
            }
            std::mem::swap(&mut self.z, &mut zr);
            for k in 0..m {
                let cr = alpha * cx[k] + (1.0 - alpha) * self.v[k];
                let v_new = (cr + self.nu[k]).clamp(self.lo[k], self.hi[k]);
                self.nu[k] += cr - v_new;
                self.v[k] = v_new;
            }

            // residuals: primal gaps and the Lagrangian gradient at x
            let prim_x = max_abs_diff(&self.x, &self.z);
            let prim_c = cx
                .iter()
                .zip(&self.v)
                .zip(&self.row_norm)
                .map(|((a, b), s)| (a - b).abs() * s)
                .fold(0.0, f64::max);
            let prim = prim_x.max(prim_c);
            grad.iter_mut().zip(&self.mu).for_each(|(g, u)| *g = rho * u);
            let nu_scaled: Vec<f64> = self.nu.iter().map(|v| rho * v).collect();
            self.add_ct(&nu_scaled, &mut grad);
            let dual_ref = max_abs(&grad);
            for i in 0..n {
                grad[i] += self.x[i] - xhat[i];
            }
            // OSQP-style scale of the gradient terms: |x|, |x_hat|, |y|
            let step = max_abs(&self.x).max(xhat_scale);
            let dual = max_abs(&grad);
            history.push(prim);
            if prim <= tol && dual <= tol * (1.0 + dual_ref.max(step)) {
                self.apply_c(&self.z, &mut cz);
                if self.row_residual(&cz) <= tol {
                    converged = true;
                    break;
                }
            }

            let every = self.settings.adapt_every;
            if every > 0 && (it + 1) % every == 0 {
                let prim_scale = max_abs(&self.x).max(max_abs(&self.z)).max(max_abs(&cx)).max(max_abs(&self.v)).max(1e-12);
                let dual_scale = dual_ref.max(step).max(1e-12);
                let ratio = ((prim / prim_scale) / (dual / dual_scale).max(1e-30)).sqrt();
                let new_rho = (rho * ratio).clamp(1e-6, 1e6);
                if !(0.2..=5.0).contains(&(new_rho / rho)) {
                    let scale = rho / new_rho;
                    self.mu.iter_mut().for_each(|u| *u *= scale);
                    self.nu.iter_mut().for_each(|u| *u *= scale);
                    self.rho = new_rho;
                    self.refactor()?;
                }
            }
        }

        self.apply_c(&self.z, &mut cz);
        let residual = self.row_residual(&cz);
        if !converged && residual > 100.0 * tol {
            let mid = history.get(history.len() / 2).copied().unwrap_or(f64::INFINITY);
            let last = history.last().copied().unwrap_or(f64::INFINITY);
            if last >= 0.5 * mid {
                let (s, f) = self.z.split_at(self.set.w_len());
                let worst = self
                    .set
                    .is_feasible(s, f, tol)?
                    .worst
                    .map(|v| format!("worst constraint {} violated by {:.3e}", v.id, v.amount))
                    .unwrap_or_default();
                return Err(Error::Infeasible {
                    residual,
                    iterations,
                    worst,
                });
            }
        }
        let (s, f) = self.z.split_at(self.set.w_len());
        Ok(ProjectionOutcome {
            s: s.to_vec(),
            f: f.to_vec(),
            iterations,
            residual,
            converged,
        })
    }
}

/// Optimal cap for one group: minimizes `(f - f_hat)^2 + sum (n_l - f)_+^2`
/// over `f >= 0`, where `n_l` are the norms of the group's coefficient
/// blocks. The blocks are then shrunk to norm `min(n_l, f)`.
///
/// `norms` is reordered.
pub fn project_capped_group(norms: &mut [f64], f_hat: f64) -> f64 {
    norms.sort_by(|a, b| b.total_cmp(a));
    let mut sum = 0.0;
    let m = norms.len();
    for k in 0..=m {
        let f = (f_hat + sum) / (k + 1) as f64;
        let next = if k < m { norms[k] } else { f64::NEG_INFINITY };
        if f >= next {
            return f.max(0.0);
        }
        sum += norms[k];
    }
    unreachable!("the last candidate always satisfies the stopping test")
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[inline]
fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[inline]
fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute force over a fine grid of caps.
    fn cap_oracle(norms: &[f64], f_hat: f64) -> f64 {
        let cost = |f: f64| {
            (f - f_hat).powi(2) + norms.iter().map(|n| (n - f).max(0.0).powi(2)).sum::<f64>()
        };
        let mut best = (0.0, cost(0.0));
        for i in 0..=400_000 {
            let f = i as f64 * 1e-5;
            let c = cost(f);
            if c < best.1 {
                best = (f, c);
            }
        }
        best.0
    }

    #[test]
    fn capped_group_matches_scan() {
        let cases: &[(&[f64], f64)] = &[
            (&[2.0, 0.0], 0.0),
            (&[1.0, 0.5, 3.0], 0.2),
            (&[0.1, 0.2], 1.0),
            (&[0.0, 0.0], -1.0),
            (&[0.5], -0.7),
            (&[1.5, 1.5, 1.5], -0.2),
        ];
        for (norms, f_hat) in cases {
            let mut n = norms.to_vec();
            let got = project_capped_group(&mut n, *f_hat);
            let want = cap_oracle(norms, *f_hat);
            assert!((got - want).abs() < 2e-5, "{norms:?} {f_hat}: {got} vs {want}");
        }
    }

    use crate::dataset::{Chunk, ChunkedDataset};
    use crate::pole_grid::PoleGrid;
    use crate::quantizer::QuantizerSpec;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tight() -> ProjectorSettings {
        ProjectorSettings {
            tol: 1e-9,
            max_iter: 20_000,
            ..Default::default()
        }
    }

    fn small_set(observed: &[(usize, usize)], eps: f64) -> FeasibleSet {
        let q = QuantizerSpec::make_uniform(3, 1.0).unwrap();
        let ds = ChunkedDataset::new(
            vec![Chunk {
                input: vec![1.0, -0.5, 0.25, 0.8, -1.0],
                observed: observed.iter().copied().collect(),
            }],
            q,
            eps,
        )
        .unwrap();
        let g = PoleGrid::from_points(&[Complex64::new(0.6, 0.0), Complex64::new(0.3, 0.5)], 5).unwrap();
        FeasibleSet::assemble(&ds, &g, true, 0.0).unwrap()
    }

    fn random_point(set: &FeasibleSet, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
        let w = (0..set.w_len()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let f = (0..set.groups()).map(|_| rng.random_range(-1.0..1.0)).collect();
        (w, f)
    }

    fn dist2(a: &ProjectionOutcome, b: &ProjectionOutcome) -> f64 {
        a.s.iter()
            .zip(&b.s)
            .chain(a.f.iter().zip(&b.f))
            .map(|(x, y)| (x - y).powi(2))
            .sum()
    }

    #[test]
    fn single_pole_without_rows() {
        let q = QuantizerSpec::make_uniform(1, 1.0).unwrap();
        let ds = ChunkedDataset::new(
            vec![Chunk {
                input: vec![0.0],
                observed: Default::default(),
            }],
            q,
            0.0,
        )
        .unwrap();
        let g = PoleGrid::from_points(&[Complex64::new(0.5, 0.0)], 1).unwrap();
        let set = FeasibleSet::assemble(&ds, &g, true, 0.0).unwrap();
        // w = [r, a, b]
        let out = set.project(&[0.0, 2.0, 0.0], &[0.0], tight()).unwrap();
        let obj = (out.s[1] - 2.0).powi(2) + out.s[2].powi(2) + out.f[0].powi(2) + out.s[0].powi(2);
        assert!((obj - 2.0).abs() < 1e-9, "{out:?}");
        assert!((out.f[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn feasible_points_are_fixed() {
        let set = small_set(&[(0, 4), (2, 4), (4, 4)], 0.3);
        let w = vec![0.0; set.w_len()];
        let f = vec![0.5; set.groups()];
        assert!(set.is_feasible(&w, &f, 0.0).unwrap().feasible);
        let out = set.project(&w, &f, tight()).unwrap();
        assert!(out.converged);
        for (a, b) in out.s.iter().chain(&out.f).zip(w.iter().chain(&f)) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn projection_is_idempotent_and_nonexpansive() {
        let set = small_set(&[(0, 5), (1, 2), (3, 6)], 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut proj = Projector::new(&set, tight()).unwrap();
        for _ in 0..10 {
            let (w1, f1) = random_point(&set, &mut rng);
            let (w2, f2) = random_point(&set, &mut rng);
            let p1 = proj.project(&w1, &f1).unwrap();
            let p2 = proj.project(&w2, &f2).unwrap();
            assert!(p1.converged && p2.converged);
            assert!(set.is_feasible(&p1.s, &p1.f, 1e-8).unwrap().feasible);
            let again = proj.project(&p1.s, &p1.f).unwrap();
            assert!(dist2(&again, &p1).sqrt() < 1e-6, "{} {:?}", dist2(&again, &p1).sqrt(), again);
            let before: f64 = w1
                .iter()
                .zip(&w2)
                .chain(f1.iter().zip(&f2))
                .map(|(x, y)| (x - y).powi(2))
                .sum();
            assert!(dist2(&p1, &p2) <= before + 1e-8);
        }
    }

    #[test]
    fn warm_and_cold_starts_agree() {
        let set = small_set(&[(0, 5), (1, 2), (3, 6)], 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut warm = Projector::new(&set, tight()).unwrap();
        for _ in 0..5 {
            let (w, f) = random_point(&set, &mut rng);
            let a = warm.project(&w, &f).unwrap();
            let b = set.project(&w, &f, tight()).unwrap();
            assert!(dist2(&a, &b).sqrt() < 1e-6);
        }
    }

    #[test]
    fn empty_set_is_reported() {
        // zero input: y(2) = y(1) / 2 cannot be saturated high while y(1)
        // is saturated low
        let q = QuantizerSpec::make_uniform(3, 1.0).unwrap();
        let ds = ChunkedDataset::new(
            vec![Chunk {
                input: vec![0.0, 0.0],
                observed: [(0, 0), (1, 7)].into_iter().collect(),
            }],
            q,
            0.0,
        )
        .unwrap();
        let g = PoleGrid::from_points(&[Complex64::new(0.5, 0.0)], 2).unwrap();
        let set = FeasibleSet::assemble(&ds, &g, true, 0.0).unwrap();
        let settings = ProjectorSettings {
            max_iter: 500,
            ..Default::default()
        };
        let err = set.project(&vec![0.0; set.w_len()], &[0.0], settings).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }), "{err}");
    }
}

