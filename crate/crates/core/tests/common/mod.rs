//! Independent reference solvers shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use quantid::analysis::SyntheticSetup;
use quantid::feasible_set::FeasibleSet;
use quantid::lti_sim::{simulate_chunk, GriddedSystem};
use quantid::{Chunk, ChunkedDataset, PExponent, PoleGrid, QuantizerSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Epigraph projection by brute force: a fine scan of the boundary
/// parametrization `(a^v, a^u)`, refined by golden-section search, against
/// the kink candidate `(0, max(t, 0))`.
pub fn epigraph_oracle(x: f64, t: f64, p: PExponent) -> (f64, f64) {
    let pv = p.value();
    if t >= x.abs().powf(pv) {
        return (x, t);
    }
    let (u, v) = (p.u() as i32, p.v() as i32);
    let ax = x.abs();
    let cost = |a: f64| (a.powi(v) - ax).powi(2) + (a.powi(u) - t).powi(2);
    // any minimizer has a^v <= |x| + |t| + 1
    let hi = (ax + t.abs() + 1.0).powf(1.0 / v as f64);
    let steps = 4000;
    let h = hi / steps as f64;
    let mut best_i = 0;
    let mut best_c = f64::INFINITY;
    for i in 0..=steps {
        let c = cost(i as f64 * h);
        if c < best_c {
            best_c = c;
            best_i = i;
        }
    }
    let (mut lo, mut up) = ((best_i as f64 - 1.0).max(0.0) * h, (best_i as f64 + 1.0) * h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let m1 = up - g * (up - lo);
        let m2 = lo + g * (up - lo);
        if cost(m1) <= cost(m2) {
            up = m2;
        } else {
            lo = m1;
        }
    }
    let a = 0.5 * (lo + up);
    let boundary = (a.powi(v).copysign(x), a.powi(u));
    let kink = (0.0, t.max(0.0));
    let dist = |(d, s): (f64, f64)| (d - x).powi(2) + (s - t).powi(2);
    if dist(kink) <= dist(boundary) {
        kink
    } else {
        boundary
    }
}

/// Projection onto the feasible set by a quadratic-penalty homotopy:
/// squared hinge penalties on every constraint, minimized by damped Newton
/// for penalty weights 1e2, 1e3, .., 1e10. Returns `(s, f)`.
pub fn penalty_projection(set: &FeasibleSet, w_hat: &[f64], d_hat: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let layout = set.layout();
    let nw = set.w_len();
    let n = nw + set.groups();
    let xhat: Vec<f64> = w_hat.iter().chain(d_hat).copied().collect();

    // dense rows over the full x = [w, f]
    let rows: Vec<(Vec<f64>, f64, f64)> = set
        .rows()
        .iter()
        .enumerate()
        .map(|(m, r)| {
            let mut c = vec![0.0; n];
            let op = set.operator(r.chunk).row(r.sample);
            let cl = layout.coeff_len();
            c[..1 + cl].copy_from_slice(&op[..1 + cl]);
            let b0 = layout.b_start(r.chunk);
            c[b0..b0 + cl].copy_from_slice(&op[1 + cl..]);
            c[layout.noise_start() + m] = 1.0;
            (c, r.lo, r.hi)
        })
        .collect();
    let eps = set.noise_bound();
    let noise: Vec<usize> = (0..layout.noise_len()).map(|k| layout.noise_start() + k).collect();
    // cones: (coefficient indices, cap index)
    let mut cones: Vec<(Vec<usize>, usize)> = Vec::new();
    for j in 0..layout.groups() {
        let (off, dof) = layout.group_slot(j);
        let starts = std::iter::once(layout.a_start()).chain((0..layout.chunks()).map(|i| layout.b_start(i)));
        for s in starts {
            cones.push(((s + off..s + off + dof).collect(), nw + j));
        }
    }

    let value = |x: &[f64], mu: f64| -> f64 {
        let mut v = 0.5 * x.iter().zip(&xhat).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let mut pen = 0.0;
        for (c, lo, hi) in &rows {
            let y: f64 = c.iter().zip(x).map(|(a, b)| a * b).sum();
            pen += (lo - y).max(0.0).powi(2) + (y - hi).max(0.0).powi(2);
        }
        for &k in &noise {
            pen += (x[k].abs() - eps).max(0.0).powi(2);
        }
        for (idx, fj) in &cones {
            let nrm = idx.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt();
            pen += (nrm - x[*fj]).max(0.0).powi(2);
        }
        v += 0.5 * mu * pen;
        v
    };

    let grad_hess = |x: &[f64], mu: f64| -> (DVector<f64>, DMatrix<f64>) {
        let mut g = DVector::from_iterator(n, x.iter().zip(&xhat).map(|(a, b)| a - b));
        let mut h = DMatrix::<f64>::identity(n, n);
        for (c, lo, hi) in &rows {
            let y: f64 = c.iter().zip(x).map(|(a, b)| a * b).sum();
            let viol = if y < *lo {
                y - lo
            } else if y > *hi {
                y - hi
            } else {
                continue;
            };
            for i in 0..n {
                if c[i] == 0.0 {
                    continue;
                }
                g[i] += mu * viol * c[i];
                for k in 0..n {
                    h[(i, k)] += mu * c[i] * c[k];
                }
            }
        }
        for &k in &noise {
            let e = x[k].abs() - eps;
            if e > 0.0 {
                g[k] += mu * e * x[k].signum();
                h[(k, k)] += mu;
            }
        }
        for (idx, fj) in &cones {
            let nrm = idx.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt();
            let e = nrm - x[*fj];
            if e <= 0.0 {
                continue;
            }
            g[*fj] -= mu * e;
            h[(*fj, *fj)] += mu;
            if nrm < 1e-300 {
                continue;
            }
            for (a, &i) in idx.iter().enumerate() {
                let ui = x[i] / nrm;
                g[i] += mu * e * ui;
                h[(i, *fj)] -= mu * ui;
                h[(*fj, i)] -= mu * ui;
                for &k in &idx[..] {
                    let uk = x[k] / nrm;
                    let eye = if i == k { 1.0 } else { 0.0 };
                    h[(i, k)] += mu * (ui * uk + e / nrm * (eye - ui * uk));
                }
                let _ = a;
            }
        }
        (g, h)
    };

    let mut x = xhat.clone();
    let mut mu = 1e2;
    while mu <= 1e10 * 1.0001 {
        for _ in 0..200 {
            let (g, h) = grad_hess(&x, mu);
            let gnorm = g.amax();
            if gnorm <= 1e-13 * (1.0 + mu.sqrt()) {
                break;
            }
            let step = match h.clone().cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => -&g,
            };
            let f0 = value(&x, mu);
            let slope = g.dot(&step);
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
                if value(&cand, mu) <= f0 + 1e-4 * t * slope {
                    x = cand;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        mu *= 10.0;
    }
    let f = x.split_off(nw);
    (x, f)
}

/// Squared distance of `(s, f)` to `(w_hat, d_hat)`.
pub fn projection_objective(s: &[f64], f: &[f64], w_hat: &[f64], d_hat: &[f64]) -> f64 {
    s.iter()
        .zip(w_hat)
        .chain(f.iter().zip(d_hat))
        .map(|(a, b)| (a - b).powi(2))
        .sum()
}

/// Tiny feasible instance: two groups (one real pole and one pair), one
/// chunk of five samples with three of them observed, levels taken from a
/// random system on the grid.
pub fn tiny_instance(seed: u64) -> (ChunkedDataset, PoleGrid) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let real = Complex64::new(rng.random_range(-0.9..0.9), 0.0);
    let pair = Complex64::from_polar(rng.random_range(0.3..1.0), rng.random_range(0.2..3.0));
    let grid = PoleGrid::from_points(&[real, pair], 5).unwrap();
    let q = QuantizerSpec::make_uniform(3, 1.0).unwrap();
    let input: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
    let sys = GriddedSystem {
        r: rng.random_range(-0.5..0.5),
        a: vec![
            Complex64::new(rng.random_range(-1.0..1.0), 0.0),
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        ],
        b: vec![vec![
            Complex64::new(rng.random_range(-1.0..1.0), 0.0),
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        ]],
        scale_zero_state: true,
    };
    let y = simulate_chunk(&sys, &grid, 0, &input).unwrap();
    let mut samples: Vec<usize> = (0..5).collect();
    while samples.len() > 3 {
        let k = rng.random_range(0..samples.len());
        samples.remove(k);
    }
    let observed = samples.iter().map(|&s| (s, q.quantize(y[s]).unwrap().0)).collect();
    let ds = ChunkedDataset::new(vec![Chunk { input, observed }], q, 0.05).unwrap();
    (ds, grid)
}

/// The synthetic setup used for the single-system experiments.
pub fn default_setup() -> SyntheticSetup {
    SyntheticSetup::default()
}

/// Simulation by explicit complex sums over every pole, conjugate partners
/// included. Returns the real parts and the largest imaginary magnitude.
pub fn complex_simulation(sys: &GriddedSystem, grid: &PoleGrid, chunk: usize, input: &[f64]) -> (Vec<f64>, f64) {
    // expand groups into (pole, alpha, a, b) with partners
    let mut terms = Vec::new();
    for (j, p) in grid.points().iter().enumerate() {
        let alpha = grid.alpha()[j];
        let wa = if sys.scale_zero_state { alpha } else { 1.0 };
        terms.push((p.value, alpha, wa, sys.a[j], sys.b[chunk][j]));
        if p.multiplicity() == 2 {
            terms.push((p.value.conj(), alpha, wa, sys.a[j].conj(), sys.b[chunk][j].conj()));
        }
    }
    let h = |k: usize| -> Complex64 {
        if k == 0 {
            return Complex64::new(sys.r, 0.0);
        }
        terms.iter().map(|(q, _, wa, a, _)| a * q.powu(k as u32 - 1) * wa).sum()
    };
    let mut worst_imag = 0.0f64;
    let y = (0..input.len())
        .map(|s| {
            let zi: Complex64 = terms.iter().map(|(q, al, _, _, b)| b * q.powu(s as u32) * al).sum();
            let zs: Complex64 = (0..=s).map(|m| h(s - m) * input[m]).sum();
            let v = zi + zs;
            worst_imag = worst_imag.max(v.im.abs());
            v.re
        })
        .collect();
    (y, worst_imag)
}
