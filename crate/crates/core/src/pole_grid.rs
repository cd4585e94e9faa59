//! Finite pole dictionary on the closed unit disk.
//!
//! Only one representative of each conjugate pair is stored (the one with
//! positive imaginary part); its partner is implied. Each stored point is one
//! coefficient *group*: a real pole carries one real degree of freedom per
//! coefficient, a pair representative carries two.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points closer than this are merged.
pub const MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoleKind {
    RealAxis,
    /// Upper-half representative of a conjugate pair.
    UpperHalf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub value: Complex64,
    pub kind: PoleKind,
}

impl GridPoint {
    fn new(value: Complex64) -> Self {
        if value.im == 0.0 {
            GridPoint {
                value,
                kind: PoleKind::RealAxis,
            }
        } else {
            debug_assert!(value.im > 0.0);
            GridPoint {
                value,
                kind: PoleKind::UpperHalf,
            }
        }
    }

    /// Number of poles this group stands for.
    pub fn multiplicity(&self) -> usize {
        match self.kind {
            PoleKind::RealAxis => 1,
            PoleKind::UpperHalf => 2,
        }
    }

    /// Real degrees of freedom of one coefficient attached to this group.
    pub fn dof(&self) -> usize {
        self.multiplicity()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub radii: Vec<f64>,
    pub points_per_radius: usize,
    /// Also place the two real poles `±radii_min / 2` on the real axis.
    pub include_real_axis: bool,
}

impl Default for GridConfig {
    /// Four circles with 36 uniform angles each plus two inner real poles:
    /// 146 poles in total.
    fn default() -> Self {
        GridConfig {
            radii: vec![0.70, 0.85, 0.95, 1.00],
            points_per_radius: 36,
            include_real_axis: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleGrid {
    points: Vec<GridPoint>,
    horizon: usize,
    alpha: Vec<f64>,
}

impl PoleGrid {
    /// Uniform angles on every radius; `horizon` is the `N` of the energy
    /// scaling.
    pub fn build(cfg: &GridConfig, horizon: usize) -> Result<Self> {
        if cfg.radii.is_empty() {
            return Err(Error::InvalidGrid("radii list is empty".into()));
        }
        if let Some(r) = cfg.radii.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return Err(Error::InvalidGrid(format!("radius {r} outside (0, 1]")));
        }
        if cfg.points_per_radius < 2 {
            return Err(Error::InvalidGrid(
                "points_per_radius must be at least 2".into(),
            ));
        }

        let mut values = Vec::new();
        for &radius in &cfg.radii {
            let m = cfg.points_per_radius;
            for k in 0..m {
                // angles in [0, pi] cover every representative exactly once
                if 2 * k > m {
                    break;
                }
                if 2 * k == m {
                    values.push(Complex64::new(-radius, 0.0));
                } else if k == 0 {
                    values.push(Complex64::new(radius, 0.0));
                } else {
                    let theta = 2.0 * PI * k as f64 / m as f64;
                    values.push(Complex64::from_polar(radius, theta));
                }
            }
        }
        if cfg.include_real_axis {
            let inner = cfg.radii.iter().cloned().fold(f64::INFINITY, f64::min) / 2.0;
            values.push(Complex64::new(inner, 0.0));
            values.push(Complex64::new(-inner, 0.0));
        }
        Self::from_points(&values, horizon)
    }

    /// Grid over explicit points. Points with negative imaginary part are
    /// replaced by their conjugate; duplicates are merged.
    pub fn from_points(values: &[Complex64], horizon: usize) -> Result<Self> {
        let points = collect_points(values)?;
        let alpha = scaling_weights(&points, horizon)?;
        Ok(PoleGrid {
            points,
            horizon,
            alpha,
        })
    }

    /// Grid with unit weights, used for simulating physical (unscaled)
    /// systems.
    pub fn unscaled(values: &[Complex64]) -> Result<Self> {
        let points = collect_points(values)?;
        let alpha = vec![1.0; points.len()];
        Ok(PoleGrid {
            points,
            horizon: 0,
            alpha,
        })
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn point(&self, group: usize) -> &GridPoint {
        &self.points[group]
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn group_count(&self) -> usize {
        self.points.len()
    }

    /// Total pole count, pairs counted twice.
    pub fn pole_count(&self) -> usize {
        self.points.iter().map(GridPoint::multiplicity).sum()
    }

    pub fn real_count(&self) -> usize {
        self.points
            .iter()
            .filter(|p| p.kind == PoleKind::RealAxis)
            .count()
    }

    pub fn pair_count(&self) -> usize {
        self.group_count() - self.real_count()
    }

    /// Two-column `real imag` dump, one line per pole (partners included).
    pub fn to_text(&self) -> String {
        let mut out = String::from("# real imag\n");
        for p in &self.points {
            out.push_str(&format!("{:.17e} {:.17e}\n", p.value.re, p.value.im));
            if p.kind == PoleKind::UpperHalf {
                out.push_str(&format!("{:.17e} {:.17e}\n", p.value.re, -p.value.im));
            }
        }
        out
    }
}

fn collect_points(values: &[Complex64]) -> Result<Vec<GridPoint>> {
    let mut points: Vec<GridPoint> = Vec::with_capacity(values.len());
    for &v in values {
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite pole {v}")));
        }
        if v.norm() > 1.0 + MERGE_TOL {
            return Err(Error::InvalidGrid(format!("pole {v} outside the unit disk")));
        }
        let v = if v.im.abs() <= MERGE_TOL {
            Complex64::new(v.re, 0.0)
        } else if v.im < 0.0 {
            v.conj()
        } else {
            v
        };
        if points.iter().any(|p| (p.value - v).norm() <= MERGE_TOL) {
            continue;
        }
        points.push(GridPoint::new(v));
    }
    Ok(points)
}

/// Energy-equalizing weights `(1 - |q|^2) / (1 - |q|^(2N+2))`, one per group.
///
/// Evaluated as a ratio of `expm1` terms, which stays accurate as `|q| -> 1`;
/// on the unit circle the limit `1 / (N + 1)` is returned.
pub fn scaling_weights(points: &[GridPoint], horizon: usize) -> Result<Vec<f64>> {
    if horizon == 0 {
        return Err(Error::InvalidGrid("horizon N must be at least 1".into()));
    }
    Ok(points
        .iter()
        .map(|p| alpha_for_modulus(p.value.norm(), horizon))
        .collect())
}

pub fn alpha_for_modulus(modulus: f64, horizon: usize) -> f64 {
    let n1 = (horizon + 1) as f64;
    if modulus >= 1.0 {
        return 1.0 / n1;
    }
    if modulus == 0.0 {
        return 1.0;
    }
    let log_sq = 2.0 * modulus.ln();
    (-log_sq.exp_m1()) / (-(n1 * log_sq).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(radii: &[f64], m: usize) -> GridConfig {
        GridConfig {
            radii: radii.to_vec(),
            points_per_radius: m,
            include_real_axis: false,
        }
    }

    #[test]
    fn four_points_on_unit_circle() {
        let g = PoleGrid::build(&cfg(&[1.0], 4), 10).unwrap();
        assert_eq!(g.real_count(), 2);
        assert_eq!(g.pair_count(), 1);
        assert_eq!(g.pole_count(), 4);
        let pair = g.points().iter().find(|p| p.kind == PoleKind::UpperHalf).unwrap();
        assert!((pair.value - Complex64::i()).norm() < 1e-15);
    }

    #[test]
    fn two_points_are_real() {
        let g = PoleGrid::build(&cfg(&[0.5], 2), 10).unwrap();
        let vals: Vec<f64> = g.points().iter().map(|p| p.value.re).collect();
        assert_eq!(vals, vec![0.5, -0.5]);
        assert_eq!(g.pair_count(), 0);
    }

    #[test]
    fn default_grid_has_146_poles() {
        let g = PoleGrid::build(&GridConfig::default(), 50).unwrap();
        assert_eq!(g.pole_count(), 146);
        assert_eq!(g.group_count(), g.real_count() + g.pair_count());
        assert_eq!(g.pole_count(), g.real_count() + 2 * g.pair_count());
        assert!(g.points().iter().all(|p| p.value.norm() <= 1.0 + 1e-15));
        assert!(g
            .points()
            .iter()
            .all(|p| (p.kind == PoleKind::RealAxis) == (p.value.im == 0.0)));
    }

    #[test]
    fn odd_point_counts_keep_pairs_whole() {
        let g = PoleGrid::build(&cfg(&[0.9], 5), 10).unwrap();
        assert_eq!(g.real_count(), 1);
        assert_eq!(g.pair_count(), 2);
        assert_eq!(g.pole_count(), 5);
    }

    #[test]
    fn duplicate_radii_are_merged() {
        let g = PoleGrid::build(&cfg(&[1.0, 1.0], 4), 10).unwrap();
        assert_eq!(g.pole_count(), 4);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(PoleGrid::build(&cfg(&[], 4), 10).is_err());
        assert!(PoleGrid::build(&cfg(&[1.5], 4), 10).is_err());
        assert!(PoleGrid::build(&cfg(&[0.0], 4), 10).is_err());
        assert!(PoleGrid::build(&cfg(&[0.5], 1), 10).is_err());
    }

    #[test]
    fn build_is_deterministic() {
        let a = PoleGrid::build(&GridConfig::default(), 50).unwrap();
        let b = PoleGrid::build(&GridConfig::default(), 50).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn alpha_special_values() {
        assert_eq!(alpha_for_modulus(0.0, 7), 1.0);
        assert!((alpha_for_modulus(1.0, 49) - 1.0 / 50.0).abs() < 1e-15);
        // direct evaluation is accurate here: 0.25^50 is far below eps
        let direct = (1.0 - 0.25) / (1.0 - 0.25f64.powi(50));
        assert!((alpha_for_modulus(0.5, 49) - direct).abs() < 1e-15);
    }

    #[test]
    fn alpha_is_continuous_at_the_circle() {
        for &n in &[1usize, 10, 49, 200, 1000] {
            let near = alpha_for_modulus(1.0 - 1e-9, n);
            let limit = alpha_for_modulus(1.0, n);
            assert!((near - limit).abs() < 1e-6, "N={n}: {near} vs {limit}");
        }
    }

    #[test]
    fn alpha_matches_geometric_sum() {
        // 1 / sum_{k=0}^{N} |q|^{2k} is algebraically identical
        for &r in &[0.1, 0.5, 0.7, 0.95, 0.999] {
            for &n in &[1usize, 5, 49] {
                let x: f64 = r * r;
                let s: f64 = (0..=n).map(|k| x.powi(k as i32)).sum();
                let a = alpha_for_modulus(r, n);
                assert!((a - 1.0 / s).abs() < 1e-13);
                assert!(a > 0.0 && a <= 1.0);
            }
        }
    }
}
