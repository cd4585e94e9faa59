//! Euclidean projection onto the epigraph `{(d, t) : t >= |d|^p}`.
//!
//! For `p = u/v < 1` the boundary is parametrized by `a >= 0` as
//! `(+-a^v, a^u)`. Stationarity of `(a^v - |x|)^2 + (a^u - t)^2` gives
//!
//! ```text
//! a^(2v) + (u/v) (a^(2u) - t a^u) - |x| a^v = 0
//! ```
//!
//! whose nonnegative real roots, together with the kink at the origin, form a
//! finite candidate set containing the projection.

pub mod roots;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rational exponent `p = u / v` with `0 < p <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PExponent {
    u: u32,
    v: u32,
}

impl PExponent {
    pub const HALF: PExponent = PExponent { u: 1, v: 2 };
    pub const ONE: PExponent = PExponent { u: 1, v: 1 };

    /// Reduced to lowest terms. `v` is limited to 8 so that the stationarity
    /// polynomial stays within the root finder's degree limit.
    pub fn new(u: u32, v: u32) -> Result<Self> {
        if u == 0 || v == 0 {
            return Err(Error::InvalidExponent {
                u,
                v,
                reason: "u and v must be positive",
            });
        }
        let g = gcd(u, v);
        let (ru, rv) = (u / g, v / g);
        if ru > rv {
            return Err(Error::InvalidExponent {
                u,
                v,
                reason: "p must not exceed 1",
            });
        }
        if 2 * rv as usize > roots::MAX_DEGREE {
            return Err(Error::InvalidExponent {
                u,
                v,
                reason: "denominator above 8",
            });
        }
        Ok(PExponent { u: ru, v: rv })
    }

    pub fn u(&self) -> u32 {
        self.u
    }

    pub fn v(&self) -> u32 {
        self.v
    }

    pub fn value(&self) -> f64 {
        self.u as f64 / self.v as f64
    }

    pub fn is_l1(&self) -> bool {
        self.u == self.v
    }
}

impl Default for PExponent {
    fn default() -> Self {
        PExponent::HALF
    }
}

impl fmt::Display for PExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.u, self.v)
    }
}

impl FromStr for PExponent {
    type Err = Error;

    /// Accepts `"u/v"` or a bare integer (`"1"`).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot parse exponent {s:?}, expected \"u/v\""));
        let (u, v) = match s.trim().split_once('/') {
            Some((u, v)) => (
                u.trim().parse().map_err(|_| bad())?,
                v.trim().parse().map_err(|_| bad())?,
            ),
            None => (s.trim().parse().map_err(|_| bad())?, 1),
        };
        PExponent::new(u, v)
    }
}

impl TryFrom<String> for PExponent {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PExponent> for String {
    fn from(p: PExponent) -> String {
        p.to_string()
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Projection onto `{t >= |d|^p}` for `p = u/v < 1`.
pub fn project_epigraph_lp(x: f64, t: f64, p: PExponent) -> Result<(f64, f64)> {
    if p.u >= p.v {
        return Err(Error::InvalidExponent {
            u: p.u,
            v: p.v,
            reason: "use the l1 projection for p = 1",
        });
    }
    let ax = x.abs();
    let pv = p.value();
    if t >= ax.powf(pv) {
        return Ok((x, t));
    }

    let (u, v) = (p.u as usize, p.v as usize);
    let ratio = pv;
    // Stationarity polynomial divided by a^u (a = 0 is the kink candidate).
    // Degree 2v - u, stored in descending powers.
    let degree = 2 * v - u;
    let mut coeffs = vec![0.0; degree + 1];
    let mut add = |power: usize, c: f64| coeffs[degree - power] += c;
    add(2 * v - u, 1.0);
    add(u, ratio);
    add(v - u, -ax);
    add(0, -ratio * t);

    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let dist2 = |d: f64, s: f64| (d - x).powi(2) + (s - t).powi(2);

    let mut best = (0.0, t.max(0.0));
    let mut best_dist = dist2(best.0, best.1);
    // near-real eigenvalues are harmless extra candidates: every a >= 0 maps
    // to a point of the epigraph boundary
    for a0 in roots::near_real_eigenvalues(&coeffs, 1e-4)? {
        let a = roots::polish(&coeffs, a0, 6);
        if !(a >= 0.0) || !a.is_finite() {
            continue;
        }
        let cand = (sign * a.powi(v as i32), a.powi(u as i32));
        let dd = dist2(cand.0, cand.1);
        if dd < best_dist {
            best = cand;
            best_dist = dd;
        }
    }
    Ok(best)
}

/// Projection onto `{t >= |d|}`.
pub fn project_epigraph_l1(x: f64, t: f64) -> (f64, f64) {
    let ax = x.abs();
    if t >= ax {
        (x, t)
    } else if t <= -ax {
        (0.0, 0.0)
    } else {
        let m = 0.5 * (ax + t);
        (m.copysign(x), m)
    }
}

/// Routes `p = 1` to the closed form.
pub fn project_epigraph(x: f64, t: f64, p: PExponent) -> Result<(f64, f64)> {
    if p.is_l1() {
        Ok(project_epigraph_l1(x, t))
    } else {
        project_epigraph_lp(x, t, p)
    }
}
