//! Iteration of `p_c(z) = z² + c`, the Green potential, fixed points and orbits.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default iteration budget for potentials and orbits.
pub const DEFAULT_BUDGET: usize = 4096;

/// Fixed points of `p_c` must satisfy `|z² + c − z|` below this.
pub const FIXED_POINT_TOL: f64 = 1e-12;

/// Radius past which orbits are declared escaping: `max(2, |c|) + 1`.
pub fn escape_radius(c: Complex64) -> f64 {
    2f64.max(c.norm()) + 1.0
}

pub(crate) fn check_finite(z: Complex64, what: &'static str) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { what })
    }
}

#[inline]
pub fn step(c: Complex64, z: Complex64) -> Complex64 {
    z * z + c
}

/// Outcome of [`iterate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iterate {
    /// `p_c^n(z)`, or `None` once the orbit overflowed to a non-finite value.
    pub value: Option<Complex64>,
    /// First index `k` with `|z_k|` above the squared escape radius.
    pub escaped_at: Option<usize>,
}

/// Applies `p_c` `n` times to `z`.
pub fn iterate(c: Complex64, z: Complex64, n: usize) -> Result<Iterate> {
    check_finite(c, "parameter")?;
    check_finite(z, "point")?;
    let r2 = escape_radius(c).powi(2);
    let mut w = z;
    let mut escaped_at = (w.norm() > r2).then_some(0);
    for k in 1..=n {
        w = step(c, w);
        if !(w.re.is_finite() && w.im.is_finite()) {
            return Ok(Iterate {
                value: None,
                escaped_at: escaped_at.or(Some(k)),
            });
        }
        if escaped_at.is_none() && w.norm() > r2 {
            escaped_at = Some(k);
        }
    }
    Ok(Iterate {
        value: Some(w),
        escaped_at,
    })
}

/// Value of the Green potential at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub value: f64,
    /// The orbit stayed bounded for the whole budget; `value` is then 0.
    pub bounded_at_budget: bool,
    pub iterations: usize,
}

// Iterating until |z| exceeds this leaves a correction of order |c|/|z|² in log|z|.
const BAILOUT: f64 = 1e10;

/// `G(z) = lim 2^{-n} log|p_c^n(z)|` with the default budget.
pub fn green_potential(c: Complex64, z: Complex64) -> Potential {
    green_potential_with_budget(c, z, DEFAULT_BUDGET)
}

pub fn green_potential_with_budget(c: Complex64, z: Complex64, budget: usize) -> Potential {
    let mut w = z;
    let mut scale = 1.0;
    for k in 0..budget {
        let m = w.norm();
        if m > BAILOUT {
            // next term of log|φ(w)| = log|w| + ½ log|1 + c/w²| + …
            let corr = 0.5 * (1.0 + c / (w * w)).norm().ln();
            return Potential {
                value: scale * (m.ln() + corr),
                bounded_at_budget: false,
                iterations: k,
            };
        }
        w = step(c, w);
        scale *= 0.5;
    }
    if w.norm() > escape_radius(c) {
        return Potential {
            value: scale * w.norm().ln(),
            bounded_at_budget: false,
            iterations: budget,
        };
    }
    Potential {
        value: 0.0,
        bounded_at_budget: true,
        iterations: budget,
    }
}

/// Fixed-point data of `p_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterPoint {
    pub c: Complex64,
    pub alpha: Complex64,
    pub beta: Complex64,
    pub alpha_multiplier: Complex64,
    pub beta_multiplier: Complex64,
    pub alpha_repelling: bool,
}

/// `α = (1 − √(1 − 4c)) / 2` on the principal branch and `β = 1 − α`.
pub fn fixed_points(c: Complex64) -> Result<ParameterPoint> {
    check_finite(c, "parameter")?;
    let disc = Complex64::new(1.0, 0.0) - 4.0 * c;
    if disc.norm() < 1e-14 {
        return Err(Error::DegenerateFixedPoint {
            distance: disc.norm(),
        });
    }
    let s = disc.sqrt();
    let mut alpha = (1.0 - s) / 2.0;
    let mut beta = (1.0 + s) / 2.0;
    // one Newton step on z² − z + c cleans up cancellation in 1 − s
    for z in [&mut alpha, &mut beta] {
        let f = *z * *z - *z + c;
        let df = 2.0 * *z - 1.0;
        *z -= f / df;
    }
    let alpha_multiplier = 2.0 * alpha;
    Ok(ParameterPoint {
        c,
        alpha,
        beta,
        alpha_multiplier,
        beta_multiplier: 2.0 * beta,
        alpha_repelling: alpha_multiplier.norm() > 1.0,
    })
}

/// A finite orbit `z, p_c(z), …` with escape and periodicity annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSegment {
    pub c: Complex64,
    pub start: Complex64,
    pub points: Vec<Complex64>,
    pub escaped_at: Option<usize>,
    /// Numerically detected preperiod (closeness recurrence, not exact).
    pub preperiod: Option<usize>,
    pub period: Option<usize>,
}

impl OrbitSegment {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

const RECURRENCE_TOL: f64 = 1e-9;

/// The orbit of `z` of length `len` (`points[0] = z`).
pub fn orbit(c: Complex64, z: Complex64, len: usize) -> Result<OrbitSegment> {
    check_finite(c, "parameter")?;
    check_finite(z, "point")?;
    if len == 0 {
        return Err(Error::InvalidArgument("orbit length must be at least 1".into()));
    }
    let r2 = escape_radius(c).powi(2);
    let mut points = Vec::with_capacity(len);
    let mut w = z;
    let mut escaped_at = None;
    for k in 0..len {
        points.push(w);
        if w.norm() > r2 {
            escaped_at = Some(k);
            break;
        }
        w = step(c, w);
    }
    let (preperiod, period) = if escaped_at.is_none() {
        detect_cycle(&points)
    } else {
        (None, None)
    };
    Ok(OrbitSegment {
        c,
        start: z,
        points,
        escaped_at,
        preperiod,
        period,
    })
}

/// The critical orbit `0, c, c² + c, …` of length `budget`.
pub fn critical_orbit(c: Complex64, budget: usize) -> Result<OrbitSegment> {
    orbit(c, Complex64::new(0.0, 0.0), budget)
}

// Smallest (preperiod, period) such that the tail of the orbit repeats with that
// period; every available repetition is checked.
fn detect_cycle(points: &[Complex64]) -> (Option<usize>, Option<usize>) {
    let n = points.len();
    for pre in 0..n {
        for per in 1..=(n - pre) / 2 {
            let repeats = (pre..n - per).all(|k| (points[k + per] - points[k]).norm() < RECURRENCE_TOL);
            if repeats {
                return (Some(pre), Some(per));
            }
        }
    }
    (None, None)
}

/// The airplane parameter: the real root of `c³ + 2c² + c + 1 = 0`
/// (equivalently `p_c³(0) = 0` with `c ≠ 0`), found by Newton's method.
pub fn airplane_parameter() -> Complex64 {
    let mut c = -1.75f64;
    for _ in 0..50 {
        let f = ((c + 2.0) * c + 1.0) * c + 1.0;
        let df = (3.0 * c + 4.0) * c + 1.0;
        let dc = f / df;
        c -= dc;
        if dc.abs() < 1e-17 {
            break;
        }
    }
    Complex64::new(c, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn iterate_examples() {
        let r = iterate(cx(0.0, 0.0), cx(2.0, 0.0), 3).unwrap();
        assert_eq!(r.value, Some(cx(256.0, 0.0)));
        assert!(r.escaped_at.is_some());
        let r = iterate(cx(-2.0, 0.0), cx(0.0, 0.0), 2).unwrap();
        assert_eq!(r.value, Some(cx(2.0, 0.0)));
        assert_eq!(r.escaped_at, None);
        let r = iterate(cx(0.0, 1.0), cx(0.0, 0.0), 4).unwrap();
        assert_eq!(r.value, Some(cx(-1.0, 1.0)));
        assert_eq!(iterate(cx(0.3, 0.0), cx(0.1, 0.0), 0).unwrap().value, Some(cx(0.1, 0.0)));
    }

    #[test]
    fn iterate_overflow_is_escape() {
        let r = iterate(cx(0.0, 0.0), cx(10.0, 0.0), 40).unwrap();
        assert_eq!(r.value, None);
        assert_eq!(r.escaped_at, Some(0));
        assert!(iterate(cx(f64::NAN, 0.0), cx(0.0, 0.0), 1).is_err());
    }

    #[test]
    fn potential_examples() {
        let g = green_potential(cx(0.0, 0.0), cx(2.0, 0.0));
        assert_abs_diff_eq!(g.value, 2f64.ln(), epsilon = 1e-12);
        let g = green_potential(cx(0.0, 0.0), cx(0.5, 0.0));
        assert_eq!(g.value, 0.0);
        assert!(g.bounded_at_budget);
    }

    #[test]
    fn potential_chebyshev_oracle() {
        // brute force 2^{-n} log|z_n| at n = 40, cross-checked with the closed form
        let c = cx(-2.0, 0.0);
        let mut z = cx(3.0, 0.0);
        let mut scale = 1.0;
        for _ in 0..6 {
            z = step(c, z);
            scale *= 0.5;
        }
        let brute = scale * z.norm().ln();
        let closed = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert_abs_diff_eq!(brute, closed, epsilon = 1e-12);
        let g = green_potential(c, cx(3.0, 0.0));
        assert_abs_diff_eq!(g.value, closed, epsilon = 1e-12);
        assert_abs_diff_eq!(g.value, 0.9624, epsilon = 1e-4);
    }

    #[test]
    fn fixed_point_examples() {
        let p = fixed_points(cx(-1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(p.alpha.re, (1.0 - 5f64.sqrt()) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.beta.re, (1.0 + 5f64.sqrt()) / 2.0, epsilon = 1e-15);
        assert!(p.alpha_repelling);

        let p = fixed_points(cx(0.0, 0.0)).unwrap();
        assert_eq!(p.alpha, cx(0.0, 0.0));
        assert!(!p.alpha_repelling);
        assert_eq!(p.beta, cx(1.0, 0.0));

        assert!(matches!(
            fixed_points(cx(0.25, 0.0)),
            Err(Error::DegenerateFixedPoint { .. })
        ));
    }

    #[test]
    fn fixed_point_of_i_against_root_finder() {
        // companion-free oracle: Newton on z² − z + i from many seeds, keep the root
        // with real part below 1/2
        let c = cx(0.0, 1.0);
        let mut roots = Vec::new();
        for seed in [cx(-1.0, 1.0), cx(2.0, -1.0)] {
            let mut z = seed;
            for _ in 0..100 {
                z -= (z * z - z + c) / (2.0 * z - 1.0);
            }
            roots.push(z);
        }
        let oracle = roots.into_iter().find(|z| z.re < 0.5).unwrap();
        let p = fixed_points(c).unwrap();
        assert!((p.alpha - oracle).norm() < 1e-14);
        assert_abs_diff_eq!(p.alpha.re, -0.300243, epsilon = 1e-6);
        assert_abs_diff_eq!(p.alpha.im, 0.624810, epsilon = 1e-6);
        for z in [p.alpha, p.beta] {
            assert!((z * z + c - z).norm() <= FIXED_POINT_TOL);
        }
    }

    #[test]
    fn critical_orbit_examples() {
        let o = critical_orbit(cx(-2.0, 0.0), 10).unwrap();
        assert_eq!(&o.points[..4], &[cx(0.0, 0.0), cx(-2.0, 0.0), cx(2.0, 0.0), cx(2.0, 0.0)]);
        assert_eq!((o.preperiod, o.period), (Some(2), Some(1)));

        let o = critical_orbit(cx(0.0, 1.0), 12).unwrap();
        assert_eq!((o.preperiod, o.period), (Some(2), Some(2)));

        let o = critical_orbit(cx(0.3, 0.0), 64).unwrap();
        let k = o.escaped_at.expect("0.3 is outside the Mandelbrot set");
        // direct iteration oracle
        let mut z = 0.0f64;
        let mut first = None;
        for j in 0..64 {
            if z.abs() > escape_radius(cx(0.3, 0.0)).powi(2) {
                first = Some(j);
                break;
            }
            z = z * z + 0.3;
        }
        assert_eq!(Some(k), first);
        assert!(k <= 15);
    }

    #[test]
    fn airplane_is_superattracting_period_three() {
        let c = airplane_parameter();
        assert_abs_diff_eq!(c.re, -1.754877666, epsilon = 1e-9);
        let o = critical_orbit(c, 30).unwrap();
        assert_eq!((o.preperiod, o.period), (Some(0), Some(3)));
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn functional_equation(re in -2.5f64..2.5, im in -2.5f64..2.5, k in 0usize..3) {
            let c = [cx(0.0, 1.0), cx(-1.0, 0.0), cx(-2.0, 0.0)][k];
            let z = cx(re, im);
            let g = green_potential(c, z).value;
            prop_assume!((0.1..=2.0).contains(&g));
            let g1 = green_potential(c, step(c, z)).value;
            prop_assert!((g1 - 2.0 * g).abs() <= 1e-8);
        }

        #[test]
        fn even_symmetry(re in -1.5f64..1.5, im in -1.5f64..1.5, n in 1usize..12) {
            let c = cx(-0.12, 0.75);
            let a = iterate(c, cx(re, im), n).unwrap();
            let b = iterate(c, cx(-re, -im), n).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
