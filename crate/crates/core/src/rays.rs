//! External rays by potential descent with Newton refinement on the truncated
//! Böttcher equation `p_c^m(z) = exp(2^m (h + 2πiθ))`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angle::{rotation_cycle, rotation_numbers, Angle};
use crate::dynamics::{green_potential, step, ParameterPoint};
use crate::error::{Error, Result};

/// Knobs for ray tracing and the α-cycle search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayConfig {
    pub steps_per_halving: u32,
    pub landing_tol: f64,
    /// A failed step is split in two at most this many times.
    pub max_step_halvings: u32,
    /// Descent for landing stops below this potential.
    pub min_potential: f64,
    /// Largest ray-cycle period searched at α.
    pub q_max: u32,
}

impl Default for RayConfig {
    fn default() -> Self {
        RayConfig {
            steps_per_halving: 8,
            landing_tol: 1e-6,
            max_step_halvings: 20,
            min_potential: 1e-200,
            q_max: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaySample {
    pub potential: f64,
    pub point: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayTrace {
    pub angle: Angle,
    pub samples: Vec<RaySample>,
    pub landed: bool,
    pub landing_estimate: Option<Complex64>,
}

impl RayTrace {
    pub fn last_point(&self) -> Complex64 {
        self.samples.last().expect("ray traces are never empty").point
    }
}

// Log-radius at which p_c^m(z) ≈ φ(z)^{2^m} to double precision.
const DEEP: f64 = 24.0;

fn target(angle: Angle, h: f64) -> (u32, Complex64) {
    let mut m = 0u32;
    let mut scaled = h;
    while scaled < DEEP {
        scaled *= 2.0;
        m += 1;
    }
    let phase = angle.times_pow2(m).to_f64();
    (m, Complex64::from_polar(scaled.exp(), TAU * phase))
}

fn newton(c: Complex64, start: Complex64, m: u32, w: Complex64) -> Option<Complex64> {
    let mut z = start;
    for _ in 0..64 {
        let mut f = z;
        let mut df = Complex64::new(1.0, 0.0);
        for _ in 0..m {
            df *= 2.0 * f;
            f = step(c, f);
            if f.norm() > 1e150 {
                return None;
            }
        }
        if df.norm() == 0.0 || !df.re.is_finite() {
            return None;
        }
        let dz = (f - w) / df;
        z -= dz;
        if !(z.re.is_finite() && z.im.is_finite()) {
            return None;
        }
        if dz.norm() <= 1e-15 * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    None
}

struct Descent<'a> {
    c: Complex64,
    angle: Angle,
    cfg: &'a RayConfig,
    h: f64,
    z: Complex64,
    last_step: f64,
}

impl Descent<'_> {
    fn start<'b>(param: &ParameterPoint, angle: Angle, cfg: &'b RayConfig) -> Descent<'b> {
        let h = DEEP;
        let z = Complex64::from_polar(h.exp(), TAU * angle.to_f64());
        // leave the guess unrefined: at this radius φ(z) = z to ~1e-21 relative
        Descent {
            c: param.c,
            angle,
            cfg,
            h,
            z,
            last_step: f64::INFINITY,
        }
    }

    /// Moves from the current potential to `h_new < h`, splitting the step on failure.
    fn advance(&mut self, h_new: f64) -> Result<()> {
        let mut pieces = 1u32;
        let mut attempts = 0;
        'outer: loop {
            let ratio = (h_new / self.h).powf(1.0 / pieces as f64);
            let (mut h, mut z, mut last) = (self.h, self.z, self.last_step);
            for _ in 0..pieces {
                let h_next = if pieces == 1 { h_new } else { h * ratio };
                let (m, w) = target(self.angle, h_next);
                match newton(self.c, z, m, w) {
                    Some(z_next) if (z_next - z).norm() <= 3.0 * last + 1e-300 => {
                        last = (z_next - z).norm();
                        h = h_next;
                        z = z_next;
                    }
                    _ => {
                        attempts += 1;
                        if attempts > self.cfg.max_step_halvings {
                            return Err(Error::RayTraceDiverged {
                                angle: self.angle,
                                potential: h_next,
                            });
                        }
                        pieces *= 2;
                        continue 'outer;
                    }
                }
            }
            self.h = h_new;
            self.z = z;
            self.last_step = last;
            return Ok(());
        }
    }
}

/// Traces the external ray of `angle` from potential `h_hi` down to `h_lo`.
///
/// With `h_lo = 0` the descent continues until the landing point is resolved to
/// the landing tolerance (or the minimum potential is reached, leaving
/// `landed = false`).
pub fn trace_external_ray(
    param: &ParameterPoint,
    angle: Angle,
    h_hi: f64,
    h_lo: f64,
    steps_per_halving: u32,
) -> Result<RayTrace> {
    let cfg = RayConfig {
        steps_per_halving,
        ..RayConfig::default()
    };
    trace_external_ray_with(param, angle, h_hi, h_lo, &cfg)
}

pub fn trace_external_ray_with(
    param: &ParameterPoint,
    angle: Angle,
    h_hi: f64,
    h_lo: f64,
    cfg: &RayConfig,
) -> Result<RayTrace> {
    if !(h_hi.is_finite() && h_hi > 0.0 && h_lo >= 0.0 && h_lo < h_hi) {
        return Err(Error::InvalidArgument(format!(
            "ray potentials must satisfy h_hi > h_lo >= 0, got {h_hi} and {h_lo}"
        )));
    }
    if cfg.steps_per_halving == 0 {
        return Err(Error::InvalidArgument("steps_per_halving must be positive".into()));
    }
    let factor = 0.5f64.powf(1.0 / cfg.steps_per_halving as f64);
    let mut d = Descent::start(param, angle, cfg);
    while d.h * factor > h_hi {
        d.advance(d.h * factor)?;
    }
    if d.h != h_hi {
        d.advance(h_hi)?;
    }
    let mut samples = vec![RaySample {
        potential: d.h,
        point: d.z,
    }];

    if h_lo > 0.0 {
        loop {
            let next = (d.h * factor).max(h_lo);
            d.advance(next)?;
            samples.push(RaySample {
                potential: d.h,
                point: d.z,
            });
            if next <= h_lo {
                break;
            }
        }
        return Ok(RayTrace {
            angle,
            samples,
            landed: false,
            landing_estimate: None,
        });
    }

    // Landing: checkpoints one full period apart converge geometrically to the
    // landing point, so Aitken's Δ² accelerates them.
    let (pre, period) = angle.preperiod_period();
    let per_checkpoint = (period * cfg.steps_per_halving) as usize;
    let mut checkpoints: Vec<Complex64> = vec![d.z];
    let mut estimates: Vec<Complex64> = Vec::new();
    let mut k = 0usize;
    let mut landing = None;
    while d.h * factor > cfg.min_potential {
        d.advance(d.h * factor)?;
        samples.push(RaySample {
            potential: d.h,
            point: d.z,
        });
        k += 1;
        if !k.is_multiple_of(per_checkpoint) {
            continue;
        }
        checkpoints.push(d.z);
        let n = checkpoints.len();
        if n < 3 {
            continue;
        }
        let (x0, x1, x2) = (checkpoints[n - 3], checkpoints[n - 2], checkpoints[n - 1]);
        let d1 = x2 - x1;
        let denom = d1 - (x1 - x0);
        let est = if denom.norm() > 1e-300 { x2 - d1 * d1 / denom } else { x2 };
        estimates.push(est);
        if let [.., a, b] = estimates[..] {
            if (a - b).norm() < cfg.landing_tol && (x2 - b).norm() < 1e3 * cfg.landing_tol.sqrt() {
                landing = Some(b);
                break;
            }
        }
    }
    let landing_estimate = landing.map(|est| {
        if pre == 0 {
            polish_periodic(param.c, est, period, cfg.landing_tol).unwrap_or(est)
        } else {
            est
        }
    });
    Ok(RayTrace {
        angle,
        samples,
        landed: landing_estimate.is_some(),
        landing_estimate,
    })
}

// Newton on p_c^p(z) − z; only accepted when it stays near the starting estimate.
fn polish_periodic(c: Complex64, start: Complex64, period: u32, tol: f64) -> Option<Complex64> {
    let mut z = start;
    for _ in 0..50 {
        let mut f = z;
        let mut df = Complex64::new(1.0, 0.0);
        for _ in 0..period {
            df *= 2.0 * f;
            f = step(c, f);
        }
        let g = f - z;
        let dg = df - 1.0;
        if dg.norm() < 1e-300 {
            return None;
        }
        let dz = g / dg;
        z -= dz;
        if dz.norm() < 1e-16 * (1.0 + z.norm()) {
            break;
        }
    }
    ((z - start).norm() < 10.0 * tol).then_some(z)
}

/// The point of potential `h` on the ray of `angle`.
pub fn ray_point(param: &ParameterPoint, angle: Angle, h: f64, cfg: &RayConfig) -> Result<Complex64> {
    let factor = 0.5f64.powf(1.0 / cfg.steps_per_halving.max(1) as f64);
    let mut d = Descent::start(param, angle, cfg);
    while d.h * factor > h {
        d.advance(d.h * factor)?;
    }
    if d.h != h {
        d.advance(h)?;
    }
    Ok(d.z)
}

/// The cycle of rays landing at the repelling fixed point α.
///
/// Candidates are the rotation-number cycles of period `2..=q_max`, tried in
/// order of increasing period; the first whose rays all land at α wins.
pub fn alpha_ray_cycle(param: &ParameterPoint, cfg: &RayConfig) -> Result<Vec<Angle>> {
    if !param.alpha_repelling {
        return Err(Error::AlphaNotRepelling {
            multiplier_abs: param.alpha_multiplier.norm(),
        });
    }
    let lands_at_alpha = |angle: Angle| -> bool {
        match trace_external_ray_with(param, angle, 1.0, 0.0, cfg) {
            Ok(RayTrace {
                landing_estimate: Some(z),
                ..
            }) => (z - param.alpha).norm() < cfg.landing_tol,
            _ => false,
        }
    };
    for (p, q) in rotation_numbers(cfg.q_max) {
        let cycle = rotation_cycle(p, q)?;
        if lands_at_alpha(cycle[0]) && cycle[1..].iter().all(|&a| lands_at_alpha(a)) {
            return Ok(cycle);
        }
    }
    Err(Error::NoLandingCycleFound { q_max: cfg.q_max })
}

/// Relative mismatch between the potential of a sample and its nominal value.
pub fn potential_error(param: &ParameterPoint, sample: &RaySample) -> f64 {
    let g = green_potential(param.c, sample.point).value;
    (g - sample.potential).abs() / sample.potential
}
