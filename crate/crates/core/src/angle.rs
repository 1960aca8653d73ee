//! Exact external angles (rationals mod 1) under the doubling map.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A rational angle `num / den` in `[0, 1)`, always stored in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Angle {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Angle {
    pub const ZERO: Angle = Angle { num: 0, den: 1 };

    /// Builds `num / den` reduced mod 1.
    pub fn new(num: u64, den: u64) -> Result<Angle> {
        if den == 0 {
            return Err(Error::InvalidArgument("angle denominator is zero".into()));
        }
        let num = num % den;
        let g = gcd(num, den);
        Ok(Angle {
            num: num / g,
            den: den / g,
        })
    }

    pub fn numerator(self) -> u64 {
        self.num
    }

    pub fn denominator(self) -> u64 {
        self.den
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// The image under `θ ↦ 2θ mod 1`.
    pub fn double(self) -> Angle {
        self.times_pow2(1)
    }

    /// `2^k θ mod 1`, computed exactly.
    pub fn times_pow2(self, k: u32) -> Angle {
        let den = self.den as u128;
        let mut num = self.num as u128;
        let mut base = 2u128 % den;
        let mut e = k;
        let mut acc = 1u128 % den;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % den;
            }
            base = base * base % den;
            e >>= 1;
        }
        num = num * acc % den;
        Angle::new(num as u64, self.den).expect("nonzero denominator")
    }

    /// Both preimages under doubling, `θ/2` and `θ/2 + 1/2`, in increasing order.
    pub fn preimages(self) -> Option<[Angle; 2]> {
        let den = self.den.checked_mul(2)?;
        Some([
            Angle::new(self.num, den).ok()?,
            Angle::new(self.num + self.den, den).ok()?,
        ])
    }

    /// `(preperiod, period)` of the angle under doubling.
    pub fn preperiod_period(self) -> (u32, u32) {
        let mut odd = self.den;
        let mut pre = 0;
        while odd.is_multiple_of(2) {
            odd /= 2;
            pre += 1;
        }
        if odd == 1 {
            return (pre, 1);
        }
        let mut r = 2u128 % odd as u128;
        let mut per = 1;
        while r != 1 {
            r = r * 2 % odd as u128;
            per += 1;
        }
        (pre, per)
    }

    /// Fractional distance from `self` to `other` going counterclockwise.
    pub fn ccw_distance(self, other: Angle) -> f64 {
        let d = other.to_f64() - self.to_f64();
        if d < 0.0 {
            d + 1.0
        } else {
            d
        }
    }
}

impl PartialOrd for Angle {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Angle {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let a = self.num as u128 * other.den as u128;
        let b = other.num as u128 * self.den as u128;
        a.cmp(&b)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Angle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Angle> {
        let bad = || Error::InvalidArgument(format!("cannot parse angle {s:?}, expected p/q"));
        let (p, q) = s.trim().split_once('/').ok_or_else(bad)?;
        let p: u64 = p.trim().parse().map_err(|_| bad())?;
        let q: u64 = q.trim().parse().map_err(|_| bad())?;
        if p >= q {
            return Err(Error::InvalidArgument(format!("angle {s} is not in [0, 1)")));
        }
        Angle::new(p, q)
    }
}

impl TryFrom<String> for Angle {
    type Error = Error;

    fn try_from(s: String) -> Result<Angle> {
        s.parse()
    }
}

impl From<Angle> for String {
    fn from(a: Angle) -> String {
        a.to_string()
    }
}

/// The doubling cycle of combinatorial rotation number `p/q`, sorted increasingly.
///
/// Doubling acts on the sorted cycle `θ_0 < … < θ_{q-1}` as `θ_i ↦ θ_{i+p mod q}`.
/// The binary digits of `θ_0` are read off the orbit of the index:
/// digit `k` is 1 exactly when `k·p mod q ≥ q − p`.
pub fn rotation_cycle(p: u32, q: u32) -> Result<Vec<Angle>> {
    if !(2..=64).contains(&q) || p == 0 || p >= q || gcd(p as u64, q as u64) != 1 {
        return Err(Error::InvalidArgument(format!(
            "rotation number {p}/{q} must be reduced with 0 < p < q <= 64"
        )));
    }
    let mut word: u64 = 0;
    for k in 0..q {
        let idx = (k as u64 * p as u64) % q as u64;
        let bit = (idx >= (q - p) as u64) as u64;
        word = (word << 1) | bit;
    }
    let den = if q == 64 { u64::MAX } else { (1u64 << q) - 1 };
    let first = Angle::new(word, den)?;
    let mut cycle: Vec<Angle> = (0..q).map(|k| first.times_pow2(k)).collect();
    cycle.sort();
    Ok(cycle)
}

/// Reduced rotation numbers `p/q` with `2 <= q <= q_max`, ordered by `q` then `p`.
pub fn rotation_numbers(q_max: u32) -> impl Iterator<Item = (u32, u32)> {
    (2..=q_max.min(64)).flat_map(|q| {
        (1..q)
            .filter(move |&p| gcd(p as u64, q as u64) == 1)
            .map(move |p| (p, q))
    })
}
