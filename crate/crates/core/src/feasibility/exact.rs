//! Exact-rational versions of the feasibility quantities.
//!
//! Decimal inputs such as `gamma = 0.99` are read as the rational `99/100`
//! (from their shortest round-trip decimal form), not as the nearest binary
//! double.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Parses the shortest decimal representation of `x` into an exact rational.
pub fn decimal(x: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::domain(format!("{x} has no rational value")));
    }
    let s = format!("{x}");
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.as_str()),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    let numer: BigInt = format!("{int_part}{frac_part}")
        .parse()
        .map_err(|e| Error::domain(format!("cannot parse {s}: {e}")))?;
    let denom = num::pow(BigInt::from(10), frac_part.len());
    let r = BigRational::new(numer, denom);
    Ok(if neg { -r } else { r })
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn check_gamma(g: &BigRational) -> Result<()> {
    if g.is_positive() && *g < BigRational::one() {
        Ok(())
    } else {
        Err(Error::domain("gamma must lie in (0, 1)"))
    }
}

/// `sum_{t=a}^{b} gamma^t` (`b = None`: infinite tail).
pub fn geometric(gamma: &BigRational, a: u64, b: Option<u64>) -> Result<BigRational> {
    check_gamma(gamma)?;
    let one = BigRational::one();
    let head = pow(gamma, a);
    let tail = match b {
        None => BigRational::zero(),
        Some(b) if b < a => return Err(Error::domain("t_end < t_start")),
        Some(b) => pow(gamma, b + 1),
    };
    Ok((head - tail) / (one - gamma))
}

/// Powers of a reduced fraction stay reduced, so no gcd is needed.
fn pow(x: &BigRational, n: u64) -> BigRational {
    let n = n as usize;
    BigRational::new_raw(num::pow(x.numer().clone(), n), num::pow(x.denom().clone(), n))
}

/// Upper bound `U` on `W_T`.
pub fn upper_bound(gamma: &BigRational, t1: u64, t2: u64, wq_max: &BigRational, wq_poor: &BigRational) -> Result<BigRational> {
    if t1 >= t2 {
        return Err(Error::domain("upper bound needs T1 < T2"));
    }
    let num = geometric(gamma, 0, Some(t2))? * wq_max - geometric(gamma, 0, Some(t1))? * wq_poor;
    let den = pow(gamma, t1) - pow(gamma, t2);
    Ok(num / den)
}

/// Lower bound `L = sum_{t>T2} gamma^t w / gamma^T2`, where `w` is `Wq_max`
/// (naive) or `Wq2` (bounded). Independent of `T2` in closed form.
pub fn lower_bound(gamma: &BigRational, t2: u64, w: &BigRational) -> Result<BigRational> {
    Ok(geometric(gamma, t2 + 1, None)? * w / pow(gamma, t2))
}

/// Exact strategy returns `(optimal, lazy, forever_naive, forever_bounded)`.
pub fn strategy_returns(
    gamma: &BigRational,
    t1: u64,
    t2: u64,
    wq_max: &BigRational,
    wq_poor: &BigRational,
    wq2: &BigRational,
    wt: &BigRational,
) -> Result<[BigRational; 4]> {
    let opt = geometric(gamma, 0, Some(t2))? * wq_max + pow(gamma, t2) * wt;
    let lazy = geometric(gamma, 0, Some(t1))? * wq_poor + pow(gamma, t1) * wt;
    let forever_naive = geometric(gamma, 0, None)? * wq_max;
    let forever_bounded = geometric(gamma, 0, Some(t2))? * wq_max + geometric(gamma, t2 + 1, None)? * wq2;
    Ok([opt, lazy, forever_naive, forever_bounded])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseEntry {
    pub t2: u64,
    pub lower_naive: f64,
    pub upper: f64,
    /// `U - L` evaluated exactly, then rounded for display.
    pub gap: f64,
    pub naive_empty: bool,
}

/// Feasibility when the constraint must hold for every `Wq_poor < Wq_max`.
///
/// `U` decreases toward `Wq_poor -> Wq_max`, so the binding value is `U`
/// evaluated at `Wq_poor = Wq_max`. Naive ranges are the open intervals
/// `(L, U)`; bounded ranges are `(max(0, L_bounded), U)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseSweep {
    pub gamma: String,
    pub entries: Vec<WorstCaseEntry>,
    pub naive_intersection_empty: bool,
    /// `(lo, hi)` of the bounded intersection, `None` when empty.
    pub bounded_intersection: Option<(f64, f64)>,
    pub bounded_upper_over_wq_max: f64,
}

pub fn worst_case_sweep(
    gamma: f64,
    t1: u64,
    t2_values: impl IntoIterator<Item = u64>,
    wq_max: f64,
    wq2: f64,
) -> Result<WorstCaseSweep> {
    let g = decimal(gamma)?;
    check_gamma(&g)?;
    let wq = decimal(wq_max)?;
    let w2 = decimal(wq2)?;
    let mut entries = Vec::new();
    let mut naive_lo: Option<BigRational> = None;
    let mut hi: Option<BigRational> = None;
    let mut bounded_lo = BigRational::zero();
    for t2 in t2_values {
        let u = upper_bound(&g, t1, t2, &wq, &wq)?;
        let l = lower_bound(&g, t2, &wq)?;
        let lb = lower_bound(&g, t2, &w2)?;
        let gap = &u - &l;
        entries.push(WorstCaseEntry {
            t2,
            lower_naive: to_f64(&l),
            upper: to_f64(&u),
            gap: to_f64(&gap),
            naive_empty: !gap.is_positive(),
        });
        let l_pos = if l.is_positive() { l } else { BigRational::zero() };
        naive_lo = Some(match naive_lo {
            Some(cur) if cur > l_pos => cur,
            _ => l_pos,
        });
        if lb > bounded_lo {
            bounded_lo = lb;
        }
        hi = Some(match hi {
            Some(cur) if cur < u => cur,
            _ => u,
        });
    }
    let (naive_lo, hi) = match (naive_lo, hi) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::domain("empty T2 sweep")),
    };
    let bounded_intersection = (bounded_lo < hi).then(|| (to_f64(&bounded_lo), to_f64(&hi)));
    Ok(WorstCaseSweep {
        gamma: g.to_string(),
        entries,
        naive_intersection_empty: naive_lo >= hi,
        bounded_intersection,
        bounded_upper_over_wq_max: to_f64(&(hi / wq)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn decimal_parsing() {
        assert_eq!(decimal(0.99).unwrap(), r(99, 100));
        assert_eq!(decimal(-1.0).unwrap(), r(-1, 1));
        assert_eq!(decimal(28.71).unwrap(), r(2871, 100));
        assert_eq!(decimal(1000.0).unwrap(), r(1000, 1));
        assert!(decimal(f64::NAN).is_err());
    }

    #[test]
    fn forever_is_exactly_2900() {
        let g = r(99, 100);
        let [_, _, f, _] = strategy_returns(&g, 1, 25, &r(29, 1), &r(2871, 100), &r(-1, 1), &r(1000, 1)).unwrap();
        assert_eq!(f, r(2900, 1));
    }

    #[test]
    fn geometric_matches_sum() {
        let g = r(9, 10);
        let mut s = BigRational::zero();
        let mut p = pow(&g, 3);
        for _ in 3..=12 {
            s += &p;
            p *= &g;
        }
        assert_eq!(geometric(&g, 3, Some(12)).unwrap(), s);
    }

    #[test]
    fn worst_case_upper_equals_naive_lower() {
        let g = r(99, 100);
        for t2 in [2u64, 25, 200] {
            let u = upper_bound(&g, 1, t2, &r(29, 1), &r(29, 1)).unwrap();
            let l = lower_bound(&g, t2, &r(29, 1)).unwrap();
            assert_eq!(u, l);
            assert_eq!(l, r(2871, 1));
        }
    }

    #[test]
    fn sweep_verdicts() {
        let s = worst_case_sweep(0.99, 1, 2..=200, 29.0, -1.0).unwrap();
        assert!(s.naive_intersection_empty);
        assert!(s.entries.iter().all(|e| e.naive_empty));
        let (lo, hi) = s.bounded_intersection.unwrap();
        assert_eq!(lo, 0.0);
        assert_eq!(hi, 2871.0);
        assert_eq!(s.bounded_upper_over_wq_max, 99.0);
    }
}
