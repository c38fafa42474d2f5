//! Modified Bessel function of the first kind, order zero.
//!
//! Every Bessel argument in the visibility model is bounded by
//! `2 * eta * sqrt(mu_a * mu_b)`, which stays around 2 or below for any
//! realistic source. The power series has only positive terms, so it is
//! accurate to a few ulps well beyond that (checked out to |x| = 30).

/// Series terms are added until they fall below this fraction of the sum.
const REL_STOP: f64 = 1e-16;
const MAX_TERMS: usize = 500;

/// `I0(x) = sum_k (x/2)^(2k) / (k!)^2`.
pub fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        term *= q / (kf * kf);
        sum += term;
        if term <= REL_STOP * sum {
            break;
        }
    }
    sum
}

/// `I0(x) - 1`, accurate for small `x` where `I0(x)` rounds to one.
pub fn bessel_i0m1(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = q;
    let mut sum = q;
    for k in 2..MAX_TERMS {
        let kf = k as f64;
        term *= q / (kf * kf);
        sum += term;
        if term <= REL_STOP * sum {
            break;
        }
    }
    sum
}
