//! Analytic formulas and Monte-Carlo checks for the sampling arguments,
//! plus calculators for the observation-count bounds reported in results.
//!
//! Integer-input combinatorics are exact rationals; floats appear only at
//! the reporting boundary.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{AmcError, Result};

#[cfg(test)]
fn q(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn ratio(a: u64, b: u64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn check_km(m: u64, k: u64) -> Result<()> {
    if k == 0 || k > m {
        return Err(AmcError::InvalidParameter(format!("need 1 <= k <= m, got k = {k}, m = {m}")));
    }
    Ok(())
}

/// Mean position of the first one in a uniformly random length-`m` binary
/// string with exactly `k` ones: (m+1)/(k+1).
pub fn expected_first_one_position(m: u64, k: u64) -> Result<BigRational> {
    check_km(m, k)?;
    Ok(ratio(m + 1, k + 1))
}

/// P(first one lies beyond position `a`) = C(m−a, k)/C(m, k); zero for a > m−k.
pub fn first_one_tail(m: u64, k: u64, a: u64) -> Result<BigRational> {
    check_km(m, k)?;
    if a > m - k {
        return Ok(BigRational::zero());
    }
    Ok(BigRational::new(binomial(m - a, k), binomial(m, k)))
}

/// Factored negative binomial term C(N−1, r−1)·p^r·q^(N−r), with p = k/m.
#[derive(Clone, Debug, PartialEq)]
pub struct TauTerm {
    pub binom: BigInt,
    pub p: BigRational,
    pub p_power: u64,
    pub q_power: u64,
}

impl TauTerm {
    pub fn new(k: u64, m: u64, r: u64, big_n: u64) -> Result<Self> {
        check_km(m, k)?;
        if r == 0 || big_n < r {
            return Err(AmcError::InvalidParameter(format!("need N >= r >= 1, got N = {big_n}, r = {r}")));
        }
        Ok(Self { binom: binomial(big_n - 1, r - 1), p: ratio(k, m), p_power: r, q_power: big_n - r })
    }

    /// `self / other`, cancelling the shared powers before expanding.
    pub fn ratio_to(&self, other: &TauTerm) -> BigRational {
        assert_eq!(self.p, other.p, "terms must share p");
        let qv = BigRational::one() - &self.p;
        let pow = |x: &BigRational, e: i64| -> BigRational {
            if e >= 0 {
                num_traits::pow(x.clone(), e as usize)
            } else {
                num_traits::pow(x.recip(), (-e) as usize)
            }
        };
        let dp = self.p_power as i64 - other.p_power as i64;
        let dq = self.q_power as i64 - other.q_power as i64;
        BigRational::new(self.binom.clone(), other.binom.clone()) * pow(&self.p, dp) * pow(&qv, dq)
    }

    /// Exact value; expensive for large N.
    pub fn value(&self) -> BigRational {
        let qv = BigRational::one() - &self.p;
        BigRational::from_integer(self.binom.clone())
            * num_traits::pow(self.p.clone(), self.p_power as usize)
            * num_traits::pow(qv, self.q_power as usize)
    }
}

/// Probability that the r-th success of Bernoulli(k/m) trials lands on trial N.
pub fn tau_pmf(k: u64, m: u64, r: u64, big_n: u64) -> Result<f64> {
    TauTerm::new(k, m, r, big_n)?;
    let p = k as f64 / m as f64;
    if p == 1.0 {
        return Ok(if big_n == r { 1.0 } else { 0.0 });
    }
    let ln_binom: f64 = (1..r).map(|i| ((big_n - r + i) as f64 / i as f64).ln()).sum();
    Ok((ln_binom + r as f64 * p.ln() + (big_n - r) as f64 * (1.0 - p).ln()).exp())
}

pub fn tau_pmf_exact(k: u64, m: u64, r: u64, big_n: u64) -> Result<BigRational> {
    Ok(TauTerm::new(k, m, r, big_n)?.value())
}

/// τ(N+1)/τ(N) from the factored terms.
pub fn tau_ratio(k: u64, m: u64, r: u64, big_n: u64) -> Result<BigRational> {
    let next = TauTerm::new(k, m, r, big_n + 1)?;
    let cur = TauTerm::new(k, m, r, big_n)?;
    Ok(next.ratio_to(&cur))
}

/// Closed form of the successive ratio: N/(N−r+1)·(1−k/m).
pub fn tau_ratio_closed_form(k: u64, m: u64, r: u64, big_n: u64) -> BigRational {
    ratio(big_n, big_n - r + 1) * (BigRational::one() - ratio(k, m))
}

/// Σ_{N≥r} τ(N), truncated once the geometric tail bound drops below `tol`.
/// Returns the partial sum and the bound on what was left out.
pub fn tau_total_mass(k: u64, m: u64, r: u64, tol: f64) -> Result<(f64, f64)> {
    check_km(m, k)?;
    let p = k as f64 / m as f64;
    let threshold = ((2.0 * m as f64 / k as f64 + 1.0) * r as f64).ceil() as u64;
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut big_n = r;
    loop {
        let t = tau_pmf(k, m, r, big_n)?;
        // Kahan summation
        let y = t - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
        if big_n > threshold {
            // past the threshold successive ratios stay below 1 − p/2
            let tail = tau_pmf(k, m, r, big_n + 1)? / (p / 2.0);
            if tail < tol {
                return Ok((sum, tail));
            }
        }
        big_n += 1;
    }
}

/// Empirical first-one distribution of the switch process in which step
/// `s` (1-based) switches with probability k/(m−s+1).
#[derive(Clone, Debug, Serialize)]
pub struct FirstOneStats {
    pub trials: u64,
    pub mean: f64,
    /// `tail[a]` = fraction of trials with first one beyond position `a`.
    pub tail: Vec<f64>,
}

const MC_CHUNK: u64 = 10_000;

pub fn monte_carlo_detection(m: u64, k: u64, trials: u64, seed: u64) -> Result<FirstOneStats> {
    check_km(m, k)?;
    if trials == 0 {
        return Err(AmcError::InvalidParameter("need at least one trial".into()));
    }
    let chunks = trials.div_ceil(MC_CHUNK);
    let hist: Vec<u64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let count = MC_CHUNK.min(trials - c * MC_CHUNK);
            let mut h = vec![0u64; m as usize + 1];
            for _ in 0..count {
                let mut pos = m;
                for s in 1..=m {
                    let remaining = m - s + 1;
                    if remaining <= k || rng.random::<f64>() < k as f64 / remaining as f64 {
                        pos = s;
                        break;
                    }
                }
                h[pos as usize] += 1;
            }
            h
        })
        .reduce(
            || vec![0u64; m as usize + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let total = trials as f64;
    let mean = hist.iter().enumerate().map(|(p, &c)| p as f64 * c as f64).sum::<f64>() / total;
    let mut tail = vec![0.0; m as usize + 1];
    let mut above = trials;
    for a in 0..=m as usize {
        above -= hist[a];
        tail[a] = above as f64 / total;
    }
    Ok(FirstOneStats { trials, mean, tail })
}

/// Observation-count bound for ERR and EREI, with both branches of the min.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CountBound {
    pub informative: f64,
    pub coherent_branch: f64,
    pub incoherent_branch: f64,
    pub total: f64,
}

fn check_bound_args(m: usize, n: usize, r: usize, psi_u: usize, psi_v: usize, eps: f64) -> Result<()> {
    if m == 0 || n == 0 || r == 0 || psi_u == 0 || psi_v == 0 {
        return Err(AmcError::InvalidParameter("bound parameters must be positive".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(AmcError::InvalidParameter(format!("ε must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// (m+n−r)r + min(2(mn/ψU)ln(r/ε), (2m/ψU)(r+2+ln(1/ε))·n/ψV).
pub fn err_bound(m: usize, n: usize, r: usize, psi_u: usize, psi_v: usize, eps: f64) -> Result<CountBound> {
    check_bound_args(m, n, r, psi_u, psi_v, eps)?;
    let (mf, nf, rf) = (m as f64, n as f64, r as f64);
    let informative = (mf + nf - rf) * rf;
    let coherent_branch = 2.0 * mf * nf / psi_u as f64 * (rf / eps).ln();
    let incoherent_branch = 2.0 * mf / psi_u as f64 * (rf + 2.0 + (1.0 / eps).ln()) * nf / psi_v as f64;
    Ok(CountBound {
        informative,
        coherent_branch,
        incoherent_branch,
        total: informative + coherent_branch.min(incoherent_branch),
    })
}

pub fn erei_bound(m: usize, n: usize, r: usize, psi_u: usize, psi_v: usize, eps: f64) -> Result<CountBound> {
    err_bound(m, n, r, psi_u, psi_v, eps)
}

/// ERRE count bound (adds T·n) and failure probability ε + exp(−T·ψU·ψV/m).
pub fn erre_bound(
    m: usize,
    n: usize,
    r: usize,
    psi_u: usize,
    psi_v: usize,
    eps: f64,
    t: usize,
) -> Result<(f64, f64)> {
    let b = err_bound(m, n, r, psi_u, psi_v, eps)?;
    let failure = eps + (-(t as f64) * psi_u as f64 * psi_v as f64 / m as f64).exp();
    Ok((b.total + (t * n) as f64, failure))
}

/// m·r + (n−r)·d.
pub fn ercs_count(m: usize, n: usize, r: usize, d: usize) -> usize {
    m * r + (n - r) * d
}

/// Unclamped LREBN sample size 72μr·ln²(1/δ) + 8mθ²·ln(r/δ).
pub fn lrebn_d_raw(mu: f64, r: usize, delta: f64, theta: f64, m: usize) -> f64 {
    let l = (1.0 / delta).ln();
    72.0 * mu * r as f64 * l * l + 8.0 * m as f64 * theta * theta * (r as f64 / delta).ln()
}

/// LREBN sample size rounded up and clamped to [1, m].
pub fn lrebn_d(mu: f64, r: usize, delta: f64, theta: f64, m: usize) -> usize {
    crate::completion::clamp_sample_size(lrebn_d_raw(mu, r, delta, theta, m), m)
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;

    /// Brute force over all strings of length m with k ones.
    fn brute_first_one(m: u64, k: u64) -> (BigRational, Vec<BigRational>) {
        let mut total = BigRational::zero();
        let mut count = 0u64;
        let mut beyond = vec![0u64; m as usize + 1];
        for ones in (1..=m).combinations(k as usize) {
            let first = ones[0];
            total += q(first);
            count += 1;
            for (a, b) in beyond.iter_mut().enumerate() {
                if first > a as u64 {
                    *b += 1;
                }
            }
        }
        (total / q(count), beyond.into_iter().map(|b| ratio(b, count)).collect())
    }

    #[test]
    fn first_one_position() {
        assert_eq!(expected_first_one_position(5, 1).unwrap(), q(3));
        assert_eq!(expected_first_one_position(9, 9).unwrap(), q(1));
        assert_eq!(expected_first_one_position(6, 2).unwrap(), ratio(7, 3));
        for m in 1..9 {
            for k in 1..=m {
                let (mean, tails) = brute_first_one(m, k);
                assert_eq!(expected_first_one_position(m, k).unwrap(), mean);
                for a in 0..=m {
                    assert_eq!(first_one_tail(m, k, a).unwrap(), tails[a as usize], "m={m} k={k} a={a}");
                }
            }
        }
        assert!(expected_first_one_position(3, 0).is_err());
    }

    #[test]
    fn tail_values() {
        assert_eq!(first_one_tail(6, 2, 0).unwrap(), q(1));
        assert_eq!(first_one_tail(6, 2, 2).unwrap(), ratio(6, 15));
        assert_eq!(first_one_tail(6, 2, 5).unwrap(), q(0));
        for (m, k) in [(20u64, 4u64), (30, 5), (12, 3), (40, 8)] {
            let a = 2 * m / k;
            assert!(first_one_tail(m, k, a).unwrap() < ratio(1, 2));
        }
    }

    #[test]
    fn tau_basics() {
        assert!((tau_pmf(3, 30, 1, 1).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(tau_pmf_exact(3, 30, 1, 1).unwrap(), ratio(1, 10));
        let exact = to_f64(&tau_pmf_exact(3, 30, 4, 25).unwrap());
        assert!((tau_pmf(3, 30, 4, 25).unwrap() - exact).abs() < 1e-15);
        let (sum, tail) = tau_total_mass(3, 30, 4, 1e-13).unwrap();
        assert!((sum - 1.0).abs() < 1e-10 && tail < 1e-13);
    }

    #[test]
    fn tau_ratio_identity_small() {
        for n in 4..200 {
            assert_eq!(tau_ratio(3, 30, 4, n).unwrap(), tau_ratio_closed_form(3, 30, 4, n));
            assert_eq!(
                tau_ratio(3, 30, 4, n).unwrap(),
                tau_pmf_exact(3, 30, 4, n + 1).unwrap() / tau_pmf_exact(3, 30, 4, n).unwrap()
            );
        }
    }

    #[test]
    fn tau_ratio_bounds_past_threshold() {
        for (k, m, r) in [(3u64, 30u64, 4u64), (1, 10, 2), (5, 12, 3), (2, 50, 6)] {
            let start = (2 * m / k + 1) * r + 1;
            let lo = BigRational::one() - ratio(k, m);
            let hi = BigRational::one() - ratio(k, 2 * m);
            for n in start..start + 500 {
                let rt = tau_ratio(k, m, r, n).unwrap();
                assert!(lo < rt && rt < hi, "k={k} m={m} r={r} N={n}");
            }
        }
    }

    #[test]
    fn one_over_n_identity() {
        for (k, m, r) in [(3u64, 30u64, 4u64), (1, 10, 2), (5, 12, 3), (2, 20, 1)] {
            for n in 1..300u64 {
                let big_n = 2 * m / k * (r + 1) + n;
                assert!(tau_pmf(k, m, r, big_n).unwrap() <= 1.0 / n as f64, "k={k} m={m} r={r} n={n}");
            }
        }
    }

    #[test]
    fn monte_carlo_matches() {
        let s = monte_carlo_detection(20, 3, 100_000, 7).unwrap();
        assert!((s.mean - 21.0 / 4.0).abs() < 0.01 * 21.0 / 4.0);
        let s = monte_carlo_detection(7, 7, 1000, 1).unwrap();
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.tail[1], 0.0);
        let again = monte_carlo_detection(20, 3, 100_000, 7).unwrap();
        assert_eq!(again.tail, monte_carlo_detection(20, 3, 100_000, 7).unwrap().tail);
    }

    #[test]
    fn bounds() {
        let b = err_bound(40, 60, 4, 37, 57, 0.1).unwrap();
        assert_eq!(b.informative, 384.0);
        assert!(b.incoherent_branch < b.coherent_branch);
        assert_eq!(b.total, 384.0 + b.incoherent_branch);
        let (_, fail) = erre_bound(30, 30, 3, 28, 28, 0.1, 3).unwrap();
        assert!(fail <= 0.2);
        assert_eq!(ercs_count(30, 40, 5, 5), 325);
        let l = (1.0f64 / 0.05).ln();
        assert_eq!(lrebn_d(1.5, 3, 0.05, 0.0, 1_000_000), (72.0 * 1.5 * 3.0 * l * l).ceil() as usize);
        assert_eq!(lrebn_d(1.5, 3, 0.05, 0.0, 100), 100);
        assert!(err_bound(3, 3, 1, 1, 1, 1.5).is_err());
    }
}
