//! Probability laws on the non-negative integers.
//!
//! [`LatticeLaw`] carries exact PGF algebra (evaluation and derivatives of any
//! order), factorial moments, materialization to a truncated pmf, convolution
//! powers and exact sampling. Offspring laws, root laws of the size-divisible
//! control term and immigration laws are all lattice laws.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Geometric, Poisson};

use crate::error::{Error, Result};
use crate::scalar::{falling, pow_count, rising, Real};

/// Parametric laws are materialized up to this cumulative mass.
pub const MATERIALIZE_TAIL: f64 = 1e-12;

/// Largest tail mass a convolution power may drop.
pub const CONVOLUTION_TAIL_LIMIT: f64 = 1e-9;

/// Poisson rates above this are refused by the samplers: draws would no longer
/// be exact integers in `f64`.
pub const MAX_POISSON_RATE: f64 = 4.5e15;

/// Explicit laws with at most this many support points are summed through a
/// multinomial draw instead of one draw per copy.
const MULTINOMIAL_SUPPORT: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum LatticeLaw<T> {
    /// Point mass at `n`.
    Dirac(u64),
    Bernoulli(T),
    Binomial {
        n: u64,
        p: T,
    },
    Poisson(T),
    /// Number of failures before the first success, success probability `p`.
    Geometric(T),
    /// Number of failures before the `r`-th success; mean `r (1-p) / p`.
    NegativeBinomial {
        r: T,
        p: T,
    },
    /// Finite pmf indexed from 0.
    Explicit(Vec<T>),
}

fn check_probability<T: Real>(what: &'static str, p: T) -> Result<()> {
    if p >= T::zero() && p <= T::one() {
        Ok(())
    } else {
        Err(Error::domain(what, p.as_f64(), "[0, 1]"))
    }
}

fn check_success_probability<T: Real>(what: &'static str, p: T) -> Result<()> {
    if p > T::zero() && p <= T::one() {
        Ok(())
    } else {
        Err(Error::domain(what, p.as_f64(), "(0, 1]"))
    }
}

impl<T: Real> LatticeLaw<T> {
    pub fn dirac(n: u64) -> Self {
        LatticeLaw::Dirac(n)
    }

    pub fn bernoulli(p: T) -> Result<Self> {
        Self::Bernoulli(p).validated()
    }

    pub fn binomial(n: u64, p: T) -> Result<Self> {
        Self::Binomial { n, p }.validated()
    }

    pub fn poisson(rate: T) -> Result<Self> {
        Self::Poisson(rate).validated()
    }

    pub fn geometric(p: T) -> Result<Self> {
        Self::Geometric(p).validated()
    }

    pub fn negative_binomial(r: T, p: T) -> Result<Self> {
        Self::NegativeBinomial { r, p }.validated()
    }

    pub fn explicit(pmf: Vec<T>) -> Result<Self> {
        Self::Explicit(pmf).validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Checks the parameter domains of the variant.
    pub fn validate(&self) -> Result<()> {
        match self {
            LatticeLaw::Dirac(_) => Ok(()),
            LatticeLaw::Bernoulli(p) => check_probability("bernoulli p", *p),
            LatticeLaw::Binomial { n, p } => {
                if *n == 0 {
                    return Err(Error::domain("binomial n", 0.0, "positive integer"));
                }
                check_probability("binomial p", *p)
            }
            LatticeLaw::Poisson(rate) => {
                if *rate >= T::zero() && rate.as_f64() <= MAX_POISSON_RATE {
                    Ok(())
                } else {
                    Err(Error::domain("poisson rate", rate.as_f64(), "[0, 4.5e15]"))
                }
            }
            LatticeLaw::Geometric(p) => check_success_probability("geometric p", *p),
            LatticeLaw::NegativeBinomial { r, p } => {
                if !(*r > T::zero() && r.is_finite()) {
                    return Err(Error::domain("negative binomial r", r.as_f64(), "(0, inf)"));
                }
                check_success_probability("negative binomial p", *p)
            }
            LatticeLaw::Explicit(pmf) => {
                if pmf.is_empty() {
                    return Err(Error::InvalidParameter("explicit pmf is empty".into()));
                }
                if let Some((i, v)) = pmf
                    .iter()
                    .enumerate()
                    .find(|(_, v)| !(**v >= T::zero() && v.is_finite()))
                {
                    return Err(Error::InvalidParameter(format!(
                        "explicit pmf entry {i} = {v} is not a probability"
                    )));
                }
                let total = pmf.iter().fold(T::zero(), |acc, v| acc + *v);
                if (total - T::one()).abs() > T::normalization_tol() {
                    return Err(Error::InvalidParameter(format!("explicit pmf sums to {total}, not 1")));
                }
                Ok(())
            }
        }
    }

    /// `E[s^Y]` for `s` in `[0, 1]`; exactly 1 at `s = 1`.
    pub fn pgf_eval(&self, s: T) -> Result<T> {
        check_unit("s", s)?;
        if s == T::one() {
            return Ok(T::one());
        }
        Ok(self.pgf_raw(s).max(T::zero()).min(T::one()))
    }

    fn pgf_raw(&self, s: T) -> T {
        let one = T::one();
        match self {
            LatticeLaw::Dirac(n) => pow_count(s, *n),
            LatticeLaw::Bernoulli(p) => one - *p + *p * s,
            LatticeLaw::Binomial { n, p } => binomial_base_power(*p, s, *n),
            LatticeLaw::Poisson(rate) => (*rate * (s - one)).exp(),
            LatticeLaw::Geometric(p) => *p / (one - (one - *p) * s),
            LatticeLaw::NegativeBinomial { r, p } => (*p / (one - (one - *p) * s)).powf(*r),
            LatticeLaw::Explicit(pmf) => pmf.iter().rev().fold(T::zero(), |acc, c| acc * s + *c),
        }
    }

    /// Derivative of the PGF of the given order at `s` in `[0, 1]`; at `s = 1`
    /// this is the left derivative, i.e. the factorial moment.
    pub fn pgf_derivative(&self, s: T, order: u32) -> Result<T> {
        check_unit("s", s)?;
        if order == 0 {
            return self.pgf_eval(s);
        }
        let one = T::one();
        let k = T::from_count(u64::from(order));
        let value = match self {
            LatticeLaw::Dirac(n) => {
                if u64::from(order) > *n {
                    T::zero()
                } else {
                    falling(T::from_count(*n), order) * pow_count(s, *n - u64::from(order))
                }
            }
            LatticeLaw::Bernoulli(p) => {
                if order == 1 {
                    *p
                } else {
                    T::zero()
                }
            }
            LatticeLaw::Binomial { n, p } => {
                if u64::from(order) > *n {
                    T::zero()
                } else {
                    falling(T::from_count(*n), order)
                        * p.powi(order as i32)
                        * binomial_base_power(*p, s, *n - u64::from(order))
                }
            }
            LatticeLaw::Poisson(rate) => rate.powi(order as i32) * (*rate * (s - one)).exp(),
            LatticeLaw::Geometric(p) => negbin_derivative(one, *p, s, order, k),
            LatticeLaw::NegativeBinomial { r, p } => negbin_derivative(*r, *p, s, order, k),
            LatticeLaw::Explicit(pmf) => pmf
                .iter()
                .enumerate()
                .skip(order as usize)
                .rev()
                .fold(T::zero(), |acc, (i, c)| {
                    acc * s + falling(T::from_count(i as u64), order) * *c
                }),
        };
        Ok(value)
    }

    /// Left derivative of the PGF at 1: the mean for order 1, `E[Y(Y-1)]` for
    /// order 2. A divergent moment is reported as `+inf`.
    pub fn factorial_moment(&self, order: u32) -> Result<T> {
        if !(1..=2).contains(&order) {
            return Err(Error::domain("factorial moment order", order, "1 or 2"));
        }
        self.pgf_derivative(T::one(), order)
    }

    /// The pmf of an `Explicit` law.
    pub fn pmf(&self) -> Option<&[T]> {
        match self {
            LatticeLaw::Explicit(pmf) => Some(pmf),
            _ => None,
        }
    }

    pub fn mean(&self) -> T {
        self.pgf_derivative(T::one(), 1).expect("s = 1 is in the PGF domain")
    }

    /// One exact draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            LatticeLaw::Dirac(n) => *n,
            LatticeLaw::Bernoulli(p) => u64::from(rng.random::<f64>() < p.as_f64()),
            LatticeLaw::Binomial { n, p } => sample_binomial(*n, p.as_f64(), rng),
            LatticeLaw::Poisson(rate) => sample_poisson(rate.as_f64(), rng),
            LatticeLaw::Geometric(p) => sample_geometric(p.as_f64(), rng),
            LatticeLaw::NegativeBinomial { r, p } => sample_negbin(r.as_f64(), p.as_f64(), rng),
            LatticeLaw::Explicit(pmf) => sample_inversion(pmf, rng),
        }
    }

    /// Sum of `n` independent draws, one draw at a time.
    pub fn sample_sum_direct<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> Result<u64> {
        let mut total = 0u64;
        for _ in 0..n {
            total = total
                .checked_add(self.sample(rng))
                .ok_or_else(|| Error::Overflow(format!("sum of {n} draws")))?;
        }
        Ok(total)
    }

    /// Whether [`Self::sample_sum`] replaces the `n` individual draws by a
    /// single aggregate draw.
    pub fn has_aggregate_sampler(&self) -> bool {
        match self {
            LatticeLaw::Explicit(pmf) => pmf.len() <= MULTINOMIAL_SUPPORT,
            _ => true,
        }
    }

    /// Sum of `n` independent draws using the closed-form law of the sum
    /// (binomial, Poisson, negative binomial or multinomial counts) whenever
    /// one exists; falls back to [`Self::sample_sum_direct`] otherwise.
    pub fn sample_sum<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> Result<u64> {
        if n == 0 {
            return Ok(0);
        }
        let overflow = || Error::Overflow(format!("aggregate of {n} draws from {self:?}"));
        match self {
            LatticeLaw::Dirac(v) => v.checked_mul(n).ok_or_else(overflow),
            LatticeLaw::Bernoulli(p) => Ok(sample_binomial(n, p.as_f64(), rng)),
            LatticeLaw::Binomial { n: trials, p } => {
                let trials = trials.checked_mul(n).ok_or_else(overflow)?;
                Ok(sample_binomial(trials, p.as_f64(), rng))
            }
            LatticeLaw::Poisson(rate) => {
                let rate = rate.as_f64() * n as f64;
                if rate > MAX_POISSON_RATE {
                    return Err(overflow());
                }
                Ok(sample_poisson(rate, rng))
            }
            LatticeLaw::Geometric(p) => Ok(sample_negbin(n as f64, p.as_f64(), rng)),
            LatticeLaw::NegativeBinomial { r, p } => Ok(sample_negbin(r.as_f64() * n as f64, p.as_f64(), rng)),
            LatticeLaw::Explicit(pmf) if pmf.len() <= MULTINOMIAL_SUPPORT => sample_multinomial_total(pmf, n, rng),
            LatticeLaw::Explicit(_) => self.sample_sum_direct(n, rng),
        }
    }

    /// Probability mass at `0..` up to the first index where the cumulative
    /// mass reaches `1 - MATERIALIZE_TAIL`, capped at `cap` entries. Returns the
    /// pmf and the mass left beyond it.
    pub fn materialize(&self, cap: usize) -> (Vec<T>, T) {
        let cap = cap.max(1);
        let pmf = match self {
            LatticeLaw::Dirac(n) => dirac_pmf(*n, cap),
            LatticeLaw::Bernoulli(p) => vec![T::one() - *p, *p].into_iter().take(cap).collect(),
            LatticeLaw::Binomial { n, p } => {
                let (n, p) = (*n, p.as_f64());
                if p == 0.0 {
                    dirac_pmf(0, cap)
                } else if p == 1.0 {
                    dirac_pmf(n, cap)
                } else {
                    let lq = (-p).ln_1p();
                    let log_odds = p.ln() - lq;
                    let nf = n as f64;
                    cut_pmf(cap, Some(n), nf * lq, |i| {
                        let i = i as f64;
                        ((nf - i) / (i + 1.0)).ln() + log_odds
                    })
                }
            }
            LatticeLaw::Poisson(rate) => {
                let rate = rate.as_f64();
                if rate == 0.0 {
                    dirac_pmf(0, cap)
                } else {
                    let lr = rate.ln();
                    cut_pmf(cap, None, -rate, |i| lr - ((i + 1) as f64).ln())
                }
            }
            LatticeLaw::Geometric(p) => negbin_pmf(1.0, p.as_f64(), cap),
            LatticeLaw::NegativeBinomial { r, p } => negbin_pmf(r.as_f64(), p.as_f64(), cap),
            LatticeLaw::Explicit(pmf) => pmf.iter().copied().take(cap).collect(),
        };
        let mass = pmf.iter().fold(T::zero(), |acc, v| acc + *v);
        (pmf, (T::one() - mass).max(T::zero()))
    }

    /// Exact pmf (up to truncation at `truncation` entries) of the sum of `j`
    /// independent copies; `j = 0` gives the point mass at 0.
    ///
    /// The result keeps the truncated probabilities as they are, so its mass
    /// may fall short of 1 by at most [`CONVOLUTION_TAIL_LIMIT`].
    pub fn convolve_power(&self, j: u64, truncation: usize) -> Result<LatticeLaw<T>> {
        if truncation == 0 {
            return Err(Error::domain("truncation", 0.0, "positive integer"));
        }
        if j == 0 {
            return Ok(LatticeLaw::Explicit(vec![T::one()]));
        }
        let limit = T::cast(CONVOLUTION_TAIL_LIMIT).max(T::normalization_tol());
        let (base, tail) = self.materialize(truncation);
        if tail > limit {
            return Err(Error::TruncationInsufficient {
                tail_mass: tail.as_f64(),
                limit: limit.as_f64(),
            });
        }
        let mut result = vec![T::one()];
        let mut power = base;
        let mut e = j;
        while e > 0 {
            if e & 1 == 1 {
                result = convolve_pmfs(&result, &power, truncation);
            }
            e >>= 1;
            if e > 0 {
                power = convolve_pmfs(&power, &power, truncation);
            }
        }
        let mass = result.iter().fold(T::zero(), |acc, v| acc + *v);
        let tail = (T::one() - mass).max(T::zero());
        if tail > limit {
            return Err(Error::TruncationInsufficient {
                tail_mass: tail.as_f64(),
                limit: limit.as_f64(),
            });
        }
        Ok(LatticeLaw::Explicit(result))
    }
}

fn check_unit<T: Real>(what: &'static str, s: T) -> Result<()> {
    if s >= T::zero() && s <= T::one() {
        Ok(())
    } else {
        Err(Error::domain(what, s.as_f64(), "[0, 1]"))
    }
}

/// `(1 - p + p s)^n`, through `ln_1p` so that tiny `p (1 - s)` keep their
/// relative accuracy when `n` is huge.
fn binomial_base_power<T: Real>(p: T, s: T, n: u64) -> T {
    (T::from_count(n) * (p * (s - T::one())).ln_1p()).exp()
}

fn negbin_derivative<T: Real>(r: T, p: T, s: T, order: u32, k: T) -> T {
    let q = T::one() - p;
    rising(r, order) * q.powi(order as i32) * p.powf(r) / (T::one() - q * s).powf(r + k)
}

fn dirac_pmf<T: Real>(n: u64, cap: usize) -> Vec<T> {
    let len = usize::try_from(n).map_or(cap, |n| (n + 1).min(cap));
    let mut pmf = vec![T::zero(); len];
    if let Some(slot) = usize::try_from(n).ok().and_then(|n| pmf.get_mut(n)) {
        *slot = T::one();
    }
    pmf
}

fn negbin_pmf<T: Real>(r: f64, p: f64, cap: usize) -> Vec<T> {
    if p == 1.0 {
        return dirac_pmf(0, cap);
    }
    let lq = (-p).ln_1p();
    cut_pmf(cap, None, r * p.ln(), |i| {
        let i = i as f64;
        ((r + i) / (i + 1.0)).ln() + lq
    })
}

/// Builds a pmf from `ln p(0)` and the log-ratios `ln p(i+1)/p(i)`, stopping
/// once the cumulative mass reaches `1 - MATERIALIZE_TAIL`, at the last support
/// point, or at `cap`. Summing ratios keeps every term of order one, where
/// differences of log-gamma values at large arguments lose digits.
fn cut_pmf<T: Real>(cap: usize, last: Option<u64>, log_p0: f64, log_ratio: impl Fn(u64) -> f64) -> Vec<T> {
    let mut pmf = Vec::new();
    let mut cumulative = 0.0;
    let mut log_mass = log_p0;
    let mut i = 0u64;
    while pmf.len() < cap {
        let mass = log_mass.exp();
        pmf.push(T::cast(mass));
        cumulative += mass;
        if cumulative >= 1.0 - MATERIALIZE_TAIL || last == Some(i) {
            break;
        }
        log_mass += log_ratio(i);
        i += 1;
    }
    pmf
}

/// Convolution of two pmfs, keeping the first `cap` entries.
pub(crate) fn convolve_pmfs<T: Real>(a: &[T], b: &[T], cap: usize) -> Vec<T> {
    let len = (a.len() + b.len() - 1).min(cap);
    let mut out = vec![T::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if *x == T::zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] = out[i + j] + *x * *y;
        }
    }
    out
}

fn sample_binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if p <= 0.0 || n == 0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("validated binomial parameters").sample(rng)
}

fn sample_poisson<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    let rate = rate.min(MAX_POISSON_RATE);
    let draw: f64 = Poisson::new(rate).expect("validated poisson rate").sample(rng);
    draw as u64
}

fn sample_geometric<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    Geometric::new(p).expect("validated geometric p").sample(rng)
}

/// Gamma-Poisson mixture: exact for any real `r > 0`.
fn sample_negbin<R: Rng + ?Sized>(r: f64, p: f64, rng: &mut R) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    let scale = (1.0 - p) / p;
    let intensity: f64 = Gamma::new(r, scale)
        .expect("validated negative binomial parameters")
        .sample(rng);
    sample_poisson(intensity, rng)
}

fn sample_inversion<T: Real, R: Rng + ?Sized>(pmf: &[T], rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, mass) in pmf.iter().enumerate() {
        let mass = mass.as_f64();
        if mass > 0.0 {
            last_positive = i;
        }
        cumulative += mass;
        if u < cumulative {
            return i as u64;
        }
    }
    last_positive as u64
}

/// Total of `n` draws from a small-support pmf via conditional binomials on
/// the multinomial counts.
fn sample_multinomial_total<T: Real, R: Rng + ?Sized>(pmf: &[T], n: u64, rng: &mut R) -> Result<u64> {
    let probs: Vec<f64> = pmf.iter().map(|p| p.as_f64()).collect();
    let mut suffix = vec![0.0; probs.len() + 1];
    for i in (0..probs.len()).rev() {
        suffix[i] = suffix[i + 1] + probs[i];
    }
    let last = probs.iter().rposition(|p| *p > 0.0).unwrap_or(0);
    let mut remaining = n;
    let mut total = 0u64;
    for (value, p) in probs.iter().enumerate().take(last) {
        if remaining == 0 {
            break;
        }
        let conditional = if suffix[value] > 0.0 {
            (p / suffix[value]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let count = sample_binomial(remaining, conditional, rng);
        remaining -= count;
        total = (value as u64)
            .checked_mul(count)
            .and_then(|c| total.checked_add(c))
            .ok_or_else(|| Error::Overflow(format!("aggregate of {n} draws")))?;
    }
    (last as u64)
        .checked_mul(remaining)
        .and_then(|c| total.checked_add(c))
        .ok_or_else(|| Error::Overflow(format!("aggregate of {n} draws")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;

    fn poisson_series(rate: f64, s: f64) -> f64 {
        let mut term = (-rate).exp();
        let mut sum = 0.0;
        for i in 0..200 {
            sum += term * s.powi(i);
            term *= rate / f64::from(i + 1);
        }
        sum
    }

    #[test]
    fn pgf_examples() {
        let dirac = LatticeLaw::<f64>::dirac(1);
        assert_eq!(dirac.pgf_eval(0.7).unwrap(), 0.7);
        let poisson = LatticeLaw::poisson(2.0_f64).unwrap();
        assert_eq!(poisson.pgf_eval(1.0).unwrap(), 1.0);
        let v = poisson.pgf_eval(0.5).unwrap();
        assert!((v - (-1.0_f64).exp()).abs() < 1e-15);
        assert!((v - poisson_series(2.0, 0.5)).abs() < 1e-12);
    }

    #[test]
    fn pgf_rejects_out_of_range() {
        let law = LatticeLaw::<f64>::dirac(2);
        assert!(matches!(law.pgf_eval(1.5), Err(Error::Domain { .. })));
        assert!(matches!(law.pgf_eval(-0.1), Err(Error::Domain { .. })));
        assert!(law.pgf_eval(f64::NAN).is_err());
    }

    #[test]
    fn factorial_moment_examples() {
        let dirac = LatticeLaw::<f64>::dirac(1);
        assert_eq!(dirac.factorial_moment(1).unwrap(), 1.0);
        assert_eq!(dirac.factorial_moment(2).unwrap(), 0.0);
        let coin = LatticeLaw::explicit(vec![0.5_f64, 0.5]).unwrap();
        assert_eq!(coin.factorial_moment(1).unwrap(), 0.5);
        assert!(coin.factorial_moment(3).is_err());
        assert!(coin.factorial_moment(0).is_err());
    }

    #[test]
    fn poisson_second_factorial_moment_matches_finite_sum() {
        for rate in [0.3_f64, 1.0, 4.5] {
            let law = LatticeLaw::poisson(rate).unwrap();
            // Oracle: truncated pmf by the ratio recurrence.
            let mut p = (-rate).exp();
            let mut oracle = 0.0;
            for i in 0..200u32 {
                let i = f64::from(i);
                oracle += i * (i - 1.0) * p;
                p *= rate / (i + 1.0);
            }
            let closed = law.factorial_moment(2).unwrap();
            assert!((closed - rate * rate).abs() < 1e-12);
            assert!((closed - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_form_derivatives_match_materialized_pmf() {
        let laws = [
            LatticeLaw::binomial(7, 0.3_f64).unwrap(),
            LatticeLaw::negative_binomial(2.5, 0.6).unwrap(),
            LatticeLaw::geometric(0.4).unwrap(),
            LatticeLaw::poisson(1.7).unwrap(),
            LatticeLaw::dirac(3),
        ];
        for law in laws {
            let (pmf, _) = law.materialize(10_000);
            let explicit = LatticeLaw::Explicit(pmf);
            for order in 0..4 {
                for s in [0.0, 0.25, 0.8, 1.0] {
                    let a = law.pgf_derivative(s, order).unwrap();
                    let b = explicit.pgf_derivative(s, order).unwrap();
                    // The dropped 1e-12 tail weighs in with i^3 at order 3.
                    let tol = if order < 3 { 1e-9 } else { 1e-7 };
                    assert!((a - b).abs() < tol * (1.0 + a.abs()), "{law:?} {order} {s}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn validation() {
        assert!(LatticeLaw::bernoulli(1.2_f64).is_err());
        assert!(LatticeLaw::binomial(0, 0.5_f64).is_err());
        assert!(LatticeLaw::poisson(-1.0_f64).is_err());
        assert!(LatticeLaw::geometric(0.0_f64).is_err());
        assert!(LatticeLaw::negative_binomial(0.0_f64, 0.5).is_err());
        assert!(LatticeLaw::explicit(vec![0.5_f64, 0.4]).is_err());
        assert!(LatticeLaw::explicit(vec![1.1_f64, -0.1]).is_err());
        assert!(LatticeLaw::<f64>::explicit(vec![]).is_err());
        assert!(LatticeLaw::explicit(vec![0.25_f64, 0.75]).is_ok());
    }

    #[test]
    fn sampling_examples() {
        let mut rng = StreamKey::new(1, 0, 0).rng();
        assert_eq!(LatticeLaw::<f64>::dirac(4).sample(&mut rng), 4);
        let never = LatticeLaw::bernoulli(0.0_f64).unwrap();
        assert!((0..1000).all(|_| never.sample(&mut rng) == 0));

        let poisson = LatticeLaw::poisson(3.0_f64).unwrap();
        let n = 100_000;
        let mean = (0..n).map(|_| poisson.sample(&mut rng) as f64).sum::<f64>() / n as f64;
        assert!((mean - 3.0).abs() < 3.0 * (3.0 / n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn sampling_is_reproducible() {
        let law = LatticeLaw::negative_binomial(1.5_f64, 0.3).unwrap();
        let draw = |seed| {
            let mut rng = StreamKey::new(seed, 0, 0).rng();
            (0..50).map(|_| law.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn convolve_power_examples() {
        let law = LatticeLaw::poisson(1.3_f64).unwrap();
        assert_eq!(law.convolve_power(0, 100).unwrap(), LatticeLaw::Explicit(vec![1.0]));

        let coin = LatticeLaw::explicit(vec![0.2_f64, 0.5, 0.3]).unwrap();
        assert_eq!(coin.convolve_power(1, 100).unwrap(), coin);

        let bern = LatticeLaw::bernoulli(0.3_f64).unwrap();
        let LatticeLaw::Explicit(pmf) = bern.convolve_power(5, 100).unwrap() else {
            panic!("explicit expected");
        };
        let choose = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];
        for (i, c) in choose.iter().enumerate() {
            let oracle = c * 0.3_f64.powi(i as i32) * 0.7_f64.powi(5 - i as i32);
            assert!((pmf[i] - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn convolve_power_reports_truncation() {
        let law = LatticeLaw::poisson(50.0_f64).unwrap();
        assert!(matches!(
            law.convolve_power(1, 10),
            Err(Error::TruncationInsufficient { .. })
        ));
        let small = LatticeLaw::poisson(2.0_f64).unwrap();
        assert!(matches!(
            small.convolve_power(40, 30),
            Err(Error::TruncationInsufficient { .. })
        ));
        assert!(small.convolve_power(2, 0).is_err());
    }

    #[test]
    fn aggregate_sum_overflow_detected() {
        let mut rng = StreamKey::new(1, 0, 0).rng();
        let law = LatticeLaw::<f64>::dirac(u64::MAX / 2);
        assert!(matches!(law.sample_sum(3, &mut rng), Err(Error::Overflow(_))));
        assert!(matches!(law.sample_sum_direct(3, &mut rng), Err(Error::Overflow(_))));
    }

    #[test]
    fn generic_over_f32() {
        let law = LatticeLaw::poisson(2.0_f32).unwrap();
        let v = law.pgf_eval(0.5).unwrap();
        assert!((v - (-1.0_f32).exp()).abs() < 1e-6);
        assert_eq!(law.factorial_moment(2).unwrap(), 4.0);
        let coin = LatticeLaw::explicit(vec![0.5_f32, 0.5]).unwrap();
        assert!(coin.convolve_power(3, 10).is_ok());
    }
}
