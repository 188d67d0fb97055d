//! Control variables split into a size-divisible term and an immigration term.
//!
//! For each scale `k` and population size `j`, the control is
//! `phi = varphi + psi` with `varphi` the sum of `j` independent copies of a
//! root law (identically 0 when `j = 0`) and `psi` an independent immigration
//! draw. The control PGF therefore factors as `c(s) = f(s)^j h(s)`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{convolve_pmfs, LatticeLaw};
use crate::scalar::{pow_count, Real};

/// Law for a given `(k, j)`.
pub type LawMap<T> = Arc<dyn Fn(u64, u64) -> Result<LatticeLaw<T>> + Send + Sync>;

/// Root law in the limit `j -> inf` for a fixed `k`.
pub type RootLimit<T> = Arc<dyn Fn(u64) -> Result<LatticeLaw<T>> + Send + Sync>;

/// Analytically known limits of the root-law moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeclaredLimits<T> {
    pub rho0: T,
    pub sigma0: T,
}

/// One draw of the control split into its two parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlDraw {
    pub divisible_part: u64,
    pub immigration_part: u64,
    pub total: u64,
}

#[derive(Clone)]
pub struct ControlFamily<T> {
    name: String,
    root: LawMap<T>,
    immigration: LawMap<T>,
    root_limit: Option<RootLimit<T>>,
    declared: Option<DeclaredLimits<T>>,
    aggregate_divisible: bool,
}

impl<T> fmt::Debug for ControlFamily<T>
where
    T: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlFamily")
            .field("name", &self.name)
            .field("declared", &self.declared)
            .field("aggregate_divisible", &self.aggregate_divisible)
            .finish_non_exhaustive()
    }
}

impl<T: Real> ControlFamily<T> {
    pub fn new(
        name: impl Into<String>,
        root: impl Fn(u64, u64) -> Result<LatticeLaw<T>> + Send + Sync + 'static,
        immigration: impl Fn(u64, u64) -> Result<LatticeLaw<T>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            root: Arc::new(root),
            immigration: Arc::new(immigration),
            root_limit: None,
            declared: None,
            aggregate_divisible: false,
        }
    }

    /// Same root and immigration law for every `(k, j)`.
    pub fn fixed(name: impl Into<String>, root: LatticeLaw<T>, immigration: LatticeLaw<T>) -> Self {
        Self::new(name, move |_, _| Ok(root.clone()), move |_, _| Ok(immigration.clone()))
    }

    /// `varphi(j) = j`, no immigration: the control is the identity.
    pub fn identity() -> Self {
        Self::fixed("identity", LatticeLaw::Dirac(1), LatticeLaw::Dirac(0)).with_declared_limits(DeclaredLimits {
            rho0: T::zero(),
            sigma0: T::zero(),
        })
    }

    pub fn with_declared_limits(mut self, limits: DeclaredLimits<T>) -> Self {
        self.declared = Some(limits);
        self
    }

    pub fn with_root_limit(mut self, limit: impl Fn(u64) -> Result<LatticeLaw<T>> + Send + Sync + 'static) -> Self {
        self.root_limit = Some(Arc::new(limit));
        self
    }

    /// Replaces the immigration map, keeping everything else.
    pub fn with_immigration(
        mut self,
        immigration: impl Fn(u64, u64) -> Result<LatticeLaw<T>> + Send + Sync + 'static,
    ) -> Self {
        self.immigration = Arc::new(immigration);
        self
    }

    /// Opt in to drawing the divisible part as one aggregate variate when the
    /// `j`-fold convolution of the root law has a closed form.
    pub fn with_aggregate_sampling(mut self, enabled: bool) -> Self {
        self.aggregate_divisible = enabled;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn declared_limits(&self) -> Option<DeclaredLimits<T>> {
        self.declared
    }

    /// The law with PGF `f_k^(j)`. For `j = 0` the divisible part is null and
    /// the point mass at 0 is returned.
    pub fn root_law(&self, k: u64, j: u64) -> Result<LatticeLaw<T>> {
        if j == 0 {
            return Ok(LatticeLaw::Dirac(0));
        }
        let law = (self.root)(k, j)?;
        law.validate()?;
        Ok(law)
    }

    /// Root law as `j -> inf`, when the family knows it.
    pub fn root_law_limit(&self, k: u64) -> Option<Result<LatticeLaw<T>>> {
        self.root_limit.as_ref().map(|f| f(k))
    }

    /// The law with PGF `h_k^(j)`.
    pub fn immigration_law(&self, k: u64, j: u64) -> Result<LatticeLaw<T>> {
        let law = (self.immigration)(k, j)?;
        law.validate()?;
        Ok(law)
    }

    /// `c_k^(j)(s) = f_k^(j)(s)^j h_k^(j)(s)`, and `h_k^(0)(s)` for `j = 0`.
    pub fn control_pgf(&self, k: u64, j: u64, s: T) -> Result<T> {
        let h = self.immigration_law(k, j)?.pgf_eval(s)?;
        if j == 0 {
            return Ok(h);
        }
        let f = self.root_law(k, j)?.pgf_eval(s)?;
        Ok(pow_count(f, j) * h)
    }

    /// Mean of the control: `j f'(1) + h'(1)`.
    pub fn control_mean(&self, k: u64, j: u64) -> Result<T> {
        let imm = self.immigration_law(k, j)?.mean();
        if j == 0 {
            return Ok(imm);
        }
        Ok(T::from_count(j) * self.root_law(k, j)?.mean() + imm)
    }

    pub fn sample_control<R: Rng + ?Sized>(&self, k: u64, j: u64, rng: &mut R) -> Result<ControlDraw> {
        let divisible_part = if j == 0 {
            0
        } else {
            let root = self.root_law(k, j)?;
            if self.aggregate_divisible {
                root.sample_sum(j, rng)?
            } else {
                root.sample_sum_direct(j, rng)?
            }
        };
        let immigration_part = self.immigration_law(k, j)?.sample(rng);
        let total = divisible_part
            .checked_add(immigration_part)
            .ok_or_else(|| Error::Overflow(format!("control total at k={k}, j={j}")))?;
        Ok(ControlDraw {
            divisible_part,
            immigration_part,
            total,
        })
    }

    /// Exact pmf of the control total (up to truncation): the `j`-fold root
    /// convolution convolved once more with the immigration law.
    pub fn control_law(&self, k: u64, j: u64, truncation: usize) -> Result<LatticeLaw<T>> {
        let divisible = self.root_law(k, j)?.convolve_power(j, truncation)?;
        let (immigration, _) = self.immigration_law(k, j)?.materialize(truncation);
        let divisible = divisible.pmf().expect("convolve_power yields an explicit pmf");
        Ok(LatticeLaw::Explicit(convolve_pmfs(divisible, &immigration, truncation)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use crate::stats::{covariance_estimate, empirical_pmf, total_variation};

    fn rng() -> crate::rng::SimRng {
        StreamKey::new(11, 0, 0).rng()
    }

    #[test]
    fn control_pgf_at_zero_population_is_immigration_pgf() {
        let fam = ControlFamily::fixed(
            "t",
            LatticeLaw::poisson(2.0_f64).unwrap(),
            LatticeLaw::poisson(0.7).unwrap(),
        );
        for s in [0.0, 0.3, 0.9] {
            assert_eq!(fam.control_pgf(5, 0, s).unwrap(), (0.7 * (s - 1.0)).exp());
        }
        assert_eq!(fam.control_pgf(5, 12, 1.0).unwrap(), 1.0);
        assert!(fam.control_pgf(5, 3, 1.1).is_err());
    }

    #[test]
    fn poisson_superposition() {
        let r = 0.8_f64;
        let root = LatticeLaw::poisson(r).unwrap();
        let fam = ControlFamily::fixed("t", root.clone(), LatticeLaw::Dirac(0));
        let conv = root.convolve_power(3, 400).unwrap();
        for s in [0.0, 0.2, 0.5, 0.95] {
            let v = fam.control_pgf(1, 3, s).unwrap();
            assert!((v - (3.0 * r * (s - 1.0)).exp()).abs() < 1e-14);
            assert!((v - conv.pgf_eval(s).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn deterministic_draws() {
        let mut rng = rng();
        let null = ControlFamily::<f64>::fixed("t", LatticeLaw::Dirac(3), LatticeLaw::Dirac(0));
        assert_eq!(
            null.sample_control(1, 0, &mut rng).unwrap(),
            ControlDraw {
                divisible_part: 0,
                immigration_part: 0,
                total: 0
            }
        );
        let fam = ControlFamily::<f64>::fixed("t", LatticeLaw::Dirac(1), LatticeLaw::Dirac(2));
        for aggregate in [false, true] {
            let fam = fam.clone().with_aggregate_sampling(aggregate);
            assert_eq!(
                fam.sample_control(1, 7, &mut rng).unwrap(),
                ControlDraw {
                    divisible_part: 7,
                    immigration_part: 2,
                    total: 9
                }
            );
        }
    }

    #[test]
    fn bernoulli_root_gives_binomial_divisible_part() {
        let fam = ControlFamily::fixed("t", LatticeLaw::bernoulli(0.5_f64).unwrap(), LatticeLaw::Dirac(0));
        let mut rng = rng();
        let draws: Vec<u64> = (0..100_000)
            .map(|_| fam.sample_control(1, 10, &mut rng).unwrap().divisible_part)
            .collect();
        let choose = |n: u64, i: u64| (0..i).fold(1.0, |acc, m| acc * (n - m) as f64 / (m + 1) as f64);
        let oracle: Vec<f64> = (0..=10).map(|i| choose(10, i) * 0.5_f64.powi(10)).collect();
        assert!(total_variation(&empirical_pmf(&draws), &oracle) < 0.01);
    }

    #[test]
    fn parts_are_independent() {
        let fam = ControlFamily::fixed(
            "t",
            LatticeLaw::poisson(1.0_f64).unwrap(),
            LatticeLaw::geometric(0.4).unwrap(),
        );
        let mut rng = rng();
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for _ in 0..100_000 {
            let d = fam.sample_control(1, 4, &mut rng).unwrap();
            xs.push(d.divisible_part as f64);
            ys.push(d.immigration_part as f64);
        }
        let cov = covariance_estimate(&xs, &ys);
        assert!(cov.value.abs() < 3.0 * cov.std_error, "{cov:?}");
    }

    #[test]
    fn control_law_is_normalized() {
        let fam = ControlFamily::fixed(
            "t",
            LatticeLaw::binomial(3, 0.2_f64).unwrap(),
            LatticeLaw::poisson(1.5).unwrap(),
        );
        let LatticeLaw::Explicit(pmf) = fam.control_law(1, 6, 200).unwrap() else {
            panic!()
        };
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let law = LatticeLaw::Explicit(pmf);
        for s in [0.1, 0.6, 0.99] {
            let direct = fam.control_pgf(1, 6, s).unwrap();
            assert!((law.pgf_eval(s).unwrap() - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn invalid_laws_surface_as_errors() {
        let fam = ControlFamily::<f64>::new(
            "bad",
            |_, _| Ok(LatticeLaw::Bernoulli(1.5)),
            |_, _| Ok(LatticeLaw::Dirac(0)),
        );
        assert!(fam.root_law(1, 1).is_err());
        assert!(fam.root_law(1, 0).is_ok());
    }
}
