//! Everything derived from a metric that the constructions share: growth,
//! dimension, and the shadow and annulus parameters.

use crate::error::{Error, Result};
use crate::group::metric::{Length, MetricSpec};
use crate::measures::perron::{critical_exponent, PerronData};

#[derive(Clone, Debug, PartialEq)]
pub struct GroupContext {
    pub metric: MetricSpec,
    /// Visual parameter `ε`.
    pub epsilon: f64,
    /// Shadow parameter `ρ`.
    pub rho: Length,
    /// Annulus half-width `h`.
    pub h: Length,
    pub perron: PerronData,
}

impl GroupContext {
    /// Defaults: `ρ` is the largest letter length; `h` is 0 for the word
    /// metric and the largest letter length plus one otherwise.
    pub fn new(metric: MetricSpec, epsilon: f64, rho: Option<Length>, h: Option<Length>) -> Result<GroupContext> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidContext(format!("visual parameter {epsilon} is not positive")));
        }
        let max_len = metric.max_letter_length();
        let rho = rho.unwrap_or(max_len);
        let h = h.unwrap_or_else(|| match metric {
            MetricSpec::Word { .. } => Length::zero(),
            _ => max_len + Length::integer(1),
        });
        if rho.lt(Length::zero()) {
            return Err(Error::InvalidContext(format!("shadow parameter {rho} is negative")));
        }
        if h.lt(Length::zero()) {
            return Err(Error::InvalidContext(format!("half-width {h} is negative")));
        }
        if !matches!(metric, MetricSpec::Word { .. }) && h.scale(2).lt(max_len) {
            return Err(Error::InvalidContext(format!(
                "half-width {h} leaves annuli empty for letter length {max_len}"
            )));
        }
        let perron = critical_exponent(&metric)?;
        Ok(GroupContext { metric, epsilon, rho, h, perron })
    }

    pub fn word(rank: usize) -> Result<GroupContext> {
        GroupContext::new(MetricSpec::word(rank)?, 1.0, None, None)
    }

    pub fn rank(&self) -> usize {
        self.metric.rank()
    }

    /// Critical exponent `α`.
    pub fn alpha(&self) -> f64 {
        self.perron.alpha
    }

    /// Growth rate `ω = e^α`.
    pub fn omega(&self) -> f64 {
        self.perron.omega()
    }

    /// `2k - 1` for the word metric, where `ω` is an integer.
    pub fn exact_omega(&self) -> Option<u64> {
        match self.metric {
            MetricSpec::Word { rank } => Some(2 * rank as u64 - 1),
            _ => None,
        }
    }

    /// Hausdorff dimension `D = α / ε` of the visual metric, so `e^{εD} = ω`.
    pub fn dimension(&self) -> f64 {
        self.alpha() / self.epsilon
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    #[test]
    fn word_defaults() {
        let ctx = GroupContext::word(2).unwrap();
        assert_eq!(ctx.exact_omega(), Some(3));
        assert_eq!(ctx.h, Length::zero());
        assert_eq!(ctx.rho, Length::integer(1));
        assert!(((ctx.epsilon * ctx.dimension()).exp() - ctx.omega()).abs() < 1e-12);
    }

    #[test]
    fn weighted_defaults_and_validation() {
        let m = MetricSpec::weighted(vec![Rational64::from_integer(1), Rational64::from_integer(2)]).unwrap();
        let ctx = GroupContext::new(m.clone(), 0.5, None, None).unwrap();
        assert_eq!(ctx.h, Length::integer(3));
        assert!(((0.5 * ctx.dimension()).exp() - ctx.omega()).abs() < 1e-12);
        assert!(GroupContext::new(m.clone(), 0.0, None, None).is_err());
        assert!(GroupContext::new(m.clone(), 1.0, Some(Length::integer(-1)), None).is_err());
        assert!(GroupContext::new(m, 1.0, None, Some(Length::Exact(Rational64::new(1, 2)))).is_err());
    }
}
