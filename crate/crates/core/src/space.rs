//! Value arithmetic for factor tables, either plain probabilities or natural
//! logarithms of probabilities.

use core::cmp::Ordering;

/// Two values within this relative distance are treated as a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// The numeric representation used by every table in one computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Space {
    #[default]
    Linear,
    /// Values are `ln p`; zero probability is `-inf`.
    Log,
}

impl Space {
    #[inline]
    pub fn one(self) -> f64 {
        match self {
            Space::Linear => 1.0,
            Space::Log => 0.0,
        }
    }

    #[inline]
    pub fn zero(self) -> f64 {
        match self {
            Space::Linear => 0.0,
            Space::Log => f64::NEG_INFINITY,
        }
    }

    #[inline]
    pub fn from_prob(self, p: f64) -> f64 {
        match self {
            Space::Linear => p,
            Space::Log => {
                if p <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    libm::log(p)
                }
            }
        }
    }

    #[inline]
    pub fn to_prob(self, v: f64) -> f64 {
        match self {
            Space::Linear => v,
            Space::Log => libm::exp(v),
        }
    }

    #[inline]
    pub fn mul(self, a: f64, b: f64) -> f64 {
        match self {
            Space::Linear => a * b,
            Space::Log => a + b,
        }
    }

    /// `a / b`, with anything divided by zero mapped to zero.
    #[inline]
    pub fn div(self, a: f64, b: f64) -> f64 {
        if self.is_zero(b) {
            return self.zero();
        }
        match self {
            Space::Linear => a / b,
            Space::Log => a - b,
        }
    }

    #[inline]
    pub fn add(self, a: f64, b: f64) -> f64 {
        match self {
            Space::Linear => a + b,
            Space::Log => {
                let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
                if hi == f64::NEG_INFINITY {
                    hi
                } else {
                    hi + libm::log1p(libm::exp(lo - hi))
                }
            }
        }
    }

    #[inline]
    pub fn is_zero(self, v: f64) -> bool {
        match self {
            Space::Linear => v == 0.0,
            Space::Log => v == f64::NEG_INFINITY,
        }
    }

    /// Whether two values count as equal for ranking purposes.
    pub fn ties(self, a: f64, b: f64) -> bool {
        if a == b {
            return true;
        }
        match self {
            Space::Linear => (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs()),
            Space::Log => (a - b).abs() <= TIE_TOLERANCE,
        }
    }

    /// Ranking order on values: `Less` means `a` ranks ahead of `b`.
    pub fn rank_values(self, a: f64, b: f64) -> Ordering {
        if self.ties(a, b) {
            Ordering::Equal
        } else if a > b {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_space_round_trips_and_handles_zero() {
        let s = Space::Log;
        assert_eq!(s.from_prob(0.0), f64::NEG_INFINITY);
        assert_eq!(s.to_prob(s.zero()), 0.0);
        let p = s.mul(s.from_prob(0.2), s.from_prob(0.8));
        assert!((s.to_prob(p) - 0.16).abs() < 1e-15);
        let q = s.add(s.from_prob(0.25), s.from_prob(0.5));
        assert!((s.to_prob(q) - 0.75).abs() < 1e-15);
        assert_eq!(s.add(s.zero(), s.zero()), s.zero());
        assert!(s.is_zero(s.mul(s.zero(), s.from_prob(0.5))));
    }

    #[test]
    fn ties_are_relative() {
        let s = Space::Linear;
        assert!(s.ties(0.065856, 0.065856 * (1.0 + 1e-15)));
        assert!(!s.ties(0.065856, 0.065857));
        assert_eq!(s.rank_values(0.3, 0.2), Ordering::Less);
        assert_eq!(s.rank_values(0.0, 0.0), Ordering::Equal);
    }
}
