use std::cmp::Ordering;

/// One isotopologue (or subisotopologue) peak: exact mass in Da and natural-log
/// probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub mass: f64,
    pub logp: f64,
}

impl Peak {
    pub fn new(mass: f64, logp: f64) -> Self {
        Peak { mass, logp }
    }

    pub fn prob(&self) -> f64 {
        self.logp.exp()
    }

    /// Peak of the combined molecule: masses add, probabilities multiply.
    #[inline]
    pub fn combine(&self, other: &Peak) -> Peak {
        Peak {
            mass: self.mass + other.mass,
            logp: self.logp + other.logp,
        }
    }

    /// Total order on `logp` (ascending).
    #[inline]
    pub fn cmp_logp(&self, other: &Peak) -> Ordering {
        self.logp.total_cmp(&other.logp)
    }
}

/// Natural-log of the summed probabilities, computed stably.
pub fn log_sum_exp(logps: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = logps.into_iter().collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}
