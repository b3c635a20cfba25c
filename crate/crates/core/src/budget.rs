use crate::error::AnalysisError;

/// Evaluation limit for enumerating checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget(pub u64);

impl Budget {
    pub const DEFAULT: Budget = Budget(10_000_000);
    pub const ENV_VAR: &'static str = "NIPOL_BUDGET";

    /// The default, or the value of `NIPOL_BUDGET` when set and valid.
    pub fn from_env() -> Budget {
        std::env::var(Self::ENV_VAR)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .map_or(Self::DEFAULT, Budget)
    }

    /// Largest bound whose cost fits, given cost as a function of the bound.
    pub fn largest_feasible(self, cost: impl Fn(usize) -> u128) -> Option<usize> {
        let mut best = None;
        for bound in 0..=4096 {
            if cost(bound) > self.0 as u128 {
                break;
            }
            best = Some(bound);
        }
        best
    }

    pub fn admit(self, bound: usize, cost: impl Fn(usize) -> u128) -> Result<(), AnalysisError> {
        let required = cost(bound);
        if required > self.0 as u128 {
            return Err(AnalysisError::BudgetExceeded {
                bound,
                required,
                budget: self.0,
                largest_feasible: self.largest_feasible(cost),
            });
        }
        Ok(())
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self::DEFAULT
    }
}
