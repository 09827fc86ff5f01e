use serde::{Deserialize, Serialize};

use crate::qsim::QueryCostModel;

/// Which subroutine a charge is attributed to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Charge {
    StatePrep,
    MaxFinding,
    NormEstimation,
    Direct,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Breakdown {
    pub state_prep: u128,
    pub max_finding: u128,
    pub norm_estimation: u128,
    pub direct: u128,
}

impl Breakdown {
    pub fn total(&self) -> u128 {
        self.state_prep + self.max_finding + self.norm_estimation + self.direct
    }
}

/// Run-scoped counter of charged oracle queries.
///
/// Counts are `u128`: the √d trainer bills history-length-dependent oracle
/// costs that overflow 64 bits at realistic ε.
#[derive(Clone, Debug)]
pub struct QueryLedger {
    cost: QueryCostModel,
    breakdown: Breakdown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    pub charged_queries: u128,
    pub breakdown: Breakdown,
    pub cost_model: QueryCostModel,
}

impl QueryLedger {
    pub fn new(cost: QueryCostModel) -> QueryLedger {
        QueryLedger {
            cost,
            breakdown: Breakdown::default(),
        }
    }

    pub fn cost(&self) -> &QueryCostModel {
        &self.cost
    }

    pub fn charge(&mut self, kind: Charge, amount: u128) {
        let slot = match kind {
            Charge::StatePrep => &mut self.breakdown.state_prep,
            Charge::MaxFinding => &mut self.breakdown.max_finding,
            Charge::NormEstimation => &mut self.breakdown.norm_estimation,
            Charge::Direct => &mut self.breakdown.direct,
        };
        *slot = slot.saturating_add(amount);
    }

    pub fn charged_queries(&self) -> u128 {
        self.breakdown.total()
    }

    pub fn breakdown(&self) -> Breakdown {
        self.breakdown
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        LedgerSnapshot {
            charged_queries: self.charged_queries(),
            breakdown: self.breakdown,
            cost_model: self.cost.clone(),
        }
    }
}

impl Default for QueryLedger {
    fn default() -> Self {
        QueryLedger::new(QueryCostModel::default())
    }
}
