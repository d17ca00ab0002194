//! Instances, allocations and the structural checks shared by every solver.

use std::collections::HashSet;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Agent {
    pub id: String,
    pub weight: Rational,
}

/// Agents with positive weights, an ordered item list, and an additive cost
/// matrix indexed `[agent][item]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub agents: Vec<Agent>,
    pub items: Vec<String>,
    pub costs: Vec<Vec<Rational>>,
}

/// One bundle of item indices per agent slot.
pub type Partition = Vec<Vec<usize>>;

impl Instance {
    /// Builds an instance after checking the matrix shape. Use
    /// [`validate_instance`] for the remaining domain checks.
    pub fn new(agents: Vec<Agent>, items: Vec<String>, costs: Vec<Vec<Rational>>) -> Result<Self> {
        if costs.len() != agents.len() {
            return Err(Error::InvalidInstance(format!(
                "{} cost rows for {} agents",
                costs.len(),
                agents.len()
            )));
        }
        if let Some((i, row)) = costs.iter().enumerate().find(|(_, r)| r.len() != items.len()) {
            return Err(Error::InvalidInstance(format!(
                "agent `{}` has {} costs for {} items",
                agents[i].id,
                row.len(),
                items.len()
            )));
        }
        Ok(Instance { agents, items, costs })
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn m(&self) -> usize {
        self.items.len()
    }

    pub fn weight(&self, agent: usize) -> &Rational {
        &self.agents[agent].weight
    }

    pub fn weights(&self) -> Vec<Rational> {
        self.agents.iter().map(|a| a.weight.clone()).collect()
    }

    pub fn total_weight(&self) -> Rational {
        self.agents.iter().map(|a| &a.weight).sum()
    }

    pub fn max_weight(&self) -> Rational {
        self.agents
            .iter()
            .map(|a| &a.weight)
            .max()
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn cost(&self, agent: usize, item: usize) -> &Rational {
        &self.costs[agent][item]
    }

    /// `v_i(M)`.
    pub fn total_cost(&self, agent: usize) -> Rational {
        self.costs[agent].iter().sum()
    }

    pub fn agent_index(&self, id: &str) -> Option<usize> {
        self.agents.iter().position(|a| a.id == id)
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|e| e == id)
    }

    /// Additive cost of a bundle given by item indices.
    pub fn bundle_cost(&self, agent: usize, bundle: &[usize]) -> Rational {
        bundle.iter().map(|&e| &self.costs[agent][e]).sum()
    }

    /// Additive cost of a bundle given by item ids.
    pub fn bundle_cost_by_ids<S: AsRef<str>>(&self, agent: usize, bundle: &[S]) -> Result<Rational> {
        let mut total = Rational::zero();
        for id in bundle {
            let e = self
                .item_index(id.as_ref())
                .ok_or_else(|| Error::UnknownItem(id.as_ref().to_string()))?;
            total += &self.costs[agent][e];
        }
        Ok(total)
    }

    /// True when every agent's costs are non-increasing in item order.
    pub fn is_ido(&self) -> bool {
        self.costs.iter().all(|row| row.windows(2).all(|w| w[0] >= w[1]))
    }

    /// `w_i * v_i(M) / sum_j w_j`, a lower bound on the agent's WMMS.
    pub fn proportional_share(&self, agent: usize) -> Rational {
        self.weight(agent) * self.total_cost(agent) / self.total_weight()
    }

    /// Checks that `partition` has one bundle per agent and covers every item
    /// exactly once.
    pub fn check_partition(&self, partition: &[Vec<usize>]) -> Result<()> {
        if partition.len() != self.n() {
            return Err(Error::MalformedPartition(format!(
                "{} bundles for {} agents",
                partition.len(),
                self.n()
            )));
        }
        let mut seen = vec![false; self.m()];
        for &e in partition.iter().flatten() {
            if e >= self.m() {
                return Err(Error::MalformedPartition(format!("item index {e} out of range")));
            }
            if std::mem::replace(&mut seen[e], true) {
                return Err(Error::MalformedPartition(format!(
                    "item `{}` appears twice",
                    self.items[e]
                )));
            }
        }
        if let Some(e) = seen.iter().position(|s| !s) {
            return Err(Error::MalformedPartition(format!(
                "item `{}` is not covered",
                self.items[e]
            )));
        }
        Ok(())
    }
}

/// Item-to-agent assignment; `None` means unallocated.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Allocation {
    pub owner: Vec<Option<usize>>,
}

impl Allocation {
    pub fn empty(m: usize) -> Self {
        Allocation { owner: vec![None; m] }
    }

    pub fn from_owners(owners: impl IntoIterator<Item = usize>) -> Self {
        Allocation {
            owner: owners.into_iter().map(Some).collect(),
        }
    }

    pub fn from_partition(m: usize, partition: &[Vec<usize>]) -> Self {
        let mut alloc = Allocation::empty(m);
        for (agent, bundle) in partition.iter().enumerate() {
            for &e in bundle {
                alloc.owner[e] = Some(agent);
            }
        }
        alloc
    }

    pub fn is_complete(&self) -> bool {
        self.owner.iter().all(Option::is_some)
    }

    pub fn missing(&self) -> usize {
        self.owner.iter().filter(|o| o.is_none()).count()
    }

    pub fn require_complete(&self) -> Result<()> {
        match self.missing() {
            0 => Ok(()),
            missing => Err(Error::IncompleteAllocation { missing }),
        }
    }

    pub fn bundle(&self, agent: usize) -> Vec<usize> {
        self.owner
            .iter()
            .enumerate()
            .filter(|(_, o)| **o == Some(agent))
            .map(|(e, _)| e)
            .collect()
    }

    pub fn bundles(&self, n: usize) -> Partition {
        let mut out = vec![Vec::new(); n];
        for (e, o) in self.owner.iter().enumerate() {
            if let Some(a) = o {
                out[*a].push(e);
            }
        }
        out
    }

    /// Each agent's cost for her own bundle.
    pub fn agent_costs(&self, inst: &Instance) -> Vec<Rational> {
        let mut costs = vec![Rational::zero(); inst.n()];
        for (e, o) in self.owner.iter().enumerate() {
            if let Some(a) = *o {
                costs[a] += inst.cost(a, e);
            }
        }
        costs
    }
}

/// Per-agent WMMS values together with a defining partition for each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WmmsProfile {
    pub values: Vec<Rational>,
    pub partitions: Vec<Partition>,
}

/// `cost / share`, with `0/0 = 0` and `None` for a positive cost against a
/// zero share.
pub fn share_ratio(cost: &Rational, share: &Rational) -> Option<Rational> {
    if share.is_zero() {
        cost.is_zero().then(Rational::zero)
    } else {
        Some(cost / share)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NonpositiveWeight { agent: String },
    NegativeCost { agent: String, item: String },
    DuplicateAgent(String),
    DuplicateItem(String),
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NonpositiveWeight { agent } => write!(f, "nonpositive weight for `{agent}`"),
            Violation::NegativeCost { agent, item } => {
                write!(f, "negative cost for `{agent}` on `{item}`")
            }
            Violation::DuplicateAgent(id) => write!(f, "duplicate agent id `{id}`"),
            Violation::DuplicateItem(id) => write!(f, "duplicate item id `{id}`"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Non-fatal observations, e.g. weights outside `(0, 1)`.
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut ids = HashSet::new();
    for a in &inst.agents {
        if !ids.insert(a.id.as_str()) {
            report.violations.push(Violation::DuplicateAgent(a.id.clone()));
        }
        if !a.weight.is_positive() {
            report
                .violations
                .push(Violation::NonpositiveWeight { agent: a.id.clone() });
        } else if a.weight >= Rational::from_integer(1.into()) {
            report.warnings.push(format!("weight of `{}` is not below 1", a.id));
        }
    }
    let mut items = HashSet::new();
    for e in &inst.items {
        if !items.insert(e.as_str()) {
            report.violations.push(Violation::DuplicateItem(e.clone()));
        }
    }
    for (i, row) in inst.costs.iter().enumerate() {
        for (e, c) in row.iter().enumerate() {
            if c.is_negative() {
                report.violations.push(Violation::NegativeCost {
                    agent: inst.agents[i].id.clone(),
                    item: inst.items[e].clone(),
                });
            }
        }
    }
    report
}

/// Convenience builder used by generators and tests: agents `a1..an`,
/// items `e1..em`.
pub fn instance_from_rows(weights: Vec<Rational>, costs: Vec<Vec<Rational>>) -> Instance {
    let m = costs.first().map_or(0, Vec::len);
    let agents = weights
        .into_iter()
        .enumerate()
        .map(|(i, weight)| Agent {
            id: format!("a{}", i + 1),
            weight,
        })
        .collect();
    let items = (1..=m).map(|e| format!("e{e}")).collect();
    Instance::new(agents, items, costs).expect("rectangular cost rows")
}

/// Agents sharing one weight and one cost row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentGroup {
    pub id: String,
    pub count: usize,
    pub weight: Rational,
}

/// Compressed instance: one cost row per group of identical agents.
/// Expanded agent ids are `{group}:{t}` with `t` counting from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupedInstance {
    pub groups: Vec<AgentGroup>,
    pub items: Vec<String>,
    pub costs: Vec<Vec<Rational>>,
}

impl GroupedInstance {
    pub fn agent_count(&self) -> usize {
        self.groups.iter().map(|g| g.count).sum()
    }

    pub fn total_weight(&self) -> Rational {
        self.groups
            .iter()
            .map(|g| &g.weight * Rational::from_integer(g.count.into()))
            .sum()
    }

    /// Group of every expanded agent, in expansion order.
    pub fn group_of_agents(&self) -> Vec<usize> {
        self.groups
            .iter()
            .enumerate()
            .flat_map(|(r, g)| std::iter::repeat_n(r, g.count))
            .collect()
    }

    pub fn expand(&self) -> Result<Instance> {
        if self.costs.len() != self.groups.len() {
            return Err(Error::InvalidInstance(format!(
                "{} cost rows for {} agent groups",
                self.costs.len(),
                self.groups.len()
            )));
        }
        let mut agents = Vec::with_capacity(self.agent_count());
        let mut costs = Vec::with_capacity(self.agent_count());
        for (g, row) in self.groups.iter().zip(&self.costs) {
            for t in 1..=g.count {
                agents.push(Agent {
                    id: format!("{}:{t}", g.id),
                    weight: g.weight.clone(),
                });
                costs.push(row.clone());
            }
        }
        Instance::new(agents, self.items.clone(), costs)
    }
}
