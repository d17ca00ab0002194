//! Canonical instances and the greedy 3-WMMS algorithm on them.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance, Partition};
use crate::oracle::{verify_alpha, AlphaReport};
use crate::rational::{dyadic_exponent, int, serde_q, Rational};
use crate::reduce::{lift_canonical_allocation, to_canonical, CanonicalTrace};
use crate::wmms::{exact_profile, verify_partition};

/// Agents sharing one weight.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightGroup {
    #[serde(with = "serde_q")]
    pub weight: Rational,
    pub members: Vec<usize>,
}

impl WeightGroup {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// `W_r = n_r * w_r`.
    pub fn total(&self) -> Rational {
        &self.weight * Rational::from_integer(self.members.len().into())
    }
}

/// How `WMMS_i = w_i` was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProportionalityEvidence {
    /// Every agent has a partition whose bundles fit the weights.
    Certificates,
    /// Exhaustive search.
    ExactSearch,
}

/// An instance with normalized dyadic weights and costs, identical item
/// ordering, and `WMMS_i = w_i` for every agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalInstance {
    instance: Instance,
    groups: Vec<WeightGroup>,
    thresholds: Vec<Rational>,
    evidence: ProportionalityEvidence,
}

/// Everything about canonicity that can be checked without a WMMS
/// computation: weights and values on the `w_1 / 2^p` grid, unit sums and
/// identical ordering.
pub fn structural_violations(inst: &Instance) -> Vec<String> {
    let mut out = Vec::new();
    if inst.n() == 0 {
        out.push("no agents".into());
        return out;
    }
    let top = inst.max_weight();
    if inst.total_weight() != Rational::one() {
        out.push(format!("weights sum to {}", inst.total_weight()));
    }
    for a in &inst.agents {
        if dyadic_exponent(&a.weight, &top).is_none() {
            out.push(format!("weight of `{}` is off the dyadic grid", a.id));
        }
    }
    for (i, row) in inst.costs.iter().enumerate() {
        let id = &inst.agents[i].id;
        let total: Rational = row.iter().sum();
        if !total.is_one() {
            out.push(format!("costs of `{id}` sum to {total}"));
        }
        if let Some(e) = row
            .iter()
            .position(|c| !c.is_zero() && dyadic_exponent(c, &top).is_none())
        {
            out.push(format!("cost of `{id}` for `{}` is off the dyadic grid", inst.items[e]));
        }
    }
    if !inst.is_ido() {
        out.push("items are not identically ordered".into());
    }
    out
}

impl CanonicalInstance {
    /// Certifies `WMMS_i = w_i` with one partition per agent whose bundles
    /// cost at most their slot weights; the proportional share closes the
    /// sandwich from below.
    pub fn with_certificates(instance: Instance, certificates: &[Partition]) -> Result<Self> {
        let mut violations = structural_violations(&instance);
        if certificates.len() != instance.n() {
            violations.push(format!(
                "{} certificates for {} agents",
                certificates.len(),
                instance.n()
            ));
        } else {
            for (i, partition) in certificates.iter().enumerate() {
                let ok = instance.check_partition(partition).is_ok()
                    && verify_partition(&instance, i, partition, instance.weight(i))?;
                if !ok {
                    violations.push(format!(
                        "certificate of `{}` does not fit the weights",
                        instance.agents[i].id
                    ));
                }
            }
        }
        Self::finish(instance, violations, ProportionalityEvidence::Certificates)
    }

    /// Certifies `WMMS_i = w_i` by exhaustive search.
    pub fn verify_exact(instance: Instance, budget: u64) -> Result<Self> {
        let mut violations = structural_violations(&instance);
        if violations.is_empty() {
            let profile = exact_profile(&instance, budget)?;
            for (i, value) in profile.values.iter().enumerate() {
                if value != instance.weight(i) {
                    violations.push(format!(
                        "WMMS of `{}` is {value}, weight is {}",
                        instance.agents[i].id,
                        instance.weight(i)
                    ));
                }
            }
        }
        Self::finish(instance, violations, ProportionalityEvidence::ExactSearch)
    }

    fn finish(instance: Instance, violations: Vec<String>, evidence: ProportionalityEvidence) -> Result<Self> {
        if !violations.is_empty() {
            return Err(Error::NotCanonical(violations));
        }
        let groups = group_by_weight(&instance);
        let mut thresholds = Vec::with_capacity(groups.len());
        let mut before = Rational::zero();
        for g in &groups {
            thresholds.push(&before / &g.weight);
            before += g.total();
        }
        Ok(CanonicalInstance {
            instance,
            groups,
            thresholds,
            evidence,
        })
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    /// Weight groups in strictly decreasing weight order.
    pub fn groups(&self) -> &[WeightGroup] {
        &self.groups
    }

    /// `L_r = (W_1 + ... + W_{r-1}) / w_r`, one per group.
    pub fn thresholds(&self) -> &[Rational] {
        &self.thresholds
    }

    pub fn evidence(&self) -> ProportionalityEvidence {
        self.evidence
    }

    pub fn into_instance(self) -> Instance {
        self.instance
    }
}

fn group_by_weight(inst: &Instance) -> Vec<WeightGroup> {
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.sort_by(|&a, &b| inst.weight(b).cmp(inst.weight(a)).then(a.cmp(&b)));
    let mut groups: Vec<WeightGroup> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if &g.weight == inst.weight(i) => g.members.push(i),
            _ => groups.push(WeightGroup {
                weight: inst.weight(i).clone(),
                members: vec![i],
            }),
        }
    }
    groups
}

/// Result of one greedy sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreedyRun {
    pub allocation: Allocation,
    pub costs: Vec<Rational>,
    /// Item position (0-based) after which the agent exited, if she did.
    pub exited_at: Vec<Option<usize>>,
}

/// Items in order; each goes to the active agent (not exited, cost of the
/// item at most her weight) with the smallest cost for it, then smallest
/// weight, then smallest index. An agent exits once her cost reaches `3 w_i`.
pub fn run_greedy(c: &CanonicalInstance) -> Result<GreedyRun> {
    let inst = &c.instance;
    let n = inst.n();
    let mut costs = vec![Rational::zero(); n];
    let mut exited_at = vec![None; n];
    let mut allocation = Allocation::empty(inst.m());
    let caps: Vec<Rational> = (0..n).map(|i| inst.weight(i) * int(3)).collect();
    for h in 0..inst.m() {
        let pick = (0..n)
            .filter(|&i| exited_at[i].is_none() && inst.cost(i, h) <= inst.weight(i))
            .min_by(|&a, &b| {
                inst.cost(a, h)
                    .cmp(inst.cost(b, h))
                    .then_with(|| inst.weight(a).cmp(inst.weight(b)))
                    .then(a.cmp(&b))
            })
            .ok_or(Error::NoActiveAgent { position: h + 1 })?;
        allocation.owner[h] = Some(pick);
        costs[pick] += inst.cost(pick, h);
        if costs[pick] >= caps[pick] {
            exited_at[pick] = Some(h);
        }
    }
    Ok(GreedyRun {
        allocation,
        costs,
        exited_at,
    })
}

pub fn solve_canonical(c: &CanonicalInstance) -> Result<Allocation> {
    run_greedy(c).map(|run| run.allocation)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdViolation {
    /// 0-based group index.
    pub group: usize,
    /// 1-based item position.
    pub position: usize,
    pub agent: usize,
    pub cost: Rational,
}

/// Checks that beyond position `L_r` every agent values every item at most
/// `w_r`, for every group `r`.
pub fn check_threshold_claim(c: &CanonicalInstance) -> Vec<ThresholdViolation> {
    let inst = &c.instance;
    let mut out = Vec::new();
    for (r, (g, threshold)) in c.groups.iter().zip(&c.thresholds).enumerate() {
        // first 1-based h with h > L_r
        let first = (threshold.floor().to_integer() + 1u32).try_into().unwrap_or(usize::MAX);
        for h in first.max(1)..=inst.m() {
            for i in 0..inst.n() {
                let cost = inst.cost(i, h - 1);
                if cost > &g.weight {
                    out.push(ThresholdViolation {
                        group: r,
                        position: h,
                        agent: i,
                        cost: cost.clone(),
                    });
                }
            }
        }
    }
    out
}

/// End-to-end result of the composed solver.
#[derive(Debug, Clone)]
pub struct Solved12 {
    pub allocation: Allocation,
    pub canonical: CanonicalInstance,
    pub trace: CanonicalTrace,
    pub run: GreedyRun,
    /// Ratios against exact WMMS of the input, checked at 12.
    pub report: AlphaReport,
}

/// Canonicalize, run the greedy, and lift back.
pub fn solve_12wmms(inst: &Instance, budget: u64) -> Result<Solved12> {
    let (canonical, trace) = to_canonical(inst, budget)?;
    let run = run_greedy(&canonical)?;
    let allocation = lift_canonical_allocation(&trace, &run.allocation)?;
    let wmms = exact_profile(inst, budget)?.values;
    let report = verify_alpha(inst, &allocation, &wmms, &int(12))?;
    Ok(Solved12 {
        allocation,
        canonical,
        trace,
        run,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::example_table1;
    use crate::model::instance_from_rows;
    use crate::rational::q;
    use crate::DEFAULT_BUDGET;

    fn uniform(weights: Vec<Rational>, costs: Vec<Rational>) -> CanonicalInstance {
        let n = weights.len();
        let inst = instance_from_rows(weights, vec![costs; n]);
        CanonicalInstance::verify_exact(inst, DEFAULT_BUDGET).unwrap()
    }

    #[test]
    fn single_agent_takes_everything() {
        let c = uniform(vec![int(1)], vec![q(1, 2), q(1, 4), q(1, 4)]);
        let run = run_greedy(&c).unwrap();
        assert_eq!(run.allocation, Allocation::from_owners([0, 0, 0]));
        assert_eq!(run.costs, vec![int(1)]);
    }

    #[test]
    fn ties_go_to_the_first_agent() {
        let c = uniform(vec![q(1, 2), q(1, 2)], vec![q(1, 4); 4]);
        let run = run_greedy(&c).unwrap();
        assert_eq!(run.allocation, Allocation::from_owners([0; 4]));
        assert_eq!(run.costs, vec![int(1), int(0)]);
        assert_eq!(run.exited_at, vec![None, None]);
    }

    #[test]
    fn smaller_weight_wins_ties_and_exits_at_three_weights() {
        // weights (1/2, 1/4, 1/4); 16 items of 1/16
        let c = uniform(vec![q(1, 2), q(1, 4), q(1, 4)], vec![q(1, 16); 16]);
        let run = run_greedy(&c).unwrap();
        // a2 takes 12 items (3/4 = 3 w_2), then a3 the rest
        assert_eq!(run.costs, vec![int(0), q(3, 4), q(1, 4)]);
        assert_eq!(run.exited_at[1], Some(11));
    }

    #[test]
    fn groups_and_thresholds() {
        let c = uniform(vec![q(1, 4), q(1, 2), q(1, 4)], vec![q(1, 4); 4]);
        assert_eq!(c.groups().len(), 2);
        assert_eq!(c.groups()[0].members, vec![1]);
        assert_eq!(c.groups()[1].members, vec![0, 2]);
        assert_eq!(c.thresholds(), &[int(0), int(2)]);
        assert!(check_threshold_claim(&c).is_empty());
    }

    #[test]
    fn non_canonical_inputs_are_rejected() {
        let inst = instance_from_rows(vec![q(1, 2), q(1, 2)], vec![vec![q(1, 3); 3]; 2]);
        assert!(matches!(
            CanonicalInstance::verify_exact(inst, DEFAULT_BUDGET),
            Err(Error::NotCanonical(_))
        ));
        // an item worth a whole weight still tiles
        let lumpy = instance_from_rows(vec![q(1, 2), q(1, 2)], vec![vec![q(1, 2), q(1, 4), q(1, 4)]; 2]);
        assert!(CanonicalInstance::verify_exact(lumpy, DEFAULT_BUDGET).is_ok());
        let bad = instance_from_rows(vec![q(1, 2), q(1, 2)], vec![vec![int(1), int(0)]; 2]);
        assert!(CanonicalInstance::verify_exact(bad, DEFAULT_BUDGET).is_err());
    }

    #[test]
    fn oversized_item_breaks_the_threshold_claim() {
        // Certified by hand so the structural WMMS check is bypassed.
        let inst = instance_from_rows(
            vec![q(1, 2), q(1, 4), q(1, 4)],
            vec![vec![q(1, 4), q(1, 4), q(1, 2), int(0)]; 3],
        );
        let certs = vec![vec![vec![2], vec![0], vec![1, 3]]; 3];
        assert!(CanonicalInstance::with_certificates(inst.clone(), &certs).is_err());
        let c = CanonicalInstance::finish(inst, Vec::new(), ProportionalityEvidence::Certificates).unwrap();
        let violations = check_threshold_claim(&c);
        assert!(!violations.is_empty());
        assert!(violations.iter().all(|v| v.group == 1 && v.position == 3));
    }

    #[test]
    fn no_active_agent_is_an_error() {
        let inst = instance_from_rows(vec![q(1, 2), q(1, 2)], vec![vec![int(1), int(0)]; 2]);
        let c = CanonicalInstance::finish(inst, Vec::new(), ProportionalityEvidence::Certificates).unwrap();
        assert_eq!(run_greedy(&c), Err(Error::NoActiveAgent { position: 1 }));
    }

    #[test]
    fn table1_end_to_end() {
        let inst = example_table1(&q(1, 4)).unwrap();
        let solved = solve_12wmms(&inst, DEFAULT_BUDGET).unwrap();
        // a2 exits at exactly 3 w_2 on the canonical instance
        assert_eq!(solved.allocation, Allocation::from_owners([1, 1]));
        assert!(solved.report.pass);
        assert_eq!(solved.report.max_ratio(), Some(int(3)));
    }

    #[test]
    fn single_agent_end_to_end() {
        let inst = instance_from_rows(vec![int(1)], vec![vec![int(2), int(3)]]);
        let solved = solve_12wmms(&inst, DEFAULT_BUDGET).unwrap();
        assert_eq!(solved.report.max_ratio(), Some(int(1)));
    }
}
