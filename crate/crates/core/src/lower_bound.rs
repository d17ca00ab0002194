//! The hardness family with `WMMS_i = w_i` for every agent.
//!
//! With `Δ = 2^k`, group `i` has `n_i = Δ^(i-1)` agents of weight
//! `w_1 = 1`, `w_i = 2^(i-2) / n_i`, and owns `m_1 = 1`, `m_i = 3 n_i / 2`
//! items split into `M_i^1` (`n_i / 2` items, the first `|T_i|` of which
//! form `T_i`) and `M_i^2` (`n_i` items). Agents of one group share a cost
//! row:
//!
//! * items of a later group `l` cost `w_l` (in `M_l^1`) or `w_l / 2`;
//! * `B_i = M_1 ∪ ... ∪ M_(i-1) ∪ T_i` costs `2 w_i` per item, `T_i'`
//!   nothing and `M_i^2` costs `w_i` per item.
//!
//! The asymptotic gap needs `k > 4 / eps^2` and is far beyond exhaustive
//! reach; what is checked here is the structure and the exact value of
//! every share.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::model::{AgentGroup, GroupedInstance, Partition};
use crate::rational::{int, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItemClass {
    /// The single item of group 1.
    Root,
    /// `M_i^1`; `in_t` marks membership in `T_i`.
    First {
        in_t: bool,
    },
    Second,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerBoundItem {
    pub group: usize,
    pub class: ItemClass,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerBound {
    pub k: u32,
    /// `n_i`, `m_i` and `|T_i|` per group (0-based group index).
    pub sizes: Vec<usize>,
    pub item_counts: Vec<usize>,
    pub t_sizes: Vec<usize>,
    pub items: Vec<LowerBoundItem>,
    pub grouped: GroupedInstance,
    /// One defining partition per group, with a bundle per expanded agent.
    pub certificates: Vec<Partition>,
    /// Whether `m_1 + ... + m_(i-1) <= m_i / 9` holds for every group.
    pub chain_holds: bool,
}

impl LowerBound {
    pub fn weights(&self) -> Vec<Rational> {
        self.grouped.groups.iter().map(|g| g.weight.clone()).collect()
    }

    /// `W_i = n_i w_i`.
    pub fn group_totals(&self) -> Vec<Rational> {
        self.grouped
            .groups
            .iter()
            .map(|g| &g.weight * Rational::from_integer(g.count.into()))
            .collect()
    }

    /// The claimed share of every group: its weight.
    pub fn expected_wmms(&self) -> Vec<Rational> {
        self.weights()
    }
}

fn count(value: u128) -> Result<usize> {
    usize::try_from(value).map_err(|_| Error::InvalidParameter("family too large".into()))
}

pub fn gen_lower_bound(k: u32) -> Result<LowerBound> {
    if !(2..=5).contains(&k) {
        return Err(Error::InvalidParameter(format!("k = {k} outside 2..=5")));
    }
    let delta = 1u128 << k;
    let groups = k as usize;
    let mut sizes = Vec::with_capacity(groups);
    let mut item_counts = Vec::with_capacity(groups);
    let mut t_sizes = vec![0usize];
    let mut weights = Vec::with_capacity(groups);
    for i in 0..groups {
        let n_i = count(delta.pow(i as u32))?;
        sizes.push(n_i);
        if i == 0 {
            item_counts.push(1);
            weights.push(int(1));
        } else {
            item_counts.push(3 * n_i / 2);
            let before: usize = item_counts[..i].iter().sum();
            let t = (n_i / 2)
                .checked_sub(before)
                .ok_or_else(|| Error::InvalidParameter(format!("T_{} would be negative", i + 1)))?;
            t_sizes.push(t);
            weights.push(Rational::new((1i64 << (i - 1)).into(), (n_i as i64).into()));
        }
    }
    let chain_holds = (1..groups).all(|i| 9 * item_counts[..i].iter().sum::<usize>() <= item_counts[i]);

    let mut items = Vec::new();
    let mut ids = Vec::new();
    for i in 0..groups {
        if i == 0 {
            items.push(LowerBoundItem {
                group: 0,
                class: ItemClass::Root,
            });
            ids.push("m1".to_string());
            continue;
        }
        for t in 0..sizes[i] / 2 {
            items.push(LowerBoundItem {
                group: i,
                class: ItemClass::First { in_t: t < t_sizes[i] },
            });
            ids.push(format!("m{}a{}", i + 1, t + 1));
        }
        for t in 0..sizes[i] {
            items.push(LowerBoundItem {
                group: i,
                class: ItemClass::Second,
            });
            ids.push(format!("m{}b{}", i + 1, t + 1));
        }
    }

    let costs: Vec<Vec<Rational>> = (0..groups)
        .map(|g| {
            items
                .iter()
                .map(|it| {
                    if it.group > g {
                        match it.class {
                            ItemClass::Second => &weights[it.group] / int(2),
                            _ => weights[it.group].clone(),
                        }
                    } else if g == 0 {
                        int(1)
                    } else if it.group < g || it.class == (ItemClass::First { in_t: true }) {
                        &weights[g] * int(2)
                    } else if it.class == ItemClass::Second {
                        weights[g].clone()
                    } else {
                        Rational::zero()
                    }
                })
                .collect()
        })
        .collect();

    let grouped = GroupedInstance {
        groups: (0..groups)
            .map(|g| AgentGroup {
                id: format!("g{}", g + 1),
                count: sizes[g],
                weight: weights[g].clone(),
            })
            .collect(),
        items: ids,
        costs,
    };
    let certificates = (0..groups).map(|g| certificate(g, &sizes, &weights, &items)).collect();
    Ok(LowerBound {
        k,
        sizes,
        item_counts,
        t_sizes,
        items,
        grouped,
        certificates,
        chain_holds,
    })
}

/// The explicit defining partition for group `g`.
fn certificate(g: usize, sizes: &[usize], weights: &[Rational], items: &[LowerBoundItem]) -> Partition {
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &s| {
            let start = *acc;
            *acc += s;
            Some(start)
        })
        .collect();
    let total: usize = sizes.iter().sum();
    let mut bundles: Partition = vec![Vec::new(); total];
    let mut first_taken = vec![0usize; sizes.len()];
    let mut second_taken = vec![0usize; sizes.len()];
    // B_g, filled greedily: agent slot j of an earlier group takes w_j / (2 w_g) items
    let mut earlier: Vec<(usize, usize)> = Vec::new();
    if g > 0 {
        for h in 0..g {
            let per = (&weights[h] / (&weights[g] * int(2))).to_integer();
            let per = usize::try_from(per).expect("per-agent share fits");
            for t in 0..sizes[h] {
                earlier.push((offsets[h] + t, per));
            }
        }
    }
    let mut cursor = 0usize;
    let mut place_in_b = |e: usize, bundles: &mut Partition| {
        while earlier[cursor].1 == 0 {
            cursor += 1;
        }
        bundles[earlier[cursor].0].push(e);
        earlier[cursor].1 -= 1;
    };
    for (e, it) in items.iter().enumerate() {
        let l = it.group;
        if l > g || (g == 0 && l == 0) {
            // later groups (or group 1 alone): half the agents of group l take
            // one M_l^1 item, the other half two M_l^2 items
            let slot = match it.class {
                ItemClass::Root => offsets[0],
                ItemClass::First { .. } => {
                    first_taken[l] += 1;
                    offsets[l] + first_taken[l] - 1
                }
                ItemClass::Second => {
                    second_taken[l] += 1;
                    offsets[l] + sizes[l] / 2 + (second_taken[l] - 1) / 2
                }
            };
            bundles[slot].push(e);
        } else if l < g || it.class == (ItemClass::First { in_t: true }) {
            place_in_b(e, &mut bundles);
        } else if it.class == ItemClass::Second {
            second_taken[l] += 1;
            bundles[offsets[g] + second_taken[l] - 1].push(e);
        } else {
            bundles[offsets[g]].push(e);
        }
    }
    bundles
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupCheck {
    pub group: usize,
    pub weight: Rational,
    /// `w_i * max_j v_i(B_j) / w_j` over the certificate: at least WMMS.
    pub upper: Rational,
    /// Proportional share: at most WMMS.
    pub lower: Rational,
    pub total_cost: Rational,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerBoundReport {
    pub groups: Vec<GroupCheck>,
    pub pass: bool,
}

/// Closes `lower <= WMMS_i <= upper` with `lower = upper = w_i` for every
/// group, without any search.
pub fn verify_lower_bound(grouped: &GroupedInstance, certificates: &[Partition]) -> Result<LowerBoundReport> {
    if certificates.len() != grouped.groups.len() {
        return Err(Error::MalformedPartition(format!(
            "{} certificates for {} groups",
            certificates.len(),
            grouped.groups.len()
        )));
    }
    let agent_group = grouped.group_of_agents();
    let total_weight = grouped.total_weight();
    let mut checks = Vec::with_capacity(grouped.groups.len());
    for (g, (group, cert)) in grouped.groups.iter().zip(certificates).enumerate() {
        if cert.len() != agent_group.len() {
            return Err(Error::MalformedPartition(format!(
                "certificate {} has {} bundles for {} agents",
                g + 1,
                cert.len(),
                agent_group.len()
            )));
        }
        let mut seen = vec![false; grouped.items.len()];
        for &e in cert.iter().flatten() {
            if e >= seen.len() || std::mem::replace(&mut seen[e], true) {
                return Err(Error::MalformedPartition(format!(
                    "certificate {} repeats or overruns items",
                    g + 1
                )));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::MalformedPartition(format!("certificate {} misses items", g + 1)));
        }
        let row = &grouped.costs[g];
        let mut worst = Rational::zero();
        for (slot, bundle) in cert.iter().enumerate() {
            let cost: Rational = bundle.iter().map(|&e| &row[e]).sum();
            let ratio = cost / &grouped.groups[agent_group[slot]].weight;
            if ratio > worst {
                worst = ratio;
            }
        }
        let total_cost: Rational = row.iter().sum();
        let upper = &group.weight * worst;
        let lower = &group.weight * &total_cost / &total_weight;
        let pass = upper == group.weight && lower == group.weight;
        checks.push(GroupCheck {
            group: g,
            weight: group.weight.clone(),
            upper,
            lower,
            total_cost,
            pass,
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(LowerBoundReport { groups: checks, pass })
}
