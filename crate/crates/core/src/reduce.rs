//! Reductions from arbitrary instances to canonical ones.
//!
//! The pipeline is
//!
//! 1. [`round_weights`]: weights rounded up onto the grid `w_1 / 2^p`;
//! 2. [`pad_to_proportional`]: one auxiliary item per (agent, bundle) that
//!    tops every bundle of the agent's defining partition up to the same
//!    cost-to-weight ratio, making her WMMS equal her proportional share;
//! 3. [`normalize`]: weights sum to one and every agent's total cost is one;
//! 4. [`dyadicize_values`]: every cost rounded down onto `w_1 / 2^q`, with
//!    the lost cost returned through dyadic auxiliary items per bundle;
//! 5. [`to_ido`]: every agent's costs sorted into a common item order.
//!
//! Each step returns a trace. [`lift_canonical_allocation`] uses the traces
//! to turn an allocation of the final instance into one of the original
//! instance: an `alpha`-WMMS allocation there lifts to a `4 alpha`-WMMS one.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::canonical::CanonicalInstance;
use crate::error::{Error, Result};
use crate::model::{validate_instance, Agent, Allocation, Instance, Partition};
use crate::rational::{round_down_exponent, scale_pow2, serde_q, Rational};
use crate::wmms::exact_wmms;

/// Per-agent item orders of an identical-ordering transform.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdoTrace {
    pub original: Instance,
    /// `order[i][h]` is the original item holding agent `i`'s `h`-th
    /// largest cost (ties by item index).
    pub order: Vec<Vec<usize>>,
}

/// Sorts every agent's costs in decreasing order; item `h` of the result
/// carries each agent's `h`-th largest cost.
pub fn to_ido(inst: &Instance) -> (Instance, IdoTrace) {
    let order: Vec<Vec<usize>> = inst
        .costs
        .iter()
        .map(|row| {
            let mut idx: Vec<usize> = (0..row.len()).collect();
            idx.sort_by(|&a, &b| row[b].cmp(&row[a]).then(a.cmp(&b)));
            idx
        })
        .collect();
    let costs = order
        .iter()
        .zip(&inst.costs)
        .map(|(ord, row)| ord.iter().map(|&e| row[e].clone()).collect())
        .collect();
    let items = (1..=inst.m()).map(|h| format!("pos{h}")).collect();
    let ido = Instance {
        agents: inst.agents.clone(),
        items,
        costs,
    };
    (
        ido,
        IdoTrace {
            original: inst.clone(),
            order,
        },
    )
}

/// Picking sequence from the last (cheapest) position to the first: the
/// agent holding position `h` takes her cheapest remaining original item
/// (ties by index). Only `m - h` items are gone by then, so one of her
/// `m - h + 1` items ranked `h` or lower is still there and the pick costs
/// at most her `h`-th largest cost.
pub fn lift_ido_allocation(trace: &IdoTrace, ido_alloc: &Allocation) -> Result<Allocation> {
    ido_alloc.require_complete()?;
    let inst = &trace.original;
    if ido_alloc.owner.len() != inst.m() {
        return Err(Error::InvalidParameter(format!(
            "allocation covers {} positions, instance has {} items",
            ido_alloc.owner.len(),
            inst.m()
        )));
    }
    let mut taken = vec![false; inst.m()];
    let mut lifted = Allocation::empty(inst.m());
    for owner in ido_alloc.owner.iter().rev().flatten() {
        let row = &inst.costs[*owner];
        let pick = (0..inst.m())
            .filter(|&e| !taken[e])
            .min_by(|&a, &b| row[a].cmp(&row[b]).then(a.cmp(&b)))
            .expect("one remaining item per remaining position");
        taken[pick] = true;
        lifted.owner[pick] = Some(*owner);
    }
    Ok(lifted)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightRounding {
    #[serde(with = "serde_q::vec")]
    pub original: Vec<Rational>,
    #[serde(with = "serde_q::vec")]
    pub rounded: Vec<Rational>,
    /// `rounded[i] = w_max / 2^exponents[i]`.
    pub exponents: Vec<u32>,
}

/// Rounds each weight up to the nearest `w_max / 2^p`, `p >= 0`.
pub fn round_weights(inst: &Instance) -> (Instance, WeightRounding) {
    let top = inst.max_weight();
    let mut out = inst.clone();
    let mut exponents = Vec::with_capacity(inst.n());
    for agent in &mut out.agents {
        let q = round_down_exponent(&agent.weight, &top);
        let p = if scale_pow2(&top, -q) == agent.weight { q } else { q - 1 };
        let p = u32::try_from(p).expect("weights never exceed the largest weight");
        agent.weight = scale_pow2(&top, -i64::from(p));
        exponents.push(p);
    }
    let rounding = WeightRounding {
        original: inst.weights(),
        rounded: out.weights(),
        exponents,
    };
    (out, rounding)
}

/// An item added by a reduction step, valued only by `agent`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxItem {
    pub agent: usize,
    pub slot: usize,
    /// Index of the item in the step's output instance.
    pub index: usize,
    #[serde(with = "serde_q")]
    pub value: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Padding {
    /// WMMS of each agent before padding (and after; padding keeps it).
    #[serde(with = "serde_q::vec")]
    pub wmms: Vec<Rational>,
    /// The defining partitions the padding was built from.
    pub partitions: Vec<Partition>,
    pub aux: Vec<AuxItem>,
}

fn aux_id_collision(inst: &Instance, ids: &[String]) -> Result<()> {
    let existing: HashSet<&str> = inst.items.iter().map(String::as_str).collect();
    match ids.iter().find(|id| existing.contains(id.as_str())) {
        Some(id) => Err(Error::InvalidInstance(format!(
            "item id `{id}` is reserved for auxiliary items"
        ))),
        None => Ok(()),
    }
}

/// Appends `n` auxiliary items per agent so that her WMMS equals her
/// proportional share.
///
/// For agent `i` with defining partition `B` the item for slot `j` costs her
/// `(WMMS_i / w_i) * w_j - v_i(B_j)` and nothing to anyone else. Agents
/// with zero WMMS (all costs zero) are padded with `w_j` per slot instead.
pub fn pad_to_proportional(inst: &Instance, budget: u64) -> Result<(Instance, Padding)> {
    let n = inst.n();
    let m = inst.m();
    let mut wmms = Vec::with_capacity(n);
    let mut partitions = Vec::with_capacity(n);
    for agent in 0..n {
        let (value, partition) = exact_wmms(inst, agent, budget)?;
        wmms.push(value);
        partitions.push(partition);
    }
    let ids: Vec<String> = (0..n)
        .flat_map(|i| (0..n).map(move |j| format!("aux2:{i}:{j}")))
        .collect();
    aux_id_collision(inst, &ids)?;
    let mut out = inst.clone();
    out.items.extend(ids);
    for row in &mut out.costs {
        row.extend(std::iter::repeat_n(Rational::zero(), n * n));
    }
    let mut aux = Vec::with_capacity(n * n);
    for i in 0..n {
        let level = if wmms[i].is_zero() {
            Rational::one()
        } else {
            &wmms[i] / inst.weight(i)
        };
        for (j, bundle) in partitions[i].iter().enumerate() {
            let value = &level * inst.weight(j) - inst.bundle_cost(i, bundle);
            debug_assert!(!value.is_negative());
            let index = m + i * n + j;
            out.costs[i][index] = value.clone();
            aux.push(AuxItem {
                agent: i,
                slot: j,
                index,
                value,
            });
        }
    }
    Ok((out, Padding { wmms, partitions, aux }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scaling {
    #[serde(with = "serde_q")]
    pub weight_total: Rational,
    #[serde(with = "serde_q::vec")]
    pub value_totals: Vec<Rational>,
}

/// Divides weights by their sum and each agent's costs by her total cost.
pub fn normalize(inst: &Instance) -> Result<(Instance, Scaling)> {
    let weight_total = inst.total_weight();
    let value_totals: Vec<Rational> = (0..inst.n()).map(|i| inst.total_cost(i)).collect();
    if let Some(i) = value_totals.iter().position(Zero::is_zero) {
        return Err(Error::InvalidParameter(format!(
            "agent `{}` has zero total cost and cannot be normalized",
            inst.agents[i].id
        )));
    }
    let agents = inst
        .agents
        .iter()
        .map(|a| Agent {
            id: a.id.clone(),
            weight: &a.weight / &weight_total,
        })
        .collect();
    let costs = inst
        .costs
        .iter()
        .zip(&value_totals)
        .map(|(row, total)| row.iter().map(|c| c / total).collect())
        .collect();
    let out = Instance {
        agents,
        items: inst.items.clone(),
        costs,
    };
    Ok((
        out,
        Scaling {
            weight_total,
            value_totals,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicRounding {
    /// The grid unit `w_max`.
    #[serde(with = "serde_q")]
    pub unit: Rational,
    pub partitions: Vec<Partition>,
    pub aux: Vec<AuxItem>,
}

/// Splits a nonnegative multiple of `unit` with dyadic ratio into terms
/// `unit * 2^k`, largest first.
pub fn dyadic_terms(residual: &Rational, unit: &Rational) -> Result<Vec<Rational>> {
    if residual.is_negative() {
        return Err(Error::InvalidParameter("negative residual".into()));
    }
    let ratio = residual / unit;
    let denom = ratio.denom();
    if !(denom & (denom - BigInt::one())).is_zero() {
        return Err(Error::InvalidParameter(format!(
            "residual {residual} is not a dyadic multiple of {unit}"
        )));
    }
    let shift = (denom.bits() - 1) as i64;
    let numer = ratio.numer();
    let mut terms = Vec::new();
    for bit in (0..numer.bits()).rev() {
        if numer.bit(bit) {
            terms.push(scale_pow2(unit, bit as i64 - shift));
        }
    }
    Ok(terms)
}

/// Rounds every cost down onto `w_max / 2^q` and, for each agent and each
/// bundle of her defining partition, appends auxiliary items whose dyadic
/// costs sum to what the bundle lost.
///
/// `partitions` supplies the defining partitions; when absent they are
/// computed with [`exact_wmms`].
pub fn dyadicize_values(
    inst: &Instance,
    partitions: Option<&[Partition]>,
    budget: u64,
) -> Result<(Instance, DyadicRounding)> {
    let n = inst.n();
    let unit = inst.max_weight();
    let partitions: Vec<Partition> = match partitions {
        Some(p) => p.to_vec(),
        None => (0..n)
            .map(|i| exact_wmms(inst, i, budget).map(|(_, p)| p))
            .collect::<Result<_>>()?,
    };
    for p in &partitions {
        inst.check_partition(p)?;
    }
    let mut out = inst.clone();
    for row in &mut out.costs {
        for c in row.iter_mut() {
            if c.is_positive() {
                let q = round_down_exponent(c, &unit);
                *c = scale_pow2(&unit, -q);
            }
        }
    }
    let mut pending: Vec<(usize, usize, Vec<Rational>)> = Vec::new();
    for (i, partition) in partitions.iter().enumerate() {
        for (j, bundle) in partition.iter().enumerate() {
            let residual = inst.bundle_cost(i, bundle) - out.bundle_cost(i, bundle);
            let terms = dyadic_terms(&residual, &unit)?;
            if !terms.is_empty() {
                pending.push((i, j, terms));
            }
        }
    }
    let ids: Vec<String> = pending
        .iter()
        .flat_map(|(i, j, terms)| (0..terms.len()).map(move |t| format!("aux4:{i}:{j}:{t}")))
        .collect();
    aux_id_collision(inst, &ids)?;
    let added = ids.len();
    out.items.extend(ids);
    for row in &mut out.costs {
        row.extend(std::iter::repeat_n(Rational::zero(), added));
    }
    let mut aux = Vec::with_capacity(added);
    let mut index = inst.m();
    for (i, j, terms) in pending {
        for value in terms {
            out.costs[i][index] = value.clone();
            aux.push(AuxItem {
                agent: i,
                slot: j,
                index,
                value,
            });
            index += 1;
        }
    }
    Ok((out, DyadicRounding { unit, partitions, aux }))
}

/// Everything needed to map an allocation of the canonical instance back.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalTrace {
    pub original: Instance,
    pub rounding: WeightRounding,
    pub rounded: Instance,
    pub padding: Padding,
    pub padded: Instance,
    pub scaling: Scaling,
    pub normalized: Instance,
    pub dyadic: DyadicRounding,
    pub dyadicized: Instance,
    pub ido: IdoTrace,
    /// Indices (in the dyadic-step instance) of every auxiliary item.
    pub aux_items: Vec<usize>,
}

/// Runs the full reduction and certifies the result as canonical.
///
/// Exponential only through the exact WMMS computation of the padding
/// step; the later defining partitions are derived from the padding.
pub fn to_canonical(inst: &Instance, budget: u64) -> Result<(CanonicalInstance, CanonicalTrace)> {
    let report = validate_instance(inst);
    if !report.is_valid() {
        return Err(Error::InvalidInstance(
            report
                .violations
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; "),
        ));
    }
    if inst.n() == 0 {
        return Err(Error::InvalidInstance("no agents".into()));
    }
    let n = inst.n();
    let m = inst.m();
    let (rounded, rounding) = round_weights(inst);
    let (padded, padding) = pad_to_proportional(&rounded, budget)?;
    let (normalized, scaling) = normalize(&padded)?;

    // Slot of every padded item in agent i's perfect partition.
    let slots: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut slot = vec![0; padded.m()];
            for (j, bundle) in padding.partitions[i].iter().enumerate() {
                for &e in bundle {
                    slot[e] = j;
                }
            }
            for a in &padding.aux {
                slot[a.index] = a.slot;
            }
            slot
        })
        .collect();
    let to_partition = |slot: &[usize]| {
        let mut p = vec![Vec::new(); n];
        for (e, &j) in slot.iter().enumerate() {
            p[j].push(e);
        }
        p
    };
    let partitions3: Vec<Partition> = slots.iter().map(|s| to_partition(s)).collect();
    let (dyadicized, dyadic) = dyadicize_values(&normalized, Some(&partitions3), budget)?;

    let slots4: Vec<Vec<usize>> = slots
        .into_iter()
        .map(|mut slot| {
            slot.resize(dyadicized.m(), 0);
            for a in &dyadic.aux {
                slot[a.index] = a.slot;
            }
            slot
        })
        .collect();
    let (ido_instance, ido) = to_ido(&dyadicized);
    let certificates: Vec<Partition> = (0..n)
        .map(|i| {
            let by_position: Vec<usize> = ido.order[i].iter().map(|&e| slots4[i][e]).collect();
            to_partition(&by_position)
        })
        .collect();
    let canonical = CanonicalInstance::with_certificates(ido_instance, &certificates)?;
    let trace = CanonicalTrace {
        original: inst.clone(),
        rounding,
        rounded,
        padding,
        padded,
        scaling,
        normalized,
        dyadic,
        dyadicized,
        ido,
        aux_items: (m..canonical.instance().m()).collect(),
    };
    Ok((canonical, trace))
}

/// Maps an allocation of the canonical instance back to the original items:
/// undo the identical ordering, then drop every auxiliary item.
pub fn lift_canonical_allocation(trace: &CanonicalTrace, alloc: &Allocation) -> Result<Allocation> {
    let lifted = lift_ido_allocation(&trace.ido, alloc)?;
    Ok(Allocation {
        owner: lifted.owner[..trace.original.m()].to_vec(),
    })
}
