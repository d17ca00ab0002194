//! Brute-force ground truth.
//!
//! Everything here enumerates all `n^m` complete allocations with a plain
//! odometer and keeps running loads. No pruning, no memoization, and no
//! code shared with [`crate::wmms`], so agreement between the two is a real
//! cross-check.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::model::{share_ratio, Allocation, Instance};
use crate::rational::Rational;
use crate::scaled::{fits_bits, ExactInt, Scaled};

/// Number of complete allocations, `n^m`, if it is within `budget`.
pub fn allocation_count(n: usize, m: usize, budget: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidInstance("no agents".into()));
    }
    (n as u64)
        .checked_pow(m as u32)
        .filter(|&c| c <= budget)
        .ok_or(Error::BudgetExceeded { limit: budget })
}

/// Mixed-radix counter over item owners; the last item changes fastest.
#[derive(Debug, Clone)]
pub struct Allocations {
    n: usize,
    digits: Vec<usize>,
    started: bool,
    finished: bool,
}

impl Iterator for Allocations {
    type Item = Allocation;

    fn next(&mut self) -> Option<Allocation> {
        if self.finished {
            return None;
        }
        if self.started {
            let mut pos = self.digits.len();
            loop {
                if pos == 0 {
                    self.finished = true;
                    return None;
                }
                pos -= 1;
                self.digits[pos] = (self.digits[pos] + 1) % self.n;
                if self.digits[pos] != 0 {
                    break;
                }
            }
        }
        self.started = true;
        Some(Allocation::from_owners(self.digits.iter().copied()))
    }
}

/// Every complete allocation, each item independently assigned.
pub fn enumerate_allocations(inst: &Instance, budget: u64) -> Result<Allocations> {
    allocation_count(inst.n(), inst.m(), budget)?;
    Ok(Allocations {
        n: inst.n(),
        digits: vec![0; inst.m()],
        started: false,
        finished: false,
    })
}

/// Drives the odometer, reporting every single-item move as
/// `(item, from, to)` and calling `visit` once per allocation.
fn odometer(n: usize, m: usize, mut moved: impl FnMut(usize, usize, usize), mut visit: impl FnMut(&[usize])) {
    let mut digits = vec![0usize; m];
    loop {
        visit(&digits);
        let mut pos = m;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            let from = digits[pos];
            let to = (from + 1) % n;
            digits[pos] = to;
            moved(pos, from, to);
            if to != 0 {
                break;
            }
        }
    }
}

fn brute_min_max<T: ExactInt>(costs: &[Vec<T>], weights: &[T], agents: &[usize]) -> Vec<(T, T)> {
    let n = weights.len();
    let m = costs.first().map_or(0, Vec::len);
    let mut loads: Vec<Vec<T>> = agents
        .iter()
        .map(|&i| {
            let mut row = vec![T::zero(); n];
            row[0] = costs[i].iter().cloned().fold(T::zero(), |a, b| a + b);
            row
        })
        .collect();
    let mut best: Vec<Option<(T, T)>> = vec![None; agents.len()];
    let loads_cell = std::cell::RefCell::new(&mut loads);
    odometer(
        n,
        m,
        |item, from, to| {
            let mut loads = loads_cell.borrow_mut();
            for (k, &i) in agents.iter().enumerate() {
                let c = costs[i][item].clone();
                loads[k][from] = loads[k][from].clone() - c.clone();
                loads[k][to] = loads[k][to].clone() + c;
            }
        },
        |_| {
            let loads = loads_cell.borrow();
            for (k, row) in loads.iter().enumerate() {
                let mut worst = (row[0].clone(), weights[0].clone());
                for j in 1..n {
                    if row[j].clone() * worst.1.clone() > worst.0.clone() * weights[j].clone() {
                        worst = (row[j].clone(), weights[j].clone());
                    }
                }
                let better = match &best[k] {
                    None => true,
                    Some((l, w)) => worst.0.clone() * w.clone() < l.clone() * worst.1.clone(),
                };
                if better {
                    best[k] = Some(worst);
                }
            }
        },
    );
    best.into_iter().map(|b| b.expect("at least one allocation")).collect()
}

struct Scaling {
    costs: Vec<Scaled>,
    weights: Scaled,
}

impl Scaling {
    fn new(inst: &Instance) -> Self {
        Scaling {
            costs: inst.costs.iter().map(|row| Scaled::new(row)).collect(),
            weights: Scaled::new(&inst.weights()),
        }
    }

    fn magnitudes(&self) -> Vec<BigInt> {
        let mut out: Vec<BigInt> = self.costs.iter().map(Scaled::total).collect();
        out.push(self.weights.total());
        out
    }
}

/// WMMS of the listed agents by exhaustive enumeration.
pub fn brute_wmms_of(inst: &Instance, agents: &[usize], budget: u64) -> Result<Vec<Rational>> {
    allocation_count(inst.n(), inst.m(), budget)?;
    let scaling = Scaling::new(inst);
    let raw = if fits_bits(&scaling.magnitudes(), 60) {
        let costs: Vec<Vec<i128>> = scaling.costs.iter().map(Scaled::convert).collect();
        brute_min_max::<i128>(&costs, &scaling.weights.convert(), agents)
            .into_iter()
            .map(|(l, w)| (l.to_big(), w.to_big()))
            .collect::<Vec<_>>()
    } else {
        let costs: Vec<Vec<BigInt>> = scaling.costs.iter().map(Scaled::convert).collect();
        brute_min_max::<BigInt>(&costs, &scaling.weights.convert(), agents)
    };
    Ok(agents
        .iter()
        .zip(raw)
        .map(|(&i, (load, weight))| {
            // (load / Dc_i) / (weight / Dw)
            let ratio = Rational::new(load * &scaling.weights.denom, weight * &scaling.costs[i].denom);
            inst.weight(i) * ratio
        })
        .collect())
}

pub fn brute_wmms(inst: &Instance, agent: usize, budget: u64) -> Result<Rational> {
    Ok(brute_wmms_of(inst, &[agent], budget)?.remove(0))
}

pub fn brute_profile(inst: &Instance, budget: u64) -> Result<Vec<Rational>> {
    let all: Vec<usize> = (0..inst.n()).collect();
    brute_wmms_of(inst, &all, budget)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptimalRatio {
    /// `None` when every allocation gives positive cost to an agent whose
    /// WMMS is zero.
    pub alpha: Option<Rational>,
    pub allocation: Allocation,
    pub wmms: Vec<Rational>,
}

/// Smallest achievable `max_i v_i(A_i) / WMMS_i` and the first allocation
/// (in enumeration order) that attains it.
pub fn optimal_ratio(inst: &Instance, budget: u64) -> Result<OptimalRatio> {
    let wmms = brute_profile(inst, budget)?;
    let scaled: Vec<Scaled> = inst.costs.iter().map(|row| Scaled::new(row)).collect();
    // ratio_i = c_i * num_i / den_i with c_i the scaled own cost.
    let mut num = Vec::new();
    let mut den = Vec::new();
    for (i, share) in wmms.iter().enumerate() {
        num.push(share.denom().clone());
        den.push(share.numer() * &scaled[i].denom);
    }
    let mut magnitudes: Vec<BigInt> = scaled.iter().map(Scaled::total).collect();
    magnitudes.extend(num.iter().cloned());
    magnitudes.extend(den.iter().cloned());
    let found = if fits_bits(&magnitudes, 40) {
        let costs: Vec<Vec<i128>> = scaled.iter().map(Scaled::convert).collect();
        let num: Vec<i128> = num.iter().map(i128::from_big).collect();
        let den: Vec<i128> = den.iter().map(i128::from_big).collect();
        brute_min_ratio(&costs, &num, &den)
    } else {
        let costs: Vec<Vec<BigInt>> = scaled.iter().map(Scaled::convert).collect();
        brute_min_ratio(&costs, &num, &den)
    };
    let (owners, any_bounded) = found;
    let allocation = Allocation::from_owners(owners);
    let alpha = if any_bounded {
        let costs = allocation.agent_costs(inst);
        let ratios: Option<Vec<Rational>> = costs.iter().zip(&wmms).map(|(c, w)| share_ratio(c, w)).collect();
        ratios.map(|r| r.into_iter().max().unwrap_or_else(Rational::zero))
    } else {
        None
    };
    Ok(OptimalRatio {
        alpha,
        allocation,
        wmms,
    })
}

/// Returns the owners of the best allocation and whether any allocation
/// had a finite ratio.
fn brute_min_ratio<T: ExactInt>(costs: &[Vec<T>], num: &[T], den: &[T]) -> (Vec<usize>, bool) {
    let n = costs.len();
    let m = costs.first().map_or(0, Vec::len);
    let mut own = vec![T::zero(); n];
    own[0] = costs[0].iter().cloned().fold(T::zero(), |a, b| a + b);
    let own_cell = std::cell::RefCell::new(&mut own);
    let mut best: Option<(T, T)> = None;
    let mut best_owners = vec![0; m];
    odometer(
        n,
        m,
        |item, from, to| {
            let mut own = own_cell.borrow_mut();
            own[from] = own[from].clone() - costs[from][item].clone();
            own[to] = own[to].clone() + costs[to][item].clone();
        },
        |digits| {
            let own = own_cell.borrow();
            // Worst ratio as a fraction (top, bottom); bottom zero means unbounded.
            let mut worst: (T, T) = (T::zero(), T::one());
            for i in 0..n {
                if own[i].is_zero() {
                    continue;
                }
                if den[i].is_zero() {
                    return;
                }
                let top = own[i].clone() * num[i].clone();
                if top.clone() * worst.1.clone() > worst.0.clone() * den[i].clone() {
                    worst = (top, den[i].clone());
                }
            }
            let better = match &best {
                None => true,
                Some((t, b)) => worst.0.clone() * b.clone() < t.clone() * worst.1.clone(),
            };
            if better {
                best = Some(worst);
                best_owners.copy_from_slice(digits);
            }
        },
    );
    (best_owners, best.is_some())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentCheck {
    pub cost: Rational,
    pub wmms: Rational,
    /// `None` for a positive cost against a zero WMMS.
    pub ratio: Option<Rational>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaReport {
    pub agents: Vec<AgentCheck>,
    pub pass: bool,
}

impl AlphaReport {
    /// Largest per-agent ratio, or `None` if some ratio is unbounded.
    pub fn max_ratio(&self) -> Option<Rational> {
        self.agents
            .iter()
            .map(|a| a.ratio.clone())
            .collect::<Option<Vec<_>>>()
            .map(|r| r.into_iter().max().unwrap_or_else(Rational::zero))
    }
}

/// Checks `v_i(A_i) <= alpha * WMMS_i` for every agent.
pub fn verify_alpha(inst: &Instance, alloc: &Allocation, wmms: &[Rational], alpha: &Rational) -> Result<AlphaReport> {
    alloc.require_complete()?;
    if wmms.len() != inst.n() {
        return Err(Error::InvalidParameter(format!(
            "{} shares for {} agents",
            wmms.len(),
            inst.n()
        )));
    }
    let agents: Vec<AgentCheck> = alloc
        .agent_costs(inst)
        .into_iter()
        .zip(wmms)
        .map(|(cost, share)| AgentCheck {
            pass: cost <= alpha * share,
            ratio: share_ratio(&cost, share),
            cost,
            wmms: share.clone(),
        })
        .collect();
    let pass = agents.iter().all(|a| a.pass);
    Ok(AlphaReport { agents, pass })
}
