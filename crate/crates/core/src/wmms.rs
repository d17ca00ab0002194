//! Weighted maximin share computation.
//!
//! An agent's WMMS is her weight times the optimal makespan of scheduling
//! her item costs (jobs) on machines whose speeds are the agent weights.
//! [`exact_wmms`] solves that makespan problem by branch and bound;
//! [`estimate_wmms`] searches a geometric grid of target makespans with a
//! decision procedure per target.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{Instance, Partition};
use crate::rational::Rational;
use crate::scaled::{fits_i128, ExactInt, Scaled};

/// Jobs with nonnegative loads on related machines with positive speeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MakespanProblem {
    pub jobs: Vec<Rational>,
    pub speeds: Vec<Rational>,
}

impl MakespanProblem {
    pub fn new(jobs: Vec<Rational>, speeds: Vec<Rational>) -> Result<Self> {
        if speeds.is_empty() {
            return Err(Error::InvalidParameter("no machines".into()));
        }
        if speeds.iter().any(|s| !s.is_positive()) {
            return Err(Error::InvalidParameter("machine speeds must be positive".into()));
        }
        if jobs.iter().any(Signed::is_negative) {
            return Err(Error::InvalidParameter("job loads must be nonnegative".into()));
        }
        Ok(MakespanProblem { jobs, speeds })
    }

    /// The scheduling view of one agent's WMMS.
    pub fn for_agent(inst: &Instance, agent: usize) -> Result<Self> {
        MakespanProblem::new(inst.costs[agent].clone(), inst.weights())
    }

    /// `max_j load_j / speed_j` for a job-to-machine assignment.
    pub fn makespan(&self, assignment: &[usize]) -> Rational {
        let mut loads = vec![Rational::zero(); self.speeds.len()];
        for (job, &machine) in assignment.iter().enumerate() {
            loads[machine] += &self.jobs[job];
        }
        loads
            .iter()
            .zip(&self.speeds)
            .map(|(l, s)| l / s)
            .max()
            .unwrap_or_else(Rational::zero)
    }

    fn total_load(&self) -> Rational {
        self.jobs.iter().sum()
    }

    fn total_speed(&self) -> Rational {
        self.speeds.iter().sum()
    }

    /// Indices of positive jobs in decreasing load order, ties by index.
    fn search_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.jobs.len()).filter(|&j| self.jobs[j].is_positive()).collect();
        order.sort_by(|&a, &b| self.jobs[b].cmp(&self.jobs[a]).then(a.cmp(&b)));
        order
    }
}

/// Cap on memoized states; beyond it the search continues without caching.
const MEMO_CAP: usize = 1 << 22;

/// Ratio `load / speed` kept as an integer pair.
#[derive(Clone)]
struct Ratio<T> {
    load: T,
    speed: T,
}

impl<T: ExactInt> Ratio<T> {
    fn lt(&self, other: &Self) -> bool {
        self.load.clone() * other.speed.clone() < other.load.clone() * self.speed.clone()
    }

    fn eq(&self, other: &Self) -> bool {
        self.load.clone() * other.speed.clone() == other.load.clone() * self.speed.clone()
    }
}

struct MinMaxSearch<'a, T> {
    jobs: Vec<T>,
    speeds: Vec<T>,
    classes: &'a [Vec<usize>],
    loads: Vec<T>,
    assign: Vec<usize>,
    best: Option<Ratio<T>>,
    best_assign: Vec<usize>,
    lower: Ratio<T>,
    memo: HashSet<(usize, Vec<T>)>,
    nodes: u64,
    budget: u64,
    done: bool,
}

impl<T: ExactInt> MinMaxSearch<'_, T> {
    fn key(&self, depth: usize) -> (usize, Vec<T>) {
        let mut key = Vec::with_capacity(self.loads.len());
        for class in self.classes {
            let start = key.len();
            key.extend(class.iter().map(|&m| self.loads[m].clone()));
            key[start..].sort();
        }
        (depth, key)
    }

    fn run(&mut self, depth: usize, current: Ratio<T>) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::BudgetExceeded { limit: self.budget });
        }
        if depth == self.jobs.len() {
            self.done = current.eq(&self.lower);
            self.best = Some(current);
            self.best_assign.clone_from(&self.assign);
            return Ok(());
        }
        if self.memo.len() < MEMO_CAP {
            let key = self.key(depth);
            if !self.memo.insert(key) {
                return Ok(());
            }
        }
        let job = self.jobs[depth].clone();
        for machine in 0..self.speeds.len() {
            let twin = (0..machine)
                .any(|other| self.speeds[other] == self.speeds[machine] && self.loads[other] == self.loads[machine]);
            if twin {
                continue;
            }
            let load = self.loads[machine].clone() + job.clone();
            let here = Ratio {
                load: load.clone(),
                speed: self.speeds[machine].clone(),
            };
            let next = if current.lt(&here) { here } else { current.clone() };
            if let Some(best) = &self.best {
                if !next.lt(best) {
                    continue;
                }
            }
            let previous = std::mem::replace(&mut self.loads[machine], load);
            self.assign[depth] = machine;
            self.run(depth + 1, next)?;
            self.loads[machine] = previous;
            if self.done {
                break;
            }
        }
        Ok(())
    }
}

fn speed_classes(speeds: &[Rational]) -> Vec<Vec<usize>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (m, s) in speeds.iter().enumerate() {
        match classes.iter_mut().find(|c| speeds[c[0]] == *s) {
            Some(c) => c.push(m),
            None => classes.push(vec![m]),
        }
    }
    classes
}

/// Minimum makespan and an optimal job-to-machine assignment.
///
/// Among optimal assignments the search returns the first one in its
/// exploration order: positive jobs by decreasing load, machines by index.
/// Zero-load jobs go to machine 0.
pub fn min_makespan(problem: &MakespanProblem, budget: u64) -> Result<(Rational, Vec<usize>)> {
    let order = problem.search_order();
    let mut assignment = vec![0; problem.jobs.len()];
    if order.is_empty() {
        return Ok((Rational::zero(), assignment));
    }
    let sorted: Vec<Rational> = order.iter().map(|&j| problem.jobs[j].clone()).collect();
    let jobs = Scaled::new(&sorted);
    let speeds = Scaled::new(&problem.speeds);
    let classes = speed_classes(&problem.speeds);
    let total = jobs.total();
    let small = fits_i128(std::iter::once(&total).chain(speeds.values.iter()));
    let (best_load, best_speed, best_assign) = if small {
        search_min_max::<i128>(&jobs, &speeds, &classes, budget)?
    } else {
        search_min_max::<BigInt>(&jobs, &speeds, &classes, budget)?
    };
    for (pos, &job) in order.iter().enumerate() {
        assignment[job] = best_assign[pos];
    }
    // load / (speed) in scaled units: (L / Dj) / (S / Ds)
    let makespan = Rational::new(best_load * &speeds.denom, best_speed * &jobs.denom);
    Ok((makespan, assignment))
}

fn search_min_max<T: ExactInt>(
    jobs: &Scaled,
    speeds: &Scaled,
    classes: &[Vec<usize>],
    budget: u64,
) -> Result<(BigInt, BigInt, Vec<usize>)> {
    let job_values: Vec<T> = jobs.convert();
    let speed_values: Vec<T> = speeds.convert();
    let lower = Ratio {
        load: T::from_big(&jobs.total()),
        speed: T::from_big(&speeds.total()),
    };
    let mut search = MinMaxSearch {
        loads: vec![T::zero(); speed_values.len()],
        assign: vec![0; job_values.len()],
        best_assign: Vec::new(),
        jobs: job_values,
        speeds: speed_values,
        classes,
        best: None,
        lower,
        memo: HashSet::new(),
        nodes: 0,
        budget,
        done: false,
    };
    let start = Ratio {
        load: T::zero(),
        speed: T::one(),
    };
    search.run(0, start)?;
    let best = search.best.expect("at least one complete assignment");
    Ok((best.load.to_big(), best.speed.to_big(), search.best_assign))
}

/// Exact WMMS of `agent` and a defining partition.
pub fn exact_wmms(inst: &Instance, agent: usize, budget: u64) -> Result<(Rational, Partition)> {
    let problem = MakespanProblem::for_agent(inst, agent)?;
    let (makespan, assignment) = min_makespan(&problem, budget)?;
    let mut partition = vec![Vec::new(); inst.n()];
    for (item, &slot) in assignment.iter().enumerate() {
        partition[slot].push(item);
    }
    Ok((inst.weight(agent) * makespan, partition))
}

/// Exact WMMS for every agent.
pub fn exact_profile(inst: &Instance, budget: u64) -> Result<crate::model::WmmsProfile> {
    let mut values = Vec::with_capacity(inst.n());
    let mut partitions = Vec::with_capacity(inst.n());
    for agent in 0..inst.n() {
        let (v, p) = exact_wmms(inst, agent, budget)?;
        values.push(v);
        partitions.push(p);
    }
    Ok(crate::model::WmmsProfile { values, partitions })
}

/// True iff every bundle satisfies `v_i(B_j) / w_j <= claimed / w_i`.
pub fn verify_partition(inst: &Instance, agent: usize, partition: &[Vec<usize>], claimed: &Rational) -> Result<bool> {
    inst.check_partition(partition)?;
    let wi = inst.weight(agent);
    Ok(partition
        .iter()
        .enumerate()
        .all(|(j, bundle)| inst.bundle_cost(agent, bundle) * wi <= claimed * inst.weight(j)))
}

/// Outcome of a decision query: an assignment meeting the target, or none.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feasibility {
    pub assignment: Option<Vec<usize>>,
    /// Whether the exhaustive backend answered; a `None` assignment is a
    /// proof of infeasibility only in that case.
    pub exhaustive: bool,
}

/// Decides whether every machine can finish by `target`.
///
/// Uses exhaustive search while it stays within `budget` nodes and
/// first-fit-decreasing beyond that.
pub fn feasible_makespan(problem: &MakespanProblem, target: &Rational, budget: u64) -> Feasibility {
    match exhaustive_feasible(problem, target, budget) {
        Ok(assignment) => Feasibility {
            assignment,
            exhaustive: true,
        },
        Err(_) => Feasibility {
            assignment: first_fit_decreasing(problem, target),
            exhaustive: false,
        },
    }
}

fn capacities(problem: &MakespanProblem, target: &Rational, job_denom: &BigInt) -> Vec<BigInt> {
    let scale = Rational::from_integer(job_denom.clone());
    problem
        .speeds
        .iter()
        .map(|s| (target * s * &scale).floor().to_integer())
        .collect()
}

/// Exhaustive decision search. `Err` only when the budget runs out.
pub fn exhaustive_feasible(problem: &MakespanProblem, target: &Rational, budget: u64) -> Result<Option<Vec<usize>>> {
    let order = problem.search_order();
    let mut assignment = vec![0; problem.jobs.len()];
    if target.is_negative() {
        return Ok(None);
    }
    if order.is_empty() {
        return Ok(Some(assignment));
    }
    let sorted: Vec<Rational> = order.iter().map(|&j| problem.jobs[j].clone()).collect();
    let jobs = Scaled::new(&sorted);
    let caps = capacities(problem, target, &jobs.denom);
    let total = jobs.total();
    let found = if fits_i128(std::iter::once(&total).chain(caps.iter())) {
        pack::<i128>(&jobs.convert(), &caps, budget)?
    } else {
        pack::<BigInt>(&jobs.convert(), &caps, budget)?
    };
    Ok(found.map(|packed| {
        for (pos, &job) in order.iter().enumerate() {
            assignment[job] = packed[pos];
        }
        assignment
    }))
}

fn pack<T: ExactInt>(jobs: &[T], caps: &[BigInt], budget: u64) -> Result<Option<Vec<usize>>> {
    struct Packer<'a, T> {
        jobs: &'a [T],
        caps: Vec<T>,
        loads: Vec<T>,
        assign: Vec<usize>,
        failed: HashSet<(usize, Vec<T>)>,
        nodes: u64,
        budget: u64,
    }

    impl<T: ExactInt> Packer<'_, T> {
        fn run(&mut self, depth: usize) -> Result<bool> {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Error::BudgetExceeded { limit: self.budget });
            }
            if depth == self.jobs.len() {
                return Ok(true);
            }
            let key = (depth, self.slack_key());
            if self.failed.contains(&key) {
                return Ok(false);
            }
            let job = self.jobs[depth].clone();
            for machine in 0..self.caps.len() {
                let slack = self.caps[machine].clone() - self.loads[machine].clone();
                let twin = (0..machine).any(|o| self.caps[o].clone() - self.loads[o].clone() == slack);
                if twin {
                    continue;
                }
                let load = self.loads[machine].clone() + job.clone();
                if load > self.caps[machine] {
                    continue;
                }
                let previous = std::mem::replace(&mut self.loads[machine], load);
                self.assign[depth] = machine;
                let ok = self.run(depth + 1)?;
                self.loads[machine] = previous;
                if ok {
                    return Ok(true);
                }
            }
            if self.failed.len() < MEMO_CAP {
                self.failed.insert(key);
            }
            Ok(false)
        }

        /// Remaining capacities, sorted; machines with equal slack are
        /// interchangeable for the rest of the search.
        fn slack_key(&self) -> Vec<T> {
            let mut slack: Vec<T> = self
                .caps
                .iter()
                .zip(&self.loads)
                .map(|(c, l)| c.clone() - l.clone())
                .collect();
            slack.sort();
            slack
        }
    }

    let mut packer = Packer {
        jobs,
        caps: caps.iter().map(T::from_big).collect(),
        loads: vec![T::zero(); caps.len()],
        assign: vec![0; jobs.len()],
        failed: HashSet::new(),
        nodes: 0,
        budget,
    };
    Ok(packer.run(0)?.then_some(packer.assign))
}

/// First-fit decreasing: jobs by decreasing load onto the first machine, in
/// decreasing speed order, that still meets the target.
pub fn first_fit_decreasing(problem: &MakespanProblem, target: &Rational) -> Option<Vec<usize>> {
    let mut machines: Vec<usize> = (0..problem.speeds.len()).collect();
    machines.sort_by(|&a, &b| problem.speeds[b].cmp(&problem.speeds[a]).then(a.cmp(&b)));
    let caps: Vec<Rational> = problem.speeds.iter().map(|s| s * target).collect();
    let mut loads = vec![Rational::zero(); problem.speeds.len()];
    let mut assignment = vec![machines[0]; problem.jobs.len()];
    for job in problem.search_order() {
        let load = &problem.jobs[job];
        let slot = machines.iter().copied().find(|&m| &loads[m] + load <= caps[m])?;
        loads[slot] += load;
        assignment[job] = slot;
    }
    Some(assignment)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WmmsEstimate {
    pub value: Rational,
    /// False when some feasibility probe fell back to first-fit-decreasing;
    /// the value is then still an upper bound on the WMMS but the `(1+eps)`
    /// bracket is no longer guaranteed.
    pub exhaustive: bool,
}

/// Upper estimate of the WMMS within a factor `1 + eps` (under the
/// exhaustive backend).
///
/// Binary-searches targets `L * (1+eps)^k` where `L` is the proportional
/// makespan, and reports the makespan actually achieved at the smallest
/// feasible target.
pub fn estimate_wmms(inst: &Instance, agent: usize, eps: &Rational, budget: u64) -> Result<WmmsEstimate> {
    if !eps.is_positive() {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let problem = MakespanProblem::for_agent(inst, agent)?;
    let total = problem.total_load();
    if total.is_zero() {
        return Ok(WmmsEstimate {
            value: Rational::zero(),
            exhaustive: true,
        });
    }
    let lower = &total / problem.total_speed();
    let upper = &total / inst.max_weight();
    let step = Rational::one() + eps;
    let grid = |k: usize| &lower * num_traits::pow(step.clone(), k);
    let mut top = 0usize;
    while grid(top) < upper {
        top = (top.max(1)) * 2;
    }
    let mut exhaustive = true;
    let mut probe = |k: usize| {
        let target = if k == top { upper.clone().max(grid(k)) } else { grid(k) };
        let answer = feasible_makespan(&problem, &target, budget);
        exhaustive &= answer.exhaustive;
        answer.assignment
    };
    let mut best = probe(top).expect("everything fits on the fastest machine");
    let (mut lo, mut hi) = (0usize, top);
    while lo < hi {
        let mid = (lo + hi) / 2;
        match probe(mid) {
            Some(assignment) => {
                best = assignment;
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    Ok(WmmsEstimate {
        value: inst.weight(agent) * problem.makespan(&best),
        exhaustive,
    })
}
