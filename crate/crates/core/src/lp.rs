//! The polynomial-time route: WMMS estimates, a generalized-assignment LP,
//! an exact vertex solution, and rounding to an integral allocation.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance};
use crate::rational::{format_rational, int, Rational};
use crate::wmms::estimate_wmms;

/// Feasibility LP over eligible (agent, item) pairs:
///
/// * `sum_e v_i(e) x_ie <= (1 + eps) alpha est_i` for every agent,
/// * `sum_i x_ie = 1` for every item,
///
/// where `(i, e)` is eligible iff `v_i(e) <= (1 + eps) min(alpha, 1) est_i`.
/// Below `alpha = 1` the item cap shrinks with `alpha`: no item of an
/// `alpha`-WMMS bundle costs more than `alpha WMMS_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentLp {
    pub n: usize,
    pub m: usize,
    /// Eligible pairs, ordered by item then agent.
    pub pairs: Vec<(usize, usize)>,
    pub pair_costs: Vec<Rational>,
    pub capacities: Vec<Rational>,
    /// Largest cost allowed for a single eligible item, per agent.
    pub item_caps: Vec<Rational>,
    pub alpha: Rational,
    pub eps: Rational,
}

pub fn build_lp(inst: &Instance, estimates: &[Rational], alpha: &Rational, eps: &Rational) -> Result<AssignmentLp> {
    if estimates.len() != inst.n() {
        return Err(Error::InvalidParameter(format!(
            "{} estimates for {} agents",
            estimates.len(),
            inst.n()
        )));
    }
    if !eps.is_positive() {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    if !alpha.is_positive() {
        return Err(Error::InvalidParameter("alpha must be positive".into()));
    }
    let grow = Rational::one() + eps;
    let cap_scale = &grow * alpha.min(&Rational::one());
    let item_caps: Vec<Rational> = estimates.iter().map(|e| &cap_scale * e).collect();
    let capacities: Vec<Rational> = estimates.iter().map(|e| &grow * alpha * e).collect();
    let mut pairs = Vec::new();
    let mut pair_costs = Vec::new();
    let mut orphans = Vec::new();
    for e in 0..inst.m() {
        let before = pairs.len();
        for (i, cap) in item_caps.iter().enumerate() {
            if inst.cost(i, e) <= cap {
                pairs.push((i, e));
                pair_costs.push(inst.cost(i, e).clone());
            }
        }
        if pairs.len() == before {
            orphans.push(inst.items[e].clone());
        }
    }
    if !orphans.is_empty() {
        return Err(Error::NoEligibleAgent(orphans));
    }
    Ok(AssignmentLp {
        n: inst.n(),
        m: inst.m(),
        pairs,
        pair_costs,
        capacities,
        item_caps,
        alpha: alpha.clone(),
        eps: eps.clone(),
    })
}

/// Nonzero entries of a fractional assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionalAssignment {
    pub n: usize,
    pub m: usize,
    /// `(agent, item, x)` with `x > 0`, ordered by item then agent.
    pub entries: Vec<(usize, usize, Rational)>,
}

impl FractionalAssignment {
    pub fn support(&self) -> usize {
        self.entries.len()
    }

    pub fn column_sums(&self) -> Vec<Rational> {
        let mut sums = vec![Rational::zero(); self.m];
        for (_, e, x) in &self.entries {
            sums[*e] += x;
        }
        sums
    }

    /// `sum_e v_i(e) x_ie` per agent.
    pub fn loads(&self, inst: &Instance) -> Vec<Rational> {
        let mut loads = vec![Rational::zero(); self.n];
        for (i, e, x) in &self.entries {
            loads[*i] += inst.cost(*i, *e) * x;
        }
        loads
    }

    pub fn is_integral(&self) -> bool {
        self.entries.iter().all(|(_, _, x)| x.is_one())
    }
}

/// Phase-one primal simplex with Bland's rule on the dense tableau
/// `[pairs | slacks | artificials]`. Returns a vertex or `None` when the
/// LP is infeasible.
pub fn solve_basic_feasible(lp: &AssignmentLp) -> Option<FractionalAssignment> {
    let (n, m, p) = (lp.n, lp.m, lp.pairs.len());
    let rows = n + m;
    let cols = p + n + m;
    let mut t = vec![vec![Rational::zero(); cols]; rows];
    let mut rhs = Vec::with_capacity(rows);
    for (k, &(i, e)) in lp.pairs.iter().enumerate() {
        t[i][k] = lp.pair_costs[k].clone();
        t[n + e][k] = Rational::one();
    }
    for i in 0..n {
        t[i][p + i] = Rational::one();
        rhs.push(lp.capacities[i].clone());
    }
    for e in 0..m {
        t[n + e][p + n + e] = Rational::one();
        rhs.push(Rational::one());
    }
    let mut basis: Vec<usize> = (p..cols).collect();
    // Reduced costs of the artificial-sum objective; `value` is its level.
    let mut reduced = vec![Rational::zero(); cols];
    for row in &t[n..] {
        for (j, a) in row.iter().enumerate().take(p + n) {
            reduced[j] -= a;
        }
    }
    let mut value = Rational::from_integer(m.into());

    while let Some(enter) = (0..cols).find(|&j| reduced[j].is_negative()) {
        let mut leave: Option<(usize, Rational)> = None;
        for r in 0..rows {
            if !t[r][enter].is_positive() {
                continue;
            }
            let ratio = &rhs[r] / &t[r][enter];
            let better = match &leave {
                None => true,
                Some((best, q)) => ratio < *q || (ratio == *q && basis[r] < basis[*best]),
            };
            if better {
                leave = Some((r, ratio));
            }
        }
        // Phase one is bounded below by zero, so a leaving row exists.
        let (r, _) = leave.expect("bounded phase-one objective");
        let pivot = t[r][enter].clone();
        for a in t[r].iter_mut() {
            *a /= &pivot;
        }
        rhs[r] /= &pivot;
        let pivot_row = t[r].clone();
        let pivot_rhs = rhs[r].clone();
        for (s, row) in t.iter_mut().enumerate() {
            if s == r || row[enter].is_zero() {
                continue;
            }
            let f = row[enter].clone();
            for (a, b) in row.iter_mut().zip(&pivot_row) {
                if !b.is_zero() {
                    *a -= &f * b;
                }
            }
            rhs[s] -= &f * &pivot_rhs;
        }
        let f = reduced[enter].clone();
        for (a, b) in reduced.iter_mut().zip(&pivot_row) {
            if !b.is_zero() {
                *a -= &f * b;
            }
        }
        value += &f * &pivot_rhs;
        basis[r] = enter;
    }
    if !value.is_zero() {
        return None;
    }
    let mut entries: Vec<(usize, usize, Rational)> = basis
        .iter()
        .zip(&rhs)
        .filter(|(&j, x)| j < p && x.is_positive())
        .map(|(&j, x)| (lp.pairs[j].0, lp.pairs[j].1, x.clone()))
        .collect();
    entries.sort_by_key(|a| (a.1, a.0));
    Some(FractionalAssignment { n, m, entries })
}

/// Integrally assigned items stay put. The items split between several
/// agents form a bipartite support graph in which every component has at
/// most as many edges as nodes and every item has degree at least two, so
/// Hall's condition holds and each split item can be matched to its own
/// agent. Matching is by augmenting paths, items in order, agents by index.
pub fn round_fractional(inst: &Instance, frac: &FractionalAssignment) -> Result<Allocation> {
    let (n, m) = (frac.n, frac.m);
    if n != inst.n() || m != inst.m() {
        return Err(Error::InvalidParameter(
            "fractional assignment does not match the instance".into(),
        ));
    }
    let sums = frac.column_sums();
    if let Some(e) = sums.iter().position(|s| !s.is_one()) {
        return Err(Error::SupportInvariant(format!(
            "item `{}` is covered {} times",
            inst.items[e], sums[e]
        )));
    }
    let mut alloc = Allocation::empty(m);
    let mut split: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (i, e, x) in &frac.entries {
        if x.is_one() {
            alloc.owner[*e] = Some(*i);
        } else {
            split[*e].push(*i);
        }
    }
    check_pseudoforest(n, &split)?;

    let mut matched_item: Vec<Option<usize>> = vec![None; n];
    for e in (0..m).filter(|&e| !split[e].is_empty()) {
        let mut seen = vec![false; n];
        if !augment(e, &split, &mut matched_item, &mut seen) {
            return Err(Error::SupportInvariant(format!(
                "no agent left for split item `{}`",
                inst.items[e]
            )));
        }
    }
    for (i, item) in matched_item.iter().enumerate() {
        if let Some(e) = item {
            alloc.owner[*e] = Some(i);
        }
    }
    Ok(alloc)
}

fn augment(e: usize, split: &[Vec<usize>], matched_item: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &i in &split[e] {
        if seen[i] {
            continue;
        }
        seen[i] = true;
        let free = match matched_item[i] {
            None => true,
            Some(other) => augment(other, split, matched_item, seen),
        };
        if free {
            matched_item[i] = Some(e);
            return true;
        }
    }
    false
}

fn check_pseudoforest(n: usize, split: &[Vec<usize>]) -> Result<()> {
    // union-find over agents 0..n and items n..n+m
    let mut parent: Vec<usize> = (0..n + split.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (e, agents) in split.iter().enumerate() {
        for &i in agents {
            let (a, b) = (find(&mut parent, i), find(&mut parent, n + e));
            parent[a] = b;
        }
    }
    let mut nodes = vec![0usize; parent.len()];
    let mut edges = vec![0usize; parent.len()];
    for (e, agents) in split.iter().enumerate() {
        if agents.is_empty() {
            continue;
        }
        let root = find(&mut parent, n + e);
        nodes[root] += 1;
        edges[root] += agents.len();
    }
    let mut agent_seen = vec![false; n];
    for agents in split {
        for &i in agents {
            if !agent_seen[i] {
                agent_seen[i] = true;
                let root = find(&mut parent, i);
                nodes[root] += 1;
            }
        }
    }
    match (0..parent.len()).find(|&r| edges[r] > nodes[r]) {
        Some(_) => Err(Error::SupportInvariant(
            "a support component has more edges than nodes".into(),
        )),
        None => Ok(()),
    }
}

/// Exact audit of one rounding step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundingAudit {
    pub support: usize,
    /// `n + m`.
    pub support_limit: usize,
    /// Items received beyond those fractionally held in full, per agent.
    pub extra_items: Vec<usize>,
    /// Costs after rounding and the bound `load + largest eligible item`.
    pub costs: Vec<Rational>,
    pub bounds: Vec<Rational>,
    pub ineligible: Vec<(usize, usize)>,
}

impl RoundingAudit {
    pub fn pass(&self) -> bool {
        self.support <= self.support_limit
            && self.extra_items.iter().all(|&k| k <= 1)
            && self.costs.iter().zip(&self.bounds).all(|(c, b)| c <= b)
            && self.ineligible.is_empty()
    }
}

pub fn audit_rounding(
    inst: &Instance,
    lp: &AssignmentLp,
    frac: &FractionalAssignment,
    alloc: &Allocation,
) -> RoundingAudit {
    let loads = frac.loads(inst);
    let mut extra_items = vec![0; inst.n()];
    let mut ineligible = Vec::new();
    let mut costs = vec![Rational::zero(); inst.n()];
    let mut largest = vec![Rational::zero(); inst.n()];
    for &(i, e) in &lp.pairs {
        if inst.cost(i, e) > &largest[i] {
            largest[i] = inst.cost(i, e).clone();
        }
    }
    for (e, owner) in alloc.owner.iter().enumerate() {
        let Some(i) = *owner else { continue };
        costs[i] += inst.cost(i, e);
        if !lp.pairs.contains(&(i, e)) {
            ineligible.push((i, e));
        }
        let full = frac.entries.iter().any(|(a, b, x)| *a == i && *b == e && x.is_one());
        if !full {
            extra_items[i] += 1;
        }
    }
    let bounds = loads.iter().zip(&largest).map(|(l, c)| l + c).collect();
    RoundingAudit {
        support: frac.support(),
        support_limit: inst.n() + inst.m(),
        extra_items,
        costs,
        bounds,
        ineligible,
    }
}

/// Result of [`solve_polytime`].
#[derive(Debug, Clone)]
pub struct PolytimeSolution {
    pub allocation: Allocation,
    pub estimates: Vec<Rational>,
    /// Whether every estimate came from an exhaustive search.
    pub exact_estimates: bool,
    /// Smallest feasible grid point.
    pub alpha: Rational,
    pub lp: AssignmentLp,
    pub fractional: FractionalAssignment,
    /// `C` with `v_i(A_i) <= C * est_i` for every agent:
    /// `(1 + eps)(alpha + min(alpha, 1))`.
    pub guarantee: Rational,
}

impl PolytimeSolution {
    /// Each agent's cost divided by her estimate (`0/0 = 0`).
    pub fn estimate_ratios(&self, inst: &Instance) -> Vec<Option<Rational>> {
        self.allocation
            .agent_costs(inst)
            .iter()
            .zip(&self.estimates)
            .map(|(c, e)| crate::model::share_ratio(c, e))
            .collect()
    }
}

/// Rounds `x` up to a multiple of `1 / denom`.
fn ceil_to(x: &Rational, denom: &num_bigint::BigInt) -> Rational {
    let scaled = (x * Rational::from_integer(denom.clone())).ceil();
    scaled / Rational::from_integer(denom.clone())
}

fn floor_to(x: &Rational, denom: &num_bigint::BigInt) -> Rational {
    let scaled = (x * Rational::from_integer(denom.clone())).floor();
    scaled / Rational::from_integer(denom.clone())
}

/// The alpha grid `..., (1+eps)^-1, 1, (1+eps), ... , alpha_max`, going down
/// until a point is at most `eps / (1 + eps)`. Points are rounded away from
/// 1 onto a fixed denominator so the simplex keeps small numbers;
/// consecutive points still differ by a factor of at least `1 + eps`.
pub fn alpha_grid(eps: &Rational, alpha_max: &Rational) -> Vec<Rational> {
    let denom = eps.denom() * num_bigint::BigInt::from(1024);
    let grow = Rational::one() + eps;
    let floor = eps / &grow;
    let mut grid = vec![Rational::one()];
    while grid.last().expect("nonempty") > &floor {
        let next = floor_to(&(grid.last().expect("nonempty") / &grow), &denom);
        if !next.is_positive() {
            break;
        }
        grid.push(next);
    }
    grid.reverse();
    while grid.last().expect("nonempty") < alpha_max {
        let next = ceil_to(&(grid.last().expect("nonempty") * &grow), &denom);
        grid.push(if &next > alpha_max { alpha_max.clone() } else { next });
    }
    grid
}

/// Estimate every WMMS within `1 + eps`, binary-search the smallest feasible
/// alpha on the grid up to `alpha_max` (default 12), and round its vertex.
pub fn solve_polytime(
    inst: &Instance,
    eps: &Rational,
    alpha_max: Option<&Rational>,
    budget: u64,
) -> Result<PolytimeSolution> {
    if !eps.is_positive() {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let ceiling = alpha_max.cloned().unwrap_or_else(|| int(12));
    if ceiling < Rational::one() {
        return Err(Error::InvalidParameter("alpha ceiling below 1".into()));
    }
    let mut estimates = Vec::with_capacity(inst.n());
    let mut exact_estimates = true;
    for i in 0..inst.n() {
        let est = estimate_wmms(inst, i, eps, budget)?;
        exact_estimates &= est.exhaustive;
        estimates.push(est.value);
    }
    let grid = alpha_grid(eps, &ceiling);
    let attempt = |k: usize| -> Result<Option<(AssignmentLp, FractionalAssignment)>> {
        let lp = match build_lp(inst, &estimates, &grid[k], eps) {
            Ok(lp) => lp,
            Err(Error::NoEligibleAgent(_)) if k + 1 < grid.len() => return Ok(None),
            Err(e) => return Err(e),
        };
        Ok(solve_basic_feasible(&lp).map(|f| (lp, f)))
    };
    let Some(top) = attempt(grid.len() - 1)? else {
        return Err(Error::NoFeasibleAlpha {
            ceiling: format_rational(&ceiling),
        });
    };
    let (mut lo, mut hi) = (0usize, grid.len() - 1);
    let mut found = top;
    // invariant: grid[hi] feasible; everything below lo infeasible
    while lo < hi {
        let mid = (lo + hi) / 2;
        match attempt(mid)? {
            Some(sol) => {
                hi = mid;
                found = sol;
            }
            None => lo = mid + 1,
        }
    }
    let (lp, fractional) = found;
    let allocation = round_fractional(inst, &fractional)?;
    let guarantee = (Rational::one() + eps) * (&grid[hi] + grid[hi].clone().min(Rational::one()));
    Ok(PolytimeSolution {
        allocation,
        estimates,
        exact_estimates,
        alpha: grid[hi].clone(),
        lp,
        fractional,
        guarantee,
    })
}
