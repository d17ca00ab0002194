//! Instance generators: the two-agent example, seeded random instances and
//! certified canonical instances.

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::canonical::CanonicalInstance;
use crate::error::{Error, Result};
use crate::model::{instance_from_rows, Instance, Partition};
use crate::rational::{int, q, scale_pow2, Rational};
use crate::reduce::{to_canonical, CanonicalTrace};

/// Two agents with weights `(1 - eps, eps)` and two items costing `1/2`
/// to both. Requires `0 < eps < 1/3`.
pub fn example_table1(eps: &Rational) -> Result<Instance> {
    if !(eps > &Rational::zero() && eps < &q(1, 3)) {
        return Err(Error::InvalidParameter(format!("eps = {eps} is outside (0, 1/3)")));
    }
    Ok(instance_from_rows(
        vec![Rational::one() - eps, eps.clone()],
        vec![vec![q(1, 2), q(1, 2)]; 2],
    ))
}

/// Distribution of [`gen_random`]: weights `k / weight_denominator` with
/// `k` in `1..=weight_denominator`, costs `k / cost_denominator` with `k` in
/// `1..=cost_max`, or zero with probability `zero_probability`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSpec {
    pub weight_denominator: u32,
    pub cost_denominator: u32,
    pub cost_max: u32,
    pub zero_probability: f64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec {
            weight_denominator: 8,
            cost_denominator: 12,
            cost_max: 12,
            zero_probability: 0.0,
        }
    }
}

pub fn gen_random(seed: u64, n: usize, m: usize, spec: &RandomSpec) -> Result<Instance> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("n and m must be positive".into()));
    }
    if spec.weight_denominator == 0 || spec.cost_denominator == 0 || spec.cost_max == 0 {
        return Err(Error::InvalidParameter("empty random range".into()));
    }
    if !(0.0..=1.0).contains(&spec.zero_probability) {
        return Err(Error::InvalidParameter("zero probability outside [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wd = i64::from(spec.weight_denominator);
    let cd = i64::from(spec.cost_denominator);
    let weights = (0..n).map(|_| q(rng.gen_range(1..=wd), wd)).collect();
    let costs = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| {
                    if spec.zero_probability > 0.0 && rng.gen_bool(spec.zero_probability) {
                        Rational::zero()
                    } else {
                        q(rng.gen_range(1..=i64::from(spec.cost_max)), cd)
                    }
                })
                .collect()
        })
        .collect();
    Ok(instance_from_rows(weights, costs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonicalMode {
    /// A random instance pushed through the reduction.
    Pipeline,
    /// Dyadic weights tiled by dyadic items; every agent values items alike.
    Tiling,
    /// As `Tiling`, but every agent tiles the weights with her own items.
    IndependentTiling,
}

/// A canonical instance, plus the reduction trace in pipeline mode.
pub fn gen_canonical(
    seed: u64,
    n: usize,
    m: usize,
    mode: CanonicalMode,
    budget: u64,
) -> Result<(CanonicalInstance, Option<CanonicalTrace>)> {
    match mode {
        CanonicalMode::Pipeline => {
            let inst = gen_random(seed, n, m, &RandomSpec::default())?;
            let (c, trace) = to_canonical(&inst, budget)?;
            Ok((c, Some(trace)))
        }
        CanonicalMode::Tiling => gen_tiling(seed, n, m, true).map(|c| (c, None)),
        CanonicalMode::IndependentTiling => gen_tiling(seed, n, m, false).map(|c| (c, None)),
    }
}

/// Deepest halving below `w_1` a tiling may use.
const MAX_DEPTH: i64 = 12;

fn gen_tiling(seed: u64, n: usize, m: usize, identical: bool) -> Result<CanonicalInstance> {
    if n == 0 || m < n {
        return Err(Error::InvalidParameter(format!(
            "tiling needs 1 <= n <= m, got n = {n}, m = {m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exponents: Vec<i64> = (0..n).map(|i| if i == 0 { 0 } else { rng.gen_range(0..=3) }).collect();
    exponents.sort_unstable();
    let total: Rational = exponents.iter().map(|&p| scale_pow2(&int(1), -p)).sum();
    let top = Rational::one() / total;
    let weights: Vec<Rational> = exponents.iter().map(|&p| scale_pow2(&top, -p)).collect();

    let tile = |rng: &mut ChaCha8Rng| -> Vec<(i64, usize)> {
        // (depth below w_1, slot)
        let mut pieces: Vec<(i64, usize)> = exponents.iter().copied().zip(0..n).collect();
        while pieces.len() < m {
            let splittable: Vec<usize> = (0..pieces.len()).filter(|&k| pieces[k].0 < MAX_DEPTH).collect();
            let Some(&k) = splittable.choose(rng) else { break };
            pieces[k].0 += 1;
            pieces.push(pieces[k]);
        }
        pieces.sort();
        pieces
    };
    let first = tile(&mut rng);
    if first.len() < m {
        return Err(Error::InvalidParameter(format!(
            "cannot tile {n} weights into {m} items"
        )));
    }
    let rows: Vec<Vec<(i64, usize)>> = (0..n)
        .map(|i| {
            if identical || i == 0 {
                first.clone()
            } else {
                tile(&mut rng)
            }
        })
        .collect();
    let costs = rows
        .iter()
        .map(|row| row.iter().map(|&(d, _)| scale_pow2(&top, -d)).collect())
        .collect();
    let certificates: Vec<Partition> = rows
        .iter()
        .map(|row| {
            let mut p = vec![Vec::new(); n];
            for (e, &(_, slot)) in row.iter().enumerate() {
                p[slot].push(e);
            }
            p
        })
        .collect();
    let inst = instance_from_rows(weights, costs);
    CanonicalInstance::with_certificates(inst, &certificates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_instance;
    use crate::wmms::exact_profile;
    use crate::DEFAULT_BUDGET;

    #[test]
    fn table1_range() {
        assert!(example_table1(&q(1, 4)).is_ok());
        assert!(example_table1(&q(1, 3)).is_err());
        assert!(example_table1(&int(0)).is_err());
    }

    #[test]
    fn random_is_deterministic_and_valid() {
        let spec = RandomSpec::default();
        assert_eq!(gen_random(7, 3, 5, &spec).unwrap(), gen_random(7, 3, 5, &spec).unwrap());
        assert_ne!(gen_random(7, 3, 5, &spec).unwrap(), gen_random(8, 3, 5, &spec).unwrap());
        for seed in 0..20 {
            let inst = gen_random(seed, 1 + seed as usize % 4, 6, &spec).unwrap();
            assert!(validate_instance(&inst).is_valid());
        }
        let zeros = RandomSpec {
            zero_probability: 0.5,
            ..RandomSpec::default()
        };
        let inst = gen_random(3, 3, 10, &zeros).unwrap();
        assert!(inst.costs.iter().flatten().any(Zero::is_zero));
    }

    #[test]
    fn tiling_quarters() {
        // weights (1/2, 1/4, 1/4), items of 1/4
        let inst = instance_from_rows(vec![q(1, 2), q(1, 4), q(1, 4)], vec![vec![q(1, 4); 4]; 3]);
        let certs = vec![vec![vec![0, 1], vec![2], vec![3]]; 3];
        assert!(CanonicalInstance::with_certificates(inst, &certs).is_ok());
    }

    #[test]
    fn tilings_are_exactly_canonical() {
        for seed in 0..30 {
            for mode in [CanonicalMode::Tiling, CanonicalMode::IndependentTiling] {
                let (c, _) = gen_canonical(seed, 3, 7, mode, DEFAULT_BUDGET).unwrap();
                let profile = exact_profile(c.instance(), DEFAULT_BUDGET).unwrap();
                assert_eq!(profile.values, c.instance().weights());
            }
        }
    }

    #[test]
    fn pipeline_mode() {
        let (c, trace) = gen_canonical(11, 3, 3, CanonicalMode::Pipeline, DEFAULT_BUDGET).unwrap();
        assert!(trace.is_some());
        assert!(c.instance().is_ido());
    }

    #[test]
    fn tiling_needs_enough_items() {
        assert!(gen_canonical(0, 4, 3, CanonicalMode::Tiling, DEFAULT_BUDGET).is_err());
    }
}
