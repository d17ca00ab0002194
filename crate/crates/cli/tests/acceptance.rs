//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Every comparison is exact; the only tolerances are the runtime limits
//! and the `3 eps` slack of the LP criterion, both fixed below.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use wmms_core::canonical::{check_threshold_claim, run_greedy, CanonicalInstance};
use wmms_core::generate::{example_table1, gen_canonical, gen_random, CanonicalMode, RandomSpec};
use wmms_core::lower_bound::{gen_lower_bound, verify_lower_bound};
use wmms_core::lp::{audit_rounding, solve_polytime};
use wmms_core::model::{share_ratio, Allocation, Instance};
use wmms_core::oracle::{brute_wmms_of, optimal_ratio};
use wmms_core::rational::{format_rational, int, q, Rational};
use wmms_core::reduce::{lift_canonical_allocation, to_canonical};
use wmms_core::wmms::{exact_profile, exact_wmms};
use wmms_core::DEFAULT_BUDGET;

const LP_EPS: (i64, i64) = (1, 100);
const LP_SLACK: i64 = 3;

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        ok,
        detail: detail.into(),
    }
}

fn max_ratio(inst: &Instance, alloc: &Allocation, shares: &[Rational]) -> Option<Rational> {
    alloc
        .agent_costs(inst)
        .iter()
        .zip(shares)
        .map(|(c, s)| share_ratio(c, s))
        .collect::<Option<Vec<_>>>()
        .map(|r| r.into_iter().max().unwrap_or_else(Rational::zero))
}

/// `(n, m)` for the `index`-th seeded instance of a family.
fn shape(index: u64, max_n: u64, max_m: u64) -> (usize, usize) {
    (1 + (index % max_n) as usize, 1 + ((index / max_n) % max_m) as usize)
}

fn criterion_1() -> Verdict {
    for eps in [q(1, 4), q(1, 8), q(1, 16)] {
        let inst = example_table1(&eps).unwrap();
        let (w1, _) = exact_wmms(&inst, 0, DEFAULT_BUDGET).unwrap();
        let (w2, _) = exact_wmms(&inst, 1, DEFAULT_BUDGET).unwrap();
        let expected = &eps / (Rational::one() - &eps);
        if w1 != int(1) || w2 != expected {
            return verdict(false, format!("eps {eps}: got ({w1}, {w2})"));
        }
        let opt = optimal_ratio(&inst, DEFAULT_BUDGET).unwrap();
        if opt.alpha != Some(int(1)) || opt.allocation != Allocation::from_owners([0, 0]) {
            return verdict(false, format!("eps {eps}: optimum {:?}", opt.alpha));
        }
    }
    verdict(true, "WMMS = (1, eps/(1-eps)), alpha* = 1 with both items to a1")
}

fn criterion_2() -> Verdict {
    let spec = RandomSpec::default();
    for seed in 0..200u64 {
        let (n, m) = shape(seed, 4, 10);
        let inst = gen_random(1000 + seed, n, m, &spec).unwrap();
        let all: Vec<usize> = (0..n).collect();
        let brute = brute_wmms_of(&inst, &all, DEFAULT_BUDGET).unwrap();
        let exact = exact_profile(&inst, DEFAULT_BUDGET).unwrap().values;
        if brute != exact {
            return verdict(
                false,
                format!("seed {}: engine {exact:?} vs oracle {brute:?}", 1000 + seed),
            );
        }
    }
    verdict(true, "200 instances, every agent equal")
}

/// The canonical instances of criteria 3 and 4.
fn canonical_campaign() -> Vec<(String, CanonicalInstance)> {
    let mut out = Vec::new();
    for seed in 0..1000u64 {
        let n = 1 + (seed % 8) as usize;
        let m = n + ((seed * 7) % (65 - n as u64)) as usize;
        let mode = if seed % 2 == 0 {
            CanonicalMode::Tiling
        } else {
            CanonicalMode::IndependentTiling
        };
        let (c, _) = gen_canonical(seed, n, m, mode, DEFAULT_BUDGET).unwrap();
        out.push((format!("tiling seed {seed}"), c));
    }
    for seed in 0..200u64 {
        let (n, m) = shape(seed, 3, 5);
        let (c, _) = gen_canonical(2000 + seed, n, m, CanonicalMode::Pipeline, DEFAULT_BUDGET).unwrap();
        out.push((format!("pipeline seed {}", 2000 + seed), c));
    }
    out
}

fn criterion_3(campaign: &[(String, CanonicalInstance)]) -> Verdict {
    let mut exits = 0;
    for (name, c) in campaign {
        let inst = c.instance();
        let run = match run_greedy(c) {
            Ok(run) => run,
            Err(e) => return verdict(false, format!("{name}: {e}")),
        };
        if !run.allocation.is_complete() {
            return verdict(false, format!("{name}: incomplete"));
        }
        for i in 0..inst.n() {
            let cap = inst.weight(i) * int(3);
            if run.costs[i] > cap {
                return verdict(false, format!("{name}: agent {i} pays {} > 3 w_i", run.costs[i]));
            }
            if run.exited_at[i].is_some() {
                exits += 1;
                if run.costs[i] != cap {
                    return verdict(false, format!("{name}: agent {i} exited at {}", run.costs[i]));
                }
            }
            if run
                .allocation
                .bundle(i)
                .iter()
                .any(|&e| inst.cost(i, e) > inst.weight(i))
            {
                return verdict(false, format!("{name}: agent {i} holds an item above her weight"));
            }
        }
    }
    verdict(
        true,
        format!(
            "{} instances, all complete, costs <= 3 w_i, {exits} exits at exactly 3 w_i",
            campaign.len()
        ),
    )
}

fn criterion_4(campaign: &[(String, CanonicalInstance)]) -> Verdict {
    for (name, c) in campaign {
        let violations = check_threshold_claim(c);
        if !violations.is_empty() {
            return verdict(false, format!("{name}: {} violations", violations.len()));
        }
    }
    verdict(true, format!("{} instances, no violations", campaign.len()))
}

fn criteria_5_and_6() -> (Verdict, Verdict) {
    let spec = RandomSpec::default();
    let mut worst_factor = Rational::zero();
    let mut worst_lifted = Rational::zero();
    let mut step_failure: Option<String> = None;
    for seed in 0..200u64 {
        let (n, m) = shape(seed, 3, 5);
        let seed = 3000 + seed;
        let inst = gen_random(seed, n, m, &spec).unwrap();
        let (c, trace) = to_canonical(&inst, DEFAULT_BUDGET).unwrap();
        let run = run_greedy(&c).unwrap();
        let alpha5 = max_ratio(c.instance(), &run.allocation, &c.instance().weights()).unwrap();
        let lifted = lift_canonical_allocation(&trace, &run.allocation).unwrap();
        let original = exact_profile(&inst, DEFAULT_BUDGET).unwrap().values;
        let ratio = max_ratio(&inst, &lifted, &original).unwrap();
        if ratio > &alpha5 * int(4) || ratio > int(12) {
            let v = verdict(false, format!("seed {seed}: lifted {ratio} vs alpha5 {alpha5}"));
            return (v, verdict(false, "not reached"));
        }
        if !alpha5.is_zero() && &ratio / &alpha5 > worst_factor {
            worst_factor = &ratio / &alpha5;
        }
        worst_lifted = worst_lifted.max(ratio);

        if step_failure.is_some() {
            continue;
        }
        let r = &trace.rounding;
        if r.original
            .iter()
            .zip(&r.rounded)
            .any(|(w, w2)| w2 < w || w2 >= &(w * int(2)))
        {
            step_failure = Some(format!("seed {seed}: weight rounding bracket"));
            continue;
        }
        let rounded = exact_profile(&trace.rounded, DEFAULT_BUDGET).unwrap().values;
        if rounded.iter().zip(&original).any(|(a, b)| a > &(b * int(2))) {
            step_failure = Some(format!("seed {seed}: rounding more than doubled a share"));
            continue;
        }
        let padded = exact_profile(&trace.padded, DEFAULT_BUDGET).unwrap().values;
        if padded != rounded {
            step_failure = Some(format!("seed {seed}: padding changed a share"));
            continue;
        }
        let normalized = exact_profile(&trace.normalized, DEFAULT_BUDGET).unwrap().values;
        let dyadic = exact_profile(&trace.dyadicized, DEFAULT_BUDGET).unwrap().values;
        if dyadic != normalized {
            step_failure = Some(format!("seed {seed}: dyadic rounding changed a share"));
            continue;
        }
        let bracket = trace
            .normalized
            .costs
            .iter()
            .zip(&trace.dyadicized.costs)
            .all(|(before, after)| {
                before.iter().zip(after).all(|(v, v2)| {
                    if v.is_zero() {
                        v2.is_zero()
                    } else {
                        v2 <= v && v2 * int(2) > *v
                    }
                })
            });
        if !bracket {
            step_failure = Some(format!("seed {seed}: dyadic bracket"));
        }
    }
    let five = verdict(
        true,
        format!(
            "200 instances, worst lifted/alpha5 = {}, worst lifted ratio = {}",
            format_rational(&worst_factor),
            format_rational(&worst_lifted)
        ),
    );
    let six = match step_failure {
        Some(f) => verdict(false, f),
        None => verdict(
            true,
            "200 instances: w <= w' < 2w, shares kept by padding and rounding, v/2 < v' <= v",
        ),
    };
    (five, six)
}

fn criterion_7() -> Verdict {
    let spec = RandomSpec::default();
    let eps = q(LP_EPS.0, LP_EPS.1);
    let mut tightest: Option<Rational> = None;
    for seed in 0..100u64 {
        let (n, m) = shape(seed, 3, 5);
        let seed = 4000 + seed;
        let inst = gen_random(seed, n, m, &spec).unwrap();
        let sol = solve_polytime(&inst, &eps, None, DEFAULT_BUDGET).unwrap();
        let opt = optimal_ratio(&inst, DEFAULT_BUDGET).unwrap();
        let alpha_star = opt.alpha.expect("positive shares");
        let ratio = max_ratio(&inst, &sol.allocation, &opt.wmms).unwrap();
        let bound = &alpha_star * int(2) + &eps * int(LP_SLACK);
        if ratio > bound {
            return verdict(
                false,
                format!("seed {seed}: ratio {ratio} > 2 alpha* + 3 eps = {bound}"),
            );
        }
        let audit = audit_rounding(&inst, &sol.lp, &sol.fractional, &sol.allocation);
        if !audit.pass() {
            return verdict(false, format!("seed {seed}: rounding audit {audit:?}"));
        }
        let slack = bound - ratio;
        if tightest.as_ref().is_none_or(|t| &slack < t) {
            tightest = Some(slack);
        }
    }
    verdict(
        true,
        format!(
            "100 instances, support <= n+m, one extra item at most, smallest slack to 2 alpha* + 3 eps = {}",
            format_rational(&tightest.unwrap_or_default())
        ),
    )
}

fn criterion_8() -> Verdict {
    for k in [2, 3, 4] {
        let lb = gen_lower_bound(k).unwrap();
        let report = verify_lower_bound(&lb.grouped, &lb.certificates).unwrap();
        if !report.pass {
            return verdict(false, format!("k = {k}: sandwich open"));
        }
        if k == 3 {
            let counts = lb.sizes == [1, 8, 64]
                && lb.item_counts == [1, 12, 96]
                && lb.weights() == [int(1), q(1, 8), q(1, 32)]
                && lb.group_totals() == [int(1), int(1), int(2)]
                && report.groups.iter().all(|g| g.total_cost == int(4));
            if !counts {
                return verdict(false, "k = 3 counts differ");
            }
        }
    }
    verdict(
        true,
        "k = 2, 3, 4: WMMS_i = w_i by certificate and proportional share; k = 3 counts match",
    )
}

fn criterion_9() -> Verdict {
    let lb = gen_lower_bound(2).unwrap();
    let inst = lb.grouped.expand().unwrap();
    let opt = optimal_ratio(&inst, DEFAULT_BUDGET).unwrap();
    match opt.alpha {
        Some(a) if a > int(1) => verdict(
            true,
            format!(
                "k = 2 ({} agents, {} items): alpha* = {} > 1; the asymptotic 2 - eps bound is not asserted",
                inst.n(),
                inst.m(),
                format_rational(&a)
            ),
        ),
        other => verdict(false, format!("k = 2: alpha* = {other:?}")),
    }
}

fn wmms(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_wmms"))
        .args(args)
        .env_remove("WMMS_BUDGET")
        .output()
        .expect("run wmms");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn criterion_10(dir: &Path) -> Verdict {
    let path = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let mut instances = vec![("table1".to_string(), vec!["gen", "table1", "--eps", "1/4"])];
    let seeds: Vec<String> = (0..6).map(|s| (5000 + s).to_string()).collect();
    for s in &seeds {
        instances.push((
            format!("random{s}"),
            vec!["gen", "random", "--seed", s, "--n", "3", "--m", "5"],
        ));
    }
    instances.push((
        "canonical".into(),
        vec!["gen", "canonical", "--seed", "1", "--n", "4", "--m", "9"],
    ));
    let mut runs = 0;
    for (name, gen) in &instances {
        let file = path(&format!("{name}.json"));
        let (code, first) = wmms(gen);
        let (_, second) = wmms(gen);
        if code != 0 || first != second {
            return verdict(false, format!("{name}: generation not deterministic"));
        }
        std::fs::write(&file, &first).unwrap();
        for method in ["canonical12", "lp"] {
            let args = [
                "solve",
                file.as_str(),
                "--method",
                method,
                "--eps",
                "1/100",
                "--seed",
                "7",
            ];
            let (code, a) = wmms(&args);
            let (_, b) = wmms(&args);
            if code != 0 || a != b {
                return verdict(false, format!("{name} {method}: solve code {code} or output differs"));
            }
            let alloc = path(&format!("{name}.{method}.alloc.json"));
            std::fs::write(&alloc, &a).unwrap();
            let (code, _) = wmms(&["verify", file.as_str(), alloc.as_str()]);
            if code != 0 {
                return verdict(false, format!("{name} {method}: verify exit {code}"));
            }
            runs += 1;
        }
    }
    verdict(
        true,
        format!("{runs} solve runs verified at their reported ratio; reruns byte-identical"),
    )
}

fn main() {
    let dir = std::env::temp_dir().join(format!("wmms-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut failed = 0;
    let mut report = |id: &str, title: &str, limit: Duration, run: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = run();
        let took = start.elapsed();
        let ok = v.ok && took <= limit;
        if !ok {
            failed += 1;
        }
        println!(
            "[{}] criterion {id}: {title} ({:.2}s, limit {}s) {}",
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs(),
            v.detail
        );
    };
    let secs = Duration::from_secs;
    report("1", "two-agent example", secs(1), &mut criterion_1);
    report("2", "engine agrees with oracle", secs(120), &mut criterion_2);
    let campaign = canonical_campaign();
    report("3", "greedy on canonical instances", secs(60), &mut || {
        criterion_3(&campaign)
    });
    report("4", "threshold claim", secs(60), &mut || criterion_4(&campaign));
    let mut pair = None;
    report("5", "reduction factor", secs(300), &mut || {
        let (five, six) = criteria_5_and_6();
        pair = Some(six);
        five
    });
    let mut six = pair.take();
    report("6", "per-step reduction invariants", secs(300), &mut || {
        six.take().unwrap_or_else(|| verdict(false, "not run"))
    });
    report("7", "LP pipeline", secs(300), &mut criterion_7);
    report("8", "lower-bound family", secs(30), &mut criterion_8);
    report("9", "hardness at desk scale", secs(30), &mut criterion_9);
    report("10", "CLI round trip", secs(60), &mut || criterion_10(&dir));
    let _ = std::fs::remove_dir_all(&dir);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
