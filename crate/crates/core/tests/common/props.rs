//! Randomized invariants, each runnable with a chosen number of cases and
//! returning the first counterexample as text.

use std::collections::HashMap;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hyperver::engine::{
    allocate_budgets, bayes_smc, propagate_errors, Checker, SmcConfig, SmcVerdict,
};
use hyperver::logic::{evaluate, Evaluator, HyperFormula, NoProvider, Node, PathAssignment};
use hyperver::model::sample_path;
use hyperver::oracle::Oracle;
use hyperver::stats::{
    bayes_factor, posterior_mass, prior_mass, prior_ratios, BernoulliCounts, BetaPrior, BoxRegion,
};

use super::*;

pub type PropResult = Result<(), String>;

/// Runs `test` on `cases` seeds from a fixed-seed runner.
pub fn check_seeds(cases: u32, test: impl Fn(u64) -> Result<(), TestCaseError>) -> PropResult {
    let config = Config {
        cases,
        failure_persistence: None,
        max_shrink_iters: 0,
        ..Config::default()
    };
    let rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    let mut runner = TestRunner::new_with_rng(config, rng);
    runner.run(&any::<u64>(), test).map_err(|e| e.to_string())
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every path of `steps` transitions from every state.
fn all_paths(m: &TModel, steps: usize) -> Vec<Vec<usize>> {
    (0..m.len())
        .flat_map(|s| m.paths_from(s, steps).into_iter().map(|(p, _)| p))
        .collect()
}

// ---------------------------------------------------------------------------
// Logic

/// The evaluator agrees with the reference semantics on every assignment of
/// the needed prefix length.
pub fn logic_matches_brute_force(cases: u32) -> PropResult {
    check_seeds(cases, |seed| {
        let mut rng = rng_for(seed);
        let m = random_model(&mut rng, 5, 2);
        let f = random_path_formula(&mut rng, &[0, 1], 4, 4);
        let formula = f.parse();
        let dtmc = m.to_dtmc();
        let steps = f.horizon();
        let paths = all_paths(&m, steps);
        let eval = Evaluator::new(&dtmc, &formula);
        for pp in &paths {
            for pq in &paths {
                let assignment = vec![pp.clone(), pq.clone()];
                let expected = holds(&m, &f, &assignment, 0).unwrap();
                let v = bind(&formula, &dtmc, &assignment);
                let got = eval
                    .eval(formula.root(), &v, &NoProvider)
                    .map_err(|e| TestCaseError::fail(e.to_string()))?;
                prop_assert_eq!(got, expected, "{} on {:?}", f.text(), assignment);
            }
        }
        Ok(())
    })
}

/// X φ at shift j equals φ at shift j + 1.
pub fn shift_composition(cases: u32) -> PropResult {
    check_seeds(cases, |seed| {
        let mut rng = rng_for(seed);
        let m = random_model(&mut rng, 5, 3);
        let f = random_path_formula(&mut rng, &[0, 1], 3, 4);
        let phi = f.parse();
        let next = F::Next(Box::new(f.clone())).parse();
        let dtmc = m.to_dtmc();
        let extra = 3;
        let paths: Vec<Vec<usize>> = (0..2)
            .map(|_| {
                let s = rng.gen_range(0..m.len());
                random_path(&mut rng, &m, s, f.horizon() + 1 + extra)
            })
            .collect();
        let vp = bind(&phi, &dtmc, &paths);
        let vn = bind(&next, &dtmc, &paths);
        for j in 0..=extra {
            let a = evaluate(&dtmc, &next, &vn.shifted(j), &NoProvider).unwrap();
            let b = evaluate(&dtmc, &phi, &vp.shifted(j + 1), &NoProvider).unwrap();
            prop_assert_eq!(a, b, "{} at shift {}", f.text(), j);
        }
        Ok(())
    })
}

/// F and G agree with their expansions into U and negation.
pub fn desugaring(cases: u32) -> PropResult {
    check_seeds(cases, |seed| {
        let mut rng = rng_for(seed);
        let m = random_model(&mut rng, 5, 3);
        let body = random_path_formula(&mut rng, &[0, 1], 2, 3);
        let k = rng.gen_range(0..=2u32);
        let pairs = [
            (
                F::Ev(k, Box::new(body.clone())),
                F::Until(Box::new(F::True), Box::new(body.clone()), k),
            ),
            (
                F::Glob(k, Box::new(body.clone())),
                F::Not(Box::new(F::Ev(k, Box::new(F::Not(Box::new(body.clone())))))),
            ),
        ];
        let dtmc = m.to_dtmc();
        let paths: Vec<Vec<usize>> = (0..2)
            .map(|_| {
                let s = rng.gen_range(0..m.len());
                random_path(&mut rng, &m, s, body.horizon() + k as usize)
            })
            .collect();
        for (sugar, core) in pairs {
            let (fs, fc) = (sugar.parse(), core.parse());
            let a = evaluate(&dtmc, &fs, &bind(&fs, &dtmc, &paths), &NoProvider).unwrap();
            let b = evaluate(&dtmc, &fc, &bind(&fc, &dtmc, &paths), &NoProvider).unwrap();
            prop_assert_eq!(a, b, "{} vs {}", sugar.text(), core.text());
        }
        Ok(())
    })
}

/// Truncating every path to shift + depth + 1 states leaves the result
/// unchanged.
pub fn depth_soundness(cases: u32) -> PropResult {
    check_seeds(cases, |seed| {
        let mut rng = rng_for(seed);
        let m = random_model(&mut rng, 5, 3);
        let f = random_path_formula(&mut rng, &[0, 1], 4, 5);
        let formula = f.parse();
        let dtmc = m.to_dtmc();
        let shift = rng.gen_range(0..3);
        let paths: Vec<Vec<usize>> = (0..2)
            .map(|_| {
                let s = rng.gen_range(0..m.len());
                random_path(&mut rng, &m, s, shift + f.horizon() + 4)
            })
            .collect();
        let v = bind(&formula, &dtmc, &paths).shifted(shift);
        let depth = formula.depth(formula.root()) as usize;
        let full = evaluate(&dtmc, &formula, &v, &NoProvider).unwrap();
        let cut = evaluate(&dtmc, &formula, &v.truncated(depth + 1), &NoProvider)
            .map_err(|e| TestCaseError::fail(format!("{}: {e}", f.text())))?;
        prop_assert_eq!(full, cut, "{}", f.text());
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Stats

fn random_box<R: Rng>(rng: &mut R, dims: usize) -> BoxRegion {
    let bounds: Vec<(f64, f64)> = (0..dims)
        .map(|_| {
            let a: f64 = rng.gen();
            let b: f64 = rng.gen();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            match rng.gen_range(0..6) {
                0 => (0.0, hi),
                1 => (lo, 1.0),
                _ => (lo, hi.max(lo + 1e-3).min(1.0)),
            }
        })
        .collect();
    BoxRegion::from_bounds(&bounds).unwrap()
}

fn random_prior<R: Rng>(rng: &mut R) -> BetaPrior {
    BetaPrior::new(rng.gen_range(0.5..10.0), rng.gen_range(0.5..10.0)).unwrap()
}

/// reduce(d, ε) ⊆ d ⊆ expand(d, ε), with masses ordered the same way.
pub fn region_inclusion_chain(cases: u32) -> PropResult {
    check_seeds(cases, |seed| {
        let mut rng = rng_for(seed);
        let dims = rng.gen_range(1..=3);
        let d = random_box(&mut rng, dims);
        let eps = rng.gen_range(0.0..0.3);
        let prior = random_prior(&mut rng);
        let n = rng.gen_range(0..50u64);
        let counts =
            BernoulliCounts::new((0..dims).map(|_| rng.gen_range(0..=n)).collect(), n).unwrap();
        let up = d.expand(eps);
        prop_assert!(d.is_subset_of(&up));
        prop_assert!(prior_mass(&prior, &d) <= prior_mass(&prior, &up) + 1e-12);
        prop_assert!(
            posterior_mass(&prior, &counts, &d) <= posterior_mass(&prior, &counts, &up) + 1e-12
        );
        if let Some(down) = d.reduce(eps) {
            prop_assert!(down.is_subset_of(&d), "{:?} ⊄ {:?}", down, d);
            prop_assert!(prior_mass(&prior, &down) <= prior_mass(&prior, &d) + 1e-12);
            prop_assert!(
                posterior_mass(&prior, &counts, &down)
                    <= posterior_mass(&prior, &counts, &d) + 1e-12
            );
        }
        Ok(())
    })
}

/// The prior correction constants of the approximate test lie in (0, 1].
pub fn prior_ratios_in_unit_interval(cases: u32) -> PropResult {
    check_seeds(cases, |seed| {
        let mut rng = rng_for(seed);
        let dims = rng.gen_range(1..=3);
        let d = random_box(&mut rng, dims);
        let prior = random_prior(&mut rng);
        let delta = rng.gen_range(1e-4..0.2);
        let p = prior_mass(&prior, &d);
        prop_assume!(p > 1e-300 && p < 1.0);
        let (r1, r2) = prior_ratios(&prior, &d, delta);
        prop_assert!(r1 > 0.0 && r1 <= 1.0, "r1 = {} for {:?} δ={}", r1, d, delta);
        prop_assert!(r2 > 0.0 && r2 <= 1.0, "r2 = {} for {:?} δ={}", r2, d, delta);
        Ok(())
    })
}

/// The closed-form Bayes factor matches quadrature to relative 1e-6.
pub fn bayes_factor_matches_quadrature(cases: u32) -> PropResult {
    check_seeds(cases, |seed| {
        let mut rng = rng_for(seed);
        let dims = rng.gen_range(1..=2);
        let (a, b) = (rng.gen_range(1.0..6.0), rng.gen_range(1.0..6.0));
        let n = rng.gen_range(0..=40u64);
        let successes: Vec<u64> = (0..dims).map(|_| rng.gen_range(0..=n)).collect();
        let bounds: Vec<(f64, f64)> = (0..dims)
            .map(|_| {
                let lo = rng.gen_range(0.05..0.6);
                (lo, rng.gen_range(lo + 0.1..0.95))
            })
            .collect();
        let d = BoxRegion::from_bounds(&bounds).unwrap();
        let prior = BetaPrior::new(a, b).unwrap();
        let counts = BernoulliCounts::new(successes.clone(), n).unwrap();
        let got = bayes_factor(&prior, &counts, &d).unwrap();
        prop_assume!(!got.saturated);
        let want = quadrature_bayes_factor(a, b, &successes, n, &bounds);
        prop_assume!(want.is_finite() && want > 1e-200 && want < 1e200);
        let rel = ((got.value() - want) / want).abs();
        prop_assert!(
            rel <= 1e-6,
            "B = {} vs quadrature {} (rel {:e})",
            got.value(),
            want,
            rel
        );
        Ok(())
    })
}

/// More successes never lower B for an upper-tail region.
pub fn bayes_factor_monotone(cases: u32) -> PropResult {
    check_seeds(cases, |seed| {
        let mut rng = rng_for(seed);
        let prior = random_prior(&mut rng);
        let theta = rng.gen_range(0.05..0.95);
        let d = BoxRegion::from_bounds(&[(theta, 1.0)]).unwrap();
        let n = rng.gen_range(1..200u64);
        let mut last = f64::NEG_INFINITY;
        for m in 0..=n {
            let b = bayes_factor(&prior, &BernoulliCounts::new(vec![m], n).unwrap(), &d).unwrap();
            prop_assert!(!b.ln.is_nan());
            prop_assert!(b.ln >= last - 1e-9, "m = {} of {}", m, n);
            last = b.ln;
        }
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Engine

/// Path formula whose leaves may be flat Prob operators.
fn random_budget_shape<R: Rng>(rng: &mut R, size: u32) -> F {
    if size == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.7) {
            F::Prob {
                region: vec![random_interval(rng)],
                args: vec![(vec![1], F::Atom(0, 1))],
            }
        } else {
            F::Atom(0, 0)
        };
    }
    let s = size - 1;
    match rng.gen_range(0..7) {
        0 => F::Not(Box::new(random_budget_shape(rng, s))),
        1 => F::And(
            Box::new(random_budget_shape(rng, s)),
            Box::new(random_budget_shape(rng, s)),
        ),
        2 => F::Or(
            Box::new(random_budget_shape(rng, s)),
            Box::new(random_budget_shape(rng, s)),
        ),
        3 => F::Next(Box::new(random_budget_shape(rng, s))),
        4 => F::Until(
            Box::new(random_budget_shape(rng, s)),
            Box::new(random_budget_shape(rng, s)),
            rng.gen_range(0..=5),
        ),
        5 => F::Ev(rng.gen_range(0..=5), Box::new(random_budget_shape(rng, s))),
        _ => F::Glob(rng.gen_range(0..=5), Box::new(random_budget_shape(rng, s))),
    }
}

/// Propagating the allocated leaf budgets never exceeds the target.
pub fn budget_soundness(cases: u32) -> PropResult {
    check_seeds(cases, |seed| {
        let mut rng = rng_for(seed);
        let f = random_budget_shape(&mut rng, 5);
        let formula = f.parse();
        let target = rng.gen_range(1e-4..0.1);
        let leaves = allocate_budgets(&formula, formula.root(), target);
        let got = propagate_errors(&formula, formula.root(), &leaves)
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        let tol = target * 1e-12;
        prop_assert!(
            got.type1 <= target + tol && got.type2 <= target + tol,
            "{:?} > {} for {}",
            got,
            target,
            f.text()
        );
        Ok(())
    })
}

/// One random path per variable covering the formula's horizon.
fn horizon_paths<R: Rng>(rng: &mut R, m: &TModel, f: &F) -> Vec<Vec<usize>> {
    (0..2)
        .map(|_| {
            let s = rng.gen_range(0..m.len());
            random_path(rng, m, s, f.horizon())
        })
        .collect()
}

fn small_config(seed: u64) -> SmcConfig {
    SmcConfig {
        max_samples: 512,
        timeout: None,
        seed,
        ..SmcConfig::default()
    }
}

fn without_time(mut v: SmcVerdict) -> SmcVerdict {
    v.seconds = 0.0;
    v
}

/// A random nested instance with its assignment.
fn nested_instance(seed: u64) -> (TModel, F, Vec<Vec<usize>>) {
    let mut rng = rng_for(seed);
    let m = random_model(&mut rng, 5, 3);
    let f = random_nested_prob(&mut rng);
    let paths = horizon_paths(&mut rng, &m, &f);
    (m, f, paths)
}

/// Disabling the nested-verdict cache does not change any verdict.
pub fn cache_coherence(cases: u32) -> PropResult {
    check_seeds(cases, |seed| {
        let (m, f, paths) = nested_instance(seed);
        let formula = f.parse();
        let dtmc = m.to_dtmc();
        let v = bind(&formula, &dtmc, &paths);
        let on = bayes_smc(&dtmc, &formula, &v, &small_config(seed));
        let off = bayes_smc(
            &dtmc,
            &formula,
            &v,
            &SmcConfig {
                use_cache: false,
                ..small_config(seed)
            },
        );
        match (on, off) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.outcome, b.outcome, "{}", f.text());
                prop_assert_eq!(a.samples, b.samples);
                prop_assert_eq!(a.total_samples, b.total_samples);
            }
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
        Ok(())
    })
}

/// The same seed gives the same verdict record with 1 and 4 worker threads.
pub fn seed_determinism(cases: u32) -> PropResult {
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    check_seeds(cases, |seed| {
        let (m, f, paths) = nested_instance(seed);
        let formula = f.parse();
        let dtmc = m.to_dtmc();
        let v = bind(&formula, &dtmc, &paths);
        let cfg = small_config(seed);
        let run = || bayes_smc(&dtmc, &formula, &v, &cfg).map(without_time);
        let a = one.install(run);
        let b = four.install(run);
        let c = four.install(run);
        prop_assert_eq!(&a, &b, "{}", f.text());
        prop_assert_eq!(&b, &c);
        Ok(())
    })
}

/// Sample sizes double from 1, so the total is bounded by twice the final
/// size.
pub fn doubling_loop(cases: u32) -> PropResult {
    check_seeds(cases, |seed| {
        let mut rng = rng_for(seed);
        let m = random_model(&mut rng, 5, 3);
        let f = random_flat_prob(&mut rng, 2);
        let formula = f.parse();
        let dtmc = m.to_dtmc();
        let paths = vec![
            vec![rng.gen_range(0..m.len())],
            vec![rng.gen_range(0..m.len())],
        ];
        let v = bind(&formula, &dtmc, &paths);
        let verdict = bayes_smc(&dtmc, &formula, &v, &small_config(seed))
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        let dims = match f {
            F::Prob { ref args, .. } => args.len() as u64,
            _ => 1,
        };
        prop_assert!(verdict.samples.is_power_of_two());
        prop_assert!(verdict.total_samples <= 2 * verdict.samples * dims);
        Ok(())
    })
}

/// δ of each nested operator equals the largest error bound handed to the
/// operators directly below it.
pub fn delta_consistency(cases: u32) -> PropResult {
    check_seeds(cases, |seed| {
        let (m, f, _) = nested_instance(seed);
        let formula = f.parse();
        let dtmc = m.to_dtmc();
        let checker = match Checker::new(&dtmc, &formula, small_config(seed)) {
            Ok(c) => c,
            Err(hyperver::engine::EngineError::DegenerateRegion(_)) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        for id in formula.node_ids() {
            let Node::Prob { args, .. } = formula.node(id) else {
                continue;
            };
            if !formula.is_nested(id) {
                continue;
            }
            let mut want: f64 = 0.0;
            for a in args {
                let leaves: HashMap<_, _> = formula
                    .top_probs(a.body)
                    .into_iter()
                    .map(|p| (p, checker.leaf_budget(p).expect("leaf budget")))
                    .collect();
                want = want.max(
                    propagate_errors(&formula, a.body, &leaves)
                        .unwrap()
                        .max_component(),
                );
            }
            prop_assert_eq!(checker.delta(id), Some(want));
        }
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Oracle

/// Exact probabilities match exhaustive joint-path enumeration.
pub fn oracle_matches_enumeration(cases: u32) -> PropResult {
    check_seeds(cases, |seed| {
        let mut rng = rng_for(seed);
        let m = random_model(&mut rng, 6, 2);
        let f = if rng.gen_bool(0.5) {
            random_flat_prob(&mut rng, 3)
        } else {
            random_nested_prob(&mut rng)
        };
        let F::Prob { ref args, .. } = f else {
            unreachable!()
        };
        let paths = horizon_paths(&mut rng, &m, &f);
        let want = match prob_vector(&m, args, &paths, 0) {
            Ok(p) => p,
            Err(NearBoundary) => return Ok(()),
        };
        let formula = f.parse();
        let dtmc = m.to_dtmc();
        let v = bind(&formula, &dtmc, &paths);
        let got = Oracle::new(&dtmc, &formula)
            .verdict(formula.root(), &v)
            .map_err(|e| TestCaseError::fail(format!("{}: {e}", f.text())))?;
        for (g, w) in got.probabilities.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-12, "{} vs {} for {}", g, w, f.text());
        }
        Ok(())
    })
}

/// Pr(φ) + Pr(¬φ) = 1.
pub fn oracle_normalized(cases: u32) -> PropResult {
    check_seeds(cases, |seed| {
        let mut rng = rng_for(seed);
        let m = random_model(&mut rng, 6, 3);
        let tuple = if rng.gen_bool(0.5) {
            vec![0]
        } else {
            vec![0, 1]
        };
        let body = random_path_formula(&mut rng, &tuple, 4, 4);
        let f = F::Prob {
            region: vec![(0.0, 0.5), (0.0, 0.5)],
            args: vec![
                (tuple.clone(), body.clone()),
                (tuple, F::Not(Box::new(body))),
            ],
        };
        let formula = f.parse();
        let dtmc = m.to_dtmc();
        let paths = vec![
            vec![rng.gen_range(0..m.len())],
            vec![rng.gen_range(0..m.len())],
        ];
        let got = Oracle::new(&dtmc, &formula)
            .verdict(formula.root(), &bind(&formula, &dtmc, &paths))
            .unwrap();
        let sum: f64 = got.probabilities.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12, "sum {} for {}", sum, f.text());
        Ok(())
    })
}

/// Renaming states does not change exact verdicts or probabilities.
pub fn oracle_permutation_invariant(cases: u32) -> PropResult {
    check_seeds(cases, |seed| {
        let mut rng = rng_for(seed);
        let m = random_model(&mut rng, 6, 3);
        let f = random_flat_prob(&mut rng, 3);
        let formula = f.parse();
        let mut perm: Vec<usize> = (0..m.len()).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let pm = m.permuted(&perm);
        let starts = [rng.gen_range(0..m.len()), rng.gen_range(0..m.len())];
        let a_paths = vec![vec![starts[0]], vec![starts[1]]];
        let b_paths = vec![vec![perm[starts[0]]], vec![perm[starts[1]]]];
        let (da, db) = (m.to_dtmc(), pm.to_dtmc());
        let a = Oracle::new(&da, &formula)
            .verdict(formula.root(), &bind(&formula, &da, &a_paths))
            .unwrap();
        let b = Oracle::new(&db, &formula)
            .verdict(formula.root(), &bind(&formula, &db, &b_paths))
            .unwrap();
        prop_assume!(!a.on_boundary);
        prop_assert_eq!(a.verdict, b.verdict);
        for (x, y) in a.probabilities.iter().zip(&b.probabilities) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Model

/// Sampled paths only take positive-probability steps and replay exactly
/// from the same seed.
pub fn sampled_paths_valid(cases: u32) -> PropResult {
    check_seeds(cases, |seed| {
        let mut rng = rng_for(seed);
        let m = random_model(&mut rng, 8, 4);
        let dtmc = m.to_dtmc();
        let start = rng.gen_range(0..m.len());
        let len = rng.gen_range(0..20);
        let a = sample_path(&dtmc, start, len, &mut rng_for(seed ^ 1));
        let b = sample_path(&dtmc, start, len, &mut rng_for(seed ^ 1));
        prop_assert_eq!(a.states(), b.states());
        prop_assert_eq!(a.len(), len + 1);
        for w in a.states().windows(2) {
            prop_assert!(dtmc.probability(w[0], w[1]) > 0.0);
        }
        Ok(())
    })
}

/// Exact truth of a whole formula with the oracle as provider matches the
/// reference semantics.
pub fn exact_truth_matches(cases: u32) -> PropResult {
    check_seeds(cases, |seed| {
        let mut rng = rng_for(seed);
        let m = random_model(&mut rng, 5, 2);
        let inner = random_flat_prob(&mut rng, 2);
        let outer = random_path_formula(&mut rng, &[0], 1, 1);
        let f = match rng.gen_range(0..3) {
            0 => F::And(Box::new(outer), Box::new(inner)),
            1 => F::Not(Box::new(inner)),
            _ => F::Or(Box::new(F::Next(Box::new(outer))), Box::new(inner)),
        };
        let paths: Vec<Vec<usize>> = (0..2)
            .map(|_| {
                let s = rng.gen_range(0..m.len());
                random_path(&mut rng, &m, s, f.horizon() + 1)
            })
            .collect();
        let want = match holds(&m, &f, &paths, 0) {
            Ok(w) => w,
            Err(NearBoundary) => return Ok(()),
        };
        let formula: HyperFormula = f.parse();
        let dtmc = m.to_dtmc();
        let v: PathAssignment = bind(&formula, &dtmc, &paths);
        let got = hyperver::oracle::exact_truth(&dtmc, &formula, &v)
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(got, want, "{}", f.text());
        Ok(())
    })
}
