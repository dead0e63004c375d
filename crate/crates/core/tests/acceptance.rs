//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Oracles here are independent of the implementation paths they
//! check: pairwise AUC enumeration, brute-force acceptance-set recounts, a
//! literal transcription of the confident-retrieval loop, central finite
//! differences, and high-precision harmonic sums.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use ciex_core::ciex::{class_counts, retrieve_confident, run_ciex, CiexRunConfig, CiexSpec, RetrieveSpec};
use ciex_core::classifier::{
    self, class_balance_weights, weighted_nll, weighted_nll_grad, ClassifierSpec,
};
use ciex_core::data::RowId;
use ciex_core::isolation_forest::{self, c_factor, IsoForestSpec};
use ciex_core::metrics::{accept_sets, auc, auk, auk_grid, kickout, kickout_from_parts, KickoutInputs, KickoutParts};
use ciex_core::policy_sim::{make_seven_way, PolicySpec};
use ciex_core::selection::{topsis_select, Direction, TopsisProblem};
use ciex_core::state::TrainState;
use ciex_core::synth::{synth_credit, SynthSpec};
use ciex_core::Dataset;

fn criterion(n: u32, label: &str, outcome: Result<(), String>) {
    match outcome {
        Ok(()) => println!("PASS criterion {n}: {label}"),
        Err(msg) => {
            println!("FAIL criterion {n}: {label}: {msg}");
            panic!("criterion {n} failed: {msg}");
        }
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

// ---------------------------------------------------------------- oracles

fn auc_pairwise(scores: &[f64], labels: &[u8]) -> f64 {
    let mut concordant = 0.0f64;
    let mut pairs = 0.0f64;
    for (i, &yi) in labels.iter().enumerate() {
        if yi != 1 {
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj != 0 {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                concordant += 1.0;
            } else if scores[i] == scores[j] {
                concordant += 0.5;
            }
        }
    }
    concordant / pairs
}

fn kickout_brute(inputs: &KickoutInputs<'_>, alpha: f64) -> Option<f64> {
    let n_acc = inputs.accepted_ids.len();
    let bm_count = (alpha * n_acc as f64).floor() as usize;
    if bm_count == 0 {
        return None;
    }
    let mut bm_rows: Vec<usize> = (0..n_acc).collect();
    bm_rows.sort_by(|&a, &b| {
        inputs.bm_scores_accepted[a]
            .total_cmp(&inputs.bm_scores_accepted[b])
            .then(inputs.accepted_ids[a].cmp(&inputs.accepted_ids[b]))
    });
    let bm_set: BTreeSet<RowId> = bm_rows[..bm_count]
        .iter()
        .map(|&i| inputs.accepted_ids[i])
        .collect();

    let mut pool: Vec<(RowId, f64)> = inputs
        .accepted_ids
        .iter()
        .zip(inputs.ri_scores_accepted)
        .map(|(&id, &s)| (id, s))
        .collect();
    pool.extend(
        inputs
            .reject_ids
            .iter()
            .zip(inputs.ri_scores_rejects)
            .map(|(&id, &s)| (id, s)),
    );
    let ri_count = (alpha * pool.len() as f64).floor() as usize;
    pool.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let ri_set: BTreeSet<RowId> = pool[..ri_count].iter().map(|(id, _)| *id).collect();

    let mut s_b = 0usize;
    let mut k_b = 0usize;
    let mut k_g = 0usize;
    for (i, id) in inputs.accepted_ids.iter().enumerate() {
        if !bm_set.contains(id) {
            continue;
        }
        let bad = inputs.accepted_labels[i] == 1;
        if bad {
            s_b += 1;
        }
        if !ri_set.contains(id) {
            if bad {
                k_b += 1;
            } else {
                k_g += 1;
            }
        }
    }
    let p_b = s_b as f64 / bm_count as f64;
    if s_b == 0 || p_b >= 1.0 {
        return Some(0.0);
    }
    Some((k_b as f64 / p_b - k_g as f64 / (1.0 - p_b)) / (s_b as f64 / p_b))
}

// ------------------------------------------------------------- criteria

#[test]
fn criterion_1_metric_oracle_equivalence() {
    let started = std::time::Instant::now();
    let outcome = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(1001);
        for case in 0..200 {
            let n = 2 + rng.random_range(0..1999);
            let quantum = [1.0, 20.0, 1000.0][case % 3];
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.random::<f64>() * quantum).round() / quantum)
                .collect();
            let mut labels: Vec<u8> = (0..n)
                .map(|_| u8::from(rng.random::<f64>() < 0.35))
                .collect();
            labels[0] = 0;
            labels[n - 1] = 1;
            let fast = auc(&scores, &labels).map_err(|e| e.to_string())?;
            let slow = auc_pairwise(&scores, &labels);
            ensure(
                (fast - slow).abs() < 1e-12,
                format!("auc case {case}: rank {fast} vs pairwise {slow}"),
            )?;
        }

        let mut rng = ChaCha8Rng::seed_from_u64(2002);
        for case in 0..200 {
            let n_acc = 2 + rng.random_range(0..3000);
            let n_rej = rng.random_range(0..2000.min(5000 - n_acc));
            let accepted_ids: Vec<RowId> = (0..n_acc as u64).collect();
            let reject_ids: Vec<RowId> = (100_000..100_000 + n_rej as u64).collect();
            let labels: Vec<u8> = (0..n_acc)
                .map(|_| u8::from(rng.random::<f64>() < 0.3))
                .collect();
            let mut quant = |rng: &mut ChaCha8Rng| (rng.random::<f64>() * 64.0).round() / 64.0;
            let bm: Vec<f64> = (0..n_acc).map(|_| quant(&mut rng)).collect();
            let ri: Vec<f64> = (0..n_acc).map(|_| quant(&mut rng)).collect();
            let ri_rej: Vec<f64> = (0..n_rej).map(|_| quant(&mut rng)).collect();
            let inputs = KickoutInputs {
                accepted_ids: &accepted_ids,
                accepted_labels: &labels,
                bm_scores_accepted: &bm,
                ri_scores_accepted: &ri,
                reject_ids: &reject_ids,
                ri_scores_rejects: &ri_rej,
            };
            let alpha = [0.07, 0.25, 0.5, 0.81, 1.0][case % 5];
            match kickout_brute(&inputs, alpha) {
                None => ensure(
                    kickout(&inputs, alpha).is_err(),
                    format!("case {case}: expected empty-acceptance error"),
                )?,
                Some(expect) => {
                    let got = kickout(&inputs, alpha).map_err(|e| e.to_string())?.value;
                    ensure(
                        (got - expect).abs() < 1e-12,
                        format!("kickout case {case} alpha {alpha}: {got} vs {expect}"),
                    )?;
                }
            }
        }
        ensure(
            started.elapsed().as_secs() < 60,
            format!("runtime {}s >= 60s", started.elapsed().as_secs()),
        )
    })();
    criterion(
        1,
        "rank AUC == pairwise AUC and kickout == brute-force recount",
        outcome,
    );
}

#[test]
fn criterion_2_kickout_worked_example() {
    let outcome = (|| {
        // N_acc = 10, S_B = 4, K_B = 2, K_G = 1 -> 0.3333...
        let direct = kickout_from_parts(KickoutParts {
            s_b: 4,
            k_b: 2,
            k_g: 1,
            n_acc_bm: 10,
        });
        ensure(
            (direct.value - 1.0 / 3.0).abs() < 1e-9,
            format!("parts value {}", direct.value),
        )?;

        // The same counts realized through the full acceptance-set path:
        // 20 accepted rows, alpha 0.5; benchmark accepts ids 0..9 with bads
        // at 1, 3, 5, 7; the RI model pushes 3, 7 (bad) and 4 (good) out.
        let ids: Vec<RowId> = (0..20).collect();
        let labels: Vec<u8> = (0..20)
            .map(|i| u8::from([1, 3, 5, 7, 12, 15].contains(&i)))
            .collect();
        let bm: Vec<f64> = (0..20).map(|i| i as f64 / 20.0).collect();
        let mut ri = bm.clone();
        ri[3] = 0.99;
        ri[7] = 0.98;
        ri[4] = 0.97;
        let inputs = KickoutInputs {
            accepted_ids: &ids,
            accepted_labels: &labels,
            bm_scores_accepted: &bm,
            ri_scores_accepted: &ri,
            reject_ids: &[],
            ri_scores_rejects: &[],
        };
        let full = kickout(&inputs, 0.5).map_err(|e| e.to_string())?;
        ensure(
            full.parts
                == KickoutParts {
                    s_b: 4,
                    k_b: 2,
                    k_g: 1,
                    n_acc_bm: 10,
                },
            format!("parts {:?}", full.parts),
        )?;
        ensure(
            (full.value - 0.3333).abs() < 1e-3 && (full.value - 1.0 / 3.0).abs() < 1e-9,
            format!("value {}", full.value),
        )?;

        // kickout(alpha = 1) = 0 on random instances.
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..50 {
            let n = 4 + rng.random_range(0..200);
            let ids: Vec<RowId> = (0..n as u64).collect();
            let mut labels: Vec<u8> =
                (0..n).map(|_| u8::from(rng.random::<f64>() < 0.4)).collect();
            labels[0] = 0;
            labels[1] = 1;
            let bm: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let ri: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            let n_rej = rng.random_range(0..100);
            let rej_ids: Vec<RowId> = (1000..1000 + n_rej as u64).collect();
            let rej: Vec<f64> = (0..n_rej).map(|_| rng.random()).collect();
            let inputs = KickoutInputs {
                accepted_ids: &ids,
                accepted_labels: &labels,
                bm_scores_accepted: &bm,
                ri_scores_accepted: &ri,
                reject_ids: &rej_ids,
                ri_scores_rejects: &rej,
            };
            let r = kickout(&inputs, 1.0).map_err(|e| e.to_string())?;
            ensure(r.value == 0.0, format!("kickout(1.0) = {}", r.value))?;

            // A model identical to its benchmark: AUK exactly 0.
            let same = KickoutInputs {
                accepted_ids: &ids,
                accepted_labels: &labels,
                bm_scores_accepted: &bm,
                ri_scores_accepted: &bm,
                reject_ids: &[],
                ri_scores_rejects: &[],
            };
            let a = auk(&same, &auk_grid()).map_err(|e| e.to_string())?;
            ensure(a.value == 0.0, format!("self AUK = {}", a.value))?;
        }
        Ok(())
    })();
    criterion(
        2,
        "kickout worked example, kickout(1) = 0, self-AUK = 0",
        outcome,
    );
}

/// Literal transcription of the confident-retrieval while-loop, using the
/// same deterministically fitted forest and classifier.
struct LiteralRetrieval {
    selected_ids: Vec<RowId>,
    labels: Vec<u8>,
    remaining_ids: Vec<RowId>,
}

fn literal_retrieve(
    state: &TrainState,
    class: u8,
    count: usize,
    forest_spec: &IsoForestSpec,
    classifier_spec: &ClassifierSpec,
) -> LiteralRetrieval {
    let labeled = state.labeled();
    let labels = labeled.labels().unwrap();
    let class_rows: Vec<usize> = (0..labeled.rows())
        .filter(|&i| labels[i] == class)
        .collect();
    let forest = isolation_forest::fit(
        forest_spec,
        labeled.take_rows(&class_rows).to_matrix().unwrap().view(),
    )
    .unwrap();
    let balance = class_balance_weights(labels).unwrap();
    let weights: Vec<f64> = labeled
        .weights_or_ones()
        .iter()
        .zip(&balance)
        .map(|(w, b)| w * b)
        .collect();
    let mut spec = classifier_spec.clone();
    spec.balanced = false;
    let model = classifier::fit(
        &spec,
        labeled.to_matrix().unwrap().view(),
        labels,
        Some(&weights),
    )
    .unwrap();

    let rejects = state.rejects();
    let x = rejects.to_matrix().unwrap();
    let scores = classifier::predict_proba(&model, x.view()).unwrap();
    let inlier = forest.is_inlier(x.view()).unwrap();

    // The while-loop, verbatim: repeatedly take the argmax-confidence row,
    // label it by thresholding, keep it only if it is an inlier, and remove
    // it from the working pool either way.
    let mut working: Vec<usize> = (0..rejects.rows()).collect();
    let mut selected_ids = Vec::new();
    let mut labels_out = Vec::new();
    let mut examined: BTreeSet<usize> = BTreeSet::new();
    while selected_ids.len() < count && !working.is_empty() {
        let confidence = |i: usize| if class == 1 { scores[i] } else { 1.0 - scores[i] };
        let mut best = working[0];
        for &i in &working {
            if confidence(i) > confidence(best)
                || (confidence(i) == confidence(best)
                    && rejects.row_ids()[i] < rejects.row_ids()[best])
            {
                best = i;
            }
        }
        let y = u8::from(scores[best] >= 0.5);
        if inlier[best] {
            selected_ids.push(rejects.row_ids()[best]);
            labels_out.push(y);
        }
        examined.insert(best);
        working.retain(|&i| i != best);
    }
    // Examined-but-unselected rows return to the pool: the updated pool is
    // everything minus the selected rows.
    let chosen: BTreeSet<RowId> = selected_ids.iter().copied().collect();
    let remaining_ids = rejects
        .row_ids()
        .iter()
        .copied()
        .filter(|id| !chosen.contains(id))
        .collect();
    LiteralRetrieval {
        selected_ids,
        labels: labels_out,
        remaining_ids,
    }
}

#[test]
fn criterion_3_algorithm_fidelity() {
    let started = std::time::Instant::now();
    let outcome = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(3003);
        let normal = Normal::new(0.0, 1.0).unwrap();
        for case in 0..100u64 {
            let n_labeled = 30 + rng.random_range(0..80);
            let n_rej = 1 + rng.random_range(0..200);
            let d = 2 + rng.random_range(0..3);
            let mut x = Array2::zeros((n_labeled, d));
            let mut y = Vec::with_capacity(n_labeled);
            for i in 0..n_labeled {
                let label = u8::from(i % 3 == 0);
                y.push(label);
                for j in 0..d {
                    x[(i, j)] = f64::from(label) * 1.2 + normal.sample(&mut rng);
                }
            }
            // Guarantee two rows per class.
            y[0] = 0;
            y[1] = 0;
            y[2] = 1;
            y[3] = 1;
            let rej =
                Array2::from_shape_fn((n_rej, d), |_| normal.sample(&mut rng) * 1.5 + 0.3);
            let names: Vec<String> = (0..d).map(|j| format!("f{j}")).collect();
            let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let labeled = Dataset::from_matrix(&name_refs, &x)
                .map_err(|e| e.to_string())?
                .with_labels(y)
                .map_err(|e| e.to_string())?;
            let rejects = Dataset::from_matrix(&name_refs, &rej)
                .map_err(|e| e.to_string())?
                .with_id_offset(10_000);
            let state = TrainState::new(labeled, rejects).map_err(|e| e.to_string())?;

            let class = (case % 2) as u8;
            let count = rng.random_range(0..n_rej + 10);
            let forest_spec = IsoForestSpec {
                n_trees: 25,
                subsample_size: 64,
                contamination: 0.12,
                seed: case * 31 + 7,
            };
            let classifier_spec = ClassifierSpec {
                max_iters: 200,
                tolerance: 1e-7,
                ..Default::default()
            };

            let fast = retrieve_confident(
                &state,
                &RetrieveSpec {
                    class,
                    count,
                    forest: &forest_spec,
                    classifier: &classifier_spec,
                },
            )
            .map_err(|e| e.to_string())?;
            let slow = literal_retrieve(&state, class, count, &forest_spec, &classifier_spec);

            ensure(
                fast.selected.row_ids() == slow.selected_ids.as_slice(),
                format!("case {case}: selected ids differ"),
            )?;
            ensure(
                fast.selected.labels().unwrap() == slow.labels.as_slice(),
                format!("case {case}: labels differ"),
            )?;
            ensure(
                fast.remaining.row_ids() == slow.remaining_ids.as_slice(),
                format!("case {case}: remaining pools differ"),
            )?;
        }
        ensure(
            started.elapsed().as_secs() < 60,
            format!("runtime {}s >= 60s", started.elapsed().as_secs()),
        )
    })();
    criterion(
        3,
        "optimized retrieval == literal while-loop on 100 instances",
        outcome,
    );
}

#[test]
fn criterion_4_conservation_and_counts() {
    let outcome = (|| {
        ensure(class_counts(1000, 0.07) == (930, 70), "eta 1000 rho 0.07")?;
        ensure(class_counts(1000, 0.2) == (800, 200), "eta 1000 rho 0.2")?;

        let data = synth_credit(&SynthSpec::new(900, 1400, 0.4, 44)).map_err(|e| e.to_string())?;
        let val = synth_credit(&SynthSpec::new(400, 600, 0.4, 45)).map_err(|e| e.to_string())?;
        let initial =
            TrainState::new(data.accepted, data.rejects).map_err(|e| e.to_string())?;
        let total = initial.total_rows();
        let spec = CiexSpec {
            eta: 200,
            bad_fraction: 0.2,
            max_iterations: 8,
            forest: IsoForestSpec {
                n_trees: 40,
                ..Default::default()
            },
            seed: 5,
            ..Default::default()
        };
        let run = run_ciex(
            initial,
            &spec,
            &val.accepted,
            &val.rejects,
            &CiexRunConfig::default(),
            None,
        )
        .map_err(|e| e.to_string())?;
        ensure(run.records.len() > 1, "run produced no iterations")?;
        for record in &run.records {
            ensure(
                record.labeled_size + record.reject_size == total,
                format!(
                    "iteration {}: {} + {} != {total}",
                    record.iteration, record.labeled_size, record.reject_size
                ),
            )?;
            ensure(
                record.added_good + record.added_bad <= spec.eta,
                format!("iteration {} added more than eta", record.iteration),
            )?;
        }
        for state in &run.states {
            ensure(state.total_rows() == total, "archived state broke conservation")?;
        }
        Ok(())
    })();
    criterion(
        4,
        "conservation at every iteration; (c0, c1) = (930, 70) and (800, 200)",
        outcome,
    );
}

#[test]
fn criterion_5_classifier_numerics() {
    let outcome = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(5005);
        for case in 0..50 {
            let n = 5 + rng.random_range(0..60);
            let d = 1 + rng.random_range(0..8);
            let x = Array2::from_shape_fn((n, d), |_| rng.random::<f64>() * 4.0 - 2.0);
            let y: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < 0.5)).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 3.0 + 0.05).collect();
            let beta: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let b0 = rng.random::<f64>() - 0.5;
            let (grad, grad_b) = weighted_nll_grad(x.view(), &y, &w, &beta, b0);
            let h = 1e-6;
            for j in 0..d {
                let mut up = beta.clone();
                let mut down = beta.clone();
                up[j] += h;
                down[j] -= h;
                let fd = (weighted_nll(x.view(), &y, &w, &up, b0)
                    - weighted_nll(x.view(), &y, &w, &down, b0))
                    / (2.0 * h);
                let rel = (grad[j] - fd).abs() / fd.abs().max(1e-8);
                ensure(
                    rel < 1e-5,
                    format!("case {case} coef {j}: rel err {rel}"),
                )?;
            }
            let fd_b = (weighted_nll(x.view(), &y, &w, &beta, b0 + h)
                - weighted_nll(x.view(), &y, &w, &beta, b0 - h))
                / (2.0 * h);
            let rel = (grad_b - fd_b).abs() / fd_b.abs().max(1e-8);
            ensure(rel < 1e-5, format!("case {case} intercept: rel err {rel}"))?;
        }

        // Balanced weights: per-class mass n/(2 n_c) * n_c = n/2 is an exact
        // identity. Every weight within a class is the same constant, so
        // the class mass is one product; verify both sides agree to the
        // rounding of that single multiplication.
        let mut rng = ChaCha8Rng::seed_from_u64(5006);
        for _ in 0..20 {
            let n = 10 + rng.random_range(0..500);
            let mut labels: Vec<u8> =
                (0..n).map(|_| u8::from(rng.random::<f64>() < 0.23)).collect();
            labels[0] = 0;
            labels[1] = 1;
            let w = class_balance_weights(&labels).map_err(|e| e.to_string())?;
            let n1 = labels.iter().filter(|&&y| y == 1).count();
            let w1 = w[labels.iter().position(|&y| y == 1).unwrap()];
            let w0 = w[labels.iter().position(|&y| y == 0).unwrap()];
            let mass1 = w1 * n1 as f64;
            let mass0 = w0 * (n - n1) as f64;
            let half = n as f64 / 2.0;
            ensure(
                (mass0 - half).abs() <= 1e-12 * half && (mass1 - half).abs() <= 1e-12 * half,
                format!("class masses {mass0} / {mass1} differ from {half}"),
            )?;
            // All weights within a class are identical by construction.
            ensure(
                w.iter().zip(&labels).all(|(&wi, &y)| {
                    wi == if y == 1 { w1 } else { w0 }
                }),
                "weights within a class are not constant",
            )?;
        }
        Ok(())
    })();
    criterion(
        5,
        "gradient matches central differences at 1e-5; balanced masses equal",
        outcome,
    );
}

#[test]
fn criterion_6_isolation_forest() {
    let outcome = (|| {
        // c(n) against a compensated harmonic-sum oracle.
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        let mut harmonic = vec![0.0f64; 1025];
        for i in 1..=1023usize {
            let term = 1.0 / i as f64;
            let t = sum + (term + comp);
            comp = (term + comp) - (t - sum);
            sum = t;
            harmonic[i + 1] = sum;
        }
        for n in 2..=1024usize {
            let want = 2.0 * harmonic[n] - 2.0 * (n as f64 - 1.0) / n as f64;
            let got = c_factor(n).map_err(|e| e.to_string())?;
            ensure(
                (got - want).abs() < 1e-6,
                format!("c({n}) = {got}, oracle {want}"),
            )?;
        }

        // A 10-sigma outlier attains the sample maximum in >= 19/20 runs.
        let mut top = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
            let normal = Normal::new(0.0, 1.0).unwrap();
            let mut rows: Vec<[f64; 3]> = (0..500)
                .map(|_| {
                    [
                        normal.sample(&mut rng),
                        normal.sample(&mut rng),
                        normal.sample(&mut rng),
                    ]
                })
                .collect();
            rows.push([10.0, 10.0, 10.0]);
            let x = Array2::from_shape_fn((501, 3), |(i, j)| rows[i][j]);
            let forest = isolation_forest::fit(
                &IsoForestSpec {
                    seed,
                    ..Default::default()
                },
                x.view(),
            )
            .map_err(|e| e.to_string())?;
            let scores = forest.scores(x.view()).map_err(|e| e.to_string())?;
            let max = scores.iter().copied().fold(f64::MIN, f64::max);
            if scores[500] == max {
                top += 1;
            }
        }
        ensure(top >= 19, format!("outlier topped only {top}/20 runs"))?;

        // Training outlier fraction at contamination 0.12.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let x = Array2::from_shape_fn((1000, 4), |_| normal.sample(&mut rng));
        let forest = isolation_forest::fit(
            &IsoForestSpec {
                contamination: 0.12,
                seed: 3,
                ..Default::default()
            },
            x.view(),
        )
        .map_err(|e| e.to_string())?;
        let outliers = forest
            .is_inlier(x.view())
            .map_err(|e| e.to_string())?
            .iter()
            .filter(|i| !**i)
            .count();
        // ceil(0.12 * 1000) = 120 exactly, less only under score ties.
        ensure(
            outliers <= 120 && outliers >= 112,
            format!("outlier count {outliers} not within tie slack of 120"),
        )
    })();
    criterion(
        6,
        "outlier ranking 19/20, contamination fraction, c(n) harmonic oracle",
        outcome,
    );
}

#[test]
fn criterion_9_policy_split_shape() {
    let outcome = (|| {
        // Population whose fitted-policy PD marginal matches the reference
        // table shape: PD = sigmoid(z) with z ~ N(-0.1007, 0.4784) puts
        // ~5.9% of mass below PD 0.30 and ~93.4% below PD 0.65.
        let n = 24_000;
        let mut rng = ChaCha8Rng::seed_from_u64(909);
        let normal = Normal::new(-0.1007, 0.4784).unwrap();
        let noise = Normal::new(0.0, 0.3).unwrap();
        let mut x = Array2::zeros((n, 2));
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let z: f64 = normal.sample(&mut rng);
            x[(i, 0)] = z;
            x[(i, 1)] = noise.sample(&mut rng);
            let pd = 1.0 / (1.0 + (-z).exp());
            labels.push(u8::from(rng.random::<f64>() < pd));
        }
        let ds = Dataset::from_matrix(&["score_driver", "noise"], &x)
            .map_err(|e| e.to_string())?
            .with_labels(labels)
            .map_err(|e| e.to_string())?;

        let run_eps = |eps: f64| -> Result<(usize, usize), String> {
            let spec = PolicySpec {
                epsilon: eps,
                policy_fraction: 0.2,
                features: vec!["score_driver".into(), "noise".into()],
                l1_strength: 1e-3,
                seed: 11,
            };
            let out = make_seven_way(&ds, &spec, (0.6, 0.19, 0.21)).map_err(|e| e.to_string())?;
            let accepted = out.train_accepts.rows() + out.val_accepts.rows() + out.test_accepts.rows();
            let rejected = out.train_rejects.rows() + out.val_rejects.rows() + out.test_rejects.rows();
            Ok((accepted, rejected))
        };

        let (acc_lo, rej_lo) = run_eps(0.30)?;
        let (acc_hi, rej_hi) = run_eps(0.65)?;
        ensure(acc_lo > 0 && rej_hi > 0, "degenerate splits")?;
        // Reference ratios: accepted:rejected ~ 1:15.9 at 0.30 and
        // ~14.1:1 at 0.65; required within a factor of 2.
        let ratio_lo = rej_lo as f64 / acc_lo as f64;
        ensure(
            ratio_lo > 15.9 / 2.0 && ratio_lo < 15.9 * 2.0,
            format!("eps 0.30: rejected:accepted = {ratio_lo:.2}, want ~15.9 within 2x"),
        )?;
        let ratio_hi = acc_hi as f64 / rej_hi as f64;
        ensure(
            ratio_hi > 14.1 / 2.0 && ratio_hi < 14.1 * 2.0,
            format!("eps 0.65: accepted:rejected = {ratio_hi:.2}, want ~14.1 within 2x"),
        )?;
        // Direction: harsh policy accepts few, lenient accepts most.
        ensure(acc_lo < rej_lo && acc_hi > rej_hi, "direction wrong")
    })();
    criterion(
        9,
        "policy split ratios reproduce the reference shape within 2x",
        outcome,
    );
}

#[test]
fn criterion_11_topsis_hand_case_and_invariance() {
    let outcome = (|| {
        let problem = TopsisProblem {
            alternatives: vec![(0, vec![0.80, 0.01]), (1, vec![0.79, 0.05])],
            weights: vec![1.0, 10.0],
            directions: vec![Direction::Benefit, Direction::Benefit],
        };
        let out = topsis_select(&problem).map_err(|e| e.to_string())?;
        ensure(out.winner == 1, format!("winner {}", out.winner))?;

        let mut rng = ChaCha8Rng::seed_from_u64(1111);
        let mut checked = 0;
        while checked < 100 {
            let m = 2 + rng.random_range(0..10);
            let k = 2 + rng.random_range(0..3);
            let alternatives: Vec<(u64, Vec<f64>)> = (0..m)
                .map(|i| {
                    (
                        i as u64,
                        (0..k).map(|_| rng.random::<f64>() * 2.0 - 0.5).collect(),
                    )
                })
                .collect();
            let weights: Vec<f64> = (0..k).map(|_| 0.1 + rng.random::<f64>() * 8.0).collect();
            let directions: Vec<Direction> = (0..k)
                .map(|_| {
                    if rng.random::<f64>() < 0.5 {
                        Direction::Benefit
                    } else {
                        Direction::Cost
                    }
                })
                .collect();
            let base = TopsisProblem {
                alternatives: alternatives.clone(),
                weights: weights.clone(),
                directions: directions.clone(),
            };
            let Ok(expect) = topsis_select(&base) else {
                continue;
            };
            let scale = 0.25 + rng.random::<f64>() * 20.0;
            let scaled = TopsisProblem {
                alternatives,
                weights: weights.iter().map(|w| w * scale).collect(),
                directions,
            };
            let got = topsis_select(&scaled).map_err(|e| e.to_string())?;
            ensure(
                got.winner == expect.winner,
                format!("weight scaling changed winner: {} -> {}", expect.winner, got.winner),
            )?;
            checked += 1;
        }
        Ok(())
    })();
    criterion(
        11,
        "TOPSIS selects the high-kickout alternative; weight-scale invariance",
        outcome,
    );
}

// ------------------------------------------------ scaled synthetic claims

struct ScaledExperiment {
    cells: Vec<ciex_core::experiment::ResultCell>,
    seeds: Vec<u64>,
}

fn scaled_experiment() -> &'static ScaledExperiment {
    static RUN: OnceLock<ScaledExperiment> = OnceLock::new();
    RUN.get_or_init(|| {
        let tmp = tempfile::tempdir().expect("tempdir");
        let out = tmp.path().join("run");
        let seeds: Vec<u64> = (1..=10).collect();
        let config_text = format!(
            r#"
kind = "synthetic"
output_dir = "{}"
seeds = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
alpha_grid = [0.5]

[synthetic]
n_accept = 5000
n_reject = 10000
bias = 0.5

[[methods]]
name = "bm"

[[methods]]
name = "a-uw"

[[methods]]
name = "a-dw"

[[methods]]
name = "a-sc"

[[methods]]
name = "a-fu"

[[methods]]
name = "parceling"

[[methods]]
name = "extrapolation"
mode = "full"

[[methods]]
name = "ciex"
eta = 500
bad_fraction = 0.2
contamination = 0.12
max_iterations = 14
"#,
            out.display()
        );
        let config_path = tmp.path().join("config.toml");
        std::fs::write(&config_path, config_text).expect("write config");
        let config =
            ciex_core::experiment::ExperimentConfig::from_file(&config_path).expect("config");
        let jobs = std::thread::available_parallelism().map_or(2, usize::from);
        let dir = ciex_core::experiment::run_experiment(&config, jobs).expect("run");
        let (cells, failures) = ciex_core::experiment::read_cells(&dir).expect("cells");
        assert!(failures.is_empty(), "failed cells: {failures:?}");
        ScaledExperiment { cells, seeds }
    })
}

fn cell_value(
    run: &ScaledExperiment,
    method: &str,
    seed: u64,
    value: impl Fn(&ciex_core::experiment::ResultCell) -> f64,
) -> f64 {
    run.cells
        .iter()
        .find(|c| c.method == method && c.seed == seed)
        .map(&value)
        .unwrap_or_else(|| panic!("missing cell {method} seed {seed}"))
}

#[test]
fn criterion_7_ciex_auk_dominance() {
    let started = std::time::Instant::now();
    let outcome = (|| {
        let run = scaled_experiment();
        for baseline in ["a-uw", "a-dw", "a-sc", "a-fu", "par", "ext-full"] {
            let wins = run
                .seeds
                .iter()
                .filter(|&&s| {
                    cell_value(run, "ciex", s, |c| c.auk)
                        > cell_value(run, baseline, s, |c| c.auk)
                })
                .count();
            ensure(
                wins >= 8,
                format!("ciex beat {baseline} in only {wins}/10 seeds"),
            )?;
        }
        ensure(
            started.elapsed().as_secs() < 1800,
            format!("runtime {}s >= 30 min", started.elapsed().as_secs()),
        )
    })();
    criterion(
        7,
        "CI-EX AUK beats every classical baseline in >= 8/10 seeds",
        outcome,
    );
}

#[test]
fn criterion_8_auc_tradeoff_bound() {
    let outcome = (|| {
        let run = scaled_experiment();
        let mean = |method: &str| -> f64 {
            run.seeds
                .iter()
                .map(|&s| cell_value(run, method, s, |c| c.auc))
                .sum::<f64>()
                / run.seeds.len() as f64
        };
        let bm = mean("bm");
        let ciex = mean("ciex");
        ensure(
            ciex >= bm - 0.02,
            format!("ciex mean AUC {ciex:.4} below bm {bm:.4} - 0.02"),
        )
    })();
    criterion(8, "CI-EX mean AUC within 0.02 of the benchmark", outcome);
}

#[test]
fn criterion_10_end_to_end_determinism() {
    let outcome = (|| {
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mk = |name: &str| -> String {
            format!(
                r#"
kind = "synthetic"
output_dir = "{}"
seeds = [21, 22]
alpha_grid = [0.5, 1.0]

[synthetic]
n_accept = 500
n_reject = 800
bias = 0.5

[[methods]]
name = "bm"

[[methods]]
name = "a-fu"

[[methods]]
name = "ciex"
eta = 80
bad_fraction = 0.2
max_iterations = 3
"#,
                tmp.path().join(name).display()
            )
        };
        let run = |name: &str, jobs: usize| -> Result<std::path::PathBuf, String> {
            let path = tmp.path().join(format!("{name}.toml"));
            std::fs::write(&path, mk(name)).map_err(|e| e.to_string())?;
            let config = ciex_core::experiment::ExperimentConfig::from_file(&path)
                .map_err(|e| e.to_string())?;
            let dir =
                ciex_core::experiment::run_experiment(&config, jobs).map_err(|e| e.to_string())?;
            ciex_core::experiment::report(&dir).map_err(|e| e.to_string())
        };
        let a = run("a", 4)?;
        let b = run("b", 1)?;
        for file in [
            "auc_matrix.csv",
            "auk_matrix.csv",
            "scatter.csv",
            "ciex_iterations.csv",
            "failures.csv",
        ] {
            let xa = std::fs::read(a.join(file)).map_err(|e| e.to_string())?;
            let xb = std::fs::read(b.join(file)).map_err(|e| e.to_string())?;
            ensure(xa == xb, format!("{file} differs between reruns"))?;
        }
        Ok(())
    })();
    criterion(10, "identical configs give byte-identical report CSVs", outcome);
}

#[test]
fn accept_sets_tie_break_is_exact() {
    // Supporting check for the quantile convention: ties at the threshold
    // break by row id and set sizes stay exact.
    let ids: Vec<RowId> = (0..8).collect();
    let labels = vec![0, 1, 0, 1, 0, 1, 0, 1];
    let scores = vec![0.3; 8];
    let inputs = KickoutInputs {
        accepted_ids: &ids,
        accepted_labels: &labels,
        bm_scores_accepted: &scores,
        ri_scores_accepted: &scores,
        reject_ids: &[],
        ri_scores_rejects: &[],
    };
    let (bm, ri) = accept_sets(&inputs, 0.25).unwrap();
    assert_eq!(bm.len(), 2);
    assert_eq!(bm, BTreeSet::from([0, 1]));
    assert_eq!(ri, BTreeSet::from([0, 1]));
}
