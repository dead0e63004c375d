// Scratch diagnostics for tuning the synthetic experiment: replays one
// runner cell (same seed derivation, same splits) and prints per-iteration
// coefficients and absorbed-row statistics. Not part of the test suite.

use sha2::{Digest, Sha256};

use ciex_core::ciex::{run_ciex, CiexRunConfig, CiexSpec};
use ciex_core::classifier::{self, ClassifierSpec};
use ciex_core::data::{split, Provenance, SplitSpec};
use ciex_core::state::TrainState;
use ciex_core::synth::{synth_credit, SynthSpec};

fn derive_seed(master: u64, method: Option<&str>, condition: &str, replicate: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update([0u8]);
    if let Some(m) = method {
        hasher.update(m.as_bytes());
    }
    hasher.update([0u8]);
    hasher.update(condition.as_bytes());
    hasher.update([0u8]);
    hasher.update(replicate.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let cliff_weight: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1.5);
    let rho: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let master: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1);
    let shift_ortho: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(5.0);

    let data_seed = derive_seed(master, None, "synthetic", master - 1);
    let method_seed = derive_seed(master, Some("ciex"), "synthetic", master - 1);

    let mut spec = SynthSpec::new(5000, 10000, 0.5, data_seed);
    spec.cliff_weight = cliff_weight;
    spec.shift_ortho = shift_ortho;
    let data = synth_credit(&spec).unwrap();
    let u = spec.class_direction();
    let v = spec.ortho_direction();
    let w = spec.novel_direction();

    let fractions = vec![0.6, 0.2, 0.2];
    let acc = split(
        &data.accepted,
        &SplitSpec::Fractions {
            fractions: fractions.clone(),
            seed: data_seed ^ 0xA5A5,
        },
    )
    .unwrap()
    .parts;
    let rej = split(
        &data.rejects,
        &SplitSpec::Fractions {
            fractions,
            seed: data_seed ^ 0x5A5A,
        },
    )
    .unwrap()
    .parts;

    let project = |coef: &[f64], dir: &[f64]| -> f64 {
        coef.iter().zip(dir).map(|(c, d)| c * d).sum()
    };

    let ciex_spec = CiexSpec {
        eta: 500,
        bad_fraction: rho,
        contamination: 0.12,
        max_iterations: 14,
        seed: method_seed,
        ..Default::default()
    };
    let initial = TrainState::new(acc[0].clone(), rej[0].clone()).unwrap();
    let run = run_ciex(
        initial,
        &ciex_spec,
        &acc[1],
        &rej[1],
        &CiexRunConfig::default(),
        None,
    )
    .unwrap();

    println!("iter  beta_u   beta_v1  beta_v2  val_auc  val_auk   added(g/b) cross");
    for (record, state) in run.records.iter().zip(&run.states) {
        let pool = state.labeled();
        let model = classifier::fit(
            &ClassifierSpec::default(),
            pool.to_matrix().unwrap().view(),
            pool.labels().unwrap(),
            pool.weights(),
        )
        .unwrap();
        println!(
            "{:4}  {:+.3}   {:+.3}   {:+.3}   {:.4}  {:+.5}  {:4}/{:3}  {:3}",
            record.iteration,
            project(&model.coefficients, &u),
            project(&model.coefficients, &v),
            project(&model.coefficients, &w),
            record.val_auc,
            record.val_auk,
            record.added_good,
            record.added_bad,
            record.cross_labeled,
        );
    }

    let final_state = run.states.last().unwrap();
    let pool = final_state.labeled();
    let labels = pool.labels().unwrap();
    let prov = pool.provenance().unwrap();
    let x = pool.to_matrix().unwrap();
    let truth: std::collections::BTreeMap<u64, u8> = data
        .hidden_truth
        .row_ids()
        .iter()
        .copied()
        .zip(data.hidden_truth.labels().unwrap().iter().copied())
        .collect();
    let mut stats = [[0.0f64; 4]; 2]; // [label][count, mean_v1, mean_v2, correct]
    for i in 0..pool.rows() {
        if prov[i] == Provenance::Inferred {
            let v1: f64 = (0..x.ncols()).map(|j| x[(i, j)] * v[j]).sum();
            let v2: f64 = (0..x.ncols()).map(|j| x[(i, j)] * w[j]).sum();
            let y = labels[i] as usize;
            stats[y][0] += 1.0;
            stats[y][1] += v1;
            stats[y][2] += v2;
            if truth[&pool.row_ids()[i]] == labels[i] {
                stats[y][3] += 1.0;
            }
        }
    }
    for y in 0..2 {
        if stats[y][0] > 0.0 {
            println!(
                "inferred label {y}: n={} mean_v1={:+.3} mean_v2={:+.3} accuracy={:.3}",
                stats[y][0],
                stats[y][1] / stats[y][0],
                stats[y][2] / stats[y][0],
                stats[y][3] / stats[y][0]
            );
        }
    }
}
