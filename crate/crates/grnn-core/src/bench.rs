//! Complexity benchmark: for each graph size n, times training steps of one
//! joint model over the whole linkage network against n independently
//! trained single-node models, and checks the parameter-count arithmetic.
//! The joint model shares every weight matrix across nodes, so its
//! parameter count grows as m + O(n) instead of O(n*m).

use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::generators::chain_road_network;
use crate::graph::{LinkageNetwork, PropagationMatrix};
use crate::model::{backward, forward_window, init_hidden, sgd_update, ModelParams};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub hidden_dim: usize,
    pub window: usize,
    /// Timed training steps per trial.
    pub steps: usize,
    /// Untimed steps run first.
    pub warmup: usize,
    pub lr: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![1, 10, 50],
            hidden_dim: 16,
            window: 16,
            steps: 30,
            warmup: 3,
            lr: 0.01,
            alpha: 0.5,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    /// Wall time of one training step of the joint model, milliseconds.
    pub joint_ms_per_step: f64,
    /// Total wall time of one training step of each of the n single-node
    /// models, run sequentially, milliseconds.
    pub separate_ms_per_step: f64,
    pub speedup: f64,
    pub joint_param_count: usize,
    pub separate_param_count: usize,
    /// Closed-form counts from the shapes: shared m = 3D^2+3Dd+D, per-node
    /// (2D+1)n for the joint model and n*(m + 2D+1) for n separate models.
    pub joint_param_formula: usize,
    pub separate_param_formula: usize,
    pub joint_state_count: usize,
}

/// One training step: forward over the window, backward, update.
fn train_steps(
    params: &mut ModelParams,
    h: &Array2<f64>,
    inputs: &[Array2<f64>],
    truths: &[Array1<f64>],
    prop: &PropagationMatrix,
    lr: f64,
    count: usize,
) -> Result<()> {
    for _ in 0..count {
        let trace = forward_window(params, h, inputs, prop)?;
        let grads = backward(params, &trace, truths, prop)?;
        sgd_update(params, &grads, lr)?;
    }
    Ok(())
}

fn make_window(
    rng: &mut impl Rng,
    n: usize,
    window: usize,
) -> (Vec<Array2<f64>>, Vec<Array1<f64>>) {
    let truths: Vec<Array1<f64>> = (0..window)
        .map(|_| Array1::from_shape_fn(n, |_| rng.gen_range(0.05..0.95)))
        .collect();
    let inputs: Vec<Array2<f64>> = truths[..window - 1]
        .iter()
        .map(|v| v.view().insert_axis(ndarray::Axis(0)).to_owned())
        .collect();
    (inputs, truths)
}

/// Runs the benchmark. Trials are sequential; warm-up steps are excluded
/// from all timings.
pub fn complexity_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let d = cfg.hidden_dim;
    let mut rows = Vec::with_capacity(cfg.sizes.len());
    for &n in &cfg.sizes {
        let link = LinkageNetwork::from_road_network(&chain_road_network(n))?;
        let prop = PropagationMatrix::new(&link, cfg.alpha)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let (inputs, truths) = make_window(&mut rng, n, cfg.window);

        // joint model over all n nodes
        let mut joint = ModelParams::init(d, n, 1, cfg.seed)?;
        let h = init_hidden(d, n, &mut rng);
        train_steps(&mut joint, &h, &inputs, &truths, &prop, cfg.lr, cfg.warmup)?;
        let started = Instant::now();
        train_steps(&mut joint, &h, &inputs, &truths, &prop, cfg.lr, cfg.steps)?;
        let joint_ms = started.elapsed().as_secs_f64() * 1e3 / cfg.steps as f64;
        let joint_param_count = joint.total_param_count();

        // n single-node models trained sequentially on their own series
        let single_link = LinkageNetwork::from_road_network(&chain_road_network(1))?;
        let single_prop = PropagationMatrix::new(&single_link, cfg.alpha)?;
        let mut singles: Vec<(ModelParams, Array2<f64>, Vec<Array2<f64>>, Vec<Array1<f64>>)> =
            (0..n)
                .map(|node| {
                    let params = ModelParams::init(d, 1, 1, cfg.seed.wrapping_add(node as u64))?;
                    let h1 = init_hidden(d, 1, &mut rng);
                    let t1: Vec<Array1<f64>> = truths
                        .iter()
                        .map(|v| Array1::from_vec(vec![v[node]]))
                        .collect();
                    let i1: Vec<Array2<f64>> = t1[..cfg.window - 1]
                        .iter()
                        .map(|v| v.view().insert_axis(ndarray::Axis(0)).to_owned())
                        .collect();
                    Ok((params, h1, i1, t1))
                })
                .collect::<Result<_>>()?;
        for (params, h1, i1, t1) in singles.iter_mut() {
            train_steps(params, h1, i1, t1, &single_prop, cfg.lr, cfg.warmup)?;
        }
        let started = Instant::now();
        for (params, h1, i1, t1) in singles.iter_mut() {
            train_steps(params, h1, i1, t1, &single_prop, cfg.lr, cfg.steps)?;
        }
        let separate_ms = started.elapsed().as_secs_f64() * 1e3 / cfg.steps as f64;
        let separate_param_count: usize =
            singles.iter().map(|(p, ..)| p.total_param_count()).sum();

        let m_shared = 3 * d * d + 3 * d + d;
        rows.push(BenchRow {
            n,
            joint_ms_per_step: joint_ms,
            separate_ms_per_step: separate_ms,
            speedup: separate_ms / joint_ms.max(f64::MIN_POSITIVE),
            joint_param_count,
            separate_param_count,
            joint_param_formula: m_shared + (2 * d + 1) * n,
            separate_param_formula: n * (m_shared + 2 * d + 1),
            joint_state_count: d * n,
        });
    }
    Ok(rows)
}

/// Delimited table: `n,mode,wall_ms_per_step,param_count`, two rows per
/// size (joint model, then the n separate models in total).
pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("n,mode,wall_ms_per_step,param_count\n");
    for r in rows {
        out.push_str(&format!(
            "{},joint,{},{}\n",
            r.n, r.joint_ms_per_step, r.joint_param_count
        ));
        out.push_str(&format!(
            "{},separate,{},{}\n",
            r.n, r.separate_ms_per_step, r.separate_param_count
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_counts_match_closed_form() {
        let cfg = BenchConfig {
            sizes: vec![1, 7],
            hidden_dim: 5,
            window: 4,
            steps: 1,
            warmup: 0,
            ..Default::default()
        };
        let rows = complexity_bench(&cfg).unwrap();
        for r in &rows {
            assert_eq!(r.joint_param_count, r.joint_param_formula);
            assert_eq!(r.separate_param_count, r.separate_param_formula);
            assert_eq!(r.joint_state_count, 5 * r.n);
        }
        // joint grows by (2D+1) per node over the shared m
        assert_eq!(
            rows[1].joint_param_count - rows[0].joint_param_count,
            (2 * 5 + 1) * 6
        );
    }

    #[test]
    fn single_node_joint_and_separate_are_comparable() {
        let cfg = BenchConfig {
            sizes: vec![1],
            hidden_dim: 8,
            window: 8,
            steps: 60,
            warmup: 10,
            ..Default::default()
        };
        let rows = complexity_bench(&cfg).unwrap();
        let ratio = rows[0].joint_ms_per_step / rows[0].separate_ms_per_step;
        assert!(
            (0.5..=2.0).contains(&ratio),
            "n=1 joint/separate ratio {ratio}"
        );
    }

    #[test]
    fn csv_schema_is_stable() {
        let rows = vec![BenchRow {
            n: 2,
            joint_ms_per_step: 1.5,
            separate_ms_per_step: 3.0,
            speedup: 2.0,
            joint_param_count: 10,
            separate_param_count: 20,
            joint_param_formula: 10,
            separate_param_formula: 20,
            joint_state_count: 4,
        }];
        let csv = bench_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "n,mode,wall_ms_per_step,param_count");
        assert_eq!(lines.next().unwrap(), "2,joint,1.5,10");
        assert_eq!(lines.next().unwrap(), "2,separate,3,20");
    }
}
