//! Gradient checker: sweeps random small instances and compares every
//! analytic gradient entry against the central finite-difference oracle.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{generators::random_road_network, LinkageNetwork, PropagationMatrix};
use crate::model::{backward, fd_gradient, forward_window, init_hidden, ModelParams};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradCheckConfig {
    pub instances: usize,
    pub max_hidden: usize,
    pub max_nodes: usize,
    pub max_window: usize,
    pub alphas: Vec<f64>,
    pub epsilon: f64,
    pub rel_tol: f64,
    pub abs_floor: f64,
    pub seed: u64,
    /// Test hook: deliberately corrupt one analytic gradient entry so the
    /// checker itself can be shown to catch mismatches.
    pub corrupt: bool,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            instances: 20,
            max_hidden: 6,
            max_nodes: 8,
            max_window: 6,
            alphas: vec![0.0, 0.5, 1.0],
            epsilon: 1e-4,
            rel_tol: 1e-4,
            abs_floor: 1e-7,
            seed: 42,
            corrupt: false,
        }
    }
}

/// Worst observed error for one parameter family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamWorst {
    pub param: String,
    pub worst_rel_error: f64,
    pub worst_abs_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub instances: usize,
    pub per_param: Vec<ParamWorst>,
    pub worst_rel_error: f64,
    pub pass: bool,
    pub failures: Vec<String>,
}

impl GradCheckReport {
    /// Fixed-width text rendering, one line per parameter family.
    pub fn render(&self) -> String {
        let mut out = format!(
            "gradient check over {} instances\n{:<8} {:>14} {:>14}\n",
            self.instances, "param", "worst_rel", "worst_abs"
        );
        for p in &self.per_param {
            out.push_str(&format!(
                "{:<8} {:>14.3e} {:>14.3e}\n",
                p.param, p.worst_rel_error, p.worst_abs_error
            ));
        }
        for f in &self.failures {
            out.push_str(&format!("FAIL: {f}\n"));
        }
        out.push_str(if self.pass { "PASS\n" } else { "FAIL\n" });
        out
    }
}

/// Runs the sweep. An entry passes when its absolute defect is below the
/// floor or its relative error (against the larger magnitude) is within
/// tolerance.
pub fn gradient_check(cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    let order = [
        "w", "u", "w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_o", "b_o", "h",
    ];
    let mut worst_rel: Vec<f64> = vec![0.0; order.len()];
    let mut worst_abs: Vec<f64> = vec![0.0; order.len()];
    let mut failures = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for inst in 0..cfg.instances {
        let d = rng.gen_range(2..=cfg.max_hidden.max(2));
        let segments = rng.gen_range(2..=cfg.max_nodes.max(2));
        let vertices = rng.gen_range(2..=segments.max(2));
        let window = rng.gen_range(1..=cfg.max_window.max(1));
        let alpha = cfg.alphas[inst % cfg.alphas.len()];

        let net = random_road_network(cfg.seed.wrapping_add(inst as u64), vertices, segments);
        let link = LinkageNetwork::from_road_network(&net)?;
        let prop = PropagationMatrix::new(&link, alpha)?;
        let n = link.n();

        let params = ModelParams::init_with_rng(d, n, 1, &mut rng)?;
        let h = init_hidden(d, n, &mut rng);
        let inputs: Vec<Array2<f64>> = (0..window - 1)
            .map(|_| Array2::from_shape_fn((1, n), |_| rng.gen_range(0.05..0.95)))
            .collect();
        let truths: Vec<Array1<f64>> = (0..window)
            .map(|_| Array1::from_shape_fn(n, |_| rng.gen_range(0.05..0.95)))
            .collect();

        let trace = forward_window(&params, &h, &inputs, &prop)?;
        let mut analytic = backward(&params, &trace, &truths, &prop)?;
        if cfg.corrupt {
            analytic.w[[0, 0]] += 1e-2;
        }
        let numeric = fd_gradient(&params, &h, &inputs, &truths, &prop, cfg.epsilon)?;

        for (k, ((name, a), (_, f))) in analytic
            .fields()
            .into_iter()
            .zip(numeric.fields())
            .enumerate()
        {
            debug_assert_eq!(name, order[k]);
            for (idx, (ai, fi)) in a.iter().zip(f.iter()).enumerate() {
                let abs = (ai - fi).abs();
                let rel = abs / ai.abs().max(fi.abs()).max(1e-300);
                if abs > worst_abs[k] {
                    worst_abs[k] = abs;
                }
                if abs > cfg.abs_floor && rel > worst_rel[k] {
                    worst_rel[k] = rel;
                }
                if abs > cfg.abs_floor && rel > cfg.rel_tol {
                    failures.push(format!(
                        "instance {inst} (D={d} n={n} T={window} alpha={alpha}): \
                         {name}[{idx}] analytic {ai:.6e} vs fd {fi:.6e} (rel {rel:.3e})"
                    ));
                }
            }
        }
    }

    let per_param = order
        .iter()
        .enumerate()
        .map(|(k, name)| ParamWorst {
            param: (*name).to_string(),
            worst_rel_error: worst_rel[k],
            worst_abs_error: worst_abs[k],
        })
        .collect();
    let worst = worst_rel.iter().fold(0.0f64, |m, &v| m.max(v));
    Ok(GradCheckReport {
        instances: cfg.instances,
        per_param,
        worst_rel_error: worst,
        pass: failures.is_empty(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sweep_passes() {
        let cfg = GradCheckConfig {
            instances: 6,
            ..Default::default()
        };
        let report = gradient_check(&cfg).unwrap();
        assert!(report.pass, "{}", report.render());
        assert!(report.worst_rel_error < 1e-4);
        assert_eq!(report.per_param.len(), 11);
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        let cfg = GradCheckConfig {
            instances: 3,
            corrupt: true,
            ..Default::default()
        };
        let report = gradient_check(&cfg).unwrap();
        assert!(!report.pass);
        assert!(report.failures.iter().any(|f| f.contains("w[0]")));
        assert!(report.render().contains("FAIL"));
    }

    #[test]
    fn report_lists_every_parameter_family() {
        let cfg = GradCheckConfig {
            instances: 2,
            ..Default::default()
        };
        let report = gradient_check(&cfg).unwrap();
        let rendered = report.render();
        for name in ["w_z", "u_r", "b_o", "w_o", "h"] {
            assert!(rendered.contains(name), "{rendered}");
        }
    }
}
