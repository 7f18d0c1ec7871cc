//! The gated graph-recurrent cell: forward propagation over the linkage
//! network, the sigmoid output head, the windowed mean-square loss, and
//! hand-derived truncated-BPTT gradients with a finite-difference oracle.
//!
//! Shapes: hidden state `H` is D x n (one column per linkage node). Inputs
//! are d x n with d = 1 for scalar traffic conditions. `W^Z`, `W^R`, `U`
//! are D x D; `U^Z`, `U^R`, `W` are D x d; `B^Z`, `B^R` are per-node D x n;
//! the output head is a 1 x D row `w_o` plus a per-node bias `b_o`.
//!
//! One propagation step computes
//!
//! ```text
//! S       = H * A'
//! Z       = sigmoid(W^Z S + U^Z X + B^Z)
//! R       = sigmoid(W^R S + U^R X + B^R)
//! Htilde  = tanh(W X + U (R .* S))
//! H_next  = (1 - Z) .* S + Z .* Htilde
//! o       = sigmoid(w_o H + b_o)
//! ```
//!
//! See `docs/gradients.md` for the backward derivation this module
//! implements; every formula is pinned by the finite-difference oracle in
//! [`fd_gradient`].

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{GrnnError, Result};
use crate::graph::PropagationMatrix;

/// Standard deviation of weight initialization (variance 0.01).
pub const WEIGHT_STD: f64 = 0.1;

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// All learnable matrices of the model.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub w: Array2<f64>,   // D x d, candidate input transform
    pub u: Array2<f64>,   // D x D, candidate state transform
    pub w_z: Array2<f64>, // D x D, update-gate state transform
    pub u_z: Array2<f64>, // D x d, update-gate input transform
    pub b_z: Array2<f64>, // D x n, update-gate per-node bias
    pub w_r: Array2<f64>, // D x D, reset-gate state transform
    pub u_r: Array2<f64>, // D x d, reset-gate input transform
    pub b_r: Array2<f64>, // D x n, reset-gate per-node bias
    pub w_o: Array2<f64>, // 1 x D, output row
    pub b_o: Array1<f64>, // n, output per-node bias
    hidden_dim: usize,
    node_count: usize,
    input_dim: usize,
}

impl ModelParams {
    /// Random initialization: weights drawn from Normal(0, 0.01 variance)
    /// in a fixed field order (w, u, w_z, u_z, w_r, u_r, w_o), biases zero.
    /// Deterministic under a fixed seed.
    pub fn init(hidden_dim: usize, node_count: usize, input_dim: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_with_rng(hidden_dim, node_count, input_dim, &mut rng)
    }

    pub fn init_with_rng<R: Rng>(
        hidden_dim: usize,
        node_count: usize,
        input_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if hidden_dim == 0 || node_count == 0 || input_dim == 0 {
            return Err(GrnnError::Parameter(format!(
                "dimensions must be positive, got D={hidden_dim} n={node_count} d={input_dim}"
            )));
        }
        let normal = Normal::new(0.0, WEIGHT_STD).expect("valid normal");
        let mut draw = |r: usize, c: usize| {
            let data: Vec<f64> = (0..r * c).map(|_| normal.sample(rng)).collect();
            Array2::from_shape_vec((r, c), data).expect("shape matches data")
        };
        let (d, n, din) = (hidden_dim, node_count, input_dim);
        Ok(Self {
            w: draw(d, din),
            u: draw(d, d),
            w_z: draw(d, d),
            u_z: draw(d, din),
            w_r: draw(d, d),
            u_r: draw(d, din),
            w_o: draw(1, d),
            b_z: Array2::zeros((d, n)),
            b_r: Array2::zeros((d, n)),
            b_o: Array1::zeros(n),
            hidden_dim: d,
            node_count: n,
            input_dim: din,
        })
    }

    /// All-zero parameters; useful for the analytic corner cases.
    pub fn zeros(hidden_dim: usize, node_count: usize, input_dim: usize) -> Result<Self> {
        if hidden_dim == 0 || node_count == 0 || input_dim == 0 {
            return Err(GrnnError::Parameter(format!(
                "dimensions must be positive, got D={hidden_dim} n={node_count} d={input_dim}"
            )));
        }
        let (d, n, din) = (hidden_dim, node_count, input_dim);
        Ok(Self {
            w: Array2::zeros((d, din)),
            u: Array2::zeros((d, d)),
            w_z: Array2::zeros((d, d)),
            u_z: Array2::zeros((d, din)),
            w_r: Array2::zeros((d, d)),
            u_r: Array2::zeros((d, din)),
            w_o: Array2::zeros((1, d)),
            b_z: Array2::zeros((d, n)),
            b_r: Array2::zeros((d, n)),
            b_o: Array1::zeros(n),
            hidden_dim: d,
            node_count: n,
            input_dim: din,
        })
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Number of scalars shared across all nodes (the weight matrices and
    /// the output row): `3*D^2 + 3*D*d + D`.
    pub fn shared_param_count(&self) -> usize {
        self.w.len()
            + self.u.len()
            + self.w_z.len()
            + self.u_z.len()
            + self.w_r.len()
            + self.u_r.len()
            + self.w_o.len()
    }

    /// Number of per-node scalars (bias matrices and output bias):
    /// `(2*D + 1) * n`.
    pub fn per_node_param_count(&self) -> usize {
        self.b_z.len() + self.b_r.len() + self.b_o.len()
    }

    pub fn total_param_count(&self) -> usize {
        self.shared_param_count() + self.per_node_param_count()
    }

    pub fn all_finite(&self) -> bool {
        self.iter_all().all(f64::is_finite)
    }

    fn iter_all(&self) -> impl Iterator<Item = f64> + '_ {
        self.w
            .iter()
            .chain(self.u.iter())
            .chain(self.w_z.iter())
            .chain(self.u_z.iter())
            .chain(self.w_r.iter())
            .chain(self.u_r.iter())
            .chain(self.b_z.iter())
            .chain(self.b_r.iter())
            .chain(self.w_o.iter())
            .chain(self.b_o.iter())
            .copied()
    }
}

/// Draws a D x n hidden state from Normal(0, 0.01 variance).
pub fn init_hidden<R: Rng>(hidden_dim: usize, node_count: usize, rng: &mut R) -> Array2<f64> {
    let normal = Normal::new(0.0, WEIGHT_STD).expect("valid normal");
    let data: Vec<f64> = (0..hidden_dim * node_count)
        .map(|_| normal.sample(rng))
        .collect();
    Array2::from_shape_vec((hidden_dim, node_count), data).expect("shape matches data")
}

/// Intermediate values of one propagation step, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct StepTrace {
    pub s: Array2<f64>,       // H * A' before gating
    pub z: Array2<f64>,       // update gate, entries in (0,1)
    pub r: Array2<f64>,       // reset gate, entries in (0,1)
    pub h_tilde: Array2<f64>, // candidate state, entries in (-1,1)
    pub h_next: Array2<f64>,  // gated combination
    pub x: Array2<f64>,       // input consumed by this step (d x n)
}

/// Forward records over one truncation window: `outputs.len()` scored
/// outputs and `steps.len() = outputs.len() - 1` state transitions.
/// `outputs[0]` is read directly off the initial hidden state.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub h_init: Array2<f64>,
    pub steps: Vec<StepTrace>,
    pub outputs: Vec<Array1<f64>>,
}

impl ForwardTrace {
    pub fn window_len(&self) -> usize {
        self.outputs.len()
    }

    /// Hidden state at window position `t` (0 = window start).
    pub fn state_at(&self, t: usize) -> &Array2<f64> {
        if t == 0 {
            &self.h_init
        } else {
            &self.steps[t - 1].h_next
        }
    }
}

fn check_step_shapes(
    params: &ModelParams,
    h_prev: &Array2<f64>,
    x_t: &Array2<f64>,
    prop: &PropagationMatrix,
) -> Result<()> {
    let (d, n, din) = (params.hidden_dim, params.node_count, params.input_dim);
    if h_prev.dim() != (d, n) {
        return Err(GrnnError::Contract(format!(
            "hidden state shape {:?} does not match (D, n) = ({d}, {n})",
            h_prev.dim()
        )));
    }
    if x_t.dim() != (din, n) {
        return Err(GrnnError::Contract(format!(
            "input shape {:?} does not match (d, n) = ({din}, {n})",
            x_t.dim()
        )));
    }
    if prop.n() != n {
        return Err(GrnnError::Contract(format!(
            "propagation matrix is {}x{} but the model has n = {n}",
            prop.n(),
            prop.n()
        )));
    }
    Ok(())
}

/// One propagation step of the gated cell.
pub fn propagate_step(
    params: &ModelParams,
    h_prev: &Array2<f64>,
    x_t: &Array2<f64>,
    prop: &PropagationMatrix,
) -> Result<StepTrace> {
    check_step_shapes(params, h_prev, x_t, prop)?;
    if !x_t.iter().all(|v| v.is_finite()) || !h_prev.iter().all(|v| v.is_finite()) {
        return Err(GrnnError::Numeric(
            "non-finite entries in propagation inputs".into(),
        ));
    }
    let s = prop.mul_right(h_prev);
    let z = (params.w_z.dot(&s) + params.u_z.dot(x_t) + &params.b_z).mapv(sigmoid);
    let r = (params.w_r.dot(&s) + params.u_r.dot(x_t) + &params.b_r).mapv(sigmoid);
    let h_tilde = (params.w.dot(x_t) + params.u.dot(&(&r * &s))).mapv(f64::tanh);
    let h_next = (1.0 - &z) * &s + &z * &h_tilde;
    Ok(StepTrace {
        s,
        z,
        r,
        h_tilde,
        h_next,
        x: x_t.clone(),
    })
}

/// Per-node prediction read off a hidden state: `sigmoid(w_o H + b_o)`.
pub fn output_step(params: &ModelParams, h: &Array2<f64>) -> Result<Array1<f64>> {
    let (d, n) = (params.hidden_dim, params.node_count);
    if h.dim() != (d, n) {
        return Err(GrnnError::Contract(format!(
            "hidden state shape {:?} does not match (D, n) = ({d}, {n})",
            h.dim()
        )));
    }
    let pre = params.w_o.dot(h);
    Ok(Array1::from_shape_fn(n, |i| sigmoid(pre[[0, i]] + params.b_o[i])))
}

/// Mean squared error over every node and window position.
pub fn loss(predictions: &[Array1<f64>], truths: &[Array1<f64>]) -> Result<f64> {
    if predictions.len() != truths.len() || predictions.is_empty() {
        return Err(GrnnError::Contract(format!(
            "prediction/truth length mismatch: {} vs {}",
            predictions.len(),
            truths.len()
        )));
    }
    let n = predictions[0].len();
    let mut acc = 0.0;
    for (o, x) in predictions.iter().zip(truths) {
        if o.len() != n || x.len() != n {
            return Err(GrnnError::Contract(
                "inconsistent vector length inside loss window".into(),
            ));
        }
        for (oi, xi) in o.iter().zip(x.iter()) {
            let e = xi - oi;
            acc += e * e;
        }
    }
    Ok(acc / (n * predictions.len()) as f64)
}

/// Rolls the cell over a truncation window. `inputs` drive the transitions,
/// so a window covering `T` intervals passes `T - 1` inputs and yields `T`
/// outputs: position `t` is scored before the observation at `t` is
/// consumed.
pub fn forward_window(
    params: &ModelParams,
    h_init: &Array2<f64>,
    inputs: &[Array2<f64>],
    prop: &PropagationMatrix,
) -> Result<ForwardTrace> {
    let mut outputs = Vec::with_capacity(inputs.len() + 1);
    let mut steps = Vec::with_capacity(inputs.len());
    outputs.push(output_step(params, h_init)?);
    for x_t in inputs {
        let step = {
            let state = if steps.is_empty() {
                h_init
            } else {
                &steps.last().expect("nonempty").h_next
            };
            propagate_step(params, state, x_t, prop)?
        };
        outputs.push(output_step(params, &step.h_next)?);
        steps.push(step);
    }
    Ok(ForwardTrace {
        h_init: h_init.clone(),
        steps,
        outputs,
    })
}

/// Loss of one window under the current parameters; shared by training,
/// divergence tracking and the finite-difference oracle.
pub fn window_loss(
    params: &ModelParams,
    h_init: &Array2<f64>,
    inputs: &[Array2<f64>],
    truths: &[Array1<f64>],
    prop: &PropagationMatrix,
) -> Result<f64> {
    let trace = forward_window(params, h_init, inputs, prop)?;
    loss(&trace.outputs, truths)
}

/// Gradients of the window loss, one array per parameter plus the gradient
/// at the window's initial hidden state.
#[derive(Debug, Clone)]
pub struct GradientSet {
    pub w: Array2<f64>,
    pub u: Array2<f64>,
    pub w_z: Array2<f64>,
    pub u_z: Array2<f64>,
    pub b_z: Array2<f64>,
    pub w_r: Array2<f64>,
    pub u_r: Array2<f64>,
    pub b_r: Array2<f64>,
    pub w_o: Array2<f64>,
    pub b_o: Array1<f64>,
    pub h: Array2<f64>,
}

impl GradientSet {
    fn zeros_like(params: &ModelParams) -> Self {
        Self {
            w: Array2::zeros(params.w.dim()),
            u: Array2::zeros(params.u.dim()),
            w_z: Array2::zeros(params.w_z.dim()),
            u_z: Array2::zeros(params.u_z.dim()),
            b_z: Array2::zeros(params.b_z.dim()),
            w_r: Array2::zeros(params.w_r.dim()),
            u_r: Array2::zeros(params.u_r.dim()),
            b_r: Array2::zeros(params.b_r.dim()),
            w_o: Array2::zeros(params.w_o.dim()),
            b_o: Array1::zeros(params.b_o.len()),
            h: Array2::zeros((params.hidden_dim, params.node_count)),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.w
            .iter()
            .chain(self.u.iter())
            .chain(self.w_z.iter())
            .chain(self.u_z.iter())
            .chain(self.b_z.iter())
            .chain(self.w_r.iter())
            .chain(self.u_r.iter())
            .chain(self.b_r.iter())
            .chain(self.w_o.iter())
            .chain(self.b_o.iter())
            .chain(self.h.iter())
            .all(|v| v.is_finite())
    }

    /// Named views over every gradient array, used by the gradient checker.
    pub fn fields(&self) -> Vec<(&'static str, Vec<f64>)> {
        vec![
            ("w", self.w.iter().copied().collect()),
            ("u", self.u.iter().copied().collect()),
            ("w_z", self.w_z.iter().copied().collect()),
            ("u_z", self.u_z.iter().copied().collect()),
            ("b_z", self.b_z.iter().copied().collect()),
            ("w_r", self.w_r.iter().copied().collect()),
            ("u_r", self.u_r.iter().copied().collect()),
            ("b_r", self.b_r.iter().copied().collect()),
            ("w_o", self.w_o.iter().copied().collect()),
            ("b_o", self.b_o.iter().copied().collect()),
            ("h", self.h.iter().copied().collect()),
        ]
    }
}

/// Gradient of the loss with respect to the output-head pre-activation at
/// one window position: `(2 / (n T)) * (o - x) .* o .* (1 - o)`.
fn output_preact_grad(o: &Array1<f64>, x: &Array1<f64>, scale: f64) -> Array1<f64> {
    Array1::from_shape_fn(o.len(), |i| scale * (o[i] - x[i]) * o[i] * (1.0 - o[i]))
}

/// Outer product `w_o^T q` as a D x n matrix.
fn output_path(params: &ModelParams, q: &Array1<f64>) -> Array2<f64> {
    let d = params.hidden_dim;
    let n = q.len();
    let mut out = Array2::zeros((d, n));
    for k in 0..d {
        let wk = params.w_o[[0, k]];
        for i in 0..n {
            out[[k, i]] = wk * q[i];
        }
    }
    out
}

/// Hand-derived truncated BPTT over one forward trace. The recursion runs
/// backwards through the window:
///
/// ```text
/// q^t      = dL/do^t .* o^t .* (1 - o^t)
/// G^T-1    = w_o^T q^(T-1)
/// per transition t -> t+1 (descending t):
///   P   = G .* Z .* (1 - Htilde.^2)               (candidate pre-activation)
///   M^Z = G .* (Z - Z.^2) .* (Htilde - S)          (update pre-activation)
///   M^R = (U^T P) .* (R - R.^2) .* S               (reset pre-activation)
///   dS  = G .* (1 - Z) + W^Z^T M^Z + W^R^T M^R + (U^T P) .* R
///   G   = dS * A'^T + w_o^T q^t
/// ```
///
/// Weight gradients accumulate `P`, `M^Z`, `M^R` against the matching
/// step inputs; see `docs/gradients.md` for the derivation.
pub fn backward(
    params: &ModelParams,
    trace: &ForwardTrace,
    truths: &[Array1<f64>],
    prop: &PropagationMatrix,
) -> Result<GradientSet> {
    let t_len = trace.window_len();
    if truths.len() != t_len {
        return Err(GrnnError::Contract(format!(
            "truth panel length {} does not match window length {}",
            truths.len(),
            t_len
        )));
    }
    let (d, n) = (params.hidden_dim, params.node_count);
    if trace.h_init.dim() != (d, n) {
        return Err(GrnnError::Contract(
            "trace does not match model dimensions".into(),
        ));
    }
    for y in truths {
        if y.len() != n {
            return Err(GrnnError::Contract(
                "truth vector length does not match node count".into(),
            ));
        }
    }
    let scale = 2.0 / (n * t_len) as f64;
    let mut grads = GradientSet::zeros_like(params);

    let q_last = output_preact_grad(&trace.outputs[t_len - 1], &truths[t_len - 1], scale);
    let h_last = trace.state_at(t_len - 1);
    grads.w_o += &q_last.view().insert_axis(ndarray::Axis(0)).dot(&h_last.t());
    grads.b_o += &q_last;
    let mut g = output_path(params, &q_last);

    for t in (0..t_len - 1).rev() {
        let st = &trace.steps[t];
        let one_minus_ht2 = st.h_tilde.mapv(|v| 1.0 - v * v);
        let p = &g * &st.z * &one_minus_ht2;
        let m_z = &g * &(&st.z - &(&st.z * &st.z)) * &(&st.h_tilde - &st.s);
        let u_t_p = params.u.t().dot(&p);
        let m_r = &u_t_p * &(&st.r - &(&st.r * &st.r)) * &st.s;

        grads.w += &p.dot(&st.x.t());
        grads.u += &p.dot(&(&st.r * &st.s).t());
        grads.w_z += &m_z.dot(&st.s.t());
        grads.u_z += &m_z.dot(&st.x.t());
        grads.b_z += &m_z;
        grads.w_r += &m_r.dot(&st.s.t());
        grads.u_r += &m_r.dot(&st.x.t());
        grads.b_r += &m_r;

        let ds = &g * &st.z.mapv(|v| 1.0 - v)
            + params.w_z.t().dot(&m_z)
            + params.w_r.t().dot(&m_r)
            + &u_t_p * &st.r;

        let q_t = output_preact_grad(&trace.outputs[t], &truths[t], scale);
        let h_t = trace.state_at(t);
        grads.w_o += &q_t.view().insert_axis(ndarray::Axis(0)).dot(&h_t.t());
        grads.b_o += &q_t;
        g = prop.mul_right_transpose(&ds) + output_path(params, &q_t);
    }
    grads.h = g;
    Ok(grads)
}

/// Central-difference gradient oracle: every scalar parameter (and every
/// entry of the initial hidden state) is perturbed by +/- epsilon and the
/// window loss fully re-evaluated. Independent of [`backward`].
pub fn fd_gradient(
    params: &ModelParams,
    h_init: &Array2<f64>,
    inputs: &[Array2<f64>],
    truths: &[Array1<f64>],
    prop: &PropagationMatrix,
    epsilon: f64,
) -> Result<GradientSet> {
    if epsilon <= 0.0 {
        return Err(GrnnError::Parameter(format!(
            "epsilon must be > 0, got {epsilon}"
        )));
    }
    let mut work = params.clone();
    let mut grads = GradientSet::zeros_like(params);

    macro_rules! diff_field {
        ($field:ident) => {{
            let len = work.$field.len();
            let mut out = vec![0.0; len];
            for k in 0..len {
                let orig = work.$field.as_slice().expect("contiguous")[k];
                work.$field.as_slice_mut().expect("contiguous")[k] = orig + epsilon;
                let lp = window_loss(&work, h_init, inputs, truths, prop)?;
                work.$field.as_slice_mut().expect("contiguous")[k] = orig - epsilon;
                let lm = window_loss(&work, h_init, inputs, truths, prop)?;
                work.$field.as_slice_mut().expect("contiguous")[k] = orig;
                out[k] = (lp - lm) / (2.0 * epsilon);
            }
            out
        }};
    }

    let w = diff_field!(w);
    grads.w = Array2::from_shape_vec(params.w.dim(), w).expect("shape");
    let u = diff_field!(u);
    grads.u = Array2::from_shape_vec(params.u.dim(), u).expect("shape");
    let w_z = diff_field!(w_z);
    grads.w_z = Array2::from_shape_vec(params.w_z.dim(), w_z).expect("shape");
    let u_z = diff_field!(u_z);
    grads.u_z = Array2::from_shape_vec(params.u_z.dim(), u_z).expect("shape");
    let b_z = diff_field!(b_z);
    grads.b_z = Array2::from_shape_vec(params.b_z.dim(), b_z).expect("shape");
    let w_r = diff_field!(w_r);
    grads.w_r = Array2::from_shape_vec(params.w_r.dim(), w_r).expect("shape");
    let u_r = diff_field!(u_r);
    grads.u_r = Array2::from_shape_vec(params.u_r.dim(), u_r).expect("shape");
    let b_r = diff_field!(b_r);
    grads.b_r = Array2::from_shape_vec(params.b_r.dim(), b_r).expect("shape");
    let w_o = diff_field!(w_o);
    grads.w_o = Array2::from_shape_vec(params.w_o.dim(), w_o).expect("shape");
    let b_o = diff_field!(b_o);
    grads.b_o = Array1::from_vec(b_o);

    let mut h_work = h_init.clone();
    let len = h_work.len();
    let mut gh = vec![0.0; len];
    for k in 0..len {
        let orig = h_work.as_slice().expect("contiguous")[k];
        h_work.as_slice_mut().expect("contiguous")[k] = orig + epsilon;
        let lp = window_loss(params, &h_work, inputs, truths, prop)?;
        h_work.as_slice_mut().expect("contiguous")[k] = orig - epsilon;
        let lm = window_loss(params, &h_work, inputs, truths, prop)?;
        h_work.as_slice_mut().expect("contiguous")[k] = orig;
        gh[k] = (lp - lm) / (2.0 * epsilon);
    }
    grads.h = Array2::from_shape_vec(h_init.dim(), gh).expect("shape");
    Ok(grads)
}

/// Plain gradient descent: `theta <- theta - lr * grad` for every
/// parameter. Hidden states are not parameters and are left untouched.
pub fn sgd_update(params: &mut ModelParams, grads: &GradientSet, lr: f64) -> Result<()> {
    if lr <= 0.0 {
        return Err(GrnnError::Parameter(format!("lr must be > 0, got {lr}")));
    }
    if grads.w.dim() != params.w.dim()
        || grads.u.dim() != params.u.dim()
        || grads.b_z.dim() != params.b_z.dim()
        || grads.b_o.len() != params.b_o.len()
    {
        return Err(GrnnError::Contract(
            "gradient shapes do not match parameters".into(),
        ));
    }
    if !grads.all_finite() {
        return Err(GrnnError::Numeric(
            "non-finite gradient; update aborted".into(),
        ));
    }
    params.w.scaled_add(-lr, &grads.w);
    params.u.scaled_add(-lr, &grads.u);
    params.w_z.scaled_add(-lr, &grads.w_z);
    params.u_z.scaled_add(-lr, &grads.u_z);
    params.b_z.scaled_add(-lr, &grads.b_z);
    params.w_r.scaled_add(-lr, &grads.w_r);
    params.u_r.scaled_add(-lr, &grads.u_r);
    params.b_r.scaled_add(-lr, &grads.b_r);
    params.w_o.scaled_add(-lr, &grads.w_o);
    params.b_o.scaled_add(-lr, &grads.b_o);
    if !params.all_finite() {
        return Err(GrnnError::Numeric(
            "parameters became non-finite after update".into(),
        ));
    }
    Ok(())
}
