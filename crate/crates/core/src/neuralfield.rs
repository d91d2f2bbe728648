//! Coordinate network mapping normalized `(x, y)` to `(eps_r, sigma)`.
//!
//! `γ(r) = [sin(2π rB), cos(2π rB)]` feeds three weight-normalized SiLU
//! layers and a plain linear head; the head output goes through a sigmoid
//! and is scaled to `eps_r ∈ (1, 80)`, `sigma ∈ (0, 1)`.
//!
//! The backward pass is written by hand. Training coordinates are fixed, so
//! callers usually embed them once with [`FourierEmbedding::features`] and
//! then call [`forward_features`] every epoch.

use std::f64::consts::PI;
use std::path::Path;

use ndarray::{Array1, Array2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Layer widths `[2m, 256, 256, 128, 2]`.
pub const DEFAULT_DIMS: [usize; 5] = [128, 256, 256, 128, 2];
pub const DEFAULT_FEATURE_STD: f64 = 1.0;
/// `[C_eps, C_sigma]`.
pub const OUTPUT_SCALE: [f64; 2] = [79.0, 1.0];
/// `[b_eps, b_sigma]`.
pub const OUTPUT_OFFSET: [f64; 2] = [1.0, 0.0];
pub const FINAL_BIAS_INIT: f64 = -3.0;
pub const FINAL_WEIGHT_STD: f64 = 1e-3;
pub const CHECKPOINT_SCHEMA: u32 = 1;

/// Fixed Gaussian projection `B` of shape `2 × m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierEmbedding {
    pub b: Array2<f64>,
}

impl FourierEmbedding {
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Feature rows for a batch of coordinates, `n × 2m`, sines first.
    pub fn features(&self, coords: &[[f64; 2]]) -> Array2<f64> {
        let m = self.m();
        let mut out = Array2::zeros((coords.len(), 2 * m));
        for (row, c) in out.rows_mut().into_iter().zip(coords) {
            write_features(c, &self.b, row.into_slice().expect("standard layout"));
        }
        out
    }
}

fn write_features(c: &[f64; 2], b: &Array2<f64>, out: &mut [f64]) {
    let m = b.ncols();
    for k in 0..m {
        let phase = 2.0 * PI * (c[0] * b[[0, k]] + c[1] * b[[1, k]]);
        let (s, co) = phase.sin_cos();
        out[k] = s;
        out[m + k] = co;
    }
}

/// `γ(r)` for one coordinate (already divided by the ROI half-width).
/// Coordinates outside `[-1, 1]²` are accepted; the map is periodic, not
/// clipped.
pub fn fourier_features(coord: [f64; 2], embedding: &FourierEmbedding) -> Vec<f64> {
    let mut out = vec![0.0; 2 * embedding.m()];
    write_features(&coord, &embedding.b, &mut out);
    out
}

/// Weight-normalized dense layer, effective weight `g_i v_i / ‖v_i‖` per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WnLayer {
    /// `out × in`.
    pub v: Array2<f64>,
    pub g: Array1<f64>,
    pub bias: Array1<f64>,
}

impl WnLayer {
    pub fn row_norms(&self) -> Array1<f64> {
        self.v.map_axis(Axis(1), |r| r.dot(&r).sqrt())
    }

    pub fn effective_weight(&self) -> Array2<f64> {
        let norms = self.row_norms();
        let mut w = self.v.clone();
        for ((mut row, g), n) in w.rows_mut().into_iter().zip(&self.g).zip(&norms) {
            row *= g / n;
        }
        w
    }
}

/// Trainable parameters plus the fixed output scaling.
///
/// The same type carries gradients (scale and offset are then ignored).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub hidden: Vec<WnLayer>,
    /// `2 × in`.
    pub w_out: Array2<f64>,
    pub b_out: Array1<f64>,
    pub scale: [f64; 2],
    pub offset: [f64; 2],
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        for (k, layer) in self.hidden.iter().enumerate() {
            if layer.row_norms().iter().any(|&n| !(n > 0.0) || !n.is_finite()) {
                return Err(Error::invalid(format!("layer {k} has a direction row with zero or non-finite norm")));
            }
            if layer.g.len() != layer.v.nrows() || layer.bias.len() != layer.v.nrows() {
                return Err(Error::invalid(format!("layer {k} gain/bias length mismatch")));
            }
        }
        let mut width = self.hidden.first().map_or(self.w_out.ncols(), |l| l.v.ncols());
        for layer in &self.hidden {
            if layer.v.ncols() != width {
                return Err(Error::invalid("consecutive layer widths do not chain"));
            }
            width = layer.v.nrows();
        }
        if self.w_out.dim() != (2, width) || self.b_out.len() != 2 {
            return Err(Error::invalid("output layer must map to two values"));
        }
        Ok(())
    }

    /// Layer widths including input and output.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims: Vec<usize> = self.hidden.iter().map(|l| l.v.ncols()).collect();
        dims.push(self.w_out.ncols());
        dims.push(2);
        dims
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            hidden: self
                .hidden
                .iter()
                .map(|l| WnLayer {
                    v: Array2::zeros(l.v.raw_dim()),
                    g: Array1::zeros(l.g.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect(),
            w_out: Array2::zeros(self.w_out.raw_dim()),
            b_out: Array1::zeros(2),
            scale: self.scale,
            offset: self.offset,
        }
    }

    /// Number of trainable scalars.
    pub fn n_params(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    /// Trainable arrays in a fixed order (v, g, bias per layer, then head).
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(3 * self.hidden.len() + 2);
        for l in &self.hidden {
            out.push(l.v.as_slice().expect("standard layout"));
            out.push(l.g.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
        }
        out.push(self.w_out.as_slice().expect("standard layout"));
        out.push(self.b_out.as_slice().expect("standard layout"));
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(3 * self.hidden.len() + 2);
        for l in &mut self.hidden {
            out.push(l.v.as_slice_mut().expect("standard layout"));
            out.push(l.g.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out.push(self.w_out.as_slice_mut().expect("standard layout"));
        out.push(self.b_out.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.slices().concat()
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.n_params() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                values.len()
            )));
        }
        let mut offset = 0;
        for s in self.slices_mut() {
            s.copy_from_slice(&values[offset..offset + s.len()]);
            offset += s.len();
        }
        Ok(())
    }

    /// Mutable access to one flat index; used by finite-difference checks.
    pub fn flat_mut(&mut self, index: usize) -> Option<&mut f64> {
        let mut rest = index;
        for s in self.slices_mut() {
            if rest < s.len() {
                return Some(&mut s[rest]);
            }
            rest -= s.len();
        }
        None
    }

    pub fn all_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Draws `B` and all layer parameters from one seeded stream.
///
/// Hidden directions are uniform in `±1/√fan_in` with `g = ‖v‖` rowwise and
/// zero bias; the head has `N(0, 1e-3²)` weights and bias `-3`.
pub fn init_params(seed: u64, dims: &[usize], feature_std: f64) -> Result<(FourierEmbedding, NetworkParams)> {
    if dims.len() < 2 || dims[0] == 0 || dims[0] % 2 != 0 || *dims.last().unwrap() != 2 {
        return Err(Error::invalid(format!(
            "dims must start with an even embedding width and end with 2, got {dims:?}"
        )));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::invalid("layer widths must be positive"));
    }
    if !(feature_std > 0.0) || !feature_std.is_finite() {
        return Err(Error::invalid(format!("feature std must be positive, got {feature_std}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, feature_std).expect("validated std");
    let m = dims[0] / 2;
    let b = Array2::from_shape_simple_fn((2, m), || normal.sample(&mut rng));

    let n_hidden = dims.len() - 2;
    let mut hidden = Vec::with_capacity(n_hidden);
    for k in 0..n_hidden {
        let (fan_in, fan_out) = (dims[k], dims[k + 1]);
        let bound = 1.0 / (fan_in as f64).sqrt();
        let v = Array2::from_shape_simple_fn((fan_out, fan_in), || rng.gen_range(-bound..bound));
        let layer = WnLayer {
            g: Array1::zeros(fan_out),
            bias: Array1::zeros(fan_out),
            v,
        };
        let g = layer.row_norms();
        hidden.push(WnLayer { g, ..layer });
    }
    let head = Normal::new(0.0, FINAL_WEIGHT_STD).expect("positive std");
    let w_out = Array2::from_shape_simple_fn((2, dims[dims.len() - 2]), || head.sample(&mut rng));
    let params = NetworkParams {
        hidden,
        w_out,
        b_out: Array1::from_elem(2, FINAL_BIAS_INIT),
        scale: OUTPUT_SCALE,
        offset: OUTPUT_OFFSET,
    };
    Ok((FourierEmbedding { b }, params))
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

fn silu_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTape {
    /// Input of each hidden layer and of the head.
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    weights: Vec<Array2<f64>>,
    /// Sigmoid of the head output, `n × 2`.
    squashed: Array2<f64>,
    pub eps_r: Array1<f64>,
    pub sigma: Array1<f64>,
}

/// Forward pass from precomputed features (`n × 2m`).
pub fn forward_features(features: &Array2<f64>, params: &NetworkParams) -> ForwardTape {
    let mut inputs = Vec::with_capacity(params.hidden.len() + 1);
    let mut pre = Vec::with_capacity(params.hidden.len());
    let mut weights = Vec::with_capacity(params.hidden.len());
    let mut h = features.clone();
    for layer in &params.hidden {
        let w = layer.effective_weight();
        let mut z = h.dot(&w.t());
        z += &layer.bias;
        let next = z.mapv(silu);
        inputs.push(h);
        pre.push(z);
        weights.push(w);
        h = next;
    }
    let mut raw = h.dot(&params.w_out.t());
    raw += &params.b_out;
    inputs.push(h);
    let squashed = raw.mapv(sigmoid);
    let eps_r = squashed.column(0).mapv(|s| params.offset[0] + params.scale[0] * s);
    let sigma = squashed.column(1).mapv(|s| params.offset[1] + params.scale[1] * s);
    ForwardTape {
        inputs,
        pre,
        weights,
        squashed,
        eps_r,
        sigma,
    }
}

/// `(eps_r, sigma)` at each coordinate.
pub fn forward(coords: &[[f64; 2]], embedding: &FourierEmbedding, params: &NetworkParams) -> (Array1<f64>, Array1<f64>) {
    let tape = forward_features(&embedding.features(coords), params);
    (tape.eps_r, tape.sigma)
}

/// Parameter gradient given `dL/d eps_r` and `dL/d sigma` per coordinate.
pub fn backward(tape: &ForwardTape, params: &NetworkParams, d_eps: &Array1<f64>, d_sigma: &Array1<f64>) -> NetworkParams {
    let n = tape.squashed.nrows();
    let mut d_raw = Array2::zeros((n, 2));
    for i in 0..n {
        let s0 = tape.squashed[[i, 0]];
        let s1 = tape.squashed[[i, 1]];
        d_raw[[i, 0]] = d_eps[i] * params.scale[0] * s0 * (1.0 - s0);
        d_raw[[i, 1]] = d_sigma[i] * params.scale[1] * s1 * (1.0 - s1);
    }
    let mut grads = params.zeros_like();
    let head_in = tape.inputs.last().expect("head input recorded");
    grads.w_out = d_raw.t().dot(head_in);
    grads.b_out = d_raw.sum_axis(Axis(0));
    let mut d_h = d_raw.dot(&params.w_out);

    for k in (0..params.hidden.len()).rev() {
        let mut d_pre = d_h;
        Zip::from(&mut d_pre).and(&tape.pre[k]).for_each(|d, &z| *d *= silu_grad(z));
        let d_w = d_pre.t().dot(&tape.inputs[k]);
        grads.hidden[k].bias = d_pre.sum_axis(Axis(0));
        if k > 0 {
            d_h = d_pre.dot(&tape.weights[k]);
        } else {
            d_h = Array2::zeros((0, 0));
        }
        // Chain W = g v / ‖v‖ into (g, v).
        let layer = &params.hidden[k];
        let norms = layer.row_norms();
        let gk = &mut grads.hidden[k];
        for i in 0..layer.v.nrows() {
            let v_row = layer.v.row(i);
            let dw_row = d_w.row(i);
            let nrm = norms[i];
            let dg = dw_row.dot(&v_row) / nrm;
            gk.g[i] = dg;
            let a = layer.g[i] / nrm;
            let c = layer.g[i] * dg / (nrm * nrm);
            Zip::from(gk.v.row_mut(i)).and(&dw_row).and(&v_row).for_each(|o, &dw, &v| *o = a * dw - c * v);
        }
    }
    grads
}

/// Everything needed to re-evaluate a trained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub seed: u64,
    pub feature_std: f64,
    /// Half-width used to normalize training coordinates.
    pub reference_half_width: f64,
    pub embedding: FourierEmbedding,
    pub params: NetworkParams,
}

impl Checkpoint {
    pub fn new(seed: u64, feature_std: f64, reference_half_width: f64, embedding: FourierEmbedding, params: NetworkParams) -> Self {
        Self {
            schema_version: CHECKPOINT_SCHEMA,
            seed,
            feature_std,
            reference_half_width,
            embedding,
            params,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let found = value.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != CHECKPOINT_SCHEMA {
            return Err(Error::Schema {
                expected: CHECKPOINT_SCHEMA,
                found,
            });
        }
        let ck: Checkpoint = serde_json::from_value(value)?;
        ck.params.validate()?;
        if ck.params.dims()[0] != 2 * ck.embedding.m() {
            return Err(Error::invalid("embedding width does not match the first layer"));
        }
        Ok(ck)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (FourierEmbedding, NetworkParams) {
        init_params(7, &[16, 12, 10, 2], 1.0).unwrap()
    }

    fn random_coords(n: usize, seed: u64) -> Vec<[f64; 2]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect()
    }

    #[test]
    fn features_at_origin() {
        let (emb, _) = small();
        let f = fourier_features([0.0, 0.0], &emb);
        assert!(f[..8].iter().all(|&s| s == 0.0));
        assert!(f[8..].iter().all(|&c| c == 1.0));
    }

    #[test]
    fn matched_pairs_lie_on_unit_circle() {
        let (emb, _) = small();
        for c in random_coords(20, 1) {
            let f = fourier_features(c, &emb);
            for k in 0..8 {
                assert!((f[k].powi(2) + f[8 + k].powi(2) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_row_feature_period_is_inverse_norm() {
        let b = ndarray::arr2(&[[0.8], [-0.6]]);
        let emb = FourierEmbedding { b };
        let dir = [0.8, -0.6];
        let period = 1.0;
        let base = [0.13, -0.41];
        let f0 = fourier_features(base, &emb);
        // Scan: smallest positive shift along b/‖b‖ that reproduces the features.
        let mut first = None;
        for step in 1..4000 {
            let t = step as f64 * 1e-3;
            let f = fourier_features([base[0] + t * dir[0], base[1] + t * dir[1]], &emb);
            if (f[0] - f0[0]).abs() < 1e-9 && (f[1] - f0[1]).abs() < 1e-9 {
                first = Some(t);
                break;
            }
        }
        assert!((first.unwrap() - period).abs() < 1e-9);
    }

    #[test]
    fn init_is_deterministic_and_weight_norm_neutral() {
        let a = init_params(3, &DEFAULT_DIMS, 1.0).unwrap();
        let b = init_params(3, &DEFAULT_DIMS, 1.0).unwrap();
        assert_eq!(a, b);
        for layer in &a.1.hidden {
            let w = layer.effective_weight();
            for (x, y) in w.iter().zip(&layer.v) {
                assert!((x - y).abs() <= 1e-15 * y.abs().max(1e-300));
            }
        }
        assert_eq!(a.1.dims(), DEFAULT_DIMS.to_vec());
        assert!(init_params(3, &[15, 4, 2], 1.0).is_err());
    }

    #[test]
    fn fresh_network_sits_near_sigmoid_of_minus_three() {
        let (emb, params) = init_params(11, &DEFAULT_DIMS, 1.0).unwrap();
        let (eps, sigma) = forward(&random_coords(100, 2), &emb, &params);
        let s = sigmoid(-3.0);
        assert!((s - 0.0474).abs() < 1e-4);
        for (e, g) in eps.iter().zip(&sigma) {
            assert!((e - (1.0 + 79.0 * s)).abs() < 0.05, "eps {e}");
            assert!((g - s).abs() < 1e-3);
        }
    }

    #[test]
    fn outputs_stay_in_range() {
        let (emb, mut params) = small();
        params.w_out.mapv_inplace(|w| w * 1e4);
        let (eps, sigma) = forward(&random_coords(200, 4), &emb, &params);
        assert!(eps.iter().all(|e| (1.0..=80.0).contains(e)));
        assert!(sigma.iter().all(|&s| (0.0..=1.0).contains(&s)));
        let (eps, sigma) = forward(&random_coords(200, 4), &emb, &small().1);
        assert!(eps.iter().all(|&e| e > 1.0 && e < 80.0));
        assert!(sigma.iter().all(|&s| s > 0.0 && s < 1.0));
    }

    #[test]
    fn silu_limits() {
        assert_eq!(silu(0.0), 0.0);
        assert!((silu(40.0) - 40.0).abs() < 1e-12);
        assert!(silu(-40.0).abs() < 1e-12);
    }

    #[test]
    fn direction_scaling_leaves_output_unchanged() {
        let (emb, params) = small();
        let coords = random_coords(30, 5);
        let (e0, s0) = forward(&coords, &emb, &params);
        let mut scaled = params.clone();
        scaled.hidden[1].v.row_mut(3).mapv_inplace(|v| v * 7.5);
        scaled.hidden[0].v.row_mut(0).mapv_inplace(|v| v * 0.01);
        let (e1, s1) = forward(&coords, &emb, &scaled);
        for i in 0..coords.len() {
            assert!((e0[i] - e1[i]).abs() < 1e-6);
            assert!((s0[i] - s1[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn pointwise_evaluation_is_lattice_independent() {
        let (emb, params) = small();
        let coarse: Vec<[f64; 2]> = (0..4).flat_map(|i| (0..4).map(move |j| [i as f64 * 0.5 - 0.75, j as f64 * 0.5 - 0.75])).collect();
        let mut fine = coarse.clone();
        fine.extend(random_coords(50, 9));
        let (a, _) = forward(&coarse, &emb, &params);
        let (b, _) = forward(&fine, &emb, &params);
        for i in 0..coarse.len() {
            assert_eq!(a[i], b[i]);
        }
    }

    #[test]
    fn output_is_locally_continuous() {
        let (emb, params) = init_params(2, &DEFAULT_DIMS, 1.0).unwrap();
        for c in random_coords(20, 6) {
            let (a, _) = forward(&[c], &emb, &params);
            let (b, _) = forward(&[[c[0] + 1e-5, c[1] - 1e-5]], &emb, &params);
            assert!((a[0] - b[0]).abs() < 1e-3);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let (emb, mut params) = small();
        // Move away from the flat init so every path carries signal.
        params.w_out.mapv_inplace(|w| w * 300.0);
        params.b_out.fill(0.2);
        let coords = random_coords(9, 8);
        let feats = emb.features(&coords);
        let weights_e = Array1::from_shape_fn(coords.len(), |i| 0.3 + 0.1 * i as f64);
        let weights_s = Array1::from_shape_fn(coords.len(), |i| 1.0 - 0.07 * i as f64);
        let loss = |p: &NetworkParams| {
            let t = forward_features(&feats, p);
            t.eps_r.dot(&weights_e) + t.sigma.dot(&weights_s)
        };
        let tape = forward_features(&feats, &params);
        let grad = backward(&tape, &params, &weights_e, &weights_s).to_flat();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..40 {
            let idx = rng.gen_range(0..params.n_params());
            let h = 1e-6;
            let mut p = params.clone();
            *p.flat_mut(idx).unwrap() += h;
            let up = loss(&p);
            *p.flat_mut(idx).unwrap() -= 2.0 * h;
            let down = loss(&p);
            let fd = (up - down) / (2.0 * h);
            let err = (fd - grad[idx]).abs();
            assert!(err <= 1e-6 * fd.abs().max(1e-2), "index {idx}: fd {fd} vs {}", grad[idx]);
        }
    }

    #[test]
    fn flat_round_trip() {
        let (_, params) = small();
        let flat = params.to_flat();
        let mut other = params.zeros_like();
        other.set_flat(&flat).unwrap();
        assert_eq!(other.to_flat(), flat);
        assert!(other.set_flat(&flat[1..]).is_err());
    }

    #[test]
    fn checkpoint_round_trip_and_schema_check() {
        let dir = tempfile::tempdir().unwrap();
        let (emb, params) = small();
        let ck = Checkpoint::new(7, 1.0, 0.5, emb, params);
        let path = dir.path().join("model.json");
        ck.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), ck);

        let mut value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        value["schema_version"] = serde_json::json!(99);
        std::fs::write(&path, value.to_string()).unwrap();
        assert!(matches!(Checkpoint::load(&path), Err(Error::Schema { found: 99, .. })));
    }
}
