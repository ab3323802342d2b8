use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::ast::EnvironmentAction;
use crate::error::{Error, Result};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PolicyShape {
    pub obs_dim: usize,
    pub hidden: usize,
    pub action_dim: usize,
}

/// Offsets of each parameter block in the flat vector.
#[derive(Debug, Clone, Copy)]
struct Layout {
    wx: usize,
    wh: usize,
    bx: usize,
    bh: usize,
    w_mean: usize,
    b_mean: usize,
    w_logstd: usize,
    b_logstd: usize,
    w_value: usize,
    b_value: usize,
    len: usize,
}

impl PolicyShape {
    fn layout(&self) -> Layout {
        let (d, h, a) = (self.obs_dim, self.hidden, self.action_dim);
        let wx = 0;
        let wh = wx + 3 * h * d;
        let bx = wh + 3 * h * h;
        let bh = bx + 3 * h;
        let w_mean = bh + 3 * h;
        let b_mean = w_mean + a * h;
        let w_logstd = b_mean + a;
        let b_logstd = w_logstd + a * h;
        let w_value = b_logstd + a;
        let b_value = w_value + h;
        Layout {
            wx,
            wh,
            bx,
            bh,
            w_mean,
            b_mean,
            w_logstd,
            b_logstd,
            w_value,
            b_value,
            len: b_value + 1,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layout().len
    }

    /// `(name, shape, offset)` for every block, in flat order.
    pub fn blocks(&self) -> Vec<(&'static str, Vec<usize>, usize)> {
        let l = self.layout();
        let (d, h, a) = (self.obs_dim, self.hidden, self.action_dim);
        vec![
            ("gru.weight_input", vec![3 * h, d], l.wx),
            ("gru.weight_hidden", vec![3 * h, h], l.wh),
            ("gru.bias_input", vec![3 * h], l.bx),
            ("gru.bias_hidden", vec![3 * h], l.bh),
            ("mean.weight", vec![a, h], l.w_mean),
            ("mean.bias", vec![a], l.b_mean),
            ("log_std.weight", vec![a, h], l.w_logstd),
            ("log_std.bias", vec![a], l.b_logstd),
            ("value.weight", vec![1, h], l.w_value),
            ("value.bias", vec![1], l.b_value),
        ]
    }
}

/// Distribution parameters and value estimate for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub mean: Vec<f64>,
    /// Clamped to `[LOG_STD_MIN, LOG_STD_MAX]`.
    pub log_std: Vec<f64>,
    pub std: Vec<f64>,
    pub value: f64,
}

/// Policy and value parameters as one flat vector. GRU gate blocks are
/// stacked in (reset, update, candidate) order.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    shape: PolicyShape,
    layout_len: usize,
    data: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `out += W x` with `W` row-major `rows x cols`.
#[inline]
fn matvec_add(w: &[f64], cols: usize, x: &[f64], out: &mut [f64]) {
    for (row, o) in w.chunks_exact(cols).zip(out.iter_mut()) {
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(x) {
            acc += a * b;
        }
        *o += acc;
    }
}

/// `out += W^T g`.
#[inline]
fn matvec_t_add(w: &[f64], cols: usize, g: &[f64], out: &mut [f64]) {
    for (row, &gi) in w.chunks_exact(cols).zip(g) {
        if gi == 0.0 {
            continue;
        }
        for (o, a) in out.iter_mut().zip(row) {
            *o += gi * a;
        }
    }
}

/// `dW += g x^T`.
#[inline]
fn outer_add(dw: &mut [f64], cols: usize, g: &[f64], x: &[f64]) {
    for (row, &gi) in dw.chunks_exact_mut(cols).zip(g) {
        if gi == 0.0 {
            continue;
        }
        for (d, a) in row.iter_mut().zip(x) {
            *d += gi * a;
        }
    }
}

/// Forward activations of one episode, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct EpisodeCache {
    pub len: usize,
    obs: Vec<f64>,
    /// `len + 1` hidden states; entry 0 is the initial (zero) state.
    h: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    n: Vec<f64>,
    /// `W_hn h + b_hn` before the reset gate is applied.
    hn: Vec<f64>,
    pub mean: Vec<f64>,
    pub log_std_raw: Vec<f64>,
    pub value: Vec<f64>,
}

impl EpisodeCache {
    pub fn mean_at(&self, t: usize, a: usize) -> &[f64] {
        &self.mean[t * a..(t + 1) * a]
    }

    pub fn log_std_at(&self, t: usize, a: usize) -> Vec<f64> {
        self.log_std_raw[t * a..(t + 1) * a]
            .iter()
            .map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX))
            .collect()
    }
}

/// Loss gradient with respect to each head output, per step (flat, step-major).
/// `log_std` is the gradient with respect to the clamped log-std.
#[derive(Debug, Clone)]
pub struct HeadGrads {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
    pub value: Vec<f64>,
}

impl HeadGrads {
    pub fn zeros(len: usize, action_dim: usize) -> Self {
        Self {
            mean: vec![0.0; len * action_dim],
            log_std: vec![0.0; len * action_dim],
            value: vec![0.0; len],
        }
    }
}

impl PolicyParams {
    pub fn zeros(shape: PolicyShape) -> Self {
        let len = shape.param_count();
        Self {
            shape,
            layout_len: len,
            data: vec![0.0; len],
        }
    }

    /// Uniform `+-1/sqrt(fan_in)` initialization; the log-std bias starts at
    /// zero (unit standard deviation).
    pub fn init<R: Rng + ?Sized>(shape: PolicyShape, rng: &mut R) -> Self {
        let mut p = Self::zeros(shape);
        let l = shape.layout();
        let (d, h) = (shape.obs_dim.max(1), shape.hidden.max(1));
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize, data: &mut [f64]| {
            let k = 1.0 / (fan_in as f64).sqrt();
            let u = Uniform::new_inclusive(-k, k).expect("finite bound");
            for v in &mut data[range] {
                *v = u.sample(rng);
            }
        };
        fill(l.wx..l.wh, d, &mut p.data);
        fill(l.wh..l.bx, h, &mut p.data);
        fill(l.bx..l.bh, d, &mut p.data);
        fill(l.bh..l.w_mean, h, &mut p.data);
        fill(l.w_mean..l.b_mean, h, &mut p.data);
        fill(l.b_mean..l.w_logstd, h, &mut p.data);
        fill(l.w_logstd..l.b_logstd, h, &mut p.data);
        fill(l.w_value..l.b_value, h, &mut p.data);
        fill(l.b_value..l.len, h, &mut p.data);
        p
    }

    pub fn from_flat(shape: PolicyShape, data: Vec<f64>) -> Result<Self> {
        let len = shape.param_count();
        if data.len() != len {
            return Err(Error::Shape(format!(
                "expected {len} parameters, got {}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("parameter {i} is not finite")));
        }
        Ok(Self {
            shape,
            layout_len: len,
            data,
        })
    }

    pub fn shape(&self) -> PolicyShape {
        self.shape
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.layout_len
    }

    pub fn is_empty(&self) -> bool {
        self.layout_len == 0
    }

    /// Re-draws the log-std head (weights uniform, bias zero).
    pub fn reinit_log_std<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let l = self.shape.layout();
        let k = 1.0 / (self.shape.hidden.max(1) as f64).sqrt();
        let u = Uniform::new_inclusive(-k, k).expect("finite bound");
        for v in &mut self.data[l.w_logstd..l.b_logstd] {
            *v = u.sample(rng);
        }
        self.data[l.b_logstd..l.w_value].fill(0.0);
    }

    pub fn initial_hidden(&self) -> Vec<f64> {
        vec![0.0; self.shape.hidden]
    }

    /// One GRU step followed by the three heads.
    pub fn step(&self, h: &[f64], obs: &[f64]) -> Result<(PolicyOutput, Vec<f64>)> {
        self.check_inputs(h, obs)?;
        let hsz = self.shape.hidden;
        let a = self.shape.action_dim;
        let mut r = vec![0.0; hsz];
        let mut z = vec![0.0; hsz];
        let mut n = vec![0.0; hsz];
        let mut hn = vec![0.0; hsz];
        let mut h_new = vec![0.0; hsz];
        self.gru_forward(obs, h, &mut r, &mut z, &mut n, &mut hn, &mut h_new);
        let mut mean = vec![0.0; a];
        let mut ls = vec![0.0; a];
        let value = self.heads_forward(&h_new, &mut mean, &mut ls);
        let log_std: Vec<f64> = ls
            .iter()
            .map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX))
            .collect();
        let std = log_std.iter().map(|v| v.exp()).collect();
        Ok((
            PolicyOutput {
                mean,
                log_std,
                std,
                value,
            },
            h_new,
        ))
    }

    fn check_inputs(&self, h: &[f64], obs: &[f64]) -> Result<()> {
        if obs.len() != self.shape.obs_dim || h.len() != self.shape.hidden {
            return Err(Error::Shape(format!(
                "policy expects obs {} / hidden {}, got {} / {}",
                self.shape.obs_dim,
                self.shape.hidden,
                obs.len(),
                h.len()
            )));
        }
        if obs.iter().chain(h).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite policy input".into()));
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn gru_forward(
        &self,
        x: &[f64],
        h: &[f64],
        r: &mut [f64],
        z: &mut [f64],
        n: &mut [f64],
        hn: &mut [f64],
        h_new: &mut [f64],
    ) {
        let l = self.shape.layout();
        let (d, hs) = (self.shape.obs_dim, self.shape.hidden);
        let p = &self.data;
        let mut gx = vec![0.0; 3 * hs];
        gx.copy_from_slice(&p[l.bx..l.bh]);
        matvec_add(&p[l.wx..l.wh], d, x, &mut gx);
        let mut gh = vec![0.0; 3 * hs];
        gh.copy_from_slice(&p[l.bh..l.w_mean]);
        matvec_add(&p[l.wh..l.bx], hs, h, &mut gh);
        for i in 0..hs {
            r[i] = sigmoid(gx[i] + gh[i]);
            z[i] = sigmoid(gx[hs + i] + gh[hs + i]);
            hn[i] = gh[2 * hs + i];
            n[i] = (gx[2 * hs + i] + r[i] * hn[i]).tanh();
            h_new[i] = (1.0 - z[i]) * n[i] + z[i] * h[i];
        }
    }

    fn heads_forward(&self, h: &[f64], mean: &mut [f64], log_std_raw: &mut [f64]) -> f64 {
        let l = self.shape.layout();
        let hs = self.shape.hidden;
        let p = &self.data;
        mean.copy_from_slice(&p[l.b_mean..l.w_logstd]);
        matvec_add(&p[l.w_mean..l.b_mean], hs, h, mean);
        log_std_raw.copy_from_slice(&p[l.b_logstd..l.w_value]);
        matvec_add(&p[l.w_logstd..l.b_logstd], hs, h, log_std_raw);
        let mut v = p[l.b_value];
        for (w, x) in p[l.w_value..l.b_value].iter().zip(h) {
            v += w * x;
        }
        v
    }

    /// Runs an episode from the zero hidden state. `obs` is step-major.
    pub fn forward_episode(&self, obs: &[f64]) -> Result<EpisodeCache> {
        let (d, hs, a) = (self.shape.obs_dim, self.shape.hidden, self.shape.action_dim);
        if d == 0 || !obs.len().is_multiple_of(d) {
            return Err(Error::Shape(format!(
                "observation buffer of {} is not a multiple of {d}",
                obs.len()
            )));
        }
        if obs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite observation".into()));
        }
        let len = obs.len() / d;
        let mut c = EpisodeCache {
            len,
            obs: obs.to_vec(),
            h: vec![0.0; (len + 1) * hs],
            r: vec![0.0; len * hs],
            z: vec![0.0; len * hs],
            n: vec![0.0; len * hs],
            hn: vec![0.0; len * hs],
            mean: vec![0.0; len * a],
            log_std_raw: vec![0.0; len * a],
            value: vec![0.0; len],
        };
        for t in 0..len {
            let (h_prev, h_rest) = c.h.split_at_mut((t + 1) * hs);
            let h_prev = &h_prev[t * hs..];
            let h_new = &mut h_rest[..hs];
            let span = t * hs..(t + 1) * hs;
            self.gru_forward(
                &obs[t * d..(t + 1) * d],
                h_prev,
                &mut c.r[span.clone()],
                &mut c.z[span.clone()],
                &mut c.n[span.clone()],
                &mut c.hn[span],
                h_new,
            );
            let h_new = &c.h[(t + 1) * hs..(t + 2) * hs];
            c.value[t] = self.heads_forward(
                h_new,
                &mut c.mean[t * a..(t + 1) * a],
                &mut c.log_std_raw[t * a..(t + 1) * a],
            );
        }
        Ok(c)
    }

    /// Backpropagation through time: accumulates into `grad` the gradient of
    /// a loss whose derivatives with respect to the head outputs are `g`.
    pub fn backward_episode(&self, c: &EpisodeCache, g: &HeadGrads, grad: &mut [f64]) {
        let l = self.shape.layout();
        let (d, hs, a) = (self.shape.obs_dim, self.shape.hidden, self.shape.action_dim);
        assert_eq!(grad.len(), l.len, "gradient buffer length");
        let p = &self.data;
        let mut dh = vec![0.0; hs];
        let mut dh_prev = vec![0.0; hs];
        let mut da_r = vec![0.0; hs];
        let mut da_z = vec![0.0; hs];
        let mut da_n = vec![0.0; hs];
        let mut dhn = vec![0.0; hs];
        let mut dls = vec![0.0; a];
        for t in (0..c.len).rev() {
            let h_new = &c.h[(t + 1) * hs..(t + 2) * hs];
            let h_old = &c.h[t * hs..(t + 1) * hs];
            let x = &c.obs[t * d..(t + 1) * d];

            // Heads.
            let dmean = &g.mean[t * a..(t + 1) * a];
            for i in 0..a {
                let raw = c.log_std_raw[t * a + i];
                dls[i] = if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw) {
                    g.log_std[t * a + i]
                } else {
                    0.0
                };
            }
            let dv = g.value[t];
            outer_add(&mut grad[l.w_mean..l.b_mean], hs, dmean, h_new);
            for i in 0..a {
                grad[l.b_mean + i] += dmean[i];
                grad[l.b_logstd + i] += dls[i];
            }
            outer_add(&mut grad[l.w_logstd..l.b_logstd], hs, &dls, h_new);
            for (gw, hv) in grad[l.w_value..l.b_value].iter_mut().zip(h_new) {
                *gw += dv * hv;
            }
            grad[l.b_value] += dv;
            matvec_t_add(&p[l.w_mean..l.b_mean], hs, dmean, &mut dh);
            matvec_t_add(&p[l.w_logstd..l.b_logstd], hs, &dls, &mut dh);
            for (o, w) in dh.iter_mut().zip(&p[l.w_value..l.b_value]) {
                *o += dv * w;
            }

            // GRU cell.
            let span = t * hs..(t + 1) * hs;
            let (r, z, n, hn) = (
                &c.r[span.clone()],
                &c.z[span.clone()],
                &c.n[span.clone()],
                &c.hn[span],
            );
            for i in 0..hs {
                let dn = dh[i] * (1.0 - z[i]);
                let dz = dh[i] * (h_old[i] - n[i]);
                dh_prev[i] = dh[i] * z[i];
                da_n[i] = dn * (1.0 - n[i] * n[i]);
                let dr = da_n[i] * hn[i];
                dhn[i] = da_n[i] * r[i];
                da_r[i] = dr * r[i] * (1.0 - r[i]);
                da_z[i] = dz * z[i] * (1.0 - z[i]);
            }
            let wx = &mut grad[l.wx..l.wh];
            outer_add(&mut wx[..hs * d], d, &da_r, x);
            outer_add(&mut wx[hs * d..2 * hs * d], d, &da_z, x);
            outer_add(&mut wx[2 * hs * d..], d, &da_n, x);
            let wh = &mut grad[l.wh..l.bx];
            outer_add(&mut wh[..hs * hs], hs, &da_r, h_old);
            outer_add(&mut wh[hs * hs..2 * hs * hs], hs, &da_z, h_old);
            outer_add(&mut wh[2 * hs * hs..], hs, &dhn, h_old);
            for i in 0..hs {
                grad[l.bx + i] += da_r[i];
                grad[l.bx + hs + i] += da_z[i];
                grad[l.bx + 2 * hs + i] += da_n[i];
                grad[l.bh + i] += da_r[i];
                grad[l.bh + hs + i] += da_z[i];
                grad[l.bh + 2 * hs + i] += dhn[i];
            }
            let whp = &p[l.wh..l.bx];
            matvec_t_add(&whp[..hs * hs], hs, &da_r, &mut dh_prev);
            matvec_t_add(&whp[hs * hs..2 * hs * hs], hs, &da_z, &mut dh_prev);
            matvec_t_add(&whp[2 * hs * hs..], hs, &dhn, &mut dh_prev);
            std::mem::swap(&mut dh, &mut dh_prev);
        }
    }
}

/// Diagonal-Gaussian log-density of `action`.
pub fn log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((&m, &ls), &a)| {
            let z = (a - m) / ls.exp();
            -ls - HALF_LN_2PI - 0.5 * z * z
        })
        .sum()
}

/// Draws `mean + std * eps` with standard-normal `eps`.
pub fn sample_action<R: Rng + ?Sized>(out: &PolicyOutput, rng: &mut R) -> (EnvironmentAction, f64) {
    let values: Vec<f64> = out
        .mean
        .iter()
        .zip(&out.std)
        .map(|(&m, &s)| {
            let eps: f64 = StandardNormal.sample(rng);
            m + s * eps
        })
        .collect();
    let lp = log_prob(&out.mean, &out.log_std, &values);
    (EnvironmentAction::new(values), lp)
}
