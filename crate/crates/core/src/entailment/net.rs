use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{avg_pool, convolve, pooled_len};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetShape {
    /// Embedding dimension; the input has length `2 * d`.
    pub d: usize,
    pub filters: usize,
    pub filter_len: usize,
    pub pool: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub aux_width: usize,
}

impl Default for NetShape {
    fn default() -> Self {
        NetShape {
            d: 200,
            filters: 10,
            filter_len: 2,
            pool: 100,
            hidden1: 200,
            hidden2: 200,
            aux_width: 0,
        }
    }
}

impl NetShape {
    pub fn input_len(&self) -> usize {
        2 * self.d
    }

    pub fn map_len(&self) -> usize {
        self.input_len() + 1 - self.filter_len
    }

    pub fn pooled_per_map(&self) -> usize {
        pooled_len(self.map_len(), self.pool)
    }

    pub fn pooled_width(&self) -> usize {
        self.filters * self.pooled_per_map()
    }

    pub fn hidden_input(&self) -> usize {
        self.pooled_width() + self.aux_width
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.filters == 0 || self.hidden1 == 0 || self.hidden2 == 0 {
            return Err(Error::InvalidParam(format!("degenerate network shape {self:?}")));
        }
        if self.filter_len == 0 || self.filter_len > self.input_len() {
            return Err(Error::InvalidParam(format!(
                "filter length {} does not fit input length {}",
                self.filter_len,
                self.input_len()
            )));
        }
        if self.pool == 0 {
            return Err(Error::InvalidParam("pooling window must be at least 1".into()));
        }
        Ok(())
    }
}

/// Weights are stored row-major: `w1` is `hidden1 x hidden_input`,
/// `w2` is `hidden2 x hidden1`, `conv` is `filters x filter_len`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntailmentNet {
    pub shape: NetShape,
    pub conv: Vec<f64>,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: f64,
    pub seed: u64,
}

/// Same layout as the network parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub conv: Vec<f64>,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: f64,
}

impl Gradients {
    fn zeros(net: &EntailmentNet) -> Self {
        Gradients {
            conv: vec![0.0; net.conv.len()],
            w1: vec![0.0; net.w1.len()],
            b1: vec![0.0; net.b1.len()],
            w2: vec![0.0; net.w2.len()],
            b2: vec![0.0; net.b2.len()],
            w3: vec![0.0; net.w3.len()],
            b3: 0.0,
        }
    }

    fn add_scaled(&mut self, other: &Gradients, s: f64) {
        let pairs = [
            (&mut self.conv, &other.conv),
            (&mut self.w1, &other.w1),
            (&mut self.b1, &other.b1),
            (&mut self.w2, &other.w2),
            (&mut self.b2, &other.b2),
            (&mut self.w3, &other.w3),
        ];
        for (a, b) in pairs {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += s * y);
        }
        self.b3 += s * other.b3;
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n_in = x.len();
    b.iter()
        .enumerate()
        .map(|(r, &bias)| bias + w[r * n_in..(r + 1) * n_in].iter().zip(x).map(|(a, c)| a * c).sum::<f64>())
        .collect()
}

struct Activations {
    z0: Vec<f64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    logit: f64,
}

impl EntailmentNet {
    /// Every weight and bias drawn uniformly from `[-range, range]`.
    pub fn init(shape: NetShape, seed: u64, range: f64) -> Result<Self> {
        shape.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-range..=range)).collect() };
        let conv = draw(shape.filters * shape.filter_len);
        let w1 = draw(shape.hidden1 * shape.hidden_input());
        let b1 = draw(shape.hidden1);
        let w2 = draw(shape.hidden2 * shape.hidden1);
        let b2 = draw(shape.hidden2);
        let w3 = draw(shape.hidden2);
        let b3 = draw(1)[0];
        Ok(EntailmentNet {
            shape,
            conv,
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
            seed,
        })
    }

    pub fn zeros(shape: NetShape) -> Result<Self> {
        let mut net = Self::init(shape, 0, 0.0)?;
        net.b3 = 0.0;
        Ok(net)
    }

    fn check_inputs(&self, input: &[f64], aux: &[f64]) -> Result<()> {
        if input.len() != self.shape.input_len() {
            return Err(Error::Shape(format!(
                "input length {} but the network expects {}",
                input.len(),
                self.shape.input_len()
            )));
        }
        if aux.len() != self.shape.aux_width {
            return Err(Error::Shape(format!(
                "auxiliary width {} but the network expects {}",
                aux.len(),
                self.shape.aux_width
            )));
        }
        Ok(())
    }

    /// Pooled feature maps, filter-major.
    pub fn pooled(&self, input: &[f64]) -> Result<Vec<f64>> {
        let h = self.shape.filter_len;
        let mut out = Vec::with_capacity(self.shape.pooled_width());
        for f in self.conv.chunks_exact(h) {
            out.extend(avg_pool(&convolve(input, f)?, self.shape.pool)?);
        }
        Ok(out)
    }

    fn activations(&self, input: &[f64], aux: &[f64]) -> Result<Activations> {
        self.check_inputs(input, aux)?;
        let mut z0 = self.pooled(input)?;
        z0.extend_from_slice(aux);
        let a1: Vec<f64> = affine(&self.w1, &self.b1, &z0).into_iter().map(sigmoid).collect();
        let a2: Vec<f64> = affine(&self.w2, &self.b2, &a1).into_iter().map(sigmoid).collect();
        let logit = self.b3 + self.w3.iter().zip(&a2).map(|(w, a)| w * a).sum::<f64>();
        Ok(Activations { z0, a1, a2, logit })
    }

    /// Probability of YES.
    pub fn forward(&self, input: &[f64], aux: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.activations(input, aux)?.logit))
    }

    pub fn predict(&self, input: &[f64], aux: &[f64]) -> Result<bool> {
        Ok(self.forward(input, aux)? >= 0.5)
    }

    /// Binary cross-entropy of one example.
    pub fn loss(&self, input: &[f64], aux: &[f64], label: bool) -> Result<f64> {
        let z = self.activations(input, aux)?.logit;
        Ok(if label { softplus(-z) } else { softplus(z) })
    }

    /// Loss and its gradient with respect to every parameter.
    pub fn backward(&self, input: &[f64], aux: &[f64], label: bool) -> Result<(f64, Gradients)> {
        let act = self.activations(input, aux)?;
        let s = &self.shape;
        let target = if label { 1.0 } else { 0.0 };
        let loss = if label { softplus(-act.logit) } else { softplus(act.logit) };
        let mut g = Gradients::zeros(self);

        let d3 = sigmoid(act.logit) - target;
        g.b3 = d3;
        for (gw, a) in g.w3.iter_mut().zip(&act.a2) {
            *gw = d3 * a;
        }

        let d2: Vec<f64> = act
            .a2
            .iter()
            .zip(&self.w3)
            .map(|(a, w)| d3 * w * a * (1.0 - a))
            .collect();
        for (r, &d) in d2.iter().enumerate() {
            g.b2[r] = d;
            for (c, a) in act.a1.iter().enumerate() {
                g.w2[r * s.hidden1 + c] = d * a;
            }
        }

        let d1: Vec<f64> = (0..s.hidden1)
            .map(|c| {
                let back: f64 = d2.iter().enumerate().map(|(r, d)| d * self.w2[r * s.hidden1 + c]).sum();
                let a = act.a1[c];
                back * a * (1.0 - a)
            })
            .collect();
        let n_in = act.z0.len();
        for (r, &d) in d1.iter().enumerate() {
            g.b1[r] = d;
            for (c, z) in act.z0.iter().enumerate() {
                g.w1[r * n_in + c] = d * z;
            }
        }

        // only the pooled part of z0 depends on the filters
        let per_map = s.pooled_per_map();
        let map_len = s.map_len();
        for f in 0..s.filters {
            for j in 0..per_map {
                let col = f * per_map + j;
                let d0: f64 = d1.iter().enumerate().map(|(r, d)| d * self.w1[r * n_in + col]).sum();
                let start = j * s.pool;
                let end = (start + s.pool).min(map_len);
                let scale = d0 / (end - start) as f64;
                for k in 0..s.filter_len {
                    let window: f64 = input[start + k..end + k].iter().sum();
                    g.conv[f * s.filter_len + k] += scale * window;
                }
            }
        }
        Ok((loss, g))
    }

    /// Mean loss and mean gradient over a batch.
    pub fn batch_gradient<'a>(
        &self,
        batch: impl IntoIterator<Item = (&'a [f64], &'a [f64], bool)>,
    ) -> Result<(f64, Gradients)> {
        let mut total = Gradients::zeros(self);
        let mut loss = 0.0;
        let mut n = 0usize;
        for (x, aux, y) in batch {
            let (l, g) = self.backward(x, aux, y)?;
            loss += l;
            total.add_scaled(&g, 1.0);
            n += 1;
        }
        if n == 0 {
            return Ok((0.0, total));
        }
        let inv = 1.0 / n as f64;
        let mut mean = Gradients::zeros(self);
        mean.add_scaled(&total, inv);
        Ok((loss * inv, mean))
    }

    pub fn apply(&mut self, g: &Gradients, lr: f64) {
        let pairs = [
            (&mut self.conv, &g.conv),
            (&mut self.w1, &g.w1),
            (&mut self.b1, &g.b1),
            (&mut self.w2, &g.w2),
            (&mut self.b2, &g.b2),
            (&mut self.w3, &g.w3),
        ];
        for (p, d) in pairs {
            p.iter_mut().zip(d).for_each(|(x, y)| *x -= lr * y);
        }
        self.b3 -= lr * g.b3;
    }

    /// Named mutable views of every parameter tensor, in a fixed order.
    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("conv", self.conv.as_mut_slice()),
            ("w1", self.w1.as_mut_slice()),
            ("b1", self.b1.as_mut_slice()),
            ("w2", self.w2.as_mut_slice()),
            ("b2", self.b2.as_mut_slice()),
            ("w3", self.w3.as_mut_slice()),
            ("b3", std::slice::from_mut(&mut self.b3)),
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.conv.len() + self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len() + self.w3.len() + 1
    }
}

impl Gradients {
    /// Views in the same order as [`EntailmentNet::tensors_mut`].
    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("conv", self.conv.as_slice()),
            ("w1", self.w1.as_slice()),
            ("b1", self.b1.as_slice()),
            ("w2", self.w2.as_slice()),
            ("b2", self.b2.as_slice()),
            ("w3", self.w3.as_slice()),
            ("b3", std::slice::from_ref(&self.b3)),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shape_chain() {
        let s = NetShape::default();
        assert_eq!(s.input_len(), 400);
        assert_eq!(s.map_len(), 399);
        assert_eq!(s.pooled_per_map(), 4);
        assert_eq!(s.pooled_width(), 40);
        assert_eq!(NetShape { aux_width: 7, ..s }.hidden_input(), 47);
    }

    #[test]
    fn zero_net_outputs_half() {
        let s = NetShape { d: 4, filters: 2, filter_len: 2, pool: 2, hidden1: 3, hidden2: 3, aux_width: 1 };
        let net = EntailmentNet::zeros(s).unwrap();
        assert_eq!(net.forward(&[0.3; 8], &[0.9]).unwrap(), 0.5);
    }

    #[test]
    fn output_in_open_interval() {
        let s = NetShape { d: 6, filters: 3, filter_len: 2, pool: 4, hidden1: 5, hidden2: 4, aux_width: 2 };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..20 {
            let net = EntailmentNet::init(s.clone(), seed, 3.0).unwrap();
            let x: Vec<f64> = (0..12).map(|_| rng.random_range(-5.0..5.0)).collect();
            let p = net.forward(&x, &[rng.random_range(-1.0..1.0), 2.0]).unwrap();
            assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn shape_errors() {
        let net = EntailmentNet::init(NetShape { aux_width: 1, ..NetShape::default() }, 0, 0.05).unwrap();
        assert!(matches!(net.forward(&[0.0; 399], &[0.0]), Err(Error::Shape(_))));
        assert!(matches!(net.forward(&[0.0; 400], &[]), Err(Error::Shape(_))));
    }
}
