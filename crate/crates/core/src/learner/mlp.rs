use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Fully connected layer computing `x W + b` for row-major batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// Tanh MLP with a linear output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Activations kept from a forward pass for backprop.
pub struct MlpCache {
    /// Input to each layer (index 0 is the network input).
    inputs: Vec<Array2<f64>>,
}

impl Mlp {
    /// Glorot-normal weights, zero biases; the output layer is scaled by
    /// `out_gain`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], out_gain: f64, rng: &mut R) -> Self {
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let (fi, fo) = (sizes[i], sizes[i + 1]);
                let mut std = (2.0 / (fi + fo) as f64).sqrt();
                if i == n - 1 {
                    std *= out_gain;
                }
                let w = Array2::from_shape_fn((fi, fo), |_| rng.sample::<f64, _>(StandardNormal) * std);
                Dense { w, b: Array1::zeros(fo) }
            })
            .collect();
        Self { layers }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        let layers = sizes
            .windows(2)
            .map(|p| Dense {
                w: Array2::zeros((p[0], p[1])),
                b: Array1::zeros(p[1]),
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.w.ncols())
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, MlpCache) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = h.dot(&l.w);
            z += &l.b;
            if i < last {
                z.mapv_inplace(f64::tanh);
            }
            inputs.push(h);
            h = z;
        }
        (h, MlpCache { inputs })
    }

    /// Forward pass without a cache.
    pub fn predict(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = h.dot(&l.w);
            z += &l.b;
            if i < last {
                z.mapv_inplace(f64::tanh);
            }
            h = z;
        }
        h
    }

    /// Gradients of a loss w.r.t. every parameter given `d_out = dLoss/dOutput`.
    pub fn backward(&self, cache: &MlpCache, d_out: &Array2<f64>) -> Mlp {
        let n = self.layers.len();
        let mut grads: Vec<Dense> = Vec::with_capacity(n);
        let mut delta = d_out.clone();
        for i in (0..n).rev() {
            let input = &cache.inputs[i];
            let dw = input.t().dot(&delta);
            let db = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut d_in = delta.dot(&self.layers[i].w.t());
                // input[i] = tanh(z[i-1]); dtanh = 1 - tanh^2
                d_in.zip_mut_with(input, |d, &a| *d *= 1.0 - a * a);
                delta = d_in;
            }
            grads.push(Dense { w: dw, b: db });
        }
        grads.reverse();
        Mlp { layers: grads }
    }

    pub fn write_flat(&self, out: &mut Vec<f64>) {
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
    }

    /// Reads parameters from `src`, returning how many were consumed.
    pub fn read_flat(&mut self, src: &[f64]) -> usize {
        let mut k = 0;
        for l in &mut self.layers {
            for v in l.w.iter_mut().chain(l.b.iter_mut()) {
                *v = src[k];
                k += 1;
            }
        }
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::new(&[3, 4, 2], 1.0, &mut rng);
        let x = Array2::from_shape_fn((5, 3), |(i, j)| (i as f64 - 2.0) * 0.3 + j as f64 * 0.1);
        // loss = sum(out * c)
        let c = Array2::from_shape_fn((5, 2), |(i, j)| 0.5 - (i + j) as f64 * 0.1);
        let loss = |n: &Mlp| (n.predict(&x) * &c).sum();
        let (_, cache) = net.forward(&x);
        let g = net.backward(&cache, &c);
        let mut flat_g = Vec::new();
        g.write_flat(&mut flat_g);
        let mut p = Vec::new();
        net.write_flat(&mut p);
        for k in 0..p.len() {
            let h = 1e-6;
            let mut a = net.clone();
            let mut pp = p.clone();
            pp[k] += h;
            a.read_flat(&pp);
            let mut b = net.clone();
            pp[k] -= 2.0 * h;
            b.read_flat(&pp);
            let fd = (loss(&a) - loss(&b)) / (2.0 * h);
            assert!((fd - flat_g[k]).abs() < 1e-6, "param {k}: fd {fd} vs {}", flat_g[k]);
        }
    }

    #[test]
    fn flat_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Mlp::new(&[2, 3, 1], 0.1, &mut rng);
        let mut p = Vec::new();
        net.write_flat(&mut p);
        assert_eq!(p.len(), net.param_count());
        let mut z = Mlp::zeros(&[2, 3, 1]);
        assert_eq!(z.read_flat(&p), p.len());
        assert_eq!(z, net);
    }
}
