use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Gradients, Matrix, ParameterStore};
use crate::error::{Error, Result};

/// Activation of an MLP's last layer; hidden layers always use relu.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Linear,
    Softmax,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub widths: Vec<usize>,
    pub output: Activation,
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>, output: Activation) -> Self {
        Self { widths, output }
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.is_empty() {
            return Err(Error::Config("an MLP needs at least one layer".into()));
        }
        if self.widths.contains(&0) {
            return Err(Error::Config(format!("MLP widths must be positive: {:?}", self.widths)));
        }
        Ok(())
    }
}

/// A shared MLP: the same weights are applied to every row of its input.
/// Parameters live in a [`ParameterStore`] as `{name}.{layer}.weight` (in × out) and `.bias` (1 × out).
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    name: String,
    input_width: usize,
    spec: MlpSpec,
}

/// Values recorded by a forward pass for the backward pass.
#[derive(Clone, Debug)]
pub struct MlpCache {
    inputs: Vec<Matrix>,
    output: Matrix,
}

impl MlpCache {
    pub fn output(&self) -> &Matrix {
        &self.output
    }
}

pub fn softmax_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    let cols = m.cols();
    if cols == 0 {
        return out;
    }
    for row in out.data_mut().chunks_exact_mut(cols) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

impl Mlp {
    pub fn new(name: impl Into<String>, input_width: usize, spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            name: name.into(),
            input_width,
            spec,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn output_width(&self) -> usize {
        *self.spec.widths.last().expect("validated non-empty")
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    fn weight_name(&self, layer: usize) -> String {
        format!("{}.{layer}.weight", self.name)
    }

    fn bias_name(&self, layer: usize) -> String {
        format!("{}.{layer}.bias", self.name)
    }

    fn fan_ins(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut prev = self.input_width;
        self.spec.widths.iter().enumerate().map(move |(i, &w)| {
            let fan_in = prev;
            prev = w;
            (i, fan_in, w)
        })
    }

    /// Kaiming-style uniform weights scaled by fan-in, zero biases.
    pub fn init<R: Rng>(&self, store: &mut ParameterStore, rng: &mut R) -> Result<()> {
        for (i, fan_in, fan_out) in self.fan_ins() {
            let bound = if fan_in == 0 { 0.0 } else { (6.0 / fan_in as f64).sqrt() };
            let data = (0..fan_in * fan_out)
                .map(|_| if bound == 0.0 { 0.0 } else { rng.random_range(-bound..bound) })
                .collect();
            store.insert(self.weight_name(i), Matrix::from_vec(fan_in, fan_out, data)?)?;
            store.insert(self.bias_name(i), Matrix::zeros(1, fan_out))?;
        }
        Ok(())
    }

    /// Initializes with zero weights and biases.
    pub fn init_zeros(&self, store: &mut ParameterStore) -> Result<()> {
        for (i, fan_in, fan_out) in self.fan_ins() {
            store.insert(self.weight_name(i), Matrix::zeros(fan_in, fan_out))?;
            store.insert(self.bias_name(i), Matrix::zeros(1, fan_out))?;
        }
        Ok(())
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.spec.widths.len() {
            self.spec.output
        } else {
            Activation::Relu
        }
    }

    pub fn forward(&self, params: &ParameterStore, x: &Matrix) -> Result<(Matrix, MlpCache)> {
        if x.cols() != self.input_width {
            return Err(Error::Shape(format!(
                "{} expects {} input columns, got {}",
                self.name,
                self.input_width,
                x.cols()
            )));
        }
        let mut inputs = Vec::with_capacity(self.spec.widths.len());
        let mut h = x.clone();
        for i in 0..self.spec.widths.len() {
            let w = params.get(&self.weight_name(i))?;
            let b = params.get(&self.bias_name(i))?;
            let mut z = h.matmul(w)?;
            z.add_row_broadcast(b.data())?;
            let a = match self.activation(i) {
                Activation::Relu => z.map(|v| v.max(0.0)),
                Activation::Linear => z,
                Activation::Softmax => softmax_rows(&z),
            };
            inputs.push(std::mem::replace(&mut h, a));
        }
        Ok((
            h.clone(),
            MlpCache {
                inputs,
                output: h,
            },
        ))
    }

    /// Forward pass without recording.
    pub fn apply(&self, params: &ParameterStore, x: &Matrix) -> Result<Matrix> {
        Ok(self.forward(params, x)?.0)
    }

    /// Accumulates parameter gradients into `grads` and returns the gradient w.r.t. the input.
    pub fn backward(
        &self,
        params: &ParameterStore,
        cache: &MlpCache,
        d_out: &Matrix,
        grads: &mut Gradients,
    ) -> Result<Matrix> {
        if d_out.shape() != cache.output.shape() {
            return Err(Error::Shape(format!("{} backward: gradient shape", self.name)));
        }
        let mut d_a = d_out.clone();
        for i in (0..self.spec.widths.len()).rev() {
            let a = if i + 1 == self.spec.widths.len() {
                &cache.output
            } else {
                &cache.inputs[i + 1]
            };
            let d_z = match self.activation(i) {
                Activation::Relu => {
                    let mut d = d_a;
                    for (g, v) in d.data_mut().iter_mut().zip(a.data()) {
                        if *v <= 0.0 {
                            *g = 0.0;
                        }
                    }
                    d
                }
                Activation::Linear => d_a,
                Activation::Softmax => {
                    // dz = p ⊙ (da − Σ da·p)
                    let mut d = d_a;
                    let cols = d.cols();
                    for (row_d, row_p) in d.data_mut().chunks_exact_mut(cols).zip(a.data().chunks_exact(cols)) {
                        let dot: f64 = row_d.iter().zip(row_p).map(|(g, p)| g * p).sum();
                        for (g, p) in row_d.iter_mut().zip(row_p) {
                            *g = p * (*g - dot);
                        }
                    }
                    d
                }
            };
            let input = &cache.inputs[i];
            input.t_matmul_acc(&d_z, grads.get_mut(&self.weight_name(i))?)?;
            let gb = grads.get_mut(&self.bias_name(i))?;
            for (g, s) in gb.data_mut().iter_mut().zip(d_z.column_sums()) {
                *g += s;
            }
            d_a = d_z.matmul_t(params.get(&self.weight_name(i))?)?;
        }
        Ok(d_a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap()
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let mlp = Mlp::new("id", 3, MlpSpec::new(vec![3], Activation::Linear)).unwrap();
        let mut p = ParameterStore::new();
        mlp.init_zeros(&mut p).unwrap();
        *p.get_mut("id.0.weight").unwrap() = Matrix::identity(3);
        let x = random(4, 3, 1);
        assert_eq!(mlp.apply(&p, &x).unwrap(), x);
    }

    #[test]
    fn rows_are_processed_independently() {
        let mlp = Mlp::new("m", 4, MlpSpec::new(vec![6, 3], Activation::Relu)).unwrap();
        let mut p = ParameterStore::new();
        mlp.init(&mut p, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let x = random(5, 4, 3);
        let all = mlp.apply(&p, &x).unwrap();
        for i in 0..5 {
            let single = mlp.apply(&p, &x.gather_rows(&[i])).unwrap();
            for (a, b) in single.row(0).iter().zip(all.row(i)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let perm = [3, 0, 4, 1, 2];
        let permuted = mlp.apply(&p, &x.gather_rows(&perm)).unwrap();
        assert_eq!(permuted, all.gather_rows(&perm));
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let s = softmax_rows(&random(3, 6, 4).map(|v| 50.0 * v));
        for i in 0..3 {
            assert!((s.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_errors() {
        let mlp = Mlp::new("m", 4, MlpSpec::new(vec![2], Activation::Linear)).unwrap();
        let mut p = ParameterStore::new();
        mlp.init_zeros(&mut p).unwrap();
        assert!(matches!(mlp.apply(&p, &Matrix::zeros(1, 3)), Err(Error::Shape(_))));
        assert!(Mlp::new("e", 1, MlpSpec::new(vec![], Activation::Linear)).is_err());
    }

    #[test]
    fn backward_matches_finite_differences() {
        for output in [Activation::Relu, Activation::Linear, Activation::Softmax] {
            let mlp = Mlp::new("m", 3, MlpSpec::new(vec![5, 4], output)).unwrap();
            let mut p = ParameterStore::new();
            mlp.init(&mut p, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
            let x = random(6, 3, 8);
            let probe = random(6, 4, 9);
            let loss = |p: &ParameterStore, x: &Matrix| -> f64 {
                let y = mlp.apply(p, x).unwrap();
                y.data().iter().zip(probe.data()).map(|(a, b)| a * b).sum()
            };
            let (_, cache) = mlp.forward(&p, &x).unwrap();
            let mut g = p.zeros_like();
            let dx = mlp.backward(&p, &cache, &probe, &mut g).unwrap();
            let h = 1e-6;
            for (name, m) in p.iter() {
                for k in 0..m.data().len() {
                    let mut plus = p.clone();
                    plus.get_mut(name).unwrap().data_mut()[k] += h;
                    let mut minus = p.clone();
                    minus.get_mut(name).unwrap().data_mut()[k] -= h;
                    let fd = (loss(&plus, &x) - loss(&minus, &x)) / (2.0 * h);
                    let an = g.get(name).unwrap().data()[k];
                    assert!((fd - an).abs() < 1e-6, "{output:?} {name}[{k}]: {fd} vs {an}");
                }
            }
            for k in 0..x.data().len() {
                let mut plus = x.clone();
                plus.data_mut()[k] += h;
                let mut minus = x.clone();
                minus.data_mut()[k] -= h;
                let fd = (loss(&p, &plus) - loss(&p, &minus)) / (2.0 * h);
                assert!((fd - dx.data()[k]).abs() < 1e-6);
            }
        }
    }
}
