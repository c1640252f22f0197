//! Seeded weight initializers.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::tensor::Tensor;

/// How a parameter is initialized when a model is built.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Uniform in ±sqrt(6 / (fan_in + fan_out)).
    Glorot { fan_in: usize, fan_out: usize },
    /// Orthonormal columns (or rows, whichever is shorter) of a `[rows, cols]` matrix.
    Orthogonal,
    Constant(f64),
    /// LSTM gate bias: zeros except the forget-gate block set to 1.
    ForgetBias { hidden: usize },
    Given(Tensor),
}

/// Declares one named tensor of a layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
    pub trainable: bool,
}

impl ParamSpec {
    pub fn new(name: impl Into<String>, shape: &[usize], init: Init) -> Self {
        Self {
            name: name.into(),
            shape: shape.to_vec(),
            init,
            trainable: true,
        }
    }

    pub fn frozen(mut self) -> Self {
        self.trainable = false;
        self
    }

    pub fn materialize<R: Rng + ?Sized>(&self, rng: &mut R) -> Tensor {
        match &self.init {
            Init::Glorot { fan_in, fan_out } => glorot_uniform(&self.shape, *fan_in, *fan_out, rng),
            Init::Orthogonal => {
                assert_eq!(self.shape.len(), 2, "orthogonal init needs a matrix");
                orthogonal(self.shape[0], self.shape[1], rng)
            }
            Init::Constant(c) => Tensor::filled(&self.shape, *c),
            Init::ForgetBias { hidden } => {
                let mut t = Tensor::zeros(&self.shape);
                t.data_mut()[*hidden..2 * hidden].iter_mut().for_each(|v| *v = 1.0);
                t
            }
            Init::Given(t) => t.clone(),
        }
    }
}

pub fn glorot_uniform<R: Rng + ?Sized>(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut R) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut t = Tensor::zeros(shape);
    t.data_mut()
        .iter_mut()
        .for_each(|v| *v = rng.random_range(-limit..limit));
    t
}

/// Gaussian matrix orthonormalized with modified Gram-Schmidt.
pub fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Tensor {
    let (long, short) = if rows >= cols { (rows, cols) } else { (cols, rows) };
    // `short` vectors of length `long`
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(short);
    while basis.len() < short {
        let mut v: Vec<f64> = (0..long).map(|_| rng.sample(StandardNormal)).collect();
        for b in &basis {
            let proj: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    let mut t = Tensor::zeros(&[rows, cols]);
    for (k, b) in basis.iter().enumerate() {
        for (i, &x) in b.iter().enumerate() {
            let (r, c) = if rows >= cols { (i, k) } else { (k, i) };
            t.data_mut()[r * cols + c] = x;
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn orthogonal_columns_are_orthonormal() {
        let t = orthogonal(12, 3, &mut seeded(5));
        for a in 0..3 {
            for b in 0..3 {
                let dot: f64 = (0..12).map(|i| t.row(i)[a] * t.row(i)[b]).sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn glorot_respects_limit_and_seed() {
        let a = glorot_uniform(&[10, 10], 10, 10, &mut seeded(1));
        let b = glorot_uniform(&[10, 10], 10, 10, &mut seeded(1));
        assert_eq!(a, b);
        let limit = (6.0f64 / 20.0).sqrt();
        assert!(a.data().iter().all(|v| v.abs() <= limit));
    }

    #[test]
    fn forget_bias_block() {
        let spec = ParamSpec::new("b", &[8], Init::ForgetBias { hidden: 2 });
        let t = spec.materialize(&mut seeded(0));
        assert_eq!(t.data(), &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }
}
