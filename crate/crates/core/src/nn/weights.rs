use ndarray::{Array1, Array2};
use rand::Rng;

use super::spec::ModelSpec;
use super::NnError;
use crate::Scalar;

/// One LSTM layer. Gate blocks are laid out column-wise as [i | f | g | o]:
/// `w` is (input, 4U), `u` is (U, 4U), `b` is (4U).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams<T> {
    pub w: Array2<T>,
    pub u: Array2<T>,
    pub b: Array1<T>,
}

impl<T: Scalar> LstmParams<T> {
    pub fn zeros(input: usize, units: usize) -> Self {
        LstmParams {
            w: Array2::zeros((input, 4 * units)),
            u: Array2::zeros((units, 4 * units)),
            b: Array1::zeros(4 * units),
        }
    }

    pub fn units(&self) -> usize {
        self.u.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.w.nrows()
    }
}

/// Affine layer y = x·w + b with `w` of shape (input, output).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams<T> {
    pub w: Array2<T>,
    pub b: Array1<T>,
}

impl<T: Scalar> DenseParams<T> {
    pub fn zeros(input: usize, output: usize) -> Self {
        DenseParams { w: Array2::zeros((input, output)), b: Array1::zeros(output) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights<T> {
    pub encoder: Vec<LstmParams<T>>,
    pub decoder: Vec<LstmParams<T>>,
    /// Hidden dense layers (tanh) followed by the linear output layer.
    pub dense: Vec<DenseParams<T>>,
}

impl<T: Scalar> NetworkWeights<T> {
    pub fn zeros(spec: &ModelSpec) -> Self {
        let mut encoder = Vec::new();
        let mut inp = spec.input_dim;
        for &u in &spec.encoder_units {
            encoder.push(LstmParams::zeros(inp, u));
            inp = u;
        }
        let mut decoder = Vec::new();
        let mut inp = spec.output_dim;
        for &u in &spec.decoder_units {
            decoder.push(LstmParams::zeros(inp, u));
            inp = u;
        }
        let mut dense = Vec::new();
        let mut inp = spec.head_input();
        for &u in spec.dense_units.iter().chain(std::iter::once(&spec.head_output())) {
            dense.push(DenseParams::zeros(inp, u));
            inp = u;
        }
        NetworkWeights { encoder, decoder, dense }
    }

    /// Uniform init in [-k, k], k = 1/sqrt(fan_in) of each block. LSTM
    /// biases use the layer width as fan-in.
    pub fn init<R: Rng>(spec: &ModelSpec, rng: &mut R) -> Self {
        let mut w = Self::zeros(spec);
        let fill = |a: &mut dyn Iterator<Item = &mut T>, fan_in: usize, rng: &mut R| {
            let k = 1.0 / (fan_in.max(1) as f64).sqrt();
            for v in a {
                *v = T::of(rng.gen_range(-k..=k));
            }
        };
        for layer in w.encoder.iter_mut().chain(w.decoder.iter_mut()) {
            let (inp, u) = (layer.input_dim(), layer.units());
            fill(&mut layer.w.iter_mut(), inp, rng);
            fill(&mut layer.u.iter_mut(), u, rng);
            fill(&mut layer.b.iter_mut(), u, rng);
        }
        for layer in &mut w.dense {
            let inp = layer.w.nrows();
            fill(&mut layer.w.iter_mut(), inp, rng);
            fill(&mut layer.b.iter_mut(), inp, rng);
        }
        w
    }

    pub fn zeros_like(&self) -> Self {
        let lstm = |l: &LstmParams<T>| LstmParams::zeros(l.input_dim(), l.units());
        NetworkWeights {
            encoder: self.encoder.iter().map(lstm).collect(),
            decoder: self.decoder.iter().map(lstm).collect(),
            dense: self.dense.iter().map(|d| DenseParams::zeros(d.w.nrows(), d.w.ncols())).collect(),
        }
    }

    /// Every parameter in a fixed order (encoder, decoder, dense; w, u, b).
    pub fn params(&self) -> impl Iterator<Item = &T> {
        let lstm = self.encoder.iter().chain(&self.decoder).flat_map(|l| l.w.iter().chain(l.u.iter()).chain(l.b.iter()));
        lstm.chain(self.dense.iter().flat_map(|d| d.w.iter().chain(d.b.iter())))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        let lstm = self
            .encoder
            .iter_mut()
            .chain(self.decoder.iter_mut())
            .flat_map(|l| l.w.iter_mut().chain(l.u.iter_mut()).chain(l.b.iter_mut()));
        lstm.chain(self.dense.iter_mut().flat_map(|d| d.w.iter_mut().chain(d.b.iter_mut())))
    }

    pub fn len(&self) -> usize {
        self.params().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all_finite(&self) -> bool {
        self.params().all(|v| v.is_finite())
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.params().copied().collect()
    }

    pub fn set_from(&mut self, values: &[T]) -> Result<(), NnError> {
        if values.len() != self.len() {
            return Err(NnError::ShapeMismatch(format!("{} values for {} parameters", values.len(), self.len())));
        }
        for (p, v) in self.params_mut().zip(values) {
            *p = *v;
        }
        Ok(())
    }

    /// Shapes agree with `spec`.
    pub fn check(&self, spec: &ModelSpec) -> Result<(), NnError> {
        let want = Self::zeros(spec);
        let same_lstm = |a: &[LstmParams<T>], b: &[LstmParams<T>]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.w.dim() == y.w.dim() && x.u.dim() == y.u.dim())
        };
        let same_dense =
            want.dense.len() == self.dense.len() && want.dense.iter().zip(&self.dense).all(|(x, y)| x.w.dim() == y.w.dim());
        if same_lstm(&want.encoder, &self.encoder) && same_lstm(&want.decoder, &self.decoder) && same_dense {
            Ok(())
        } else {
            Err(NnError::ShapeMismatch("weights do not match model spec".into()))
        }
    }

    pub fn cast<U: Scalar>(&self) -> NetworkWeights<U> {
        let c1 = |a: &Array1<T>| a.mapv(|v| U::of(v.as_f64()));
        let c2 = |a: &Array2<T>| a.mapv(|v| U::of(v.as_f64()));
        NetworkWeights {
            encoder: self.encoder.iter().map(|l| LstmParams { w: c2(&l.w), u: c2(&l.u), b: c1(&l.b) }).collect(),
            decoder: self.decoder.iter().map(|l| LstmParams { w: c2(&l.w), u: c2(&l.u), b: c1(&l.b) }).collect(),
            dense: self.dense.iter().map(|d| DenseParams { w: c2(&d.w), b: c1(&d.b) }).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn init_respects_bounds_and_count() {
        let spec = ModelSpec::encoder_decoder(3, 0, 2, 1, 4, vec![5], 0.0, 6, 2);
        let w: NetworkWeights<f64> = NetworkWeights::init(&spec, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(w.len(), spec.parameter_count());
        let k = 1.0 / 3f64.sqrt();
        assert!(w.encoder[0].w.iter().all(|v| v.abs() <= k));
        assert!(w.check(&spec).is_ok());
    }

    #[test]
    fn flat_round_trip() {
        let spec = ModelSpec::direct(2, 0, 3, 4, 2);
        let w: NetworkWeights<f32> = NetworkWeights::init(&spec, &mut ChaCha8Rng::seed_from_u64(1));
        let mut z = w.zeros_like();
        z.set_from(&w.to_vec()).unwrap();
        assert_eq!(z, w);
    }
}
