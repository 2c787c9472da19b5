use serde::{Deserialize, Serialize};

use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// LSTM encoder whose final states seed an autoregressive LSTM decoder.
    EncoderDecoder,
    /// LSTM stack with a dense head emitting the whole horizon from the last
    /// hidden state.
    Direct,
}

/// Topology of a forecaster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub input_dim: usize,
    /// Column of the input holding the (normalized) target; its last
    /// observed value is the decoder's first input.
    pub target_feature: usize,
    pub encoder_units: Vec<usize>,
    /// Empty for [`Architecture::Direct`].
    pub decoder_units: Vec<usize>,
    /// Hidden dense layers before the linear output layer.
    pub dense_units: Vec<usize>,
    pub dropout: f64,
    pub look_back: usize,
    pub horizon: usize,
    pub output_dim: usize,
}

impl ModelSpec {
    /// Uniform-width encoder–decoder.
    #[allow(clippy::too_many_arguments)]
    pub fn encoder_decoder(
        input_dim: usize,
        target_feature: usize,
        encoder_layers: usize,
        decoder_layers: usize,
        units: usize,
        dense_units: Vec<usize>,
        dropout: f64,
        look_back: usize,
        horizon: usize,
    ) -> Self {
        ModelSpec {
            architecture: Architecture::EncoderDecoder,
            input_dim,
            target_feature,
            encoder_units: vec![units; encoder_layers],
            decoder_units: vec![units; decoder_layers],
            dense_units,
            dropout,
            look_back,
            horizon,
            output_dim: 1,
        }
    }

    /// Single LSTM layer feeding a dense layer of `horizon` outputs.
    pub fn direct(input_dim: usize, target_feature: usize, units: usize, look_back: usize, horizon: usize) -> Self {
        ModelSpec {
            architecture: Architecture::Direct,
            input_dim,
            target_feature,
            encoder_units: vec![units],
            decoder_units: Vec::new(),
            dense_units: Vec::new(),
            dropout: 0.0,
            look_back,
            horizon,
            output_dim: 1,
        }
    }

    /// Encoder layer whose final (h, c) seeds decoder layer `layer`: the
    /// same depth, or the top encoder layer when the decoder is deeper.
    pub fn state_source(&self, layer: usize) -> usize {
        layer.min(self.encoder_units.len() - 1)
    }

    pub fn head_input(&self) -> usize {
        match self.architecture {
            Architecture::EncoderDecoder => *self.decoder_units.last().expect("validated"),
            Architecture::Direct => *self.encoder_units.last().expect("validated"),
        }
    }

    pub fn head_output(&self) -> usize {
        match self.architecture {
            Architecture::EncoderDecoder => self.output_dim,
            Architecture::Direct => self.output_dim * self.horizon,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: &str| Err(NnError::InvalidSpec(m.to_string()));
        if self.horizon == 0 {
            return Err(NnError::HorizonZero);
        }
        if self.look_back == 0 {
            return bad("look_back must be at least 1");
        }
        if self.input_dim == 0 || self.output_dim == 0 {
            return bad("input_dim and output_dim must be positive");
        }
        if self.target_feature >= self.input_dim {
            return bad("target_feature outside the input");
        }
        if self.encoder_units.is_empty() || self.encoder_units.contains(&0) {
            return bad("encoder needs at least one non-empty layer");
        }
        if self.dense_units.contains(&0) {
            return bad("dense layers must have units");
        }
        if !(0.0..=0.9).contains(&self.dropout) {
            return bad("dropout outside [0, 0.9]");
        }
        match self.architecture {
            Architecture::EncoderDecoder => {
                if self.decoder_units.is_empty() {
                    return bad("decoder needs at least one layer");
                }
                for (l, &u) in self.decoder_units.iter().enumerate() {
                    if u != self.encoder_units[self.state_source(l)] {
                        return bad("decoder layer width must match the encoder layer seeding it");
                    }
                }
            }
            Architecture::Direct => {
                if !self.decoder_units.is_empty() {
                    return bad("direct architecture has no decoder");
                }
            }
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        let lstm = |inp: usize, u: usize| 4 * u * (inp + u + 1);
        let mut n = 0;
        let mut inp = self.input_dim;
        for &u in &self.encoder_units {
            n += lstm(inp, u);
            inp = u;
        }
        let mut inp = self.output_dim;
        for &u in &self.decoder_units {
            n += lstm(inp, u);
            inp = u;
        }
        let mut inp = self.head_input();
        for &u in self.dense_units.iter().chain(std::iter::once(&self.head_output())) {
            n += (inp + 1) * u;
            inp = u;
        }
        n
    }
}
