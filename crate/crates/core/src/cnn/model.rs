//! The classifier network: parameter storage, shape inference, forward
//! pass with caching, backpropagation, prediction and the versioned
//! model container.

use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use rand::rngs::StdRng;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{DataShape, LayerSpec};
use super::tensor::Tensor;
use super::train::Hyperparams;
use crate::error::{Error, Result};
use crate::imaging::GrayImage;

pub const MODEL_SCHEMA: &str = "contamdet/model/v1";

/// Verdict classes of the crop classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Class {
    /// False contamination: a garment part or artefact.
    #[serde(rename = "FC")]
    Fc,
    /// True contamination: a foreign object.
    #[serde(rename = "TC")]
    Tc,
}

impl Class {
    pub fn target(&self) -> f64 {
        match self {
            Class::Fc => 0.0,
            Class::Tc => 1.0,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "TC" | "tc" => Ok(Class::Tc),
            "FC" | "fc" => Ok(Class::Fc),
            other => Err(Error::Data(format!("unknown class label {other:?}"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Class::Fc => "FC",
            Class::Tc => "TC",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LayerParams {
    None,
    Conv { weights: Tensor, bias: Vec<f64> },
    Dense { weights: Tensor, bias: Vec<f64> },
}

/// Fixed decision threshold; the recall/precision trade-off lives in
/// the class weights of the loss, not here.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct CnnModel {
    specs: Vec<LayerSpec>,
    input_shape: DataShape,
    shapes: Vec<DataShape>,
    params: Vec<LayerParams>,
    pub hyperparams: Option<Hyperparams>,
}

/// Per-layer intermediates kept by a training-mode forward pass.
pub struct Cache {
    inputs: Vec<Tensor>,
    aux: Vec<Aux>,
    probability: f64,
}

impl Cache {
    pub fn probability(&self) -> f64 {
        self.probability
    }
}

enum Aux {
    None,
    DropoutMask(Vec<f64>),
    PoolArgmax(Vec<usize>),
}

/// Gradients of the loss with respect to every parameter and the input.
pub struct Gradients {
    pub layers: Vec<LayerParams>,
    pub input: Tensor,
}

impl Gradients {
    pub fn zeros_like(model: &CnnModel) -> Self {
        let layers = model
            .params
            .iter()
            .map(|p| match p {
                LayerParams::None => LayerParams::None,
                LayerParams::Conv { weights, bias } => LayerParams::Conv {
                    weights: Tensor::zeros(weights.shape()),
                    bias: vec![0.0; bias.len()],
                },
                LayerParams::Dense { weights, bias } => LayerParams::Dense {
                    weights: Tensor::zeros(weights.shape()),
                    bias: vec![0.0; bias.len()],
                },
            })
            .collect();
        Gradients { layers, input: Tensor::zeros(&model.input_shape.as_dims()) }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            match (a, b) {
                (LayerParams::None, LayerParams::None) => {}
                (
                    LayerParams::Conv { weights: wa, bias: ba },
                    LayerParams::Conv { weights: wb, bias: bb },
                )
                | (
                    LayerParams::Dense { weights: wa, bias: ba },
                    LayerParams::Dense { weights: wb, bias: bb },
                ) => {
                    for (x, y) in wa.data_mut().iter_mut().zip(wb.data()) {
                        *x += y;
                    }
                    for (x, y) in ba.iter_mut().zip(bb) {
                        *x += y;
                    }
                }
                _ => unreachable!("gradient layout mismatch"),
            }
        }
        for (x, y) in self.input.data_mut().iter_mut().zip(other.input.data()) {
            *x += y;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for layer in &mut self.layers {
            match layer {
                LayerParams::None => {}
                LayerParams::Conv { weights, bias } | LayerParams::Dense { weights, bias } => {
                    for x in weights.data_mut() {
                        *x *= s;
                    }
                    for x in bias.iter_mut() {
                        *x *= s;
                    }
                }
            }
        }
        for x in self.input.data_mut() {
            *x *= s;
        }
    }

    /// Parameter gradients as flat slices, in the model's canonical
    /// parameter order.
    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                LayerParams::None => {}
                LayerParams::Conv { weights, bias } | LayerParams::Dense { weights, bias } => {
                    out.push(weights.data());
                    out.push(bias.as_slice());
                }
            }
        }
        out
    }
}

impl CnnModel {
    /// Build a network with fan-in-scaled uniform initial weights and
    /// zero biases. Validates layer compatibility; the final layer must
    /// be a sigmoid over a single dense unit.
    pub fn new(
        specs: Vec<LayerSpec>,
        input_shape: (usize, usize, usize),
        rng: &mut StdRng,
    ) -> Result<Self> {
        let (c, h, w) = input_shape;
        let input_shape = DataShape::Map { channels: c, height: h, width: w };
        let mut shapes = Vec::with_capacity(specs.len());
        let mut params = Vec::with_capacity(specs.len());
        let mut cur = input_shape;

        for (idx, spec) in specs.iter().enumerate() {
            let err = |detail: String| Error::ShapeMismatch {
                layer: format!("#{idx} {spec}"),
                detail,
            };
            match *spec {
                LayerSpec::Conv { filters, kernel } => {
                    if filters < 1 || kernel < 1 {
                        return Err(err("filters and kernel must be >= 1".into()));
                    }
                    let DataShape::Map { channels, height, width } = cur else {
                        return Err(err(format!("expects feature maps, got {cur}")));
                    };
                    if height < kernel || width < kernel {
                        return Err(err(format!("kernel {kernel} exceeds input {cur}")));
                    }
                    let fan_in = channels * kernel * kernel;
                    let bound = (6.0 / fan_in as f64).sqrt();
                    let n = filters * fan_in;
                    let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
                    params.push(LayerParams::Conv {
                        weights: Tensor::from_vec(&[filters, channels, kernel, kernel], data)?,
                        bias: vec![0.0; filters],
                    });
                    cur = DataShape::Map {
                        channels: filters,
                        height: height - kernel + 1,
                        width: width - kernel + 1,
                    };
                }
                LayerSpec::Relu => params.push(LayerParams::None),
                LayerSpec::MaxPool { window } => {
                    if window < 1 {
                        return Err(err("window must be >= 1".into()));
                    }
                    let DataShape::Map { channels, height, width } = cur else {
                        return Err(err(format!("expects feature maps, got {cur}")));
                    };
                    if height < window || width < window {
                        return Err(err(format!("window {window} exceeds input {cur}")));
                    }
                    params.push(LayerParams::None);
                    cur = DataShape::Map {
                        channels,
                        height: height / window,
                        width: width / window,
                    };
                }
                LayerSpec::Dropout { rate } => {
                    if !(0.0..1.0).contains(&rate) {
                        return Err(err(format!("rate {rate} outside [0, 1)")));
                    }
                    params.push(LayerParams::None);
                }
                LayerSpec::Dense { units } => {
                    if units < 1 {
                        return Err(err("units must be >= 1".into()));
                    }
                    let fan_in = cur.element_count();
                    let bound = (6.0 / fan_in as f64).sqrt();
                    let data: Vec<f64> =
                        (0..units * fan_in).map(|_| rng.gen_range(-bound..bound)).collect();
                    params.push(LayerParams::Dense {
                        weights: Tensor::from_vec(&[units, fan_in], data)?,
                        bias: vec![0.0; units],
                    });
                    cur = DataShape::Flat(units);
                }
                LayerSpec::Sigmoid => {
                    if idx + 1 != specs.len() {
                        return Err(err("sigmoid must be the final layer".into()));
                    }
                    if cur != DataShape::Flat(1) {
                        return Err(err(format!("expects a single unit, got {cur}")));
                    }
                    params.push(LayerParams::None);
                }
            }
            shapes.push(cur);
        }

        match specs.last() {
            Some(LayerSpec::Sigmoid) => {}
            _ => {
                return Err(Error::InvalidInput(
                    "network must end with a sigmoid over one dense unit".into(),
                ))
            }
        }

        Ok(Self { specs, input_shape, shapes, params, hyperparams: None })
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn input_shape(&self) -> (usize, usize, usize) {
        let DataShape::Map { channels, height, width } = self.input_shape else {
            unreachable!("input is always a map")
        };
        (channels, height, width)
    }

    pub fn parameter_count(&self) -> usize {
        self.params
            .iter()
            .map(|p| match p {
                LayerParams::None => 0,
                LayerParams::Conv { weights, bias } | LayerParams::Dense { weights, bias } => {
                    weights.len() + bias.len()
                }
            })
            .sum()
    }

    /// Flat parameter views in canonical order (per layer: weights then
    /// bias), for the optimizer.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.params {
            match layer {
                LayerParams::None => {}
                LayerParams::Conv { weights, bias } | LayerParams::Dense { weights, bias } => {
                    out.push(weights.data_mut());
                    out.push(bias.as_mut_slice());
                }
            }
        }
        out
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for layer in &self.params {
            match layer {
                LayerParams::None => {}
                LayerParams::Conv { weights, bias } | LayerParams::Dense { weights, bias } => {
                    out.push(weights.len());
                    out.push(bias.len());
                }
            }
        }
        out
    }

    /// Forward pass. Dropout is active only when `training` is true, in
    /// which case an RNG must be supplied if any dropout layer has a
    /// non-zero rate. Returns P(TC) and the cache for `backward`.
    pub fn forward(
        &self,
        x: &Tensor,
        training: bool,
        mut rng: Option<&mut StdRng>,
    ) -> Result<(f64, Cache)> {
        if x.shape() != self.input_shape.as_dims().as_slice() {
            return Err(Error::ShapeMismatch {
                layer: "input".into(),
                detail: format!(
                    "got {:?}, model expects {:?}",
                    x.shape(),
                    self.input_shape.as_dims()
                ),
            });
        }
        let mut inputs = Vec::with_capacity(self.specs.len());
        let mut aux = Vec::with_capacity(self.specs.len());
        let mut cur = x.clone();
        let mut cur_shape = self.input_shape;

        for (idx, spec) in self.specs.iter().enumerate() {
            let mut layer_aux = Aux::None;
            let out = match *spec {
                LayerSpec::Conv { .. } => {
                    let LayerParams::Conv { weights, bias } = &self.params[idx] else {
                        unreachable!()
                    };
                    conv_forward(&cur, cur_shape, weights, bias, self.shapes[idx])
                }
                LayerSpec::Relu => {
                    let mut out = cur.clone();
                    for v in out.data_mut() {
                        if *v < 0.0 {
                            *v = 0.0;
                        }
                    }
                    out
                }
                LayerSpec::MaxPool { window } => {
                    let (out, argmax) = maxpool_forward(&cur, cur_shape, window, self.shapes[idx]);
                    layer_aux = Aux::PoolArgmax(argmax);
                    out
                }
                LayerSpec::Dropout { rate } => {
                    if training && rate > 0.0 {
                        let rng = rng.as_deref_mut().ok_or_else(|| {
                            Error::InvalidInput("training forward pass requires an RNG".into())
                        })?;
                        let keep = 1.0 - rate;
                        let mask: Vec<f64> = (0..cur.len())
                            .map(|_| if rng.gen_bool(keep) { 1.0 / keep } else { 0.0 })
                            .collect();
                        let mut out = cur.clone();
                        for (v, m) in out.data_mut().iter_mut().zip(&mask) {
                            *v *= m;
                        }
                        layer_aux = Aux::DropoutMask(mask);
                        out
                    } else {
                        cur.clone()
                    }
                }
                LayerSpec::Dense { .. } => {
                    let LayerParams::Dense { weights, bias } = &self.params[idx] else {
                        unreachable!()
                    };
                    dense_forward(&cur, weights, bias)
                }
                LayerSpec::Sigmoid => {
                    let z = cur.data()[0];
                    Tensor::from_vec(&[1], vec![sigmoid(z)])?
                }
            };
            inputs.push(std::mem::replace(&mut cur, out));
            aux.push(layer_aux);
            cur_shape = self.shapes[idx];
        }

        let probability = cur.data()[0];
        Ok((probability, Cache { inputs, aux, probability }))
    }

    /// Probability-only forward pass (dropout inactive).
    pub fn infer(&self, x: &Tensor) -> Result<f64> {
        Ok(self.forward(x, false, None)?.0)
    }

    /// Backpropagate d(loss)/dp through the cached pass; returns the
    /// gradients for every parameter tensor and for the input.
    pub fn backward(&self, cache: &Cache, loss_grad: f64) -> Result<Gradients> {
        if cache.inputs.len() != self.specs.len() {
            return Err(Error::InvalidInput("stale cache: layer count mismatch".into()));
        }
        let mut grads = Gradients::zeros_like(self);
        // d(loss)/dz through the output sigmoid is produced when the
        // sigmoid layer is reached below.
        let mut upstream = Tensor::from_vec(&[1], vec![loss_grad])?;

        for idx in (0..self.specs.len()).rev() {
            let input = &cache.inputs[idx];
            let in_shape =
                if idx == 0 { self.input_shape } else { self.shapes[idx - 1] };
            if input.len() != in_shape.element_count() {
                return Err(Error::InvalidInput("stale cache: shape mismatch".into()));
            }
            upstream = match self.specs[idx] {
                LayerSpec::Conv { .. } => {
                    let LayerParams::Conv { weights, .. } = &self.params[idx] else {
                        unreachable!()
                    };
                    let LayerParams::Conv { weights: dw, bias: db } = &mut grads.layers[idx]
                    else {
                        unreachable!()
                    };
                    conv_backward(input, in_shape, weights, &upstream, self.shapes[idx], dw, db)
                }
                LayerSpec::Relu => {
                    let mut din = upstream;
                    for (g, &v) in din.data_mut().iter_mut().zip(input.data()) {
                        if v <= 0.0 {
                            *g = 0.0;
                        }
                    }
                    din
                }
                LayerSpec::MaxPool { .. } => {
                    let Aux::PoolArgmax(argmax) = &cache.aux[idx] else {
                        return Err(Error::InvalidInput("stale cache: missing pool argmax".into()));
                    };
                    let mut din = Tensor::zeros(&in_shape.as_dims());
                    for (o, &src) in argmax.iter().enumerate() {
                        din.data_mut()[src] += upstream.data()[o];
                    }
                    din
                }
                LayerSpec::Dropout { .. } => match &cache.aux[idx] {
                    Aux::DropoutMask(mask) => {
                        let mut din = upstream;
                        for (g, m) in din.data_mut().iter_mut().zip(mask) {
                            *g *= m;
                        }
                        din
                    }
                    _ => upstream,
                },
                LayerSpec::Dense { .. } => {
                    let LayerParams::Dense { weights, .. } = &self.params[idx] else {
                        unreachable!()
                    };
                    let LayerParams::Dense { weights: dw, bias: db } = &mut grads.layers[idx]
                    else {
                        unreachable!()
                    };
                    dense_backward(input, weights, &upstream, dw, db, &in_shape)
                }
                LayerSpec::Sigmoid => {
                    let p = cache.probability;
                    Tensor::from_vec(&[1], vec![upstream.data()[0] * p * (1.0 - p)])?
                }
            };
        }

        grads.input = upstream;
        Ok(grads)
    }

    /// Normalize a crop to the model input tensor (divide by 255).
    pub fn tensor_from_image(&self, img: &GrayImage) -> Result<Tensor> {
        let (c, h, w) = self.input_shape();
        if c != 1 || img.height() != h || img.width() != w {
            return Err(Error::InvalidInput(format!(
                "crop is {}x{}, model expects {}x{}",
                img.width(),
                img.height(),
                w,
                h
            )));
        }
        let data: Vec<f64> = img.pixels().iter().map(|&p| p as f64 / 255.0).collect();
        Tensor::from_vec(&[1, h, w], data)
    }

    /// Classify a crop: TC iff P(TC) >= 0.5.
    pub fn predict(&self, crop: &GrayImage) -> Result<(Class, f64)> {
        let x = self.tensor_from_image(crop)?;
        let p = self.infer(&x)?;
        let class = if p >= DECISION_THRESHOLD { Class::Tc } else { Class::Fc };
        Ok((class, p))
    }

    pub fn to_container(&self) -> ModelContainer {
        ModelContainer {
            schema: MODEL_SCHEMA.to_string(),
            input_shape: {
                let (c, h, w) = self.input_shape();
                [c, h, w]
            },
            layers: self.specs.clone(),
            params: self
                .params
                .iter()
                .map(|p| match p {
                    LayerParams::None => None,
                    LayerParams::Conv { weights, bias } | LayerParams::Dense { weights, bias } => {
                        Some(ParamBlob {
                            shape: weights.shape().to_vec(),
                            weights: encode_f64(weights.data()),
                            bias: encode_f64(bias),
                        })
                    }
                })
                .collect(),
            hyperparams: self.hyperparams.clone(),
        }
    }

    pub fn from_container(container: ModelContainer) -> Result<Self> {
        if container.schema != MODEL_SCHEMA {
            return Err(Error::Schema {
                expected: MODEL_SCHEMA.into(),
                found: container.schema,
            });
        }
        let [c, h, w] = container.input_shape;
        // Rebuild through the constructor to revalidate shapes, then
        // overwrite the freshly initialized parameters.
        let mut rng = crate::seeds::rng(0, 0);
        let mut model = CnnModel::new(container.layers, (c, h, w), &mut rng)?;
        if container.params.len() != model.params.len() {
            return Err(Error::Data("model container: parameter list length mismatch".into()));
        }
        for (slot, blob) in model.params.iter_mut().zip(container.params) {
            match (slot, blob) {
                (LayerParams::None, None) => {}
                (LayerParams::Conv { weights, bias }, Some(blob))
                | (LayerParams::Dense { weights, bias }, Some(blob)) => {
                    let data = decode_f64(&blob.weights)?;
                    if blob.shape != weights.shape() || data.len() != weights.len() {
                        return Err(Error::Data("model container: weight shape mismatch".into()));
                    }
                    *weights = Tensor::from_vec(&blob.shape, data)?;
                    let b = decode_f64(&blob.bias)?;
                    if b.len() != bias.len() {
                        return Err(Error::Data("model container: bias length mismatch".into()));
                    }
                    *bias = b;
                }
                _ => return Err(Error::Data("model container: parameter kind mismatch".into())),
            }
        }
        model.hyperparams = container.hyperparams;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(&self.to_container())?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let container: ModelContainer = serde_json::from_slice(&bytes)?;
        Self::from_container(container)
    }
}

/// Versioned on-disk model: layer specs, shapes and little-endian f64
/// parameter blobs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelContainer {
    pub schema: String,
    pub input_shape: [usize; 3],
    pub layers: Vec<LayerSpec>,
    pub params: Vec<Option<ParamBlob>>,
    pub hyperparams: Option<Hyperparams>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamBlob {
    pub shape: Vec<usize>,
    pub weights: String,
    pub bias: String,
}

fn encode_f64(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    BASE64.encode(bytes)
}

fn decode_f64(s: &str) -> Result<Vec<f64>> {
    let bytes = BASE64
        .decode(s)
        .map_err(|e| Error::Data(format!("model container: bad base64: {e}")))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Data("model container: blob length not a multiple of 8".into()));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn conv_forward(
    input: &Tensor,
    in_shape: DataShape,
    weights: &Tensor,
    bias: &[f64],
    out_shape: DataShape,
) -> Tensor {
    let DataShape::Map { channels: c_in, height: h, width: w } = in_shape else { unreachable!() };
    let DataShape::Map { channels: filters, height: oh, width: ow } = out_shape else {
        unreachable!()
    };
    let k = weights.shape()[2];
    let mut out = Tensor::zeros(&[filters, oh, ow]);
    let xd = input.data();
    let wd = weights.data();
    let od = out.data_mut();
    for f in 0..filters {
        let out_map = &mut od[f * oh * ow..(f + 1) * oh * ow];
        out_map.fill(bias[f]);
        for c in 0..c_in {
            let in_map = &xd[c * h * w..(c + 1) * h * w];
            for u in 0..k {
                for v in 0..k {
                    let wv = wd[((f * c_in + c) * k + u) * k + v];
                    for i in 0..oh {
                        let in_row = &in_map[(i + u) * w + v..(i + u) * w + v + ow];
                        let out_row = &mut out_map[i * ow..(i + 1) * ow];
                        for j in 0..ow {
                            out_row[j] += wv * in_row[j];
                        }
                    }
                }
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    input: &Tensor,
    in_shape: DataShape,
    weights: &Tensor,
    d_out: &Tensor,
    out_shape: DataShape,
    dw: &mut Tensor,
    db: &mut [f64],
) -> Tensor {
    let DataShape::Map { channels: c_in, height: h, width: w } = in_shape else { unreachable!() };
    let DataShape::Map { channels: filters, height: oh, width: ow } = out_shape else {
        unreachable!()
    };
    let k = weights.shape()[2];
    let mut din = Tensor::zeros(&[c_in, h, w]);
    let xd = input.data();
    let wd = weights.data();
    let gd = d_out.data();
    let dwd = dw.data_mut();
    let dind = din.data_mut();
    for f in 0..filters {
        let g_map = &gd[f * oh * ow..(f + 1) * oh * ow];
        db[f] += g_map.iter().sum::<f64>();
        for c in 0..c_in {
            let in_map = &xd[c * h * w..(c + 1) * h * w];
            let din_map = &mut dind[c * h * w..(c + 1) * h * w];
            for u in 0..k {
                for v in 0..k {
                    let widx = ((f * c_in + c) * k + u) * k + v;
                    let wv = wd[widx];
                    let mut wsum = 0.0;
                    for i in 0..oh {
                        let g_row = &g_map[i * ow..(i + 1) * ow];
                        let in_row = &in_map[(i + u) * w + v..(i + u) * w + v + ow];
                        let din_row = &mut din_map[(i + u) * w + v..(i + u) * w + v + ow];
                        for j in 0..ow {
                            wsum += g_row[j] * in_row[j];
                            din_row[j] += wv * g_row[j];
                        }
                    }
                    dwd[widx] += wsum;
                }
            }
        }
    }
    din
}

fn maxpool_forward(
    input: &Tensor,
    in_shape: DataShape,
    window: usize,
    out_shape: DataShape,
) -> (Tensor, Vec<usize>) {
    let DataShape::Map { channels, height: h, width: w } = in_shape else { unreachable!() };
    let DataShape::Map { height: oh, width: ow, .. } = out_shape else { unreachable!() };
    let mut out = Tensor::zeros(&[channels, oh, ow]);
    let mut argmax = vec![0usize; channels * oh * ow];
    let xd = input.data();
    let od = out.data_mut();
    for c in 0..channels {
        for i in 0..oh {
            for j in 0..ow {
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = 0;
                for u in 0..window {
                    for v in 0..window {
                        let idx = c * h * w + (i * window + u) * w + j * window + v;
                        if xd[idx] > best {
                            best = xd[idx];
                            best_idx = idx;
                        }
                    }
                }
                let o = c * oh * ow + i * ow + j;
                od[o] = best;
                argmax[o] = best_idx;
            }
        }
    }
    (out, argmax)
}

fn dense_forward(input: &Tensor, weights: &Tensor, bias: &[f64]) -> Tensor {
    let n = input.len();
    let units = bias.len();
    let xd = input.data();
    let wd = weights.data();
    let mut out = Tensor::zeros(&[units]);
    let od = out.data_mut();
    for (o, ov) in od.iter_mut().enumerate() {
        let row = &wd[o * n..(o + 1) * n];
        let mut acc = bias[o];
        for i in 0..n {
            acc += row[i] * xd[i];
        }
        *ov = acc;
    }
    out
}

fn dense_backward(
    input: &Tensor,
    weights: &Tensor,
    d_out: &Tensor,
    dw: &mut Tensor,
    db: &mut [f64],
    in_shape: &DataShape,
) -> Tensor {
    let n = input.len();
    let units = db.len();
    let xd = input.data();
    let wd = weights.data();
    let gd = d_out.data();
    let dwd = dw.data_mut();
    let mut din = Tensor::zeros(&in_shape.as_dims());
    let dind = din.data_mut();
    for o in 0..units {
        let g = gd[o];
        db[o] += g;
        let wrow = &wd[o * n..(o + 1) * n];
        let dwrow = &mut dwd[o * n..(o + 1) * n];
        for i in 0..n {
            dwrow[i] += g * xd[i];
            dind[i] += g * wrow[i];
        }
    }
    din
}
