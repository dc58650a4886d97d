//! Layer vocabulary of the classifier network. Convolutions use valid
//! padding and stride 1; pooling windows tile with truncation; dropout
//! is inverted (scaled at training time) so inference applies no
//! rescaling.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv { filters: usize, kernel: usize },
    Relu,
    MaxPool { window: usize },
    Dropout { rate: f64 },
    Dense { units: usize },
    Sigmoid,
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::Relu => "relu",
            LayerSpec::MaxPool { .. } => "maxpool",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Sigmoid => "sigmoid",
        }
    }
}

impl std::fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LayerSpec::Conv { filters, kernel } => write!(f, "conv{filters}k{kernel}"),
            LayerSpec::Relu => write!(f, "relu"),
            LayerSpec::MaxPool { window } => write!(f, "pool{window}"),
            LayerSpec::Dropout { rate } => write!(f, "drop{rate}"),
            LayerSpec::Dense { units } => write!(f, "dense{units}"),
            LayerSpec::Sigmoid => write!(f, "sigmoid"),
        }
    }
}

/// Shape flowing between layers: feature maps or a flat feature vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataShape {
    Map { channels: usize, height: usize, width: usize },
    Flat(usize),
}

impl DataShape {
    pub fn element_count(&self) -> usize {
        match *self {
            DataShape::Map { channels, height, width } => channels * height * width,
            DataShape::Flat(n) => n,
        }
    }

    pub fn as_dims(&self) -> Vec<usize> {
        match *self {
            DataShape::Map { channels, height, width } => vec![channels, height, width],
            DataShape::Flat(n) => vec![n],
        }
    }
}

impl std::fmt::Display for DataShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            DataShape::Map { channels, height, width } => {
                write!(f, "{channels}x{height}x{width}")
            }
            DataShape::Flat(n) => write!(f, "{n}"),
        }
    }
}
