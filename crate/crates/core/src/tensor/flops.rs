//! Multiply-accumulate accounting.
//!
//! One MAC counts as one FLOP. Normalisation, activations, additions,
//! resampling and concatenation are not counted.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum LayerKind {
    Conv {
        c_out: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        groups: usize,
    },
    Norm,
    Relu,
    Add,
    Upsample { factor: usize },
    Concat { c_out: usize },
}

/// A layer applied to a `C×H×W` input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerDesc {
    pub name: String,
    pub input: [usize; 3],
    pub kind: LayerKind,
}

impl LayerDesc {
    pub fn conv(
        name: impl Into<String>,
        input: [usize; 3],
        c_out: usize,
        kernel: usize,
        stride: usize,
        groups: usize,
    ) -> Self {
        Self {
            name: name.into(),
            input,
            kind: LayerKind::Conv { c_out, kernel, stride, padding: kernel / 2, groups },
        }
    }

    pub fn output_shape(&self) -> [usize; 3] {
        let [c, h, w] = self.input;
        match self.kind {
            LayerKind::Conv { c_out, kernel, stride, padding, .. } => [
                c_out,
                (h + 2 * padding - kernel) / stride + 1,
                (w + 2 * padding - kernel) / stride + 1,
            ],
            LayerKind::Upsample { factor } => [c, h * factor, w * factor],
            LayerKind::Concat { c_out } => [c_out, h, w],
            LayerKind::Norm | LayerKind::Relu | LayerKind::Add => self.input,
        }
    }
}

/// MAC count of one layer: `H'·W'·C_out·(C_in/groups)·k²` for convolutions,
/// zero for everything else.
pub fn flops_of(layer: &LayerDesc) -> u64 {
    match layer.kind {
        LayerKind::Conv { c_out, kernel, groups, .. } => {
            let [_, ho, wo] = layer.output_shape();
            (ho * wo * c_out * (layer.input[0] / groups) * kernel * kernel) as u64
        }
        _ => 0,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopsEntry {
    pub name: String,
    pub macs: u64,
    pub output: [usize; 3],
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopsReport {
    pub entries: Vec<FlopsEntry>,
    pub total: u64,
}

impl FlopsReport {
    pub fn push(&mut self, layer: &LayerDesc) {
        let macs = flops_of(layer);
        self.total += macs;
        self.entries.push(FlopsEntry {
            name: layer.name.clone(),
            macs,
            output: layer.output_shape(),
        });
    }

    pub fn extend(&mut self, other: FlopsReport) {
        self.total += other.total;
        self.entries.extend(other.entries);
    }

    /// Sum of entries whose name starts with `prefix`.
    pub fn total_with_prefix(&self, prefix: &str) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.name.starts_with(prefix))
            .map(|e| e.macs)
            .sum()
    }

    pub fn gflops(&self) -> f64 {
        self.total as f64 * 1e-9
    }
}

impl<'a> FromIterator<&'a LayerDesc> for FlopsReport {
    fn from_iter<I: IntoIterator<Item = &'a LayerDesc>>(iter: I) -> Self {
        let mut r = Self::default();
        iter.into_iter().for_each(|l| r.push(l));
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointwise_128_on_160() {
        let l = LayerDesc::conv("pw", [128, 160, 160], 128, 1, 1, 1);
        assert_eq!(flops_of(&l), 419_430_400);
    }

    #[test]
    fn depthwise_formula() {
        let (c, h, w) = (32, 24, 40);
        let l = LayerDesc::conv("dw", [c, h, w], c, 3, 1, c);
        assert_eq!(flops_of(&l), (h * w * c * 9) as u64);
        let s2 = LayerDesc::conv("dw2", [c, h, w], c, 3, 2, c);
        assert_eq!(s2.output_shape(), [c, h / 2, w / 2]);
    }

    #[test]
    fn report_is_additive() {
        let layers = [
            LayerDesc::conv("a", [8, 16, 16], 8, 3, 1, 8),
            LayerDesc { name: "b".into(), input: [8, 16, 16], kind: LayerKind::Relu },
            LayerDesc::conv("c", [8, 16, 16], 4, 1, 1, 1),
        ];
        let whole: FlopsReport = layers.iter().collect();
        let mut split: FlopsReport = layers[..1].iter().collect();
        split.extend(layers[1..].iter().collect());
        assert_eq!(whole, split);
        assert_eq!(whole.total, whole.entries.iter().map(|e| e.macs).sum::<u64>());
    }
}
