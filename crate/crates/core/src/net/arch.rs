//! Static description of the network: parameter shapes and the layer list
//! used for MAC accounting. Both mirror [`super::Network`] exactly.

use super::{NetConfig, SIM_DIM};
use crate::tensor::{FlopsReport, LayerDesc, LayerKind};

fn conv_params(out: &mut Vec<(String, Vec<usize>)>, name: &str, c_out: usize, c_in_g: usize, k: usize) {
    out.push((format!("{name}.weight"), vec![c_out, c_in_g, k, k]));
}

fn bn_params(out: &mut Vec<(String, Vec<usize>)>, name: &str, c: usize) {
    for part in ["mean", "var", "gamma", "beta"] {
        out.push((format!("{name}.bn.{part}"), vec![c]));
    }
}

/// Every parameter tensor the architecture references, with its shape.
pub fn param_specs(cfg: &NetConfig) -> Vec<(String, Vec<usize>)> {
    let mut p = Vec::new();
    let [w0, w1, w2, w3] = cfg.backbone_widths;
    let c = cfg.channels;

    for (name, c_in, c_out) in [
        ("backbone.stem", 3, w0),
        ("backbone.stage1", w0, w0),
        ("backbone.stage2", w0, w1),
        ("backbone.stage3", w1, w2),
        ("backbone.stage4", w2, w3),
    ] {
        conv_params(&mut p, name, c_out, c_in, 3);
        bn_params(&mut p, name, c_out);
    }
    for (l, &raw) in cfg.backbone_widths.iter().enumerate() {
        let name = format!("reduce.{l}");
        conv_params(&mut p, &name, c, raw, 1);
        bn_params(&mut p, &name, c);
    }
    for i in 0..cfg.n_c {
        for phase in ["up0", "up1", "up2", "down1", "down2", "down3"] {
            let name = format!("fpem{i}.{phase}");
            conv_params(&mut p, &format!("{name}.dw"), c, 1, 3);
            conv_params(&mut p, &format!("{name}.pw"), c, c, 1);
            bn_params(&mut p, &name, c);
        }
    }
    conv_params(&mut p, "head.conv", cfg.head_hidden, 4 * c, 3);
    bn_params(&mut p, "head.conv", cfg.head_hidden);
    conv_params(&mut p, "head.out", 2 + SIM_DIM, cfg.head_hidden, 1);
    p.push(("head.out.bias".into(), vec![2 + SIM_DIM]));
    p
}

fn fpem_layers(layers: &mut Vec<LayerDesc>, prefix: &str, cfg: &NetConfig) {
    let c = cfg.channels;
    let size = |l: usize| cfg.level_size(l);
    for l in (0..3).rev() {
        let (h, w) = size(l);
        let name = format!("{prefix}.up{l}");
        layers.push(LayerDesc { name: format!("{name}.upsample"), input: [c, h / 2, w / 2], kind: LayerKind::Upsample { factor: 2 } });
        layers.push(LayerDesc { name: format!("{name}.add"), input: [c, h, w], kind: LayerKind::Add });
        layers.push(LayerDesc::conv(format!("{name}.dw"), [c, h, w], c, 3, 1, c));
        layers.push(LayerDesc::conv(format!("{name}.pw"), [c, h, w], c, 1, 1, 1));
        layers.push(LayerDesc { name: format!("{name}.bn"), input: [c, h, w], kind: LayerKind::Norm });
        layers.push(LayerDesc { name: format!("{name}.relu"), input: [c, h, w], kind: LayerKind::Relu });
    }
    for l in 1..4 {
        let (h, w) = size(l);
        let (hs, ws) = size(l - 1);
        let name = format!("{prefix}.down{l}");
        layers.push(LayerDesc::conv(format!("{name}.dw"), [c, hs, ws], c, 3, 2, c));
        layers.push(LayerDesc { name: format!("{name}.add"), input: [c, h, w], kind: LayerKind::Add });
        layers.push(LayerDesc::conv(format!("{name}.pw"), [c, h, w], c, 1, 1, 1));
        layers.push(LayerDesc { name: format!("{name}.bn"), input: [c, h, w], kind: LayerKind::Norm });
        layers.push(LayerDesc { name: format!("{name}.relu"), input: [c, h, w], kind: LayerKind::Relu });
    }
}

/// The full layer list in execution order.
pub fn architecture(cfg: &NetConfig) -> Vec<LayerDesc> {
    let mut layers = Vec::new();
    let [w0, w1, w2, w3] = cfg.backbone_widths;
    let (h, w) = (cfg.height, cfg.width);
    let c = cfg.channels;

    layers.push(LayerDesc::conv("backbone.stem", [3, h, w], w0, 3, 2, 1));
    layers.push(LayerDesc::conv("backbone.stage1", [w0, h / 2, w / 2], w0, 3, 2, 1));
    layers.push(LayerDesc::conv("backbone.stage2", [w0, h / 4, w / 4], w1, 3, 2, 1));
    layers.push(LayerDesc::conv("backbone.stage3", [w1, h / 8, w / 8], w2, 3, 2, 1));
    layers.push(LayerDesc::conv("backbone.stage4", [w2, h / 16, w / 16], w3, 3, 2, 1));

    for (l, &raw) in cfg.backbone_widths.iter().enumerate() {
        let (lh, lw) = cfg.level_size(l);
        layers.push(LayerDesc::conv(format!("reduce.{l}"), [raw, lh, lw], c, 1, 1, 1));
    }
    for i in 0..cfg.n_c {
        fpem_layers(&mut layers, &format!("fpem{i}"), cfg);
    }

    let (h4, w4) = cfg.level_size(0);
    for l in 1..4 {
        let (lh, lw) = cfg.level_size(l);
        layers.push(LayerDesc { name: format!("ffm.upsample{l}"), input: [c, lh, lw], kind: LayerKind::Upsample { factor: 1 << l } });
    }
    layers.push(LayerDesc { name: "ffm.concat".into(), input: [c, h4, w4], kind: LayerKind::Concat { c_out: 4 * c } });
    layers.push(LayerDesc::conv("head.conv", [4 * c, h4, w4], cfg.head_hidden, 3, 1, 1));
    layers.push(LayerDesc::conv("head.out", [cfg.head_hidden, h4, w4], 2 + SIM_DIM, 1, 1, 1));
    layers
}

pub fn model_flops(cfg: &NetConfig) -> FlopsReport {
    architecture(cfg).iter().collect()
}

/// Reference FPN cost on the same pyramid: one 3×3 `C→C` smoothing conv per
/// level.
pub fn fpn_reference_flops(cfg: &NetConfig) -> FlopsReport {
    let c = cfg.channels;
    (0..4)
        .map(|l| {
            let (h, w) = cfg.level_size(l);
            LayerDesc::conv(format!("fpn.smooth{l}"), [c, h, w], c, 3, 1, 1)
        })
        .collect::<Vec<_>>()
        .iter()
        .collect()
}
