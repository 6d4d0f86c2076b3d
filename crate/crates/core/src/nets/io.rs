// SPDX-License-Identifier: MIT OR Apache-2.0

//! JSON model files.
//!
//! ```json
//! {"format_version": 1, "seed": 7, "input_dim": [2],
//!  "layers": [{"kind": "affine", "dims": [64, 2],
//!              "params": {"weight": [[...], ...], "bias": [...]}}, ...]}
//! ```

use std::path::Path;

use serde_json::{json, Map, Value};

use super::{AblationMask, Layer, Network};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const FORMAT_VERSION: u32 = 1;

pub(crate) fn nested<S: Scalar>(t: &Tensor<S>) -> Value {
    fn rec<S: Scalar>(shape: &[usize], data: &[S]) -> Value {
        match shape {
            [] => json!(data[0].to_f64_lossy()),
            [_] => Value::Array(data.iter().map(|v| json!(v.to_f64_lossy())).collect()),
            [n, rest @ ..] => {
                let w: usize = rest.iter().product();
                Value::Array((0..*n).map(|i| rec(rest, &data[i * w..(i + 1) * w])).collect())
            }
        }
    }
    rec(t.shape(), t.data())
}

pub(crate) fn from_nested<S: Scalar>(v: &Value, shape: &[usize], what: &str) -> Result<Tensor<S>> {
    fn rec<S: Scalar>(v: &Value, shape: &[usize], out: &mut Vec<S>, what: &str) -> Result<()> {
        match shape {
            [] => {
                let x = v
                    .as_f64()
                    .ok_or_else(|| Error::Malformed(format!("{what}: expected a number")))?;
                out.push(S::c(x));
                Ok(())
            }
            [n, rest @ ..] => {
                let arr = v
                    .as_array()
                    .filter(|a| a.len() == *n)
                    .ok_or_else(|| Error::Malformed(format!("{what}: expected {n} entries")))?;
                arr.iter().try_for_each(|e| rec(e, rest, out, what))
            }
        }
    }
    let mut data = Vec::with_capacity(shape.iter().product());
    rec(v, shape, &mut data, what)?;
    Tensor::new(shape.to_vec(), data)
}

fn layer_json<S: Scalar>(layer: &Layer<S>, input: &[usize]) -> Value {
    let (dims, params) = match layer {
        Layer::Affine { weight, bias } => (
            weight.shape().to_vec(),
            Some(json!({"weight": nested(weight), "bias": nested(bias)})),
        ),
        Layer::Relu | Layer::Gelu | Layer::Flatten => (input.to_vec(), None),
        Layer::Conv2d {
            weight,
            bias,
            stride,
            padding,
        } => {
            let mut d = weight.shape().to_vec();
            d.extend([*stride, *padding]);
            (d, Some(json!({"weight": nested(weight), "bias": nested(bias)})))
        }
    };
    let mut m = Map::new();
    m.insert("kind".into(), json!(layer.kind()));
    m.insert("dims".into(), json!(dims));
    if let Some(p) = params {
        m.insert("params".into(), p);
    }
    Value::Object(m)
}

pub(crate) fn to_value<S: Scalar>(net: &Network<S>) -> Value {
    let layers: Vec<Value> = net
        .layers
        .iter()
        .enumerate()
        .map(|(i, l)| layer_json(l, &net.shapes[i]))
        .collect();
    let mut m = Map::new();
    m.insert("format_version".into(), json!(FORMAT_VERSION));
    m.insert("seed".into(), json!(net.seed));
    m.insert("input_dim".into(), json!(net.input_shape));
    m.insert("layers".into(), Value::Array(layers));
    if !net.ablations.is_empty() {
        let abl: Vec<Value> = net
            .ablations
            .iter()
            .map(|a| json!({"layer": a.layer, "neuron": a.neuron, "mode": "zero-output"}))
            .collect();
        m.insert("ablations".into(), Value::Array(abl));
    }
    Value::Object(m)
}

pub(crate) fn to_json_string<S: Scalar>(net: &Network<S>) -> String {
    let mut s = serde_json::to_string_pretty(&to_value(net)).expect("values are finite");
    s.push('\n');
    s
}

fn usize_list(v: Option<&Value>, what: &str) -> Result<Vec<usize>> {
    v.and_then(Value::as_array)
        .ok_or_else(|| Error::Malformed(format!("missing {what}")))?
        .iter()
        .map(|d| {
            d.as_u64()
                .map(|d| d as usize)
                .ok_or_else(|| Error::Malformed(format!("{what}: expected integers")))
        })
        .collect()
}

pub(crate) fn from_value<S: Scalar>(v: &Value) -> Result<Network<S>> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Malformed("model file is not a JSON object".into()))?;
    let version = obj
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Malformed("missing format_version".into()))?;
    if version != u64::from(FORMAT_VERSION) {
        return Err(Error::Version {
            found: version as u32,
            expected: FORMAT_VERSION,
        });
    }
    let seed = obj
        .get("seed")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Malformed("missing seed".into()))?;
    let input_dim = usize_list(obj.get("input_dim"), "input_dim")?;
    let layers_json = obj
        .get("layers")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Malformed("missing layers".into()))?;
    let mut layers = Vec::with_capacity(layers_json.len());
    for (i, l) in layers_json.iter().enumerate() {
        let what = format!("layer {}", i + 1);
        let kind = l
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Malformed(format!("{what}: missing kind")))?;
        let dims = usize_list(l.get("dims"), &format!("{what} dims"))?;
        let param = |name: &str, shape: &[usize]| -> Result<Tensor<S>> {
            let p = l
                .get("params")
                .and_then(|p| p.get(name))
                .ok_or_else(|| Error::Malformed(format!("{what}: missing {name}")))?;
            from_nested(p, shape, &format!("{what} {name}"))
        };
        let layer = match kind {
            "affine" => {
                let [out, inp] = dims[..] else {
                    return Err(Error::Malformed(format!("{what}: affine dims must be [out, in]")));
                };
                Layer::Affine {
                    weight: param("weight", &[out, inp])?,
                    bias: param("bias", &[out])?,
                }
            }
            "relu" => Layer::Relu,
            "gelu" => Layer::Gelu,
            "flatten" => Layer::Flatten,
            "conv2d" => {
                let [o, c, kh, kw, stride, padding] = dims[..] else {
                    return Err(Error::Malformed(format!(
                        "{what}: conv2d dims must be [out, in, kh, kw, stride, padding]"
                    )));
                };
                Layer::Conv2d {
                    weight: param("weight", &[o, c, kh, kw])?,
                    bias: param("bias", &[o])?,
                    stride,
                    padding,
                }
            }
            other => return Err(Error::Malformed(format!("{what}: unknown kind {other:?}"))),
        };
        layers.push(layer);
    }
    let mut net = Network::new(input_dim, layers, seed)?;
    if let Some(abl) = obj.get("ablations").and_then(Value::as_array) {
        for a in abl {
            let get = |k: &str| {
                a.get(k)
                    .and_then(Value::as_u64)
                    .map(|v| v as usize)
                    .ok_or_else(|| Error::Malformed(format!("ablation: missing {k}")))
            };
            net = net.ablate(AblationMask {
                layer: get("layer")?,
                neuron: get("neuron")?,
            })?;
        }
    }
    Ok(net)
}

pub fn save<S: Scalar>(net: &Network<S>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_json_string(net))?;
    Ok(())
}

pub fn load<S: Scalar>(path: impl AsRef<Path>) -> Result<Network<S>> {
    let text = std::fs::read_to_string(path)?;
    let v: Value =
        serde_json::from_str(&text).map_err(|e| Error::Malformed(format!("invalid JSON: {e}")))?;
    from_value(&v)
}

impl<S: Scalar> Network<S> {
    pub fn to_json(&self) -> String {
        to_json_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| Error::Malformed(format!("invalid JSON: {e}")))?;
        from_value(&v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conv_net() -> Network {
        Network::builder(&[3, 6, 6], 11)
            .conv2d(4, 3, 2, 1)
            .relu()
            .flatten()
            .affine(5)
            .gelu()
            .affine(2)
            .build()
            .unwrap()
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let net = conv_net();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        save(&net, &a).unwrap();
        let back: Network = load(&a).unwrap();
        save(&back, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert_eq!(back, net);
        let x = Tensor::ones(&[3, 6, 6]);
        assert_eq!(back.forward(&x).unwrap(), net.forward(&x).unwrap());
    }

    #[test]
    fn truncated_file_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        let text = conv_net().to_json();
        std::fs::write(&p, &text[..text.len() / 2]).unwrap();
        assert!(matches!(load::<f64>(&p), Err(Error::Malformed(_))));
    }

    #[test]
    fn version_mismatch() {
        let text = conv_net().to_json().replacen("\"format_version\": 1", "\"format_version\": 9", 1);
        assert!(matches!(
            Network::<f64>::from_json(&text),
            Err(Error::Version { found: 9, .. })
        ));
    }

    #[test]
    fn ablations_survive_round_trip() {
        let net = conv_net().ablate(AblationMask { layer: 5, neuron: 2 }).unwrap();
        assert_eq!(Network::<f64>::from_json(&net.to_json()).unwrap(), net);
    }

    #[test]
    fn f32_round_trip() {
        let net: Network<f32> = conv_net().cast();
        assert_eq!(Network::<f32>::from_json(&net.to_json()).unwrap(), net);
    }
}
