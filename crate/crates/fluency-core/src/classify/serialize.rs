//! Single-file binary model format.
//!
//! Layout (little-endian): magic `FLCM`, u16 version, u8 model kind,
//! u8 flags (bit 0: standardizer present), u32 n_features, u32 n_classes,
//! optional standardizer arrays, then flat kind-specific arrays. Writing the
//! same model twice produces identical bytes.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mat::Matrix;

use super::forest::{ForestModel, Node, Tree};
use super::mlp::{Dense, MlpModel};
use super::standardize::Standardizer;
use super::svm::{BinarySvm, SvmModel};
use super::{ModelInner, TrainedModel};

const MAGIC: &[u8; 4] = b"FLCM";
const VERSION: u16 = 1;

const KIND_SVM: u8 = 0;
const KIND_RF: u8 = 1;
const KIND_MLP: u8 = 2;

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        self.u32(vs.len() as u32);
        for &v in vs {
            self.f64(v);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Predict("model file truncated".into()));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }
    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
    fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        Ok(f64::from_le_bytes(b.try_into().unwrap()))
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.u32()? as usize;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.f64()?);
        }
        Ok(out)
    }
}

pub fn save_model(path: &Path, model: &TrainedModel) -> Result<()> {
    let mut w = Writer { buf: Vec::new() };
    w.buf.extend_from_slice(MAGIC);
    w.u16(VERSION);
    let kind = match &model.inner {
        ModelInner::Svm(_) => KIND_SVM,
        ModelInner::Forest(_) => KIND_RF,
        ModelInner::Mlp(_) => KIND_MLP,
    };
    w.u8(kind);
    w.u8(model.standardizer.is_some() as u8);
    w.u32(model.n_features() as u32);
    w.u32(model.n_classes() as u32);
    if let Some(s) = &model.standardizer {
        w.f64s(&s.means);
        w.f64s(&s.stds);
    }
    match &model.inner {
        ModelInner::Svm(m) => {
            w.f64(m.c);
            w.f64(m.gamma);
            w.u32(m.pairs.len() as u32);
            for pair in &m.pairs {
                w.u32(pair.class_pos as u32);
                w.u32(pair.class_neg as u32);
                w.f64(pair.bias);
                w.f64(pair.kkt_residual);
                w.u32(pair.support.rows() as u32);
                for &c in &pair.coef {
                    w.f64(c);
                }
                for v in pair.support.data() {
                    w.f64(*v);
                }
            }
        }
        ModelInner::Forest(m) => {
            w.u32(m.trees.len() as u32);
            for tree in &m.trees {
                w.u32(tree.nodes.len() as u32);
                for node in &tree.nodes {
                    match node {
                        Node::Split { feature, threshold, left, right } => {
                            w.u8(0);
                            w.u32(*feature as u32);
                            w.f64(*threshold);
                            w.u32(*left);
                            w.u32(*right);
                        }
                        Node::Leaf { counts } => {
                            w.u8(1);
                            w.u32(counts.len() as u32);
                            for &c in counts {
                                w.u32(c);
                            }
                        }
                    }
                }
            }
        }
        ModelInner::Mlp(m) => {
            w.u32(m.layers.len() as u32);
            for layer in &m.layers {
                w.u32(layer.w.rows() as u32);
                w.u32(layer.w.cols() as u32);
                for v in layer.w.data() {
                    w.f64(*v);
                }
                for &v in &layer.b {
                    w.f64(v);
                }
            }
        }
    }
    fs::write(path, &w.buf)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let bytes = fs::read(path)?;
    let mut r = Reader { buf: &bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Predict(format!("{}: not a model file", path.display())));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::Predict(format!(
            "{}: model format version {version} (supported: {VERSION})",
            path.display()
        )));
    }
    let kind = r.u8()?;
    let has_standardizer = r.u8()? != 0;
    let n_features = r.u32()? as usize;
    let n_classes = r.u32()? as usize;

    let standardizer = if has_standardizer {
        let means = r.f64s()?;
        let stds = r.f64s()?;
        if means.len() != n_features || stds.len() != n_features {
            return Err(Error::Predict("standardizer dimension mismatch".into()));
        }
        Some(Standardizer { means, stds })
    } else {
        None
    };

    let inner = match kind {
        KIND_SVM => {
            let c = r.f64()?;
            let gamma = r.f64()?;
            let n_pairs = r.u32()? as usize;
            let mut pairs = Vec::with_capacity(n_pairs);
            for _ in 0..n_pairs {
                let class_pos = r.u32()? as usize;
                let class_neg = r.u32()? as usize;
                let bias = r.f64()?;
                let kkt_residual = r.f64()?;
                let n_sv = r.u32()? as usize;
                let mut coef = Vec::with_capacity(n_sv);
                for _ in 0..n_sv {
                    coef.push(r.f64()?);
                }
                let mut data = Vec::with_capacity(n_sv * n_features);
                for _ in 0..n_sv * n_features {
                    data.push(r.f64()?);
                }
                pairs.push(BinarySvm {
                    class_pos,
                    class_neg,
                    support: Matrix::from_vec(data, n_sv, n_features),
                    coef,
                    bias,
                    kkt_residual,
                });
            }
            ModelInner::Svm(SvmModel::from_parts(pairs, c, gamma, n_features, n_classes))
        }
        KIND_RF => {
            let n_trees = r.u32()? as usize;
            let mut trees = Vec::with_capacity(n_trees);
            for _ in 0..n_trees {
                let n_nodes = r.u32()? as usize;
                let mut nodes = Vec::with_capacity(n_nodes);
                for _ in 0..n_nodes {
                    match r.u8()? {
                        0 => nodes.push(Node::Split {
                            feature: r.u32()? as usize,
                            threshold: r.f64()?,
                            left: r.u32()?,
                            right: r.u32()?,
                        }),
                        1 => {
                            let n = r.u32()? as usize;
                            let mut counts = Vec::with_capacity(n);
                            for _ in 0..n {
                                counts.push(r.u32()?);
                            }
                            nodes.push(Node::Leaf { counts });
                        }
                        t => {
                            return Err(Error::Predict(format!("unknown tree node tag {t}")))
                        }
                    }
                }
                trees.push(Tree { nodes });
            }
            ModelInner::Forest(ForestModel::from_parts(trees, n_features, n_classes))
        }
        KIND_MLP => {
            let n_layers = r.u32()? as usize;
            let mut layers = Vec::with_capacity(n_layers);
            for _ in 0..n_layers {
                let rows = r.u32()? as usize;
                let cols = r.u32()? as usize;
                let mut data = Vec::with_capacity(rows * cols);
                for _ in 0..rows * cols {
                    data.push(r.f64()?);
                }
                let mut b = Vec::with_capacity(cols);
                for _ in 0..cols {
                    b.push(r.f64()?);
                }
                layers.push(Dense { w: Matrix::from_vec(data, rows, cols), b });
            }
            ModelInner::Mlp(MlpModel::from_parts(layers, n_features, n_classes))
        }
        t => return Err(Error::Predict(format!("unknown model kind tag {t}"))),
    };

    Ok(TrainedModel { standardizer, inner })
}
