//! Self-describing binary container for trained classifiers: magic bytes,
//! a format version, a variant tag, then little-endian parameter blobs.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::boosted::{BNode, BoostedModel, BoostedTree};
use super::forest::ForestModel;
use super::knn::KnnModel;
use super::logistic::LogisticModel;
use super::naive_bayes::GnbModel;
use super::sgd::SgdModel;
use super::svm::SvmModel;
use super::tree::{Node, TreeModel};
use super::{ClassifierSpec, FittedModel, ModelParams, Variant};

const MAGIC: &[u8; 4] = b"BRNK";
const VERSION: u16 = 1;

const TAG_LR: u8 = 1;
const TAG_GNB: u8 = 2;
const TAG_KNN: u8 = 3;
const TAG_DT: u8 = 4;
const TAG_RF: u8 = 5;
const TAG_GBT: u8 = 6;
const TAG_SGD: u8 = 7;
const TAG_SVM: u8 = 8;

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn u8(&mut self, v: u8) -> Result<()> {
        Ok(self.0.write_all(&[v])?)
    }
    fn u16(&mut self, v: u16) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn u32(&mut self, v: u32) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn usize32(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| Error::arg("value exceeds u32 container field"))?;
        self.u32(v)
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn f64s(&mut self, vs: &[f64]) -> Result<()> {
        for v in vs {
            self.f64(*v)?;
        }
        Ok(())
    }
    fn u8s(&mut self, vs: &[u8]) -> Result<()> {
        Ok(self.0.write_all(vs)?)
    }
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.0
            .read_exact(&mut buf)
            .map_err(|_| Error::corrupt("model file truncated"))?;
        Ok(buf)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes()?))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn usize32(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
    fn u8s(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        self.0
            .read_exact(&mut buf)
            .map_err(|_| Error::corrupt("model file truncated"))?;
        Ok(buf)
    }
}

fn write_tree<W: Write>(w: &mut Writer<W>, tree: &TreeModel) -> Result<()> {
    w.usize32(tree.nodes.len())?;
    for node in &tree.nodes {
        match node {
            Node::Leaf { label, p_water } => {
                w.u8(0)?;
                w.u8(*label)?;
                w.f64(*p_water)?;
            }
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                w.u8(1)?;
                w.usize32(*feature)?;
                w.f64(*threshold)?;
                w.u32(*left)?;
                w.u32(*right)?;
            }
        }
    }
    Ok(())
}

fn read_tree<R: Read>(r: &mut Reader<R>, n_features: usize) -> Result<TreeModel> {
    let count = r.usize32()?;
    let mut nodes = Vec::with_capacity(count);
    for _ in 0..count {
        nodes.push(match r.u8()? {
            0 => Node::Leaf {
                label: r.u8()?,
                p_water: r.f64()?,
            },
            1 => Node::Split {
                feature: r.usize32()?,
                threshold: r.f64()?,
                left: r.u32()?,
                right: r.u32()?,
            },
            tag => return Err(Error::corrupt(format!("unknown tree node tag {tag}"))),
        });
    }
    Ok(TreeModel { n_features, nodes })
}

fn write_boosted_tree<W: Write>(w: &mut Writer<W>, tree: &BoostedTree) -> Result<()> {
    w.usize32(tree.nodes.len())?;
    for node in &tree.nodes {
        match node {
            BNode::Leaf { weight } => {
                w.u8(0)?;
                w.f64(*weight)?;
            }
            BNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                w.u8(1)?;
                w.usize32(*feature)?;
                w.f64(*threshold)?;
                w.u32(*left)?;
                w.u32(*right)?;
            }
        }
    }
    Ok(())
}

fn read_boosted_tree<R: Read>(r: &mut Reader<R>) -> Result<BoostedTree> {
    let count = r.usize32()?;
    let mut nodes = Vec::with_capacity(count);
    for _ in 0..count {
        nodes.push(match r.u8()? {
            0 => BNode::Leaf { weight: r.f64()? },
            1 => BNode::Split {
                feature: r.usize32()?,
                threshold: r.f64()?,
                left: r.u32()?,
                right: r.u32()?,
            },
            tag => return Err(Error::corrupt(format!("unknown tree node tag {tag}"))),
        });
    }
    Ok(BoostedTree { nodes })
}

/// Serializes a trained model; the exact inverse of [`read_model`].
pub fn write_model<W: Write>(model: &FittedModel, out: W) -> Result<()> {
    let mut w = Writer(out);
    w.u8s(MAGIC)?;
    w.u16(VERSION)?;
    let tag = match &model.params {
        ModelParams::Logistic(_) => TAG_LR,
        ModelParams::Gnb(_) => TAG_GNB,
        ModelParams::Knn(_) => TAG_KNN,
        ModelParams::Tree(_) => TAG_DT,
        ModelParams::Forest(_) => TAG_RF,
        ModelParams::Boosted(_) => TAG_GBT,
        ModelParams::Sgd(_) => TAG_SGD,
        ModelParams::Svm(_) => TAG_SVM,
    };
    w.u8(tag)?;
    w.u64(model.spec.seed)?;
    match (&model.spec.variant, &model.params) {
        (Variant::LogisticRegression { tol, max_iter }, ModelParams::Logistic(m)) => {
            w.f64(*tol)?;
            w.usize32(*max_iter)?;
            w.usize32(m.weights.len())?;
            w.f64s(&m.weights)?;
            w.f64(m.bias)?;
        }
        (Variant::GaussianNaiveBayes, ModelParams::Gnb(m)) => {
            w.usize32(m.n_features)?;
            w.f64s(&m.priors)?;
            w.f64s(&m.means)?;
            w.f64s(&m.variances)?;
        }
        (Variant::KNearest { k }, ModelParams::Knn(m)) => {
            w.usize32(*k)?;
            w.usize32(m.y.len())?;
            w.usize32(m.d)?;
            w.f64s(&m.x)?;
            w.u8s(&m.y)?;
        }
        (Variant::DecisionTree { min_samples_split }, ModelParams::Tree(m)) => {
            w.usize32(*min_samples_split)?;
            w.usize32(m.n_features)?;
            write_tree(&mut w, m)?;
        }
        (Variant::RandomForest { n_estimators }, ModelParams::Forest(m)) => {
            w.usize32(*n_estimators)?;
            w.usize32(m.n_features)?;
            w.usize32(m.trees.len())?;
            for tree in &m.trees {
                write_tree(&mut w, tree)?;
            }
        }
        (
            Variant::GradientBoostedTrees {
                rounds,
                learning_rate,
                max_depth,
                lambda,
            },
            ModelParams::Boosted(m),
        ) => {
            w.usize32(*rounds)?;
            w.f64(*learning_rate)?;
            w.usize32(*max_depth)?;
            w.f64(*lambda)?;
            w.usize32(m.n_features)?;
            w.usize32(m.trees.len())?;
            // Per-round training losses are diagnostics and stay out of
            // the container.
            for tree in &m.trees {
                write_boosted_tree(&mut w, tree)?;
            }
        }
        (
            Variant::SgdLinear {
                epochs,
                alpha,
                eta0,
            },
            ModelParams::Sgd(m),
        ) => {
            w.usize32(*epochs)?;
            w.f64(*alpha)?;
            w.f64(*eta0)?;
            w.usize32(m.weights.len())?;
            w.f64s(&m.weights)?;
            w.f64(m.bias)?;
        }
        (Variant::SvmRbf { c, max_points }, ModelParams::Svm(m)) => {
            w.f64(*c)?;
            w.usize32(*max_points)?;
            w.usize32(m.d)?;
            w.f64(m.gamma)?;
            w.f64(m.bias)?;
            w.usize32(m.coef.len())?;
            w.f64s(&m.coef)?;
            w.f64s(&m.support)?;
        }
        _ => return Err(Error::corrupt("spec and parameters disagree on variant")),
    }
    Ok(())
}

/// Reads a model container produced by [`write_model`].
pub fn read_model<R: Read>(input: R) -> Result<FittedModel> {
    let mut r = Reader(input);
    if &r.bytes::<4>()? != MAGIC {
        return Err(Error::format("not a classifier container (bad magic)"));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::format(format!(
            "unsupported classifier container version {version}"
        )));
    }
    let tag = r.u8()?;
    let seed = r.u64()?;
    let (variant, params) = match tag {
        TAG_LR => {
            let tol = r.f64()?;
            let max_iter = r.usize32()?;
            let d = r.usize32()?;
            let weights = r.f64s(d)?;
            let bias = r.f64()?;
            (
                Variant::LogisticRegression { tol, max_iter },
                ModelParams::Logistic(LogisticModel { weights, bias }),
            )
        }
        TAG_GNB => {
            let d = r.usize32()?;
            let priors = r.f64s(2)?;
            let means = r.f64s(2 * d)?;
            let variances = r.f64s(2 * d)?;
            (
                Variant::GaussianNaiveBayes,
                ModelParams::Gnb(GnbModel {
                    n_features: d,
                    priors: [priors[0], priors[1]],
                    means,
                    variances,
                }),
            )
        }
        TAG_KNN => {
            let k = r.usize32()?;
            let n = r.usize32()?;
            let d = r.usize32()?;
            let x = r.f64s(n * d)?;
            let y = r.u8s(n)?;
            (
                Variant::KNearest { k },
                ModelParams::Knn(KnnModel { k, d, x, y }),
            )
        }
        TAG_DT => {
            let min_samples_split = r.usize32()?;
            let d = r.usize32()?;
            let tree = read_tree(&mut r, d)?;
            (
                Variant::DecisionTree { min_samples_split },
                ModelParams::Tree(tree),
            )
        }
        TAG_RF => {
            let n_estimators = r.usize32()?;
            let d = r.usize32()?;
            let count = r.usize32()?;
            let trees = (0..count)
                .map(|_| read_tree(&mut r, d))
                .collect::<Result<Vec<_>>>()?;
            (
                Variant::RandomForest { n_estimators },
                ModelParams::Forest(ForestModel {
                    n_features: d,
                    trees,
                }),
            )
        }
        TAG_GBT => {
            let rounds = r.usize32()?;
            let learning_rate = r.f64()?;
            let max_depth = r.usize32()?;
            let lambda = r.f64()?;
            let d = r.usize32()?;
            let count = r.usize32()?;
            let trees = (0..count)
                .map(|_| read_boosted_tree(&mut r))
                .collect::<Result<Vec<_>>>()?;
            (
                Variant::GradientBoostedTrees {
                    rounds,
                    learning_rate,
                    max_depth,
                    lambda,
                },
                ModelParams::Boosted(BoostedModel {
                    n_features: d,
                    trees,
                    round_losses: Vec::new(),
                }),
            )
        }
        TAG_SGD => {
            let epochs = r.usize32()?;
            let alpha = r.f64()?;
            let eta0 = r.f64()?;
            let d = r.usize32()?;
            let weights = r.f64s(d)?;
            let bias = r.f64()?;
            (
                Variant::SgdLinear {
                    epochs,
                    alpha,
                    eta0,
                },
                ModelParams::Sgd(SgdModel { weights, bias }),
            )
        }
        TAG_SVM => {
            let c = r.f64()?;
            let max_points = r.usize32()?;
            let d = r.usize32()?;
            let gamma = r.f64()?;
            let bias = r.f64()?;
            let n_sv = r.usize32()?;
            let coef = r.f64s(n_sv)?;
            let support = r.f64s(n_sv * d)?;
            (
                Variant::SvmRbf { c, max_points },
                ModelParams::Svm(SvmModel {
                    d,
                    gamma,
                    bias,
                    coef,
                    support,
                }),
            )
        }
        other => return Err(Error::format(format!("unknown classifier tag {other}"))),
    };
    Ok(FittedModel {
        spec: ClassifierSpec { variant, seed },
        params,
    })
}

pub fn save_model(model: &FittedModel, path: impl AsRef<Path>) -> Result<()> {
    let file = fs::File::create(path.as_ref())?;
    write_model(model, std::io::BufWriter::new(file))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<FittedModel> {
    let file = fs::File::open(path.as_ref())?;
    read_model(std::io::BufReader::new(file))
}
