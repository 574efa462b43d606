//! Eight classical classifiers behind one fit/predict contract, each
//! trained on per-pixel reflectance features. Everything is implemented
//! here: no solver, tree, or kernel code is borrowed from another crate,
//! so trained models are reproducible from a seed on any platform.

mod boosted;
mod forest;
mod io;
mod knn;
mod logistic;
mod naive_bayes;
mod sgd;
mod svm;
mod tree;

pub use io::{load_model, read_model, save_model, write_model};

use crate::error::{Error, Result};
use crate::sampling::SamplePoint;

/// Classifier variant plus its hyperparameters. Constructors give the
/// documented defaults; fields stay public for overrides.
#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    /// Newton/IRLS logistic regression, unregularized.
    LogisticRegression { tol: f64, max_iter: usize },
    /// Per-class, per-feature Gaussians with variance smoothing.
    GaussianNaiveBayes,
    /// Euclidean k-nearest-neighbor vote; distance ties go to the lower
    /// training index.
    KNearest { k: usize },
    /// CART with Gini impurity, grown until pure.
    DecisionTree { min_samples_split: usize },
    /// Bagged CART trees with per-split feature subsampling.
    RandomForest { n_estimators: usize },
    /// Second-order boosting with logistic loss.
    GradientBoostedTrees {
        rounds: usize,
        learning_rate: f64,
        max_depth: usize,
        lambda: f64,
    },
    /// Linear model trained by SGD on the modified-Huber loss with an L1
    /// penalty applied by truncated gradient.
    SgdLinear {
        epochs: usize,
        alpha: f64,
        eta0: f64,
    },
    /// RBF-kernel SVM solved by SMO with maximal-violating-pair selection.
    SvmRbf { c: f64, max_points: usize },
}

impl Variant {
    pub fn logistic_regression() -> Variant {
        Variant::LogisticRegression {
            tol: 1e-6,
            max_iter: 100,
        }
    }

    pub fn gaussian_naive_bayes() -> Variant {
        Variant::GaussianNaiveBayes
    }

    pub fn k_nearest() -> Variant {
        Variant::KNearest { k: 7 }
    }

    pub fn decision_tree() -> Variant {
        Variant::DecisionTree {
            min_samples_split: 2,
        }
    }

    pub fn random_forest() -> Variant {
        Variant::RandomForest { n_estimators: 100 }
    }

    pub fn gradient_boosted_trees() -> Variant {
        Variant::GradientBoostedTrees {
            rounds: 100,
            learning_rate: 0.3,
            max_depth: 6,
            lambda: 1.0,
        }
    }

    pub fn sgd_linear() -> Variant {
        Variant::SgdLinear {
            epochs: 25,
            alpha: 1e-4,
            eta0: 0.01,
        }
    }

    pub fn svm_rbf() -> Variant {
        Variant::SvmRbf {
            c: 1.0,
            max_points: 5000,
        }
    }

    /// All eight variants with default settings, in the comparison-table
    /// column order.
    pub fn all_default() -> Vec<Variant> {
        vec![
            Variant::logistic_regression(),
            Variant::gaussian_naive_bayes(),
            Variant::random_forest(),
            Variant::k_nearest(),
            Variant::decision_tree(),
            Variant::sgd_linear(),
            Variant::gradient_boosted_trees(),
            Variant::svm_rbf(),
        ]
    }

    /// Short column label.
    pub fn name(&self) -> &'static str {
        match self {
            Variant::LogisticRegression { .. } => "LR",
            Variant::GaussianNaiveBayes => "GNB",
            Variant::KNearest { .. } => "KN",
            Variant::DecisionTree { .. } => "DT",
            Variant::RandomForest { .. } => "RF",
            Variant::GradientBoostedTrees { .. } => "GBT",
            Variant::SgdLinear { .. } => "SGD",
            Variant::SvmRbf { .. } => "SVM",
        }
    }

    /// Parses a column label (case-insensitive). `XGB` is accepted as an
    /// alias for the boosted-trees variant.
    pub fn parse(s: &str) -> Result<Variant> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LR" => Ok(Variant::logistic_regression()),
            "GNB" => Ok(Variant::gaussian_naive_bayes()),
            "KN" | "KNN" => Ok(Variant::k_nearest()),
            "DT" => Ok(Variant::decision_tree()),
            "RF" => Ok(Variant::random_forest()),
            "GBT" | "XGB" => Ok(Variant::gradient_boosted_trees()),
            "SGD" => Ok(Variant::sgd_linear()),
            "SVM" => Ok(Variant::svm_rbf()),
            other => Err(Error::arg(format!("unknown classifier `{other}`"))),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::arg(msg.to_string()));
        match *self {
            Variant::LogisticRegression { tol, max_iter } => {
                if tol <= 0.0 || max_iter == 0 {
                    return bad("logistic regression needs tol > 0 and max_iter >= 1");
                }
            }
            Variant::GaussianNaiveBayes => {}
            Variant::KNearest { k } => {
                if k == 0 || k % 2 == 0 {
                    return bad("k must be odd and >= 1");
                }
            }
            Variant::DecisionTree { min_samples_split } => {
                if min_samples_split < 2 {
                    return bad("min_samples_split must be >= 2");
                }
            }
            Variant::RandomForest { n_estimators } => {
                if n_estimators == 0 {
                    return bad("n_estimators must be >= 1");
                }
            }
            Variant::GradientBoostedTrees {
                rounds,
                learning_rate,
                max_depth,
                lambda,
            } => {
                if rounds == 0 || max_depth == 0 || learning_rate <= 0.0 || lambda < 0.0 {
                    return bad("boosted trees need rounds/max_depth >= 1, lr > 0, lambda >= 0");
                }
            }
            Variant::SgdLinear {
                epochs,
                alpha,
                eta0,
            } => {
                if epochs == 0 || alpha < 0.0 || eta0 <= 0.0 {
                    return bad("SGD needs epochs >= 1, alpha >= 0, eta0 > 0");
                }
            }
            Variant::SvmRbf { c, max_points } => {
                if c <= 0.0 || max_points == 0 {
                    return bad("SVM needs C > 0 and max_points >= 1");
                }
            }
        }
        Ok(())
    }

    /// True for variants whose training objective is undefined with a
    /// single class present (margin or log-odds based).
    fn requires_both_classes(&self) -> bool {
        matches!(
            self,
            Variant::LogisticRegression { .. }
                | Variant::GradientBoostedTrees { .. }
                | Variant::SgdLinear { .. }
                | Variant::SvmRbf { .. }
        )
    }
}

/// A classifier variant plus the seed all of its randomness derives from.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierSpec {
    pub variant: Variant,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(variant: Variant, seed: u64) -> ClassifierSpec {
        ClassifierSpec { variant, seed }
    }
}

/// Dense training view: features row-major, labels parallel.
#[derive(Debug, Clone)]
pub(crate) struct TrainData {
    pub x: Vec<f64>,
    pub y: Vec<u8>,
    pub n: usize,
    pub d: usize,
}

impl TrainData {
    pub fn from_points(train: &[SamplePoint]) -> Result<TrainData> {
        if train.is_empty() {
            return Err(Error::arg("training set is empty"));
        }
        let d = train[0].features.len();
        if d == 0 {
            return Err(Error::arg("training points have no features"));
        }
        let mut x = Vec::with_capacity(train.len() * d);
        let mut y = Vec::with_capacity(train.len());
        for p in train {
            if p.features.len() != d {
                return Err(Error::arg(format!(
                    "inconsistent feature count: {} vs {d}",
                    p.features.len()
                )));
            }
            if p.features.iter().any(|f| !f.is_finite()) {
                return Err(Error::Data("non-finite feature value".to_string()));
            }
            if p.label > 1 {
                return Err(Error::Data(format!("label {} outside {{0, 1}}", p.label)));
            }
            x.extend_from_slice(&p.features);
            y.push(p.label);
        }
        Ok(TrainData {
            x,
            y,
            n: train.len(),
            d,
        })
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let water = self.y.iter().filter(|&&l| l == 1).count();
        [self.n - water, water]
    }
}

/// Variant-specific trained parameters.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum ModelParams {
    Logistic(logistic::LogisticModel),
    Gnb(naive_bayes::GnbModel),
    Knn(knn::KnnModel),
    Tree(tree::TreeModel),
    Forest(forest::ForestModel),
    Boosted(boosted::BoostedModel),
    Sgd(sgd::SgdModel),
    Svm(svm::SvmModel),
}

/// A trained classifier. Immutable; `predict` and `decision_value` are
/// pure functions and safe to call concurrently.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub spec: ClassifierSpec,
    pub(crate) params: ModelParams,
}

/// Trains the classifier described by `spec` on `train`. All randomness
/// (bootstrap draws, epoch shuffles, subsampling) derives from `spec.seed`,
/// so identical inputs give identical models.
pub fn fit(spec: &ClassifierSpec, train: &[SamplePoint]) -> Result<FittedModel> {
    spec.variant.validate()?;
    let data = TrainData::from_points(train)?;
    let counts = data.class_counts();
    if spec.variant.requires_both_classes() && counts.contains(&0) {
        return Err(Error::DegenerateData(format!(
            "{} needs both classes in training data, got {}/{} (non-water/water)",
            spec.variant.name(),
            counts[0],
            counts[1]
        )));
    }
    let params = match &spec.variant {
        Variant::LogisticRegression { tol, max_iter } => {
            ModelParams::Logistic(logistic::fit(&data, *tol, *max_iter))
        }
        Variant::GaussianNaiveBayes => ModelParams::Gnb(naive_bayes::fit(&data)),
        Variant::KNearest { k } => ModelParams::Knn(knn::fit(&data, *k)?),
        Variant::DecisionTree { min_samples_split } => {
            ModelParams::Tree(tree::fit(&data, *min_samples_split))
        }
        Variant::RandomForest { n_estimators } => {
            ModelParams::Forest(forest::fit(&data, *n_estimators, spec.seed))
        }
        Variant::GradientBoostedTrees {
            rounds,
            learning_rate,
            max_depth,
            lambda,
        } => ModelParams::Boosted(boosted::fit(
            &data,
            *rounds,
            *learning_rate,
            *max_depth,
            *lambda,
        )),
        Variant::SgdLinear {
            epochs,
            alpha,
            eta0,
        } => ModelParams::Sgd(sgd::fit(&data, *epochs, *alpha, *eta0, spec.seed)),
        Variant::SvmRbf { c, max_points } => {
            ModelParams::Svm(svm::fit(&data, *c, *max_points, spec.seed)?)
        }
    };
    Ok(FittedModel {
        spec: spec.clone(),
        params,
    })
}

impl FittedModel {
    /// Training dimensionality `predict` expects.
    pub fn n_features(&self) -> usize {
        match &self.params {
            ModelParams::Logistic(m) => m.weights.len(),
            ModelParams::Gnb(m) => m.n_features,
            ModelParams::Knn(m) => m.d,
            ModelParams::Tree(m) => m.n_features,
            ModelParams::Forest(m) => m.n_features,
            ModelParams::Boosted(m) => m.n_features,
            ModelParams::Sgd(m) => m.weights.len(),
            ModelParams::Svm(m) => m.d,
        }
    }

    fn check_features(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.n_features() {
            return Err(Error::arg(format!(
                "model expects {} features, got {}",
                self.n_features(),
                features.len()
            )));
        }
        if features.iter().any(|f| !f.is_finite()) {
            return Err(Error::Data("non-finite feature value".to_string()));
        }
        Ok(())
    }

    /// Continuous score backing the prediction. Margin-style variants
    /// return a signed score thresholded at 0; vote-style variants (trees,
    /// forest, k-nearest) return the water-vote fraction thresholded at
    /// 0.5.
    pub fn decision_value(&self, features: &[f64]) -> Result<f64> {
        self.check_features(features)?;
        Ok(match &self.params {
            ModelParams::Logistic(m) => m.score(features),
            ModelParams::Gnb(m) => m.log_odds(features),
            ModelParams::Knn(m) => m.vote_fraction(features),
            ModelParams::Tree(m) => m.vote_fraction(features),
            ModelParams::Forest(m) => m.vote_fraction(features),
            ModelParams::Boosted(m) => m.score(features),
            ModelParams::Sgd(m) => m.score(features),
            ModelParams::Svm(m) => m.score(features),
        })
    }

    /// Predicted label: 1 = water, 0 = non-water.
    pub fn predict(&self, features: &[f64]) -> Result<u8> {
        let value = self.decision_value(features)?;
        Ok(match &self.params {
            // Vote fractions: strict majority, ties to non-water.
            ModelParams::Knn(_) | ModelParams::Tree(_) | ModelParams::Forest(_) => {
                u8::from(value > 0.5)
            }
            // Signed scores: the decision boundary itself predicts water.
            _ => u8::from(value >= 0.0),
        })
    }

    /// Predicts a whole batch; input rows must share the model's
    /// dimensionality.
    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<u8>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    /// Per-round mean training loss for boosted models; `None` for every
    /// other variant.
    pub fn training_curve(&self) -> Option<&[f64]> {
        match &self.params {
            ModelParams::Boosted(m) => Some(&m.round_losses),
            _ => None,
        }
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::binary_accuracy;
    use test_data::{point, two_gaussians};

    fn accuracy_on(model: &FittedModel, points: &[SamplePoint]) -> f64 {
        let preds: Vec<u8> = points
            .iter()
            .map(|p| model.predict(&p.features).unwrap())
            .collect();
        let truth: Vec<u8> = points.iter().map(|p| p.label).collect();
        binary_accuracy(&preds, &truth).unwrap()
    }

    #[test]
    fn every_variant_separates_clean_data() {
        let train = two_gaussians(0.40, 0.05, 0.02, 200, 1);
        let probe = two_gaussians(0.40, 0.05, 0.02, 100, 2);
        for variant in Variant::all_default() {
            let name = variant.name();
            let model = fit(&ClassifierSpec::new(variant, 9), &train).unwrap();
            let acc = accuracy_on(&model, &probe);
            assert!(acc >= 0.95, "{name} reached only {acc}");
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let train = two_gaussians(0.30, 0.08, 0.05, 150, 3);
        let probe = two_gaussians(0.30, 0.08, 0.05, 60, 4);
        for variant in Variant::all_default() {
            let spec = ClassifierSpec::new(variant, 42);
            let a = fit(&spec, &train).unwrap();
            let b = fit(&spec, &train).unwrap();
            for p in &probe {
                assert_eq!(
                    a.decision_value(&p.features).unwrap(),
                    b.decision_value(&p.features).unwrap(),
                    "{} drifted between fits",
                    spec.variant.name()
                );
            }
        }
    }

    #[test]
    fn predict_sign_matches_decision_value() {
        let train = two_gaussians(0.30, 0.08, 0.06, 150, 5);
        let probe = two_gaussians(0.30, 0.08, 0.06, 80, 6);
        for variant in Variant::all_default() {
            let vote_style = matches!(
                variant,
                Variant::KNearest { .. }
                    | Variant::DecisionTree { .. }
                    | Variant::RandomForest { .. }
            );
            let model = fit(&ClassifierSpec::new(variant, 7), &train).unwrap();
            for p in &probe {
                let value = model.decision_value(&p.features).unwrap();
                let label = model.predict(&p.features).unwrap();
                let expect = if vote_style {
                    value > 0.5
                } else {
                    value >= 0.0
                };
                assert_eq!(label, u8::from(expect));
            }
        }
    }

    #[test]
    fn single_class_rules() {
        let one_class: Vec<SamplePoint> = (0..20)
            .map(|i| point(vec![0.1 + 0.001 * i as f64], 1, i))
            .collect();
        for variant in Variant::all_default() {
            let needs_both = variant.requires_both_classes();
            let result = fit(&ClassifierSpec::new(variant.clone(), 1), &one_class);
            if needs_both {
                assert!(
                    matches!(result, Err(Error::DegenerateData(_))),
                    "{} accepted single-class data",
                    variant.name()
                );
            } else {
                let model = result.unwrap();
                assert_eq!(model.predict(&[0.5]).unwrap(), 1, "{}", variant.name());
            }
        }
    }

    #[test]
    fn input_validation() {
        assert!(fit(&ClassifierSpec::new(Variant::k_nearest(), 1), &[]).is_err());
        let train = vec![point(vec![0.1], 0, 0), point(vec![0.5], 1, 1)];
        let bad_k = Variant::KNearest { k: 4 };
        assert!(fit(&ClassifierSpec::new(bad_k, 1), &train).is_err());

        let nan = vec![point(vec![f64::NAN], 0, 0), point(vec![0.5], 1, 1)];
        assert!(matches!(
            fit(&ClassifierSpec::new(Variant::decision_tree(), 1), &nan),
            Err(Error::Data(_))
        ));

        let model = fit(&ClassifierSpec::new(Variant::decision_tree(), 1), &train).unwrap();
        assert!(matches!(
            model.predict(&[0.1, 0.2]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn variant_names_round_trip() {
        for variant in Variant::all_default() {
            assert_eq!(Variant::parse(variant.name()).unwrap(), variant);
        }
        assert_eq!(
            Variant::parse("xgb").unwrap(),
            Variant::gradient_boosted_trees()
        );
        assert!(Variant::parse("mlp").is_err());
    }
}
