//! Evaluation metrics (precision, recall, accuracy, F-beta), confusion
//! matrices, stratified K-fold cross-validation and the random
//! hyper-parameter search. Degenerate denominators produce 0 with a
//! flag rather than an error, so one bad fold cannot abort a search.

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::cnn::{self, Class, Hyperparams, LayerSpec, TrainSample};
use crate::error::{Error, Result};
use crate::seeds;

/// Counts are real-valued so cross-fold averages can be represented
/// directly, as in the paper's validation tables.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tn: f64,
    pub fp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub tp: f64,
}

impl ConfusionMatrix {
    pub fn new(tn: f64, fp: f64, fn_: f64, tp: f64) -> Self {
        Self { tn, fp, fn_, tp }
    }

    pub fn total(&self) -> f64 {
        self.tn + self.fp + self.fn_ + self.tp
    }

    pub fn precision(&self) -> f64 {
        let denom = self.tp + self.fp;
        if denom > 0.0 {
            self.tp / denom
        } else {
            0.0
        }
    }

    pub fn recall(&self) -> f64 {
        let denom = self.tp + self.fn_;
        if denom > 0.0 {
            self.tp / denom
        } else {
            0.0
        }
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total > 0.0 {
            (self.tp + self.tn) / total
        } else {
            0.0
        }
    }

    /// F-beta from precision and recall; beta = 2 is the project
    /// default (recall weighs more than precision).
    pub fn f_beta(&self, beta: f64) -> f64 {
        let p = self.precision();
        let r = self.recall();
        let denom = beta * beta * p + r;
        if denom > 0.0 {
            (1.0 + beta * beta) * p * r / denom
        } else {
            0.0
        }
    }

    pub fn f1(&self) -> f64 {
        self.f_beta(1.0)
    }

    pub fn f2(&self) -> f64 {
        self.f_beta(2.0)
    }

    /// False-positive rate FP / (FP + TN).
    pub fn fp_rate(&self) -> f64 {
        let denom = self.fp + self.tn;
        if denom > 0.0 {
            self.fp / denom
        } else {
            0.0
        }
    }

    /// False-negative rate FN / (FN + TP).
    pub fn fn_rate(&self) -> f64 {
        let denom = self.fn_ + self.tp;
        if denom > 0.0 {
            self.fn_ / denom
        } else {
            0.0
        }
    }

    /// True if any metric above fell back to the 0-by-convention case.
    pub fn degenerate(&self) -> bool {
        self.tp + self.fp == 0.0 || self.tp + self.fn_ == 0.0 || self.total() == 0.0
    }

    pub fn add_assign(&mut self, other: &ConfusionMatrix) {
        self.tn += other.tn;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tp += other.tp;
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { tn: self.tn * s, fp: self.fp * s, fn_: self.fn_ * s, tp: self.tp * s }
    }
}

/// One scored hyper-parameter combination.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsRow {
    pub f2: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub cm: ConfusionMatrix,
    pub hyperparams: Hyperparams,
    /// Set when any CV fold diverged; the row is excluded from argmax.
    pub diverged: bool,
    pub degenerate: bool,
}

impl MetricsRow {
    pub fn from_cm(cm: ConfusionMatrix, hyperparams: Hyperparams) -> Self {
        Self {
            f2: cm.f2(),
            f1: cm.f1(),
            accuracy: cm.accuracy(),
            precision: cm.precision(),
            recall: cm.recall(),
            degenerate: cm.degenerate(),
            cm,
            hyperparams,
            diverged: false,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SearchTable {
    pub rows: Vec<MetricsRow>,
}

impl SearchTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "index,layers,alpha,mu,batch_size,epochs,w_fc,w_tc,augment_copies,seed,\
             f2,f1,accuracy,precision,recall,tn,fp,fn,tp,diverged\n",
        );
        for (i, row) in self.rows.iter().enumerate() {
            let hp = &row.hyperparams;
            let layers = hp
                .layers
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join("|");
            out.push_str(&format!(
                "{i},{layers},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                hp.alpha,
                hp.mu,
                hp.batch_size,
                hp.epochs,
                hp.class_weights.0,
                hp.class_weights.1,
                hp.augment_copies,
                hp.seed,
                row.f2,
                row.f1,
                row.accuracy,
                row.precision,
                row.recall,
                row.cm.tn,
                row.cm.fp,
                row.cm.fn_,
                row.cm.tp,
                row.diverged,
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Argmax of average F2 over non-diverged rows; ties broken by
    /// higher recall, then lower FP count, then first occurrence.
    pub fn best(&self) -> Option<&MetricsRow> {
        self.rows
            .iter()
            .filter(|r| !r.diverged)
            .max_by(|a, b| {
                a.f2.partial_cmp(&b.f2)
                    .unwrap()
                    .then(a.recall.partial_cmp(&b.recall).unwrap())
                    .then(b.cm.fp.partial_cmp(&a.cm.fp).unwrap())
            })
    }
}

/// Stratified, seeded K-fold partition. Returns per-fold index lists;
/// fold sizes differ by at most one and each fold's class counts are
/// within one of an even split of that class.
pub fn kfold_split(labels: &[Class], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 1 || labels.len() < k {
        return Err(Error::InvalidInput(format!(
            "cannot split {} items into {k} folds",
            labels.len()
        )));
    }
    let mut folds = vec![Vec::new(); k];
    let mut cursor = 0usize;
    let mut rng = seeds::rng(seed, 0);
    for class in [Class::Tc, Class::Fc] {
        let mut idx: Vec<usize> =
            (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        // Deal round-robin, carrying the cursor across classes so the
        // total sizes stay balanced.
        for i in idx {
            folds[cursor % k].push(i);
            cursor += 1;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

/// Stratified, seeded holdout split. Returns (train, test) index lists;
/// the test fraction lands within one item of the target.
pub fn holdout_split(labels: &[Class], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = seeds::rng(seed, 1);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut want = 0.0f64;
    for class in [Class::Tc, Class::Fc] {
        let mut idx: Vec<usize> =
            (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        // Largest-remainder allocation carried across classes.
        want += idx.len() as f64 * fraction;
        let take = (want.round() as usize).saturating_sub(test.len()).min(idx.len());
        test.extend_from_slice(&idx[..take]);
        train.extend_from_slice(&idx[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Hyper-parameter ranges for the random search. Every listed option
/// vector must be non-empty.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchSpace {
    /// Number of conv(+relu) blocks.
    pub n_conv: Vec<usize>,
    /// Number of those blocks followed by max-pooling (clamped to n_conv).
    pub n_pool: Vec<usize>,
    pub conv_filters: Vec<usize>,
    pub kernel_sizes: Vec<usize>,
    pub pool_windows: Vec<usize>,
    /// Number of hidden dense layers before the output unit.
    pub n_dense: Vec<usize>,
    pub dense_units: Vec<usize>,
    pub dropout_rates: Vec<f64>,
    pub alphas: Vec<f64>,
    pub mus: Vec<f64>,
    pub batch_sizes: Vec<usize>,
    pub epochs: Vec<usize>,
    pub class_weights: Vec<(f64, f64)>,
    pub augment_copies: Vec<usize>,
}

impl SearchSpace {
    /// Compact space bracketing the reference architecture.
    pub fn default_space() -> Self {
        Self {
            n_conv: vec![2, 3],
            n_pool: vec![2, 3],
            conv_filters: vec![8, 16, 32, 64],
            kernel_sizes: vec![3, 5],
            pool_windows: vec![2, 3],
            n_dense: vec![1, 2],
            dense_units: vec![32, 64, 128],
            dropout_rates: vec![0.25, 0.5],
            alphas: vec![3e-4, 1e-3, 3e-3],
            mus: vec![0.85, 0.9, 0.95],
            batch_sizes: vec![16, 32],
            epochs: vec![5, 10],
            class_weights: vec![(1.0, 1.0), (1.0, 2.0), (1.0, 5.0), (1.0, 10.0)],
            augment_copies: vec![1, 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let empties = [
            self.n_conv.is_empty(),
            self.n_pool.is_empty(),
            self.conv_filters.is_empty(),
            self.kernel_sizes.is_empty(),
            self.pool_windows.is_empty(),
            self.n_dense.is_empty(),
            self.dense_units.is_empty(),
            self.dropout_rates.is_empty(),
            self.alphas.is_empty(),
            self.mus.is_empty(),
            self.batch_sizes.is_empty(),
            self.epochs.is_empty(),
            self.class_weights.is_empty(),
            self.augment_copies.is_empty(),
        ];
        if empties.iter().any(|&e| e) {
            return Err(Error::InvalidInput("search space has an empty option list".into()));
        }
        Ok(())
    }

    /// Draw one combination; retries until the layer stack is shape-
    /// compatible with `input` (bounded)."
    pub fn sample(
        &self,
        rng: &mut rand::rngs::StdRng,
        input: (usize, usize, usize),
        seed: u64,
    ) -> Result<Hyperparams> {

        for _ in 0..200 {
            let n_conv = *self.n_conv.choose(rng).unwrap();
            let n_pool = (*self.n_pool.choose(rng).unwrap()).min(n_conv);
            let mut layers = Vec::new();
            for b in 0..n_conv {
                layers.push(LayerSpec::Conv {
                    filters: *self.conv_filters.choose(rng).unwrap(),
                    kernel: *self.kernel_sizes.choose(rng).unwrap(),
                });
                layers.push(LayerSpec::Relu);
                if b < n_pool {
                    layers.push(LayerSpec::MaxPool {
                        window: *self.pool_windows.choose(rng).unwrap(),
                    });
                }
            }
            let n_dense = *self.n_dense.choose(rng).unwrap();
            let dropout = *self.dropout_rates.choose(rng).unwrap();
            for _ in 0..n_dense {
                layers.push(LayerSpec::Dense { units: *self.dense_units.choose(rng).unwrap() });
                layers.push(LayerSpec::Relu);
                layers.push(LayerSpec::Dropout { rate: dropout });
            }
            layers.push(LayerSpec::Dense { units: 1 });
            layers.push(LayerSpec::Sigmoid);

            let hp = Hyperparams {
                layers,
                alpha: *self.alphas.choose(rng).unwrap(),
                mu: *self.mus.choose(rng).unwrap(),
                batch_size: *self.batch_sizes.choose(rng).unwrap(),
                epochs: *self.epochs.choose(rng).unwrap(),
                class_weights: *self.class_weights.choose(rng).unwrap(),
                augment_copies: *self.augment_copies.choose(rng).unwrap(),
                augment: cnn::AugmentRanges::default(),
                seed,
            };
            // Shape check via a throwaway construction.
            let mut probe_rng = seeds::rng(0, 0);
            if cnn::CnnModel::new(hp.layers.clone(), (1, input.1, input.2), &mut probe_rng)
                .is_ok()
            {
                return Ok(hp);
            }
        }
        Err(Error::InvalidInput(
            "search space yields no shape-compatible architecture for this input".into(),
        ))
    }
}

/// Evaluate a trained model on held-out samples: integer-count confusion
/// matrix at the fixed 0.5 threshold.
pub fn evaluate_model(model: &cnn::CnnModel, samples: &[&TrainSample]) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::default();
    for s in samples {
        let (pred, _) = model.predict(&s.image)?;
        match (s.label, pred) {
            (Class::Tc, Class::Tc) => cm.tp += 1.0,
            (Class::Tc, Class::Fc) => cm.fn_ += 1.0,
            (Class::Fc, Class::Tc) => cm.fp += 1.0,
            (Class::Fc, Class::Fc) => cm.tn += 1.0,
        }
    }
    Ok(cm)
}

/// K-fold cross-validation of one hyper-parameter combination:
/// train with augmentation on K-1 folds, evaluate on the held-out fold
/// with original images only, and average the fold confusion matrices.
/// Row metrics are recomputed from the averaged matrix.
pub fn cross_validate(
    samples: &[TrainSample],
    hp: &Hyperparams,
    k: usize,
    seed: u64,
) -> Result<MetricsRow> {
    let labels: Vec<Class> = samples.iter().map(|s| s.label).collect();
    let folds = kfold_split(&labels, k, seed)?;
    let mut sum = ConfusionMatrix::default();
    let mut diverged = false;
    for (fi, fold) in folds.iter().enumerate() {
        let in_fold: std::collections::HashSet<usize> = fold.iter().copied().collect();
        let train_set: Vec<TrainSample> = (0..samples.len())
            .filter(|i| !in_fold.contains(i))
            .map(|i| samples[i].clone())
            .collect();
        let val_set: Vec<&TrainSample> = fold.iter().map(|&i| &samples[i]).collect();
        let mut fold_hp = hp.clone();
        fold_hp.seed = seeds::derive(hp.seed, fi as u64);
        match cnn::train(&train_set, &fold_hp) {
            Ok(outcome) => sum.add_assign(&evaluate_model(&outcome.model, &val_set)?),
            Err(Error::Divergence { .. }) => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let mut row = MetricsRow::from_cm(sum.scaled(1.0 / k as f64), hp.clone());
    if diverged {
        row.diverged = true;
        row.f2 = 0.0;
        row.f1 = 0.0;
        row.accuracy = 0.0;
        row.precision = 0.0;
        row.recall = 0.0;
    }
    Ok(row)
}

/// Random hyper-parameter search: `l` sampled combinations, each scored
/// by K-fold cross-validation on `train_set`. Returns the table and the
/// winning combination.
pub fn random_search(
    space: &SearchSpace,
    l: usize,
    k: usize,
    train_set: &[TrainSample],
    seed: u64,
) -> Result<(SearchTable, Hyperparams)> {
    if l < 1 {
        return Err(Error::InvalidInput("search needs at least one iteration".into()));
    }
    space.validate()?;
    let input = (
        1usize,
        train_set
            .first()
            .ok_or_else(|| Error::Data("search training set is empty".into()))?
            .image
            .height(),
        train_set[0].image.width(),
    );
    let mut rng = seeds::rng(seed, 2);
    let mut table = SearchTable::default();
    for i in 0..l {
        let hp = space.sample(&mut rng, input, seeds::derive(seed, 100 + i as u64))?;
        let row = cross_validate(train_set, &hp, k, seed)?;
        table.rows.push(row);
    }
    let best = table
        .best()
        .ok_or_else(|| Error::Data("all search combinations diverged".into()))?
        .hyperparams
        .clone();
    Ok((table, best))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn test_set_table_oracle() {
        // Published test-set confusion matrix and metrics.
        let cm = ConfusionMatrix::new(864.0, 163.0, 26.0, 972.0);
        assert!(close(cm.precision(), 0.856, 0.0005));
        assert!(close(cm.recall(), 0.974, 0.0005));
        assert!(close(cm.accuracy(), 0.907, 0.0005));
        assert!(close(cm.f1(), 0.911, 0.0005));
        assert!(close(cm.f2(), 0.948, 0.0005));
    }

    #[test]
    fn class_weight_table_oracle() {
        // Published validation-average rows: (cm, f2, f1, acc, p, r).
        let rows = [
            (ConfusionMatrix::new(740.6, 81.0, 36.0, 762.0), 0.944, 0.929, 0.928, 0.904, 0.955),
            (ConfusionMatrix::new(687.4, 134.2, 15.4, 782.6), 0.952, 0.913, 0.908, 0.854, 0.981),
            (ConfusionMatrix::new(638.4, 183.2, 7.0, 791.0), 0.949, 0.893, 0.883, 0.812, 0.991),
            (ConfusionMatrix::new(593.8, 227.8, 6.4, 791.6), 0.940, 0.871, 0.855, 0.777, 0.992),
        ];
        for (cm, f2, f1, acc, p, r) in rows {
            assert!(close(cm.f2(), f2, 0.0005), "f2 {} vs {f2}", cm.f2());
            assert!(close(cm.f1(), f1, 0.0005), "f1 {} vs {f1}", cm.f1());
            assert!(close(cm.accuracy(), acc, 0.0005));
            assert!(close(cm.precision(), p, 0.0005));
            assert!(close(cm.recall(), r, 0.0005));
        }
    }

    #[test]
    fn rate_oracles() {
        // Combined filter+classifier matrix.
        let combined = ConfusionMatrix::new(9288.0, 1607.0, 3.0, 110.0);
        assert!(combined.fp_rate() < 0.15);
        assert!(close(combined.fp_rate(), 0.1475, 0.0001));
        assert!(close(combined.fn_rate(), 0.0265, 0.0001));

        // Filter-only matrix.
        let filter = ConfusionMatrix::new(4507.0, 6388.0, 2.0, 111.0);
        assert!(close(filter.fn_rate(), 0.0177, 0.0001));
        assert!(close(filter.fp_rate(), 0.586, 0.001));
    }

    #[test]
    fn degenerate_cases_return_zero() {
        let cm = ConfusionMatrix::new(5.0, 0.0, 0.0, 0.0);
        assert_eq!(cm.precision(), 0.0);
        assert_eq!(cm.recall(), 0.0);
        assert_eq!(cm.f2(), 0.0);
        assert!(cm.degenerate());

        let perfect = ConfusionMatrix::new(5.0, 0.0, 0.0, 7.0);
        assert_eq!(perfect.precision(), 1.0);
        assert_eq!(perfect.recall(), 1.0);
        assert!(!perfect.degenerate());

        let no_tp = ConfusionMatrix::new(0.0, 3.0, 1.0, 0.0);
        assert_eq!(no_tp.precision(), 0.0);
    }

    #[test]
    fn f_beta_identity_and_limits() {
        // precision == recall == r implies F_beta == r for every beta.
        let cm = ConfusionMatrix::new(10.0, 5.0, 5.0, 15.0);
        assert!(close(cm.precision(), cm.recall(), 1e-12));
        for beta in [0.5, 1.0, 2.0, 7.0] {
            assert!(close(cm.f_beta(beta), cm.precision(), 1e-12));
        }

        // beta -> 0 approaches precision, beta -> inf approaches recall.
        let cm = ConfusionMatrix::new(50.0, 30.0, 10.0, 60.0);
        assert!(close(cm.f_beta(0.01), cm.precision(), 1e-2));
        assert!(close(cm.f_beta(100.0), cm.recall(), 1e-2));
    }

    fn labels(n_tc: usize, n_fc: usize) -> Vec<Class> {
        let mut v = vec![Class::Tc; n_tc];
        v.extend(vec![Class::Fc; n_fc]);
        v
    }

    #[test]
    fn kfold_partition_properties() {
        let labels = labels(6, 4);
        let folds = kfold_split(&labels, 5, 42).unwrap();
        assert_eq!(folds.len(), 5);
        for fold in &folds {
            assert_eq!(fold.len(), 2, "10 items over 5 folds");
        }
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>(), "partition covers every item once");

        // Stratification: each fold's TC count within 1 of 6/5.
        for fold in &folds {
            let tc = fold.iter().filter(|&&i| labels[i] == Class::Tc).count();
            assert!((tc as f64 - 6.0 / 5.0).abs() <= 1.0);
        }

        // Determinism.
        assert_eq!(folds, kfold_split(&labels, 5, 42).unwrap());
        assert!(kfold_split(&labels, 11, 1).is_err());
    }

    #[test]
    fn holdout_partition_properties() {
        let labels = labels(5, 5);
        let (train, test) = holdout_split(&labels, 0.2, 9);
        assert_eq!(test.len(), 2);
        assert_eq!(train.len(), 8);
        let mut all = train.clone();
        all.extend(&test);
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(holdout_split(&labels, 0.2, 9), (train, test), "seeded determinism");
    }

    #[test]
    fn search_best_breaks_ties_deterministically() {
        let hp = Hyperparams::reference(1);
        let mut t = SearchTable::default();
        let mut row_a = MetricsRow::from_cm(ConfusionMatrix::new(8.0, 2.0, 1.0, 9.0), hp.clone());
        row_a.diverged = true;
        t.rows.push(row_a);
        let row_b = MetricsRow::from_cm(ConfusionMatrix::new(8.0, 2.0, 1.0, 9.0), hp.clone());
        t.rows.push(row_b);
        let row_c = MetricsRow::from_cm(ConfusionMatrix::new(9.0, 1.0, 2.0, 8.0), hp);
        t.rows.push(row_c);
        let best = t.best().unwrap();
        assert!(!best.diverged, "diverged rows are excluded");
        assert_eq!(best.cm.fp, 2.0, "higher F2 wins");
    }

    fn toy_crops(n: usize) -> Vec<TrainSample> {
        // Trivially separable 16x16 crops: dark square vs blank.
        (0..n)
            .map(|i| {
                let mut img = crate::imaging::GrayImage::filled(16, 16, 230);
                let label = if i % 2 == 0 {
                    for r in 6..10 {
                        for c in 6..10 {
                            img.set(r, c, 20 + (i % 5) as u8);
                        }
                    }
                    Class::Tc
                } else {
                    Class::Fc
                };
                TrainSample { image: img, label }
            })
            .collect()
    }

    fn toy_hp(seed: u64) -> Hyperparams {
        Hyperparams {
            layers: vec![
                LayerSpec::Conv { filters: 2, kernel: 3 },
                LayerSpec::Relu,
                LayerSpec::MaxPool { window: 2 },
                LayerSpec::Dense { units: 4 },
                LayerSpec::Relu,
                LayerSpec::Dense { units: 1 },
                LayerSpec::Sigmoid,
            ],
            alpha: 5e-3,
            mu: 0.9,
            batch_size: 4,
            epochs: 10,
            class_weights: (1.0, 1.0),
            augment_copies: 0,
            augment: crate::cnn::AugmentRanges::default(),
            seed,
        }
    }

    #[test]
    fn cross_validate_matches_hand_rolled_cv_loop() {
        // Independent re-implementation of the CV loop: assemble the
        // folds, train per fold, evaluate held-out originals, average
        // the confusion matrices entrywise.
        let samples = toy_crops(12);
        let hp = toy_hp(3);
        let k = 3;
        let seed = 31;
        let row = cross_validate(&samples, &hp, k, seed).unwrap();

        let labels: Vec<Class> = samples.iter().map(|s| s.label).collect();
        let folds = kfold_split(&labels, k, seed).unwrap();
        let mut sum = ConfusionMatrix::default();
        for (fi, fold) in folds.iter().enumerate() {
            let train_set: Vec<TrainSample> = (0..samples.len())
                .filter(|i| !fold.contains(i))
                .map(|i| samples[i].clone())
                .collect();
            // Leakage freedom: the held-out fold never intersects the
            // training items.
            for i in fold {
                assert!(!train_set.iter().any(|s| std::ptr::eq(s, &samples[*i])));
            }
            let mut fold_hp = hp.clone();
            fold_hp.seed = crate::seeds::derive(hp.seed, fi as u64);
            let model = crate::cnn::train(&train_set, &fold_hp).unwrap().model;
            let val: Vec<&TrainSample> = fold.iter().map(|&i| &samples[i]).collect();
            sum.add_assign(&evaluate_model(&model, &val).unwrap());
        }
        let expect = sum.scaled(1.0 / k as f64);
        assert_eq!(row.cm, expect, "fold confusion matrices must match the oracle loop");
        assert!((row.f2 - expect.f2()).abs() < 1e-9, "metrics recomputable from the cm");
        assert!((row.precision - expect.precision()).abs() < 1e-9);
    }

    #[test]
    fn single_iteration_search_returns_its_only_row() {
        let samples = toy_crops(10);
        let mut space = SearchSpace::default_space();
        space.epochs = vec![2];
        space.batch_sizes = vec![4];
        space.conv_filters = vec![2];
        space.dense_units = vec![4];
        space.augment_copies = vec![0];
        let (table, best) = random_search(&space, 1, 2, &samples, 5).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.best().unwrap().hyperparams, best);
    }

    #[test]
    fn broken_step_size_diverges_with_location() {
        // A nonsensical (but validation-passing) step size drives the
        // parameters non-finite; with true-black pixels in the input the
        // next forward pass multiplies infinity by zero and the loss
        // turns NaN. Training must abort naming the epoch and batch.
        let samples: Vec<TrainSample> = toy_crops(8)
            .into_iter()
            .map(|mut s| {
                s.image.set(0, 0, 0);
                s
            })
            .collect();
        let mut hp = toy_hp(1);
        hp.alpha = f64::INFINITY;
        hp.epochs = 30;
        match crate::cnn::train(&samples, &hp) {
            Err(Error::Divergence { .. }) => {}
            Err(other) => panic!("expected divergence, got {other}"),
            Ok(_) => panic!("expected divergence, training finished"),
        }
    }

    #[test]
    fn csv_has_one_row_per_combination() {
        let hp = Hyperparams::reference(1);
        let mut t = SearchTable::default();
        t.rows.push(MetricsRow::from_cm(ConfusionMatrix::new(1.0, 2.0, 3.0, 4.0), hp));
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.lines().nth(1).unwrap().contains("conv16k3|relu|pool2"));
    }
}
