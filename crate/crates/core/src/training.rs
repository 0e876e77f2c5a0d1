//! Stochastic gradient descent on the posterior of the similarity, plus the
//! model presets used for comparison.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{CenteredView, RatingDataset};
use crate::error::{Error, Result};
use crate::evaluation::rmse;
use crate::model::{GradientSample, RegForm, Regularizer, SimilarityLayers, Variant};
use crate::nbm::{quotient, Predictor, Workspace};
use crate::similarity::{ConstraintKind, ConstraintMatrix};

/// Neighborhood size used when reporting predictions.
pub const DEFAULT_EVAL_K: usize = 200;
pub const DEFAULT_EPOCHS: usize = 200;
/// Mean of the Gaussian-Laplace prior used by the `slim` preset.
pub const DEFAULT_SLIM_MU: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub beta: f64,
    /// One strength per layer.
    pub lambdas: Vec<f64>,
    pub epochs: usize,
    pub seed: u64,
    pub variant: Variant,
    pub reg_form: RegForm,
    /// Set for the Gaussian-Laplace prior; `lambdas[0]` is then its strength.
    pub laplace_mu: Option<f64>,
    pub shuffle: bool,
    /// Neighborhood cap while training; `None` uses every rated item.
    pub neighbor_limit_train: Option<usize>,
    /// Neighborhood cap for validation and test predictions.
    pub eval_k: Option<usize>,
}

impl TrainConfig {
    pub fn validate(&self, num_layers: usize) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::Config(format!("learning rate {} must be positive", self.beta)));
        }
        if self.lambdas.iter().any(|l| !(*l >= 0.0)) {
            return Err(Error::Config(format!("regularization {:?} must be nonnegative", self.lambdas)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("at least one epoch is required".into()));
        }
        let expected = if self.laplace_mu.is_some() { 1 } else { num_layers };
        if self.lambdas.len() != expected {
            return Err(Error::Config(format!(
                "{} regularization values for {expected} layer(s)",
                self.lambdas.len()
            )));
        }
        if let Some(mu) = self.laplace_mu {
            if num_layers != 1 || !(mu >= 0.0) {
                return Err(Error::Config("the Gaussian-Laplace prior needs one layer and mu >= 0".into()));
            }
        }
        if self.neighbor_limit_train == Some(0) || self.eval_k == Some(0) {
            return Err(Error::Config("neighborhood size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn regularizer(&self) -> Regularizer {
        match self.laplace_mu {
            Some(mu) => Regularizer::GaussianLaplace {
                lambda: self.lambdas[0],
                mu,
            },
            None => Regularizer::Gaussian {
                lambdas: self.lambdas.clone(),
                form: self.reg_form,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub objective: f64,
    pub valid_rmse: f64,
    pub test_rmse: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// 1-based epoch with the lowest validation RMSE; 0 when empty.
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.records.get(self.best_epoch.checked_sub(1)?)
    }

    /// Test RMSE per epoch, falling back to validation RMSE when no test set
    /// was tracked.
    pub fn rmse_curve(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.test_rmse.unwrap_or(r.valid_rmse))
            .collect()
    }

    /// `epoch,objective,valid_rmse,test_rmse,seconds`. The seconds column is
    /// left blank unless `timings` is set, so that reruns stay byte-identical.
    pub fn write_csv(&self, mut out: impl Write, timings: bool) -> std::io::Result<()> {
        writeln!(out, "epoch,objective,valid_rmse,test_rmse,seconds")?;
        for r in &self.records {
            let test = r.test_rmse.map(|v| v.to_string()).unwrap_or_default();
            let secs = if timings { format!("{:.3}", r.seconds) } else { String::new() };
            writeln!(out, "{},{},{},{},{}", r.epoch, r.objective, r.valid_rmse, test, secs)?;
        }
        Ok(())
    }

    pub fn read_csv(input: impl BufRead) -> Result<Self> {
        let mut records = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<history>", e))?;
            if idx == 0 || line.trim().is_empty() {
                continue;
            }
            let parse_err = |what: &str| Error::Parse {
                line: idx + 1,
                message: format!("bad {what} in history row `{line}`"),
            };
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(parse_err("column count"));
            }
            let float = |s: &str, what: &str| s.parse::<f64>().map_err(|_| parse_err(what));
            records.push(EpochRecord {
                epoch: cols[0].parse().map_err(|_| parse_err("epoch"))?,
                objective: float(cols[1], "objective")?,
                valid_rmse: float(cols[2], "valid_rmse")?,
                test_rmse: if cols[3].is_empty() { None } else { Some(float(cols[3], "test_rmse")?) },
                seconds: if cols[4].is_empty() { 0.0 } else { float(cols[4], "seconds")? },
            });
        }
        let mut history = TrainHistory { records, best_epoch: 0 };
        history.best_epoch = best_epoch(&history.records);
        Ok(history)
    }
}

fn best_epoch(records: &[EpochRecord]) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for r in records {
        if best.is_none_or(|(_, v)| r.valid_rmse < v) {
            best = Some((r.epoch, r.valid_rmse));
        }
    }
    best.map_or(0, |(e, _)| e)
}

/// ½ Σ (r_ui − r̂_ui)² over the observed working ratings, for a given
/// row-major similarity matrix. Empty neighborhoods predict 0.
pub fn data_term(sim: &[f64], work: &Workspace<'_>, limit: Option<usize>) -> f64 {
    let rows = work.rows();
    let m = work.view().num_items();
    let per_user: Vec<f64> = (0..rows.num_rows())
        .into_par_iter()
        .map(|u| {
            let (items, vals) = rows.row(u);
            let mut acc = 0.0;
            for (&i, &r) in items.iter().zip(vals) {
                let i = i as usize;
                let z = quotient(&sim[i * m..(i + 1) * m], items, vals, i, limit).value();
                let pred = match work.variant() {
                    Variant::Linear => z,
                    Variant::Tanh => z.tanh(),
                };
                acc += (r - pred) * (r - pred);
            }
            acc
        })
        .collect();
    0.5 * per_user.iter().sum::<f64>()
}

/// Data term plus the prior's penalty.
pub fn objective(layers: &SimilarityLayers, work: &Workspace<'_>, reg: &Regularizer, limit: Option<usize>) -> f64 {
    data_term(&layers.effective_matrix(), work, limit) + layers.penalty(reg)
}

/// Objective of the sparse linear baseline:
/// `½ Σ (r − r̂)² + (λ/2) Σ ‖S_i‖² − λ μ Σ ‖S_i‖₁`.
pub fn slim_variant_objective(single: &SimilarityLayers, work: &Workspace<'_>, lambda: f64, mu: f64) -> f64 {
    objective(single, work, &Regularizer::GaussianLaplace { lambda, mu }, None)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpochStats {
    /// ½ Σ e² accumulated sample by sample during the pass.
    pub running_loss: f64,
    pub updates: usize,
    /// Samples whose neighborhood carried no weight.
    pub skipped: usize,
}

/// Visiting order of the `n` training samples in `epoch` (1-based). Epoch
/// orders use ChaCha stream `epoch`; stream 0 is left to initialization.
pub fn epoch_order(n: usize, seed: u64, epoch: usize, shuffle: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if shuffle {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(epoch as u64);
        order.shuffle(&mut rng);
    }
    order
}

/// `(user, item)` for every observed training rating, user-major.
pub fn training_samples(work: &Workspace<'_>) -> Vec<(u32, u32)> {
    work.rows().iter().map(|(u, i, _)| (u as u32, i)).collect()
}

/// Error from one pass, with the failing sample's position in the pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochFailure {
    pub sample: usize,
}

/// One pass of point-wise updates over every training rating.
pub fn sgd_epoch(
    layers: &mut SimilarityLayers,
    work: &Workspace<'_>,
    config: &TrainConfig,
    epoch: usize,
) -> std::result::Result<EpochStats, EpochFailure> {
    let samples = training_samples(work);
    let reg = config.regularizer();
    let mut stats = EpochStats::default();
    let mut sample = GradientSample::default();
    for (pos, k) in epoch_order(samples.len(), config.seed, epoch, config.shuffle)
        .into_iter()
        .enumerate()
    {
        let (u, i) = samples[k];
        layers.fill_gradient(work.rows(), u as usize, i as usize, config.neighbor_limit_train, &mut sample);
        stats.running_loss += 0.5 * sample.error * sample.error;
        if sample.is_empty() {
            stats.skipped += 1;
            continue;
        }
        layers
            .apply_update(&sample, config.beta, &reg)
            .map_err(|_| EpochFailure { sample: pos })?;
        stats.updates += 1;
    }
    if !stats.running_loss.is_finite() {
        return Err(EpochFailure { sample: samples.len() });
    }
    Ok(stats)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Model at the epoch with the lowest validation RMSE.
    pub best: SimilarityLayers,
    pub history: TrainHistory,
}

/// Runs `config.epochs` passes, scoring validation and test RMSE after each,
/// and keeps the model with the best validation RMSE.
pub fn train(
    mut layers: SimilarityLayers,
    work: &Workspace<'_>,
    valid: &RatingDataset,
    test: &RatingDataset,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate(layers.num_layers())?;
    if layers.variant() != work.variant() {
        return Err(Error::Config("model variant and workspace variant differ".into()));
    }
    if valid.is_empty() {
        return Err(Error::Config("training needs a nonempty validation set".into()));
    }
    let reg = config.regularizer();
    let mut history = TrainHistory::default();
    let mut best = layers.clone();
    let mut best_valid = f64::INFINITY;

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        if let Err(failure) = sgd_epoch(&mut layers, work, config, epoch) {
            return Err(Error::Diverged {
                epoch,
                sample: failure.sample,
                history: Box::new(history),
            });
        }
        let sim = layers.effective_matrix();
        let objective = data_term(&sim, work, config.neighbor_limit_train) + layers.penalty(&reg);
        let predictor = Predictor::new(work, &sim, config.eval_k);
        let valid_rmse = rmse(&predictor, valid)?.rmse;
        let test_rmse = if test.is_empty() { None } else { Some(rmse(&predictor, test)?.rmse) };
        if !objective.is_finite() || !valid_rmse.is_finite() {
            return Err(Error::Diverged {
                epoch,
                sample: 0,
                history: Box::new(history),
            });
        }
        history.records.push(EpochRecord {
            epoch,
            objective,
            valid_rmse,
            test_rmse,
            seconds: started.elapsed().as_secs_f64(),
        });
        if valid_rmse < best_valid {
            best_valid = valid_rmse;
            best = layers.clone();
            history.best_epoch = epoch;
        }
    }
    Ok(TrainOutcome { best, history })
}

/// The compared models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    RegSim,
    Slim,
    Pcc,
    Cos,
    Pnbm,
    Mpnbm,
    TanhMpnbm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::RegSim,
        ModelKind::Slim,
        ModelKind::Pcc,
        ModelKind::Cos,
        ModelKind::Pnbm,
        ModelKind::Mpnbm,
        ModelKind::TanhMpnbm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::RegSim => "regsim",
            ModelKind::Slim => "slim",
            ModelKind::Pcc => "pcc",
            ModelKind::Cos => "cos",
            ModelKind::Pnbm => "pnbm",
            ModelKind::Mpnbm => "mpnbm",
            ModelKind::TanhMpnbm => "tanh-mpnbm",
        }
    }

    pub fn is_learned(self) -> bool {
        !matches!(self, ModelKind::Pcc | ModelKind::Cos)
    }

    /// Constraint kind and importance of each layer of a learned model.
    pub fn layer_plan(self) -> Vec<(ConstraintKind, f64)> {
        match self {
            ModelKind::Mpnbm | ModelKind::TanhMpnbm => vec![
                (ConstraintKind::Ones, 3.0),
                (ConstraintKind::Pearson, 1.0),
                (ConstraintKind::Jaccard, 1.0),
            ],
            ModelKind::RegSim | ModelKind::Slim | ModelKind::Pnbm => vec![(ConstraintKind::Ones, 1.0)],
            ModelKind::Pcc | ModelKind::Cos => Vec::new(),
        }
    }

    /// Preset hyperparameters. Static models get a config too; only
    /// `eval_k` matters for them.
    pub fn profile(self) -> TrainConfig {
        let base = TrainConfig {
            beta: 0.1,
            lambdas: vec![0.01],
            epochs: DEFAULT_EPOCHS,
            seed: 0,
            variant: Variant::Linear,
            reg_form: RegForm::Omega,
            laplace_mu: None,
            shuffle: true,
            neighbor_limit_train: None,
            eval_k: Some(DEFAULT_EVAL_K),
        };
        match self {
            ModelKind::RegSim | ModelKind::Pnbm | ModelKind::Pcc | ModelKind::Cos => base,
            ModelKind::Slim => TrainConfig {
                beta: 0.4,
                lambdas: vec![0.02],
                laplace_mu: Some(DEFAULT_SLIM_MU),
                ..base
            },
            ModelKind::Mpnbm => TrainConfig {
                beta: 0.2,
                lambdas: vec![0.05; 3],
                ..base
            },
            ModelKind::TanhMpnbm => TrainConfig {
                beta: 0.4,
                lambdas: vec![0.05; 3],
                variant: Variant::Tanh,
                ..base
            },
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::Config(format!("unsupported model kind `{s}`")))
    }
}

/// Constraint matrices of one training partition, built on first use.
pub struct Constraints<'a> {
    train: &'a RatingDataset,
    view: &'a CenteredView,
    built: HashMap<ConstraintKind, Arc<ConstraintMatrix>>,
}

impl<'a> Constraints<'a> {
    pub fn new(train: &'a RatingDataset, view: &'a CenteredView) -> Self {
        Constraints {
            train,
            view,
            built: HashMap::new(),
        }
    }

    pub fn get(&mut self, kind: ConstraintKind) -> Arc<ConstraintMatrix> {
        let (train, view) = (self.train, self.view);
        self.built
            .entry(kind)
            .or_insert_with(|| Arc::new(kind.build(train, view)))
            .clone()
    }
}

#[derive(Debug, Clone)]
pub enum Model {
    /// Fixed correlation similarity.
    Static(Arc<ConstraintMatrix>),
    /// Learned similarity, initialized and ready for [`train`].
    Learned(SimilarityLayers),
}

impl Model {
    /// Row-major effective similarity.
    pub fn similarity(&self) -> Vec<f64> {
        match self {
            Model::Static(m) => m.as_slice().to_vec(),
            Model::Learned(l) => l.effective_matrix(),
        }
    }

    pub fn variant(&self) -> Variant {
        match self {
            Model::Static(_) => Variant::Linear,
            Model::Learned(l) => l.variant(),
        }
    }
}

/// Builds the model of `kind` over a training partition. Learned bases are
/// initialized from `seed`; `variant` overrides the preset's variant.
pub fn make_baseline(kind: ModelKind, constraints: &mut Constraints<'_>, variant: Variant, seed: u64) -> Result<Model> {
    Ok(match kind {
        ModelKind::Pcc => Model::Static(constraints.get(ConstraintKind::Pearson)),
        ModelKind::Cos => Model::Static(constraints.get(ConstraintKind::Cosine)),
        learned => {
            let spec = learned
                .layer_plan()
                .into_iter()
                .map(|(k, phi)| (constraints.get(k), phi))
                .collect();
            let mut layers = SimilarityLayers::new(variant, spec)?;
            layers.init_uniform(seed);
            Model::Learned(layers)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{center, split, SplitSpec};
    use crate::synthetic::planted_clusters;

    fn config(beta: f64, epochs: usize) -> TrainConfig {
        TrainConfig {
            beta,
            epochs,
            eval_k: None,
            ..ModelKind::RegSim.profile()
        }
    }

    fn fixture_view() -> CenteredView {
        center(&planted_clusters(20, 10, 2, 5)).unwrap()
    }

    #[test]
    fn zero_model_objective() {
        let view = fixture_view();
        let work = Workspace::new(&view, Variant::Linear).unwrap();
        let layers = SimilarityLayers::single(Variant::Linear, view.num_items());
        let reg = config(0.1, 1).regularizer();
        let sum_sq: f64 = view.by_user().values().iter().map(|r| r * r).sum();
        assert!((objective(&layers, &work, &reg, None) - 0.5 * sum_sq).abs() < 1e-12);
        assert_eq!(layers.penalty(&reg), 0.0);
    }

    #[test]
    fn hand_computed_objective() {
        // two users, two items, all rated:
        //   u0: i0 = 5, i1 = 3      u1: i0 = 3, i1 = 1
        // means 4 and 2, centered u0 (+1, +1), u1 (−1, −1)
        let d = RatingDataset::new(
            vec![
                crate::data::Rating { user: 0, item: 0, value: 5.0 },
                crate::data::Rating { user: 0, item: 1, value: 3.0 },
                crate::data::Rating { user: 1, item: 0, value: 3.0 },
                crate::data::Rating { user: 1, item: 1, value: 1.0 },
            ],
            2,
            2,
            1.0,
            5.0,
        )
        .unwrap();
        let view = center(&d).unwrap();
        let work = Workspace::new(&view, Variant::Linear).unwrap();
        let mut layers = SimilarityLayers::single(Variant::Linear, 2);
        // s01 = -0.5: every prediction is the negated neighbor, residual 2 each
        layers.set_gamma(0, 0, 1, -0.5);
        let reg = Regularizer::Gaussian {
            lambdas: vec![0.1],
            form: RegForm::Omega,
        };
        // data ½ · 4 · 2² = 8, penalty ½ · 0.1 · 2 · 0.25 = 0.025
        assert!((objective(&layers, &work, &reg, None) - 8.025).abs() < 1e-12);
        // positive similarity: perfect fit, only the penalty remains
        layers.set_gamma(0, 0, 1, 0.5);
        assert!((objective(&layers, &work, &reg, None) - 0.025).abs() < 1e-12);
    }

    #[test]
    fn zero_step_leaves_model_unchanged() {
        let view = fixture_view();
        let work = Workspace::new(&view, Variant::Linear).unwrap();
        let mut layers = SimilarityLayers::single(Variant::Linear, view.num_items());
        layers.init_uniform(1);
        let before = layers.checkpoint();
        let mut cfg = config(1.0, 1);
        cfg.beta = 0.0;
        sgd_epoch(&mut layers, &work, &cfg, 1).unwrap();
        assert_eq!(layers.checkpoint(), before);
    }

    #[test]
    fn same_seed_same_model() {
        let view = fixture_view();
        let work = Workspace::new(&view, Variant::Linear).unwrap();
        let run = || {
            let mut layers = SimilarityLayers::single(Variant::Linear, view.num_items());
            layers.init_uniform(4);
            for e in 1..=3 {
                sgd_epoch(&mut layers, &work, &config(0.1, 3), e).unwrap();
            }
            layers.checkpoint()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn learning_beats_zero_model_on_planted_structure() {
        let ds = planted_clusters(20, 10, 2, 11);
        let s = split(&ds, &SplitSpec { train_frac: 0.8, valid_frac: 0.2, test_frac: 0.0, seed: 2 }).unwrap();
        let view = center(&s.train).unwrap();
        let work = Workspace::new(&view, Variant::Linear).unwrap();
        let mut layers = SimilarityLayers::single(Variant::Linear, view.num_items());
        layers.init_uniform(3);
        let cfg = config(0.1, 50);
        let out = train(layers, &work, &s.valid, &s.test, &cfg).unwrap();

        let zero = vec![0.0; view.num_items() * view.num_items()];
        let zero_rmse = rmse(&Predictor::new(&work, &zero, None), &s.valid).unwrap().rmse;
        let last = out.history.records.last().unwrap().valid_rmse;
        assert!(last < zero_rmse, "{last} vs zero model {zero_rmse}");
        assert_eq!(out.history.records.len(), 50);
        assert!(out.history.records[9].objective < out.history.records[0].objective);
    }

    #[test]
    fn single_epoch_history() {
        let ds = planted_clusters(20, 10, 2, 11);
        let s = split(&ds, &SplitSpec::standard(1)).unwrap();
        let view = center(&s.train).unwrap();
        let work = Workspace::new(&view, Variant::Linear).unwrap();
        let mut layers = SimilarityLayers::single(Variant::Linear, view.num_items());
        layers.init_uniform(3);
        let out = train(layers, &work, &s.valid, &s.test, &config(0.1, 1)).unwrap();
        assert_eq!(out.history.records.len(), 1);
        assert_eq!(out.history.best_epoch, 1);
    }

    #[test]
    fn slim_with_zero_mu_matches_gaussian() {
        let view = fixture_view();
        let work = Workspace::new(&view, Variant::Linear).unwrap();
        let mut layers = SimilarityLayers::single(Variant::Linear, view.num_items());
        layers.init_uniform(8);
        let gaussian = Regularizer::Gaussian {
            lambdas: vec![0.02],
            form: RegForm::OmegaSquared,
        };
        let a = slim_variant_objective(&layers, &work, 0.02, 0.0);
        let b = objective(&layers, &work, &gaussian, None);
        assert!((a - b).abs() < 1e-12);
        let zero = SimilarityLayers::single(Variant::Linear, view.num_items());
        assert_eq!(
            slim_variant_objective(&zero, &work, 0.02, 0.3),
            data_term(&zero.effective_matrix(), &work, None)
        );
    }

    #[test]
    fn presets() {
        let d = planted_clusters(20, 10, 2, 1);
        let view = center(&d).unwrap();
        let mut c = Constraints::new(&d, &view);
        match make_baseline(ModelKind::Pnbm, &mut c, Variant::Linear, 0).unwrap() {
            Model::Learned(l) => {
                assert_eq!(l.num_layers(), 1);
                assert_eq!(l.layers()[0].omega().kind(), ConstraintKind::Ones);
                assert_eq!(l.layers()[0].phi(), 1.0);
            }
            Model::Static(_) => panic!("pnbm is learned"),
        }
        match make_baseline(ModelKind::Mpnbm, &mut c, Variant::Linear, 0).unwrap() {
            Model::Learned(l) => {
                let kinds: Vec<_> = l.layers().iter().map(|x| (x.omega().kind(), x.phi())).collect();
                assert_eq!(
                    kinds,
                    vec![
                        (ConstraintKind::Ones, 3.0),
                        (ConstraintKind::Pearson, 1.0),
                        (ConstraintKind::Jaccard, 1.0)
                    ]
                );
            }
            Model::Static(_) => panic!("mpnbm is learned"),
        }
        assert!(matches!(
            make_baseline(ModelKind::Pcc, &mut c, Variant::Linear, 0).unwrap(),
            Model::Static(m) if m.kind() == ConstraintKind::Pearson
        ));
        let p = ModelKind::Mpnbm.profile();
        assert_eq!((p.beta, p.lambdas.clone(), p.eval_k), (0.2, vec![0.05; 3], Some(200)));
        let p = ModelKind::TanhMpnbm.profile();
        assert_eq!((p.beta, p.variant), (0.4, Variant::Tanh));
        let p = ModelKind::Slim.profile();
        assert_eq!((p.beta, p.lambdas), (0.4, vec![0.02]));
        assert_eq!(ModelKind::RegSim.profile().beta, 0.1);
        assert!("bogus".parse::<ModelKind>().is_err());
        assert_eq!("tanh_mpnbm".parse::<ModelKind>().unwrap(), ModelKind::TanhMpnbm);
    }

    #[test]
    fn history_csv_round_trip() {
        let history = TrainHistory {
            records: vec![
                EpochRecord { epoch: 1, objective: 10.5, valid_rmse: 0.95, test_rmse: Some(0.97), seconds: 1.0 },
                EpochRecord { epoch: 2, objective: 9.25, valid_rmse: 0.9, test_rmse: None, seconds: 1.0 },
            ],
            best_epoch: 2,
        };
        let mut buf = Vec::new();
        history.write_csv(&mut buf, false).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().nth(2).unwrap(), "2,9.25,0.9,,");
        let back = TrainHistory::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.best_epoch, 2);
        assert_eq!(back.records[0].test_rmse, Some(0.97));
    }
}
