//! Accuracy and stability metrics, and the experiment protocols built on them.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{center, split, Rating, RatingDataset, SplitSpec};
use crate::error::{Error, Result};
use crate::nbm::{Predictor, Workspace};
use crate::training::{make_baseline, train, Constraints, Model, ModelKind, TrainConfig, TrainHistory};

/// RMSE values closer than this are treated as equal.
pub const STABILITY_TOL: f64 = 1e-4;
pub const STABILITY_BUDGET: usize = 200;
/// A minimum still in place at the end of the budget counts as converged
/// only after holding for this many epochs.
pub const MIN_PLATEAU: usize = 10;
pub const MIN_SLICE_USERS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmseReport {
    pub rmse: f64,
    pub count: usize,
    /// Predictions that had to be clamped to the rating scale.
    pub clamped: usize,
    /// Largest `|raw|` seen, in working space.
    pub max_abs_raw: f64,
}

/// Root mean squared error on the original rating scale.
pub fn rmse(predictor: &Predictor<'_>, test: &RatingDataset) -> Result<RmseReport> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let scored: Vec<(f64, bool, f64)> = test
        .triplets()
        .par_iter()
        .map(|r| {
            let p = predictor.predict(r.user as usize, r.item as usize);
            let e = p.rating - r.value;
            (e * e, p.clamped, p.raw.abs())
        })
        .collect();
    let mut sum = 0.0;
    let mut clamped = 0;
    let mut max_abs_raw: f64 = 0.0;
    for &(sq, c, raw) in &scored {
        sum += sq;
        clamped += c as usize;
        max_abs_raw = max_abs_raw.max(raw);
    }
    Ok(RmseReport {
        rmse: (sum / scored.len() as f64).sqrt(),
        count: scored.len(),
        clamped,
        max_abs_raw,
    })
}

/// Relative improvement over the baseline, in percent. Equal errors are 0
/// even when the baseline is perfect.
pub fn inc_percent(baseline_rmse: f64, rmse: f64) -> f64 {
    if baseline_rmse == rmse {
        return 0.0;
    }
    100.0 * (baseline_rmse - rmse) / baseline_rmse
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stability {
    /// First epoch (1-based) at the best RMSE.
    pub epsilon: usize,
    /// Consecutive epochs, from `epsilon`, that stay at the best RMSE.
    pub zeta: usize,
    /// The run at the best RMSE lasts to the end of the budget, so `zeta` is
    /// a lower bound.
    pub censored: bool,
    /// False when a censored minimum has held for fewer than
    /// [`MIN_PLATEAU`] epochs, i.e. the model was still improving.
    pub converged: bool,
}

/// Convergence epoch and plateau length of an RMSE curve; values within `tol`
/// of each other are equal. Only the first `budget` epochs are considered.
pub fn stability(history: &[f64], tol: f64, budget: usize) -> Option<Stability> {
    let curve = &history[..history.len().min(budget)];
    let best = curve.iter().copied().reduce(f64::min)?;
    let at_best = |x: f64| (x - best).abs() <= tol;
    let first = curve.iter().position(|&x| at_best(x))?;
    let zeta = curve[first..].iter().take_while(|&&x| at_best(x)).count();
    let censored = first + zeta == curve.len();
    Some(Stability {
        epsilon: first + 1,
        zeta,
        censored,
        converged: !censored || zeta >= MIN_PLATEAU,
    })
}

/// Whether repeats reuse one split with different training seeds, or draw a
/// fresh split per repeat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepeatMode {
    Splits,
    Seeds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ModelKind,
    pub config: TrainConfig,
    pub fractions: (f64, f64, f64),
}

impl ExperimentSpec {
    /// The preset for `kind` with the standard split and an epoch budget.
    pub fn preset(kind: ModelKind, epochs: usize) -> Self {
        ExperimentSpec {
            kind,
            config: TrainConfig {
                epochs,
                ..kind.profile()
            },
            fractions: (0.85, 0.05, 0.10),
        }
    }

    fn split_spec(&self, seed: u64) -> SplitSpec {
        SplitSpec {
            train_frac: self.fractions.0,
            valid_frac: self.fractions.1,
            test_frac: self.fractions.2,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub split_seed: u64,
    pub train_seed: u64,
    pub test_rmse: f64,
    pub valid_rmse: f64,
    pub clamped: usize,
    pub max_abs_raw: f64,
    pub stability: Option<Stability>,
    pub history: Option<TrainHistory>,
}

/// Split, build, train (learned models only) and score on the test set.
pub fn run_once(spec: &ExperimentSpec, dataset: &RatingDataset, split_seed: u64, train_seed: u64) -> Result<RunResult> {
    let parts = split(dataset, &spec.split_spec(split_seed))?;
    let view = center(&parts.train)?;
    let mut constraints = Constraints::new(&parts.train, &view);
    let model = make_baseline(spec.kind, &mut constraints, spec.config.variant, train_seed)?;
    let work = Workspace::new(&view, model.variant())?;

    let (sim, history) = match model {
        Model::Static(m) => (m.as_slice().to_vec(), None),
        Model::Learned(layers) => {
            let config = TrainConfig {
                seed: train_seed,
                ..spec.config.clone()
            };
            let out = train(layers, &work, &parts.valid, &parts.test, &config)?;
            (out.best.effective_matrix(), Some(out.history))
        }
    };
    let predictor = Predictor::new(&work, &sim, spec.config.eval_k);
    let test = rmse(&predictor, &parts.test)?;
    let valid_rmse = if parts.valid.is_empty() {
        f64::NAN
    } else {
        rmse(&predictor, &parts.valid)?.rmse
    };
    let stability = history
        .as_ref()
        .and_then(|h| stability(&h.rmse_curve(), STABILITY_TOL, STABILITY_BUDGET));
    Ok(RunResult {
        split_seed,
        train_seed,
        test_rmse: test.rmse,
        valid_rmse,
        clamped: test.clamped,
        max_abs_raw: test.max_abs_raw,
        stability,
        history,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_kind: ModelKind,
    /// Mean test RMSE over successful repeats.
    pub rmse: f64,
    pub baseline: Option<String>,
    pub inc_percent: Option<f64>,
    pub epsilon: Option<usize>,
    pub zeta: Option<usize>,
    pub censored: bool,
    pub repeats: usize,
    /// Test RMSE per repeat; `None` marks a failed repeat.
    pub per_repeat: Vec<Option<f64>>,
    #[serde(skip)]
    pub runs: Vec<RunResult>,
}

impl EvalReport {
    pub fn with_baseline(mut self, name: &str, baseline_rmse: f64) -> Self {
        self.baseline = Some(name.to_string());
        self.inc_percent = Some(inc_percent(baseline_rmse, self.rmse));
        self
    }
}

/// `n_repeats` independent runs with seeds derived from `base_seed`.
pub fn repeat_protocol(
    spec: &ExperimentSpec,
    dataset: &RatingDataset,
    n_repeats: usize,
    base_seed: u64,
    mode: RepeatMode,
) -> Result<EvalReport> {
    if n_repeats == 0 {
        return Err(Error::Config("at least one repeat is required".into()));
    }
    let outcomes: Vec<Result<RunResult>> = (0..n_repeats as u64)
        .into_par_iter()
        .map(|r| {
            let train_seed = base_seed.wrapping_add(r);
            let split_seed = match mode {
                RepeatMode::Splits => train_seed,
                RepeatMode::Seeds => base_seed,
            };
            run_once(spec, dataset, split_seed, train_seed)
        })
        .collect();

    let mut runs = Vec::new();
    let mut per_repeat = Vec::with_capacity(n_repeats);
    let mut last_err = None;
    for outcome in outcomes {
        match outcome {
            Ok(run) => {
                per_repeat.push(Some(run.test_rmse));
                runs.push(run);
            }
            Err(e @ Error::Diverged { .. }) => {
                per_repeat.push(None);
                last_err = Some(e);
            }
            Err(other) => return Err(other),
        }
    }
    if runs.is_empty() {
        return Err(last_err.unwrap_or(Error::EmptyDataset));
    }
    let mean = runs.iter().map(|r| r.test_rmse).sum::<f64>() / runs.len() as f64;
    let stab = runs[0].stability;
    Ok(EvalReport {
        model_kind: spec.kind,
        rmse: mean,
        baseline: None,
        inc_percent: None,
        epsilon: stab.map(|s| s.epsilon),
        zeta: stab.map(|s| s.zeta),
        censored: stab.is_some_and(|s| s.censored),
        repeats: n_repeats,
        per_repeat,
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySlice {
    pub index: usize,
    /// Per-user rating counts covered by the slice.
    pub min_user_ratings: usize,
    pub max_user_ratings: usize,
    pub users: usize,
    pub items: usize,
    pub ratings: usize,
    pub density: f64,
    pub reports: Vec<EvalReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub slices: Vec<DensitySlice>,
    /// `(slice index, reason)` for slices that were not evaluated.
    pub skipped: Vec<(usize, String)>,
}

/// Users ordered by rating count and cut into `n_slices` equal-population
/// buckets; each bucket's ratings form a dataset with compacted indices.
pub fn density_slices(dataset: &RatingDataset, n_slices: usize) -> Result<Vec<(usize, usize, RatingDataset)>> {
    if n_slices == 0 {
        return Err(Error::Config("at least one slice is required".into()));
    }
    let mut counts = vec![0usize; dataset.num_users()];
    for r in dataset.triplets() {
        counts[r.user as usize] += 1;
    }
    let mut users: Vec<usize> = (0..dataset.num_users()).filter(|&u| counts[u] > 0).collect();
    users.sort_by_key(|&u| (counts[u], u));

    let mut slice_of = vec![usize::MAX; dataset.num_users()];
    let total = users.len();
    let mut bounds = Vec::with_capacity(n_slices);
    for s in 0..n_slices {
        let (lo, hi) = (s * total / n_slices, (s + 1) * total / n_slices);
        for &u in &users[lo..hi] {
            slice_of[u] = s;
        }
        bounds.push((lo, hi));
    }

    let mut per_slice: Vec<Vec<Rating>> = vec![Vec::new(); n_slices];
    for r in dataset.triplets() {
        per_slice[slice_of[r.user as usize]].push(*r);
    }

    let mut out = Vec::with_capacity(n_slices);
    for (s, ratings) in per_slice.into_iter().enumerate() {
        let (lo, hi) = bounds[s];
        let (min_c, max_c) = if lo < hi { (counts[users[lo]], counts[users[hi - 1]]) } else { (0, 0) };
        out.push((min_c, max_c, compact(dataset, ratings)?));
    }
    Ok(out)
}

/// Renumbers users and items of a rating subset to contiguous ranges.
fn compact(parent: &RatingDataset, ratings: Vec<Rating>) -> Result<RatingDataset> {
    let mut user_map = vec![u32::MAX; parent.num_users()];
    let mut item_map = vec![u32::MAX; parent.num_items()];
    let mut seen_users: Vec<u32> = ratings.iter().map(|r| r.user).collect();
    let mut seen_items: Vec<u32> = ratings.iter().map(|r| r.item).collect();
    seen_users.sort_unstable();
    seen_users.dedup();
    seen_items.sort_unstable();
    seen_items.dedup();
    for (k, &u) in seen_users.iter().enumerate() {
        user_map[u as usize] = k as u32;
    }
    for (k, &i) in seen_items.iter().enumerate() {
        item_map[i as usize] = k as u32;
    }
    let triplets = ratings
        .into_iter()
        .map(|r| Rating {
            user: user_map[r.user as usize],
            item: item_map[r.item as usize],
            value: r.value,
        })
        .collect();
    RatingDataset::new(
        triplets,
        seen_users.len(),
        seen_items.len(),
        parent.scale_min(),
        parent.scale_max(),
    )
}

/// Evaluates every spec on every viable density slice.
pub fn density_sweep(
    dataset: &RatingDataset,
    n_slices: usize,
    specs: &[ExperimentSpec],
    n_repeats: usize,
    base_seed: u64,
) -> Result<SweepOutcome> {
    let mut slices = Vec::new();
    let mut skipped = Vec::new();
    for (index, (min_c, max_c, ds)) in density_slices(dataset, n_slices)?.into_iter().enumerate() {
        if ds.num_users() < MIN_SLICE_USERS {
            skipped.push((index, format!("{} users, need {MIN_SLICE_USERS}", ds.num_users())));
            continue;
        }
        let mut reports = Vec::with_capacity(specs.len());
        let mut failed = None;
        for spec in specs {
            match repeat_protocol(spec, &ds, n_repeats, base_seed, RepeatMode::Splits) {
                Ok(r) => reports.push(r),
                Err(e) => {
                    failed = Some(e.to_string());
                    break;
                }
            }
        }
        if let Some(reason) = failed {
            skipped.push((index, reason));
            continue;
        }
        slices.push(DensitySlice {
            index,
            min_user_ratings: min_c,
            max_user_ratings: max_c,
            users: ds.num_users(),
            items: ds.num_items(),
            ratings: ds.len(),
            density: ds.density(),
            reports,
        });
    }
    Ok(SweepOutcome { slices, skipped })
}

/// Aligned text table with an INC% column.
pub fn render_table(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>8} {:>8} {:>6} {:>6} {:>8}",
        "model", "RMSE", "INC%", "eps", "zeta", "repeats"
    );
    for r in reports {
        let inc = r.inc_percent.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
        let eps = r.epsilon.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
        let zeta = match r.zeta {
            Some(z) if r.censored => format!(">={z}"),
            Some(z) => z.to_string(),
            None => "-".into(),
        };
        let _ = writeln!(
            out,
            "{:<12} {:>8.4} {:>8} {:>6} {:>6} {:>8}",
            r.model_kind.name(),
            r.rmse,
            inc,
            eps,
            zeta,
            r.repeats
        );
    }
    out
}
