//! Neighborhood prediction from a similarity row.
//!
//! All functions take the similarity row `S_i` of the target item and the
//! target user's sparse rating row. The target item itself is always left out
//! of the neighborhood.

use std::borrow::Cow;

use crate::data::{CenteredView, SparseRows, UnitMap};
use crate::error::Result;
use crate::model::Variant;
use crate::similarity::strongest;

/// Weighted sums `(Σ s_ij r_uj, Σ |s_ij|)` over the chosen neighborhood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quotient {
    pub num: f64,
    pub den: f64,
}

impl Quotient {
    /// The centered prediction, 0 when the denominator vanishes.
    pub fn value(&self) -> f64 {
        if self.den == 0.0 {
            0.0
        } else {
            self.num / self.den
        }
    }
}

/// Positions within `items` that form the neighborhood of `exclude`, in
/// ascending item order.
pub fn neighborhood(s_row: &[f64], items: &[u32], exclude: usize, limit: Option<usize>) -> Vec<usize> {
    let candidates = items
        .iter()
        .enumerate()
        .filter(|&(_, &j)| j as usize != exclude);
    match limit {
        Some(k) if k < items.len() => {
            let ranked: Vec<(usize, f64)> = candidates.map(|(p, &j)| (p, s_row[j as usize])).collect();
            let mut picked: Vec<usize> = strongest(ranked, k).into_iter().map(|(p, _)| p).collect();
            picked.sort_unstable();
            picked
        }
        _ => candidates.map(|(p, _)| p).collect(),
    }
}

pub fn quotient(s_row: &[f64], items: &[u32], vals: &[f64], exclude: usize, limit: Option<usize>) -> Quotient {
    let (mut num, mut den) = (0.0, 0.0);
    match limit {
        None => {
            for (&j, &r) in items.iter().zip(vals) {
                if j as usize != exclude {
                    let s = s_row[j as usize];
                    num += s * r;
                    den += s.abs();
                }
            }
        }
        Some(_) => {
            for p in neighborhood(s_row, items, exclude, limit) {
                let s = s_row[items[p] as usize];
                num += s * vals[p];
                den += s.abs();
            }
        }
    }
    Quotient { num, den }
}

/// `S_i R_u^- / |S_i| I_u^-` over the user's rated items other than `item`.
pub fn predict_centered(s_row: &[f64], rows: &SparseRows, user: usize, item: usize, limit: Option<usize>) -> f64 {
    let (items, vals) = rows.row(user);
    quotient(s_row, items, vals, item, limit).value()
}

/// Item mean plus the centered prediction, clamped to the rating scale.
pub fn predict_rating(s_row: &[f64], view: &CenteredView, user: usize, item: usize, limit: Option<usize>) -> f64 {
    let raw = view.item_mean(item) + predict_centered(s_row, view.by_user(), user, item, limit);
    view.clamp(raw)
}

/// Hyperbolic tangent of the centered quotient, computed over unit-mapped
/// ratings (see [`CenteredView::unit_rows`]).
pub fn predict_tanh(s_row: &[f64], unit_rows: &SparseRows, user: usize, item: usize, limit: Option<usize>) -> f64 {
    predict_centered(s_row, unit_rows, user, item, limit).tanh()
}

/// Maps a tanh-model output back to the rating scale.
pub fn tanh_to_rating(raw: f64, map: &UnitMap, view: &CenteredView, item: usize) -> f64 {
    view.clamp(view.item_mean(item) + map.inverse(raw))
}

/// Training ratings in the space a model variant works in: centered for the
/// linear model, centered and unit-mapped for the tanh model.
#[derive(Debug, Clone)]
pub struct Workspace<'v> {
    view: &'v CenteredView,
    variant: Variant,
    rows: Cow<'v, SparseRows>,
    unit: Option<UnitMap>,
}

impl<'v> Workspace<'v> {
    pub fn new(view: &'v CenteredView, variant: Variant) -> Result<Self> {
        Ok(match variant {
            Variant::Linear => Workspace {
                view,
                variant,
                rows: Cow::Borrowed(view.by_user()),
                unit: None,
            },
            Variant::Tanh => Workspace {
                view,
                variant,
                rows: Cow::Owned(view.unit_rows()?),
                unit: Some(view.unit_map()?),
            },
        })
    }

    pub fn view(&self) -> &'v CenteredView {
        self.view
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Per-user working ratings.
    pub fn rows(&self) -> &SparseRows {
        &self.rows
    }

    /// Model output for `(user, item)` in working space.
    pub fn raw(&self, s_row: &[f64], user: usize, item: usize, limit: Option<usize>) -> f64 {
        let z = predict_centered(s_row, &self.rows, user, item, limit);
        match self.variant {
            Variant::Linear => z,
            Variant::Tanh => z.tanh(),
        }
    }

    /// Rating-scale value of a working-space output, before clamping.
    pub fn unclamped_rating(&self, raw: f64, item: usize) -> f64 {
        let centered = match self.unit {
            Some(map) => map.inverse(raw),
            None => raw,
        };
        self.view.item_mean(item) + centered
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// Working-space output; inside (-1, 1) for the tanh model.
    pub raw: f64,
    /// Reported rating, clamped to the dataset scale.
    pub rating: f64,
    pub clamped: bool,
}

/// A full similarity matrix paired with a workspace.
#[derive(Debug, Clone)]
pub struct Predictor<'a> {
    work: &'a Workspace<'a>,
    sim: &'a [f64],
    limit: Option<usize>,
}

impl<'a> Predictor<'a> {
    /// `sim` is the row-major `M x M` similarity; `limit` caps the
    /// neighborhood to the strongest `k` rated items.
    pub fn new(work: &'a Workspace<'a>, sim: &'a [f64], limit: Option<usize>) -> Self {
        let m = work.view.num_items();
        assert_eq!(sim.len(), m * m, "similarity matrix must be {m}x{m}");
        Predictor { work, sim, limit }
    }

    pub fn workspace(&self) -> &Workspace<'a> {
        self.work
    }

    pub fn row(&self, item: usize) -> &[f64] {
        let m = self.work.view.num_items();
        &self.sim[item * m..(item + 1) * m]
    }

    pub fn predict(&self, user: usize, item: usize) -> Prediction {
        let raw = self.work.raw(self.row(item), user, item, self.limit);
        let unclamped = self.work.unclamped_rating(raw, item);
        let rating = self.work.view.clamp(unclamped);
        Prediction {
            raw,
            rating,
            clamped: rating != unclamped,
        }
    }
}
