//! Static item-item similarity matrices and neighbor ranking.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{CenteredView, RatingDataset, SparseRows};
use crate::error::{Error, Result};

/// Pairs with fewer co-raters than this get similarity 0.
pub const MIN_CO_RATERS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Pearson,
    Cosine,
    Jaccard,
    Ones,
}

impl ConstraintKind {
    pub fn code(self) -> u8 {
        match self {
            ConstraintKind::Pearson => 0,
            ConstraintKind::Cosine => 1,
            ConstraintKind::Jaccard => 2,
            ConstraintKind::Ones => 3,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => ConstraintKind::Pearson,
            1 => ConstraintKind::Cosine,
            2 => ConstraintKind::Jaccard,
            3 => ConstraintKind::Ones,
            other => return Err(Error::Format(format!("unknown constraint kind {other}"))),
        })
    }

    /// Builds the matrix of this kind from training data.
    pub fn build(self, train: &RatingDataset, view: &CenteredView) -> ConstraintMatrix {
        match self {
            ConstraintKind::Pearson => pearson(view),
            ConstraintKind::Cosine => cosine(view),
            ConstraintKind::Jaccard => jaccard(train),
            ConstraintKind::Ones => ones(train.num_items()),
        }
    }
}

impl std::fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ConstraintKind::Pearson => "pearson",
            ConstraintKind::Cosine => "cosine",
            ConstraintKind::Jaccard => "jaccard",
            ConstraintKind::Ones => "ones",
        })
    }
}

/// Dense symmetric `M x M` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMatrix {
    kind: ConstraintKind,
    dim: usize,
    values: Vec<f64>,
}

impl ConstraintMatrix {
    /// Fills the full matrix from a function evaluated on the lower triangle
    /// (`j <= i`), mirroring each value to the upper triangle.
    fn from_lower(kind: ConstraintKind, dim: usize, entry: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let mut values = vec![0.0; dim * dim];
        values.par_chunks_mut(dim.max(1)).enumerate().for_each(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate().take(i + 1) {
                *slot = entry(i, j);
            }
        });
        for i in 0..dim {
            for j in 0..i {
                values[j * dim + i] = values[i * dim + j];
            }
        }
        ConstraintMatrix { kind, dim, values }
    }

    /// Wraps an explicit row-major matrix, which must be exactly symmetric.
    pub fn from_dense(kind: ConstraintKind, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != dim * dim {
            return Err(Error::Mismatch(format!("{} values for a {dim}x{dim} matrix", values.len())));
        }
        let m = ConstraintMatrix { kind, dim, values };
        if !m.is_symmetric() {
            return Err(Error::Config("constraint matrix is not symmetric".into()));
        }
        Ok(m)
    }

    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.get(i, j).to_bits() == self.get(j, i).to_bits()))
    }

    /// Header `b"PNBMSIM1"`, `M` as little-endian u64, kind byte, then the
    /// lower triangle (diagonal included) row by row as little-endian f64.
    pub fn write_binary(&self, mut out: impl Write) -> std::io::Result<()> {
        out.write_all(SIM_MAGIC)?;
        out.write_all(&(self.dim as u64).to_le_bytes())?;
        out.write_all(&[self.kind.code()])?;
        for i in 0..self.dim {
            for j in 0..=i {
                out.write_all(&self.get(i, j).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary(mut input: impl Read) -> Result<Self> {
        let fmt = |e: std::io::Error| Error::Format(format!("truncated similarity matrix: {e}"));
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic).map_err(fmt)?;
        if &magic != SIM_MAGIC {
            return Err(Error::Format("bad similarity matrix magic".into()));
        }
        let mut word = [0u8; 8];
        input.read_exact(&mut word).map_err(fmt)?;
        let dim = u64::from_le_bytes(word) as usize;
        let mut kind = [0u8; 1];
        input.read_exact(&mut kind).map_err(fmt)?;
        let kind = ConstraintKind::from_code(kind[0])?;
        let mut values = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                input.read_exact(&mut word).map_err(fmt)?;
                let v = f64::from_le_bytes(word);
                values[i * dim + j] = v;
                values[j * dim + i] = v;
            }
        }
        Ok(ConstraintMatrix { kind, dim, values })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_binary(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_binary(BufReader::new(file))
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        for i in 0..self.dim {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

const SIM_MAGIC: &[u8; 8] = b"PNBMSIM1";

/// Walks the users that rated both `a` and `b`, yielding their centered values.
fn co_rated<'a>(
    rows: &'a SparseRows,
    a: usize,
    b: usize,
) -> impl Iterator<Item = (f64, f64)> + 'a {
    let (ua, va) = rows.row(a);
    let (ub, vb) = rows.row(b);
    let (mut p, mut q) = (0, 0);
    std::iter::from_fn(move || {
        while p < ua.len() && q < ub.len() {
            match ua[p].cmp(&ub[q]) {
                Ordering::Less => p += 1,
                Ordering::Greater => q += 1,
                Ordering::Equal => {
                    let pair = (va[p], vb[q]);
                    p += 1;
                    q += 1;
                    return Some(pair);
                }
            }
        }
        None
    })
}

fn pearson_pair(rows: &SparseRows, a: usize, b: usize) -> f64 {
    let pairs: Vec<(f64, f64)> = co_rated(rows, a, b).collect();
    if pairs.len() < MIN_CO_RATERS {
        return 0.0;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pairs {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

fn cosine_pair(rows: &SparseRows, a: usize, b: usize) -> f64 {
    let (mut n, mut sxy, mut sxx, mut syy) = (0usize, 0.0, 0.0, 0.0);
    for (x, y) in co_rated(rows, a, b) {
        n += 1;
        sxy += x * y;
        sxx += x * x;
        syy += y * y;
    }
    if n < MIN_CO_RATERS || sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Pearson correlation of centered ratings over co-raters.
pub fn pearson(view: &CenteredView) -> ConstraintMatrix {
    let rows = view.by_item();
    ConstraintMatrix::from_lower(ConstraintKind::Pearson, view.num_items(), |i, j| {
        if i == j {
            1.0
        } else {
            pearson_pair(rows, i, j)
        }
    })
}

/// Cosine of co-rated centered rating vectors.
pub fn cosine(view: &CenteredView) -> ConstraintMatrix {
    let rows = view.by_item();
    ConstraintMatrix::from_lower(ConstraintKind::Cosine, view.num_items(), |i, j| {
        if i == j {
            1.0
        } else {
            cosine_pair(rows, i, j)
        }
    })
}

/// Jaccard index of the rater sets. Depends only on which ratings exist.
pub fn jaccard(train: &RatingDataset) -> ConstraintMatrix {
    let m = train.num_items();
    let mut raters: Vec<Vec<u32>> = vec![Vec::new(); m];
    for r in train.triplets() {
        raters[r.item as usize].push(r.user);
    }
    for list in &mut raters {
        list.sort_unstable();
    }
    ConstraintMatrix::from_lower(ConstraintKind::Jaccard, m, |i, j| {
        let (a, b) = (&raters[i], &raters[j]);
        let (mut p, mut q, mut common) = (0, 0, 0usize);
        while p < a.len() && q < b.len() {
            match a[p].cmp(&b[q]) {
                Ordering::Less => p += 1,
                Ordering::Greater => q += 1,
                Ordering::Equal => {
                    common += 1;
                    p += 1;
                    q += 1;
                }
            }
        }
        let union = a.len() + b.len() - common;
        if union == 0 {
            0.0
        } else {
            common as f64 / union as f64
        }
    })
}

pub fn ones(m: usize) -> ConstraintMatrix {
    ConstraintMatrix {
        kind: ConstraintKind::Ones,
        dim: m,
        values: vec![1.0; m * m],
    }
}

/// Strongest-first ordering: larger `|s|` wins, ties go to the lower index.
fn by_strength(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0))
}

/// Keeps the `k` strongest candidates `(index, similarity)` in ranked order.
pub fn strongest(mut candidates: Vec<(usize, f64)>, k: usize) -> Vec<(usize, f64)> {
    if k == 0 {
        return Vec::new();
    }
    if candidates.len() > k {
        candidates.select_nth_unstable_by(k - 1, by_strength);
        candidates.truncate(k);
    }
    candidates.sort_unstable_by(by_strength);
    candidates
}

/// Up to `k` rated items other than `exclude`, ranked by `|sim_row[j]|`.
pub fn top_k(sim_row: &[f64], k: usize, rated_mask: &[bool], exclude: Option<usize>) -> Vec<usize> {
    let candidates = sim_row
        .iter()
        .zip(rated_mask)
        .enumerate()
        .filter(|&(j, (_, &rated))| rated && Some(j) != exclude)
        .map(|(j, (&s, _))| (j, s))
        .collect();
    strongest(candidates, k).into_iter().map(|(j, _)| j).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{center, Rating};

    fn dataset(triplets: &[(u32, u32, f64)], n: usize, m: usize) -> RatingDataset {
        let t = triplets
            .iter()
            .map(|&(user, item, value)| Rating { user, item, value })
            .collect();
        RatingDataset::new(t, n, m, -10.0, 10.0).unwrap()
    }

    /// Two items whose centered vectors are given per user, over a third
    /// "padding" item so that the view is well-formed. Ratings are chosen
    /// with item means of zero.
    fn two_items(a: &[f64], b: &[f64]) -> CenteredView {
        let mut t = Vec::new();
        for (u, (&x, &y)) in a.iter().zip(b).enumerate() {
            t.push((u as u32, 0, x));
            t.push((u as u32, 1, y));
        }
        center(&dataset(&t, a.len(), 2)).unwrap()
    }

    #[test]
    fn pearson_examples() {
        let v = two_items(&[1.0, 0.0, -1.0], &[2.0, 0.0, -2.0]);
        assert!((pearson(&v).get(0, 1) - 1.0).abs() < 1e-15);
        let v = two_items(&[1.0, 0.0, -1.0], &[-1.0, 0.0, 1.0]);
        assert!((pearson(&v).get(0, 1) + 1.0).abs() < 1e-15);
        let v = two_items(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]);
        assert!((pearson(&v).get(1, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn too_few_co_raters_is_zero() {
        let d = dataset(&[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0), (2, 1, 4.0)], 3, 2);
        let v = center(&d).unwrap();
        assert_eq!(pearson(&v).get(0, 1), 0.0);
        assert_eq!(cosine(&v).get(0, 1), 0.0);
    }

    #[test]
    fn cosine_examples() {
        // item means are computed from these vectors, so feed zero-mean data
        let v = two_items(&[1.0, -1.0], &[2.0, -2.0]);
        assert!((cosine(&v).get(0, 1) - 1.0).abs() < 1e-15);
        let v = two_items(&[1.0, -1.0, 1.0, -1.0], &[1.0, 1.0, -1.0, -1.0]);
        assert!(cosine(&v).get(0, 1).abs() < 1e-15);
    }

    #[test]
    fn cosine_of_non_centered_pair() {
        // Items 0 and 1 are co-rated by users 0 and 1 with centered vectors
        // (1, 1) and (1, 0); extra raters shift the means so that holds.
        let d = dataset(
            &[
                (0, 0, 1.0),
                (1, 0, 1.0),
                (2, 0, -2.0),
                (0, 1, 1.0),
                (1, 1, 0.0),
                (3, 1, -1.0),
            ],
            4,
            2,
        );
        let v = center(&d).unwrap();
        assert_eq!(v.item_mean(0), 0.0);
        assert_eq!(v.item_mean(1), 0.0);
        assert!((cosine(&v).get(0, 1) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn jaccard_examples() {
        let d = dataset(
            &[(1, 0, 1.0), (2, 0, 1.0), (3, 0, 1.0), (2, 1, 1.0), (3, 1, 1.0), (4, 1, 1.0), (0, 2, 2.0)],
            5,
            4,
        );
        let j = jaccard(&d);
        assert_eq!(j.get(0, 1), 0.5);
        assert_eq!(j.get(0, 2), 0.0);
        assert_eq!(j.get(0, 0), 1.0);
        // item 3 has no raters
        assert_eq!(j.get(3, 3), 0.0);
        assert!(j.is_symmetric());
    }

    #[test]
    fn ones_matrix() {
        assert_eq!(ones(1).as_slice(), &[1.0]);
        assert!(ones(3).as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn top_k_examples() {
        let all = [true; 3];
        assert_eq!(top_k(&[0.9, -0.8, 0.1], 2, &all, None), vec![0, 1]);
        assert_eq!(top_k(&[0.9, -0.8, 0.1], 10, &all, None), vec![0, 1, 2]);
        assert_eq!(top_k(&[0.0; 5], 2, &[true; 5], None), vec![0, 1]);
        assert_eq!(top_k(&[0.9, -0.8, 0.1], 2, &all, Some(0)), vec![1, 2]);
        assert_eq!(top_k(&[0.9, -0.8, 0.1], 2, &[false, true, true], None), vec![1, 2]);
    }

    #[test]
    fn binary_and_csv_layout() {
        let d = dataset(&[(0, 0, 1.0), (1, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0)], 3, 3);
        let j = jaccard(&d);
        let mut buf = Vec::new();
        j.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 8 + 1 + 6 * 8);
        let back = ConstraintMatrix::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back, j);

        let mut csv = Vec::new();
        j.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().next().unwrap(), "1,0.5,0");
    }
}
