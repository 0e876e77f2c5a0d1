//! Rating ingestion, train/validation/test splitting and mean-centering.
//!
//! Ratings are held as `(user, item, value)` triplets over contiguous index
//! spaces `[0, N)` and `[0, M)`. Every partition produced by [`split`] keeps
//! the index space of its parent, so item `i` means the same thing in the
//! training, validation and test sets.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatingFormat {
    /// `user<TAB>item<TAB>rating[<TAB>timestamp]`
    Tsv,
    /// `user::item::rating[::timestamp]`
    DoubleColon,
}

impl RatingFormat {
    fn separator(self) -> &'static str {
        match self {
            RatingFormat::Tsv => "\t",
            RatingFormat::DoubleColon => "::",
        }
    }
}

impl std::str::FromStr for RatingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(RatingFormat::Tsv),
            "double-colon" | "dat" => Ok(RatingFormat::DoubleColon),
            other => Err(Error::Config(format!("unknown rating format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub user: u32,
    pub item: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingDataset {
    triplets: Vec<Rating>,
    num_users: usize,
    num_items: usize,
    scale_min: f64,
    scale_max: f64,
}

impl RatingDataset {
    /// Builds a dataset over a fixed index space, checking bounds, the rating
    /// scale and uniqueness of `(user, item)` pairs.
    pub fn new(
        triplets: Vec<Rating>,
        num_users: usize,
        num_items: usize,
        scale_min: f64,
        scale_max: f64,
    ) -> Result<Self> {
        if !(scale_min <= scale_max) {
            return Err(Error::Config(format!(
                "rating scale [{scale_min}, {scale_max}] is empty"
            )));
        }
        let mut seen = std::collections::HashSet::with_capacity(triplets.len());
        for (pos, r) in triplets.iter().enumerate() {
            if r.user as usize >= num_users || r.item as usize >= num_items {
                return Err(Error::Mismatch(format!(
                    "rating {pos} refers to user {} / item {} outside {num_users}x{num_items}",
                    r.user, r.item
                )));
            }
            if !(scale_min <= r.value && r.value <= scale_max) {
                return Err(Error::Parse {
                    line: pos + 1,
                    message: format!("rating {} outside [{scale_min}, {scale_max}]", r.value),
                });
            }
            if !seen.insert((r.user, r.item)) {
                return Err(Error::Duplicate {
                    line: pos + 1,
                    user: r.user.to_string(),
                    item: r.item.to_string(),
                });
            }
        }
        Ok(RatingDataset {
            triplets,
            num_users,
            num_items,
            scale_min,
            scale_max,
        })
    }

    /// Same index space and scale, different ratings.
    pub fn subset(&self, triplets: Vec<Rating>) -> Result<Self> {
        RatingDataset::new(
            triplets,
            self.num_users,
            self.num_items,
            self.scale_min,
            self.scale_max,
        )
    }

    pub fn triplets(&self) -> &[Rating] {
        &self.triplets
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn scale_min(&self) -> f64 {
        self.scale_min
    }

    pub fn scale_max(&self) -> f64 {
        self.scale_max
    }

    /// Fraction of the user x item matrix that is observed.
    pub fn density(&self) -> f64 {
        if self.num_users == 0 || self.num_items == 0 {
            return 0.0;
        }
        self.triplets.len() as f64 / (self.num_users as f64 * self.num_items as f64)
    }

    pub fn clamp(&self, rating: f64) -> f64 {
        rating.clamp(self.scale_min, self.scale_max)
    }
}

/// Reads a rating file, remapping raw user and item ids (in ascending raw-id
/// order) onto contiguous indices.
pub fn load_ratings(path: impl AsRef<Path>, format: RatingFormat) -> Result<RatingDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_ratings(BufReader::new(file), format).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_ratings(reader: impl Read, format: RatingFormat) -> Result<RatingDataset> {
    let sep = format.separator();
    let mut raw: Vec<(u64, u64, f64)> = Vec::new();
    let mut first_line: HashMap<(u64, u64), usize> = HashMap::new();

    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io("<input>", e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(sep).collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 3 or 4 fields, found {}", fields.len()),
            });
        }
        let user = parse_field::<u64>(fields[0], lineno, "user id")?;
        let item = parse_field::<u64>(fields[1], lineno, "item id")?;
        let value = parse_field::<f64>(fields[2], lineno, "rating")?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line: lineno,
                message: format!("rating `{}` is not finite", fields[2].trim()),
            });
        }
        if first_line.insert((user, item), lineno).is_some() {
            return Err(Error::Duplicate {
                line: lineno,
                user: user.to_string(),
                item: item.to_string(),
            });
        }
        raw.push((user, item, value));
    }

    if raw.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let users = index_of(raw.iter().map(|r| r.0));
    let items = index_of(raw.iter().map(|r| r.1));
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let triplets = raw
        .iter()
        .map(|&(u, i, v)| {
            lo = lo.min(v);
            hi = hi.max(v);
            Rating {
                user: users[&u],
                item: items[&i],
                value: v,
            }
        })
        .collect();

    Ok(RatingDataset {
        triplets,
        num_users: users.len(),
        num_items: items.len(),
        scale_min: lo,
        scale_max: hi,
    })
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, what: &str) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse {what} from `{}`", field.trim()),
    })
}

fn index_of(ids: impl Iterator<Item = u64>) -> BTreeMap<u64, u32> {
    let mut map: BTreeMap<u64, u32> = ids.map(|id| (id, 0)).collect();
    for (idx, slot) in map.values_mut().enumerate() {
        *slot = idx as u32;
    }
    map
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub valid_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl SplitSpec {
    /// 85% / 5% / 10%.
    pub fn standard(seed: u64) -> Self {
        SplitSpec {
            train_frac: 0.85,
            valid_frac: 0.05,
            test_frac: 0.10,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fracs = [self.train_frac, self.valid_frac, self.test_frac];
        if fracs.iter().any(|f| !(*f >= 0.0)) {
            return Err(Error::Config(format!("split fractions {fracs:?} must be nonnegative")));
        }
        let sum: f64 = fracs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("split fractions sum to {sum}, not 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: RatingDataset,
    pub valid: RatingDataset,
    pub test: RatingDataset,
}

/// Uniform random partition of the triplets. Within each partition the
/// original triplet order is preserved.
pub fn split(ds: &RatingDataset, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = ds.len();
    let n_train = ((n as f64 * spec.train_frac).round() as usize).min(n);
    let n_valid = ((n as f64 * spec.valid_frac).round() as usize).min(n - n_train);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));

    let take = |range: std::ops::Range<usize>| -> Result<RatingDataset> {
        let mut picked = order[range].to_vec();
        picked.sort_unstable();
        ds.subset(picked.into_iter().map(|k| ds.triplets[k]).collect())
    };

    Ok(Split {
        train: take(0..n_train)?,
        valid: take(n_train..n_train + n_valid)?,
        test: take(n_train + n_valid..n)?,
    })
}

const MANIFEST_TAG: &str = "# pnbm-split v1";

/// Writes `train.tsv`, `valid.tsv` and `test.tsv` under `dir`, using the
/// already-remapped indices.
pub fn write_split(dir: impl AsRef<Path>, split: &Split) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, part) in [("train", &split.train), ("valid", &split.valid), ("test", &split.test)] {
        write_triplets(dir.join(format!("{name}.tsv")), part)?;
    }
    Ok(())
}

pub fn read_split(dir: impl AsRef<Path>) -> Result<Split> {
    let dir = dir.as_ref();
    let split = Split {
        train: read_triplets(dir.join("train.tsv"))?,
        valid: read_triplets(dir.join("valid.tsv"))?,
        test: read_triplets(dir.join("test.tsv"))?,
    };
    for part in [&split.valid, &split.test] {
        if part.num_users != split.train.num_users || part.num_items != split.train.num_items {
            return Err(Error::Mismatch(format!(
                "split parts in {} disagree on dimensions",
                dir.display()
            )));
        }
    }
    Ok(split)
}

pub fn write_triplets(path: impl AsRef<Path>, ds: &RatingDataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(
            out,
            "{MANIFEST_TAG} users={} items={} scale_min={} scale_max={}",
            ds.num_users, ds.num_items, ds.scale_min, ds.scale_max
        )?;
        for r in &ds.triplets {
            writeln!(out, "{}\t{}\t{}", r.user, r.item, r.value)?;
        }
        out.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

pub fn read_triplets(path: impl AsRef<Path>) -> Result<RatingDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::io(path, e))?,
        None => return Err(Error::Format(format!("{} has no header", path.display()))),
    };
    let rest = header
        .strip_prefix(MANIFEST_TAG)
        .ok_or_else(|| Error::Format(format!("{} is not a split manifest", path.display())))?;
    let mut fields = HashMap::new();
    for kv in rest.split_whitespace() {
        if let Some((k, v)) = kv.split_once('=') {
            fields.insert(k, v);
        }
    }
    let get = |key: &str| -> Result<&str> {
        fields
            .get(key)
            .copied()
            .ok_or_else(|| Error::Format(format!("{} header lacks `{key}`", path.display())))
    };
    let num_users = parse_field::<usize>(get("users")?, 1, "users")?;
    let num_items = parse_field::<usize>(get("items")?, 1, "items")?;
    let scale_min = parse_field::<f64>(get("scale_min")?, 1, "scale_min")?;
    let scale_max = parse_field::<f64>(get("scale_max")?, 1, "scale_max")?;

    let mut triplets = Vec::new();
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let mut it = line.split('\t');
        let mut next = |what| {
            it.next().ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("missing {what}"),
            })
        };
        let user = parse_field::<u32>(next("user")?, lineno, "user")?;
        let item = parse_field::<u32>(next("item")?, lineno, "item")?;
        let value = parse_field::<f64>(next("rating")?, lineno, "rating")?;
        triplets.push(Rating { user, item, value });
    }
    RatingDataset::new(triplets, num_users, num_items, scale_min, scale_max)
}

/// Compressed sparse rows with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    offsets: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseRows {
    pub fn from_entries(num_rows: usize, mut entries: Vec<(u32, u32, f64)>) -> Self {
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut offsets = vec![0usize; num_rows + 1];
        for &(r, _, _) in &entries {
            offsets[r as usize + 1] += 1;
        }
        for k in 0..num_rows {
            offsets[k + 1] += offsets[k];
        }
        SparseRows {
            offsets,
            indices: entries.iter().map(|e| e.1).collect(),
            values: entries.iter().map(|e| e.2).collect(),
        }
    }

    pub fn num_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let span = self.offsets[r]..self.offsets[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn row_len(&self, r: usize) -> usize {
        self.offsets[r + 1] - self.offsets[r]
    }

    /// Position of `col` inside row `r`, if present.
    pub fn find(&self, r: usize, col: u32) -> Option<usize> {
        let (cols, _) = self.row(r);
        cols.binary_search(&col).ok()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> SparseRows {
        SparseRows {
            offsets: self.offsets.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u32, f64)> + '_ {
        (0..self.num_rows()).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }
}

/// Affine map of centered ratings onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitMap {
    max: f64,
    min: f64,
}

impl UnitMap {
    pub fn new(max: f64, min: f64) -> Result<Self> {
        if !(max > min) {
            return Err(Error::DegenerateRange { max, min });
        }
        Ok(UnitMap { max, min })
    }

    fn mid(&self) -> f64 {
        (self.max + self.min) / 2.0
    }

    pub fn forward(&self, x: f64) -> f64 {
        let mid = self.mid();
        (x - mid) / (self.max - mid)
    }

    pub fn inverse(&self, t: f64) -> f64 {
        let mid = self.mid();
        t * (self.max - mid) + mid
    }
}

/// Item-mean-centered training ratings.
#[derive(Debug, Clone)]
pub struct CenteredView {
    num_users: usize,
    num_items: usize,
    scale_min: f64,
    scale_max: f64,
    global_mean: f64,
    item_means: Vec<f64>,
    item_counts: Vec<usize>,
    by_user: SparseRows,
    by_item: SparseRows,
    map_max: f64,
    map_min: f64,
}

pub fn center(train: &RatingDataset) -> Result<CenteredView> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let m = train.num_items;
    let mut sums = vec![0.0; m];
    let mut counts = vec![0usize; m];
    let mut total = 0.0;
    for r in &train.triplets {
        sums[r.item as usize] += r.value;
        counts[r.item as usize] += 1;
        total += r.value;
    }
    let global_mean = total / train.len() as f64;
    let item_means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { global_mean })
        .collect();

    let (mut map_max, mut map_min) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut user_entries = Vec::with_capacity(train.len());
    let mut item_entries = Vec::with_capacity(train.len());
    for r in &train.triplets {
        let c = r.value - item_means[r.item as usize];
        map_max = map_max.max(c);
        map_min = map_min.min(c);
        user_entries.push((r.user, r.item, c));
        item_entries.push((r.item, r.user, c));
    }

    Ok(CenteredView {
        num_users: train.num_users,
        num_items: m,
        scale_min: train.scale_min,
        scale_max: train.scale_max,
        global_mean,
        item_means,
        item_counts: counts,
        by_user: SparseRows::from_entries(train.num_users, user_entries),
        by_item: SparseRows::from_entries(m, item_entries),
        map_max,
        map_min,
    })
}

impl CenteredView {
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn scale(&self) -> (f64, f64) {
        (self.scale_min, self.scale_max)
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    pub fn item_means(&self) -> &[f64] {
        &self.item_means
    }

    pub fn item_mean(&self, item: usize) -> f64 {
        self.item_means[item]
    }

    pub fn item_counts(&self) -> &[usize] {
        &self.item_counts
    }

    /// Centered ratings keyed by user, columns are items.
    pub fn by_user(&self) -> &SparseRows {
        &self.by_user
    }

    /// Centered ratings keyed by item, columns are users.
    pub fn by_item(&self) -> &SparseRows {
        &self.by_item
    }

    pub fn map_range(&self) -> (f64, f64) {
        (self.map_max, self.map_min)
    }

    pub fn unit_map(&self) -> Result<UnitMap> {
        UnitMap::new(self.map_max, self.map_min)
    }

    pub fn map_to_unit(&self, x: f64) -> Result<f64> {
        Ok(self.unit_map()?.forward(x))
    }

    /// User rows with every centered value passed through [`UnitMap::forward`].
    pub fn unit_rows(&self) -> Result<SparseRows> {
        let map = self.unit_map()?;
        Ok(self.by_user.map_values(|x| map.forward(x)))
    }

    pub fn clamp(&self, rating: f64) -> f64 {
        rating.clamp(self.scale_min, self.scale_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = "1\t10\t4.0\n1\t20\t2.0\n2\t10\t5.0\n2\t30\t1.0\n";

    fn fixture() -> RatingDataset {
        parse_ratings(FIXTURE.as_bytes(), RatingFormat::Tsv).unwrap()
    }

    fn ds(triplets: &[(u32, u32, f64)], n: usize, m: usize) -> RatingDataset {
        let t = triplets
            .iter()
            .map(|&(user, item, value)| Rating { user, item, value })
            .collect();
        RatingDataset::new(t, n, m, 1.0, 5.0).unwrap()
    }

    #[test]
    fn fixture_dimensions() {
        let d = fixture();
        assert_eq!(d.num_users(), 2);
        assert_eq!(d.num_items(), 3);
        assert_eq!(d.len(), 4);
        assert_eq!((d.scale_min(), d.scale_max()), (1.0, 5.0));
        assert!((d.density() - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn double_colon_with_timestamps() {
        let text = "1::10::4.0::978300760\n2::10::3.5::978300761\n";
        let d = parse_ratings(text.as_bytes(), RatingFormat::DoubleColon).unwrap();
        assert_eq!((d.num_users(), d.num_items(), d.len()), (2, 1, 2));
    }

    #[test]
    fn empty_input_is_an_error() {
        let err = parse_ratings("".as_bytes(), RatingFormat::Tsv).unwrap_err();
        assert!(matches!(err, Error::EmptyDataset));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_ratings("1\t2\t3\n1\tx\t3\n".as_bytes(), RatingFormat::Tsv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        let err = parse_ratings("1\t2\n".as_bytes(), RatingFormat::Tsv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn duplicate_pair_is_rejected() {
        let err = parse_ratings("1\t2\t3\n1\t2\t4\n".as_bytes(), RatingFormat::Tsv).unwrap_err();
        assert!(matches!(err, Error::Duplicate { line: 2, .. }));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let triplets: Vec<_> = (0..1000u32).map(|k| (k / 10, k % 10, 3.0)).collect();
        let d = ds(&triplets, 100, 10);
        let spec = SplitSpec::standard(7);
        let s = split(&d, &spec).unwrap();
        assert!(s.train.len().abs_diff(850) <= 1);
        assert!(s.valid.len().abs_diff(50) <= 1);
        assert!(s.test.len().abs_diff(100) <= 1);
        assert_eq!(s.train.len() + s.valid.len() + s.test.len(), 1000);

        let again = split(&d, &spec).unwrap();
        assert_eq!(s.train, again.train);
        assert_eq!(s.valid, again.valid);
        assert_eq!(s.test, again.test);
    }

    #[test]
    fn identity_split() {
        let d = fixture();
        let s = split(
            &d,
            &SplitSpec {
                train_frac: 1.0,
                valid_frac: 0.0,
                test_frac: 0.0,
                seed: 1,
            },
        )
        .unwrap();
        assert_eq!(s.train.triplets(), d.triplets());
        assert!(s.valid.is_empty() && s.test.is_empty());
    }

    #[test]
    fn bad_fractions() {
        let d = fixture();
        let spec = SplitSpec {
            train_frac: 0.8,
            valid_frac: 0.1,
            test_frac: 0.2,
            seed: 0,
        };
        assert!(matches!(split(&d, &spec), Err(Error::Config(_))));
        let spec = SplitSpec {
            train_frac: 1.1,
            valid_frac: -0.1,
            test_frac: 0.0,
            seed: 0,
        };
        assert!(matches!(split(&d, &spec), Err(Error::Config(_))));
    }

    #[test]
    fn centering_examples() {
        let v = center(&fixture()).unwrap();
        // item 10 -> index 0, ratings 4 and 5
        assert_eq!(v.item_mean(0), 4.5);
        let (users, vals) = v.by_item().row(0);
        assert_eq!(users, &[0, 1]);
        assert_eq!(vals, &[-0.5, 0.5]);

        let v = center(&ds(&[(0, 0, 3.0), (1, 0, 3.0), (2, 0, 3.0), (0, 1, 1.0), (1, 1, 5.0)], 3, 2)).unwrap();
        assert_eq!(v.item_mean(0), 3.0);
        assert_eq!(v.by_item().row(0).1, &[0.0, 0.0, 0.0]);
        assert_eq!(v.item_mean(1), 3.0);
        assert_eq!(v.by_item().row(1).1, &[-2.0, 2.0]);
        assert_eq!(v.map_range(), (2.0, -2.0));
    }

    #[test]
    fn unrated_item_gets_global_mean() {
        let v = center(&ds(&[(0, 0, 2.0), (1, 0, 4.0), (0, 1, 5.0)], 2, 3)).unwrap();
        assert!((v.item_mean(2) - 11.0 / 3.0).abs() < 1e-15);
        assert_eq!(v.by_item().row_len(2), 0);
    }

    #[test]
    fn unit_map_examples() {
        let m = UnitMap::new(2.0, -2.0).unwrap();
        assert_eq!(m.forward(1.0), 0.5);
        assert_eq!(m.forward(2.0), 1.0);
        assert_eq!(m.forward(-2.0), -1.0);
        let m = UnitMap::new(3.0, -1.0).unwrap();
        assert_eq!(m.forward(1.0), 0.0);
        assert_eq!(m.forward(3.0), 1.0);
        assert_eq!(m.forward(-1.0), -1.0);
        assert!(matches!(UnitMap::new(1.0, 1.0), Err(Error::DegenerateRange { .. })));
    }

    #[test]
    fn manifest_round_trip() {
        let d = fixture();
        let s = split(&d, &SplitSpec::standard(3)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_split(dir.path(), &s).unwrap();
        let back = read_split(dir.path()).unwrap();
        assert_eq!(back.train, s.train);
        assert_eq!(back.valid, s.valid);
        assert_eq!(back.test, s.test);
    }
}
