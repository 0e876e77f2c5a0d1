//! Multi-layer similarity descriptor.
//!
//! The effective similarity is `S = Σ_t φ_t (Ω_t ∘ Γ_t)`: every layer pairs a
//! learned symmetric basis `Γ_t` with a fixed constraint matrix `Ω_t` and a
//! fixed importance weight `φ_t`. A single layer with an all-ones constraint
//! and unit weight is plain learned similarity.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::SparseRows;
use crate::error::{Error, Result};
use crate::similarity::{strongest, ConstraintKind, ConstraintMatrix};

/// Upper end of the uniform range used to initialize each basis.
pub const INIT_SCALE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Linear,
    Tanh,
}

impl Variant {
    fn code(self) -> u8 {
        match self {
            Variant::Linear => 0,
            Variant::Tanh => 1,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Variant::Linear),
            1 => Ok(Variant::Tanh),
            other => Err(Error::Format(format!("unknown variant code {other}"))),
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Variant::Linear),
            "tanh" => Ok(Variant::Tanh),
            other => Err(Error::Config(format!("unknown variant `{other}`"))),
        }
    }
}

/// How the Gaussian penalty enters the update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegForm {
    /// `λ_t Ω_ij Γ_ij`, the term used by the reference update rule.
    Omega,
    /// `λ_t Ω_ij² Γ_ij`, the exact gradient of `½ λ_t ‖Ω ∘ Γ‖²`.
    OmegaSquared,
}

impl std::str::FromStr for RegForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "omega" => Ok(RegForm::Omega),
            "omega-squared" => Ok(RegForm::OmegaSquared),
            other => Err(Error::Config(format!("unknown regularization form `{other}`"))),
        }
    }
}

/// Prior on the learned similarity, seen through its gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Regularizer {
    /// Zero-mean Gaussian per layer with strength `λ_t`.
    Gaussian { lambdas: Vec<f64>, form: RegForm },
    /// Gaussian-Laplace prior of the sparse linear baseline:
    /// `(λ/2)‖S‖² − λμ‖S‖₁`.
    GaussianLaplace { lambda: f64, mu: f64 },
}

impl Regularizer {
    #[inline]
    fn gradient(&self, layer: usize, omega: f64, gamma: f64) -> f64 {
        match self {
            Regularizer::Gaussian { lambdas, form } => match form {
                RegForm::Omega => lambdas[layer] * omega * gamma,
                RegForm::OmegaSquared => lambdas[layer] * omega * omega * gamma,
            },
            Regularizer::GaussianLaplace { lambda, mu } => lambda * (gamma - mu * sign(gamma)),
        }
    }
}

/// `sign(0) = 0`.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct Layer {
    gamma: Vec<f64>,
    omega: Arc<ConstraintMatrix>,
    phi: f64,
}

impl Layer {
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn omega(&self) -> &ConstraintMatrix {
        &self.omega
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

#[derive(Debug, Clone)]
pub struct SimilarityLayers {
    dim: usize,
    variant: Variant,
    layers: Vec<Layer>,
}

/// Gradient of one training prediction with respect to the similarity
/// entries `s_ij` of its neighborhood.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GradientSample {
    pub user: usize,
    pub item: usize,
    /// Model output in working space (centered, or tanh of unit-mapped).
    pub prediction: f64,
    pub target: f64,
    /// `prediction - target`.
    pub error: f64,
    /// Neighbor items `j`, ascending. Empty when the neighborhood has no weight.
    pub neighbors: Vec<u32>,
    /// `∂r̂_ui/∂s_ij` for each neighbor, tanh factor included.
    pub d_similarity: Vec<f64>,
}

impl GradientSample {
    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// `∂r̂_ui/∂Γ_t[i][j]` over the sample's support.
    pub fn layer_gradient<'a>(&'a self, layers: &'a SimilarityLayers, t: usize) -> impl Iterator<Item = (u32, f64)> + 'a {
        let layer = &layers.layers[t];
        let base = self.item * layers.dim;
        self.neighbors
            .iter()
            .zip(&self.d_similarity)
            .map(move |(&j, &d)| (j, layer.phi * layer.omega.as_slice()[base + j as usize] * d))
    }
}

/// A parameter left the finite range while updating `Γ_t[item][neighbor]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonFiniteUpdate {
    pub layer: usize,
    pub item: usize,
    pub neighbor: usize,
}

impl SimilarityLayers {
    /// Layers with zero bases. Use [`SimilarityLayers::init_uniform`] before
    /// training: zero similarity is a stationary point of the data term.
    pub fn new(variant: Variant, spec: Vec<(Arc<ConstraintMatrix>, f64)>) -> Result<Self> {
        let dim = match spec.first() {
            Some((omega, _)) => omega.dim(),
            None => return Err(Error::Config("a similarity model needs at least one layer".into())),
        };
        let mut layers = Vec::with_capacity(spec.len());
        for (omega, phi) in spec {
            if omega.dim() != dim {
                return Err(Error::Mismatch(format!(
                    "constraint matrices of size {} and {dim}",
                    omega.dim()
                )));
            }
            if !(phi >= 0.0) || !phi.is_finite() {
                return Err(Error::Config(format!("layer importance {phi} must be finite and nonnegative")));
            }
            layers.push(Layer {
                gamma: vec![0.0; dim * dim],
                omega,
                phi,
            });
        }
        Ok(SimilarityLayers { dim, variant, layers })
    }

    /// Single layer, all-ones constraint, unit weight.
    pub fn single(variant: Variant, dim: usize) -> Self {
        SimilarityLayers::new(variant, vec![(Arc::new(crate::similarity::ones(dim)), 1.0)])
            .expect("one valid layer")
    }

    /// Off-diagonal entries drawn i.i.d. from `U[0, INIT_SCALE)`, symmetric,
    /// zero diagonal.
    pub fn init_uniform(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = self.dim;
        for layer in &mut self.layers {
            for i in 0..dim {
                layer.gamma[i * dim + i] = 0.0;
                for j in 0..i {
                    let v = rng.random::<f64>() * INIT_SCALE;
                    layer.gamma[i * dim + j] = v;
                    layer.gamma[j * dim + i] = v;
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Overwrites a basis entry and its mirror.
    pub fn set_gamma(&mut self, t: usize, i: usize, j: usize, value: f64) {
        assert_ne!(i, j, "the diagonal is fixed at zero");
        let dim = self.dim;
        let g = &mut self.layers[t].gamma;
        g[i * dim + j] = value;
        g[j * dim + i] = value;
    }

    pub fn gamma(&self, t: usize, i: usize, j: usize) -> f64 {
        self.layers[t].gamma[i * self.dim + j]
    }

    pub fn scale_gammas(&mut self, c: f64) {
        for layer in &mut self.layers {
            layer.gamma.iter_mut().for_each(|g| *g *= c);
        }
    }

    pub fn is_symmetric(&self) -> bool {
        let dim = self.dim;
        self.layers.iter().all(|l| {
            (0..dim).all(|i| {
                l.gamma[i * dim + i] == 0.0
                    && (0..i).all(|j| l.gamma[i * dim + j].to_bits() == l.gamma[j * dim + i].to_bits())
            })
        })
    }

    #[inline]
    pub fn effective(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let at = i * self.dim + j;
        self.layers
            .iter()
            .map(|l| l.phi * l.omega.as_slice()[at] * l.gamma[at])
            .sum()
    }

    pub fn effective_row(&self, i: usize) -> Vec<f64> {
        (0..self.dim).map(|j| self.effective(i, j)).collect()
    }

    /// The whole effective matrix, row-major.
    pub fn effective_matrix(&self) -> Vec<f64> {
        use rayon::prelude::*;
        let dim = self.dim;
        let mut out = vec![0.0; dim * dim];
        out.par_chunks_mut(dim.max(1)).enumerate().for_each(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = self.effective(i, j);
            }
        });
        out
    }

    pub fn prediction_gradient(&self, rows: &SparseRows, user: usize, item: usize, limit: Option<usize>) -> GradientSample {
        let mut sample = GradientSample::default();
        self.fill_gradient(rows, user, item, limit, &mut sample);
        sample
    }

    /// As [`SimilarityLayers::prediction_gradient`], reusing `sample`'s buffers.
    /// The target is the user's working rating of `item`, or 0 if unrated.
    pub fn fill_gradient(
        &self,
        rows: &SparseRows,
        user: usize,
        item: usize,
        limit: Option<usize>,
        sample: &mut GradientSample,
    ) {
        let (items, vals) = rows.row(user);
        sample.user = user;
        sample.item = item;
        sample.neighbors.clear();
        sample.d_similarity.clear();
        sample.target = rows.find(user, item as u32).map_or(0.0, |p| vals[p]);

        // d_similarity temporarily holds s_ij
        for &j in items {
            if j as usize != item {
                sample.neighbors.push(j);
                sample.d_similarity.push(self.effective(item, j as usize));
            }
        }
        if let Some(k) = limit {
            if k < sample.neighbors.len() {
                let ranked = sample.d_similarity.iter().copied().enumerate().collect();
                let mut keep: Vec<usize> = strongest(ranked, k).into_iter().map(|(p, _)| p).collect();
                keep.sort_unstable();
                let neighbors = keep.iter().map(|&p| sample.neighbors[p]).collect();
                let sims = keep.iter().map(|&p| sample.d_similarity[p]).collect();
                sample.neighbors = neighbors;
                sample.d_similarity = sims;
            }
        }

        let (mut num, mut den) = (0.0, 0.0);
        for (&j, &s) in sample.neighbors.iter().zip(&sample.d_similarity) {
            num += s * rating_of(items, vals, j);
            den += s.abs();
        }
        if den == 0.0 {
            sample.neighbors.clear();
            sample.d_similarity.clear();
            sample.prediction = 0.0;
            sample.error = -sample.target;
            return;
        }

        let z = num / den;
        let (prediction, factor) = match self.variant {
            Variant::Linear => (z, 1.0),
            Variant::Tanh => {
                let h = z.tanh();
                (h, 1.0 - h * h)
            }
        };
        sample.prediction = prediction;
        sample.error = prediction - sample.target;
        let den2 = den * den;
        for (d, &j) in sample.d_similarity.iter_mut().zip(&sample.neighbors) {
            let s = *d;
            let r = rating_of(items, vals, j);
            *d = factor * (r * den - sign(s) * num) / den2;
        }
    }

    /// One stochastic step on every supported `Γ_t[i][j]`, mirrored to
    /// `Γ_t[j][i]`.
    pub fn apply_update(&mut self, sample: &GradientSample, beta: f64, reg: &Regularizer) -> std::result::Result<(), NonFiniteUpdate> {
        let dim = self.dim;
        let i = sample.item;
        for (t, layer) in self.layers.iter_mut().enumerate() {
            let omega = layer.omega.as_slice();
            for (&j, &d) in sample.neighbors.iter().zip(&sample.d_similarity) {
                let j = j as usize;
                let at = i * dim + j;
                let (w, g) = (omega[at], layer.gamma[at]);
                let grad = layer.phi * w * d;
                let next = g - beta * sample.error * grad - beta * reg.gradient(t, w, g);
                if !next.is_finite() {
                    return Err(NonFiniteUpdate {
                        layer: t,
                        item: i,
                        neighbor: j,
                    });
                }
                layer.gamma[at] = next;
                layer.gamma[j * dim + i] = next;
            }
        }
        Ok(())
    }

    /// `½ Σ_t λ_t ‖Ω_t ∘ Γ_t‖²` or the Gaussian-Laplace penalty.
    pub fn penalty(&self, reg: &Regularizer) -> f64 {
        match reg {
            Regularizer::Gaussian { lambdas, .. } => self
                .layers
                .iter()
                .zip(lambdas)
                .map(|(l, &lambda)| {
                    let sq: f64 = l
                        .omega
                        .as_slice()
                        .iter()
                        .zip(&l.gamma)
                        .map(|(w, g)| (w * g) * (w * g))
                        .sum();
                    0.5 * lambda * sq
                })
                .sum(),
            Regularizer::GaussianLaplace { lambda, mu } => {
                let (mut sq, mut abs) = (0.0, 0.0);
                for i in 0..self.dim {
                    for j in 0..self.dim {
                        let s = self.effective(i, j);
                        sq += s * s;
                        abs += s.abs();
                    }
                }
                0.5 * lambda * sq - lambda * mu * abs
            }
        }
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            dim: self.dim,
            variant: self.variant,
            layers: self
                .layers
                .iter()
                .map(|l| CheckpointLayer {
                    phi: l.phi,
                    omega: l.omega.kind(),
                    gamma: l.gamma.clone(),
                })
                .collect(),
        }
    }

    /// Rebuilds a model from a checkpoint and the constraint matrices it was
    /// trained with.
    pub fn from_checkpoint(ckpt: &Checkpoint, omegas: Vec<Arc<ConstraintMatrix>>) -> Result<Self> {
        if omegas.len() != ckpt.layers.len() {
            return Err(Error::Mismatch(format!(
                "checkpoint has {} layers, {} constraint matrices given",
                ckpt.layers.len(),
                omegas.len()
            )));
        }
        let mut layers = Vec::with_capacity(omegas.len());
        for (l, omega) in ckpt.layers.iter().zip(omegas) {
            if omega.dim() != ckpt.dim {
                return Err(Error::Mismatch(format!(
                    "checkpoint covers {} items, data has {}",
                    ckpt.dim,
                    omega.dim()
                )));
            }
            if omega.kind() != l.omega {
                return Err(Error::Mismatch(format!(
                    "layer expects a {} constraint, got {}",
                    l.omega,
                    omega.kind()
                )));
            }
            layers.push(Layer {
                gamma: l.gamma.clone(),
                omega,
                phi: l.phi,
            });
        }
        Ok(SimilarityLayers {
            dim: ckpt.dim,
            variant: ckpt.variant,
            layers,
        })
    }
}

#[inline]
fn rating_of(items: &[u32], vals: &[f64], j: u32) -> f64 {
    // neighbors come from `items`, so the lookup always succeeds
    vals[items.binary_search(&j).expect("neighbor is rated")]
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointLayer {
    pub phi: f64,
    pub omega: ConstraintKind,
    pub gamma: Vec<f64>,
}

/// Serialized model: bases plus the metadata needed to rebuild the
/// constraint matrices from training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub dim: usize,
    pub variant: Variant,
    pub layers: Vec<CheckpointLayer>,
}

const CKPT_MAGIC: &[u8; 8] = b"PNBMCKP1";

impl Checkpoint {
    /// Layout, all integers and floats little-endian:
    ///
    /// ```text
    /// b"PNBMCKP1" | M: u64 | T: u32 | variant: u8
    /// T x (phi: f64 | omega kind: u8)
    /// T x lower triangle of Γ_t, diagonal included, row-major f64
    /// ```
    pub fn write_to(&self, mut out: impl Write) -> std::io::Result<()> {
        out.write_all(CKPT_MAGIC)?;
        out.write_all(&(self.dim as u64).to_le_bytes())?;
        out.write_all(&(self.layers.len() as u32).to_le_bytes())?;
        out.write_all(&[self.variant.code()])?;
        for l in &self.layers {
            out.write_all(&l.phi.to_le_bytes())?;
            out.write_all(&[l.omega.code()])?;
        }
        for l in &self.layers {
            for i in 0..self.dim {
                for j in 0..=i {
                    out.write_all(&l.gamma[i * self.dim + j].to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from(mut input: impl Read) -> Result<Self> {
        let fmt = |e: std::io::Error| Error::Format(format!("truncated checkpoint: {e}"));
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic).map_err(fmt)?;
        if &magic != CKPT_MAGIC {
            return Err(Error::Format("not a model checkpoint".into()));
        }
        let mut w8 = [0u8; 8];
        let mut w4 = [0u8; 4];
        let mut w1 = [0u8; 1];
        input.read_exact(&mut w8).map_err(fmt)?;
        let dim = u64::from_le_bytes(w8) as usize;
        input.read_exact(&mut w4).map_err(fmt)?;
        let num_layers = u32::from_le_bytes(w4) as usize;
        input.read_exact(&mut w1).map_err(fmt)?;
        let variant = Variant::from_code(w1[0])?;

        let mut layers = Vec::with_capacity(num_layers);
        for _ in 0..num_layers {
            input.read_exact(&mut w8).map_err(fmt)?;
            let phi = f64::from_le_bytes(w8);
            input.read_exact(&mut w1).map_err(fmt)?;
            layers.push(CheckpointLayer {
                phi,
                omega: ConstraintKind::from_code(w1[0])?,
                gamma: vec![0.0; dim * dim],
            });
        }
        for l in &mut layers {
            for i in 0..dim {
                for j in 0..=i {
                    input.read_exact(&mut w8).map_err(fmt)?;
                    let v = f64::from_le_bytes(w8);
                    l.gamma[i * dim + j] = v;
                    l.gamma[j * dim + i] = v;
                }
            }
        }
        if input.read(&mut w1).map_err(fmt)? != 0 {
            return Err(Error::Format("trailing bytes after checkpoint".into()));
        }
        Ok(Checkpoint { dim, variant, layers })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_to(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }
}
