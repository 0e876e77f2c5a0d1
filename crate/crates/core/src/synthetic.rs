//! Seeded rating generators for tests, benchmarks and offline experiments.

use rand::seq::index::sample_weighted;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::data::{Rating, RatingDataset};

/// Shape of a MovieLens-like explicit-feedback dataset on a 1..=5 star scale,
/// generated from a biased latent-factor model with long-tailed item
/// popularity and user activity.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub users: usize,
    pub items: usize,
    pub min_ratings_per_user: usize,
    /// Mean of the exponential number of ratings on top of the minimum.
    pub mean_extra_ratings: f64,
    pub factors: usize,
    pub factor_sd: f64,
    pub user_bias_sd: f64,
    pub item_bias_sd: f64,
    pub noise_sd: f64,
    pub global_mean: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    /// Roughly the size of MovieLens 100K: 943 users, 1682 items, ~100k ratings.
    fn default() -> Self {
        SyntheticSpec {
            users: 943,
            items: 1682,
            min_ratings_per_user: 20,
            mean_extra_ratings: 86.0,
            factors: 8,
            factor_sd: 0.5,
            user_bias_sd: 0.4,
            item_bias_sd: 0.5,
            noise_sd: 0.75,
            global_mean: 3.55,
            seed: 2017,
        }
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize, sd: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, sd).expect("finite standard deviation");
    (0..n).map(|_| normal.sample(rng)).collect()
}

pub fn movielens_like(spec: &SyntheticSpec) -> RatingDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = spec.factors;
    let user_f = gaussian_vec(&mut rng, spec.users * k, spec.factor_sd);
    let item_f = gaussian_vec(&mut rng, spec.items * k, spec.factor_sd);
    let user_b = gaussian_vec(&mut rng, spec.users, spec.user_bias_sd);
    let item_b = gaussian_vec(&mut rng, spec.items, spec.item_bias_sd);
    // Zipf-like popularity over a random permutation of the items
    let popularity: Vec<f64> = (0..spec.items)
        .map(|_| 1.0 / (rng.random_range(0..spec.items) as f64 + 15.0))
        .collect();
    let extra = Exp::new(1.0 / spec.mean_extra_ratings.max(1e-9)).expect("positive rate");
    let noise = Normal::new(0.0, spec.noise_sd).expect("finite noise");

    let mut triplets = Vec::new();
    for u in 0..spec.users {
        let n = (spec.min_ratings_per_user + extra.sample(&mut rng) as usize).min(spec.items);
        let mut picked = sample_weighted(&mut rng, spec.items, |i| popularity[i], n)
            .expect("positive weights")
            .into_vec();
        picked.sort_unstable();
        for i in picked {
            let dot: f64 = (0..k).map(|f| user_f[u * k + f] * item_f[i * k + f]).sum();
            let score = spec.global_mean + user_b[u] + item_b[i] + dot + noise.sample(&mut rng);
            triplets.push(Rating {
                user: u as u32,
                item: i as u32,
                value: score.round().clamp(1.0, 5.0),
            });
        }
    }
    RatingDataset::new(triplets, spec.users, spec.items, 1.0, 5.0).expect("generated data is valid")
}

/// Small dense instance whose items fall into `clusters` groups; each user
/// likes or dislikes each group as a whole, so items in one group are
/// strongly similar.
pub fn planted_clusters(users: usize, items: usize, clusters: usize, seed: u64) -> RatingDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.3).expect("finite noise");
    let mut triplets = Vec::new();
    for u in 0..users {
        let taste: Vec<f64> = (0..clusters)
            .map(|_| {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                sign * rng.random_range(0.5..1.5)
            })
            .collect();
        for i in 0..items {
            // keep at least three ratings per user
            if i >= 3 && !rng.random_bool(0.7) {
                continue;
            }
            let score = 3.0 + 1.3 * taste[i % clusters] + noise.sample(&mut rng);
            triplets.push(Rating {
                user: u as u32,
                item: i as u32,
                value: score.round().clamp(1.0, 5.0),
            });
        }
    }
    RatingDataset::new(triplets, users, items, 1.0, 5.0).expect("generated data is valid")
}
