//! Seeded generators for the synthetic benchmarks.
//!
//! Every generator draws from a `ChaCha8Rng` seeded with `seed` on stream
//! `0`, so outputs are identical across platforms. The positive sample is
//! drawn first, then each mixture point flips its own Bernoulli(`alpha`)
//! coin to pick a component.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::PUDataset;
use crate::error::{Error, Result};

/// Rejection attempts allowed per negative point in the ball-in-box generator.
const MAX_REJECTIONS: usize = 1_000_000;

/// Seeded generator on a numbered stream; `(seed, stream)` pairs never overlap.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw from the open interval `(0, 1)`.
fn open01(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GenParams {
    Gaussian {
        alpha: f64,
        delta_mu: f64,
        n: usize,
        n1: usize,
    },
    Laplace {
        alpha: f64,
        delta_mu: f64,
        n: usize,
        n1: usize,
    },
    Ball {
        alpha: f64,
        dim: usize,
        n: usize,
        n1: usize,
    },
}

impl GenParams {
    pub fn alpha(&self) -> f64 {
        match *self {
            GenParams::Gaussian { alpha, .. }
            | GenParams::Laplace { alpha, .. }
            | GenParams::Ball { alpha, .. } => alpha,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            GenParams::Gaussian { .. } => "gaussian",
            GenParams::Laplace { .. } => "laplace",
            GenParams::Ball { .. } => "ball",
        }
    }

    pub fn generate(&self, seed: u64) -> Result<Synthetic> {
        match *self {
            GenParams::Gaussian {
                alpha,
                delta_mu,
                n,
                n1,
            } => gen_gaussian(alpha, delta_mu, n, n1, seed),
            GenParams::Laplace {
                alpha,
                delta_mu,
                n,
                n1,
            } => gen_laplace(alpha, delta_mu, n, n1, seed),
            GenParams::Ball { alpha, dim, n, n1 } => gen_ball_in_box(alpha, dim, n, n1, seed),
        }
    }
}

/// A generated dataset plus what the estimator is not allowed to see.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synthetic {
    pub dataset: PUDataset,
    pub params: GenParams,
    pub seed: u64,
    /// Per mixture point: drawn from the positive component?
    pub from_positive: Vec<bool>,
}

impl Synthetic {
    /// Nominal mixing proportion (the Bernoulli parameter).
    pub fn alpha(&self) -> f64 {
        self.params.alpha()
    }

    /// Fraction of mixture points actually drawn from the positive component.
    pub fn realized_alpha(&self) -> f64 {
        let hits = self.from_positive.iter().filter(|&&b| b).count();
        hits as f64 / self.from_positive.len() as f64
    }
}

fn check(alpha: f64, n: usize, n1: usize) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} outside [0, 1]")));
    }
    if n == 0 || n1 == 0 {
        return Err(Error::InvalidParameter("sample sizes must be at least 1".into()));
    }
    Ok(())
}

fn univariate<F>(
    params: GenParams,
    seed: u64,
    mut draw: F,
) -> Result<Synthetic>
where
    F: FnMut(&mut ChaCha8Rng, bool) -> f64,
{
    let (alpha, n, n1) = match params {
        GenParams::Gaussian { alpha, n, n1, .. } | GenParams::Laplace { alpha, n, n1, .. } => {
            (alpha, n, n1)
        }
        GenParams::Ball { .. } => unreachable!("ball generator is multivariate"),
    };
    check(alpha, n, n1)?;
    let mut rng = rng_for(seed, 0);
    let positives: Vec<Vec<f64>> = (0..n1).map(|_| vec![draw(&mut rng, true)]).collect();
    let mut from_positive = Vec::with_capacity(n);
    let mut unlabeled = Vec::with_capacity(n);
    for _ in 0..n {
        let pos = rng.random_bool(alpha);
        from_positive.push(pos);
        unlabeled.push(vec![draw(&mut rng, pos)]);
    }
    let dataset = PUDataset::new(
        positives,
        unlabeled,
        format!("{} seed={seed}", params.family()),
    )?;
    Ok(Synthetic {
        dataset,
        params,
        seed,
        from_positive,
    })
}

/// Unit-variance Gaussians: positives `N(delta_mu, 1)`, negatives `N(0, 1)`.
pub fn gen_gaussian(alpha: f64, delta_mu: f64, n: usize, n1: usize, seed: u64) -> Result<Synthetic> {
    if !(delta_mu > 0.0 && delta_mu.is_finite()) {
        return Err(Error::InvalidParameter("delta_mu must be positive".into()));
    }
    let pos = Normal::new(delta_mu, 1.0).expect("unit variance");
    let neg = Normal::new(0.0, 1.0).expect("unit variance");
    univariate(
        GenParams::Gaussian {
            alpha,
            delta_mu,
            n,
            n1,
        },
        seed,
        |rng, p| if p { pos.sample(rng) } else { neg.sample(rng) },
    )
}

/// Inverse-CDF draw from Laplace(`location`, 1).
fn laplace(rng: &mut impl RngCore, location: f64) -> f64 {
    let u = open01(rng) - 0.5;
    location - u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Unit-scale Laplace components at `delta_mu` (positive) and `0` (negative).
pub fn gen_laplace(alpha: f64, delta_mu: f64, n: usize, n1: usize, seed: u64) -> Result<Synthetic> {
    if !(delta_mu > 0.0 && delta_mu.is_finite()) {
        return Err(Error::InvalidParameter("delta_mu must be positive".into()));
    }
    univariate(
        GenParams::Laplace {
            alpha,
            delta_mu,
            n,
            n1,
        },
        seed,
        |rng, p| laplace(rng, if p { delta_mu } else { 0.0 }),
    )
}

fn in_ball(rng: &mut impl RngCore, dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let radius = open01(rng).powf(1.0 / dim as f64);
    for x in &mut v {
        *x *= radius / norm;
    }
    v
}

fn outside_ball(rng: &mut impl RngCore, dim: usize) -> Result<Vec<f64>> {
    for _ in 0..MAX_REJECTIONS {
        let v: Vec<f64> = (0..dim).map(|_| 4.0 * open01(rng) - 2.0).collect();
        if v.iter().map(|x| x * x).sum::<f64>() > 1.0 {
            return Ok(v);
        }
    }
    Err(Error::DegenerateSample(
        "rejection sampling outside the ball did not terminate".into(),
    ))
}

/// Positives uniform in the unit ball, negatives uniform in `[-2, 2]^dim`
/// outside it.
pub fn gen_ball_in_box(alpha: f64, dim: usize, n: usize, n1: usize, seed: u64) -> Result<Synthetic> {
    check(alpha, n, n1)?;
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let mut rng = rng_for(seed, 0);
    let positives: Vec<Vec<f64>> = (0..n1).map(|_| in_ball(&mut rng, dim)).collect();
    let mut from_positive = Vec::with_capacity(n);
    let mut unlabeled = Vec::with_capacity(n);
    for _ in 0..n {
        let pos = rng.random_bool(alpha);
        from_positive.push(pos);
        unlabeled.push(if pos {
            in_ball(&mut rng, dim)
        } else {
            outside_ball(&mut rng, dim)?
        });
    }
    let dataset = PUDataset::new(positives, unlabeled, format!("ball seed={seed}"))?;
    Ok(Synthetic {
        dataset,
        params: GenParams::Ball { alpha, dim, n, n1 },
        seed,
        from_positive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(points: &[Vec<f64>]) -> Vec<f64> {
        points.iter().map(|p| p[0]).collect()
    }

    #[test]
    fn gaussian_is_deterministic() {
        let a = gen_gaussian(0.25, 2.0, 500, 100, 7).unwrap();
        let b = gen_gaussian(0.25, 2.0, 500, 100, 7).unwrap();
        assert_eq!(a, b);
        let c = gen_gaussian(0.25, 2.0, 500, 100, 8).unwrap();
        assert_ne!(a.dataset, c.dataset);
    }

    #[test]
    fn gaussian_alpha_one_is_all_positive() {
        let s = gen_gaussian(1.0, 4.0, 200, 10, 1).unwrap();
        assert!(s.from_positive.iter().all(|&b| b));
        assert_eq!(s.realized_alpha(), 1.0);
    }

    #[test]
    fn gaussian_mixture_mean() {
        let (alpha, mu, n) = (0.3, 2.0, 10_000);
        let s = gen_gaussian(alpha, mu, n, 10, 3).unwrap();
        let x = flat(&s.dataset.unlabeled);
        let mean = x.iter().sum::<f64>() / n as f64;
        // variance of the mixture: 1 + alpha (1 − alpha) mu²
        let sd = (1.0 + alpha * (1.0 - alpha) * mu * mu).sqrt();
        assert!((mean - alpha * mu).abs() <= 4.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn laplace_moments_and_edges() {
        let a = gen_laplace(0.5, 2.0, 300, 20_000, 11).unwrap();
        assert_eq!(a, gen_laplace(0.5, 2.0, 300, 20_000, 11).unwrap());
        let x1 = flat(&a.dataset.positives);
        let n = x1.len() as f64;
        let mean = x1.iter().sum::<f64>() / n;
        let var = x1.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // Var = 2 for unit scale; the sample variance has sd ≈ sqrt(20/n)
        assert!((var - 2.0).abs() < 4.0 * (20.0 / n).sqrt(), "var = {var}");
        assert!((mean - 2.0).abs() < 4.0 * (2.0 / n).sqrt());

        let z = gen_laplace(0.0, 2.0, 500, 5, 2).unwrap();
        assert!(z.from_positive.iter().all(|&b| !b));
    }

    #[test]
    fn ball_geometry() {
        let s = gen_ball_in_box(0.3, 10, 2000, 300, 5).unwrap();
        for p in &s.dataset.positives {
            assert!(p.iter().map(|x| x * x).sum::<f64>() <= 1.0);
        }
        for (p, &pos) in s.dataset.unlabeled.iter().zip(&s.from_positive) {
            let r2: f64 = p.iter().map(|x| x * x).sum();
            if pos {
                assert!(r2 <= 1.0);
            } else {
                assert!(r2 > 1.0);
                assert!(p.iter().all(|x| (-2.0..=2.0).contains(x)));
            }
        }
    }

    #[test]
    fn ball_in_one_dimension() {
        let s = gen_ball_in_box(0.5, 1, 4000, 100, 9).unwrap();
        for (p, &pos) in s.dataset.unlabeled.iter().zip(&s.from_positive) {
            assert_eq!(p[0].abs() <= 1.0, pos);
        }
        // the unit ball fills half of [-2, 2]
        let mut rng = rng_for(9, 1);
        let inside = (0..10_000)
            .filter(|_| (4.0 * open01(&mut rng) - 2.0).abs() <= 1.0)
            .count();
        assert!((inside as f64 / 10_000.0 - 0.5).abs() < 0.02);
    }

    #[test]
    fn ball_fraction_matches_alpha() {
        let (alpha, n) = (0.25, 10_000);
        let s = gen_ball_in_box(alpha, 10, n, 10, 21).unwrap();
        let inside = s
            .dataset
            .unlabeled
            .iter()
            .filter(|p| p.iter().map(|x| x * x).sum::<f64>() <= 1.0)
            .count() as f64;
        let sigma = (n as f64 * alpha * (1.0 - alpha)).sqrt();
        assert!((inside - alpha * n as f64).abs() <= 4.0 * sigma);
        assert_eq!(inside / n as f64, s.realized_alpha());
    }

    #[test]
    fn streams_differ() {
        let mut a = rng_for(1, 0);
        let mut b = rng_for(1, 1);
        assert_ne!(a.next_u64(), b.next_u64());
    }
}
