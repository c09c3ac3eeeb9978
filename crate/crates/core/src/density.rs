//! Shared histogram model over univariate samples, and empirical CDFs.
//!
//! Both samples are binned on one uniform grid. Bin `i` carries the
//! smoothed mixture mass `wᵢ` and component mass `comp_massᵢ`; the kernel
//! `κᵢ` is the uniform density `1/width` on that bin, so the mixture
//! density estimate is `f̂(x) = Σ wᵢ κᵢ(x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default pseudocount added to every bin of both histograms.
pub const DEFAULT_PSEUDOCOUNT: f64 = 0.5;

/// Histograms beyond this many bins indicate a degenerate bin width.
const MAX_BINS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramModel {
    edges: Vec<f64>,
    width: f64,
    w: Vec<f64>,
    comp_mass: Vec<f64>,
    counts_mix: Vec<u64>,
    counts_comp: Vec<u64>,
}

impl HistogramModel {
    /// Builds a model from uniform `edges` and per-bin counts, smoothing both
    /// histograms with `pseudocount`.
    pub fn from_counts(
        edges: Vec<f64>,
        counts_mix: Vec<u64>,
        counts_comp: Vec<u64>,
        pseudocount: f64,
    ) -> Result<Self> {
        let width = check_edges(&edges)?;
        let k = edges.len() - 1;
        if counts_mix.len() != k || counts_comp.len() != k {
            return Err(Error::InvalidParameter(format!(
                "expected {k} bin counts per sample"
            )));
        }
        if !(pseudocount >= 0.0 && pseudocount.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pseudocount must be finite and nonnegative, got {pseudocount}"
            )));
        }
        let w = smoothed(&counts_mix, pseudocount)?;
        let comp_mass = smoothed(&counts_comp, pseudocount)?;
        Ok(HistogramModel {
            edges,
            width,
            w,
            comp_mass,
            counts_mix,
            counts_comp,
        })
    }

    /// Builds a model from explicit bin masses. Both mass vectors must sum to 1.
    pub fn from_masses(
        edges: Vec<f64>,
        w: Vec<f64>,
        comp_mass: Vec<f64>,
        counts_mix: Vec<u64>,
        counts_comp: Vec<u64>,
    ) -> Result<Self> {
        let width = check_edges(&edges)?;
        let k = edges.len() - 1;
        for (name, v) in [("w", &w), ("comp_mass", &comp_mass)] {
            if v.len() != k {
                return Err(Error::InvalidParameter(format!("{name} must have {k} entries")));
            }
            if v.iter().any(|m| !(*m >= 0.0)) {
                return Err(Error::InvalidParameter(format!("{name} must be nonnegative")));
            }
            let total: f64 = v.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!("{name} sums to {total}, not 1")));
            }
        }
        if counts_mix.len() != k || counts_comp.len() != k {
            return Err(Error::InvalidParameter(format!(
                "expected {k} bin counts per sample"
            )));
        }
        Ok(HistogramModel {
            edges,
            width,
            w,
            comp_mass,
            counts_mix,
            counts_comp,
        })
    }

    pub fn k(&self) -> usize {
        self.w.len()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Smoothed mixture bin probabilities.
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    /// Smoothed component bin probabilities.
    pub fn comp_mass(&self) -> &[f64] {
        &self.comp_mass
    }

    pub fn counts_mix(&self) -> &[u64] {
        &self.counts_mix
    }

    pub fn counts_comp(&self) -> &[u64] {
        &self.counts_comp
    }

    /// Bin holding `x`: half-open `[eᵢ, eᵢ₊₁)`, except that the final edge
    /// belongs to the last bin. `None` outside the support.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        bin_index(&self.edges, self.width, x)
    }

    /// Per-bin counts of an arbitrary sample; points outside the support are skipped.
    pub fn count(&self, sample: &[f64]) -> Vec<u64> {
        let mut counts = vec![0u64; self.k()];
        for &x in sample {
            if let Some(i) = self.bin_of(x) {
                counts[i] += 1;
            }
        }
        counts
    }
}

fn check_edges(edges: &[f64]) -> Result<f64> {
    if edges.len() < 2 {
        return Err(Error::InvalidParameter("need at least two bin edges".into()));
    }
    if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidParameter(
            "bin edges must be finite and strictly increasing".into(),
        ));
    }
    let width = edges[1] - edges[0];
    let span = edges[edges.len() - 1] - edges[0];
    let k = (edges.len() - 1) as f64;
    if edges
        .windows(2)
        .any(|p| ((p[1] - p[0]) - width).abs() > 1e-9 * span.max(1.0))
    {
        return Err(Error::InvalidParameter("bin edges must be uniform".into()));
    }
    Ok(span / k)
}

fn smoothed(counts: &[u64], pseudocount: f64) -> Result<Vec<f64>> {
    let total: u64 = counts.iter().sum();
    let denom = total as f64 + counts.len() as f64 * pseudocount;
    if denom <= 0.0 {
        return Err(Error::DegenerateSample(
            "histogram has no mass (empty sample and zero pseudocount)".into(),
        ));
    }
    Ok(counts
        .iter()
        .map(|&c| (c as f64 + pseudocount) / denom)
        .collect())
}

fn bin_index(edges: &[f64], width: f64, x: f64) -> Option<usize> {
    let k = edges.len() - 1;
    if !(x >= edges[0] && x <= edges[k]) {
        return None;
    }
    if x == edges[k] {
        return Some(k - 1);
    }
    let mut i = (((x - edges[0]) / width).floor() as usize).min(k - 1);
    // the arithmetic guess can be off by one next to an edge
    while i > 0 && x < edges[i] {
        i -= 1;
    }
    while i + 1 < k && x >= edges[i + 1] {
        i += 1;
    }
    Some(i)
}

fn sample_sd(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let ss: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Scott's normal-reference bin width, `3.49 σ̂ n^(-1/3)`.
pub fn scott_width(x1: &[f64]) -> f64 {
    3.49 * sample_sd(x1) * (x1.len() as f64).powf(-1.0 / 3.0)
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Bins both samples on a shared uniform grid.
///
/// The bin width comes from Scott's rule on the component sample `x1`
/// (shrunk so that `x1`'s range spans at least two bins), the grid is
/// anchored at `min(x1)` and extended by whole bins until both samples are
/// covered. Masses are smoothed: `wᵢ = (countᵢ + pc) / (n + k·pc)`.
pub fn build_histogram(x1: &[f64], x: &[f64], pseudocount: f64) -> Result<HistogramModel> {
    if x1.is_empty() || x.is_empty() {
        return Err(Error::InvalidParameter("both samples must be non-empty".into()));
    }
    if x1.iter().chain(x).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("samples must be finite".into()));
    }
    let (lo1, hi1) = min_max(x1);
    let (lo0, hi0) = min_max(x);
    let (lo, hi) = (lo1.min(lo0), hi1.max(hi0));

    let mut width = scott_width(x1);
    if !(width > 0.0) {
        width = (hi - lo) / 10.0;
        if !(width > 0.0) {
            return Err(Error::DegenerateSample(
                "all points are identical; bin width would be zero".into(),
            ));
        }
    } else if width >= hi1 - lo1 && hi1 > lo1 {
        width = (hi1 - lo1) / 2.0;
    }

    let anchor = lo1;
    let mut left = ((anchor - lo) / width).ceil().max(0.0);
    let mut right = ((hi - anchor) / width).ceil().max(1.0);
    if left + right > MAX_BINS as f64 {
        return Err(Error::DegenerateSample(format!(
            "bin width {width:e} would need {} bins",
            left + right
        )));
    }
    // rounding can leave an extreme a hair outside the grid
    while anchor - left * width > lo {
        left += 1.0;
    }
    while anchor + right * width < hi {
        right += 1.0;
    }
    let (left, right) = (left as i64, right as i64);
    let edges: Vec<f64> = (-left..=right).map(|j| anchor + j as f64 * width).collect();
    let k = edges.len() - 1;

    let binned = |s: &[f64]| {
        let mut counts = vec![0u64; k];
        for &v in s {
            let i = bin_index(&edges, width, v).expect("grid covers both samples");
            counts[i] += 1;
        }
        counts
    };
    let counts_comp = binned(x1);
    let counts_mix = binned(x);
    HistogramModel::from_counts(edges, counts_mix, counts_comp, pseudocount)
}

/// Mixture density estimate `f̂(x) = wᵢ / width` on the bin containing `x`.
pub fn pdf_mixture(model: &HistogramModel, x: f64) -> f64 {
    model.bin_of(x).map_or(0.0, |i| model.w[i] / model.width)
}

/// Component density estimate `f̂₁(x)`.
pub fn pdf_component(model: &HistogramModel, x: f64) -> f64 {
    model
        .bin_of(x)
        .map_or(0.0, |i| model.comp_mass[i] / model.width)
}

/// Sorted copy of a sample, for repeated ECDF queries.
#[derive(Debug, Clone)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::InvalidParameter("ECDF of an empty sample".into()));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Ecdf { sorted })
    }

    /// `#{s ≤ t} / n`.
    pub fn eval(&self, t: f64) -> f64 {
        let below = self.sorted.partition_point(|&s| s <= t);
        below as f64 / self.sorted.len() as f64
    }
}

/// Empirical CDF of `sample` at each query point.
pub fn ecdf_eval(sample: &[f64], points: &[f64]) -> Result<Vec<f64>> {
    let ecdf = Ecdf::new(sample)?;
    Ok(points.iter().map(|&t| ecdf.eval(t)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scott_width_formula() {
        // 1000 points with unit sample standard deviation
        let half = 500;
        let x: Vec<f64> = (0..1000).map(|i| if i < half { -1.0 } else { 1.0 }).collect();
        let sd = sample_sd(&x);
        let scaled: Vec<f64> = x.iter().map(|v| v / sd).collect();
        let width = scott_width(&scaled);
        let expected = 3.49 * 1000f64.powf(-1.0 / 3.0);
        assert!((width - expected).abs() < 1e-12);
        assert!((width - 0.349).abs() < 1e-3);
    }

    #[test]
    fn symmetric_two_point_sample() {
        let m = build_histogram(&[0.0, 1.0], &[0.0, 1.0], 0.0).unwrap();
        assert_eq!(m.k(), 2);
        assert_eq!(m.counts_mix(), &[1, 1]);
        assert_eq!(m.counts_comp(), &[1, 1]);
        assert_eq!(m.w(), &[0.5, 0.5]);
    }

    #[test]
    fn grid_covers_mixture_range() {
        let x1: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
        let x: Vec<f64> = (0..150).map(|i| 3.0 * i as f64 / 149.0).collect();
        let m = build_histogram(&x1, &x, DEFAULT_PSEUDOCOUNT).unwrap();
        assert!(m.edges()[0] <= 0.0);
        assert!(*m.edges().last().unwrap() >= 3.0);
        assert!(m.w().iter().all(|&w| w > 0.0));
        assert_eq!(m.counts_mix().iter().sum::<u64>(), 150);
        assert_eq!(m.counts_comp().iter().sum::<u64>(), 50);
    }

    #[test]
    fn zero_variance_component_falls_back() {
        let m = build_histogram(&[1.0, 1.0], &[0.0, 2.0], 0.5).unwrap();
        assert!((m.width() - 0.2).abs() < 1e-12);
        assert!(matches!(
            build_histogram(&[1.0, 1.0], &[1.0], 0.5),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn shared_edge_goes_right_final_edge_goes_left() {
        let m = HistogramModel::from_counts(vec![0.0, 1.0, 2.0], vec![1, 1], vec![1, 1], 0.0)
            .unwrap();
        assert_eq!(m.bin_of(1.0), Some(1));
        assert_eq!(m.bin_of(2.0), Some(1));
        assert_eq!(m.bin_of(0.0), Some(0));
        assert_eq!(m.bin_of(-1e-12), None);
        assert_eq!(m.bin_of(2.0 + 1e-12), None);
    }

    fn two_bin(w: [f64; 2], comp: [f64; 2]) -> HistogramModel {
        HistogramModel::from_masses(vec![0.0, 1.0, 2.0], w.to_vec(), comp.to_vec(), vec![0, 0], vec![0, 0])
            .unwrap()
    }

    #[test]
    fn pdf_mixture_values() {
        let m = two_bin([0.25, 0.75], [0.5, 0.5]);
        assert_eq!(pdf_mixture(&m, 0.5), 0.25);
        assert_eq!(pdf_mixture(&m, 1.5), 0.75);
        assert_eq!(pdf_mixture(&m, -1.0), 0.0);
        let integral: f64 = m.w().iter().map(|w| w / m.width() * m.width()).sum();
        assert!((integral - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pdf_component_values() {
        let m = two_bin([0.5, 0.5], [0.5, 0.5]);
        assert_eq!(pdf_component(&m, 0.5), 0.5);
        assert_eq!(pdf_component(&m, 5.0), 0.0);

        // all component mass in bin 1 before smoothing
        let s = HistogramModel::from_counts(vec![0.0, 1.0, 2.0], vec![1, 1], vec![10, 0], 0.5)
            .unwrap();
        let expected = 0.5 / 11.0;
        assert!((pdf_component(&s, 1.5) - expected).abs() < 1e-15);
        assert!(pdf_component(&s, 1.5) > 0.0);
    }

    #[test]
    fn ecdf_counts() {
        assert_eq!(ecdf_eval(&[1.0, 2.0, 3.0], &[2.0]).unwrap(), vec![2.0 / 3.0]);
        assert_eq!(ecdf_eval(&[1.0, 2.0, 3.0], &[0.5, 3.0, 9.0]).unwrap(), vec![0.0, 1.0, 1.0]);
        assert!(ecdf_eval(&[], &[1.0]).is_err());
    }

    fn sample() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-50.0f64..50.0, 1..60)
    }

    proptest! {
        #[test]
        fn masses_normalized_and_counts_conserved(x1 in sample(), x in sample()) {
            prop_assume!(x1.iter().chain(&x).any(|v| *v != x1[0]));
            let m = build_histogram(&x1, &x, DEFAULT_PSEUDOCOUNT).unwrap();
            prop_assert!((m.w().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((m.comp_mass().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(m.w().iter().all(|&w| w > 0.0));
            prop_assert_eq!(m.counts_mix().iter().sum::<u64>() as usize, x.len());
            prop_assert_eq!(m.counts_comp().iter().sum::<u64>() as usize, x1.len());
            // Riemann sum of the density over the bins
            let integral: f64 = m.edges().windows(2)
                .map(|e| pdf_mixture(&m, 0.5 * (e[0] + e[1])) * (e[1] - e[0]))
                .sum();
            prop_assert!((integral - 1.0).abs() < 1e-9);
            // min density ratio cannot exceed 1 when both masses sum to 1
            let min_ratio = m.w().iter().zip(m.comp_mass())
                .map(|(w, c)| w / c)
                .fold(f64::INFINITY, f64::min);
            prop_assert!(min_ratio > 0.0 && min_ratio <= 1.0 + 1e-9);
        }

        #[test]
        fn ecdf_monotone_and_rank_invariant(s in sample(), mut q in sample()) {
            q.sort_by(f64::total_cmp);
            let f = ecdf_eval(&s, &q).unwrap();
            prop_assert!(f.windows(2).all(|p| p[0] <= p[1]));
            let g = |v: f64| 4.0 * v;
            let s2: Vec<f64> = s.iter().map(|&v| g(v)).collect();
            let q2: Vec<f64> = q.iter().map(|&v| g(v)).collect();
            prop_assert_eq!(ecdf_eval(&s2, &q2).unwrap(), f);
        }
    }
}
