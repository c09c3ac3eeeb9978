use alphamax::{default_grid, detect_knee, median_smooth, monotone_correct, normalize01, Error};
use proptest::prelude::*;

/// Ordinary least-squares slope, written out independently of the library.
fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn piecewise(cs: &[f64], knots: &[(f64, f64)]) -> Vec<f64> {
    cs.iter()
        .map(|&c| {
            let seg = knots.windows(2).find(|w| c <= w[1].0 + 1e-12).unwrap();
            let ((x0, y0), (x1, y1)) = (seg[0], seg[1]);
            y0 + (y1 - y0) * (c - x0) / (x1 - x0)
        })
        .collect()
}

#[test]
fn knee_at_point_three() {
    let cs = default_grid();
    let ells = piecewise(&cs, &[(0.01, 1.0), (0.30, 1.0), (0.99, 0.0)]);
    let knee = detect_knee(&cs, &ells, 5, 0.01).unwrap();
    assert_eq!(knee.alpha_hat, 0.30);
    assert!(!knee.low_confidence);

    // hand OLS at c = 0.30: flat before, slope −1/0.69 after
    let j = 29;
    let before = ols_slope(&cs[j - 5..=j], &ells[j - 5..=j]);
    let after = ols_slope(&cs[j..=j + 5], &ells[j..=j + 5]);
    assert!(before.abs() < 1e-9);
    assert!((after + 1.0 / 0.69).abs() < 1e-9);
    let expected = (before - after) / (1.0 - ells[j] + 0.01);
    let (c, h) = knee.trace.iter().find(|(c, _)| *c == 0.30).copied().unwrap();
    assert_eq!(c, cs[j]);
    assert!((h - expected).abs() <= 1e-6 * expected);
}

#[test]
fn higher_knee_wins_at_equal_slope_change() {
    // Knees at (0.20, 0.9) and (0.80, 0.4) with the same slope change; the
    // last segment is chosen to make the changes equal.
    let cs = default_grid();
    let s0 = -0.1 / 0.19;
    let s1 = -0.5 / 0.60;
    let s2 = s1 - (s0 - s1);
    let end = 0.4 + s2 * 0.19;
    assert!(end > 0.0);
    let ells = piecewise(&cs, &[(0.01, 1.0), (0.20, 0.9), (0.80, 0.4), (0.99, end)]);
    let knee = detect_knee(&cs, &ells, 5, 0.01).unwrap();
    assert_eq!(knee.alpha_hat, 0.20);
    let h = |c: f64| knee.trace.iter().find(|(x, _)| (x - c).abs() < 1e-12).unwrap().1;
    // divisors 0.11 and 0.61
    assert!((h(0.20) / h(0.80) - 0.61 / 0.11).abs() < 1e-6);
}

#[test]
fn linear_curve_is_low_confidence() {
    let cs = default_grid();
    let ells: Vec<f64> = cs.iter().map(|c| (0.99 - c) / 0.98).collect();
    let knee = detect_knee(&cs, &ells, 5, 0.01).unwrap();
    assert_eq!(knee.alpha_hat, cs[5]);
    assert!(knee.low_confidence);
}

#[test]
fn flat_curve_has_no_knee() {
    let cs = default_grid();
    let norm = normalize01(&vec![-3.0; cs.len()]);
    assert!(norm.flat);
    assert!(norm.values.iter().all(|&v| v == 0.5));
    assert!(matches!(detect_knee(&cs, &norm.values, 5, 0.01), Err(Error::NoKnee)));
}

#[test]
fn dip_near_zero_is_restored() {
    let cs = default_grid();
    let mut raw = piecewise(&cs, &[(0.01, -1.0), (0.30, -1.0), (0.99, -2.0)]);
    raw[1] = -1.5;
    let fixed = monotone_correct(&raw);
    assert_eq!(fixed[1], -1.0);
    assert!(fixed.windows(2).all(|w| w[0] >= w[1]));
}

fn pipeline(ells: &[f64]) -> f64 {
    let cs = default_grid();
    let smoothed = median_smooth(&monotone_correct(ells), 3).unwrap();
    let norm = normalize01(&smoothed);
    detect_knee(&cs, &norm.values, 5, 0.01).unwrap().alpha_hat
}

proptest! {
    #[test]
    fn corrected_curve_never_increases(v in prop::collection::vec(-1e3f64..1e3, 1..200)) {
        let out = monotone_correct(&v);
        prop_assert!(out.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(out.iter().zip(&v).all(|(a, b)| a >= b));
    }

    #[test]
    fn knee_is_invariant_to_affine_rescaling(
        knee in 0.1f64..0.8,
        drop in 0.05f64..5.0,
        a in 0.01f64..100.0,
        b in -100.0f64..100.0,
    ) {
        let cs = default_grid();
        let ells = piecewise(&cs, &[(0.01, 0.0), (knee, 0.0), (0.99, -drop)]);
        let scaled: Vec<f64> = ells.iter().map(|l| a * l + b).collect();
        let base = pipeline(&ells);
        prop_assert_eq!(base, pipeline(&scaled));
    }

    #[test]
    fn normalization_is_affine_invariant(
        v in prop::collection::vec(-10f64..10.0, 2..50),
        a in 0.1f64..10.0,
        b in -10f64..10.0,
    ) {
        let n1 = normalize01(&v);
        let w: Vec<f64> = v.iter().map(|x| a * x + b).collect();
        let n2 = normalize01(&w);
        prop_assert_eq!(n1.flat, n2.flat);
        for (x, y) in n1.values.iter().zip(&n2.values) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}
