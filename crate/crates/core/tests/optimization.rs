use alphamax::{
    project, solve_level_set, HistogramModel, LikelihoodWeights, Objective, SolverOptions,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_model(rng: &mut ChaCha8Rng, k: usize) -> HistogramModel {
    let edges: Vec<f64> = (0..=k).map(|i| i as f64).collect();
    let mix: Vec<u64> = (0..k).map(|_| rng.random_range(1..300)).collect();
    let comp: Vec<u64> = (0..k).map(|_| rng.random_range(1..80)).collect();
    HistogramModel::from_counts(edges, mix, comp, 0.5).unwrap()
}

fn weights(model: &HistogramModel) -> LikelihoodWeights {
    let n: u64 = model.counts_mix().iter().sum();
    let n1: u64 = model.counts_comp().iter().sum();
    LikelihoodWeights::per_sample(n as usize, n1 as usize)
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let k = rng.random_range(2..12);
        let model = random_model(&mut rng, k);
        let obj = Objective::from_model(&model, weights(&model));
        let beta: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..0.95)).collect();
        let c: f64 = beta.iter().zip(model.w()).map(|(b, w)| b * w).sum();
        let g = obj.levelset_gradient(&beta, c);
        let h = 1e-6;
        let fd: Vec<f64> = (0..k)
            .map(|i| {
                let mut up = beta.clone();
                let mut down = beta.clone();
                up[i] += h;
                down[i] -= h;
                (obj.levelset_value(&up, c) - obj.levelset_value(&down, c)) / (2.0 * h)
            })
            .collect();
        let err = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(err <= 1e-4 * norm, "relative error {}", err / norm);
    }
}

#[test]
fn curvature_matches_gradient_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let k = rng.random_range(2..12);
        let model = random_model(&mut rng, k);
        let obj = Objective::from_model(&model, weights(&model));
        let beta: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..0.95)).collect();
        let c: f64 = beta.iter().zip(model.w()).map(|(b, w)| b * w).sum();
        let d = obj.levelset_curvature(&beta, c);
        let h = 1e-6;
        for i in 0..k {
            let (mut up, mut down) = (beta.clone(), beta.clone());
            up[i] += h;
            down[i] -= h;
            let fd = -(obj.levelset_gradient(&up, c)[i] - obj.levelset_gradient(&down, c)[i]) / (2.0 * h);
            assert!((d[i] - fd).abs() <= 1e-5 * d[i].abs().max(1.0), "{} vs {fd}", d[i]);
        }
    }
}

#[test]
fn solves_converge_on_generated_data() {
    for seed in 0..5 {
        let s = alphamax::gen_gaussian(0.25, 4.0, 2000, 400, seed).unwrap();
        let (x1, x) = s.dataset.as_univariate().unwrap();
        let model = alphamax::build_histogram(&x1, &x, 0.5).unwrap();
        let obj = Objective::from_model(&model, LikelihoodWeights::per_sample(x.len(), x1.len()));
        for j in 1..100 {
            let sol = solve_level_set(&obj, j as f64 / 100.0, &SolverOptions::default()).unwrap();
            assert!(sol.converged, "seed {seed}, c = {}", j as f64 / 100.0);
        }
    }
}

#[test]
fn scaled_and_euclidean_steps_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let plain = SolverOptions {
        scaled: false,
        max_iter: 20_000,
        ..SolverOptions::default()
    };
    for _ in 0..20 {
        let k = rng.random_range(2..15);
        let model = random_model(&mut rng, k);
        let obj = Objective::from_model(&model, weights(&model));
        let c = rng.random_range(0.05..0.95);
        let a = solve_level_set(&obj, c, &SolverOptions::default()).unwrap();
        let b = solve_level_set(&obj, c, &plain).unwrap();
        assert!(a.converged && b.converged);
        assert!((a.objective - b.objective).abs() <= 1e-5 * a.objective.abs().max(1.0));
    }
}

/// Best objective over the feasible points whose free coordinates lie on a
/// 0.01 grid. The level set is two-dimensional, so each choice of the
/// coordinate fixed by the constraint gives its own grid; all three are
/// searched.
fn grid_max(obj: &Objective<'_>, w: &[f64], c: f64, steps: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for solved in 0..3 {
        let (p, q) = match solved {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for i in 0..=steps {
            for j in 0..=steps {
                let mut beta = [0.0; 3];
                beta[p] = i as f64 / steps as f64;
                beta[q] = j as f64 / steps as f64;
                let rest = (c - beta[p] * w[p] - beta[q] * w[q]) / w[solved];
                if !(0.0..=1.0).contains(&rest) {
                    continue;
                }
                beta[solved] = rest;
                let v = obj.levelset_value(&beta, c);
                if v > best {
                    best = v;
                }
            }
        }
    }
    best
}

#[test]
fn solver_matches_exhaustive_grid_on_three_bins() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let model = random_model(&mut rng, 3);
        let obj = Objective::from_model(&model, weights(&model));
        let c = rng.random_range(0.2..0.9);
        let sol = solve_level_set(&obj, c, &SolverOptions::default()).unwrap();
        let grid = grid_max(&obj, model.w(), c, 100);
        assert!(sol.objective >= grid - 1e-9, "solver {} below grid {grid}", sol.objective);
        assert!(sol.objective - grid <= 1e-3);
    }
}

// Small c puts optimal entries near zero, where log β is too curved for a
// 0.01 grid to come within 1e-3 of the optimum; a 0.001 grid is used there.
#[test]
fn solver_matches_fine_grid_over_full_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let model = random_model(&mut rng, 3);
        let obj = Objective::from_model(&model, weights(&model));
        let c = rng.random_range(0.05..0.95);
        let sol = solve_level_set(&obj, c, &SolverOptions::default()).unwrap();
        let grid = grid_max(&obj, model.w(), c, 1000);
        assert!(sol.objective >= grid - 1e-9);
        assert!(sol.objective - grid <= 1e-4, "gap {}", sol.objective - grid);
    }
}

#[test]
fn solution_is_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let k = rng.random_range(2..30);
        let model = random_model(&mut rng, k);
        let obj = Objective::from_model(&model, weights(&model));
        let c = rng.random_range(0.01..0.99);
        let sol = solve_level_set(&obj, c, &SolverOptions::default()).unwrap();
        let got: f64 = sol.beta.as_slice().iter().zip(model.w()).map(|(b, w)| b * w).sum();
        assert!((got - c).abs() <= 1e-10);
        assert!(sol.beta.as_slice().iter().all(|b| (0.0..=1.0).contains(b)));
        assert!(sol.history.windows(2).all(|p| p[1] >= p[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_is_concave_on_the_level_set(
        seed in any::<u64>(),
        t in 0.0f64..1.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(2..8);
        let model = random_model(&mut rng, k);
        let obj = Objective::from_model(&model, weights(&model));
        let c = rng.random_range(0.1..0.9);
        let a: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let a = project(&a, model.w(), c).unwrap().into_inner();
        let b = project(&b, model.w(), c).unwrap().into_inner();
        let (fa, fb) = (obj.levelset_value(&a, c), obj.levelset_value(&b, c));
        prop_assume!(fa.is_finite() && fb.is_finite());
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let fm = obj.levelset_value(&mid, c);
        prop_assert!(fm >= t * fa + (1.0 - t) * fb - 1e-9 * (1.0 + fa.abs().max(fb.abs())));
    }

    #[test]
    fn projection_is_idempotent(seed in any::<u64>(), c in 0.01f64..0.99) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(1..20);
        let model = random_model(&mut rng, k);
        let y: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
        let p = project(&y, model.w(), c).unwrap().into_inner();
        let q = project(&p, model.w(), c).unwrap().into_inner();
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }
}
