use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};
use swarm_harness::stats::{ols_standardized, standardize, student_t_two_sided};

fn normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

#[test]
fn synthetic_coefficients_are_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 1000;
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(5.0..15.0)).collect();
    let d: Vec<f64> = (0..n).map(|_| rng.random_range(4.0..36.0)).collect();
    let t: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..16.0)).collect();
    let (vz, dz, tz) = (standardize(&v).unwrap(), standardize(&d).unwrap(), standardize(&t).unwrap());
    let y: Vec<f64> = (0..n)
        .map(|i| 10.0 + 2.0 * vz[i] - 1.5 * dz[i] + 0.5 * tz[i] + 0.1 * normal(&mut rng))
        .collect();
    let fit = ols_standardized(&y, &[("v", &v), ("d", &d), ("t", &t)]).unwrap();
    for (name, truth) in [("intercept", 10.0), ("v", 2.0), ("d", -1.5), ("t", 0.5)] {
        let c = fit.coefficient(name).unwrap();
        assert!((c.estimate - truth).abs() <= 0.05 * truth.abs(), "{name}: {}", c.estimate);
        assert!(c.p < 0.001);
    }
    assert_eq!(fit.df, n - 4);
}

#[test]
fn single_predictor_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let v: Vec<f64> = (0..1000).map(|_| rng.random_range(5.0..15.0)).collect();
    let vz = standardize(&v).unwrap();
    let y: Vec<f64> = vz.iter().map(|z| 2.0 * z + 0.1 * normal(&mut rng)).collect();
    let c = ols_standardized(&y, &[("v", &v)]).unwrap().coefficient("v").unwrap().clone();
    assert!((1.9..=2.1).contains(&c.estimate));
    assert!(c.p < 0.001);
}

#[test]
fn p_values_agree_with_statrs() {
    for df in [1.0, 3.0, 10.0, 46.0, 1246.0] {
        let dist = StudentsT::new(0.0, 1.0, df).unwrap();
        for t in [0.0, 0.3, 1.0, 1.96, 2.5, 4.0, 8.0] {
            let expected = 2.0 * (1.0 - dist.cdf(t));
            let got = student_t_two_sided(t, df);
            assert!(
                (got - expected).abs() <= 1e-9 + 1e-6 * expected,
                "t={t} df={df}: {got} vs {expected}"
            );
        }
    }
}

proptest! {
    #[test]
    fn residuals_are_orthogonal_to_predictors(
        rows in prop::collection::vec((-50.0f64..50.0, 0.0f64..10.0, -3.0f64..3.0, 0.0f64..100.0), 8..60)
    ) {
        let y: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let a: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let b: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let c: Vec<f64> = rows.iter().map(|r| r.3).collect();
        let fit = match ols_standardized(&y, &[("a", &a), ("b", &b), ("c", &c)]) {
            Ok(fit) => fit,
            Err(_) => return Ok(()),
        };
        let r_norm = fit.residuals.iter().map(|r| r * r).sum::<f64>().sqrt();
        prop_assert!(fit.residuals.iter().sum::<f64>().abs() <= 1e-9 * r_norm.max(1.0) * (y.len() as f64).sqrt());
        for xs in [&a, &b, &c] {
            let z = standardize(xs).unwrap();
            let z_norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dot: f64 = z.iter().zip(&fit.residuals).map(|(x, r)| x * r).sum();
            prop_assert!(dot.abs() <= 1e-9 * z_norm * r_norm.max(1.0));
        }
        prop_assert!(fit.coefficients.iter().all(|c| (0.0..=1.0).contains(&c.p)));
    }
}
