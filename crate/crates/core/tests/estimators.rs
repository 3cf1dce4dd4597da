use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use ulacov::estimators::{centered_decomposition_terms, sample_moments, MomentAccumulator, SymMatrix};
use ulacov::sampler::SampleBlock;

/// Cyclic Jacobi rotations; an eigensolver independent of the library's.
fn jacobi_eigenvalues(a: &SymMatrix) -> Vec<f64> {
    let n = a.dim();
    let mut m: Vec<Vec<f64>> = a.to_rows();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn random_sym(rng: &mut StdRng, n: usize) -> SymMatrix {
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v: f64 = rng.sample(StandardNormal);
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    SymMatrix::from_row_major(n, &data).unwrap()
}

#[test]
fn operator_norm_matches_jacobi_oracle_small() {
    let mut rng = StdRng::seed_from_u64(1);
    for _ in 0..50 {
        let a = random_sym(&mut rng, 5);
        let ev = jacobi_eigenvalues(&a);
        let expect = ev.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let got = a.operator_norm(1e-12).unwrap();
        assert!((got - expect).abs() <= 1e-9 * expect, "{got} vs {expect}");
        let lib = a.eigenvalues().unwrap();
        for (x, y) in lib.iter().zip(&ev) {
            assert!((x - y).abs() <= 1e-9 * expect);
        }
    }
}

#[test]
fn power_route_matches_jacobi_oracle_above_dense_cutoff() {
    let mut rng = StdRng::seed_from_u64(2);
    for n in [65, 90] {
        let a = random_sym(&mut rng, n);
        let ev = jacobi_eigenvalues(&a);
        let expect = ev.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let got = a.operator_norm(1e-10).unwrap();
        assert!((got - expect).abs() <= 1e-6 * expect, "n={n}: {got} vs {expect}");
    }
}

#[test]
fn operator_norm_dominates_random_quadratic_forms() {
    let mut rng = StdRng::seed_from_u64(3);
    for n in [3, 12, 70] {
        let a = random_sym(&mut rng, n);
        let norm = a.operator_norm(1e-12).unwrap();
        for _ in 0..10_000 {
            let mut u: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let len = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            u.iter_mut().for_each(|v| *v /= len);
            assert!(a.quadratic_form(&u).abs() <= norm * (1.0 + 1e-9));
        }
    }
}

#[test]
fn streaming_matches_two_pass_on_a_million_rows() {
    let mut rng = StdRng::seed_from_u64(4);
    let (rows, d) = (1_000_000usize, 3usize);
    // offset far from zero to stress cancellation
    let data: Vec<f64> = (0..rows * d)
        .map(|k| 1e3 * (k % d) as f64 + rng.sample::<f64, _>(StandardNormal) * (1.0 + (k % d) as f64))
        .collect();
    let block = SampleBlock::from_rows(d, data.clone()).unwrap();
    let m = sample_moments(&block).unwrap();

    let mean: Vec<f64> = (0..d).map(|j| (0..rows).map(|i| data[i * d + j]).sum::<f64>() / rows as f64).collect();
    for j in 0..d {
        assert!((m.mean[j] - mean[j]).abs() <= 1e-10 * mean[j].abs().max(1.0));
        for k in 0..d {
            let two_pass = (0..rows)
                .map(|i| (data[i * d + j] - mean[j]) * (data[i * d + k] - mean[k]))
                .sum::<f64>()
                / rows as f64;
            let got = m.covariance.get(j, k);
            let scale = (m.covariance.get(j, j) * m.covariance.get(k, k)).sqrt();
            assert!((got - two_pass).abs() <= 1e-10 * scale, "({j},{k}): {got} vs {two_pass}");
        }
    }
}

fn rows_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..4, 1usize..40).prop_flat_map(|(d, n)| {
        (Just(d), proptest::collection::vec(-50.0f64..50.0, d * n))
    })
}

proptest! {
    #[test]
    fn translation_equivariance((d, data) in rows_strategy(), shift in proptest::collection::vec(-1e3f64..1e3, 3)) {
        let block = SampleBlock::from_rows(d, data.clone()).unwrap();
        let moved: Vec<f64> = data.iter().enumerate().map(|(k, v)| v + shift[k % d]).collect();
        let a = sample_moments(&block).unwrap();
        let b = sample_moments(&SampleBlock::from_rows(d, moved).unwrap()).unwrap();
        let scale = 1.0 + a.covariance.max_abs_entry();
        prop_assert!(a.covariance.sub(&b.covariance).unwrap().max_abs_entry() <= 1e-10 * scale);
        for j in 0..d {
            prop_assert!((b.mean[j] - a.mean[j] - shift[j]).abs() <= 1e-10 * (1.0 + shift[j].abs()));
        }
    }

    #[test]
    fn merge_of_splits_matches_one_pass((d, data) in rows_strategy(), cut in 0.0f64..1.0) {
        let n = data.len() / d;
        let split = ((n as f64) * cut) as usize;
        let mut whole = MomentAccumulator::new(d);
        let mut left = MomentAccumulator::new(d);
        let mut right = MomentAccumulator::new(d);
        for (i, row) in data.chunks(d).enumerate() {
            whole.push(row);
            if i < split { left.push(row) } else { right.push(row) }
        }
        left.merge(&right).unwrap();
        let (a, b) = (whole.finish().unwrap(), left.finish().unwrap());
        prop_assert_eq!(a.count, b.count);
        let scale = 1.0 + a.covariance.max_abs_entry();
        prop_assert!(a.covariance.sub(&b.covariance).unwrap().max_abs_entry() <= 1e-10 * scale);
    }

    #[test]
    fn centered_terms_sum_rule((d, data) in rows_strategy(), r in proptest::collection::vec(-10.0f64..10.0, 3)) {
        let block = SampleBlock::from_rows(d, data).unwrap();
        let (t1, t2) = centered_decomposition_terms(&block, &r[..d]).unwrap();
        let cov = sample_moments(&block).unwrap().covariance;
        let scale = 1.0 + t1.max_abs_entry();
        prop_assert!(t1.sub(&t2).unwrap().sub(&cov).unwrap().max_abs_entry() <= 1e-10 * scale);
    }

    #[test]
    fn covariance_is_psd((d, data) in rows_strategy()) {
        let cov = sample_moments(&SampleBlock::from_rows(d, data).unwrap()).unwrap().covariance;
        let scale = 1.0 + cov.max_abs_entry();
        prop_assert!(cov.min_eigenvalue().unwrap() >= -1e-10 * scale);
    }
}
