mod common;

use common::{sigma_max, sigma_min};
use rand::Rng;
use skewt_inverse::forward::cauchy_laplace_operator;

#[test]
fn maximum_principle_for_constant_input() {
    for n in [4, 8, 16] {
        let op = cauchy_laplace_operator(n).unwrap();
        for c in [1.0, 3.5, -2.0] {
            let obs = op.apply(&vec![c; n]).unwrap();
            for v in obs {
                assert!(v * c > 0.0 && v.abs() < c.abs(), "n={n} c={c}: {v}");
            }
        }
    }
}

#[test]
fn entries_nonnegative_rows_below_one() {
    let op = cauchy_laplace_operator(12).unwrap();
    let m = op.matrix();
    assert!(m.iter().all(|v| *v >= 0.0));
    for r in m.row_iter() {
        assert!(r.sum() < 1.0);
    }
}

#[test]
fn linear_in_boundary_data() {
    let op = cauchy_laplace_operator(10).unwrap();
    let mut rng = skewt_inverse::seeded_rng(1);
    for _ in 0..10 {
        let u1: Vec<f64> = (0..10).map(|_| rng.random_range(-5.0..5.0)).collect();
        let u2: Vec<f64> = (0..10).map(|_| rng.random_range(-5.0..5.0)).collect();
        let sum: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a + b).collect();
        let (a1, a2, a12) = (op.apply(&u1).unwrap(), op.apply(&u2).unwrap(), op.apply(&sum).unwrap());
        for i in 0..10 {
            assert!((a12[i] - a1[i] - a2[i]).abs() < 1e-10);
        }
    }
}

#[test]
fn mirror_symmetry() {
    let op = cauchy_laplace_operator(9).unwrap();
    let mut rng = skewt_inverse::seeded_rng(2);
    let u: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut rev = u.clone();
    rev.reverse();
    let mut out = op.apply(&u).unwrap();
    out.reverse();
    let out_rev = op.apply(&rev).unwrap();
    for i in 0..9 {
        assert!((out[i] - out_rev[i]).abs() < 1e-12);
    }
}

#[test]
fn severely_ill_conditioned_at_sixteen() {
    let op = cauchy_laplace_operator(16).unwrap();
    let ratio = sigma_max(op.matrix()) / sigma_min(op.matrix());
    assert!(ratio > 1e3, "condition number {ratio}");
}
