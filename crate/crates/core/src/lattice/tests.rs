use super::*;
use crate::random::{band_limited, trial_rng};
use crate::C64;
use approx::assert_relative_eq;
use proptest::prelude::*;
use std::f64::consts::PI;

fn t1(m: usize) -> Torus {
    Torus::new(1, m, 1.0).unwrap()
}

/// Naive `O(N²)` unitary DFT, same sign convention as the fast path.
fn naive_dft(f: &Field) -> Vec<C64> {
    let torus = f.torus();
    let np = torus.num_points();
    let norm = 1.0 / (np as f64).sqrt();
    let mut out = vec![C64::new(0.0, 0.0); np * f.fiber()];
    for k in 0..np {
        let kc = torus.coords(k);
        for p in 0..np {
            let pc = torus.coords(p);
            let phase: f64 = (0..torus.dim())
                .map(|a| kc[a] as f64 * pc[a] as f64 / torus.points_per_axis() as f64)
                .sum();
            let w = C64::from_polar(norm, -2.0 * PI * phase);
            for c in 0..f.fiber() {
                out[k * f.fiber() + c] += w * f.at(p)[c];
            }
        }
    }
    out
}

#[test]
fn torus_validation() {
    assert!(Torus::new(0, 8, 1.0).is_err());
    assert!(Torus::new(4, 8, 1.0).is_err());
    assert!(Torus::new(1, 6, 1.0).is_err());
    assert!(Torus::new(1, 2, 1.0).is_err());
    assert!(Torus::new(1, 8, 0.0).is_err());
    let t = Torus::new(2, 8, 2.0).unwrap();
    assert_eq!(t.num_points(), 64);
    assert_relative_eq!(t.spacing(), 0.25);
    assert_relative_eq!(t.volume(), 4.0);
}

#[test]
fn frequencies_symmetric_except_nyquist() {
    let t = t1(8);
    let ks: Vec<i64> = (0..8).map(|j| t.wavenumber(j)).collect();
    assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
    assert_relative_eq!(t.frequency(1)[0], 2.0 * PI);
}

#[test]
fn constant_field_transforms_to_zero_mode() {
    let t = Torus::new(2, 8, 1.0).unwrap();
    let f = Field::constant(t, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    let hat = forward_transform(&f);
    for p in 1..t.num_points() {
        assert!(hat.at(p).iter().all(|z| z.norm() < 1e-13));
    }
    assert_relative_eq!(hat.at(0)[0].re, 8.0, epsilon = 1e-12);
}

#[test]
fn pure_mode_has_single_coefficient() {
    let t = t1(16);
    let f = Field::from_fn(t, 1, |x, out| out[0] = C64::from_polar(1.0, 2.0 * PI * x[0]));
    let hat = forward_transform(&f);
    for p in 0..16 {
        let expected = if p == 1 { 4.0 } else { 0.0 };
        assert!((hat.at(p)[0] - C64::new(expected, 0.0)).norm() < 1e-12, "p = {p}");
    }
}

#[test]
fn fast_transform_matches_direct_summation() {
    for (dim, m) in [(1, 16), (2, 8), (3, 4)] {
        let t = Torus::new(dim, m, 1.5).unwrap();
        let mut rng = trial_rng(3, dim as u64);
        let f = band_limited(&t, 2, m, &mut rng).unwrap();
        let fast = forward_transform(&f);
        let slow = naive_dft(&f);
        let err: f64 = fast.data().iter().zip(&slow).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let scale: f64 = slow.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(err <= 1e-12 * scale, "dim {dim}: {err}");
    }
}

#[test]
fn lp_norm_examples() {
    let t = Torus::new(2, 8, 3.0).unwrap();
    let c = C64::new(0.6, -0.8) * 2.5;
    let f = Field::constant(t, &[c]);
    for p in [1.0, 1.5, 2.0, 3.0] {
        assert_relative_eq!(f.lp_norm(p).unwrap(), 2.5 * 9f64.powf(1.0 / p), max_relative = 1e-13);
    }
    assert_relative_eq!(f.lp_norm(f64::INFINITY).unwrap(), 2.5, max_relative = 1e-13);
    assert_relative_eq!(f.scaled(C64::new(2.0, 0.0)).lp_norm(1.5).unwrap(), 2.0 * f.lp_norm(1.5).unwrap(), max_relative = 1e-14);
    assert!(f.lp_norm(0.5).is_err());

    let half = Field::from_fn(t1(16), 1, |x, out| out[0] = C64::new(if x[0] < 0.5 { 1.0 } else { 0.0 }, 0.0));
    assert_relative_eq!(half.lp_norm(2.0).unwrap(), 0.5f64.sqrt(), max_relative = 1e-13);
}

#[test]
fn distance_examples() {
    let t = t1(16);
    let s = |i| GridSet::singleton(t, i);
    assert_eq!(periodic_distance(&s(3), &s(3)).unwrap(), 0.0);
    assert_relative_eq!(periodic_distance(&s(0), &s(8)).unwrap(), 0.5);

    let t = Torus::new(1, 64, 1.0).unwrap();
    let a = GridSet::from_fn(t, |x| x[0] < 1e-9);
    let b = GridSet::from_fn(t, |x| (x[0] - 0.9).abs() < 1e-9 || (x[0] - 0.90625).abs() < 1e-9);
    assert_relative_eq!(periodic_distance(&a, &b).unwrap(), 0.09375, max_relative = 1e-12);
    assert!(matches!(periodic_distance(&GridSet::empty(t), &a), Err(crate::Error::EmptySet)));
}

#[test]
fn dyadic_counting_and_errors() {
    let t = t1(8);
    let cubes = dyadic_cubes(&t, 1).unwrap();
    assert_eq!(cubes.len(), 4);
    assert!(cubes.iter().all(|q| q.points(&t).len() == 2));
    assert!(dyadic_cubes(&t, 4).is_err());
    assert_relative_eq!(cubes[0].sidelength(&t), 0.25);
}

#[test]
fn each_point_in_exactly_one_cube() {
    for (dim, m) in [(1, 64), (2, 16), (3, 8)] {
        let t = Torus::new(dim, m, 1.0).unwrap();
        for level in 0..=m.trailing_zeros() {
            let cubes = dyadic_cubes(&t, level).unwrap();
            for p in 0..t.num_points() {
                let owners = cubes.iter().filter(|q| q.contains(&t, p)).count();
                assert_eq!(owners, 1);
                assert!(dyadic_cube_of(&t, level, p).unwrap().contains(&t, p));
            }
        }
    }
}

#[test]
fn shells() {
    let t = Torus::new(2, 32, 1.0).unwrap();
    let b = Ball::new(&[0.5, 0.5], 0.05);
    assert_eq!(shell(t, &b, 1).unwrap(), GridSet::ball(t, &b.scaled(4.0)));
    // Union of shells 1..J is 2^{J+1}B and the shells are pairwise disjoint.
    let mut union = GridSet::empty(t);
    let mut total = 0;
    for j in 1..=3 {
        let s = shell(t, &b, j).unwrap();
        total += s.count();
        union = union.union(&s);
    }
    assert_eq!(union, GridSet::ball(t, &b.scaled(16.0)));
    assert_eq!(union.count(), total);
    assert!(shell(t, &b, 0).is_err());
}

#[test]
fn field_io_round_trip() {
    let t = Torus::new(2, 4, 1.25).unwrap();
    let mut rng = trial_rng(9, 0);
    let f = band_limited(&t, 3, 4, &mut rng).unwrap();
    let mut buf = Vec::new();
    io::write_binary(&mut buf, &f).unwrap();
    let g = io::read_binary(&mut buf.as_slice()).unwrap();
    assert_eq!(f, g);
    let mut text = Vec::new();
    io::write_csv(&mut text, &f).unwrap();
    let h = io::read_csv(text.as_slice()).unwrap();
    assert_eq!(f, h);
    assert!(io::read_csv("x\n".as_bytes()).is_err());
}

#[test]
fn matrix_field_inverse_and_apply() {
    let t = t1(4);
    let m = MatrixField::from_fn(t, 2, 2, |p| {
        nalgebra::DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(2.0 + p as f64, 0.0), C64::new(0.0, 1.0), C64::new(0.5, 0.0), C64::new(3.0, 0.0)],
        )
    })
    .unwrap();
    let id = m.mul(&m.inverse().unwrap()).unwrap();
    for p in 0..4 {
        let d = id.matrix_at(p) - nalgebra::DMatrix::identity(2, 2);
        assert!(d.norm() < 1e-14);
    }
    let u = Field::constant(t, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    assert_eq!(m.apply(&u).unwrap().at(1), &[C64::new(3.0, 0.0), C64::new(0.5, 0.0)]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transform_round_trip_and_parseval(seed in any::<u64>(), dim in 1usize..=3, fiber in 1usize..=3) {
        let m = [32, 8, 4][dim - 1];
        let t = Torus::new(dim, m, 2.0).unwrap();
        let mut rng = trial_rng(seed, 0);
        let f = band_limited(&t, fiber, m, &mut rng).unwrap();
        let back = inverse_transform(&forward_transform(&f));
        let n = f.norm2();
        prop_assert!((&back - &f).norm2() <= 1e-12 * n);
        let hat = forward_transform(&f);
        prop_assert!((hat.norm2() - n).abs() <= 1e-10 * n);
    }

    #[test]
    fn distance_symmetric_and_triangle(a in 0usize..64, b in 0usize..64, c in 0usize..64) {
        let t = Torus::new(2, 8, 1.0).unwrap();
        let s = |i| GridSet::singleton(t, i);
        let dab = periodic_distance(&s(a), &s(b)).unwrap();
        let dba = periodic_distance(&s(b), &s(a)).unwrap();
        let dbc = periodic_distance(&s(b), &s(c)).unwrap();
        let dac = periodic_distance(&s(a), &s(c)).unwrap();
        prop_assert_eq!(dab, dba);
        prop_assert!(dac <= dab + dbc + 1e-12);
        prop_assert_eq!(dab == 0.0, a == b);
    }

    #[test]
    fn lp_norm_homogeneous_and_monotone(seed in any::<u64>(), p in 1.0f64..6.0, s in 0.01f64..10.0) {
        let t = Torus::new(1, 32, 1.0).unwrap();
        let mut rng = trial_rng(seed, 1);
        let f = band_limited(&t, 2, 8, &mut rng).unwrap();
        let a = f.lp_norm(p).unwrap();
        prop_assert!((f.scaled(C64::new(0.0, s)).lp_norm(p).unwrap() - s * a).abs() <= 1e-12 * s * a);
        // Shrinking one component pointwise cannot increase the norm.
        let mut g = f.clone();
        for p in 0..t.num_points() { g.at_mut(p)[0] *= 0.5; }
        prop_assert!(g.lp_norm(p).unwrap() <= a * (1.0 + 1e-14));
    }
}
