use super::*;
use crate::dirac::{dirac1d_symbol, random_dirac1d};
use crate::random::{band_limited, trial_rng, CoefficientSpec};
use crate::resolvent::{ResolventPlan, SolverMode, SolverOptions};
use crate::PerturbedDirac;
use approx::assert_relative_eq;
use proptest::prelude::*;
use std::f64::consts::PI;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn torus(n: usize, m: usize) -> Torus {
    Torus::new(n, m, 1.0).unwrap()
}

fn constant(grid: &TimeGrid, t: Torus) -> TentField {
    TentField::from_fn(grid.clone(), |_, _| Ok(Field::constant(t, &[c(1.0)]))).unwrap()
}

fn random_tent(grid: &TimeGrid, t: Torus, fiber: usize, seed: u64) -> TentField {
    let mut rng = trial_rng(seed, 0);
    let band = (t.points_per_axis() / 2).max(2);
    TentField::from_fn(grid.clone(), |i, _| {
        let f = band_limited(&t, fiber, band, &mut rng)?;
        // Vary the amplitude across times so slices are not exchangeable.
        Ok(f.scaled(c(1.0 + (i as f64 * 0.7).sin())))
    })
    .unwrap()
}

fn fubini(f: &TentField) -> f64 {
    let n = f.torus().dim();
    unit_ball_volume(n) * f.grid().weights().iter().zip(f.slices()).map(|(w, s)| w * s.norm2().powi(2)).sum::<f64>()
}

fn model(m: usize) -> ResolventPlan {
    ResolventPlan::automatic(PerturbedDirac::unperturbed(dirac1d_symbol(), torus(1, m)).unwrap()).unwrap()
}

fn perturbed(m: usize, seed: u64) -> ResolventPlan {
    let mut rng = trial_rng(seed, 0);
    let op = random_dirac1d(torus(1, m), &CoefficientSpec::smooth(0.5, 4), &mut rng).unwrap().audited(8, seed).unwrap();
    ResolventPlan::new(op, SolverMode::Dense, SolverOptions::default()).unwrap()
}

#[test]
fn time_grid_construction() {
    let g = TimeGrid::geometric(0.01, 0.16, 2f64.sqrt()).unwrap();
    assert_eq!(g.len(), 9);
    assert_relative_eq!(g.t_max(), 0.16, max_relative = 1e-12);
    for w in g.times().windows(2) {
        assert!((w[1] / w[0] / g.ratio() - 1.0).abs() < 1e-12);
    }
    assert_relative_eq!(g.weights().iter().sum::<f64>(), 16f64.ln(), max_relative = 1e-14);
    let d = TimeGrid::default_for(&torus(1, 64)).unwrap();
    assert_relative_eq!(d.t_min(), 1.0 / 64.0);
    assert_relative_eq!(d.ratio(), 2f64.powf(0.25), max_relative = 1e-15);
    assert_eq!(d.len(), 13);
    assert_eq!(d.refined().unwrap().len(), 25);
    assert!(TimeGrid::geometric(0.1, 0.1, 2.0).is_err());
    assert!(TimeGrid::geometric(0.1, 1.0, 1.0).is_err());
    assert!(TimeGrid::geometric(-0.1, 1.0, 2.0).is_err());
    let wide = TimeGrid::geometric(0.01, 0.5, 2.0).unwrap();
    assert!(wide.check_torus(&torus(1, 64)).is_err());
    assert!(TentField::zeros(wide, torus(1, 64), 1).is_err());
}

#[test]
fn tent_field_validation_and_io() {
    let t = torus(2, 8);
    let g = TimeGrid::geometric(0.125, 0.25, 2f64.sqrt()).unwrap();
    assert!(TentField::new(g.clone(), vec![Field::zeros(t, 1)]).is_err());
    let mut bad = Field::zeros(t, 1);
    bad.data_mut()[3] = c(f64::NAN);
    assert!(TentField::new(g.clone(), vec![bad, Field::zeros(t, 1), Field::zeros(t, 1)]).is_err());
    let mixed = vec![Field::zeros(t, 1), Field::zeros(t, 2), Field::zeros(t, 1)];
    assert!(TentField::new(g.clone(), mixed).is_err());

    let f = random_tent(&g, t, 2, 3);
    let mut buf = Vec::new();
    f.write_binary(&mut buf).unwrap();
    let back = TentField::read_binary(&mut buf.as_slice()).unwrap();
    assert_eq!(back, f);
    assert!(TentField::read_binary(&mut &buf[..buf.len() - 1]).is_err());
}

#[test]
fn constant_field_norms() {
    let t = torus(1, 64);
    let g = TimeGrid::default_for(&t).unwrap();
    let f = constant(&g, t);
    let log = (g.t_max() / g.t_min()).ln();
    assert_relative_eq!(tent_norm(&f, 2.0, 1.0).unwrap().powi(2), 2.0 * log, max_relative = 1e-12);
    assert_relative_eq!(tent_norm(&f, 3.0, 1.0).unwrap(), (2.0 * log).sqrt(), max_relative = 1e-12);
    assert_relative_eq!(carleson_norm(&f).unwrap(), (2.0 * log).sqrt(), max_relative = 1e-12);
    for p in [1.0, 1.5, 2.0, 3.0] {
        assert_relative_eq!(vertical_norm(&f, p).unwrap(), log.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(nontangential(&f, p, 1.0).unwrap(), 1.0, max_relative = 1e-12);
    }
    let t2 = Torus::new(2, 16, 2.0).unwrap();
    let g2 = TimeGrid::default_for(&t2).unwrap();
    let f2 = constant(&g2, t2);
    let log2 = (g2.t_max() / g2.t_min()).ln();
    assert_relative_eq!(tent_norm(&f2, 2.0, 1.0).unwrap().powi(2), 4.0 * PI * log2, max_relative = 1e-12);
    assert_relative_eq!(vertical_norm(&f2, 1.5).unwrap(), log2.sqrt() * 4f64.powf(1.0 / 1.5), max_relative = 1e-12);
}

#[test]
fn homogeneity_and_single_slice() {
    let t = torus(1, 32);
    let g = TimeGrid::default_for(&t).unwrap();
    let f = TentField::from_fn(g.clone(), |i, _| {
        let mut s = Field::zeros(t, 1);
        if i == 3 {
            s.data_mut()[5] = c(1.5);
        }
        Ok(s)
    })
    .unwrap();
    for p in [1.0, 2.0, 3.0] {
        assert_relative_eq!(
            tent_norm(&f.scaled(c(2.0)), p, 1.0).unwrap(),
            2.0 * tent_norm(&f, p, 1.0).unwrap(),
            max_relative = 1e-14
        );
    }
    // A point mass at (t_3, x_5): the sup is attained at the smallest ball
    // containing it, whose radius is t_3 and which holds a fraction of the cell.
    let t3 = g.times()[3];
    let ball = BallStencil::new(&t, t3).unwrap();
    let mut d = vec![0.0; 32];
    d[5] = 1.5 * 1.5 * g.weights()[3];
    let expected = ball.integrate(&t, &d).into_iter().fold(0.0, f64::max) / t3;
    assert_relative_eq!(carleson_norm(&f).unwrap(), expected.sqrt(), max_relative = 1e-14);
}

#[test]
fn fubini_identity_in_each_dimension() {
    for (n, m) in [(1, 64), (2, 32), (3, 16)] {
        let t = torus(n, m);
        let g = TimeGrid::geometric(t.spacing(), 0.125, 2f64.sqrt()).unwrap();
        let f = random_tent(&g, t, 2, n as u64);
        let lhs = tent_norm(&f, 2.0, 1.0).unwrap().powi(2);
        assert!((lhs - fubini(&f)).abs() <= 1e-10 * lhs, "n = {n}");
        assert_relative_eq!(vertical_norm(&f, 2.0).unwrap().powi(2) * unit_ball_volume(n), lhs, max_relative = 1e-12);
    }
}

#[test]
fn aperture_laws() {
    let t = torus(2, 32);
    let g = TimeGrid::default_for(&t).unwrap();
    for seed in 0..4 {
        let f = random_tent(&g, t, 1, seed);
        for p in [1.5, 2.0, 3.0] {
            let base = tent_norm(&f, p, 1.0).unwrap();
            for a in [2.0, 4.0] {
                let wide = tent_norm(&f, p, a).unwrap();
                assert!(wide >= base);
                let growth = (wide / base).ln() / a.ln();
                assert!(growth <= 2.0 / p.min(2.0) + 0.2, "p {p} α {a}: {growth}");
            }
        }
        // At p = 2 the growth is exactly α^{n/2}.
        assert_relative_eq!(tent_norm(&f, 2.0, 2.0).unwrap(), 2.0 * tent_norm(&f, 2.0, 1.0).unwrap(), max_relative = 1e-12);
    }
    let f = random_tent(&g, t, 1, 9);
    assert!(matches!(tent_norm(&f, 2.0, 5.0), Err(Error::Aperture { .. })));
    assert!(tent_norm(&f, 2.0, 0.5).is_err());
    assert!(tent_norm(&f, 0.5, 1.0).is_err());
}

#[test]
fn vertical_norm_converges_under_refinement() {
    let field = |m: usize, g: &TimeGrid| {
        let t = torus(1, m);
        TentField::from_fn(g.clone(), |_, s| {
            Ok(Field::from_fn(t, 1, |x, o| {
                let w = 2.0 * PI * 3.0;
                o[0] = c(s * w / (1.0 + s * s * w * w) * (2.0 + (2.0 * PI * x[0]).cos()) + (2.0 * PI * x[0]).sin());
            }))
        })
        .unwrap()
    };
    let coarse_grid = TimeGrid::geometric(1.0 / 32.0, 0.125, 2f64.powf(0.25)).unwrap();
    let fine_grid = coarse_grid.refined().unwrap().refined().unwrap();
    let coarse = vertical_norm(&field(32, &coarse_grid), 1.5).unwrap();
    let fine = vertical_norm(&field(128, &fine_grid), 1.5).unwrap();
    assert!((coarse / fine - 1.0).abs() < 0.02, "{coarse} vs {fine}");
}

#[test]
fn dyadic_average_examples() {
    let t = torus(2, 16);
    let h = t.spacing();
    assert_eq!(dyadic_level(&t, h).unwrap(), 0);
    assert_eq!(dyadic_level(&t, 0.6 * h).unwrap(), 0);
    assert_eq!(dyadic_level(&t, 1.01 * h).unwrap(), 1);
    assert_eq!(dyadic_level(&t, 4.0 * h).unwrap(), 2);
    assert_eq!(dyadic_level(&t, 16.0 * h).unwrap(), 4);
    assert!(matches!(dyadic_level(&t, 0.5 * h), Err(Error::DyadicRange(_))));
    assert!(dyadic_level(&t, 17.0 * h).is_err());

    let k = Field::constant(t, &[c(2.0), C64::new(0.0, 1.0)]);
    assert_eq!(dyadic_average(&k, 3.0 * h).unwrap(), k);

    // Indicator of an aligned level-2 cube.
    let cube = crate::lattice::dyadic_cube_of(&t, 2, t.index(&[5, 9])).unwrap();
    let ind = Field::from_vec(t, 1, (0..t.num_points()).map(|p| c(cube.contains(&t, p) as u8 as f64)).collect()).unwrap();
    assert_eq!(dyadic_average(&ind, 4.0 * h).unwrap(), ind);

    // e^{iωx} averaged over [a, a + L): (e^{iω(a+L)} − e^{iωa})/(iωL), with the
    // grid mean as the discrete analogue (sum of a geometric series).
    let t1 = torus(1, 64);
    let w = 2.0 * PI * 3.0;
    let u = Field::from_fn(t1, 1, |x, o| o[0] = C64::from_polar(1.0, w * x[0]));
    let a8 = dyadic_average(&u, 8.0 * t1.spacing()).unwrap();
    let hh = t1.spacing();
    for p in [0usize, 13, 40] {
        let start = (p / 8 * 8) as f64 * hh;
        let z = C64::from_polar(1.0, w * hh);
        let mean = C64::from_polar(1.0, w * start) * (c(1.0) - z.powu(8)) / (c(1.0) - z) / 8.0;
        assert!((a8.at(p)[0] - mean).norm() < 1e-14);
        // Matches the continuum mean up to the midpoint-rule error.
        let cont = (C64::from_polar(1.0, w * (start + 8.0 * hh)) - C64::from_polar(1.0, w * start))
            / (C64::new(0.0, w) * 8.0 * hh)
            * C64::from_polar(1.0, -0.5 * w * hh);
        assert!((a8.at(p)[0] - cont).norm() < 0.01);
    }
}

#[test]
fn principal_part_examples() {
    let plan = model(32);
    let g = TimeGrid::default_for(plan.operator().torus()).unwrap();
    let gamma = principal_part(&plan, &g).unwrap();
    for i in 0..g.len() {
        assert!(gamma.slice(i).sup_norm() < 1e-12);
    }
    let mut rng = trial_rng(1, 1);
    let u = band_limited(plan.operator().torus(), 2, 8, &mut rng).unwrap();
    let split = principal_split(&plan, &gamma, &u, 2).unwrap();
    assert!(split.principal.max_abs() < 1e-12);
    assert!(split.approx_err.sub(&split.full).unwrap().max_abs() < 1e-12);
    assert!(principal_split(&plan, &gamma, &u, 0).is_err());

    let plan = perturbed(32, 2);
    let gamma = principal_part(&plan, &g).unwrap();
    assert!(gamma.slice(g.len() - 1).sup_norm() > 1e-3);
    let split = principal_split(&plan, &gamma, &u, 2).unwrap();
    let re = split.approx_err.add(&split.principal).unwrap().sub(&split.full).unwrap();
    assert!(re.max_abs() <= 1e-10 * split.full.max_abs());
    assert!(tent_norm(&split.approx_err, 2.0, 1.0).unwrap().is_finite());

    // Local L² bound ‖γ_t e‖_{L²(B(x,t))} ≲ t^{n/2}.
    let col = gamma.column(1).unwrap();
    let ratios: Vec<f64> = g
        .times()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let d: Vec<f64> = col.slice(i).pointwise_norms().iter().map(|v| v * v).collect();
            let local = BallStencil::new(plan.operator().torus(), t).unwrap().integrate(plan.operator().torus(), &d);
            local.into_iter().fold(0.0, f64::max).sqrt() / t.sqrt()
        })
        .collect();
    assert!(ratios.iter().all(|r| r.is_finite() && *r < 10.0), "{ratios:?}");
}

#[test]
fn principal_part_carleson_is_refinement_stable() {
    let g = TimeGrid::geometric(1.0 / 32.0, 0.125, 2f64.powf(0.25)).unwrap();
    let norms: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&m| {
            let gamma = principal_part(&perturbed(m, 5), &g).unwrap();
            carleson_norm(&gamma.column(1).unwrap()).unwrap()
        })
        .collect();
    assert!(norms[0] > 0.0);
    assert!((norms[2] / norms[0] - 1.0).abs() < 0.05, "{norms:?}");
}

#[test]
fn schur_closed_forms() {
    let t = torus(1, 16);
    let g = TimeGrid::geometric(1.0 / 16.0, 0.25, 2f64.powf(0.25)).unwrap();
    let (a, b) = (g.t_min(), g.t_max());
    let f = constant(&g, t);
    let minus = schur_apply(&IdentityKernel, SchurVariant::Minus { alpha: 1.0 }, &f).unwrap();
    let (beta, gamma) = (0.5, 1.0);
    let plus = schur_apply(&IdentityKernel, SchurVariant::Plus { beta, gamma }, &f).unwrap();
    let z = C64::new(beta, gamma);
    for (i, &tt) in g.times().iter().enumerate() {
        let exact = tt * (1.0 / tt.max(a) - 1.0 / b);
        assert!((minus.slice(i).at(0)[0].re - exact).abs() <= 0.01 * exact.max(1e-3), "{i}");
        let exact = (c(1.0) - (z * (a / tt).ln()).exp()) / z;
        assert!((plus.slice(i).at(0)[0] - exact).norm() <= 0.01 * exact.norm().max(1e-3), "{i}");
    }
    let zero = TentField::zeros(g.clone(), t, 1).unwrap();
    assert_eq!(schur_apply(&IdentityKernel, SchurVariant::Minus { alpha: 1.0 }, &zero).unwrap().max_abs(), 0.0);
}

#[test]
fn schur_adjoint_and_norm() {
    let plan = model(16);
    let t = *plan.operator().torus();
    let g = TimeGrid::geometric(1.0 / 16.0, 0.25, 2f64.sqrt()).unwrap();
    let k = CalderonKernel::new(&plan, 2).unwrap();
    assert!(k.has_adjoint());
    let variant = SchurVariant::Plus { beta: 0.5, gamma: 1.0 };
    let f = random_tent(&g, t, 2, 1);
    let h = random_tent(&g, t, 2, 2);
    let inner = |x: &TentField, y: &TentField| -> C64 {
        x.slices().iter().zip(y.slices()).zip(g.weights()).map(|((a, b), w)| a.inner(b) * *w).sum()
    };
    let lhs = inner(&schur_apply(&k, variant, &f).unwrap(), &h);
    let rhs = inner(&f, &schur::schur_adjoint(&k, variant, &h).unwrap());
    assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
    let est = schur_norm_estimate(&k, variant, &g, &t, 2, 15, 3).unwrap();
    assert!(est.power_iteration && est.norm > 0.0 && est.norm < 10.0 && est.change < 1e-3, "{est:?}");
    // The identity kernel with K⁻_1 is bounded by ∫_1^∞ τ^{-1} dτ/τ = 1.
    let id = schur_norm_estimate(&IdentityKernel, SchurVariant::Minus { alpha: 1.0 }, &g, &t, 1, 30, 3).unwrap();
    assert!(id.norm <= 1.01, "{id:?}");
    assert!(CalderonKernel::new(&plan, 0).is_err());
    let pert = perturbed(16, 1);
    assert!(!CalderonKernel::new(&pert, 2).unwrap().has_adjoint());
}

#[test]
fn calderon_constants() {
    // 1/(½B(Ñ,Ñ)) for Ñ = 1, 2, 3, 4.
    for (n, expected) in [(1, 2.0), (2, 12.0), (3, 60.0), (4, 280.0)] {
        assert_relative_eq!(calderon_constant(n).unwrap(), expected, max_relative = 1e-12);
    }
    assert!(calderon_constant(0).is_err());
}

#[test]
fn factorization_examples() {
    let t = torus(1, 32);
    let g = TimeGrid::default_for(&t).unwrap();
    let one = constant(&g, t);
    for (p, q) in [(1.5, 2.0), (2.0, 3.0), (3.0, 1.5)] {
        let r = factorization_check(&one, &one, p, q).unwrap();
        let log = (g.t_max() / g.t_min()).ln();
        let expected = (2.0 * log).powf(1.0 / q) / (2.0 * log).powf(1.0 / q);
        assert_relative_eq!(r.ratio, expected, max_relative = 1e-12);
    }
    let zero = TentField::zeros(g.clone(), t, 1).unwrap();
    let r = factorization_check(&one, &zero, 2.0, 2.0).unwrap();
    assert_eq!((r.lhs, r.ratio), (0.0, 0.0));
    assert!(factorization_check(&one, &one, 1.0, 2.0).is_err());
    let f = random_tent(&g, t, 1, 4);
    let h = random_tent(&g, t, 2, 5);
    let r = factorization_check(&f, &h, 2.0, 2.0).unwrap();
    assert!(r.ratio > 0.0 && r.ratio < 10.0);
}

#[test]
fn nontangential_max_examples() {
    let plan = model(32);
    let t = *plan.operator().torus();
    let g = TimeGrid::default_for(&t).unwrap();
    let one = Field::constant(t, &[c(1.0), c(0.0)]);
    let p_t = |s: f64, u: &Field| plan.p_t(s, u);
    for p in [1.5, 2.0, 3.0] {
        let r = nontangential_max(&one, &p_t, p, &g).unwrap();
        assert_relative_eq!(r.norm, 1.0, max_relative = 1e-12);
        assert_relative_eq!(r.maximal_norm, 1.0, max_relative = 1e-12);
    }
    let zero = |_: f64, u: &Field| Ok(Field::zeros(*u.torus(), u.fiber()));
    assert_eq!(nontangential_max(&one, &zero, 2.0, &g).unwrap().norm, 0.0);
    let mut rng = trial_rng(2, 2);
    let u = band_limited(&t, 2, 8, &mut rng).unwrap();
    let r = nontangential_max(&u, &p_t, 2.0, &g).unwrap();
    assert!(r.norm <= 5.0 * r.maximal_norm, "{r:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn aperture_monotone_and_fubini(seed in any::<u64>(), p in 1.0f64..4.0) {
        let t = torus(1, 32);
        let g = TimeGrid::default_for(&t).unwrap();
        let f = random_tent(&g, t, 1, seed);
        let base = tent_norm(&f, p, 1.0).unwrap();
        prop_assert!(base <= tent_norm(&f, p, 2.0).unwrap());
        prop_assert!(tent_norm(&f, p, 2.0).unwrap() <= tent_norm(&f, p, 4.0).unwrap());
        let two = tent_norm(&f, 2.0, 1.0).unwrap().powi(2);
        prop_assert!((two - fubini(&f)).abs() <= 1e-10 * two);
    }

    #[test]
    fn dyadic_average_is_a_contracting_projection(seed in any::<u64>(), k in 0u32..5) {
        let t = torus(2, 16);
        let mut rng = trial_rng(seed, 0);
        let u = band_limited(&t, 2, 16, &mut rng).unwrap();
        let s = t.spacing() * 2f64.powi(k as i32);
        let a = dyadic_average(&u, s).unwrap();
        let aa = dyadic_average(&a, s).unwrap();
        prop_assert!((&aa - &a).max_abs() <= 1e-14 * u.max_abs());
        prop_assert!(a.norm2() <= u.norm2() * (1.0 + 1e-14));
    }

    #[test]
    fn schur_is_linear(seed in any::<u64>(), alpha in 0.2f64..2.0) {
        let t = torus(1, 16);
        let g = TimeGrid::default_for(&t).unwrap();
        let f = random_tent(&g, t, 1, seed);
        let h = random_tent(&g, t, 1, seed.wrapping_add(1));
        let v = SchurVariant::Minus { alpha };
        let lhs = schur_apply(&IdentityKernel, v, &f.scaled(C64::new(0.5, 2.0)).add(&h).unwrap()).unwrap();
        let rhs = schur_apply(&IdentityKernel, v, &f).unwrap().scaled(C64::new(0.5, 2.0)).add(&schur_apply(&IdentityKernel, v, &h).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-13 * lhs.max_abs());
    }
}
