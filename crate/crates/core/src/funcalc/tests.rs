use super::*;
use crate::dirac::{dirac1d_symbol, make_elliptic, random_dirac1d, random_elliptic};
use crate::lattice::{Field, MatrixField, Torus};
use crate::probes::dense_oracle;
use crate::random::{band_limited, trial_rng, CoefficientSpec};
use crate::resolvent::{hodge_projections, ResolventPlan, SolverMode, SolverOptions};
use crate::{PerturbedDirac, C64};
use proptest::prelude::*;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn rel(a: &Field, b: &Field) -> f64 {
    (a - b).norm2() / b.norm2().max(f64::MIN_POSITIVE)
}

fn model(m: usize) -> ResolventPlan {
    let t = Torus::new(1, m, 1.0).unwrap();
    ResolventPlan::automatic(PerturbedDirac::unperturbed(dirac1d_symbol(), t).unwrap()).unwrap()
}

fn perturbed(m: usize, seed: u64, mode: SolverMode) -> ResolventPlan {
    let t = Torus::new(1, m, 1.0).unwrap();
    let mut rng = trial_rng(seed, 0);
    let op = random_dirac1d(t, &CoefficientSpec::smooth(0.5, 4), &mut rng).unwrap().audited(8, seed).unwrap();
    ResolventPlan::new(op, mode, SolverOptions::default()).unwrap()
}

fn range_part(plan: &ResolventPlan, u: &Field) -> Field {
    let h = hodge_projections(plan, u).unwrap();
    u - &h.null
}

fn psi_apply(plan: &ResolventPlan, psi: &PsiFunction, u: &Field) -> Field {
    let contour = Contour::for_functions(plan, std::slice::from_ref(psi), &QuadratureOptions::default()).unwrap();
    apply_psi(plan, psi, &contour, u).unwrap()
}

#[test]
fn rational_psi_is_q_one_on_a_mode() {
    let plan = model(32);
    let t = *plan.operator().torus();
    let w = 4.0 * PI;
    let u = Field::from_fn(t, 2, |x, o| o[0] = C64::from_polar(1.0, w * x[0]));
    let psi = PsiFunction::rational(1.0, 1.0).unwrap();
    let got = psi_apply(&plan, &psi, &u);
    let exact = Field::from_fn(t, 2, |x, o| o[1] = C64::from_polar(w / (1.0 + w * w), w * x[0]));
    assert!(rel(&got, &exact) < 1e-8);
    let zero = PsiFunction::new("zero", 1.0, 1.0, 1.5, |_| c(0.0, 0.0)).unwrap();
    assert_eq!(psi_apply(&plan, &zero, &u).max_abs(), 0.0);
}

#[test]
fn resolvent_pair_matches_resolvents() {
    for plan in [model(32), perturbed(32, 2, SolverMode::Iterative)] {
        let mut rng = trial_rng(1, 1);
        let u = band_limited(plan.operator().torus(), 2, 16, &mut rng).unwrap();
        let (a, b) = (0.03, 0.4);
        let psi = PsiFunction::resolvent_pair(a, b).unwrap();
        let got = psi_apply(&plan, &psi, &u);
        let direct = &plan.resolvent(a, &u).unwrap() - &plan.resolvent(b, &u).unwrap();
        assert!(rel(&got, &direct) < 1e-8, "{}", rel(&got, &direct));
    }
}

#[test]
fn perturbed_psi_matches_dense_oracle() {
    for seed in 0..3 {
        let plan = perturbed(16, seed, SolverMode::Dense);
        let mut rng = trial_rng(seed, 5);
        let u = band_limited(plan.operator().torus(), 2, 16, &mut rng).unwrap();
        for psi in [PsiFunction::rational(1.0, 1.0).unwrap(), PsiFunction::rational(0.5, 2.0).unwrap()] {
            let got = psi_apply(&plan, &psi, &u);
            let oracle = dense_oracle(plan.operator(), &|z| psi.eval(z), &u).unwrap();
            assert!(rel(&got, &oracle) < 1e-6, "{} seed {seed}: {}", psi.name(), rel(&got, &oracle));
        }
    }
}

#[test]
fn sgn_examples() {
    let plan = model(32);
    let t = *plan.operator().torus();
    let w = 2.0 * PI;
    let u = Field::from_fn(t, 2, |x, o| o[0] = C64::from_polar(1.0, w * x[0]));
    let s = apply_sgn(&plan, &u, &SgnOptions::default()).unwrap();
    let exact = Field::from_fn(t, 2, |x, o| o[1] = C64::from_polar(1.0, w * x[0]));
    assert!(rel(&s, &exact) < 1e-7);

    let k = Field::constant(t, &[c(1.0, 0.0), c(0.5, 0.5)]);
    assert!(matches!(apply_sgn(&plan, &k, &SgnOptions::default()), Err(crate::Error::SgnNullInput { .. })));
    assert!(apply_sgn_projected(&plan, &k, &SgnOptions::default()).unwrap().norm2() < 1e-12);
}

#[test]
fn sgn_involution_perturbed() {
    for seed in 0..3 {
        let plan = perturbed(32, seed, SolverMode::Iterative);
        let mut rng = trial_rng(seed, 9);
        let v = band_limited(plan.operator().torus(), 2, 8, &mut rng).unwrap();
        let u = plan.operator().apply_pi_b(&v).unwrap();
        let opts = SgnOptions::default();
        let s = apply_sgn(&plan, &u, &opts).unwrap();
        let ss = apply_sgn(&plan, &s, &opts).unwrap();
        assert!(rel(&ss, &u) < 1e-6, "seed {seed}: {}", rel(&ss, &u));
    }
}

#[test]
fn sgn_and_sqrt_match_dense_oracle() {
    let plan = perturbed(16, 4, SolverMode::Dense);
    let mut rng = trial_rng(4, 4);
    let u = band_limited(plan.operator().torus(), 2, 16, &mut rng).unwrap();
    let opts = SgnOptions::default();
    let s = apply_sgn_projected(&plan, &u, &opts).unwrap();
    let sign = |z: C64| c(if z.re > 0.0 { 1.0 } else if z.re < 0.0 { -1.0 } else { 0.0 }, 0.0);
    assert!(rel(&s, &dense_oracle(plan.operator(), &sign, &u).unwrap()) < 1e-6);
    let r = sqrt_pib2(&plan, &u, &opts).unwrap();
    assert!(rel(&r, &dense_oracle(plan.operator(), &sector_abs, &u).unwrap()) < 1e-6);

    let t2 = Torus::new(2, 8, 1.0).unwrap();
    let mut rng = trial_rng(6, 0);
    let ell = random_elliptic(t2, &CoefficientSpec::rough(0.4, 4), true, &mut rng).unwrap().audited(8, 6).unwrap();
    let plan = ResolventPlan::new(ell, SolverMode::Dense, SolverOptions::default()).unwrap();
    let u = band_limited(&t2, 3, 8, &mut rng).unwrap();
    let s = apply_sgn_projected(&plan, &u, &opts).unwrap();
    assert!(rel(&s, &dense_oracle(plan.operator(), &sign, &u).unwrap()) < 1e-6);
}

#[test]
fn square_root_of_laplacian() {
    let t = Torus::new(2, 16, 1.0).unwrap();
    let op = make_elliptic(&Field::constant(t, &[c(1.0, 0.0)]), &MatrixField::identity(t, 2)).unwrap();
    let plan = ResolventPlan::automatic(op.clone()).unwrap();
    let (k1, k2) = (2.0f64, -3.0f64);
    let w = 2.0 * PI * (k1 * k1 + k2 * k2).sqrt();
    let f = Field::from_fn(t, 3, |x, o| o[0] = C64::from_polar(1.0, 2.0 * PI * (k1 * x[0] + k2 * x[1])));
    let r = sqrt_pib2(&plan, &f, &SgnOptions::default()).unwrap();
    assert!(rel(&r, &f.scaled(c(w, 0.0))) < 1e-7);
    let mut rng = trial_rng(2, 0);
    let g = band_limited(&t, 1, 8, &mut rng).unwrap();
    let g3 = Field::from_components(&[g, Field::zeros(t, 2)]).unwrap();
    let lg = sqrt_pib2(&plan, &g3, &SgnOptions::default()).unwrap().component(0);
    let grad = op.apply_gamma(&g3).unwrap();
    assert!((lg.norm2() / grad.norm2() - 1.0).abs() < 1e-6);
}

#[test]
fn calculus_bound_examples() {
    let plan = model(16);
    let opts = RegularizationOptions::default();
    let bound = calculus_bound_estimate(&plan, 2.0, &dictionary(), 3, 1, &opts).unwrap();
    assert!(bound.max_ratio <= 1.0 + 1e-6, "{}", bound.max_ratio);
    assert_eq!(bound.samples.len(), 3 * dictionary().len());

    let plan = perturbed(16, 3, SolverMode::Dense);
    let bound = calculus_bound_estimate(&plan, 2.0, &dictionary(), 2, 1, &opts).unwrap();
    assert!(bound.max_ratio.is_finite() && bound.max_ratio < 10.0);

    let mut rng = trial_rng(3, 3);
    let u = band_limited(plan.operator().torus(), 2, 8, &mut rng).unwrap();
    let one = apply_bounded(&plan, &PsiFunction::one(), &u, &opts).unwrap();
    assert!(rel(&one, &range_part(&plan, &u)) < 1e-4);
}

#[test]
fn bounded_functions_match_oracle() {
    let plan = perturbed(16, 7, SolverMode::Dense);
    let mut rng = trial_rng(7, 1);
    let u = range_part(&plan, &band_limited(plan.operator().torus(), 2, 16, &mut rng).unwrap());
    let opts = RegularizationOptions::default();
    for f in [PsiFunction::phase(2.0), PsiFunction::sgn()] {
        let got = apply_bounded(&plan, &f, &u, &opts).unwrap();
        let oracle = dense_oracle(plan.operator(), &|z| f.eval(z), &u).unwrap();
        assert!(rel(&got, &oracle) < 1e-3, "{}: {}", f.name(), rel(&got, &oracle));
    }
}

#[test]
fn homomorphism_and_commutation() {
    let plan = model(32);
    let mut rng = trial_rng(5, 0);
    let u = band_limited(plan.operator().torus(), 2, 16, &mut rng).unwrap();
    let psi = PsiFunction::rational(1.0, 1.0).unwrap();
    let phi = PsiFunction::rational(2.0, 0.5).unwrap();
    let prod = psi_apply(&plan, &psi.product(&phi), &u);
    let comp = psi_apply(&plan, &psi, &psi_apply(&plan, &phi, &u));
    assert!((&prod - &comp).norm2() <= 2e-6 * u.norm2());
    let r = plan.resolvent(0.1, &u).unwrap();
    let a = psi_apply(&plan, &psi, &r);
    let b = plan.resolvent(0.1, &psi_apply(&plan, &psi, &u)).unwrap();
    assert!((&a - &b).norm2() <= 1e-9 * u.norm2());
}

#[test]
fn contour_independence() {
    let plan = perturbed(32, 1, SolverMode::Iterative);
    let mut rng = trial_rng(1, 8);
    let u = band_limited(plan.operator().torus(), 2, 16, &mut rng).unwrap();
    let psi = PsiFunction::rational(1.0, 1.0).unwrap();
    let omega = plan.operator().omega();
    let mut vals = Vec::new();
    for frac in [0.3, 0.7] {
        let opts = QuadratureOptions { theta: Some(omega + frac * (PI / 2.0 - omega)), ..Default::default() };
        let contour = Contour::for_functions(&plan, std::slice::from_ref(&psi), &opts).unwrap();
        vals.push(apply_psi_family(&plan, std::slice::from_ref(&psi), &contour, &u, &opts).unwrap().values.remove(0));
    }
    assert!((&vals[0] - &vals[1]).norm2() <= 2e-6 * vals[0].norm2());
}

#[test]
fn contour_validation() {
    assert!(Contour::new(0.0, 1e-3, 1e3).is_err());
    assert!(Contour::new(PI / 2.0, 1e-3, 1e3).is_err());
    assert!(Contour::new(0.5, 1.0, 1.1).is_err());
    assert!(Contour::new(0.5, 2.0, 1.0).is_err());
    let plan = perturbed(16, 0, SolverMode::Dense);
    let psi = PsiFunction::rational(1.0, 1.0).unwrap();
    let bad = QuadratureOptions { theta: Some(plan.operator().omega() * 0.5), ..Default::default() };
    if plan.operator().omega() > 0.0 {
        assert!(Contour::for_functions(&plan, std::slice::from_ref(&psi), &bad).is_err());
    }
    assert!(Contour::for_functions(&plan, &[PsiFunction::one()], &QuadratureOptions::default()).is_err());
    let c = Contour::for_functions(&plan, std::slice::from_ref(&psi), &QuadratureOptions::default()).unwrap();
    assert!(c.nodes_per_ray(1) > 2 * c.nodes_per_ray(0));
}

#[test]
fn dictionary_classes_and_parsing() {
    for f in dictionary() {
        let again = PsiFunction::parse(f.name()).unwrap();
        let z = c(0.7, -0.3);
        assert_eq!(again.eval(z), f.eval(z));
        assert!(!f.describe().is_empty());
        if f.is_decaying() {
            let k = f.class_constant(1.2);
            assert!(k.is_finite() && k < 50.0, "{}: {k}", f.name());
        }
    }
    let q = PsiFunction::parse("rational(1,1)").unwrap();
    assert!(q.describe().contains("ψ(z) = z/(1+z²), class Ψ¹₁"), "{}", q.describe());
    assert!((q.eval(c(2.0, 0.0)) - c(0.4, 0.0)).norm() < 1e-15);
    assert!((q.sup_norm(0.0) - 0.5).abs() < 1e-4);
    assert!(PsiFunction::parse("rational(1)").is_err());
    assert!(PsiFunction::parse("nope").is_err());
    assert!(PsiFunction::rational(0.0, 1.0).is_err());
    let qp = PsiFunction::parse("q_p_power(2,1)").unwrap();
    let z = c(0.5, 0.2);
    let expect = (z / (c(1.0, 0.0) + z * z)).powu(2) / (c(1.0, 0.0) + z * z);
    assert!((qp.eval(z) - expect).norm() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn dilated_psi_is_q_t(seed in any::<u64>(), lt in -1.5f64..-0.3) {
        let plan = perturbed(16, seed, SolverMode::Dense);
        let tt = 10f64.powf(lt);
        let mut rng = trial_rng(seed, 2);
        let u = band_limited(plan.operator().torus(), 2, 16, &mut rng).unwrap();
        let psi = PsiFunction::rational(1.0, 1.0).unwrap().dilated(tt);
        let got = psi_apply(&plan, &psi, &u);
        prop_assert!(rel(&got, &plan.q_t(tt, &u).unwrap()) < 1e-7);
    }
}
