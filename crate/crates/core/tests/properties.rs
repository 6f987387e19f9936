//! Randomized invariants. Instances come from seeded generators, so proptest
//! only has to shrink over small integers.

use nalgebra::DMatrix;
use proptest::prelude::*;

use woldkit::gen::{bilateral_spec, concave, left_invertible, random_of_rank, random_rep, rng_from_seed, unilateral_spec};
use woldkit::growth::{check_growth, concave_power_bound_check, gamma, minimal_growth_sequence, restricted_growth_equivalence};
use woldkit::linalg::{c64, identity, op_norm, pinv, reduced_min_modulus, thin_svd, Matrix, Subspace};
use woldkit::model::{iterate_v, tensor_lift, Config, Representation};
use woldkit::shifts::{build_bilateral_shift, build_unilateral_shift, check_unilateral_weight_condition};
use woldkit::structure::{algebraic_core, generalized_range, is_regular, range_chain};
use woldkit::wold::wold_decompose;

fn cfg() -> Config {
    Config::default()
}

fn rect(seed: u64, rows: usize, cols: usize, rank: usize) -> Matrix {
    random_of_rank(&mut rng_from_seed(seed), rows, cols, rank.min(rows).min(cols), 0.1, 10.0)
}

fn fro(a: &Matrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `Ṽ_n` by explicit Kronecker products, without the library's lifting helpers.
fn explicit_iterate(v: &Matrix, d: usize, n: usize) -> Matrix {
    let mut out = identity(v.nrows());
    for k in 0..n {
        let eye = DMatrix::<num_complex::Complex64>::identity(d.pow(k as u32), d.pow(k as u32));
        out = out * eye.kronecker(v);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn penrose_conditions(seed in any::<u64>(), rows in 1usize..9, cols in 1usize..9, rank in 0usize..9) {
        let a = rect(seed, rows, cols, rank);
        let x = pinv(&a, &cfg().tol);
        let bound = 1e-9 * op_norm(&a).max(1.0);
        let ax = &a * &x;
        let xa = &x * &a;
        prop_assert!(fro(&(&ax * &a - &a)) <= bound);
        prop_assert!(fro(&(&x * &a * &x - &x)) <= bound);
        prop_assert!(fro(&(ax.adjoint() - &ax)) <= bound);
        prop_assert!(fro(&(xa.adjoint() - &xa)) <= bound);
    }

    #[test]
    fn modulus_times_inverse_norm_is_one(seed in any::<u64>(), rows in 1usize..9, cols in 1usize..9, rank in 1usize..9) {
        let a = rect(seed, rows, cols, rank);
        let g = reduced_min_modulus(&a, &cfg().tol);
        prop_assert!((g * op_norm(&pinv(&a, &cfg().tol)) - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn thin_svd_reconstructs(seed in any::<u64>(), rows in 1usize..9, cols in 1usize..9, rank in 0usize..9) {
        let a = rect(seed, rows, cols, rank);
        let (u, s, vt) = thin_svd(&a);
        prop_assert!(s.windows(2).all(|w| w[0] >= w[1]) && s.iter().all(|&x| x >= 0.0));
        let sigma = Matrix::from_fn(s.len(), s.len(), |i, j| if i == j { c64(s[i], 0.0) } else { c64(0.0, 0.0) });
        prop_assert!(fro(&(&u * sigma * &vt - &a)) <= 1e-10 * op_norm(&a).max(1.0));
    }

    #[test]
    fn projectors_are_idempotent_and_hermitian(seed in any::<u64>(), n in 1usize..9, k in 0usize..9) {
        let s = Subspace::range(&rect(seed, n, k.max(1), k), &cfg().tol);
        let p = s.projector();
        prop_assert!(op_norm(&(&p * &p - &p)) <= 1e-10);
        prop_assert!(op_norm(&(p.adjoint() - &p)) <= 1e-10);
    }

    #[test]
    fn double_complement_is_identity(seed in any::<u64>(), n in 1usize..9, k in 0usize..9) {
        let s = Subspace::range(&rect(seed, n, k.max(1), k), &cfg().tol);
        prop_assert!(s.complement().complement().same_as(&s, &cfg().tol).unwrap());
    }

    #[test]
    fn kernel_complements_adjoint_range(seed in any::<u64>(), rows in 1usize..9, cols in 1usize..9, rank in 0usize..9) {
        let a = rect(seed, rows, cols, rank);
        let tol = cfg().tol;
        let k = Subspace::kernel(&a, &tol);
        prop_assert!(k.same_as(&Subspace::range(&a.adjoint(), &tol).complement(), &tol).unwrap());
    }

    #[test]
    fn iterates_compose(seed in any::<u64>(), d in 1usize..4, m in 1usize..4, a in 0usize..3, b in 0usize..3) {
        let rep = random_rep(&mut rng_from_seed(seed), d, m).unwrap();
        let c = cfg();
        let lhs = iterate_v(&rep, a + b, &c).unwrap();
        let rhs = iterate_v(&rep, a, &c).unwrap() * tensor_lift(a, &iterate_v(&rep, b, &c).unwrap(), d, &c).unwrap();
        prop_assert!(op_norm(&(&lhs - rhs)) <= 1e-10 * op_norm(&lhs).max(1.0));
        prop_assert!(op_norm(&(lhs - explicit_iterate(rep.v(), d, a + b))) <= 1e-10 * op_norm(rep.v()).powi((a + b) as i32).max(1.0));
    }

    #[test]
    fn lifts_compose_and_keep_the_modulus(seed in any::<u64>(), d in 1usize..4, j in 0usize..3, k in 0usize..3) {
        let a = rect(seed, 3, 2, 2);
        let c = cfg();
        let twice = tensor_lift(j, &tensor_lift(k, &a, d, &c).unwrap(), d, &c).unwrap();
        prop_assert_eq!(&twice, &tensor_lift(j + k, &a, d, &c).unwrap());
        let g = reduced_min_modulus(&a, &c.tol);
        prop_assert!((reduced_min_modulus(&twice, &c.tol) - g).abs() <= 1e-12 * g.max(1.0));
    }

    #[test]
    fn ranges_decrease_and_match_explicit_iterates(seed in any::<u64>(), d in 1usize..4, m in 1usize..5) {
        let rep = random_rep(&mut rng_from_seed(seed), d, m).unwrap();
        let c = cfg();
        let chain = range_chain(&rep, &c).unwrap();
        let top = (chain.stabilization + 2).min(c.max_level(d, m)).min(5);
        for n in 1..top {
            prop_assert!(chain.range(n + 1).is_within(chain.range(n), &c.tol).unwrap());
        }
        for n in 1..=top.min(3) {
            let explicit = explicit_iterate(rep.v(), d, n);
            let scale = op_norm(rep.v()).powi(n as i32).max(1.0);
            let oracle = Subspace::range_scaled(&explicit, &c.tol, scale);
            prop_assert!(chain.range(n).same_as(&oracle, &c.tol).unwrap(), "n = {}", n);
        }
    }

    #[test]
    fn core_equals_generalized_range(seed in any::<u64>(), d in 1usize..4, m in 1usize..5) {
        let rep = random_rep(&mut rng_from_seed(seed), d, m).unwrap();
        let c = cfg();
        prop_assert!(algebraic_core(&rep, &c).unwrap().same_as(&generalized_range(&rep, &c).unwrap(), &c.tol).unwrap());
    }

    #[test]
    fn regularity_verdicts_agree(seed in any::<u64>(), d in 1usize..4, m in 1usize..5) {
        let rep = random_rep(&mut rng_from_seed(seed), d, m).unwrap();
        let r = is_regular(&rep, &cfg()).unwrap();
        prop_assert_eq!(r.kernel_inclusion_holds, r.per_m.iter().all(|w| w.holds));
        prop_assert!(!r.anomaly);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn growth_feasibility_is_monotone(seed in any::<u64>(), m in 1usize..5, slack in 0.0f64..3.0) {
        let rep = left_invertible(&mut rng_from_seed(seed), m, 1.1).unwrap();
        let c = cfg();
        let seq = minimal_growth_sequence(&rep, 3, &c).unwrap();
        if let Some(ds) = seq.iter().copied().collect::<Option<Vec<f64>>>() {
            let larger: Vec<f64> = ds.iter().map(|d| d * (1.0 + 1e-9) + slack + 1e-9).collect();
            let report = check_growth(&rep, Some(&larger), 3, 1.0, &c).unwrap();
            prop_assert!(report.supplied_all_hold(), "{:?} {:?}", ds, report.levels);
        }
    }

    #[test]
    fn full_and_restricted_growth_agree(seed in any::<u64>(), m in 1usize..4, k in 1usize..4, d_k in 0.0f64..6.0) {
        let rep = left_invertible(&mut rng_from_seed(seed), m, 1.05).unwrap();
        let eq = restricted_growth_equivalence(&rep, k, d_k, 1.0, &cfg()).unwrap();
        prop_assert_eq!(eq.full_holds, eq.restricted_holds, "{:?}", eq);
    }

    #[test]
    fn concave_power_bound(seed in any::<u64>(), m in 1usize..5, eps in 0.0f64..0.3) {
        let rep = concave(&mut rng_from_seed(seed), m, eps).unwrap();
        for check in concave_power_bound_check(&rep, 3, &cfg()).unwrap() {
            prop_assert!(check.holds, "{:?}", check);
        }
    }

    #[test]
    fn decomposition_projectors_and_biregularity(seed in any::<u64>(), m in 1usize..5) {
        let rep = left_invertible(&mut rng_from_seed(seed), m, 1.0).unwrap();
        let c = cfg();
        if let Ok(res) = wold_decompose(&rep, None, None, &c) {
            let p_w = res.bracket_w.projector();
            let p_r = res.rinf.projector();
            prop_assert!(op_norm(&(&p_w + &p_r - identity(m))) <= 1e-8);
            prop_assert!(op_norm(&(&p_w * &p_r)) <= 1e-8);
            prop_assert!(res.biregular.as_ref().is_none_or(|b| b.holds));
            if res.rinf.is_zero() {
                prop_assert_eq!(res.bracket_w.dim(), m);
            }
        }
    }

    #[test]
    fn unilateral_levels_map_onto_the_next(seed in any::<u64>(), d in 1usize..3, levels in 1usize..4, p in 1usize..3) {
        let spec = unilateral_spec(&mut rng_from_seed(seed), d, levels, p, 0.5, 2.0).unwrap();
        let c = cfg();
        let rep = build_unilateral_shift(&spec, &c).unwrap();
        let offs = spec.offsets();
        let h = spec.dim_h();
        // Columns of E⊗H whose H-part sits below the top level.
        let cols: Vec<usize> = (0..d).flat_map(|xi| (0..offs[levels]).map(move |j| xi * h + j)).collect();
        let block = Matrix::from_fn(h, cols.len(), |i, j| rep.v()[(i, cols[j])]);
        prop_assert!(Subspace::kernel(&block, &c.tol).is_zero());
        let upper = Subspace::coordinates(h, &(offs[1]..h).collect::<Vec<_>>());
        prop_assert!(Subspace::range(&block, &c.tol).same_as(&upper, &c.tol).unwrap());
    }

    #[test]
    fn unilateral_condition_is_monotone(seed in any::<u64>(), levels in 2usize..5, bump in 0.0f64..2.0) {
        let spec = unilateral_spec(&mut rng_from_seed(seed), 1, levels, 1, 1.0, 2.0).unwrap();
        let c = cfg();
        let base = check_unilateral_weight_condition(&spec, None, levels, levels - 1, &c).unwrap();
        if let Some(ds) = base.minimal_sequence().into_iter().collect::<Option<Vec<f64>>>() {
            let larger: Vec<f64> = ds.iter().map(|d| d * (1.0 + 1e-9) + bump).collect();
            let report = check_unilateral_weight_condition(&spec, Some(&larger), levels, levels - 1, &c).unwrap();
            prop_assert_eq!(report.supplied_all_hold(), Some(true));
        }
    }

    #[test]
    fn bilateral_modulus_and_kernel(seed in any::<u64>(), n in 1usize..3, radius in 1usize..4) {
        let spec = bilateral_spec(&mut rng_from_seed(seed), n, radius, true).unwrap();
        let c = cfg();
        let build = build_bilateral_shift(&spec, &c).unwrap();
        let h = spec.dim_h();
        let r = radius as i64;
        // Kernel oracle: the m = 0 column of every generator plus every column leaving the window.
        let cols: Vec<usize> = (1..=n)
            .flat_map(|i| (-r..=r).map(move |m| (i, m)))
            .filter(|&(i, m)| m == 0 || (i as i64 + n as i64 * m).abs() > r)
            .map(|(i, m)| (i - 1) * h + (m + r) as usize)
            .collect();
        let oracle = Subspace::coordinates(n * h, &cols);
        prop_assert!(Subspace::kernel(build.rep.v(), &c.tol).same_as(&oracle, &c.tol).unwrap());
        let inside: Vec<usize> = (0..n * h).filter(|j| !cols.contains(j)).collect();
        let block = Matrix::from_fn(h, inside.len(), |i, j| build.rep.v()[(i, inside[j])]);
        if !inside.is_empty() {
            prop_assert!(reduced_min_modulus(&block, &c.tol) >= 1.0 - 1e-10);
        }
        prop_assert!(gamma(&build.rep, &c) >= 1.0 - 1e-10);
    }
}

#[test]
fn representation_wrapper_rejects_bad_shapes() {
    assert!(Representation::new(2, 2, identity(2)).is_err());
}
