use proptest::prelude::*;

use cretan::cretan::{all_solutions, characteristic_residual, solve_characteristic, verify_exact, Source};
use cretan::designs::{
    complement, develop, find_difference_set, menon_family, qr_family, twin_prime_family, verify_sbibd,
    DesignParams, DifferenceSet, IncidenceMatrix,
};
use cretan::numeric::{float_det, residual, FloatMatrix, SearchTemplate, Slot};
use cretan::portrait::{CellValue, PortraitSpec};
use cretan::qfield::QuadExt;

const QR_PRIMES: [u64; 7] = [3, 7, 11, 19, 23, 31, 43];

fn catalog_design() -> impl Strategy<Value = IncidenceMatrix> {
    prop_oneof![
        prop::sample::select(QR_PRIMES.to_vec()).prop_map(|p| develop(&qr_family(p).unwrap())),
        prop::sample::select(vec![3u64, 5]).prop_map(|p| develop(&twin_prime_family(p).unwrap())),
        (1u64..=3).prop_map(|m| menon_family(m).unwrap()),
    ]
}

/// Any `(v, k, lambda)` with `lambda (v - 1) = k (k - 1)`, `v > k`, `v <= 1000`.
fn valid_params() -> impl Strategy<Value = DesignParams> {
    (1u64..=60, 1u64..=40)
        .prop_filter_map("not a valid triple", |(k, lambda)| {
            let num = k * (k - 1);
            (num % lambda == 0).then(|| 1 + num / lambda).filter(|&v| v > k && v <= 1000).map(|v| (v, k, lambda))
        })
        .prop_map(|(v, k, lambda)| DesignParams::new(v, k, lambda).unwrap())
}

/// `B B^T` computed directly over the integers.
fn gram_is_balanced(b: &IncidenceMatrix) -> bool {
    let p = b.params();
    let n = b.order();
    (0..n).all(|i| {
        (0..n).all(|j| {
            let dot = (0..n).filter(|&c| b.get(i, c) && b.get(j, c)).count() as u64;
            dot == if i == j { p.k } else { p.lambda }
        })
    })
}

fn small_cyclic_params() -> impl Strategy<Value = DesignParams> {
    prop::sample::select(vec![(7, 3, 1), (7, 4, 2), (11, 5, 2), (13, 4, 1), (15, 7, 3), (21, 5, 1), (11, 6, 3)])
        .prop_map(|(v, k, l)| DesignParams::new(v, k, l).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn catalog_designs_are_balanced(b in catalog_design()) {
        prop_assert!(gram_is_balanced(&b));
        prop_assert!(verify_sbibd(&b).passed());
    }

    #[test]
    fn complement_is_an_involution(b in catalog_design()) {
        let c = complement(&b);
        let p = b.params();
        prop_assert_eq!(c.params(), DesignParams { v: p.v, k: p.v - p.k, lambda: p.v - 2 * p.k + p.lambda });
        prop_assert!(gram_is_balanced(&c));
        prop_assert_eq!(complement(&c), b);
    }

    #[test]
    fn translation_rotates_rows(p in prop::sample::select(QR_PRIMES.to_vec()), c in 0u64..50) {
        let ds = qr_family(p).unwrap();
        let shifted = ds.translate(c);
        let (a, b) = (develop(&ds), develop(&shifted));
        let n = a.order();
        let shift = (c % p) as usize;
        for i in 0..n {
            // row i of the shifted development is row i + c of the original
            prop_assert_eq!(b.row(i), a.row((i + shift) % n));
        }
        prop_assert_eq!(verify_sbibd(&a), verify_sbibd(&b));
    }

    #[test]
    fn found_sets_revalidate(params in small_cyclic_params()) {
        let ds = find_difference_set(params, 2_000_000).unwrap();
        prop_assert!(DifferenceSet::new(params, ds.residues().iter().copied()).is_ok());
        prop_assert!(verify_sbibd(&develop(&ds)).passed());
    }

    #[test]
    fn discriminant_identity(p in valid_params()) {
        let (v, k, l) = (p.v as i128, p.k as i128, p.lambda as i128);
        prop_assert_eq!((k - l) * (k - l) - l * (v - 2 * k + l), k - l);
    }

    #[test]
    fn roots_solve_the_characteristic_equation(p in valid_params()) {
        prop_assume!(p.k != p.lambda);
        for sol in solve_characteristic(p).unwrap() {
            prop_assert!(characteristic_residual(p, &sol.y).unwrap().is_zero());
            let y = sol.y.to_f64().unwrap();
            // exact admissibility agrees with floats away from the boundary
            if (y.abs() - 1.0).abs() > 1e-9 {
                prop_assert_eq!(sol.admissible, y.abs() <= 1.0);
            }
        }
    }

    #[test]
    fn built_matrices_are_cretan(b in catalog_design()) {
        let sols = all_solutions(b.params(), &b).unwrap();
        for cm in &sols.matrices {
            let n = cm.order();
            prop_assert!(verify_exact(cm).passed());
            prop_assert_eq!(cm.levels().iter().map(|l| l.count).sum::<usize>(), n * n);
            let one = QuadExt::one();
            prop_assert!((0..n).all(|i| (0..n).any(|j| *cm.entry(i, j) == one)));
            prop_assert!((0..n).all(|j| (0..n).any(|i| *cm.entry(i, j) == one)));
            prop_assert!(cm.levels().iter().all(|l| l.value.within_unit()));
            if n <= 16 {
                let det = float_det(&FloatMatrix::try_from(cm).unwrap()).value;
                let omega = cm.weight().to_f64().unwrap();
                prop_assert!((det * det / omega.powi(n as i32) - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn larger_root_gives_larger_weight(b in catalog_design()) {
        let sols = all_solutions(b.params(), &b).unwrap();
        for source in [Source::Original, Source::Complement] {
            let same: Vec<_> = sols.matrices.iter().filter(|m| m.provenance().unwrap().source == source).collect();
            for x in &same {
                for y in &same {
                    let (ya, yb) = (x.y().unwrap().abs(), y.y().unwrap().abs());
                    if ya.cmp_exact(&yb).unwrap().is_gt() {
                        prop_assert!(x.weight().cmp_exact(y.weight()).unwrap().is_gt());
                    }
                }
            }
        }
        if let Some(best) = sols.principal() {
            prop_assert!(sols.matrices.iter().all(|m| m.det_float() <= best.det_float()));
        }
    }

    #[test]
    fn residual_is_non_negative(rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 4)) {
        let r = residual(&FloatMatrix::from_rows(&rows).unwrap());
        prop_assert!(r.max_offdiag >= 0.0 && r.max_diag_dev >= 0.0);
    }

    #[test]
    fn lu_det_matches_cofactor_expansion(rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 4)) {
        fn cofactor(m: &[Vec<f64>]) -> f64 {
            if m.len() == 1 {
                return m[0][0];
            }
            (0..m.len())
                .map(|j| {
                    let minor: Vec<Vec<f64>> =
                        m[1..].iter().map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &x)| x).collect()).collect();
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    sign * m[0][j] * cofactor(&minor)
                })
                .sum()
        }
        let lu = float_det(&FloatMatrix::from_rows(&rows).unwrap()).value;
        prop_assert!((lu - cofactor(&rows)).abs() <= 1e-12);
    }

    #[test]
    fn circulant_templates_instantiate_with_signs(
        first in prop::collection::vec((0usize..3, any::<bool>()), 5),
        levels in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let row: Vec<Slot> = first.iter().map(|&(v, neg)| Slot { var: v, negative: neg }).collect();
        prop_assume!((0..3).all(|v| row.iter().any(|s| s.var == v)));
        let t = SearchTemplate::circulant("t", &row).unwrap();
        let m = t.instantiate(&levels);
        for i in 0..5 {
            for j in 0..5 {
                let s = t.slots[i][j];
                prop_assert_eq!(s, t.slots[(i + 1) % 5][(j + 1) % 5]);
                let want = if s.negative { -levels[s.var] } else { levels[s.var] };
                prop_assert_eq!(m.get(i, j), want);
            }
        }
    }

    #[test]
    fn portrait_map_is_monotone(a in -1.0f64..=1.0, b in -1.0f64..=1.0) {
        let spec = PortraitSpec::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(spec.value_map(&CellValue::Float(lo)) <= spec.value_map(&CellValue::Float(hi)));
    }
}
