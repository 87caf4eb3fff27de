mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use qlevy::harness::{replicate_area, replicate_increment, sample_step};
use qlevy::kronkit::{
    apply_selection, commutation_apply, embed_antisymmetric, qtilde_diagonal, sym_sqrt,
};
use qlevy::levyarea::{sigma_infinity, sqrt_sigma_infinity, unit_sqrt_sigma_infinity, TailSpec};
use qlevy::streams::ReplicateStreams;
use qlevy::{
    assemble, choose_d, make_model, pair_index_map, sample_area_alg1, sample_area_alg2,
    tail_constant, Algorithm, DRule, SpectrumSpec, SymmetricMatrix, WienerIncrement,
};

use common::{dense_commutation, dense_selection, random_matrix, rng, unvec, vec_col};

fn power_law() -> impl Strategy<Value = SpectrumSpec> {
    (0.1f64..4.0, 1.05f64..4.0).prop_map(|(c, rho)| SpectrumSpec::PowerLaw { c, rho })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pair_map_is_lexicographic_and_invertible(k in 1usize..40) {
        let map = pair_index_map(k).unwrap();
        prop_assert_eq!(map.len(), k * (k - 1) / 2);
        prop_assert!(map.pairs().windows(2).all(|w| w[0] < w[1]));
        for p in 1..=map.len() {
            let (i, j) = map.pair(p).unwrap();
            prop_assert!(1 <= i && i < j && j <= k);
            prop_assert_eq!(map.position(i, j), Some(p));
        }
    }

    #[test]
    fn selection_and_embedding_round_trip(k in 1usize..=8, seed in any::<u64>()) {
        let map = pair_index_map(k).unwrap();
        let mut r = rng(seed);
        let v: Vec<f64> = random_matrix(map.len(), 1, &mut r).iter().copied().collect();
        let a = embed_antisymmetric(&map, &v).unwrap();
        prop_assert!((&a + a.transpose()).iter().all(|x| *x == 0.0));
        prop_assert_eq!(apply_selection(&map, &a).unwrap(), v.clone());
        let dense = (DMatrix::identity(k * k, k * k) - dense_commutation(k))
            * dense_selection(k).transpose()
            * nalgebra::DVector::from_vec(v);
        prop_assert_eq!(unvec(&dense, k).transpose(), a);
    }

    #[test]
    fn commutation_is_an_involution(k in 1usize..=8, seed in any::<u64>()) {
        let m = random_matrix(k, k, &mut rng(seed));
        let t = commutation_apply(k, &m).unwrap();
        prop_assert_eq!(vec_col(&t), dense_commutation(k) * vec_col(&m));
        prop_assert_eq!(commutation_apply(k, &t).unwrap(), m.clone());
        let sym = &m + m.transpose();
        prop_assert_eq!(commutation_apply(k, &sym).unwrap(), sym);
    }

    #[test]
    fn sym_sqrt_reconstructs_psd_matrices(n in 1usize..=20, rank in 1usize..=20, seed in any::<u64>()) {
        let b = random_matrix(n, rank.min(n), &mut rng(seed));
        let m = SymmetricMatrix::from_matrix(&b * b.transpose(), 1e-12).unwrap();
        let s = sym_sqrt(&m, 1e-12).unwrap();
        prop_assert!(s.eigenvalues()[0] >= -1e-12 * s.frobenius_norm());
        let resid = (s.as_matrix() * s.as_matrix() - m.as_matrix()).norm();
        prop_assert!(resid <= 1e-10 * m.frobenius_norm(), "residual {}", resid);
    }

    #[test]
    fn closed_form_factor_reproduces_sigma(spec in power_law(), k in 2usize..=8, seed in any::<u64>(), h in 1e-4f64..1.0) {
        let model = make_model(&spec, k).unwrap();
        let mut r = rng(seed);
        let inc = qlevy::sample_increment(&model, h, &mut r).unwrap();
        let sigma = sigma_infinity(&model, &inc).unwrap();
        let s = sqrt_sigma_infinity(&model, &inc).unwrap();
        let resid = (&s * s.transpose() - sigma.as_matrix()).norm();
        prop_assert!(resid <= 1e-10 * sigma.frobenius_norm());
        let eta = model.eta();
        let floor = 2.0 * eta[k - 2] * eta[k - 1];
        prop_assert!(sigma.eigenvalues()[0] >= floor * (1.0 - 1e-12));
        // the unit-spectrum root is the symmetric one
        let map = pair_index_map(k).unwrap();
        let unit = unit_sqrt_sigma_infinity(&map, inc.v());
        let numeric = sym_sqrt(&qlevy::levyarea::unit_sigma_infinity(&map, inc.v()), 1e-12).unwrap();
        prop_assert!((unit.as_matrix() - numeric.as_matrix()).norm() <= 1e-10 * unit.frobenius_norm());
    }

    #[test]
    fn qtilde_entries(spec in power_law(), k in 2usize..=10) {
        let model = make_model(&spec, k).unwrap();
        let map = pair_index_map(k).unwrap();
        for (q, &(i, j)) in qtilde_diagonal(&model, &map).iter().zip(map.pairs()) {
            let want = (model.eta()[i - 1] * model.eta()[j - 1]).sqrt();
            prop_assert!((q - want).abs() <= 1e-15 * want);
        }
    }

    #[test]
    fn assembled_identities_hold(spec in power_law(), k in 1usize..=8, d in 0u64..50, seed in any::<u64>(), alg2 in any::<bool>()) {
        let model = make_model(&spec, k).unwrap();
        let alg = if alg2 { Algorithm::Alg2 } else { Algorithm::Alg1 };
        let (inc, iim) = sample_step(&model, 0.05, d, alg, seed, 3).unwrap();
        let (dw, eta) = (inc.dw(), model.eta());
        for i in 0..k {
            let want = (dw[i] * dw[i] - eta[i] * 0.05) / 2.0;
            prop_assert!((iim.entries[(i, i)] - want).abs() <= 1e-12 * want.abs().max(1e-300));
            for j in i + 1..k {
                let sum = iim.entries[(i, j)] + iim.entries[(j, i)];
                let scale = (dw[i] * dw[j]).abs() + iim.entries[(i, j)].abs();
                prop_assert!((sum - dw[i] * dw[j]).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn second_algorithm_adds_the_scaled_tail(spec in power_law(), k in 2usize..=6, d in 0u64..40, seed in any::<u64>()) {
        let model = make_model(&spec, k).unwrap();
        let inc = replicate_increment(&model, 0.02, seed, 0).unwrap();
        let a1 = replicate_area(&model, &inc, d, Algorithm::Alg1, seed, 0).unwrap();
        let a2 = replicate_area(&model, &inc, d, Algorithm::Alg2, seed, 0).unwrap();
        let tail = TailSpec::new(&model, &inc, d).unwrap();
        let mut upsilon = vec![0.0; a1.values.len()];
        qlevy::SeriesSource::tail(&mut ReplicateStreams::new(seed, 0), &mut upsilon);
        let scale = 0.02 / (2.0 * std::f64::consts::PI) * tail_constant(d).sqrt();
        for ((x1, x2), t) in a1.values.iter().zip(&a2.values).zip(tail.apply_root(&upsilon)) {
            prop_assert!((x2 - x1 - scale * t).abs() <= 1e-13 * (x2.abs() + x1.abs() + 1e-300));
        }
    }

    #[test]
    fn series_nesting(k in 2usize..=6, d in 1u64..100, extra in 1u64..200, seed in any::<u64>()) {
        let model = qlevy::CovarianceModel::unit(k).unwrap();
        let inc = replicate_increment(&model, 0.1, seed, 1).unwrap();
        let mut src = ReplicateStreams::new(seed, 1);
        let short = sample_area_alg1(&model, &inc, d, &mut src).unwrap();
        let long = sample_area_alg1(&model, &inc, d + extra, &mut src).unwrap();
        let tail = qlevy::harness::alg1_tail(&model, &inc, d, d + extra, &mut src).unwrap();
        for ((s, l), t) in short.values.iter().zip(&long.values).zip(&tail) {
            prop_assert!((l - s - t).abs() <= 1e-12 * (l.abs() + s.abs() + t.abs()));
        }
    }

    #[test]
    fn unit_spectrum_scaling(k in 2usize..=6, d in 0u64..30, seed in any::<u64>(), scale in 0.1f64..10.0) {
        // A_(i,j) for eigenvalues η equals √(η_i η_j) times the unit-spectrum area
        let unit = qlevy::CovarianceModel::unit(k).unwrap();
        let model = make_model(&SpectrumSpec::PowerLaw { c: scale, rho: 2.0 }, k).unwrap();
        let v: Vec<f64> = random_matrix(k, 1, &mut rng(seed)).iter().copied().collect();
        let iu = WienerIncrement::from_normals(&unit, 0.1, v.clone()).unwrap();
        let im = WienerIncrement::from_normals(&model, 0.1, v).unwrap();
        let mut s1 = ReplicateStreams::new(seed, 0);
        let mut s2 = ReplicateStreams::new(seed, 0);
        let au = sample_area_alg2(&unit, &iu, d, &mut s1).unwrap();
        let am = sample_area_alg2(&model, &im, d, &mut s2).unwrap();
        let q = qtilde_diagonal(&model, &au.map);
        for ((u, m), q) in au.values.iter().zip(&am.values).zip(q) {
            prop_assert!((m - q * u).abs() <= 1e-12 * (m.abs() + 1e-300));
        }
    }

    #[test]
    fn choose_d_is_monotone(h1 in 1e-4f64..0.5, h2 in 1e-4f64..0.5, gamma in 0.55f64..1.5) {
        let model = make_model(&SpectrumSpec::PowerLaw { c: 1.0, rho: 2.0 }, 4).unwrap();
        let (lo, hi) = if h1 < h2 { (h1, h2) } else { (h2, h1) };
        for rule in [DRule::Alg1, DRule::Alg2K, DRule::Alg2Eta] {
            prop_assert!(choose_d(rule, lo, gamma, &model).unwrap() >= choose_d(rule, hi, gamma, &model).unwrap());
        }
    }

    #[test]
    fn tail_constant_brackets(d in 1u64..10_000_000) {
        let c = tail_constant(d);
        let x = d as f64;
        prop_assert!(c > 1.0 / (x + 1.0) && c < 1.0 / x);
        prop_assert!(tail_constant(d - 1) - c - 1.0 / (x * x) <= 1e-16);
    }

    #[test]
    fn assemble_agrees_with_definition(k in 1usize..=6, seed in any::<u64>()) {
        let model = qlevy::CovarianceModel::unit(k).unwrap();
        let inc = replicate_increment(&model, 0.3, seed, 0).unwrap();
        let area = replicate_area(&model, &inc, 5, Algorithm::Alg1, seed, 0).unwrap();
        let iim = assemble(&inc, &area, &model).unwrap();
        let a = embed_antisymmetric(&area.map, &area.values).unwrap();
        let dw = DMatrix::from_column_slice(k, 1, inc.dw());
        let want = (&dw * dw.transpose()) / 2.0 - DMatrix::identity(k, k) * 0.15 + a;
        prop_assert!((&iim.entries - want).amax() <= 1e-15 * (1.0 + iim.entries.amax()));
    }
}
