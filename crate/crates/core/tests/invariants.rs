use proptest::prelude::*;
use swreg::experiments::{knn_classify, metrics, sample_gaussian_mixture, GaussianMixtureSpec};
use swreg::measures::{load_dataset, write_dataset, DiscreteMeasure, MeasureDataset, PairIndex};
use swreg::regression::{build_design, fit, fit_constrained_general, DesignMatrix};
use swreg::sampling::SeedSpec;
use swreg::sliced::Preset;

fn mixtures(count: u64, d: usize, points: usize, seed: u64) -> Vec<DiscreteMeasure> {
    (0..count)
        .map(|k| {
            sample_gaussian_mixture(&GaussianMixtureSpec {
                points_per_component: points,
                ..GaussianMixtureSpec::new(d, SeedSpec::new(seed, k))
            })
            .unwrap()
        })
        .collect()
}

fn design_strategy(max_k: usize) -> impl Strategy<Value = DesignMatrix> {
    (1..=max_k, 5usize..=40).prop_flat_map(|(k, m)| {
        (
            prop::collection::vec(prop::collection::vec(0.0f64..10.0, k), m),
            prop::collection::vec(0.0f64..10.0, m),
        )
            .prop_map(|(rows, w)| DesignMatrix::from_rows(rows, w).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lse_gradient_vanishes(d in design_strategy(6)) {
        let model = fit(&d, false).unwrap();
        let k = d.cols();
        let mut grad = vec![0.0; k];
        let mut stw = vec![0.0; k];
        for (s, y) in d.features.iter().zip(&d.targets) {
            let r: f64 = s.iter().zip(&model.weights).map(|(a, b)| a * b).sum::<f64>() - y;
            for c in 0..k {
                grad[c] += 2.0 * r * s[c];
                stw[c] += s[c] * y;
            }
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(norm(&grad) <= 1e-8 * (1.0 + norm(&stw)));
    }

    #[test]
    fn constrained_prediction_stays_between_bounds(
        rows in prop::collection::vec((0.0f64..5.0, 0.0f64..5.0, 0.0f64..3.0, 0.0f64..3.0), 4..30),
        noise in prop::collection::vec(-1.0f64..1.0, 30),
        probe in (0.0f64..5.0, 0.0f64..5.0, 0.0f64..3.0, 0.0f64..3.0),
    ) {
        let feats: Vec<Vec<f64>> = rows.iter().map(|&(a, b, ga, gb)| vec![a, b, a + ga, b + gb]).collect();
        let w: Vec<f64> = feats.iter().zip(&noise).map(|(f, e)| (0.5 * (f[0] + f[2]) + e).max(0.0)).collect();
        let d = DesignMatrix::from_rows(feats, w).unwrap();
        let m = fit_constrained_general(&d, &[0, 1], &[2, 3]).unwrap();
        prop_assert!(m.weights.iter().all(|w| (0.0..=1.0).contains(w)));
        let s = [probe.0, probe.1, probe.0 + probe.2, probe.1 + probe.3];
        let v = m.predict_values(&s);
        prop_assert!(s[0].min(s[1]) - 1e-12 <= v && v <= s[2].max(s[3]) + 1e-12);
    }

    #[test]
    fn perfect_r2_iff_zero_mse(
        actual in prop::collection::vec(0.0f64..10.0, 2..20),
        shift in prop::collection::vec(-1.0f64..1.0, 20),
        exact in any::<bool>(),
    ) {
        let predicted: Vec<f64> = if exact {
            actual.clone()
        } else {
            actual.iter().zip(&shift).map(|(a, s)| a + s).collect()
        };
        let r = metrics(&predicted, &actual).unwrap();
        if let Some(r2) = r.r2 {
            prop_assert_eq!(r2 == 1.0, r.mse == 0.0);
            prop_assert!(r2 <= 1.0 && r.mse >= 0.0 && r.mae >= 0.0);
        }
    }

    #[test]
    fn knn_invariant_under_positive_affine_maps(
        raw in prop::collection::vec(prop::collection::vec(0u8..20, 12), 1..6),
        scale in 1u8..5,
        offset in 0u8..4,
        k in 1usize..=12,
    ) {
        let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
        let d: Vec<Vec<f64>> = raw.iter().map(|r| r.iter().map(|&x| f64::from(x)).collect()).collect();
        // integer-valued distances keep the summed tie-break exact under the map
        let mapped: Vec<Vec<f64>> = d.iter().map(|r| r.iter().map(|x| f64::from(scale) * x + f64::from(offset)).collect()).collect();
        prop_assert_eq!(knn_classify(&d, &labels, k).unwrap(), knn_classify(&mapped, &labels, k).unwrap());
    }
}

/// Scaling every support by `c` scales features and labels by `c` and
/// leaves the fitted weights alone. EBSW and EST are excluded: their
/// softmax temperature is absolute, so they are not scale-equivariant.
#[test]
fn scale_equivariance() {
    let base = mixtures(12, 3, 6, 21);
    let c = 3.7;
    let scaled: Vec<DiscreteMeasure> = base.iter().map(|m| m.scaled(c).unwrap()).collect();
    let a = MeasureDataset::new(base, None).unwrap();
    let b = MeasureDataset::new(scaled, None).unwrap();
    let pairs: Vec<PairIndex> = (0..6).map(|k| PairIndex::new(k, 11 - k)).collect();
    for preset in [Preset::RgS, Preset::RgO] {
        let configs = preset.configs(2.0);
        let da = build_design(&a, &pairs, &configs, 5, true, None).unwrap();
        let db = build_design(&b, &pairs, &configs, 5, true, None).unwrap();
        for (ra, rb) in da.features.iter().zip(&db.features) {
            for (x, y) in ra.iter().zip(rb) {
                assert!((c * x - y).abs() <= 1e-9 * y.max(1.0), "{preset:?}: {x} vs {y}");
            }
        }
        for (x, y) in da.targets.iter().zip(&db.targets) {
            assert!((c * x - y).abs() <= 1e-9 * y.max(1.0));
        }
        for constrained in [false, true] {
            let (ma, mb) = (fit(&da, constrained).unwrap(), fit(&db, constrained).unwrap());
            for (x, y) in ma.weights.iter().zip(&mb.weights) {
                assert!((x - y).abs() <= 1e-9, "{preset:?} constrained={constrained}");
            }
        }
    }
}

#[test]
fn pipeline_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let ds = MeasureDataset::new(mixtures(10, 2, 5, 31), None).unwrap();
    let manifest = write_dataset(dir.path(), &ds).unwrap();
    let (x, y) = (load_dataset(&manifest).unwrap(), load_dataset(&manifest).unwrap());
    assert!(x.measures().iter().zip(y.measures()).all(|(a, b)| a.bit_identical(b)));

    let pairs: Vec<PairIndex> = (0..5).map(|k| PairIndex::new(k, k + 5)).collect();
    let run = |ds: &MeasureDataset| {
        let d = build_design(ds, &pairs, &Preset::RgSeo.configs(2.0), 9, true, None).unwrap();
        let m = fit(&d, true).unwrap();
        let p = m.predict_pairs(ds, &pairs).unwrap();
        (d, m.weights, p)
    };
    let (r1, r2) = (run(&x), run(&y));
    assert_eq!(r1.0, r2.0);
    assert_eq!(r1.1, r2.1);
    assert_eq!(r1.2, r2.2);
}
