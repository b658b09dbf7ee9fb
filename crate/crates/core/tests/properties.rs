mod oracles;

use hdadbin_core::eval::{score, Aggregation, EvalReport};
use hdadbin_core::ihegt::{ihegt_with, IhegtConfig, MeanDomain, Termination};
use hdadbin_core::labeling::{cwmf_denoise, fuse, CwmfParams};
use hdadbin_core::method::{ClassicalMethod, MethodKind};
use hdadbin_core::{BinaryMap, GrayImage, Label};
use proptest::prelude::*;

fn map_strategy(w: usize, h: usize) -> impl Strategy<Value = BinaryMap> {
    proptest::collection::vec(any::<bool>(), w * h)
        .prop_map(move |bits| BinaryMap::from_fn(w, h, |x, y| Label::from_foreground(bits[y * w + x])).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn fusion_is_a_join(a in map_strategy(9, 7), b in map_strategy(9, 7), c in map_strategy(9, 7)) {
        let empty = BinaryMap::filled(9, 7, Label::Background).unwrap();
        let ab = fuse(&a, &b).unwrap();
        prop_assert_eq!(&ab, &oracles::fuse(&a, &b));
        prop_assert_eq!(&ab, &fuse(&b, &a).unwrap());
        prop_assert_eq!(fuse(&ab, &c).unwrap(), fuse(&a, &fuse(&b, &c).unwrap()).unwrap());
        prop_assert_eq!(&fuse(&a, &a).unwrap(), &a);
        prop_assert_eq!(&fuse(&a, &empty).unwrap(), &a);
    }

    #[test]
    fn heavy_center_weight_is_identity(m in map_strategy(12, 10), window in prop::sample::select(vec![3usize, 5, 7])) {
        let cw = window * window + usize::from(window * window % 2 == 0);
        let p = CwmfParams { window, center_weight: cw };
        prop_assert_eq!(cwmf_denoise(&m, &p).unwrap(), m);
    }

    #[test]
    fn cwmf_keeps_constant_maps(fg in any::<bool>(), w in 1usize..20, h in 1usize..20) {
        let m = BinaryMap::filled(w, h, Label::from_foreground(fg)).unwrap();
        prop_assert_eq!(cwmf_denoise(&m, &CwmfParams::default()).unwrap(), m);
    }

    #[test]
    fn aggregation_ignores_row_order(seed in 0u64..1000, rot in 0usize..5) {
        let rows: Vec<_> = (0..5u64)
            .map(|i| {
                let p = oracles::random_map(seed * 7 + i, 11, 9);
                let t = oracles::random_map(seed * 7 + i + 100, 11, 9);
                score(&format!("img{i}"), &p, &t, 0.0).unwrap()
            })
            .collect();
        let mut rotated = rows.clone();
        rotated.rotate_left(rot);
        for agg in [Aggregation::Macro, Aggregation::Micro] {
            let a = EvalReport::from_rows("m".into(), rows.clone(), agg, None);
            let b = EvalReport::from_rows("m".into(), rotated.clone(), agg, None);
            prop_assert_eq!(a.aggregate, b.aggregate);
            prop_assert_eq!(a.psnr.to_bits(), b.psnr.to_bits());
        }
    }
}

#[test]
fn ihegt_terminates_on_random_pages() {
    for seed in 0..100 {
        let img = oracles::random_image(seed, 40, 30);
        for domain in [MeanDomain::WholeMap, MeanDomain::ExcludeBackground] {
            let cfg = IhegtConfig { max_iterations: 100, mean_domain: domain };
            let (map, trace) = ihegt_with(&img, &cfg).unwrap();
            assert!(trace.iterations <= 100);
            assert_eq!(map.dimensions(), img.dimensions());
            if trace.termination == Termination::IterationCap {
                assert_eq!(trace.iterations, 100);
            }
        }
    }
}

#[test]
fn ihegt_ten_by_ten_fixture() {
    let mut img = GrayImage::filled(10, 10, 255).unwrap();
    img.set(4, 2, 0);
    let (map, trace) = ihegt_with(&img, &IhegtConfig::default()).unwrap();
    assert_eq!(map.foreground_count(), 1);
    assert!(map.is_foreground(4, 2));
    assert_eq!(trace.termination, Termination::MeanConverged);
}

#[test]
fn binarizers_ignore_thread_count() {
    let img = oracles::random_image(3, 150, 120);
    for kind in MethodKind::ALL {
        let m = ClassicalMethod::new(kind);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| m.run(&img).unwrap());
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| m.run(&img).unwrap());
        assert_eq!(one, four, "{}", kind.name());
        assert_eq!(one, m.run(&img).unwrap());
    }
}
