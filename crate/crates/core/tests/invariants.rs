use akann::config::{assign_reference, build_ran, build_sym, ProjectionConfig};
use akann::data::{exact_top_k, recall_at_k, synthetic_sphere, Metric};
use akann::graph::{ks2_test, Hnsw, HnswParams, Scratch};
use akann::linalg::{dot, normalized, Rotation, RotationMode, SubspaceLayout};
use akann::mips::{Ks1Index, MipsQueryParams};
use proptest::prelude::*;

fn unit(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, d).prop_filter_map("zero vector", |v| normalized(&v).ok())
}

fn brute_reference(x: &[f64], cfg: &ProjectionConfig) -> f64 {
    let dp = cfg.layout().sub_dim();
    (0..cfg.layout().levels())
        .map(|i| (0..cfg.m()).map(|j| dot(&x[i * dp..(i + 1) * dp], cfg.codeword(i, j))).fold(f64::MIN, f64::max))
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reference_is_the_best_virtual_codeword(x in unit(12), seed in 0u64..1000, levels in prop::sample::select(vec![1usize, 2, 3, 4])) {
        let layout = SubspaceLayout::new(12, levels).unwrap();
        for cfg in [build_sym(8, layout, seed).unwrap(), build_ran(8, layout, seed).unwrap()] {
            let r = assign_reference(&x, &cfg).unwrap();
            prop_assert!((r.a_s - brute_reference(&x, &cfg)).abs() < 1e-12);
            prop_assert!(r.a_s <= 1.0 + 1e-12);
            let v = cfg.virtual_codeword(&r.codes).unwrap();
            prop_assert!((dot(&x, &v) - r.a_s).abs() < 1e-12);
            if cfg.is_antipodal() {
                // the negated reference is available, so the maximum is nonnegative per level
                prop_assert!(r.a_s >= 0.0);
            }
        }
    }

    #[test]
    fn ks2_test_is_monotone_in_radius(seed in 0u64..200, d2a in 0.0f32..8.0, d2b in 0.0f32..8.0) {
        let data = synthetic_sphere(60, 8, seed).unwrap();
        let mut g = Hnsw::build(&data, HnswParams { m: 4, efc: 16, efs: 8, level_lambda: None }, seed).unwrap();
        let cfg = build_sym(256, SubspaceLayout::new(8, 2).unwrap(), seed).unwrap();
        g.attach_ks2(&cfg, Rotation::sample(8, seed, RotationMode::Exact).unwrap(), false).unwrap();
        let q = synthetic_sphere(1, 8, seed + 1).unwrap();
        let state = g.query_state(q.row(0)).unwrap();
        let (lo, hi) = if d2a <= d2b { (d2a, d2b) } else { (d2b, d2a) };
        for v in 0..g.len() as u32 {
            let v_ip = akann::linalg::dot_f32(data.row(v as usize), q.row(0));
            for slot in 0..g.neighbors(v, 0).len() {
                let meta = g.edge_meta(v, slot).unwrap();
                prop_assert!(meta.c2 >= 0.0);
                if ks2_test(&state, &meta, v_ip, lo) {
                    prop_assert!(ks2_test(&state, &meta, v_ip, hi));
                }
                prop_assert!(ks2_test(&state, &meta, v_ip, f32::INFINITY));
            }
        }
    }

    #[test]
    fn graph_results_are_sorted_distinct_and_exact(seed in 0u64..100, k in 1usize..8) {
        let data = synthetic_sphere(200, 6, seed).unwrap();
        let g = Hnsw::build(&data, HnswParams { m: 6, efc: 40, efs: 16, level_lambda: None }, seed).unwrap();
        let q = synthetic_sphere(1, 6, seed + 7).unwrap();
        let mut s = Scratch::new(g.len());
        let r = g.search(q.row(0), k, 32, &mut s).unwrap();
        prop_assert_eq!(r.hits.len(), k);
        let mut ids = r.ids();
        prop_assert!(r.hits.windows(2).all(|w| w[0].1 <= w[1].1));
        for &(id, dist) in &r.hits {
            prop_assert_eq!(dist, akann::linalg::l2_sq_f32(data.row(id as usize), q.row(0)));
        }
        ids.sort_unstable();
        ids.dedup();
        prop_assert_eq!(ids.len(), k);
    }

    #[test]
    fn exhaustive_ks1_probe_is_exact(seed in 0u64..100, k in 1usize..6) {
        let data = synthetic_sphere(150, 8, seed).unwrap().with_metric(Metric::InnerProduct).unwrap();
        let cfg = build_sym(8, SubspaceLayout::new(8, 1).unwrap(), seed).unwrap();
        let idx = Ks1Index::build(&data, &cfg, Rotation::identity(8), None).unwrap();
        let q = synthetic_sphere(1, 8, seed + 3).unwrap();
        let r = idx.query(q.row(0), MipsQueryParams { k, s0: cfg.m(), probe: data.len() }).unwrap();
        let truth: Vec<u32> = exact_top_k(&data, q.row(0), k, Metric::InnerProduct).iter().map(|h| h.0).collect();
        let got: Vec<u32> = r.hits.iter().map(|h| h.0).collect();
        prop_assert_eq!(recall_at_k(&got, &truth, k).unwrap(), 1.0);
    }
}
