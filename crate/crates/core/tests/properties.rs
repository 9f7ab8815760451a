//! Property tests for invariants that hold on every input.

use cyclecover::absorber::{build_template, TemplateCheck};
use cyclecover::connect::{connect_all, reach, ConnectionDemand};
use cyclecover::cover::{check_forest_cover, cover_graph, path_forest_cover, ForestParams, PipelineConfig};
use cyclecover::expander::Cut;
use cyclecover::graph::{exact_cycle_cover_witness, validate_cycle_cover, CycleCover};
use cyclecover::partition::kernel_peel;
use cyclecover::randgen::{apply_adversary, audit_deletion, gnp, Adversary, Strategy as Deletion};
use cyclecover::sparse::spectral_beta;
use cyclecover::{Graph, Seed, VertexSet};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn small_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n, 0.05f64..0.95, any::<u64>()).prop_map(|(n, p, s)| gnp(n, p, Seed(s)))
}

fn subset(n: usize, bits: u64) -> VertexSet {
    VertexSet::from_iter_unchecked((0..n).filter(|&v| bits >> (v % 64) & 1 == 1))
}

fn adversary_strategy() -> impl Strategy<Value = Deletion> {
    prop_oneof![
        Just(Deletion::RandomDeletion),
        Just(Deletion::BipartiteSplit),
        (2usize..5).prop_map(|parts| Deletion::CliqueSplit { parts }),
        Just(Deletion::TargetedMinDegree),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degree_sum_is_twice_edge_count(g in small_graph(40)) {
        let total: usize = (0..g.n()).map(|v| g.degree(v)).sum();
        prop_assert_eq!(total, 2 * g.m());
        prop_assert_eq!(g.edges().count(), g.m());
    }

    #[test]
    fn induced_subgraph_keeps_exactly_the_inner_edges(g in small_graph(30), bits in any::<u64>()) {
        let s = subset(g.n(), bits);
        let h = g.induced(s.as_slice());
        let verts = s.as_slice();
        let mut expected = 0;
        for i in 0..verts.len() {
            for j in i + 1..verts.len() {
                let inside = g.has_edge(verts[i], verts[j]);
                prop_assert_eq!(h.has_edge(i, j), inside);
                expected += inside as usize;
            }
        }
        prop_assert_eq!(h.m(), expected);
    }

    #[test]
    fn oracle_witnesses_pass_the_validator(g in small_graph(9), k in 2usize..4) {
        if let Some(cover) = exact_cycle_cover_witness(&g, k).unwrap() {
            let report = validate_cycle_cover(&g, &cover);
            prop_assert!(report.pass, "{:?}", report.violation);
            if !cover.cycles.is_empty() {
                let squeezed = CycleCover { cycles: cover.cycles.clone(), k: cover.cycles.len() };
                prop_assert!(!validate_cycle_cover(&g, &squeezed).pass);
            }
        }
    }

    #[test]
    fn spectral_beta_matches_dense_norm(g in small_graph(24), p in 0.0f64..1.0) {
        let n = g.n();
        let m = DMatrix::from_fn(n, n, |i, j| (g.has_edge(i, j) as u8 as f64) - p);
        let exact = m.symmetric_eigenvalues().iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let est = spectral_beta(&g, p).beta;
        prop_assert!(est <= exact * (1.0 + 1e-9) + 1e-9, "estimate {} above norm {}", est, exact);
        prop_assert!(est >= exact * 0.99 - 1e-6, "estimate {} far below norm {}", est, exact);
    }

    #[test]
    fn cut_counts_crossing_edges(g in small_graph(30), bits in any::<u64>()) {
        let n = g.n();
        let mask: Vec<bool> = (0..n).map(|v| bits >> (v % 64) & 1 == 1).collect();
        prop_assume!(mask.iter().any(|&b| b) && mask.iter().any(|&b| !b));
        let cut = Cut::from_mask(&g, &mask);
        let crossing = g.edges().filter(|&(u, v)| mask[u] != mask[v]).count();
        prop_assert_eq!(cut.crossing, crossing);
        prop_assert_eq!(cut.side1.len() + cut.side2.len(), n);
        prop_assert!(cut.recount(&g));
    }

    #[test]
    fn kernel_peel_postcondition(g in small_graph(40), xb in any::<u64>(), yb in any::<u64>(), thr in 0.5f64..8.0) {
        let n = g.n();
        let x = subset(n, xb);
        let y = subset(n, yb.rotate_left(7));
        let (wx, vx) = kernel_peel(&g, &x, &y, thr);
        prop_assert!(wx.is_disjoint(&vx));
        prop_assert_eq!(wx.union(&vx), x.clone());
        let keep = wx.union(&y).mask(n);
        for v in vx.iter() {
            prop_assert!((g.degree_into(v, &keep) as f64) < thr);
        }
    }

    #[test]
    fn reach_grows_with_length(g in small_graph(40), xb in any::<u64>(), ell in 1usize..6) {
        let n = g.n();
        let x = subset(n, xb);
        let w = VertexSet::full(n).difference(&x);
        let z = VertexSet::empty();
        let a = reach(&g, &x, &w, &z, ell).unwrap();
        let b = reach(&g, &x, &w, &z, ell + 1).unwrap();
        prop_assert!(a.is_subset(&b));
    }

    #[test]
    fn adversaries_respect_the_cap(
        n in 20usize..80,
        p in 0.1f64..0.6,
        strategy in adversary_strategy(),
        r in 0.05f64..0.6,
        s in any::<u64>(),
    ) {
        let g = gnp(n, p, Seed(s));
        let h = apply_adversary(&g, &Adversary { strategy, r }, Seed(s).derive(1));
        prop_assert!(audit_deletion(&g, &h, r).is_ok(), "{:?}", audit_deletion(&g, &h, r));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn template_has_twins_and_bounded_degree(n in 2usize..12, r in 2usize..5, s in any::<u64>()) {
        let tpl = build_template(n, r, Seed(s), TemplateCheck::Skip).unwrap();
        let h = tpl.graph();
        prop_assert!(tpl.max_degree() <= 2 * r);
        for v in 0..tpl.vertex_count() {
            let t = tpl.twin(v);
            prop_assert_ne!(t, v);
            prop_assert_eq!(tpl.twin(t), v);
            prop_assert_ne!(tpl.is_flex(v), tpl.is_flex(t));
            prop_assert_eq!(h.neighbors(v), h.neighbors(t));
        }
        prop_assert!(h.n() == tpl.vertex_count());
    }

    #[test]
    fn forest_cover_partitions_the_vertices(n in 40usize..160, p in 0.08f64..0.4, k in 2usize..5, s in any::<u64>()) {
        let g = gnp(n, p, Seed(s));
        let params = ForestParams { level_floor: 20, ..ForestParams::default() };
        let forests = path_forest_cover(&g, k, usize::MAX, &params, Seed(s).derive(2)).unwrap();
        prop_assert_eq!(forests.len(), k - 1);
        prop_assert!(check_forest_cover(&g, &forests).is_ok());
        let mut seen = vec![0u8; n];
        for f in &forests {
            prop_assert!(f.validate(&g).is_ok());
            for path in f.paths() {
                for &v in path.vertices() {
                    seen[v] += 1;
                }
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn routing_is_deterministic(n in 60usize..120, s in any::<u64>()) {
        let g = gnp(n, 0.25, Seed(s));
        let terminals: Vec<usize> = (0..6).collect();
        let demand = ConnectionDemand::new(n, terminals.chunks(2).map(|c| (c[0], c[1])).collect()).unwrap();
        let w = VertexSet::from_iter_unchecked(6..n);
        let a = connect_all(&g, &demand, &w, 6, 4, Seed(s).derive(3));
        let b = connect_all(&g, &demand, &w, 6, 4, Seed(s).derive(3));
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert!(a.validate(&g, &demand, &w, 6).is_ok());
                prop_assert_eq!(a.routes, b.routes);
            }
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            (a, b) => prop_assert!(false, "runs diverged: {:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn cover_graph_is_reproducible(n in 24usize..60, p in 0.3f64..0.6, k in 2usize..4, s in any::<u64>()) {
        let g = gnp(n, p, Seed(s));
        let cfg = PipelineConfig { seed: s, ..PipelineConfig::default() };
        let a = cover_graph(&g, k, &cfg);
        let b = cover_graph(&g, k, &cfg);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert!(validate_cycle_cover(&g, &a.cover).pass);
                prop_assert_eq!(a.cover, b.cover);
                prop_assert_eq!(a.parts, b.parts);
            }
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            (a, b) => prop_assert!(false, "runs diverged: {:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }
}
