use proptest::prelude::*;
use radargnn::graph::{build_graph, connectivity_degree, knn_edges, GraphConfig, InvarianceMode};
use radargnn::scene::{apply_transform, ClassLabel, PointCloud, RadarPoint, RigidTransform2D};

fn arb_cloud(max: usize) -> impl Strategy<Value = PointCloud> {
    prop::collection::vec(
        (-40.0..40.0f64, -40.0..40.0f64, -8.0..8.0f64, -8.0..8.0f64, -20.0..20.0f64, 0.0..0.5f64),
        2..max,
    )
    .prop_map(|rows| {
        PointCloud::new(
            "prop",
            rows.into_iter()
                .map(|(x, y, vx, vy, rcs, t)| RadarPoint {
                    x,
                    y,
                    vx,
                    vy,
                    rcs,
                    t,
                    instance_id: None,
                    label: ClassLabel::Background,
                })
                .collect(),
        )
    })
}

fn max_abs_diff(a: &radargnn::Matrix, b: &radargnn::Matrix) -> f64 {
    a.max_abs_diff(b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn knn_degrees(cloud in arb_cloud(60), k in 1usize..25) {
        let n = cloud.len();
        let edges = knn_edges(&cloud, &GraphConfig { k });
        prop_assert_eq!(edges.len(), n * k.min(n - 1));
        prop_assert!(edges.iter().all(|e| e.sender != e.receiver));
        let degree = connectivity_degree(n, &edges);
        prop_assert_eq!(degree.iter().sum::<usize>(), 2 * edges.len());
    }

    #[test]
    fn translation_features_ignore_translations(cloud in arb_cloud(40), tx in -100.0..100.0f64, ty in -100.0..100.0f64) {
        let cfg = GraphConfig::default();
        let a = build_graph(&cloud, &cfg, InvarianceMode::Translation).unwrap();
        let b = build_graph(&apply_transform(&cloud, &RigidTransform2D::translation(tx, ty)), &cfg, InvarianceMode::Translation).unwrap();
        prop_assert_eq!(&a.edges, &b.edges);
        prop_assert_eq!(&a.node_features, &b.node_features);
        prop_assert!(max_abs_diff(&a.edge_features, &b.edge_features) < 1e-9);
    }

    #[test]
    fn point_pair_features_ignore_rigid_motion(
        cloud in arb_cloud(40),
        theta in -3.2..3.2f64,
        tx in -100.0..100.0f64,
        ty in -100.0..100.0f64,
    ) {
        let cfg = GraphConfig::default();
        let mode = InvarianceMode::TranslationRotation;
        let a = build_graph(&cloud, &cfg, mode).unwrap();
        let b = build_graph(&apply_transform(&cloud, &RigidTransform2D::new(theta, tx, ty)), &cfg, mode).unwrap();
        prop_assert_eq!(&a.edges, &b.edges);
        prop_assert!(max_abs_diff(&a.node_features, &b.node_features) < 1e-9);
        prop_assert!(max_abs_diff(&a.edge_features, &b.edge_features) < 1e-9);
    }
}

#[test]
fn non_invariant_features_move_with_the_scene() {
    let cloud = PointCloud::new(
        "m",
        (0..5)
            .map(|i| RadarPoint {
                x: i as f64,
                y: 0.5 * i as f64,
                vx: 1.0,
                vy: 0.0,
                rcs: 0.0,
                t: 0.0,
                instance_id: None,
                label: ClassLabel::Background,
            })
            .collect(),
    );
    let cfg = GraphConfig::default();
    let a = build_graph(&cloud, &cfg, InvarianceMode::None).unwrap();
    let b = build_graph(&apply_transform(&cloud, &RigidTransform2D::translation(3.0, 0.0)), &cfg, InvarianceMode::None).unwrap();
    assert_eq!(b.node_features.get(0, 0) - a.node_features.get(0, 0), 3.0);
    assert_eq!(a.edge_features.cols(), 0);
}

#[test]
fn graph_json_dump() {
    let cloud = PointCloud::new(
        "j",
        (0..3)
            .map(|i| RadarPoint {
                x: i as f64,
                y: 0.0,
                vx: 0.0,
                vy: 0.0,
                rcs: 1.0,
                t: 0.0,
                instance_id: None,
                label: ClassLabel::Background,
            })
            .collect(),
    );
    let g = build_graph(&cloud, &GraphConfig { k: 1 }, InvarianceMode::Translation).unwrap();
    let mut buf = Vec::new();
    g.write_json(&mut buf).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
    assert_eq!(v["mode"], "translation");
    assert_eq!(v["edges"].as_array().unwrap().len(), 3);
    assert_eq!(v["X"][0].as_array().unwrap().len(), 5);
    assert_eq!(v["E"][0].as_array().unwrap().len(), 2);
}

#[test]
fn empty_cloud_and_zero_k_are_rejected() {
    let empty = PointCloud::new("e", vec![]);
    assert!(build_graph(&empty, &GraphConfig::default(), InvarianceMode::None).is_err());
    let one = PointCloud::new(
        "o",
        vec![RadarPoint {
            x: 0.0,
            y: 0.0,
            vx: 0.0,
            vy: 0.0,
            rcs: 0.0,
            t: 0.0,
            instance_id: None,
            label: ClassLabel::Background,
        }],
    );
    assert!(build_graph(&one, &GraphConfig { k: 0 }, InvarianceMode::None).is_err());
    let g = build_graph(&one, &GraphConfig::default(), InvarianceMode::TranslationRotation).unwrap();
    assert_eq!((g.num_nodes(), g.num_edges()), (1, 0));
}
