use radargnn::scene::{
    accumulate_frames, crop_roi, generate_dataset, generate_scene, read_scenes_from, split_dataset, write_scenes_to,
    ClassLabel, ClassMap, DatasetSpec, ObjectCounts, Roi, SceneSpec,
};

#[test]
fn dataset_split_sizes_follow_ratios() {
    let ids: Vec<usize> = (0..100).collect();
    let split = split_dataset(&ids, [0.64, 0.16, 0.20], 7).unwrap();
    assert_eq!((split.train.len(), split.val.len(), split.test.len()), (64, 16, 20));
    let mut all: Vec<usize> = split.train.iter().chain(&split.val).chain(&split.test).copied().collect();
    all.sort_unstable();
    assert_eq!(all, ids);
    assert_eq!(split, split_dataset(&ids, [0.64, 0.16, 0.20], 7).unwrap());
}

#[test]
fn generated_scenes_are_reproducible_and_labeled() {
    let spec = SceneSpec {
        rng_seed: 11,
        objects: ObjectCounts {
            car: 2,
            pedestrian: 1,
            ..ObjectCounts::default()
        },
        ..SceneSpec::default()
    };
    let (cloud, instances) = generate_scene(&spec).unwrap();
    assert_eq!(generate_scene(&spec).unwrap(), (cloud.clone(), instances.clone()));
    assert_eq!(instances.len(), 3);
    for inst in &instances {
        let pts: Vec<_> = cloud.points.iter().filter(|p| p.instance_id == Some(inst.id)).collect();
        assert!(!pts.is_empty());
        assert!(pts.iter().all(|p| p.label == inst.label));
        let grown = radargnn::AbsoluteBox::new(inst.bbox.x, inst.bbox.y, inst.bbox.w + 1e-9, inst.bbox.l + 1e-9, inst.bbox.theta);
        assert!(pts.iter().all(|p| grown.contains(p.position())));
    }
    assert!(cloud.points.iter().any(|p| p.label == ClassLabel::Background));
}

#[test]
fn jsonl_round_trip_through_class_map() {
    let scenes = generate_dataset(
        &DatasetSpec {
            n_scenes: 3,
            ..DatasetSpec::default()
        },
        4,
    )
    .unwrap();
    let clouds: Vec<_> = scenes.iter().map(|s| s.cloud.clone()).collect();
    let mut buf = Vec::new();
    write_scenes_to(&mut buf, &clouds).unwrap();
    assert_eq!(String::from_utf8_lossy(&buf).lines().count(), 3);
    let back = read_scenes_from(buf.as_slice(), &ClassMap::default()).unwrap();
    assert_eq!(back, clouds);
}

#[test]
fn raw_labels_map_to_five_classes() {
    let map = ClassMap::default();
    assert_eq!(map.map("truck").unwrap(), ClassLabel::LargeVehicle);
    assert_eq!(map.map("bicycle").unwrap(), ClassLabel::TwoWheeler);
    assert!(map.map("spaceship").is_err());
}

#[test]
fn accumulation_and_cropping() {
    let (a, _) = generate_scene(&SceneSpec::default()).unwrap();
    let mut late = a.clone();
    late.frame_id = "late".into();
    for p in &mut late.points {
        p.t += 1.0;
    }
    let acc = accumulate_frames(&[a.clone(), late.clone()], 0.5).unwrap();
    assert_eq!(acc.frame_id, "late");
    assert!(acc.points.iter().all(|p| p.t >= 1.0));

    let roi = Roi {
        x_min: 0.0,
        x_max: 50.0,
        y_min: -10.0,
        y_max: 10.0,
    };
    let cropped = crop_roi(&a, &roi);
    assert!(cropped.points.iter().all(|p| roi.contains(p.x, p.y)));
    assert_eq!(
        cropped.len(),
        a.points.iter().filter(|p| roi.contains(p.x, p.y)).count()
    );
}
