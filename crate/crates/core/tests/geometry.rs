use std::f64::consts::PI;

use proptest::prelude::*;
use radargnn::geometry::{
    axial_angle_distance, canonical_angle, decode_box, encode_box, min_enclosing_rect, read_boxes_csv, rotated_iou,
    write_boxes_csv, AbsoluteBox, BoxMode, Vec2,
};

fn arb_box() -> impl Strategy<Value = AbsoluteBox> {
    (-50.0..50.0f64, -50.0..50.0f64, 0.1..5.0f64, 0.1..10.0f64, -10.0..10.0f64)
        .prop_map(|(x, y, w, l, t)| AbsoluteBox::new(x, y, w, l, t))
}

fn arb_points() -> impl Strategy<Value = Vec<Vec2>> {
    prop::collection::vec((-20.0..20.0f64, -20.0..20.0f64).prop_map(|(x, y)| Vec2::new(x, y)), 1..40)
}

proptest! {
    #[test]
    fn encode_decode_round_trips(
        b in arb_box(),
        p0 in (-60.0..60.0f64, -60.0..60.0f64),
        offset in (0.01..8.0f64, 0.0..(2.0 * PI)),
    ) {
        let p0 = Vec2::new(p0.0, p0.1);
        let p_nn = p0 + Vec2::from_angle(offset.1) * offset.0;
        for mode in [BoxMode::Absolute, BoxMode::TranslationInvariant, BoxMode::FullyInvariant] {
            let back = decode_box(&encode_box(&b, p0, p_nn, mode).unwrap(), p0, p_nn).unwrap();
            prop_assert!((back.x - b.x).abs() < 1e-9 && (back.y - b.y).abs() < 1e-9);
            prop_assert_eq!((back.w, back.l), (b.w, b.l));
            prop_assert!(axial_angle_distance(back.theta, b.theta) < 1e-9);
        }
    }

    #[test]
    fn iou_is_a_symmetric_fraction(a in arb_box(), b in arb_box()) {
        let ab = rotated_iou(&a, &b);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - rotated_iou(&b, &a)).abs() < 1e-12);
        prop_assert!((rotated_iou(&a, &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn enclosing_rect_covers_points(points in arb_points()) {
        let rect = min_enclosing_rect(&points).unwrap();
        prop_assert!(rect.is_valid());
        prop_assert!((0.0..PI).contains(&rect.theta));
        let grown = AbsoluteBox::new(rect.x, rect.y, rect.w + 1e-9, rect.l + 1e-9, rect.theta);
        for p in &points {
            prop_assert!(grown.contains(*p));
        }
    }

    #[test]
    fn canonical_angle_range(t in -100.0..100.0f64) {
        let c = canonical_angle(t);
        prop_assert!((0.0..PI).contains(&c));
        prop_assert!(axial_angle_distance(c, t) < 1e-9);
    }
}

#[test]
fn fully_invariant_example_from_baseline() {
    // Baseline along +y, box centered 2 m to the left of it, long side across the baseline.
    let p0 = Vec2::new(1.0, 1.0);
    let p_nn = Vec2::new(1.0, 2.0);
    let b = AbsoluteBox::new(-1.0, 1.0, 1.0, 3.0, 0.0);
    let e = encode_box(&b, p0, p_nn, BoxMode::FullyInvariant).unwrap().to_array();
    assert!((e[0] - 2.0).abs() < 1e-12);
    assert!((e[1] - PI / 2.0).abs() < 1e-12);
    assert!((e[4] - PI / 2.0).abs() < 1e-12);
}

#[test]
fn boxes_csv_round_trip() {
    let boxes = vec![AbsoluteBox::new(1.5, -2.0, 0.7, 1.9, 0.3), AbsoluteBox::new(0.0, 0.0, 2.0, 4.5, 3.0)];
    let mut buf = Vec::new();
    write_boxes_csv(&mut buf, &boxes).unwrap();
    assert!(String::from_utf8_lossy(&buf).starts_with("x,y,w,l,theta"));
    assert_eq!(read_boxes_csv(buf.as_slice()).unwrap(), boxes);
}
