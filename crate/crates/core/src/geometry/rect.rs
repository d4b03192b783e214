use std::f64::consts::FRAC_PI_2;

use super::boxes::AbsoluteBox;
use super::vec2::{canonical_angle, Vec2};
use crate::error::{Error, Result};

/// Side length given to boxes of point sets that do not span an area.
pub const FLOOR_EXTENT: f64 = 0.2;

/// Convex hull by Andrew's monotone chain, counterclockwise, collinear points dropped.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: Vec2, a: Vec2, b: Vec2| (a - o).cross(b - o);
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Orients a rectangle so the longer side lies along `theta`; squares take the smaller angle.
fn canonical_rect(center: Vec2, along: f64, across: f64, angle: f64) -> AbsoluteBox {
    let (w, l, theta) = if across > along {
        (along, across, angle + FRAC_PI_2)
    } else {
        (across, along, angle)
    };
    let mut theta = canonical_angle(theta);
    if (l - w).abs() <= 1e-12 * l.max(1.0) {
        theta = theta.rem_euclid(FRAC_PI_2);
    }
    AbsoluteBox {
        x: center.x,
        y: center.y,
        w,
        l,
        theta,
    }
}

fn degenerate_rect(points: &[Vec2], hull: &[Vec2]) -> AbsoluteBox {
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vec2::ZERO, |acc, &p| acc + p) * (1.0 / n);
    if hull.len() < 2 {
        return canonical_rect(centroid, FLOOR_EXTENT, FLOOR_EXTENT, 0.0);
    }
    // collinear: span the segment, floor the width
    let (a, b) = (hull[0], hull[hull.len() - 1]);
    let u = (b - a) * (1.0 / (b - a).norm());
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let s = (*p - centroid).dot(u);
        (lo.min(s), hi.max(s))
    });
    let center = centroid + u * (0.5 * (lo + hi));
    canonical_rect(center, (hi - lo).max(FLOOR_EXTENT), FLOOR_EXTENT, u.angle())
}

/// Minimum-area enclosing rectangle via rotating calipers over the convex hull.
pub fn min_enclosing_rect(points: &[Vec2]) -> Result<AbsoluteBox> {
    if points.is_empty() {
        return Err(Error::EmptyInput("min_enclosing_rect needs at least one point"));
    }
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return Ok(degenerate_rect(points, &hull));
    }
    let h = hull.len();
    let at = |i: usize| hull[i % h];
    let edge_dir = |i: usize| {
        let e = at(i + 1) - at(i);
        e * (1.0 / e.norm())
    };

    // calipers: `right` maximizes projection on u, `top` on the inward normal, `left` minimizes u
    let u0 = edge_dir(0);
    let mut right = 1;
    while (at(right + 1) - at(right)).dot(u0) > 0.0 {
        right += 1;
    }
    let mut top = right;
    while (at(top + 1) - at(top)).dot(u0.perp()) > 0.0 {
        top += 1;
    }
    let mut left = top;
    while (at(left + 1) - at(left)).dot(u0) < 0.0 {
        left += 1;
    }

    let mut best: Option<(f64, AbsoluteBox)> = None;
    for i in 0..h {
        let u = edge_dir(i);
        let v = u.perp();
        while (at(right + 1) - at(right)).dot(u) > 0.0 {
            right += 1;
        }
        if top < right {
            top = right;
        }
        while (at(top + 1) - at(top)).dot(v) > 0.0 {
            top += 1;
        }
        if left < top {
            left = top;
        }
        while (at(left + 1) - at(left)).dot(u) < 0.0 {
            left += 1;
        }

        let origin = at(i);
        let u_max = (at(right) - origin).dot(u);
        let u_min = (at(left) - origin).dot(u);
        let v_max = (at(top) - origin).dot(v);
        let area = (u_max - u_min) * v_max;
        let center = origin + u * (0.5 * (u_max + u_min)) + v * (0.5 * v_max);
        let rect = canonical_rect(center, u_max - u_min, v_max, u.angle());

        let replace = match &best {
            None => true,
            Some((best_area, best_rect)) => {
                let eps = 1e-12 * best_area.max(1.0);
                area < best_area - eps
                    || ((area - best_area).abs() <= eps && rect.theta < best_rect.theta)
            }
        };
        if replace {
            best = Some((area, rect));
        }
    }
    Ok(best.expect("hull has at least three edges").1)
}

/// Index of the nearest other point; ties go to the smallest index.
pub fn nearest_reference(positions: &[Vec2], i: usize) -> Result<usize> {
    if positions.len() < 2 {
        return Err(Error::InsufficientPoints {
            needed: 2,
            got: positions.len(),
        });
    }
    let p = positions[i];
    let mut best = (f64::INFINITY, usize::MAX);
    for (j, q) in positions.iter().enumerate() {
        if j == i {
            continue;
        }
        let d = (*q - p).norm_sq();
        if d < best.0 {
            best = (d, j);
        }
    }
    Ok(best.1)
}

/// `nearest_reference` for every point.
pub fn nearest_references(positions: &[Vec2]) -> Result<Vec<usize>> {
    (0..positions.len())
        .map(|i| nearest_reference(positions, i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    #[test]
    fn unit_square() {
        let b = min_enclosing_rect(&[v(0., 0.), v(1., 0.), v(1., 1.), v(0., 1.)]).unwrap();
        assert!((b.x - 0.5).abs() < 1e-12 && (b.y - 0.5).abs() < 1e-12);
        assert!((b.w - 1.0).abs() < 1e-12 && (b.l - 1.0).abs() < 1e-12);
        assert!(b.theta.abs() < 1e-12);
    }

    #[test]
    fn single_point_gets_floor_extent() {
        let b = min_enclosing_rect(&[v(3., -1.)]).unwrap();
        assert_eq!((b.x, b.y, b.w, b.l, b.theta), (3., -1., 0.2, 0.2, 0.0));
    }

    #[test]
    fn collinear_points_span_the_segment() {
        let b = min_enclosing_rect(&[v(0., 0.), v(1., 1.), v(2., 2.)]).unwrap();
        assert!((b.x - 1.0).abs() < 1e-12 && (b.y - 1.0).abs() < 1e-12);
        assert!((b.l - 8f64.sqrt()).abs() < 1e-12);
        assert_eq!(b.w, FLOOR_EXTENT);
        assert!((b.theta - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn empty_input_errors() {
        assert!(matches!(min_enclosing_rect(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn rotated_rectangle_is_recovered() {
        let truth = AbsoluteBox::new(4.0, -3.0, 1.5, 4.0, 0.6);
        let b = min_enclosing_rect(&truth.corners()).unwrap();
        assert!((b.x - 4.0).abs() < 1e-9 && (b.y + 3.0).abs() < 1e-9);
        assert!((b.w - 1.5).abs() < 1e-9 && (b.l - 4.0).abs() < 1e-9);
        assert!((b.theta - 0.6).abs() < 1e-9);
    }

    #[test]
    fn nearest_reference_examples() {
        let two = [v(0., 0.), v(5., 5.)];
        assert_eq!(nearest_reference(&two, 0).unwrap(), 1);
        assert_eq!(nearest_reference(&two, 1).unwrap(), 0);

        let line = [v(0., 0.), v(1., 0.), v(3., 0.)];
        assert_eq!(nearest_references(&line).unwrap(), vec![1, 0, 1]);

        let mut pts = vec![v(10., 10.); 10];
        for (i, p) in pts.iter_mut().enumerate() {
            *p = v(100.0 + i as f64 * 10.0, 0.0);
        }
        pts[4] = v(0.0, 1.0);
        pts[7] = v(0.0, 1.0);
        pts[9] = v(0.0, 0.0);
        assert_eq!(nearest_reference(&pts, 9).unwrap(), 4);

        assert!(matches!(
            nearest_reference(&[v(0., 0.)], 0),
            Err(Error::InsufficientPoints { .. })
        ));
    }
}
