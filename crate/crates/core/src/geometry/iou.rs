use super::boxes::AbsoluteBox;
use super::vec2::Vec2;

/// Shoelace area of a simple polygon (positive for counterclockwise order).
pub fn polygon_area(poly: &[Vec2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..poly.len() {
        acc += poly[i].cross(poly[(i + 1) % poly.len()]);
    }
    0.5 * acc
}

/// Sutherland–Hodgman clipping of `subject` by the convex counterclockwise polygon `clip`.
pub fn clip_convex(subject: &[Vec2], clip: &[Vec2]) -> Vec<Vec2> {
    let mut output = subject.to_vec();
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let edge = b - a;
        let side = |p: Vec2| edge.cross(p - a);
        let input = std::mem::take(&mut output);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let (s_cur, s_prev) = (side(cur), side(prev));
            if s_cur >= 0.0 {
                if s_prev < 0.0 {
                    output.push(prev + (cur - prev) * (s_prev / (s_prev - s_cur)));
                }
                output.push(cur);
            } else if s_prev >= 0.0 {
                output.push(prev + (cur - prev) * (s_prev / (s_prev - s_cur)));
            }
        }
    }
    output
}

/// Area of the intersection of two oriented boxes.
pub fn intersection_area(a: &AbsoluteBox, b: &AbsoluteBox) -> f64 {
    // far apart: skip clipping
    let reach = 0.5 * (a.w.hypot(a.l) + b.w.hypot(b.l));
    if (a.center() - b.center()).norm() > reach {
        return 0.0;
    }
    polygon_area(&clip_convex(&a.corners(), &b.corners())).max(0.0)
}

/// Intersection over union of two rotated boxes, in `[0, 1]`.
pub fn rotated_iou(a: &AbsoluteBox, b: &AbsoluteBox) -> f64 {
    let inter = intersection_area(a, b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_boxes() {
        let a = AbsoluteBox::new(1.0, 2.0, 1.5, 3.0, 0.4);
        assert!((rotated_iou(&a, &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_boxes() {
        let a = AbsoluteBox::new(0.0, 0.0, 1.0, 1.0, 0.0);
        let b = AbsoluteBox::new(100.0, 0.0, 1.0, 1.0, 0.3);
        assert_eq!(rotated_iou(&a, &b), 0.0);
    }

    #[test]
    fn half_shifted_unit_squares() {
        let a = AbsoluteBox::new(0.0, 0.0, 1.0, 1.0, 0.0);
        let b = AbsoluteBox::new(0.5, 0.0, 1.0, 1.0, 0.0);
        assert!((rotated_iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn contained_box() {
        let a = AbsoluteBox::new(0.0, 0.0, 4.0, 4.0, 0.0);
        let b = AbsoluteBox::new(0.0, 0.0, 1.0, 1.0, 0.3);
        assert!((rotated_iou(&a, &b) - 1.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn diamond_in_square() {
        // unit square vs same square turned 45 degrees: octagon of area 2(√2 − 1)
        let a = AbsoluteBox::new(0.0, 0.0, 1.0, 1.0, 0.0);
        let b = AbsoluteBox::new(0.0, 0.0, 1.0, 1.0, std::f64::consts::FRAC_PI_4);
        let inter = 2.0 * (2f64.sqrt() - 1.0);
        assert!((rotated_iou(&a, &b) - inter / (2.0 - inter)).abs() < 1e-12);
    }
}
