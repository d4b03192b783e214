//! Bounding-box parameterizations, ground-truth box fitting and rotated IoU.

mod boxes;
mod iou;
mod rect;
mod vec2;

use std::io::{Read, Write};

pub use boxes::{
    decode_box, encode_box, AbsoluteBox, BoxMode, EncodedBox, FullyInvariantBox,
    TranslationInvariantBox,
};
pub use iou::{clip_convex, intersection_area, polygon_area, rotated_iou};
pub use rect::{convex_hull, min_enclosing_rect, nearest_reference, nearest_references, FLOOR_EXTENT};
pub use vec2::{axial_angle_distance, canonical_angle, wrap_pi, Vec2};

use crate::error::Result;

/// Writes boxes as CSV with header `x,y,w,l,theta`.
pub fn write_boxes_csv<W: Write>(writer: W, boxes: &[AbsoluteBox]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for b in boxes {
        w.serialize(b)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_boxes_csv<R: Read>(reader: R) -> Result<Vec<AbsoluteBox>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_and_values() {
        let boxes = [AbsoluteBox::new(1.0, 2.0, 0.5, 4.25, 0.125)];
        let mut buf = Vec::new();
        write_boxes_csv(&mut buf, &boxes).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,y,w,l,theta\n"));
        assert_eq!(read_boxes_csv(buf.as_slice()).unwrap(), boxes);
    }
}
