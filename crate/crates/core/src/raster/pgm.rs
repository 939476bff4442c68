//! Binary PGM (P5) dumps for visual inspection.

use super::{LabeledRaster, RasterGrid};

/// Set pixels white, background black.
pub fn to_pgm(r: &RasterGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", r.width, r.height).into_bytes();
    out.extend(r.pixels.iter().map(|&v| if v != 0 { 255 } else { 0 }));
    out
}

/// Boundary pixels black, components in cycling gray levels.
pub fn labels_to_pgm(l: &LabeledRaster) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", l.width, l.height).into_bytes();
    out.extend(l.labels.iter().map(|&v| if v == 0 { 0 } else { 64 + (v % 8) as u8 * 24 }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_payload() {
        let r = RasterGrid::from_rows(&[vec![1, 0], vec![0, 1]]);
        let bytes = to_pgm(&r);
        assert!(bytes.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(&bytes[bytes.len() - 4..], &[255, 0, 0, 255]);
    }
}
