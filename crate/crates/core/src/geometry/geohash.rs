//! Geohash encoding (longitude bit first, base-32).

use super::{BBox, Point};
use serde::{Deserialize, Serialize};

pub const GEOHASH_PRECISION: usize = 8;

const ALPHABET: &[u8; 32] = b"0123456789bcdefghjkmnpqrstuvwxyz";

/// An 8-character geohash code.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GeohashCell(String);

impl GeohashCell {
    pub fn code(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for GeohashCell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Integer cell coordinates at a given precision: `lon` and `lat` are the
/// de-interleaved bisection bit strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex {
    pub lon: u32,
    pub lat: u32,
}

impl CellIndex {
    fn bits(precision: usize) -> (u32, u32) {
        let total = (precision * 5) as u32;
        let lon_bits = total.div_ceil(2);
        (lon_bits, total - lon_bits)
    }

    /// Cell containing `p` at `precision` characters.
    pub fn of(p: &Point, precision: usize) -> Self {
        let (lon_bits, lat_bits) = Self::bits(precision);
        Self {
            lon: bisect(p.lon, -180.0, 180.0, lon_bits),
            lat: bisect(p.lat, -90.0, 90.0, lat_bits),
        }
    }

    /// Cell size in degrees (lon, lat).
    pub fn cell_size(precision: usize) -> (f64, f64) {
        let (lon_bits, lat_bits) = Self::bits(precision);
        (360.0 / f64::from(1u32 << lon_bits), 180.0 / f64::from(1u32 << lat_bits))
    }

    pub fn bbox(&self, precision: usize) -> BBox {
        let (dlon, dlat) = Self::cell_size(precision);
        let min_lon = -180.0 + f64::from(self.lon) * dlon;
        let min_lat = -90.0 + f64::from(self.lat) * dlat;
        BBox::new(min_lon, min_lat, min_lon + dlon, min_lat + dlat)
    }

    pub fn center(&self, precision: usize) -> Point {
        self.bbox(precision).center()
    }

    pub fn to_code(&self, precision: usize) -> GeohashCell {
        let (lon_bits, lat_bits) = Self::bits(precision);
        let mut out = String::with_capacity(precision);
        let (mut li, mut ai) = (lon_bits, lat_bits);
        let mut even = true;
        let mut ch = 0u8;
        for k in 0..precision * 5 {
            let bit = if even {
                li -= 1;
                (self.lon >> li) & 1
            } else {
                ai -= 1;
                (self.lat >> ai) & 1
            };
            ch = (ch << 1) | bit as u8;
            even = !even;
            if k % 5 == 4 {
                out.push(ALPHABET[ch as usize] as char);
                ch = 0;
            }
        }
        GeohashCell(out)
    }

    pub fn from_code(code: &str) -> Option<Self> {
        let precision = code.len();
        let (lon_bits, lat_bits) = Self::bits(precision);
        let (mut lon, mut lat) = (0u32, 0u32);
        let mut even = true;
        for c in code.bytes() {
            let v = ALPHABET.iter().position(|&a| a == c)? as u32;
            for shift in (0..5).rev() {
                let bit = (v >> shift) & 1;
                if even {
                    lon = (lon << 1) | bit;
                } else {
                    lat = (lat << 1) | bit;
                }
                even = !even;
            }
        }
        debug_assert!(lon < (1 << lon_bits) && lat < (1 << lat_bits));
        Some(Self { lon, lat })
    }
}

fn bisect(value: f64, mut lo: f64, mut hi: f64, bits: u32) -> u32 {
    let mut idx = 0u32;
    for _ in 0..bits {
        let mid = (lo + hi) / 2.0;
        if value >= mid {
            idx = (idx << 1) | 1;
            lo = mid;
        } else {
            idx <<= 1;
            hi = mid;
        }
    }
    idx
}

/// Standard geohash of `p` with `precision` characters.
pub fn encode(p: &Point, precision: usize) -> GeohashCell {
    CellIndex::of(p, precision).to_code(precision)
}

/// Bounding box of a geohash code, `None` for characters outside the alphabet.
pub fn decode_bbox(code: &str) -> Option<BBox> {
    CellIndex::from_code(code).map(|c| c.bbox(code.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_derived_vectors() {
        assert_eq!(encode(&Point::new(0.0, 0.0), 8).code(), "s0000000");
        assert_eq!(encode(&Point::new(180.0, 90.0), 8).code(), "zzzzzzzz");
        assert_eq!(encode(&Point::new(-180.0, -90.0), 8).code(), "00000000");
    }

    #[test]
    fn nearby_points_share_code() {
        let a = Point::new(116.3912345, 39.9071234);
        let b = Point::new(116.3912345 + 1e-9, 39.9071234 + 1e-9);
        assert_eq!(encode(&a, 8), encode(&b, 8));
    }

    #[test]
    fn decode_round_trip() {
        let p = Point::new(-0.1276, 51.5072);
        let code = encode(&p, 8);
        let bbox = decode_bbox(code.code()).unwrap();
        assert!(bbox.contains(&p));
        assert!(decode_bbox("s00a").is_none());
    }
}
