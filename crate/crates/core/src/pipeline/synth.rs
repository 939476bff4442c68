//! Seeded synthetic city: a grid road network, an optional river obstacle,
//! and service records drawn from daily-periodic Poisson hotspots.

use crate::geometry::{BBox, LocalProjection, Point, Polygon};
use crate::ingest::{GeometrySet, ServiceRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic city: {0}")]
    InvalidSpec(String),
}

/// A demand source with intensity `rate·(1 + amplitude·sin(2π·hour/24 + phase))`
/// records per hour, scattered with a Gaussian of `spread_m` around its center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hotspot {
    /// Center, km east of the city's south-west corner.
    pub x_km: f64,
    /// Center, km north of the city's south-west corner.
    pub y_km: f64,
    pub rate_per_hour: f64,
    /// Relative sinusoid amplitude in `[0, 1]`.
    pub amplitude: f64,
    /// Phase in radians.
    pub phase: f64,
    pub spread_m: f64,
}

/// A vertical river obstacle spanning the whole city.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct River {
    /// Center line, km east of the west edge.
    pub x_km: f64,
    pub width_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    /// South-west corner of the city.
    pub origin_lon: f64,
    pub origin_lat: f64,
    /// The city is a square of this side.
    pub extent_km: f64,
    pub road_spacing_m: f64,
    #[serde(default)]
    pub river: Option<River>,
    #[serde(default)]
    pub hotspots: Vec<Hotspot>,
    /// Uniform background demand over the whole city, records per hour.
    #[serde(default)]
    pub noise_per_hour: f64,
    pub days: u32,
    /// Unix time of the first hour (UTC midnight recommended).
    pub start: i64,
    pub seed: u64,
}

impl SynthSpec {
    /// A city with `hotspots` random hotspots of mixed amplitude (a third
    /// nearly flat, the rest strongly periodic with varied phase).
    pub fn random(seed: u64, extent_km: f64, road_spacing_m: f64, days: u32, hotspots: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c17e);
        let hotspots = (0..hotspots)
            .map(|i| {
                let periodic = i % 3 != 0;
                Hotspot {
                    x_km: rng.random_range(0.05 * extent_km..0.95 * extent_km),
                    y_km: rng.random_range(0.05 * extent_km..0.95 * extent_km),
                    rate_per_hour: rng.random_range(2.0..20.0),
                    amplitude: if periodic { rng.random_range(0.6..0.95) } else { rng.random_range(0.0..0.1) },
                    phase: rng.random_range(0.0..TAU),
                    spread_m: rng.random_range(150.0..600.0),
                }
            })
            .collect();
        Self {
            origin_lon: 116.3,
            origin_lat: 39.9,
            extent_km,
            road_spacing_m,
            river: None,
            hotspots,
            noise_per_hour: 2.0,
            days,
            start: 1_704_067_200,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |m: String| Err(SynthError::InvalidSpec(m));
        if !(self.extent_km > 0.0) || !(self.road_spacing_m > 0.0) || self.road_spacing_m > self.extent_km * 1000.0 {
            return fail("extent and road spacing must be positive, spacing ≤ extent".into());
        }
        if self.days == 0 {
            return fail("days must be positive".into());
        }
        if !(self.noise_per_hour >= 0.0) {
            return fail("noise must be nonnegative".into());
        }
        if Point::checked(self.origin_lon, self.origin_lat).is_err() {
            return fail("origin out of range".into());
        }
        for h in &self.hotspots {
            if !(h.rate_per_hour >= 0.0) || !(0.0..=1.0).contains(&h.amplitude) || !(h.spread_m >= 0.0) {
                return fail(format!("hotspot at ({}, {}) has rate < 0, amplitude outside [0, 1] or spread < 0", h.x_km, h.y_km));
            }
        }
        if let Some(r) = &self.river {
            if !(r.width_m > 0.0) || !(0.0..=self.extent_km).contains(&r.x_km) {
                return fail("river must have positive width and lie inside the city".into());
            }
        }
        Ok(())
    }

    fn projection(&self) -> LocalProjection {
        LocalProjection::new(Point::new(self.origin_lon, self.origin_lat))
    }

    pub fn bbox(&self) -> BBox {
        let proj = self.projection();
        let ne = proj.unproject(self.extent_km, self.extent_km);
        BBox::new(self.origin_lon, self.origin_lat, ne.lon, ne.lat)
    }

    /// Records per hour expected from hotspot `h` at hour-of-day `hour`.
    pub fn intensity(h: &Hotspot, hour: f64) -> f64 {
        (h.rate_per_hour * (1.0 + h.amplitude * (TAU * hour / 24.0 + h.phase).sin())).max(0.0)
    }
}

/// Roads on every multiple of the spacing (borders included) and the river.
pub fn synth_geometry(spec: &SynthSpec) -> Result<GeometrySet, SynthError> {
    spec.validate()?;
    let proj = spec.projection();
    let e = spec.extent_km;
    let step = spec.road_spacing_m / 1000.0;
    let lines = (e / step + 1e-9).floor() as usize;
    let mut offsets: Vec<f64> = (0..=lines).map(|k| k as f64 * step).collect();
    if e - offsets.last().copied().unwrap_or(0.0) > 1e-9 {
        offsets.push(e);
    }
    let mut roads = Vec::new();
    for &o in &offsets {
        roads.push(vec![proj.unproject(0.0, o), proj.unproject(e, o)]);
        roads.push(vec![proj.unproject(o, 0.0), proj.unproject(o, e)]);
    }
    let obstacles = spec
        .river
        .iter()
        .map(|r| {
            let half = r.width_m / 2000.0;
            let sw = proj.unproject((r.x_km - half).max(0.0), 0.0);
            let ne = proj.unproject((r.x_km + half).min(e), e);
            Polygon::rectangle(sw.lon, sw.lat, ne.lon, ne.lat)
        })
        .collect();
    Ok(GeometrySet { roads, obstacles, skipped: 0 })
}

/// Hourly Poisson draws per hotspot plus uniform background noise; records
/// that land outside the city are dropped. Output is sorted by time.
pub fn synth_records(spec: &SynthSpec) -> Result<Vec<ServiceRecord>, SynthError> {
    spec.validate()?;
    let proj = spec.projection();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let e = spec.extent_km;
    let mut out = Vec::new();
    let mut emit = |rng: &mut ChaCha8Rng, hour: i64, x: f64, y: f64| {
        if (0.0..=e).contains(&x) && (0.0..=e).contains(&y) {
            let timestamp = spec.start + hour * 3600 + rng.random_range(0..3600);
            out.push(ServiceRecord { timestamp, location: proj.unproject(x, y) });
        }
    };
    for hour in 0..i64::from(spec.days) * 24 {
        let hod = (hour % 24) as f64;
        for h in &spec.hotspots {
            let n = poisson(&mut rng, SynthSpec::intensity(h, hod));
            let spread = Normal::new(0.0, h.spread_m / 1000.0).expect("finite spread");
            for _ in 0..n {
                let (dx, dy) = (spread.sample(&mut rng), spread.sample(&mut rng));
                emit(&mut rng, hour, h.x_km + dx, h.y_km + dy);
            }
        }
        for _ in 0..poisson(&mut rng, spec.noise_per_hour) {
            let (x, y) = (rng.random_range(0.0..e), rng.random_range(0.0..e));
            emit(&mut rng, hour, x, y);
        }
    }
    out.sort_by_key(|r| r.timestamp);
    Ok(out)
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean > 0.0 {
        Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SynthSpec {
        let mut s = SynthSpec::random(1, 4.0, 500.0, 2, 3);
        s.noise_per_hour = 1.0;
        s
    }

    #[test]
    fn geometry_grid_and_river() {
        let mut s = spec();
        let g = synth_geometry(&s).unwrap();
        assert_eq!(g.roads.len(), 18);
        assert!(g.obstacles.is_empty());
        s.river = Some(River { x_km: 1.25, width_m: 100.0 });
        assert_eq!(synth_geometry(&s).unwrap().obstacles.len(), 1);
    }

    #[test]
    fn records_deterministic_and_inside() {
        let s = spec();
        let a = synth_records(&s).unwrap();
        assert_eq!(a, synth_records(&s).unwrap());
        let bbox = s.bbox();
        assert!(a.iter().all(|r| bbox.contains(&r.location)));
        assert!(a.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        let end = s.start + 2 * 86_400;
        assert!(a.iter().all(|r| (s.start..end).contains(&r.timestamp)));
    }

    #[test]
    fn rejects_bad_amplitude() {
        let mut s = spec();
        s.hotspots[0].amplitude = 1.5;
        assert!(synth_records(&s).is_err());
    }
}
