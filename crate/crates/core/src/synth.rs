//! Seeded synthetic scenes used as a stand-in corpus when no imagery is at hand.
//!
//! Each geography has its own texture: a shoreline, a canopy, field patches,
//! fields with scattered buildings, and a street grid. Values stay in `[0, 1]`.

use alloc::vec::Vec;

use crate::hash::{combine, mix64};
use crate::raster::{Geography, LabeledCrop};
use crate::{Raster, Result};

pub const CROP_SIZE: usize = 96;
pub const CROP_GSD: f64 = 0.6;
pub const CROPS_PER_GEOGRAPHY: u32 = 5;

/// Smooth horizontal-plus-vertical ramp in three channels.
pub fn gradient(width: usize, height: usize, gsd: f64) -> Raster {
    let mut data = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        for x in 0..width {
            let u = x as f64 / (width.max(2) - 1) as f64;
            let v = y as f64 / (height.max(2) - 1) as f64;
            data.push(0.1 + 0.8 * u);
            data.push(0.1 + 0.8 * v);
            data.push(0.1 + 0.4 * (u + v));
        }
    }
    Raster::new(width, height, 3, data, gsd).expect("valid gradient")
}

fn unit(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn lattice(seed: u64, ix: i64, iy: i64) -> f64 {
    unit(combine(&[seed, ix as u64, iy as u64]))
}

/// Bilinear value noise on a lattice of the given period (pixels).
fn value_noise(seed: u64, x: f64, y: f64, period: f64) -> f64 {
    let (fx, fy) = (x / period, y / period);
    let (ix, iy) = (libm::floor(fx), libm::floor(fy));
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let (tx, ty) = (smooth(fx - ix), smooth(fy - iy));
    let (ix, iy) = (ix as i64, iy as i64);
    let a = lattice(seed, ix, iy);
    let b = lattice(seed, ix + 1, iy);
    let c = lattice(seed, ix, iy + 1);
    let d = lattice(seed, ix + 1, iy + 1);
    let top = a + (b - a) * tx;
    let bottom = c + (d - c) * tx;
    top + (bottom - top) * ty
}

/// Four octaves of value noise, roughly in `[0, 1]`.
fn fbm(seed: u64, x: f64, y: f64, period: f64) -> f64 {
    let mut sum = 0.0;
    let mut amp = 0.5;
    let mut p = period;
    let mut norm = 0.0;
    for octave in 0..4u64 {
        sum += amp * value_noise(mix64(seed ^ octave), x, y, p);
        norm += amp;
        amp *= 0.5;
        p *= 0.5;
    }
    sum / norm
}

fn mix(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    let t = t.clamp(0.0, 1.0);
    [
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
    ]
}

fn shade(c: [f64; 3], f: f64) -> [f64; 3] {
    [c[0] * f, c[1] * f, c[2] * f]
}

fn beach(seed: u64, x: f64, y: f64) -> [f64; 3] {
    let angle = unit(mix64(seed)) * core::f64::consts::PI;
    let (s, c) = (libm::sin(angle), libm::cos(angle));
    let along = x * c + y * s;
    let across = -x * s + y * c;
    let shore = across - 48.0 + 10.0 * (fbm(seed ^ 1, x, y, 48.0) - 0.5) * 2.0;
    let sand = shade([0.86, 0.78, 0.6], 0.85 + 0.2 * fbm(seed ^ 2, x, y, 6.0));
    let water = [0.08, 0.28, 0.42];
    if shore > 4.0 {
        let wave = 0.5 + 0.5 * libm::sin(along * 0.35 + shore * 0.5);
        mix(water, [0.75, 0.85, 0.9], 0.25 * wave * libm::exp(-(shore - 4.0) / 12.0))
    } else if shore > 0.0 {
        mix(sand, [0.95, 0.97, 0.98], 0.8)
    } else {
        sand
    }
}

fn forest(seed: u64, x: f64, y: f64) -> [f64; 3] {
    let canopy = fbm(seed, x, y, 10.0);
    let crowns = value_noise(seed ^ 3, x, y, 3.0);
    let gap = fbm(seed ^ 4, x, y, 40.0);
    let leaf = mix([0.05, 0.16, 0.06], [0.22, 0.42, 0.16], canopy * 0.7 + crowns * 0.3);
    if gap < 0.3 {
        mix(leaf, [0.35, 0.3, 0.2], (0.3 - gap) * 4.0)
    } else {
        leaf
    }
}

/// Field id and in-field coordinate along the furrow direction.
fn field(seed: u64, x: f64, y: f64, cell: f64) -> (u64, f64) {
    let warp = 6.0 * (fbm(seed ^ 5, x, y, 32.0) - 0.5);
    let (cx, cy) = (libm::floor((x + warp) / cell), libm::floor((y - warp) / cell));
    let id = combine(&[seed, cx as i64 as u64, cy as i64 as u64]);
    let along = if id & 1 == 0 { x } else { y };
    (id, along)
}

fn rural(seed: u64, x: f64, y: f64) -> [f64; 3] {
    const CROPS: [[f64; 3]; 4] = [
        [0.45, 0.55, 0.2],
        [0.62, 0.55, 0.3],
        [0.3, 0.45, 0.18],
        [0.5, 0.4, 0.28],
    ];
    let (id, along) = field(seed, x, y, 28.0);
    let base = CROPS[(id >> 8) as usize % CROPS.len()];
    let furrow = 0.9 + 0.1 * libm::sin(along * 1.3);
    shade(base, furrow * (0.9 + 0.15 * fbm(seed ^ 6, x, y, 8.0)))
}

fn building(seed: u64, x: f64, y: f64, block: f64, density: f64) -> Option<[f64; 3]> {
    let (bx, by) = (libm::floor(x / block), libm::floor(y / block));
    let id = combine(&[seed ^ 7, bx as i64 as u64, by as i64 as u64]);
    if unit(id) > density {
        return None;
    }
    let (lx, ly) = (x - bx * block, y - by * block);
    let margin = 2.0 + 4.0 * unit(mix64(id));
    if lx < margin || ly < margin || lx > block - margin || ly > block - margin {
        return None;
    }
    let roof = 0.35 + 0.5 * unit(mix64(id ^ 1));
    let tint = unit(mix64(id ^ 2));
    Some(mix(
        [roof, roof, roof],
        [roof * 1.1, roof * 0.6, roof * 0.5],
        tint * 0.6,
    ))
}

fn rural_urban(seed: u64, x: f64, y: f64) -> [f64; 3] {
    if let Some(roof) = building(seed, x, y, 20.0, 0.3) {
        return roof;
    }
    let road = libm::fabs(y - 48.0 - 12.0 * libm::sin(x / 30.0 + unit(seed) * 6.0)) < 2.5;
    if road {
        return [0.42, 0.42, 0.44];
    }
    rural(seed, x, y)
}

fn urban(seed: u64, x: f64, y: f64) -> [f64; 3] {
    let street = 24.0;
    let (sx, sy) = (x % street, y % street);
    if sx < 4.0 || sy < 4.0 {
        let marking = (sx - 2.0).abs() < 0.4 && (y % 6.0) < 3.0;
        return if marking { [0.85, 0.85, 0.8] } else { [0.3, 0.3, 0.32] };
    }
    if let Some(roof) = building(seed, x, y, 10.0, 0.85) {
        return shade(roof, 0.95 + 0.1 * value_noise(seed ^ 8, x, y, 2.0));
    }
    mix([0.5, 0.5, 0.48], [0.25, 0.4, 0.2], fbm(seed ^ 9, x, y, 6.0))
}

/// One `width x height x 3` scene for `geography`, deterministic in `seed`.
pub fn scene(geography: Geography, width: usize, height: usize, gsd: f64, seed: u64) -> Raster {
    let seed = combine(&[seed, geography as u64]);
    let paint: fn(u64, f64, f64) -> [f64; 3] = match geography {
        Geography::Beach => beach,
        Geography::Forest => forest,
        Geography::Rural => rural,
        Geography::RuralUrban => rural_urban,
        Geography::Urban => urban,
    };
    let mut data = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        for x in 0..width {
            for v in paint(seed, x as f64, y as f64) {
                data.push(v.clamp(0.0, 1.0));
            }
        }
    }
    Raster::new(width, height, 3, data, gsd).expect("valid scene")
}

/// Five 96x96 crops per geography at 0.6 m/px, crop ids starting at 1.
pub fn corpus(seed: u64) -> Result<Vec<LabeledCrop>> {
    let mut out = Vec::new();
    for g in Geography::ALL {
        for id in 1..=CROPS_PER_GEOGRAPHY {
            let raster = scene(g, CROP_SIZE, CROP_SIZE, CROP_GSD, combine(&[seed, u64::from(id)]));
            out.push(LabeledCrop::new(g, id, raster)?);
        }
    }
    Ok(out)
}
