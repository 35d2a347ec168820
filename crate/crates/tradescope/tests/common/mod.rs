//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tradescope::core::edsr::{ConvLayer, WeightStore};
use tradescope::core::Raster;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_raster(w: usize, h: usize, c: usize, seed: u64) -> Raster {
    let mut r = rng(seed);
    let data = (0..w * h * c).map(|_| r.random::<f64>()).collect();
    Raster::new(w, h, c, data, 1.0).unwrap()
}

/// Mirror with the edge sample repeated, by repeated folding.
pub fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    while i < 0 || i >= n {
        i = if i < 0 { -i - 1 } else { 2 * n - 1 - i };
    }
    i as usize
}

/// True 2D convolution of one plane, `out(x,y) = sum k(dx,dy) in(x-dx, y-dy)`.
pub fn convolve_plane(plane: &[f64], w: usize, h: usize, kernel: &[f64], support: usize) -> Vec<f64> {
    let r = (support / 2) as isize;
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let k = kernel[((dy + r) as usize) * support + (dx + r) as usize];
                    acc += k * plane[mirror(y - dy, h) * w + mirror(x - dx, w)];
                }
            }
            out[y as usize * w + x as usize] = acc;
        }
    }
    out
}

/// Channel-major tensor `[c][y][x]`.
pub type Tensor = Vec<Vec<Vec<f64>>>;

pub fn tensor_from_raster(img: &Raster) -> Tensor {
    (0..3)
        .map(|c| {
            let ch = c.min(img.channels() - 1);
            (0..img.height())
                .map(|y| (0..img.width()).map(|x| img.get(x, y, ch)).collect())
                .collect()
        })
        .collect()
}

/// Same-size cross-correlation with mirrored borders.
pub fn conv_ref(input: &Tensor, layer: &ConvLayer) -> Tensor {
    let s = layer.shape;
    let h = input[0].len();
    let w = input[0][0].len();
    let r = (s.kernel / 2) as isize;
    let mut out = vec![vec![vec![0.0; w]; h]; s.out_channels];
    for (o, plane) in out.iter_mut().enumerate() {
        for y in 0..h {
            for x in 0..w {
                let mut acc = f64::from(layer.bias[o]);
                for (i, src) in input.iter().enumerate() {
                    for ky in 0..s.kernel {
                        for kx in 0..s.kernel {
                            let sy = mirror(y as isize + ky as isize - r, h);
                            let sx = mirror(x as isize + kx as isize - r, w);
                            let wt = layer.weight[((o * s.in_channels + i) * s.kernel + ky) * s.kernel + kx];
                            acc += f64::from(wt) * src[sy][sx];
                        }
                    }
                }
                plane[y][x] = acc;
            }
        }
    }
    out
}

fn shuffle_ref(input: &Tensor, r: usize) -> Tensor {
    let c = input.len() / (r * r);
    let h = input[0].len();
    let w = input[0][0].len();
    let mut out = vec![vec![vec![0.0; w * r]; h * r]; c];
    for (ch, plane) in out.iter_mut().enumerate() {
        for (oy, row) in plane.iter_mut().enumerate() {
            for (ox, v) in row.iter_mut().enumerate() {
                let sub = (oy % r) * r + ox % r;
                *v = input[ch * r * r + sub][oy / r][ox / r];
            }
        }
    }
    out
}

fn add(a: &Tensor, b: &Tensor, scale: f64) -> Tensor {
    a.iter()
        .zip(b)
        .map(|(pa, pb)| {
            pa.iter()
                .zip(pb)
                .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + scale * y).collect())
                .collect()
        })
        .collect()
}

fn relu(t: &Tensor) -> Tensor {
    t.iter()
        .map(|p| p.iter().map(|r| r.iter().map(|v| v.max(0.0)).collect()).collect())
        .collect()
}

/// Reference network evaluation looking every layer up by name.
pub fn edsr_ref(store: &WeightStore, img: &Raster) -> Raster {
    let cfg = store.config;
    let layer = |name: &str| store.layer(name).unwrap_or_else(|| panic!("missing {name}"));
    let head = conv_ref(&tensor_from_raster(img), layer("head"));
    let mut x = head.clone();
    for b in 0..cfg.n_blocks {
        let t = conv_ref(
            &relu(&conv_ref(&x, layer(&format!("body.{b}.conv1")))),
            layer(&format!("body.{b}.conv2")),
        );
        x = add(&x, &t, f64::from(cfg.residual_scaling));
    }
    x = add(&conv_ref(&x, layer("body.conv")), &head, 1.0);
    let factors: Vec<usize> = match cfg.scale {
        2 => vec![2],
        3 => vec![3],
        4 => vec![2, 2],
        s => panic!("scale {s}"),
    };
    for (i, r) in factors.into_iter().enumerate() {
        x = shuffle_ref(&conv_ref(&x, layer(&format!("upsample.{i}"))), r);
    }
    let rgb = conv_ref(&x, layer("tail"));
    let h = rgb[0].len();
    let w = rgb[0][0].len();
    let planes: Vec<Vec<f64>> = if img.channels() == 1 {
        vec![(0..h * w)
            .map(|i| (0..3).map(|c| rgb[c][i / w][i % w]).sum::<f64>() / 3.0)
            .collect()]
    } else {
        rgb.iter().map(|p| p.iter().flatten().copied().collect()).collect()
    };
    let gsd = img.gsd() / f64::from(cfg.scale);
    Raster::from_planes(w, h, &planes, gsd).unwrap().clamp_unit()
}

pub fn mse_ref(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]).powi(2);
    }
    s / a.len() as f64
}

pub fn psnr_ref(mse: f64, peak: f64) -> f64 {
    10.0 * (peak * peak / mse).log10()
}

/// Single-window SSIM of one plane with population moments.
pub fn ssim_ref(a: &[f64], b: &[f64], peak: f64) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let va = a.iter().map(|v| (v - ma).powi(2)).sum::<f64>() / n;
    let vb = b.iter().map(|v| (v - mb).powi(2)).sum::<f64>() / n;
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
    let c1 = (0.01 * peak).powi(2);
    let c2 = (0.03 * peak).powi(2);
    (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
}

/// `(min, q1, median, q3, max)` by full sort; quartiles linear between order statistics.
pub fn box_ref(values: &[f64]) -> (f64, f64, f64, f64, f64) {
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    let q = |p: f64| {
        let h = (n - 1) as f64 * p;
        let lo = h.floor() as usize;
        if lo + 1 >= n {
            s[n - 1]
        } else {
            let f = h - lo as f64;
            if f == 0.0 {
                s[lo]
            } else {
                s[lo] + f * (s[lo + 1] - s[lo])
            }
        }
    };
    let median = if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    };
    (s[0], q(0.25), median, q(0.75), s[n - 1])
}

pub fn median_ref(values: &[f64]) -> f64 {
    box_ref(values).2
}
