//! Radix-2 complex FFT for power-of-two lengths, plus 2D helpers.
//!
//! The inverse transforms are normalized by `1/n`, so `ifft(fft(x)) == x`.

use alloc::vec::Vec;
use core::f64::consts::PI;

pub use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// In-place transform. Panics if `data.len()` is not a power of two.
pub fn fft(data: &mut [Complex64], direction: Direction) {
    let n = data.len();
    assert!(n.is_power_of_two(), "fft length {n} is not a power of two");
    if n == 1 {
        return;
    }

    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            data.swap(i, j);
        }
    }

    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    // Twiddles for the largest stage; smaller stages stride through it.
    let twiddles: Vec<Complex64> = (0..n / 2)
        .map(|k| {
            let a = sign * 2.0 * PI * k as f64 / n as f64;
            Complex64::new(libm::cos(a), libm::sin(a))
        })
        .collect();

    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let a = data[start + k];
                let b = data[start + k + half] * w;
                data[start + k] = a + b;
                data[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }

    if direction == Direction::Inverse {
        let scale = 1.0 / n as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// In-place 2D transform of a row-major `width` x `height` grid.
pub fn fft2(data: &mut [Complex64], width: usize, height: usize, direction: Direction) {
    assert_eq!(data.len(), width * height);
    for row in data.chunks_exact_mut(width) {
        fft(row, direction);
    }
    let mut column = alloc::vec![Complex64::new(0.0, 0.0); height];
    for x in 0..width {
        for y in 0..height {
            column[y] = data[y * width + x];
        }
        fft(&mut column, direction);
        for y in 0..height {
            data[y * width + x] = column[y];
        }
    }
}

/// Moves index `(0, 0)` to `(n/2, n/2)` on an even-sized square grid.
/// For even sizes the shift is its own inverse.
pub fn fftshift2<T: Copy>(data: &[T], n: usize) -> Vec<T> {
    assert_eq!(data.len(), n * n);
    assert!(n.is_multiple_of(2), "fftshift2 needs an even grid");
    let h = n / 2;
    let mut out = Vec::with_capacity(n * n);
    for y in 0..n {
        let sy = (y + h) % n;
        for x in 0..n {
            out.push(data[sy * n + (x + h) % n]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (j, v)| {
                    let a = -2.0 * PI * (k * j) as f64 / n as f64;
                    acc + v * Complex64::new(libm::cos(a), libm::sin(a))
                })
            })
            .collect()
    }

    fn random(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for (i, n) in [1usize, 2, 4, 8, 32, 64].into_iter().enumerate() {
            let x = random(n, i as u64);
            let mut y = x.clone();
            fft(&mut y, Direction::Forward);
            for (a, b) in y.iter().zip(naive_dft(&x)) {
                assert!((a - b).norm() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn inverse_round_trip_2d() {
        let x = random(16 * 8, 9);
        let mut y = x.clone();
        fft2(&mut y, 16, 8, Direction::Forward);
        fft2(&mut y, 16, 8, Direction::Inverse);
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn shift_is_involution() {
        let v: Vec<u32> = (0..16).collect();
        let s = fftshift2(&v, 4);
        assert_eq!(s[2 * 4 + 2], 0);
        assert_eq!(fftshift2(&s, 4), v);
    }

    #[test]
    #[should_panic(expected = "power of two")]
    fn rejects_odd_lengths() {
        let mut v = vec![Complex64::new(0.0, 0.0); 3];
        fft(&mut v, Direction::Forward);
    }
}
