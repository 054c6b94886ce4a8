use rayon::prelude::*;

use super::Image;
use crate::design::FirKernel;

/// Right half `h(1..=K)` and the mirror sign, so that
/// `y(n) = h(0) x(n) + sum_m h(m) (x(n - m) + s x(n + m))`.
fn folded(k: &FirKernel) -> (f64, Vec<f64>, f64) {
    let kh = k.half_len() as i64;
    let right = (1..=kh).map(|m| k.tap(m)).collect();
    (k.tap(0), right, k.parity().sign())
}

pub(super) fn rows(img: &Image, k: &FirKernel) -> Image {
    let (w, h) = (img.width, img.height);
    let (h0, right, s) = folded(k);
    let kh = right.len();
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).zip(img.data.par_chunks(w)).for_each_init(
        || vec![0.0; w + 2 * kh],
        |pad, (dst, src)| {
            pad[..kh].fill(src[0]);
            pad[kh..kh + w].copy_from_slice(src);
            pad[kh + w..].fill(src[w - 1]);
            for (d, &x) in dst.iter_mut().zip(&pad[kh..kh + w]) {
                *d = h0 * x;
            }
            for (i, &hm) in right.iter().enumerate() {
                let m = i + 1;
                let back = &pad[kh - m..kh - m + w];
                let ahead = &pad[kh + m..kh + m + w];
                for ((d, &a), &b) in dst.iter_mut().zip(back).zip(ahead) {
                    *d += hm * (a + s * b);
                }
            }
        },
    );
    Image { width: w, height: h, data: out }
}

pub(super) fn cols(img: &Image, k: &FirKernel) -> Image {
    let (w, h) = (img.width, img.height);
    let (h0, right, s) = folded(k);
    let mut out = vec![0.0; w * h];
    let row = |y: i64| img.row(y.clamp(0, h as i64 - 1) as usize);
    out.par_chunks_mut(w).enumerate().for_each(|(y, dst)| {
        let y = y as i64;
        for (d, &x) in dst.iter_mut().zip(row(y)) {
            *d = h0 * x;
        }
        for (i, &hm) in right.iter().enumerate() {
            let m = i as i64 + 1;
            for ((d, &a), &b) in dst.iter_mut().zip(row(y - m)).zip(row(y + m)) {
                *d += hm * (a + s * b);
            }
        }
    });
    Image { width: w, height: h, data: out }
}
