use rayon::prelude::*;

use super::Image;
use crate::polyz::ThreePartIIR;

/// Lines advanced together through one recursion.
const LANES: usize = 32;

type Lane = [f64; LANES];

/// Output pointer shared by workers that write disjoint column strips.
struct ColumnSink(*mut f64);

// SAFETY: every worker writes only its own columns `x0..x0 + lanes`.
unsafe impl Sync for ColumnSink {}

/// Filters every column, running the recursion over strips of `LANES`
/// columns in lockstep so the inner loops vectorize across columns.
pub(super) fn cols(img: &Image, f: &ThreePartIIR) -> Image {
    let (w, h) = (img.width, img.height);
    let mut out = vec![0.0; w * h];
    let sink = ColumnSink(out.as_mut_ptr());
    (0..w.div_ceil(LANES)).into_par_iter().for_each(|s| {
        let x0 = s * LANES;
        let lanes = LANES.min(w - x0);
        let mut buf = vec![[0.0; LANES]; h];
        for (y, b) in buf.iter_mut().enumerate() {
            b[..lanes].copy_from_slice(&img.row(y)[x0..x0 + lanes]);
        }
        let res = strip(&buf, f);
        let sink = &sink;
        for (y, b) in res.iter().enumerate() {
            // SAFETY: in bounds since x0 + lanes <= w and y < h; no other
            // worker touches these columns and `out` outlives the loop.
            unsafe {
                std::ptr::copy_nonoverlapping(b.as_ptr(), sink.0.add(y * w + x0), lanes);
            }
        }
    });
    Image { width: w, height: h, data: out }
}

/// Filters every row, transposing bands of `LANES` rows into a strip.
pub(super) fn rows(img: &Image, f: &ThreePartIIR) -> Image {
    let (w, h) = (img.width, img.height);
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(LANES * w).enumerate().for_each(|(band, chunk)| {
        let y0 = band * LANES;
        let lanes = chunk.len() / w;
        let mut buf = vec![[0.0; LANES]; w];
        for r in 0..lanes {
            for (b, &v) in buf.iter_mut().zip(img.row(y0 + r)) {
                b[r] = v;
            }
        }
        let res = strip(&buf, f);
        for r in 0..lanes {
            for (o, b) in chunk[r * w..(r + 1) * w].iter_mut().zip(&res) {
                *o = b[r];
            }
        }
    });
    Image { width: w, height: h, data: out }
}

/// `y+ + y- + b0 x` along a strip of interleaved lines.
fn strip(x: &[Lane], f: &ThreePartIIR) -> Vec<Lane> {
    let b0 = f.b_zero();
    let mut out: Vec<Lane> = x.iter().map(|v| v.map(|e| b0 * e)).collect();
    let s = f.parity().sign();
    let b_minus: Vec<f64> = f.b_plus().iter().map(|b| s * b).collect();
    both_ways(x, &mut out, f.b_plus(), &b_minus, f.a_plus());
    out
}

fn both_ways(x: &[Lane], out: &mut [Lane], b_plus: &[f64], b_minus: &[f64], a: &[f64]) {
    macro_rules! fixed {
        ($($k:literal)*) => {
            match a.len() {
                0 => {}
                $($k => {
                    let a: [f64; $k] = a.try_into().unwrap();
                    recurse::<$k>(x, out, b_plus.try_into().unwrap(), a, false);
                    recurse::<$k>(x, out, b_minus.try_into().unwrap(), a, true);
                })*
                _ => {
                    recurse_dyn(x, out, b_plus, a, false);
                    recurse_dyn(x, out, b_minus, a, true);
                }
            }
        };
    }
    fixed!(1 2 3 4 5 6 7 8);
}

/// States start at `x_0 / (1 + sum a)`, the steady state for a step of the
/// first sample in scan order.
fn initial(x: &[Lane], a: &[f64], reverse: bool) -> Lane {
    let gain = 1.0 / (1.0 + a.iter().sum::<f64>());
    let first = if reverse { &x[x.len() - 1] } else { &x[0] };
    first.map(|v| v * gain)
}

/// Direct form II, `w(n) = x(n) - sum a_m w(n-m)` and `y(n) = sum b_m w(n-m)`,
/// accumulated into `out`.
fn recurse<const K: usize>(x: &[Lane], out: &mut [Lane], b: [f64; K], a: [f64; K], reverse: bool) {
    // hist[j] holds w(n - 1 - j)
    let mut hist = [initial(x, &a, reverse); K];
    let mut step = |xt: &Lane, ot: &mut Lane| {
        let mut wn = *xt;
        let mut y = [0.0; LANES];
        for m in 0..K {
            for l in 0..LANES {
                y[l] += b[m] * hist[m][l];
                wn[l] -= a[m] * hist[m][l];
            }
        }
        for l in 0..LANES {
            ot[l] += y[l];
        }
        for m in (1..K).rev() {
            hist[m] = hist[m - 1];
        }
        hist[0] = wn;
    };
    if reverse {
        x.iter().zip(out.iter_mut()).rev().for_each(|(xt, ot)| step(xt, ot));
    } else {
        x.iter().zip(out.iter_mut()).for_each(|(xt, ot)| step(xt, ot));
    }
}

/// Same recursion for orders without a specialization.
fn recurse_dyn(x: &[Lane], out: &mut [Lane], b: &[f64], a: &[f64], reverse: bool) {
    let k = a.len();
    let mut hist = vec![initial(x, a, reverse); k];
    let mut step = |xt: &Lane, ot: &mut Lane| {
        let mut wn = *xt;
        for m in 0..k {
            for l in 0..LANES {
                ot[l] += b[m] * hist[m][l];
                wn[l] -= a[m] * hist[m][l];
            }
        }
        hist.rotate_right(1);
        hist[0] = wn;
    };
    if reverse {
        x.iter().zip(out.iter_mut()).rev().for_each(|(xt, ot)| step(xt, ot));
    } else {
        x.iter().zip(out.iter_mut()).for_each(|(xt, ot)| step(xt, ot));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fallback_matches_specialized() {
        let x: Vec<Lane> = (0..50).map(|t| std::array::from_fn(|l| ((t * 7 + l * 13) % 11) as f64 - 5.0)).collect();
        let (b, a) = ([0.3, -0.2, 0.05], [-1.5, 0.7, -0.1]);
        for reverse in [false, true] {
            let mut fixed = vec![[0.0; LANES]; 50];
            let mut dynamic = fixed.clone();
            recurse::<3>(&x, &mut fixed, b, a, reverse);
            recurse_dyn(&x, &mut dynamic, &b, &a, reverse);
            for (p, q) in fixed.iter().zip(&dynamic) {
                for l in 0..LANES {
                    assert!((p[l] - q[l]).abs() < 1e-12);
                }
            }
        }
    }
}
