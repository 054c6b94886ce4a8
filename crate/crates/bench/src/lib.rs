//! Inputs shared by the benchmarks.

use vmfilt::blob::{render_scene, EllipseScene};
use vmfilt::engine::Image;
use vmfilt::timing::bench_image;

/// Side of the square images the lowpass benches filter.
pub const SIDE: usize = 1024;

pub fn textured() -> Image {
    bench_image(SIDE).expect("non-empty image")
}

/// The 1024 x 768 ellipse grid with axis ratio 2.
pub fn ellipse_grid() -> Image {
    render_scene(&EllipseScene::figure(2.0).expect("grid fits")).expect("valid scene")
}
