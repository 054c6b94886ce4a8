//! Wall-clock rig for the FIR-vs-IIR scaling trend. Absolute times are
//! hardware-specific; only the trend predicates mean anything.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::blob::{displacement, hessian_det, select, BlobMaps, DetectParams};
use crate::design::{fir_vm_bank, gaussian_fir, repeated_pole_blur, CascadeMode, Family};
use crate::engine::{derivative_field_with_bank, Image, Stage};
use crate::error::{invalid, Error, Result};

/// Scales of the published timing table.
pub const SIGMAS: [f64; 4] = [3.0, 6.0, 12.0, 24.0];

/// Images this many pixels on a side or larger count as full scale.
pub const MIN_SIDE: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchStage {
    Lpf,
    HpfHessian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub family: Family,
    pub sigma: f64,
    pub threads: usize,
    pub stage: BenchStage,
    /// Median wall time in seconds.
    pub seconds: f64,
    pub width: usize,
    pub height: usize,
    pub repetitions: usize,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub side: usize,
    pub sigmas: Vec<f64>,
    pub threads: Vec<usize>,
    pub repetitions: usize,
    pub stage2: bool,
}

impl BenchConfig {
    /// 1 thread and all available threads (deduplicated), five repetitions.
    pub fn new(side: usize) -> Self {
        let mut threads = vec![1, max_threads()];
        threads.dedup();
        BenchConfig { side, sigmas: SIGMAS.to_vec(), threads, repetitions: 5, stage2: true }
    }
}

pub fn max_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// The two lowpass filters being compared: Gaussian FIR with `K = 5 sigma`
/// and the `K = 3` repeated-pole IIR.
pub fn bench_stage(family: Family, sigma: f64) -> Result<Stage> {
    match family {
        Family::GaussianFir => Ok(gaussian_fir(sigma, 0, (5.0 * sigma).round() as usize)?.into()),
        Family::RepeatedPole => Ok(repeated_pole_blur(sigma, 1, 2)?.into()),
        _ => Err(invalid(format!("bench compares gaussian_fir and repeated_pole, not {family}"))),
    }
}

/// Largest square side `<= side` whose working set (four `f64` images) can
/// be allocated, halving on failure. The message explains any reduction.
pub fn feasible_side(side: usize) -> (usize, Option<String>) {
    let mut s = side;
    while s > 1 {
        let mut probe: Vec<f64> = Vec::new();
        if probe.try_reserve_exact(4 * s * s).is_ok() {
            let note = (s != side).then(|| format!("reduced image from {side}^2 to {s}^2 to fit in memory"));
            return (s, note);
        }
        s /= 2;
    }
    (1, Some(format!("could not allocate a working set for {side}^2")))
}

/// Deterministic textured test image.
pub fn bench_image(side: usize) -> Result<Image> {
    Image::from_fn(side, side, |x, y| {
        let h = (x as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (y as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
        (h >> 11) as f64 / (1u64 << 53) as f64
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median of `reps` timed calls after one untimed warm-up.
fn time_median(reps: usize, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    f()?;
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t = Instant::now();
        f()?;
        times.push(t.elapsed().as_secs_f64());
    }
    Ok(median(times))
}

/// Separable lowpass, rows then columns.
pub fn time_lpf(img: &Image, stage: &Stage, reps: usize) -> Result<f64> {
    time_median(reps, || {
        std::hint::black_box(stage.apply_cols(&stage.apply_rows(img)?)?);
        Ok(())
    })
}

/// Second stage on an already blurred image: differentiator bank, normalized
/// Hessian determinant, displacement and thresholding. File I/O excluded.
pub fn time_stage2(blurred: &Image, sigma: f64, reps: usize) -> Result<f64> {
    let bank = fir_vm_bank(3, 0, CascadeMode::BehindBlur)?;
    let params = DetectParams::new(2.0 * sigma, Family::RepeatedPole, 0.05);
    time_median(reps, || {
        let field = derivative_field_with_bank(blurred, &Stage::identity(), &bank)?;
        let ndet = hessian_det(&field, sigma)?;
        let maps = BlobMaps { displacement: displacement(&field)?, field, ndet };
        std::hint::black_box(select(&maps, &params)?);
        Ok(())
    })
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

/// Samples per round of each recursive configuration. They are cheap and
/// their trend predicate (near-constant time) is the most noise-sensitive.
const IIR_SAMPLES_PER_ROUND: usize = 3;

/// Lowpass timings are taken in interleaved rounds, each round visiting every
/// (scale, family) pair, so slow drift in machine load spreads evenly over
/// the configurations instead of tracking the scale. Recursive configurations
/// are visited in a rotating order within the round.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    if cfg.repetitions < 5 {
        return Err(invalid("bench needs at least 5 repetitions"));
    }
    if cfg.threads.contains(&0) || cfg.sigmas.is_empty() {
        return Err(invalid("need positive thread counts and at least one scale"));
    }
    let img = bench_image(cfg.side)?;
    let record = |family, sigma, threads, stage, seconds, repetitions| BenchRecord {
        family,
        sigma,
        threads,
        stage,
        seconds,
        width: cfg.side,
        height: cfg.side,
        repetitions,
    };
    let mut out = Vec::new();
    for &threads in &cfg.threads {
        let pool = pool(threads)?;
        let mut fir = Vec::new();
        let mut iir = Vec::new();
        for &sigma in &cfg.sigmas {
            fir.push((Family::GaussianFir, sigma, bench_stage(Family::GaussianFir, sigma)?, Vec::new()));
            iir.push((Family::RepeatedPole, sigma, bench_stage(Family::RepeatedPole, sigma)?, Vec::new()));
        }
        let n = iir.len();
        pool.install(|| -> Result<()> {
            let time = |stage: &Stage| -> Result<f64> {
                let t = Instant::now();
                std::hint::black_box(stage.apply_cols(&stage.apply_rows(&img)?)?);
                Ok(t.elapsed().as_secs_f64())
            };
            for round in 0..=cfg.repetitions {
                // round 0 warms caches and the allocator
                let keep = round > 0;
                for s in 0..IIR_SAMPLES_PER_ROUND {
                    for j in 0..n {
                        let (_, _, stage, times) = &mut iir[(round + s + j) % n];
                        let t = time(stage)?;
                        if keep {
                            times.push(t);
                        }
                    }
                }
                for (_, _, stage, times) in fir.iter_mut() {
                    let t = time(stage)?;
                    if keep {
                        times.push(t);
                    }
                }
            }
            Ok(())
        })?;
        for (family, sigma, _, times) in fir.into_iter().chain(iir) {
            let reps = times.len();
            out.push(record(family, sigma, threads, BenchStage::Lpf, median(times), reps));
        }
        if cfg.stage2 {
            let sigma = cfg.sigmas[0];
            let stage = bench_stage(Family::RepeatedPole, sigma)?;
            let blurred = stage.apply_cols(&stage.apply_rows(&img)?)?;
            let seconds = pool.install(|| time_stage2(&blurred, sigma, cfg.repetitions))?;
            out.push(record(Family::RepeatedPole, sigma, threads, BenchStage::HpfHessian, seconds, cfg.repetitions));
        }
    }
    Ok(out)
}

fn lpf_time(records: &[BenchRecord], family: Family, sigma: f64, threads: usize) -> Option<f64> {
    records
        .iter()
        .find(|r| r.stage == BenchStage::Lpf && r.family == family && r.sigma == sigma && r.threads == threads)
        .map(|r| r.seconds)
}

/// The asserted trend predicates, at one thread count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trend {
    pub threads: usize,
    /// max/min of IIR times across scales.
    pub iir_spread: f64,
    pub fir_increasing: bool,
    /// FIR time over IIR time at the largest scale.
    pub speedup_at_max_sigma: f64,
}

pub fn trend(records: &[BenchRecord], threads: usize) -> Result<Trend> {
    let mut sigmas: Vec<f64> = records.iter().filter(|r| r.threads == threads).map(|r| r.sigma).collect();
    sigmas.sort_by(f64::total_cmp);
    sigmas.dedup();
    let missing = || invalid(format!("no complete lpf records for {threads} threads"));
    let iir: Vec<f64> = sigmas
        .iter()
        .map(|&s| lpf_time(records, Family::RepeatedPole, s, threads))
        .collect::<Option<_>>()
        .ok_or_else(missing)?;
    let fir: Vec<f64> = sigmas
        .iter()
        .map(|&s| lpf_time(records, Family::GaussianFir, s, threads))
        .collect::<Option<_>>()
        .ok_or_else(missing)?;
    if iir.is_empty() {
        return Err(missing());
    }
    let (lo, hi) = iir.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &t| (lo.min(t), hi.max(t)));
    Ok(Trend {
        threads,
        iir_spread: hi / lo,
        fir_increasing: fir.windows(2).all(|w| w[1] > w[0]),
        speedup_at_max_sigma: fir[fir.len() - 1] / iir[iir.len() - 1],
    })
}
