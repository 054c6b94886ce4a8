use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde_json::Value;

use vmfilt::analysis::{freq_grid, moment_table, MomentReport};
use vmfilt::blob::{calibrate_t1, detect as detect_blobs, overlay, render_scene, DetectParams, EllipseScene, Polarity};
use vmfilt::design::{CascadeMode, DesignSpec, Designed, Family};
use vmfilt::engine::io::{read_image, write_pgm, write_raw};
use vmfilt::engine::{Image, Stage};
use vmfilt::polyz::FilterJson;
use vmfilt::timing::{feasible_side, max_threads, run_bench, trend, BenchConfig, MIN_SIDE, SIGMAS};

use crate::Failure;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Cascade {
    Standalone,
    BehindBlur,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long)]
    family: Family,
    /// Scale in pixels.
    #[arg(long)]
    sigma: Option<f64>,
    /// Model order D (odd).
    #[arg(long = "d-model", default_value_t = 3)]
    d_model: usize,
    /// Number of Nyquist constraints.
    #[arg(long = "l-pi", default_value_t = 2)]
    l_pi: usize,
    /// Derivative order for single-kernel families.
    #[arg(long, visible_alias = "d", default_value_t = 0)]
    order: usize,
    /// Half-length for families that take one.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value = "behind-blur")]
    cascade: Cascade,
    /// Coefficient file; stdout when absent (the moment summary then goes to stderr).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn bank_stages(d: &Designed) -> Vec<Stage> {
    match d {
        Designed::Fir(k) => vec![Stage::Fir(k.clone())],
        Designed::Bank(b) => b.iter().cloned().map(Stage::Fir).collect(),
        Designed::Iir(f) => vec![Stage::Iir(f.clone())],
    }
}

fn moment_summary(r: &MomentReport) -> String {
    let mut s = String::from("l");
    for d in &r.orders {
        s.push_str(&format!("\td={d}"));
    }
    s.push('\n');
    for (l, row) in r.literal.iter().enumerate() {
        s.push_str(&l.to_string());
        for v in row {
            s.push_str(&format!("\t{v:.6e}"));
        }
        s.push('\n');
    }
    s.push_str(&format!("max deviation from identity {:.3e}\n", r.max_deviation));
    s
}

pub fn design(a: DesignArgs) -> Result<(), Failure> {
    let spec = DesignSpec {
        family: a.family,
        sigma: a.sigma.unwrap_or(f64::NAN),
        d_model: a.d_model,
        l_pi_bar: a.l_pi,
        d: a.order,
        k: a.k,
        cascade_mode: match a.cascade {
            Cascade::Standalone => CascadeMode::Standalone,
            Cascade::BehindBlur => CascadeMode::BehindBlur,
        },
    };
    let designed = spec.design()?;
    let stages = bank_stages(&designed);
    let json = match &designed {
        Designed::Bank(_) => serde_json::to_string_pretty(&stages.iter().map(Stage::to_json).collect::<Vec<_>>())?,
        _ => serde_json::to_string_pretty(&stages[0].to_json())?,
    };
    let rows = (stages.iter().map(Stage::order).max().unwrap_or(0) + 1).max(spec.d_model);
    let summary = moment_summary(&moment_table(&stages, rows)?);
    match &a.out {
        Some(path) => {
            std::fs::write(path, json + "\n")?;
            print!("{summary}");
        }
        None => {
            println!("{json}");
            eprint!("{summary}");
        }
    }
    Ok(())
}

/// One filter or a bank, as written by `design`.
fn load_filters(path: &Path) -> Result<Vec<FilterJson>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)?;
    Ok(match v {
        Value::Array(items) => items.into_iter().map(serde_json::from_value).collect::<Result<_, _>>()?,
        other => vec![serde_json::from_value(other)?],
    })
}

fn load_stage(path: &Path, index: usize) -> Result<Stage, Failure> {
    let filters = load_filters(path)?;
    let j = filters
        .get(index)
        .ok_or_else(|| Failure::usage(format!("filter index {index} out of range ({} filters)", filters.len())))?;
    Ok(Stage::from_json(j)?)
}

fn read_input(path: &Path) -> Result<Image, Failure> {
    read_image(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn write_output(path: &Path, img: &Image, sixteen_bit: bool) -> Result<(), Failure> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("raw") | Some("f32") => write_raw(path, img)?,
        _ => write_pgm(path, img, sixteen_bit)?,
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    /// Input image (PGM, or raw f32 with a .raw/.f32 extension).
    input: PathBuf,
    /// Output image; format follows the extension.
    output: PathBuf,
    /// Coefficient file for the row pass (and the column pass unless --filter-y is given).
    #[arg(long, conflicts_with = "family")]
    filter: Option<PathBuf>,
    #[arg(long, requires = "filter")]
    filter_y: Option<PathBuf>,
    /// Entry of a bank file to use.
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Blur family designed on the fly (needs --sigma).
    #[arg(long, requires = "sigma")]
    family: Option<Family>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Pixels dropped from every side of the result.
    #[arg(long = "crop-border", default_value_t = 0)]
    crop_border: usize,
    /// Write 16-bit PGM.
    #[arg(long)]
    sixteen_bit: bool,
}

pub fn apply(a: ApplyArgs) -> Result<(), Failure> {
    let (sx, sy) = match (&a.filter, a.family) {
        (Some(fx), _) => {
            let sx = load_stage(fx, a.index)?;
            let sy = match &a.filter_y {
                Some(fy) => load_stage(fy, a.index)?,
                None => sx.clone(),
            };
            (sx, sy)
        }
        (None, Some(family)) => {
            let sigma = a.sigma.unwrap_or(f64::NAN);
            if !(sigma > 0.0) {
                return Err(Failure::usage("sigma must be positive"));
            }
            let s = vmfilt::blob::blur_stage(family, sigma)?;
            (s.clone(), s)
        }
        (None, None) => return Err(Failure::usage("give --filter FILE or --family with --sigma")),
    };
    let img = read_input(&a.input)?;
    let mut out = sy.apply_cols(&sx.apply_rows(&img)?)?;
    if a.crop_border > 0 {
        out = out.crop(a.crop_border)?;
    }
    write_output(&a.output, &out, a.sixteen_bit)
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    input: PathBuf,
    /// Blob scale in pixels; the blur uses sigma = lambda / 2.
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value = "repeated_pole")]
    family: Family,
    /// Floor on the normalized determinant; calibrated on a synthetic matched blob when absent.
    #[arg(long)]
    t1: Option<f64>,
    /// Ceiling on the displacement norm in pixels (default lambda / 4).
    #[arg(long, conflicts_with = "no_t2")]
    t2: Option<f64>,
    /// Disable the displacement threshold.
    #[arg(long)]
    no_t2: bool,
    /// dark or bright blobs.
    #[arg(long, default_value = "dark")]
    polarity: Polarity,
    /// Keep every thresholded pixel instead of local maxima only.
    #[arg(long)]
    no_nms: bool,
    /// Axis ratio of the calibration blob.
    #[arg(long, default_value_t = 2.0)]
    calibration_eccentricity: f64,
    /// Copy of the input with detected pixels set to white.
    #[arg(long)]
    overlay: Option<PathBuf>,
}

pub fn detect(a: DetectArgs) -> Result<(), Failure> {
    if !(a.lambda > 0.0) {
        return Err(Failure::usage("lambda must be positive"));
    }
    let polarity = a.polarity;
    let img = read_input(&a.input)?;
    let t1 = match a.t1 {
        Some(t) => t,
        None => calibrate_t1(a.lambda, a.family, a.calibration_eccentricity, polarity)?,
    };
    let params = DetectParams {
        lambda: a.lambda,
        family: a.family,
        t1,
        t2: if a.no_t2 { None } else { Some(a.t2.unwrap_or(a.lambda / 4.0)) },
        polarity,
        nms: !a.no_nms,
    };
    let found = detect_blobs(&img, &params)?;
    let mut out = BufWriter::new(io::stdout().lock());
    for d in &found {
        serde_json::to_writer(&mut out, d)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    eprintln!("{} detections (lambda {}, t1 {:.6e})", found.len(), a.lambda, t1);
    if let Some(path) = &a.overlay {
        write_pgm(path, &overlay(&img, found.iter().map(|d| (d.x, d.y))), false)?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct RespondArgs {
    /// Coefficient file written by `design`.
    filter: PathBuf,
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Grid points per axis over [-pi, pi].
    #[arg(long, default_value_t = 513)]
    points: usize,
    /// 1 for H(omega), 2 for the separable H(wx) H(wy).
    #[arg(long, default_value_t = 1)]
    dims: usize,
    /// Frequency CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the (truncated) impulse response as `m,h` CSV.
    #[arg(long)]
    impulse: Option<PathBuf>,
}

pub fn respond(a: RespondArgs) -> Result<(), Failure> {
    let stage = load_stage(&a.filter, a.index)?;
    let csv = freq_grid(&stage, a.points, a.dims)?.to_csv();
    match &a.out {
        Some(p) => std::fs::write(p, csv)?,
        None => io::stdout().lock().write_all(csv.as_bytes())?,
    }
    if let Some(p) = &a.impulse {
        let h = stage.impulse_response()?;
        let k = (h.len() / 2) as i64;
        let mut w = csv::Writer::from_path(p)?;
        w.write_record(["m", "h"])?;
        for (i, v) in h.iter().enumerate() {
            w.write_record([(i as i64 - k).to_string(), format!("{v:.16e}")])?;
        }
        w.flush()?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Square image side; reduced by halving if memory is short.
    #[arg(long, default_value_t = 2048)]
    side: usize,
    /// Repetitions per configuration (median reported).
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Scales to time.
    #[arg(long, value_delimiter = ',', default_values_t = SIGMAS.to_vec())]
    sigma: Vec<f64>,
    /// CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn bench(a: BenchArgs, threads: Option<usize>) -> Result<(), Failure> {
    if a.side < MIN_SIDE {
        eprintln!("warning: {}^2 is below the {MIN_SIDE}^2 the trend is meant for", a.side);
    }
    let (side, note) = feasible_side(a.side);
    if let Some(n) = note {
        eprintln!("warning: {n}");
    }
    let mut thread_counts = vec![1, threads.unwrap_or_else(max_threads)];
    thread_counts.dedup();
    let cfg = BenchConfig { side, sigmas: a.sigma, threads: thread_counts.clone(), repetitions: a.reps, stage2: true };
    let records = run_bench(&cfg)?;
    let sink: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for r in &records {
        w.serialize(r)?;
    }
    w.flush()?;
    for &t in &thread_counts {
        let tr = trend(&records, t)?;
        eprintln!(
            "threads {t}: IIR max/min {:.3} ({}), FIR increasing {}, speedup at largest sigma {:.2}x ({})",
            tr.iir_spread,
            if tr.iir_spread < 1.15 { "ok" } else { "over 1.15" },
            tr.fir_increasing,
            tr.speedup_at_max_sigma,
            if tr.speedup_at_max_sigma >= 4.0 { "ok" } else { "under 4x" },
        );
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct SceneArgs {
    /// JSON scene spec; omit to use --figure.
    #[arg(required_unless_present = "figure")]
    spec: Option<PathBuf>,
    /// Output image.
    #[arg(long)]
    out: PathBuf,
    /// Generate the 1024x768 five-by-five grid with this axis ratio instead of reading a spec.
    #[arg(long, conflicts_with = "spec")]
    figure: Option<f64>,
    /// Also write the scene spec used as JSON.
    #[arg(long)]
    emit_spec: Option<PathBuf>,
    #[arg(long)]
    sixteen_bit: bool,
}

pub fn scene(a: SceneArgs) -> Result<(), Failure> {
    let spec = match (&a.spec, a.figure) {
        (_, Some(ecc)) => EllipseScene::figure(ecc)?,
        (Some(p), None) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text)?
        }
        (None, None) => return Err(Failure::usage("give a scene spec or --figure")),
    };
    if let Some(p) = &a.emit_spec {
        std::fs::write(p, serde_json::to_string_pretty(&spec)? + "\n")?;
    }
    let img = render_scene(&spec)?;
    write_output(&a.out, &img, a.sixteen_bit)
}
