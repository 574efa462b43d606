//! Command-line entry point: wires ingestion, tiling, sampling, ranking,
//! network training, map inference, and multi-date monitoring into
//! seed-reproducible runs. Every run writes a `manifest.json` echoing its
//! fully resolved configuration into the output directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::classifiers::Variant;
use crate::error::{Error, Result};
use crate::metrics::{binary_accuracy, confusion, write_ranking_csv};
use crate::mlp;
use crate::ranking::{self, SamplingSpec};
use crate::raster::{
    self, BandGrid, BandId, GeoTransform, Scene, Window, DEFAULT_TILE_SIZE, DEFAULT_WATER_CODE,
};
use crate::sampling::{balanced_sample, split, write_points_csv, Dataset, SplitSpec};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "BANDNET_OUT";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Runs the CLI on an argv slice (program name first). Returns the process
/// exit code: 0 success, 1 runtime/data error, 2 usage error.
pub fn run(argv: &[String]) -> u8 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[derive(Parser)]
#[command(
    name = "bandnet",
    version,
    about = "Water segmentation from multispectral band reflectance: band ranking and a small neural segmenter"
)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores). Results
    /// do not depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output directory (default: $BANDNET_OUT, then ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble a scene directory from raw little-endian u16 band rasters.
    Ingest(IngestArgs),
    /// Cut a scene into fixed-size square tiles.
    Tile(TileArgs),
    /// Draw a balanced, split pixel dataset and export it as CSV.
    Sample(SampleArgs),
    /// Score every band x classifier pair by validation mIoU.
    Rank(RankArgs),
    /// Train the segmentation network on sampled reflectance.
    Train(TrainArgs),
    /// Segment one scene with trained weights.
    Infer(InferArgs),
    /// Segment several dates of one window and export change maps.
    Monitor(MonitorArgs),
    /// Summarize a finished run directory.
    Report(ReportArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Tile identifier (becomes part of output names).
    #[arg(long)]
    tile_id: String,
    /// Acquisition date, YYYY-MM-DD.
    #[arg(long)]
    date: String,
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
    /// Ground resolution in metres per pixel.
    #[arg(long, default_value_t = 10)]
    resolution_m: u32,
    /// Band raster as `ID=PATH` (raw little-endian u16, row-major);
    /// repeatable.
    #[arg(long = "band", value_name = "ID=PATH")]
    bands: Vec<String>,
    /// Scene-classification raster (same raw layout).
    #[arg(long)]
    scl: Option<PathBuf>,
    /// Affine pixel-to-projected transform `a,b,c,d,e,f`.
    #[arg(long)]
    geo: Option<String>,
}

/// Optional crop applied right after a scene is loaded.
#[derive(Args, Default)]
struct WindowArgs {
    /// Pixel window `x0,y0,w,h`.
    #[arg(long, conflicts_with = "geo_window")]
    window: Option<String>,
    /// Projected-coordinate window `min_x,min_y,max_x,max_y`, converted
    /// through the scene's geo transform and rounded outward.
    #[arg(long)]
    geo_window: Option<String>,
}

#[derive(Args)]
struct TileArgs {
    /// Scene directory.
    #[arg(long)]
    scene: PathBuf,
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long, default_value_t = DEFAULT_TILE_SIZE)]
    tile_size: usize,
    /// Keep only tiles whose classification grid contains water.
    #[arg(long)]
    require_water: bool,
    /// Classification code treated as water.
    #[arg(long, default_value_t = DEFAULT_WATER_CODE)]
    water_code: u16,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    scene: PathBuf,
    #[command(flatten)]
    window: WindowArgs,
    /// Bands to extract: comma list and/or inclusive ranges, e.g.
    /// `B2..B12` or `B11,B12,B8A`.
    #[arg(long, default_value = "B2..B12")]
    bands: String,
    /// Pixels drawn per class.
    #[arg(long, default_value_t = 2000)]
    n_per_class: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Train/val/test fractions.
    #[arg(long, default_value = "0.70,0.15,0.15")]
    fractions: String,
    #[arg(long, default_value_t = DEFAULT_WATER_CODE)]
    water_code: u16,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    scene: PathBuf,
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long, default_value = "B2..B12")]
    bands: String,
    /// Classifiers: `all` or a comma list of LR,GNB,RF,KN,DT,SGD,GBT,SVM
    /// (XGB is accepted for GBT).
    #[arg(long, default_value = "all")]
    algos: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    n_per_class: usize,
    #[arg(long, default_value = "0.70,0.15,0.15")]
    fractions: String,
    #[arg(long, default_value_t = DEFAULT_WATER_CODE)]
    water_code: u16,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    scene: PathBuf,
    #[command(flatten)]
    window: WindowArgs,
    /// Input bands, in feature order.
    #[arg(long, default_value = "B11")]
    bands: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    n_per_class: usize,
    #[arg(long, default_value = "0.70,0.15,0.15")]
    fractions: String,
    #[arg(long, default_value_t = DEFAULT_WATER_CODE)]
    water_code: u16,
    #[arg(long, default_value_t = 1e-4)]
    learning_rate: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 200)]
    max_epochs: usize,
    /// Early-stopping patience, in epochs without validation improvement.
    #[arg(long, default_value_t = 5)]
    patience: usize,
    #[arg(long, default_value_t = mlp::DEFAULT_DROPOUT)]
    dropout: f64,
}

#[derive(Args)]
struct InferArgs {
    /// Weight file written by `train`.
    #[arg(long)]
    weights: PathBuf,
    #[arg(long)]
    scene: PathBuf,
    #[command(flatten)]
    window: WindowArgs,
    /// Input bands in training order (default: read from the manifest
    /// beside the weight file).
    #[arg(long)]
    bands: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
}

#[derive(Args)]
struct MonitorArgs {
    #[arg(long)]
    weights: PathBuf,
    /// Comma-separated scene directories covering the same window on
    /// different dates.
    #[arg(long)]
    scenes: String,
    #[command(flatten)]
    window: WindowArgs,
    #[arg(long)]
    bands: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory containing manifest.json.
    run_dir: PathBuf,
}

fn execute(cli: Cli) -> Result<()> {
    let out = cli
        .out
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let command = cli.command;
    let body = move || dispatch(command, &out);
    match cli.jobs {
        None => body(),
        Some(0) => Err(Error::arg("--jobs must be >= 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::arg(format!("cannot build worker pool: {e}")))?
            .install(body),
    }
}

fn dispatch(command: Command, out: &Path) -> Result<()> {
    match command {
        Command::Ingest(args) => cmd_ingest(args, out),
        Command::Tile(args) => cmd_tile(args, out),
        Command::Sample(args) => cmd_sample(args, out),
        Command::Rank(args) => cmd_rank(args, out),
        Command::Train(args) => cmd_train(args, out),
        Command::Infer(args) => cmd_infer(args, out),
        Command::Monitor(args) => cmd_monitor(args, out),
        Command::Report(args) => cmd_report(&args.run_dir),
    }
}

// ---------------------------------------------------------------------------
// Argument parsing helpers
// ---------------------------------------------------------------------------

/// Parses a band selection: comma-separated names and/or inclusive ranges
/// over the canonical reflectance order, e.g. `B2..B12`, `B11,B12`,
/// `B5..B7,B11`.
fn parse_bands(s: &str) -> Result<Vec<BandId>> {
    let canon = BandId::REFLECTANCE;
    let index_of = |name: &str| -> Result<usize> {
        let id = BandId::parse(name)?;
        canon
            .iter()
            .position(|&b| b == id)
            .ok_or_else(|| Error::arg(format!("{} is not a reflectance band", id.as_str())))
    };
    let mut bands = Vec::new();
    for item in s.split(',') {
        let item = item.trim();
        if item.is_empty() {
            return Err(Error::arg("empty entry in band list"));
        }
        if let Some((lo, hi)) = item.split_once("..") {
            let (lo, hi) = (index_of(lo)?, index_of(hi)?);
            if lo > hi {
                return Err(Error::arg(format!("band range `{item}` runs backwards")));
            }
            bands.extend_from_slice(&canon[lo..=hi]);
        } else {
            bands.push(canon[index_of(item)?]);
        }
    }
    for (i, b) in bands.iter().enumerate() {
        if bands[..i].contains(b) {
            return Err(Error::arg(format!("band {} listed twice", b.as_str())));
        }
    }
    Ok(bands)
}

/// Parses the classifier selection: `all` or a comma list of short names.
fn parse_algos(s: &str) -> Result<Vec<Variant>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Variant::all_default());
    }
    let mut algos = Vec::new();
    for item in s.split(',') {
        let v = Variant::parse(item)?;
        if algos.iter().any(|a: &Variant| a.name() == v.name()) {
            return Err(Error::arg(format!("classifier {} listed twice", v.name())));
        }
        algos.push(v);
    }
    if algos.is_empty() {
        return Err(Error::arg("empty classifier list"));
    }
    Ok(algos)
}

fn parse_numbers<const N: usize>(s: &str, what: &str) -> Result<[f64; N]> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != N {
        return Err(Error::arg(format!(
            "{what} needs {N} comma-separated numbers, got {}",
            parts.len()
        )));
    }
    let mut out = [0.0; N];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::arg(format!("{what}: `{part}` is not a number")))?;
    }
    Ok(out)
}

fn parse_fractions(s: &str) -> Result<(f64, f64, f64)> {
    let [a, b, c] = parse_numbers::<3>(s, "--fractions")?;
    Ok((a, b, c))
}

fn parse_pixel_window(s: &str) -> Result<Window> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(Error::arg("--window needs x0,y0,w,h"));
    }
    let mut vals = [0usize; 4];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| Error::arg(format!("--window: `{part}` is not a pixel count")))?;
    }
    Ok(Window::new(vals[0], vals[1], vals[2], vals[3]))
}

fn parse_geo(s: &str) -> Result<GeoTransform> {
    parse_numbers::<6>(s, "--geo")
}

/// Converts a projected-coordinate rectangle to the smallest pixel window
/// covering it (corners mapped through the inverse affine transform,
/// rounded outward, clamped to the scene).
fn geo_to_pixel_window(scene: &Scene, rect: [f64; 4]) -> Result<Window> {
    let [min_x, min_y, max_x, max_y] = rect;
    if !(min_x < max_x && min_y < max_y) {
        return Err(Error::arg(
            "--geo-window needs min_x < max_x and min_y < max_y",
        ));
    }
    let g = scene
        .geo
        .ok_or_else(|| Error::arg("scene has no geo transform for --geo-window"))?;
    let det = g[0] * g[4] - g[1] * g[3];
    if det.abs() < 1e-12 {
        return Err(Error::Data("scene geo transform is singular".to_string()));
    }
    let invert = |x: f64, y: f64| -> (f64, f64) {
        let (dx, dy) = (x - g[2], y - g[5]);
        (
            (g[4] * dx - g[1] * dy) / det,
            (-g[3] * dx + g[0] * dy) / det,
        )
    };
    let corners = [
        invert(min_x, min_y),
        invert(min_x, max_y),
        invert(max_x, min_y),
        invert(max_x, max_y),
    ];
    let fold = |f: fn(f64, f64) -> f64, pick: fn(&(f64, f64)) -> f64| {
        corners[1..].iter().map(pick).fold(pick(&corners[0]), f)
    };
    let (c_min, c_max) = (fold(f64::min, |p| p.0), fold(f64::max, |p| p.0));
    let (r_min, r_max) = (fold(f64::min, |p| p.1), fold(f64::max, |p| p.1));
    let x0 = c_min.floor().max(0.0) as usize;
    let y0 = r_min.floor().max(0.0) as usize;
    let x1 = (c_max.ceil() as isize).max(0).min(scene.width() as isize) as usize;
    let y1 = (r_max.ceil() as isize).max(0).min(scene.height() as isize) as usize;
    if x1 <= x0 || y1 <= y0 {
        return Err(Error::bounds("--geo-window does not intersect the scene"));
    }
    Ok(Window::new(x0, y0, x1 - x0, y1 - y0))
}

impl WindowArgs {
    fn apply(&self, scene: Scene) -> Result<Scene> {
        let window = match (&self.window, &self.geo_window) {
            (None, None) => return Ok(scene),
            (Some(w), _) => parse_pixel_window(w)?,
            (None, Some(gw)) => {
                geo_to_pixel_window(&scene, parse_numbers::<4>(gw, "--geo-window")?)?
            }
        };
        raster::subset(&scene, &window)
    }

    fn describe(&self) -> serde_json::Value {
        json!({
            "window": self.window,
            "geo_window": self.geo_window,
        })
    }
}

fn load_scene_windowed(path: &Path, window: &WindowArgs) -> Result<Scene> {
    window.apply(raster::load_scene(path)?)
}

// ---------------------------------------------------------------------------
// Run manifests
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct Manifest {
    command: String,
    created_unix_ms: u64,
    config: serde_json::Value,
    outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    summary: Option<serde_json::Value>,
}

fn unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn write_manifest(out: &Path, manifest: &Manifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(out.join(MANIFEST_FILE), text)?;
    Ok(())
}

fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path)
        .map_err(|_| Error::arg(format!("{} has no {MANIFEST_FILE}", dir.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn band_names(bands: &[BandId]) -> Vec<String> {
    bands.iter().map(|b| b.as_str().to_string()).collect()
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn read_raw_grid(
    path: &Path,
    id: BandId,
    width: usize,
    height: usize,
    res: u32,
) -> Result<BandGrid> {
    let bytes = fs::read(path)?;
    if bytes.len() != width * height * 2 {
        return Err(Error::corrupt(format!(
            "{}: {} bytes for a {width}x{height} u16 grid (expected {})",
            path.display(),
            bytes.len(),
            width * height * 2
        )));
    }
    let values = bytes
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    BandGrid::new(id, width, height, res, values)
}

fn cmd_ingest(args: IngestArgs, out: &Path) -> Result<()> {
    if args.bands.is_empty() && args.scl.is_none() {
        return Err(Error::arg("ingest needs at least one --band or --scl"));
    }
    let mut grids = Vec::new();
    let mut band_files = Vec::new();
    for entry in &args.bands {
        let (name, path) = entry
            .split_once('=')
            .ok_or_else(|| Error::arg(format!("--band `{entry}` is not ID=PATH")))?;
        let id = BandId::parse(name)?;
        if id == BandId::Scl {
            return Err(Error::arg("pass the classification grid via --scl"));
        }
        grids.push(read_raw_grid(
            Path::new(path),
            id,
            args.width,
            args.height,
            args.resolution_m,
        )?);
        band_files.push(json!({"id": id.as_str(), "file": path}));
    }
    let scl = args
        .scl
        .as_ref()
        .map(|p| read_raw_grid(p, BandId::Scl, args.width, args.height, args.resolution_m))
        .transpose()?;
    let geo = args.geo.as_deref().map(parse_geo).transpose()?;
    let scene = Scene::new(args.tile_id.clone(), args.date.clone(), grids, scl, geo)?;

    let scene_dir = out.join(format!("{}_{}", scene.tile_id, scene.date));
    fs::create_dir_all(&scene_dir)?;
    raster::save_scene(&scene, &scene_dir)?;
    fs::create_dir_all(out)?;
    write_manifest(
        out,
        &Manifest {
            command: "ingest".to_string(),
            created_unix_ms: unix_ms(),
            config: json!({
                "tile_id": args.tile_id,
                "date": args.date,
                "width": args.width,
                "height": args.height,
                "resolution_m": args.resolution_m,
                "bands": band_files,
                "scl": args.scl,
                "geo": geo,
            }),
            outputs: vec![scene_dir.display().to_string()],
            summary: None,
        },
    )?;
    println!("ingested scene -> {}", scene_dir.display());
    Ok(())
}

fn cmd_tile(args: TileArgs, out: &Path) -> Result<()> {
    let scene = load_scene_windowed(&args.scene, &args.window)?;
    let tiles = raster::tile(&scene, args.tile_size, args.require_water, args.water_code)?;
    fs::create_dir_all(out)?;
    let mut outputs = Vec::new();
    for t in &tiles {
        let dir = out.join(&t.tile_id);
        fs::create_dir_all(&dir)?;
        raster::save_scene(t, &dir)?;
        outputs.push(dir.display().to_string());
    }
    write_manifest(
        out,
        &Manifest {
            command: "tile".to_string(),
            created_unix_ms: unix_ms(),
            config: json!({
                "scene": args.scene,
                "crop": args.window.describe(),
                "tile_size": args.tile_size,
                "require_water": args.require_water,
                "water_code": args.water_code,
            }),
            outputs,
            summary: Some(json!({"tiles": tiles.len()})),
        },
    )?;
    println!("wrote {} tiles -> {}", tiles.len(), out.display());
    Ok(())
}

/// Shared sample-and-split stage for `sample`, `rank`, and `train`.
fn build_dataset(
    scene: &Scene,
    bands: &[BandId],
    n_per_class: usize,
    seed: u64,
    fractions: (f64, f64, f64),
    water_code: u16,
) -> Result<Dataset> {
    let mask = scene.water_mask(water_code)?;
    let points = balanced_sample(scene, bands, &mask, n_per_class, seed)?;
    split(&points, &SplitSpec::new(seed, fractions)?)
}

fn cmd_sample(args: SampleArgs, out: &Path) -> Result<()> {
    let scene = load_scene_windowed(&args.scene, &args.window)?;
    let bands = parse_bands(&args.bands)?;
    let fractions = parse_fractions(&args.fractions)?;
    let dataset = build_dataset(
        &scene,
        &bands,
        args.n_per_class,
        args.seed,
        fractions,
        args.water_code,
    )?;
    fs::create_dir_all(out)?;
    let mut outputs = Vec::new();
    for (name, points) in [
        ("train.csv", &dataset.train),
        ("val.csv", &dataset.val),
        ("test.csv", &dataset.test),
    ] {
        let path = out.join(name);
        let file = fs::File::create(&path)?;
        write_points_csv(std::io::BufWriter::new(file), &bands, points)?;
        outputs.push(path.display().to_string());
    }
    write_manifest(
        out,
        &Manifest {
            command: "sample".to_string(),
            created_unix_ms: unix_ms(),
            config: json!({
                "scene": args.scene,
                "crop": args.window.describe(),
                "bands": band_names(&bands),
                "n_per_class": args.n_per_class,
                "seed": args.seed,
                "fractions": [fractions.0, fractions.1, fractions.2],
                "water_code": args.water_code,
            }),
            outputs,
            summary: Some(json!({
                "train": dataset.train.len(),
                "val": dataset.val.len(),
                "test": dataset.test.len(),
            })),
        },
    )?;
    println!(
        "sampled {}/{}/{} points -> {}",
        dataset.train.len(),
        dataset.val.len(),
        dataset.test.len(),
        out.display()
    );
    Ok(())
}

fn cmd_rank(args: RankArgs, out: &Path) -> Result<()> {
    let scene = load_scene_windowed(&args.scene, &args.window)?;
    let bands = parse_bands(&args.bands)?;
    let algos = parse_algos(&args.algos)?;
    let fractions = parse_fractions(&args.fractions)?;
    let mask = scene.water_mask(args.water_code)?;
    let sampling = SamplingSpec::new(args.n_per_class, SplitSpec::new(args.seed, fractions)?);
    let result = ranking::rank_bands(&scene, &mask, &bands, &algos, &sampling)?;

    fs::create_dir_all(out)?;
    let csv_path = out.join("ranking.csv");
    let file = fs::File::create(&csv_path)?;
    write_ranking_csv(
        std::io::BufWriter::new(file),
        &result.band_names(),
        &result.algorithm_names(),
        &result.cell_options(),
        &result.row_percents,
        &result.col_percents,
    )?;

    let cell_details: Vec<serde_json::Value> = result
        .cells
        .iter()
        .zip(&result.bands)
        .flat_map(|(row, band)| {
            row.iter().zip(&result.algorithms).map(|(cell, algo)| {
                json!({
                    "band": band.as_str(),
                    "algo": algo.name(),
                    "miou": cell.miou,
                    "note": cell.note,
                    "millis": cell.millis,
                })
            })
        })
        .collect();
    let best = ranking::best_cell(&result).ok();
    write_manifest(
        out,
        &Manifest {
            command: "rank".to_string(),
            created_unix_ms: unix_ms(),
            config: json!({
                "scene": args.scene,
                "crop": args.window.describe(),
                "bands": band_names(&bands),
                "algos": result.algorithm_names(),
                "seed": args.seed,
                "n_per_class": args.n_per_class,
                "fractions": [fractions.0, fractions.1, fractions.2],
                "water_code": args.water_code,
            }),
            outputs: vec![csv_path.display().to_string()],
            summary: Some(json!({
                "best": best.as_ref().map(|(b, a, s)| {
                    json!({"band": b.as_str(), "algo": a.name(), "miou": s})
                }),
                "started_unix_ms": result.started_unix_ms,
                "finished_unix_ms": result.finished_unix_ms,
                "cells": cell_details,
            })),
        },
    )?;
    match best {
        Some((band, algo, miou)) => println!(
            "ranked {} bands x {} classifiers -> {} (best: {} {} {:.2})",
            bands.len(),
            result.algorithms.len(),
            csv_path.display(),
            band.as_str(),
            algo.name(),
            miou
        ),
        None => println!("ranked, but every cell failed -> {}", csv_path.display()),
    }
    Ok(())
}

fn cmd_train(args: TrainArgs, out: &Path) -> Result<()> {
    let scene = load_scene_windowed(&args.scene, &args.window)?;
    let bands = parse_bands(&args.bands)?;
    let fractions = parse_fractions(&args.fractions)?;
    let dataset = build_dataset(
        &scene,
        &bands,
        args.n_per_class,
        args.seed,
        fractions,
        args.water_code,
    )?;

    let mut config = mlp::MlpConfig::new(bands.len());
    config.dropout_rate = args.dropout;
    let mut tc = mlp::TrainConfig::new(args.seed);
    tc.learning_rate = args.learning_rate;
    tc.batch_size = args.batch_size;
    tc.max_epochs = args.max_epochs;
    tc.patience = args.patience;
    let (params, history) = mlp::train(&dataset, &config, &tc)?;

    // Final report on the held-out test split.
    let (test_accuracy, test_miou) = if dataset.test.is_empty() {
        (None, None)
    } else {
        let mut preds = Vec::with_capacity(dataset.test.len());
        let mut truth = Vec::with_capacity(dataset.test.len());
        for p in &dataset.test {
            let prob = mlp::forward(&params, &p.features, None)?;
            preds.push(u8::from(prob >= 0.5));
            truth.push(p.label);
        }
        (
            Some(binary_accuracy(&preds, &truth)?),
            Some(confusion(&preds, &truth)?.miou() * 100.0),
        )
    };

    fs::create_dir_all(out)?;
    let weights_path = out.join("bandnet.bnet");
    mlp::save_params(&params, &weights_path)?;
    let history_path = out.join("history.csv");
    history.save_csv(&history_path)?;

    write_manifest(
        out,
        &Manifest {
            command: "train".to_string(),
            created_unix_ms: unix_ms(),
            config: json!({
                "scene": args.scene,
                "crop": args.window.describe(),
                "bands": band_names(&bands),
                "seed": args.seed,
                "n_per_class": args.n_per_class,
                "fractions": [fractions.0, fractions.1, fractions.2],
                "water_code": args.water_code,
                "learning_rate": tc.learning_rate,
                "batch_size": tc.batch_size,
                "max_epochs": tc.max_epochs,
                "patience": tc.patience,
                "dropout": config.dropout_rate,
                "parameters": mlp::param_count(&config),
            }),
            outputs: vec![
                weights_path.display().to_string(),
                history_path.display().to_string(),
            ],
            summary: Some(json!({
                "epochs_run": history.epochs(),
                "best_epoch": history.best_epoch,
                "val_loss": history.val_loss[history.best_epoch],
                "val_acc": history.val_acc[history.best_epoch],
                "test_accuracy": test_accuracy,
                "test_miou": test_miou,
            })),
        },
    )?;
    println!(
        "trained {} epochs (best {}: val_acc {:.4}) -> {}",
        history.epochs(),
        history.best_epoch + 1,
        history.val_acc[history.best_epoch],
        weights_path.display()
    );
    Ok(())
}

/// Band list for inference: the flag if given, otherwise the training
/// manifest next to the weight file.
fn infer_bands(weights: &Path, flag: &Option<String>) -> Result<Vec<BandId>> {
    if let Some(s) = flag {
        return parse_bands(s);
    }
    let dir = weights.parent().unwrap_or_else(|| Path::new("."));
    let manifest = read_manifest(dir).map_err(|_| {
        Error::arg(format!(
            "no manifest next to {}; pass --bands explicitly",
            weights.display()
        ))
    })?;
    let names = manifest
        .config
        .get("bands")
        .and_then(|b| b.as_array())
        .ok_or_else(|| {
            Error::arg("training manifest does not record bands; pass --bands explicitly")
        })?;
    names
        .iter()
        .map(|n| {
            n.as_str()
                .ok_or_else(|| Error::corrupt("manifest band entry is not a string"))
                .and_then(BandId::parse)
        })
        .collect()
}

fn mask_name(scene: &Scene) -> String {
    format!("{}_{}_water.pgm", scene.tile_id, scene.date)
}

fn cmd_infer(args: InferArgs, out: &Path) -> Result<()> {
    let params = mlp::load_params(&args.weights)?;
    let bands = infer_bands(&args.weights, &args.bands)?;
    let scene = load_scene_windowed(&args.scene, &args.window)?;
    let mask = mlp::predict_map(&params, &scene, &bands, args.threshold)?;

    fs::create_dir_all(out)?;
    let mask_path = out.join(mask_name(&scene));
    raster::save_mask_pgm(&mask, &mask_path)?;
    write_manifest(
        out,
        &Manifest {
            command: "infer".to_string(),
            created_unix_ms: unix_ms(),
            config: json!({
                "weights": args.weights,
                "scene": args.scene,
                "crop": args.window.describe(),
                "bands": band_names(&bands),
                "threshold": args.threshold,
            }),
            outputs: vec![mask_path.display().to_string()],
            summary: Some(json!({
                "water_pixels": mask.count_water(),
                "non_water_pixels": mask.count_non_water(),
            })),
        },
    )?;
    println!(
        "segmented {} ({} water pixels) -> {}",
        scene.tile_id,
        mask.count_water(),
        mask_path.display()
    );
    Ok(())
}

fn cmd_monitor(args: MonitorArgs, out: &Path) -> Result<()> {
    let params = mlp::load_params(&args.weights)?;
    let bands = infer_bands(&args.weights, &args.bands)?;
    let mut scenes = Vec::new();
    for path in args.scenes.split(',') {
        let path = path.trim();
        if path.is_empty() {
            return Err(Error::arg("empty entry in --scenes"));
        }
        scenes.push(load_scene_windowed(Path::new(path), &args.window)?);
    }
    if scenes.len() < 2 {
        return Err(Error::arg("monitor needs at least two scenes"));
    }
    scenes.sort_by(|a, b| a.date.cmp(&b.date));
    for pair in scenes.windows(2) {
        if pair[0].date == pair[1].date {
            return Err(Error::arg(format!(
                "two scenes share the date {}; monitoring needs distinct dates",
                pair[0].date
            )));
        }
    }

    fs::create_dir_all(out)?;
    let mut outputs = Vec::new();
    let mut masks = Vec::new();
    let mut dates = Vec::new();
    for scene in &scenes {
        let mask = mlp::predict_map(&params, scene, &bands, args.threshold)?;
        let path = out.join(mask_name(scene));
        raster::save_mask_pgm(&mask, &path)?;
        outputs.push(path.display().to_string());
        dates.push(json!({
            "date": scene.date,
            "water_pixels": mask.count_water(),
        }));
        masks.push((scene.date.clone(), mask));
    }
    let mut changes = Vec::new();
    for i in 0..masks.len() {
        for j in i + 1..masks.len() {
            let (da, ma) = &masks[i];
            let (db, mb) = &masks[j];
            let diff = ma.xor(mb)?;
            let path = out.join(format!("change_{da}_{db}.pgm"));
            raster::save_mask_pgm(&diff, &path)?;
            outputs.push(path.display().to_string());
            changes.push(json!({
                "from": da,
                "to": db,
                "changed_pixels": diff.count_water(),
            }));
        }
    }
    write_manifest(
        out,
        &Manifest {
            command: "monitor".to_string(),
            created_unix_ms: unix_ms(),
            config: json!({
                "weights": args.weights,
                "scenes": args.scenes.split(',').map(str::trim).collect::<Vec<_>>(),
                "crop": args.window.describe(),
                "bands": band_names(&bands),
                "threshold": args.threshold,
            }),
            outputs,
            summary: Some(json!({"dates": dates, "changes": changes})),
        },
    )?;
    println!(
        "monitored {} dates, {} change maps -> {}",
        masks.len(),
        masks.len() * (masks.len() - 1) / 2,
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

/// Prints `rows` as an aligned ASCII table: first column left-aligned,
/// the rest right-aligned.
fn print_table<W: Write>(mut out: W, rows: &[Vec<String>]) -> Result<()> {
    let n_cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0usize; n_cols];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    for row in rows {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            if i == 0 {
                line.push_str(&format!("{cell:<width$}", width = widths[i]));
            } else {
                line.push_str(&format!("{cell:>width$}", width = widths[i]));
            }
        }
        writeln!(out, "{}", line.trim_end())?;
    }
    Ok(())
}

fn report_rank(dir: &Path, manifest: &Manifest) -> Result<()> {
    let csv_path = dir.join("ranking.csv");
    let text = fs::read_to_string(&csv_path)
        .map_err(|_| Error::arg(format!("{} has no ranking.csv", dir.display())))?;
    let rows: Vec<Vec<String>> = text
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    if rows.len() < 2 {
        return Err(Error::corrupt("ranking.csv has no data rows"));
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    print_table(&mut out, &rows)?;

    // Best cell straight from the CSV values (no recomputation).
    let mut best: Option<(String, String, f64)> = None;
    let header = &rows[0];
    for row in &rows[1..] {
        if row[0] == "percent" {
            continue;
        }
        for (i, cell) in row.iter().enumerate().skip(1) {
            if header.get(i).map(String::as_str) == Some("percent") {
                continue;
            }
            if let Ok(v) = cell.parse::<f64>() {
                if best.as_ref().is_none_or(|(_, _, b)| v > *b) {
                    best = Some((row[0].clone(), header[i].clone(), v));
                }
            }
        }
    }
    if let Some((band, algo, v)) = best {
        writeln!(out, "\nbest cell: {band} {algo} {v:.2}")?;
    }
    if let Some(seed) = manifest.config.get("seed") {
        writeln!(out, "seed: {seed}")?;
    }
    Ok(())
}

fn report_train(dir: &Path, manifest: &Manifest) -> Result<()> {
    let history = fs::read_to_string(dir.join("history.csv"))
        .map_err(|_| Error::arg(format!("{} has no history.csv", dir.display())))?;
    let best_epoch = manifest
        .summary
        .as_ref()
        .and_then(|s| s.get("best_epoch"))
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::corrupt("train manifest lacks best_epoch"))?
        as usize;
    let row = history
        .lines()
        .nth(best_epoch + 1)
        .ok_or_else(|| Error::corrupt("history.csv is shorter than best_epoch"))?;
    let fields: Vec<&str> = row.split(',').collect();
    if fields.len() != 4 {
        return Err(Error::corrupt("history.csv row is malformed"));
    }
    println!(
        "bands: {}",
        manifest.config.get("bands").unwrap_or(&json!([]))
    );
    println!(
        "best epoch {}: train_loss {} val_loss {} val_acc {}",
        fields[0], fields[1], fields[2], fields[3]
    );
    if let Some(summary) = &manifest.summary {
        if let Some(acc) = summary.get("test_accuracy").and_then(|v| v.as_f64()) {
            println!("test accuracy: {acc:.4}");
        }
        if let Some(miou) = summary.get("test_miou").and_then(|v| v.as_f64()) {
            println!("test mIoU: {miou:.2}");
        }
    }
    Ok(())
}

fn cmd_report(dir: &Path) -> Result<()> {
    let manifest = read_manifest(dir)?;
    println!("run: {} ({})", manifest.command, dir.display());
    match manifest.command.as_str() {
        "rank" => report_rank(dir, &manifest)?,
        "train" => report_train(dir, &manifest)?,
        _ => {
            println!(
                "config: {}",
                serde_json::to_string_pretty(&manifest.config)?
            );
            if let Some(summary) = &manifest.summary {
                println!("summary: {}", serde_json::to_string_pretty(summary)?);
            }
            for output in &manifest.outputs {
                println!("output: {output}");
            }
        }
    }
    Ok(())
}
