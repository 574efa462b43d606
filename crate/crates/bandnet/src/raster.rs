//! Multispectral rasters: loading, annotation, cropping, tiling, rotation.
//!
//! A scene directory holds a `scene.json` header plus one raw file per band:
//! little-endian unsigned 16-bit values, row-major, no header. Reflectance
//! codes map to physical reflectance as `code / 10000`. The scene
//! classification grid (SCL) carries per-pixel class codes; code 6 is water
//! under the L2A convention and code 0 means no data.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default SCL class code treated as water.
pub const DEFAULT_WATER_CODE: u16 = 6;
/// SCL class code for missing data.
pub const SCL_NO_DATA: u16 = 0;
/// Highest valid SCL class code.
pub const SCL_MAX_CODE: u16 = 11;
/// Mask label for pixels excluded from sampling and scoring.
pub const MASK_INVALID: u8 = 255;
/// Tile edge used throughout: large granules are cut into squares this size.
pub const DEFAULT_TILE_SIZE: usize = 549;

/// Identifier of a raster plane: one of the ten reflectance bands or the
/// scene classification layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BandId {
    B2,
    B3,
    B4,
    B5,
    B6,
    B7,
    B8,
    B8A,
    B11,
    B12,
    Scl,
}

impl BandId {
    /// The ten reflectance bands in canonical (wavelength) order.
    pub const REFLECTANCE: [BandId; 10] = [
        BandId::B2,
        BandId::B3,
        BandId::B4,
        BandId::B5,
        BandId::B6,
        BandId::B7,
        BandId::B8,
        BandId::B8A,
        BandId::B11,
        BandId::B12,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BandId::B2 => "B2",
            BandId::B3 => "B3",
            BandId::B4 => "B4",
            BandId::B5 => "B5",
            BandId::B6 => "B6",
            BandId::B7 => "B7",
            BandId::B8 => "B8",
            BandId::B8A => "B8A",
            BandId::B11 => "B11",
            BandId::B12 => "B12",
            BandId::Scl => "SCL",
        }
    }

    /// Parses a band name. Zero-padded forms ("B02") and lowercase are
    /// accepted alongside the canonical names.
    pub fn parse(s: &str) -> Result<BandId> {
        let up = s.trim().to_ascii_uppercase();
        let norm = match up.as_str() {
            "B02" => "B2",
            "B03" => "B3",
            "B04" => "B4",
            "B05" => "B5",
            "B06" => "B6",
            "B07" => "B7",
            "B08" => "B8",
            other => other,
        };
        match norm {
            "B2" => Ok(BandId::B2),
            "B3" => Ok(BandId::B3),
            "B4" => Ok(BandId::B4),
            "B5" => Ok(BandId::B5),
            "B6" => Ok(BandId::B6),
            "B7" => Ok(BandId::B7),
            "B8" => Ok(BandId::B8),
            "B8A" => Ok(BandId::B8A),
            "B11" => Ok(BandId::B11),
            "B12" => Ok(BandId::B12),
            "SCL" => Ok(BandId::Scl),
            _ => Err(Error::format(format!("unknown band id `{s}`"))),
        }
    }
}

impl fmt::Display for BandId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl TryFrom<String> for BandId {
    type Error = Error;
    fn try_from(s: String) -> Result<BandId> {
        BandId::parse(&s)
    }
}

impl From<BandId> for String {
    fn from(b: BandId) -> String {
        b.as_str().to_string()
    }
}

/// One band's 2-D raster of unsigned 16-bit codes, row-major.
///
/// For reflectance bands the codes are scaled bottom-of-atmosphere
/// reflectance (`code / 10000`); for [`BandId::Scl`] they are class labels
/// in `0..=11`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandGrid {
    pub band_id: BandId,
    pub width: usize,
    pub height: usize,
    pub resolution_m: u32,
    values: Vec<u16>,
}

impl BandGrid {
    pub fn new(
        band_id: BandId,
        width: usize,
        height: usize,
        resolution_m: u32,
        values: Vec<u16>,
    ) -> Result<BandGrid> {
        if width == 0 || height == 0 {
            return Err(Error::arg(format!(
                "band {band_id}: dimensions must be positive, got {width}x{height}"
            )));
        }
        if resolution_m == 0 {
            return Err(Error::arg("resolution_m must be positive"));
        }
        if values.len() != width * height {
            return Err(Error::corrupt(format!(
                "band {band_id}: {} values for a {width}x{height} grid",
                values.len()
            )));
        }
        if band_id == BandId::Scl {
            if let Some(bad) = values.iter().find(|&&v| v > SCL_MAX_CODE) {
                return Err(Error::corrupt(format!(
                    "SCL code {bad} outside 0..={SCL_MAX_CODE}"
                )));
            }
        }
        Ok(BandGrid {
            band_id,
            width,
            height,
            resolution_m,
            values,
        })
    }

    pub fn values(&self) -> &[u16] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        debug_assert!(x < self.width && y < self.height);
        self.values[y * self.width + x]
    }

    /// Physical reflectance at a pixel (`code / 10000`).
    #[inline]
    pub fn reflectance(&self, x: usize, y: usize) -> f64 {
        f64::from(self.get(x, y)) / 10_000.0
    }

    fn crop(&self, win: &Window) -> BandGrid {
        let mut values = Vec::with_capacity(win.w * win.h);
        for row in win.y0..win.y0 + win.h {
            let start = row * self.width + win.x0;
            values.extend_from_slice(&self.values[start..start + win.w]);
        }
        BandGrid {
            band_id: self.band_id,
            width: win.w,
            height: win.h,
            resolution_m: self.resolution_m,
            values,
        }
    }

    /// One counterclockwise quarter turn.
    fn rotate_once(&self) -> BandGrid {
        let (w, h) = (self.width, self.height);
        let mut values = vec![0u16; w * h];
        // Destination is h x w; dst(r, c) = src(c, w - 1 - r).
        for r in 0..w {
            for c in 0..h {
                values[r * h + c] = self.values[c * w + (w - 1 - r)];
            }
        }
        BandGrid {
            band_id: self.band_id,
            width: h,
            height: w,
            resolution_m: self.resolution_m,
            values,
        }
    }
}

/// Per-pixel water annotation: 0 = non-water, 1 = water, 255 = invalid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WaterMask {
    pub width: usize,
    pub height: usize,
    labels: Vec<u8>,
}

impl WaterMask {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<WaterMask> {
        if labels.len() != width * height {
            return Err(Error::arg(format!(
                "mask: {} labels for a {width}x{height} grid",
                labels.len()
            )));
        }
        if let Some(bad) = labels
            .iter()
            .find(|&&l| l != 0 && l != 1 && l != MASK_INVALID)
        {
            return Err(Error::arg(format!("mask label {bad} not in {{0, 1, 255}}")));
        }
        Ok(WaterMask {
            width,
            height,
            labels,
        })
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    pub fn count_water(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn count_non_water(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 0).count()
    }

    /// Pixel-wise change map between two masks of equal extent: 1 where the
    /// labels differ, 0 where they agree, invalid where either is invalid.
    pub fn xor(&self, other: &WaterMask) -> Result<WaterMask> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::arg(format!(
                "mask extents differ: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let labels = self
            .labels
            .iter()
            .zip(&other.labels)
            .map(|(&a, &b)| {
                if a == MASK_INVALID || b == MASK_INVALID {
                    MASK_INVALID
                } else {
                    u8::from(a != b)
                }
            })
            .collect();
        Ok(WaterMask {
            width: self.width,
            height: self.height,
            labels,
        })
    }
}

/// Pixel window: `x0..x0+w` by `y0..y0+h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl Window {
    pub fn new(x0: usize, y0: usize, w: usize, h: usize) -> Window {
        Window { x0, y0, w, h }
    }
}

/// Six-coefficient affine transform from pixel to projected coordinates:
/// `X = a*col + b*row + c`, `Y = d*col + e*row + f`, stored `[a,b,c,d,e,f]`.
pub type GeoTransform = [f64; 6];

/// A dated collection of co-registered band grids plus an optional scene
/// classification grid. Immutable after load; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub tile_id: String,
    /// ISO-8601 calendar date (`YYYY-MM-DD`).
    pub date: String,
    bands: BTreeMap<BandId, BandGrid>,
    scl: Option<BandGrid>,
    pub geo: Option<GeoTransform>,
}

impl Scene {
    pub fn new(
        tile_id: impl Into<String>,
        date: impl Into<String>,
        bands: Vec<BandGrid>,
        scl: Option<BandGrid>,
        geo: Option<GeoTransform>,
    ) -> Result<Scene> {
        let tile_id = tile_id.into();
        let date = date.into();
        validate_date(&date)?;
        if bands.is_empty() && scl.is_none() {
            return Err(Error::arg("scene needs at least one grid"));
        }
        let mut map = BTreeMap::new();
        let mut extent: Option<(usize, usize, u32)> = None;
        let mut check = |g: &BandGrid| -> Result<()> {
            match extent {
                None => {
                    extent = Some((g.width, g.height, g.resolution_m));
                    Ok(())
                }
                Some((w, h, r)) if g.width == w && g.height == h && g.resolution_m == r => Ok(()),
                Some((w, h, r)) => Err(Error::corrupt(format!(
                    "band {} is {}x{}@{}m but scene is {w}x{h}@{r}m",
                    g.band_id, g.width, g.height, g.resolution_m
                ))),
            }
        };
        for grid in &bands {
            if grid.band_id == BandId::Scl {
                return Err(Error::arg("SCL must be supplied as the scl grid"));
            }
            check(grid)?;
        }
        if let Some(s) = &scl {
            if s.band_id != BandId::Scl {
                return Err(Error::arg("scl grid must carry BandId::Scl"));
            }
            check(s)?;
        }
        for grid in bands {
            if map.insert(grid.band_id, grid).is_some() {
                return Err(Error::arg("duplicate band in scene"));
            }
        }
        Ok(Scene {
            tile_id,
            date,
            bands: map,
            scl,
            geo,
        })
    }

    pub fn width(&self) -> usize {
        self.any_grid().width
    }

    pub fn height(&self) -> usize {
        self.any_grid().height
    }

    pub fn resolution_m(&self) -> u32 {
        self.any_grid().resolution_m
    }

    fn any_grid(&self) -> &BandGrid {
        self.bands
            .values()
            .next()
            .or(self.scl.as_ref())
            .expect("scene invariant: at least one grid")
    }

    pub fn band(&self, id: BandId) -> Option<&BandGrid> {
        if id == BandId::Scl {
            return self.scl.as_ref();
        }
        self.bands.get(&id)
    }

    pub fn band_ids(&self) -> impl Iterator<Item = BandId> + '_ {
        self.bands.keys().copied()
    }

    pub fn scl(&self) -> Option<&BandGrid> {
        self.scl.as_ref()
    }

    /// Water annotation from the scene classification grid.
    pub fn water_mask(&self, water_code: u16) -> Result<WaterMask> {
        let scl = self
            .scl
            .as_ref()
            .ok_or_else(|| Error::arg("scene has no SCL grid to annotate from"))?;
        Ok(scl_to_mask(scl, water_code))
    }
}

fn validate_date(date: &str) -> Result<()> {
    let bytes = date.as_bytes();
    let ok = bytes.len() == 10
        && bytes[4] == b'-'
        && bytes[7] == b'-'
        && bytes
            .iter()
            .enumerate()
            .all(|(i, b)| matches!(i, 4 | 7) || b.is_ascii_digit())
        && &date[5..7] >= "01"
        && &date[5..7] <= "12"
        && &date[8..10] >= "01"
        && &date[8..10] <= "31";
    if ok {
        Ok(())
    } else {
        Err(Error::format(format!(
            "date `{date}` is not an ISO-8601 calendar date (YYYY-MM-DD)"
        )))
    }
}

/// Converts a scene classification grid into a water mask: label 1 where the
/// code equals `water_code`, invalid where the code is 0 (no data), else 0.
pub fn scl_to_mask(scl: &BandGrid, water_code: u16) -> WaterMask {
    let labels = scl
        .values
        .iter()
        .map(|&code| {
            if code == water_code {
                1
            } else if code == SCL_NO_DATA {
                MASK_INVALID
            } else {
                0
            }
        })
        .collect();
    WaterMask {
        width: scl.width,
        height: scl.height,
        labels,
    }
}

/// Crops every grid of `scene` to `window`; the geo transform is translated
/// so projected coordinates of surviving pixels are unchanged.
pub fn subset(scene: &Scene, window: &Window) -> Result<Scene> {
    if window.w == 0 || window.h == 0 {
        return Err(Error::arg("window must have positive extent"));
    }
    let (sw, sh) = (scene.width(), scene.height());
    if window.x0 + window.w > sw || window.y0 + window.h > sh {
        return Err(Error::bounds(format!(
            "window ({},{})+{}x{} exceeds scene {}x{}",
            window.x0, window.y0, window.w, window.h, sw, sh
        )));
    }
    let geo = scene.geo.map(|g| {
        let (x0, y0) = (window.x0 as f64, window.y0 as f64);
        [
            g[0],
            g[1],
            g[0] * x0 + g[1] * y0 + g[2],
            g[3],
            g[4],
            g[3] * x0 + g[4] * y0 + g[5],
        ]
    });
    Ok(Scene {
        tile_id: scene.tile_id.clone(),
        date: scene.date.clone(),
        bands: scene
            .bands
            .iter()
            .map(|(id, g)| (*id, g.crop(window)))
            .collect(),
        scl: scene.scl.as_ref().map(|g| g.crop(window)),
        geo,
    })
}

/// Number of complete tiles per axis; trailing partial tiles are dropped.
pub fn tile_grid_dims(width: usize, height: usize, tile_size: usize) -> (usize, usize) {
    (width / tile_size, height / tile_size)
}

/// Cuts `scene` into non-overlapping `tile_size` squares in row-major order.
///
/// Trailing partial tiles are dropped. With `require_water`, tiles whose
/// annotation (from `water_code`) contains no water pixel are discarded;
/// this needs the SCL grid. Tile ids extend the parent id with the tile's
/// row and column.
pub fn tile(
    scene: &Scene,
    tile_size: usize,
    require_water: bool,
    water_code: u16,
) -> Result<Vec<Scene>> {
    if tile_size == 0 {
        return Err(Error::arg("tile_size must be positive"));
    }
    if require_water && scene.scl.is_none() {
        return Err(Error::arg("require_water needs an SCL grid"));
    }
    let (cols, rows) = tile_grid_dims(scene.width(), scene.height(), tile_size);
    let mut tiles = Vec::new();
    for row in 0..rows {
        for col in 0..cols {
            let window = Window::new(col * tile_size, row * tile_size, tile_size, tile_size);
            let mut t = subset(scene, &window)?;
            t.tile_id = format!("{}_r{row:02}c{col:02}", scene.tile_id);
            if require_water {
                let has_water = t
                    .scl
                    .as_ref()
                    .is_some_and(|scl| scl.values.contains(&water_code));
                if !has_water {
                    continue;
                }
            }
            tiles.push(t);
        }
    }
    Ok(tiles)
}

/// Rotates every grid by `quarter_turns` x 90 degrees counterclockwise.
/// The geo transform is composed with the pixel permutation so it keeps
/// mapping pixels to their original projected coordinates.
pub fn rotate(scene: &Scene, quarter_turns: u32) -> Result<Scene> {
    if quarter_turns > 3 {
        return Err(Error::arg(format!(
            "quarter_turns must be in 0..=3, got {quarter_turns}"
        )));
    }
    let mut out = scene.clone();
    for _ in 0..quarter_turns {
        let w = out.width() as f64;
        out.geo = out.geo.map(|g| {
            // New pixel (c', r') reads old pixel (w - 1 - r', c').
            [
                g[1],
                -g[0],
                g[0] * (w - 1.0) + g[2],
                g[4],
                -g[3],
                g[3] * (w - 1.0) + g[5],
            ]
        });
        out.bands = out
            .bands
            .iter()
            .map(|(id, g)| (*id, g.rotate_once()))
            .collect();
        out.scl = out.scl.as_ref().map(BandGrid::rotate_once);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Scene directory I/O
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct BandRef {
    id: BandId,
    file: String,
}

#[derive(Serialize, Deserialize)]
struct SclRef {
    file: String,
}

#[derive(Serialize, Deserialize)]
struct SceneHeader {
    tile_id: String,
    date: String,
    width: usize,
    height: usize,
    resolution_m: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    geo: Option<GeoTransform>,
    bands: Vec<BandRef>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scl: Option<SclRef>,
}

/// Name of the header file inside a scene directory.
pub const SCENE_HEADER: &str = "scene.json";

fn read_grid_file(
    dir: &Path,
    file: &str,
    band_id: BandId,
    width: usize,
    height: usize,
    resolution_m: u32,
) -> Result<BandGrid> {
    let path = dir.join(file);
    let bytes = fs::read(&path)
        .map_err(|e| Error::format(format!("cannot read band file {}: {e}", path.display())))?;
    let expected = width * height * 2;
    if bytes.len() != expected {
        return Err(Error::corrupt(format!(
            "{}: {} bytes but header declares {width}x{height} ({expected} bytes)",
            path.display(),
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    BandGrid::new(band_id, width, height, resolution_m, values)
}

/// Loads a scene from a directory containing `scene.json` and the raw band
/// files it references.
pub fn load_scene(dir: impl AsRef<Path>) -> Result<Scene> {
    let dir = dir.as_ref();
    let header_path = dir.join(SCENE_HEADER);
    let text = fs::read_to_string(&header_path).map_err(|e| {
        Error::format(format!(
            "missing scene header {}: {e}",
            header_path.display()
        ))
    })?;
    let header: SceneHeader = serde_json::from_str(&text)
        .map_err(|e| Error::format(format!("{}: {e}", header_path.display())))?;
    let mut bands = Vec::with_capacity(header.bands.len());
    for band in &header.bands {
        if band.id == BandId::Scl {
            return Err(Error::format(
                "SCL must be declared via the scl field, not bands",
            ));
        }
        bands.push(read_grid_file(
            dir,
            &band.file,
            band.id,
            header.width,
            header.height,
            header.resolution_m,
        )?);
    }
    let scl = header
        .scl
        .as_ref()
        .map(|s| {
            read_grid_file(
                dir,
                &s.file,
                BandId::Scl,
                header.width,
                header.height,
                header.resolution_m,
            )
        })
        .transpose()?;
    Scene::new(header.tile_id, header.date, bands, scl, header.geo)
}

/// Writes a scene as a directory: `scene.json` plus one `<id>.bin` raw file
/// per grid. The inverse of [`load_scene`], bit-exact both ways.
pub fn save_scene(scene: &Scene, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut band_refs = Vec::new();
    for (id, grid) in &scene.bands {
        let file = format!("{id}.bin");
        write_grid_file(&dir.join(&file), grid)?;
        band_refs.push(BandRef { id: *id, file });
    }
    let scl_ref = match &scene.scl {
        Some(grid) => {
            let file = "SCL.bin".to_string();
            write_grid_file(&dir.join(&file), grid)?;
            Some(SclRef { file })
        }
        None => None,
    };
    let header = SceneHeader {
        tile_id: scene.tile_id.clone(),
        date: scene.date.clone(),
        width: scene.width(),
        height: scene.height(),
        resolution_m: scene.resolution_m(),
        geo: scene.geo,
        bands: band_refs,
        scl: scl_ref,
    };
    let mut file = fs::File::create(dir.join(SCENE_HEADER))?;
    serde_json::to_writer_pretty(&mut file, &header)?;
    file.write_all(b"\n")?;
    Ok(())
}

fn write_grid_file(path: &Path, grid: &BandGrid) -> Result<()> {
    let mut bytes = Vec::with_capacity(grid.values.len() * 2);
    for v in &grid.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// PGM mask export
// ---------------------------------------------------------------------------

/// Gray level written for water pixels.
pub const PGM_WATER: u8 = 255;
/// Gray level written for non-water pixels.
pub const PGM_NON_WATER: u8 = 0;
/// Gray level written for invalid pixels.
pub const PGM_INVALID: u8 = 128;

/// Writes a mask as binary PGM (P5, maxval 255): water 255, non-water 0,
/// invalid 128.
pub fn write_mask_pgm<W: Write>(mask: &WaterMask, mut out: W) -> Result<()> {
    write!(out, "P5\n{} {}\n255\n", mask.width, mask.height)?;
    let pixels: Vec<u8> = mask
        .labels
        .iter()
        .map(|&l| match l {
            1 => PGM_WATER,
            0 => PGM_NON_WATER,
            _ => PGM_INVALID,
        })
        .collect();
    out.write_all(&pixels)?;
    Ok(())
}

/// Convenience wrapper writing the PGM to a file path.
pub fn save_mask_pgm(mask: &WaterMask, path: impl AsRef<Path>) -> Result<()> {
    let file = fs::File::create(path.as_ref())?;
    write_mask_pgm(mask, std::io::BufWriter::new(file))
}

/// Reads a mask previously written by [`write_mask_pgm`].
pub fn load_mask_pgm(path: impl AsRef<Path>) -> Result<WaterMask> {
    let mut bytes = Vec::new();
    fs::File::open(path.as_ref())?.read_to_end(&mut bytes)?;
    parse_mask_pgm(&bytes)
}

fn parse_mask_pgm(bytes: &[u8]) -> Result<WaterMask> {
    let mut fields = Vec::new();
    let mut pos = 0;
    // P5, width, height, maxval, then a single whitespace byte before data.
    while fields.len() < 4 && pos < bytes.len() {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        fields.push(&bytes[start..pos]);
    }
    if fields.len() < 4 || fields[0] != b"P5" {
        return Err(Error::format("not a binary PGM (P5) file"));
    }
    let parse = |f: &[u8]| -> Result<usize> {
        std::str::from_utf8(f)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format("bad PGM header field"))
    };
    let width = parse(fields[1])?;
    let height = parse(fields[2])?;
    if parse(fields[3])? != 255 {
        return Err(Error::format("PGM maxval must be 255"));
    }
    pos += 1; // single whitespace after maxval
    let data = &bytes[pos.min(bytes.len())..];
    if data.len() != width * height {
        return Err(Error::corrupt(format!(
            "PGM payload {} bytes for {width}x{height}",
            data.len()
        )));
    }
    let labels = data
        .iter()
        .map(|&p| match p {
            PGM_WATER => Ok(1),
            PGM_NON_WATER => Ok(0),
            PGM_INVALID => Ok(MASK_INVALID),
            other => Err(Error::corrupt(format!("PGM gray level {other}"))),
        })
        .collect::<Result<Vec<u8>>>()?;
    WaterMask::new(width, height, labels)
}
