//! File formats shared by the CLI stages and the FFI layer.
//!
//! ADC cube file layout: one line of JSON header (`AdcHeader`) terminated
//! by `\n`, followed by `n_chirps * n_samples * n_channels` complex samples
//! as little-endian `f32` pairs `(re, im)`. Samples are ordered chirp-major,
//! then ADC sample, then virtual channel.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cloud::{PointCloudSequence, PointRecord};
use crate::error::{Error, Result};
use crate::frontend::{AdcCube, RadarConfig};
use crate::graph::FlowGraph;
use crate::grid::{BinaryGrid, Cell, FlowField, Grid, GridSpec, ScalarField, Stage, Vec2};
use crate::synth::{Trajectories, TrajectoryRecord};

pub const ADC_FORMAT: &str = "crowdflow-adc";
pub const ADC_VERSION: u32 = 1;

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read_bytes(path)?).map_err(|e| Error::format(path.display().to_string(), e.to_string()))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::format(path.display().to_string(), e.to_string()))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = read_text(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::format(format!("{} line {}", path.display(), i + 1), e.to_string()))
        })
        .collect()
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut buf = Vec::new();
    for it in items {
        serde_json::to_writer(&mut buf, &it)?;
        buf.push(b'\n');
    }
    write_bytes(path, &buf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdcHeader {
    pub format: String,
    pub version: u32,
    pub n_chirps: usize,
    pub n_samples: usize,
    pub n_channels: usize,
    pub radar: RadarConfig,
}

pub fn write_adc(path: &Path, cube: &AdcCube, cfg: &RadarConfig) -> Result<()> {
    cube.check_against(cfg)?;
    let (n_chirps, n_samples, n_channels) = cube.dims();
    let header = AdcHeader {
        format: ADC_FORMAT.into(),
        version: ADC_VERSION,
        n_chirps,
        n_samples,
        n_channels,
        radar: cfg.clone(),
    };
    let mut buf = serde_json::to_vec(&header)?;
    buf.push(b'\n');
    buf.reserve(cube.as_slice().len() * 8);
    for z in cube.as_slice() {
        buf.extend_from_slice(&(z.re as f32).to_le_bytes());
        buf.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    write_bytes(path, &buf)
}

pub fn read_adc(path: &Path) -> Result<(RadarConfig, AdcCube)> {
    let bytes = read_bytes(path)?;
    let ctx = || path.display().to_string();
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::format(ctx(), "missing header line"))?;
    let header: AdcHeader =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| Error::format(ctx(), format!("header: {e}")))?;
    if header.format != ADC_FORMAT || header.version != ADC_VERSION {
        return Err(Error::format(ctx(), format!("unsupported format {} v{}", header.format, header.version)));
    }
    let n = header.n_chirps * header.n_samples * header.n_channels;
    let body = &bytes[nl + 1..];
    if body.len() != n * 8 {
        return Err(Error::format(ctx(), format!("expected {} payload bytes, found {}", n * 8, body.len())));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    let cube = AdcCube::from_vec(header.n_chirps, header.n_samples, header.n_channels, data)?;
    header.radar.validate()?;
    cube.check_against(&header.radar)?;
    Ok((header.radar, cube))
}

pub fn write_clouds(path: &Path, clouds: &PointCloudSequence) -> Result<()> {
    write_jsonl(path, clouds.records())
}

/// `n_windows` restores trailing empty windows that the format cannot carry.
pub fn read_clouds(path: &Path, n_windows: usize) -> Result<PointCloudSequence> {
    let recs: Vec<PointRecord> = read_jsonl(path)?;
    if recs.iter().any(|r| !r.x.is_finite() || !r.y.is_finite()) {
        return Err(Error::format(path.display().to_string(), "non-finite point"));
    }
    Ok(PointCloudSequence::from_records(recs, n_windows))
}

pub fn write_trajectories(path: &Path, t: &Trajectories) -> Result<()> {
    write_jsonl(path, t.records())
}

pub fn read_trajectories(path: &Path, dt: f64) -> Result<Trajectories> {
    let recs: Vec<TrajectoryRecord> = read_jsonl(path)?;
    Trajectories::from_records(&recs, dt)
}

pub fn write_graph(path: &Path, g: &FlowGraph) -> Result<()> {
    write_json(path, g)
}

pub fn read_graph(path: &Path) -> Result<FlowGraph> {
    let g: FlowGraph = read_json(path)?;
    g.validate()?;
    Ok(g)
}

/// Metadata stored next to a flow CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSidecar {
    pub stage: Stage,
    pub grid: GridSpec,
    /// Zero-flow cells were left out of the CSV.
    pub omit_zero: bool,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

#[derive(Serialize, Deserialize)]
struct FlowRow {
    x_m: f64,
    y_m: f64,
    vx: f64,
    vy: f64,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::format(path.display().to_string(), e.to_string())
}

/// One row per cell, `iy` then `ix` ascending, plus the sidecar JSON.
pub fn write_flow(path: &Path, f: &FlowField, omit_zero: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (c, v) in f.data.iter() {
        if omit_zero && v.is_zero() {
            continue;
        }
        let p = f.spec.center(c);
        w.serialize(FlowRow {
            x_m: p.x,
            y_m: p.y,
            vx: v.x,
            vy: v.y,
        })
        .map_err(|e| csv_err(path, e))?;
    }
    let buf = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_bytes(path, &buf)?;
    write_json(
        &sidecar_path(path),
        &FlowSidecar {
            stage: f.stage,
            grid: f.spec,
            omit_zero,
        },
    )
}

pub fn read_flow(path: &Path) -> Result<FlowField> {
    let meta: FlowSidecar = read_json(&sidecar_path(path))?;
    meta.grid.validate()?;
    let bytes = read_bytes(path)?;
    let mut f = FlowField::zeros(meta.grid, meta.stage);
    let mut seen = Grid::filled(meta.grid.nx(), meta.grid.ny(), false);
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    for row in rdr.deserialize::<FlowRow>() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let c = meta
            .grid
            .cell_of(Vec2::new(row.x_m, row.y_m))
            .ok_or_else(|| Error::format(path.display().to_string(), format!("({}, {}) outside the grid", row.x_m, row.y_m)))?;
        let v = Vec2::new(row.vx, row.vy);
        if !v.is_finite() {
            return Err(Error::format(path.display().to_string(), "non-finite flow"));
        }
        f.data[c] = v;
        seen[c] = true;
    }
    if !meta.omit_zero && seen.count_ones() != seen.len() {
        return Err(Error::format(path.display().to_string(), "missing cells in a dense flow file"));
    }
    Ok(f)
}

#[derive(Serialize)]
struct ScalarRow {
    x_m: f64,
    y_m: f64,
    value: String,
}

/// CSV `x_m,y_m,value`; cells without a value are written as `nodata`.
pub fn write_scalar_csv(path: &Path, sf: &ScalarField) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (c, v) in sf.data.iter() {
        let p = sf.spec.center(c);
        w.serialize(ScalarRow {
            x_m: p.x,
            y_m: p.y,
            value: v.map_or_else(|| "nodata".to_string(), |v| v.to_string()),
        })
        .map_err(|e| csv_err(path, e))?;
    }
    let buf = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_bytes(path, &buf)
}

fn pgm(nx: usize, ny: usize, mut pixel: impl FnMut(Cell) -> u8) -> Vec<u8> {
    let mut buf = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    for iy in (0..ny).rev() {
        for ix in 0..nx {
            buf.push(pixel(Cell::new(ix, iy)));
        }
    }
    buf
}

/// Gray level of `v` on a scale symmetric about zero: `128 + 127 v / m`
/// with `m` the largest magnitude. 128 is zero, 1 is `-m`, 255 is `+m`.
pub fn symmetric_gray(v: f64, m: f64) -> u8 {
    if !(m > 0.0) {
        return 128;
    }
    (128 + (127.0 * (v / m).clamp(-1.0, 1.0)).round() as i32) as u8
}

/// Binary PGM heatmap, top image row = largest `y`. No-data cells are 0.
pub fn write_scalar_pgm(path: &Path, sf: &ScalarField) -> Result<()> {
    let m = sf.max_abs().unwrap_or(0.0);
    let buf = pgm(sf.data.nx(), sf.data.ny(), |c| sf.data[c].map_or(0, |v| symmetric_gray(v, m)));
    write_bytes(path, &buf)
}

/// Binary PGM of a mask: 255 where set.
pub fn write_mask_pgm(path: &Path, g: &BinaryGrid) -> Result<()> {
    write_bytes(path, &pgm(g.nx(), g.ny(), |c| if g[c] { 255 } else { 0 }))
}
