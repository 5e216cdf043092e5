//! CSV and JSON file formats.
//!
//! Numbers are written with 9 significant digits. Every file is written to a
//! temporary file in the target directory and renamed into place.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    BandSpectrum, DampedHarmonic, LpsrsSet, ModalTable, Mode, Platform, SpectrumKind, SrsCurve, TimeSeries,
};
use crate::transmissibility::{FrfCurve, FrfSource};

pub const SIGNIFICANT_DIGITS: usize = 9;

/// Relative jitter allowed in the time column of a record.
pub const TIME_JITTER: f64 = 1e-6;

/// Rounds to 9 significant digits.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().unwrap_or(v)
}

/// Shortest text that reads back as `round_sig(v)`.
pub fn format_number(v: f64) -> String {
    let r = round_sig(v);
    if r == 0.0 {
        return "0".into();
    }
    let a = r.abs();
    if (1e-4..1e15).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// Writes `bytes` to `path` atomically.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// `dir/stem.json` for `dir/stem.csv`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// `dir/stem<suffix>` for `dir/stem.ext`.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

/// A parsed CSV file: optional header and numbered rows.
struct Table {
    path: PathBuf,
    header: Option<Vec<String>>,
    rows: Vec<(u64, Vec<String>)>,
}

impl Table {
    fn read(path: &Path) -> Result<Table> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(path, &text)
    }

    fn parse(path: &Path, text: &str) -> Result<Table> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse {
                path: path.into(),
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.iter().all(|c| c.is_empty()) {
                continue;
            }
            rows.push((line, rec.iter().map(str::to_owned).collect::<Vec<_>>()));
        }
        let header = match rows.first() {
            Some((_, first)) if first.iter().any(|c| c.parse::<f64>().is_err()) => Some(rows.remove(0).1),
            _ => None,
        };
        Ok(Table {
            path: path.into(),
            header,
            rows,
        })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| Error::MissingColumn {
                path: self.path.clone(),
                column: name.into(),
            })
    }

    fn parse_err(&self, line: u64, message: String) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message,
        }
    }

    /// Cell `col` of a row as a number; `None` for an empty cell.
    fn cell(&self, line: u64, row: &[String], col: usize) -> Result<Option<f64>> {
        let raw = row
            .get(col)
            .ok_or_else(|| self.parse_err(line, format!("expected at least {} fields, found {}", col + 1, row.len())))?;
        if raw.is_empty() {
            return Ok(None);
        }
        raw.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Some)
            .ok_or_else(|| {
                let name = self.header.as_ref().and_then(|h| h.get(col)).map_or("", |s| s.as_str());
                self.parse_err(line, format!("invalid number `{raw}` in column {} {name}", col + 1))
            })
    }

    fn number(&self, line: u64, row: &[String], col: usize) -> Result<f64> {
        self.cell(line, row, col)?
            .ok_or_else(|| self.parse_err(line, format!("empty field in column {}", col + 1)))
    }

    fn numbers(&self, names: &[&str]) -> Result<Vec<Vec<f64>>> {
        let cols = names.iter().map(|n| self.column(n)).collect::<Result<Vec<_>>>()?;
        self.rows
            .iter()
            .map(|(line, row)| cols.iter().map(|&c| self.number(*line, row, c)).collect())
            .collect()
    }

    fn require_rows(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::Data(format!("{}: no data rows", self.path.display())));
        }
        Ok(())
    }
}

fn csv_text(header: &[String], rows: impl Iterator<Item = Vec<Option<f64>>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.map(format_number).unwrap_or_default()).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.into(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

/// Reads a record: either `time_s,accel_m_s2` with a uniform time column, or
/// a single headerless column sampled at `sample_rate`.
pub fn read_timeseries(path: &Path, sample_rate: Option<f64>) -> Result<TimeSeries> {
    let t = Table::read(path)?;
    t.require_rows()?;
    if t.header.is_none() {
        let fs = sample_rate.ok_or_else(|| {
            Error::Contract(format!("{}: headerless record needs a sample rate (--fs)", path.display()))
        })?;
        let samples = t
            .rows
            .iter()
            .map(|(line, row)| {
                if row.len() != 1 {
                    return Err(t.parse_err(*line, format!("expected 1 field, found {}", row.len())));
                }
                t.number(*line, row, 0)
            })
            .collect::<Result<Vec<f64>>>()?;
        return TimeSeries::new(fs, 0.0, samples);
    }
    let data = t.numbers(&["time_s", "accel_m_s2"])?;
    if data.len() < 2 {
        return Err(Error::Data(format!("{}: a record needs at least 2 samples", path.display())));
    }
    let n = data.len();
    let (t0, t1) = (data[0][0], data[n - 1][0]);
    let dt = (t1 - t0) / (n - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::Data(format!("{}: time column must increase", path.display())));
    }
    for (k, row) in data.iter().enumerate() {
        let expected = t0 + k as f64 * dt;
        // allow for the 9-digit quantisation of large time stamps
        let tol = TIME_JITTER * dt + 1e-8 * row[0].abs().max(t0.abs());
        if (row[0] - expected).abs() > tol {
            return Err(t.parse_err(t.rows[k].0, format!("non-uniform time step at t = {}", row[0])));
        }
    }
    let fs = round_sig(1.0 / dt);
    if let Some(given) = sample_rate {
        if (given - fs).abs() > 1e-6 * fs {
            log::warn!("{}: --fs {given} ignored, time column gives {fs} Hz", path.display());
        }
    }
    TimeSeries::new(fs, t0, data.into_iter().map(|r| r[1]).collect())
}

pub fn timeseries_csv(x: &TimeSeries) -> String {
    let header = ["time_s".to_string(), "accel_m_s2".to_string()];
    csv_text(
        &header,
        x.samples().iter().enumerate().map(|(k, v)| vec![Some(x.time_at(k)), Some(*v)]),
    )
}

pub fn write_timeseries(path: &Path, x: &TimeSeries) -> Result<()> {
    write_atomic(path, timeseries_csv(x).as_bytes())
}

/// Metadata written next to an SRS curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub kind: SpectrumKind,
    pub damping_ratio: f64,
    /// Option values and where each came from (flag, config file or default).
    #[serde(default)]
    pub settings: BTreeMap<String, String>,
}

pub fn srs_csv(curve: &SrsCurve) -> String {
    let header = ["freq_hz".to_string(), "srs_m_s2".to_string()];
    csv_text(&header, curve.points().map(|(f, a)| vec![Some(f), Some(a)]))
}

/// Writes `freq_hz,srs_m_s2` and a JSON sidecar.
pub fn write_srs(path: &Path, curve: &SrsCurve, settings: &BTreeMap<String, String>) -> Result<()> {
    write_atomic(path, srs_csv(curve).as_bytes())?;
    let meta = CurveMeta {
        kind: curve.kind(),
        damping_ratio: round_sig(curve.damping_ratio()),
        settings: settings.clone(),
    };
    write_json(&sidecar_path(path), &meta)
}

/// Reads an SRS curve: frequency in the first column named `freq_hz`,
/// amplitude in the second. Kind and damping come from the sidecar when it
/// exists, else absolute-max at `default_damping`.
pub fn read_srs(path: &Path, default_damping: f64) -> Result<SrsCurve> {
    let t = Table::read(path)?;
    t.require_rows()?;
    let fcol = t.column("freq_hz")?;
    let acol = if fcol == 0 { 1 } else { 0 };
    let (mut f, mut a) = (Vec::new(), Vec::new());
    for (line, row) in &t.rows {
        f.push(t.number(*line, row, fcol)?);
        a.push(t.number(*line, row, acol)?);
    }
    let side = sidecar_path(path);
    let (kind, xi) = if side.exists() {
        let m: CurveMeta = read_json(&side)?;
        (m.kind, m.damping_ratio)
    } else {
        (SpectrumKind::AbsoluteMax, default_damping)
    };
    SrsCurve::new(kind, xi, f, a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandMeta {
    pub lower_hz: f64,
    pub upper_hz: f64,
    /// A_i = max |A_i(t)|.
    pub peak: f64,
}

/// Metadata written next to an LPSRS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpsrsMeta {
    pub kind: SpectrumKind,
    pub damping_ratio: f64,
    pub cutoffs_hz: Vec<f64>,
    pub platforms: Vec<Platform>,
    /// A^i − A^{i−1}, clamped at zero.
    pub band_amplitudes: Vec<f64>,
    pub bands: Vec<BandMeta>,
    #[serde(default)]
    pub settings: BTreeMap<String, String>,
}

fn column_name(prefix: &str, v: f64) -> String {
    format!("{prefix}{}", format_number(v))
}

fn union_grid(curves: &[&SrsCurve]) -> Vec<f64> {
    let mut all: Vec<f64> = curves.iter().flat_map(|c| c.frequencies().iter().copied()).collect();
    all.sort_by(|a, b| a.total_cmp(b));
    all.dedup();
    all
}

fn curves_csv(header: Vec<String>, curves: &[&SrsCurve]) -> String {
    let grid = union_grid(curves);
    let rows = grid.iter().map(|&f| {
        let mut row = vec![Some(f)];
        row.extend(curves.iter().map(|c| {
            c.frequencies()
                .binary_search_by(|g| g.total_cmp(&f))
                .ok()
                .map(|i| c.amplitudes()[i])
        }));
        row
    });
    csv_text(&header, rows)
}

/// Writes `stem.csv` (`freq_hz,lp_<cutoff>...`), `stem.bands.csv`
/// (`freq_hz,band_<i>...`, when band spectra are present) and `stem.json`.
pub fn write_lpsrs(path: &Path, set: &LpsrsSet, band_amplitudes: &[f64], settings: &BTreeMap<String, String>) -> Result<()> {
    let mut header = vec!["freq_hz".to_string()];
    header.extend(set.cutoffs().iter().map(|fc| column_name("lp_", *fc)));
    let curves: Vec<&SrsCurve> = set.curves().iter().collect();
    write_atomic(path, curves_csv(header, &curves).as_bytes())?;

    if !set.bands().is_empty() {
        let mut header = vec!["freq_hz".to_string()];
        header.extend((1..=set.bands().len()).map(|i| format!("band_{i}")));
        let curves: Vec<&SrsCurve> = set.bands().iter().map(|b| &b.curve).collect();
        write_atomic(&with_suffix(path, ".bands.csv"), curves_csv(header, &curves).as_bytes())?;
    }

    let meta = LpsrsMeta {
        kind: set.curves()[0].kind(),
        damping_ratio: round_sig(set.damping_ratio()),
        cutoffs_hz: set.cutoffs().iter().map(|v| round_sig(*v)).collect(),
        platforms: set
            .platforms()
            .iter()
            .map(|p| Platform {
                amplitude: round_sig(p.amplitude),
                spread: round_sig(p.spread),
                flat: p.flat,
            })
            .collect(),
        band_amplitudes: band_amplitudes.iter().map(|v| round_sig(*v)).collect(),
        bands: set
            .bands()
            .iter()
            .map(|b| BandMeta {
                lower_hz: round_sig(b.lower),
                upper_hz: round_sig(b.upper),
                peak: round_sig(b.peak),
            })
            .collect(),
        settings: settings.clone(),
    };
    write_json(&sidecar_path(path), &meta)
}

fn read_curves(path: &Path, prefix: &str, count: usize, kind: SpectrumKind, xi: f64) -> Result<Vec<SrsCurve>> {
    let t = Table::read(path)?;
    t.require_rows()?;
    let fcol = t.column("freq_hz")?;
    let cols: Vec<usize> = t
        .header
        .as_ref()
        .map(|h| h.iter().enumerate().filter(|(_, c)| c.starts_with(prefix)).map(|(i, _)| i).collect())
        .unwrap_or_default();
    if cols.len() != count {
        return Err(Error::Contract(format!(
            "{}: expected {count} `{prefix}*` columns, found {}",
            path.display(),
            cols.len()
        )));
    }
    let mut f = vec![Vec::new(); count];
    let mut a = vec![Vec::new(); count];
    for (line, row) in &t.rows {
        let freq = t.number(*line, row, fcol)?;
        for (k, &c) in cols.iter().enumerate() {
            if let Some(v) = t.cell(*line, row, c)? {
                f[k].push(freq);
                a[k].push(v);
            }
        }
    }
    f.into_iter().zip(a).map(|(f, a)| SrsCurve::new(kind, xi, f, a)).collect()
}

/// Reads an LPSRS written by [`write_lpsrs`]; the sidecar is required.
pub fn read_lpsrs(path: &Path) -> Result<LpsrsSet> {
    let meta: LpsrsMeta = read_json(&sidecar_path(path))?;
    let n = meta.cutoffs_hz.len();
    let curves = read_curves(path, "lp_", n, meta.kind, meta.damping_ratio)?;
    let bands_path = with_suffix(path, ".bands.csv");
    let bands = if bands_path.exists() && !meta.bands.is_empty() {
        read_curves(&bands_path, "band_", meta.bands.len(), meta.kind, meta.damping_ratio)?
            .into_iter()
            .zip(&meta.bands)
            .map(|(curve, b)| BandSpectrum {
                lower: b.lower_hz,
                upper: b.upper_hz,
                curve,
                peak: b.peak,
            })
            .collect()
    } else {
        Vec::new()
    };
    LpsrsSet::new(meta.cutoffs_hz, curves, meta.platforms, bands)
}

pub const MODAL_COLUMNS: [&str; 5] = ["order", "freq_hz", "participation", "mode_shape", "eff_mass_kg"];

pub fn read_modal(path: &Path) -> Result<ModalTable> {
    let t = Table::read(path)?;
    t.require_rows()?;
    let rows = t.numbers(&MODAL_COLUMNS)?;
    let modes = rows
        .iter()
        .zip(&t.rows)
        .map(|(r, (line, _))| {
            if r[0] < 0.0 || r[0].fract() != 0.0 {
                return Err(t.parse_err(*line, format!("mode order must be a non-negative integer, got {}", r[0])));
            }
            Ok(Mode {
                order: r[0] as u32,
                natural_frequency: r[1],
                participation: r[2],
                mode_shape: r[3],
                effective_mass: r[4],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ModalTable::new(modes)
}

pub fn write_modal(path: &Path, modal: &ModalTable) -> Result<()> {
    let header: Vec<String> = MODAL_COLUMNS.iter().map(|s| s.to_string()).collect();
    let rows = modal.modes().iter().map(|m| {
        vec![
            Some(m.order as f64),
            Some(m.natural_frequency),
            Some(m.participation),
            Some(m.mode_shape),
            Some(m.effective_mass),
        ]
    });
    write_atomic(path, csv_text(&header, rows).as_bytes())
}

/// Reads `freq_hz,magnitude`.
pub fn read_frf(path: &Path, source: FrfSource) -> Result<FrfCurve> {
    let t = Table::read(path)?;
    t.require_rows()?;
    let rows = t.numbers(&["freq_hz", "magnitude"])?;
    FrfCurve::new(rows.iter().map(|r| r[0]).collect(), rows.iter().map(|r| r[1]).collect(), source)
}

pub const COMPONENT_COLUMNS: [&str; 4] = ["amplitude_m_s2", "freq_hz", "damping", "onset_s"];

/// Reads damped-harmonic components `amplitude_m_s2,freq_hz,damping,onset_s`.
pub fn read_components(path: &Path) -> Result<Vec<DampedHarmonic>> {
    let t = Table::read(path)?;
    let rows = t.numbers(&COMPONENT_COLUMNS)?;
    rows.iter()
        .zip(&t.rows)
        .map(|(r, (line, _))| {
            DampedHarmonic::new(r[0], r[1], r[2], r[3]).map_err(|e| t.parse_err(*line, e.to_string()))
        })
        .collect()
}

/// Writes a JSON document (reports, summaries).
pub fn write_report<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_json(path, value)
}
