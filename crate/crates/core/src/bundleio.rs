//! On-disk formats: PTYB1 dataset bundles, trace CSVs, and 16-bit PGM renders.
//!
//! A bundle is a directory holding `manifest.json` and raw little-endian
//! blobs:
//!
//! * `patterns.f32` J x M x M float32, position-major, row-major
//! * `positions.i32` J x 2 int32 (row, col)
//! * `truth_object.c32`, `truth_probe.c32` (optional) interleaved re/im float32
//!
//! Values are computed in f64 and truncated to f32 on write; reading returns
//! the truncated values, so a write/read/write cycle is bit-exact.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{CompareEntry, ErrorTrace, RunStatus};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::simulate::{wrapped_phase, DiffractionStack, GroundTruth, ScanGeometry};

pub const FORMAT_VERSION: &str = "PTYB1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PATTERNS_FILE: &str = "patterns.f32";
pub const POSITIONS_FILE: &str = "positions.i32";
pub const TRUTH_OBJECT_FILE: &str = "truth_object.c32";
pub const TRUTH_PROBE_FILE: &str = "truth_probe.c32";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub dtype: String,
    pub index_dtype: String,
    pub endianness: String,
    pub count: usize,
    pub probe_size: usize,
    pub object_size: usize,
    pub has_truth: bool,
    pub seed: u64,
    pub photons_per_pattern: Option<f64>,
    pub probe_config: Option<String>,
}

/// Scalar metadata stored alongside the arrays.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BundleMeta {
    pub seed: u64,
    pub probe_config: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bundle {
    pub data: DiffractionStack,
    pub geom: ScanGeometry,
    pub truth: Option<GroundTruth>,
    pub manifest: Manifest,
}

/// Writes `bytes` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn f32_bytes(values: impl Iterator<Item = f64>) -> Vec<u8> {
    values.flat_map(|v| (v as f32).to_le_bytes()).collect()
}

pub fn complex_to_bytes(f: &ComplexField) -> Vec<u8> {
    f32_bytes(f.as_slice().iter().flat_map(|z| [z.re, z.im]))
}

pub fn complex_from_bytes(
    bytes: &[u8],
    height: usize,
    width: usize,
    field: &str,
) -> Result<ComplexField> {
    let expected = height * width * 8;
    if bytes.len() != expected {
        return Err(Error::SizeMismatch {
            field: field.to_string(),
            expected,
            found: bytes.len(),
        });
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    ComplexField::from_vec(height, width, data)
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Writes a bundle directory, creating it if needed.
pub fn write_bundle(
    dir: &Path,
    data: &DiffractionStack,
    geom: &ScanGeometry,
    truth: Option<&GroundTruth>,
    meta: &BundleMeta,
) -> Result<Manifest> {
    if data.count() != geom.len() || data.size() != geom.probe_size() {
        return Err(Error::invalid(
            "diffraction stack does not match scan geometry",
        ));
    }
    if let Some(t) = truth {
        t.check(geom)?;
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = Manifest {
        format: FORMAT_VERSION.into(),
        dtype: "float32".into(),
        index_dtype: "int32".into(),
        endianness: "little".into(),
        count: data.count(),
        probe_size: geom.probe_size(),
        object_size: geom.object_size(),
        has_truth: truth.is_some(),
        seed: meta.seed,
        photons_per_pattern: data.photons_per_pattern(),
        probe_config: meta.probe_config.clone(),
    };
    write_atomic(
        &dir.join(PATTERNS_FILE),
        &f32_bytes(data.intensities().iter().copied()),
    )?;
    let positions: Vec<u8> = geom
        .positions()
        .iter()
        .flat_map(|&(r, c)| [r as i32, c as i32])
        .flat_map(i32::to_le_bytes)
        .collect();
    write_atomic(&dir.join(POSITIONS_FILE), &positions)?;
    if let Some(t) = truth {
        write_atomic(&dir.join(TRUTH_OBJECT_FILE), &complex_to_bytes(&t.object))?;
        write_atomic(&dir.join(TRUTH_PROBE_FILE), &complex_to_bytes(&t.probe))?;
    }
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(&dir.join(MANIFEST_FILE), format!("{text}\n").as_bytes())?;
    Ok(manifest)
}

fn parse_manifest(text: &str) -> Result<Manifest> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Manifest {
        field: "manifest".into(),
        reason: e.to_string(),
    })?;
    let format = value
        .get("format")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::Manifest {
            field: "format".into(),
            reason: "missing".into(),
        })?;
    if format != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: format.into(),
            expected: FORMAT_VERSION.into(),
        });
    }
    let manifest: Manifest = serde_json::from_value(value).map_err(|e| Error::Manifest {
        field: "manifest".into(),
        reason: e.to_string(),
    })?;
    for (field, got, want) in [
        ("dtype", &manifest.dtype, "float32"),
        ("index_dtype", &manifest.index_dtype, "int32"),
        ("endianness", &manifest.endianness, "little"),
    ] {
        if got != want {
            return Err(Error::Manifest {
                field: field.into(),
                reason: format!("expected {want:?}, found {got:?}"),
            });
        }
    }
    Ok(manifest)
}

pub fn read_bundle(dir: &Path) -> Result<Bundle> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))
        .map_err(|e| Error::io(dir.join(MANIFEST_FILE), e))?;
    let manifest = parse_manifest(&text)?;
    let (j, m, n) = (manifest.count, manifest.probe_size, manifest.object_size);

    let patterns = read_file(&dir.join(PATTERNS_FILE))?;
    let expected = j * m * m * 4;
    if patterns.len() != expected {
        return Err(Error::SizeMismatch {
            field: "patterns".into(),
            expected,
            found: patterns.len(),
        });
    }
    let intensities: Vec<f64> = patterns
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();

    let positions = read_file(&dir.join(POSITIONS_FILE))?;
    if positions.len() != j * 8 {
        return Err(Error::SizeMismatch {
            field: "positions".into(),
            expected: j * 8,
            found: positions.len(),
        });
    }
    let coords: Vec<i32> = positions
        .chunks_exact(4)
        .map(|c| i32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let positions = coords
        .chunks_exact(2)
        .map(|p| {
            if p[0] < 0 || p[1] < 0 {
                Err(Error::Manifest {
                    field: "positions".into(),
                    reason: format!("negative offset ({}, {})", p[0], p[1]),
                })
            } else {
                Ok((p[0] as usize, p[1] as usize))
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let geom = ScanGeometry::new(positions, m, n)?;
    let data = DiffractionStack::new(m, intensities, manifest.photons_per_pattern)?;
    let truth = if manifest.has_truth {
        Some(GroundTruth {
            object: complex_from_bytes(
                &read_file(&dir.join(TRUTH_OBJECT_FILE))?,
                n,
                n,
                "truth_object",
            )?,
            probe: complex_from_bytes(
                &read_file(&dir.join(TRUTH_PROBE_FILE))?,
                m,
                m,
                "truth_probe",
            )?,
        })
    } else {
        None
    };
    Ok(Bundle {
        data,
        geom,
        truth,
        manifest,
    })
}

/// Options for [`write_trace_csv_with`].
#[derive(Clone, Debug, Default)]
pub struct CsvOptions {
    /// Lines written as `# line` before the header.
    pub comments: Vec<String>,
    /// Appends a `status` column (`ok` or `diverged`).
    pub status_column: bool,
}

/// A labelled trace ready for export.
#[derive(Clone, Debug)]
pub struct LabelledTrace {
    pub label: String,
    pub trace: ErrorTrace,
    pub status: RunStatus,
}

impl From<&CompareEntry> for LabelledTrace {
    fn from(e: &CompareEntry) -> Self {
        Self {
            label: e.preset.to_string(),
            trace: e.trace.clone(),
            status: e.status,
        }
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render_trace_csv(traces: &[LabelledTrace], opts: &CsvOptions) -> String {
    let mut out = String::new();
    for c in &opts.comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str("preset,iter,data_error,object_nrmse,elapsed_ms");
    if opts.status_column {
        out.push_str(",status");
    }
    out.push('\n');
    for t in traces {
        for r in &t.trace.records {
            out.push_str(&t.label);
            out.push(',');
            out.push_str(&r.iteration.to_string());
            out.push(',');
            out.push_str(&fmt_f64(r.data_error));
            out.push(',');
            if let Some(e) = r.object_nrmse {
                out.push_str(&fmt_f64(e));
            }
            out.push(',');
            if let Some(ms) = r.elapsed_ms {
                out.push_str(&fmt_f64(ms));
            }
            if opts.status_column {
                out.push(',');
                out.push_str(t.status.label());
            }
            out.push('\n');
        }
    }
    out
}

/// Header `preset,iter,data_error,object_nrmse,elapsed_ms`, one row per
/// iteration, numbers with 17 significant digits.
pub fn write_trace_csv(traces: &[LabelledTrace], path: &Path) -> Result<()> {
    write_trace_csv_with(traces, path, &CsvOptions::default())
}

pub fn write_trace_csv_with(
    traces: &[LabelledTrace],
    path: &Path,
    opts: &CsvOptions,
) -> Result<()> {
    write_atomic(path, render_trace_csv(traces, opts).as_bytes())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderKind {
    Modulus,
    Phase,
}

/// 16-bit grayscale samples: modulus scaled `[0, max] -> [0, 65535]`, phase
/// mapped `[-pi, pi) -> [0, 65535]`.
pub fn render_levels(f: &ComplexField, kind: RenderKind) -> Vec<u16> {
    match kind {
        RenderKind::Modulus => {
            let max = f.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
            f.as_slice()
                .iter()
                .map(|z| {
                    if max > 0.0 {
                        (z.norm() / max * 65535.0).round().clamp(0.0, 65535.0) as u16
                    } else {
                        0
                    }
                })
                .collect()
        }
        RenderKind::Phase => f
            .as_slice()
            .iter()
            .map(|&z| {
                let t = (wrapped_phase(z) + PI) / (2.0 * PI);
                (t * 65536.0).floor().clamp(0.0, 65535.0) as u16
            })
            .collect(),
    }
}

/// Binary 16-bit PGM (P5, big-endian samples).
pub fn render_field(f: &ComplexField, kind: RenderKind, path: &Path) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n65535\n", f.width(), f.height()).into_bytes();
    bytes.extend(
        render_levels(f, kind)
            .into_iter()
            .flat_map(u16::to_be_bytes),
    );
    write_atomic(path, &bytes)
}

/// Writes a complex field as an interleaved float32 blob with a small JSON
/// sidecar (`<path>.json`) recording its shape.
pub fn write_complex_blob(f: &ComplexField, path: &Path) -> Result<()> {
    write_atomic(path, &complex_to_bytes(f))?;
    let sidecar = serde_json::json!({
        "dtype": "complex64-interleaved-float32",
        "endianness": "little",
        "height": f.height(),
        "width": f.width(),
    });
    let mut side = PathBuf::from(path);
    side.as_mut_os_string().push(".json");
    write_atomic(&side, format!("{sidecar}\n").as_bytes())
}

pub fn read_complex_blob(path: &Path) -> Result<ComplexField> {
    let mut side = PathBuf::from(path);
    side.as_mut_os_string().push(".json");
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Manifest {
        field: "sidecar".into(),
        reason: e.to_string(),
    })?;
    let dim = |k: &str| -> Result<usize> {
        v.get(k)
            .and_then(|x| x.as_u64())
            .map(|x| x as usize)
            .ok_or_else(|| Error::Manifest {
                field: k.into(),
                reason: "missing or not an integer".into(),
            })
    };
    complex_from_bytes(&read_file(path)?, dim("height")?, dim("width")?, "blob")
}
