//! Artifact emission: snapshots, the diagnostics CSV, and JSON reports.
//!
//! Snapshot format: one raw little-endian `f64` file per field
//! (row-major over sites, packed per-site layout), plus a JSON sidecar
//! describing the lattice, the field layouts, and the frame convention.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spinflow_core::field::{Field, Pair};
use spinflow_core::flow::{DiagnosticsRow, FlowSink};
use spinflow_core::lattice::{FdOrder, TorusLattice};
use spinflow_core::linalg::sym_len;
use spinflow_core::scalar::Scalar;

use crate::config::RunConfig;
use crate::errors::{setup_err, CliError, CliResult};

pub const CSV_HEADER: &str = "step,t,E,E_s,Q_l2,bianchi,vol,unit_dev,min_eig,dt";

/// JSON sidecar of a snapshot.
#[derive(Debug, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub n: usize,
    pub size: usize,
    pub length: f64,
    pub fd_order: usize,
    pub step: usize,
    /// Orthonormal-frame convention the spinor components refer to.
    pub frame: String,
    /// `"f64"` or `"complex64"` (interleaved re, im lanes).
    pub scalar: String,
    pub metric_file: String,
    pub metric_per_site: usize,
    pub metric_layout: String,
    pub spinor_file: String,
    pub spinor_per_site: usize,
    pub spinor_layout: String,
}

fn write_f64_file(path: &Path, values: impl Iterator<Item = f64>) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_f64_file(path: &Path) -> CliResult<Vec<f64>> {
    let mut bytes = Vec::new();
    File::open(path)
        .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?
        .read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(CliError::Config(format!(
            "{}: length {} is not a multiple of 8 bytes",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

/// Writes `snap_<step>.g.f64`, `snap_<step>.phi.f64`, and the sidecar
/// `snap_<step>.json` into `dir`; returns the sidecar path.
pub fn write_snapshot<S: Scalar>(
    dir: &Path,
    step: usize,
    lat: &TorusLattice,
    pair: &Pair<S>,
) -> CliResult<PathBuf> {
    let base = format!("snap_{step:06}");
    let metric_file = format!("{base}.g.f64");
    let spinor_file = format!("{base}.phi.f64");
    write_f64_file(&dir.join(&metric_file), pair.g.data().iter().copied())?;
    write_f64_file(
        &dir.join(&spinor_file),
        pair.phi.data().iter().flat_map(|v| {
            let mut lanes = [0.0f64; 2];
            lanes[0] = v.re();
            lanes[1] = v.im();
            lanes.into_iter().take(S::LANES)
        }),
    )?;
    let sidecar = Sidecar {
        format: "lattice-fields-v1".to_string(),
        n: lat.n(),
        size: lat.size(),
        length: lat.length(),
        fd_order: match lat.order() {
            FdOrder::Two => 2,
            FdOrder::Four => 4,
        },
        step,
        frame: "b = g^{-1/2} (symmetric square root of the inverse metric)".to_string(),
        scalar: if S::LANES == 2 { "complex64" } else { "f64" }.to_string(),
        metric_file,
        metric_per_site: pair.g.per_site(),
        metric_layout: "packed upper-triangular g_{ij}, i <= j, row-major sites".to_string(),
        spinor_file,
        spinor_per_site: pair.phi.per_site() * S::LANES,
        spinor_layout: if S::LANES == 2 {
            "spinor components in the frame, (re, im) interleaved, row-major sites"
        } else {
            "spinor components in the frame, row-major sites"
        }
        .to_string(),
    };
    let path = dir.join(format!("{base}.json"));
    let mut w = BufWriter::new(File::create(&path)?);
    serde_json::to_writer_pretty(&mut w, &sidecar)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(path)
}

/// Reads a real-scalar snapshot back (the dimension-seven layout used
/// by the 3-form bridge).
pub fn read_snapshot_f64(sidecar_path: &Path) -> CliResult<(Sidecar, TorusLattice, Pair<f64>)> {
    let text = fs::read_to_string(sidecar_path).map_err(|e| {
        CliError::Config(format!("cannot read sidecar {}: {e}", sidecar_path.display()))
    })?;
    let sc: Sidecar = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", sidecar_path.display())))?;
    if sc.format != "lattice-fields-v1" {
        return Err(CliError::Config(format!(
            "{}: unknown snapshot format {:?}",
            sidecar_path.display(),
            sc.format
        )));
    }
    if sc.scalar != "f64" {
        return Err(CliError::Config(format!(
            "{}: scalar layout {:?} is not supported here (need \"f64\")",
            sidecar_path.display(),
            sc.scalar
        )));
    }
    let order = match sc.fd_order {
        2 => FdOrder::Two,
        4 => FdOrder::Four,
        other => {
            return Err(CliError::Config(format!(
                "{}: bad fd_order {other}",
                sidecar_path.display()
            )))
        }
    };
    let lat = TorusLattice::new(sc.n, sc.size, sc.length, order).map_err(setup_err)?;
    let dir = sidecar_path.parent().unwrap_or(Path::new("."));
    let gv = read_f64_file(&dir.join(&sc.metric_file))?;
    let pv = read_f64_file(&dir.join(&sc.spinor_file))?;
    if sc.metric_per_site != sym_len(sc.n)
        || gv.len() != lat.num_sites() * sc.metric_per_site
        || pv.len() != lat.num_sites() * sc.spinor_per_site
    {
        return Err(CliError::Config(format!(
            "{}: field sizes do not match the declared lattice",
            sidecar_path.display()
        )));
    }
    let mut g = Field::new(&lat, sc.metric_per_site, 0.0f64);
    g.data_mut().copy_from_slice(&gv);
    let mut phi = Field::new(&lat, sc.spinor_per_site, 0.0f64);
    phi.data_mut().copy_from_slice(&pv);
    Ok((sc, lat, Pair { g, phi }))
}

/// Flow sink writing `diagnostics.csv` (flushed after every row, so a
/// halted run leaves a valid partial file) and periodic snapshots.
pub struct DirSink<'a> {
    dir: PathBuf,
    lat: &'a TorusLattice,
    csv: BufWriter<File>,
    pub snapshots: Vec<PathBuf>,
    pub first_error: Option<CliError>,
}

impl<'a> DirSink<'a> {
    pub fn new(dir: &Path, lat: &'a TorusLattice) -> CliResult<Self> {
        let mut csv = BufWriter::new(File::create(dir.join("diagnostics.csv"))?);
        writeln!(csv, "{CSV_HEADER}")?;
        csv.flush()?;
        Ok(DirSink {
            dir: dir.to_path_buf(),
            lat,
            csv,
            snapshots: Vec::new(),
            first_error: None,
        })
    }

    fn try_row(&mut self, r: &DiagnosticsRow) -> CliResult<()> {
        writeln!(
            self.csv,
            "{},{},{},{},{},{},{},{},{},{}",
            r.step,
            r.t,
            r.energy,
            r.s_energy,
            r.q_l2,
            r.bianchi,
            r.volume,
            r.max_unit_dev,
            r.min_metric_eig,
            r.dt
        )?;
        self.csv.flush()?;
        Ok(())
    }

    fn note(&mut self, res: CliResult<()>) {
        if let Err(e) = res {
            if self.first_error.is_none() {
                self.first_error = Some(e);
            }
        }
    }
}

impl<'a, S: Scalar> FlowSink<S> for DirSink<'a> {
    fn on_row(&mut self, row: &DiagnosticsRow) {
        let res = self.try_row(row);
        self.note(res);
    }

    fn on_snapshot(&mut self, step: usize, pair: &Pair<S>) {
        let res = write_snapshot(&self.dir, step, self.lat, pair).map(|p| {
            self.snapshots.push(p);
        });
        self.note(res);
    }
}

/// Writes the config echo and the report JSON into `out` (when given),
/// or prints the report to stdout. The report is enriched with the
/// version string and the wall time.
pub fn emit_report(
    out: Option<&Path>,
    cfg: &RunConfig,
    mut report: serde_json::Value,
    wall_seconds: f64,
) -> CliResult<()> {
    if let serde_json::Value::Object(ref mut map) = report {
        map.insert(
            "version".to_string(),
            serde_json::Value::String(format!(
                "{} {}",
                env!("CARGO_PKG_NAME"),
                env!("CARGO_PKG_VERSION")
            )),
        );
        map.insert("wall_time_seconds".to_string(), wall_seconds.into());
        map.insert(
            "config".to_string(),
            serde_json::to_value(cfg.resolved_map())?,
        );
    }
    let text = format!("{}\n", serde_json::to_string_pretty(&report)?);
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("config.txt"), cfg.echo())?;
            fs::write(dir.join("report.json"), text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// The effective-config echo for directories that are prepared before
/// the run starts (the flow wants partial artifacts on failure).
pub fn write_config_echo(dir: &Path, cfg: &RunConfig) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.txt"), cfg.echo())?;
    Ok(())
}

