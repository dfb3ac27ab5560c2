//! Deterministic CSV and manifest emission.
//!
//! Every number is printed with a fixed 12-digit scientific format, so
//! re-running a job with the same configuration and seed produces
//! byte-identical files. CSV follows RFC 4180 (CRLF record separators,
//! header row); fields here never need quoting.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::bistability::Hysteresis;
use crate::error::{Error, Result};
use crate::fokkerplanck::{MapSlices, ResponsivityMap};
use crate::sde::{ComparisonRow, SweepUpReport, Trajectory};
use crate::sensitivity::{FloorSweepPoint, TimeSweep};
use crate::units::{PLANCK, SPEED_OF_LIGHT};

/// Fixed-width float format used in every CSV cell.
pub fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.12e}")
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Config(format!("cannot write {}: {e}", path.display()))
}

/// Write one CSV file. All rows must have the header's arity.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = |fields: &mut dyn Iterator<Item = &str>| -> std::io::Result<()> {
        let mut first = true;
        for f in fields {
            if !first {
                w.write_all(b",")?;
            }
            w.write_all(f.as_bytes())?;
            first = false;
        }
        w.write_all(b"\r\n")
    };
    emit(&mut header.iter().copied()).map_err(|e| io_err(path, e))?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        emit(&mut row.iter().map(String::as_str)).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Sensitivity versus averaging time for the three probe schemes.
pub fn write_time_sweep(path: &Path, sweep: &TimeSweep) -> Result<()> {
    let rows: Vec<Vec<String>> = sweep
        .gain
        .t
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            vec![
                fmt_f(t),
                fmt_f(sweep.gain.dalpha2[k]),
                fmt_f(sweep.empty.dalpha2[k]),
            ]
        })
        .collect();
    write_csv(path, &["t", "dalpha2_gain", "dalpha2_empty"], &rows)
}

/// Optimized laser scheme against the empty cavity as the technical
/// floor varies.
pub fn write_floor_sweep(path: &Path, points: &[FloorSweepPoint], i_e: f64) -> Result<()> {
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                fmt_f(p.v_t),
                fmt_f(p.point.dalpha2_at_t),
                fmt_f(p.dalpha2_empty),
                fmt_f(p.point.intensity),
                fmt_f(i_e),
            ]
        })
        .collect();
    write_csv(
        path,
        &["v_t", "dalpha2_gain", "dalpha2_empty", "i_opt", "i_e"],
        &rows,
    )
}

fn write_grid(path: &Path, map: &ResponsivityMap, body: &[Vec<f64>]) -> Result<()> {
    let mut header: Vec<String> = vec!["gain_rate".to_string()];
    header.extend(map.drives.iter().map(|&d| fmt_f(d)));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = map
        .gains
        .iter()
        .enumerate()
        .map(|(gi, &g)| {
            let mut row = vec![fmt_f(g)];
            row.extend(body[gi].iter().map(|&v| fmt_f(v)));
            row
        })
        .collect();
    write_csv(path, &header_refs, &rows)
}

/// |responsivity| in meters on the drive x gain grid: header row carries
/// the drive values, the first column the gain rates.
pub fn write_responsivity_map(path: &Path, map: &ResponsivityMap) -> Result<()> {
    write_grid(path, map, &map.magnitude)
}

/// Companion grid of mean intensities (photons).
pub fn write_intensity_map(path: &Path, map: &ResponsivityMap) -> Result<()> {
    write_grid(path, map, &map.mean_intensity)
}

/// Responsivity slices at zero and non-zero drive, with the
/// no-spontaneous-emission classical reference c/2gamma'.
pub fn write_slices_responsivity(path: &Path, s: &MapSlices) -> Result<()> {
    let rows: Vec<Vec<String>> = s
        .gains
        .iter()
        .enumerate()
        .map(|(k, &g)| {
            vec![
                fmt_f(g),
                fmt_f(s.rbar_zero_drive[k]),
                fmt_f(s.rbar_driven[k]),
                fmt_f(s.rbar_classical[k]),
            ]
        })
        .collect();
    write_csv(
        path,
        &[
            "gain_rate",
            "rbar_zero_drive",
            "rbar_driven",
            "rbar_classical",
        ],
        &rows,
    )
}

/// Mean-intensity slices matching [`write_slices_responsivity`].
pub fn write_slices_intensity(path: &Path, s: &MapSlices) -> Result<()> {
    let rows: Vec<Vec<String>> = s
        .gains
        .iter()
        .enumerate()
        .map(|(k, &g)| {
            vec![
                fmt_f(g),
                fmt_f(s.intensity_zero_drive[k]),
                fmt_f(s.intensity_driven[k]),
                fmt_f(s.intensity_classical[k]),
            ]
        })
        .collect();
    write_csv(
        path,
        &["gain_rate", "i_zero_drive", "i_driven", "i_classical"],
        &rows,
    )
}

/// All steady-state branches per input power: up to three roots with
/// stability flags; absent roots are left empty.
pub fn write_branches(path: &Path, h: &Hysteresis) -> Result<()> {
    let rows: Vec<Vec<String>> =
        h.p0.iter()
            .enumerate()
            .map(|(k, &p0)| {
                let mut row = vec![fmt_f(p0)];
                for j in 0..3 {
                    match h.states[k].get(j) {
                        Some(s) => {
                            row.push(fmt_f(s.intensity));
                            row.push((s.stable as u8).to_string());
                        }
                        None => {
                            row.push(String::new());
                            row.push(String::new());
                        }
                    }
                }
                row
            })
            .collect();
    write_csv(
        path,
        &[
            "p0", "i_root1", "stable1", "i_root2", "stable2", "i_root3", "stable3",
        ],
        &rows,
    )
}

/// One hysteresis branch (power, followed intensity).
pub fn write_sweep_branch(path: &Path, p0: &[f64], intensity: &[f64]) -> Result<()> {
    let rows: Vec<Vec<String>> = p0
        .iter()
        .zip(intensity)
        .map(|(&p, &i)| vec![fmt_f(p), fmt_f(i)])
        .collect();
    write_csv(path, &["p0", "intensity"], &rows)
}

/// Differential switch-time shots.
pub fn write_shots(path: &Path, report: &SweepUpReport) -> Result<()> {
    let rows: Vec<Vec<String>> = report
        .shots
        .iter()
        .map(|s| {
            vec![
                s.shot.to_string(),
                fmt_f(s.switch_time_a),
                fmt_f(s.switch_time_b),
                s.sign_of_differential.to_string(),
                fmt_f(s.estimate),
            ]
        })
        .collect();
    write_csv(
        path,
        &["shot", "switch_time_a", "switch_time_b", "sign", "estimate"],
        &rows,
    )
}

/// Timing-versus-slope-fit estimator summary per drift value.
pub fn write_comparison(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt_f(r.gain_drift),
                fmt_f(r.timing.mean),
                fmt_f(r.timing.rms_about_mean),
                fmt_f(r.timing.bias),
                fmt_f(r.crds.mean),
                fmt_f(r.crds.rms_about_mean),
                fmt_f(r.crds.bias),
            ]
        })
        .collect();
    write_csv(
        path,
        &[
            "gain_drift",
            "timing_mean",
            "timing_rms",
            "timing_bias",
            "crds_mean",
            "crds_rms",
            "crds_bias",
        ],
        &body,
    )
}

/// Recorded trajectory samples; `output_factor` converts photons to the
/// detected power (hbar omega kappa_C).
pub fn write_trajectory(path: &Path, traj: &Trajectory, output_factor: f64) -> Result<()> {
    let rows: Vec<Vec<String>> = traj
        .t
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            vec![
                fmt_f(t),
                fmt_f(traj.e1[k]),
                fmt_f(traj.e2[k]),
                fmt_f(traj.intensity[k]),
                fmt_f(output_factor * traj.intensity[k]),
            ]
        })
        .collect();
    write_csv(
        path,
        &["t", "e1", "e2", "intensity", "recorded_output"],
        &rows,
    )
}

/// Physical constants recorded with every run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Constants {
    pub speed_of_light: f64,
    pub planck: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            speed_of_light: SPEED_OF_LIGHT,
            planck: PLANCK,
        }
    }
}

/// Everything needed to reproduce a run: the resolved configuration, the
/// constants, the artifact version and the seed. No timestamps, so the
/// manifest itself is deterministic.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub constants: Constants,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            constants: Constants::default(),
            config,
            outputs: Vec::new(),
        }
    }
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Config(format!("manifest serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_stable() {
        assert_eq!(fmt_f(1.0), "1.000000000000e0");
        assert_eq!(fmt_f(-2.5e-7), "-2.500000000000e-7");
        assert_eq!(fmt_f(f64::NAN), "NaN");
    }

    #[test]
    fn csv_uses_crlf_and_headers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(
            &path,
            &["a", "b"],
            &[vec!["1".to_string(), "2".to_string()]],
        )
        .unwrap();
        let text = std::fs::read(&path).unwrap();
        assert_eq!(text, b"a,b\r\n1,2\r\n");
    }

    #[test]
    fn manifest_round_trips_and_has_no_timestamp() {
        let m = Manifest::new("demo", 7, serde_json::json!({"x": 1}));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        write_manifest(&path, &m).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["seed"], 7);
        assert_eq!(v["command"], "demo");
        assert!(text.to_lowercase().find("time").is_none());
        // Identical content on rewrite.
        let before = std::fs::read(&path).unwrap();
        write_manifest(&path, &m).unwrap();
        assert_eq!(before, std::fs::read(&path).unwrap());
    }
}
