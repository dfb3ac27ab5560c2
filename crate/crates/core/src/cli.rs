//! Command-line front end: one subcommand per produced dataset plus a
//! generic trajectory runner.
//!
//! Every subcommand reads an optional JSON job description
//! (`--config`), applies defaults for anything omitted, and writes CSV
//! files plus a `manifest.json` into `--out`. Unknown keys are rejected
//! so a typo cannot silently fall back to a default. `--dry-run` prints
//! the manifest that a real run would produce and writes nothing.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bistability::BistableCavity;
use crate::error::{Error, Result};
use crate::fokkerplanck::{i_sat_from_eta0, map_slices, responsivity_map, FpParams};
use crate::output::{self, Manifest};
use crate::sde::{
    estimator_comparison_random, ringdown_prediction, sweep_up_experiment, Drive, RingdownConfig,
    SdeConfig, SweepUpConfig, TimingEstimator,
};
use crate::sensitivity::{
    floor_sweep, optimize_operating_point, time_sweep, FloorSweepConfig, OptimizeConfig,
    TimeSweepConfig,
};
use crate::units::{
    per_cm_to_per_m, CavityGeometry, MediumKind, MediumSpec, NoiseBudget, TraceGas, SPEED_OF_LIGHT,
};

#[derive(Parser, Debug)]
#[command(
    name = "cavlab",
    version,
    about = "Intracavity absorption spectroscopy laboratory"
)]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// JSON job description ("-" reads stdin); defaults are used when
    /// omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the job's random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Resolve and print the manifest without computing or writing.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sensitivity vs averaging time and vs technical floor for the
    /// laser and empty-cavity schemes.
    Sensitivity,
    /// Responsivity magnitude over the drive x gain plane, with slices.
    HeartMap,
    /// Steady-state branches and hysteresis of a saturable absorber.
    Bistability,
    /// Differential switch-time absorption measurement.
    SweepUp,
    /// Decay-timing versus slope-fit estimator comparison.
    Ringdown,
    /// Single stochastic trajectory dump.
    Trajectory,
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        // Ignore failure: the global pool can only be set once.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let raw = match &cli.config {
        None => None,
        Some(path) => {
            let text = if path.as_os_str() == "-" {
                std::io::read_to_string(std::io::stdin())
                    .map_err(|e| Error::Config(format!("cannot read stdin: {e}")))?
            } else {
                std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?
            };
            Some(
                serde_json::from_str::<serde_json::Value>(&text).map_err(|e| {
                    Error::Config(format!("{} is not valid JSON: {e}", path.display()))
                })?,
            )
        }
    };
    match cli.command {
        Command::Sensitivity => {
            let mut job: SensitivityJob = parse_job(&raw)?;
            job.seed = cli.seed.unwrap_or(job.seed);
            run_sensitivity(&job, &cli.out, cli.dry_run)
        }
        Command::HeartMap => {
            let mut job: HeartMapJob = parse_job(&raw)?;
            job.seed = cli.seed.unwrap_or(job.seed);
            run_heart_map(&job, &cli.out, cli.dry_run)
        }
        Command::Bistability => {
            let mut job: BistabilityJob = parse_job(&raw)?;
            job.seed = cli.seed.unwrap_or(job.seed);
            run_bistability(&job, &cli.out, cli.dry_run)
        }
        Command::SweepUp => {
            let mut job: SweepUpJob = parse_job(&raw)?;
            job.seed = cli.seed.unwrap_or(job.seed);
            run_sweep_up(&job, &cli.out, cli.dry_run)
        }
        Command::Ringdown => {
            let mut job: RingdownJob = parse_job(&raw)?;
            job.seed = cli.seed.unwrap_or(job.seed);
            run_ringdown(&job, &cli.out, cli.dry_run)
        }
        Command::Trajectory => {
            let mut job: TrajectoryJob = parse_job(&raw)?;
            job.seed = cli.seed.unwrap_or(job.seed);
            run_trajectory(&job, &cli.out, cli.dry_run)
        }
    }
}

fn parse_job<T: DeserializeOwned + Default>(raw: &Option<serde_json::Value>) -> Result<T> {
    match raw {
        None => Ok(T::default()),
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| Error::Config(format!("bad job config: {e}"))),
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(Error::Config(format!(
            "log grid needs 0 < lo < hi and n >= 2, got [{lo}, {hi}] x {n}"
        )));
    }
    let r = (hi / lo).ln();
    Ok((0..n)
        .map(|k| lo * (r * k as f64 / (n - 1) as f64).exp())
        .collect())
}

fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

fn emit(
    out: &Path,
    dry_run: bool,
    manifest: &Manifest,
    write: impl FnOnce() -> Result<()>,
) -> Result<()> {
    if dry_run {
        let text = serde_json::to_string_pretty(manifest)
            .map_err(|e| Error::Config(format!("manifest serialization failed: {e}")))?;
        // Plain println! panics when the reader closes the pipe early
        // (cavlab --dry-run ... | head); treat that as a clean exit.
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), "{text}");
        return Ok(());
    }
    std::fs::create_dir_all(out)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", out.display())))?;
    write()?;
    output::write_manifest(&out.join("manifest.json"), manifest)
}

/// Mirror geometry shared by the experiment subcommands.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryJob {
    pub length_m: f64,
    pub mode_area_m2: f64,
    pub wavelength_m: f64,
    /// Per-mirror transmission loss fraction.
    pub delta1: f64,
    /// Extra linear cavity loss fraction.
    pub delta0: f64,
}

impl Default for GeometryJob {
    fn default() -> Self {
        GeometryJob {
            length_m: 1.0,
            mode_area_m2: std::f64::consts::PI * 1e-6,
            wavelength_m: 1.064e-6,
            delta1: 1e-5,
            delta0: 0.0,
        }
    }
}

impl GeometryJob {
    pub fn build(&self) -> Result<CavityGeometry> {
        CavityGeometry::new(
            self.length_m,
            self.mode_area_m2,
            self.wavelength_m,
            self.delta1,
            self.delta0,
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivityJob {
    /// Threshold photon-number scale of the gain cavity.
    pub eta0: f64,
    pub length_m: f64,
    /// Mirror loss of the laser cavity.
    pub delta1_gain: f64,
    /// Mirror loss of the passive reference cavity.
    pub delta1_empty: f64,
    /// Decay-rate margin gamma' (1/s); optimized at `t_chi` when null.
    pub gamma_prime: Option<f64>,
    /// Reference-cavity intensity (photons); defaults to the laser's
    /// mean intensity.
    pub i_e_photons: Option<f64>,
    /// Technical variance floor per sample.
    pub v_t: f64,
    /// Input relative intensity noise (reported, not added to curves).
    pub rin: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub v_t_min: f64,
    pub v_t_max: f64,
    pub n_v_t: usize,
    /// Averaging time used for the floor sweep and the crossover
    /// analysis.
    pub t_chi: f64,
    /// Optional intensity cap for the optimizer, photons.
    pub i_max_photons: Option<f64>,
    pub seed: u64,
}

impl Default for SensitivityJob {
    fn default() -> Self {
        SensitivityJob {
            eta0: 1e6,
            length_m: 1.0,
            delta1_gain: 1e-4,
            delta1_empty: 1e-5,
            gamma_prime: None,
            i_e_photons: None,
            v_t: 1e-9,
            rin: 0.0,
            t_min: 1e-4,
            t_max: 1e2,
            n_t: 121,
            v_t_min: 1e-13,
            v_t_max: 1e-7,
            n_v_t: 49,
            t_chi: 1.0,
            i_max_photons: None,
            seed: 0,
        }
    }
}

fn run_sensitivity(job: &SensitivityJob, out: &Path, dry_run: bool) -> Result<()> {
    let kappa_g = job.delta1_gain * SPEED_OF_LIGHT / job.length_m;
    let kappa_e = job.delta1_empty * SPEED_OF_LIGHT / job.length_m;
    let i_sat = i_sat_from_eta0(job.eta0);
    let gamma_prime = match job.gamma_prime {
        Some(g) => g,
        None => {
            optimize_operating_point(&OptimizeConfig {
                kappa_g,
                i_sat,
                v_t: job.v_t,
                t: job.t_chi,
                i_max: job.i_max_photons,
            })?
            .gamma_prime
        }
    };
    let i_e = job
        .i_e_photons
        .unwrap_or(2.0 * i_sat * gamma_prime / kappa_g);
    let noise = NoiseBudget {
        v_t: job.v_t,
        rin: job.rin,
        g_drift_rms: 0.0,
        detection_shotnoise: false,
    };
    let sweep = time_sweep(&TimeSweepConfig {
        kappa_g,
        i_sat,
        gamma_prime,
        kappa_e,
        i_e,
        noise,
        t_grid: log_grid(job.t_min, job.t_max, job.n_t)?,
        t_chi: job.t_chi,
    })?;
    let floors = floor_sweep(&FloorSweepConfig {
        kappa_g,
        i_sat,
        kappa_e,
        i_e,
        t: job.t_chi,
        v_t_grid: log_grid(job.v_t_min, job.v_t_max, job.n_v_t)?,
        i_max: job.i_max_photons,
    })?;

    let mut manifest = Manifest::new(
        "sensitivity",
        job.seed,
        json!({
            "job": job,
            "resolved": {
                "kappa_g": kappa_g,
                "kappa_e": kappa_e,
                "i_sat_photons": i_sat,
                "gamma_prime": gamma_prime,
                "i_e_photons": i_e,
                "crossover": sweep.crossover,
            }
        }),
    );
    manifest.outputs = vec!["time_sweep.csv".into(), "floor_sweep.csv".into()];
    emit(out, dry_run, &manifest, || {
        output::write_time_sweep(&out.join("time_sweep.csv"), &sweep)?;
        output::write_floor_sweep(&out.join("floor_sweep.csv"), &floors, i_e)
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeartMapJob {
    /// Total linear loss rate kappa', 1/s.
    pub kappa_prime: f64,
    pub i_sat_photons: f64,
    /// Gain axis spans [0, ratio * kappa'].
    pub gain_max_ratio: f64,
    pub n_gain: usize,
    /// Drive axis spans [0, ratio * kappa' sqrt(I_sat)].
    pub drive_max_ratio: f64,
    pub n_drive: usize,
    /// Slice files are cut at this fraction of the maximum drive.
    pub slice_drive_ratio: f64,
    pub seed: u64,
}

impl Default for HeartMapJob {
    fn default() -> Self {
        HeartMapJob {
            kappa_prime: 3000.0,
            i_sat_photons: 1e6,
            gain_max_ratio: 2.0,
            n_gain: 41,
            drive_max_ratio: 1.0,
            n_drive: 41,
            slice_drive_ratio: 0.5,
            seed: 0,
        }
    }
}

fn run_heart_map(job: &HeartMapJob, out: &Path, dry_run: bool) -> Result<()> {
    if job.n_gain < 2 || job.n_drive < 2 {
        return Err(Error::Config("map needs at least a 2 x 2 grid".into()));
    }
    let drive_max = job.drive_max_ratio * job.kappa_prime * job.i_sat_photons.sqrt();
    let drives = lin_grid(0.0, drive_max, job.n_drive);
    let gains = lin_grid(0.0, job.gain_max_ratio * job.kappa_prime, job.n_gain);
    let template = FpParams::new(
        0.0,
        job.kappa_prime,
        0.5 * job.kappa_prime,
        job.i_sat_photons,
        job.kappa_prime,
    )?;

    let mut manifest = Manifest::new(
        "heart-map",
        job.seed,
        json!({
            "job": job,
            "resolved": {
                "drive_max": drive_max,
                "slice_drive": job.slice_drive_ratio * drive_max,
            }
        }),
    );
    manifest.outputs = vec![
        "responsivity_map.csv".into(),
        "intensity_map.csv".into(),
        "slice_responsivity.csv".into(),
        "slice_intensity.csv".into(),
    ];
    emit(out, dry_run, &manifest, || {
        let map = responsivity_map(&drives, &gains, &template);
        let slices = map_slices(&gains, job.slice_drive_ratio * drive_max, &template);
        output::write_responsivity_map(&out.join("responsivity_map.csv"), &map)?;
        output::write_intensity_map(&out.join("intensity_map.csv"), &map)?;
        output::write_slices_responsivity(&out.join("slice_responsivity.csv"), &slices)?;
        output::write_slices_intensity(&out.join("slice_intensity.csv"), &slices)
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BistabilityJob {
    pub geometry: GeometryJob,
    /// Absorber saturation intensity, W/cm^2.
    pub i_sat_wcm2: f64,
    /// Unsaturated absorber rate as a multiple of kappa_C.
    pub kappa_l_ratio: f64,
    /// Trace absorption, 1/cm.
    pub alpha_s_per_cm: f64,
    pub n_points: usize,
    /// Power grid spans [low * down-switch power, high * up-switch
    /// power].
    pub window_low: f64,
    pub window_high: f64,
    pub seed: u64,
}

impl Default for BistabilityJob {
    fn default() -> Self {
        BistabilityJob {
            geometry: GeometryJob::default(),
            i_sat_wcm2: 1.0,
            kappa_l_ratio: 12.0,
            alpha_s_per_cm: 0.0,
            n_points: 400,
            window_low: 0.8,
            window_high: 1.2,
            seed: 0,
        }
    }
}

struct AbsorberSetup {
    geom: CavityGeometry,
    absorber: MediumSpec,
    cavity: BistableCavity,
    i_sat: f64,
}

fn absorber_setup(
    geometry: &GeometryJob,
    i_sat_wcm2: f64,
    kappa_l_ratio: f64,
    alpha_s_per_cm: f64,
) -> Result<AbsorberSetup> {
    let geom = geometry.build()?;
    let i_sat = geom.photons_from_wcm2(i_sat_wcm2)?;
    let absorber = MediumSpec::saturable_loss(kappa_l_ratio * geom.kappa_c(), i_sat)?;
    let trace = TraceGas::from_per_cm(alpha_s_per_cm)?;
    let cavity = BistableCavity::new(&geom, &absorber, &trace)?;
    Ok(AbsorberSetup {
        geom,
        absorber,
        cavity,
        i_sat,
    })
}

fn run_bistability(job: &BistabilityJob, out: &Path, dry_run: bool) -> Result<()> {
    if job.n_points < 2 {
        return Err(Error::Config(
            "power sweep needs at least two points".into(),
        ));
    }
    let setup = absorber_setup(
        &job.geometry,
        job.i_sat_wcm2,
        job.kappa_l_ratio,
        job.alpha_s_per_cm,
    )?;
    let tp = setup.cavity.turning_points().ok_or_else(|| {
        Error::InvalidParameter(format!(
            "not bistable: kappa_L/kappa0 = {:.3} <= 8",
            job.kappa_l_ratio
        ))
    })?;
    let grid = lin_grid(
        job.window_low * tp.p0_down_jump,
        job.window_high * tp.p0_up_jump,
        job.n_points,
    );

    let mut manifest = Manifest::new(
        "bistability",
        job.seed,
        json!({
            "job": job,
            "resolved": {
                "kappa_c": setup.geom.kappa_c(),
                "i_sat_photons": setup.i_sat,
                "turning_points": tp,
            }
        }),
    );
    manifest.outputs = vec![
        "branches.csv".into(),
        "sweep_up.csv".into(),
        "sweep_down.csv".into(),
    ];
    emit(out, dry_run, &manifest, || {
        let h = setup.cavity.hysteresis(&grid)?;
        output::write_branches(&out.join("branches.csv"), &h)?;
        output::write_sweep_branch(&out.join("sweep_up.csv"), &h.p0, &h.sweep_up)?;
        output::write_sweep_branch(&out.join("sweep_down.csv"), &h.p0, &h.sweep_down)
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepUpJob {
    pub geometry: GeometryJob,
    pub i_sat_wcm2: f64,
    pub kappa_l_ratio: f64,
    /// Absorption common to both cavities, 1/cm.
    pub alpha_base_per_cm: f64,
    /// Extra absorption in the second cavity, 1/cm.
    pub delta_alpha_per_cm: f64,
    pub window_low: f64,
    pub window_high: f64,
    pub ramp_duration: f64,
    pub dt: f64,
    pub shots: u32,
    pub seed: u64,
}

impl Default for SweepUpJob {
    fn default() -> Self {
        SweepUpJob {
            geometry: GeometryJob::default(),
            i_sat_wcm2: 1.0,
            kappa_l_ratio: 12.0,
            alpha_base_per_cm: 0.0,
            delta_alpha_per_cm: 1e-8,
            window_low: 0.8,
            window_high: 1.2,
            ramp_duration: 0.05,
            dt: 2e-7,
            shots: 24,
            seed: 1,
        }
    }
}

fn run_sweep_up(job: &SweepUpJob, out: &Path, dry_run: bool) -> Result<()> {
    let setup = absorber_setup(
        &job.geometry,
        job.i_sat_wcm2,
        job.kappa_l_ratio,
        job.alpha_base_per_cm,
    )?;
    let tp = setup
        .cavity
        .turning_points()
        .ok_or_else(|| Error::InvalidParameter("sweep-up needs a bistable cavity".into()))?;
    let cfg = SweepUpConfig {
        geom: setup.geom,
        absorber: setup.absorber,
        alpha_base: per_cm_to_per_m(job.alpha_base_per_cm),
        delta_alpha: per_cm_to_per_m(job.delta_alpha_per_cm),
        p0_start: job.window_low * tp.p0_down_jump,
        p0_stop: job.window_high * tp.p0_up_jump,
        ramp_duration: job.ramp_duration,
        jump_threshold: 0.5 * (tp.i_lower + tp.i_upper),
        dt: job.dt,
        shots: job.shots,
        seed: job.seed,
    };

    let mut manifest = Manifest::new(
        "sweep-up",
        job.seed,
        json!({
            "job": job,
            "resolved": {
                "kappa_c": setup.geom.kappa_c(),
                "i_sat_photons": setup.i_sat,
                "p0_start": cfg.p0_start,
                "p0_stop": cfg.p0_stop,
                "jump_threshold": cfg.jump_threshold,
            }
        }),
    );
    manifest.outputs = vec!["shots.csv".into()];
    emit(out, dry_run, &manifest, || {
        let report = sweep_up_experiment(&cfg)?;
        output::write_shots(&out.join("shots.csv"), &report)
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RingdownJob {
    pub geometry: GeometryJob,
    pub i_sat_wcm2: f64,
    pub kappa_l_ratio: f64,
    pub alpha_s_per_cm: f64,
    /// Initial stored intensity, W/cm^2.
    pub i_init_wcm2: f64,
    /// Detection threshold as a fraction of I_sat.
    pub threshold_ratio: f64,
    /// Raw-estimator reference as a fraction of I_sat; defaults to the
    /// detection threshold.
    pub i_ref_ratio: Option<f64>,
    pub estimator: TimingEstimator,
    pub quantum_noise: bool,
    pub detection_shotnoise: bool,
    /// Deterministic detector-gain drift, 1/s.
    pub gain_drift: f64,
    /// Per-shot random drift RMS values to sweep, 1/s.
    pub drift_rms_grid: Vec<f64>,
    pub shots: u32,
    pub tau_sample: f64,
    pub dt: f64,
    /// Slope-fit window end, s; defaults to 2.3 / kappa_C.
    pub crds_fit_end: Option<f64>,
    /// Integration cap, s; defaults to 8 / kappa_C.
    pub max_duration: Option<f64>,
    pub seed: u64,
}

impl Default for RingdownJob {
    fn default() -> Self {
        RingdownJob {
            geometry: GeometryJob::default(),
            i_sat_wcm2: 1.0,
            kappa_l_ratio: 100.0,
            alpha_s_per_cm: 0.0,
            i_init_wcm2: 1e4,
            threshold_ratio: 0.1,
            i_ref_ratio: None,
            estimator: TimingEstimator::Calibrated,
            quantum_noise: true,
            detection_shotnoise: true,
            gain_drift: 0.0,
            drift_rms_grid: vec![0.0, 30.0, 100.0, 300.0],
            shots: 40,
            tau_sample: 1e-6,
            dt: 2e-8,
            crds_fit_end: None,
            max_duration: None,
            seed: 1,
        }
    }
}

fn run_ringdown(job: &RingdownJob, out: &Path, dry_run: bool) -> Result<()> {
    let setup = absorber_setup(
        &job.geometry,
        job.i_sat_wcm2,
        job.kappa_l_ratio,
        job.alpha_s_per_cm,
    )?;
    let kappa_c = setup.geom.kappa_c();
    let i_init = setup.geom.photons_from_wcm2(job.i_init_wcm2)?;
    let cfg = RingdownConfig {
        geom: setup.geom,
        absorber: setup.absorber,
        trace: TraceGas::from_per_cm(job.alpha_s_per_cm)?,
        i_init,
        i_threshold: job.threshold_ratio * setup.i_sat,
        i_ref: job.i_ref_ratio.map(|r| r * setup.i_sat),
        estimator: job.estimator,
        quantum_noise: job.quantum_noise,
        detection_shotnoise: job.detection_shotnoise,
        gain_drift: job.gain_drift,
        gain_drift_rms: 0.0,
        tau_sample: job.tau_sample,
        dt: job.dt,
        crds_fit_end: job.crds_fit_end.unwrap_or(2.3 / kappa_c),
        max_duration: job.max_duration.unwrap_or(8.0 / kappa_c),
        seed: job.seed,
    };
    let prediction = ringdown_prediction(&cfg)?;

    let mut manifest = Manifest::new(
        "ringdown",
        job.seed,
        json!({
            "job": job,
            "resolved": {
                "kappa_c": kappa_c,
                "i_sat_photons": setup.i_sat,
                "i_init_photons": i_init,
                "prediction": prediction,
            }
        }),
    );
    manifest.outputs = vec!["comparison.csv".into()];
    emit(out, dry_run, &manifest, || {
        let rows = estimator_comparison_random(&cfg, &job.drift_rms_grid, job.shots)?;
        output::write_comparison(&out.join("comparison.csv"), &rows)
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryJob {
    pub geometry: GeometryJob,
    pub medium_kind: MediumKind,
    /// Medium rate kappa_m (gain or unsaturated absorption), 1/s.
    pub kappa_m: f64,
    pub i_sat_photons: f64,
    /// Spontaneous-emission coefficient override.
    pub q0: Option<f64>,
    pub alpha_s_per_cm: f64,
    pub drive: Drive,
    pub initial: [f64; 2],
    pub duration: f64,
    pub dt: f64,
    pub record_stride: usize,
    pub seed: u64,
    pub stream: u64,
}

impl Default for TrajectoryJob {
    fn default() -> Self {
        TrajectoryJob {
            geometry: GeometryJob::default(),
            medium_kind: MediumKind::Gain,
            kappa_m: 3100.0,
            i_sat_photons: 1e6,
            q0: None,
            alpha_s_per_cm: 0.0,
            drive: Drive::Off,
            initial: [1000.0, 0.0],
            duration: 2e-3,
            dt: 1e-6,
            record_stride: 10,
            seed: 0,
            stream: 0,
        }
    }
}

fn run_trajectory(job: &TrajectoryJob, out: &Path, dry_run: bool) -> Result<()> {
    let geom = job.geometry.build()?;
    let mut medium = match job.medium_kind {
        MediumKind::Gain => MediumSpec::gain(job.kappa_m, job.i_sat_photons)?,
        MediumKind::SaturableLoss => MediumSpec::saturable_loss(job.kappa_m, job.i_sat_photons)?,
        MediumKind::None => MediumSpec::none(),
    };
    if let Some(q0) = job.q0 {
        medium = medium.with_q0(q0);
    }
    let cfg = SdeConfig {
        geom,
        medium,
        trace: TraceGas::from_per_cm(job.alpha_s_per_cm)?,
        drive: job.drive,
        initial: job.initial,
        duration: job.duration,
        dt: job.dt,
        record_stride: job.record_stride,
        seed: job.seed,
        stream: job.stream,
    };
    cfg.validate()?;

    let mut manifest = Manifest::new(
        "trajectory",
        job.seed,
        json!({
            "job": job,
            "resolved": {
                "kappa_c": geom.kappa_c(),
                "kappa_prime": cfg.kappa_prime(),
                "sde": &cfg,
            }
        }),
    );
    manifest.outputs = vec!["trajectory.csv".into()];
    emit(out, dry_run, &manifest, || {
        let traj = cfg.integrate()?;
        let factor = geom.photon_energy() * geom.kappa_c();
        output::write_trajectory(&out.join("trajectory.csv"), &traj, factor)
    })
}
