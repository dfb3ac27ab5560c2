//! End-to-end acceptance gate. Each test prints one line,
//!
//!   ACCEPTANCE <n>: PASS — <what was checked>
//!
//! (visible with `cargo test --test acceptance -- --nocapture`) and then
//! asserts the same condition, so a red test always names its criterion.
//! The tests share a mutex: they are budgeted individually and must not
//! steal CPU from each other.

use std::process::Command;
use std::sync::{Mutex, MutexGuard};
use std::time::Instant;

use rayon::prelude::*;

use cavlab::bistability::{demo_cavity, small_contrast_turning_estimate, BistableCavity};
use cavlab::fokkerplanck::{
    i_sat_from_eta0, normalized_threshold_responsivity, FpParams, SteadyStateDistribution,
};
use cavlab::sde::{
    estimator_comparison, estimator_comparison_random, noise_stream, sweep_up_experiment, Drive,
    RingdownConfig, SdeConfig, SweepUpConfig, TimingEstimator, PURPOSE_FIELD,
};
use cavlab::sensitivity::{
    crossover_analysis, empty_rate_sensitivity_curve, gain_dalpha2, optimize_operating_point,
    OptimizeConfig,
};
use cavlab::units::{CavityGeometry, MediumSpec, NoiseBudget, TraceGas, SPEED_OF_LIGHT};

static GATE: Mutex<()> = Mutex::new(());

fn lock() -> MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|p| p.into_inner())
}

fn report(n: u32, ok: bool, detail: &str) {
    println!(
        "ACCEPTANCE {n}: {} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "acceptance {n} failed: {detail}");
}

fn budget(n: u32, start: Instant, limit_s: f64) {
    let dt = start.elapsed().as_secs_f64();
    assert!(
        dt < limit_s,
        "acceptance {n} exceeded its {limit_s} s budget ({dt:.1} s)"
    );
}

fn meter_cavity() -> CavityGeometry {
    CavityGeometry::new(1.0, std::f64::consts::PI * 1e-6, 1.064e-6, 1e-5, 0.0).unwrap()
}

fn cavity_with_kappa(kappa_prime: f64) -> CavityGeometry {
    CavityGeometry::new(
        1.0,
        std::f64::consts::PI * 1e-6,
        1.064e-6,
        kappa_prime / SPEED_OF_LIGHT,
        0.0,
    )
    .unwrap()
}

fn sd(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt()
}

// 1. Quadrature at threshold (a = 0, no drive, far below saturation)
// reproduces the truncated-Gaussian moments 2/sqrt(pi) and 2 - 4/pi.
#[test]
fn acceptance_01_threshold_moments() {
    let _g = lock();
    let t0 = Instant::now();
    let i_sat = 1e18;
    let kappa_g = 3000.0;
    // kappa' = kappa_G puts the cavity exactly at threshold.
    let p = FpParams::new(0.0, kappa_g, kappa_g, i_sat, 2.0 * kappa_g).unwrap();
    let d = SteadyStateDistribution::solve(p).unwrap();
    let scale = 2.0 * i_sat.sqrt();
    let mean = d.mean() / scale;
    let var = d.variance() / (scale * scale);
    let mean_ref = 2.0 / std::f64::consts::PI.sqrt();
    let var_ref = 2.0 - 4.0 / std::f64::consts::PI;
    let e_mean = (mean / mean_ref - 1.0).abs();
    let e_var = (var / var_ref - 1.0).abs();
    budget(1, t0, 1.0);
    report(
        1,
        e_mean <= 1e-6 && e_var <= 1e-6,
        &format!(
            "threshold moments: mean 2/sqrt(pi) to {e_mean:.1e}, \
             variance 2-4/pi to {e_var:.1e} (tolerance 1e-6)"
        ),
    );
}

// 2. The normalized drive-free responsivity peaks at a = 1.28 with value
// 0.346 (1% in both coordinates, scan resolution 1e-3).
#[test]
fn acceptance_02_responsivity_peak() {
    let _g = lock();
    let t0 = Instant::now();
    let mut best_a = f64::NAN;
    let mut best_g = f64::NEG_INFINITY;
    let n = ((4.0 - (-2.0)) / 1e-3) as usize;
    for k in 0..=n {
        let a = -2.0 + k as f64 * 1e-3;
        let g = normalized_threshold_responsivity(a);
        if g > best_g {
            best_g = g;
            best_a = a;
        }
    }
    // Independent spot check at the peak through the full quadrature.
    let i_sat = 1e14_f64;
    let gamma_prime = best_a * 3000.0 / i_sat.sqrt();
    let p = FpParams::new(0.0, 3000.0 - 2.0 * gamma_prime, 3000.0, i_sat, 6000.0).unwrap();
    let d = SteadyStateDistribution::solve(p).unwrap();
    let scale = 2.0 * i_sat.sqrt();
    let g_quad = d.variance() / (2.0 * d.mean() * scale);
    let e_a = (best_a / 1.28 - 1.0).abs();
    let e_g = (best_g / 0.346 - 1.0).abs();
    let e_q = (g_quad / best_g - 1.0).abs();
    budget(2, t0, 10.0);
    report(
        2,
        e_a <= 0.01 && e_g <= 0.01 && e_q <= 1e-3,
        &format!(
            "responsivity peak at a = {best_a:.3} (vs 1.28, {e_a:.1e}), \
             value {best_g:.4} (vs 0.346, {e_g:.1e}), quadrature agrees to {e_q:.1e}"
        ),
    );
}

// 3. The covariance identity d<I>/dkappa' = -Cov(I, I)/4Q matches a
// central finite difference of the quadrature mean to 1e-4 across ten
// operating points below, at and above threshold, driven and not.
#[test]
fn acceptance_03_covariance_identity() {
    let _g = lock();
    let t0 = Instant::now();
    let kappa_g = 3000.0;
    let i_sat = 1e6_f64;
    let q = 6000.0;
    // (drive / kappa' sqrt(I_sat), kappa'): a = (kappa_G - kappa')/6 here.
    let cases = [
        (0.0, 3024.0),
        (0.0, 3006.0),
        (0.0, 3000.0),
        (0.0, 2994.0),
        (0.0, 2976.0),
        (0.1, 3012.0),
        (0.5, 3012.0),
        (0.3, 3000.0),
        (0.1, 2988.0),
        (0.5, 2988.0),
    ];
    let mut worst = 0.0_f64;
    for &(frac, kp) in &cases {
        let e0 = frac * kp * i_sat.sqrt();
        let mean_at = |kappa: f64| {
            SteadyStateDistribution::solve(FpParams::new(e0, kappa, kappa_g, i_sat, q).unwrap())
                .unwrap()
                .mean()
        };
        let d = SteadyStateDistribution::solve(FpParams::new(e0, kp, kappa_g, i_sat, q).unwrap())
            .unwrap();
        let analytic = d.moment_derivative(1).unwrap();
        let h = 1e-5 * kp;
        let fd = (mean_at(kp + h) - mean_at(kp - h)) / (2.0 * h);
        worst = worst.max((analytic / fd - 1.0).abs());
    }
    budget(3, t0, 30.0);
    report(
        3,
        worst <= 1e-4,
        &format!("moment derivative vs central difference over 10 points, worst {worst:.2e}"),
    );
}

// 4. Strongly driven linear cavity: the quadrature responsivity reaches
// the empty-cavity value -4 L / delta within 1%.
#[test]
fn acceptance_04_empty_cavity_limit() {
    let _g = lock();
    let t0 = Instant::now();
    let geom = meter_cavity();
    let kappa_prime = geom.kappa_c(); // delta = 2 delta1 = 2e-5, L = 1 m
    let target = 1e4_f64;
    let e0 = 0.5 * kappa_prime * target.sqrt();
    let p = FpParams::new(e0, kappa_prime, 0.0, 1e9, 0.5 * kappa_prime).unwrap();
    let d = SteadyStateDistribution::solve(p).unwrap();
    let reference = -4.0 * 1.0 / 2.0e-5;
    let err = (d.responsivity() / reference - 1.0).abs();
    budget(4, t0, 5.0);
    report(
        4,
        err <= 0.01,
        &format!(
            "strong-drive responsivity {:.4e} m vs -4L/delta = {reference:.4e} m ({err:.1e})",
            d.responsivity()
        ),
    );
}

struct LongRun {
    mean: f64,
    var: f64,
    se_mean: f64,
    se_var: f64,
}

fn long_run(cfg: &SdeConfig, burn_in: f64, n_batches: usize) -> LongRun {
    let total_steps = (cfg.duration / cfg.dt).round() as usize;
    let burn_steps = (burn_in / cfg.dt).round() as usize;
    let batch_len = ((total_steps - burn_steps) / n_batches).max(1);
    let mut s = vec![0.0_f64; n_batches];
    let mut s2 = vec![0.0_f64; n_batches];
    let mut count = vec![0_usize; n_batches];
    cfg.walk(|step, _t, e1, e2| {
        if step >= burn_steps {
            let b = ((step - burn_steps) / batch_len).min(n_batches - 1);
            let i = e1 * e1 + e2 * e2;
            s[b] += i;
            s2[b] += i * i;
            count[b] += 1;
        }
        true
    })
    .unwrap();
    let n_tot = count.iter().sum::<usize>() as f64;
    let mean = s.iter().sum::<f64>() / n_tot;
    let var = s2.iter().sum::<f64>() / n_tot - mean * mean;
    // Per-batch statistics about the pooled mean; their spread gives the
    // Monte Carlo error of the pooled estimates.
    let bm: Vec<f64> = (0..n_batches).map(|b| s[b] / count[b] as f64).collect();
    let bv: Vec<f64> = (0..n_batches)
        .map(|b| s2[b] / count[b] as f64 - 2.0 * mean * bm[b] + mean * mean)
        .collect();
    let root_b = (n_batches as f64).sqrt();
    LongRun {
        mean,
        var,
        se_mean: sd(&bm) / root_b,
        se_var: sd(&bv) / root_b,
    }
}

// 5. Long single-trajectory SDE runs reproduce the quadrature mean and
// variance within 3 sigma of their Monte Carlo errors at five operating
// points (below/at/above threshold, undriven and driven).
#[test]
fn acceptance_05_sde_matches_quadrature() {
    let _g = lock();
    let t0 = Instant::now();
    let kappa_g = 3000.0;
    let i_sat = 1e4_f64;
    // (label, kappa', drive fraction, duration s, burn-in s, initial e1)
    let sets: [(&str, f64, f64, f64, f64, f64); 5] = [
        ("below undriven", 3150.0, 0.0, 4.0, 0.5, 11.0),
        ("at threshold", 3000.0, 0.0, 20.0, 1.0, 15.0),
        ("above undriven", 2940.0, 0.0, 30.0, 1.5, 18.0),
        ("below driven", 3150.0, 0.35, 6.0, 0.3, 15.0),
        ("above driven", 2940.0, 0.2, 10.0, 0.5, 18.0),
    ];
    let mut detail = String::new();
    let mut ok = true;
    for (label, kp, frac, duration, burn, init) in sets {
        let e0 = frac * kp * i_sat.sqrt();
        let fp = SteadyStateDistribution::solve(
            FpParams::new(e0, kp, kappa_g, i_sat, 2.0 * kappa_g).unwrap(),
        )
        .unwrap();
        let cfg = SdeConfig {
            geom: cavity_with_kappa(kp),
            medium: MediumSpec::gain(kappa_g, i_sat).unwrap(),
            trace: TraceGas::new(0.0).unwrap(),
            drive: if e0 > 0.0 {
                Drive::Constant { e0 }
            } else {
                Drive::Off
            },
            initial: [init, 0.0],
            duration,
            dt: 0.0099 / (kp + kappa_g),
            record_stride: usize::MAX,
            seed: 40,
            stream: noise_stream(0, 0, PURPOSE_FIELD),
        };
        let run = long_run(&cfg, burn, 32);
        let z_mean = (run.mean - fp.mean()).abs() / run.se_mean;
        let z_var = (run.var - fp.variance()).abs() / run.se_var;
        let pass = z_mean <= 3.0 && z_var <= 3.0;
        ok &= pass;
        detail.push_str(&format!("[{label}: z_mean {z_mean:.2}, z_var {z_var:.2}] "));
    }
    budget(5, t0, 180.0);
    report(
        5,
        ok,
        &format!("SDE vs quadrature at 5 operating points {detail}"),
    );
}

// 6. Above threshold the quadrature amplitude behaves as an OU process:
// Var(r) = 2Q/4gamma' and Var(I) = 8 I_sat, verified over 200
// independent runs against the 3 sigma run-to-run error.
#[test]
fn acceptance_06_ou_linearization() {
    let _g = lock();
    let t0 = Instant::now();
    let kappa_g = 3000.0;
    let kappa_prime = 2980.0; // gamma' = 10
    let gamma_prime = 0.5 * (kappa_g - kappa_prime);
    let i_sat = 1e7;
    let q = 2.0 * kappa_g;
    let burn = 0.3;
    let duration = 2.3;
    let dt = 0.0099 / (kappa_g + kappa_prime);
    let n_runs = 200_u32;

    // (sum r, sum r^2, sum I, sum I^2, samples) per run.
    let sums: Vec<[f64; 5]> = (0..n_runs)
        .into_par_iter()
        .map(|run| {
            let cfg = SdeConfig {
                geom: cavity_with_kappa(kappa_prime),
                medium: MediumSpec::gain(kappa_g, i_sat).unwrap(),
                trace: TraceGas::new(0.0).unwrap(),
                drive: Drive::Off,
                initial: [260.0, 0.0],
                duration,
                dt,
                record_stride: usize::MAX,
                seed: 41,
                stream: noise_stream(run, 0, PURPOSE_FIELD),
            };
            let burn_steps = (burn / dt).round() as usize;
            let mut acc = [0.0_f64; 5];
            cfg.walk(|step, _t, e1, e2| {
                if step >= burn_steps {
                    let i = e1 * e1 + e2 * e2;
                    let r = i.sqrt();
                    acc[0] += r;
                    acc[1] += r * r;
                    acc[2] += i;
                    acc[3] += i * i;
                    acc[4] += 1.0;
                }
                true
            })
            .unwrap();
            acc
        })
        .collect();

    let n_tot: f64 = sums.iter().map(|a| a[4]).sum();
    let mean_r: f64 = sums.iter().map(|a| a[0]).sum::<f64>() / n_tot;
    let mean_i: f64 = sums.iter().map(|a| a[2]).sum::<f64>() / n_tot;
    // Per-run variances about the global means; the run-to-run spread is
    // an honest error bar because runs are independent.
    let vr: Vec<f64> = sums
        .iter()
        .map(|a| a[1] / a[4] - 2.0 * mean_r * (a[0] / a[4]) + mean_r * mean_r)
        .collect();
    let vi: Vec<f64> = sums
        .iter()
        .map(|a| a[3] / a[4] - 2.0 * mean_i * (a[2] / a[4]) + mean_i * mean_i)
        .collect();
    let var_r = vr.iter().sum::<f64>() / vr.len() as f64;
    let var_i = vi.iter().sum::<f64>() / vi.len() as f64;
    let se_r = sd(&vr) / (vr.len() as f64).sqrt();
    let se_i = sd(&vi) / (vi.len() as f64).sqrt();

    let var_r_pred = 2.0 * q / (4.0 * gamma_prime);
    let var_i_pred = 8.0 * i_sat;
    let z_r = (var_r - var_r_pred).abs() / se_r;
    let z_i = (var_i - var_i_pred).abs() / se_i;
    budget(6, t0, 120.0);
    report(
        6,
        z_r <= 3.0 && z_i <= 3.0,
        &format!(
            "OU stationary variances over {n_runs} runs: Var(r) {var_r:.1} vs 2Q/4gamma' = \
             {var_r_pred:.1} (z = {z_r:.2}), Var(I) {var_i:.3e} vs 8 I_sat = {var_i_pred:.3e} \
             (z = {z_i:.2})"
        ),
    );
}

// 7. Laser scheme vs empty cavity at eta0 = 1e6, delta1 = 1e-4 (gain) /
// 1e-5 (empty), v_T = 1e-9: the laser curve dips below the empty-cavity
// curve before 1 s, near the closed-form crossover time, and sweeping
// v_T at fixed operating point exhibits a critical technical floor.
#[test]
fn acceptance_07_crossover() {
    let _g = lock();
    let t0 = Instant::now();
    let length = 1.0;
    let kappa_g = 1e-4 * SPEED_OF_LIGHT / length;
    let kappa_e = 1e-5 * SPEED_OF_LIGHT / length;
    let i_sat = i_sat_from_eta0(1e6);
    let v_t = 1e-9;
    let t_chi = 1.0;
    let op = optimize_operating_point(&OptimizeConfig {
        kappa_g,
        i_sat,
        v_t,
        t: t_chi,
        i_max: None,
    })
    .unwrap();
    let gamma = op.gamma_prime;
    let i_e = 2.0 * i_sat * gamma / kappa_g;
    let noise = NoiseBudget {
        v_t,
        rin: 0.0,
        g_drift_rms: 0.0,
        detection_shotnoise: false,
    };
    let empty_at = |t: f64, v: f64| {
        let n = NoiseBudget { v_t: v, ..noise };
        empty_rate_sensitivity_curve(kappa_e, i_e, &n, &[t])
            .unwrap()
            .dalpha2[0]
    };
    let diff = |t: f64| gain_dalpha2(kappa_g, i_sat, gamma, v_t, t) - empty_at(t, v_t);

    // The laser starts worse (floor-dominated empty cavity is flat) and
    // must cross below before 1 s; bisect the bracket.
    assert!(
        diff(1e-4) > 0.0,
        "laser should start above the empty-cavity curve"
    );
    let mut lo = 1e-4;
    let mut hi = 1.0;
    let crossed = diff(hi) < 0.0;
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if diff(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_cross = (lo * hi).sqrt();
    let report7 = crossover_analysis(kappa_g, kappa_e, i_sat, gamma, i_e, v_t, t_chi).unwrap();
    let ratio = t_cross / report7.t_crossover;

    // v_T sweep at the fixed operating point: gain wins at large floors,
    // empty cavity at small ones.
    let chi = |v: f64| empty_at(t_chi, v) / gain_dalpha2(kappa_g, i_sat, gamma, v, t_chi);
    let flip_exists = chi(1e-13) < 1.0 && chi(1e-7) > 1.0;
    let mut vlo = 1e-13_f64;
    let mut vhi = 1e-7_f64;
    for _ in 0..200 {
        let vm = (vlo * vhi).sqrt();
        if chi(vm) < 1.0 {
            vlo = vm;
        } else {
            vhi = vm;
        }
    }
    let v_crit = (vlo * vhi).sqrt();
    budget(7, t0, 60.0);
    report(
        7,
        crossed && t_cross < 1.0 && ratio > 0.5 && ratio < 2.0 && flip_exists,
        &format!(
            "crossover at t = {t_cross:.3} s (formula {:.3} s, ratio {ratio:.2}), \
             critical floor v_T = {v_crit:.2e} (formula {:.2e}), chi_max = {:.1}",
            report7.t_crossover, report7.v_t_critical, report7.chi_max
        ),
    );
}

// 8. Bistability closed forms: the turning intensities are exact
// stationary points of P0(I), the three-root window opens exactly when
// kappa_L > 8 (kappa_C + c alpha_S), and the weak-contrast approximation
// I_s (3 -+ 4x) is accurate to O(x^2).
#[test]
fn acceptance_08_bistability_closed_forms() {
    let _g = lock();
    let t0 = Instant::now();
    let geom = meter_cavity();
    let i_sat = geom.photons_from_wcm2(1.0).unwrap();
    let alpha_s = 1e-6;
    let trace = TraceGas::new(alpha_s).unwrap();
    let kappa0 = geom.kappa_c() + trace.kappa_s();

    // Stationarity of the input power at the exact turning intensities:
    // dP0/dI ~ kappa^2 + 2 I kappa dkappa/dI must vanish.
    let kappa_l = 12.0 * kappa0;
    let absorber = MediumSpec::saturable_loss(kappa_l, i_sat).unwrap();
    let cavity = BistableCavity::new(&geom, &absorber, &trace).unwrap();
    let tp = cavity.turning_points().unwrap();
    let mut worst_slope = 0.0_f64;
    for i in [tp.i_lower, tp.i_upper] {
        let y = i / i_sat;
        let kappa = kappa0 + kappa_l / (1.0 + y);
        let dkdi = -(kappa_l / i_sat) / ((1.0 + y) * (1.0 + y));
        worst_slope =
            worst_slope.max((kappa * kappa + 2.0 * i * kappa * dkdi).abs() / (kappa * kappa));
    }

    // Window opens iff kappa_L exceeds 8x the total linear loss.
    let mut iff_ok = true;
    for (ratio, expect) in [
        (7.9, false),
        (7.999, false),
        (8.001, true),
        (9.0, true),
        (12.0, true),
    ] {
        let a = MediumSpec::saturable_loss(ratio * kappa0, i_sat).unwrap();
        let c = BistableCavity::new(&geom, &a, &trace).unwrap();
        iff_ok &= c.turning_points().is_some() == expect;
    }

    // Weak-contrast limit: kappa_L = 8 kappa0 (1 + x^2) gives turning
    // intensities I_s (3 -+ 4x) + O(x^2); check the O(x^2) scaling.
    let mut contrast_ok = true;
    let mut worst_x2 = 0.0_f64;
    for x in [0.1, 0.05] {
        let a = MediumSpec::saturable_loss(8.0 * kappa0 * (1.0 + x * x), i_sat).unwrap();
        let c = BistableCavity::new(&geom, &a, &trace).unwrap();
        let tp = c.turning_points().unwrap();
        let (lo_est, hi_est) = small_contrast_turning_estimate(i_sat, x);
        let e_lo = (tp.i_lower - lo_est).abs() / (i_sat * x * x);
        let e_hi = (tp.i_upper - hi_est).abs() / (i_sat * x * x);
        worst_x2 = worst_x2.max(e_lo).max(e_hi);
        contrast_ok &= e_lo <= 6.0 && e_hi <= 6.0;
    }
    budget(8, t0, 10.0);
    report(
        8,
        worst_slope <= 1e-9 && iff_ok && contrast_ok,
        &format!(
            "turning points stationary to {worst_slope:.1e}, three-root window iff \
             kappa_L > 8 kappa0, weak-contrast error {worst_x2:.2} x^2 I_s (O(x^2) as claimed)"
        ),
    );
}

fn sweep_config(delta_alpha: f64, shots: u32, seed: u64) -> SweepUpConfig {
    let (geom, cavity) = demo_cavity(0.0).unwrap();
    let tp = cavity.turning_points().unwrap();
    SweepUpConfig {
        geom,
        absorber: MediumSpec::saturable_loss(cavity.kappa_l, cavity.i_sat).unwrap(),
        alpha_base: 0.0,
        delta_alpha,
        p0_start: 0.8 * tp.p0_down_jump,
        p0_stop: 1.2 * tp.p0_up_jump,
        ramp_duration: 0.005,
        jump_threshold: 0.5 * (tp.i_lower + tp.i_upper),
        dt: 2e-7,
        shots,
        seed,
    }
}

// 9. Differential sweep-up statistics: at delta_alpha = 1e-8 1/cm the
// switch-time ordering is unanimous over 100 shots; at 1e-12 1/cm the
// sign is statistically 50/50 over 400 shots (binomial 95% interval).
#[test]
fn acceptance_09_sweep_up_sign_statistics() {
    let _g = lock();
    let t0 = Instant::now();
    // 1e-8 1/cm = 1e-6 1/m.
    let strong = sweep_up_experiment(&sweep_config(1e-6, 100, 7)).unwrap();
    let unanimous = strong.negative_fraction == 1.0;
    // 1e-12 1/cm = 1e-10 1/m.
    let weak = sweep_up_experiment(&sweep_config(1e-10, 400, 13)).unwrap();
    let p = weak.negative_fraction;
    let half_width = 1.96 * (0.25_f64 / 400.0).sqrt();
    let null_ok = (p - 0.5).abs() <= half_width;
    budget(9, t0, 600.0);
    report(
        9,
        unanimous && null_ok,
        &format!(
            "sign unanimous over 100 shots at 1e-8 1/cm; at 1e-12 1/cm the negative \
             fraction is {p:.3} over 400 shots (95% interval half-width {half_width:.3})"
        ),
    );
}

fn ringdown_config(quantum: bool, detection: bool, seed: u64) -> RingdownConfig {
    let geom = meter_cavity();
    let kappa_c = geom.kappa_c();
    let i_sat = geom.photons_from_wcm2(1.0).unwrap();
    RingdownConfig {
        geom,
        absorber: MediumSpec::saturable_loss(100.0 * kappa_c, i_sat).unwrap(),
        trace: TraceGas::new(0.0).unwrap(),
        i_init: geom.photons_from_wcm2(1e4).unwrap(),
        i_threshold: i_sat / 10.0,
        i_ref: None,
        estimator: TimingEstimator::Calibrated,
        quantum_noise: quantum,
        detection_shotnoise: detection,
        gain_drift: 0.0,
        gain_drift_rms: 0.0,
        tau_sample: 1e-6,
        dt: 2e-8,
        crds_fit_end: 2.3 / kappa_c,
        max_duration: 2.5e-3,
        seed,
    }
}

// 10. Ring-down estimator robustness at kappa_L = 100 kappa_C, I_sat =
// 1 W/cm^2, I_init = 10 kW/cm^2: the timing estimator beats the slope
// fit under large random detector drift, the slope-fit drift bias is
// exactly -g'/c, and the quantum-limited timing floor sits within a
// factor 3 of kappa_C / (c sqrt(I_sat)).
#[test]
fn acceptance_10_estimator_robustness() {
    let _g = lock();
    let t0 = Instant::now();

    // (a) large random drift, full noise: timing RMS < slope-fit RMS.
    let cfg = ringdown_config(true, true, 23);
    let rows = estimator_comparison_random(&cfg, &[300.0], 32).unwrap();
    let rms_timing = rows[0].timing.rms_about_mean;
    let rms_crds = rows[0].crds.rms_about_mean;

    // (b) fixed drift, no noise: the slope-fit estimate moves by exactly
    // -g'/c.
    let quiet = ringdown_config(false, false, 23);
    let fixed = estimator_comparison(&quiet, &[0.0, 100.0], 1).unwrap();
    let shift = fixed[1].crds.mean - fixed[0].crds.mean;
    let expect = -100.0 / SPEED_OF_LIGHT;
    let e_shift = (shift / expect - 1.0).abs();

    // (c) quantum noise only: timing floor vs kappa_C / (c sqrt(I_sat)).
    let floor_cfg = ringdown_config(true, false, 29);
    let floor_rows = estimator_comparison(&floor_cfg, &[0.0], 64).unwrap();
    let sigma = floor_rows[0].timing.rms_about_mean;
    let bad_time = floor_cfg.geom.kappa_c()
        / (SPEED_OF_LIGHT * floor_cfg.geom.photons_from_wcm2(1.0).unwrap().sqrt());
    let floor_ratio = sigma / bad_time;

    budget(10, t0, 600.0);
    report(
        10,
        rms_timing < rms_crds && e_shift <= 1e-6 && floor_ratio > 1.0 / 3.0 && floor_ratio < 3.0,
        &format!(
            "timing RMS {rms_timing:.2e} < slope-fit RMS {rms_crds:.2e} at g' RMS 300/s; \
             slope-fit drift bias -g'/c exact to {e_shift:.1e}; quantum floor \
             {floor_ratio:.2}x kappa_C/(c sqrt(I_sat))"
        ),
    );
}

// 11. Byte-identical outputs: every subcommand rerun with the same
// config and seed reproduces its files exactly.
#[test]
fn acceptance_11_determinism() {
    let _g = lock();
    let jobs: [(&str, &str, &[&str]); 6] = [
        (
            "sensitivity",
            r#"{"n_t": 12, "n_v_t": 6}"#,
            &["time_sweep.csv", "floor_sweep.csv"],
        ),
        (
            "heart-map",
            r#"{"n_gain": 4, "n_drive": 3}"#,
            &[
                "responsivity_map.csv",
                "intensity_map.csv",
                "slice_responsivity.csv",
                "slice_intensity.csv",
            ],
        ),
        (
            "bistability",
            r#"{"n_points": 40}"#,
            &["branches.csv", "sweep_up.csv", "sweep_down.csv"],
        ),
        ("sweep-up", r#"{"shots": 2}"#, &["shots.csv"]),
        (
            "ringdown",
            r#"{"shots": 2, "drift_rms_grid": [0.0, 100.0]}"#,
            &["comparison.csv"],
        ),
        ("trajectory", r#"{"duration": 5e-4}"#, &["trajectory.csv"]),
    ];
    let mut detail = String::new();
    let mut ok = true;
    for (sub, config, files) in jobs {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("job.json");
        std::fs::write(&cfg_path, config).unwrap();
        for out in ["a", "b"] {
            let status = Command::new(env!("CARGO_BIN_EXE_cavlab"))
                .arg(sub)
                .arg("--config")
                .arg(&cfg_path)
                .arg("--out")
                .arg(dir.path().join(out))
                .status()
                .unwrap();
            assert!(status.success(), "{sub} run into {out} failed");
        }
        let mut same = true;
        for f in files.iter().chain(std::iter::once(&"manifest.json")) {
            let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
            let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
            same &= a == b;
        }
        ok &= same;
        detail.push_str(&format!(
            "[{sub}: {}] ",
            if same { "identical" } else { "DIFFERS" }
        ));
    }
    report(11, ok, &format!("rerun outputs byte-identical {detail}"));
}
