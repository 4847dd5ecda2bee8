//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use emitternet::io::{write_line_list, LineListRecord};
use emitternet::overlap::{birthday_threshold, bootstrap_std_error, fit_slope_through_origin, overlap_curve};
use emitternet::ple::{fit_multi_lorentzian, linear_grid, synthesize, LorentzianPeak};
use emitternet::register::{
    closed_form_chain_fidelity, closed_form_herald_fidelity, ghz_fidelity, hadamard_all, herald_pair,
    herald_with_loss, init_pumped, lossy_ghz_chain, run_ghz_chain, LossModel, Spin,
};
use emitternet::spatial::{occupancy_stats, spot_volume, ConfocalPsf};
use emitternet::spectral::{
    lifetime_limited_linewidth, sample_ensemble, EmitterLines, EnsembleModel, LineCombos,
};
use emitternet::SeedSpec;
use serde_json::Value;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_emitternet")
}

fn run_cli(args: &[&str]) -> Result<Value, String> {
    let out = Command::new(bin())
        .args(args)
        .env_remove("EMITTERNET_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited with {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())
}

fn criterion_1() -> Outcome {
    let r = birthday_threshold(0.0098, 0.5).map_err(|e| e.to_string())?;
    ensure(r.n_star == 13, || format!("n* = {}", r.n_star))?;
    let runs = 1000;
    let start = Instant::now();
    for _ in 0..runs {
        std::hint::black_box(birthday_threshold(std::hint::black_box(0.0098), 0.5).unwrap());
    }
    let per_call = start.elapsed().as_secs_f64() / runs as f64;
    ensure(per_call < 1e-3, || format!("{per_call:.2e} s per call"))?;
    Ok(format!("n* = 13, {:.1} μs per call", per_call * 1e6))
}

/// 26 single emitters and 12 near-coincident pairs on a 0.37 GHz comb.
/// Comb spacing keeps every cross-group line combination ≥ 73 MHz apart.
fn twelve_pair_fixture() -> Vec<EmitterLines> {
    let zfs = 1.027;
    let mut out = Vec::new();
    for g in 0..38 {
        let c = -7.0 + 0.37 * g as f64;
        let mut push = |c: f64| {
            let id = format!("f{:02}", out.len() + 1);
            out.push(EmitterLines::new(id, c - zfs / 2.0, c + zfs / 2.0, 300.0, 300.0).unwrap());
        };
        push(c);
        if g % 3 == 0 && g < 36 {
            push(c + 0.010);
        }
    }
    out
}

fn criterion_2(dir: &Path) -> Outcome {
    let fixture = twelve_pair_fixture();
    ensure(fixture.len() == 50, || format!("fixture has {} emitters", fixture.len()))?;
    let curve = overlap_curve(&fixture, &[29.0], LineCombos::ALL).map_err(|e| e.to_string())?;
    let p = curve.probabilities[0];
    ensure((p - 12.0 / 1225.0).abs() < 1e-15, || format!("P = {p}"))?;
    ensure((0.007..=0.013).contains(&p), || format!("P = {p} outside 1.0 ± 0.3 %"))?;
    let se = bootstrap_std_error(&fixture, 29.0, LineCombos::ALL, 10_000, SeedSpec::new(2)).map_err(|e| e.to_string())?;
    ensure((0.001..=0.01).contains(&se), || format!("bootstrap se = {se}"))?;

    let records: Vec<LineListRecord> = fixture.iter().map(LineListRecord::from).collect();
    let csv = dir.join("fixture_lines.csv");
    fs::write(&csv, write_line_list(&records, None).unwrap()).map_err(|e| e.to_string())?;
    let out = dir.join("c2");
    let v = run_cli(&[
        "overlap",
        "--input",
        csv.to_str().unwrap(),
        "--window-mhz",
        "29",
        "--out",
        out.to_str().unwrap(),
    ])?;
    let cli_p = v["probability"].as_f64().unwrap_or(f64::NAN);
    let cli_se = v["std_error_bootstrap"].as_f64().unwrap_or(f64::NAN);
    ensure((cli_p - 0.0098).abs() < 5e-5, || format!("CLI probability {cli_p}"))?;
    ensure(v["overlapping_pairs"] == 12, || format!("CLI pairs {}", v["overlapping_pairs"]))?;
    ensure((0.001..=0.01).contains(&cli_se), || format!("CLI bootstrap se {cli_se}"))?;
    Ok(format!("P = 12/1225 = {p:.5}, bootstrap se = {se:.5} (CLI {cli_p:.5} ± {cli_se:.5})"))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let uniform = EnsembleModel::default();
    let gamma = uniform.gamma_mhz();
    // 448 emitters give 100 128 pairs
    let n = 448;
    let windows: Vec<f64> = (1..=10).map(|i| 0.5 * i as f64 * gamma).collect();
    let e = sample_ensemble(&uniform, n, SeedSpec::new(3)).map_err(|e| e.to_string())?;
    let curve = overlap_curve(&e, &windows, LineCombos::ALL).map_err(|e| e.to_string())?;
    ensure(curve.n_pairs >= 100_000, || format!("{} pairs", curve.n_pairs))?;
    let slope = fit_slope_through_origin(&curve, gamma).map_err(|e| e.to_string())?;
    ensure((0.0085..=0.013).contains(&slope), || format!("slope {slope}"))?;

    let normal = EnsembleModel::with_normal_centers(emitternet::spectral::DEFAULT_CENTER_SIGMA_GHZ);
    let en = sample_ensemble(&normal, n, SeedSpec::new(3)).map_err(|e| e.to_string())?;
    let small: Vec<f64> = windows.iter().copied().filter(|w| *w <= 2.0 * gamma).collect();
    let cn = overlap_curve(&en, &small, LineCombos::ALL).map_err(|e| e.to_string())?;
    let above = cn
        .windows_mhz
        .iter()
        .zip(&cn.probabilities)
        .all(|(w, p)| *p > slope * w / gamma);
    ensure(above, || format!("normal-centre curve {:?} not above fit", cn.probabilities))?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed < 30.0, || format!("{elapsed:.1} s"))?;
    Ok(format!(
        "slope {:.3} % per Γ over {} pairs; normal centres above fit at Δ ≤ 2Γ; {elapsed:.2} s",
        slope * 100.0,
        curve.n_pairs
    ))
}

fn criterion_4() -> Outcome {
    let g = lifetime_limited_linewidth(5.5).map_err(|e| e.to_string())?;
    ensure((g - 28.94).abs() <= 0.01, || format!("Γ = {g}"))?;
    Ok(format!("Γ = {g:.4} MHz"))
}

fn criterion_5() -> Outcome {
    use Spin::{Down as D, Up as U};
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let r = run_ghz_chain(4).map_err(|e| e.to_string())?;
    for (idx, a) in r.state.amplitudes().iter().enumerate() {
        let want = if idx == 0 || idx == 15 { s } else { 0.0 };
        ensure((a.re - want).abs() < 1e-12 && a.im.abs() < 1e-12, || format!("amplitude {idx} = {a}"))?;
    }
    let h = hadamard_all(&init_pumped(2).unwrap());
    let [_, one, _] = herald_pair(&h, 0, 1).map_err(|e| e.to_string())?;
    let st = one.state().map_err(|e| e.to_string())?;
    let uu = st.amplitude(&[U, U]);
    let dd = st.amplitude(&[D, D]);
    ensure((uu.re - s).abs() < 1e-12 && (dd.re + s).abs() < 1e-12, || format!("herald state {uu} {dd}"))?;
    ensure(st.amplitude(&[U, D]).norm() < 1e-12 && st.amplitude(&[D, U]).norm() < 1e-12, || "odd-parity residue".into())?;
    for n in 2..=5 {
        let p = run_ghz_chain(n).map_err(|e| e.to_string())?.success_probability;
        ensure((p - 2f64.powi(1 - n as i32)).abs() < 1e-12, || format!("n = {n}: success {p}"))?;
    }
    Ok("GHZ₄ = (↑↑↑↑ + ↓↓↓↓)/√2, herald (↑↑ − ↓↓)/√2, success 2^(1−n) for n = 2..5".into())
}

fn criterion_6() -> Outcome {
    let p = closed_form_herald_fidelity(0.85);
    ensure((p - 0.7692).abs() <= 1e-4, || format!("p = {p}"))?;
    for (n, quoted, rounded) in [(2, 0.769, 0.8), (3, 0.592, 0.6), (4, 0.455, 0.5)] {
        let f = closed_form_chain_fidelity(n, 0.85);
        ensure((f - quoted).abs() <= 5e-4, || format!("F{n} = {f}"))?;
        ensure((f - rounded).abs() <= 0.06, || format!("F{n} = {f} vs {rounded}"))?;
    }
    let h = hadamard_all(&init_pumped(2).unwrap());
    let ideal = herald_with_loss(&h, 0, 1, &LossModel::new(1.0).unwrap()).map_err(|e| e.to_string())?;
    ensure(ideal.closed_form_fidelity == 1.0, || format!("closed form at η = 1: {}", ideal.closed_form_fidelity))?;
    ensure((ideal.enumerated_fidelity - 1.0).abs() < 1e-12, || format!("enumeration at η = 1: {}", ideal.enumerated_fidelity))?;
    let lossy = herald_with_loss(&h, 0, 1, &LossModel::new(0.85).unwrap()).map_err(|e| e.to_string())?;
    let (mix, _) = lossy_ghz_chain(4, &LossModel::new(0.85).unwrap()).map_err(|e| e.to_string())?;
    let f4_enum = ghz_fidelity(&mix, 4).map_err(|e| e.to_string())?;
    Ok(format!(
        "p = {p:.4}; F2..F4 = {:.3}, {:.3}, {:.3}; η = 0.85 herald: closed form {:.4} vs enumeration {:.4}; F4 enumeration {f4_enum:.4}; both 1 at η = 1",
        closed_form_chain_fidelity(2, 0.85),
        closed_form_chain_fidelity(3, 0.85),
        closed_form_chain_fidelity(4, 0.85),
        lossy.closed_form_fidelity,
        lossy.enumerated_fidelity
    ))
}

fn peak(c: f64, w: f64, a: f64) -> LorentzianPeak {
    LorentzianPeak::new(c, w, a).unwrap()
}

fn criterion_7() -> Outcome {
    let grid = linear_grid(-3.0, 3.0, 0.01).unwrap();
    let cases = [
        vec![peak(0.12, 290.0, 80.0)],
        vec![peak(-0.5135, 316.0, 100.0), peak(0.5135, 280.0, 70.0)],
        vec![peak(-1.1, 300.0, 90.0), peak(0.05, 350.0, 150.0), peak(0.95, 260.0, 60.0)],
    ];
    let mut worst: f64 = 0.0;
    for truth in &cases {
        let s = synthesize(truth, 5.0, &grid, false, SeedSpec::new(7)).unwrap();
        let fit = fit_multi_lorentzian(&s, truth.len(), None).map_err(|e| e.to_string())?;
        ensure(fit.converged, || format!("{}-peak fit did not converge", truth.len()))?;
        for (f, t) in fit.peaks.iter().zip(truth) {
            for (got, want) in [
                (f.center.ghz(), t.center.ghz()),
                (f.fwhm_mhz, t.fwhm_mhz),
                (f.amplitude, t.amplitude),
            ] {
                worst = worst.max(((got - want) / want).abs());
            }
        }
        worst = worst.max((fit.background - 5.0).abs() / 5.0);
    }
    ensure(worst < 1e-6, || format!("worst relative error {worst:e}"))?;

    // peak SNR A/sqrt(A + background) = 105/sqrt(110) ≈ 10
    let truth = [peak(-0.5135, 316.0, 105.0), peak(0.5135, 316.0, 105.0)];
    let base = SeedSpec::new(77);
    let mut hits = 0;
    for t in 0..100 {
        let s = synthesize(&truth, 5.0, &grid, true, base.substream(t)).unwrap();
        if let Ok(fit) = fit_multi_lorentzian(&s, 2, None) {
            let ok = fit
                .peaks
                .iter()
                .zip(&truth)
                .all(|(f, p)| (f.center.ghz() - p.center.ghz()).abs() * 1e3 <= 10.0);
            hits += usize::from(ok);
        }
    }
    ensure(hits >= 95, || format!("{hits}/100 noisy trials within ±10 MHz"))?;
    Ok(format!("noiseless worst relative error {worst:.1e}; noisy centres within ±10 MHz in {hits}/100"))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let psf = ConfocalPsf::new(0.5, 1.22).unwrap();
    let v = spot_volume(&psf);
    let mut parts = Vec::new();
    for (i, lambda) in [0.01, 0.1, 1.0].into_iter().enumerate() {
        let s = occupancy_stats(lambda / v, &psf, 100_000, SeedSpec::new(8).family(i as u32)).map_err(|e| e.to_string())?;
        let p = s.multi_emitter_closed_form;
        let sigma = (p * (1.0 - p) / s.trials as f64).sqrt();
        let z = (s.multi_emitter_fraction - p) / sigma;
        ensure(z.abs() < 3.0, || format!("λ = {lambda}: MC {} vs {p} ({z:.2}σ)", s.multi_emitter_fraction))?;
        parts.push(format!("λ={lambda}: {z:+.2}σ"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed < 10.0, || format!("{elapsed:.1} s"))?;
    Ok(format!("{}; {elapsed:.2} s", parts.join(", ")))
}

fn strip_timestamp(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes)
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"generated_at\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn criterion_9(dir: &Path) -> Outcome {
    let config = dir.join("det_config.json");
    fs::write(
        &config,
        r#"{"seed": 4242, "overlap": {"bootstrap_resamples": 500},
            "birthday": {"monte_carlo": true, "trials": 1000, "q_pairs": 50000},
            "spatial": {"lateral_fwhm_um": 0.5, "trials": 20000, "chain_length": 3, "chain_trials": 20000}}"#,
    )
    .map_err(|e| e.to_string())?;
    let commands = ["sample", "overlap", "birthday", "fit-ple", "protocol", "spatial"];
    for (run, threads) in [("a", "1"), ("b", "4")] {
        let out = dir.join(format!("det_{run}"));
        for c in commands {
            run_cli(&[c, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", threads])?;
        }
        run_cli(&["report", "--out", out.to_str().unwrap()])?;
    }
    let mut compared = 0;
    for entry in fs::read_dir(dir.join("det_a")).map_err(|e| e.to_string())? {
        let name = entry.map_err(|e| e.to_string())?.file_name();
        let a = fs::read(dir.join("det_a").join(&name)).map_err(|e| e.to_string())?;
        let b = fs::read(dir.join("det_b").join(&name)).map_err(|e| e.to_string())?;
        let name = name.to_string_lossy().to_string();
        if name.ends_with(".json") {
            ensure(strip_timestamp(&a) == strip_timestamp(&b), || format!("{name} differs"))?;
        } else if name.ends_with(".csv") {
            ensure(a == b, || format!("{name} differs"))?;
        }
        compared += 1;
    }
    Ok(format!("{compared} files identical across two runs (1 and 4 threads), timestamps excluded"))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let dir = tmp.path();
    let criteria: Vec<Criterion> = vec![
        ("birthday threshold", Box::new(criterion_1)),
        ("pair-overlap probability", Box::new(|| criterion_2(dir))),
        ("homogeneous slope", Box::new(criterion_3)),
        ("linewidth formula", Box::new(criterion_4)),
        ("protocol exactness", Box::new(criterion_5)),
        ("fidelity model", Box::new(criterion_6)),
        ("fit recovery", Box::new(criterion_7)),
        ("spatial oracle", Box::new(criterion_8)),
        ("determinism", Box::new(|| criterion_9(dir))),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
            .unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
