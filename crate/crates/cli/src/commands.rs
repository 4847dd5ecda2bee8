use std::fs;
use std::path::Path;

use emitternet::io::{parse_line_list, read_spectrum, write_line_list, write_spectrum, LineListRecord};
use emitternet::overlap::{
    analytic_homogeneous_slope, birthday_threshold, bootstrap_std_errors, collision_probability,
    fit_slope_through_origin, histogram, monte_carlo_threshold, overlap_curve, pairwise_overlap_rate,
    HistogramBin, McThresholdConfig, OverlapCurve,
};
use emitternet::ple::{
    classify_pair_spectrum, fit_multi_lorentzian, linear_grid, synthesize, LorentzianPeak, PleSpectrum,
};
use emitternet::register::{
    fidelity_vs_eta_sweep, ghz_fidelity, ghz_target, hadamard_all, herald_with_loss, init_pumped,
    lossy_ghz_chain, run_ghz_chain, LossModel,
};
use emitternet::spatial::{occupancy_stats, spectral_arrangement_rate, spot_volume, ConfocalPsf};
use emitternet::spectral::{
    min_pair_separation, sample_ensemble, summarize_ensemble, CenterDistribution, EmitterLines,
};
use emitternet::Error;
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};
use crate::run::{fmt, sha256_hex, RunContext};

const PARAMETRIC: &str = "parametric sample of the ensemble model";

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("json! object literal"),
    }
}

fn read_input(path: &str) -> CliResult<Vec<u8>> {
    fs::read(Path::new(path)).map_err(|e| CliError::data("io", format!("{path}: {e}")))
}

fn histogram_rows(bins: &[HistogramBin]) -> Vec<Vec<String>> {
    bins.iter()
        .map(|b| vec![fmt(b.lower), fmt(b.upper), b.count.to_string()])
        .collect()
}

pub fn sample(ctx: &mut RunContext) -> CliResult<Value> {
    let cfg = ctx.config.clone();
    let emitters = sample_ensemble(&cfg.ensemble, cfg.sample.n_emitters, ctx.seed_spec())?;
    let summary = summarize_ensemble(&emitters)?;

    let records: Vec<LineListRecord> = emitters.iter().map(LineListRecord::from).collect();
    let bytes = write_line_list(&records, Some(&ctx.preamble()))?;
    ctx.write_raw("sample_lines.csv", &bytes)?;

    let zfs_mhz: Vec<f64> = emitters.iter().map(|e| e.zfs_ghz() * 1e3).collect();
    let zfs_bins = histogram(&zfs_mhz, cfg.sample.zfs_bin_mhz, 0.0)?;
    ctx.write_table("sample_zfs_histogram.csv", &["zfs_lower_mhz", "zfs_upper_mhz", "count"], &histogram_rows(&zfs_bins))?;

    let lines: Vec<f64> = emitters.iter().flat_map(|e| [e.a1().ghz(), e.a2().ghz()]).collect();
    let line_bins = histogram(&lines, cfg.sample.line_bin_ghz, 0.0)?;
    ctx.write_table(
        "sample_line_histogram.csv",
        &["detuning_lower_ghz", "detuning_upper_ghz", "count"],
        &histogram_rows(&line_bins),
    )?;

    let results = json!({
        "n_emitters": emitters.len(),
        "data_source": PARAMETRIC,
        "lifetime_limited_linewidth_mhz": cfg.ensemble.gamma_mhz(),
        "ensemble_summary": summary,
    });
    ctx.write_summary(object(results))
}

fn load_line_list(path: &str) -> CliResult<(Vec<EmitterLines>, String)> {
    let bytes = read_input(path)?;
    let records = parse_line_list(&bytes)?;
    let emitters = records.iter().map(LineListRecord::to_emitter).collect::<Result<Vec<_>, Error>>()?;
    Ok((emitters, sha256_hex(&bytes)))
}

fn sub_curve(curve: &OverlapCurve, keep: &[usize]) -> OverlapCurve {
    OverlapCurve {
        windows_mhz: keep.iter().map(|&i| curve.windows_mhz[i]).collect(),
        probabilities: keep.iter().map(|&i| curve.probabilities[i]).collect(),
        std_errors: keep.iter().map(|&i| curve.std_errors[i]).collect(),
        n_emitters: curve.n_emitters,
        n_pairs: curve.n_pairs,
    }
}

pub fn overlap(ctx: &mut RunContext) -> CliResult<Value> {
    let cfg = ctx.config.clone();
    let seed = ctx.seed_spec();
    let (emitters, source, input_sha) = match &cfg.overlap.input {
        Some(path) => {
            let (e, sha) = load_line_list(path)?;
            (e, format!("line list {path}"), Some(sha))
        }
        None => (
            sample_ensemble(&cfg.ensemble, cfg.overlap.n_emitters, seed.family(0))?,
            PARAMETRIC.to_string(),
            None,
        ),
    };

    let gamma = cfg.ensemble.gamma_mhz();
    let window = cfg.overlap.window_mhz.unwrap_or(gamma);
    let scan: Vec<f64> = cfg.overlap.curve_windows_gamma.iter().map(|g| g * gamma).collect();
    let mut windows = scan.clone();
    windows.push(window);
    windows.sort_by(f64::total_cmp);
    windows.dedup();

    let binomial = overlap_curve(&emitters, &windows, cfg.combos)?;
    let boot = bootstrap_std_errors(&emitters, &windows, cfg.combos, cfg.overlap.bootstrap_resamples, seed.family(1))?;
    let curve = binomial.clone().with_std_errors(boot)?;

    let at = windows.iter().position(|w| *w == window).expect("window inserted above");
    let scan_idx: Vec<usize> = scan
        .iter()
        .map(|s| windows.iter().position(|w| w == s).expect("scan window inserted above"))
        .collect();
    let slope = fit_slope_through_origin(&sub_curve(&curve, &scan_idx), gamma).ok();

    let union_bound = match cfg.ensemble.center {
        CenterDistribution::Uniform { half_width_ghz } => {
            analytic_homogeneous_slope(half_width_ghz, gamma, cfg.combos.len()).ok()
        }
        CenterDistribution::Normal { .. } => None,
    };

    let mut pairs = Vec::new();
    for i in 0..emitters.len() {
        for j in i + 1..emitters.len() {
            let d = min_pair_separation(&emitters[i], &emitters[j], cfg.combos);
            if d < window {
                pairs.push(vec![emitters[i].id.clone(), emitters[j].id.clone(), fmt(d)]);
            }
        }
    }

    let rows: Vec<Vec<String>> = (0..curve.len())
        .map(|i| {
            let w = curve.windows_mhz[i];
            vec![
                fmt(w),
                fmt(w / gamma),
                fmt(curve.probabilities[i]),
                fmt(curve.std_errors[i]),
                fmt(binomial.std_errors[i]),
                slope.map(|s| fmt(s * w / gamma)).unwrap_or_default(),
            ]
        })
        .collect();
    ctx.write_table(
        "overlap_curve.csv",
        &["window_mhz", "window_over_gamma", "probability", "std_error_bootstrap", "std_error_binomial", "fit_probability"],
        &rows,
    )?;
    ctx.write_table("overlap_pairs.csv", &["emitter_a", "emitter_b", "min_separation_mhz"], &pairs)?;

    let combos: Vec<_> = cfg.combos.iter().collect();
    let results = json!({
        "data_source": source,
        "input_sha256": input_sha,
        "n_emitters": curve.n_emitters,
        "n_pairs": curve.n_pairs,
        "combos": combos,
        "window_mhz": window,
        "lifetime_limited_linewidth_mhz": gamma,
        "overlapping_pairs": pairs.len(),
        "probability": curve.probabilities[at],
        "std_error_bootstrap": curve.std_errors[at],
        "std_error_binomial": binomial.std_errors[at],
        "bootstrap_resamples": cfg.overlap.bootstrap_resamples,
        "slope_per_gamma": slope,
        "fit_windows_gamma": cfg.overlap.curve_windows_gamma,
        "union_bound_slope_per_gamma": union_bound,
    });
    ctx.write_summary(object(results))
}

pub fn birthday(ctx: &mut RunContext) -> CliResult<Value> {
    let cfg = ctx.config.clone();
    let b = &cfg.birthday;
    let seed = ctx.seed_spec();
    let window = b.window_mhz.unwrap_or_else(|| cfg.ensemble.gamma_mhz());

    let (q, q_source) = match b.q {
        Some(q) => (q, "given"),
        None => {
            let q = pairwise_overlap_rate(&cfg.ensemble, window, cfg.combos, b.q_pairs, seed.family(0))?;
            if q == 0.0 {
                return Err(CliError::data(
                    "domain",
                    format!("no overlapping pair among {} draws; raise birthday.q_pairs or the window", b.q_pairs),
                ));
            }
            (q, "monte_carlo_pairs")
        }
    };
    let threshold = birthday_threshold(q, b.target)?;
    let rows: Vec<Vec<String>> = threshold
        .curve
        .iter()
        .map(|(n, p)| vec![n.to_string(), fmt(*p)])
        .collect();
    ctx.write_table("birthday_curve.csv", &["n_emitters", "collision_probability"], &rows)?;

    let mut results = object(json!({
        "n_star": threshold.n_star,
        "target": b.target,
        "pairwise_q": q,
        "q_source": q_source,
        "window_mhz": if b.q.is_some() { Value::Null } else { json!(window) },
        "probability_at_n_star": collision_probability(q, threshold.n_star),
        "probability_below_n_star": collision_probability(q, threshold.n_star - 1),
    }));
    if b.q.is_none() {
        results.insert("q_pairs".into(), json!(b.q_pairs));
    }

    if b.monte_carlo {
        let mc_cfg = McThresholdConfig {
            q_pairs: b.q_pairs,
            combos: cfg.combos,
            ..McThresholdConfig::new(window, b.target, b.trials)
        };
        let mc = monte_carlo_threshold(&cfg.ensemble, &mc_cfg, seed.family(1))?;
        let rows: Vec<Vec<String>> = mc
            .empirical_curve
            .iter()
            .map(|(n, p, se)| vec![n.to_string(), fmt(*p), fmt(*se)])
            .collect();
        ctx.write_table("birthday_survey_curve.csv", &["n_emitters", "collision_probability", "std_error"], &rows)?;
        results.insert(
            "monte_carlo".into(),
            json!({
                "window_mhz": window,
                "n_star": mc.threshold.n_star,
                "n_star_ci95": [mc.n_star_ci.0, mc.n_star_ci.1],
                "pairwise_q": mc.threshold.pairwise_q,
                "closed_form_n_star_at_mc_q": mc.closed_form.as_ref().map(|c| c.n_star),
                "stop_median": mc.stop_median,
                "stop_quantiles": mc.stop_quantiles,
                "trials": mc.trials,
                "censored_trials": mc.censored_trials,
            }),
        );
    }
    ctx.write_summary(results)
}

fn peak_json(p: &LorentzianPeak) -> Value {
    json!({ "center_ghz": p.center.ghz(), "fwhm_mhz": p.fwhm_mhz, "amplitude": p.amplitude })
}

pub fn fit_ple(ctx: &mut RunContext) -> CliResult<Value> {
    let cfg = ctx.config.clone();
    let p = &cfg.ple;
    let (spectrum, source, input_sha): (PleSpectrum, String, Option<String>) = match &p.input {
        Some(path) => {
            let bytes = read_input(path)?;
            let sidecar = p.sidecar.as_deref().map(read_input).transpose()?;
            (read_spectrum(&bytes, sidecar.as_deref())?, format!("spectrum {path}"), Some(sha256_hex(&bytes)))
        }
        None => {
            let syn = &p.synthetic;
            let peaks = syn
                .peaks
                .iter()
                .map(|pk| LorentzianPeak::new(pk.center_ghz, pk.fwhm_mhz, pk.amplitude))
                .collect::<Result<Vec<_>, Error>>()?;
            let grid = linear_grid(syn.start_ghz, syn.stop_ghz, syn.step_ghz)?;
            let s = synthesize(&peaks, syn.background, &grid, syn.shot_noise, ctx.seed_spec())?;
            let (csv, side) = write_spectrum(&s, Some(&ctx.preamble()))?;
            ctx.write_raw("ple_spectrum.csv", &csv)?;
            ctx.write_raw("ple_spectrum.json", &side)?;
            (s, "synthetic spectrum from configuration".to_string(), None)
        }
    };

    let fit = fit_multi_lorentzian(&spectrum, p.k, None)?;
    let x = spectrum.frequencies_ghz();
    let rows: Vec<Vec<String>> = x
        .iter()
        .zip(spectrum.counts())
        .map(|(&nu, &y)| {
            let m = fit.background + fit.peaks.iter().map(|pk| pk.value(nu)).sum::<f64>();
            vec![fmt(nu), fmt(y), fmt(m), fmt(y - m)]
        })
        .collect();
    ctx.write_table("ple_fit.csv", &["frequency_ghz", "counts", "model", "residual"], &rows)?;

    let mut deferred = None;
    let classification = if p.classify && p.k == 3 {
        match classify_pair_spectrum(&fit, &p.zfs_prior) {
            Ok(a) => json!(a),
            Err(e @ Error::Classification { .. }) => {
                let v = json!({ "rejected": e.to_string() });
                deferred = Some(CliError::from(e));
                v
            }
            Err(e) => return Err(e.into()),
        }
    } else {
        Value::Null
    };

    let results = json!({
        "data_source": source,
        "input_sha256": input_sha,
        "n_points": spectrum.len(),
        "dwell_time_s": spectrum.dwell_time_s,
        "k": p.k,
        "peaks": fit.peaks.iter().map(peak_json).collect::<Vec<_>>(),
        "background": fit.background,
        "residual_rms": fit.residual_rms,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "classification": classification,
    });
    let summary = ctx.write_summary(object(results))?;
    if !fit.converged {
        return Err(CliError::not_converged(format!(
            "fit did not converge within {} iterations; outputs written",
            fit.iterations
        )));
    }
    match deferred {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

pub fn protocol(ctx: &mut RunContext) -> CliResult<Value> {
    let cfg = ctx.config.clone();
    let n = cfg.protocol.n;
    let eta = cfg.protocol.eta;
    let loss = LossModel::new(eta)?;

    let chain = run_ghz_chain(n)?;
    let state = &chain.state;
    let amps = state.amplitudes();
    let rows: Vec<Vec<String>> = amps
        .iter()
        .enumerate()
        .map(|(i, a)| vec![state.label(i), fmt(a.re), fmt(a.im), fmt(a.norm_sqr())])
        .collect();
    ctx.write_table("protocol_amplitudes.csv", &["basis", "re", "im", "probability"], &rows)?;
    let nonzero: Vec<Value> = amps
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > 1e-12)
        .map(|(i, a)| json!({ "basis": state.label(i), "re": a.re, "im": a.im }))
        .collect();

    let pair = herald_with_loss(&hadamard_all(&init_pumped(2)?), 0, 1, &loss)?;
    let (mixture, all_click) = lossy_ghz_chain(n, &loss)?;
    let enumeration = ghz_fidelity(&mixture, n)?;
    let closed = emitternet::register::closed_form_chain_fidelity(n, eta);
    let lossless = ghz_target(n)?.overlap_sqr(state);

    if !cfg.protocol.eta_sweep.is_empty() {
        let sweep = fidelity_vs_eta_sweep(n, &cfg.protocol.eta_sweep)?;
        let rows: Vec<Vec<String>> = sweep
            .iter()
            .map(|r| vec![fmt(r.eta), fmt(r.closed_form), fmt(r.enumeration), fmt(r.enumeration - r.closed_form)])
            .collect();
        ctx.write_table(
            "protocol_fidelity_sweep.csv",
            &["eta", "fidelity_closed_form", "fidelity_enumeration", "difference"],
            &rows,
        )?;
    }

    let results = json!({
        "n": n,
        "eta": eta,
        "success_probability": chain.success_probability,
        "lossless_target_overlap": lossless,
        "ghz_amplitudes": nonzero,
        "fidelity": closed,
        "fidelity_enumeration": enumeration,
        "fidelity_difference": enumeration - closed,
        "herald": {
            "closed_form": pair.closed_form_fidelity,
            "enumeration": pair.enumerated_fidelity,
            "click_probability": pair.click_probability,
        },
        "all_heralds_click_probability": all_click,
        "loss_model": "closed form p = 1/(3 - 2 eta) per herald, chained as p^(n-1); enumeration conditions every herald on exactly one click with independent detection efficiency eta and no dark counts",
    });
    ctx.write_summary(object(results))
}

pub fn spatial(ctx: &mut RunContext) -> CliResult<Value> {
    let cfg = ctx.config.clone();
    let sp = &cfg.spatial;
    let seed = ctx.seed_spec();
    let lateral = sp.lateral_fwhm_um.ok_or_else(|| {
        CliError::data(
            "validation",
            "the lateral confocal resolution has no default; set spatial.lateral_fwhm_um or pass --lateral-fwhm-um",
        )
    })?;
    let psf = ConfocalPsf::new(lateral, sp.axial_fwhm_um)?;
    let occ = occupancy_stats(sp.density_per_um3, &psf, sp.trials, seed.family(0))?;
    let rows: Vec<Vec<String>> = occ
        .distribution
        .iter()
        .zip(&occ.closed_form)
        .enumerate()
        .map(|(k, (mc, cf))| vec![k.to_string(), fmt(*mc), fmt(*cf)])
        .collect();
    ctx.write_table("spatial_occupancy.csv", &["k", "monte_carlo", "poisson"], &rows)?;

    let chain = match sp.chain_length {
        Some(k) => {
            let window = sp.chain_window_mhz.unwrap_or_else(|| cfg.ensemble.gamma_mhz());
            let r = spectral_arrangement_rate(&cfg.ensemble, k, window, sp.chain_trials, seed.family(1))?;
            json!({
                "k": k,
                "window_mhz": window,
                "probability": r.probability,
                "std_error": r.std_error,
                "hits": r.hits,
                "trials": r.trials,
            })
        }
        None => Value::Null,
    };

    let sigma = (occ.multi_emitter_fraction - occ.multi_emitter_closed_form) / occ.multi_emitter_std_error.max(f64::MIN_POSITIVE);
    let results = json!({
        "density_per_um3": sp.density_per_um3,
        "lateral_fwhm_um": lateral,
        "axial_fwhm_um": sp.axial_fwhm_um,
        "spot_volume_um3": spot_volume(&psf),
        "lambda": occ.lambda,
        "mean_per_spot": occ.mean_per_spot,
        "multi_emitter_fraction": occ.multi_emitter_fraction,
        "multi_emitter_std_error": occ.multi_emitter_std_error,
        "multi_emitter_closed_form": occ.multi_emitter_closed_form,
        "deviation_sigma": sigma,
        "trials": occ.trials,
        "chain": chain,
    });
    ctx.write_summary(object(results))
}
