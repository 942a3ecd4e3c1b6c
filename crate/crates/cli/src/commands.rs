use qrad_core::detection::{advantage_db, report, Prefactor, QiScenario, Source};
use qrad_core::jtwpa::{
    bias_sweep_idler, calibrate_coupling, floor_for_depth, gain_vs_pump_power, signal_for_regime,
    BiasMapping, JtwpaModel, PowerMapping, PumpConfig, Regime, SquidCellParams,
};
use qrad_core::link::{end_to_end_error, friis_cascade, AmplifierStage, LinkBudget};
use qrad_core::montecarlo::{monte_carlo_phase_conjugate, McConfig, MIN_TRIALS};
use qrad_core::sweep::{ColumnData, SweepResult};
use qrad_core::units::{dbm_to_watts, linear_to_db};

use crate::config::{grid, ConfigError, PrefactorChoice, RunConfig, Scale};

/// Share of grid points that must succeed for a sweep to count as complete.
pub const MIN_SUCCESS_FRACTION: f64 = 0.9;

#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Numerical(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

pub struct Output {
    pub result: SweepResult,
    pub summary: String,
    /// Set when too many sweep points failed.
    pub partial: Option<String>,
}

fn config_err(field: &str) -> impl Fn(qrad_core::Error) -> Failure + '_ {
    move |e| {
        Failure::Config(ConfigError {
            field: field.to_string(),
            message: e.to_string(),
        })
    }
}

fn numerical(e: qrad_core::Error) -> Failure {
    Failure::Numerical(e.to_string())
}

fn schema(e: qrad_core::Error) -> Failure {
    Failure::Numerical(format!("internal column error: {e}"))
}

fn prefactor(cfg: &RunConfig) -> Prefactor {
    match cfg.scenario.prefactor {
        PrefactorChoice::Unity => Prefactor::Unity,
        PrefactorChoice::Half => Prefactor::Half,
    }
}

fn base_scenario(cfg: &RunConfig) -> Result<QiScenario, Failure> {
    let s = &cfg.scenario;
    QiScenario::new(s.eta, s.n_s, s.n_b, s.lambda, s.modes).map_err(config_err("scenario"))
}

/// Scenario with one field replaced by a sweep value.
fn scenario_at(base: &QiScenario, variable: &str, value: f64) -> Result<QiScenario, Failure> {
    let mut s = *base;
    match variable {
        "eta" => s.eta = value,
        "n_s" => s.n_s = value,
        "n_b" => s.n_b = value,
        "modes" => s.modes = value.round().max(1.0) as u64,
        _ => unreachable!("sweep variable checked by sweep_for"),
    }
    s.validate().map_err(config_err("sweep"))?;
    Ok(s)
}

fn scenario_grid(cfg: &RunConfig, allowed: &[&str]) -> Result<(String, Vec<QiScenario>), Failure> {
    let base = base_scenario(cfg)?;
    match cfg.sweep_for(allowed)? {
        Some(sw) => {
            let points = sw
                .grid()
                .into_iter()
                .map(|v| scenario_at(&base, &sw.variable, v))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((sw.variable.clone(), points))
        }
        None => Ok(("modes".to_string(), vec![base])),
    }
}

fn value_of(s: &QiScenario, variable: &str) -> f64 {
    match variable {
        "eta" => s.eta,
        "n_s" => s.n_s,
        "n_b" => s.n_b,
        _ => s.modes as f64,
    }
}

pub fn qi_error(cfg: &RunConfig) -> Result<Output, Failure> {
    let (variable, points) = scenario_grid(cfg, &["eta", "n_s", "n_b", "modes"])?;
    let pf = prefactor(cfg);
    let mut xs = Vec::new();
    let mut p_cl = Vec::new();
    let mut p_tmsv = Vec::new();
    let mut adv = Vec::new();
    for s in &points {
        xs.push(value_of(s, &variable));
        p_cl.push(report(s, Source::Classical, pf).map_err(numerical)?.p_error);
        p_tmsv.push(
            report(s, Source::Quantum, pf)
                .map_err(config_err("scenario.n_b"))?
                .p_error,
        );
        adv.push(advantage_db(s.n_b).map_err(config_err("scenario.n_b"))?);
    }
    let mut r = SweepResult::new();
    r.push_floats("sweep_var", xs).map_err(schema)?;
    r.push_floats("p_cl", p_cl).map_err(schema)?;
    r.push_floats("p_tmsv", p_tmsv).map_err(schema)?;
    r.push_floats("advantage_db", adv).map_err(schema)?;
    r.set_meta("sweep_variable", &variable)
        .set_meta("prefactor", format!("{:?}", pf).to_lowercase());
    Ok(Output {
        summary: format!("{} points over {variable}", points.len()),
        result: r,
        partial: None,
    })
}

fn cell(cfg: &RunConfig) -> Result<SquidCellParams, Failure> {
    let d = &cfg.device;
    SquidCellParams::new(d.c_g, d.l_g, d.c_j, d.i_c, d.n_cells).map_err(config_err("device"))
}

fn power_mapping(cfg: &RunConfig) -> Result<PowerMapping, Failure> {
    PowerMapping::unit_at(
        dbm_to_watts(cfg.device.reference_power_dbm),
        cfg.device.z_ref,
    )
    .map_err(config_err("device.reference_power_dBm"))
}

fn regime_for(f_pump: f64, f_signal: f64) -> Regime {
    if (f_signal - f_pump / 2.0).abs() <= 1e-12 * f_pump {
        Regime::Degenerate
    } else {
        Regime::NonDegenerate
    }
}

/// Line model with `κ` from the config or calibrated against the target gain.
fn model(cfg: &RunConfig, meta: &mut Vec<(String, String)>) -> Result<JtwpaModel, Failure> {
    let cell = cell(cfg)?;
    let base = JtwpaModel::new(cell, cfg.device.kappa.unwrap_or(1.0))
        .map_err(config_err("device.i_c_A"))?;
    let base = JtwpaModel {
        kerr: cfg.device.kerr,
        ..base
    };
    if let Some(k) = cfg.device.kappa {
        meta.push(("kappa".into(), format!("{k:.16e}")));
        meta.push(("kappa_source".into(), "config".into()));
        return Ok(base);
    }
    let c = &cfg.calibration;
    let power = power_mapping(cfg)?;
    let regime = regime_for(c.pump_frequency, c.signal_frequency);
    let pump = PumpConfig {
        f_pump: c.pump_frequency,
        a_pump: power.pump_amplitude_dbm(c.pump_power_dbm),
        phi_dc: c.phi_dc,
        regime,
    };
    let a_s = power.tone_amplitude(
        dbm_to_watts(c.signal_power_dbm),
        c.signal_frequency,
        c.pump_frequency,
    );
    let signal = signal_for_regime(regime, c.signal_frequency, a_s);
    let kappa = calibrate_coupling(&base, &pump, signal, c.target_gain_db).map_err(numerical)?;
    meta.push(("kappa".into(), format!("{kappa:.16e}")));
    meta.push((
        "kappa_source".into(),
        format!(
            "calibrated to {} dB at {} dBm, pump {} Hz, signal {} Hz",
            c.target_gain_db, c.pump_power_dbm, c.pump_frequency, c.signal_frequency
        ),
    ));
    Ok(base.with_kappa(kappa))
}

fn partial_check(ok: usize, total: usize) -> Option<String> {
    if (ok as f64) < MIN_SUCCESS_FRACTION * total as f64 {
        Some(format!("only {ok} of {total} sweep points succeeded"))
    } else {
        None
    }
}

/// Prepends a constant float column to a result.
fn with_leading(name: &str, value: f64, r: SweepResult) -> Result<SweepResult, Failure> {
    let mut out = SweepResult::new();
    out.push_floats(name, vec![value; r.rows()])
        .map_err(schema)?;
    for c in r.columns {
        out.push(c.name, c.data).map_err(schema)?;
    }
    Ok(out)
}

pub fn bias_sweep(cfg: &RunConfig) -> Result<Output, Failure> {
    let b = &cfg.bias_sweep;
    let mut meta = Vec::new();
    let model = model(cfg, &mut meta)?;
    let power = power_mapping(cfg)?;
    let bias = BiasMapping {
        mutual_coupling: cfg.device.mutual_coupling,
        phi_offset: cfg.device.phi_offset,
    };
    let regime = regime_for(b.pump_frequency, b.signal_frequency);
    let a_s = power.tone_amplitude(
        dbm_to_watts(b.signal_power_dbm),
        b.signal_frequency,
        b.pump_frequency,
    );
    let signal = signal_for_regime(regime, b.signal_frequency, a_s);
    let bias_grid = grid(b.start, b.stop, b.points, Scale::Linear);
    let pump_at = |dbm: f64| PumpConfig {
        f_pump: b.pump_frequency,
        a_pump: power.pump_amplitude_dbm(dbm),
        phi_dc: 0.0,
        regime,
    };

    let floor = match b.floor_dbm {
        Some(f) => f,
        None => {
            let strongest = b
                .pump_powers_dbm
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            let raw = bias_sweep_idler(
                &model,
                &pump_at(strongest),
                signal,
                &bias_grid,
                &bias,
                &power,
                f64::NEG_INFINITY,
            )
            .map_err(config_err("bias_sweep"))?;
            let values = raw.result.floats("idler_raw_dBm").unwrap_or(&[]);
            floor_for_depth(values, b.depth_db).ok_or_else(|| {
                Failure::Numerical("no bias point produced a finite idler power".into())
            })?
        }
    };

    let mut out = SweepResult::new();
    let mut ok = 0;
    let mut total = 0;
    for &dbm in &b.pump_powers_dbm {
        let sweep = bias_sweep_idler(
            &model,
            &pump_at(dbm),
            signal,
            &bias_grid,
            &bias,
            &power,
            floor,
        )
        .map_err(config_err("bias_sweep"))?;
        total += bias_grid.len();
        ok += bias_grid.len() - sweep.failed_points;
        let tag = format!("{dbm}dBm");
        out.set_meta_float(
            format!("modulation_depth_dB@{tag}"),
            sweep.modulation_depth_db,
        );
        if let Some(m) = sweep.primary_minimum {
            out.set_meta_float(format!("minimum_bias_A@{tag}"), m);
        }
        out.extend(with_leading("pump_power_dBm", dbm, sweep.result)?)
            .map_err(schema)?;
    }
    for (k, v) in meta {
        out.set_meta(k, v);
    }
    out.set_meta_float("floor_dBm", floor)
        .set_meta_float("phi_offset_rad", bias.phi_offset)
        .set_meta_float("mutual_coupling_H", bias.mutual_coupling)
        .set_meta_float("pump_frequency_Hz", b.pump_frequency)
        .set_meta_float("signal_frequency_Hz", b.signal_frequency)
        .set_meta_float("idler_frequency_Hz", b.pump_frequency - b.signal_frequency);
    Ok(Output {
        summary: format!(
            "{} curves x {} bias points, {ok} of {total} succeeded, floor {floor:.2} dBm",
            b.pump_powers_dbm.len(),
            bias_grid.len()
        ),
        result: out,
        partial: partial_check(ok, total),
    })
}

pub fn gain_sweep(cfg: &RunConfig) -> Result<Output, Failure> {
    let g = &cfg.gain_sweep;
    let mut meta = Vec::new();
    let model = model(cfg, &mut meta)?;
    let power = power_mapping(cfg)?;
    let mut powers = vec![f64::NEG_INFINITY];
    powers.extend(grid(g.start_dbm, g.stop_dbm, g.points, Scale::Linear));

    let mut out = SweepResult::new();
    let mut ok = 0;
    let mut total = 0;
    for (regime, f_pump) in [
        (Regime::NonDegenerate, g.non_degenerate_pump),
        (Regime::Degenerate, g.degenerate_pump),
    ] {
        let pump = PumpConfig {
            f_pump,
            a_pump: 0.0,
            phi_dc: g.phi_dc,
            regime,
        };
        let a_s =
            power.tone_amplitude(dbm_to_watts(g.signal_power_dbm), g.signal_frequency, f_pump);
        let signal = signal_for_regime(regime, g.signal_frequency, a_s);
        let field = match regime {
            Regime::Degenerate => "gain_sweep.degenerate_pump_frequency_Hz",
            Regime::NonDegenerate => "gain_sweep.non_degenerate_pump_frequency_Hz",
        };
        // Surface regime and band errors as config errors before sweeping.
        model
            .propagate(&pump, g.signal_frequency, signal.amplitude)
            .map_err(config_err(field))?;
        let sweep = gain_vs_pump_power(&model, &pump, signal, &powers, &power)
            .map_err(config_err("gain_sweep"))?;
        total += powers.len();
        ok += powers.len() - sweep.failed_points;
        let mut r = sweep.result;
        r.push_floats("pump_frequency_Hz", vec![f_pump; powers.len()])
            .map_err(schema)?;
        out.extend(r).map_err(schema)?;
    }
    for (k, v) in meta {
        out.set_meta(k, v);
    }
    out.set_meta_float("signal_frequency_Hz", g.signal_frequency)
        .set_meta_float("signal_power_dBm", g.signal_power_dbm);
    Ok(Output {
        summary: format!(
            "2 regimes x {} pump powers, {ok} of {total} succeeded",
            powers.len()
        ),
        result: out,
        partial: partial_check(ok, total),
    })
}

pub fn link(cfg: &RunConfig) -> Result<Output, Failure> {
    let l = &cfg.link;
    let scn = base_scenario(cfg)?;
    let pf = prefactor(cfg);
    let stages = l
        .stages
        .iter()
        .map(|s| AmplifierStage::from_db(s.gain_db, s.noise_temperature))
        .collect::<Result<Vec<_>, _>>()
        .map_err(config_err("link.stages"))?;
    let (cascade_gain, t_eq) = friis_cascade(&stages).map_err(config_err("link.stages"))?;

    let (variable, values) = match cfg.sweep_for(&["bandwidth", "integration_time"])? {
        Some(sw) => (sw.variable.clone(), sw.grid()),
        None => ("bandwidth".to_string(), vec![l.bandwidth]),
    };
    let mut cols: Vec<(&str, Vec<f64>)> = [
        "bandwidth_Hz",
        "integration_time_s",
        "transmit_power_W",
        "transmit_power_dBm",
        "jpa_transmit_power_W",
        "jpa_power_ratio",
        "p_error_tmsv",
        "p_error_classical",
        "exponent_tmsv",
        "exponent_classical",
        "jpa_p_error_tmsv",
    ]
    .into_iter()
    .map(|n| (n, Vec::with_capacity(values.len())))
    .collect();
    let mut modes = Vec::with_capacity(values.len());
    let mut jpa_modes = Vec::with_capacity(values.len());
    for &v in &values {
        let (b, t) = match variable.as_str() {
            "bandwidth" => (v, l.integration_time),
            _ => (l.bandwidth, v),
        };
        let budget = LinkBudget::new(b, t, l.center_frequency, l.photons_per_mode)
            .map_err(config_err("sweep"))?;
        let jpa = LinkBudget::new(l.jpa_bandwidth, t, l.center_frequency, l.photons_per_mode)
            .map_err(config_err("link.jpa_bandwidth_Hz"))?;
        let e2e = end_to_end_error(&scn, &budget, pf).map_err(config_err("scenario"))?;
        let e2e_jpa = end_to_end_error(&scn, &jpa, pf).map_err(config_err("scenario"))?;
        let row = [
            b,
            t,
            budget.transmit_power,
            budget.transmit_power_dbm(),
            jpa.transmit_power,
            budget.transmit_power / jpa.transmit_power,
            e2e.quantum.p_error,
            e2e.classical.p_error,
            e2e.quantum.exponent,
            e2e.classical.exponent,
            e2e_jpa.quantum.p_error,
        ];
        for (c, x) in cols.iter_mut().zip(row) {
            c.1.push(x);
        }
        modes.push(budget.modes as i64);
        jpa_modes.push(jpa.modes as i64);
    }
    let mut r = SweepResult::new();
    let mut cols = cols.into_iter();
    for (name, data) in cols.by_ref().take(2) {
        r.push_floats(name, data).map_err(schema)?;
    }
    r.push("modes", ColumnData::Int(modes)).map_err(schema)?;
    r.push("jpa_modes", ColumnData::Int(jpa_modes))
        .map_err(schema)?;
    for (name, data) in cols {
        r.push_floats(name, data).map_err(schema)?;
    }
    r.set_meta("sweep_variable", &variable)
        .set_meta_float("jpa_bandwidth_Hz", l.jpa_bandwidth)
        .set_meta_float("center_frequency_Hz", l.center_frequency)
        .set_meta_float("cascade_gain_dB", linear_to_db(cascade_gain))
        .set_meta_float("cascade_noise_temperature_K", t_eq);
    Ok(Output {
        summary: format!("{} link points, cascade T_eq = {t_eq:.4} K", values.len()),
        result: r,
        partial: None,
    })
}

fn fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    (sxy / sxx, sxy * sxy / (sxx * syy))
}

pub fn montecarlo(cfg: &RunConfig) -> Result<Output, Failure> {
    let seed = cfg.seed.ok_or_else(|| ConfigError {
        field: "seed".into(),
        message: "a seed is required for Monte-Carlo runs (config key or --seed)".into(),
    })?;
    if cfg.montecarlo.trials < MIN_TRIALS {
        return Err(Failure::Config(ConfigError {
            field: "montecarlo.trials".into(),
            message: format!(
                "must be at least {MIN_TRIALS}, got {}",
                cfg.montecarlo.trials
            ),
        }));
    }
    let (variable, points) = scenario_grid(cfg, &["modes", "eta", "n_s", "n_b"])?;
    let mc = McConfig {
        trials: cfg.montecarlo.trials,
        seed,
        phase: cfg.montecarlo.phase,
    };
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); 9];
    let mut modes = Vec::new();
    let mut flags = (Vec::new(), Vec::new());
    for s in &points {
        let r = monte_carlo_phase_conjugate(s, &mc).map_err(numerical)?;
        let unity = report(s, Source::Quantum, Prefactor::Unity)
            .map_err(config_err("scenario.n_b"))?
            .p_error;
        let half = report(s, Source::Quantum, Prefactor::Half)
            .map_err(config_err("scenario.n_b"))?
            .p_error;
        let bound = match prefactor(cfg) {
            Prefactor::Unity => unity,
            Prefactor::Half => half,
        };
        let row = [
            value_of(s, &variable),
            r.report.p_error,
            r.p_error_ci.0,
            r.p_error_ci.1,
            r.report.p_false,
            r.report.p_miss,
            unity,
            half,
            r.threshold,
        ];
        for (c, x) in cols.iter_mut().zip(row) {
            c.push(x);
        }
        modes.push(s.modes as i64);
        flags.0.push(i64::from(r.p_error_ci.1 >= bound));
        flags.1.push(i64::from(r.low_precision));
    }
    let names = [
        "sweep_var",
        "p_error_mc",
        "p_error_lo",
        "p_error_hi",
        "p_false_mc",
        "p_miss_mc",
        "p_error_tmsv",
        "p_error_tmsv_half",
        "threshold",
    ];
    let mut r = SweepResult::new();
    let mut it = names.into_iter().zip(cols.clone());
    let (n0, c0) = it.next().expect("nine columns");
    r.push_floats(n0, c0).map_err(schema)?;
    r.push("modes", ColumnData::Int(modes)).map_err(schema)?;
    for (n, c) in it {
        r.push_floats(n, c).map_err(schema)?;
    }
    r.push("bound_respected", ColumnData::Int(flags.0))
        .map_err(schema)?;
    r.push("low_precision", ColumnData::Int(flags.1))
        .map_err(schema)?;
    r.set_meta("sweep_variable", &variable)
        .set_meta(
            "bound_prefactor",
            format!("{:?}", prefactor(cfg)).to_lowercase(),
        )
        .set_meta("trials", mc.trials);

    let (x, y): (Vec<f64>, Vec<f64>) = cols[0]
        .iter()
        .zip(&cols[1])
        .filter(|(_, p)| **p > 0.0)
        .map(|(x, p)| (*x, p.ln()))
        .unzip();
    let mut summary = format!(
        "{} Monte-Carlo points, {} trials each",
        points.len(),
        mc.trials
    );
    if x.len() >= 2 {
        let (slope, r2) = fit(&x, &y);
        r.set_meta_float(format!("log_p_error_slope_per_{variable}"), slope)
            .set_meta_float("log_p_error_fit_r2", r2);
        summary.push_str(&format!(
            ", ln P_e slope {slope:.4e} per {variable} (R² {r2:.4})"
        ));
    }
    Ok(Output {
        summary,
        result: r,
        partial: None,
    })
}
