use anyhow::{bail, Context, Result};
use qshape::multichannel::{concatenate, write_band_shaping_csv};
use qshape::spectral::io::{self, fmt_value, write_columns};
use qshape::spectral::{db, DB_FLOOR};
use qshape::*;

use crate::output::Staged;
use crate::settings::Common;
use crate::{CapacityArgs, PartitionArgs, ShapeArgs, SimulateArgs};

fn pair(key: &str, value: impl ToString) -> (String, String) {
    (key.to_string(), value.to_string())
}

fn to_db(values: &[f64]) -> Vec<f64> {
    values.iter().map(|&v| db(v).max(DB_FLOOR)).collect()
}

fn print_pairs(pairs: &[(String, String)]) {
    for (k, v) in pairs {
        println!("{k} = {v}");
    }
}

pub fn shape(args: &ShapeArgs) -> Result<()> {
    let c = Common::resolve(&args.common)?;
    let ch = &c.channel;
    let analytic = optimal_sq(ch.noise(), c.budget)?;
    let search = SearchConfig {
        seed: c.seed,
        ..SearchConfig::default()
    };
    let numeric = optimal_sq_numerical(ch, c.budget, &search)?;
    let report = verify_shaping(ch, &analytic.sq_opt, c.budget)?;

    let (a, n) = (analytic.sq_opt.values(), numeric.result.sq_opt.values());
    let max_db_gap = a
        .iter()
        .zip(n)
        .map(|(x, y)| (db(*x) - db(*y)).abs())
        .fold(0.0, f64::max);
    let mut summary = analytic.summary_pairs();
    summary.extend(report.pairs());
    summary.extend([
        pair("budget", fmt_value(c.budget.value())),
        pair("numeric_info_loss", fmt_value(numeric.result.info_loss)),
        pair(
            "numeric_loss_rel_diff",
            fmt_value((numeric.result.info_loss - analytic.info_loss) / analytic.info_loss),
        ),
        pair("numeric_max_bin_db_diff", fmt_value(max_db_gap)),
        pair("numeric_converged", numeric.converged),
        pair("numeric_iterations", numeric.iterations),
        pair("numeric_stationarity", fmt_value(numeric.stationarity)),
        pair("seed", c.seed),
    ]);

    let f: Vec<f64> = ch.grid().centers().collect();
    let mut out = Staged::default();
    out.add_with("channel.csv", |buf| io::write_channel(buf, ch))?;
    out.add_with("shaping.csv", |buf| analytic.write_csv(buf))?;
    out.add_pairs("shaping_summary.txt", &summary)?;
    out.add_with("plot_shape.csv", |buf| {
        write_columns(
            buf,
            &[
                "frequency_hz",
                "signal_db",
                "noise_db",
                "sq_analytic_db",
                "sq_numeric_db",
            ],
            &[
                &f,
                &to_db(ch.signal().values()),
                &to_db(ch.noise().values()),
                &to_db(a),
                &to_db(n),
            ],
        )
    })?;
    out.commit(&c.out)?;
    print_pairs(&summary);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let c = Common::resolve(&args.common)?;
    let cfgf = &c.config;
    let defaults = ModulatorConfig64::default();
    let osr = cfgf.get_or(args.osr, "osr", defaults.osr)?;
    let f_hi = c.channel.grid().f_hi();
    let cfg = ModulatorConfig {
        order: cfgf.get_or(args.order, "order", defaults.order)?,
        osr,
        sample_rate: 2.0 * osr * f_hi,
        quantizer_levels: cfgf.get_or(args.levels, "levels", defaults.quantizer_levels)?,
        step: cfgf.get_or(args.step, "step", defaults.step)?,
        max_ntf_gain: cfgf.get_or(args.max_ntf_gain, "max-ntf-gain", defaults.max_ntf_gain)?,
        dither: cfgf.switch(args.dither, "dither")?,
        seed: c.seed,
    };
    let samples = cfgf.get_or(args.samples, "samples", 1usize << 18)?;
    let write_trace = cfgf.switch(args.write_trace, "write-trace")?;
    cfg.validate()?;

    let target = optimal_sq(c.channel.noise(), c.budget)?.sq_opt;
    let design = design_ntf(&target, &cfg).context("designing the NTF")?;
    let h = loop_from_ntf(&design.ntf)?;
    let input = fixtures::test_tone(&cfg, samples);
    let trace = simulate_with(&h, &cfg, &input, QuantizerModel::Uniform)?;
    if !trace.stable {
        bail!(
            "modulator diverged after {} of {samples} samples (peak |NTF| {:.3})",
            trace.len(),
            design.peak_gain
        );
    }
    let model = measured_vs_predicted(&trace, &design.ntf, &cfg)?;
    let real = realization_report(&trace, &design.ntf, &cfg, &target)?;

    let summary = vec![
        pair("order", cfg.order),
        pair("osr", fmt_value(cfg.osr)),
        pair("sample_rate", fmt_value(cfg.sample_rate)),
        pair("quantizer_levels", cfg.quantizer_levels),
        pair("step", fmt_value(cfg.step)),
        pair("dither", cfg.dither),
        pair("samples", samples),
        pair("design_rms_error_db", fmt_value(design.rms_error_db)),
        pair("design_peak_gain", fmt_value(design.peak_gain)),
        pair("stable", trace.stable),
        pair("saturation_count", trace.saturation_count),
        pair("welch_averages", model.averages),
        pair("model_rms_error_db", fmt_value(model.rms_error_db)),
        pair("target_rms_error_db", fmt_value(real.rms_error_db)),
        pair("target_level_offset_db", fmt_value(real.level_offset_db)),
        pair("equivalent_power", fmt_value(real.equivalent_power)),
    ];

    let mut out = Staged::default();
    out.add("ntf.txt", design.ntf.to_string().into_bytes());
    out.add("loop_filter.txt", h.to_string().into_bytes());
    out.add_pairs("simulate_report.txt", &summary)?;
    out.add_with("plot_simulate.csv", |buf| {
        write_columns(
            buf,
            &["frequency_hz", "measured_db", "model_db", "target_db"],
            &[
                &real.frequencies,
                &to_db(&real.measured),
                &to_db(&model.predicted),
                &to_db(&real.target),
            ],
        )
    })?;
    if write_trace {
        out.add_with("trace.csv", |buf| trace.write_csv(buf))?;
    }
    out.commit(&c.out)?;
    print_pairs(&summary);
    Ok(())
}

pub fn partition(args: &PartitionArgs) -> Result<()> {
    let c = Common::resolve(&args.common)?;
    let n = c.config.get_or(args.n, "n", 4)?;
    let mode: PartitionMode = c
        .config
        .get_or(args.mode.clone(), "mode", "equal-power".to_string())?
        .parse()?;
    let noise = c.channel.noise();
    let plan = partition_constrained(noise, c.budget, n, mode)?;
    let bands = per_band_shaping(noise, &plan)?;
    let joined = concatenate(&bands)?;

    let mut band_index = Vec::with_capacity(joined.len());
    let mut band_start = Vec::with_capacity(joined.len());
    for (j, b) in bands.iter().enumerate() {
        for k in 0..b.sq_opt.len() {
            band_index.push(j as f64);
            band_start.push(if k == 0 { 1.0 } else { 0.0 });
        }
    }
    let f: Vec<f64> = c.channel.grid().centers().collect();
    let loss: f64 = bands.iter().map(|b| b.info_loss).sum();
    let summary = vec![
        pair("mode", mode.name()),
        pair("bands", plan.num_bands()),
        pair("total_power", fmt_value(plan.total_power())),
        pair("power_imbalance", fmt_value(plan.power_imbalance())),
        pair("info_loss", fmt_value(loss)),
    ];

    let mut out = Staged::default();
    out.add_with("partition.csv", |buf| plan.write_csv(buf))?;
    out.add_with("partition_shaping.csv", |buf| {
        write_band_shaping_csv(&bands, buf)
    })?;
    out.add_with("plot_partition.csv", |buf| {
        write_columns(
            buf,
            &[
                "frequency_hz",
                "signal_db",
                "noise_db",
                "sq_db",
                "band_index",
                "band_start",
            ],
            &[
                &f,
                &to_db(c.channel.signal().values()),
                &to_db(noise.values()),
                &to_db(joined.values()),
                &band_index,
                &band_start,
            ],
        )
    })?;
    out.commit(&c.out)?;
    print_pairs(&summary);
    Ok(())
}

pub fn capacity(args: &CapacityArgs) -> Result<()> {
    let c = Common::resolve(&args.common)?;
    let sq_path = c.config.get(args.sq.clone(), "sq")?;
    let ch = &c.channel;
    let (sq, source) = match &sq_path {
        Some(path) => {
            let text =
                std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            let sq = io::read_psd_column(text.as_slice(), "sq_opt")
                .or_else(|_| io::read_psd_column(text.as_slice(), "psd"))
                .with_context(|| format!("parsing {}", path.display()))?;
            (sq, path.display().to_string())
        }
        None => (
            optimal_sq(ch.noise(), c.budget)?.sq_opt,
            "optimal".to_string(),
        ),
    };
    sq.require_same_grid(ch.noise())
        .context("quantization PSD grid does not match the channel")?;

    let before = capacity_before(ch);
    let after = capacity_after(ch, &sq)?;
    let approx = info_loss(ch.noise(), &sq)?;
    let summary = vec![
        pair("sq_source", source),
        pair("capacity_before", fmt_value(before)),
        pair("capacity_after", fmt_value(after)),
        pair("info_loss", fmt_value(approx)),
        pair("capacity_drop", fmt_value(before - after)),
        pair("adc_power", fmt_value(power_of_sq(&sq)?.value())),
    ];
    let mut out = Staged::default();
    out.add_pairs("capacity.txt", &summary)?;
    out.commit(&c.out)?;
    print_pairs(&summary);
    Ok(())
}
