//! Acceptance suite. One PASS/FAIL line per criterion; exits nonzero if any
//! criterion fails or overruns its time budget.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_complex::Complex;
use qshape::multichannel::concatenate;
use qshape::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;
/// Name, check, time budget in seconds.
type Criterion = (&'static str, fn() -> Outcome, u64);

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn check(ok: bool, what: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn random_noise(rng: &mut ChaCha8Rng, bins: usize) -> Psd64 {
    let g = FrequencyGrid::new(0.0, 1.0, bins).unwrap();
    Psd::new(
        g,
        (0..bins)
            .map(|_| 10f64.powf(rng.random_range(-9.0..-3.0)))
            .collect(),
    )
    .unwrap()
}

fn criterion_1() -> Outcome {
    let mut notes = Vec::new();
    for (name, ch) in [
        ("wireline", fixtures::wireline::<f64>(256).unwrap()),
        ("wireless", fixtures::wireless::<f64>(256).unwrap()),
    ] {
        let budget = fixtures::budget();
        let closed = optimal_sq(ch.noise(), budget).map_err(|e| e.to_string())?;
        let numeric = optimal_sq_numerical(&ch, budget, &SearchConfig::default())
            .map_err(|e| e.to_string())?;
        let loss_gap = rel(numeric.result.info_loss, closed.info_loss);
        let db_gap = closed
            .sq_opt
            .values()
            .iter()
            .zip(numeric.result.sq_opt.values())
            .map(|(a, b)| (10.0 * (a / b).log10()).abs())
            .fold(0.0, f64::max);
        check(loss_gap < 0.01, || {
            format!("{name}: loss gap {loss_gap:.3e}")
        })?;
        check(db_gap < 0.5, || format!("{name}: bin gap {db_gap:.3} dB"))?;
        notes.push(format!("{name} loss {loss_gap:.1e}, bin {db_gap:.1e} dB"));
    }
    Ok(notes.join("; "))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let bins = rng.random_range(1..=512);
        let noise = random_noise(&mut rng, bins);
        let p = 10f64.powf(rng.random_range(1.0..9.0));
        let sq = optimal_sq(&noise, PowerBudget::new(p).unwrap())
            .unwrap()
            .sq_opt;
        worst = worst.max(rel(power_of_sq(&sq).unwrap().value(), p));
    }
    check(worst < 1e-9, || format!("power error {worst:.3e}"))?;
    Ok(format!("worst relative power error {worst:.1e}"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let lo = rng.random_range(0.0..10.0);
        let w = 10f64.powf(rng.random_range(-2.0..2.0));
        let bins = rng.random_range(1..=256);
        let g = FrequencyGrid::new(lo, lo + w, bins).unwrap();
        let level = 10f64.powf(rng.random_range(-12.0..0.0));
        let p = 10f64.powf(rng.random_range(0.0..8.0));
        let alpha = 10f64.powf(rng.random_range(-2.0..2.0));
        let c = 10f64.powf(rng.random_range(-3.0..3.0));
        let budget = PowerBudget::new(p).unwrap();
        let flat = Psd::constant(&g, level).unwrap();
        let base = optimal_sq(&flat, budget).unwrap().sq_opt;
        let want = w * w / (12.0 * p * p);
        for &v in base.values() {
            worst = worst.max(rel(v, want));
        }
        let noise = random_noise(&mut rng, bins);
        let noise = Psd::new(g, noise.values().to_vec()).unwrap();
        let shaped = optimal_sq(&noise, budget).unwrap().sq_opt;
        let louder = optimal_sq(&noise.scaled(c).unwrap(), budget)
            .unwrap()
            .sq_opt;
        let richer = optimal_sq(&noise, PowerBudget::new(alpha * p).unwrap())
            .unwrap()
            .sq_opt;
        for k in 0..bins {
            let s = shaped.values()[k];
            worst = worst.max(rel(louder.values()[k], s));
            worst = worst.max(rel(richer.values()[k] * alpha * alpha, s));
        }
    }
    check(worst < 1e-12, || format!("worst error {worst:.3e}"))?;
    Ok(format!("worst relative error {worst:.1e}"))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let bins = rng.random_range(2..=256);
        let noise = random_noise(&mut rng, bins);
        let p = 10f64.powf(rng.random_range(2.0..8.0));
        let sq = optimal_sq(&noise, PowerBudget::new(p).unwrap())
            .unwrap()
            .sq_opt;
        let (v, q) = (noise.values(), sq.values());
        for k in 1..bins {
            worst = worst.max(rel(q[k] / q[0], (v[k] / v[0]).powf(2.0 / 3.0)));
        }
    }
    check(worst < 1e-12, || format!("worst ratio error {worst:.3e}"))?;
    Ok(format!("worst ratio error {worst:.1e}"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut identity = 0.0f64;
    for _ in 0..100 {
        let bins = rng.random_range(1..=256);
        let g = FrequencyGrid::new(0.0, rng.random_range(0.1..10.0), bins).unwrap();
        let bits: Vec<f64> = (0..bins).map(|_| rng.random_range(0.0..20.0)).collect();
        let bp = BitProfile::new(g, bits.clone()).unwrap();
        let sq = sq_from_bits(&bp).unwrap();
        for (q, b) in sq.values().iter().zip(&bits) {
            identity = identity.max(rel(*q, 2f64.powf(-2.0 * b) / 12.0));
        }
        let back = bits_from_sq(&sq).unwrap();
        for (a, b) in back.bits().iter().zip(&bits) {
            identity = identity.max((a - b).abs() / b.abs().max(1.0));
        }
        let direct: f64 = g.bin_width() * bits.iter().map(|b| 2f64.powf(*b)).sum::<f64>();
        let via_bits = power_of_bits(&bp).unwrap().value();
        let via_sq = power_of_sq(&sq).unwrap().value();
        identity = identity.max(rel(via_bits, direct)).max(rel(via_sq, direct));
    }
    check(identity < 1e-12, || {
        format!("identity error {identity:.3e}")
    })?;

    let mut worst = 0.0f64;
    for _ in 0..100 {
        let bins = rng.random_range(1..=256);
        let g = FrequencyGrid::new(0.0, 1.0, bins).unwrap();
        let mut s = Vec::with_capacity(bins);
        let mut v = Vec::with_capacity(bins);
        let mut q = Vec::with_capacity(bins);
        for _ in 0..bins {
            let x = 10f64.powf(rng.random_range(-6.0..0.0));
            let n = x * 10f64.powf(rng.random_range(-6.0..-3.0));
            s.push(x);
            v.push(n);
            q.push(n * 10f64.powf(rng.random_range(-6.0..-3.0)));
        }
        let ch =
            ChannelSpec::new(Psd::new(g, s).unwrap(), Psd::new(g, v.clone()).unwrap()).unwrap();
        let q = Psd::new(g, q).unwrap();
        let exact = capacity_before(&ch) - capacity_after(&ch, &q).unwrap();
        let approx = info_loss(&Psd::new(g, v).unwrap(), &q).unwrap();
        worst = worst.max(rel(approx, exact));
    }
    check(worst < 0.01, || format!("approximation gap {worst:.3e}"))?;
    Ok(format!(
        "identities {identity:.1e}, loss approximation {worst:.1e}"
    ))
}

fn random_roots(rng: &mut ChaCha8Rng, degree: usize) -> Vec<Complex<f64>> {
    let mut roots = Vec::with_capacity(degree);
    for _ in 0..degree / 2 {
        let z = Complex::from_polar(
            rng.random_range(0.05..0.95),
            rng.random_range(0.0..std::f64::consts::PI),
        );
        roots.extend([z, z.conj()]);
    }
    if degree % 2 == 1 {
        roots.push(Complex::new(rng.random_range(-0.95..0.95), 0.0));
    }
    roots
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let circle: Vec<Complex<f64>> = (0..64)
        .map(|i| Complex::from_polar(1.0, std::f64::consts::TAU * (i as f64 + 0.5) / 64.0))
        .collect();
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let order = rng.random_range(1..=6);
        let nz = rng.random_range(0..order);
        let h = RationalTf::new(
            random_roots(&mut rng, nz),
            random_roots(&mut rng, order),
            rng.random_range(0.1..3.0),
        )
        .unwrap();
        let ntf = ntf_from_loop(&h).map_err(|e| e.to_string())?;
        let stf = stf_from_loop(&h).map_err(|e| e.to_string())?;
        let h_back = loop_from_ntf(&ntf).map_err(|e| e.to_string())?;
        let monic = RationalTf::new(
            random_roots(&mut rng, order),
            random_roots(&mut rng, order),
            1.0,
        )
        .unwrap();
        let monic_back = ntf_from_loop(&loop_from_ntf(&monic).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        for &z in &circle {
            let scale = |w: Complex<f64>| 1.0 + w.norm();
            worst = worst.max((ntf.eval(z) + stf.eval(z) - 1.0).norm());
            let direct = (h.eval(z) + 1.0).inv();
            worst = worst.max((ntf.eval(z) - direct).norm() / scale(direct));
            worst = worst.max((h_back.eval(z) - h.eval(z)).norm() / scale(h.eval(z)));
            worst = worst.max((monic_back.eval(z) - monic.eval(z)).norm() / scale(monic.eval(z)));
        }
    }
    check(worst < 1e-10, || format!("identity error {worst:.3e}"))?;
    Ok(format!("worst error {worst:.1e} over 200 filters"))
}

fn criterion_7() -> Outcome {
    let ch = fixtures::wireless::<f64>(256).unwrap();
    let target = optimal_sq(ch.noise(), fixtures::budget()).unwrap().sq_opt;
    let cfg = ModulatorConfig {
        dither: true,
        seed: 7,
        ..fixtures::modulator()
    };
    let design = design_ntf(&target, &cfg).map_err(|e| e.to_string())?;
    let h = loop_from_ntf(&design.ntf).map_err(|e| e.to_string())?;
    let trace =
        simulate(&h, &cfg, &fixtures::test_tone(&cfg, 1 << 18)).map_err(|e| e.to_string())?;
    check(trace.stable && trace.len() == 1 << 18, || {
        format!("diverged after {} samples", trace.len())
    })?;
    let report =
        realization_report(&trace, &design.ntf, &cfg, &target).map_err(|e| e.to_string())?;
    check(report.rms_error_db < 3.0, || {
        format!("in-band tracking error {:.3} dB", report.rms_error_db)
    })?;
    Ok(format!(
        "in-band tracking error {:.2} dB (fit {:.2} dB, peak |NTF| {:.3})",
        report.rms_error_db, design.rms_error_db, design.peak_gain
    ))
}

fn criterion_8() -> Outcome {
    let ch = fixtures::wireline::<f64>(256).unwrap();
    let budget = fixtures::budget();
    let plan = partition_equal_power(ch.noise(), budget, 4).map_err(|e| e.to_string())?;
    let share = budget.value() / 4.0;
    let spread = plan
        .per_band_power()
        .iter()
        .map(|p| rel(p.value(), share))
        .fold(0.0, f64::max);
    check(plan.num_bands() == 4 && spread < 1e-6, || {
        format!("band power spread {spread:.3e}")
    })?;
    let bands = per_band_shaping(ch.noise(), &plan).map_err(|e| e.to_string())?;
    let joined = concatenate(&bands).map_err(|e| e.to_string())?;
    let global = optimal_sq(ch.noise(), budget).unwrap().sq_opt;
    let gap = joined
        .values()
        .iter()
        .zip(global.values())
        .map(|(a, b)| rel(*a, *b))
        .fold(0.0, f64::max);
    check(gap < 1e-9, || format!("concatenation gap {gap:.3e}"))?;
    Ok(format!(
        "band power spread {spread:.1e}, concatenation gap {gap:.1e}"
    ))
}

fn run_cli(dir: &Path, args: &[&str]) -> std::result::Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qshape"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || {
        format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn criterion_9() -> Outcome {
    let runs: [&[&str]; 4] = [
        &["shape", "--channel", "wireless", "--seed", "11"],
        &[
            "simulate",
            "--channel",
            "wireless",
            "--seed",
            "11",
            "--dither",
            "--samples",
            "65536",
            "--write-trace",
        ],
        &["partition", "--channel", "wireline", "--n", "4"],
        &["capacity", "--channel", "wireless"],
    ];
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        for args in runs {
            run_cli(dir.path(), args)?;
        }
    }
    let mut names: Vec<_> = std::fs::read_dir(dirs[0].path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    for name in &names {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).map_err(|e| format!("{name:?}: {e}"))?;
        check(a == b, || format!("{name:?} differs between runs"))?;
    }
    Ok(format!("{} output files identical", names.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("closed form vs numerical optimizer", criterion_1, 60),
        ("power constraint exactness", criterion_2, 5),
        ("flat noise value and scale laws", criterion_3, 1),
        ("two-thirds shape law", criterion_4, 1),
        ("capacity identities", criterion_5, 5),
        ("delta-sigma model identities", criterion_6, 5),
        ("delta-sigma end to end", criterion_7, 120),
        ("equal-power partition", criterion_8, 5),
        ("determinism", criterion_9, 30),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let mut outcome = run();
        let elapsed = start.elapsed();
        if outcome.is_ok() && elapsed > Duration::from_secs(budget) {
            outcome = Err(format!("took {elapsed:.1?}, budget {budget} s"));
        }
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {}: {tag} {name}: {detail} [{:.2} s]",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
