use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::csv_io::{emit_csv, Cell};
use super::manifest::{emit_manifest, RunManifest};
use super::{Command, ProtoKind};
use crate::convnets::{fir_response, run_prototype, PrototypeStack};
use crate::error::{Error, Result};
use crate::multitone::{harmonic_stack, sample_dataset, synthesize, DatasetSpec, Signal};
use crate::relu_taylor::{
    approximate_relu, compute_a, relu, subset_error_profile, taylor_coefficients, term_share, TaylorConfig,
};
use crate::rng::{derive_seed, PRNG_ID};
use crate::spectral::{band_occupancy, energy_fraction_above, rrmse, spectrum};
use crate::trainer::{
    random_init_sweep, run_comparison, zero_train_eval, ComparisonConfig, KernelSource, TrainConfig, Variant,
};

const RRMSE_DEFINITION: &str = "sqrt(sum((approx - relu)^2)) / sqrt(sum(relu^2))";
const DFT_NORMALIZATION: &str = "X[k] = (1/N) sum x[n] exp(-2 pi i k n / N); one-sided |X[k]| for k = 0..=N/2";
const OCCUPANCY_THRESHOLD: f64 = 0.01;
const SUBSET_TERMS: [usize; 4] = [5, 10, 25, 50];
const SUBSET_G_LIMIT: f64 = 0.99;

/// Output directory, created if missing.
struct Outputs {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Outputs {
    fn new(out: Option<PathBuf>, command: &str, seed: u64) -> Result<Self> {
        let dir = out.unwrap_or_else(|| Path::new("results").join(command));
        std::fs::create_dir_all(&dir)?;
        let mut manifest = RunManifest::new(command, seed);
        manifest.config("prng", PRNG_ID);
        Ok(Self { dir, manifest })
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
        emit_csv(&self.dir.join(name), header, rows)?;
        self.manifest.output_files.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &serde_json::Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(self.dir.join(name), text)?;
        self.manifest.output_files.push(name.to_string());
        Ok(())
    }

    fn finish(mut self, out: &mut dyn Write) -> Result<()> {
        self.manifest.output_files.push("manifest.json".into());
        emit_manifest(&self.dir.join("manifest.json"), &self.manifest)?;
        writeln!(out, "wrote {}", self.dir.display())?;
        Ok(())
    }
}

pub(super) fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Coeffs { n, out: dir } => coeffs(n, dir, out),
        Command::Approx {
            f0,
            harmonics,
            fs,
            duration,
            terms,
            prescale,
            out: dir,
        } => approx(f0, harmonics, fs, duration, TaylorConfig { n_terms: terms, prescale }, dir, out),
        Command::Proto {
            kind,
            depth,
            avg_len,
            fs,
            out: dir,
        } => proto(kind, depth, avg_len, fs, dir, out),
        Command::HeartDemo { hr, out: dir } => heart_demo(hr, dir, out),
        Command::TrainCompare {
            reps,
            epochs,
            seed,
            batch_size,
            train_per_class,
            test_per_class,
            out: dir,
        } => {
            let cfg = ComparisonConfig {
                train_per_class,
                test_per_class,
                training: TrainConfig {
                    epochs,
                    batch_size,
                    ..TrainConfig::default()
                },
                ..ComparisonConfig::default()
            };
            train_compare(&cfg, reps, seed, dir, out)
        }
        Command::ZeroTrain {
            kernel,
            seed,
            duration,
            calib_per_class,
            test_per_class,
            sweep,
            out: dir,
        } => {
            let source = match kernel {
                Some(k) => KernelSource::Fixed(k),
                None => KernelSource::Random(derive_seed(seed, 0)),
            };
            zero_train(source, seed, duration, calib_per_class, test_per_class, sweep, dir, out)
        }
    }
}

fn coeffs(n: usize, dir: Option<PathBuf>, out: &mut dyn Write) -> Result<()> {
    let a = taylor_coefficients(n);
    let rows: Vec<Vec<Cell>> = a.iter().enumerate().map(|(i, &v)| vec![i.into(), v.into()]).collect();
    out.write_all(&super::csv_io::render_csv(&["n", "a_n"], &rows)?)?;
    if let Some(dir) = dir {
        let mut o = Outputs::new(Some(dir), "coeffs", 0)?;
        o.manifest.config("n", n).config("recurrence", "a_0 = 1, a_n = a_{n-1} (3 - 2n) / (2n)");
        if n > 3 {
            o.manifest.result("term_share_n3", term_share(&a, 3));
        }
        o.csv("coeffs.csv", &["n", "a_n"], &rows)?;
        o.finish(out)?;
    }
    Ok(())
}

fn spectrum_magnitudes(s: &Signal) -> Vec<(f64, f64)> {
    spectrum(s).one_sided()
}

fn approx(
    f0: f64,
    harmonics: usize,
    fs: f64,
    duration: f64,
    cfg: TaylorConfig,
    dir: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<()> {
    let amplitudes = vec![1.0; harmonics];
    let tones = harmonic_stack(f0, harmonics, &amplitudes)?;
    let x = synthesize(&tones, fs, duration)?;
    let exact = relu(&x);
    let approx = approximate_relu(&tones, fs, duration, &cfg)?;
    let error = rrmse(&exact, &approx.output)?;
    let subset = subset_error_profile(&tones, fs, duration, cfg.prescale, &SUBSET_TERMS, SUBSET_G_LIMIT);

    let mut o = Outputs::new(dir, "approx", 0)?;
    o.manifest
        .config("f0", f0)
        .config("harmonics", harmonics)
        .config("amplitudes", &amplitudes)
        .config("fs", fs)
        .config("duration", duration)
        .config("terms", cfg.n_terms)
        .config("prescale", cfg.prescale)
        .config("rrmse_definition", RRMSE_DEFINITION)
        .config("dft_normalization", DFT_NORMALIZATION)
        .config("subset_terms", SUBSET_TERMS)
        .config("subset_g_limit", SUBSET_G_LIMIT);

    let rows: Vec<Vec<Cell>> = x
        .times()
        .zip(x.samples())
        .zip(exact.samples())
        .zip(approx.output.samples())
        .map(|(((t, &xv), &r), &a)| vec![t.into(), xv.into(), r.into(), a.into()])
        .collect();
    o.csv("approx_time.csv", &["t", "x", "relu_x", "approx"], &rows)?;

    let sx = spectrum_magnitudes(&x);
    let sr = spectrum_magnitudes(&exact);
    let sa = spectrum_magnitudes(&approx.output);
    let rows: Vec<Vec<Cell>> = sx
        .iter()
        .zip(&sr)
        .zip(&sa)
        .map(|((&(f, mx), &(_, mr)), &(_, ma))| vec![f.into(), mx.into(), mr.into(), ma.into()])
        .collect();
    o.csv("approx_spectrum.csv", &["f", "abs_X", "abs_Y_relu", "abs_Y_approx"], &rows)?;
    o.json("convergence.json", &serde_json::to_value(approx.report)?)?;

    o.manifest
        .result("rrmse", error)
        .result("a", compute_a(&tones)?)
        .result("max_abs_g", approx.report.max_abs_g)
        .result("fraction_violating", approx.report.fraction_violating)
        .result("series_valid", approx.report.valid);
    match subset {
        Ok(medians) => {
            let map: serde_json::Map<String, serde_json::Value> =
                SUBSET_TERMS.iter().zip(&medians).map(|(n, m)| (n.to_string(), json!(m))).collect();
            o.manifest.result("subset_median_abs_error", map);
        }
        Err(Error::DegenerateInput(why)) => {
            o.manifest.result("subset_median_abs_error", why);
        }
        Err(e) => return Err(e),
    }
    writeln!(out, "rrmse={}", super::format_number(error))?;
    o.finish(out)
}

fn proto(
    kind: ProtoKind,
    depth: usize,
    avg_len: usize,
    fs: f64,
    dir: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<()> {
    let (f0, harmonics, duration) = (5.0, 4, 1.0);
    let input = synthesize(&harmonic_stack(f0, harmonics, &[1.0; 4])?, fs, duration)?;
    let stack = match kind {
        ProtoKind::Dif => PrototypeStack::differentiator(depth),
        ProtoKind::Avg => PrototypeStack::moving_average(depth, avg_len)?,
    };
    let cutoff = fs / avg_len as f64;
    let mut layers = vec![input.clone()];
    layers.extend(run_prototype(&stack, &input)?);

    let name = match kind {
        ProtoKind::Dif => "proto-dif",
        ProtoKind::Avg => "proto-avg",
    };
    let mut o = Outputs::new(dir, name, 0)?;
    o.manifest
        .config("kind", format!("{kind:?}").to_lowercase())
        .config("kernel", stack.kernel.taps())
        .config("depth", depth)
        .config("avg_len", avg_len)
        .config("fs", fs)
        .config("input_f0", f0)
        .config("input_harmonics", harmonics)
        .config("input_duration", duration)
        .config("occupancy_threshold", OCCUPANCY_THRESHOLD)
        .config("energy_cutoff_hz", cutoff)
        .config("dft_normalization", DFT_NORMALIZATION);

    let spectra: Vec<Vec<(f64, f64)>> = layers.iter().map(spectrum_magnitudes).collect();
    let header: Vec<String> = std::iter::once("f".to_string())
        .chain((0..layers.len()).map(|l| format!("layer_{l}")))
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<Cell>> = (0..spectra[0].len())
        .map(|k| {
            std::iter::once(Cell::Num(spectra[0][k].0))
                .chain(spectra.iter().map(|s| Cell::Num(s[k].1)))
                .collect()
        })
        .collect();
    o.csv("proto_spectra.csv", &header, &rows)?;

    let mut occ_rows = Vec::new();
    let mut occupancy = Vec::new();
    for (l, s) in layers.iter().enumerate() {
        let sp = spectrum(s);
        let occ = band_occupancy(&sp, OCCUPANCY_THRESHOLD)?;
        let above = energy_fraction_above(&sp, cutoff);
        occupancy.push(occ);
        occ_rows.push(vec![l.into(), occ.into(), above.into()]);
    }
    o.csv("occupancy.csv", &["layer", "occupancy", "energy_above_cutoff"], &occ_rows)?;
    o.manifest.result("occupancy", &occupancy);
    o.finish(out)
}

fn heart_demo(hr: f64, dir: Option<PathBuf>, out: &mut dyn Write) -> Result<()> {
    let (amplitudes, fs, duration) = ([1.0, 0.5], 64.0, 20.0);
    let (depth, avg_len, pool) = (3, 4, (2, 2));
    let input = synthesize(&harmonic_stack(hr, 2, &amplitudes)?, fs, duration)?;
    let stack = PrototypeStack::moving_average(depth, avg_len)?.with_pool(pool.0, pool.1);
    let mut layers = vec![input.clone()];
    layers.extend(run_prototype(&stack, &input)?);

    let mut o = Outputs::new(dir, "heart-demo", 0)?;
    o.manifest
        .config("hr", hr)
        .config("amplitudes", amplitudes)
        .config("fs", fs)
        .config("duration", duration)
        .config("depth", depth)
        .config("avg_len", avg_len)
        .config("pool_width", pool.0)
        .config("pool_stride", pool.1)
        .config("dft_normalization", DFT_NORMALIZATION);

    let mut rows = Vec::new();
    for (l, s) in layers.iter().enumerate() {
        for (f, m) in spectrum_magnitudes(s) {
            rows.push(vec![l.into(), f.into(), m.into()]);
        }
    }
    o.csv("heart_spectra.csv", &["layer", "f", "magnitude"], &rows)?;
    let rates: Vec<f64> = layers.iter().map(Signal::sample_rate).collect();
    o.manifest.result("layer_sample_rates", rates);
    o.finish(out)
}

fn train_compare(
    cfg: &ComparisonConfig,
    reps: usize,
    seed: u64,
    dir: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<()> {
    let report = run_comparison(cfg, reps, seed)?;
    let mut o = Outputs::new(dir, "train-compare", seed)?;
    o.manifest
        .config("reps", reps)
        .config("comparison", cfg)
        .config("dc_offsets", "class c gets offset c + 1 (h_linear_dc only)")
        .config("weight_init", "uniform(-sqrt(1/fan_in), sqrt(1/fan_in)), biases 0")
        .config("loss", "sparse categorical cross-entropy")
        .config("distance", "Euclidean norm over each conv layer's taps and biases");

    let mut loss_rows = Vec::new();
    let mut dist_rows = Vec::new();
    let mut final_rows = Vec::new();
    for res in &report.results {
        let net = res.variant.name();
        for (e, b) in res.loss_curve.iter().enumerate() {
            loss_rows.push(vec![(e + 1).into(), net.into(), b.median.into(), b.q25.into(), b.q75.into()]);
        }
        for (layer, curve) in res.distance_curves.iter().enumerate() {
            for (e, b) in curve.iter().enumerate() {
                dist_rows.push(vec![
                    e.into(),
                    net.into(),
                    (layer + 1).into(),
                    b.median.into(),
                    b.q25.into(),
                    b.q75.into(),
                ]);
            }
        }
        let losses = res.final_losses();
        let d: Vec<Vec<f64>> = (0..res.distance_curves.len()).map(|l| res.final_distances(l)).collect();
        for rep in 0..reps {
            let mut row = vec![rep.into(), net.into(), losses[rep].into()];
            row.extend(d.iter().map(|layer| Cell::Num(layer[rep])));
            row.push(res.test_accuracies[rep].into());
            final_rows.push(row);
        }
    }
    o.csv("loss_curves.csv", &["epoch", "net", "median", "q25", "q75"], &loss_rows)?;
    o.csv(
        "distance_curves.csv",
        &["epoch", "net", "layer", "median", "q25", "q75"],
        &dist_rows,
    )?;
    let n_layers = report.results[0].distance_curves.len();
    let mut header = vec!["rep".to_string(), "net".into(), "final_loss".into()];
    header.extend((1..=n_layers).map(|l| format!("distance_layer_{l}")));
    header.push("test_accuracy".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    o.csv("final_metrics.csv", &header, &final_rows)?;

    for res in &report.results {
        let net = res.variant.name();
        o.manifest
            .result(&format!("{net}_median_final_loss"), crate::stats::median(&res.final_losses()))
            .result(
                &format!("{net}_median_test_accuracy"),
                crate::stats::median(&res.test_accuracies),
            );
        for l in 0..n_layers {
            o.manifest.result(
                &format!("{net}_median_final_distance_layer_{}", l + 1),
                crate::stats::median(&res.final_distances(l)),
            );
        }
    }
    o.manifest.result(
        "sign_test_loss_h_linear_dc_lt_h_linear",
        report.loss_sign_test(Variant::LinearDc, Variant::Linear),
    );
    for l in 0..n_layers {
        for a in [Variant::Relu, Variant::LinearDc] {
            o.manifest.result(
                &format!("sign_test_distance_layer_{}_{}_lt_h_linear", l + 1, a.name()),
                report.distance_sign_test(a, Variant::Linear, l),
            );
        }
    }
    o.finish(out)
}

#[allow(clippy::too_many_arguments)]
fn zero_train(
    source: KernelSource,
    seed: u64,
    duration: f64,
    calib_per_class: usize,
    test_per_class: usize,
    sweep: usize,
    dir: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<()> {
    let mut spec = DatasetSpec::frequency_classes(calib_per_class);
    spec.duration = duration;
    let calibration = sample_dataset(&spec, derive_seed(seed, 1))?;
    spec.samples_per_class = test_per_class;
    let test = sample_dataset(&spec, derive_seed(seed, 2))?;
    let report = zero_train_eval(&source, &calibration, &test)?;
    let sweep_fraction = if sweep > 0 {
        Some(random_init_sweep(sweep, derive_seed(seed, 3), &calibration, &test, 0.9)?)
    } else {
        None
    };

    let mut o = Outputs::new(dir, "zero-train", seed)?;
    o.manifest
        .config(
            "kernel_source",
            match &source {
                KernelSource::Fixed(_) => "fixed".to_string(),
                KernelSource::Random(s) => format!("random (seed {s})"),
            },
        )
        .config("kernel", &report.kernel)
        .config("class_means", &spec.class_means)
        .config("freq_std", spec.freq_std)
        .config("fs", spec.sample_rate)
        .config("duration", duration)
        .config("calib_per_class", calib_per_class)
        .config("test_per_class", test_per_class)
        .config("decision_rule", "nearest class mean of GAP(relu(w * x)), means from calibration set")
        .config("sweep_kernels", sweep)
        .config("sweep_min_accuracy", 0.9)
        .config("random_kernel_init", "uniform(-sqrt(1/2), sqrt(1/2)) per tap");

    let kernel = source.kernel()?;
    let nyquist = spec.sample_rate / 2.0;
    let grid: Vec<f64> = (0..=(nyquist * 4.0) as usize).map(|i| i as f64 * 0.25).collect();
    let response = fir_response(&kernel, &grid, spec.sample_rate)?;
    let rows: Vec<Vec<Cell>> = grid
        .iter()
        .zip(&response.gains)
        .map(|(&f, &b)| vec![f.into(), b.into()])
        .collect();
    o.csv("response.csv", &["f", "b"], &rows)?;
    let rows: Vec<Vec<Cell>> = report
        .samples
        .iter()
        .map(|&(f, dc, c)| vec![f.into(), dc.into(), c.into()])
        .collect();
    o.csv("dc_by_class.csv", &["f_i", "dc", "class"], &rows)?;

    o.manifest
        .result("accuracy", report.accuracy)
        .result("classes", &report.classes)
        .result("decision_means", &report.decision_means)
        .result("min_separation_se", report.min_separation_se)
        .result("sweep_fraction_ge_90pct", sweep_fraction);
    writeln!(out, "accuracy={}", super::format_number(report.accuracy))?;
    o.finish(out)
}
