use std::io::{self, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{ensure, Context, Result};
use genmetrics_core::experiments::{bench_costs, sample_efficiency as run_sample_efficiency};
use genmetrics_core::mog::mixture_experiment;
use genmetrics_core::normality::Decision;
use genmetrics_core::report::{
    BenchFileReport, MetricConfig, MogReport, NormalityFileReport, SampleEfficiencyReport, TOOL_VERSION,
};
use genmetrics_core::{
    fid, fid_infinity, mmd_unbiased, normality_report, read_array, EmbeddingSet, ExtrapolationConfig, MetricReport,
    Report,
};

use crate::args::{BenchArgs, ComputeArgs, Metric, MogArgs, NormalityArgs, SampleEfficiencyArgs};

fn load(path: &Path) -> Result<EmbeddingSet> {
    read_array(path).with_context(|| format!("reading {}", path.display()))
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn print_json(report: &Report) -> Result<()> {
    let line = report.to_json_line()?;
    let mut out = io::stdout().lock();
    writeln!(out, "{line}")?;
    out.flush()?;
    Ok(())
}

fn csv_writer() -> csv::Writer<io::StdoutLock<'static>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(io::stdout().lock())
}

pub fn compute(a: ComputeArgs) -> Result<()> {
    let reference = load(&a.reference)?;
    let generated = load(&a.generated)?;
    ensure!(
        reference.d() == generated.d(),
        "dimension mismatch: {} has d = {}, {} has d = {}",
        a.reference.display(),
        reference.d(),
        a.generated.display(),
        generated.d()
    );
    let divisor = a.divisor.into();
    let t = Instant::now();
    let mut config = MetricConfig::default();
    let mut points = Vec::new();
    let value = match a.metric {
        Metric::Fid => {
            config.divisor = Some(divisor);
            let r = fid(&reference, &generated, divisor)?;
            if r.clamped {
                log::warn!("negative rounding residue clamped to 0");
            }
            r.distance_squared
        }
        Metric::FidInf => {
            let extrapolation = ExtrapolationConfig {
                num_points: a.points,
                min_size: a.min_size,
                seed: a.seed,
            };
            config.divisor = Some(divisor);
            config.extrapolation = Some(extrapolation);
            let r = fid_infinity(&reference, &generated, &extrapolation, divisor)?;
            points = r.points;
            r.value
        }
        Metric::Mmd | Metric::Cmmd => {
            let kernel = a.kernel.config(a.metric == Metric::Cmmd);
            config.kernel = Some(kernel);
            if reference.n() != generated.n() {
                log::warn!(
                    "set sizes differ ({} vs {}); values are not comparable across size pairs",
                    reference.n(),
                    generated.n()
                );
            }
            mmd_unbiased(&reference, &generated, &kernel)?.value
        }
    };
    let report = MetricReport {
        metric: a.metric.name().to_string(),
        value,
        config,
        ref_path: a.reference.display().to_string(),
        gen_path: a.generated.display().to_string(),
        n_ref: reference.n(),
        n_gen: generated.n(),
        d: reference.d(),
        wall_time_ms: elapsed_ms(t),
        tool_version: TOOL_VERSION.to_string(),
        points,
    };
    if a.json {
        return print_json(&Report::Metric(report));
    }
    println!(
        "{} = {} (n_ref = {}, n_gen = {}, d = {}, {:.1} ms)",
        report.metric, report.value, report.n_ref, report.n_gen, report.d, report.wall_time_ms
    );
    Ok(())
}

pub fn normality(a: NormalityArgs) -> Result<()> {
    let x = load(&a.file)?;
    let t = Instant::now();
    let report = normality_report(&x, a.alpha)?;
    let report = NormalityFileReport {
        path: a.file.display().to_string(),
        report,
        wall_time_ms: elapsed_ms(t),
        tool_version: TOOL_VERSION.to_string(),
    };
    if a.json {
        return print_json(&Report::Normality(report));
    }
    let r = &report.report;
    let label = |d: Decision| match d {
        Decision::Accept => "accept",
        Decision::Reject => "reject",
    };
    let mut w = csv_writer();
    w.write_record(["test", "statistic", "df", "p_value", "decision"])?;
    w.write_record([
        "mardia_skewness".to_string(),
        r.mardia_skewness.statistic.to_string(),
        r.mardia_skewness.degrees_of_freedom.to_string(),
        r.mardia_skewness.p_value.to_string(),
        label(r.decisions.mardia_skewness).to_string(),
    ])?;
    w.write_record([
        "mardia_kurtosis".to_string(),
        r.mardia_kurtosis.statistic.to_string(),
        String::new(),
        r.mardia_kurtosis.p_value.to_string(),
        label(r.decisions.mardia_kurtosis).to_string(),
    ])?;
    w.write_record([
        "henze_zirkler".to_string(),
        r.henze_zirkler.statistic.to_string(),
        String::new(),
        r.henze_zirkler.p_value.to_string(),
        label(r.decisions.henze_zirkler).to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn mog(a: MogArgs) -> Result<()> {
    let kernel = a.kernel();
    let t = Instant::now();
    let rows = mixture_experiment(a.sigma, &a.lambdas, a.n, kernel, a.seed)?;
    if a.json {
        return print_json(&Report::Mog(MogReport {
            sigma: a.sigma,
            n: a.n,
            seed: a.seed,
            kernel,
            rows,
            wall_time_ms: elapsed_ms(t),
            tool_version: TOOL_VERSION.to_string(),
        }));
    }
    let mut w = csv_writer();
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn sample_efficiency(a: SampleEfficiencyArgs) -> Result<()> {
    let reference = load(&a.reference)?;
    let generated = load(&a.generated)?;
    let kernel = a.kernel.config(true);
    let divisor = a.divisor.into();
    let t = Instant::now();
    let rows = run_sample_efficiency(&reference, &generated, &a.sizes, &a.seeds, kernel, divisor)?;
    if a.json {
        return print_json(&Report::SampleEfficiency(SampleEfficiencyReport {
            ref_path: a.reference.display().to_string(),
            gen_path: a.generated.display().to_string(),
            kernel,
            divisor,
            rows,
            wall_time_ms: elapsed_ms(t),
            tool_version: TOOL_VERSION.to_string(),
        }));
    }
    let mut w = csv_writer();
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn bench(a: BenchArgs) -> Result<()> {
    let kernel = a.kernel.config(true);
    let report = bench_costs(a.n, a.d, a.reps, a.seed, kernel, a.divisor.into())?;
    if a.json {
        return print_json(&Report::Bench(BenchFileReport {
            bench: report,
            tool_version: TOOL_VERSION.to_string(),
        }));
    }
    let mut w = csv_writer();
    w.write_record(["metric", "n", "d", "reps", "median_ms", "min_ms", "max_ms", "spread_ms", "value"])?;
    for (name, timing, value) in [
        ("frechet", &report.frechet, report.frechet_value),
        ("mmd", &report.mmd, report.mmd_value),
    ] {
        w.write_record([
            name.to_string(),
            report.n.to_string(),
            report.d.to_string(),
            report.reps.to_string(),
            format!("{:.3}", timing.median_ms),
            format!("{:.3}", timing.min_ms),
            format!("{:.3}", timing.max_ms),
            format!("{:.3}", timing.spread_ms()),
            value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
