use std::f64::consts::TAU;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use wavelab::acceptance;
use wavelab::field::FieldSample;
use wavelab::geometry::{PatchGrid, PointFrame, Probes, Space};
use wavelab::qe::{variance_statistic, Amplitude, QEReport, TestKernel};
use wavelab::rng::child_seed;
use wavelab::spectral::{
    cutoff_study, enumerate_window, spherical_transform_h2, weyl_window_count, PropagatorTable, RadialKernel,
    SpectralWindow, ball_volume, fit_asymptotic,
};
use wavelab::stats::{
    empirical_covariance, gaussianity_report, nodal_count, sample_covariance, sample_superposition,
    CovarianceEstimate, SuperpositionMode, SuperpositionSampler, SuperpositionSpec,
};
use wavelab::waves::{
    BesselPolar, EuclideanWave, EuclideanWaveSpec, FieldSampler, HyperbolicWave, HyperbolicWaveSpec, InvariantSine,
};

use crate::manifest::{sibling, RunManifest};
use crate::plot;

#[derive(Debug, Parser)]
#[command(name = "wavelab", version, about = "Random-wave and spectral-window experiments")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Common {
    /// Root seed; sample `i` uses the derived seed `child_seed(seed, i)`.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Number of Monte Carlo samples (command default when omitted).
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Output file; the manifest and any extra tables are written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Skip the SVG plot written next to `--out`.
    #[arg(long, global = true)]
    pub no_plot: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Draw one field sample on a square patch.
    SampleWave(SampleWave),
    /// Binned two-point covariance against the model kernel.
    Covariance(Covariance),
    /// Moments, KS distance and energy of one-point values.
    Gaussianity(Gaussianity),
    /// Torus window count against the flat Weyl prediction.
    WeylCount(WeylCount),
    /// Table of the hyperbolic spherical transform of a radial profile.
    Transform(Transform),
    /// Deviation of the truncated cutoff kernel from the spectral window.
    Cutoff(Cutoff),
    /// Ball-average eigenvalues h_t(s) and their time averages.
    Propagator(Propagator),
    /// Matrix-element variance of a separable test kernel on a torus window.
    QeVariance(QeVariance),
    /// Covariance of lifted unit-sphere superpositions of window eigenfunctions.
    Superposition(Superposition),
    /// Nodal domain counts of independent patches.
    Nodal(Nodal),
    /// Run the acceptance checks.
    Verify(Verify),
    /// Rerun a command from its manifest.
    Replay(Replay),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SampleWave(_) => "sample-wave",
            Command::Covariance(_) => "covariance",
            Command::Gaussianity(_) => "gaussianity",
            Command::WeylCount(_) => "weyl-count",
            Command::Transform(_) => "transform",
            Command::Cutoff(_) => "cutoff",
            Command::Propagator(_) => "propagator",
            Command::QeVariance(_) => "qe-variance",
            Command::Superposition(_) => "superposition",
            Command::Nodal(_) => "nodal",
            Command::Verify(_) => "verify",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Model {
    /// Plane waves in R^2.
    Euclidean2,
    /// Plane waves in R^3 read on a plane.
    Euclidean3,
    /// Bessel polar expansion in R^2.
    Bessel,
    /// Boundary superposition on the hyperbolic disc.
    Hyperbolic,
    /// `sin(<eps, x> + a)`, a bounded non-Gaussian control field.
    Sine,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = Model::Euclidean2)]
    pub space: Model,
    /// Frequency of the Euclidean models.
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    /// Spectral parameter of the hyperbolic model (eigenvalue 1/4 + s^2).
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    #[arg(long, default_value_t = 256)]
    pub directions: usize,
    #[arg(long, default_value_t = 256)]
    pub boundary: usize,
    /// Bessel modes `|n| <= N`.
    #[arg(long, default_value_t = 40)]
    pub modes: usize,
}

impl ModelArgs {
    fn sampler(&self) -> Result<Box<dyn FieldSampler>> {
        Ok(match self.space {
            Model::Euclidean2 | Model::Euclidean3 => Box::new(EuclideanWave::new(EuclideanWaveSpec {
                dim: if self.space == Model::Euclidean2 { 2 } else { 3 },
                mu: self.mu,
                n_directions: self.directions,
            })?),
            Model::Bessel => Box::new(BesselPolar::new(self.mu, self.modes)?),
            Model::Hyperbolic => Box::new(HyperbolicWave::new(HyperbolicWaveSpec { s: self.s, n_boundary: self.boundary })?),
            Model::Sine => Box::new(InvariantSine),
        })
    }

    fn center(&self) -> PointFrame {
        match self.space {
            Model::Euclidean3 => PointFrame::origin(3),
            _ => PointFrame::origin(2),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleWave {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 5.0)]
    pub half_width: f64,
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Covariance {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 8.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Gaussianity {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Cutoff `K` for the tail mass `P(|F| > K)`.
    #[arg(long, default_value_t = 3.0)]
    pub tail: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WeylCount {
    /// Torus side length.
    #[arg(long = "L", default_value_t = TAU)]
    pub side: f64,
    #[arg(long)]
    pub lambda0: f64,
    #[arg(long)]
    pub delta: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Transform {
    /// `box:<radius>` or `bump:<radius>`.
    #[arg(long, default_value = "bump:1")]
    pub profile: String,
    #[arg(long, default_value_t = 4.0)]
    pub s_max: f64,
    #[arg(long, default_value_t = 41)]
    pub points: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Cutoff {
    #[arg(long, default_value_t = 1.25)]
    pub lambda0: f64,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [5.0, 10.0, 20.0, 40.0])]
    pub r_cuts: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Propagator {
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    #[arg(long, default_value_t = 50.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub dt: f64,
    /// Horizons `T` of the time averages; five even steps up to `--t-max` by default.
    #[arg(long, value_delimiter = ',')]
    pub averages: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QeVariance {
    #[arg(long = "L", default_value_t = TAU)]
    pub side: f64,
    #[arg(long)]
    pub lambda0: f64,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    /// `one`, `const:<c>`, `cos1`, `cos:<m>:<n>` or `poisson:<r>`.
    #[arg(long, default_value = "poisson:0.98")]
    pub amplitude: String,
    #[arg(long, default_value = "box:1")]
    pub profile: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum ModeArg {
    Alpha,
    Beta,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Superposition {
    #[arg(long = "L", default_value_t = TAU)]
    pub side: f64,
    #[arg(long, default_value_t = 1e4)]
    pub lambda0: f64,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Beta)]
    pub mode: ModeArg,
    /// Base points per function in alpha mode.
    #[arg(long, default_value_t = 10)]
    pub reads: usize,
    #[arg(long, default_value_t = 6.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 26)]
    pub bins: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Nodal {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 20.0)]
    pub half_width: f64,
    #[arg(long, default_value_t = 128)]
    pub resolution: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Verify {
    /// Run only these checks.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u32>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Replay {
    pub manifest: PathBuf,
}

/// Collects the files a command writes.
struct Sink {
    out: Option<PathBuf>,
    format: Format,
    plots: bool,
    written: Vec<PathBuf>,
}

impl Sink {
    fn ext(&self) -> &'static str {
        match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    /// The main table: `--out` or stdout.
    fn main(&mut self, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        match self.out.clone() {
            Some(path) => self.file(&path, body),
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                body(&mut lock)?;
                lock.flush()?;
                Ok(())
            }
        }
    }

    /// A secondary table, only written when `--out` is given.
    fn extra(&mut self, tag: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        if let Some(out) = self.out.clone() {
            let path = sibling(&out, tag, self.ext());
            self.file(&path, body)?;
        }
        Ok(())
    }

    fn file(&mut self, path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
        let mut w = BufWriter::new(f);
        body(&mut w)?;
        w.flush()?;
        self.written.push(path.to_path_buf());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, value: &T) -> Result<()> {
        self.main(|w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    fn plot(&mut self, series: &[(&str, Vec<(f64, f64)>)]) -> Result<()> {
        if let (true, Some(out)) = (self.plots, self.out.clone()) {
            let path = sibling(&out, "plot", "svg");
            plot::lines(&path, series)?;
            self.written.push(path);
        }
        Ok(())
    }
}

/// Runs `cli`; `Ok(false)` means the command ran but some check failed.
pub fn execute(cli: Cli, args: Vec<String>) -> Result<bool> {
    if let Command::Replay(r) = &cli.command {
        let m = RunManifest::read(&r.manifest)?;
        let mut argv = vec!["wavelab".to_string()];
        argv.extend(m.args.iter().cloned());
        let replayed = Cli::try_parse_from(&argv).context("manifest arguments no longer parse")?;
        if matches!(replayed.command, Command::Replay(_)) {
            bail!("a manifest cannot replay another replay");
        }
        return execute(replayed, m.args);
    }

    let start = Instant::now();
    let common = cli.common.clone();
    let mut sink = Sink { out: common.out.clone(), format: common.format, plots: !common.no_plot, written: Vec::new() };
    let passed = run_command(&cli.command, &common, &mut sink)?;
    log::info!("{} finished in {:.2?}", cli.command.name(), start.elapsed());
    if let Some(out) = &common.out {
        let manifest = RunManifest {
            command: cli.command.name().to_string(),
            args,
            parameters: serde_json::to_value(&cli.command)?,
            seed: common.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: sink.written.clone(),
            duration_secs: start.elapsed().as_secs_f64(),
        };
        manifest.write(&RunManifest::path_for(out))?;
    }
    Ok(passed)
}

fn covariance_csv(est: &CovarianceEstimate) -> impl FnOnce(&mut dyn Write) -> Result<()> + '_ {
    move |w| Ok(est.write_csv(w)?)
}

fn covariance_out(sink: &mut Sink, est: &CovarianceEstimate) -> Result<()> {
    match sink.format {
        Format::Csv => sink.main(covariance_csv(est))?,
        Format::Json => sink.json(est)?,
    }
    let pts = |v: &[f64]| est.radii.iter().cloned().zip(v.iter().cloned()).collect::<Vec<_>>();
    sink.plot(&[("empirical", pts(&est.mean)), ("theoretical", pts(&est.theoretical))])
}

fn check_samples(n: usize) -> Result<usize> {
    if n == 0 {
        bail!(wavelab::Error::InvalidArgument("--samples must be positive".into()));
    }
    Ok(n)
}

fn run_command(command: &Command, common: &Common, sink: &mut Sink) -> Result<bool> {
    let seed = common.seed;
    match command {
        Command::SampleWave(c) => {
            let sampler = c.model.sampler()?;
            let patch = PatchGrid::new(c.model.center(), c.half_width, c.resolution)?;
            let sample = sampler.sample(&patch, seed)?;
            match sink.format {
                Format::Csv => sink.main(|w| Ok(sample.write_csv(w)?))?,
                Format::Json => sink.main(|w| {
                    writeln!(w, "{}", sample.to_json()?)?;
                    Ok(())
                })?,
            }
        }
        Command::Covariance(c) => {
            let n = check_samples(common.samples.unwrap_or(2_000))?;
            if c.bins < 2 {
                bail!(wavelab::Error::InvalidArgument("--bins must be at least 2".into()));
            }
            let sampler = c.model.sampler()?;
            let patch = PatchGrid::new(c.model.center(), c.r_max, 2 * (c.bins - 1) + 1)?;
            let est = empirical_covariance(sampler.as_ref(), &patch, n, c.bins, seed)?;
            covariance_out(sink, &est)?;
        }
        Command::Gaussianity(c) => {
            let n = check_samples(common.samples.unwrap_or(20_000))?;
            let sampler = c.model.sampler()?;
            let prepared = sampler.prepare(&c.model.center(), &Probes::Points(vec![[0.0, 0.0]]))?;
            let values: Vec<f64> = (0..n as u64).map(|i| prepared.eval(child_seed(seed, i))[0]).collect();
            let report = gaussianity_report(&values, c.tail)?;
            match sink.format {
                Format::Csv => sink.main(|w| Ok(report.write_csv(w)?))?,
                Format::Json => sink.json(&report)?,
            }
        }
        Command::WeylCount(c) => {
            let count = weyl_window_count(&Space::flat_torus(c.side)?, &SpectralWindow::new(c.lambda0, c.delta)?)?;
            match sink.format {
                Format::Csv => sink.main(|w| {
                    writeln!(w, "lambda0,delta,count,prediction,rel_error")?;
                    writeln!(w, "{},{},{},{},{}", count.lambda0, count.delta, count.count, count.prediction, count.rel_error)?;
                    Ok(())
                })?,
                Format::Json => sink.json(&count)?,
            }
        }
        Command::Transform(c) => {
            let kernel = RadialKernel::parse(&c.profile)?;
            if c.points < 2 {
                bail!(wavelab::Error::InvalidArgument("--points must be at least 2".into()));
            }
            let mut rows = Vec::with_capacity(c.points);
            for i in 0..c.points {
                let s = c.s_max * i as f64 / (c.points - 1) as f64;
                rows.push((s, spherical_transform_h2(&kernel, s)?));
            }
            match sink.format {
                Format::Csv => sink.main(|w| {
                    writeln!(w, "s,khat")?;
                    for (s, k) in &rows {
                        writeln!(w, "{s},{k}")?;
                    }
                    Ok(())
                })?,
                Format::Json => sink.json(&rows)?,
            }
            sink.plot(&[("khat", rows.clone())])?;
        }
        Command::Cutoff(c) => {
            let reports = cutoff_study(c.delta, c.lambda0, &c.r_cuts)?;
            match sink.format {
                Format::Csv => sink.main(|w| {
                    writeln!(w, "lambda0,delta,r_cut,deviation,worst_s")?;
                    for r in &reports {
                        writeln!(w, "{},{},{},{},{}", r.lambda0, r.delta, r.r_cut, r.deviation, r.worst_s)?;
                    }
                    Ok(())
                })?,
                Format::Json => sink.json(&reports)?,
            }
            sink.plot(&[("deviation", reports.iter().map(|r| (r.r_cut, r.deviation.log10())).collect())])?;
        }
        Command::Propagator(c) => {
            let table = PropagatorTable::new(c.s, c.t_max, c.dt)?;
            let horizons =
                if c.averages.is_empty() { (1..=5).map(|k| c.t_max * k as f64 / 5.0).collect() } else { c.averages.clone() };
            let averages = horizons
                .iter()
                .map(|&t| Ok((t, table.time_average(t)?)))
                .collect::<wavelab::Result<Vec<(f64, f64)>>>()?;
            let fit = if table.t.last().copied().unwrap_or(0.0) >= 30.0 { Some(fit_asymptotic(&table)?) } else { None };
            match sink.format {
                Format::Csv => {
                    sink.main(|w| {
                        writeln!(w, "t,h,bound")?;
                        for (t, h) in table.t.iter().zip(&table.h) {
                            writeln!(w, "{t},{h},{}", ball_volume(*t).sqrt())?;
                        }
                        Ok(())
                    })?;
                    sink.extra("averages", |w| {
                        writeln!(w, "T,average")?;
                        for (t, a) in &averages {
                            writeln!(w, "{t},{a}")?;
                        }
                        Ok(())
                    })?;
                }
                Format::Json => {
                    #[derive(Serialize)]
                    struct Doc<'a> {
                        table: &'a PropagatorTable,
                        averages: &'a [(f64, f64)],
                        fit: Option<wavelab::spectral::AsymptoticFit>,
                    }
                    sink.json(&Doc { table: &table, averages: &averages, fit })?;
                }
            }
            sink.plot(&[("h", table.t.iter().cloned().zip(table.h.iter().cloned()).collect())])?;
        }
        Command::QeVariance(c) => {
            let basis = enumerate_window(&Space::flat_torus(c.side)?, &SpectralWindow::new(c.lambda0, c.delta)?)?;
            let kernel = TestKernel::new(Amplitude::parse(&c.amplitude)?, RadialKernel::parse(&c.profile)?, c.side)?;
            let report = variance_statistic(&basis, &kernel)?;
            match sink.format {
                Format::Csv => sink.main(|w| qe_entries_csv(w, &report))?,
                Format::Json => sink.json(&report)?,
            }
            let summary = serde_json::json!({
                "lambda0": report.window.lambda0,
                "delta": report.window.delta,
                "count": report.count,
                "variance_center0": report.variance_center0,
                "variance_centerj": report.variance_centerj,
            });
            if let Some(out) = sink.out.clone() {
                sink.file(&sibling(&out, "summary", "json"), |w| {
                    serde_json::to_writer_pretty(&mut *w, &summary)?;
                    writeln!(w)?;
                    Ok(())
                })?;
            }
        }
        Command::Superposition(c) => {
            let n = check_samples(common.samples.unwrap_or(5_000))?;
            if c.bins < 2 {
                bail!(wavelab::Error::InvalidArgument("--bins must be at least 2".into()));
            }
            let sampler = SuperpositionSampler::new(c.side, c.lambda0, c.delta)?;
            let patch = PatchGrid::new(PointFrame::origin(2), c.r_max, 2 * (c.bins - 1) + 1)?;
            let est = match c.mode {
                ModeArg::Beta => empirical_covariance(&sampler, &patch, n, c.bins, seed)?,
                ModeArg::Alpha => {
                    let spec = SuperpositionSpec {
                        side: c.side,
                        lambda0: c.lambda0,
                        delta: c.delta,
                        patch,
                        n_draws: n,
                        seed,
                        mode: SuperpositionMode::Alpha { reads: c.reads },
                    };
                    let draws: Vec<FieldSample> = sample_superposition(&spec)?;
                    sample_covariance(&draws, |r| sampler.covariance(r).unwrap_or(f64::NAN))?
                }
            };
            covariance_out(sink, &est)?;
        }
        Command::Nodal(c) => {
            let n = check_samples(common.samples.unwrap_or(10))?;
            let sampler = c.model.sampler()?;
            let patch = PatchGrid::new(c.model.center(), c.half_width, c.resolution)?;
            let reports = (0..n as u64)
                .map(|i| nodal_count(&sampler.sample(&patch, child_seed(seed, i))?))
                .collect::<wavelab::Result<Vec<_>>>()?;
            match sink.format {
                Format::Csv => sink.main(|w| {
                    writeln!(w, "count,touching,area,density")?;
                    for r in &reports {
                        writeln!(w, "{},{},{},{}", r.domain_count, r.boundary_touching, r.patch_area, r.count_density)?;
                    }
                    Ok(())
                })?,
                Format::Json => sink.json(&reports)?,
            }
        }
        Command::Verify(c) => {
            let ids: Vec<u32> = if c.only.is_empty() { acceptance::IDS.collect() } else { c.only.clone() };
            let mut outcomes = Vec::new();
            for id in ids {
                let o = acceptance::run(id)
                    .ok_or_else(|| wavelab::Error::InvalidArgument(format!("no acceptance check {id}")))?;
                eprintln!("{o}");
                outcomes.push(o);
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            eprintln!("{} passed, {failed} failed", outcomes.len() - failed);
            match sink.format {
                Format::Csv => sink.main(|w| {
                    writeln!(w, "id,name,passed,detail")?;
                    for o in &outcomes {
                        writeln!(w, "{},{},{},\"{}\"", o.id, o.name, o.passed, o.detail.replace('"', "'"))?;
                    }
                    Ok(())
                })?,
                Format::Json => sink.json(&outcomes)?,
            }
            return Ok(failed == 0);
        }
        Command::Replay(_) => unreachable!("handled by execute"),
    }
    Ok(true)
}

fn qe_entries_csv(w: &mut dyn Write, report: &QEReport) -> Result<()> {
    writeln!(w, "lambda_j,matrix_element,expected_lambda_j,expected_lambda0,deviation")?;
    for e in &report.entries {
        let deviation = e.matrix_element - e.expected_lambda_j;
        writeln!(w, "{},{},{},{},{deviation}", e.lambda, e.matrix_element, e.expected_lambda_j, e.expected_lambda0)?;
    }
    Ok(())
}
