//! Command-line front end. Every subcommand reads its named inputs, calls
//! the library, and writes the named outputs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use morphsi::diagrams::{self, Granulometry, RenderOptions, DEFAULT_R_MAX};
use morphsi::measures::{self, Aggregation};
use morphsi::noise::{add_salt_pepper, NoiseSpec};
use morphsi::optimizer::{self, GaConfig};
use morphsi::selection::{self, SelectionImages, SelectionReport, Winner};
use morphsi::{morphology, pgm, FilterSpec, Image, Shape};

const SPEC_HELP: &str = "Filter specs: center:N (morphological centre of the two ASFs of size N), \
asf-oc:N (ASF, opening first), asf-co:N (ASF, closing first), \
seq:open@1,close@2,... (explicit sequence, applied left to right)";

#[derive(Parser, Debug)]
#[command(name = "morphsi", version, about = "Grayscale morphology, size/intensity diagrams and relative noise measures", after_help = SPEC_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Corrupt an image with salt-and-pepper noise.
    AddNoise(AddNoiseArgs),
    /// Apply a filter spec to an image.
    Filter(FilterArgs),
    /// Morphological centre of the two alternating sequential filters.
    Center(CenterArgs),
    /// Size/intensity diagram of an image.
    Si(SiArgs),
    /// M of a difference image, or M* of a filter output.
    Measure(MeasureArgs),
    /// Compare two filters on a noisy image and report the lower M*.
    Select(SelectArgs),
    /// Genetic search for an opening/closing sequence minimising M*.
    Optimize(OptimizeArgs),
    /// Run the full noise, filter, diagram and selection pipeline on a clean image.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Debug)]
pub struct OutputFormat {
    /// Write plain (P2) PGM instead of binary (P5).
    #[arg(long)]
    pub ascii: bool,
}

#[derive(Args, Debug)]
pub struct AddNoiseArgs {
    /// Per-pixel corruption probability.
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub seed: u64,
    pub input: PathBuf,
    pub output: PathBuf,
    #[command(flatten)]
    pub format: OutputFormat,
}

#[derive(Args, Debug)]
pub struct FilterArgs {
    #[arg(long, help = SPEC_HELP)]
    pub spec: String,
    #[arg(long, default_value = "square")]
    pub shape: Shape,
    pub input: PathBuf,
    pub output: PathBuf,
    #[command(flatten)]
    pub format: OutputFormat,
}

#[derive(Args, Debug)]
pub struct CenterArgs {
    #[arg(long)]
    pub size: usize,
    #[arg(long, default_value = "square")]
    pub shape: Shape,
    pub input: PathBuf,
    pub output: PathBuf,
    #[command(flatten)]
    pub format: OutputFormat,
}

#[derive(Args, Debug)]
pub struct SiArgs {
    #[arg(long, default_value_t = DEFAULT_R_MAX)]
    pub rmax: usize,
    #[arg(long, default_value = "square")]
    pub shape: Shape,
    /// Running sums over intensity instead of plain histograms.
    #[arg(long)]
    pub cumulative: bool,
    /// Use the closing granulometry instead of openings.
    #[arg(long)]
    pub closing: bool,
    /// Write the diagram as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the diagram rendered as a PGM image.
    #[arg(long)]
    pub render: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub x_scale: usize,
    #[arg(long, default_value_t = 2)]
    pub y_scale: usize,
    #[arg(long, default_value_t = 50)]
    pub value_scale: u64,
    /// Render only the first N sizes.
    #[arg(long)]
    pub r_crop: Option<usize>,
    /// Render only the first N intensities.
    #[arg(long)]
    pub k_crop: Option<usize>,
    pub input: PathBuf,
}

#[derive(Args, Debug)]
pub struct MeasureArgs {
    /// Difference image, or the noisy image when SECOND is given.
    pub first: PathBuf,
    /// Filter output; M is then taken of |FIRST - SECOND|.
    pub second: Option<PathBuf>,
    /// Other candidate's output; adds M* of SECOND to the report.
    #[arg(long, requires = "second")]
    pub other: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_R_MAX)]
    pub rmax: usize,
    #[arg(long, default_value = "square")]
    pub shape: Shape,
    #[arg(long, default_value = "elementwise_volume")]
    pub aggregation: Aggregation,
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    #[arg(long, help = SPEC_HELP)]
    pub ft1: String,
    #[arg(long, help = SPEC_HELP)]
    pub ft2: String,
    #[arg(long, default_value_t = DEFAULT_R_MAX)]
    pub rmax: usize,
    /// Element shape for the filters and for the measure's openings.
    #[arg(long, default_value = "square")]
    pub shape: Shape,
    #[arg(long, default_value = "elementwise_volume")]
    pub aggregation: Aggregation,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write filter outputs, difference images and their diagrams here.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    pub noisy: PathBuf,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    /// key = value file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Required unless the config file sets it.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub max_stages: Option<usize>,
    #[arg(long)]
    pub max_se_size: Option<usize>,
    #[arg(long)]
    pub mutation_rate: Option<f64>,
    #[arg(long)]
    pub crossover_rate: Option<f64>,
    #[arg(long)]
    pub tournament: Option<usize>,
    /// Fixed second filter for the cross term.
    #[arg(long)]
    pub reference: Option<String>,
    #[arg(long)]
    pub rmax: Option<usize>,
    #[arg(long)]
    pub shape: Option<Shape>,
    #[arg(long)]
    pub aggregation: Option<Aggregation>,
    /// Write per-generation statistics as CSV.
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Write the best genome's output image.
    #[arg(long)]
    pub output: Option<PathBuf>,
    pub noisy: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Noise probabilities to run, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5])]
    pub levels: Vec<f64>,
    #[arg(long, default_value = "center:2")]
    pub ft1: String,
    #[arg(long, default_value = "center:5")]
    pub ft2: String,
    #[arg(long, default_value_t = DEFAULT_R_MAX)]
    pub rmax: usize,
    #[arg(long, default_value = "square")]
    pub shape: Shape,
    #[arg(long, default_value = "elementwise_volume")]
    pub aggregation: Aggregation,
    /// Clean source image.
    pub input: PathBuf,
}

fn read_image(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    pgm::load_pgm(&bytes).with_context(|| format!("cannot decode {}", path.display()))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn write_image(path: &Path, img: &Image, ascii: bool) -> Result<()> {
    write_bytes(path, &pgm::save_pgm(img, ascii))
}

fn parse_spec(text: &str, shape: Shape) -> Result<FilterSpec> {
    FilterSpec::parse(text, shape).with_context(|| format!("bad filter spec '{text}'"))
}

/// Runs one parsed invocation, writing normal output to `out`.
pub fn run<W: Write>(cli: Cli, out: &mut W) -> Result<()> {
    match cli.command {
        Command::AddNoise(a) => {
            let spec = NoiseSpec::new(a.p, a.seed)?;
            let img = read_image(&a.input)?;
            write_image(&a.output, &add_salt_pepper(&img, &spec), a.format.ascii)
        }
        Command::Filter(a) => {
            let spec = parse_spec(&a.spec, a.shape)?;
            let img = read_image(&a.input)?;
            write_image(
                &a.output,
                &morphology::apply_filter(&img, &spec)?,
                a.format.ascii,
            )
        }
        Command::Center(a) => {
            if a.size == 0 {
                bail!("--size must be at least 1");
            }
            let img = read_image(&a.input)?;
            write_image(
                &a.output,
                &morphology::center(&img, a.size, a.shape),
                a.format.ascii,
            )
        }
        Command::Si(a) => si(a, out),
        Command::Measure(a) => measure(a, out),
        Command::Select(a) => select(a, out),
        Command::Optimize(a) => optimize(a, out),
        Command::Reproduce(a) => reproduce(a, out),
    }
}

fn si<W: Write>(a: SiArgs, out: &mut W) -> Result<()> {
    let img = read_image(&a.input)?;
    let family = if a.closing {
        Granulometry::Closing
    } else {
        Granulometry::Opening
    };
    let d = diagrams::si_diagram_with(&img, a.rmax, a.shape, a.cumulative, family);
    let opts = RenderOptions {
        x_scale: a.x_scale,
        y_scale: a.y_scale,
        value_scale: a.value_scale,
        r_crop: a.r_crop,
        k_crop: a.k_crop,
    };
    // Validate the render before writing anything.
    let rendered = a
        .render
        .as_ref()
        .map(|_| diagrams::render_si(&d, &opts))
        .transpose()?;
    match (&a.csv, &a.render) {
        (None, None) => out.write_all(&diagrams::export_csv(&d))?,
        _ => {
            if let Some(path) = &a.csv {
                write_bytes(path, &diagrams::export_csv(&d))?;
            }
            if let (Some(path), Some(img)) = (&a.render, &rendered) {
                write_image(path, img, false)?;
            }
        }
    }
    Ok(())
}

fn measure<W: Write>(a: MeasureArgs, out: &mut W) -> Result<()> {
    let first = read_image(&a.first)?;
    let value = match (&a.second, &a.other) {
        (None, _) => serde_json::json!({
            "m": measures::measure_m(&first),
            "m_per_r": measures::measure_m_family(&first, a.rmax, a.shape),
        }),
        (Some(second), None) => {
            let diff = morphsi::abs_diff(&first, &read_image(second)?)?;
            serde_json::json!({
                "m": measures::measure_m(&diff),
                "m_per_r": measures::measure_m_family(&diff, a.rmax, a.shape),
            })
        }
        (Some(second), Some(other)) => {
            let rep = measures::measure_report(
                &first,
                &read_image(second)?,
                &read_image(other)?,
                a.rmax,
                a.shape,
                a.aggregation,
            )?;
            serde_json::to_value(&rep)?
        }
    };
    serde_json::to_writer_pretty(&mut *out, &value)?;
    writeln!(out)?;
    Ok(())
}

fn winner_label(w: Winner) -> &'static str {
    match w {
        Winner::First => "ft1",
        Winner::Second => "ft2",
        Winner::Tie => "tie",
    }
}

/// Writes filter outputs, difference images, and their non-cumulative
/// diagrams (CSV, full render, and the 5-size by 50-intensity zoom).
fn dump_selection(dir: &Path, images: &SelectionImages, rep: &SelectionReport) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    write_image(&dir.join("ft1.pgm"), &images.ft1, false)?;
    write_image(&dir.join("ft2.pgm"), &images.ft2, false)?;
    let zoom = RenderOptions {
        r_crop: Some((rep.r_max + 1).min(5)),
        k_crop: Some(50),
        ..RenderOptions::default()
    };
    for (name, diff) in [
        ("diff_n_ft1", &images.diff_n_ft1),
        ("diff_n_ft2", &images.diff_n_ft2),
        ("diff_cross", &images.diff_cross),
    ] {
        write_image(&dir.join(format!("{name}.pgm")), diff, false)?;
        let d = diagrams::si_diagram(diff, rep.r_max, rep.shape, false);
        write_bytes(
            &dir.join(format!("{name}_si.csv")),
            &diagrams::export_csv(&d),
        )?;
        write_image(
            &dir.join(format!("{name}_si.pgm")),
            &diagrams::render_si(&d, &RenderOptions::default())?,
            false,
        )?;
        write_image(
            &dir.join(format!("{name}_si_zoom.pgm")),
            &diagrams::render_si(&d, &zoom)?,
            false,
        )?;
    }
    write_bytes(&dir.join("report.json"), &selection::report_to_json(rep))
}

fn select<W: Write>(a: SelectArgs, out: &mut W) -> Result<()> {
    let spec1 = parse_spec(&a.ft1, a.shape)?;
    let spec2 = parse_spec(&a.ft2, a.shape)?;
    let noisy = read_image(&a.noisy)?;
    let (rep, images) = selection::select_filter_with_images(
        &noisy,
        &spec1,
        &spec2,
        a.rmax,
        a.shape,
        a.aggregation,
    )?;
    let json = selection::report_to_json(&rep);
    if let Some(dir) = &a.dump {
        dump_selection(dir, &images, &rep)?;
    }
    match &a.report {
        Some(path) => {
            write_bytes(path, &json)?;
            writeln!(
                out,
                "M*(ft1)={} M*(ft2)={} winner={}{}",
                rep.mstar_values[0],
                rep.mstar_values[1],
                winner_label(rep.winner),
                if rep.degenerate { " (degenerate)" } else { "" }
            )?;
        }
        None => out.write_all(&json)?,
    }
    Ok(())
}

fn optimize<W: Write>(a: OptimizeArgs, out: &mut W) -> Result<()> {
    let mut cfg = GaConfig::default();
    let mut seeded = false;
    if let Some(path) = &a.config {
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        cfg.apply_key_values(&text)
            .with_context(|| format!("bad config {}", path.display()))?;
        seeded = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .any(|(k, _)| k.trim() == "seed");
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
        seeded = true;
    }
    if !seeded {
        bail!("an explicit --seed (or a seed entry in --config) is required");
    }
    if let Some(v) = a.population {
        cfg.population_size = v;
    }
    if let Some(v) = a.generations {
        cfg.generations = v;
    }
    if let Some(v) = a.max_stages {
        cfg.max_stages = v;
    }
    if let Some(v) = a.max_se_size {
        cfg.max_se_size = v;
    }
    if let Some(v) = a.mutation_rate {
        cfg.mutation_rate = v;
    }
    if let Some(v) = a.crossover_rate {
        cfg.crossover_rate = v;
    }
    if let Some(v) = a.tournament {
        cfg.tournament_size = v;
    }
    if let Some(v) = a.rmax {
        cfg.r_max = v;
    }
    if let Some(v) = a.aggregation {
        cfg.aggregation = v;
    }
    if let Some(v) = a.shape {
        cfg.set("shape", v.as_str())?;
    }
    if let Some(v) = &a.reference {
        cfg.reference_spec = parse_spec(v, cfg.shape)?;
    }
    cfg.validate()?;

    let noisy = read_image(&a.noisy)?;
    let result = optimizer::evolve(&noisy, &cfg)?;
    if let Some(path) = &a.history {
        write_bytes(path, &optimizer::history_to_csv(&result.history))?;
    }
    if let Some(path) = &a.output {
        let img = morphology::apply_filter(&noisy, &result.best.to_spec(cfg.shape))?;
        write_image(path, &img, false)?;
    }
    writeln!(
        out,
        "best={} fitness={} evaluations={}",
        result.best, result.best_fitness, result.evaluations
    )?;
    Ok(())
}

fn reproduce<W: Write>(a: ReproduceArgs, out: &mut W) -> Result<()> {
    let spec1 = parse_spec(&a.ft1, a.shape)?;
    let spec2 = parse_spec(&a.ft2, a.shape)?;
    let clean = read_image(&a.input)?;
    fs::create_dir_all(&a.out_dir)
        .with_context(|| format!("cannot create {}", a.out_dir.display()))?;

    write_image(&a.out_dir.join("original.pgm"), &clean, false)?;
    write_source_diagrams(&a.out_dir, "original", &clean, a.rmax, a.shape)?;

    for &p in &a.levels {
        let noise = NoiseSpec::new(p, a.seed)?;
        let label = format!("p{:02}", (p * 100.0).round() as u32);
        let noisy = add_salt_pepper(&clean, &noise);
        let dir = a.out_dir.join(&label);
        fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        write_image(&dir.join("noisy.pgm"), &noisy, false)?;
        write_source_diagrams(&dir, "noisy", &noisy, a.rmax, a.shape)?;

        let (rep, images) = selection::select_filter_with_images(
            &noisy,
            &spec1,
            &spec2,
            a.rmax,
            a.shape,
            a.aggregation,
        )?;
        dump_selection(&dir, &images, &rep)?;
        writeln!(
            out,
            "{label}: M*({})={} M*({})={} winner={}{}",
            spec1,
            rep.mstar_values[0],
            spec2,
            rep.mstar_values[1],
            winner_label(rep.winner),
            if rep.degenerate { " (degenerate)" } else { "" }
        )?;
    }
    Ok(())
}

/// Plain and cumulative diagrams of a source image, as CSV and renders.
fn write_source_diagrams(
    dir: &Path,
    name: &str,
    img: &Image,
    r_max: usize,
    shape: Shape,
) -> Result<()> {
    let plain = diagrams::si_diagram(img, r_max, shape, false);
    let cumulative = plain.to_cumulative();
    write_bytes(
        &dir.join(format!("{name}_si.csv")),
        &diagrams::export_csv(&plain),
    )?;
    write_bytes(
        &dir.join(format!("{name}_si_cumulative.csv")),
        &diagrams::export_csv(&cumulative),
    )?;
    write_image(
        &dir.join(format!("{name}_si.pgm")),
        &diagrams::render_si(&plain, &RenderOptions::default())?,
        false,
    )?;
    let unscaled = RenderOptions {
        value_scale: 1,
        ..RenderOptions::default()
    };
    write_image(
        &dir.join(format!("{name}_si_cumulative.pgm")),
        &diagrams::render_si(&cumulative, &unscaled)?,
        false,
    )
}
