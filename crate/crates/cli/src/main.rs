use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use artvista_core::{
    build_template, generate_sketch, render_template_png, render_template_svg,
    template_to_json, RasterImage, SketchLevel, TemplateOptions, DEFAULT_MIN_AREA_FRACTION, MAX_COLORS,
};
use artvista_genai::{generate_reference_images, BackendConfig, GenRequest, Style, MAX_IMAGES_PER_REQUEST};
use artvista_service::{ServiceConfig, DEFAULT_DATA_DIR, DEFAULT_PORT, ENV_DATA_DIR, ENV_PORT};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "artvista", version, about = "Paint-by-number templates and line-art sketches from photos")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a numbered paint-by-number template
    Pbn(PbnArgs),
    /// Draw a sketch at one of three detail levels
    Sketch(SketchArgs),
    /// Print the numbered palette a template would use
    Palette(PaletteArgs),
    /// Generate reference images from a text prompt
    Generate(GenerateArgs),
    /// Run the HTTP service
    Serve(ServeArgs),
}

#[derive(Args)]
struct QuantArgs {
    /// Palette size; 8 is the simplified preset
    #[arg(long, value_name = "K", default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..=MAX_COLORS as i64))]
    colors: u32,
    /// Seed for color clustering
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PbnArgs {
    /// Input PNG or JPEG
    input: PathBuf,
    #[command(flatten)]
    quant: QuantArgs,
    /// Regions smaller than this percentage of the canvas are merged into a neighbor
    #[arg(long, value_name = "PCT", default_value_t = DEFAULT_MIN_AREA_FRACTION * 100.0, value_parser = parse_percent)]
    min_region: f64,
    /// Outline simplification tolerance in pixels; 0 keeps exact pixel edges
    #[arg(long, value_name = "PX", default_value_t = 0.0, value_parser = parse_tolerance)]
    simplify: f64,
    /// Write the printable SVG here
    #[arg(long, value_name = "OUT.svg")]
    svg: Option<PathBuf>,
    /// Write the template document (JSON) here
    #[arg(long, value_name = "OUT.json")]
    json: Option<PathBuf>,
    /// Write an outline-and-numbers PNG here
    #[arg(long, value_name = "OUT.png")]
    png: Option<PathBuf>,
    /// Pixel scale of the PNG output
    #[arg(long, value_name = "S", default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=16))]
    scale: u32,
}

#[derive(Args)]
struct SketchArgs {
    /// Input PNG or JPEG
    input: PathBuf,
    /// abstract, intermediate or advanced
    #[arg(long, default_value = "abstract", value_parser = parse_level)]
    level: SketchLevel,
    /// Seed for the region outlines behind the abstract and intermediate levels
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
    /// Output PNG
    #[arg(long, value_name = "OUT.png")]
    out: PathBuf,
}

#[derive(Args)]
struct PaletteArgs {
    /// Input PNG or JPEG
    input: PathBuf,
    #[command(flatten)]
    quant: QuantArgs,
}

#[derive(Args)]
struct GenerateArgs {
    /// What to draw
    #[arg(long, value_name = "TEXT")]
    prompt: String,
    /// Number of images
    #[arg(long, value_name = "N", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=MAX_IMAGES_PER_REQUEST as i64))]
    count: u32,
    /// Seed for the backend; equal requests give equal images
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
    /// realistic, colorful, watercolor or oil
    #[arg(long, value_parser = parse_style)]
    style: Option<Style>,
    /// Directory for image-1.png, image-2.png, ...; created if missing
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    /// TCP port to listen on
    #[arg(long, value_name = "P", env = ENV_PORT, default_value_t = DEFAULT_PORT)]
    port: u16,
    /// Where templates, sessions and images are stored
    #[arg(long, value_name = "DIR", env = ENV_DATA_DIR, default_value = DEFAULT_DATA_DIR)]
    data_dir: PathBuf,
}

fn parse_percent(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if (0.0..100.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("must be in [0, 100), got {v}"))
    }
}

fn parse_tolerance(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("must be a non-negative number, got {v}"))
    }
}

fn parse_level(s: &str) -> Result<SketchLevel, String> {
    s.parse().map_err(|e: artvista_core::Error| e.to_string())
}

fn parse_style(s: &str) -> Result<Style, String> {
    s.parse().map_err(|e: artvista_genai::GenaiError| e.to_string())
}

enum Failure {
    Validation(String),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Io(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl From<artvista_core::Error> for Failure {
    fn from(e: artvista_core::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read_image(path: &Path) -> Result<RasterImage, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    RasterImage::decode(&bytes).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn pbn(a: PbnArgs) -> Outcome {
    let img = read_image(&a.input)?;
    let opts = TemplateOptions {
        colors: a.quant.colors as usize,
        seed: a.quant.seed,
        min_area_fraction: a.min_region / 100.0,
        simplify_tolerance: a.simplify,
        ..TemplateOptions::default()
    };
    let t = build_template(&img, &opts)?;
    if let Some(p) = &a.json {
        write_file(p, &template_to_json(&t))?;
    }
    if let Some(p) = &a.svg {
        write_file(p, &render_template_svg(&t, 1.0)?)?;
    }
    if let Some(p) = &a.png {
        write_file(p, &render_template_png(&t, a.scale)?.encode_png()?)?;
    }
    println!(
        "{}x{}: {} regions, {} colors",
        t.width,
        t.height,
        t.regions.len(),
        t.palette.len()
    );
    Ok(())
}

fn sketch(a: SketchArgs) -> Outcome {
    let img = read_image(&a.input)?;
    let s = generate_sketch(&img, a.level, a.seed)?;
    write_file(&a.out, &s.strokes.encode_png()?)?;
    println!("{} sketch: {:.2}% ink", a.level, s.ink_density() * 100.0);
    Ok(())
}

fn palette(a: PaletteArgs) -> Outcome {
    let img = read_image(&a.input)?;
    let opts = TemplateOptions {
        colors: a.quant.colors as usize,
        seed: a.quant.seed,
        ..TemplateOptions::default()
    };
    let t = build_template(&img, &opts)?;
    let mut area = vec![0u64; t.palette.len()];
    for r in &t.regions {
        area[r.number as usize - 1] += r.area as u64;
    }
    println!("number  hex      share");
    for (e, a) in t.palette.entries().iter().zip(area) {
        let [r, g, b] = e.srgb.0;
        let share = a as f64 / t.pixel_count() as f64 * 100.0;
        println!("{:>6}  #{r:02x}{g:02x}{b:02x}  {share:>6.2}%", e.number);
    }
    Ok(())
}

fn genai_failure(e: artvista_genai::GenaiError) -> Failure {
    match e {
        artvista_genai::GenaiError::InvalidArgument(_) => Failure::Validation(e.to_string()),
        _ => Failure::Io(e.to_string()),
    }
}

fn generate(a: GenerateArgs) -> Outcome {
    let cfg = BackendConfig::from_env().map_err(genai_failure)?;
    let req = GenRequest {
        prompt: a.prompt,
        count: a.count,
        seed: a.seed,
        style: a.style,
    };
    let images = generate_reference_images(&cfg, &req).map_err(genai_failure)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", a.out_dir.display())))?;
    for (i, img) in images.iter().enumerate() {
        let path = a.out_dir.join(format!("image-{}.png", i + 1));
        write_file(&path, &img.encode_png()?)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn serve(a: ServeArgs) -> Outcome {
    let genai = BackendConfig::from_env().map_err(genai_failure)?;
    tracing_subscriber::fmt()
        .json()
        .with_writer(std::io::stdout)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let cfg = ServiceConfig {
        port: a.port,
        data_dir: a.data_dir,
        genai,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
    runtime
        .block_on(artvista_service::serve(cfg))
        .map_err(|e| Failure::Io(format!("service stopped: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Pbn(a) => pbn(a),
        Command::Sketch(a) => sketch(a),
        Command::Palette(a) => palette(a),
        Command::Generate(a) => generate(a),
        Command::Serve(a) => serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
