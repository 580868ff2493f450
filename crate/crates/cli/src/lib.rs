//! Commands behind the `symdetect` binary.
//!
//! Every command returns a [`CliError`] whose [`CliError::exit_code`] follows
//! the tool's contract: 2 for bad input, 3 for bad configuration and 4 when an
//! image carries no symmetry evidence.

pub mod render;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use symdetect::evaluation::{pr_curve, ImageResult};
use symdetect::io::{
    candidates_csv, convert_ground_truth, density_csv, density_header, detections_to_json,
    features_to_json, format_ground_truth, parse_detections, parse_ground_truth, pr_curve_csv,
    GtFormat, Manifest,
};
use symdetect::{GrayImage, MatchReport, PipelineConfig, PrCurve};

pub const EXIT_BAD_INPUT: u8 = 2;
pub const EXIT_BAD_CONFIG: u8 = 3;
pub const EXIT_NO_EVIDENCE: u8 = 4;

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{context}: {source}")]
    Core {
        context: String,
        source: symdetect::Error,
    },
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Config(String),
    #[error("{failed} of {total} images failed")]
    Batch { failed: usize, total: usize, code: u8 },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Core { source, .. } => match source {
                symdetect::Error::Config(_) => EXIT_BAD_CONFIG,
                symdetect::Error::NoEvidence(_) => EXIT_NO_EVIDENCE,
                _ => EXIT_BAD_INPUT,
            },
            Self::Input(_) => EXIT_BAD_INPUT,
            Self::Config(_) => EXIT_BAD_CONFIG,
            Self::Batch { code, .. } => *code,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

trait Context<T> {
    fn context(self, what: impl std::fmt::Display) -> CliResult<T>;
}

impl<T> Context<T> for symdetect::Result<T> {
    fn context(self, what: impl std::fmt::Display) -> CliResult<T> {
        self.map_err(|source| CliError::Core {
            context: what.to_string(),
            source,
        })
    }
}

impl<T> Context<T> for std::io::Result<T> {
    fn context(self, what: impl std::fmt::Display) -> CliResult<T> {
        self.map_err(|e| CliError::Input(format!("{what}: {e}")))
    }
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).context(path.display())?;
    tmp.write_all(bytes).context(path.display())?;
    tmp.persist(path)
        .map_err(|e| CliError::Input(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

/// Effective configuration: the optional TOML file with `key=value`
/// overrides applied on top.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> CliResult<PipelineConfig> {
    let text = match path {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    PipelineConfig::from_toml_with_overrides(&text, overrides).context("configuration")
}

/// Optional debug dumps for a single-image run.
#[derive(Debug, Clone, Default)]
pub struct Dumps {
    pub features: Option<PathBuf>,
    pub candidates: Option<PathBuf>,
    /// Prefix: writes `<prefix>.csv` and `<prefix>.json`.
    pub density: Option<PathBuf>,
}

impl Dumps {
    pub fn is_empty(&self) -> bool {
        self.features.is_none() && self.candidates.is_none() && self.density.is_none()
    }
}

/// `<prefix>.<ext>`, keeping any dots already in the prefix.
pub fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Runs the pipeline on one image and writes its detection JSON. Nothing is
/// written when the pipeline fails.
pub fn detect_one(
    image: &Path,
    out: &Path,
    config: &PipelineConfig,
    dumps: &Dumps,
) -> CliResult<usize> {
    let img = GrayImage::open(image).context(image.display())?;
    let result = symdetect::run(&img, config).context(image.display())?;
    let axes: Vec<_> = result.detections.iter().map(|d| d.axis.clone()).collect();
    if let Some(p) = &dumps.features {
        write_atomic(p, features_to_json(&result.features).as_bytes())?;
    }
    if let Some(p) = &dumps.candidates {
        write_atomic(p, candidates_csv(&result.candidates).as_bytes())?;
    }
    if let Some(prefix) = &dumps.density {
        let header = serde_json::to_string_pretty(&density_header(&result.grid))
            .expect("header serializes")
            + "\n";
        write_atomic(&with_suffix(prefix, "json"), header.as_bytes())?;
        write_atomic(&with_suffix(prefix, "csv"), density_csv(&result.grid).as_bytes())?;
    }
    write_atomic(out, detections_to_json(&axes).as_bytes())?;
    Ok(axes.len())
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Expands directories (their image files, sorted) and glob patterns into a
/// list of image paths.
pub fn expand_inputs(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)
                .context(input.display())?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && is_image(p))
                .collect();
            found.sort();
            out.extend(found);
        } else if input.exists() {
            out.push(input.clone());
        } else {
            let pattern = input.to_string_lossy();
            let matches: Vec<PathBuf> = glob::glob(&pattern)
                .map_err(|e| CliError::Input(format!("{pattern}: {e}")))?
                .filter_map(|p| p.ok())
                .filter(|p| p.is_file() && is_image(p))
                .collect();
            if matches.is_empty() {
                return Err(CliError::Input(format!("{pattern}: no such file")));
            }
            out.extend(matches);
        }
    }
    Ok(out)
}

/// Detects axes in every image, in parallel, writing `<out_dir>/<stem>.json`
/// for each success. Failures are reported on stderr; the error carries the
/// exit code of the first failing image in input order.
pub fn detect_batch(images: &[PathBuf], out_dir: &Path, config: &PipelineConfig) -> CliResult<()> {
    fs::create_dir_all(out_dir).context(out_dir.display())?;
    let mut stems: Vec<_> = images.iter().map(|p| p.file_stem()).collect();
    stems.sort();
    if stems.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Input(
            "batch inputs must have distinct file stems".into(),
        ));
    }
    let results: Vec<CliResult<usize>> = images
        .par_iter()
        .map(|img| {
            let stem = img.file_stem().unwrap_or_default();
            let out = out_dir.join(with_suffix(Path::new(stem), "json"));
            detect_one(img, &out, config, &Dumps::default())
        })
        .collect();
    let mut first_code = None;
    let mut failed = 0;
    for (img, r) in images.iter().zip(&results) {
        match r {
            Ok(n) => eprintln!("{}: {n} axes", img.display()),
            Err(e) => {
                eprintln!("error: {e}");
                failed += 1;
                first_code.get_or_insert(e.exit_code());
            }
        }
    }
    match first_code {
        None => Ok(()),
        Some(code) => Err(CliError::Batch {
            failed,
            total: images.len(),
            code,
        }),
    }
}

fn detections_path(dir: &Path, name: &str) -> Option<PathBuf> {
    let direct = dir.join(format!("{name}.json"));
    if direct.is_file() {
        return Some(direct);
    }
    let stem = Path::new(name).file_stem()?;
    let fallback = dir.join(with_suffix(Path::new(stem), "json"));
    fallback.is_file().then_some(fallback)
}

/// Loads a benchmark: ground truth from the manifest and detections from
/// `<detections_dir>/<name>.json`. A missing detection file means no
/// detections for that image.
pub fn load_benchmark(manifest: &Path, detections_dir: &Path) -> CliResult<Vec<ImageResult>> {
    let m = Manifest::load(manifest).context(manifest.display())?;
    if !detections_dir.is_dir() {
        return Err(CliError::Input(format!(
            "{}: not a directory",
            detections_dir.display()
        )));
    }
    m.entries
        .iter()
        .map(|e| {
            let gt_text = fs::read_to_string(&e.ground_truth).context(e.ground_truth.display())?;
            let ground_truth = parse_ground_truth(&gt_text).context(e.ground_truth.display())?;
            let detections = match detections_path(detections_dir, &e.name) {
                None => Vec::new(),
                Some(p) => {
                    let text = fs::read_to_string(&p).context(p.display())?;
                    parse_detections(&text)
                        .and_then(|recs| recs.iter().map(|r| r.to_scored()).collect())
                        .context(p.display())?
                }
            };
            Ok(ImageResult {
                detections,
                ground_truth,
            })
        })
        .collect()
}

/// Outcome of an evaluation run.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub curve: PrCurve,
    /// Totals at the max-F1 threshold.
    pub report: MatchReport,
}

impl Evaluation {
    pub fn summary(&self) -> String {
        match self.curve.max_f1_threshold {
            Some(t) => format!("max F1 = {:.4} at threshold {t}", self.curve.max_f1),
            None => format!("max F1 = {:.4} (no detections)", self.curve.max_f1),
        }
    }
}

pub fn evaluate(
    manifest: &Path,
    detections_dir: &Path,
    config: &PipelineConfig,
) -> CliResult<Evaluation> {
    let images = load_benchmark(manifest, detections_dir)?;
    let curve = pr_curve(&images, &config.evaluation).context(manifest.display())?;
    let report = curve.best(&images, &config.evaluation);
    Ok(Evaluation { curve, report })
}

pub fn write_report(path: &Path, report: &MatchReport) -> CliResult<()> {
    let json = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
    write_atomic(path, json.as_bytes())
}

pub fn write_pr_curve(path: &Path, curve: &PrCurve) -> CliResult<()> {
    write_atomic(path, pr_curve_csv(curve).as_bytes())
}

/// Converts a ground-truth file to the canonical `x1 y1 x2 y2` format.
pub fn convert_gt(input: &Path, format: GtFormat, out: &Path) -> CliResult<usize> {
    let text = fs::read_to_string(input).context(input.display())?;
    let axes = convert_ground_truth(&text, format).context(input.display())?;
    write_atomic(out, format_ground_truth(&axes).as_bytes())?;
    Ok(axes.len())
}

pub fn parse_gt_format(s: &str) -> CliResult<GtFormat> {
    s.parse::<GtFormat>().context("--format")
}

/// Draws the top detections on the image, optionally with the density panel
/// at `<heatmap>.csv` / `<heatmap>.json` to its right, and writes a PNG.
pub fn render_overlay(
    image: &Path,
    detections: &Path,
    out: &Path,
    heatmap: Option<&Path>,
) -> CliResult<usize> {
    let mut img = ::image::open(image)
        .map_err(|e| CliError::Input(format!("{}: {e}", image.display())))?
        .to_rgb8();
    let text = fs::read_to_string(detections).context(detections.display())?;
    let records = parse_detections(&text).context(detections.display())?;
    render::check_bounds(&records, img.width(), img.height())
        .map_err(|e| CliError::Input(format!("{}: {e}", detections.display())))?;
    render::draw_overlay(&mut img, &records);
    if let Some(prefix) = heatmap {
        let header_path = with_suffix(prefix, "json");
        let header_text = fs::read_to_string(&header_path).context(header_path.display())?;
        let header = serde_json::from_str(&header_text)
            .map_err(|e| CliError::Input(format!("{}: {e}", header_path.display())))?;
        let csv_path = with_suffix(prefix, "csv");
        let csv = fs::read_to_string(&csv_path).context(csv_path.display())?;
        let grid = symdetect::io::parse_density(&header, &csv).context(csv_path.display())?;
        let panel = render::heatmap_panel(&grid, img.height(), &records);
        img = render::side_by_side(&img, &panel);
    }
    let mut png = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut png), ::image::ImageFormat::Png)
        .map_err(|e| CliError::Input(format!("{}: {e}", out.display())))?;
    write_atomic(out, &png)?;
    Ok(records.len().min(render::MAX_DRAWN))
}
