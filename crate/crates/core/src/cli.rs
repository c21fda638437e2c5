//! Command-line front end. [`run_cli`] returns the process exit status:
//! 0 on success, 1 for usage and parameter errors, 2 for I/O and format errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::eigenfaces::ComponentPolicy;
use crate::evaluation::{
    render_table, run_benchmark, seed_sweep, synthesize_manipulation, BenchmarkParams,
    ManipulationSpec,
};
use crate::gallery::{enroll, load_index, save_index, EnrollOptions, GrayscaleRule, Preprocessing};
use crate::imaging::{load_image, save_pgm, save_visualization, Overlay};
use crate::matching::{ratio_match, verify_matches, MatchParams};
use crate::sift::{extract_features, SiftParams};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "mugid",
    version,
    about = "Identify the source of a manipulated image with SIFT + angle-line-ratio verification, \
             compared against an eigenface baseline"
)]
pub struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Print progress and timing to standard error.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract features from gallery images and write an index file.
    Enroll(EnrollArgs),
    /// Rank the enrolled identities against a query image.
    Identify(IdentifyArgs),
    /// Synthesize tampered queries from a gallery and compare both methods.
    Benchmark(BenchmarkArgs),
    /// Write a tampered copy of an image.
    Synthesize(SynthesizeArgs),
    /// Draw keypoints, or verified matches against one gallery entry.
    Visualize(VisualizeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SiftArgs {
    /// Octave count [default: as many as keep the short side >= 16 px].
    #[arg(long)]
    pub octaves: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub scales_per_octave: usize,
    /// Blur of the first level of each octave, in octave pixels.
    #[arg(long, default_value_t = 1.6)]
    pub base_sigma: f64,
    /// Blur already present in the input, in input pixels.
    #[arg(long, default_value_t = 0.5)]
    pub assumed_blur: f64,
    /// Minimum |DoG| at a keypoint, for intensities in [0, 1].
    #[arg(long, default_value_t = 0.03)]
    pub contrast_threshold: f64,
    /// Principal-curvature ratio above which responses count as edges.
    #[arg(long, default_value_t = 10.0)]
    pub edge_ratio: f64,
    /// Secondary orientation peaks at least this fraction of the maximum spawn keypoints.
    #[arg(long, default_value_t = 0.8)]
    pub peak_ratio: f64,
    /// Per-component cap of the normalized descriptor.
    #[arg(long, default_value_t = 0.2)]
    pub descriptor_clamp: f64,
    /// Skip doubling the input before the first octave.
    #[arg(long)]
    pub no_upsample: bool,
}

impl SiftArgs {
    pub fn params(&self) -> SiftParams {
        SiftParams {
            octaves: self.octaves,
            scales_per_octave: self.scales_per_octave,
            base_sigma: self.base_sigma,
            assumed_input_blur: self.assumed_blur,
            contrast_threshold: self.contrast_threshold,
            edge_ratio: self.edge_ratio,
            orientation_peak_ratio: self.peak_ratio,
            descriptor_clamp: self.descriptor_clamp,
            upsample: !self.no_upsample,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MatchArgs {
    /// Nearest/second-nearest descriptor distance ratio bound.
    #[arg(long, default_value_t = 0.8)]
    pub ratio_threshold: f64,
    /// ALR angle tolerance, radians.
    #[arg(long, default_value_t = 0.0873)]
    pub angle_tolerance: f64,
    /// ALR relative length-ratio tolerance.
    #[arg(long, default_value_t = 0.10)]
    pub ratio_tolerance: f64,
    /// Triples evaluated per candidate before switching to sampling.
    #[arg(long, default_value_t = 2000)]
    pub max_triples: usize,
    /// Fraction of a pair's triples that must agree for it to survive.
    #[arg(long, default_value_t = 0.5)]
    pub quorum: f64,
    /// Seed for triple sampling.
    #[arg(long, default_value_t = 0)]
    pub match_seed: u64,
}

impl MatchArgs {
    pub fn params(&self) -> MatchParams {
        MatchParams {
            ratio_threshold: self.ratio_threshold,
            angle_tolerance: self.angle_tolerance,
            ratio_tolerance: self.ratio_tolerance,
            max_triples: self.max_triples,
            consistency_quorum: self.quorum,
            seed: self.match_seed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GalleryArgs {
    /// Preprocessed image width.
    #[arg(long, default_value_t = 300)]
    pub width: usize,
    /// Preprocessed image height.
    #[arg(long, default_value_t = 300)]
    pub height: usize,
    /// Keep exactly this many eigenfaces (capped at images - 1).
    #[arg(long, conflicts_with = "pca_variance")]
    pub pca_components: Option<usize>,
    /// Keep the fewest eigenfaces covering this fraction of the variance.
    #[arg(long, default_value_t = 0.95)]
    pub pca_variance: f64,
    #[command(flatten)]
    pub sift: SiftArgs,
}

impl GalleryArgs {
    pub fn options(&self) -> EnrollOptions {
        EnrollOptions {
            preprocessing: Preprocessing {
                width: self.width,
                height: self.height,
                grayscale: GrayscaleRule::Bt601,
            },
            sift: self.sift.params(),
            components: match self.pca_components {
                Some(k) => ComponentPolicy::Fixed(k),
                None => ComponentPolicy::VarianceFraction(self.pca_variance),
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ManipulationArgs {
    /// Node displacement bound as a fraction of image width (repeat for a sweep).
    #[arg(long, default_values_t = [0.03])]
    pub severity: Vec<f64>,
    /// Control nodes per side of the warp lattice.
    #[arg(long, default_value_t = 6)]
    pub grid: usize,
    /// Tone-curve exponent applied after warping.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Gaussian blur applied last [default: none].
    #[arg(long)]
    pub smooth_sigma: Option<f64>,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ManipulationArgs {
    fn spec(&self, severity: f64) -> ManipulationSpec {
        ManipulationSpec {
            severity,
            grid: self.grid,
            gamma: self.gamma,
            smooth_sigma: self.smooth_sigma,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct EnrollArgs {
    /// Index file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Tab-separated `id<TAB>path` lines; ids otherwise default to file stems.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Gallery images (PGM/PPM).
    pub images: Vec<PathBuf>,
    #[command(flatten)]
    pub gallery: GalleryArgs,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    #[arg(long)]
    pub index: PathBuf,
    pub query: PathBuf,
    /// Rows to print (0 = all).
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Also rank with the eigenface model.
    #[arg(long)]
    pub pca: bool,
    #[command(flatten)]
    pub matching: MatchArgs,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Directory of gallery images (PGM/PPM), ids from file stems.
    #[arg(
        long,
        required_unless_present = "manifest",
        conflicts_with = "manifest"
    )]
    pub gallery: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Seeds per severity, counting up from --seed.
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    /// Write the key=value report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub manipulation: ManipulationArgs,
    #[command(flatten)]
    pub gallery_opts: GalleryArgs,
    #[command(flatten)]
    pub matching: MatchArgs,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    pub input: PathBuf,
    /// Output PGM.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub manipulation: ManipulationArgs,
}

#[derive(Debug, Args)]
pub struct VisualizeArgs {
    pub input: PathBuf,
    /// Output image (PPM when anything is drawn).
    #[arg(long)]
    pub out: PathBuf,
    /// Draw matches against a gallery entry of this index...
    #[arg(long, requires = "against")]
    pub index: Option<PathBuf>,
    /// ...with this id.
    #[arg(long, requires = "index")]
    pub against: Option<String>,
    #[command(flatten)]
    pub sift: SiftArgs,
    #[command(flatten)]
    pub matching: MatchArgs,
}

/// Parses `argv` (program name first) and runs the command.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return 1;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_data_error() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Enroll(a) => cmd_enroll(a, cli.verbose),
        Command::Identify(a) => cmd_identify(a),
        Command::Benchmark(a) => cmd_benchmark(a, cli.verbose),
        Command::Synthesize(a) => cmd_synthesize(a),
        Command::Visualize(a) => cmd_visualize(a),
    }
}

fn file_stem_id(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .ok_or_else(|| Error::param(format!("cannot derive an id from '{}'", path.display())))
}

/// Reads `id<TAB>path` lines; relative paths are taken from the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<(String, PathBuf)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut items = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let line = line.trim_end_matches(['\n', '\r']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, file) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(start, "manifest line lacks a tab between id and path"))?;
        items.push((id.to_string(), base.join(file)));
    }
    Ok(items)
}

fn gallery_items(images: &[PathBuf], manifest: Option<&Path>) -> Result<Vec<(String, PathBuf)>> {
    let mut items = match manifest {
        Some(m) => read_manifest(m)?,
        None => Vec::new(),
    };
    for p in images {
        items.push((file_stem_id(p)?, p.clone()));
    }
    Ok(items)
}

fn directory_items(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if matches!(ext.as_deref(), Some("pgm" | "ppm" | "pnm")) {
            paths.push(path);
        }
    }
    paths.sort();
    paths
        .into_iter()
        .map(|p| Ok((file_stem_id(&p)?, p)))
        .collect()
}

fn cmd_enroll(a: &EnrollArgs, verbose: bool) -> Result<()> {
    let items = gallery_items(&a.images, a.manifest.as_deref())?;
    let start = Instant::now();
    let index = enroll(&items, &a.gallery.options())?;
    save_index(&index, &a.out)?;
    if verbose {
        let kps: usize = index.entries.iter().map(|e| e.len()).sum();
        eprintln!(
            "enrolled {} images ({kps} keypoints, {} eigenfaces) in {:.2?}",
            index.len(),
            index.eigen.k(),
            start.elapsed()
        );
    }
    println!("wrote {} ({} identities)", a.out.display(), index.len());
    Ok(())
}

fn cmd_identify(a: &IdentifyArgs) -> Result<()> {
    let index = load_index(&a.index)?;
    let result = index.identify(&a.query, &a.matching.params(), a.pca)?;
    let rows = if a.top == 0 {
        result.candidates.len()
    } else {
        a.top
    };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "query keypoints: {}", result.query_keypoints);
    if result.no_features {
        let _ = writeln!(out, "flag: no-features (ranking is tie-break order only)");
    }
    let _ = writeln!(
        out,
        "{:>4}  {:<24}  {:>8}  {:>9}  {:>6}",
        "rank", "id", "verified", "mean dist", "raw"
    );
    for (i, c) in result.candidates.iter().take(rows).enumerate() {
        let dist = c
            .mean_distance
            .map_or_else(|| "-".to_string(), |d| format!("{d:.4}"));
        let _ = writeln!(
            out,
            "{:>4}  {:<24}  {:>8}  {:>9}  {:>6}{}",
            i + 1,
            c.id,
            c.verified_count,
            dist,
            c.raw_matches,
            if c.unverified { "  (unverified)" } else { "" }
        );
    }
    if let Some(pca) = &result.pca {
        let _ = writeln!(out, "eigenface ranking:");
        for (i, (id, d)) in pca.iter().take(rows).enumerate() {
            let _ = writeln!(out, "{:>4}  {id:<24}  {d:>12.4}", i + 1);
        }
    }
    Ok(())
}

fn cmd_benchmark(a: &BenchmarkArgs, verbose: bool) -> Result<()> {
    if a.seeds == 0 {
        return Err(Error::param("--seeds must be at least 1"));
    }
    let items = match (&a.gallery, &a.manifest) {
        (Some(dir), _) => directory_items(dir)?,
        (None, Some(m)) => read_manifest(m)?,
        (None, None) => unreachable!("clap requires one of --gallery/--manifest"),
    };
    let specs: Vec<ManipulationSpec> = a
        .manipulation
        .severity
        .iter()
        .flat_map(|&s| seed_sweep(&a.manipulation.spec(s), a.seeds))
        .collect();
    let params = BenchmarkParams {
        enroll: a.gallery_opts.options(),
        matching: a.matching.params(),
    };
    let start = Instant::now();
    let report = run_benchmark(&items, &specs, &params)?;
    if verbose {
        eprintln!(
            "{} queries in {:.2?}",
            report.records.len(),
            start.elapsed()
        );
    }
    print!("{}", render_table(&report));
    if let Some(out) = &a.out {
        std::fs::write(out, report.to_text()).map_err(|e| Error::io(out, e))?;
    }
    Ok(())
}

fn cmd_synthesize(a: &SynthesizeArgs) -> Result<()> {
    let [severity] = a.manipulation.severity[..] else {
        return Err(Error::param("synthesize takes exactly one --severity"));
    };
    let img = load_image(&a.input)?;
    let out = synthesize_manipulation(&img, &a.manipulation.spec(severity))?;
    save_pgm(&out, &a.out)
}

fn cmd_visualize(a: &VisualizeArgs) -> Result<()> {
    let img = load_image(&a.input)?;
    let overlays = match (&a.index, &a.against) {
        (Some(index_path), Some(id)) => {
            let index = load_index(index_path)?;
            let entry = index
                .entries
                .iter()
                .find(|e| &e.id == id)
                .ok_or_else(|| Error::param(format!("no gallery entry '{id}'")))?;
            let img = index.preprocessing.apply(&img)?;
            let query = extract_features(&img, &index.sift, "query")?;
            let p = a.matching.params().for_candidate(id);
            let raw = ratio_match(&query, entry, &p);
            let verified = verify_matches(&raw.pairs, &query.keypoints, &entry.keypoints, &p);
            // segment from each query keypoint to its matched gallery position,
            // green when verified
            let overlays: Vec<Overlay> = verified
                .tallies
                .iter()
                .map(|t| {
                    let q = query.keypoints[t.pair.query];
                    let g = entry.keypoints[t.pair.gallery];
                    let ok = verified.pairs.contains(&t.pair);
                    Overlay::line(
                        q.x as f64,
                        q.y as f64,
                        g.x as f64,
                        g.y as f64,
                        ok as u8 as f32,
                    )
                })
                .collect();
            return save_visualization(&img, &overlays, &a.out);
        }
        _ => {
            let features = extract_features(&img, &a.sift.params(), "image")?;
            features
                .keypoints
                .iter()
                .flat_map(|k| {
                    let (s, c) = (k.orientation as f64).sin_cos();
                    let r = 2.0 * k.sigma as f64;
                    let (x, y) = (k.x as f64, k.y as f64);
                    [
                        Overlay::point(x, y, 1.0),
                        Overlay::line(x, y, x + r * c, y + r * s, 1.0),
                    ]
                })
                .collect::<Vec<_>>()
        }
    };
    save_visualization(&img, &overlays, &a.out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("mugid").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flag_defaults_match_library_defaults() {
        let cli = parse(&["benchmark", "--gallery", "g"]);
        let Command::Benchmark(b) = cli.command else {
            panic!()
        };
        assert_eq!(b.gallery_opts.sift.params(), SiftParams::default());
        assert_eq!(b.matching.params(), MatchParams::default());
        assert_eq!(b.gallery_opts.options(), EnrollOptions::default());
        assert_eq!(b.manipulation.spec(0.03), ManipulationSpec::default());
        assert_eq!(b.seeds, 5);
    }

    #[test]
    fn usage_errors_exit_1_and_help_exits_0() {
        assert_eq!(run_cli(["mugid", "frobnicate"]), 1);
        assert_eq!(run_cli(["mugid", "identify", "--bogus"]), 1);
        assert_eq!(run_cli(["mugid", "--help"]), 0);
    }

    #[test]
    fn severity_repeats() {
        let cli = parse(&[
            "benchmark",
            "--gallery",
            "g",
            "--severity",
            "0.02",
            "--severity",
            "0.08",
        ]);
        let Command::Benchmark(b) = cli.command else {
            panic!()
        };
        assert_eq!(b.manipulation.severity, vec![0.02, 0.08]);
    }

    #[test]
    fn manifest_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("list.tsv");
        std::fs::write(&m, "# gallery\nalice\ta.pgm\n\nbob\tsub/b.ppm\r\n").unwrap();
        let items = read_manifest(&m).unwrap();
        assert_eq!(
            items,
            vec![
                ("alice".to_string(), dir.path().join("a.pgm")),
                ("bob".to_string(), dir.path().join("sub/b.ppm")),
            ]
        );
        std::fs::write(&m, "alice a.pgm\n").unwrap();
        assert!(matches!(
            read_manifest(&m),
            Err(Error::Format { offset: 0, .. })
        ));
    }

    #[test]
    fn ids_from_file_stems() {
        assert_eq!(
            file_stem_id(Path::new("dir/face_01.pgm")).unwrap(),
            "face_01"
        );
    }
}
