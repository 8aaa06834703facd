use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use licar_core::annotations::{
    dataset_stats, format_stats_table, parse_yolo_seg_with, read_labelme, split_dataset,
    to_labelme, to_yolo_seg, ClassMap,
};
use licar_core::evaluation::{evaluate, format_report_table, Branch, EvalGeometry, FrameMap, GroundTruth};
use licar_core::frame::{load_frame_scaled, load_points, save_frame};
use licar_core::pipeline::{bench, list_frames, track_sequence};
use licar_core::{compose_pseudo_rgb, pointcloud_to_sri, read_detections, Error, ErrorCategory, FileReplayDetector, PipelineConfig};

const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_IO: u8 = 74;
const EXIT_CONFIG: u8 = 78;

/// LiDAR pseudo-RGB imaging, labelling, tracking and evaluation.
#[derive(Parser, Debug)]
#[command(name = "licar", version)]
struct Cli {
    /// Pipeline config (TOML). Defaults apply when absent.
    #[arg(long, global = true, env = "LICAR_CONFIG")]
    config: Option<PathBuf>,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Project a point cloud CSV into a spherical range image (channel PNGs).
    Convert {
        #[arg(long)]
        points: PathBuf,
        /// Output frame directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compose a frame directory into a pseudo-RGB PNG.
    Compose {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split image ids into train/val/test.
    Split(SplitArgs),
    /// Convert between LabelMe JSON and YOLO-seg text.
    Labels {
        #[command(subcommand)]
        direction: LabelsCommand,
    },
    /// Track replayed detections over a sequence of frames; writes MOT CSV.
    Track {
        /// Directory with one sub-directory per frame.
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        detections: PathBuf,
        /// Output CSV (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write annotated pseudo-RGB images to this directory.
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
    /// Score detections against ground truth.
    Eval(EvalArgs),
    /// Time the per-frame pipeline.
    Bench {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        detections: PathBuf,
        /// Also write the report as JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SplitArgs {
    /// Text file with one image id per line.
    #[arg(long)]
    ids: PathBuf,
    /// Train,val,test percentages.
    #[arg(long, value_parser = parse_ratios)]
    ratios: Option<[u32; 3]>,
    #[arg(long)]
    seed: Option<u64>,
    /// Manifest output (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// LabelMe directory (`<id>.json`); prints per-set instance counts.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum LabelsCommand {
    /// LabelMe JSON file or directory to YOLO-seg.
    ToYolo {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// YOLO-seg text file or directory to LabelMe JSON.
    ToLabelme {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        width: Option<u32>,
        #[arg(long)]
        height: Option<u32>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BranchArg {
    Box,
    Mask,
    Both,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    detections: PathBuf,
    /// LabelMe directory (`<frame id>.json`) or a detections JSONL file.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    branch: BranchArg,
    /// Treat the image as a 360-degree panorama.
    #[arg(long)]
    wrap: bool,
    /// Also write the reports as JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (tag, code) = match e.category() {
                ErrorCategory::Data => ("data", EXIT_DATA),
                ErrorCategory::Io => ("io", EXIT_IO),
                ErrorCategory::Config => ("config", EXIT_CONFIG),
            };
            eprintln!("error[{tag}]: {e}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> licar_core::Result<()> {
    let cfg = PipelineConfig::resolve(cli.config.as_deref())?;
    match cli.command {
        Command::Convert { points, out } => {
            let pts = load_points(&points)?;
            let sri = pointcloud_to_sri(&pts, &cfg.projection)?;
            if sri.dropped > 0 {
                log::warn!("{} of {} points outside the field of view", sri.dropped, pts.len());
            }
            save_frame(&sri.frame, &out, cfg.frame.range_scale_mm)
        }
        Command::Compose { frame, out } => {
            let f = load_frame_scaled(&frame, cfg.frame.range_scale_mm)?;
            compose_pseudo_rgb(&f, &cfg.normalization)?.save_png(&out)
        }
        Command::Split(args) => run_split(args, &cfg),
        Command::Labels { direction } => run_labels(direction, &cfg),
        Command::Track {
            frames,
            detections,
            out,
            overlay,
        } => {
            let frames = list_frames(&frames)?;
            let detector = FileReplayDetector::from_file(&detections)?;
            let csv = track_sequence(&frames, &detector, &cfg, overlay.as_deref())?;
            emit(out.as_deref(), &csv)
        }
        Command::Eval(args) => run_eval(args, &cfg),
        Command::Bench {
            frames,
            detections,
            json,
        } => {
            let frames = list_frames(&frames)?;
            let detector = FileReplayDetector::from_file(&detections)?;
            let report = bench(&frames, &detector, &cfg)?;
            println!(
                "speed (ms) pre+inf+post: {}  total median {:.1} p95 {:.1} over {} frames",
                report.decomposition(),
                report.total.median_ms,
                report.total.p95_ms,
                report.frames
            );
            if let Some(p) = json {
                write(&p, &report.to_json())?;
            }
            Ok(())
        }
    }
}

fn parse_ratios(s: &str) -> Result<[u32; 3], String> {
    let parts: Vec<u32> = s
        .split(',')
        .map(|p| p.trim().parse::<u32>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|v: Vec<u32>| format!("expected three percentages, got {}", v.len()))
}

fn read_text(path: &Path) -> licar_core::Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> licar_core::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> licar_core::Result<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_split(args: SplitArgs, cfg: &PipelineConfig) -> licar_core::Result<()> {
    let ids: Vec<String> = read_text(&args.ids)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    let ratios = args.ratios.unwrap_or(cfg.split.ratios);
    let split = split_dataset(&ids, ratios, args.seed.unwrap_or(cfg.split.seed))?;
    emit(args.out.as_deref(), &(split.to_json() + "\n"))?;
    if let Some(dir) = args.labels {
        let mut classes = ClassMap::default();
        let mut annos = std::collections::HashMap::new();
        for id in &ids {
            let doc = read_labelme(&dir.join(format!("{id}.json")), &mut classes)?;
            annos.insert(id.clone(), doc.instances);
        }
        eprint!("{}", format_stats_table(&dataset_stats(&split, &annos)?));
    } else {
        for (set, members) in split.sets() {
            log::info!("{set}: {} images", members.len());
        }
    }
    Ok(())
}

/// Files in `input` (or `input` itself) with extension `ext`, paired with
/// their output path under `out`.
fn label_jobs(input: &Path, out: &Path, ext: &str, out_ext: &str) -> licar_core::Result<Vec<(PathBuf, PathBuf)>> {
    if !input.is_dir() {
        return Ok(vec![(input.to_path_buf(), out.to_path_buf())]);
    }
    let mut jobs = Vec::new();
    for entry in fs::read_dir(input).map_err(|e| Error::io(input, e))? {
        let p = entry.map_err(|e| Error::io(input, e))?.path();
        if p.extension().is_some_and(|e| e == ext) {
            let stem = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            jobs.push((p, out.join(format!("{stem}.{out_ext}"))));
        }
    }
    jobs.sort();
    Ok(jobs)
}

fn run_labels(cmd: LabelsCommand, cfg: &PipelineConfig) -> licar_core::Result<()> {
    let mut classes = ClassMap::default();
    match cmd {
        LabelsCommand::ToYolo { input, out } => {
            for (src, dst) in label_jobs(&input, &out, "json", "txt")? {
                let doc = read_labelme(&src, &mut classes)?;
                write(&dst, &to_yolo_seg(&doc.instances, doc.width, doc.height))?;
            }
        }
        LabelsCommand::ToLabelme {
            input,
            out,
            width,
            height,
        } => {
            let w = width.unwrap_or(cfg.projection.width as u32);
            let h = height.unwrap_or(cfg.projection.height as u32);
            for (src, dst) in label_jobs(&input, &out, "txt", "json")? {
                let annos = parse_yolo_seg_with(&read_text(&src)?, w, h, &classes)?;
                write(&dst, &to_labelme(&annos, w, h, None))?;
            }
        }
    }
    Ok(())
}

fn load_ground_truth(path: &Path, cfg: &PipelineConfig) -> licar_core::Result<(FrameMap<GroundTruth>, (usize, usize))> {
    let mut gts = FrameMap::new();
    let default_size = (cfg.projection.width, cfg.projection.height);
    if !path.is_dir() {
        for (id, dets) in read_detections(path)? {
            gts.insert(id, dets.iter().map(GroundTruth::from).collect());
        }
        return Ok((gts, default_size));
    }
    let mut classes = ClassMap::default();
    let mut size = None;
    for (src, _) in label_jobs(path, path, "json", "json")? {
        let doc = read_labelme(&src, &mut classes)?;
        let dims = (doc.width as usize, doc.height as usize);
        match size {
            None => size = Some(dims),
            Some(s) if s != dims => {
                return Err(Error::DimensionMismatch(format!(
                    "{} is {}x{}, expected {}x{}",
                    src.display(),
                    dims.0,
                    dims.1,
                    s.0,
                    s.1
                )))
            }
            _ => {}
        }
        let id = src.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        gts.insert(id, doc.instances.iter().map(GroundTruth::from).collect());
    }
    Ok((gts, size.unwrap_or(default_size)))
}

fn run_eval(args: EvalArgs, cfg: &PipelineConfig) -> licar_core::Result<()> {
    let dets = read_detections(&args.detections)?;
    let (gts, (width, height)) = load_ground_truth(&args.gt, cfg)?;
    let geom = EvalGeometry {
        width,
        height,
        wrap: args.wrap,
    };
    let branches: &[Branch] = match args.branch {
        BranchArg::Box => &[Branch::Box],
        BranchArg::Mask => &[Branch::Mask],
        BranchArg::Both => &[Branch::Box, Branch::Mask],
    };
    let reports: Vec<_> = branches
        .iter()
        .map(|&b| evaluate(&dets, &gts, b, &geom))
        .collect();
    for w in reports.iter().flat_map(|r| &r.warnings) {
        log::warn!("{w}");
    }
    print!("{}", format_report_table(&reports));
    if let Some(p) = args.json {
        let json = serde_json::to_string_pretty(&reports).expect("reports serialise");
        write(&p, &(json + "\n"))?;
    }
    Ok(())
}
