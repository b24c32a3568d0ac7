//! Argument definitions and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dpmkit::metrics::Alignment;

use crate::commands::{self, EvalArgs, EvalTask, ExportKind, Report};
use crate::config::{self, flag, Override};
use crate::error::CliError;
use crate::formats::{parse_pair, parse_reference};

#[derive(Debug, Parser)]
#[command(name = "dpmkit", version, about = "Dense 4D point-map clips: generate, query, curate and evaluate")]
pub struct Cli {
    /// TOML config file (also `DPMKIT_CONFIG`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the machine-readable JSON report instead of a table.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a clip and write its archive.
    Generate(GenerateArgs),
    /// Query a track through one pixel, or whole point maps of a frame.
    Query(QueryArgs),
    /// Size breakdown and dense-equivalent comparison.
    Stats { archive: PathBuf },
    /// Motion and occlusion filtering of every dynamic object.
    Curate(CurateArgs),
    /// Score predictions against an archive's ground truth.
    Eval(EvalCliArgs),
    /// Write ground truth in the prediction formats.
    Export(ExportArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Rig {
    Independent,
    PairedOrbits,
    FourStaticFourOrbits,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Kind {
    Sphere,
    Arm,
    Flag,
    Human,
    Teleporter,
    Idle,
}

fn snake(v: &impl ValueEnum) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().replace('-', "_")
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    /// Time steps per camera.
    #[arg(long)]
    pub frames: Option<u32>,
    #[arg(long)]
    pub cameras: Option<u32>,
    #[arg(long, value_enum)]
    pub rig: Option<Rig>,
    /// Number of random dynamic objects (1–3).
    #[arg(long)]
    pub objects: Option<u32>,
    /// Explicit object kinds, comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub kinds: Vec<Kind>,
    /// Leave out the animated human.
    #[arg(long)]
    pub no_human: bool,
    #[arg(long)]
    pub surface_tolerance: Option<f64>,
}

impl GenerateArgs {
    fn overrides(&self) -> Vec<Override> {
        let mut o = Vec::new();
        if let Some(v) = self.seed {
            o.push(flag("generate.seed", v as i64));
        }
        for (k, v) in [("width", self.width), ("height", self.height), ("frames", self.frames), ("cameras", self.cameras)] {
            if let Some(v) = v {
                o.push(flag(&format!("generate.{k}"), v as i64));
            }
        }
        if let Some(r) = self.rig {
            o.push(flag("generate.rig", snake(&r)));
        }
        if let Some(n) = self.objects {
            o.push(flag("generate.scene.dynamic_objects", n as i64));
        }
        if !self.kinds.is_empty() {
            let kinds: Vec<toml::Value> = self.kinds.iter().map(|k| toml::Value::String(snake(k))).collect();
            o.push(flag("generate.scene.kinds", kinds));
        }
        if self.no_human {
            o.push(flag("generate.scene.human", false));
        }
        if let Some(t) = self.surface_tolerance {
            o.push(flag("generate.surface_tolerance", t));
        }
        o
    }
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    pub archive: PathBuf,
    /// Query frame as `camera,time`.
    #[arg(long, default_value = "0,0")]
    pub frame: String,
    /// Pixel as `u,v`; omit to write whole point maps to `--out`.
    #[arg(long)]
    pub pixel: Option<String>,
    /// `world`, `first` or `camera,time`.
    #[arg(long = "ref", default_value = "first")]
    pub reference: String,
    /// Times as `0,3,7` or a half-open range `2..6`; default all.
    #[arg(long)]
    pub times: Option<String>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurateArgs {
    pub archive: PathBuf,
    #[arg(long)]
    pub iou_threshold: Option<f64>,
    #[arg(long)]
    pub min_bbox_area: Option<u64>,
    #[arg(long)]
    pub min_visible_ratio: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Task {
    Pose,
    Tracks,
    Depth,
    Recon,
    Correspondence,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Align {
    None,
    Rigid,
    Similarity,
}

#[derive(Debug, Args)]
pub struct EvalCliArgs {
    #[arg(long, value_enum)]
    pub task: Task,
    pub archive: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// Evaluated camera (target view for correspondence).
    #[arg(long, default_value_t = 0)]
    pub camera: u32,
    /// Source view for correspondence.
    #[arg(long, default_value_t = 1)]
    pub source_camera: u32,
    /// Trajectory alignment; overrides `eval.trajectory_alignment`.
    #[arg(long, value_enum)]
    pub align: Option<Align>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Export {
    Trajectory,
    Depth,
    Points,
    Tracks,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, value_enum)]
    pub kind: Export,
    pub archive: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub camera: u32,
    /// Pixel stride of exported tracks.
    #[arg(long, default_value_t = 8)]
    pub stride: u32,
    #[arg(long = "ref", default_value = "first")]
    pub reference: String,
}

pub fn parse_times(s: &str) -> Result<Vec<u32>, CliError> {
    let bad = || CliError::Usage(format!("bad time list `{s}`"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u32, u32) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        return if a < b { Ok((a..b).collect()) } else { Err(bad()) };
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn pixel(s: &str) -> Result<(i64, i64), CliError> {
    let bad = || CliError::Usage(format!("expected `u,v`, got `{s}`"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

pub fn run(cli: &Cli) -> Result<Report, CliError> {
    let flags = match &cli.command {
        Command::Generate(g) => g.overrides(),
        Command::Curate(c) => {
            let mut o = Vec::new();
            if let Some(v) = c.iou_threshold {
                o.push(flag("curation.motion.iou_threshold", v));
            }
            if let Some(v) = c.min_bbox_area {
                o.push(flag("curation.occlusion.min_bbox_area", v as i64));
            }
            if let Some(v) = c.min_visible_ratio {
                o.push(flag("curation.occlusion.min_visible_ratio", v));
            }
            o
        }
        _ => Vec::new(),
    };
    let cfg = config::load(cli.config.as_deref(), &flags)?;
    match &cli.command {
        Command::Generate(g) => commands::cmd_generate(&cfg, &g.out),
        Command::Query(q) => {
            let (c, t) = parse_pair(&q.frame)?;
            let times = q.times.as_deref().map(parse_times).transpose()?;
            let px = q.pixel.as_deref().map(pixel).transpose()?;
            commands::cmd_query(
                &cfg,
                &q.archive,
                dpmkit::FrameId::new(c, t),
                px,
                parse_reference(&q.reference)?,
                times,
                q.out.as_deref(),
            )
        }
        Command::Stats { archive } => commands::cmd_stats(&cfg, archive),
        Command::Curate(c) => commands::cmd_curate(&cfg, &c.archive),
        Command::Eval(e) => {
            let task = match e.task {
                Task::Pose => EvalTask::Pose,
                Task::Tracks => EvalTask::Tracks,
                Task::Depth => EvalTask::Depth,
                Task::Recon => EvalTask::Recon,
                Task::Correspondence => EvalTask::Correspondence,
            };
            let alignment = e.align.map(|a| match a {
                Align::None => Alignment::None,
                Align::Rigid => Alignment::Rigid,
                Align::Similarity => Alignment::Similarity,
            });
            commands::cmd_eval(
                &cfg,
                &EvalArgs {
                    task,
                    archive: &e.archive,
                    pred: &e.pred,
                    camera: e.camera,
                    source_camera: e.source_camera,
                    alignment,
                },
            )
        }
        Command::Export(x) => {
            let kind = match x.kind {
                Export::Trajectory => ExportKind::Trajectory,
                Export::Depth => ExportKind::Depth,
                Export::Points => ExportKind::Points,
                Export::Tracks => ExportKind::Tracks,
            };
            commands::cmd_export(&cfg, kind, &x.archive, &x.out, x.camera, x.stride, parse_reference(&x.reference)?)
        }
    }
}
