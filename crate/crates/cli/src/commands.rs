//! Subcommand implementations. Each returns a [`Report`] with a versioned
//! JSON document (embedding the resolved config) and a plain-text table.

use std::fmt::Write as _;
use std::path::Path;

use dpmkit::codec::{human_bytes, storage_estimate, ArchiveReader, StorageMode};
use dpmkit::curation::curate_clip;
use dpmkit::metrics::{
    correspondence_error, depth_metrics, recon_metrics, track_apd, track_epe, trajectory_metrics, Alignment, DepthAlign,
    Trajectory,
};
use dpmkit::{
    generate_clip, read_archive_file, sample_tracks, write_archive_file, BatchQuery, ClipArchive, DepthMap, FrameId,
    PointMap, RefFrame, Vec3,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::Config;
use crate::error::CliError;
use crate::formats::{reference_name, ArrayFile, TrackFile, TRACK_FORMAT, TRACK_VERSION};

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub json: serde_json::Value,
    pub table: String,
}

fn report(schema: &str, cfg: &Config, body: serde_json::Value, table: String) -> Report {
    let mut json = json!({ "schema": format!("dpmkit.{schema}/1"), "config": cfg.to_json() });
    if let (Some(obj), serde_json::Value::Object(b)) = (json.as_object_mut(), body) {
        obj.extend(b);
    }
    Report { json, table }
}

pub fn open(path: &Path) -> Result<ClipArchive, CliError> {
    Ok(read_archive_file(path)?)
}

pub fn cmd_generate(cfg: &Config, out: &Path) -> Result<Report, CliError> {
    let g = generate_clip(&cfg.generate, cfg.to_json())?;
    write_archive_file(&g.archive, out)?;
    let bytes = std::fs::metadata(out)?.len();
    let h = &g.archive.header;
    let table = format!(
        "wrote {}\n  {}x{} pixels, {} times x {} cameras\n  {} dynamic pixels encoded, {} rejected, worst residual {:.3e}\n  {} on disk\n  {}\n",
        out.display(),
        h.width,
        h.height,
        h.times,
        h.cameras,
        g.report.encoded,
        g.report.rejected,
        g.report.worst_residual,
        human_bytes(bytes),
        g.archive.metadata["caption"].as_str().unwrap_or(""),
    );
    Ok(report(
        "generate",
        cfg,
        json!({ "file_bytes": bytes, "encode_report": g.report, "caption": g.archive.metadata["caption"] }),
        table,
    ))
}

/// Query target: one pixel's track, or whole point maps written to `out`.
pub fn cmd_query(
    cfg: &Config,
    archive: &Path,
    frame: FrameId,
    pixel: Option<(i64, i64)>,
    reference: RefFrame,
    times: Option<Vec<u32>>,
    out: Option<&Path>,
) -> Result<Report, CliError> {
    let clip = open(archive)?;
    match pixel {
        Some(px) => {
            let q = BatchQuery {
                frames: vec![frame],
                pixels: vec![px],
                times,
                reference,
            };
            let b = sample_tracks(&clip, &q)?;
            if !b.valid[0] {
                return Err(CliError::Usage(format!("no surface at pixel ({}, {})", px.0, px.1)));
            }
            let points: Vec<[f64; 3]> = (0..b.times.len()).map(|k| b.point(0, k)).collect();
            let file = TrackFile {
                format: TRACK_FORMAT.into(),
                version: TRACK_VERSION,
                frame: [frame.camera, frame.time],
                reference: reference_name(&reference),
                times: b.times.clone(),
                pixels: vec![[px.0, px.1]],
                points: vec![points.clone()],
                valid: None,
            };
            let mut table = format!(
                "track of pixel ({}, {}) in frame ({}, {}), {} surface, reference {}\n{:>6} {:>14} {:>14} {:>14}\n",
                px.0,
                px.1,
                frame.camera,
                frame.time,
                if b.dynamic[0] { "dynamic" } else { "static" },
                file.reference,
                "t",
                "x",
                "y",
                "z"
            );
            for (t, p) in b.times.iter().zip(&points) {
                let _ = writeln!(table, "{t:>6} {:>14.6} {:>14.6} {:>14.6}", p[0], p[1], p[2]);
            }
            if let Some(path) = out {
                std::fs::write(path, serde_json::to_string_pretty(&file).expect("serializes"))?;
            }
            let mut json = serde_json::to_value(&file).expect("serializes");
            json["dynamic"] = json!(b.dynamic[0]);
            Ok(report("query", cfg, json, table))
        }
        None => {
            let out = out.ok_or_else(|| CliError::Usage("whole-frame queries need --out".into()))?;
            let times = times.unwrap_or_else(|| (0..clip.header.times).collect());
            let maps = times
                .iter()
                .map(|&t| clip.query_dpm(frame, &reference, t))
                .collect::<Result<Vec<_>, _>>()?;
            ArrayFile::from_points(&maps).write(out, 8)?;
            let valid = maps.first().map_or(0, |m| m.valid_count());
            let table = format!(
                "wrote {} point maps of frame ({}, {}) to {} ({} valid pixels)\n",
                maps.len(),
                frame.camera,
                frame.time,
                out.display(),
                valid
            );
            Ok(report(
                "query",
                cfg,
                json!({ "frame": [frame.camera, frame.time], "reference": reference_name(&reference), "times": times, "valid_pixels": valid }),
                table,
            ))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub width: u32,
    pub height: u32,
    pub times: u32,
    pub cameras: u32,
    pub vertices: u64,
    pub file_bytes: u64,
    pub dense_equivalent_bytes: u64,
    pub compact_estimate_bytes: u64,
    pub compact_pixel_bytes: u64,
    pub compact_vertex_bytes: u64,
    /// Dense-equivalent over actual file size.
    pub compression_ratio: f64,
}

pub fn archive_stats(path: &Path) -> Result<(Stats, dpmkit::codec::SizeBreakdown), CliError> {
    let mut r = ArchiveReader::open(path)?;
    let h = r.header().clone();
    let vertices = r.read_scene()?.vertex_count() as u64;
    let sizes = r.size_breakdown()?;
    let (hh, ww, t, c) = (h.height as u64, h.width as u64, h.times as u64, h.cameras as u64);
    let dense = storage_estimate(hh, ww, t, c, vertices, StorageMode::Dense);
    let compact = storage_estimate(hh, ww, t, c, vertices, StorageMode::Compact);
    Ok((
        Stats {
            width: h.width,
            height: h.height,
            times: h.times,
            cameras: h.cameras,
            vertices,
            file_bytes: sizes.file_bytes,
            dense_equivalent_bytes: dense.total_bytes,
            compact_estimate_bytes: compact.total_bytes,
            compact_pixel_bytes: compact.pixel_bytes,
            compact_vertex_bytes: compact.vertex_bytes,
            compression_ratio: dense.total_bytes as f64 / sizes.file_bytes as f64,
        },
        sizes,
    ))
}

pub fn cmd_stats(cfg: &Config, path: &Path) -> Result<Report, CliError> {
    let (s, sizes) = archive_stats(path)?;
    let mut table = String::new();
    let _ = writeln!(table, "{}: {}x{}, {} times x {} cameras, {} vertices", path.display(), s.width, s.height, s.times, s.cameras, s.vertices);
    for (name, b) in [
        ("file", sizes.file_bytes),
        ("  header", sizes.header_bytes),
        ("  metadata", sizes.metadata_bytes),
        ("  meshes", sizes.mesh_bytes),
        ("  frames", sizes.frame_bytes),
        ("    cameras", sizes.camera_bytes),
        ("    depth", sizes.depth_bytes),
        ("    segmentation", sizes.seg_bytes),
        ("    barycentric", sizes.bary_bytes),
        ("dense equivalent", s.dense_equivalent_bytes),
        ("compact estimate", s.compact_estimate_bytes),
        ("  pixel records", s.compact_pixel_bytes),
        ("  vertex trajectories", s.compact_vertex_bytes),
    ] {
        let _ = writeln!(table, "{name:<24} {:>12} {:>14}", human_bytes(b), b);
    }
    let _ = writeln!(table, "{:<24} {:>12.1}x", "dense / file", s.compression_ratio);
    Ok(report("stats", cfg, json!({ "stats": s, "sections": sizes }), table))
}

pub fn cmd_curate(cfg: &Config, path: &Path) -> Result<Report, CliError> {
    let clip = open(path)?;
    let objects = curate_clip(&clip, &cfg.curation)?;
    let kind_of = |id: u32| -> String {
        clip.metadata["objects"]
            .as_array()
            .and_then(|a| a.iter().find(|o| o["object_id"] == json!(id)))
            .and_then(|o| o["kind"].as_str())
            .unwrap_or("unknown")
            .to_string()
    };
    let mut table = format!(
        "{:>4} {:<12} {:>6} {:>8} {:<28} {:>10}\n",
        "id", "kind", "motion", "min iou", "rejection", "frames ok"
    );
    let mut rows = Vec::new();
    for o in &objects {
        let rejection = o.motion.rejection.map_or("-".to_string(), |r| format!("{r:?}"));
        let _ = writeln!(
            table,
            "{:>4} {:<12} {:>6} {:>8.3} {:<28} {:>5}/{:<4}",
            o.object_id,
            kind_of(o.object_id),
            if o.motion.keep { "keep" } else { "reject" },
            o.motion.min_iou,
            rejection,
            o.frames_kept,
            o.occlusion.len()
        );
        rows.push(json!({ "kind": kind_of(o.object_id), "result": o }));
    }
    let keep = objects.iter().all(|o| o.motion.keep);
    let _ = writeln!(table, "clip {}", if keep { "kept" } else { "rejected" });
    Ok(report("curate", cfg, json!({ "keep": keep, "objects": rows }), table))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalTask {
    Pose,
    Tracks,
    Depth,
    Recon,
    Correspondence,
}

fn camera_frames(clip: &ClipArchive, camera: u32) -> Result<Vec<FrameId>, CliError> {
    if camera >= clip.header.cameras {
        return Err(CliError::Usage(format!("camera {camera} out of range ({} cameras)", clip.header.cameras)));
    }
    Ok((0..clip.header.times).map(|t| FrameId::new(camera, t)).collect())
}

fn gt_trajectory(clip: &ClipArchive, camera: u32) -> Result<Trajectory, CliError> {
    let cams: Vec<_> = camera_frames(clip, camera)?
        .iter()
        .map(|id| clip.frames[id.flat(clip.header.cameras)].camera)
        .collect();
    Ok(Trajectory::from_cameras(&cams))
}

fn gt_depths(clip: &ClipArchive, camera: u32) -> Result<Vec<DepthMap>, CliError> {
    Ok(camera_frames(clip, camera)?
        .iter()
        .map(|id| clip.frames[id.flat(clip.header.cameras)].depth.clone())
        .collect())
}

/// World-frame point maps of one camera, each at its own time.
fn gt_points(clip: &ClipArchive, camera: u32) -> Result<Vec<PointMap>, CliError> {
    camera_frames(clip, camera)?
        .iter()
        .map(|&id| Ok(clip.query_dpm(id, &RefFrame::World, id.time)?))
        .collect()
}

fn gt_tracks(clip: &ClipArchive, pred: &TrackFile) -> Result<TrackFile, CliError> {
    let q = BatchQuery {
        frames: vec![FrameId::new(pred.frame[0], pred.frame[1]); pred.pixels.len()],
        pixels: pred.pixels.iter().map(|p| (p[0], p[1])).collect(),
        times: Some(pred.times.clone()),
        reference: crate::formats::parse_reference(&pred.reference)?,
    };
    let b = sample_tracks(clip, &q)?;
    let t = b.times.len();
    Ok(TrackFile {
        points: (0..b.batch).map(|i| (0..t).map(|k| b.point(i, k)).collect()).collect(),
        valid: Some(b.valid.chunks(t).map(<[bool]>::to_vec).collect()),
        ..pred.clone()
    })
}

fn check_frames(pred: usize, gt: usize) -> Result<(), CliError> {
    if pred != gt {
        return Err(CliError::Schema(format!("prediction has {pred} frames, ground truth {gt}")));
    }
    Ok(())
}

pub struct EvalArgs<'a> {
    pub task: EvalTask,
    pub archive: &'a Path,
    pub pred: &'a Path,
    pub camera: u32,
    pub source_camera: u32,
    pub alignment: Option<Alignment>,
}

pub fn cmd_eval(cfg: &Config, a: &EvalArgs) -> Result<Report, CliError> {
    let clip = open(a.archive)?;
    let (body, rows): (serde_json::Value, Vec<(String, f64)>) = match a.task {
        EvalTask::Pose => {
            let text = std::fs::read_to_string(a.pred)?;
            let pred = Trajectory::from_tum(&text)?;
            let gt = gt_trajectory(&clip, a.camera)?;
            check_frames(pred.len(), gt.len())?;
            let m = trajectory_metrics(&pred, &gt, a.alignment.unwrap_or(cfg.eval.trajectory_alignment))?;
            (
                json!({ "task": "pose", "metrics": m }),
                vec![("ATE".into(), m.ate), ("RPE-T".into(), m.rpe_t), ("RPE-R (deg)".into(), m.rpe_r_deg)],
            )
        }
        EvalTask::Tracks => {
            let pred = TrackFile::read(a.pred)?;
            let gt = gt_tracks(&clip, &pred)?;
            let (ps, gs) = (pred.to_track_set()?, gt.to_track_set()?);
            let apd = track_apd(&ps, &gs, &cfg.eval.apd_thresholds)?;
            let epe = track_epe(&ps, &gs)?;
            (
                json!({ "task": "tracks", "metrics": { "apd": apd, "epe": epe } }),
                vec![("APD".into(), apd), ("EPE".into(), epe.per_point), ("EPE per track".into(), epe.per_track)],
            )
        }
        EvalTask::Depth => {
            let pred = ArrayFile::read(a.pred)?.to_depths()?;
            let gt = gt_depths(&clip, a.camera)?;
            check_frames(pred.len(), gt.len())?;
            let s = depth_metrics(&pred, &gt, DepthAlign::Scale)?;
            let ss = depth_metrics(&pred, &gt, DepthAlign::ScaleShift)?;
            (
                json!({ "task": "depth", "metrics": { "scale": s, "scale_shift": ss } }),
                vec![
                    ("AbsRel (scale)".into(), s.abs_rel),
                    ("delta<1.25 (scale)".into(), s.delta),
                    ("AbsRel (scale+shift)".into(), ss.abs_rel),
                    ("delta<1.25 (scale+shift)".into(), ss.delta),
                ],
            )
        }
        EvalTask::Recon => {
            let pred = ArrayFile::read(a.pred)?.to_points()?;
            let gt = gt_points(&clip, a.camera)?;
            check_frames(pred.len(), gt.len())?;
            let valid = |m: &PointMap| -> Vec<Vec3> {
                m.data.iter().zip(&m.valid).filter(|(_, &ok)| ok).map(|(p, _)| *p).collect()
            };
            let per_frame = pred
                .iter()
                .zip(&gt)
                .map(|(p, g)| recon_metrics(&valid(p), &valid(g), None, None))
                .collect::<Result<Vec<_>, _>>()?;
            let n = per_frame.len() as f64;
            let mean = |f: fn(&dpmkit::metrics::ReconMetrics) -> f64| per_frame.iter().map(f).sum::<f64>() / n;
            let (acc, comp, nc) = (mean(|m| m.acc), mean(|m| m.comp), mean(|m| m.nc));
            (
                json!({ "task": "recon", "metrics": { "acc": acc, "comp": comp, "nc": nc }, "per_frame": per_frame }),
                vec![("Acc".into(), acc), ("Comp".into(), comp), ("NC".into(), nc)],
            )
        }
        EvalTask::Correspondence => {
            let pred = ArrayFile::read(a.pred)?.to_points()?;
            let gt_tgt = gt_points(&clip, a.camera)?;
            let gt_src = gt_points(&clip, a.source_camera)?;
            check_frames(pred.len(), gt_tgt.len())?;
            let r = correspondence_error(&pred, &gt_src, &gt_tgt)?;
            (json!({ "task": "correspondence", "metrics": r }), vec![("L_cor".into(), r.l_cor)])
        }
    };
    let mut table = format!("{:<26} {:>14}\n", "metric", "value");
    for (k, v) in &rows {
        let _ = writeln!(table, "{k:<26} {v:>14.6}");
    }
    Ok(report("eval", cfg, body, table))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportKind {
    Trajectory,
    Depth,
    Points,
    Tracks,
}

/// Writes ground truth in the prediction formats, so `eval` of an export scores perfectly.
pub fn cmd_export(
    cfg: &Config,
    kind: ExportKind,
    archive: &Path,
    out: &Path,
    camera: u32,
    stride: u32,
    reference: RefFrame,
) -> Result<Report, CliError> {
    let clip = open(archive)?;
    let what = match kind {
        ExportKind::Trajectory => {
            std::fs::write(out, gt_trajectory(&clip, camera)?.to_tum())?;
            "trajectory"
        }
        ExportKind::Depth => {
            ArrayFile::from_depths(&gt_depths(&clip, camera)?).write(out, 8)?;
            "depth"
        }
        ExportKind::Points => {
            ArrayFile::from_points(&gt_points(&clip, camera)?).write(out, 8)?;
            "points"
        }
        ExportKind::Tracks => {
            camera_frames(&clip, camera)?;
            let stride = stride.max(1);
            let frame = clip.frames[FrameId::new(camera, 0).flat(clip.header.cameras)].clone();
            let pixels: Vec<[i64; 2]> = (0..frame.bary.height)
                .step_by(stride as usize)
                .flat_map(|v| (0..frame.bary.width).step_by(stride as usize).map(move |u| (u, v)))
                .filter(|&(u, v)| frame.bary.get(u, v).flag != dpmkit::codec::PixelFlag::Invalid)
                .map(|(u, v)| [u as i64, v as i64])
                .collect();
            let stub = TrackFile {
                format: TRACK_FORMAT.into(),
                version: TRACK_VERSION,
                frame: [camera, 0],
                reference: reference_name(&reference),
                times: (0..clip.header.times).collect(),
                pixels,
                points: Vec::new(),
                valid: None,
            };
            let mut gt = gt_tracks(&clip, &stub)?;
            gt.valid = None;
            std::fs::write(out, serde_json::to_string(&gt).expect("serializes"))?;
            "tracks"
        }
    };
    Ok(report(
        "export",
        cfg,
        json!({ "kind": what, "camera": camera, "file": out.display().to_string() }),
        format!("wrote ground-truth {what} of camera {camera} to {}\n", out.display()),
    ))
}
