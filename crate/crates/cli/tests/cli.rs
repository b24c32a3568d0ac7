use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dpmkit::geometry::change_reference;
use dpmkit::{read_archive_file, FrameId, RefFrame};
use dpmkit_cli::formats::{ArrayFile, TrackFile};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dpmkit"));
    c.env_clear();
    c
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dpmkit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "status {:?}: {}", out.status, String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn generate(path: &Path, extra: &[&str]) {
    let mut c = bin();
    c.args(["generate", "--out"]).arg(path);
    c.args(["--width", "32", "--height", "32", "--frames", "8", "--cameras", "2", "--seed", "5"]);
    c.args(extra);
    ok(c.output().unwrap());
}

fn json(args: &[&str], paths: &[&Path]) -> serde_json::Value {
    let mut c = bin();
    c.arg("--json").args(args).args(paths);
    serde_json::from_str(&ok(c.output().unwrap())).unwrap()
}

#[test]
fn generate_is_byte_identical_and_embeds_config() {
    let (a, b) = (tmp("det-a.dpm"), tmp("det-b.dpm"));
    generate(&a, &[]);
    generate(&b, &[]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let clip = read_archive_file(&a).unwrap();
    let cfg = &clip.metadata["config"];
    assert_eq!(cfg["generate"]["seed"], 5);
    assert_eq!(cfg["generate"]["width"], 32);
    assert!(!clip.metadata.to_string().contains("det-a.dpm"), "output path leaked into metadata");
}

#[test]
fn usage_errors_exit_2() {
    let out = bin().args(["generate", "--out", "/dev/null", "--rig", "spiral"]).output().unwrap();
    assert_eq!(code(&out), 2);
    let out = bin().args(["generate", "--out", "/dev/null", "--objects", "9"]).output().unwrap();
    assert_eq!(code(&out), 2);
    let out = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(code(&out), 2);
    let out = bin()
        .args(["generate", "--out", "/dev/null"])
        .env("DPMKIT_GENERATE__WIDHT", "3")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("generate.widht"));
}

#[test]
fn config_precedence_file_env_flag() {
    let cfg = tmp("prec.toml");
    std::fs::write(&cfg, "[generate]\nseed = 1\nwidth = 24\nheight = 20\nframes = 3\ncameras = 1\n").unwrap();
    let out = tmp("prec.dpm");
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut c = bin();
        c.args(["generate", "--config"]).arg(&cfg).arg("--out").arg(&out);
        if let Some(e) = env {
            c.env("DPMKIT_GENERATE__SEED", e);
        }
        if let Some(f) = flag {
            c.args(["--seed", f]);
        }
        ok(c.output().unwrap());
        let m = read_archive_file(&out).unwrap().metadata;
        (m["config"]["generate"]["seed"].as_u64().unwrap(), m["config"]["generate"]["width"].as_u64().unwrap())
    };
    assert_eq!(run(None, None), (1, 24));
    assert_eq!(run(Some("2"), None), (2, 24));
    assert_eq!(run(Some("2"), Some("3")), (3, 24));
    // DPMKIT_CONFIG names the file when --config is absent.
    let out2 = tmp("prec2.dpm");
    let mut c = bin();
    c.env("DPMKIT_CONFIG", &cfg).args(["generate", "--out"]).arg(&out2);
    ok(c.output().unwrap());
    assert_eq!(read_archive_file(&out2).unwrap().header.width, 24);
}

#[test]
fn stats_reports_compression() {
    let a = tmp("stats.dpm");
    let mut c = bin();
    c.args(["generate", "--out"]).arg(&a);
    c.args(["--width", "32", "--height", "32", "--frames", "16", "--cameras", "2", "--seed", "2"]);
    ok(c.output().unwrap());
    let j = json(&["stats"], &[&a]);
    assert_eq!(j["schema"], "dpmkit.stats/1");
    let s = &j["stats"];
    let ratio = s["compression_ratio"].as_f64().unwrap();
    assert!(ratio >= 16.0 / 4.0, "ratio {ratio}");
    assert_eq!(s["dense_equivalent_bytes"].as_u64().unwrap(), 12 * 32 * 32 * 16 * 32);
    assert_eq!(s["file_bytes"].as_u64().unwrap(), std::fs::metadata(&a).unwrap().len());
}

#[test]
fn query_outputs_round_trip_and_respect_reference() {
    let a = tmp("query.dpm");
    generate(&a, &[]);
    let clip = read_archive_file(&a).unwrap();
    // A static pixel: the background is static almost everywhere.
    let f0 = &clip.frames[0];
    let (u, v) = (0..32u32)
        .flat_map(|v| (0..32u32).map(move |u| (u, v)))
        .find(|&(u, v)| f0.bary.get(u, v).flag == dpmkit::codec::PixelFlag::Static)
        .unwrap();
    let px = format!("{u},{v}");
    let track_path = tmp("track.json");
    let mut c = bin();
    c.arg("query").arg(&a).args(["--pixel", &px, "--out"]).arg(&track_path);
    let text = ok(c.output().unwrap());
    assert!(text.contains("static"));
    let tf = TrackFile::read(&track_path).unwrap();
    assert!(tf.points[0].iter().all(|p| *p == tf.points[0][0]));
    // Lossless: values equal the library query bit for bit.
    let lib = clip.query_track(FrameId::new(0, 0), (u as i64, v as i64), &RefFrame::FIRST).unwrap();
    for (p, q) in tf.points[0].iter().zip(&lib.points) {
        assert_eq!(p, &[q.x, q.y, q.z]);
    }
    let j = json(&["query", "--pixel", &px], &[&a]);
    let back: TrackFile = serde_json::from_value(j.clone()).unwrap();
    assert_eq!(back.points, tf.points);

    // Whole-frame queries in another reference equal change_reference of the default.
    let (p0, p1) = (tmp("dpm-first.bin"), tmp("dpm-other.bin"));
    let mut c = bin();
    c.arg("query").arg(&a).args(["--frame", "1,2", "--times", "3,5", "--out"]).arg(&p0);
    ok(c.output().unwrap());
    let mut c = bin();
    c.arg("query").arg(&a).args(["--frame", "1,2", "--times", "3,5", "--ref", "1,4", "--out"]).arg(&p1);
    ok(c.output().unwrap());
    let m0 = ArrayFile::read(&p0).unwrap().to_points().unwrap();
    let m1 = ArrayFile::read(&p1).unwrap().to_points().unwrap();
    let (first, other) = (clip.frames[0].camera, clip.frames[FrameId::new(1, 4).flat(2)].camera);
    for (x, y) in m0.iter().zip(&m1) {
        let z = change_reference(x, &first, &other);
        assert_eq!(z.valid, y.valid);
        for k in 0..z.len() {
            if z.valid[k] {
                assert!((z.data[k] - y.data[k]).norm() < 1e-9);
            }
        }
    }

    let out = bin().arg("query").arg(&a).args(["--pixel", "32,0"]).output().unwrap();
    assert_eq!(code(&out), 2);
    let out = bin().arg("query").arg(&a).args(["--frame", "2,0", "--pixel", "1,1"]).output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn damaged_archives_exit_3_or_4() {
    let a = tmp("damaged.dpm");
    generate(&a, &[]);
    let bytes = std::fs::read(&a).unwrap();
    let t = tmp("trunc.dpm");
    std::fs::write(&t, &bytes[..bytes.len() / 2]).unwrap();
    assert_eq!(code(&bin().arg("stats").arg(&t).output().unwrap()), 4);
    let mut flipped = bytes.clone();
    let n = flipped.len();
    flipped[n - 40] ^= 0xff;
    std::fs::write(&t, &flipped).unwrap();
    assert_eq!(code(&bin().arg("curate").arg(&t).output().unwrap()), 4);
    let mut v = bytes.clone();
    v[8] = 9;
    std::fs::write(&t, &v).unwrap();
    assert_eq!(code(&bin().arg("stats").arg(&t).output().unwrap()), 3);
    assert_eq!(code(&bin().arg("stats").arg(tmp("missing.dpm")).output().unwrap()), 1);
}

#[test]
fn eval_of_exported_ground_truth_is_perfect() {
    let a = tmp("eval.dpm");
    generate(&a, &["--rig", "paired-orbits"]);
    let export = |kind: &str, name: &str, cam: &str| {
        let p = tmp(name);
        let mut c = bin();
        c.args(["export", "--kind", kind, "--camera", cam, "--stride", "4"]).arg(&a).arg("--out").arg(&p);
        ok(c.output().unwrap());
        p
    };
    let eval = |task: &str, pred: &Path, extra: &[&str]| {
        let mut c = bin();
        c.args(["--json", "eval", "--task", task, "--pred"]).arg(pred).arg(&a).args(extra);
        let v: serde_json::Value = serde_json::from_str(&ok(c.output().unwrap())).unwrap();
        v["metrics"].clone()
    };
    let m = eval("pose", &export("trajectory", "gt.tum", "0"), &[]);
    assert!(m["ate"].as_f64().unwrap() < 1e-9 && m["rpe_t"].as_f64().unwrap() < 1e-9);
    assert!(m["rpe_r_deg"].as_f64().unwrap() < 1e-4);

    let m = eval("tracks", &export("tracks", "gt-tracks.json", "1"), &[]);
    assert_eq!(m["apd"], 100.0);
    assert_eq!(m["epe"]["per_point"], 0.0);

    let m = eval("depth", &export("depth", "gt-depth.bin", "1"), &["--camera", "1"]);
    for k in ["scale", "scale_shift"] {
        assert!(m[k]["abs_rel"].as_f64().unwrap() < 1e-12);
        assert_eq!(m[k]["delta"], 100.0);
    }

    let pts = export("points", "gt-points.bin", "0");
    let m = eval("recon", &pts, &[]);
    assert_eq!((m["acc"].as_f64().unwrap(), m["comp"].as_f64().unwrap()), (0.0, 0.0));
    assert!((m["nc"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let m = eval("correspondence", &pts, &["--camera", "0", "--source-camera", "1"]);
    assert_eq!(m["l_cor"], 0.0);

    // Shape mismatch is a schema error.
    let out = bin()
        .args(["eval", "--task", "depth", "--pred"])
        .arg(tmp("gt-depth.bin"))
        .arg(tmp("query-missing.dpm"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    let short = tmp("short.tum");
    std::fs::write(&short, "0 0 0 0 0 0 0 1\n1 1 0 0 0 0 0 1\n2 1 1 0 0 0 0 1\n").unwrap();
    let out = bin().args(["eval", "--task", "pose", "--pred"]).arg(&short).arg(&a).output().unwrap();
    assert_eq!(code(&out), 3);
}

#[test]
fn curate_rejects_teleporting_object() {
    let a = tmp("tele.dpm");
    let mut c = bin();
    c.args(["generate", "--out"]).arg(&a);
    c.args(["--width", "32", "--height", "32", "--frames", "12", "--cameras", "1", "--seed", "3"]);
    c.args(["--objects", "1", "--kinds", "teleporter", "--no-human"]);
    ok(c.output().unwrap());
    let j = json(&["curate"], &[&a]);
    assert_eq!(j["keep"], false);
    assert_eq!(j["objects"][0]["kind"], "teleporter");
    assert_eq!(j["objects"][0]["result"]["motion"]["keep"], false);
    let mut c = bin();
    c.args(["generate", "--out"]).arg(&a);
    c.args(["--width", "32", "--height", "32", "--frames", "12", "--cameras", "1", "--seed", "3"]);
    c.args(["--objects", "1", "--kinds", "idle", "--no-human"]);
    ok(c.output().unwrap());
    assert_eq!(json(&["curate"], &[&a])["keep"], true);
}
