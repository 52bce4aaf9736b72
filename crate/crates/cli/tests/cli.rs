mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use quadseg::{load_pgm, save_pgm, GdaModel, GrayImage, LabeledDataset};
use quadseg_cli::commands::{segment_image, SegmentSettings};
use quadseg_cli::dataset::{read_table, write_dataset, LabelColumn};
use rand::Rng;
use serde_json::Value;

use common::{rng, triangle_classes};

struct Sandbox {
    dir: tempfile::TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).to_str().unwrap().to_owned()
    }

    fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> String {
        std::fs::write(self.path(name), bytes).unwrap();
        self.arg(name)
    }

    fn image(&self, name: &str, img: &GrayImage) -> String {
        self.write(name, save_pgm(img))
    }

    fn read_image(&self, name: &str) -> GrayImage {
        load_pgm(&std::fs::read(self.path(name)).unwrap()).unwrap()
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_slice(&std::fs::read(self.path(name)).unwrap()).unwrap()
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadseg"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Fails with exactly one stderr line starting `error: <category>:`.
fn fails_with(args: &[&str], category: &str) {
    let out = run(args);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with(&format!("error: {category}: ")), "{err}");
}

fn segment(sb: &Sandbox, image: &str, extra: &[&str]) -> (GrayImage, Value) {
    let (mask, report) = (sb.arg("mask.pgm"), sb.arg("report.json"));
    let mut args = vec!["segment", "--image", image, "--mask", &mask];
    args.extend(["--report", &report]);
    args.extend(extra);
    ok(&args);
    (sb.read_image("mask.pgm"), sb.json("report.json"))
}

#[test]
fn blank_phantom() {
    let sb = Sandbox::new();
    let spec = sb.write("s.json", r#"{"width": 30, "height": 20, "background": 77}"#);
    ok(&[
        "phantom",
        "--spec",
        &spec,
        "--image",
        &sb.arg("i.pgm"),
        "--truth",
        &sb.arg("t.pgm"),
    ]);
    assert!(sb.read_image("i.pgm").pixels().iter().all(|&p| p == 77));
    assert!(sb.read_image("t.pgm").pixels().iter().all(|&p| p == 0));
    let bad = sb.write(
        "bad.json",
        r#"{"width": 0, "height": 20, "background": 77}"#,
    );
    fails_with(
        &[
            "phantom",
            "--spec",
            &bad,
            "--image",
            &sb.arg("x.pgm"),
            "--truth",
            &sb.arg("y.pgm"),
        ],
        "InvalidSpec",
    );
}

#[test]
fn constant_image_is_one_leaf() {
    let sb = Sandbox::new();
    let img = sb.image("c.pgm", &GrayImage::filled(64, 48, 120).unwrap());
    let (mask, report) = segment(&sb, &img, &[]);
    assert_eq!(report["leaf_count"], 1);
    assert_eq!(report["leaves"].as_array().unwrap().len(), 1);
    let first = mask.pixels()[0];
    assert!(mask.pixels().iter().all(|&p| p == first));
    assert!(report.get("wall_time_ms").is_none());
}

#[test]
fn quadrant_image() {
    let sb = Sandbox::new();
    let q = GrayImage::from_fn(64, 64, |x, y| match (x < 32, y < 32) {
        (true, true) => 0,
        (false, true) => 85,
        (true, false) => 170,
        (false, false) => 255,
    })
    .unwrap();
    let img = sb.image("q.pgm", &q);
    let (mask, report) = segment(&sb, &img, &["--timing", "--oracle"]);
    assert_eq!(report["leaf_count"], 4);
    for (qx, qy) in [(0, 0), (32, 0), (0, 32), (32, 32)] {
        let v = mask.get(qx, qy);
        for y in qy..qy + 32 {
            for x in qx..qx + 32 {
                assert_eq!(mask.get(x, y), v);
            }
        }
    }
    assert!(report["wall_time_ms"].as_f64().is_some());
    for leaf in report["leaves"].as_array().unwrap() {
        assert!(leaf["oracle_gap"].as_f64().unwrap().abs() < 1e-12);
    }
}

#[test]
fn ramp_needs_several_thresholds_and_cli_matches_library() {
    let sb = Sandbox::new();
    let spec = r#"{"width": 256, "height": 256, "background": 90, "gradient": 40,
        "noise_sigma": 8, "seed": 5,
        "shapes": [{"kind": "ellipse", "cx": 80, "cy": 90, "rx": 50, "ry": 35, "intensity": 150},
                   {"kind": "ellipse", "cx": 180, "cy": 170, "rx": 40, "ry": 60, "intensity": 150}]}"#;
    let spec = sb.write("s.json", spec);
    ok(&[
        "phantom",
        "--spec",
        &spec,
        "--image",
        &sb.arg("i.pgm"),
        "--truth",
        &sb.arg("t.pgm"),
    ]);
    let (mask, report) = segment(&sb, &sb.arg("i.pgm"), &[]);
    let spread =
        report["threshold_max"].as_u64().unwrap() - report["threshold_min"].as_u64().unwrap();
    assert!(spread >= 10, "{spread}");

    let lib = segment_image(
        &sb.read_image("i.pgm"),
        &SegmentSettings {
            policy: Default::default(),
            weights: Default::default(),
            simplex: Default::default(),
        },
        false,
        quadseg::Execution::Sequential,
    )
    .unwrap();
    assert_eq!(mask, lib.mask);

    let metrics: Value = serde_json::from_str(&ok(&[
        "eval-seg",
        "--mask",
        &sb.arg("mask.pgm"),
        "--truth",
        &sb.arg("t.pgm"),
    ]))
    .unwrap();
    assert!(metrics["reliability"].as_f64().unwrap() >= 0.96);
}

#[test]
fn segment_flags_reach_the_pipeline() {
    let sb = Sandbox::new();
    let img = sb.image(
        "n.pgm",
        &GrayImage::from_fn(64, 64, |x, y| ((x * 37 + y * 91) % 256) as u8).unwrap(),
    );
    let (_, report) = segment(
        &sb,
        &img,
        &[
            "--max-depth",
            "1",
            "--min-side",
            "4",
            "--var-threshold",
            "10",
            "--w-var",
            "1",
            "--w-ent",
            "0",
            "--adaptive",
            "false",
        ],
    );
    assert_eq!(report["leaf_count"], 4);
    assert_eq!(report["settings"]["policy"]["max_depth"], 1);
    assert_eq!(report["settings"]["weights"]["adaptive"], false);
    fails_with(
        &[
            "segment",
            "--image",
            &img,
            "--mask",
            &sb.arg("m.pgm"),
            "--max-depth",
            "40",
        ],
        "InvalidPolicy",
    );
    fails_with(
        &[
            "segment",
            "--image",
            &img,
            "--mask",
            &sb.arg("m.pgm"),
            "--w-var=-1",
        ],
        "InvalidWeights",
    );
    fails_with(
        &[
            "segment",
            "--image",
            &img,
            "--mask",
            &sb.arg("m.pgm"),
            "--shrink",
            "2",
        ],
        "InvalidParams",
    );
}

#[test]
fn image_errors_are_categorized() {
    let sb = Sandbox::new();
    let bad = sb.write("bad.pgm", b"P7\n1 1\n255\n\x00");
    fails_with(
        &["segment", "--image", &bad, "--mask", &sb.arg("m.pgm")],
        "MalformedHeader",
    );
    let short = sb.write("short.pgm", b"P5\n4 4\n255\n\x00\x01");
    fails_with(
        &["segment", "--image", &short, "--mask", &sb.arg("m.pgm")],
        "TruncatedData",
    );
    fails_with(
        &[
            "segment",
            "--image",
            &sb.arg("missing.pgm"),
            "--mask",
            &sb.arg("m.pgm"),
        ],
        "IoError",
    );
    let out = run(&["segment", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: Usage: "));
}

#[test]
fn eval_seg_examples() {
    let sb = Sandbox::new();
    let truth = GrayImage::from_fn(100, 100, |x, _| if x < 50 { 255 } else { 0 }).unwrap();
    let t = sb.image("t.pgm", &truth);
    let same = ok(&["eval-seg", "--mask", &t, "--truth", &t]);
    assert!(same.contains("\"distortion\": 0.0000") && same.contains("\"reliability\": 1.0000"));

    let inv = GrayImage::from_fn(100, 100, |x, y| 255 - truth.get(x, y)).unwrap();
    let i = sb.image("i.pgm", &inv);
    let out = ok(&["eval-seg", "--mask", &i, "--truth", &t]);
    assert!(out.contains("\"distortion\": 1.0000") && out.contains("\"reliability\": 0.0000"));

    let mut px = truth.pixels().to_vec();
    for k in 0..10 {
        px[k * 1000 + 3] ^= 255;
    }
    let ten = sb.image("ten.pgm", &GrayImage::new(100, 100, px).unwrap());
    ok(&[
        "eval-seg",
        "--mask",
        &ten,
        "--truth",
        &t,
        "--out",
        &sb.arg("m.json"),
    ]);
    assert_eq!(sb.json("m.json")["distortion"].as_f64(), Some(0.001));

    let gray = sb.image("g.pgm", &GrayImage::filled(100, 100, 9).unwrap());
    fails_with(
        &["eval-seg", "--mask", &gray, "--truth", &t],
        "NonBinaryInput",
    );
    let small = sb.image("s.pgm", &GrayImage::filled(10, 10, 0).unwrap());
    fails_with(
        &["eval-seg", "--mask", &small, "--truth", &t],
        "DimensionMismatch",
    );
}

fn train_three_class(sb: &Sandbox, kernel: &str) -> (LabeledDataset, GdaModel, String) {
    let data = triangle_classes(&mut rng(31), 60, 6.0);
    let csv = sb.write(
        "train.csv",
        format!("x1,x2,x3,x4,label\n{}", write_dataset(&data)),
    );
    let summary = ok(&[
        "gda-train",
        "--data",
        &csv,
        "--header",
        "--kernel",
        kernel,
        "--model",
        &sb.arg("model.json"),
    ]);
    let model: GdaModel =
        serde_json::from_slice(&std::fs::read(sb.path("model.json")).unwrap()).unwrap();
    (data, model, summary)
}

#[test]
fn gda_train_reports_spectrum() {
    let sb = Sandbox::new();
    for kernel in ["linear", "rbf", "polynomial"] {
        let (_, model, summary) = train_three_class(&sb, kernel);
        let s: Value = serde_json::from_str(&summary).unwrap();
        assert_eq!(s["achieved"], 2);
        assert_eq!(model.d(), 2);
        let eta = &model.eigenvalues;
        assert!(eta[0] >= eta[1] && eta[1] > 0.0, "{eta:?}");
    }
    let one = sb.write("one.csv", "1,2,1\n3,4,1\n");
    fails_with(
        &["gda-train", "--data", &one, "--model", &sb.arg("m.json")],
        "InvalidDataset",
    );
    let gap = sb.write("gap.csv", "1,2,1\n3,4,3\n");
    fails_with(
        &["gda-train", "--data", &gap, "--model", &sb.arg("m.json")],
        "EmptyClass",
    );
    let junk = sb.write("junk.csv", "1,a,1\n3,4,2\n");
    fails_with(
        &["gda-train", "--data", &junk, "--model", &sb.arg("m.json")],
        "CsvParse",
    );
    let zero = sb.write("zero.csv", "0,0,1\n0,0,2\n");
    fails_with(
        &[
            "gda-train",
            "--data",
            &zero,
            "--kernel",
            "linear",
            "--model",
            &sb.arg("m.json"),
        ],
        "DegenerateKernel",
    );
}

#[test]
fn gda_project_round_trip() {
    let sb = Sandbox::new();
    let (data, model, _) = train_three_class(&sb, "rbf");
    let out = ok(&[
        "gda-project",
        "--model",
        &sb.arg("model.json"),
        "--data",
        &sb.arg("train.csv"),
        "--header",
    ]);
    assert!(out.starts_with("f1,f2,label\n"));
    let table = read_table(&out, true, LabelColumn::Optional { features: 2 }).unwrap();
    assert_eq!(table.features.len(), data.len());
    let labels = table.labels.unwrap();
    for c in 1..=3 {
        for k in 0..2 {
            let vals: Vec<f64> = table
                .features
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l == c)
                .map(|(f, _)| f[k])
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let stored = model.class_means[c - 1][k];
            assert!(
                (mean - stored).abs() <= 1e-10 * stored.abs().max(1.0),
                "{mean} {stored}"
            );
        }
    }

    let empty = sb.write("empty.csv", "");
    assert_eq!(
        ok(&[
            "gda-project",
            "--model",
            &sb.arg("model.json"),
            "--data",
            &empty
        ]),
        "f1,f2\n"
    );
    let unlabeled = sb.write("u.csv", "0,0,0,0\n1,2,3,4\n");
    ok(&[
        "gda-project",
        "--model",
        &sb.arg("model.json"),
        "--data",
        &unlabeled,
        "--out",
        &sb.arg("f.csv"),
    ]);
    let text = std::fs::read_to_string(sb.path("f.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("f1,f2\n"));

    let wide = sb.write("w.csv", "1,2,3,4,5,6\n");
    fails_with(
        &[
            "gda-project",
            "--model",
            &sb.arg("model.json"),
            "--data",
            &wide,
        ],
        "DimensionMismatch",
    );
    let broken = sb.write("broken.json", "{\"kernel\": 3}");
    fails_with(
        &["gda-project", "--model", &broken, "--data", &unlabeled],
        "InvalidModel",
    );
}

fn eval(sb: &Sandbox, csv: &str) -> Value {
    serde_json::from_str(&ok(&[
        "gda-eval",
        "--model",
        &sb.arg("model.json"),
        "--data",
        csv,
    ]))
    .unwrap()
}

#[test]
fn gda_eval_examples() {
    let sb = Sandbox::new();
    let (data, _, _) = train_three_class(&sb, "linear");
    let train = sb.write("plain.csv", write_dataset(&data));
    let r = eval(&sb, &train);
    assert!(r["accuracy"].as_f64().unwrap() >= 0.98);
    assert_eq!(r["samples"], 60);
    let total: u64 = r["confusion"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|row| row.as_array().unwrap().iter().map(|v| v.as_u64().unwrap()))
        .sum();
    assert_eq!(total, 60);

    // one sample per class, placed at the input-space class mean
    let mut means = vec![vec![0.0; 4]; 3];
    for (u, &l) in data.samples().iter().zip(data.labels()) {
        for (m, v) in means[l - 1].iter_mut().zip(u) {
            *m += v / 20.0;
        }
    }
    let at_means = LabeledDataset::new(means, vec![1, 2, 3]).unwrap();
    let csv = sb.write("means.csv", write_dataset(&at_means));
    assert_eq!(eval(&sb, &csv)["accuracy"].as_f64(), Some(1.0));

    // shuffled labels land near chance
    let mut r = rng(77);
    let fresh = triangle_classes(&mut r, 102, 6.0);
    let mut labels = fresh.labels().to_vec();
    for i in (1..labels.len()).rev() {
        let j = r.random_range(0..=i);
        labels.swap(i, j);
    }
    let shuffled = LabeledDataset::new(fresh.samples().to_vec(), labels).unwrap();
    let csv = sb.write("shuffled.csv", write_dataset(&shuffled));
    let acc = eval(&sb, &csv)["accuracy"].as_f64().unwrap();
    assert!((acc - 1.0 / 3.0).abs() <= 0.15, "{acc}");

    let unlabeled = sb.write("u.csv", "0,0,0,0\n");
    fails_with(
        &[
            "gda-eval",
            "--model",
            &sb.arg("model.json"),
            "--data",
            &unlabeled,
        ],
        "CsvParse",
    );
    let bad_label = sb.write("bl.csv", "0,0,0,0,9\n");
    fails_with(
        &[
            "gda-eval",
            "--model",
            &sb.arg("model.json"),
            "--data",
            &bad_label,
        ],
        "InvalidDataset",
    );
}

#[test]
fn outputs_feed_their_readers() {
    let sb = Sandbox::new();
    let p2 = sb.write("a.pgm", "P2\n3 2\n# c\n15\n0 15 7\n1 2 3\n");
    let (mask, _) = segment(&sb, &p2, &[]);
    assert_eq!((mask.width(), mask.height()), (3, 2));
    ok(&[
        "eval-seg",
        "--mask",
        &sb.arg("mask.pgm"),
        "--truth",
        &sb.arg("mask.pgm"),
    ]);
    assert!(Path::new(&sb.arg("report.json")).exists());
}
