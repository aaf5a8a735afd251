//! The `dca` binary: exit codes, guards and byte-identical reruns.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = "d = 8\nk = 6\nn_videos = 6\nframes_per_video = 2\nn_resamples = 100\n";

fn dca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dca")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    fn new() -> Self {
        let run = Run {
            dir: tempfile::tempdir().unwrap(),
        };
        fs::write(run.p("run.conf"), SMALL).unwrap();
        run
    }

    fn p(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = dca(args);
        assert_eq!(code(&out), 0, "dca {args:?}\n{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    }

    /// synth → stats → fingerprint ×2 → train → eval, returning output paths.
    fn pipeline(&self, tag: &str) -> Vec<PathBuf> {
        let conf = self.p("run.conf");
        let data = self.p("data");
        let out = |n: &str| self.p(&format!("{tag}-{n}"));
        self.ok(&["synth", "--config", s(&conf), "--out", s(&data)]);
        self.ok(&["stats", "--manifest", s(&data.join("train.tsv")), "--out", s(&out("stats.dcas"))]);
        for split in ["train", "eval"] {
            self.ok(&[
                "fingerprint",
                "--config",
                s(&conf),
                "--manifest",
                s(&data.join(format!("{split}.tsv"))),
                "--stats",
                s(&out("stats.dcas")),
                "--out",
                s(&out(&format!("{split}.dcfp"))),
            ]);
        }
        self.ok(&["train", "--fingerprints", s(&out("train.dcfp")), "--out", s(&out("model.dclm"))]);
        let table = self.ok(&[
            "eval",
            "--config",
            s(&conf),
            "--model",
            s(&out("model.dclm")),
            "--fingerprints",
            s(&out("eval.dcfp")),
            "--out",
            s(&out("report")),
        ]);
        assert!(table.contains("AUC"), "{table}");
        ["stats.dcas", "train.dcfp", "eval.dcfp", "model.dclm", "report.txt", "report.kv"]
            .iter()
            .map(|n| out(n))
            .collect()
    }
}

#[test]
fn full_pipeline_reruns_are_byte_identical() {
    let run = Run::new();
    let first = run.pipeline("a");
    let second = run.pipeline("b");
    for (a, b) in first.iter().zip(&second) {
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap(), "{} vs {}", a.display(), b.display());
    }
    let kv = fs::read_to_string(&first[5]).unwrap();
    for key in ["auc=", "ci_low=", "ci_high=", "n_videos=", "seed=42", "variant=dca", "region_set=emn"] {
        assert!(kv.contains(key), "{key} missing from\n{kv}");
    }
    let echo = fs::read_to_string(run.p("a-stats.dcas.config")).unwrap();
    assert!(echo.contains("manifest=") && echo.contains("region_set=emn"), "{echo}");
}

#[test]
fn eval_manifest_path_uses_model_variant() {
    let run = Run::new();
    let conf = run.p("run.conf");
    let data = run.p("data");
    run.ok(&["synth", "--config", s(&conf), "--out", s(&data)]);
    run.ok(&["stats", "--manifest", s(&data.join("train.tsv")), "--out", s(&run.p("stats"))]);
    run.ok(&[
        "train",
        "--config",
        s(&conf),
        "--manifest",
        s(&data.join("train.tsv")),
        "--stats",
        s(&run.p("stats")),
        "--variant",
        "mean_dca",
        "--out",
        s(&run.p("model")),
    ]);
    run.ok(&[
        "eval",
        "--config",
        s(&conf),
        "--model",
        s(&run.p("model")),
        "--manifest",
        s(&data.join("eval.tsv")),
        "--stats",
        s(&run.p("stats")),
        "--out",
        s(&run.p("report")),
    ]);
    assert!(fs::read_to_string(run.p("report.kv")).unwrap().contains("variant=mean_dca"));
}

#[test]
fn training_only_steps_refuse_evaluation_data() {
    let run = Run::new();
    let data = run.p("data");
    run.ok(&["synth", "--config", s(&run.p("run.conf")), "--out", s(&data)]);
    let out = dca(&["stats", "--manifest", s(&data.join("eval.tsv")), "--out", s(&run.p("x"))]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("protocol violation"));
    assert!(!run.p("x").exists());

    run.ok(&["stats", "--manifest", s(&data.join("train.tsv")), "--out", s(&run.p("stats"))]);
    let out = dca(&[
        "train",
        "--manifest",
        s(&data.join("manifest.tsv")),
        "--stats",
        s(&run.p("stats")),
        "--out",
        s(&run.p("m")),
    ]);
    assert_eq!(code(&out), 4);
}

#[test]
fn argument_errors_exit_2() {
    let run = Run::new();
    let out = dca(&["fingerprint", "--variant", "dcaa", "--manifest", "m", "--stats", "s", "--out", "o"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["dca", "cosine_dim", "cross_covariance", "pnka_dim", "gram_frobenius", "nn_cosine"] {
        assert!(err.contains(name), "{err}");
    }
    assert_eq!(code(&dca(&["stats", "--bogus", "1"])), 2);
    assert_eq!(code(&dca(&["nope"])), 2);
    assert_eq!(code(&dca(&[])), 2);
    fs::write(run.p("bad.conf"), "unknown_key = 3\n").unwrap();
    assert_eq!(code(&dca(&["synth", "--config", s(&run.p("bad.conf")), "--out", "x"])), 2);
    assert_eq!(code(&dca(&["stats", "--manifest", "m"])), 2, "missing out");
    assert_eq!(code(&dca(&["--help"])), 0);
}

#[test]
fn data_errors_exit_3() {
    let run = Run::new();
    let out = dca(&["stats", "--manifest", s(&run.p("missing.tsv")), "--out", s(&run.p("o"))]);
    assert_eq!(code(&out), 3);

    let conf = run.p("run.conf");
    let data = run.p("data");
    run.ok(&["synth", "--config", s(&conf), "--out", s(&data)]);
    run.ok(&["stats", "--manifest", s(&data.join("train.tsv")), "--out", s(&run.p("stats"))]);
    for (variant, name) in [("dca", "vec.dcfp"), ("mean_dca", "scalar.dcfp")] {
        run.ok(&[
            "fingerprint",
            "--config",
            s(&conf),
            "--variant",
            variant,
            "--manifest",
            s(&data.join("manifest.tsv")),
            "--stats",
            s(&run.p("stats")),
            "--out",
            s(&run.p(name)),
        ]);
    }
    run.ok(&["train", "--fingerprints", s(&run.p("scalar.dcfp")), "--out", s(&run.p("model"))]);
    let out = dca(&[
        "eval",
        "--model",
        s(&run.p("model")),
        "--fingerprints",
        s(&run.p("vec.dcfp")),
        "--out",
        s(&run.p("r")),
    ]);
    assert_eq!(code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("M=3") && err.contains("M=24"), "{err}");
}

#[test]
fn ablate_prints_one_row_per_variant() {
    let run = Run::new();
    let conf = run.p("run.conf");
    let data = run.p("data");
    run.ok(&["synth", "--config", s(&conf), "--out", s(&data)]);
    let table = run.ok(&[
        "ablate",
        "--config",
        s(&conf),
        "--manifest",
        s(&data.join("manifest.tsv")),
        "--out",
        s(&run.p("ablation.txt")),
    ]);
    assert_eq!(table.lines().count(), 10, "{table}");
    assert_eq!(fs::read_to_string(run.p("ablation.txt")).unwrap(), table);
    assert!(run.p("ablation.txt.config").exists());
}
