// The `dca` subcommands driven in-process, as a shell script would call them.
//
// ```bash
// cargo run --release -p dca-core --example cli_walkthrough
// ```

use dca::cli::execute;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("dca-cli-example-{}", std::process::id()));
    let p = |name: &str| dir.join(name).display().to_string();
    std::fs::create_dir_all(&dir)?;
    let config = dir.join("run.conf");
    std::fs::write(&config, "d = 16\nk = 10\nn_videos = 12\nframes_per_video = 2\nn_resamples = 200\n")?;
    let conf = config.display().to_string();

    let steps: Vec<Vec<String>> = vec![
        vec!["synth".into(), "--config".into(), conf.clone(), "--out".into(), p("data")],
        vec!["stats".into(), "--manifest".into(), p("data/train.tsv"), "--out".into(), p("stats.dcas")],
        vec![
            "fingerprint".into(), "--config".into(), conf.clone(), "--manifest".into(), p("data/train.tsv"),
            "--stats".into(), p("stats.dcas"), "--out".into(), p("train.dcfp"),
        ],
        vec!["train".into(), "--fingerprints".into(), p("train.dcfp"), "--out".into(), p("model.dclm")],
        vec![
            "eval".into(), "--config".into(), conf.clone(), "--model".into(), p("model.dclm"),
            "--manifest".into(), p("data/eval.tsv"), "--stats".into(), p("stats.dcas"), "--out".into(), p("report"),
        ],
        vec![
            "ablate".into(), "--config".into(), conf, "--manifest".into(), p("data/manifest.tsv"),
            "--variants".into(), "dca,cross_covariance,mean_dca".into(), "--out".into(), p("ablation.txt"),
        ],
    ];
    for args in steps {
        println!("$ dca {}", args.join(" "));
        let out = execute(std::iter::once("dca".to_string()).chain(args))?;
        print!("{out}");
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
