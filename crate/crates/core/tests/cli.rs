use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use langcorr::aggregate::CommunityFeatures;
use langcorr::pipeline::{self, Workdir};
use langcorr::regression::{OutOfFoldPredictions, RidgeModel};
use langcorr::{pearson, Error, PipelineConfig};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_langcorr"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_synth(dir: &Path, communities: usize, snr: &str) -> PipelineConfig {
    let mut cfg = PipelineConfig {
        workdir: dir.join("work"),
        synth_dir: Some(dir.join("synth")),
        synth_communities: communities,
        synth_sentences: 40,
        synth_vocab: 400,
        synth_topics: 8,
        hash_dim: 16,
        workers: 1,
        ..PipelineConfig::default()
    };
    cfg.set("synth_snr", snr).unwrap();
    let summary = pipeline::synth(&cfg).unwrap();
    let mut loaded = PipelineConfig::load(&summary.config).unwrap();
    loaded.workdir = cfg.workdir.clone();
    loaded.min_sentences = 20;
    loaded.folds = 5;
    loaded.inner_folds = 3;
    loaded.clusters = 6;
    loaded.subsample = 800;
    loaded.rank_n = 4;
    loaded.top_terms = 10;
    loaded.workers = 1;
    loaded
}

fn through_fit(cfg: &PipelineConfig) -> pipeline::FitSummary {
    pipeline::ingest(cfg).unwrap();
    pipeline::embed_aggregate(cfg).unwrap();
    pipeline::fit(cfg, &cfg.synth_target).unwrap()
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn write(p: &Path, text: &str) -> PathBuf {
    std::fs::write(p, text).unwrap();
    p.to_path_buf()
}

#[test]
fn missing_sentence_file_fails_with_path() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = write(&tmp.path().join("a.conf"), "sentences = nowhere/tweets.jsonl\nembedder = hashing\n");
    let out = run(tmp.path(), &["--config", conf.to_str().unwrap(), "--workdir", "w", "ingest"]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("error[io]:"), "{err}");
    assert!(err.contains("nowhere/tweets.jsonl"), "{err}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["--set", "colour=blue", "validate"]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error[config]:"), "{}", stderr(&out));

    let conf = write(&tmp.path().join("b.conf"), "# comment\nfolds = 5\nfold = 5\n");
    let out = run(tmp.path(), &["--config", conf.to_str().unwrap(), "validate"]);
    assert!(stderr(&out).starts_with("error[config]:"), "{}", stderr(&out));
}

#[test]
fn ingest_counts_match_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let sentences = write(
        &d.join("s.jsonl"),
        concat!(
            "{\"id\":\"1\",\"text\":\"good morning\",\"fips\":\"01001\"}\n",
            "{\"id\":\"2\",\"text\":\"so tired today\",\"fips\":\"1001\"}\n",
            "{\"id\":\"3\",\"text\":\"gym then salad\",\"fips\":\"06037\"}\n",
            "{\"id\":\"4\",\"text\":\"no place\",\"fips\":\"abcde\"}\n",
            "not json\n",
        ),
    );
    let y1 = write(&d.join("obesity_2014.csv"), "fips,value\n01001,30\n06037,20\n");
    let y2 = write(&d.join("obesity_2015.csv"), "fips,value\n01001,34\n48201,25\n");
    let cfg = PipelineConfig {
        workdir: d.join("w"),
        sentences: Some(sentences),
        targets: vec![y1, y2],
        ..PipelineConfig::default()
    };
    let s = pipeline::ingest(&cfg).unwrap();
    assert_eq!((s.total_rows, s.kept, s.dropped.total(), s.communities), (5, 3, 2, 2));
    assert_eq!(s.dropped.unparseable, 1);
    assert_eq!(s.dropped.bad_fips, 1);

    let t = Workdir::new(&cfg.workdir).load_target("obesity").unwrap();
    let get = |c: &str| t.get(&langcorr::CommunityId::new(c).unwrap()).unwrap();
    assert_eq!(t.years, vec![2014, 2015]);
    assert_eq!(get("01001"), 32.0);
    assert_eq!(get("06037"), 20.0);
    assert_eq!(get("48201"), 25.0);
    assert_eq!(t.len(), 3);
}

#[test]
fn empty_inputs_are_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["--workdir", "w", "--set", "embedder=hashing", "embed-aggregate"]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error[empty]:"), "{}", stderr(&out));

    let out = run(tmp.path(), &["--workdir", "w", "--set", "embedder=hashing", "rank"]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error[empty]:"), "{}", stderr(&out));

    let empty = write(&tmp.path().join("e.jsonl"), "");
    let cfg = PipelineConfig {
        workdir: tmp.path().join("w"),
        sentences: Some(empty),
        ..PipelineConfig::default()
    };
    assert!(matches!(pipeline::ingest(&cfg), Err(Error::Empty(_))));
}

#[test]
fn lexicon_embedder_needs_a_lexicon_but_hashing_does_not() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_synth(tmp.path(), 30, "10");
    pipeline::ingest(&cfg).unwrap();
    assert!(cfg.lexicon.is_none());
    assert!(pipeline::embed_aggregate(&cfg).is_ok());
    cfg.set("embedder", "lexicon").unwrap();
    assert!(matches!(pipeline::embed_aggregate(&cfg), Err(Error::Config(_))));
}

#[test]
fn worker_count_does_not_change_features() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_synth(tmp.path(), 40, "10");
    pipeline::ingest(&cfg).unwrap();
    let mut outputs = Vec::new();
    for w in [1, 4, 16] {
        cfg.workers = w;
        pipeline::embed_aggregate(&cfg).unwrap();
        outputs.push(read(&tmp.path().join("work/features.bin")));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn constant_target_is_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_synth(tmp.path(), 30, "10");
    let flat = tmp.path().join("flat_2014.csv");
    let mut text = String::from("fips,value\n");
    let sentences = std::fs::read_to_string(cfg.sentences.as_ref().unwrap()).unwrap();
    let mut codes: Vec<String> = sentences
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["fips"].as_str().unwrap().to_string())
        .collect();
    codes.dedup();
    for c in codes {
        text.push_str(&format!("{c},7.5\n"));
    }
    write(&flat, &text);
    cfg.targets = vec![flat];
    pipeline::ingest(&cfg).unwrap();
    pipeline::embed_aggregate(&cfg).unwrap();
    assert!(matches!(pipeline::fit(&cfg, "flat"), Err(Error::ConstantTarget)));
}

#[test]
fn reloaded_model_reproduces_predictions() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_synth(tmp.path(), 60, "10");
    let fit = through_fit(&cfg);
    let wd = Workdir::new(&cfg.workdir);
    let model = RidgeModel::load_json(&fit.model).unwrap();
    let oof = OutOfFoldPredictions::load_csv(&wd.predictions(&fit.target)).unwrap();
    let features = CommunityFeatures::load(&wd.features_stem()).unwrap();
    for (i, c) in oof.communities.iter().enumerate() {
        let row = features.communities().iter().position(|x| x == c).unwrap();
        let p = model.per_fold[oof.folds[i]].predict(features.matrix().row(row)).unwrap();
        assert_eq!(p, oof.y_pred[i], "{c}");
    }
}

#[test]
fn stages_are_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_synth(tmp.path(), 60, "10");
    let wd = Workdir::new(&cfg.workdir);
    let name = cfg.synth_target.clone();
    let files = |wd: &Workdir| {
        vec![
            read(&wd.sentences()),
            read(&wd.target(&name)),
            read(&tmp.path().join("work/features.bin")),
            read(&wd.model(&name)),
            read(&wd.predictions(&name)),
            read(&wd.evaluation(&name)),
            read(&wd.confusion(&name)),
        ]
    };
    through_fit(&cfg);
    let first = files(&wd);
    through_fit(&cfg);
    assert_eq!(first, files(&wd));
}

#[test]
fn rank_writes_two_top_and_two_bottom_and_reuses_clusters() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_synth(tmp.path(), 60, "10");
    // a second target: the first one mirrored
    let first = std::fs::read_to_string(&cfg.targets[0]).unwrap();
    let mut mirrored = String::from("fips,value\n");
    for line in first.lines().skip(1) {
        let (c, v) = line.split_once(',').unwrap();
        mirrored.push_str(&format!("{c},{}\n", 200.0 - v.parse::<f64>().unwrap()));
    }
    cfg.targets.push(write(&tmp.path().join("mirror_2014.csv"), &mirrored));
    pipeline::ingest(&cfg).unwrap();
    pipeline::embed_aggregate(&cfg).unwrap();
    for t in [cfg.synth_target.as_str(), "mirror"] {
        pipeline::fit(&cfg, t).unwrap();
    }

    let a = pipeline::rank(&cfg, &cfg.synth_target, None).unwrap();
    assert!(!a.cache_reused);
    let dir = tmp.path().join("work/clusters");
    let snapshot: Vec<(PathBuf, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.clone(), read(&p)))
        .collect();
    let b = pipeline::rank(&cfg, "mirror", None).unwrap();
    assert!(b.cache_reused);
    for (p, bytes) in &snapshot {
        assert_eq!(&read(p), bytes, "{}", p.display());
    }

    for s in [&a, &b] {
        assert_eq!((s.top.len(), s.bottom.len()), (2, 2));
        let names: Vec<String> = std::fs::read_dir(Workdir::new(&cfg.workdir).terms_dir(&s.target))
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names.iter().filter(|n| n.starts_with("top_")).count(), 2, "{names:?}");
        assert_eq!(names.iter().filter(|n| n.starts_with("bottom_")).count(), 2, "{names:?}");
    }
    // a mirrored target ranks the same clusters in reverse
    assert_eq!(a.top[0].cluster, b.bottom[0].cluster);
}

#[test]
fn noiseless_synth_is_recovered() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_synth(tmp.path(), 120, "none");
    let fit = through_fit(&cfg);
    assert!(fit.evaluation.pearson >= 0.99, "{}", fit.evaluation.pearson);
}

#[test]
fn overwhelming_noise_gives_no_correlation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_synth(tmp.path(), 300, "1e-8");
    let fit = through_fit(&cfg);
    // 300 communities: null standard deviation about 0.06
    assert!(fit.evaluation.pearson.abs() <= 0.2, "{}", fit.evaluation.pearson);
}

#[test]
fn fixed_seed_gives_identical_corpus() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    small_synth(a.path(), 30, "10");
    small_synth(b.path(), 30, "10");
    for f in ["sentences.jsonl", "synthetic_2014.csv", "synthetic_2015.csv", "ground_truth.json"] {
        assert_eq!(read(&a.path().join("synth").join(f)), read(&b.path().join("synth").join(f)), "{f}");
    }
}

#[test]
fn cli_runs_the_pipeline_and_prints_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let common = [
        "--workdir", "w", "--seed", "3", "--workers", "2",
        "--set", "synth_communities=40", "--set", "synth_sentences=30", "--set", "hash_dim=8",
    ];
    let step = |extra: &[&str]| {
        let mut args: Vec<&str> = common.to_vec();
        args.extend_from_slice(extra);
        let out = run(d, &args);
        assert!(out.status.success(), "{extra:?}: {}", stderr(&out));
        String::from_utf8(out.stdout).unwrap()
    };
    assert!(step(&["synth"]).contains("communities  40"));
    let conf = ["--config", "w/synth/pipeline.conf", "--set", "min_sentences=10", "--set", "folds=4"];
    let with = |cmd: &[&str]| {
        let mut v = conf.to_vec();
        v.extend_from_slice(cmd);
        step(&v)
    };
    assert!(with(&["ingest"]).contains("kept         1200"));
    assert!(with(&["embed-aggregate"]).contains("dimension    8"));
    assert!(with(&["validate"]).contains("synthetic: trainable 40"));
    let fit = with(&["fit"]);
    assert!(fit.contains("== synthetic") && fit.contains("lambda/fold"), "{fit}");
    assert!(with(&["evaluate", "--target", "synthetic"]).contains("== synthetic"));
    let rank = with(&["--set", "clusters=4", "--set", "subsample=500", "rank"]);
    assert!(rank.contains("highest") && rank.contains("lowest"), "{rank}");
    let truth: serde_json::Value =
        serde_json::from_slice(&read(&d.join("w/synth/ground_truth.json"))).unwrap();
    assert_eq!(truth["seed"], 6);

    let fit_json: serde_json::Value = serde_json::from_slice(&read(&d.join("w/reports/synthetic.evaluation.json"))).unwrap();
    let rho = fit_json["pearson"].as_f64().unwrap();
    let oof = OutOfFoldPredictions::load_csv(&d.join("w/reports/synthetic.predictions.csv")).unwrap();
    assert!((rho - pearson(&oof.y_true, &oof.y_pred).unwrap()).abs() < 1e-12);
}
