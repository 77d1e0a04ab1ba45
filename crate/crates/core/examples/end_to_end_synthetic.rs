//! Runs every pipeline stage on a generated corpus inside a temporary workdir:
//! synth, ingest, embed-aggregate, validate, fit, evaluate and rank.

use langcorr::pipeline;
use langcorr::PipelineConfig;

fn main() -> langcorr::Result<()> {
    let root = std::env::temp_dir().join(format!("langcorr-e2e-{}", std::process::id()));
    let mut cfg = PipelineConfig {
        workdir: root.join("work"),
        synth_communities: 150,
        synth_sentences: 60,
        hash_dim: 32,
        ..PipelineConfig::default()
    };
    let synth = pipeline::synth(&cfg)?;
    println!("# synth\n{synth}\n");

    let workdir = cfg.workdir.clone();
    cfg = PipelineConfig::load(&synth.config)?;
    cfg.workdir = workdir;
    cfg.min_sentences = 30;
    cfg.clusters = 20;
    cfg.subsample = 5000;

    println!("# ingest\n{}\n", pipeline::ingest(&cfg)?);
    println!("# embed-aggregate\n{}\n", pipeline::embed_aggregate(&cfg)?);
    println!("# validate\n{}\n", pipeline::validate(&cfg)?);
    for target in pipeline::resolve_targets(&cfg, &[])? {
        println!("# fit {target}\n{}\n", pipeline::fit(&cfg, &target)?);
        println!("# evaluate {target}\n{}\n", pipeline::evaluate(&cfg, &target)?);
        println!("# rank {target}\n{}\n", pipeline::rank(&cfg, &target, None)?);
    }
    std::fs::remove_dir_all(&root).ok();
    Ok(())
}
