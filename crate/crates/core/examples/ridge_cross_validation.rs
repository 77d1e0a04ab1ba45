//! Cross-validated ridge regression on a synthetic corpus with a known linear
//! ground truth.

use langcorr::{cross_validated_fit, make_folds, pearson, HashingEmbedder, RidgeSettings, SynthConfig};

fn main() -> langcorr::Result<()> {
    let corpus = SynthConfig {
        communities: 150,
        sentences_per_community: 80,
        embedder: HashingEmbedder::new(24, 7)?,
        ..SynthConfig::default()
    }
    .generate()?;
    let plan = make_folds(corpus.features.communities(), 10, 42)?;
    println!("fold sizes {:?}", plan.fold_sizes());

    let (model, oof) = cross_validated_fit(&corpus.features, &corpus.targets, &plan, &RidgeSettings::default())?;
    for (f, m) in model.per_fold.iter().enumerate() {
        println!("fold {f}: lambda {:.1e}, intercept {:.3}", m.lambda, m.intercept);
    }
    println!("out-of-fold pearson {:.4}", pearson(&oof.y_true, &oof.y_pred)?);
    let signal: Vec<f64> = oof.communities.iter().map(|c| corpus.signal[c]).collect();
    println!("out-of-fold pearson against the noise-free signal {:.4}", pearson(&signal, &oof.y_pred)?);
    Ok(())
}
