//! Clusters synthetic sentences and ranks the clusters by the mean prediction of
//! a fitted model, printing the most frequent words of the extremes.

use langcorr::cluster::top_terms;
use langcorr::stopwords::StopwordSet;
use langcorr::{
    cross_validated_fit, embed_corpus, kmeans_cosine, make_folds, score_clusters, HashingEmbedder, KMeansSettings,
    RidgeSettings, SynthConfig, Tokenizer,
};

fn main() -> langcorr::Result<()> {
    let embedder = HashingEmbedder::new(32, 7)?;
    let corpus = SynthConfig {
        communities: 120,
        sentences_per_community: 50,
        topics: 6,
        embedder,
        ..SynthConfig::default()
    }
    .generate()?;
    let plan = make_folds(corpus.features.communities(), 5, 0)?;
    let (model, _) = cross_validated_fit(&corpus.features, &corpus.targets, &plan, &RidgeSettings::default())?;

    let tokenizer = Tokenizer::default();
    let x = embed_corpus(&corpus.records, &tokenizer, &embedder).matrix;
    let clusters = kmeans_cosine(&x, KMeansSettings::new(12, 1))?;
    let ranking = score_clusters(&clusters, &x, &model)?;
    let stop = StopwordSet::default();
    let show = |label: &str, c: &langcorr::cluster::ClusterScore| {
        let terms = top_terms(c.cluster, &corpus.records, &clusters.assignments, 6, &tokenizer, &stop);
        let words: Vec<&str> = terms.iter().map(|(t, _)| t.as_str()).collect();
        println!("{label} cluster {:>2}  size {:>4}  score {:>8.3}  {}", c.cluster, c.size, c.score, words.join(" "));
    };
    for c in ranking.top(2) {
        show("high", c);
    }
    for c in ranking.bottom(2) {
        show("low ", c);
    }
    Ok(())
}
