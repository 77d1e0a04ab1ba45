//! Embeds a small synthetic corpus, averages sentence vectors per community and
//! drops communities with too few sentences.

use langcorr::{aggregate, embed_corpus, min_count_filter, HashingEmbedder, SynthConfig, Tokenizer};

fn main() -> langcorr::Result<()> {
    let embedder = HashingEmbedder::new(16, 7)?;
    let corpus = SynthConfig {
        communities: 12,
        sentences_per_community: 30,
        embedder,
        ..SynthConfig::default()
    }
    .generate()?;
    // make the last community sparse
    let last = corpus.features.communities().last().unwrap().clone();
    let records: Vec<_> = corpus
        .records
        .iter()
        .filter(|r| r.community != last || r.sentence_id.ends_with('0'))
        .cloned()
        .collect();

    let embedded = embed_corpus(&records, &Tokenizer::default(), &embedder);
    println!("{} sentences, {} out of vocabulary", embedded.matrix.rows(), embedded.oov_count);
    let all = aggregate(&records, &embedded.matrix)?;
    let kept = min_count_filter(&all, 20)?;
    for (c, n) in all.communities().iter().zip(all.counts()) {
        let mark = if kept.index_of(c).is_some() { "kept" } else { "dropped" };
        let row = all.matrix().row(all.index_of(c).unwrap());
        println!("{c}  {n:>3} sentences  x[0..3] = {:+.4} {:+.4} {:+.4}  {mark}", row[0], row[1], row[2]);
    }
    Ok(())
}
