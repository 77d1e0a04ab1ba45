//! Tokenizes a few messages and embeds them with a tiny hand-built lexicon and
//! with the lexicon-free hashing embedder.

use langcorr::embed::embed_sentence;
use langcorr::{HashingEmbedder, Tokenizer, VectorLexicon};

fn main() -> langcorr::Result<()> {
    let tokenizer = Tokenizer::default();
    let messages = [
        "Ran 5 miles this morning!! #fitness @coach http://t.co/x",
        "so tired... pizza again tonight",
        "quick run then salad",
    ];

    let mut lexicon = VectorLexicon::new(3)?;
    lexicon.insert_unigram("run", &[1.0, 0.0, 0.0])?;
    lexicon.insert_unigram("salad", &[0.0, 1.0, 0.0])?;
    lexicon.insert_unigram("pizza", &[0.0, 0.0, 1.0])?;
    lexicon.insert_bigram("quick", "run", &[2.0, 0.0, 0.0])?;

    let hashing = HashingEmbedder::new(8, 7)?;
    for text in messages {
        let tokens = tokenizer.tokenize(text);
        let (lex, lex_oov) = embed_sentence(&tokens, &lexicon);
        let (hash, _) = embed_sentence(&tokens, &hashing);
        println!("{text}");
        println!("  tokens   {tokens:?}");
        if lex_oov {
            println!("  lexicon  (out of vocabulary)");
        } else {
            println!("  lexicon  {:?}", lex.as_slice());
        }
        let h: Vec<String> = hash.as_slice().iter().map(|v| format!("{v:+.3}")).collect();
        println!("  hashing  [{}]", h.join(", "));
    }
    Ok(())
}
