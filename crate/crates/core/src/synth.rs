//! Synthetic corpora with a known linear relation between community features
//! and the target.
//!
//! Each community draws a topic mixture; each sentence picks a topic and then
//! words from that topic's vocabulary. The target is an affine function of the
//! community feature matrix computed with the [`HashingEmbedder`], plus
//! optional Gaussian noise, so noiseless targets are exactly recoverable.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::aggregate::{aggregate, CommunityFeatures};
use crate::embed::{embed_corpus, HashingEmbedder, Tokenizer};
use crate::error::{Error, Result};
use crate::ingest::CountyCentroidTable;
use crate::types::{CommunityId, SentenceRecord, TargetTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub communities: usize,
    pub sentences_per_community: usize,
    pub vocab_size: usize,
    pub topics: usize,
    pub min_words: usize,
    pub max_words: usize,
    /// Dirichlet concentration of the per-community topic mixture.
    pub topic_concentration: f64,
    /// Signal-to-noise as a variance ratio; `None` means noiseless.
    pub snr: Option<f64>,
    pub target_mean: f64,
    pub target_sigma: f64,
    pub target_name: String,
    pub year: i32,
    /// Emit `lat`/`lon` instead of `fips` in the sentence file.
    pub coords: bool,
    pub seed: u64,
    pub embedder: HashingEmbedder,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            communities: 300,
            sentences_per_community: 200,
            vocab_size: 2000,
            topics: 24,
            min_words: 4,
            max_words: 12,
            topic_concentration: 0.3,
            snr: Some(10.0),
            target_mean: 50.0,
            target_sigma: 10.0,
            target_name: "synthetic".into(),
            year: 2014,
            coords: false,
            seed: 42,
            embedder: HashingEmbedder { dim: 64, seed: 7 },
        }
    }
}

/// True affine map from raw community features to the noiseless target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub target_name: String,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub snr: Option<f64>,
    pub seed: u64,
    pub embedder: HashingEmbedder,
}

impl GroundTruth {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub records: Vec<SentenceRecord>,
    pub targets: TargetTable,
    /// Noiseless target per community.
    pub signal: BTreeMap<CommunityId, f64>,
    pub features: CommunityFeatures,
    pub truth: GroundTruth,
    pub centroids: CountyCentroidTable,
    /// Per-record coordinates near the community centroid.
    pub coords: Vec<(f64, f64)>,
    /// Topic each sentence was drawn from.
    pub topic_of: Vec<usize>,
}

const SYLLABLES: [&str; 10] = ["ka", "lo", "mi", "ne", "su", "ta", "ri", "vo", "ze", "pu"];

/// Deterministic pseudo-word for a vocabulary index; distinct for distinct
/// indices.
pub fn pseudo_word(mut i: usize) -> String {
    let mut parts = Vec::new();
    for _ in 0..3 {
        parts.push(SYLLABLES[i % 10]);
        i /= 10;
    }
    while i > 0 {
        parts.push(SYLLABLES[i % 10]);
        i /= 10;
    }
    parts.reverse();
    parts.concat()
}

fn community_code(i: usize) -> CommunityId {
    let state = 1 + i / 400;
    let county = 1 + 2 * (i % 400);
    CommunityId::new(format!("{state:02}{county:03}")).expect("five digits")
}

fn centroid_of(i: usize) -> (f64, f64) {
    (25.0 + (i / 40) as f64 * 0.5, -120.0 + (i % 40) as f64 * 0.5)
}

fn sample_dirichlet(rng: &mut ChaCha8Rng, k: usize, alpha: f64) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("positive concentration");
    let mut v: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    } else {
        v = vec![1.0 / k as f64; k];
    }
    v
}

fn pick(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let mut t = rng.gen::<f64>() * weights.iter().sum::<f64>();
    for (i, w) in weights.iter().enumerate() {
        if t < *w {
            return i;
        }
        t -= w;
    }
    weights.len() - 1
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("synth: {m}")));
        if self.communities < 2 {
            return bad("need at least 2 communities");
        }
        if self.sentences_per_community == 0 {
            return bad("need at least 1 sentence per community");
        }
        if self.topics == 0 || self.vocab_size < self.topics {
            return bad("vocab_size must be at least the number of topics");
        }
        if self.min_words == 0 || self.max_words < self.min_words {
            return bad("word range must satisfy 1 <= min <= max");
        }
        if !(self.topic_concentration > 0.0) {
            return bad("topic concentration must be positive");
        }
        if self.snr.is_some_and(|r| !(r > 0.0)) {
            return bad("snr must be positive");
        }
        if !(self.target_sigma > 0.0) {
            return bad("target sigma must be positive");
        }
        if self.communities > 400 * 56 {
            return bad("too many communities");
        }
        Ok(())
    }

    /// Builds the corpus, features and targets.
    pub fn generate(&self) -> Result<SynthCorpus> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);

        // topic t owns a contiguous slice of the vocabulary with Zipf weights
        let words: Vec<String> = (0..self.vocab_size).map(pseudo_word).collect();
        let per_topic = self.vocab_size / self.topics;
        let zipf: Vec<f64> = (0..per_topic).map(|r| 1.0 / (r + 1) as f64).collect();

        let mut records = Vec::with_capacity(self.communities * self.sentences_per_community);
        let mut coords = Vec::with_capacity(records.capacity());
        let mut topic_of = Vec::with_capacity(records.capacity());
        let mut centroids = BTreeMap::new();
        for a in 0..self.communities {
            let code = community_code(a);
            let (clat, clon) = centroid_of(a);
            centroids.insert(code.clone(), (clat, clon));
            let mixture = sample_dirichlet(&mut rng, self.topics, self.topic_concentration);
            for s in 0..self.sentences_per_community {
                let topic = pick(&mut rng, &mixture);
                let len = rng.gen_range(self.min_words..=self.max_words);
                let mut text = Vec::with_capacity(len);
                for _ in 0..len {
                    let w = if rng.gen::<f64>() < 0.1 {
                        rng.gen_range(0..self.vocab_size)
                    } else {
                        topic * per_topic + pick(&mut rng, &zipf)
                    };
                    text.push(words[w].as_str());
                }
                records.push(SentenceRecord::new(format!("s{a}_{s}"), text.join(" "), code.clone()));
                coords.push((clat + rng.gen_range(-0.1..0.1), clon + rng.gen_range(-0.1..0.1)));
                topic_of.push(topic);
            }
        }

        let corpus = embed_corpus(&records, &Tokenizer::default(), &self.embedder);
        let features = aggregate(&records, &corpus.matrix)?;

        let d = self.embedder.dim;
        let direction: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let raw: Vec<f64> = features
            .matrix()
            .iter_rows()
            .map(|x| x.iter().zip(&direction).map(|(a, b)| a * b).sum())
            .collect();
        let n = raw.len() as f64;
        let mean = raw.iter().sum::<f64>() / n;
        let sd = (raw.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        if !(sd > 0.0) {
            return Err(Error::DegenerateSeries);
        }
        let gain = self.target_sigma / sd;
        let weights: Vec<f64> = direction.iter().map(|w| w * gain).collect();
        let mut intercept = self.target_mean - mean * gain;

        let signal_values: Vec<f64> = features
            .matrix()
            .iter_rows()
            .map(|x| intercept + x.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let noise: Vec<f64> = match self.snr {
            Some(r) => {
                let dist = Normal::new(0.0, self.target_sigma / r.sqrt()).expect("finite sigma");
                (0..signal_values.len()).map(|_| dist.sample(&mut rng)).collect()
            }
            None => vec![0.0; signal_values.len()],
        };
        let mut values: Vec<f64> = signal_values.iter().zip(&noise).map(|(s, e)| s + e).collect();
        // targets are rates; keep them non-negative
        let lowest = values.iter().copied().fold(f64::INFINITY, f64::min);
        let shift = if lowest < 0.0 { 1.0 - lowest } else { 0.0 };
        if shift > 0.0 {
            values.iter_mut().for_each(|v| *v += shift);
            intercept += shift;
        }

        let signal = features
            .communities()
            .iter()
            .cloned()
            .zip(signal_values.iter().map(|s| s + shift))
            .collect();
        let entries = features.communities().iter().cloned().zip(values).collect();
        let targets = TargetTable::new(self.target_name.clone(), "synthetic units", entries, vec![self.year])?;
        Ok(SynthCorpus {
            records,
            targets,
            signal,
            features,
            truth: GroundTruth {
                target_name: self.target_name.clone(),
                weights,
                intercept,
                snr: self.snr,
                seed: self.seed,
                embedder: self.embedder,
            },
            centroids: CountyCentroidTable::new(centroids)?,
            coords,
            topic_of,
        })
    }
}

/// Paths written by [`SynthCorpus::write`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SynthFiles {
    pub sentences: PathBuf,
    pub targets: Vec<PathBuf>,
    pub centroids: PathBuf,
    pub ground_truth: PathBuf,
}

impl SynthCorpus {
    /// Writes the sentence file, two yearly target files (the second year
    /// repeats every other community with the same value), the centroid table
    /// and the ground truth.
    pub fn write(&self, dir: &Path, coords: bool) -> Result<SynthFiles> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let sentences = dir.join("sentences.jsonl");
        {
            let file = std::fs::File::create(&sentences).map_err(|e| Error::io(&sentences, e))?;
            let mut out = std::io::BufWriter::new(file);
            let io = |e| Error::io(&sentences, e);
            for (r, (lat, lon)) in self.records.iter().zip(&self.coords) {
                let row = if coords {
                    serde_json::json!({"id": r.sentence_id, "text": r.text, "lat": lat, "lon": lon})
                } else {
                    serde_json::json!({"id": r.sentence_id, "text": r.text, "fips": r.community})
                };
                serde_json::to_writer(&mut out, &row).map_err(|e| Error::format("synth row", e))?;
                out.write_all(b"\n").map_err(io)?;
            }
            out.flush().map_err(io)?;
        }

        let name = &self.targets.target_name;
        let year = self.targets.years[0];
        let mut targets = Vec::new();
        for (offset, stride) in [(0, 1), (1, 2)] {
            let path = dir.join(format!("{name}_{}.csv", year + offset));
            let mut body = String::from("fips,value\n");
            for (i, (c, v)) in self.targets.entries().iter().enumerate() {
                if i % stride == 0 {
                    body.push_str(&format!("{c},{v}\n"));
                }
            }
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            targets.push(path);
        }

        let centroids = dir.join("centroids.csv");
        let mut body = String::from("fips,lat,lon\n");
        for (c, (lat, lon)) in self.centroids.iter() {
            body.push_str(&format!("{c},{lat},{lon}\n"));
        }
        std::fs::write(&centroids, body).map_err(|e| Error::io(&centroids, e))?;

        let ground_truth = dir.join("ground_truth.json");
        let json = serde_json::to_string_pretty(&self.truth).map_err(|e| Error::format("ground truth", e))?;
        std::fs::write(&ground_truth, json).map_err(|e| Error::io(&ground_truth, e))?;

        Ok(SynthFiles {
            sentences,
            targets,
            centroids,
            ground_truth,
        })
    }
}
