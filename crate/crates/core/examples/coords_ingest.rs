//! Assigns geotagged messages to the nearest county centroid.

use std::collections::BTreeMap;
use std::io::Write;

use langcorr::ingest::{read_sentences_with, IngestOptions};
use langcorr::{CommunityId, CountyCentroidTable, InputMode};

fn main() -> langcorr::Result<()> {
    let mut centroids = BTreeMap::new();
    centroids.insert(CommunityId::new("36061")?, (40.78, -73.97));
    centroids.insert(CommunityId::new("06037")?, (34.32, -118.22));
    centroids.insert(CommunityId::new("17031")?, (41.84, -87.82));
    let table = CountyCentroidTable::new(centroids)?;

    let dir = std::env::temp_dir().join(format!("langcorr-coords-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| langcorr::Error::Io { path: dir.clone(), source: e })?;
    let path = dir.join("geo.jsonl");
    let mut f = std::fs::File::create(&path).unwrap();
    for (i, (lat, lon, text)) in [
        (40.71, -74.0, "subway delayed again"),
        (34.05, -118.24, "beach day"),
        (41.88, -87.63, "deep dish tonight"),
        (51.5, -0.12, "tea time"),
        (95.0, 10.0, "impossible place"),
    ]
    .iter()
    .enumerate()
    {
        writeln!(f, r#"{{"id":"{i}","text":"{text}","lat":{lat},"lon":{lon}}}"#).unwrap();
    }
    drop(f);

    for limit in [None, Some(500.0)] {
        let opts = IngestOptions {
            mode: InputMode::Coords,
            max_distance_km: limit,
        };
        let out = read_sentences_with(&path, opts, Some(&table))?;
        println!("max distance {limit:?}: kept {} of {}, dropped {:?}", out.records.len(), out.total_rows, out.dropped);
        for r in &out.records {
            println!("  {} -> {}  {:?}", r.sentence_id, r.community, r.text);
        }
    }
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
