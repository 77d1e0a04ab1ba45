//! Combines two yearly target files: communities present in both years get the
//! mean, the others keep their single value.

use langcorr::ingest::union_average_targets;
use langcorr::{CommunityId, YearlyTargetFile};

fn main() -> langcorr::Result<()> {
    let id = |s: &str| CommunityId::new(s).unwrap();
    let y2014 = YearlyTargetFile::new(
        "diabetes",
        "per 100k",
        2014,
        vec![(id("01001"), 30.0), (id("06037"), 21.0), (id("36061"), 18.5)],
    )?;
    let y2015 = YearlyTargetFile::new("diabetes", "per 100k", 2015, vec![(id("01001"), 34.0), (id("48201"), 25.0)])?;
    let table = union_average_targets(&[y2014, y2015])?;
    println!("{} years {:?}", table.target_name, table.years);
    for (c, v) in table.entries() {
        println!("  {c}  {v:.2}");
    }
    println!("mean {:.3}  sd {:.3}", table.mean(), table.stddev());
    Ok(())
}
