//! Spherical k-means on points drawn around a few random directions.

use langcorr::{kmeans_cosine, EmbeddingMatrix, KMeansSettings};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> langcorr::Result<()> {
    let (bundles, per, dim) = (5, 400, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut gauss = |n: usize| -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let centers: Vec<Vec<f64>> = (0..bundles).map(|_| gauss(dim)).collect();
    let mut rows = Vec::new();
    for c in &centers {
        for _ in 0..per {
            rows.push(c.iter().zip(gauss(dim)).map(|(a, b)| a + 0.15 * b).collect::<Vec<f64>>());
        }
    }
    let x = EmbeddingMatrix::from_rows(dim, &rows)?;
    let model = kmeans_cosine(&x, KMeansSettings::new(bundles, 9))?;
    println!("iterations {}, converged {}", model.iterations, model.converged);
    let hist: Vec<String> = model.objective_history.iter().map(|o| format!("{o:.5}")).collect();
    println!("mean cosine per iteration: {}", hist.join(" "));
    println!("cluster sizes {:?}", model.sizes);
    for b in 0..bundles {
        let mut counts = vec![0; bundles];
        for a in model.assignments[b * per..(b + 1) * per].iter().flatten() {
            counts[*a] += 1;
        }
        println!("bundle {b} -> clusters {counts:?}");
    }
    Ok(())
}
