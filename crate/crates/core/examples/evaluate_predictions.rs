//! Pearson correlation, mean absolute error and the decile confusion matrix.

use langcorr::EvaluationReport;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> langcorr::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let truth: Vec<f64> = (0..500).map(|_| rng.gen_range(10.0..40.0)).collect();
    let noisy: Vec<f64> = truth.iter().map(|t| t + rng.gen_range(-6.0..6.0)).collect();

    let report = EvaluationReport::compute("example", &truth, &noisy, 10)?;
    println!("{report}");
    let mut csv = Vec::new();
    report.confusion.write_csv(&mut csv).unwrap();
    println!("{}", String::from_utf8_lossy(&csv));

    let perfect = EvaluationReport::compute("perfect", &truth, &truth, 10)?;
    println!("perfect predictions: accuracy {:.2}, trace {}", perfect.bin_accuracy, perfect.confusion.trace());
    Ok(())
}
