//! Micro and macro F1 from predictions, and aggregation over runs.

use hyperwalk::metrics::{aggregate_runs, ConfusionMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth = [0, 0, 0, 0, 0, 0, 1, 1, 2, 2];
    let predicted = [0, 0, 0, 0, 0, 1, 1, 0, 2, 0];
    let cm = ConfusionMatrix::from_predictions(3, &truth, &predicted)?;
    for t in 0..3 {
        println!("{:?}", (0..3).map(|p| cm.get(t, p)).collect::<Vec<_>>());
    }
    println!("accuracy {:.3} micro-F1 {:.3} macro-F1 {:.3}", cm.accuracy()?, cm.micro_f1()?, cm.macro_f1()?);
    let summary = aggregate_runs(&[0.81, 0.79, 0.83, 0.80])?;
    println!("over runs: {summary:?}");
    Ok(())
}
