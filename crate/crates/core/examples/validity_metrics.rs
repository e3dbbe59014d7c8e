//! Silhouette, Calinski-Harabasz, Davies-Bouldin and ICS on small inputs.

use nalgebra::DMatrix;
use somcluster::metrics::{calinski_harabasz, davies_bouldin, ics, silhouette, validity_report};

fn main() -> somcluster::Result<()> {
    let x = DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 10.0, 11.0]);
    let labels = [0, 0, 1, 1];
    println!("sc = {:.6}", silhouette(&x, &labels)?);
    println!("ch = {:.6}", calinski_harabasz(&x, &labels)?);
    println!("db = {:.6}", davies_bouldin(&x, &labels)?);

    // one of three replicates of subject b disagrees
    let subjects: Vec<String> = ["a", "a", "a", "b", "b", "b"].iter().map(|s| s.to_string()).collect();
    println!("ics = {:.4}", ics(&[0, 0, 0, 1, 1, 0], &subjects)?);

    let y = DMatrix::from_column_slice(6, 1, &[0.0, 0.5, 1.0, 9.0, 9.5, 10.0]);
    let report = validity_report(&y, &[0, 0, 0, 1, 1, 1], &subjects)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}
