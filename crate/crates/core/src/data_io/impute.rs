use crate::data_io::Dataset;
use crate::error::{Error, Result};

/// Per-variable mean over every observed training value, pooled across
/// series and timesteps.
pub fn training_means(ds: &Dataset) -> Result<Vec<f64>> {
    let v = ds.n_vars();
    let mut sum = vec![0.0; v];
    let mut count = vec![0usize; v];
    for s in &ds.train {
        for t in 0..s.len() {
            for (j, &x) in s.step(t).iter().enumerate() {
                if !x.is_nan() {
                    sum[j] += x;
                    count[j] += 1;
                }
            }
        }
    }
    (0..v)
        .map(|j| {
            if count[j] == 0 {
                Err(Error::Imputation {
                    variable: format!("x{}", j + 1),
                })
            } else {
                Ok(sum[j] / count[j] as f64)
            }
        })
        .collect()
}

/// Replaces missing entries in both splits with training means.
pub fn impute_mean(ds: &Dataset) -> Result<Dataset> {
    let means = training_means(ds)?;
    let v = ds.n_vars();
    Ok(ds.map_splits(|s| {
        for (k, x) in s.values_mut().iter_mut().enumerate() {
            if x.is_nan() {
                *x = means[k % v];
            }
        }
    }))
}
