//! Compensated sums and standard errors that do not depend on evaluation order.

/// Neumaier-compensated sum, evaluated left to right.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Sample mean and its standard error.
///
/// With `blocks > 1` the values are split into that many consecutive, equally sized
/// groups (independent replicates) and the error is the spread of the group means.
/// Otherwise the i.i.d. formula `s / sqrt(N)` is used.
pub fn mean_and_stderr(values: &[f64], blocks: usize) -> (f64, f64) {
    let n = values.len();
    let m = mean(values);
    if n < 2 {
        return (m, 0.0);
    }
    if blocks > 1 && n.is_multiple_of(blocks) {
        let len = n / blocks;
        let means: Vec<f64> = values.chunks(len).map(mean).collect();
        let grand = mean(&means);
        let var = compensated_sum(means.iter().map(|b| (b - grand) * (b - grand))) / (blocks - 1) as f64;
        return (m, (var / blocks as f64).sqrt());
    }
    let var = compensated_sum(values.iter().map(|v| (v - m) * (v - m))) / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}

/// Coordinatewise [`mean_and_stderr`] of a row-major `rows × dim` table.
pub fn vector_mean_and_stderr(rows: &[Vec<f64>], dim: usize, blocks: usize) -> (Vec<f64>, Vec<f64>) {
    let mut column = vec![0.0; rows.len()];
    let mut means = Vec::with_capacity(dim);
    let mut errs = Vec::with_capacity(dim);
    for j in 0..dim {
        for (c, r) in column.iter_mut().zip(rows) {
            *c = r[j];
        }
        let (m, e) = mean_and_stderr(&column, blocks);
        means.push(m);
        errs.push(e);
    }
    (means, errs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_small_terms() {
        let vals = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(vals), 2.0);
    }

    #[test]
    fn stderr_iid_and_blocks() {
        let v = [1.0, 2.0, 3.0, 4.0];
        let (m, e) = mean_and_stderr(&v, 1);
        assert_eq!(m, 2.5);
        // s^2 = 5/3
        assert!((e - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        let (m, e) = mean_and_stderr(&v, 2);
        assert_eq!(m, 2.5);
        // block means 1.5 and 3.5: variance 2, stderr 1
        assert!((e - 1.0).abs() < 1e-15);
        assert_eq!(mean_and_stderr(&[0.3], 1), (0.3, 0.0));
    }
}
