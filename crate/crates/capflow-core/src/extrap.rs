//! Richardson extrapolation of sequences sampled at h, h/2, h/4, ...

use crate::error::{Error, Result};
use crate::quad::Estimate;

#[derive(Clone, Debug, PartialEq)]
pub struct Extrapolated {
    pub limit: Estimate,
    /// Leading error exponent estimated from the samples.
    pub order: f64,
}

/// Estimate the leading exponent p in f(h) = L + c h^p + ... from successive
/// difference ratios. Ratios drowned by rounding are skipped.
pub fn empirical_order(values: &[f64]) -> Option<f64> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let noise = 1e3 * f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    let mut orders = Vec::new();
    for w in values.windows(3) {
        let d1 = w[0] - w[1];
        let d2 = w[1] - w[2];
        if d1.abs() > noise && d2.abs() > noise && d1.signum() == d2.signum() {
            orders.push((d1 / d2).log2());
        }
    }
    if orders.is_empty() {
        return None;
    }
    // The late ratios are closest to the asymptotic regime but also noisiest;
    // take the median of the second half.
    let half = orders.len() / 2;
    let tail = &mut orders[half..];
    tail.sort_by(f64::total_cmp);
    Some(tail[tail.len() / 2])
}

/// Extrapolate `values[j] = f(h0 / 2^j)` to h -> 0.
///
/// Column k of the table removes the term h^(p + k - 1), where p is the
/// empirical order rounded to an integer when it is within 0.1 of one. The
/// entry with the smallest difference to its neighbours is returned, with
/// that difference as the error estimate.
pub fn richardson(values: &[f64]) -> Result<Extrapolated> {
    if values.len() < 3 {
        return Err(Error::Extrapolation(format!(
            "need at least 3 samples, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Extrapolation("non-finite sample".into()));
    }
    let n = values.len();
    let last = values[n - 1];
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 16.0 * f64::EPSILON * scale;
    let Some(mut p) = empirical_order(values) else {
        // Constant to rounding: nothing to extrapolate.
        let spread = values.iter().fold(0.0f64, |m, v| m.max((v - last).abs()));
        return Ok(Extrapolated {
            limit: Estimate::new(last, spread.max(floor)),
            order: f64::INFINITY,
        });
    };
    if (p - p.round()).abs() < 0.1 {
        p = p.round();
    }
    if !(p > 0.0) {
        return Err(Error::Extrapolation(format!("sequence does not converge (order {p})")));
    }
    let max_cols = 8.min(n);
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut best = Estimate::new(last, (values[n - 1] - values[n - 2]).abs().max(floor));
    for j in 0..n {
        let mut row = vec![values[j]];
        for k in 1..max_cols.min(j + 1) {
            let fac = 2f64.powf(p + (k - 1) as f64) - 1.0;
            let prev = &table[j - 1];
            let v = row[k - 1] + (row[k - 1] - prev[k - 1]) / fac;
            row.push(v);
        }
        for k in 1..row.len() {
            let e1 = (row[k] - row[k - 1]).abs();
            let e2 = if k < table[j - 1].len() {
                (row[k] - table[j - 1][k]).abs()
            } else {
                e1
            };
            let err = e1.max(e2).max(floor);
            if err < best.err {
                best = Estimate::new(row[k], err);
            }
        }
        table.push(row);
    }
    Ok(Extrapolated { limit: best, order: p })
}
