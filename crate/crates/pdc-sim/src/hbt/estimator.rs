//! Normalized intensity correlation estimator with jackknife error bars.

use super::{G2Estimate, PulseBatch};
use crate::error::{Error, Result};

/// Default number of pulse blocks for the delete-one jackknife.
pub const DEFAULT_JACKKNIFE_BLOCKS: usize = 100;

/// Estimates `g2 = <s1 s2> / (<s1> <s2>)` over the batch, with a delete-one
/// jackknife over contiguous pulse blocks for the standard error.
pub fn estimate_g2(batch: &PulseBatch) -> Result<G2Estimate> {
    estimate_g2_with_blocks(batch, DEFAULT_JACKKNIFE_BLOCKS)
}

pub fn estimate_g2_with_blocks(batch: &PulseBatch, blocks: usize) -> Result<G2Estimate> {
    let n = batch.s1.len();
    if n < 2 || batch.s2.len() != n {
        return Err(Error::DegenerateBatch(format!(
            "need two equal-length arms with >= 2 pulses, got {} and {}",
            n,
            batch.s2.len()
        )));
    }
    let mut t1 = 0.0;
    let mut t2 = 0.0;
    let mut t12 = 0.0;
    for (a, b) in batch.s1.iter().zip(&batch.s2) {
        t1 += a;
        t2 += b;
        t12 += a * b;
    }
    if t1 <= 0.0 || t2 <= 0.0 {
        return Err(Error::DegenerateBatch(
            "zero mean signal in one arm".into(),
        ));
    }
    let nf = n as f64;
    let value = (t12 / nf) / ((t1 / nf) * (t2 / nf));

    let b = blocks.clamp(2, n);
    let mut sub = Vec::with_capacity(b);
    for k in 0..b {
        let lo = k * n / b;
        let hi = (k + 1) * n / b;
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        let mut b12 = 0.0;
        for i in lo..hi {
            b1 += batch.s1[i];
            b2 += batch.s2[i];
            b12 += batch.s1[i] * batch.s2[i];
        }
        let m = (n - (hi - lo)) as f64;
        let r1 = (t1 - b1) / m;
        let r2 = (t2 - b2) / m;
        if r1 <= 0.0 || r2 <= 0.0 {
            continue; // deletion leaves a degenerate sub-batch
        }
        sub.push(((t12 - b12) / m) / (r1 * r2));
    }
    let std_error = if sub.len() >= 2 {
        let bv = sub.len() as f64;
        let mean = sub.iter().sum::<f64>() / bv;
        let ss: f64 = sub.iter().map(|s| (s - mean) * (s - mean)).sum();
        ((bv - 1.0) / bv * ss).sqrt()
    } else {
        0.0
    };

    Ok(G2Estimate {
        value,
        std_error,
        pulses_used: n,
    })
}
