//! Overlap and volume metrics, and the paired t-test used to compare
//! methods across cases.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::volume::{LabelVolume, Volume};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub dsc: f64,
    pub rvd: f64,
    pub vol_seg: usize,
    pub vol_ref: usize,
}

fn counts(a: &LabelVolume, b: &LabelVolume) -> Result<(usize, usize, usize)> {
    a.geometry().ensure_matches(b.geometry(), "metric inputs")?;
    let (mut na, mut nb, mut both) = (0, 0, 0);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let (x, y) = (x != 0.0, y != 0.0);
        na += x as usize;
        nb += y as usize;
        both += (x && y) as usize;
    }
    Ok((na, nb, both))
}

/// Dice similarity coefficient `2|A ∩ B| / (|A| + |B|)`.
pub fn dsc(a: &LabelVolume, b: &LabelVolume) -> Result<f64> {
    let (na, nb, both) = counts(a, b)?;
    if na + nb == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(2.0 * both as f64 / (na + nb) as f64)
}

/// Relative volume difference `|V_seg - V_ref| / V_ref`.
pub fn rvd(seg: &LabelVolume, reference: &LabelVolume) -> Result<f64> {
    let (ns, nr, _) = counts(seg, reference)?;
    if nr == 0 {
        return Err(Error::EmptyMask);
    }
    Ok((ns as f64 - nr as f64).abs() / nr as f64)
}

pub fn evaluate(seg: &LabelVolume, reference: &LabelVolume) -> Result<EvalResult> {
    let (ns, nr, _) = counts(seg, reference)?;
    Ok(EvalResult {
        dsc: dsc(seg, reference)?,
        rvd: rvd(seg, reference)?,
        vol_seg: ns,
        vol_ref: nr,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub df: usize,
}

/// Two-sided paired t-test on `x - y`.
pub fn paired_t_test(x: &[f64], y: &[f64]) -> Result<TTest> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            actual: n,
        });
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let t = mean / (var.sqrt() / (n as f64).sqrt());
    let df = n - 1;
    Ok(TTest {
        t,
        p: student_t_two_sided(t, df as f64),
        df,
    })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}
