//! Monocular/video depth metrics with per-sequence alignment.

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::geometry::DepthMap;

pub const DELTA_THRESHOLD: f64 = 1.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthAlign {
    None,
    #[default]
    Scale,
    ScaleShift,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthMetrics {
    pub abs_rel: f64,
    /// Percentage of pixels with `max(p/g, g/p) < 1.25`.
    pub delta: f64,
    pub scale: f64,
    pub shift: f64,
    pub pixels: usize,
}

/// One least-squares fit over all valid pixels of the sequence, then AbsRel
/// and δ on the aligned prediction. A pixel is evaluated when valid in both.
pub fn depth_metrics(pred: &[DepthMap], gt: &[DepthMap], align: DepthAlign) -> Result<DepthMetrics, MetricsError> {
    if pred.len() != gt.len() {
        return Err(MetricsError::LengthMismatch(pred.len(), gt.len()));
    }
    let mut pairs = Vec::new();
    let mut offset = 0;
    for (p, g) in pred.iter().zip(gt) {
        if p.dims() != g.dims() {
            return Err(MetricsError::DimensionMismatch(format!("{:?} vs {:?}", p.dims(), g.dims())));
        }
        for i in 0..g.len() {
            if !(g.valid[i] && p.valid[i]) {
                continue;
            }
            let (pv, gv) = (p.data[i], g.data[i]);
            if !(gv > 0.0 && gv.is_finite()) {
                return Err(MetricsError::NonPositiveGt { index: offset + i });
            }
            if pv.is_finite() {
                pairs.push((pv, gv));
            }
        }
        offset += g.len();
    }
    if pairs.is_empty() {
        return Err(MetricsError::NoValid("depth pixels"));
    }
    let (scale, shift) = fit(&pairs, align)?;
    let (mut rel, mut good) = (0.0, 0usize);
    for &(p, g) in &pairs {
        let a = scale * p + shift;
        rel += (a - g).abs() / g;
        // Non-positive aligned depth never satisfies the ratio test.
        if a > 0.0 && (a / g).max(g / a) < DELTA_THRESHOLD {
            good += 1;
        }
    }
    let n = pairs.len();
    Ok(DepthMetrics {
        abs_rel: rel / n as f64,
        delta: 100.0 * good as f64 / n as f64,
        scale,
        shift,
        pixels: n,
    })
}

fn fit(pairs: &[(f64, f64)], align: DepthAlign) -> Result<(f64, f64), MetricsError> {
    match align {
        DepthAlign::None => Ok((1.0, 0.0)),
        DepthAlign::Scale => {
            let (pp, pg) = pairs.iter().fold((0.0, 0.0), |(a, b), &(p, g)| (a + p * p, b + p * g));
            if !(pp > 0.0) {
                return Err(MetricsError::Degenerate("prediction is identically zero".into()));
            }
            Ok((pg / pp, 0.0))
        }
        DepthAlign::ScaleShift => {
            // Centred normal equations for numerical stability.
            let n = pairs.len() as f64;
            let mp = pairs.iter().map(|x| x.0).sum::<f64>() / n;
            let mg = pairs.iter().map(|x| x.1).sum::<f64>() / n;
            let (mut spp, mut spg) = (0.0, 0.0);
            for &(p, g) in pairs {
                spp += (p - mp) * (p - mp);
                spg += (p - mp) * (g - mg);
            }
            if !(spp > 1e-300) {
                return Err(MetricsError::Degenerate("prediction is constant".into()));
            }
            let s = spg / spp;
            Ok((s, mg - s * mp))
        }
    }
}
