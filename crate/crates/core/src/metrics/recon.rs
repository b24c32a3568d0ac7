//! Point-cloud reconstruction metrics.

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::geometry::{Mat3, Vec3};
use crate::spatial::PointGrid;

/// Neighbourhood size for plane-fit normals (the point itself included).
pub const NORMAL_NEIGHBOURS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconMetrics {
    /// Mean pred → gt nearest distance.
    pub acc: f64,
    /// Mean gt → pred nearest distance.
    pub comp: f64,
    /// Mean of the two directions' mean `|cos|` between matched normals.
    pub nc: f64,
}

/// Unit normals from a least-squares plane through each point's k nearest
/// neighbours. Sign is arbitrary; NC uses absolute cosines.
pub fn estimate_normals(points: &[Vec3], k: usize) -> Result<Vec<Vec3>, MetricsError> {
    if points.len() < 3 || k < 3 {
        return Err(MetricsError::Degenerate("plane fits need at least 3 points".into()));
    }
    let grid = PointGrid::build(points);
    Ok(points
        .iter()
        .map(|p| {
            let nb = grid.k_nearest(p, k);
            let mu = nb.iter().map(|&(i, _)| points[i]).sum::<Vec3>() / nb.len() as f64;
            let mut cov = Mat3::zeros();
            for &(i, _) in &nb {
                let d = points[i] - mu;
                cov += d * d.transpose();
            }
            let eig = cov.symmetric_eigen();
            let (imin, _) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("3 eigenvalues");
            eig.eigenvectors.column(imin).normalize()
        })
        .collect())
}

fn check_normals(points: &[Vec3], normals: Option<&[Vec3]>) -> Result<Vec<Vec3>, MetricsError> {
    match normals {
        Some(n) if n.len() != points.len() => Err(MetricsError::LengthMismatch(n.len(), points.len())),
        Some(n) => Ok(n.iter().map(|v| v.normalize()).collect()),
        None => estimate_normals(points, NORMAL_NEIGHBOURS),
    }
}

/// Acc/Comp/NC. Missing normals are estimated with [`estimate_normals`].
pub fn recon_metrics(
    pred: &[Vec3],
    gt: &[Vec3],
    gt_normals: Option<&[Vec3]>,
    pred_normals: Option<&[Vec3]>,
) -> Result<ReconMetrics, MetricsError> {
    if pred.is_empty() || gt.is_empty() {
        return Err(MetricsError::NoValid("points"));
    }
    let gn = check_normals(gt, gt_normals)?;
    let pn = check_normals(pred, pred_normals)?;
    let (gt_grid, pred_grid) = (PointGrid::build(gt), PointGrid::build(pred));
    let directed = |from: &[Vec3], fnrm: &[Vec3], to: &PointGrid, tnrm: &[Vec3]| {
        let (mut dist, mut cos) = (0.0, 0.0);
        for (p, n) in from.iter().zip(fnrm) {
            let (j, d) = to.nearest(p).expect("non-empty");
            dist += d;
            cos += n.dot(&tnrm[j]).abs();
        }
        let k = from.len() as f64;
        (dist / k, cos / k)
    };
    let (acc, nc_acc) = directed(pred, &pn, &gt_grid, &gn);
    let (comp, nc_comp) = directed(gt, &gn, &pred_grid, &pn);
    Ok(ReconMetrics {
        acc,
        comp,
        nc: 0.5 * (nc_acc + nc_comp),
    })
}
