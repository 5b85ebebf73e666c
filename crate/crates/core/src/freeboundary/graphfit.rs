use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::classify::{classify_point, Verdict};
use super::extract::{default_delta, default_eps_grad, extract_free_boundary};
use crate::fields::{Ball, Point, VectorField};
use crate::stats::{fit_line, LineFit};
use crate::{Error, Result};

pub const MIN_GRAPH_SAMPLES: usize = 8;
/// Normal variations below this are treated as an exactly flat boundary.
pub const FLAT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphSample {
    pub point: Point,
    /// Unit normal pointing into the support.
    pub normal: [f64; 3],
    /// Signed offset of the point from the mean tangent plane.
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderBin {
    pub mean_distance: f64,
    pub mean_normal_change: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFit {
    pub samples: Vec<GraphSample>,
    pub mean_normal: [f64; 3],
    pub bins: Vec<HolderBin>,
    /// Slope of `log |ν¹ − ν²|` against `log |x¹ − x²|` over the bins.
    pub holder_fit: Option<LineFit>,
    pub beta_hat: Option<f64>,
    pub max_normal_variation: f64,
    /// All normals agree to `FLAT_TOLERANCE`; no exponent is fitted.
    pub flat: bool,
}

/// Free boundary samples in `B_window(x⁰)` with PCA normals and a Hölder
/// exponent estimate over `levels` dyadic distance bins.
pub fn fit_boundary_graph(field: &VectorField, x0: &Point, window: f64, levels: usize) -> Result<GraphFit> {
    let grid = field.grid();
    let dim = grid.dim();
    let h = grid.h_max();
    if dim < 2 {
        return Err(Error::InvalidArgument("graph fits need dimension ≥ 2".into()));
    }
    if levels < 2 {
        return Err(Error::InvalidArgument("at least two refinement levels are needed".into()));
    }
    grid.require_ball(&Ball::new(*x0, window))?;
    let verdict = classify_point(field, x0, 5.0 * h, None)?;
    if verdict.verdict != Verdict::Regular {
        return Err(Error::NotRegular(x0[..dim].to_vec()));
    }
    let fb = extract_free_boundary(field, default_delta(field), default_eps_grad(grid))?;
    let d2 = |a: &Point, b: &Point| (0..dim).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>();
    let pts: Vec<_> = fb.gamma.iter().filter(|p| d2(&p.point, x0) <= window * window).collect();
    if pts.len() < MIN_GRAPH_SAMPLES {
        return Err(Error::InsufficientBoundarySamples { found: pts.len(), needed: MIN_GRAPH_SAMPLES });
    }

    // orientation reference: mean of the plane-fit normals
    let mut reference = [0.0; 3];
    for p in &pts {
        if let Some(n) = p.normal {
            for k in 0..3 {
                reference[k] += n[k];
            }
        }
    }
    let pca_radius = 4.0 * h;
    let mut normals = Vec::with_capacity(pts.len());
    for p in &pts {
        let near: Vec<Point> = pts
            .iter()
            .filter(|q| d2(&q.point, &p.point) <= pca_radius * pca_radius)
            .map(|q| q.point)
            .collect();
        let mut n = if near.len() > dim { pca_normal(&near, dim) } else { p.normal.unwrap_or(reference) };
        let orient = p.normal.unwrap_or(reference);
        if (0..3).map(|k| n[k] * orient[k]).sum::<f64>() < 0.0 {
            n = n.map(|v| -v);
        }
        normals.push(n);
    }
    let mut mean = [0.0; 3];
    for n in &normals {
        for k in 0..3 {
            mean[k] += n[k];
        }
    }
    let mn = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mean = if mn > 0.0 { mean.map(|v| v / mn) } else { mean };
    let centroid = {
        let mut c = [0.0; 3];
        for p in &pts {
            for k in 0..3 {
                c[k] += p.point[k] / pts.len() as f64;
            }
        }
        c
    };
    let samples: Vec<GraphSample> = pts
        .iter()
        .zip(&normals)
        .map(|(p, n)| GraphSample {
            point: p.point,
            normal: *n,
            height: (0..3).map(|k| (p.point[k] - centroid[k]) * mean[k]).sum(),
        })
        .collect();

    let edges: Vec<f64> = (0..=levels).map(|k| window / 2f64.powi(k as i32)).collect();
    let mut acc = vec![(0.0, 0.0, 0usize); levels];
    let mut max_var: f64 = 0.0;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let d = d2(&samples[i].point, &samples[j].point).sqrt();
            let dn = (0..3).map(|k| (samples[i].normal[k] - samples[j].normal[k]).powi(2)).sum::<f64>().sqrt();
            max_var = max_var.max(dn);
            if let Some(b) = (0..levels).find(|&b| d <= edges[b] && d > edges[b + 1]) {
                acc[b].0 += d;
                acc[b].1 += dn;
                acc[b].2 += 1;
            }
        }
    }
    let bins: Vec<HolderBin> = acc
        .iter()
        .filter(|a| a.2 >= 3)
        .map(|&(d, dn, c)| HolderBin { mean_distance: d / c as f64, mean_normal_change: dn / c as f64, pairs: c })
        .collect();
    let flat = max_var < FLAT_TOLERANCE;
    let holder_fit = if flat {
        None
    } else {
        let usable: Vec<&HolderBin> = bins.iter().filter(|b| b.mean_normal_change > 0.0).collect();
        if usable.len() >= 2 {
            let x: Vec<f64> = usable.iter().map(|b| b.mean_distance.ln()).collect();
            let y: Vec<f64> = usable.iter().map(|b| b.mean_normal_change.ln()).collect();
            fit_line(&x, &y).ok()
        } else {
            None
        }
    };
    Ok(GraphFit {
        samples,
        mean_normal: mean,
        bins,
        beta_hat: holder_fit.map(|f| f.slope),
        holder_fit,
        max_normal_variation: max_var,
        flat,
    })
}

/// Eigenvector of the smallest covariance eigenvalue.
fn pca_normal(points: &[Point], dim: usize) -> [f64; 3] {
    let n = points.len() as f64;
    let mut c = [0.0; 3];
    for p in points {
        for k in 0..dim {
            c[k] += p[k] / n;
        }
    }
    let mut cov = Matrix3::<f64>::zeros();
    for p in points {
        for a in 0..dim {
            for b in 0..dim {
                cov[(a, b)] += (p[a] - c[a]) * (p[b] - c[b]);
            }
        }
    }
    let eig = SymmetricEigen::new(cov.fixed_view::<3, 3>(0, 0).into_owned());
    // unused axes carry zero variance; restrict the search to the active block
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for k in 0..3 {
        let v = eig.eigenvectors.column(k);
        let active: f64 = (0..dim).map(|a| v[a] * v[a]).sum();
        if active > 0.5 && eig.eigenvalues[k] < best_val {
            best_val = eig.eigenvalues[k];
            best = k;
        }
    }
    let v = eig.eigenvectors.column(best);
    let mut out = [0.0; 3];
    for a in 0..dim {
        out[a] = v[a];
    }
    let nrm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    out.map(|x| x / nrm)
}
