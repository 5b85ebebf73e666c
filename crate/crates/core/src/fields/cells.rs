use super::field::VectorField;
use super::grid::{Ball, Grid};
use crate::sum::pairwise_sum_fn;

/// Sub-rows per transverse axis in cells cut by the sphere.
const SUB_ROWS: usize = 8;

/// Linear quadrature rule `∫ f ≈ Σ wᵢ f(xᵢ)` over grid nodes, for the whole
/// box or a contained ball.
///
/// Per cell the integrand is the multilinear interpolant of the nodal values
/// minus the per-axis term `½ t(1−t) δ²_a f`, which makes the rule exact for
/// quadratics. Cells fully inside the ball use the closed-form cell mean.
/// Cells cut by the sphere are split into sub-rows along the last axis
/// (midpoint rule across rows) and each row is integrated exactly over
/// its chord inside the ball.
#[derive(Debug, Clone)]
pub struct NodalRule {
    nodes: Vec<usize>,
    weights: Vec<f64>,
}

impl NodalRule {
    pub fn new(grid: &Grid, ball: Option<&Ball>) -> Self {
        let dim = grid.dim();
        let counts = grid.counts();
        let h = grid.spacing();
        let vol = grid.cell_volume();
        let corners = 1usize << dim;

        // cell index range meeting the ball, node box with one node of margin
        let mut clo = [0usize; 3];
        let mut chi = [1usize; 3];
        let mut blo = [0usize; 3];
        let mut bn = [1usize; 3];
        for a in 0..dim {
            chi[a] = counts[a] - 1;
            if let Some(b) = ball {
                let l = ((b.center[a] - b.radius - grid.lo()[a]) / h[a]).floor().max(0.0) as usize;
                let u = ((b.center[a] + b.radius - grid.lo()[a]) / h[a]).ceil().max(0.0) as usize;
                clo[a] = l.min(counts[a] - 2);
                chi[a] = u.min(counts[a] - 1).max(clo[a] + 1);
            }
            blo[a] = clo[a].saturating_sub(1);
            let bhi = (chi[a] + 1).min(counts[a] - 1);
            bn[a] = bhi - blo[a] + 1;
        }
        let bstride = [bn[1] * bn[2], bn[2], 1];
        let box_len = bn[0] * bn[1] * bn[2];
        let to_box = |idx: [usize; 3]| -> usize {
            (idx[0] - blo[0]) * bstride[0] + (idx[1] - blo[1]) * bstride[1] + (idx[2] - blo[2]) * bstride[2]
        };

        let mut value_w = vec![0.0; box_len];
        // curvature weights: shared part from full cells, per-axis part from cut cells
        let mut full_w = vec![0.0; box_len];
        let mut cut_w: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];

        let mut corner = [0usize; 3];
        let ncell: usize = (0..dim).map(|a| chi[a] - clo[a]).product();
        for c in 0..ncell {
            let mut rest = c;
            for a in (0..dim).rev() {
                let w = chi[a] - clo[a];
                corner[a] = clo[a] + rest % w;
                rest /= w;
            }
            let state = match ball {
                None => CellCut::Inside,
                Some(b) => classify_cell(grid, corner, b),
            };
            match state {
                CellCut::Outside => {}
                CellCut::Inside => {
                    for k in 0..corners {
                        let bi = to_box(corner_of(corner, k, dim));
                        value_w[bi] += vol / corners as f64;
                        full_w[bi] += vol / (12.0 * corners as f64);
                    }
                }
                CellCut::Cut => {
                    let b = ball.unwrap();
                    let mut val = [0.0; 8];
                    let mut curv = [[0.0; 3]; 8];
                    cut_cell_weights(grid, corner, b, vol, &mut val, &mut curv);
                    for k in 0..corners {
                        if val[k] == 0.0 {
                            continue;
                        }
                        let bi = to_box(corner_of(corner, k, dim));
                        value_w[bi] += val[k];
                        for a in 0..dim {
                            cut_w[a].push((bi, curv[k][a]));
                        }
                    }
                }
            }
        }

        // distribute curvature weights through clamped second differences
        let mut weights = value_w;
        let box_idx = |bi: usize| -> [usize; 3] {
            [blo[0] + bi / bstride[0], blo[1] + (bi / bstride[1]) % bn[1], blo[2] + bi % bn[2]]
        };
        let apply = |weights: &mut [f64], bi: usize, a: usize, kappa: f64| {
            let idx = box_idx(bi);
            let mut center = idx;
            if idx[a] == 0 {
                center[a] = 1;
            } else if idx[a] + 1 == counts[a] {
                center[a] = idx[a] - 1;
            }
            let mut up = center;
            up[a] += 1;
            let mut down = center;
            down[a] -= 1;
            weights[to_box(up)] -= kappa;
            weights[to_box(center)] += 2.0 * kappa;
            weights[to_box(down)] -= kappa;
        };
        for bi in 0..box_len {
            let k = full_w[bi];
            if k != 0.0 {
                for a in 0..dim {
                    apply(&mut weights, bi, a, k);
                }
            }
        }
        for (a, list) in cut_w.iter().enumerate() {
            for &(bi, k) in list {
                apply(&mut weights, bi, a, k);
            }
        }

        let mut nodes = Vec::new();
        let mut ws = Vec::new();
        for (bi, &w) in weights.iter().enumerate() {
            if w != 0.0 {
                nodes.push(grid.index(box_idx(bi)));
                ws.push(w);
            }
        }
        Self { nodes, weights: ws }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ wᵢ f(nodeᵢ)` for `K` integrands, pairwise in node order.
    pub fn integrate<const K: usize, F: Fn(usize) -> [f64; K]>(&self, f: F) -> [f64; K] {
        pairwise_sum_fn(self.nodes.len(), &|i| {
            let v = f(self.nodes[i]);
            let w = self.weights[i];
            let mut out = [0.0; K];
            for k in 0..K {
                out[k] = w * v[k];
            }
            out
        })
    }

    pub fn integrate_scalar<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        self.integrate(|n| [f(n)])[0]
    }
}

/// Weights of a cut cell: `val[k]` multiplies corner `k`, `curv[k][a]`
/// multiplies the axis-`a` second difference at corner `k`.
fn cut_cell_weights(grid: &Grid, corner: [usize; 3], b: &Ball, vol: f64, val: &mut [f64; 8], curv: &mut [[f64; 3]; 8]) {
    // average over the axis integrated exactly, so the rule keeps the
    // symmetries of the grid under axis permutations
    let dim = grid.dim();
    let share = 1.0 / dim as f64;
    for exact in 0..dim {
        chord_weights(grid, corner, b, vol * share, exact, val, curv);
    }
}

/// Sub-rows across the axes other than `exact`, each integrated exactly
/// along `exact` over its chord inside the ball.
fn chord_weights(
    grid: &Grid,
    corner: [usize; 3],
    b: &Ball,
    vol: f64,
    exact: usize,
    val: &mut [f64; 8],
    curv: &mut [[f64; 3]; 8],
) {
    let dim = grid.dim();
    let h = grid.spacing();
    let others: Vec<usize> = (0..dim).filter(|&a| a != exact).collect();
    let transverse = SUB_ROWS.pow(others.len() as u32);
    let row_frac = 1.0 / transverse as f64;
    let lo_exact = grid.axis_coord(exact, corner[exact]);
    for row in 0..transverse {
        let mut rest = row;
        let mut t = [0.0; 3];
        let mut d2 = 0.0;
        for &a in &others {
            let k = rest % SUB_ROWS;
            rest /= SUB_ROWS;
            t[a] = (k as f64 + 0.5) / SUB_ROWS as f64;
            let x = grid.axis_coord(a, corner[a]) + h[a] * t[a];
            d2 += (x - b.center[a]).powi(2);
        }
        let r2 = b.radius * b.radius - d2;
        if r2 <= 0.0 {
            continue;
        }
        let half = r2.sqrt();
        let t0 = ((b.center[exact] - half - lo_exact) / h[exact]).clamp(0.0, 1.0);
        let t1 = ((b.center[exact] + half - lo_exact) / h[exact]).clamp(0.0, 1.0);
        if t1 <= t0 {
            continue;
        }
        // moments ∫ τ^p dτ over [t0, t1]
        let mom = |p: i32| (t1.powi(p + 1) - t0.powi(p + 1)) / (p + 1) as f64;
        let (m0, m1, m2, m3) = (mom(0), mom(1), mom(2), mom(3));
        for k in 0..(1usize << dim) {
            let mut w = vol * row_frac;
            for &a in &others {
                w *= if k >> a & 1 == 1 { t[a] } else { 1.0 - t[a] };
            }
            let upper = k >> exact & 1 == 1;
            // ∫ φ(τ) and ∫ ½τ(1−τ)φ(τ) with φ = τ or 1−τ
            let (lin, quad) = if upper {
                (m1, 0.5 * (m2 - m3))
            } else {
                (m0 - m1, 0.5 * (m1 - 2.0 * m2 + m3))
            };
            val[k] += w * lin;
            for &a in &others {
                curv[k][a] += 0.5 * t[a] * (1.0 - t[a]) * w * lin;
            }
            curv[k][exact] += w * quad;
        }
    }
}

fn corner_of(corner: [usize; 3], k: usize, dim: usize) -> [usize; 3] {
    let mut idx = corner;
    for a in 0..dim {
        if k >> a & 1 == 1 {
            idx[a] += 1;
        }
    }
    idx
}

enum CellCut {
    Inside,
    Outside,
    Cut,
}

fn classify_cell(grid: &Grid, corner: [usize; 3], ball: &Ball) -> CellCut {
    let h = grid.spacing();
    let mut near = 0.0;
    let mut far = 0.0;
    for a in 0..grid.dim() {
        let lo = grid.axis_coord(a, corner[a]);
        let hi = lo + h[a];
        let c = ball.center[a];
        let dn = if c < lo { lo - c } else if c > hi { c - hi } else { 0.0 };
        let df = (c - lo).abs().max((c - hi).abs());
        near += dn * dn;
        far += df * df;
    }
    let r2 = ball.radius * ball.radius;
    if far <= r2 {
        CellCut::Inside
    } else if near >= r2 {
        CellCut::Outside
    } else {
        CellCut::Cut
    }
}

/// Average of the `2ⁿ` corner values: the multilinear interpolant at the midpoint.
pub fn cell_value(field: &VectorField, corner_node: usize, out: &mut [f64]) {
    let grid = field.grid();
    let dim = grid.dim();
    let strides = grid.strides();
    let scale = 1.0 / (1usize << dim) as f64;
    out.iter_mut().for_each(|o| *o = 0.0);
    for c in 0..(1usize << dim) {
        let mut node = corner_node;
        for a in 0..dim {
            if c >> a & 1 == 1 {
                node += strides[a];
            }
        }
        for (o, v) in out.iter_mut().zip(field.node(node)) {
            *o += scale * v;
        }
    }
}

/// Gradient of the multilinear interpolant at the cell midpoint, `m × n` row-major.
pub fn cell_gradient(field: &VectorField, corner_node: usize, out: &mut [f64]) {
    let grid = field.grid();
    let dim = grid.dim();
    let m = field.components();
    let strides = grid.strides();
    let h = grid.spacing();
    let scale = 1.0 / (1usize << (dim - 1)) as f64;
    out.iter_mut().for_each(|o| *o = 0.0);
    for c in 0..(1usize << dim) {
        let mut node = corner_node;
        for a in 0..dim {
            if c >> a & 1 == 1 {
                node += strides[a];
            }
        }
        let v = field.node(node);
        for a in 0..dim {
            let sign = if c >> a & 1 == 1 { 1.0 } else { -1.0 };
            for k in 0..m {
                out[k * dim + a] += sign * scale * v[k] / h[a];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_volume() {
        let g = Grid::cube(2, -1.0, 1.0, 129).unwrap();
        let area = NodalRule::new(&g, Some(&Ball::unit())).integrate_scalar(|_| 1.0);
        assert!((area - PI).abs() < 2e-4, "{area}");
        let g3 = Grid::cube(3, -1.0, 1.0, 49).unwrap();
        let vol = NodalRule::new(&g3, Some(&Ball::new([0.1, 0.0, -0.1], 0.8))).integrate_scalar(|_| 1.0);
        let exact = 4.0 / 3.0 * PI * 0.8f64.powi(3);
        assert!((vol - exact).abs() / exact < 2e-3, "{vol} vs {exact}");
    }

    #[test]
    fn exact_for_quadratics_on_the_box() {
        let g = Grid::new(2, &[(0.0, 2.0), (-1.0, 1.0)], &[9, 7]).unwrap();
        let rule = NodalRule::new(&g, None);
        let q = |n: usize| {
            let x = g.coord(n);
            1.0 + x[0] - 2.0 * x[1] + 3.0 * x[0] * x[0] + x[0] * x[1] - x[1] * x[1]
        };
        // ∫₀² ∫₋₁¹ q = 4 + 4 + 0 + 16 + 0 − 4/3
        let exact = 4.0 + 4.0 + 16.0 - 4.0 / 3.0;
        assert!((rule.integrate_scalar(q) - exact).abs() < 1e-12);
    }

    #[test]
    fn second_moment_of_small_disc() {
        // ∫_{B_r} x₂² = π r⁴ / 4, resolved with only five cells per radius
        let g = Grid::cube(2, -1.0, 1.0, 257).unwrap();
        let h = g.h_max();
        let r = 5.0 * h;
        let rule = NodalRule::new(&g, Some(&Ball::new([0.0; 3], r)));
        let v = rule.integrate_scalar(|n| g.coord(n)[1].powi(2));
        let exact = PI * r.powi(4) / 4.0;
        assert!((v - exact).abs() / exact < 5e-3, "{}", (v - exact) / exact);
    }

    #[test]
    fn cell_gradient_of_linear_field() {
        let g = Grid::cube(3, 0.0, 1.0, 5).unwrap();
        let f = VectorField::from_fn(g.clone(), 1, |x, o| o[0] = 1.0 + 2.0 * x[0] - x[1] + 3.0 * x[2]);
        let mut grad = [0.0; 3];
        cell_gradient(&f, g.index([1, 2, 0]), &mut grad);
        assert!((grad[0] - 2.0).abs() < 1e-13 && (grad[1] + 1.0).abs() < 1e-13 && (grad[2] - 3.0).abs() < 1e-13);
        let mut v = [0.0];
        cell_value(&f, g.index([1, 2, 0]), &mut v);
        let c = [0.375, 0.625, 0.125];
        assert!((v[0] - (1.0 + 2.0 * c[0] - c[1] + 3.0 * c[2])).abs() < 1e-13);
    }
}
