use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::polar::PolarGrid;
use crate::blowup::golden;
use crate::{Error, Result};

/// Components of the perturbation families.
pub const FAMILY_COMPONENTS: usize = 2;
const COARSE_NORMALS: usize = 720;
const REFINE_ROUNDS: usize = 2;

/// Angular samples `g(θ_j)`, `θ_j = 2πj/n`, of an `ℝᵐ`-valued function on
/// `∂B₁`, with its distance to the half-plane solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousDatum {
    m: usize,
    samples: Vec<f64>,
    /// `inf_{h ∈ ℍ} ‖c − h‖_{W¹·²(B₁)} + ‖c − h‖_{L^∞(B₁)}` for `c = |x|² g(x/|x|)`.
    pub delta_to_h: f64,
}

impl HomogeneousDatum {
    /// Samples are interleaved, `n_theta × m`; the sampling is periodic, so
    /// `θ = 2π` is not repeated.
    pub fn from_samples(m: usize, samples: Vec<f64>) -> Result<Self> {
        if m == 0 || samples.is_empty() || samples.len() % m != 0 {
            return Err(Error::InvalidArgument("angular samples have the wrong shape".into()));
        }
        if samples.len() / m < 8 {
            return Err(Error::InvalidArgument("at least 8 angular samples are required".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("angular samples must be finite".into()));
        }
        let delta_to_h = distance_to_half_planes(m, &samples).0;
        Ok(Self { m, samples, delta_to_h })
    }

    pub fn from_fn<F: Fn(f64, &mut [f64])>(n_theta: usize, m: usize, f: F) -> Result<Self> {
        let mut samples = vec![0.0; n_theta * m];
        for (j, out) in samples.chunks_mut(m.max(1)).enumerate() {
            f(2.0 * PI * j as f64 / n_theta as f64, out);
        }
        Self::from_samples(m, samples)
    }

    pub fn components(&self) -> usize {
        self.m
    }

    pub fn n_theta(&self) -> usize {
        self.samples.len() / self.m
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn at(&self, j: usize) -> &[f64] {
        &self.samples[j * self.m..(j + 1) * self.m]
    }
}

/// Nodal values on a [`PolarGrid`], interleaved `node × m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarField {
    pub m: usize,
    pub values: Vec<f64>,
}

impl PolarField {
    pub fn node(&self, node: usize) -> &[f64] {
        &self.values[node * self.m..(node + 1) * self.m]
    }
}

/// `c(r, θ) = r² g(θ)` at every node.
pub fn homogeneous_extension(grid: &PolarGrid, datum: &HomogeneousDatum) -> Result<PolarField> {
    if datum.n_theta() != grid.n_theta() {
        return Err(Error::InvalidArgument(format!(
            "datum has {} angles, grid has {}",
            datum.n_theta(),
            grid.n_theta()
        )));
    }
    let m = datum.components();
    let mut values = vec![0.0; grid.node_count() * m];
    for node in 1..grid.node_count() {
        let (r, _) = grid.polar(node);
        let j = (node - 1) % grid.n_theta();
        for (o, g) in values[node * m..(node + 1) * m].iter_mut().zip(datum.at(j)) {
            *o = r * r * g;
        }
    }
    Ok(PolarField { m, values })
}

fn profile(theta: f64, normal_angle: f64) -> f64 {
    let s = (theta - normal_angle).cos().max(0.0);
    0.5 * s * s
}

/// Distance of `|x|² g` to ℍ in `W¹·² + L^∞` and the minimizing normal angle.
///
/// For `d(θ) = g − g_h`, `‖r²d‖²_{L²} = ∫|d|²/6` and
/// `‖∇(r²d)‖²_{L²} = ∫|d|² + ∫|d'|²/4`. For each normal the direction `e`
/// is the `L²(∂B₁)` optimum.
fn distance_to_half_planes(m: usize, samples: &[f64]) -> (f64, f64) {
    let n = samples.len() / m;
    let dt = 2.0 * PI / n as f64;
    let thetas: Vec<f64> = (0..n).map(|j| j as f64 * dt).collect();
    let objective = |phi: f64| -> f64 {
        let p: Vec<f64> = thetas.iter().map(|&t| profile(t, phi)).collect();
        let mut e = vec![0.0; m];
        for (j, pj) in p.iter().enumerate() {
            for k in 0..m {
                e[k] += pj * samples[j * m + k];
            }
        }
        let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            e.iter_mut().for_each(|x| *x /= norm);
        } else {
            e[0] = 1.0;
        }
        let d = |j: usize, k: usize| samples[j * m + k] - p[j] * e[k];
        let (mut l2, mut dl2, mut sup) = (0.0, 0.0, 0.0f64);
        for j in 0..n {
            let (next, prev) = ((j + 1) % n, (j + n - 1) % n);
            let mut sq = 0.0;
            for k in 0..m {
                let v = d(j, k);
                sq += v * v;
                let dv = (d(next, k) - d(prev, k)) / (2.0 * dt);
                dl2 += dv * dv;
            }
            l2 += sq;
            sup = sup.max(sq.sqrt());
        }
        ((1.0 / 6.0 + 1.0) * l2 * dt + 0.25 * dl2 * dt).sqrt() + sup
    };
    let step = 2.0 * PI / COARSE_NORMALS as f64;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..COARSE_NORMALS {
        let phi = k as f64 * step;
        let v = objective(phi);
        if v < best.0 {
            best = (v, phi);
        }
    }
    let mut width = step;
    for _ in 0..REFINE_ROUNDS {
        let phi = golden(&objective, best.1 - width, best.1 + width);
        let v = objective(phi);
        if v < best.0 {
            best = (v, phi);
        }
        width *= 0.1;
    }
    (best.0, best.1.rem_euclid(2.0 * PI))
}

/// Named perturbations of the canonical half-plane trace
/// `g_h(θ) = ½ max(sin θ, 0)² e¹`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationMode {
    /// `(1 + δ) g_h`.
    Amplitude,
    /// `g_h` with the normal turned by `δ`.
    Rotation,
    /// `g_h + ½δ sin²θ e²`.
    SecondComponent,
    /// `g_h + δ cos(kθ) e¹`.
    AngularMode(u32),
}

impl fmt::Display for PerturbationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Amplitude => write!(f, "amplitude"),
            Self::Rotation => write!(f, "rotation"),
            Self::SecondComponent => write!(f, "second_component"),
            Self::AngularMode(k) => write!(f, "angular_mode_{k}"),
        }
    }
}

impl FromStr for PerturbationMode {
    type Err = Error;

    /// Accepts the display names; `angular_mode_k`, `angular_mode:k` and
    /// `angular_mode k` are all read as mode `k ≥ 1`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t {
            "amplitude" => return Ok(Self::Amplitude),
            "rotation" => return Ok(Self::Rotation),
            "second_component" => return Ok(Self::SecondComponent),
            _ => {}
        }
        t.strip_prefix("angular_mode")
            .map(|rest| rest.trim_start_matches(['_', ':', ' ']))
            .and_then(|k| k.parse::<u32>().ok())
            .filter(|&k| k >= 1)
            .map(Self::AngularMode)
            .ok_or_else(|| Error::InvalidMode(s.to_string()))
    }
}

/// Datum of a named family at size `delta ∈ [0, 0.5]` on `n_theta` angles.
pub fn perturbation_family(mode: PerturbationMode, delta: f64, n_theta: usize) -> Result<HomogeneousDatum> {
    if !(0.0..=0.5).contains(&delta) {
        return Err(Error::InvalidArgument(format!("perturbation size {delta} is outside [0, 0.5]")));
    }
    if let PerturbationMode::AngularMode(0) = mode {
        return Err(Error::InvalidMode(mode.to_string()));
    }
    let base = |t: f64| 0.5 * t.sin().max(0.0).powi(2);
    HomogeneousDatum::from_fn(n_theta, FAMILY_COMPONENTS, |t, o| {
        o.fill(0.0);
        match mode {
            PerturbationMode::Amplitude => o[0] = (1.0 + delta) * base(t),
            PerturbationMode::Rotation => o[0] = profile(t, 0.5 * PI + delta),
            PerturbationMode::SecondComponent => {
                o[0] = base(t);
                o[1] = 0.5 * delta * t.sin().powi(2);
            }
            PerturbationMode::AngularMode(k) => o[0] = base(t) + delta * (k as f64 * t).cos(),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extension_is_two_homogeneous() {
        let grid = PolarGrid::new(17, 64).unwrap();
        let d = HomogeneousDatum::from_fn(64, 2, |t, o| {
            o[0] = 0.5 * t.sin().max(0.0).powi(2);
            o[1] = 0.1 * (2.0 * t).sin();
        })
        .unwrap();
        let c = homogeneous_extension(&grid, &d).unwrap();
        for ring in 1..17 {
            let r = grid.radius(ring);
            for j in [0, 13, 40] {
                for k in 0..2 {
                    let got = c.node(grid.node(ring, j))[k];
                    assert!((got - r * r * d.at(j)[k]).abs() <= 1e-15);
                }
            }
        }
        assert_eq!(c.node(0), &[0.0, 0.0]);
        let zero = HomogeneousDatum::from_samples(2, vec![0.0; 128]).unwrap();
        assert!(homogeneous_extension(&grid, &zero).unwrap().values.iter().all(|&v| v == 0.0));
        let wrong = HomogeneousDatum::from_samples(2, vec![0.0; 256]).unwrap();
        assert!(homogeneous_extension(&grid, &wrong).is_err());
    }

    #[test]
    fn modes_parse_and_print() {
        for mode in [
            PerturbationMode::Amplitude,
            PerturbationMode::Rotation,
            PerturbationMode::SecondComponent,
            PerturbationMode::AngularMode(3),
        ] {
            assert_eq!(mode.to_string().parse::<PerturbationMode>().unwrap(), mode);
        }
        assert_eq!("angular_mode:2".parse::<PerturbationMode>().unwrap(), PerturbationMode::AngularMode(2));
        for bad in ["spiral", "angular_mode_0", "angular_mode"] {
            assert!(matches!(bad.parse::<PerturbationMode>(), Err(Error::InvalidMode(_))));
        }
        assert!(matches!(
            perturbation_family(PerturbationMode::AngularMode(0), 0.1, 64),
            Err(Error::InvalidMode(_))
        ));
        assert!(perturbation_family(PerturbationMode::Amplitude, 0.6, 64).is_err());
    }

    #[test]
    fn zero_amplitude_is_the_half_plane_trace() {
        let d = perturbation_family(PerturbationMode::Amplitude, 0.0, 128).unwrap();
        for j in 0..128 {
            let t = 2.0 * PI * j as f64 / 128.0;
            assert_eq!(d.at(j), &[0.5 * t.sin().max(0.0).powi(2), 0.0]);
        }
        assert!(d.delta_to_h < 1e-6, "{}", d.delta_to_h);
    }

    #[test]
    fn rotations_stay_in_the_half_plane_set() {
        for delta in [0.02, 0.1, 0.37] {
            let d = perturbation_family(PerturbationMode::Rotation, delta, 256).unwrap();
            assert!(d.delta_to_h < 1e-6, "{delta}: {}", d.delta_to_h);
        }
    }

    #[test]
    fn perturbations_have_positive_distance() {
        let d = perturbation_family(PerturbationMode::AngularMode(3), 0.1, 256).unwrap();
        assert!(d.delta_to_h > 0.01, "{}", d.delta_to_h);
        // amplitude: the nearest element is h itself, at distance δ‖h‖
        let a = perturbation_family(PerturbationMode::Amplitude, 0.1, 256).unwrap();
        let h = perturbation_family(PerturbationMode::Amplitude, 0.0, 256).unwrap();
        let dist = {
            let (l2, d2, sup) = (0..256).fold((0.0, 0.0, 0.0f64), |(l2, d2, sup), j| {
                let dt = 2.0 * PI / 256.0;
                let g = 0.1 * h.at(j)[0];
                let dg = 0.1 * (h.at((j + 1) % 256)[0] - h.at((j + 255) % 256)[0]) / (2.0 * dt);
                (l2 + g * g * dt, d2 + dg * dg * dt, sup.max(g.abs()))
            });
            (7.0 / 6.0 * l2 + 0.25 * d2).sqrt() + sup
        };
        assert!(a.delta_to_h <= dist + 1e-12 && a.delta_to_h > 0.5 * dist, "{} {}", a.delta_to_h, dist);
    }
}
