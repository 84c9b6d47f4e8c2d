use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{clutter_metric, LayoutError, Vec2};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct LayoutParams {
    pub ideal_edge_length: f64,
    pub repulsion_constant: f64,
    pub iteration_count: u32,
    pub initial_temperature: f64,
    pub cooling_factor: f64,
    /// Only used to pick directions for exactly coincident nodes.
    pub random_seed: u64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            ideal_edge_length: 0.3,
            repulsion_constant: 1.0,
            iteration_count: 200,
            initial_temperature: 0.1,
            cooling_factor: 0.95,
            random_seed: 0,
        }
    }
}

impl LayoutParams {
    pub fn validate(&self) -> Result<(), LayoutError> {
        let bad = |m: &str| Err(LayoutError::InvalidParams(m.to_owned()));
        if !(self.cooling_factor > 0.0 && self.cooling_factor <= 1.0) {
            return bad("coolingFactor must be in (0, 1]");
        }
        if !(self.ideal_edge_length > 0.0 && self.ideal_edge_length.is_finite()) {
            return bad("idealEdgeLength must be positive");
        }
        if !(self.repulsion_constant >= 0.0 && self.repulsion_constant.is_finite()) {
            return bad("repulsionConstant must be non-negative");
        }
        if !(self.initial_temperature >= 0.0 && self.initial_temperature.is_finite()) {
            return bad("initialTemperature must be non-negative");
        }
        Ok(())
    }
}

const COINCIDENT: f64 = 1e-9;

/// Spring-embedder refinement (Fruchterman-Reingold forces with a cooling
/// displacement cap). Returns the lowest-clutter iterate, so the result is
/// never more cluttered than the input.
pub fn force_refine(
    positions: &[Vec2],
    edges: &[(usize, usize)],
    params: &LayoutParams,
) -> Result<Vec<Vec2>, LayoutError> {
    params.validate()?;
    if positions.iter().flatten().any(|c| !c.is_finite()) {
        return Err(LayoutError::NonFinite);
    }
    if let Some(&(a, b)) = edges.iter().find(|(a, b)| *a >= positions.len() || *b >= positions.len()) {
        return Err(LayoutError::BadEdge(a, b));
    }
    let edges: Vec<(usize, usize)> = edges.iter().copied().filter(|(a, b)| a != b).collect();

    let k = params.ideal_edge_length;
    let mut rng = ChaCha8Rng::seed_from_u64(params.random_seed);
    let mut current = positions.to_vec();
    let mut best = current.clone();
    let mut best_clutter = clutter_metric(&current, &edges);
    let mut temperature = params.initial_temperature;
    let mut disp = vec![[0.0f64; 2]; current.len()];

    for _ in 0..params.iteration_count {
        disp.iter_mut().for_each(|d| *d = [0.0, 0.0]);

        for i in 0..current.len() {
            for j in i + 1..current.len() {
                let mut dx = current[i][0] - current[j][0];
                let mut dy = current[i][1] - current[j][1];
                let mut dist = dx.hypot(dy);
                if dist < COINCIDENT {
                    let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    (dx, dy, dist) = (angle.cos() * COINCIDENT, angle.sin() * COINCIDENT, COINCIDENT);
                }
                let force = params.repulsion_constant * k * k / dist;
                let (fx, fy) = (dx / dist * force, dy / dist * force);
                disp[i][0] += fx;
                disp[i][1] += fy;
                disp[j][0] -= fx;
                disp[j][1] -= fy;
            }
        }

        for &(a, b) in &edges {
            let dx = current[a][0] - current[b][0];
            let dy = current[a][1] - current[b][1];
            let dist = dx.hypot(dy);
            if dist < COINCIDENT {
                continue;
            }
            let force = dist * dist / k;
            let (fx, fy) = (dx / dist * force, dy / dist * force);
            disp[a][0] -= fx;
            disp[a][1] -= fy;
            disp[b][0] += fx;
            disp[b][1] += fy;
        }

        for (p, d) in current.iter_mut().zip(&disp) {
            let len = d[0].hypot(d[1]);
            if len > 0.0 && len.is_finite() {
                let step = len.min(temperature);
                p[0] += d[0] / len * step;
                p[1] += d[1] / len * step;
            }
        }
        temperature *= params.cooling_factor;

        let clutter = clutter_metric(&current, &edges);
        if clutter <= best_clutter {
            best_clutter = clutter;
            best.clone_from(&current);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_iterations_is_identity() {
        let p = vec![[0.0, 0.0], [0.01, 0.0], [5.0, 5.0]];
        let params = LayoutParams { iteration_count: 0, ..Default::default() };
        assert_eq!(force_refine(&p, &[(0, 1)], &params).unwrap(), p);
    }

    #[test]
    fn coincident_connected_nodes_separate() {
        let p = vec![[1.0, 1.0], [1.0, 1.0]];
        let out = force_refine(&p, &[(0, 1)], &LayoutParams::default()).unwrap();
        let d = (out[0][0] - out[1][0]).hypot(out[0][1] - out[1][1]);
        assert!(d > 0.0);
        assert!(d > crate::layout::MIN_SEPARATION, "{d}");
    }

    #[test]
    fn invalid_params_rejected() {
        let p = vec![[0.0, 0.0]];
        for params in [
            LayoutParams { cooling_factor: 0.0, ..Default::default() },
            LayoutParams { cooling_factor: 1.5, ..Default::default() },
            LayoutParams { ideal_edge_length: 0.0, ..Default::default() },
        ] {
            assert!(matches!(force_refine(&p, &[], &params), Err(LayoutError::InvalidParams(_))));
        }
        assert_eq!(force_refine(&p, &[(0, 3)], &LayoutParams::default()), Err(LayoutError::BadEdge(0, 3)));
        assert_eq!(force_refine(&[[f64::NAN, 0.0]], &[], &LayoutParams::default()), Err(LayoutError::NonFinite));
    }

    #[test]
    fn fixed_seed_is_bitwise_reproducible() {
        let p: Vec<Vec2> = (0..12).map(|i| [(i % 4) as f64 * 0.05, (i / 4) as f64 * 0.05]).collect();
        let e: Vec<(usize, usize)> = (0..11).map(|i| (i, i + 1)).collect();
        let a = force_refine(&p, &e, &LayoutParams::default()).unwrap();
        let b = force_refine(&p, &e, &LayoutParams::default()).unwrap();
        let bits = |v: &[Vec2]| v.iter().flat_map(|p| [p[0].to_bits(), p[1].to_bits()]).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }
}
