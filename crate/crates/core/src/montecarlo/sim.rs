use super::rng::PathRng;
use crate::error::{Error, Result};
use crate::models::{G2Params, G2State};

/// Correlation magnitude above which two-factor simulation is refused.
pub const MAX_ABS_RHO: f64 = 0.9999;

/// Simulation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_paths: usize,
    /// Target time step in years.
    pub step: f64,
    pub horizon: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(n_paths: usize, step: f64, horizon: f64, seed: u64) -> Result<Self> {
        if n_paths == 0 {
            return Err(Error::Precondition("n_paths must be at least 1".into()));
        }
        if !(step > 0.0 && step <= horizon) {
            return Err(Error::Precondition(format!(
                "need 0 < step <= horizon (got step {step}, horizon {horizon})"
            )));
        }
        Ok(SimConfig { n_paths, step, horizon, seed })
    }
}

/// Exact one-step update of an Ornstein-Uhlenbeck process over a fixed `dt`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct OuStep {
    decay: f64,
    drift: f64,
    sd: f64,
}

impl OuStep {
    pub(crate) fn new(a: f64, mean_level: f64, sigma: f64, dt: f64) -> Self {
        let decay = (-a * dt).exp();
        OuStep {
            decay,
            drift: -mean_level * (-a * dt).exp_m1(),
            sd: sigma * (-(-2.0 * a * dt).exp_m1() / (2.0 * a)).sqrt(),
        }
    }

    #[inline]
    pub(crate) fn mean(&self, x: f64) -> f64 {
        x * self.decay + self.drift
    }

    #[inline]
    pub(crate) fn advance(&self, x: f64, z: f64) -> f64 {
        self.mean(x) + self.sd * z
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.first() != Some(&0.0) {
        return Err(Error::Precondition("simulation grid must start at 0".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Ordering("simulation grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Ornstein-Uhlenbeck path `dx = a(m - x)dt + σ dW` sampled exactly on `grid`.
pub fn simulate_ou(
    a: f64,
    mean_level: f64,
    sigma: f64,
    x0: f64,
    grid: &[f64],
    rng: &mut PathRng,
) -> Result<Vec<f64>> {
    if !(a > 0.0) || !(sigma >= 0.0) {
        return Err(Error::Domain(format!("need a > 0 and sigma >= 0 (got {a}, {sigma})")));
    }
    check_grid(grid)?;
    let mut path = Vec::with_capacity(grid.len());
    let mut x = x0;
    path.push(x);
    for w in grid.windows(2) {
        let step = OuStep::new(a, mean_level, sigma, w[1] - w[0]);
        x = step.advance(x, rng.normal());
        path.push(x);
    }
    Ok(path)
}

/// Two-factor path sampled exactly on `grid` (times relative to `state0.t`).
pub fn simulate_g2(
    params: &G2Params,
    state0: &G2State,
    grid: &[f64],
    rng: &mut PathRng,
) -> Result<Vec<G2State>> {
    if params.rho.abs() > MAX_ABS_RHO {
        return Err(Error::Boundary(format!(
            "|rho| = {} exceeds {MAX_ABS_RHO}",
            params.rho.abs()
        )));
    }
    check_grid(grid)?;
    let mut path = Vec::with_capacity(grid.len());
    let mut s = *state0;
    path.push(s);
    for w in grid.windows(2) {
        let dt = w[1] - w[0];
        let law = params.transition(&s, dt)?;
        let l = law.cholesky()?;
        let (z1, z2) = (rng.normal(), rng.normal());
        s = G2State::new(
            law.mean[0] + l[0][0] * z1,
            law.mean[1] + l[1][0] * z1 + l[1][1] * z2,
            s.t + dt,
        );
        path.push(s);
    }
    Ok(path)
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_paths: usize,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = pairwise_sum(samples) / n as f64;
        let stderr = if n > 1 {
            let dev: Vec<f64> = samples.iter().map(|v| (v - mean) * (v - mean)).collect();
            (pairwise_sum(&dev) / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        McEstimate { value: mean, stderr, n_paths: n }
    }

    /// `|value - reference|` in units of the standard error.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = (self.value - reference).abs();
        if self.stderr == 0.0 {
            if diff == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            diff / self.stderr
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::rng::StreamKey;
    use super::*;
    use crate::models::VasicekParams;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..=n).map(|i| i as f64 * dt).collect()
    }

    #[test]
    fn zero_vol_at_level_is_constant() {
        let mut rng = StreamKey::new(1).path(0);
        let path = simulate_ou(0.8, 0.05, 0.0, 0.05, &grid(50, 0.1), &mut rng).unwrap();
        assert!(path.iter().all(|&x| (x - 0.05).abs() < 1e-16));
    }

    #[test]
    fn zero_vol_follows_mean_curve() {
        let mut rng = StreamKey::new(1).path(0);
        let g = grid(20, 0.25);
        let path = simulate_ou(0.5, 0.03, 0.0, 0.10, &g, &mut rng).unwrap();
        for (x, t) in path.iter().zip(&g) {
            let expected = 0.03 + 0.07 * (-0.5 * t).exp();
            assert!((x - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let g = grid(100, 0.01);
        let a = simulate_ou(1.0, 0.02, 0.1, 0.0, &g, &mut StreamKey::new(42).path(0)).unwrap();
        let b = simulate_ou(1.0, 0.02, 0.1, 0.0, &g, &mut StreamKey::new(42).path(0)).unwrap();
        let bytes = |v: &[f64]| v.iter().flat_map(|x| x.to_le_bytes()).collect::<Vec<u8>>();
        assert_eq!(bytes(&a), bytes(&b));
    }

    #[test]
    fn bad_grid_rejected() {
        let mut rng = StreamKey::new(1).path(0);
        assert!(simulate_ou(1.0, 0.0, 0.1, 0.0, &[0.1, 0.2], &mut rng).is_err());
        assert!(simulate_ou(1.0, 0.0, 0.1, 0.0, &[0.0, 0.2, 0.2], &mut rng).is_err());
        assert!(simulate_ou(0.0, 0.0, 0.1, 0.0, &[0.0, 0.2], &mut rng).is_err());
    }

    #[test]
    fn terminal_moments_match_transition() {
        let p = VasicekParams::new(1.7051, 0.0937, 0.3721).unwrap();
        let key = StreamKey::new(11);
        let g = grid(10, 0.1);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|i| *simulate_ou(p.a, p.b, p.sigma, 0.05, &g, &mut key.path(i)).unwrap().last().unwrap())
            .collect();
        let law = p.transition(0.05, 1.0).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se_mean = (law.variance / n as f64).sqrt();
        let se_var = law.variance * (2.0 / (n - 1) as f64).sqrt();
        assert!((mean - law.mean).abs() < 4.0 * se_mean);
        assert!((var - law.variance).abs() < 4.0 * se_var);
    }

    #[test]
    fn degenerate_second_factor_decays() {
        let p = G2Params { a: 0.13, b: 0.35, sigma: 0.2, eta: 0.0, rho: 0.0 };
        let g = grid(40, 0.1);
        let path = simulate_g2(&p, &G2State::new(0.0, 0.2, 0.0), &g, &mut StreamKey::new(3).path(0)).unwrap();
        for (s, t) in path.iter().zip(&g) {
            assert!((s.y - 0.2 * (-0.35 * t).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn uncorrelated_factors_are_independent() {
        let p = G2Params::new(0.13, 0.35, 0.2, 0.3, 0.0).unwrap();
        let g = grid(5, 0.2);
        let key = StreamKey::new(5);
        let n = 50_000;
        let ends: Vec<G2State> = (0..n)
            .map(|i| *simulate_g2(&p, &G2State::new(0.0, 0.0, 0.0), &g, &mut key.path(i)).unwrap().last().unwrap())
            .collect();
        let mx = ends.iter().map(|s| s.x).sum::<f64>() / n as f64;
        let my = ends.iter().map(|s| s.y).sum::<f64>() / n as f64;
        let sxy = ends.iter().map(|s| (s.x - mx) * (s.y - my)).sum::<f64>();
        let sxx = ends.iter().map(|s| (s.x - mx).powi(2)).sum::<f64>();
        let syy = ends.iter().map(|s| (s.y - my).powi(2)).sum::<f64>();
        let c = sxy / (sxx * syy).sqrt();
        assert!(c.abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn extreme_correlation_rejected() {
        let p = G2Params::new(0.13, 0.35, 0.2, 0.3, -1.0).unwrap();
        let r = simulate_g2(&p, &G2State::new(0.0, 0.0, 0.0), &grid(2, 0.1), &mut StreamKey::new(1).path(0));
        assert!(matches!(r, Err(Error::Boundary(_))));
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let xs: Vec<f64> = (0..10_000).map(|i| (i as f64).sin()).collect();
        assert!((pairwise_sum(&xs) - xs.iter().sum::<f64>()).abs() < 1e-10);
    }

    #[test]
    fn estimate_of_constant_has_zero_error() {
        let est = McEstimate::from_samples(&[0.5; 1000]);
        assert_eq!(est.value, 0.5);
        assert_eq!(est.stderr, 0.0);
    }
}
