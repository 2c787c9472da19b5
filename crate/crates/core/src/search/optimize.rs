use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gp::{expected_improvement, Gp, GpConfig};
use super::{ParamSpace, SearchError};

/// splitmix64 of `seed` mixed with `index`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub seed: u64,
    /// Snapped unit-cube coordinates.
    pub unit: Vec<f64>,
    /// Decoded parameter values, in `SearchTrace::names` order.
    pub params: Vec<f64>,
    pub value: f64,
    /// True for surrogate-guided trials.
    pub guided: bool,
    pub wall_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub method: String,
    pub names: Vec<String>,
    pub trials: Vec<Trial>,
}

impl SearchTrace {
    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    /// Best trial; the earliest wins ties.
    pub fn incumbent(&self) -> Option<&Trial> {
        self.trials.iter().fold(None, |best: Option<&Trial>, t| match best {
            Some(b) if b.value <= t.value => Some(b),
            _ => Some(t),
        })
    }

    /// Running minimum of the objective after each trial.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut m = f64::INFINITY;
        self.trials.iter().map(|t| {
            m = m.min(t.value);
            m
        })
        .collect()
    }

    /// One row per trial; `wall_s` is left out so the file is reproducible.
    pub fn to_csv(&self) -> String {
        let mut s = format!("trial,seed,guided,{},value\n", self.names.join(","));
        for t in &self.trials {
            let p: Vec<String> = t.params.iter().map(|v| format!("{v}")).collect();
            s.push_str(&format!("{},{},{},{},{}\n", t.index, t.seed, t.guided, p.join(","), t.value));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BayesConfig {
    pub init_points: usize,
    pub candidates: usize,
    pub gp: GpConfig,
}

impl Default for BayesConfig {
    fn default() -> Self {
        BayesConfig { init_points: 8, candidates: 2048, gp: GpConfig::default() }
    }
}

fn sample_unit(space: &ParamSpace, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let u: Vec<f64> = (0..space.len()).map(|_| rng.gen::<f64>()).collect();
    space.snap(&u)
}

fn run_trial<F>(space: &ParamSpace, unit: Vec<f64>, index: usize, seed: u64, guided: bool, objective: &mut F) -> Result<Trial, SearchError>
where
    F: FnMut(&[f64], u64) -> Result<f64, SearchError>,
{
    let params = space.decode(&unit);
    let trial_seed = derive_seed(seed, index as u64);
    let t0 = Instant::now();
    let value = objective(&params, trial_seed)?;
    if !value.is_finite() {
        return Err(SearchError::NonFiniteObjective(index));
    }
    Ok(Trial { index, seed: trial_seed, unit, params, value, guided, wall_s: t0.elapsed().as_secs_f64() })
}

/// `budget` independent uniform draws. The objective receives decoded values and a per-trial seed.
pub fn random_search<F>(space: &ParamSpace, budget: usize, mut objective: F, seed: u64) -> Result<SearchTrace, SearchError>
where
    F: FnMut(&[f64], u64) -> Result<f64, SearchError>,
{
    if budget == 0 {
        return Err(SearchError::ZeroBudget);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = SearchTrace { method: "random".into(), names: space.names.clone(), trials: Vec::with_capacity(budget) };
    for i in 0..budget {
        let unit = sample_unit(space, &mut rng);
        trace.trials.push(run_trial(space, unit, i, seed, false, &mut objective)?);
    }
    Ok(trace)
}

/// GP + expected improvement. The first `init_points` trials are the same draws
/// `random_search` makes with this seed.
pub fn bayesian_search<F>(space: &ParamSpace, budget: usize, mut objective: F, seed: u64, config: &BayesConfig) -> Result<SearchTrace, SearchError>
where
    F: FnMut(&[f64], u64) -> Result<f64, SearchError>,
{
    if budget == 0 {
        return Err(SearchError::ZeroBudget);
    }
    if config.init_points < 2 || budget <= config.init_points {
        return Err(SearchError::InvalidConfig(format!(
            "need budget > init_points >= 2, got budget {budget}, init_points {}",
            config.init_points
        )));
    }
    if config.candidates == 0 {
        return Err(SearchError::InvalidConfig("candidate pool is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = SearchTrace { method: "bayesian".into(), names: space.names.clone(), trials: Vec::with_capacity(budget) };
    for i in 0..config.init_points {
        let unit = sample_unit(space, &mut rng);
        trace.trials.push(run_trial(space, unit, i, seed, false, &mut objective)?);
    }
    for i in config.init_points..budget {
        let x: Vec<Vec<f64>> = trace.trials.iter().map(|t| t.unit.clone()).collect();
        let y: Vec<f64> = trace.trials.iter().map(|t| t.value).collect();
        let gp = Gp::fit(&x, &y, &config.gp)?;
        let best = y.iter().cloned().fold(f64::INFINITY, f64::min);

        let mut crng = ChaCha8Rng::seed_from_u64(derive_seed(seed ^ 0xC0FF_EE00, i as u64));
        let mut pick: Option<(f64, Vec<f64>)> = None;
        let mut fresh = 0;
        // duplicates of evaluated points are re-drawn, up to a bounded number of attempts
        for _ in 0..config.candidates * 4 {
            if fresh == config.candidates {
                break;
            }
            let c = sample_unit(space, &mut crng);
            if x.contains(&c) {
                continue;
            }
            fresh += 1;
            let (m, s) = gp.predict(&c);
            let ei = expected_improvement(m, s, best);
            if pick.as_ref().map_or(true, |(b, _)| ei > *b) {
                pick = Some((ei, c));
            }
        }
        // an exhausted discrete space falls back to a plain draw
        let unit = pick.map(|p| p.1).unwrap_or_else(|| sample_unit(space, &mut crng));
        trace.trials.push(run_trial(space, unit, i, seed, true, &mut objective)?);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::Dim;

    fn line() -> ParamSpace {
        ParamSpace::new(vec![("x", Dim::Continuous { lo: 0.0, hi: 1.0 })]).unwrap()
    }

    fn quad(p: &[f64], _: u64) -> Result<f64, SearchError> {
        Ok((p[0] - 0.3).powi(2))
    }

    #[test]
    fn zero_budget() {
        assert!(matches!(random_search(&line(), 0, quad, 1), Err(SearchError::ZeroBudget)));
        assert!(matches!(bayesian_search(&line(), 0, quad, 1, &BayesConfig::default()), Err(SearchError::ZeroBudget)));
    }

    #[test]
    fn budget_one_is_its_only_candidate() {
        let t = random_search(&line(), 1, quad, 3).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.incumbent().unwrap(), &t.trials[0]);
    }

    #[test]
    fn exactly_one_guided_trial() {
        let cfg = BayesConfig { init_points: 5, ..Default::default() };
        let t = bayesian_search(&line(), 6, quad, 2, &cfg).unwrap();
        assert_eq!(t.trials.iter().filter(|t| t.guided).count(), 1);
        assert!(t.trials[5].guided);
    }

    #[test]
    fn init_prefix_matches_random() {
        let cfg = BayesConfig { init_points: 4, ..Default::default() };
        let b = bayesian_search(&line(), 8, quad, 9, &cfg).unwrap();
        let r = random_search(&line(), 4, quad, 9).unwrap();
        let key = |t: &Trial| (t.unit.clone(), t.value, t.seed);
        assert!(b.trials[..4].iter().map(key).eq(r.trials.iter().map(key)));
        let run = b.best_so_far();
        assert!(run.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn deterministic() {
        let cfg = BayesConfig { init_points: 3, ..Default::default() };
        let a = bayesian_search(&line(), 7, quad, 5, &cfg).unwrap();
        let b = bayesian_search(&line(), 7, quad, 5, &cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(random_search(&line(), 5, quad, 5).unwrap().to_csv(), random_search(&line(), 5, quad, 5).unwrap().to_csv());
    }

    #[test]
    fn bayes_finds_quadratic_minimum() {
        let cfg = BayesConfig { init_points: 5, ..Default::default() };
        let t = bayesian_search(&line(), 20, quad, 0, &cfg).unwrap();
        assert!((t.incumbent().unwrap().params[0] - 0.3).abs() < 0.05);
    }

    #[test]
    fn random_bowl_in_top_decile_of_grid() {
        let space = ParamSpace::new(vec![
            ("a", Dim::Continuous { lo: -1.0, hi: 1.0 }),
            ("b", Dim::Continuous { lo: 0.0, hi: 4.0 }),
        ])
        .unwrap();
        let bowl = |p: &[f64], _: u64| Ok((p[0] - 0.2).powi(2) + 0.25 * (p[1] - 1.0).powi(2));
        // 100 x 100 grid oracle
        let mut grid: Vec<f64> = (0..100)
            .flat_map(|i| (0..100).map(move |j| (-1.0 + 2.0 * (i as f64 + 0.5) / 100.0, 4.0 * (j as f64 + 0.5) / 100.0)))
            .map(|(a, b)| bowl(&[a, b], 0).unwrap())
            .collect();
        grid.sort_by(f64::total_cmp);
        let decile = grid[grid.len() / 10];
        let t = random_search(&space, 20, bowl, 11).unwrap();
        assert!(t.incumbent().unwrap().value <= decile);
    }

    #[test]
    fn discrete_space_avoids_repeats() {
        let space = ParamSpace::new(vec![("k", Dim::Integer { lo: 0, hi: 5 })]).unwrap();
        let cfg = BayesConfig { init_points: 2, ..Default::default() };
        let t = bayesian_search(&space, 6, |p: &[f64], _| Ok((p[0] - 3.0).abs()), 4, &cfg).unwrap();
        let guided: Vec<f64> = t.trials.iter().skip(2).map(|t| t.params[0]).collect();
        let mut seen: Vec<f64> = t.trials[..2].iter().map(|t| t.params[0]).collect();
        for g in guided {
            assert!(!seen.contains(&g) || seen.len() == 6, "repeat {g}");
            seen.push(g);
        }
    }
}
