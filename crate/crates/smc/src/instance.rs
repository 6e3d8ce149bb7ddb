use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::SmcError;

/// Range of the observable `o`.
pub const O_RANGE: (f64, f64) = (1.0, 10.0);
/// Range of the per-element rate slopes.
pub const SLOPE_RANGE: (f64, f64) = (1.0, 5.0);
/// Set costs are integers in this range.
pub const COST_RANGE: (u32, u32) = (1, 100);
pub const PENALTY_FACTOR: f64 = 10.0;

/// Set multi-cover instance: which sets cover which elements, set costs,
/// per-unit shortage penalties, and the slopes of the rate law `λ_i = a_i·o`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmcInstance {
    pub n_elements: usize,
    pub n_sets: usize,
    /// `covers[i]`: sorted indices of the sets covering element `i`.
    pub covers: Vec<Vec<usize>>,
    pub costs: Vec<f64>,
    pub penalties: Vec<f64>,
    pub rate_slopes: Vec<f64>,
}

impl SmcInstance {
    /// Builds an instance from its availability pairs `(element, set)`;
    /// penalties follow the `10 · max covering cost` rule.
    pub fn from_pairs(
        n_elements: usize,
        n_sets: usize,
        pairs: &[(usize, usize)],
        costs: Vec<f64>,
        rate_slopes: Vec<f64>,
    ) -> Result<Self, SmcError> {
        if costs.len() != n_sets || rate_slopes.len() != n_elements {
            return Err(SmcError::Invalid("cost or slope array has the wrong length".into()));
        }
        let mut covers = vec![Vec::new(); n_elements];
        for &(i, j) in pairs {
            if i >= n_elements || j >= n_sets {
                return Err(SmcError::Invalid(format!("pair ({i}, {j}) out of range")));
            }
            covers[i].push(j);
        }
        for c in &mut covers {
            c.sort_unstable();
            c.dedup();
        }
        let penalties = covers
            .iter()
            .map(|c| PENALTY_FACTOR * c.iter().map(|&j| costs[j]).fold(0.0, f64::max))
            .collect();
        let inst = SmcInstance {
            n_elements,
            n_sets,
            covers,
            costs,
            penalties,
            rate_slopes,
        };
        Ok(inst)
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.covers
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.iter().map(move |&j| (i, j)))
            .collect()
    }

    pub fn ones(&self) -> usize {
        self.covers.iter().map(Vec::len).sum()
    }

    pub fn density(&self) -> f64 {
        self.ones() as f64 / (self.n_elements * self.n_sets) as f64
    }

    /// `elements_of[j]`: elements covered by set `j`.
    pub fn elements_of(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_sets];
        for (i, c) in self.covers.iter().enumerate() {
            for &j in c {
                out[j].push(i);
            }
        }
        out
    }

    /// `Σ_j a_ij x_j` for every element.
    pub fn coverage(&self, x: &[f64]) -> Vec<f64> {
        self.covers.iter().map(|c| c.iter().map(|&j| x[j]).sum()).collect()
    }

    pub fn rates(&self, o: f64) -> Vec<f64> {
        self.rate_slopes.iter().map(|a| a * o).collect()
    }

    /// Checks the generation rules: every set covers an element, every
    /// element is covered by two sets, penalties follow the `10·max` rule.
    pub fn check(&self) -> Result<(), SmcError> {
        if self.covers.iter().any(|c| c.len() < 2) {
            return Err(SmcError::Invalid("an element is covered by fewer than two sets".into()));
        }
        if self.elements_of().iter().any(Vec::is_empty) {
            return Err(SmcError::Invalid("a set covers no element".into()));
        }
        for (i, c) in self.covers.iter().enumerate() {
            let w = PENALTY_FACTOR * c.iter().map(|&j| self.costs[j]).fold(0.0, f64::max);
            if w != self.penalties[i] {
                return Err(SmcError::Invalid(format!("penalty of element {i} is {}, expected {w}", self.penalties[i])));
            }
        }
        Ok(())
    }
}

/// Random availability matrix with the requested density such that every set
/// covers at least one element and every element is covered by at least two
/// sets; integer costs uniform in `[1, 100]`, slopes uniform in `[1, 5]`.
pub fn generate_instance<R: Rng + ?Sized>(
    rng: &mut R,
    n_elements: usize,
    n_sets: usize,
    density: f64,
) -> Result<SmcInstance, SmcError> {
    if n_elements == 0 || n_sets < 2 {
        return Err(SmcError::InfeasibleGeneration("need at least one element and two sets".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(SmcError::InfeasibleGeneration(format!("density {density}")));
    }
    let target = (density * (n_elements * n_sets) as f64).round() as usize;
    if target < 2 * n_elements + n_sets {
        return Err(SmcError::InfeasibleGeneration(format!(
            "{target} ones cannot give every set one element and every element two sets"
        )));
    }
    let mut a = vec![vec![false; n_sets]; n_elements];
    let mut ones = 0;
    for j in 0..n_sets {
        let i = rng.random_range(0..n_elements);
        a[i][j] = true;
        ones += 1;
    }
    for row in a.iter_mut() {
        while row.iter().filter(|&&v| v).count() < 2 {
            let j = rng.random_range(0..n_sets);
            if !row[j] {
                row[j] = true;
                ones += 1;
            }
        }
    }
    while ones < target {
        let i = rng.random_range(0..n_elements);
        let j = rng.random_range(0..n_sets);
        if !a[i][j] {
            a[i][j] = true;
            ones += 1;
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n_elements)
        .flat_map(|i| (0..n_sets).filter(|&j| a[i][j]).map(move |j| (i, j)).collect::<Vec<_>>())
        .collect();
    let costs = (0..n_sets)
        .map(|_| rng.random_range(COST_RANGE.0..=COST_RANGE.1) as f64)
        .collect();
    let rate_slopes = (0..n_elements)
        .map(|_| rng.random_range(SLOPE_RANGE.0..SLOPE_RANGE.1))
        .collect();
    SmcInstance::from_pairs(n_elements, n_sets, &pairs, costs, rate_slopes)
}
