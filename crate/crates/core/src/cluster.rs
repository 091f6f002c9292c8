//! Lloyd k-means over word vectors and lexicon-based dimension labels.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::artifact::{csv_string, Provenance};
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 3;
pub const UNCLASSIFIED: &str = "unclassified";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterState {
    pub centers: Vec<Vec<f64>>,
    /// Cluster index per input point.
    pub assignments: Vec<usize>,
    /// Sum of squared distances of points to their assigned center.
    pub objective: f64,
    pub iterations: usize,
    /// Objective after each completed Lloyd iteration.
    pub history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest center per point, ties to the lower center index.
pub fn assign_step(points: &[Vec<f64>], centers: &[Vec<f64>]) -> Vec<usize> {
    let nearest = |p: &Vec<f64>| {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, c) in centers.iter().enumerate() {
            let d = sq_dist(p, c);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        points.par_iter().map(nearest).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        points.iter().map(nearest).collect()
    }
}

/// Center of each cluster as the mean of its members, summed in point order.
fn update_centers(points: &[Vec<f64>], assignments: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        for (s, x) in sums[a].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            for v in s.iter_mut() {
                *v /= c as f64;
            }
        }
    }
    sums
}

pub fn objective(points: &[Vec<f64>], centers: &[Vec<f64>], assignments: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &a)| sq_dist(p, &centers[a]))
        .sum()
}

/// Moves the point farthest from its own center into each empty cluster.
fn repair_empty(points: &[Vec<f64>], assignments: &mut [usize], centers: &[Vec<f64>], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &a in assignments.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let far = (0..points.len())
            .filter(|&i| counts[assignments[i]] > 1)
            .max_by(|&i, &j| {
                sq_dist(&points[i], &centers[assignments[i]])
                    .total_cmp(&sq_dist(&points[j], &centers[assignments[j]]))
                    .then(j.cmp(&i))
            })
            .expect("k <= distinct points leaves a donor cluster");
        assignments[far] = empty;
    }
}

/// Seeded D^2 (k-means++) initialization.
fn init_centers(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(0);
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 && target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        let c = points[pick].clone();
        for (di, p) in d2.iter_mut().zip(points) {
            *di = di.min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    centers
}

fn distinct_count(points: &[Vec<f64>]) -> usize {
    let keys: BTreeSet<Vec<u64>> = points
        .iter()
        .map(|p| p.iter().map(|x| x.to_bits()).collect())
        .collect();
    keys.len()
}

pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> Result<ClusterState> {
    if points.is_empty() {
        return Err(Error::invalid("k-means needs at least one point"));
    }
    if k == 0 || max_iter == 0 {
        return Err(Error::invalid("k and max_iter must be positive"));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::invalid("points differ in dimension"));
    }
    let distinct = distinct_count(points);
    if k > distinct {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the {distinct} distinct points"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = init_centers(points, k, &mut rng);
    let mut assignments = assign_step(points, &centers);
    repair_empty(points, &mut assignments, &centers, k);
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        centers = update_centers(points, &assignments, k);
        history.push(objective(points, &centers, &assignments));
        iterations += 1;
        if iterations >= max_iter {
            break;
        }
        let mut next = assign_step(points, &centers);
        repair_empty(points, &mut next, &centers, k);
        if next == assignments {
            break;
        }
        assignments = next;
    }
    Ok(ClusterState {
        objective: *history.last().unwrap(),
        centers,
        assignments,
        iterations,
        history,
    })
}

/// Labels each cluster by the majority of its members' lexicon hits.
/// Clusters with no hits are `unclassified`; ties go to the dimension name
/// that sorts first.
pub fn assign_dimensions(
    state: &ClusterState,
    words: &[String],
    lexicon: &BTreeMap<String, BTreeSet<String>>,
) -> Result<BTreeMap<String, String>> {
    if lexicon.values().all(|s| s.is_empty()) {
        return Err(Error::invalid("empty lexicon"));
    }
    if words.len() != state.assignments.len() {
        return Err(Error::invalid("one word per clustered point is required"));
    }
    let mut votes: HashMap<usize, BTreeMap<&str, usize>> = HashMap::new();
    for (w, &c) in words.iter().zip(&state.assignments) {
        for (dim, members) in lexicon {
            if members.contains(w) {
                *votes.entry(c).or_default().entry(dim.as_str()).or_default() += 1;
            }
        }
    }
    let label = |c: usize| -> String {
        votes
            .get(&c)
            .and_then(|tally| {
                // BTreeMap iterates names ascending, so the first max wins ties.
                let top = tally.values().copied().max()?;
                tally.iter().find(|(_, &n)| n == top).map(|(d, _)| d.to_string())
            })
            .unwrap_or_else(|| UNCLASSIFIED.to_string())
    };
    Ok(words
        .iter()
        .zip(&state.assignments)
        .map(|(w, &c)| (w.clone(), label(c)))
        .collect())
}

pub const DEFAULT_LEXICON: &str = include_str!("../data/lexicon.json");

pub fn default_lexicon() -> BTreeMap<String, BTreeSet<String>> {
    serde_json::from_str(DEFAULT_LEXICON).expect("bundled lexicon is valid JSON")
}

/// `word,cluster,dimension`, one row per clustered word in input order.
pub fn clusters_csv(
    state: &ClusterState,
    words: &[String],
    labels: &BTreeMap<String, String>,
    prov: &Provenance,
) -> Result<String> {
    csv_string(prov, |w| {
        w.write_record(["word", "cluster", "dimension"])?;
        for (word, &c) in words.iter().zip(&state.assignments) {
            let dim = labels.get(word).map(String::as_str).unwrap_or(UNCLASSIFIED);
            w.write_record([word.as_str(), &c.to_string(), dim])?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn two_obvious_groups() {
        let s = kmeans(&pts(&[0.0, 1.0, 9.0, 10.0]), 2, 1, 100).unwrap();
        assert_eq!(s.assignments[0], s.assignments[1]);
        assert_eq!(s.assignments[2], s.assignments[3]);
        assert_ne!(s.assignments[0], s.assignments[2]);
        let mut centers: Vec<f64> = s.centers.iter().map(|c| c[0]).collect();
        centers.sort_by(f64::total_cmp);
        assert_eq!(centers, vec![0.5, 9.5]);
        assert_eq!(s.objective, 1.0);
    }

    #[test]
    fn k_equals_n_gives_zero_objective() {
        let s = kmeans(&pts(&[3.0, -1.0, 4.0, 1.5]), 4, 9, 100).unwrap();
        assert_eq!(s.objective, 0.0);
        let distinct: BTreeSet<usize> = s.assignments.iter().copied().collect();
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn single_cluster_is_global_mean() {
        let p = vec![vec![1.0, 2.0], vec![3.0, 6.0], vec![5.0, 1.0]];
        let s = kmeans(&p, 1, 0, 10).unwrap();
        assert!((s.centers[0][0] - 3.0).abs() < 1e-15);
        assert!((s.centers[0][1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_k() {
        assert!(kmeans(&pts(&[1.0, 1.0, 2.0]), 3, 0, 10).is_err());
        assert!(kmeans(&[], 1, 0, 10).is_err());
        assert!(kmeans(&[vec![1.0], vec![1.0, 2.0]], 1, 0, 10).is_err());
    }

    #[test]
    fn seeded_runs_repeat() {
        let p: Vec<Vec<f64>> = (0..40).map(|i| vec![(i * 37 % 11) as f64, (i % 7) as f64]).collect();
        assert_eq!(kmeans(&p, 3, 5, 50).unwrap(), kmeans(&p, 3, 5, 50).unwrap());
    }

    fn lexicon() -> BTreeMap<String, BTreeSet<String>> {
        let mut m = BTreeMap::new();
        m.insert("astronomy".into(), ["sun".to_string()].into_iter().collect());
        m.insert("geography".into(), ["wind".to_string()].into_iter().collect());
        m
    }

    fn state(assign: Vec<usize>) -> ClusterState {
        ClusterState {
            centers: vec![],
            assignments: assign,
            objective: 0.0,
            iterations: 0,
            history: vec![],
        }
    }

    #[test]
    fn labels_by_majority() {
        let words: Vec<String> = ["sun", "solar", "radiation", "gdp", "tax"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let labels = assign_dimensions(&state(vec![0, 0, 0, 1, 1]), &words, &lexicon()).unwrap();
        assert_eq!(labels["solar"], "astronomy");
        assert_eq!(labels["radiation"], "astronomy");
        assert_eq!(labels["gdp"], UNCLASSIFIED);
    }

    #[test]
    fn label_tie_goes_to_first_name() {
        let words: Vec<String> = ["wind", "sun"].iter().map(|s| s.to_string()).collect();
        let labels = assign_dimensions(&state(vec![0, 0]), &words, &lexicon()).unwrap();
        assert_eq!(labels["wind"], "astronomy");
    }

    #[test]
    fn empty_lexicon_rejected() {
        let words = vec!["x".to_string()];
        assert!(assign_dimensions(&state(vec![0]), &words, &BTreeMap::new()).is_err());
    }

    #[test]
    fn bundled_lexicon_has_four_dimensions() {
        let lex = default_lexicon();
        for d in ["astronomy", "geography", "integrated_energy", "society"] {
            assert!(!lex[d].is_empty(), "{d}");
        }
    }
}
