use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use super::AnalyticsError;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// The geometric tail estimate is asymptotic; stop only well inside it.
const TAIL_MARGIN: f64 = 10.0;

/// Directed dependency graph: an edge points from a content topic to one of
/// its prerequisite topics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicGraph {
    labels: Vec<String>,
    edges: BTreeSet<(usize, usize)>,
}

impl TopicGraph {
    /// Builds a graph from `(content, prerequisite)` label pairs. Node order
    /// follows first appearance; repeated edges collapse.
    pub fn from_edges<I, S>(pairs: I) -> Result<Self, AnalyticsError>
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let mut labels = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut edges = BTreeSet::new();
        let mut id = |label: &str, labels: &mut Vec<String>| {
            *index.entry(label.to_owned()).or_insert_with(|| {
                labels.push(label.to_owned());
                labels.len() - 1
            })
        };
        for (from, to) in pairs {
            let (from, to) = (from.as_ref().trim(), to.as_ref().trim());
            if from.is_empty() || to.is_empty() {
                return Err(AnalyticsError::EmptyLabel);
            }
            if from == to {
                return Err(AnalyticsError::SelfLoop(from.to_owned()));
            }
            let f = id(from, &mut labels);
            let t = id(to, &mut labels);
            edges.insert((f, t));
        }
        Ok(Self { labels, edges })
    }

    /// Graph over `n` nodes labelled by their index.
    pub fn from_index_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, AnalyticsError> {
        let mut set = BTreeSet::new();
        for &(f, t) in edges {
            if f >= n || t >= n {
                return Err(AnalyticsError::NodeOutOfRange(f.max(t)));
            }
            if f == t {
                return Err(AnalyticsError::SelfLoop(f.to_string()));
            }
            set.insert((f, t));
        }
        Ok(Self {
            labels: (0..n).map(|i| i.to_string()).collect(),
            edges: set,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicScore {
    pub label: String,
    pub hub: f64,
    pub authority: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HitsResult {
    /// One entry per node, in graph order.
    pub scores: Vec<TopicScore>,
    pub iterations: usize,
}

impl HitsResult {
    pub fn hubs(&self) -> Vec<f64> {
        self.scores.iter().map(|s| s.hub).collect()
    }

    pub fn authorities(&self) -> Vec<f64> {
        self.scores.iter().map(|s| s.authority).collect()
    }

    /// `(label, hub)` sorted by score descending, then label.
    pub fn hub_ranking(&self) -> Vec<(&str, f64)> {
        ranked(self.scores.iter().map(|s| (s.label.as_str(), s.hub)))
    }

    /// `(label, authority)` sorted by score descending, then label.
    pub fn authority_ranking(&self) -> Vec<(&str, f64)> {
        ranked(self.scores.iter().map(|s| (s.label.as_str(), s.authority)))
    }
}

fn ranked<'a>(it: impl Iterator<Item = (&'a str, f64)>) -> Vec<(&'a str, f64)> {
    let mut v: Vec<_> = it.collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    v
}

fn normalize_l1(v: &mut [f64]) {
    let sum: f64 = v.iter().sum();
    if sum > 0.0 {
        for x in v.iter_mut() {
            *x /= sum;
        }
    }
}

/// Hub and authority scores by power iteration from a uniform start.
///
/// Each round computes `a = Hᵀh` then `h = Ha`, L1-normalizing both. It
/// stops once no component moved by `tol` or more and the remaining
/// distance to the limit, estimated from the contraction ratio of the last
/// two steps, is below `tol / 10`.
pub fn hits(graph: &TopicGraph, tol: f64, max_iter: usize) -> Result<HitsResult, AnalyticsError> {
    if graph.edge_count() == 0 {
        return Err(AnalyticsError::EmptyGraph);
    }
    let n = graph.len();
    let edges: Vec<(usize, usize)> = graph.edges().collect();
    let mut hub = vec![1.0 / n as f64; n];
    let mut auth = vec![1.0 / n as f64; n];
    let mut prev_change = f64::INFINITY;
    for iteration in 1..=max_iter {
        let mut next_auth = vec![0.0; n];
        for &(f, t) in &edges {
            next_auth[t] += hub[f];
        }
        normalize_l1(&mut next_auth);
        let mut next_hub = vec![0.0; n];
        for &(f, t) in &edges {
            next_hub[f] += next_auth[t];
        }
        normalize_l1(&mut next_hub);
        let change = hub
            .iter()
            .zip(&next_hub)
            .chain(auth.iter().zip(&next_auth))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        hub = next_hub;
        auth = next_auth;
        let tail = if change == 0.0 {
            0.0
        } else if change < prev_change {
            let ratio = change / prev_change;
            change * ratio / (1.0 - ratio)
        } else {
            f64::INFINITY
        };
        prev_change = change;
        if change < tol && tail < tol / TAIL_MARGIN {
            let scores = graph
                .labels
                .iter()
                .enumerate()
                .map(|(i, label)| TopicScore {
                    label: label.clone(),
                    hub: hub[i],
                    authority: auth[i],
                })
                .collect();
            return Ok(HitsResult {
                scores,
                iterations: iteration,
            });
        }
    }
    Err(AnalyticsError::NoConvergence(max_iter))
}
