//! Retrofitting: refine pre-trained vectors so that each stays close to its
//! original while moving toward its neighbours in a knowledge graph.
//!
//! The literal objective is
//!
//! ```text
//! psi = sum_i [ alpha_i |w^_i - w_i|^2 + sum_{j in N(i)} beta_ij |w^_i - w^_j|^2 ]
//! ```
//!
//! where every undirected edge is visited from both endpoints. The solver
//! applies the closed-form per-word update
//!
//! ```text
//! w^_i <- (sum_{j in N(i)} beta_ij w^_j + alpha_i w_i) / (sum_{j in N(i)} beta_ij + alpha_i)
//! ```
//!
//! That update is the exact block minimizer of [`descent_energy`], not of
//! `psi`: the derivative of `psi` in block `i` weights neighbour `j` by
//! `beta_ij + beta_ji`. In-place sweeps therefore decrease the energy
//! monotonically, while `psi` may rise again near the fixed point.

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kgraph::KnowledgeGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Alpha {
    Uniform(f64),
    PerWord(Vec<f64>),
}

impl Alpha {
    pub fn get(&self, i: usize) -> f64 {
        match self {
            Alpha::Uniform(a) => *a,
            Alpha::PerWord(v) => v[i],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaScheme {
    /// `beta_ij = 1 / degree(i)`
    InvDegree,
    /// `beta_ij = 1`
    Const,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepOrder {
    Ascending,
    Descending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateMode {
    /// In-place updates; each word sees its neighbours' latest values.
    GaussSeidel,
    /// Every word reads the previous sweep. Parallel, but not monotone.
    Jacobi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrofitConfig {
    pub alpha: Alpha,
    pub beta: BetaScheme,
    pub iterations: usize,
    /// Stop once the largest per-vector max-abs change of a sweep is below
    /// this; 0 disables early stopping.
    pub tolerance: f64,
    pub order: SweepOrder,
    pub mode: UpdateMode,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for RetrofitConfig {
    fn default() -> Self {
        RetrofitConfig {
            alpha: Alpha::Uniform(1.0),
            beta: BetaScheme::InvDegree,
            iterations: 10,
            tolerance: 1e-3,
            order: SweepOrder::Ascending,
            mode: UpdateMode::GaussSeidel,
            exec: Execution::default(),
        }
    }
}

impl RetrofitConfig {
    pub fn validate(&self, g: &KnowledgeGraph) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("retrofit iterations must be >= 1".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Config("retrofit tolerance must be >= 0".into()));
        }
        if let Alpha::PerWord(v) = &self.alpha {
            if v.len() != g.n_vocab() {
                return Err(Error::DimensionMismatch {
                    expected: g.n_vocab(),
                    found: v.len(),
                });
            }
        }
        for i in 0..g.n_vocab() {
            let a = self.alpha.get(i);
            if !(a >= 0.0) || !a.is_finite() {
                return Err(Error::Config(format!(
                    "alpha for word {i} must be finite and >= 0"
                )));
            }
            let special = Vocabulary::is_special(i as u32);
            if special && g.degree(i) > 0 {
                return Err(Error::Config("PAD and UNK cannot be graph nodes".into()));
            }
            if !special && a == 0.0 && g.degree(i) == 0 {
                return Err(Error::UndefinedUpdate(i));
            }
        }
        Ok(())
    }

    fn beta(&self, g: &KnowledgeGraph, i: usize) -> f64 {
        match self.beta {
            BetaScheme::InvDegree => 1.0 / g.degree(i) as f64,
            BetaScheme::Const => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RetrofitResult {
    pub embeddings: EmbeddingMatrix,
    /// `psi` after initialization and after each sweep.
    pub objective_trace: Vec<f64>,
    /// [`descent_energy`] after initialization and after each sweep.
    pub energy_trace: Vec<f64>,
    /// Largest per-vector max-abs change in each sweep.
    pub max_change: Vec<f64>,
    pub sweeps_run: usize,
}

fn check_shapes(w: &EmbeddingMatrix, what: &EmbeddingMatrix, g: &KnowledgeGraph) -> Result<()> {
    if w.dim() != what.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            found: what.dim(),
        });
    }
    if w.rows() != what.rows() || w.rows() != g.n_vocab() {
        return Err(Error::ShapeMismatch {
            what: "retrofit inputs".into(),
            expected: vec![w.rows(), w.dim()],
            found: vec![what.rows(), g.n_vocab()],
        });
    }
    Ok(())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The literal objective `psi`, summing each edge from both endpoints with
/// that endpoint's own `beta`.
pub fn objective(
    w: &EmbeddingMatrix,
    what: &EmbeddingMatrix,
    g: &KnowledgeGraph,
    cfg: &RetrofitConfig,
) -> Result<f64> {
    check_shapes(w, what, g)?;
    let mut psi = 0.0;
    for i in 0..w.rows() {
        let a = cfg.alpha.get(i);
        if a != 0.0 {
            psi += a * sq_dist(what.row(i), w.row(i));
        }
        if g.degree(i) > 0 {
            let beta = cfg.beta(g, i);
            for &j in g.neighbors(i) {
                psi += beta * sq_dist(what.row(i), what.row(j as usize));
            }
        }
    }
    Ok(psi)
}

/// The quadratic the per-word update minimizes exactly, one block at a time.
///
/// With `beta_ij = s_ij / m_i` for symmetric `s`, it is
/// `sum_i m_i alpha_i |w^_i - w_i|^2 + sum_{edges} s_ij |w^_i - w^_j|^2`
/// (constant beta: `m = 1, s = 1`; inverse degree: `m_i = degree(i), s = 1`).
pub fn descent_energy(
    w: &EmbeddingMatrix,
    what: &EmbeddingMatrix,
    g: &KnowledgeGraph,
    cfg: &RetrofitConfig,
) -> Result<f64> {
    check_shapes(w, what, g)?;
    let mut e = 0.0;
    for i in 0..w.rows() {
        let m = match cfg.beta {
            BetaScheme::InvDegree => g.degree(i) as f64,
            BetaScheme::Const => 1.0,
        };
        let a = cfg.alpha.get(i);
        if m != 0.0 && a != 0.0 {
            e += m * a * sq_dist(what.row(i), w.row(i));
        }
    }
    for &(i, j) in g.edges() {
        e += sq_dist(what.row(i as usize), what.row(j as usize));
    }
    Ok(e)
}

/// Closed-form update of word `i` given the current neighbour vectors.
/// Isolated words return their original vector unchanged.
pub fn update_word(
    i: usize,
    w: &EmbeddingMatrix,
    what: &EmbeddingMatrix,
    g: &KnowledgeGraph,
    cfg: &RetrofitConfig,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; w.dim()];
    update_into(i, w, what, g, cfg, &mut out)?;
    Ok(out)
}

fn update_into(
    i: usize,
    w: &EmbeddingMatrix,
    what: &EmbeddingMatrix,
    g: &KnowledgeGraph,
    cfg: &RetrofitConfig,
    out: &mut [f64],
) -> Result<()> {
    let alpha = cfg.alpha.get(i);
    if g.degree(i) == 0 {
        if alpha == 0.0 {
            return Err(Error::UndefinedUpdate(i));
        }
        out.copy_from_slice(w.row(i));
        return Ok(());
    }
    let beta = cfg.beta(g, i);
    out.fill(0.0);
    for &j in g.neighbors(i) {
        for (o, v) in out.iter_mut().zip(what.row(j as usize)) {
            *o += beta * v;
        }
    }
    let denom = beta * g.degree(i) as f64 + alpha;
    if denom == 0.0 {
        return Err(Error::UndefinedUpdate(i));
    }
    for (o, v) in out.iter_mut().zip(w.row(i)) {
        *o = (*o + alpha * v) / denom;
    }
    Ok(())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Retrofit `w` to `g`. The result starts as a copy of `w`; special rows
/// and isolated words are never modified.
pub fn retrofit(
    w: &EmbeddingMatrix,
    g: &KnowledgeGraph,
    cfg: &RetrofitConfig,
) -> Result<RetrofitResult> {
    cfg.validate(g)?;
    if w.rows() != g.n_vocab() {
        return Err(Error::ShapeMismatch {
            what: "graph vs embeddings".into(),
            expected: vec![w.rows()],
            found: vec![g.n_vocab()],
        });
    }
    if w.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("input embeddings must be finite".into()));
    }
    let mut what = w.clone();
    let mut objective_trace = vec![objective(w, &what, g, cfg)?];
    let mut energy_trace = vec![descent_energy(w, &what, g, cfg)?];
    let mut max_change = Vec::new();
    let nodes: Vec<usize> = match cfg.order {
        SweepOrder::Ascending => (0..w.rows()).filter(|&i| g.degree(i) > 0).collect(),
        SweepOrder::Descending => (0..w.rows()).rev().filter(|&i| g.degree(i) > 0).collect(),
    };
    let d = w.dim();
    let mut sweeps_run = 0;
    let mut buf = vec![0.0; d];
    for _ in 0..cfg.iterations {
        let mut change: f64 = 0.0;
        match cfg.mode {
            UpdateMode::GaussSeidel => {
                for &i in &nodes {
                    update_into(i, w, &what, g, cfg, &mut buf)?;
                    change = change.max(max_abs_diff(&buf, what.row(i)));
                    what.row_mut(i).copy_from_slice(&buf);
                }
            }
            UpdateMode::Jacobi => {
                let prev = &what;
                let rows: Vec<Result<Vec<f64>>> =
                    cfg.exec.map(&nodes, |&i| update_word(i, w, prev, g, cfg));
                let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
                for (&i, row) in nodes.iter().zip(rows) {
                    change = change.max(max_abs_diff(&row, what.row(i)));
                    what.row_mut(i).copy_from_slice(&row);
                }
            }
        }
        sweeps_run += 1;
        objective_trace.push(objective(w, &what, g, cfg)?);
        energy_trace.push(descent_energy(w, &what, g, cfg)?);
        max_change.push(change);
        if change < cfg.tolerance {
            break;
        }
    }
    Ok(RetrofitResult {
        embeddings: what,
        objective_trace,
        energy_trace,
        max_change,
        sweeps_run,
    })
}
