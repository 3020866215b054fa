use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::model::{MilpModel, Objective, RowRole, VarRole};
use crate::netmodel::{Association, CellId, UeId};
use crate::{Error, Result};

const LEAF_TOLERANCE: f64 = 1e-10;
const LEAF_MAX_ITERATIONS: usize = 1_000;
const X_CAP: f64 = 1.0 + 1e-9;
const PRUNE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnbOptions {
    pub node_limit: usize,
    /// Relative gap at which the search stops early; 0 searches to
    /// optimality.
    pub relative_gap: f64,
    /// UEs in branching order. Defaults to descending intercept of the
    /// home-only option (proportional to demand), ties by index.
    pub branch_order: Option<Vec<UeId>>,
}

impl Default for BnbOptions {
    fn default() -> Self {
        Self {
            node_limit: 1_000_000,
            relative_gap: 0.0,
            branch_order: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MilpStatus {
    Optimal,
    GapLimit,
    NodeLimit,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpSolution {
    /// Decoded association; `None` when no feasible leaf was found.
    pub assignment: Option<Association>,
    /// Chosen option index per UE.
    pub choice: Option<Vec<usize>>,
    /// Linear-model objective of the incumbent (`+inf` without one).
    pub objective_lp: f64,
    /// Fixed-point objective of the decoded association, filled in by the
    /// pipeline.
    pub objective_true: Option<f64>,
    /// Proven lower bound on the linear-model optimum.
    pub bound: f64,
    pub status: MilpStatus,
    pub nodes_explored: usize,
}

/// One association option as the solver sees it.
#[derive(Debug, Clone)]
struct OptionData {
    cells: Vec<CellId>,
    slope: f64,
    intercept: f64,
    /// Interference coefficients over cells outside the option.
    coefs: Vec<(CellId, f64)>,
    /// Lower limit on `w` when selected.
    floor: f64,
}

impl OptionData {
    fn interference(&self, x: &[f64]) -> f64 {
        self.coefs
            .iter()
            .map(|&(i, c)| c * x[i])
            .sum::<f64>()
            .max(self.floor)
    }

    fn load(&self, x: &[f64]) -> f64 {
        self.slope * self.interference(x) + self.intercept
    }
}

/// Model structure recovered from the row roles.
struct Structure {
    n_cells: usize,
    objective: Objective,
    options: Vec<Vec<OptionData>>,
    home: Vec<CellId>,
}

fn unsupported(msg: impl Into<String>) -> Error {
    Error::Precondition(format!("model outside the supported family: {}", msg.into()))
}

impl Structure {
    fn extract(model: &MilpModel) -> Result<Self> {
        let n = model.n_cells;
        let mut options: Vec<Vec<OptionData>> = model
            .options
            .iter()
            .map(|opts| {
                opts.iter()
                    .map(|cells| OptionData {
                        cells: cells.clone(),
                        slope: f64::NAN,
                        intercept: f64::NAN,
                        coefs: Vec::new(),
                        floor: 0.0,
                    })
                    .collect()
            })
            .collect();
        let mut cap = vec![Vec::new(); options.len()];
        for (j, o) in options.iter().enumerate() {
            cap[j] = vec![f64::NAN; o.len()];
        }
        for row in &model.constraints {
            match row.role {
                RowRole::LoadDefinition { cell } => {
                    for &(v, c) in &row.terms {
                        match model.variables[v].role {
                            VarRole::Interference { ue, option } => {
                                options[ue][option].slope = -c
                            }
                            VarRole::Choice { ue, option } => options[ue][option].intercept = -c,
                            VarRole::Load { cell: i } if i == cell => {}
                            _ => return Err(unsupported("unexpected load-row term")),
                        }
                    }
                }
                RowRole::InterferenceLink { ue, option } => {
                    let t = -row.coefficient(model.choice_var(ue, option));
                    let o = &mut options[ue][option];
                    o.coefs = row
                        .terms
                        .iter()
                        .filter_map(|&(v, c)| match model.variables[v].role {
                            VarRole::Load { cell } => Some((cell, -c)),
                            _ => None,
                        })
                        .collect();
                    let reach: f64 = o.coefs.iter().map(|&(_, c)| c).sum();
                    if reach > t * (1.0 + 1e-12) + 1e-300 || row.rhs != -t {
                        return Err(unsupported("big-T constant below the interference cap"));
                    }
                    cap[ue][option] = t;
                }
                RowRole::InterferenceFloor { ue, option } => {
                    let t = -row.coefficient(model.choice_var(ue, option));
                    if row.rhs > 0.0 {
                        return Err(unsupported("interference floor above its cap"));
                    }
                    options[ue][option].floor = row.rhs + t;
                }
                RowRole::Selection { .. } | RowRole::Epigraph { .. } => {}
            }
        }
        let mut home = Vec::with_capacity(options.len());
        for (j, opts) in options.iter_mut().enumerate() {
            for (l, o) in opts.iter_mut().enumerate() {
                if cap[j][l].is_nan() {
                    return Err(Error::MissingSegment { ue: j, option: l });
                }
                // An option that never appears in a load row has a zero
                // contribution; treat it as such.
                if o.slope.is_nan() {
                    o.slope = 0.0;
                }
                if o.intercept.is_nan() {
                    o.intercept = 0.0;
                }
                if o.slope < 0.0 || o.intercept < 0.0 {
                    return Err(unsupported("negative segment"));
                }
            }
            let common = opts
                .first()
                .and_then(|o| {
                    o.cells
                        .iter()
                        .copied()
                        .find(|c| opts.iter().all(|p| p.cells.contains(c)))
                })
                .ok_or_else(|| unsupported(format!("UE {j} has no common home cell")))?;
            home.push(common);
        }
        Ok(Self {
            n_cells: n,
            objective: model.objective,
            options,
            home,
        })
    }

    /// One application of the relaxed map for a partial choice.
    fn apply(&self, choice: &[Option<u16>], x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (j, opts) in self.options.iter().enumerate() {
            match choice[j] {
                Some(l) => {
                    let o = &opts[l as usize];
                    let v = o.load(x);
                    for &i in &o.cells {
                        out[i] += v;
                    }
                }
                None => {
                    let v = opts.iter().map(|o| o.load(x)).fold(f64::INFINITY, f64::min);
                    out[self.home[j]] += v;
                }
            }
        }
    }

    /// Least fixed point of the relaxed map from a sub-solution `x`.
    /// Returns `false` when some load exceeds the cap.
    fn solve(&self, choice: &[Option<u16>], x: &mut Vec<f64>) -> bool {
        let mut next = vec![0.0; self.n_cells];
        for _ in 0..LEAF_MAX_ITERATIONS {
            self.apply(choice, x, &mut next);
            let mut delta: f64 = 0.0;
            let mut over = false;
            for (a, b) in x.iter().zip(&next) {
                delta = delta.max((a - b).abs());
                over |= *b > X_CAP;
            }
            std::mem::swap(x, &mut next);
            if over {
                return false;
            }
            if delta <= LEAF_TOLERANCE {
                break;
            }
        }
        true
    }

    /// First-improvement single-UE option swaps on a complete choice until
    /// none lowers the objective. Returns the final objective.
    fn improve(&self, order: &[UeId], c: &mut [Option<u16>], x: &mut Vec<f64>) -> f64 {
        let mut value = self.bound(c, x);
        let mut improved = true;
        while improved {
            improved = false;
            for &j in order {
                let current = c[j];
                for l in 0..self.options[j].len() as u16 {
                    if Some(l) == current {
                        continue;
                    }
                    c[j] = Some(l);
                    let mut y = vec![0.0; self.n_cells];
                    if self.solve(c, &mut y) {
                        let v = self.bound(c, &y);
                        if v < value - PRUNE_SLACK {
                            value = v;
                            *x = y;
                            improved = true;
                            break;
                        }
                    }
                    c[j] = current;
                }
            }
        }
        value
    }

    fn bound(&self, choice: &[Option<u16>], x: &[f64]) -> f64 {
        match self.objective {
            Objective::MaxLoad => x.iter().copied().fold(0.0, f64::max),
            Objective::SumLoad => {
                if choice.iter().all(Option::is_some) {
                    return x.iter().sum();
                }
                self.options
                    .iter()
                    .enumerate()
                    .map(|(j, opts)| match choice[j] {
                        Some(l) => {
                            let o = &opts[l as usize];
                            o.cells.len() as f64 * o.load(x)
                        }
                        None => opts
                            .iter()
                            .map(|o| o.cells.len() as f64 * o.load(x))
                            .fold(f64::INFINITY, f64::min),
                    })
                    .sum()
            }
        }
    }
}

struct Node {
    bound: f64,
    seq: u64,
    depth: usize,
    choice: Vec<Option<u16>>,
    x: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Max-heap order: smallest bound first, then earliest insertion.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Evaluates one complete option choice with the solver's leaf evaluator.
/// Returns the leaf loads and objective, or `None` for an infeasible leaf.
pub fn evaluate_leaf(model: &MilpModel, choice: &[usize]) -> Result<Option<(Vec<f64>, f64)>> {
    let s = Structure::extract(model)?;
    if choice.len() != s.options.len() || choice.iter().zip(&s.options).any(|(&c, o)| c >= o.len()) {
        return Err(Error::Precondition("choice does not match the model".into()));
    }
    let c: Vec<Option<u16>> = choice.iter().map(|&l| Some(l as u16)).collect();
    let mut x = vec![0.0; s.n_cells];
    if !s.solve(&c, &mut x) {
        return Ok(None);
    }
    let obj = s.bound(&c, &x);
    Ok(Some((x, obj)))
}

fn decode(model: &MilpModel, choice: &[usize]) -> Association {
    Association::from_sets(
        choice
            .iter()
            .enumerate()
            .map(|(j, &l)| model.options[j][l].clone())
            .collect(),
    )
}

/// Best-first branch-and-bound over per-UE option choices.
pub fn solve_branch_and_bound(model: &MilpModel, opts: &BnbOptions) -> Result<MilpSolution> {
    let s = Structure::extract(model)?;
    let m = s.options.len();
    if s.options.iter().any(|o| o.len() > u16::MAX as usize) {
        return Err(unsupported("too many options"));
    }
    let order: Vec<UeId> = match &opts.branch_order {
        Some(o) => {
            let mut sorted = o.clone();
            sorted.sort_unstable();
            if sorted != (0..m).collect::<Vec<_>>() {
                return Err(Error::InvalidConfig("branch order is not a permutation".into()));
            }
            o.clone()
        }
        None => {
            let mut o: Vec<UeId> = (0..m).collect();
            o.sort_by(|&a, &b| {
                let (ia, ib) = (s.options[a][0].intercept, s.options[b][0].intercept);
                ib.total_cmp(&ia).then(a.cmp(&b))
            });
            o
        }
    };
    // Skip UEs with a single option: they are decided at the root.
    let mut root_choice: Vec<Option<u16>> = vec![None; m];
    for (j, o) in s.options.iter().enumerate() {
        if o.len() == 1 {
            root_choice[j] = Some(0);
        }
    }
    let order: Vec<UeId> = order.into_iter().filter(|&j| root_choice[j].is_none()).collect();

    let mut incumbent: Option<(Vec<usize>, f64)> = None;
    let mut nodes = 0usize;
    let mut seq = 0u64;
    let finish = |incumbent: Option<(Vec<usize>, f64)>, bound: f64, status, nodes| {
        let (assignment, choice, objective_lp) = match incumbent {
            Some((c, v)) => (Some(decode(model, &c)), Some(c), v),
            None => (None, None, f64::INFINITY),
        };
        MilpSolution {
            assignment,
            choice,
            objective_lp,
            objective_true: None,
            bound,
            status,
            nodes_explored: nodes,
        }
    };

    let mut root_x = vec![0.0; s.n_cells];
    if !s.solve(&root_choice, &mut root_x) {
        return Ok(finish(None, f64::INFINITY, MilpStatus::Infeasible, 1));
    }
    let root_bound = s.bound(&root_choice, &root_x);

    // Greedy dive for an initial incumbent.
    {
        let mut c = root_choice.clone();
        let mut x = root_x.clone();
        let mut ok = true;
        for &j in &order {
            let mut best: Option<(f64, u16, Vec<f64>)> = None;
            for l in 0..s.options[j].len() as u16 {
                c[j] = Some(l);
                let mut y = x.clone();
                if s.solve(&c, &mut y) {
                    let b = s.bound(&c, &y);
                    if best.as_ref().is_none_or(|(bb, _, _)| b < *bb) {
                        best = Some((b, l, y));
                    }
                }
            }
            match best {
                Some((_, l, y)) => {
                    c[j] = Some(l);
                    x = y;
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            let v = s.improve(&order, &mut c, &mut x);
            incumbent = Some((c.iter().map(|l| l.unwrap() as usize).collect(), v));
        }
    }

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: root_bound,
        seq,
        depth: 0,
        choice: root_choice,
        x: root_x,
    });
    seq += 1;

    while let Some(node) = heap.peek() {
        let best_open = node.bound;
        if let Some((_, inc)) = &incumbent {
            if best_open >= inc - PRUNE_SLACK {
                let inc = *inc;
                return Ok(finish(incumbent, inc.min(best_open), MilpStatus::Optimal, nodes));
            }
            if opts.relative_gap > 0.0 && (inc - best_open) <= opts.relative_gap * inc.abs() {
                return Ok(finish(incumbent, best_open, MilpStatus::GapLimit, nodes));
            }
        }
        if nodes >= opts.node_limit {
            let bound = incumbent.as_ref().map_or(best_open, |(_, v)| v.min(best_open));
            return Ok(finish(incumbent, bound, MilpStatus::NodeLimit, nodes));
        }
        let node = heap.pop().expect("peeked");
        nodes += 1;
        let j = order[node.depth];
        for l in 0..s.options[j].len() as u16 {
            let mut choice = node.choice.clone();
            choice[j] = Some(l);
            let mut x = node.x.clone();
            if !s.solve(&choice, &mut x) {
                continue;
            }
            let bound = s.bound(&choice, &x);
            if incumbent.as_ref().is_some_and(|(_, v)| bound >= v - PRUNE_SLACK) {
                continue;
            }
            if node.depth + 1 == order.len() {
                let c = choice.iter().map(|l| l.unwrap() as usize).collect();
                incumbent = Some((c, bound));
            } else {
                heap.push(Node {
                    bound,
                    seq,
                    depth: node.depth + 1,
                    choice,
                    x,
                });
                seq += 1;
            }
        }
    }
    Ok(match incumbent {
        Some((c, v)) => finish(Some((c, v)), v, MilpStatus::Optimal, nodes),
        None => finish(None, f64::INFINITY, MilpStatus::Infeasible, nodes),
    })
}
