//! Mixed-integer linear programming: a dense two-phase simplex with bounded
//! variables for the LP relaxation, and branch-and-bound over the binary
//! columns on top of it.
//!
//! Everything is deterministic: fixed pivot rules with Bland's rule as the
//! anti-cycling fallback, branching ties broken by lowest column index, and
//! node ids breaking ties in the best-bound queue. The same model and
//! config always produce the same solution values and node count.

use crate::formulation::{MilpModel, Relation};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
    TimeLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branching {
    MostFractional,
    FirstFractional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeOrder {
    BestBound,
    DepthFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub feasibility_tol: f64,
    pub integrality_tol: f64,
    /// Absolute gap at which a node is considered not worth exploring.
    /// Zero means prove optimality exactly.
    pub gap_tol: f64,
    pub node_limit: Option<u64>,
    pub time_limit_s: Option<f64>,
    pub branching: Branching,
    pub node_order: NodeOrder,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            integrality_tol: 1e-6,
            gap_tol: 0.0,
            node_limit: None,
            time_limit_s: None,
            branching: Branching::MostFractional,
            node_order: NodeOrder::BestBound,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveStats {
    pub nodes: u64,
    pub simplex_iterations: u64,
    pub wall_time_s: f64,
}

/// Solver output. `values` holds one entry per model column; when no point
/// was found (infeasible, or a limit hit before any incumbent) it is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// Objective of `values`, model constant included.
    pub objective: f64,
    /// Proven lower bound on the optimum; equals `objective` at `Optimal`.
    pub best_bound: f64,
    pub values: Vec<f64>,
    pub stats: SolveStats,
}

#[derive(Debug, thiserror::Error)]
pub enum MilpError {
    #[error("simplex exceeded {0} iterations without converging")]
    NumericalFailure(u64),
    #[error("column {0} has no finite lower bound")]
    UnboundedBelow(usize),
}

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-9;
const FIXED_EPS: f64 = 1e-12;
/// Window within which ratio-test limits count as tied.
const RATIO_TIE_EPS: f64 = 1e-12;

// ---------------------------------------------------------------------------
// LP relaxation: dense two-phase simplex with bounded variables.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

struct LpOutcome {
    status: LpStatus,
    /// Values of the structural columns, in original (unshifted) space.
    values: Vec<f64>,
    /// Objective including the model constant.
    objective: f64,
    iterations: u64,
}

/// Working tableau. All variables are shifted to lower bound zero; `upper`
/// holds the shifted upper bounds (possibly infinite). Columns are the
/// structural variables, then slacks, then artificials.
struct Tableau {
    rows: Vec<Vec<f64>>,
    /// Current value of the basic variable of each row.
    basic_value: Vec<f64>,
    /// Basic column per row.
    basis: Vec<usize>,
    /// Row in which a column is basic, `usize::MAX` if nonbasic.
    basis_pos: Vec<usize>,
    /// For nonbasic columns: parked at the upper bound instead of the lower.
    at_upper: Vec<bool>,
    upper: Vec<f64>,
    n_structural: usize,
    iterations: u64,
    iteration_cap: u64,
}

enum StepResult {
    Optimal,
    Unbounded,
    Progress,
}

impl Tableau {
    fn is_basic(&self, j: usize) -> bool {
        self.basis_pos[j] != usize::MAX
    }

    /// Entering column: nonbasic, movable, and improving for `cost`.
    /// Dantzig rule (largest improvement rate, ties to the lowest index)
    /// unless `bland`, which takes the lowest eligible index outright.
    fn price(&self, reduced: &[f64], bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.upper.len() {
            if self.upper[j] <= FIXED_EPS || self.is_basic(j) {
                continue;
            }
            let improvement = if self.at_upper[j] {
                reduced[j]
            } else {
                -reduced[j]
            };
            if improvement <= COST_EPS {
                continue;
            }
            if bland {
                return Some(j);
            }
            match best {
                Some((_, incumbent)) if improvement <= incumbent => {}
                _ => best = Some((j, improvement)),
            }
        }
        best.map(|(j, _)| j)
    }

    /// One simplex step for the given cost vector.
    fn step(&mut self, cost: &[f64], bland: bool) -> Result<StepResult, MilpError> {
        self.iterations += 1;
        if self.iterations > self.iteration_cap {
            return Err(MilpError::NumericalFailure(self.iteration_cap));
        }

        // Reduced costs, recomputed from scratch: z_j = c_j - c_B . T_j.
        let m = self.rows.len();
        let mut reduced = cost.to_vec();
        for i in 0..m {
            let cb = cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.rows[i];
            for (j, r) in reduced.iter_mut().enumerate() {
                *r -= cb * row[j];
            }
        }

        let Some(entering) = self.price(&reduced, bland) else {
            return Ok(StepResult::Optimal);
        };
        // +1 when rising off the lower bound, -1 when falling off the upper.
        let dir: f64 = if self.at_upper[entering] { -1.0 } else { 1.0 };

        // Ratio test: the largest step keeping every basic variable and the
        // entering variable inside their bounds.
        let mut best_step = self.upper[entering];
        let mut leaving: Option<(usize, bool)> = None; // (row, leaves at upper)
        for i in 0..m {
            let g = dir * self.rows[i][entering];
            let candidate = if g > PIVOT_EPS {
                Some((self.basic_value[i] / g, false))
            } else if g < -PIVOT_EPS && self.upper[self.basis[i]].is_finite() {
                Some(((self.upper[self.basis[i]] - self.basic_value[i]) / -g, true))
            } else {
                None
            };
            let Some((step, hits_upper)) = candidate else {
                continue;
            };
            if step < best_step - RATIO_TIE_EPS {
                best_step = step;
                leaving = Some((i, hits_upper));
            } else if step <= best_step + RATIO_TIE_EPS {
                leaving = self.tie_break(leaving, i, hits_upper, entering, bland);
            }
        }

        if best_step.is_infinite() {
            return Ok(StepResult::Unbounded);
        }
        let step = best_step.max(0.0);

        match leaving {
            None => {
                // Bound flip: the entering variable crosses to its other
                // bound without a basis change.
                for i in 0..m {
                    self.basic_value[i] -= dir * self.rows[i][entering] * self.upper[entering];
                }
                self.at_upper[entering] = !self.at_upper[entering];
            }
            Some((row, leaves_at_upper)) => {
                for i in 0..m {
                    if i != row {
                        self.basic_value[i] -= dir * self.rows[i][entering] * step;
                    }
                }
                let entering_value = if dir > 0.0 {
                    step
                } else {
                    self.upper[entering] - step
                };
                let leaver = self.basis[row];
                self.at_upper[leaver] = leaves_at_upper;
                self.pivot(row, entering, entering_value);
            }
        }
        Ok(StepResult::Progress)
    }

    /// Deterministic tie-break for the leaving row. Under Bland's rule the
    /// lowest basic column index wins; otherwise prefer the larger pivot
    /// magnitude for stability, then the lower column index.
    fn tie_break(
        &self,
        current: Option<(usize, bool)>,
        row: usize,
        leaves_at_upper: bool,
        entering: usize,
        bland: bool,
    ) -> Option<(usize, bool)> {
        let Some((current_row, _)) = current else {
            return Some((row, leaves_at_upper));
        };
        let better = if bland {
            self.basis[row] < self.basis[current_row]
        } else {
            let new_mag = self.rows[row][entering].abs();
            let cur_mag = self.rows[current_row][entering].abs();
            new_mag > cur_mag + RATIO_TIE_EPS
                || ((new_mag - cur_mag).abs() <= RATIO_TIE_EPS
                    && self.basis[row] < self.basis[current_row])
        };
        if better {
            Some((row, leaves_at_upper))
        } else {
            current
        }
    }

    /// Gauss-Jordan pivot making `entering` basic in `row` with the given
    /// value. The caller has already updated the other basic values.
    fn pivot(&mut self, row: usize, entering: usize, entering_value: f64) {
        let ncols = self.upper.len();
        let pivot = self.rows[row][entering];
        debug_assert!(pivot.abs() > 1e-13, "pivot element too small");
        let inv = 1.0 / pivot;
        for j in 0..ncols {
            self.rows[row][j] *= inv;
        }
        self.rows[row][entering] = 1.0;
        let pivot_row = std::mem::take(&mut self.rows[row]);
        for (i, other) in self.rows.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = other[entering];
            if factor == 0.0 {
                continue;
            }
            for j in 0..ncols {
                other[j] -= factor * pivot_row[j];
            }
            other[entering] = 0.0;
        }
        self.rows[row] = pivot_row;
        self.basis_pos[self.basis[row]] = usize::MAX;
        self.basis_pos[entering] = row;
        self.basis[row] = entering;
        self.basic_value[row] = entering_value;
    }

    /// Runs the simplex loop to optimality for `cost`, switching to Bland's
    /// rule after a long degenerate streak and back once progress resumes.
    fn optimize(&mut self, cost: &[f64]) -> Result<LpStatus, MilpError> {
        let mut bland = false;
        let mut stall = 0u64;
        let stall_trigger = 2 * (self.rows.len() + self.upper.len()) as u64 + 100;
        let mut last_objective = f64::INFINITY;
        loop {
            match self.step(cost, bland)? {
                StepResult::Optimal => return Ok(LpStatus::Optimal),
                StepResult::Unbounded => return Ok(LpStatus::Unbounded),
                StepResult::Progress => {
                    let objective = self.objective_of(cost);
                    if objective < last_objective - 1e-12 {
                        stall = 0;
                        bland = false;
                        last_objective = objective;
                    } else {
                        stall += 1;
                        if stall > stall_trigger {
                            bland = true;
                        }
                    }
                }
            }
        }
    }

    fn objective_of(&self, cost: &[f64]) -> f64 {
        let mut value = 0.0;
        for (i, &b) in self.basis.iter().enumerate() {
            value += cost[b] * self.basic_value[i];
        }
        for j in 0..self.upper.len() {
            if self.at_upper[j] && !self.is_basic(j) {
                value += cost[j] * self.upper[j];
            }
        }
        value
    }

    fn column_value(&self, j: usize) -> f64 {
        let pos = self.basis_pos[j];
        if pos != usize::MAX {
            self.basic_value[pos]
        } else if self.at_upper[j] {
            self.upper[j]
        } else {
            0.0
        }
    }
}

/// Solves the LP relaxation of `model` under per-column bounds `lower`,
/// `upper` (integrality ignored).
fn simplex(
    model: &MilpModel,
    lower: &[f64],
    upper: &[f64],
    iteration_cap: u64,
    feasibility_tol: f64,
) -> Result<LpOutcome, MilpError> {
    let n = model.n_variables();
    for (j, &lo) in lower.iter().enumerate() {
        if !lo.is_finite() {
            return Err(MilpError::UnboundedBelow(j));
        }
    }
    // Crossed bounds (as produced by conflicting fixings) are trivially
    // infeasible.
    if (0..n).any(|j| upper[j] < lower[j] - FIXED_EPS) {
        return Ok(LpOutcome {
            status: LpStatus::Infeasible,
            values: Vec::new(),
            objective: f64::INFINITY,
            iterations: 0,
        });
    }

    let m = model.n_constraints();
    let n_slack = model
        .constraints()
        .iter()
        .filter(|c| c.relation != Relation::Eq)
        .count();

    // Shift every structural variable to lower bound zero; inequality rows
    // get one slack column each, Ge rows normalized to Le by negation.
    let mut shifted_upper: Vec<f64> = (0..n).map(|j| (upper[j] - lower[j]).max(0.0)).collect();
    let mut rhs = vec![0.0; m];
    let mut dense = vec![vec![0.0; n + n_slack]; m];
    let mut slack_col = n;
    let mut slack_of_row = vec![usize::MAX; m];
    for (i, row) in model.constraints().iter().enumerate() {
        let mut b = row.rhs;
        for &(j, coeff) in &row.terms {
            b -= coeff * lower[j];
            dense[i][j] += coeff;
        }
        if row.relation == Relation::Ge {
            for value in dense[i].iter_mut() {
                *value = -*value;
            }
            b = -b;
        }
        if row.relation != Relation::Eq {
            dense[i][slack_col] = 1.0;
            slack_of_row[i] = slack_col;
            slack_col += 1;
        }
        rhs[i] = b;
    }
    shifted_upper.resize(n + n_slack, f64::INFINITY);

    // Nonnegative right-hand sides so the phase-1 start is feasible.
    for i in 0..m {
        if rhs[i] < 0.0 {
            for value in dense[i].iter_mut() {
                *value = -*value;
            }
            rhs[i] = -rhs[i];
        }
    }

    // Rows whose slack survived with +1 start with the slack basic; the
    // rest (equalities and negated inequalities) get an artificial.
    let mut basis = vec![usize::MAX; m];
    let mut artificial_rows = Vec::new();
    for i in 0..m {
        let s = slack_of_row[i];
        if s != usize::MAX && dense[i][s] == 1.0 {
            basis[i] = s;
        } else {
            artificial_rows.push(i);
        }
    }
    let n_real = n + n_slack;
    let ncols = n_real + artificial_rows.len();
    for row in dense.iter_mut() {
        row.resize(ncols, 0.0);
    }
    shifted_upper.resize(ncols, f64::INFINITY);
    for (k, &i) in artificial_rows.iter().enumerate() {
        dense[i][n_real + k] = 1.0;
        basis[i] = n_real + k;
    }
    let mut basis_pos = vec![usize::MAX; ncols];
    for (i, &b) in basis.iter().enumerate() {
        basis_pos[b] = i;
    }

    let mut tableau = Tableau {
        basic_value: rhs,
        rows: dense,
        basis,
        basis_pos,
        at_upper: vec![false; ncols],
        upper: shifted_upper,
        n_structural: n,
        iterations: 0,
        iteration_cap,
    };

    if !artificial_rows.is_empty() {
        let mut phase1_cost = vec![0.0; ncols];
        for k in 0..artificial_rows.len() {
            phase1_cost[n_real + k] = 1.0;
        }
        let status = tableau.optimize(&phase1_cost)?;
        if status == LpStatus::Unbounded {
            // A sum of nonnegative variables cannot be unbounded below;
            // reaching this means the arithmetic broke down.
            return Err(MilpError::NumericalFailure(tableau.iterations));
        }
        let infeasibility = tableau.objective_of(&phase1_cost);
        let scale = 1.0
            + tableau
                .basic_value
                .iter()
                .fold(0.0f64, |acc, &v| acc.max(v.abs()));
        if infeasibility > feasibility_tol * scale {
            return Ok(LpOutcome {
                status: LpStatus::Infeasible,
                values: Vec::new(),
                objective: f64::INFINITY,
                iterations: tableau.iterations,
            });
        }
        // Kick remaining zero-valued artificials out of the basis where a
        // real at-lower column can take over; rows with no such pivot are
        // redundant and the artificial stays pinned at zero.
        for i in 0..m {
            if tableau.basis[i] < n_real {
                continue;
            }
            let entering = (0..n_real).find(|&j| {
                !tableau.is_basic(j) && !tableau.at_upper[j] && tableau.rows[i][j].abs() > PIVOT_EPS
            });
            if let Some(j) = entering {
                let value = tableau.basic_value[i];
                tableau.at_upper[tableau.basis[i]] = false;
                tableau.pivot(i, j, value);
            }
        }
        for j in n_real..ncols {
            tableau.upper[j] = 0.0;
        }
    }

    let mut phase2_cost = vec![0.0; ncols];
    for &(j, c) in model.objective() {
        phase2_cost[j] += c;
    }
    let status = tableau.optimize(&phase2_cost)?;

    if status == LpStatus::Unbounded {
        return Ok(LpOutcome {
            status: LpStatus::Unbounded,
            values: Vec::new(),
            objective: f64::NEG_INFINITY,
            iterations: tableau.iterations,
        });
    }

    let values: Vec<f64> = (0..tableau.n_structural)
        .map(|j| lower[j] + tableau.column_value(j))
        .collect();
    let objective = model.objective_value(&values);
    Ok(LpOutcome {
        status: LpStatus::Optimal,
        values,
        objective,
        iterations: tableau.iterations,
    })
}

fn iteration_cap_for(model: &MilpModel) -> u64 {
    let size = (model.n_constraints() + model.n_variables()) as u64;
    50_000 + 200 * size
}

/// Solves the LP relaxation of `model`: integrality dropped, stored bounds
/// kept. Returns a primal-optimal basic solution, or the Infeasible /
/// Unbounded status.
pub fn solve_lp(model: &MilpModel) -> Result<MilpSolution, MilpError> {
    let start = Instant::now();
    let lower: Vec<f64> = model.variables().iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = model.variables().iter().map(|v| v.upper).collect();
    let outcome = simplex(
        model,
        &lower,
        &upper,
        iteration_cap_for(model),
        SolverConfig::default().feasibility_tol,
    )?;
    let status = match outcome.status {
        LpStatus::Optimal => SolveStatus::Optimal,
        LpStatus::Infeasible => SolveStatus::Infeasible,
        LpStatus::Unbounded => SolveStatus::Unbounded,
    };
    Ok(MilpSolution {
        status,
        objective: outcome.objective,
        best_bound: outcome.objective,
        values: outcome.values,
        stats: SolveStats {
            nodes: 1,
            simplex_iterations: outcome.iterations,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    })
}

// ---------------------------------------------------------------------------
// Branch and bound.
// ---------------------------------------------------------------------------

struct Node {
    id: u64,
    /// LP bound inherited from the parent; the root starts unbounded.
    bound: f64,
    /// Chain of binary fixings along the path from the root.
    fixings: Vec<(usize, f64)>,
}

/// Min-ordering on (bound, id) for the best-bound queue.
struct HeapNode(Node);

impl PartialEq for HeapNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapNode {}
impl PartialOrd for HeapNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapNode {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert so the smallest bound pops first,
        // oldest node winning ties.
        other
            .0
            .bound
            .total_cmp(&self.0.bound)
            .then_with(|| other.0.id.cmp(&self.0.id))
    }
}

enum Frontier {
    Heap(BinaryHeap<HeapNode>),
    Stack(Vec<Node>),
}

impl Frontier {
    fn new(order: NodeOrder) -> Self {
        match order {
            NodeOrder::BestBound => Frontier::Heap(BinaryHeap::new()),
            NodeOrder::DepthFirst => Frontier::Stack(Vec::new()),
        }
    }

    fn push(&mut self, node: Node) {
        match self {
            Frontier::Heap(heap) => heap.push(HeapNode(node)),
            Frontier::Stack(stack) => stack.push(node),
        }
    }

    fn pop(&mut self) -> Option<Node> {
        match self {
            Frontier::Heap(heap) => heap.pop().map(|h| h.0),
            Frontier::Stack(stack) => stack.pop(),
        }
    }

    fn min_bound(&self) -> Option<f64> {
        match self {
            Frontier::Heap(heap) => heap.peek().map(|h| h.0.bound),
            Frontier::Stack(stack) => stack.iter().map(|n| n.bound).min_by(f64::total_cmp),
        }
    }
}

/// Branch-and-bound over the binary columns of `model`.
///
/// With the default (no-limit) config the result is provably optimal: nodes
/// are pruned only when their LP bound cannot beat the incumbent. Under a
/// node or time limit the best incumbent and the tightest open bound are
/// reported instead.
pub fn solve_milp(model: &MilpModel, config: &SolverConfig) -> Result<MilpSolution, MilpError> {
    let start = Instant::now();
    let lower: Vec<f64> = model.variables().iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = model.variables().iter().map(|v| v.upper).collect();
    let binary_cols: Vec<usize> = model.binary_columns().collect();
    let iteration_cap = iteration_cap_for(model);
    // Tiny slack below the incumbent keeps objective ties from being
    // re-explored.
    let prune_eps = 1e-9;

    let mut frontier = Frontier::new(config.node_order);
    frontier.push(Node {
        id: 0,
        bound: f64::NEG_INFINITY,
        fixings: Vec::new(),
    });
    let mut next_id = 1u64;

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut stats = SolveStats::default();
    let mut limit_hit: Option<SolveStatus> = None;
    // Bound over already-closed subtrees; open nodes carry their own.
    let mut pruned_bound = f64::INFINITY;

    while let Some(node) = frontier.pop() {
        if let Some(limit) = config.node_limit {
            if stats.nodes >= limit {
                limit_hit = Some(SolveStatus::NodeLimit);
                pruned_bound = pruned_bound.min(node.bound);
                break;
            }
        }
        if let Some(limit) = config.time_limit_s {
            if start.elapsed().as_secs_f64() >= limit {
                limit_hit = Some(SolveStatus::TimeLimit);
                pruned_bound = pruned_bound.min(node.bound);
                break;
            }
        }
        if let Some((best, _)) = &incumbent {
            if node.bound >= best - config.gap_tol - prune_eps {
                pruned_bound = pruned_bound.min(node.bound);
                continue;
            }
        }

        let mut node_lower = lower.clone();
        let mut node_upper = upper.clone();
        for &(col, value) in &node.fixings {
            node_lower[col] = value;
            node_upper[col] = value;
        }

        let outcome = simplex(
            model,
            &node_lower,
            &node_upper,
            iteration_cap,
            config.feasibility_tol,
        )?;
        stats.nodes += 1;
        stats.simplex_iterations += outcome.iterations;
        if stats.nodes % 1024 == 0 {
            log::debug!(
                "nodes={} open_bound={:?} incumbent={:?}",
                stats.nodes,
                frontier.min_bound(),
                incumbent.as_ref().map(|(v, _)| *v)
            );
        }

        match outcome.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                // Binaries cannot restore a bound the continuous columns
                // lack, so the integer problem is unbounded too.
                return Ok(MilpSolution {
                    status: SolveStatus::Unbounded,
                    objective: f64::NEG_INFINITY,
                    best_bound: f64::NEG_INFINITY,
                    values: Vec::new(),
                    stats: finish(stats, start),
                });
            }
            LpStatus::Optimal => {}
        }

        if let Some((best, _)) = &incumbent {
            if outcome.objective >= best - config.gap_tol - prune_eps {
                pruned_bound = pruned_bound.min(outcome.objective);
                continue;
            }
        }

        let fractional = select_branching(
            &outcome.values,
            &binary_cols,
            config.branching,
            config.integrality_tol,
        );
        match fractional {
            None => {
                // Integral and better than any previous incumbent.
                incumbent = Some((outcome.objective, outcome.values));
            }
            Some(col) => {
                let mut down = node.fixings.clone();
                down.push((col, 0.0));
                let mut up = node.fixings.clone();
                up.push((col, 1.0));
                frontier.push(Node {
                    id: next_id,
                    bound: outcome.objective,
                    fixings: down,
                });
                frontier.push(Node {
                    id: next_id + 1,
                    bound: outcome.objective,
                    fixings: up,
                });
                next_id += 2;
            }
        }
    }

    let open_bound = frontier.min_bound().unwrap_or(f64::INFINITY);
    let proven_bound = pruned_bound.min(open_bound);

    match incumbent {
        Some((objective, values)) => {
            let status = limit_hit.unwrap_or(SolveStatus::Optimal);
            let best_bound = if status == SolveStatus::Optimal {
                objective
            } else {
                proven_bound.min(objective)
            };
            Ok(MilpSolution {
                status,
                objective,
                best_bound,
                values,
                stats: finish(stats, start),
            })
        }
        None => {
            let status = limit_hit.unwrap_or(SolveStatus::Infeasible);
            Ok(MilpSolution {
                status,
                objective: f64::INFINITY,
                best_bound: proven_bound,
                values: Vec::new(),
                stats: finish(stats, start),
            })
        }
    }
}

fn finish(mut stats: SolveStats, start: Instant) -> SolveStats {
    stats.wall_time_s = start.elapsed().as_secs_f64();
    stats
}

fn select_branching(
    values: &[f64],
    binary_cols: &[usize],
    rule: Branching,
    integrality_tol: f64,
) -> Option<usize> {
    match rule {
        Branching::FirstFractional => binary_cols
            .iter()
            .copied()
            .find(|&j| fractionality(values[j]) > integrality_tol),
        Branching::MostFractional => {
            let mut best: Option<(usize, f64)> = None;
            for &j in binary_cols {
                let f = fractionality(values[j]);
                if f <= integrality_tol {
                    continue;
                }
                match best {
                    Some((_, incumbent)) if f <= incumbent => {}
                    _ => best = Some((j, f)),
                }
            }
            best.map(|(j, _)| j)
        }
    }
}

fn fractionality(value: f64) -> f64 {
    (value - value.round()).abs()
}
