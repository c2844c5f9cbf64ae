//! Linear model construction.
//!
//! The exact per-station draw `a_n * P_on + (1 - a_n) * P_off` is bilinear in
//! the mode and association binaries. For binaries `x * y <= (x + y) / 2`, so
//! the draw admits the linear upper bound
//!
//! ```text
//! P_up_n = sum_m (k_mn / 2) w_mn + (sum_m k_mn / 2 + P_s - P_off) a_n + P_off
//! ```
//!
//! whose clipped shortfall `sum_n max(P_up_n - P_renew_n, 0)` is turned into
//! a plain MILP by one epigraph variable `y_n >= P_up_n - P_renew_n, y_n >= 0`
//! per station. This module builds that model, the renewable-blind
//! total-power variant, and maps solver output back to a [`Decision`].

use crate::milp::{MilpSolution, SolveStatus};
use crate::power::{kappa, Decision, DecisionError, PowerParams, RenewableRealization};
use crate::scenario::Scenario;
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// One sparse constraint row: `sum(coeff * column) relation rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// What a column means in the network formulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VarRole {
    /// `w_{m,n}`: user `user` served by station `bs`.
    Assoc { user: usize, bs: usize },
    /// `a_n`: station `bs` switched ON. Never created for the macro station.
    Mode { bs: usize },
    /// `y_n`: epigraph variable for station `bs`'s clipped shortfall.
    Shortfall { bs: usize },
}

/// A sparse linear model with binary and continuous columns, minimized.
///
/// The objective carries an explicit constant so reported values are
/// absolute watts for the network models. Construction order is fixed, so
/// identical inputs produce identical models.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MilpModel {
    variables: Vec<Variable>,
    objective: Vec<(usize, f64)>,
    objective_constant: f64,
    constraints: Vec<Constraint>,
    var_index: BTreeMap<VarRole, usize>,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: f64,
    ) -> usize {
        assert!(lower <= upper, "inverted bounds on {}", name.into());
        self.variables.push(Variable {
            name: name.into(),
            kind,
            lower,
            upper,
        });
        self.variables.len() - 1
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            kind: VarKind::Binary,
            lower: 0.0,
            upper: 1.0,
        });
        self.variables.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) {
        debug_assert!(terms.iter().all(|&(j, _)| j < self.variables.len()));
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            relation,
            rhs,
        });
    }

    pub fn set_objective(&mut self, terms: Vec<(usize, f64)>, constant: f64) {
        debug_assert!(terms.iter().all(|&(j, _)| j < self.variables.len()));
        self.objective = terms;
        self.objective_constant = constant;
    }

    fn bind(&mut self, role: VarRole, column: usize) {
        let previous = self.var_index.insert(role, column);
        debug_assert!(previous.is_none(), "role bound twice");
    }

    pub fn n_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(usize, f64)] {
        &self.objective
    }

    pub fn objective_constant(&self) -> f64 {
        self.objective_constant
    }

    /// Column for a role, if this model has it.
    pub fn column(&self, role: VarRole) -> Option<usize> {
        self.var_index.get(&role).copied()
    }

    pub fn roles(&self) -> impl Iterator<Item = (VarRole, usize)> + '_ {
        self.var_index.iter().map(|(&role, &col)| (role, col))
    }

    pub fn binary_columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(j, _)| j)
    }

    /// Objective value of a point, constant included.
    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective_constant
            + self
                .objective
                .iter()
                .map(|&(j, c)| c * values[j])
                .sum::<f64>()
    }

    /// Largest bound or row violation of a point. This is the independent
    /// feasibility check: plain dot products against the stored rows, no
    /// solver arithmetic involved.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, v) in self.variables.iter().enumerate() {
            worst = worst.max(v.lower - values[j]).max(values[j] - v.upper);
        }
        for row in &self.constraints {
            let lhs: f64 = row.terms.iter().map(|&(j, c)| c * values[j]).sum();
            let violation = match row.relation {
                Relation::Le => lhs - row.rhs,
                Relation::Ge => row.rhs - lhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(violation);
        }
        worst
    }

    /// A copy with every binary clamped to the given decision, used to
    /// cross-check the epigraph rows against directly evaluated bounds.
    pub fn with_binaries_fixed(&self, decision: &Decision) -> MilpModel {
        let mut fixed = self.clone();
        for (role, col) in self.var_index.iter() {
            let value = match *role {
                VarRole::Assoc { user, bs } => {
                    if decision.serving_bs(user) == bs {
                        1.0
                    } else {
                        0.0
                    }
                }
                VarRole::Mode { bs } => {
                    if decision.is_on(bs) {
                        1.0
                    } else {
                        0.0
                    }
                }
                VarRole::Shortfall { .. } => continue,
            };
            fixed.variables[*col].lower = value;
            fixed.variables[*col].upper = value;
        }
        fixed
    }

    /// LP-style text dump for debugging and cross-checking against external
    /// solvers.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        out.push_str("Minimize\n obj:");
        for &(j, c) in &self.objective {
            let _ = write!(out, " {:+} {}", c, self.variables[j].name);
        }
        if self.objective.is_empty() {
            out.push_str(" 0");
        }
        out.push('\n');
        if self.objective_constant != 0.0 {
            let _ = writeln!(out, "\\ objective constant: {:+}", self.objective_constant);
        }
        out.push_str("Subject To\n");
        for row in &self.constraints {
            let _ = write!(out, " {}:", row.name);
            for &(j, c) in &row.terms {
                let _ = write!(out, " {:+} {}", c, self.variables[j].name);
            }
            let rel = match row.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let _ = writeln!(out, " {} {}", rel, row.rhs);
        }
        out.push_str("Bounds\n");
        for v in &self.variables {
            if v.kind == VarKind::Binary {
                continue;
            }
            if v.upper.is_finite() {
                let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper);
            } else {
                let _ = writeln!(out, " {} <= {}", v.lower, v.name);
            }
        }
        let binaries: Vec<&str> = self
            .variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .map(|v| v.name.as_str())
            .collect();
        if !binaries.is_empty() {
            let _ = writeln!(out, "Binaries\n {}", binaries.join(" "));
        }
        out.push_str("End\n");
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FormulationError {
    #[error("solution status is {0:?}, expected Optimal")]
    NotOptimal(SolveStatus),
    #[error("binary column {name} has non-integral value {value}")]
    NonIntegralSolution { name: String, value: f64 },
    #[error("user {0} is served by no station in the solution")]
    UnassignedUser(usize),
    #[error("user {0} is served by more than one station in the solution")]
    DoublyAssignedUser(usize),
    #[error("reconstructed decision violates the constraints: {0}")]
    InvalidDecision(#[from] DecisionError),
}

/// Linear upper bound on station `n`'s total draw, evaluated at a decision.
///
/// Tight whenever `a_n = w_mn` for every covered user; otherwise each
/// covered-but-unassigned user of an ON station contributes `k_mn / 2` of
/// slack.
pub fn p_tilde_total(
    scenario: &Scenario,
    params: &PowerParams,
    decision: &Decision,
    n: usize,
) -> f64 {
    let bs = scenario.station(n);
    let a = if decision.is_on(n) { 1.0 } else { 0.0 };
    let mut half_kappa_sum = 0.0;
    let mut assigned_half_kappa = 0.0;
    for &m in scenario.coverage_bs(n) {
        let half = kappa(scenario, params, m, n).expect("coverage pair") / 2.0;
        half_kappa_sum += half;
        if decision.serving_bs(m) == n {
            assigned_half_kappa += half;
        }
    }
    assigned_half_kappa
        + (half_kappa_sum + bs.static_power_w - bs.off_power_w) * a
        + bs.off_power_w
}

/// The surrogate objective: total clipped shortfall of the linear upper
/// bound. This is what the planner MILP minimizes; schemes are still scored
/// on the exact objective.
pub fn surrogate_nonrenew_total(
    scenario: &Scenario,
    params: &PowerParams,
    decision: &Decision,
    renew: &RenewableRealization,
) -> f64 {
    (0..scenario.n_stations())
        .map(|n| (p_tilde_total(scenario, params, decision, n) - renew.get(n)).max(0.0))
        .sum()
}

struct CoreModel {
    model: MilpModel,
    /// Per station: `sum_m k_mn / 2` over covered users.
    half_kappa_sum: Vec<f64>,
}

/// Shared constraint skeleton of both network models: association columns
/// for coverage pairs, mode columns for switchable stations, assignment
/// rows, capacity rows, and linking rows. The macro station's mode is folded
/// in as the constant 1.
fn build_core(scenario: &Scenario, params: &PowerParams) -> CoreModel {
    let mut model = MilpModel::new();

    for (m, n) in scenario.coverage_pairs() {
        let col = model.add_binary(format!("w_{m}_{n}"));
        model.bind(VarRole::Assoc { user: m, bs: n }, col);
    }
    for n in 1..scenario.n_stations() {
        let col = model.add_binary(format!("a_{n}"));
        model.bind(VarRole::Mode { bs: n }, col);
    }

    for m in 0..scenario.n_users() {
        let terms = scenario
            .coverage_user(m)
            .iter()
            .map(|&n| (model.column(VarRole::Assoc { user: m, bs: n }).unwrap(), 1.0))
            .collect();
        model.add_constraint(format!("assign_u{m}"), terms, Relation::Eq, 1.0);
    }
    for n in 0..scenario.n_stations() {
        let terms = scenario
            .coverage_bs(n)
            .iter()
            .map(|&m| (model.column(VarRole::Assoc { user: m, bs: n }).unwrap(), 1.0))
            .collect();
        model.add_constraint(
            format!("cap_bs{n}"),
            terms,
            Relation::Le,
            f64::from(scenario.station(n).capacity),
        );
    }
    for (m, n) in scenario.coverage_pairs() {
        if n == 0 {
            // w_{m,0} <= a_0 = 1 already holds through the binary bound.
            continue;
        }
        let w = model.column(VarRole::Assoc { user: m, bs: n }).unwrap();
        let a = model.column(VarRole::Mode { bs: n }).unwrap();
        model.add_constraint(
            format!("link_u{m}_bs{n}"),
            vec![(w, 1.0), (a, -1.0)],
            Relation::Le,
            0.0,
        );
    }

    let half_kappa_sum = (0..scenario.n_stations())
        .map(|n| {
            scenario
                .coverage_bs(n)
                .iter()
                .map(|&m| kappa(scenario, params, m, n).expect("coverage pair") / 2.0)
                .sum()
        })
        .collect();

    CoreModel {
        model,
        half_kappa_sum,
    }
}

/// Builds the carbon-aware planner MILP: minimize the total epigraph
/// shortfall `sum_n y_n` with one row per station tying `y_n` to the linear
/// upper bound minus that station's harvested power.
pub fn build_p3(
    scenario: &Scenario,
    params: &PowerParams,
    renew: &RenewableRealization,
) -> MilpModel {
    assert_eq!(renew.len(), scenario.n_stations());
    let CoreModel {
        mut model,
        half_kappa_sum,
    } = build_core(scenario, params);

    let mut objective = Vec::with_capacity(scenario.n_stations());
    for n in 0..scenario.n_stations() {
        let bs = scenario.station(n);
        // Cap covering both mode extremes keeps the relaxation bounded.
        let cap = (2.0 * half_kappa_sum[n] + bs.static_power_w)
            .max(half_kappa_sum[n] + bs.off_power_w);
        let y = model.add_variable(format!("y_{n}"), VarKind::Continuous, 0.0, cap);
        model.bind(VarRole::Shortfall { bs: n }, y);
        objective.push((y, 1.0));
    }

    for n in 0..scenario.n_stations() {
        let bs = scenario.station(n);
        let y = model.column(VarRole::Shortfall { bs: n }).unwrap();
        let activation = half_kappa_sum[n] + bs.static_power_w - bs.off_power_w;
        let mut terms: Vec<(usize, f64)> = scenario
            .coverage_bs(n)
            .iter()
            .map(|&m| {
                let w = model.column(VarRole::Assoc { user: m, bs: n }).unwrap();
                let half = kappa(scenario, params, m, n).expect("coverage pair") / 2.0;
                (w, half)
            })
            .collect();
        let rhs = if n == 0 {
            // a_0 = 1: the activation term is constant.
            renew.get(n) - bs.off_power_w - activation
        } else {
            let a = model.column(VarRole::Mode { bs: n }).unwrap();
            terms.push((a, activation));
            renew.get(n) - bs.off_power_w
        };
        terms.push((y, -1.0));
        model.add_constraint(format!("shortfall_bs{n}"), terms, Relation::Le, rhs);
    }

    model.set_objective(objective, 0.0);
    model
}

/// Builds the renewable-blind baseline MILP: minimize the summed linear
/// upper bound on total draw. Same constraint skeleton as [`build_p3`], no
/// epigraph columns, and harvested power never appears.
pub fn build_min_power(scenario: &Scenario, params: &PowerParams) -> MilpModel {
    let CoreModel {
        mut model,
        half_kappa_sum,
    } = build_core(scenario, params);

    let mut objective = Vec::new();
    // Off-power of switchable stations plus the macro station's constant
    // activation make the reported objective absolute watts.
    let mbs = scenario.station(0);
    let mut constant = half_kappa_sum[0] + mbs.static_power_w;
    for n in 1..scenario.n_stations() {
        constant += scenario.station(n).off_power_w;
    }

    for (m, n) in scenario.coverage_pairs() {
        let w = model.column(VarRole::Assoc { user: m, bs: n }).unwrap();
        let half = kappa(scenario, params, m, n).expect("coverage pair") / 2.0;
        objective.push((w, half));
    }
    for n in 1..scenario.n_stations() {
        let bs = scenario.station(n);
        let a = model.column(VarRole::Mode { bs: n }).unwrap();
        objective.push((a, half_kappa_sum[n] + bs.static_power_w - bs.off_power_w));
    }

    model.set_objective(objective, constant);
    model
}

/// Rounds a solver solution back into a validated [`Decision`].
pub fn decision_from_solution(
    scenario: &Scenario,
    model: &MilpModel,
    solution: &MilpSolution,
    integrality_tol: f64,
) -> Result<Decision, FormulationError> {
    if solution.status != SolveStatus::Optimal {
        return Err(FormulationError::NotOptimal(solution.status));
    }
    for j in model.binary_columns() {
        let value = solution.values[j];
        if (value - value.round()).abs() > integrality_tol || !(value.round() == 0.0 || value.round() == 1.0)
        {
            return Err(FormulationError::NonIntegralSolution {
                name: model.variables()[j].name.clone(),
                value,
            });
        }
    }

    let mut on = vec![false; scenario.n_stations()];
    on[0] = true;
    let mut serving = vec![usize::MAX; scenario.n_users()];
    for (role, col) in model.roles() {
        let value = solution.values[col].round();
        match role {
            VarRole::Mode { bs } => on[bs] = value == 1.0,
            VarRole::Assoc { user, bs } => {
                if value == 1.0 {
                    if serving[user] != usize::MAX {
                        return Err(FormulationError::DoublyAssignedUser(user));
                    }
                    serving[user] = bs;
                }
            }
            VarRole::Shortfall { .. } => {}
        }
    }
    if let Some(user) = serving.iter().position(|&bs| bs == usize::MAX) {
        return Err(FormulationError::UnassignedUser(user));
    }

    Ok(Decision::new(scenario, on, serving)?)
}
