//! The comparable planning schemes: the carbon-aware MILP planner, two
//! baselines, and an exhaustive oracle for exact optima on small instances.

use crate::formulation::{build_min_power, build_p3, decision_from_solution, FormulationError};
use crate::milp::{solve_milp, MilpError, SolveStats, SolveStatus, SolverConfig};
use crate::power::{kappa, Decision, PowerParams, RenewableRealization};
use crate::scenario::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum SchemeError {
    #[error("{scheme} solver returned {status:?}")]
    SolverFailed {
        scheme: &'static str,
        status: SolveStatus,
    },
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error("no covering station with remaining capacity for user {user}")]
    AssignmentInfeasible { user: usize },
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("estimated {estimate} evaluations exceed the budget of {budget}")]
    TooLarge { estimate: u64, budget: u64 },
    #[error("no mode vector admits a feasible assignment")]
    Infeasible,
}

/// Which objective the oracle minimizes exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleObjective {
    /// The true clipped non-renewable draw.
    Exact,
    /// The clipped shortfall of the linear upper bound, i.e. what the
    /// carbon-aware MILP minimizes.
    Surrogate,
}

/// Default evaluation budget for [`oracle_exact`].
pub const DEFAULT_ORACLE_BUDGET: u64 = 10_000_000;

/// The proposed planner: minimizes the epigraph MILP built from this trial's
/// renewable realization, then maps the optimum back to a decision.
pub fn carbon_aware(
    scenario: &Scenario,
    params: &PowerParams,
    renew: &RenewableRealization,
    solver_config: &SolverConfig,
) -> Result<Decision, SchemeError> {
    carbon_aware_with_stats(scenario, params, renew, solver_config).map(|(decision, _)| decision)
}

/// [`carbon_aware`] plus the solver statistics, for experiment reporting.
pub fn carbon_aware_with_stats(
    scenario: &Scenario,
    params: &PowerParams,
    renew: &RenewableRealization,
    solver_config: &SolverConfig,
) -> Result<(Decision, SolveStats), SchemeError> {
    let model = build_p3(scenario, params, renew);
    let solution = solve_milp(&model, solver_config)?;
    if solution.status != SolveStatus::Optimal {
        return Err(SchemeError::SolverFailed {
            scheme: "carbon-aware",
            status: solution.status,
        });
    }
    let decision = decision_from_solution(
        scenario,
        &model,
        &solution,
        solver_config.integrality_tol,
    )?;
    Ok((decision, solution.stats))
}

/// Baseline 1: every station ON, every user served by its nearest covering
/// station.
///
/// Capacity overflow is resolved greedily: users are processed in ascending
/// order of their nearest-station distance, each taking the closest covering
/// station that still has room.
pub fn shortest_distance(scenario: &Scenario) -> Result<Decision, SchemeError> {
    let nearest: Vec<f64> = (0..scenario.n_users())
        .map(|m| {
            scenario
                .coverage_user(m)
                .iter()
                .map(|&n| scenario.distance_m(m, n))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut order: Vec<usize> = (0..scenario.n_users()).collect();
    order.sort_by(|&a, &b| nearest[a].total_cmp(&nearest[b]).then(a.cmp(&b)));

    let mut load = vec![0u32; scenario.n_stations()];
    let mut serving = vec![usize::MAX; scenario.n_users()];
    for &m in &order {
        let mut candidates: Vec<usize> = scenario.coverage_user(m).to_vec();
        candidates.sort_by(|&a, &b| {
            scenario
                .distance_m(m, a)
                .total_cmp(&scenario.distance_m(m, b))
                .then(a.cmp(&b))
        });
        let chosen = candidates
            .into_iter()
            .find(|&n| load[n] < scenario.station(n).capacity)
            .ok_or(SchemeError::AssignmentInfeasible { user: m })?;
        load[chosen] += 1;
        serving[m] = chosen;
    }

    let on = vec![true; scenario.n_stations()];
    Ok(Decision::new(scenario, on, serving).expect("greedy assignment respects the invariants"))
}

/// Baseline 2: minimizes the summed linear upper bound on total draw
/// (renewables plus non-renewables), blind to the harvested power.
pub fn minimized_power(
    scenario: &Scenario,
    params: &PowerParams,
    solver_config: &SolverConfig,
) -> Result<Decision, SchemeError> {
    minimized_power_with_stats(scenario, params, solver_config).map(|(decision, _)| decision)
}

/// [`minimized_power`] plus the solver statistics, for experiment reporting.
pub fn minimized_power_with_stats(
    scenario: &Scenario,
    params: &PowerParams,
    solver_config: &SolverConfig,
) -> Result<(Decision, SolveStats), SchemeError> {
    let model = build_min_power(scenario, params);
    let solution = solve_milp(&model, solver_config)?;
    if solution.status != SolveStatus::Optimal {
        return Err(SchemeError::SolverFailed {
            scheme: "minimized-power",
            status: solution.status,
        });
    }
    let decision = decision_from_solution(
        scenario,
        &model,
        &solution,
        solver_config.integrality_tol,
    )?;
    Ok((decision, solution.stats))
}

/// Exhaustive minimizer over every mode vector and every capacity-feasible
/// assignment, scoring the chosen objective exactly. Only viable on small
/// instances: the up-front estimate `2^(switchable stations) * prod_m
/// |covering stations of m|` must stay within `budget`.
pub fn oracle_exact(
    scenario: &Scenario,
    params: &PowerParams,
    renew: &RenewableRealization,
    objective: OracleObjective,
    budget: u64,
) -> Result<(Decision, f64), OracleError> {
    let switchable = scenario.n_stations() - 1;
    let mut estimate: u64 = 1u64.checked_shl(switchable as u32).unwrap_or(u64::MAX);
    for m in 0..scenario.n_users() {
        estimate = estimate.saturating_mul(scenario.coverage_user(m).len() as u64);
    }
    if estimate > budget {
        return Err(OracleError::TooLarge { estimate, budget });
    }

    // Per-user marginal costs over coverage, fixed across mode vectors.
    let cost_of: Vec<Vec<(usize, f64)>> = (0..scenario.n_users())
        .map(|m| {
            scenario
                .coverage_user(m)
                .iter()
                .map(|&n| {
                    let k = kappa(scenario, params, m, n).expect("coverage pair");
                    let cost = match objective {
                        OracleObjective::Exact => k,
                        OracleObjective::Surrogate => k / 2.0,
                    };
                    (n, cost)
                })
                .collect()
        })
        .collect();
    let half_kappa_sum: Vec<f64> = (0..scenario.n_stations())
        .map(|n| {
            scenario
                .coverage_bs(n)
                .iter()
                .map(|&m| kappa(scenario, params, m, n).expect("coverage pair"))
                .sum::<f64>()
                / 2.0
        })
        .collect();

    let mut search = OracleSearch {
        scenario,
        renew,
        cost_of: &cost_of,
        on: vec![true; scenario.n_stations()],
        load: vec![0u32; scenario.n_stations()],
        spent: vec![0.0; scenario.n_stations()],
        serving: vec![usize::MAX; scenario.n_users()],
        best: None,
    };

    for mask in 0u64..(1u64 << switchable) {
        for k in 0..switchable {
            search.on[k + 1] = (mask >> k) & 1 == 1;
        }
        // Station cost before any assignment under this mode vector.
        for n in 0..scenario.n_stations() {
            let bs = scenario.station(n);
            search.spent[n] = if !search.on[n] {
                bs.off_power_w
            } else {
                match objective {
                    OracleObjective::Exact => bs.static_power_w,
                    OracleObjective::Surrogate => half_kappa_sum[n] + bs.static_power_w,
                }
            };
        }
        let base: f64 = (0..scenario.n_stations())
            .map(|n| (search.spent[n] - renew.get(n)).max(0.0))
            .sum();
        search.load.iter_mut().for_each(|l| *l = 0);
        search.assign(0, base);
    }

    match search.best {
        Some((value, on, serving)) => {
            let decision =
                Decision::new(scenario, on, serving).expect("oracle emits feasible decisions");
            Ok((decision, value))
        }
        None => Err(OracleError::Infeasible),
    }
}

struct OracleSearch<'a> {
    scenario: &'a Scenario,
    renew: &'a RenewableRealization,
    /// Per user: (covering station, marginal cost) pairs.
    cost_of: &'a [Vec<(usize, f64)>],
    on: Vec<bool>,
    load: Vec<u32>,
    /// Unclipped running cost per station under the current partial
    /// assignment.
    spent: Vec<f64>,
    serving: Vec<usize>,
    best: Option<(f64, Vec<bool>, Vec<usize>)>,
}

impl OracleSearch<'_> {
    /// Depth-first over users with capacity pruning. Assignments only add
    /// cost, so a partial clipped sum at or above the incumbent closes the
    /// branch; the first minimizer in search order wins ties.
    fn assign(&mut self, m: usize, clipped_sum: f64) {
        if let Some((best, _, _)) = &self.best {
            if clipped_sum >= *best {
                return;
            }
        }
        if m == self.scenario.n_users() {
            self.best = Some((clipped_sum, self.on.clone(), self.serving.clone()));
            return;
        }
        for idx in 0..self.cost_of[m].len() {
            let (n, cost) = self.cost_of[m][idx];
            if !self.on[n] || self.load[n] >= self.scenario.station(n).capacity {
                continue;
            }
            let renew = self.renew.get(n);
            let before = (self.spent[n] - renew).max(0.0);
            let after = (self.spent[n] + cost - renew).max(0.0);
            self.load[n] += 1;
            self.spent[n] += cost;
            self.serving[m] = n;
            self.assign(m + 1, clipped_sum + (after - before));
            self.serving[m] = usize::MAX;
            self.spent[n] -= cost;
            self.load[n] -= 1;
        }
    }
}

/// Deterministic generators shared by property tests and the acceptance
/// suite.
#[doc(hidden)]
pub mod test_support {
    use super::*;
    use crate::power::WindModel;
    use crate::scenario::{build_scenario, generate_users, BaseStation};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    /// A small random scenario whose macro station can absorb every user,
    /// so any mode vector admits a feasible assignment.
    pub fn random_scenario(rng: &mut ChaCha8Rng) -> Scenario {
        let n_sbs = rng.gen_range(0..=3);
        let n_users = rng.gen_range(1..=10);
        scenario_with(rng, n_sbs, n_users)
    }

    /// Random scenario with the given shape; macro capacity covers all
    /// users, small cells get tighter random capacities.
    pub fn scenario_with(rng: &mut ChaCha8Rng, n_sbs: usize, n_users: usize) -> Scenario {
        let mut stations = vec![BaseStation {
            id: 0,
            x_m: 0.0,
            y_m: 0.0,
            radius_m: 600.0,
            capacity: n_users as u32,
            static_power_w: 2000.0,
            off_power_w: 0.0,
            turbine_radius_m: 3.0,
        }];
        for i in 0..n_sbs {
            let angle = rng.gen::<f64>() * TAU;
            let dist = rng.gen_range(100.0..450.0);
            stations.push(BaseStation {
                id: i + 1,
                x_m: dist * angle.cos(),
                y_m: dist * angle.sin(),
                radius_m: rng.gen_range(150.0..400.0),
                capacity: rng.gen_range(1..=n_users as u32),
                static_power_w: 2000.0,
                off_power_w: 0.0,
                turbine_radius_m: 3.0,
            });
        }
        let users = generate_users(rng.gen(), n_users, 600.0);
        build_scenario(stations, users).expect("generated scenario is valid")
    }

    /// Random feasible decision: random small-cell modes, each user sent to
    /// a uniformly chosen ON covering station with remaining capacity (the
    /// macro station always has room).
    pub fn random_decision(rng: &mut ChaCha8Rng, scenario: &Scenario) -> Decision {
        let mut on = vec![true; scenario.n_stations()];
        for mode in on.iter_mut().skip(1) {
            *mode = rng.gen_bool(0.5);
        }
        let mut load = vec![0u32; scenario.n_stations()];
        let serving: Vec<usize> = (0..scenario.n_users())
            .map(|m| {
                let candidates: Vec<usize> = scenario
                    .coverage_user(m)
                    .iter()
                    .copied()
                    .filter(|&n| on[n] && load[n] < scenario.station(n).capacity)
                    .collect();
                let n = candidates[rng.gen_range(0..candidates.len())];
                load[n] += 1;
                n
            })
            .collect();
        Decision::new(scenario, on, serving).expect("constructed to be feasible")
    }

    /// Random renewable realization: a mix of zero, moderate, and abundant
    /// wind stations.
    pub fn random_renewables(rng: &mut ChaCha8Rng, n_stations: usize) -> RenewableRealization {
        RenewableRealization {
            p_renew_w: (0..n_stations)
                .map(|_| match rng.gen_range(0..3) {
                    0 => 0.0,
                    1 => rng.gen_range(0.0..3000.0),
                    _ => rng.gen_range(3000.0..9000.0),
                })
                .collect(),
        }
    }

    /// One (scenario, feasible decision, realization) triple.
    pub fn random_triple(seed: u64) -> (Scenario, Decision, RenewableRealization) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scenario = random_scenario(&mut rng);
        let decision = random_decision(&mut rng, &scenario);
        let renew = if rng.gen_bool(0.5) {
            random_renewables(&mut rng, scenario.n_stations())
        } else {
            crate::power::sample_renewables(
                &WindModel::default(),
                &scenario,
                &PowerParams::default(),
                rng.gen(),
            )
        };
        (scenario, decision, renew)
    }
}
