//! Power arithmetic: station consumption, harvested wind power, and the
//! exact non-renewable objective every scheme is scored on.

use crate::scenario::Scenario;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

/// Radiated-power and air-density constants.
///
/// The per-user radiated power is `kappa_coeff_w * d_km ^ kappa_exponent`
/// with the distance in kilometers; geometry elsewhere is in meters and the
/// conversion happens in [`kappa`] only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerParams {
    pub kappa_coeff_w: f64,
    pub kappa_exponent: f64,
    pub air_density_kg_m3: f64,
}

impl Default for PowerParams {
    fn default() -> Self {
        Self {
            kappa_coeff_w: 18.0,
            kappa_exponent: 2.6,
            air_density_kg_m3: 1.225,
        }
    }
}

/// Weibull wind-speed model; turbine radii come from the scenario and the
/// air density from [`PowerParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindModel {
    pub weibull_shape: f64,
    pub weibull_scale_m_s: f64,
}

impl Default for WindModel {
    fn default() -> Self {
        Self {
            weibull_shape: 2.081,
            weibull_scale_m_s: 6.69,
        }
    }
}

/// Harvested renewable power per station, in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewableRealization {
    pub p_renew_w: Vec<f64>,
}

impl RenewableRealization {
    pub fn zeros(n_stations: usize) -> Self {
        Self {
            p_renew_w: vec![0.0; n_stations],
        }
    }

    pub fn get(&self, n: usize) -> f64 {
        self.p_renew_w[n]
    }

    pub fn len(&self) -> usize {
        self.p_renew_w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_renew_w.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("realization serialization cannot fail")
    }

    pub fn load(path: &Path) -> Result<Self, PowerError> {
        let text = fs::read_to_string(path).map_err(|source| PowerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let realization: RenewableRealization =
            serde_json::from_str(&text).map_err(|source| PowerError::Parse {
                path: path.display().to_string(),
                source,
            })?;
        if realization.p_renew_w.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(PowerError::NegativeRenewable);
        }
        Ok(realization)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PowerError {
    #[error("user {user} is outside station {bs}'s coverage")]
    NotInCoverage { user: usize, bs: usize },
    #[error("renewable realization contains a negative entry")]
    NegativeRenewable,
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DecisionError {
    #[error("mode vector has {got} entries, scenario has {want} stations")]
    ModeLength { got: usize, want: usize },
    #[error("assignment vector has {got} entries, scenario has {want} users")]
    AssignmentLength { got: usize, want: usize },
    #[error("the macro station must stay ON")]
    MacroOff,
    #[error("user {user} assigned to station {bs} outside its coverage")]
    OutsideCoverage { user: usize, bs: usize },
    #[error("user {user} assigned to OFF station {bs}")]
    AssignedToOff { user: usize, bs: usize },
    #[error("station {bs} serves {load} users, capacity is {capacity}")]
    OverCapacity { bs: usize, load: usize, capacity: u32 },
}

/// A complete plan: per-station ON/OFF modes plus a user-to-station
/// assignment. Because every user is served by exactly one station, the
/// binary association matrix is stored as one station index per user.
///
/// Construction validates all feasibility invariants: the macro station is
/// ON, every user's station covers it and is ON, and no station exceeds its
/// capacity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    on: Vec<bool>,
    serving_bs: Vec<usize>,
}

/// Serialized form of a [`Decision`].
#[derive(Debug, Serialize, Deserialize)]
struct DecisionFile {
    a: Vec<u8>,
    assignments: Vec<AssignmentEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AssignmentEntry {
    user: usize,
    bs: usize,
}

impl Decision {
    pub fn new(
        scenario: &Scenario,
        on: Vec<bool>,
        serving_bs: Vec<usize>,
    ) -> Result<Self, DecisionError> {
        if on.len() != scenario.n_stations() {
            return Err(DecisionError::ModeLength {
                got: on.len(),
                want: scenario.n_stations(),
            });
        }
        if serving_bs.len() != scenario.n_users() {
            return Err(DecisionError::AssignmentLength {
                got: serving_bs.len(),
                want: scenario.n_users(),
            });
        }
        if !on[0] {
            return Err(DecisionError::MacroOff);
        }
        let mut load = vec![0usize; scenario.n_stations()];
        for (user, &bs) in serving_bs.iter().enumerate() {
            if !scenario.covers(user, bs) {
                return Err(DecisionError::OutsideCoverage { user, bs });
            }
            if !on[bs] {
                return Err(DecisionError::AssignedToOff { user, bs });
            }
            load[bs] += 1;
        }
        for (bs, &l) in load.iter().enumerate() {
            if l as u64 > u64::from(scenario.station(bs).capacity) {
                return Err(DecisionError::OverCapacity {
                    bs,
                    load: l,
                    capacity: scenario.station(bs).capacity,
                });
            }
        }
        Ok(Self { on, serving_bs })
    }

    pub fn is_on(&self, n: usize) -> bool {
        self.on[n]
    }

    /// Station serving user `m`.
    pub fn serving_bs(&self, m: usize) -> usize {
        self.serving_bs[m]
    }

    pub fn assignments(&self) -> &[usize] {
        &self.serving_bs
    }

    pub fn modes(&self) -> &[bool] {
        &self.on
    }

    pub fn users_of(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        self.serving_bs
            .iter()
            .enumerate()
            .filter(move |&(_, &bs)| bs == n)
            .map(|(m, _)| m)
    }

    pub fn to_json(&self) -> String {
        let file = DecisionFile {
            a: self.on.iter().map(|&b| u8::from(b)).collect(),
            assignments: self
                .serving_bs
                .iter()
                .enumerate()
                .map(|(user, &bs)| AssignmentEntry { user, bs })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("decision serialization cannot fail")
    }
}

/// Radiated power, in watts, station `n` spends on user `m`:
/// `kappa_coeff * d_km ^ kappa_exponent`.
///
/// The single meters-to-kilometers conversion in the codebase lives here.
pub fn kappa(
    scenario: &Scenario,
    params: &PowerParams,
    m: usize,
    n: usize,
) -> Result<f64, PowerError> {
    if !scenario.covers(m, n) {
        return Err(PowerError::NotInCoverage { user: m, bs: n });
    }
    let d_km = scenario.distance_m(m, n) / 1000.0;
    Ok(params.kappa_coeff_w * d_km.powf(params.kappa_exponent))
}

/// ON-mode draw of station `n`: radiated power for its assigned users plus
/// static power.
pub fn p_on(scenario: &Scenario, params: &PowerParams, decision: &Decision, n: usize) -> f64 {
    let radiated: f64 = decision
        .users_of(n)
        .map(|m| kappa(scenario, params, m, n).expect("decision respects coverage"))
        .sum();
    radiated + scenario.station(n).static_power_w
}

/// Total draw of station `n` under its current mode.
pub fn p_total(scenario: &Scenario, params: &PowerParams, decision: &Decision, n: usize) -> f64 {
    if decision.is_on(n) {
        p_on(scenario, params, decision, n)
    } else {
        scenario.station(n).off_power_w
    }
}

/// Non-renewable draw of station `n`: total draw minus harvested power,
/// clipped at zero. Surplus wind at one station never offsets another.
pub fn p_nonrenew(
    scenario: &Scenario,
    params: &PowerParams,
    decision: &Decision,
    renew: &RenewableRealization,
    n: usize,
) -> f64 {
    (p_total(scenario, params, decision, n) - renew.get(n)).max(0.0)
}

/// The exact objective all schemes are compared on: total non-renewable
/// draw across stations.
pub fn p_nonrenew_total(
    scenario: &Scenario,
    params: &PowerParams,
    decision: &Decision,
    renew: &RenewableRealization,
) -> f64 {
    (0..scenario.n_stations())
        .map(|n| p_nonrenew(scenario, params, decision, renew, n))
        .sum()
}

/// Draws one Weibull wind speed per station, inverse-CDF style:
/// `v = scale * (-ln(1 - U))^(1/shape)`.
///
/// Exposed separately from [`sample_renewables`] so experiments can reuse
/// one draw across several turbine radii.
pub fn sample_wind_speeds(wind: &WindModel, n_stations: usize, rng_seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    (0..n_stations)
        .map(|_| {
            let u: f64 = rng.gen();
            wind.weibull_scale_m_s * (-(1.0 - u).ln()).powf(1.0 / wind.weibull_shape)
        })
        .collect()
}

/// Wind power harvested by a turbine of radius `turbine_radius_m` at wind
/// speed `v`: `0.5 * rho * pi * l^2 * v^3`.
pub fn harvested_power(params: &PowerParams, turbine_radius_m: f64, v_m_s: f64) -> f64 {
    let swept_area = PI * turbine_radius_m * turbine_radius_m;
    0.5 * params.air_density_kg_m3 * swept_area * v_m_s.powi(3)
}

/// Per-station harvested power for the given wind speeds, using each
/// station's own turbine radius.
pub fn realization_from_speeds(
    scenario: &Scenario,
    params: &PowerParams,
    speeds: &[f64],
) -> RenewableRealization {
    assert_eq!(speeds.len(), scenario.n_stations());
    RenewableRealization {
        p_renew_w: scenario
            .stations()
            .iter()
            .zip(speeds)
            .map(|(bs, &v)| harvested_power(params, bs.turbine_radius_m, v))
            .collect(),
    }
}

/// Samples one renewable realization: independent Weibull wind speed per
/// station, then the cubic power law. Deterministic per seed.
pub fn sample_renewables(
    wind: &WindModel,
    scenario: &Scenario,
    params: &PowerParams,
    rng_seed: u64,
) -> RenewableRealization {
    let speeds = sample_wind_speeds(wind, scenario.n_stations(), rng_seed);
    realization_from_speeds(scenario, params, &speeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{build_scenario, paper_scenario, BaseStation, User};

    fn two_station_scenario() -> Scenario {
        // Macro at origin (r=600), one small cell at (400, 0) (r=200), and
        // two users: one at the origin, one at (200, 0) covered by both.
        build_scenario(
            vec![
                BaseStation {
                    id: 0,
                    x_m: 0.0,
                    y_m: 0.0,
                    radius_m: 600.0,
                    capacity: 10,
                    static_power_w: 2000.0,
                    off_power_w: 0.0,
                    turbine_radius_m: 3.0,
                },
                BaseStation {
                    id: 1,
                    x_m: 400.0,
                    y_m: 0.0,
                    radius_m: 200.0,
                    capacity: 10,
                    static_power_w: 2000.0,
                    off_power_w: 0.0,
                    turbine_radius_m: 3.0,
                },
            ],
            vec![
                User {
                    id: 0,
                    x_m: 0.0,
                    y_m: 0.0,
                },
                User {
                    id: 1,
                    x_m: 200.0,
                    y_m: 0.0,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn kappa_values() {
        let scenario = two_station_scenario();
        let params = PowerParams::default();
        // d = 0 m.
        assert_eq!(kappa(&scenario, &params, 0, 0).unwrap(), 0.0);
        // d = 200 m: 18 * 0.2^2.6.
        let k200 = kappa(&scenario, &params, 1, 0).unwrap();
        assert!((k200 - 0.2741261671750865).abs() < 1e-12);
        // d = 200 m to the small cell at (400, 0) as well.
        let k200b = kappa(&scenario, &params, 1, 1).unwrap();
        assert!((k200b - 0.2741261671750865).abs() < 1e-12);
    }

    #[test]
    fn kappa_600m() {
        // 18 * 0.6^2.6 for a user on the macro boundary.
        let scenario = build_scenario(
            vec![BaseStation {
                id: 0,
                x_m: 0.0,
                y_m: 0.0,
                radius_m: 600.0,
                capacity: 1,
                static_power_w: 2000.0,
                off_power_w: 0.0,
                turbine_radius_m: 0.0,
            }],
            vec![User {
                id: 0,
                x_m: 600.0,
                y_m: 0.0,
            }],
        )
        .unwrap();
        let k = kappa(&scenario, &PowerParams::default(), 0, 0).unwrap();
        assert!((k - 4.76942205985956).abs() < 1e-12);
    }

    #[test]
    fn kappa_outside_coverage_rejected() {
        let scenario = two_station_scenario();
        // User 0 at the origin is 400 m from the small cell (r=200).
        let err = kappa(&scenario, &PowerParams::default(), 0, 1).unwrap_err();
        assert!(matches!(err, PowerError::NotInCoverage { user: 0, bs: 1 }));
    }

    #[test]
    fn p_on_sums_assigned_users_plus_static() {
        let scenario = two_station_scenario();
        let params = PowerParams::default();

        // Nobody on the small cell: static power only.
        let d = Decision::new(&scenario, vec![true, true], vec![0, 0]).unwrap();
        assert_eq!(p_on(&scenario, &params, &d, 1), 2000.0);

        // One user at d=200 on the macro; the origin user contributes 0.
        assert!((p_on(&scenario, &params, &d, 0) - 2000.2741261671751).abs() < 1e-9);

        // Move the d=200 user to the small cell (also d=200 from it).
        let d2 = Decision::new(&scenario, vec![true, true], vec![0, 1]).unwrap();
        assert!((p_on(&scenario, &params, &d2, 1) - 2000.2741261671751).abs() < 1e-9);
    }

    #[test]
    fn p_total_respects_mode() {
        let scenario = two_station_scenario();
        let params = PowerParams::default();
        let d = Decision::new(&scenario, vec![true, false], vec![0, 0]).unwrap();
        assert_eq!(p_total(&scenario, &params, &d, 1), 0.0);
        assert_eq!(
            p_total(&scenario, &params, &d, 0),
            p_on(&scenario, &params, &d, 0)
        );

        let mut stations = scenario.stations().to_vec();
        stations[1].off_power_w = 50.0;
        let scenario2 = build_scenario(stations, scenario.users().to_vec()).unwrap();
        let d2 = Decision::new(&scenario2, vec![true, false], vec![0, 0]).unwrap();
        assert_eq!(p_total(&scenario2, &params, &d2, 1), 50.0);
    }

    #[test]
    fn nonrenew_clips_per_station() {
        let scenario = two_station_scenario();
        let params = PowerParams::default();
        let d = Decision::new(&scenario, vec![true, true], vec![0, 0]).unwrap();

        // Renewables dwarf consumption at both stations.
        let rich = RenewableRealization {
            p_renew_w: vec![5000.0, 5000.0],
        };
        assert_eq!(p_nonrenew_total(&scenario, &params, &d, &rich), 0.0);

        // No renewables: the objective is the full draw.
        let none = RenewableRealization::zeros(2);
        let draw = p_nonrenew_total(&scenario, &params, &d, &none);
        let expected = p_on(&scenario, &params, &d, 0) + 2000.0;
        assert!((draw - expected).abs() < 1e-9);

        // Surplus at one station does not offset the other: totals
        // (2000.274, 2000) against renewables (1500, 5000).
        let mixed = RenewableRealization {
            p_renew_w: vec![1500.0, 5000.0],
        };
        let value = p_nonrenew_total(&scenario, &params, &d, &mixed);
        let expected = p_on(&scenario, &params, &d, 0) - 1500.0;
        assert!((value - expected).abs() < 1e-9);
    }

    #[test]
    fn nonrenew_monotone_in_renewables() {
        // Paper layout with the macro capacity widened so everyone fits on
        // station 0; the decision itself is irrelevant to monotonicity.
        let base_scenario = paper_scenario(11);
        let mut stations = base_scenario.stations().to_vec();
        stations[0].capacity = 300;
        let scenario = build_scenario(stations, base_scenario.users().to_vec()).unwrap();
        let params = PowerParams::default();
        let d = Decision::new(
            &scenario,
            vec![true; scenario.n_stations()],
            vec![0; scenario.n_users()],
        )
        .unwrap();
        let base = sample_renewables(&WindModel::default(), &scenario, &params, 5);
        let value = p_nonrenew_total(&scenario, &params, &d, &base);
        for n in 0..scenario.n_stations() {
            let mut richer = base.clone();
            richer.p_renew_w[n] += 500.0;
            assert!(p_nonrenew_total(&scenario, &params, &d, &richer) <= value + 1e-9);
        }
    }

    #[test]
    fn switching_empty_station_off_never_increases_objective() {
        // With off power at most static power, an ON station serving nobody
        // can only get cheaper by going dark.
        let scenario = two_station_scenario();
        let params = PowerParams::default();
        let on = Decision::new(&scenario, vec![true, true], vec![0, 0]).unwrap();
        let off = Decision::new(&scenario, vec![true, false], vec![0, 0]).unwrap();
        for renew_sbs in [0.0, 500.0, 2000.0, 9000.0] {
            let renew = RenewableRealization {
                p_renew_w: vec![100.0, renew_sbs],
            };
            let before = p_nonrenew_total(&scenario, &params, &on, &renew);
            let after = p_nonrenew_total(&scenario, &params, &off, &renew);
            assert!(after <= before + 1e-12, "renew {renew_sbs}");
        }
    }

    #[test]
    fn decision_invariants_enforced() {
        let scenario = two_station_scenario();
        assert_eq!(
            Decision::new(&scenario, vec![false, true], vec![0, 0]).unwrap_err(),
            DecisionError::MacroOff
        );
        assert_eq!(
            Decision::new(&scenario, vec![true, false], vec![0, 1]).unwrap_err(),
            DecisionError::AssignedToOff { user: 1, bs: 1 }
        );
        assert_eq!(
            Decision::new(&scenario, vec![true, true], vec![1, 0]).unwrap_err(),
            DecisionError::OutsideCoverage { user: 0, bs: 1 }
        );

        let mut stations = scenario.stations().to_vec();
        stations[0].capacity = 1;
        stations[1].capacity = 1;
        let tight = build_scenario(stations, scenario.users().to_vec()).unwrap();
        assert_eq!(
            Decision::new(&tight, vec![true, true], vec![0, 0]).unwrap_err(),
            DecisionError::OverCapacity {
                bs: 0,
                load: 2,
                capacity: 1
            }
        );
    }

    #[test]
    fn zero_swept_area_harvests_nothing() {
        let params = PowerParams::default();
        assert_eq!(harvested_power(&params, 0.0, 25.0), 0.0);
    }

    #[test]
    fn cubic_power_law_value() {
        // 0.5 * 1.225 * pi * 3^2 * 6.69^3.
        let params = PowerParams::default();
        let p = harvested_power(&params, 3.0, 6.69);
        assert!((p - 5185.335108974544).abs() < 1e-9);
    }

    #[test]
    fn weibull_sample_mean_matches_gamma_formula() {
        // Weibull mean is scale * Gamma(1 + 1/shape); for shape 2.081 and
        // scale 6.69 that is 6.69 * 0.8857554893877786 = 5.925704224004239.
        let wind = WindModel::default();
        let speeds = sample_wind_speeds(&wind, 100_000, 31415);
        let mean: f64 = speeds.iter().sum::<f64>() / speeds.len() as f64;
        let expected = 5.925704224004239;
        assert!(
            (mean - expected).abs() / expected < 0.01,
            "sample mean {mean} not within 1% of {expected}"
        );
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let scenario = two_station_scenario();
        let params = PowerParams::default();
        let wind = WindModel::default();
        let a = sample_renewables(&wind, &scenario, &params, 99);
        let b = sample_renewables(&wind, &scenario, &params, 99);
        assert_eq!(a, b);
        assert!(a.p_renew_w.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn realization_scales_with_turbine_area_under_shared_speeds() {
        let scenario = two_station_scenario();
        let params = PowerParams::default();
        let speeds = sample_wind_speeds(&WindModel::default(), 2, 7);
        let small = realization_from_speeds(&scenario.with_turbine_radius(1.5), &params, &speeds);
        let large = realization_from_speeds(&scenario.with_turbine_radius(3.0), &params, &speeds);
        for n in 0..2 {
            assert!((large.get(n) - 4.0 * small.get(n)).abs() < 1e-9);
        }
    }
}
