//! Network snapshots: station layout, user positions, and the derived
//! coverage sets everything downstream reads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

/// Turbine radius stations carry unless an experiment overrides it.
pub const DEFAULT_TURBINE_RADIUS_M: f64 = 1.5;

/// A base station. Index 0 is always the macro station; higher indices are
/// switchable small cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: usize,
    pub x_m: f64,
    pub y_m: f64,
    /// Coverage radius; a user is servable iff its distance is `<= radius_m`.
    pub radius_m: f64,
    /// Maximum number of users this station serves while ON.
    pub capacity: u32,
    pub static_power_w: f64,
    pub off_power_w: f64,
    pub turbine_radius_m: f64,
}

/// A user at a fixed position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub id: usize,
    pub x_m: f64,
    pub y_m: f64,
}

/// An immutable network + user snapshot with precomputed coverage sets.
///
/// `coverage_bs[n]` lists the users inside station `n`'s disk and
/// `coverage_user[m]` lists the stations whose disk contains user `m`; the
/// two families are transposes of each other by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    stations: Vec<BaseStation>,
    users: Vec<User>,
    coverage_bs: Vec<Vec<usize>>,
    coverage_user: Vec<Vec<usize>>,
}

/// Serialized form of a [`Scenario`]; coverage sets are derived, not stored.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScenarioFile {
    stations: Vec<BaseStation>,
    users: Vec<User>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("station list is empty")]
    NoStations,
    #[error("station at position {position} has id {id}; station ids must be 0..N in order")]
    BadStationId { position: usize, id: usize },
    #[error("user at position {position} has id {id}; user ids must be 0..M in order")]
    BadUserId { position: usize, id: usize },
    #[error("station {id} has non-positive coverage radius {radius_m}")]
    NonPositiveRadius { id: usize, radius_m: f64 },
    #[error("station {id} has negative {field}")]
    NegativeField { id: usize, field: &'static str },
    #[error("user {0} lies inside no station's coverage disk")]
    UncoveredUser(usize),
    #[error("total capacity {total_capacity} cannot serve {users} users")]
    CapacityInfeasible { total_capacity: u64, users: usize },
    #[error("failed to read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse scenario {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Builds a scenario and its coverage sets, validating every invariant.
///
/// Coverage membership uses the closed disk: a user exactly on the boundary
/// is servable.
pub fn build_scenario(
    stations: Vec<BaseStation>,
    users: Vec<User>,
) -> Result<Scenario, ScenarioError> {
    if stations.is_empty() {
        return Err(ScenarioError::NoStations);
    }
    for (position, bs) in stations.iter().enumerate() {
        if bs.id != position {
            return Err(ScenarioError::BadStationId { position, id: bs.id });
        }
        if !bs.radius_m.is_finite() || bs.radius_m <= 0.0 {
            return Err(ScenarioError::NonPositiveRadius {
                id: bs.id,
                radius_m: bs.radius_m,
            });
        }
        for (field, value) in [
            ("static_power_w", bs.static_power_w),
            ("off_power_w", bs.off_power_w),
            ("turbine_radius_m", bs.turbine_radius_m),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(ScenarioError::NegativeField { id: bs.id, field });
            }
        }
    }
    for (position, user) in users.iter().enumerate() {
        if user.id != position {
            return Err(ScenarioError::BadUserId {
                position,
                id: user.id,
            });
        }
    }

    let total_capacity: u64 = stations.iter().map(|bs| u64::from(bs.capacity)).sum();
    if total_capacity < users.len() as u64 {
        return Err(ScenarioError::CapacityInfeasible {
            total_capacity,
            users: users.len(),
        });
    }

    let mut coverage_bs = vec![Vec::new(); stations.len()];
    let mut coverage_user = vec![Vec::new(); users.len()];
    for (m, user) in users.iter().enumerate() {
        for (n, bs) in stations.iter().enumerate() {
            let d = ((user.x_m - bs.x_m).powi(2) + (user.y_m - bs.y_m).powi(2)).sqrt();
            if d <= bs.radius_m {
                coverage_bs[n].push(m);
                coverage_user[m].push(n);
            }
        }
        if coverage_user[m].is_empty() {
            return Err(ScenarioError::UncoveredUser(m));
        }
    }

    Ok(Scenario {
        stations,
        users,
        coverage_bs,
        coverage_user,
    })
}

/// Draws `count` user positions i.i.d. uniform over the disk of radius
/// `mbs_radius` centered at the origin.
///
/// Sampling is inverse-CDF on the radius (`R = r * sqrt(U)`) so the draw is
/// exact and reproducible; the same seed always yields the same list.
pub fn generate_users(rng_seed: u64, count: usize, mbs_radius: f64) -> Vec<User> {
    assert!(mbs_radius > 0.0, "mbs_radius must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    (0..count)
        .map(|id| {
            let r = mbs_radius * rng.gen::<f64>().sqrt();
            let theta = TAU * rng.gen::<f64>();
            User {
                id,
                x_m: r * theta.cos(),
                y_m: r * theta.sin(),
            }
        })
        .collect()
}

/// The full-scale evaluation layout: one macro station (600 m radius,
/// capacity 200) at the origin, eight small cells (200 m radius, capacity 60)
/// on the surrounding ring, 2000 W static power, zero OFF power, and 300
/// users drawn uniformly inside the macro disk.
///
/// Never fails: users are drawn inside the macro disk, so everyone is
/// covered, and total capacity 680 exceeds 300.
pub fn paper_scenario(rng_seed: u64) -> Scenario {
    let sbs_positions = [
        (200.0, 200.0),
        (-200.0, -200.0),
        (200.0, -200.0),
        (-200.0, 200.0),
        (0.0, -400.0),
        (0.0, 400.0),
        (400.0, 0.0),
        (-400.0, 0.0),
    ];
    let stations = ring_layout(600.0, 200, &sbs_positions, 200.0, 60);
    let users = generate_users(rng_seed, 300, 600.0);
    build_scenario(stations, users).expect("paper layout is feasible by construction")
}

/// A scaled-down layout for fast experiments: four small cells (250 m radius,
/// capacity 8) around a macro station with capacity 30, and 40 users.
pub fn desk_scenario(rng_seed: u64) -> Scenario {
    let sbs_positions = [(300.0, 0.0), (-300.0, 0.0), (0.0, 300.0), (0.0, -300.0)];
    let stations = ring_layout(600.0, 30, &sbs_positions, 250.0, 8);
    let users = generate_users(rng_seed, 40, 600.0);
    build_scenario(stations, users).expect("desk layout is feasible by construction")
}

fn ring_layout(
    mbs_radius: f64,
    mbs_capacity: u32,
    sbs_positions: &[(f64, f64)],
    sbs_radius: f64,
    sbs_capacity: u32,
) -> Vec<BaseStation> {
    let mut stations = vec![BaseStation {
        id: 0,
        x_m: 0.0,
        y_m: 0.0,
        radius_m: mbs_radius,
        capacity: mbs_capacity,
        static_power_w: 2000.0,
        off_power_w: 0.0,
        turbine_radius_m: DEFAULT_TURBINE_RADIUS_M,
    }];
    for (i, &(x_m, y_m)) in sbs_positions.iter().enumerate() {
        stations.push(BaseStation {
            id: i + 1,
            x_m,
            y_m,
            radius_m: sbs_radius,
            capacity: sbs_capacity,
            static_power_w: 2000.0,
            off_power_w: 0.0,
            turbine_radius_m: DEFAULT_TURBINE_RADIUS_M,
        });
    }
    stations
}

impl Scenario {
    pub fn n_stations(&self) -> usize {
        self.stations.len()
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn stations(&self) -> &[BaseStation] {
        &self.stations
    }

    pub fn users(&self) -> &[User] {
        &self.users
    }

    pub fn station(&self, n: usize) -> &BaseStation {
        &self.stations[n]
    }

    pub fn user(&self, m: usize) -> &User {
        &self.users[m]
    }

    /// Users inside station `n`'s disk, ascending.
    pub fn coverage_bs(&self, n: usize) -> &[usize] {
        &self.coverage_bs[n]
    }

    /// Stations whose disk contains user `m`, ascending.
    pub fn coverage_user(&self, m: usize) -> &[usize] {
        &self.coverage_user[m]
    }

    pub fn covers(&self, m: usize, n: usize) -> bool {
        self.coverage_bs[n].binary_search(&m).is_ok()
    }

    pub fn distance_m(&self, m: usize, n: usize) -> f64 {
        let user = &self.users[m];
        let bs = &self.stations[n];
        ((user.x_m - bs.x_m).powi(2) + (user.y_m - bs.y_m).powi(2)).sqrt()
    }

    /// Coverage pairs `(m, n)` with user `m` inside station `n`'s disk, in
    /// `(m, n)` lexicographic order. This is the canonical column order of
    /// the linear models.
    pub fn coverage_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.coverage_user
            .iter()
            .enumerate()
            .flat_map(|(m, cover)| cover.iter().map(move |&n| (m, n)))
    }

    /// A copy with every station's turbine radius replaced.
    ///
    /// Coverage does not depend on turbine size, so the sets carry over.
    pub fn with_turbine_radius(&self, turbine_radius_m: f64) -> Scenario {
        assert!(turbine_radius_m >= 0.0, "turbine radius must be >= 0");
        let mut scenario = self.clone();
        for bs in &mut scenario.stations {
            bs.turbine_radius_m = turbine_radius_m;
        }
        scenario
    }

    pub fn to_json(&self) -> String {
        let file = ScenarioFile {
            stations: self.stations.clone(),
            users: self.users.clone(),
        };
        serde_json::to_string_pretty(&file).expect("scenario serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|source| {
            ScenarioError::Parse {
                path: "<inline>".to_string(),
                source,
            }
        })?;
        build_scenario(file.stations, file.users)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        fs::write(path, self.to_json()).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: ScenarioFile =
            serde_json::from_str(&text).map_err(|source| ScenarioError::Parse {
                path: path.display().to_string(),
                source,
            })?;
        build_scenario(file.stations, file.users)
    }
}
