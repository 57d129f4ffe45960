//! Synthetic worlds with known user interests.
//!
//! Videos are drawn around `c` cluster directions; each user has a latent
//! unit interest vector near one "home" cluster. Watch time follows
//! `duration × σ(κ⟨z_u, x_v⟩ + ε)` with Gaussian `ε`. Recovering `z_u` from
//! simulated histories checks that the history representation points where
//! the user's interest actually is.
//!
//! Every random draw comes from a stream derived from `(seed, user,
//! session)`, so users can be simulated in any order with identical results.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, EmbeddingRecord};
use crate::preference::{logistic, Interaction, PreferenceParams, ThresholdMode};
use crate::representation::{history_representation, RepresentationError};
use crate::vector::{angle, dot, random_unit, rotate_random};

const SEPARATION_ATTEMPTS: usize = 10_000;
const SECONDS_PER_DAY: i64 = 86_400;

/// Generation and behaviour parameters of a synthetic world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldSpec {
    pub seed: u64,
    pub dim: usize,
    pub users: usize,
    pub videos: usize,
    pub clusters: usize,
    /// Minimum pairwise angle between cluster directions, degrees.
    pub min_cluster_angle_deg: f64,
    /// Videos lie within this angle of their cluster direction, degrees.
    pub video_spread_deg: f64,
    /// User interests lie within this angle of their home cluster, degrees.
    pub interest_spread_deg: f64,
    pub min_duration_s: f64,
    pub max_duration_s: f64,
    /// Sharpness of watch behaviour (κ).
    pub kappa: f64,
    /// Standard deviation of the logit noise on watch fractions.
    pub watch_noise: f64,
    /// Parameters used to turn simulated watch time into preference scores.
    pub preference: PreferenceParams,
    /// Watches at least this long count as a play.
    pub play_threshold_s: f64,
}

impl Default for WorldSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            dim: 8,
            users: 20,
            videos: 400,
            clusters: 4,
            min_cluster_angle_deg: 80.0,
            video_spread_deg: 25.0,
            interest_spread_deg: 10.0,
            min_duration_s: 15.0,
            max_duration_s: 60.0,
            kappa: 10.0,
            watch_noise: 2.0,
            preference: PreferenceParams {
                alpha: 0.5,
                threshold_mode: ThresholdMode::DurationFraction,
                fixed_threshold_s: 18.0,
                duration_fraction: 0.9,
                threshold_cap_s: 3600.0,
            },
            play_threshold_s: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("invalid world spec: {0}")]
    InvalidSpec(&'static str),
    #[error("could not place {clusters} directions {min_angle_deg}° apart in {dim} dimensions")]
    InfeasibleSeparation {
        clusters: usize,
        dim: usize,
        min_angle_deg: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticUser {
    pub user_id: String,
    pub interest: Vec<f64>,
    pub home_cluster: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld {
    pub spec: WorldSpec,
    pub cluster_directions: Vec<Vec<f64>>,
    pub catalog: Catalog,
    /// Generating cluster of each video, by catalog id.
    pub video_clusters: Vec<(String, usize)>,
    pub users: Vec<SyntheticUser>,
}

/// SplitMix64 finalizer chained over the parts; yields independent seeds
/// for per-user and per-session streams.
fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut z = seed;
    for &p in parts {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(p);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

fn stream(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, parts))
}

const SALT_WORLD: u64 = 1;
const SALT_WATCH: u64 = 2;
const SALT_SAMPLE: u64 = 3;

impl WorldSpec {
    fn validate(&self) -> Result<(), WorldError> {
        if self.dim < 2 {
            return Err(WorldError::InvalidSpec("dim must be at least 2"));
        }
        if self.users == 0 || self.videos == 0 || self.clusters == 0 {
            return Err(WorldError::InvalidSpec("users, videos and clusters must be positive"));
        }
        if !(0.0..=180.0).contains(&self.min_cluster_angle_deg)
            || !(0.0..=180.0).contains(&self.video_spread_deg)
            || !(0.0..=180.0).contains(&self.interest_spread_deg)
        {
            return Err(WorldError::InvalidSpec("angles must be in [0, 180] degrees"));
        }
        if !(self.min_duration_s > 0.0 && self.min_duration_s <= self.max_duration_s) {
            return Err(WorldError::InvalidSpec("need 0 < min_duration_s <= max_duration_s"));
        }
        if !(self.kappa >= 0.0 && self.watch_noise >= 0.0) {
            return Err(WorldError::InvalidSpec("kappa and watch_noise must be non-negative"));
        }
        self.preference
            .validate()
            .map_err(|_| WorldError::InvalidSpec("invalid preference parameters"))
    }
}

pub fn generate_world(spec: &WorldSpec) -> Result<SyntheticWorld, WorldError> {
    spec.validate()?;
    let mut rng = stream(spec.seed, &[SALT_WORLD]);
    let min_angle = spec.min_cluster_angle_deg.to_radians();

    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(spec.clusters);
    while dirs.len() < spec.clusters {
        let placed = (0..SEPARATION_ATTEMPTS).find_map(|_| {
            let d = random_unit(&mut rng, spec.dim);
            dirs.iter().all(|o| angle(o, &d) >= min_angle).then_some(d)
        });
        match placed {
            Some(d) => dirs.push(d),
            None => {
                return Err(WorldError::InfeasibleSeparation {
                    clusters: spec.clusters,
                    dim: spec.dim,
                    min_angle_deg: spec.min_cluster_angle_deg,
                })
            }
        }
    }

    let spread = spec.video_spread_deg.to_radians();
    let mut catalog = Catalog::new();
    let mut video_clusters = Vec::with_capacity(spec.videos);
    for i in 0..spec.videos {
        let c = i % spec.clusters;
        let theta = rng.random::<f64>() * spread;
        let vector = rotate_random(&mut rng, &dirs[c], theta);
        let duration_s =
            spec.min_duration_s + rng.random::<f64>() * (spec.max_duration_s - spec.min_duration_s);
        let video_id = format!("v{i:05}");
        catalog
            .insert(EmbeddingRecord {
                video_id: video_id.clone(),
                dim: spec.dim,
                vector,
                duration_s,
            })
            .expect("generated vectors are unit-norm and finite");
        video_clusters.push((video_id, c));
    }

    let interest_spread = spec.interest_spread_deg.to_radians();
    let users = (0..spec.users)
        .map(|u| {
            let home_cluster = rng.random_range(0..spec.clusters);
            let theta = rng.random::<f64>() * interest_spread;
            SyntheticUser {
                user_id: format!("u{u:04}"),
                interest: rotate_random(&mut rng, &dirs[home_cluster], theta),
                home_cluster,
            }
        })
        .collect();

    Ok(SyntheticWorld {
        spec: spec.clone(),
        cluster_directions: dirs,
        catalog,
        video_clusters,
        users,
    })
}

/// Simulates one session (one day) for user `user`: each shown video is
/// watched for `duration × σ(κ⟨z, x⟩ + ε)`. Unknown ids are skipped.
/// Timestamps are `session · 86400 + position`.
pub fn simulate_session(
    world: &SyntheticWorld,
    user: usize,
    session: u32,
    shown: &[&str],
) -> Vec<Interaction> {
    let u = &world.users[user];
    let mut rng = stream(world.spec.seed, &[SALT_WATCH, user as u64, session as u64]);
    let base = session as i64 * SECONDS_PER_DAY;
    shown
        .iter()
        .enumerate()
        .filter_map(|(pos, id)| {
            let v = world.catalog.get(id)?;
            let noise: f64 = rng.sample::<f64, _>(StandardNormal) * world.spec.watch_noise;
            let fraction = logistic(world.spec.kappa * dot(&u.interest, &v.vector) + noise);
            Some(Interaction {
                user_id: u.user_id.clone(),
                video_id: v.video_id.clone(),
                watch_time_s: v.duration_s * fraction,
                timestamp: base + pos as i64,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecovery {
    pub user_id: String,
    /// `cos(μ_hist, z_u)`, absent when no representation could be built.
    pub cosine: Option<f64>,
    pub error: Option<String>,
    pub watched: usize,
    pub play_count: usize,
    pub active_days: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub seed: u64,
    pub sessions: u32,
    pub per_session: usize,
    pub mean_cosine: f64,
    pub min_cosine: f64,
    pub recovered_users: usize,
    pub mean_play_count: f64,
    pub mean_active_days: f64,
    pub users: Vec<UserRecovery>,
}

/// Cosine between the history representation of `history` and the user's
/// latent interest.
pub fn recovery_cosine(
    world: &SyntheticWorld,
    user: usize,
    history: &[Interaction],
) -> Result<f64, RepresentationError> {
    let rep = history_representation(
        history,
        &world.catalog,
        &world.spec.preference,
        usize::MAX,
        0,
    )?;
    Ok(dot(&rep.vector, &world.users[user].interest))
}

/// Simulates `sessions` sessions of `per_session` uniformly sampled videos
/// per user and reports how well the history representation recovers
/// each user's latent interest.
pub fn simulate_user_history(
    world: &SyntheticWorld,
    user: usize,
    sessions: u32,
    per_session: usize,
) -> Vec<Interaction> {
    let ids: Vec<&str> = world.video_clusters.iter().map(|(id, _)| id.as_str()).collect();
    let take = per_session.min(ids.len());
    let mut history = Vec::with_capacity(sessions as usize * take);
    for s in 0..sessions {
        let mut rng = stream(world.spec.seed, &[SALT_SAMPLE, user as u64, s as u64]);
        let shown: Vec<&str> = index::sample(&mut rng, ids.len(), take)
            .into_iter()
            .map(|i| ids[i])
            .collect();
        history.extend(simulate_session(world, user, s, &shown));
    }
    history
}

pub fn recovery_experiment(world: &SyntheticWorld, sessions: u32, per_session: usize) -> RecoveryReport {
    let play = world.spec.play_threshold_s;
    let users: Vec<UserRecovery> = (0..world.users.len())
        .map(|u| {
            let history = simulate_user_history(world, u, sessions, per_session);
            let play_count = history.iter().filter(|i| i.watch_time_s >= play).count();
            let mut active: Vec<i64> = history
                .iter()
                .filter(|i| i.watch_time_s >= play)
                .map(|i| i.timestamp.div_euclid(SECONDS_PER_DAY))
                .collect();
            active.dedup();
            let (cosine, error) = match recovery_cosine(world, u, &history) {
                Ok(c) => (Some(c), None),
                Err(e) => (None, Some(e.to_string())),
            };
            UserRecovery {
                user_id: world.users[u].user_id.clone(),
                cosine,
                error,
                watched: history.len(),
                play_count,
                active_days: active.len(),
            }
        })
        .collect();

    let cosines: Vec<f64> = users.iter().filter_map(|u| u.cosine).collect();
    let n = users.len().max(1) as f64;
    RecoveryReport {
        seed: world.spec.seed,
        sessions,
        per_session,
        mean_cosine: if cosines.is_empty() {
            0.0
        } else {
            cosines.iter().sum::<f64>() / cosines.len() as f64
        },
        min_cosine: cosines.iter().copied().fold(f64::INFINITY, f64::min),
        recovered_users: cosines.len(),
        mean_play_count: users.iter().map(|u| u.play_count as f64).sum::<f64>() / n,
        mean_active_days: users.iter().map(|u| u.active_days as f64).sum::<f64>() / n,
        users,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> WorldSpec {
        WorldSpec {
            seed,
            users: 3,
            videos: 40,
            ..WorldSpec::default()
        }
    }

    #[test]
    fn same_seed_same_world() {
        let a = generate_world(&small(5)).unwrap();
        let b = generate_world(&small(5)).unwrap();
        assert_eq!(a, b);
        let c = generate_world(&small(6)).unwrap();
        assert_ne!(a.cluster_directions, c.cluster_directions);
    }

    #[test]
    fn single_cluster_within_spread() {
        let spec = WorldSpec {
            clusters: 1,
            video_spread_deg: 15.0,
            ..small(1)
        };
        let w = generate_world(&spec).unwrap();
        for v in w.catalog.iter() {
            assert!(angle(&v.vector, &w.cluster_directions[0]) <= 15f64.to_radians() + 1e-9);
        }
    }

    #[test]
    fn separation_checked_pairwise() {
        let spec = WorldSpec {
            dim: 3,
            clusters: 4,
            min_cluster_angle_deg: 30.0,
            ..small(11)
        };
        let w = generate_world(&spec).unwrap();
        let d = &w.cluster_directions;
        for i in 0..d.len() {
            for j in i + 1..d.len() {
                let a = libm::acos(dot(&d[i], &d[j]).clamp(-1.0, 1.0)).to_degrees();
                assert!(a >= 30.0, "clusters {i},{j} at {a}°");
            }
        }
    }

    #[test]
    fn infeasible_separation() {
        // at most 2 directions can be 179° apart
        let spec = WorldSpec {
            dim: 2,
            clusters: 3,
            min_cluster_angle_deg: 179.0,
            ..small(0)
        };
        assert!(matches!(
            generate_world(&spec),
            Err(WorldError::InfeasibleSeparation { .. })
        ));
        assert!(matches!(
            generate_world(&WorldSpec { dim: 1, ..small(0) }),
            Err(WorldError::InvalidSpec(_))
        ));
    }

    fn one_video_world(kappa: f64, x: &[f64]) -> SyntheticWorld {
        let mut w = generate_world(&WorldSpec {
            dim: 2,
            clusters: 1,
            users: 1,
            videos: 1,
            kappa,
            watch_noise: 0.0,
            ..WorldSpec::default()
        })
        .unwrap();
        w.users[0].interest = [1.0, 0.0].to_vec();
        w.catalog = Catalog::new();
        w.catalog
            .insert(EmbeddingRecord {
                video_id: "v".into(),
                dim: 2,
                vector: x.to_vec(),
                duration_s: 40.0,
            })
            .unwrap();
        w
    }

    #[test]
    fn watch_time_saturation() {
        let w = one_video_world(50.0, &[1.0, 0.0]);
        let s = simulate_session(&w, 0, 0, &["v"]);
        assert!((s[0].watch_time_s - 40.0).abs() < 1e-9);
        let w = one_video_world(50.0, &[0.0, 1.0]);
        let s = simulate_session(&w, 0, 0, &["v", "missing"]);
        assert_eq!(s.len(), 1);
        assert!((s[0].watch_time_s - 20.0).abs() < 1e-9);
    }

    #[test]
    fn noisy_sessions_reproduce() {
        let w = generate_world(&WorldSpec {
            watch_noise: 1.0,
            ..small(3)
        })
        .unwrap();
        let a = simulate_session(&w, 1, 4, &["v00001", "v00002"]);
        let b = simulate_session(&w, 1, 4, &["v00001", "v00002"]);
        assert_eq!(a, b);
        assert_eq!(a[1].timestamp, 4 * 86_400 + 1);
        let c = simulate_session(&w, 1, 5, &["v00001", "v00002"]);
        assert_ne!(a[0].watch_time_s, c[0].watch_time_s);
    }

    #[test]
    fn history_of_interest_aligned_videos_recovers_exactly() {
        let mut w = one_video_world(10.0, &[1.0, 0.0]);
        w.users[0].interest = w.catalog.get("v").unwrap().vector.clone();
        let hist = simulate_session(&w, 0, 0, &["v", "v", "v"]);
        let c = recovery_cosine(&w, 0, &hist).unwrap();
        assert!((c - 1.0).abs() < 1e-6);
    }

    #[test]
    fn antipodal_equal_history_is_undefined() {
        let mut w = one_video_world(10.0, &[1.0, 0.0]);
        w.catalog
            .insert(EmbeddingRecord {
                video_id: "anti".into(),
                dim: 2,
                vector: [-1.0, 0.0].to_vec(),
                duration_s: 40.0,
            })
            .unwrap();
        let mk = |v: &str| Interaction {
            user_id: "u0000".into(),
            video_id: v.into(),
            watch_time_s: 20.0,
            timestamp: 0,
        };
        let r = recovery_cosine(&w, 0, &[mk("v"), mk("anti")]);
        assert!(matches!(r, Err(RepresentationError::RepresentationUndefined(_))));
    }

    #[test]
    fn experiment_counts_plays_and_days() {
        let w = generate_world(&small(2)).unwrap();
        let r = recovery_experiment(&w, 3, 5);
        assert_eq!(r.users.len(), 3);
        for u in &r.users {
            assert_eq!(u.watched, 15);
            assert!(u.play_count <= 15);
            assert!(u.active_days <= 3);
        }
        assert_eq!(r, recovery_experiment(&w, 3, 5));
    }
}
