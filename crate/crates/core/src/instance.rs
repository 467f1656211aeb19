//! Day sampling (bimodal demand with zone-dependent resampling) and the
//! named configuration presets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::ConfigError;
use crate::geo::{
    lognormal_from_moments, Location, LogNormalParams, ServiceTimeModel, TravelTimes, Zone,
};
use crate::model::{FoodType, Order, ProblemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalParams {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandConfig {
    /// Expected number of lunch-time orders.
    pub mu_lunch: f64,
    /// Expected number of dinner-time orders.
    pub mu_dinner: f64,
    /// Standard deviation of the order counts as a fraction of their mean.
    pub count_std_ratio: f64,
    pub lunch_time: NormalParams,
    pub dinner_time: NormalParams,
    /// Probability of resampling a location that does not fit the peak.
    pub rho: f64,
    /// Minute of day at which the resampling rule flips from favoring the
    /// inner city to favoring residential areas.
    pub switch_minute: f64,
    /// Width in minutes of the window over which the rule fades.
    pub switch_window: f64,
}

impl Default for DemandConfig {
    fn default() -> Self {
        DemandConfig {
            mu_lunch: 64.0,
            mu_dinner: 100.0,
            count_std_ratio: 1.0 / 40.0,
            lunch_time: NormalParams {
                mean: 720.0,
                std: 45.0,
            },
            dinner_time: NormalParams {
                mean: 1140.0,
                std: 60.0,
            },
            rho: 0.5,
            switch_minute: 1080.0,
            switch_window: 360.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepTimeConfig {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    #[serde(default = "moments")]
    pub params: LogNormalParams,
}

fn moments() -> LogNormalParams {
    LogNormalParams::Moments
}

impl PrepTimeConfig {
    pub fn sample<R: Rng + ?Sized>(&self, food_type: usize, rng: &mut R) -> f64 {
        let (m, s) = (self.means[food_type], self.stds[food_type]);
        let (mu, sigma) = match self.params {
            LogNormalParams::Moments => lognormal_from_moments(m, s),
            LogNormalParams::LogSpace => (m, s),
        };
        if sigma <= 0.0 {
            mu.exp()
        } else {
            LogNormal::new(mu, sigma)
                .expect("finite log-normal parameters")
                .sample(rng)
        }
    }

    /// Mean of the configured distribution for a food type.
    pub fn mean(&self, food_type: usize) -> f64 {
        match self.params {
            LogNormalParams::Moments => self.means[food_type],
            LogNormalParams::LogSpace => {
                (self.means[food_type] + 0.5 * self.stds[food_type].powi(2)).exp()
            }
        }
    }
}

/// Synthetic city: customers uniform in a square around the kitchen with an
/// inner-city core.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeographyConfig {
    pub customers: usize,
    pub half_width_km: f64,
    pub inner_half_width_km: f64,
    pub speed_km_per_min: f64,
    pub map_seed: u64,
    pub service: ServiceTimeModel,
}

impl Default for GeographyConfig {
    fn default() -> Self {
        GeographyConfig {
            customers: 200,
            half_width_km: 6.0,
            inner_half_width_km: 2.0,
            speed_km_per_min: 0.6,
            map_seed: 7,
            // Same mean/std reading as the preparation times.
            service: ServiceTimeModel {
                params: LogNormalParams::Moments,
                ..ServiceTimeModel::default()
            },
        }
    }
}

impl GeographyConfig {
    pub fn build(&self) -> Result<TravelTimes, ConfigError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.map_seed);
        let h = self.half_width_km;
        let locations = (1..=self.customers)
            .map(|id| {
                let x = rng.random_range(-h..=h);
                let y = rng.random_range(-h..=h);
                let inner = x.abs() <= self.inner_half_width_km
                    && y.abs() <= self.inner_half_width_km;
                Location {
                    id,
                    x,
                    y,
                    zone: if inner { Zone::InnerCity } else { Zone::Residential },
                }
            })
            .collect();
        TravelTimes::euclidean(locations, self.speed_km_per_min, self.service.clone())
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub name: String,
    pub problem: ProblemConfig,
    pub demand: DemandConfig,
    pub prep: PrepTimeConfig,
    pub geography: GeographyConfig,
}

impl InstanceConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.problem.validate()?;
        let d = &self.demand;
        if !(d.rho >= 0.0 && d.rho < 1.0) {
            return Err(ConfigError::Invalid("resampling rate must lie in [0, 1)".into()));
        }
        if !(d.mu_lunch >= 0.0 && d.mu_dinner >= 0.0) || d.count_std_ratio < 0.0 {
            return Err(ConfigError::Invalid("demand means must be nonnegative".into()));
        }
        let nf = self.problem.food_types.len();
        if self.prep.means.len() != nf || self.prep.stds.len() != nf {
            return Err(ConfigError::Invalid(
                "preparation parameters must list every food type".into(),
            ));
        }
        if self.prep.stds.iter().any(|&s| s < 0.0) || self.prep.means.iter().any(|&m| !(m > 0.0))
        {
            return Err(ConfigError::Invalid("invalid preparation time parameters".into()));
        }
        Ok(())
    }
}

/// One sampled day of orders, ids dense and sorted by placement time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Day {
    pub index: usize,
    pub seed: u64,
    pub orders: Vec<Order>,
}

fn sample_count<R: Rng + ?Sized>(mu: f64, ratio: f64, rng: &mut R) -> usize {
    if mu <= 0.0 {
        return 0;
    }
    let n = Normal::new(mu, mu * ratio)
        .expect("finite count parameters")
        .sample(rng);
    n.round().max(0.0) as usize
}

fn sample_time<R: Rng + ?Sized>(p: NormalParams, t_max: f64, rng: &mut R) -> f64 {
    let dist = Normal::new(p.mean, p.std).expect("finite time parameters");
    for _ in 0..10_000 {
        let t = dist.sample(rng);
        if (0.0..=t_max).contains(&t) {
            return t;
        }
    }
    p.mean.clamp(0.0, t_max)
}

/// Samples one day of orders.
pub fn sample_day<R: Rng + ?Sized>(
    cfg: &InstanceConfig,
    travel: &TravelTimes,
    rng: &mut R,
) -> Result<Vec<Order>, ConfigError> {
    let pool: Vec<&Location> = travel.customers().collect();
    if pool.is_empty() {
        return Err(ConfigError::Invalid("customer location pool is empty".into()));
    }
    let d = &cfg.demand;
    let t_max = cfg.problem.capture_horizon;
    let n_l = sample_count(d.mu_lunch, d.count_std_ratio, rng);
    let n_d = sample_count(d.mu_dinner, d.count_std_ratio, rng);
    let mut times: Vec<f64> = (0..n_l)
        .map(|_| sample_time(d.lunch_time, t_max, rng))
        .collect();
    times.extend((0..n_d).map(|_| sample_time(d.dinner_time, t_max, rng)));

    let n_types = cfg.problem.food_types.len();
    let mut orders: Vec<Order> = times
        .into_iter()
        .map(|t| {
            let gate: f64 = rng.random();
            let mut loc = pool[rng.random_range(0..pool.len())];
            let lunch_side = gate < (d.switch_minute - t) / d.switch_window;
            let u: f64 = rng.random();
            let inner = loc.zone == Zone::InnerCity;
            if u < d.rho && (lunch_side != inner) {
                loc = pool[rng.random_range(0..pool.len())];
            }
            let food_type = rng.random_range(0..n_types);
            let t_prep = cfg.prep.sample(food_type, rng);
            let service_time = travel.sample_service_time(rng);
            Order {
                id: 0,
                food_type,
                t_order: t,
                t_prep,
                location: loc.id,
                service_time,
            }
        })
        .collect();
    orders.sort_by(|a, b| a.t_order.total_cmp(&b.t_order));
    for (k, o) in orders.iter_mut().enumerate() {
        o.id = k;
    }
    Ok(orders)
}

/// Seed of day `index` in a set generated from `seed`.
pub fn day_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (index as u64).wrapping_add(0xD1B5_4A32_D192_ED03)
}

pub fn sample_days(
    cfg: &InstanceConfig,
    travel: &TravelTimes,
    seed: u64,
    n_days: usize,
) -> Result<Vec<Day>, ConfigError> {
    (0..n_days)
        .map(|index| {
            let s = day_seed(seed, index);
            let orders = sample_day(cfg, travel, &mut ChaCha8Rng::seed_from_u64(s))?;
            Ok(Day {
                index,
                seed: s,
                orders,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Small,
    Medium,
    Large,
    /// Desk-scale analog of Small: two food types, two vehicles.
    Desk,
    /// Sensitivity variants of Large, numbered 1 to 12.
    L(u8),
}

impl Preset {
    pub fn all() -> Vec<Preset> {
        let mut v = vec![Preset::Small, Preset::Medium, Preset::Large, Preset::Desk];
        v.extend((1..=12).map(Preset::L));
        v
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Small => write!(f, "small"),
            Preset::Medium => write!(f, "medium"),
            Preset::Large => write!(f, "large"),
            Preset::Desk => write!(f, "desk"),
            Preset::L(k) => write!(f, "l{k}"),
        }
    }
}

impl FromStr for Preset {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "small" => Ok(Preset::Small),
            "medium" => Ok(Preset::Medium),
            "large" => Ok(Preset::Large),
            "desk" => Ok(Preset::Desk),
            _ => lower
                .strip_prefix('l')
                .and_then(|k| k.parse::<u8>().ok())
                .filter(|k| (1..=12).contains(k))
                .map(Preset::L)
                .ok_or_else(|| ConfigError::UnknownPreset(s.to_owned())),
        }
    }
}

const PREP_MEANS: [f64; 5] = [10.0, 9.0, 8.0, 7.0, 6.0];
const PREP_STDS: [f64; 5] = [1.5, 1.4, 1.3, 1.2, 1.1];

fn base(name: &str, types: usize, cooks: usize, fleet: usize, lunch: f64, dinner: f64) -> InstanceConfig {
    InstanceConfig {
        name: name.to_owned(),
        problem: ProblemConfig {
            food_types: (0..types)
                .map(|j| FoodType {
                    name: format!("restaurant-{}", j + 1),
                    freshness: 20.0,
                    cooks,
                })
                .collect(),
            fleet_size: fleet,
            capacity: 3,
            tau: 30.0,
            capture_horizon: 1440.0,
            horizon: 1560.0,
            count_service_time: true,
        },
        demand: DemandConfig {
            mu_lunch: lunch,
            mu_dinner: dinner,
            ..DemandConfig::default()
        },
        prep: PrepTimeConfig {
            means: PREP_MEANS[..types].to_vec(),
            stds: PREP_STDS[..types].to_vec(),
            params: LogNormalParams::Moments,
        },
        geography: GeographyConfig::default(),
    }
}

pub fn preset(p: Preset) -> InstanceConfig {
    let name = p.to_string();
    match p {
        Preset::Small => base(&name, 5, 1, 5, 64.0, 100.0),
        Preset::Medium => base(&name, 5, 1, 5, 80.0, 125.0),
        Preset::Large => base(&name, 5, 2, 10, 160.0, 250.0),
        Preset::Desk => base(&name, 2, 1, 2, 16.0, 25.0),
        Preset::L(k) => {
            let mut c = base(&name, 5, 2, 10, 160.0, 250.0);
            match k {
                1 | 2 => {
                    let delta = if k == 1 { 15.0 } else { 25.0 };
                    c.problem.food_types.iter_mut().for_each(|f| f.freshness = delta);
                }
                3 => c.problem.tau = 25.0,
                4 => c.problem.tau = 35.0,
                5 | 6 => {
                    let n = if k == 5 { 1 } else { 3 };
                    c.problem.food_types.iter_mut().for_each(|f| f.cooks = n);
                }
                7 => c.problem.fleet_size = 7,
                8 => c.problem.fleet_size = 13,
                9 => c.prep.stds.iter_mut().for_each(|s| *s = 0.0),
                10 => c.prep.stds.iter_mut().for_each(|s| *s *= 2.0),
                11 | 12 => {
                    let f = if k == 11 { 0.9 } else { 1.1 };
                    c.demand.mu_lunch *= f;
                    c.demand.mu_dinner *= f;
                }
                _ => unreachable!("sensitivity presets are numbered 1 to 12"),
            }
            c
        }
    }
}

pub fn preset_by_name(name: &str) -> Result<InstanceConfig, ConfigError> {
    Ok(preset(name.parse()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_values() {
        assert_eq!(preset(Preset::Small).problem.tau, 30.0);
        assert_eq!(preset(Preset::L(7)).problem.fleet_size, 7);
        assert!(preset(Preset::L(9)).prep.stds.iter().all(|&s| s == 0.0));
        let l11 = preset(Preset::L(11));
        assert!((l11.demand.mu_lunch - 144.0).abs() < 1e-9);
        assert!((l11.demand.mu_dinner - 225.0).abs() < 1e-9);
        assert_eq!(preset(Preset::L(1)).problem.freshness(0), 15.0);
        assert_eq!(preset(Preset::L(6)).problem.num_cooks(), 15);
        let m = preset(Preset::Medium);
        assert_eq!((m.demand.mu_lunch, m.demand.mu_dinner), (80.0, 125.0));
        for p in Preset::all() {
            preset(p).validate().unwrap();
            assert_eq!(p.to_string().parse::<Preset>().unwrap(), p);
        }
        assert!(matches!(
            "huge".parse::<Preset>(),
            Err(ConfigError::UnknownPreset(_))
        ));
        assert!("l13".parse::<Preset>().is_err());
    }

    #[test]
    fn geography_calibration() {
        let g = GeographyConfig::default();
        let tt = g.build().unwrap();
        assert_eq!(tt.customers().count(), 200);
        let max = tt
            .customers()
            .map(|l| tt.travel_time(0, l.id).unwrap())
            .fold(0.0, f64::max);
        assert!(max <= 6.0 * 2f64.sqrt() / 0.6 + 1e-9);
        assert!(tt.customers().any(|l| l.zone == Zone::InnerCity));
    }

    #[test]
    fn sampling_is_deterministic_and_sorted() {
        let cfg = preset(Preset::Small);
        let tt = cfg.geography.build().unwrap();
        let a = sample_days(&cfg, &tt, 5, 2).unwrap();
        let b = sample_days(&cfg, &tt, 5, 2).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        for day in &a {
            assert!(day.orders.windows(2).all(|w| w[0].t_order <= w[1].t_order));
            assert!(day
                .orders
                .iter()
                .enumerate()
                .all(|(k, o)| o.id == k && o.t_order >= 0.0 && o.t_order <= 1440.0));
        }
    }

    #[test]
    fn empty_pool_is_config_error() {
        let cfg = preset(Preset::Desk);
        let tt = TravelTimes::euclidean(vec![], 1.0, Default::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_day(&cfg, &tt, &mut rng).is_err());
    }
}
