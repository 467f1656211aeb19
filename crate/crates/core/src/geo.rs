//! Travel times between the kitchen (location 0) and customer locations,
//! and the per-stop service time model.

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::GeoError;

/// Location id of the ghost kitchen.
pub const KITCHEN: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Zone {
    InnerCity,
    Residential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub id: usize,
    /// Kilometers east of the kitchen.
    pub x: f64,
    /// Kilometers north of the kitchen.
    pub y: f64,
    pub zone: Zone,
}

impl Location {
    pub fn kitchen() -> Self {
        Location {
            id: KITCHEN,
            x: 0.0,
            y: 0.0,
            zone: Zone::InnerCity,
        }
    }
}

/// How the two log-normal parameters of the service time model are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LogNormalParams {
    /// `(mu, sigma)` of the underlying normal distribution.
    #[default]
    LogSpace,
    /// Mean and standard deviation of the log-normal itself, in minutes.
    Moments,
}

/// Converts a (mean, std) pair of a log-normal variable into the
/// parameters of its underlying normal distribution.
pub fn lognormal_from_moments(mean: f64, std: f64) -> (f64, f64) {
    let var_ln = (1.0 + (std * std) / (mean * mean)).ln();
    (mean.ln() - 0.5 * var_ln, var_ln.sqrt())
}

/// Log-normal parking / address search delay added once per delivery stop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceTimeModel {
    pub mu: f64,
    pub sigma: f64,
    #[serde(default)]
    pub params: LogNormalParams,
    /// Upper clamp in minutes; `None` leaves the tail untouched.
    pub cap: Option<f64>,
}

impl Default for ServiceTimeModel {
    fn default() -> Self {
        ServiceTimeModel {
            mu: 2.5,
            sigma: 1.5,
            params: LogNormalParams::LogSpace,
            cap: Some(10.0),
        }
    }
}

impl ServiceTimeModel {
    /// Log-space `(mu, sigma)` actually used for sampling.
    pub fn effective(&self) -> (f64, f64) {
        match self.params {
            LogNormalParams::LogSpace => (self.mu, self.sigma),
            LogNormalParams::Moments => lognormal_from_moments(self.mu, self.sigma),
        }
    }

    /// Median of the uncapped distribution, `exp(mu_eff)`.
    pub fn median(&self) -> f64 {
        self.effective().0.exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (mu, sigma) = self.effective();
        let raw = if sigma <= 0.0 {
            mu.exp()
        } else {
            LogNormal::new(mu, sigma)
                .expect("finite log-normal parameters")
                .sample(rng)
        };
        match self.cap {
            Some(cap) => raw.min(cap),
            None => raw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TravelMode {
    EuclideanSpeed { speed_km_per_min: f64 },
    ExplicitMatrix,
}

/// Dense travel time table over registered locations.
///
/// Euclidean mode precomputes the full matrix at construction, so lookups in
/// both modes are a bounds check and an index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravelTimes {
    mode: TravelMode,
    locations: Vec<Location>,
    index: HashMap<usize, usize>,
    minutes: Vec<f64>,
    n: usize,
    pub service: ServiceTimeModel,
}

impl TravelTimes {
    /// Builds a Euclidean provider. The kitchen is inserted at id 0 if absent.
    pub fn euclidean(
        mut locations: Vec<Location>,
        speed_km_per_min: f64,
        service: ServiceTimeModel,
    ) -> Result<Self, GeoError> {
        if !(speed_km_per_min > 0.0) || !speed_km_per_min.is_finite() {
            return Err(GeoError::InvalidSpeed(speed_km_per_min));
        }
        if !locations.iter().any(|l| l.id == KITCHEN) {
            locations.insert(0, Location::kitchen());
        }
        let index = build_index(&locations)?;
        for l in &locations {
            if !l.x.is_finite() || !l.y.is_finite() {
                return Err(GeoError::NonFiniteCoordinate(l.id));
            }
        }
        let n = locations.len();
        let mut minutes = vec![0.0; n * n];
        for (a, la) in locations.iter().enumerate() {
            for (b, lb) in locations.iter().enumerate() {
                if a != b {
                    minutes[a * n + b] = (la.x - lb.x).hypot(la.y - lb.y) / speed_km_per_min;
                }
            }
        }
        Ok(TravelTimes {
            mode: TravelMode::EuclideanSpeed { speed_km_per_min },
            locations,
            index,
            minutes,
            n,
            service,
        })
    }

    /// Builds a provider from an explicit square matrix. `ids[k]` labels row
    /// and column `k`; id 0 must be present and is the kitchen.
    pub fn from_matrix(
        ids: &[usize],
        matrix: Vec<Vec<f64>>,
        service: ServiceTimeModel,
    ) -> Result<Self, GeoError> {
        let n = ids.len();
        if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
            return Err(GeoError::NotSquare);
        }
        if !ids.contains(&KITCHEN) {
            return Err(GeoError::MissingKitchen);
        }
        let locations: Vec<Location> = ids
            .iter()
            .map(|&id| Location {
                id,
                x: f64::NAN,
                y: f64::NAN,
                zone: Zone::Residential,
            })
            .collect();
        let index = build_index(&locations)?;
        let mut minutes = vec![0.0; n * n];
        for (a, row) in matrix.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(GeoError::NegativeEntry(ids[a], ids[b]));
                }
                minutes[a * n + b] = if a == b { 0.0 } else { v };
            }
        }
        Ok(TravelTimes {
            mode: TravelMode::ExplicitMatrix,
            locations,
            index,
            minutes,
            n,
            service,
        })
    }

    /// Parses a matrix file. JSON form: `{"ids": [...], "minutes": [[...]]}`.
    /// Plain-text form: whitespace or comma separated, first row holds ids.
    pub fn parse_matrix(text: &str, service: ServiceTimeModel) -> Result<Self, GeoError> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            #[derive(Deserialize)]
            struct MatrixFile {
                ids: Vec<usize>,
                minutes: Vec<Vec<f64>>,
            }
            let m: MatrixFile =
                serde_json::from_str(trimmed).map_err(|e| GeoError::Parse(e.to_string()))?;
            return Self::from_matrix(&m.ids, m.minutes, service);
        }
        let mut rows = trimmed
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let split = |l: &str| -> Vec<String> {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(str::to_owned)
                .collect()
        };
        let header = rows.next().ok_or(GeoError::NotSquare)?;
        let ids = split(header)
            .iter()
            .map(|s| s.parse::<usize>().map_err(|e| GeoError::Parse(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let matrix = rows
            .map(|l| {
                split(l)
                    .iter()
                    .map(|s| s.parse::<f64>().map_err(|e| GeoError::Parse(e.to_string())))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_matrix(&ids, matrix, service)
    }

    pub fn mode(&self) -> &TravelMode {
        &self.mode
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn location(&self, id: usize) -> Result<&Location, GeoError> {
        self.index
            .get(&id)
            .map(|&k| &self.locations[k])
            .ok_or(GeoError::UnknownLocation(id))
    }

    /// Customer locations (every registered location except the kitchen).
    pub fn customers(&self) -> impl Iterator<Item = &Location> {
        self.locations.iter().filter(|l| l.id != KITCHEN)
    }

    pub fn travel_time(&self, from: usize, to: usize) -> Result<f64, GeoError> {
        let a = *self.index.get(&from).ok_or(GeoError::UnknownLocation(from))?;
        let b = *self.index.get(&to).ok_or(GeoError::UnknownLocation(to))?;
        Ok(self.minutes[a * self.n + b])
    }

    /// Lookup for ids already validated at order creation.
    #[inline]
    pub(crate) fn t(&self, from: usize, to: usize) -> f64 {
        self.travel_time(from, to)
            .expect("location registered with travel provider")
    }

    pub fn sample_service_time<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.service.sample(rng)
    }
}

fn build_index(locations: &[Location]) -> Result<HashMap<usize, usize>, GeoError> {
    let mut index = HashMap::with_capacity(locations.len());
    for (k, l) in locations.iter().enumerate() {
        if index.insert(l.id, k).is_some() {
            return Err(GeoError::DuplicateLocation(l.id));
        }
    }
    Ok(index)
}
