//! Housing-sales loader and geographic k-nearest-neighbor graph.
//!
//! Records carry latitude/longitude plus bedrooms, bathrooms and square
//! footage (any of which may be missing) and a sales price. Attributes and
//! price are z-scored with training-set statistics; missing features become
//! zero (the mean) after standardization. Nodes are linked to their k
//! nearest training nodes by great-circle distance with weight inversely
//! proportional to it.

use std::path::Path;

use super::DatasetError;
use crate::graph::{build_graph, ProblemGraph};
use crate::objectives::RegressionObjective;

#[derive(Debug, Clone)]
pub struct HousingRecord {
    pub latitude: f64,
    pub longitude: f64,
    pub beds: Option<f64>,
    pub baths: Option<f64>,
    pub sqft: Option<f64>,
    pub price: f64,
}

/// Column aliases accepted by the loader, lowercase.
const LAT_ALIASES: &[&str] = &["latitude", "lat"];
const LON_ALIASES: &[&str] = &["longitude", "lon", "lng"];
const BEDS_ALIASES: &[&str] = &["beds", "bedrooms"];
const BATHS_ALIASES: &[&str] = &["baths", "bathrooms"];
const SQFT_ALIASES: &[&str] = &["sq__ft", "sqft", "sq_ft"];
const PRICE_ALIASES: &[&str] = &["price", "sale_price"];

/// Loads a housing CSV. Returns the parsed records and the number of rows
/// skipped as unparseable. A non-positive bed/bath/sqft value counts as
/// missing.
pub fn load_housing(path: &Path) -> Result<(Vec<HousingRecord>, usize), DatasetError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |aliases: &[&str]| -> Result<usize, DatasetError> {
        headers
            .iter()
            .position(|h| aliases.contains(&h.trim().to_ascii_lowercase().as_str()))
            .ok_or_else(|| DatasetError::MissingColumn {
                path: path.display().to_string(),
                column: aliases[0].to_string(),
            })
    };
    let lat = find(LAT_ALIASES)?;
    let lon = find(LON_ALIASES)?;
    let beds = find(BEDS_ALIASES)?;
    let baths = find(BATHS_ALIASES)?;
    let sqft = find(SQFT_ALIASES)?;
    let price = find(PRICE_ALIASES)?;

    let mut records = Vec::new();
    let mut skipped = 0usize;
    for row in reader.records() {
        let row = row?;
        let number = |idx: usize| -> Option<f64> {
            row.get(idx).and_then(|s| s.trim().parse::<f64>().ok())
        };
        let feature = |idx: usize| -> Option<f64> {
            number(idx).filter(|v| *v > 0.0)
        };
        match (number(lat), number(lon), number(price)) {
            (Some(latitude), Some(longitude), Some(p))
                if (-90.0..=90.0).contains(&latitude)
                    && (-180.0..=180.0).contains(&longitude) =>
            {
                records.push(HousingRecord {
                    latitude,
                    longitude,
                    beds: feature(beds),
                    baths: feature(baths),
                    sqft: feature(sqft),
                    price: p,
                });
            }
            _ => skipped += 1,
        }
    }
    Ok((records, skipped))
}

/// z-scored record; missing features are zero (the post-standardization mean).
#[derive(Debug, Clone)]
pub struct StandardizedHousing {
    pub latitude: f64,
    pub longitude: f64,
    /// (beds, baths, sqft) z-scores.
    pub features: [f64; 3],
    pub price: f64,
}

#[derive(Debug, Clone)]
pub struct Standardization {
    pub means: [f64; 4],
    pub sds: [f64; 4],
    /// Records (among those used for the statistics) missing at least one
    /// feature.
    pub missing_fraction: f64,
}

/// z-scores all records using statistics computed over `train_idx` only.
/// Feature statistics ignore missing values; a zero-variance column is an
/// error.
pub fn standardize_records(
    records: &[HousingRecord],
    train_idx: &[usize],
) -> Result<(Vec<StandardizedHousing>, Standardization), DatasetError> {
    let columns: [(&str, Box<dyn Fn(&HousingRecord) -> Option<f64>>); 4] = [
        ("beds", Box::new(|r: &HousingRecord| r.beds)),
        ("baths", Box::new(|r: &HousingRecord| r.baths)),
        ("sqft", Box::new(|r: &HousingRecord| r.sqft)),
        ("price", Box::new(|r: &HousingRecord| Some(r.price))),
    ];
    let mut means = [0.0; 4];
    let mut sds = [0.0; 4];
    for (c, (name, get)) in columns.iter().enumerate() {
        let values: Vec<f64> = train_idx.iter().filter_map(|&i| get(&records[i])).collect();
        if values.is_empty() {
            return Err(DatasetError::ZeroVariance((*name).to_string()));
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / values.len() as f64;
        if var <= 0.0 {
            return Err(DatasetError::ZeroVariance((*name).to_string()));
        }
        means[c] = mean;
        sds[c] = var.sqrt();
    }
    let z = |value: Option<f64>, c: usize| -> f64 {
        value.map_or(0.0, |v| (v - means[c]) / sds[c])
    };
    let standardized = records
        .iter()
        .map(|r| StandardizedHousing {
            latitude: r.latitude,
            longitude: r.longitude,
            features: [z(r.beds, 0), z(r.baths, 1), z(r.sqft, 2)],
            price: (r.price - means[3]) / sds[3],
        })
        .collect();
    let missing = train_idx
        .iter()
        .filter(|&&i| {
            let r = &records[i];
            r.beds.is_none() || r.baths.is_none() || r.sqft.is_none()
        })
        .count();
    let stats = Standardization {
        means,
        sds,
        missing_fraction: missing as f64 / train_idx.len().max(1) as f64,
    };
    Ok((standardized, stats))
}

/// Great-circle distance in meters (haversine).
pub fn haversine_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    const EARTH_RADIUS_M: f64 = 6_371_000.0;
    let (phi1, phi2) = (lat1.to_radians(), lat2.to_radians());
    let dphi = (lat2 - lat1).to_radians();
    let dlambda = (lon2 - lon1).to_radians();
    let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
}

/// Coincident coordinates would give an infinite inverse-distance weight.
const DISTANCE_FLOOR_M: f64 = 1.0;

fn k_nearest(points: &[(f64, f64)], query: (f64, f64), k: usize, skip: Option<usize>) -> Vec<(usize, f64)> {
    let mut dists: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(i, &(lat, lon))| (haversine_m(query.0, query.1, lat, lon), i))
        .collect();
    // Ties broken by node index so the graph is reproducible.
    dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    dists
        .into_iter()
        .take(k)
        .map(|(d, i)| (i, d.max(DISTANCE_FLOOR_M)))
        .collect()
}

/// Undirected kNN union graph over the training points: an edge `(i, j)`
/// exists iff `j` is among `i`'s k nearest or vice versa, weighted by the
/// inverse distance (floored at one meter).
pub fn build_knn_graph(points: &[(f64, f64)], k: usize) -> Result<Vec<(usize, usize, f64)>, DatasetError> {
    if points.len() < 2 {
        return Err(DatasetError::TooFewRecords { need: 2, got: points.len() });
    }
    let mut edges = std::collections::BTreeMap::new();
    for (i, &pt) in points.iter().enumerate() {
        for (j, d) in k_nearest(points, pt, k, Some(i)) {
            let key = (i.min(j), i.max(j));
            edges.entry(key).or_insert(1.0 / d);
        }
    }
    Ok(edges.into_iter().map(|((j, k), w)| (j, k, w)).collect())
}

/// The k nearest training points to a held-out query, as `(index, weight)`.
pub fn nearest_training(points: &[(f64, f64)], query: (f64, f64), k: usize) -> Vec<(usize, f64)> {
    k_nearest(points, query, k, None)
        .into_iter()
        .map(|(i, d)| (i, 1.0 / d))
        .collect()
}

/// Assembles the housing problem: kNN graph over the training records with
/// one ridge-regularized regression objective per node.
pub fn housing_graph(
    train: &[StandardizedHousing],
    k: usize,
    mu: f64,
) -> Result<ProblemGraph, DatasetError> {
    let points: Vec<(f64, f64)> = train.iter().map(|r| (r.latitude, r.longitude)).collect();
    let edges = build_knn_graph(&points, k)?;
    let mut g = build_graph(train.len(), 4, &edges)?;
    for (i, r) in train.iter().enumerate() {
        g.set_objective(
            i,
            Box::new(RegressionObjective::new(
                r.features[0],
                r.features[1],
                r.features[2],
                r.price,
                mu,
            )),
        );
    }
    Ok(g)
}

/// Price estimate of a regression variable `x = (a, b, c, d)` on a record's
/// standardized features.
pub fn predict_price(x: &[f64], features: &[f64; 3]) -> f64 {
    x[0] * features[0] + x[1] * features[1] + x[2] * features[2] + x[3]
}
