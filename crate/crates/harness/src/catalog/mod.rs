//! Versioned experiment catalog.
//!
//! Each entry owns a typed settings struct with defaults, documents the
//! figure it mirrors and every departure from that figure's setup, and
//! computes rows for a resolved configuration. Lengths are in wavelengths
//! unless a setting name says otherwise.

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use ma_core::geometry::{validate_positions, MoveRegion, Vec3};

use crate::error::{HarnessError, Result};

mod estimate;
mod optimize;
mod sense;
mod simulate;

/// Bumped whenever an entry's defaults, columns or numerics change.
pub const CATALOG_VERSION: u32 = 1;

/// CLI subcommand an experiment belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Simulate,
    Optimize,
    Sense,
    Estimate,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Simulate => "simulate",
            Category::Optimize => "optimize",
            Category::Sense => "sense",
            Category::Estimate => "estimate",
        }
    }
}

/// How seeds are used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    /// One row per sweep point, averaged over one trial per seed.
    MonteCarlo,
    /// Many rows from a single run; only the first seed is used.
    Table,
}

#[derive(Debug, Clone, Copy)]
pub struct Info {
    pub id: &'static str,
    pub category: Category,
    pub kind: Kind,
    pub summary: &'static str,
    /// The figure this experiment mirrors, described by content.
    pub figure: &'static str,
    /// Every departure from that figure's setup.
    pub deviations: &'static [&'static str],
    pub sweep_variables: &'static [&'static str],
    pub default_trials: usize,
}

/// A typed experiment.
pub trait Experiment: Sync + 'static {
    type Settings: Serialize + DeserializeOwned + Default + Clone + Send + Sync;

    fn info(&self) -> &'static Info;

    /// Rejects settings that cannot run. Geometric impossibilities are
    /// `Infeasible`; everything else is a config error.
    fn check(&self, _settings: &Self::Settings) -> Result<()> {
        Ok(())
    }

    fn columns(&self, settings: &Self::Settings) -> Vec<String>;

    /// Rows for one sweep point. `seeds` are the derived per-trial seeds.
    fn compute(&self, settings: &Self::Settings, seeds: &[u64]) -> Result<Vec<Vec<f64>>>;
}

/// Object-safe view of an [`Experiment`] over JSON settings.
pub trait Entry: Sync {
    fn info(&self) -> &'static Info;
    /// Fills defaults, rejects unknown fields, checks, and returns the
    /// canonical settings object.
    fn resolve(&self, settings: Value) -> Result<Value>;
    fn default_settings(&self) -> Value;
    fn columns(&self, settings: &Value) -> Result<Vec<String>>;
    fn run(&self, settings: &Value, seeds: &[u64]) -> Result<Vec<Vec<f64>>>;
}

fn typed<E: Experiment>(settings: &Value) -> Result<E::Settings> {
    serde_json::from_value(settings.clone()).map_err(|e| HarnessError::Config(format!("invalid settings: {e}")))
}

impl<E: Experiment> Entry for E {
    fn info(&self) -> &'static Info {
        Experiment::info(self)
    }

    fn resolve(&self, settings: Value) -> Result<Value> {
        let s = typed::<E>(&settings)?;
        self.check(&s)?;
        Ok(serde_json::to_value(&s).expect("settings serialize"))
    }

    fn default_settings(&self) -> Value {
        serde_json::to_value(E::Settings::default()).expect("settings serialize")
    }

    fn columns(&self, settings: &Value) -> Result<Vec<String>> {
        Ok(Experiment::columns(self, &typed::<E>(settings)?))
    }

    fn run(&self, settings: &Value, seeds: &[u64]) -> Result<Vec<Vec<f64>>> {
        let s = typed::<E>(settings)?;
        self.check(&s)?;
        self.compute(&s, seeds)
    }
}

static ENTRIES: &[&dyn Entry] = &[
    &simulate::ChannelMap,
    &simulate::DofStudy,
    &optimize::SisoGainBounds,
    &optimize::BeamPattern,
    &optimize::MimoCapacity,
    &optimize::MultiuserRate,
    &sense::Sensing1dMse,
    &sense::Sensing2dCrb,
    &estimate::EstimationNmse,
];

pub fn entries() -> &'static [&'static dyn Entry] {
    ENTRIES
}

pub fn find(id: &str) -> Option<&'static dyn Entry> {
    ENTRIES.iter().copied().find(|e| e.info().id == id)
}

pub fn ids() -> Vec<&'static str> {
    ENTRIES.iter().map(|e| e.info().id).collect()
}

/// Runs `trial` once per seed on the current rayon pool and returns the
/// results in seed order. The first failing trial in seed order wins.
pub(crate) fn trials<T: Send>(seeds: &[u64], trial: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    let out: Vec<Result<T>> = seeds.par_iter().map(|&s| trial(s)).collect();
    out.into_iter().collect()
}

/// Column means in trial order.
pub(crate) fn mean_row(rows: &[Vec<f64>]) -> Vec<f64> {
    let width = rows.first().map_or(0, Vec::len);
    let mut sum = vec![0.0; width];
    for r in rows {
        for (s, v) in sum.iter_mut().zip(r) {
            *s += v;
        }
    }
    sum.iter().map(|s| s / rows.len() as f64).collect()
}

/// Rejects an optimized placement that leaves the region or breaks `d_min`.
pub(crate) fn validated(what: &str, positions: &[Vec3], region: &MoveRegion) -> Result<()> {
    match validate_positions(positions, region).describe() {
        None => Ok(()),
        Some(msg) => Err(HarnessError::Infeasible(format!("{what}: {msg}"))),
    }
}

pub(crate) fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub(crate) fn from_db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

pub(crate) fn config_error(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

pub(crate) fn infeasible(msg: impl Into<String>) -> HarnessError {
    HarnessError::Infeasible(msg.into())
}
