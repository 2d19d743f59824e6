//! The full feature vector and its building blocks.

pub mod autocorr;
pub mod decomp;
pub mod hetero;
pub mod nonlinearity;
pub mod spectral;
pub mod stl;
pub mod unitroot;
pub mod windows;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_slice, Exec};
use crate::series::TimeSeries;
use crate::stats::standardize;

const HEAD: [&str; 30] = [
    "length",
    "nPeriods",
    "periods",
    "ndiffs",
    "nsdiffs",
    "x.acf1",
    "x.acf10",
    "diff1.acf1",
    "diff1.acf10",
    "diff2.acf1",
    "diff2.acf10",
    "seas.acf1",
    "x.pacf5",
    "diff1.pacf5",
    "diff2.pacf5",
    "seas.pacf",
    "entropy",
    "nonlinearity",
    "hurst",
    "stability",
    "lumpiness",
    "unitroot.kpss",
    "unitroot.pp",
    "max.level.shift",
    "time.level.shift",
    "max.var.shift",
    "time.var.shift",
    "max.kl.shift",
    "time.kl.shift",
    "trend",
];

const TAIL: [&str; 11] = [
    "peak",
    "trough",
    "spike",
    "linearity",
    "curvature",
    "e.acf1",
    "e.acf10",
    "arch.acf",
    "garch.acf",
    "arch.r2",
    "garch.r2",
];

/// Name of the `i`-th (0-based) seasonal strength entry.
pub fn seasonal_strength_name(i: usize) -> String {
    if i == 0 {
        "seasonal.strength".to_string()
    } else {
        format!("seasonal.strength.{}", i + 1)
    }
}

/// Number of seasonal strength entries for a period list.
pub fn seasonal_entries(periods: &[usize]) -> usize {
    periods.iter().filter(|p| **p > 1).count().max(1)
}

/// Canonical feature names for a vector with `n_seasonal` strength entries.
pub fn feature_names(n_seasonal: usize) -> Vec<String> {
    let mut v: Vec<String> = HEAD.iter().map(|s| s.to_string()).collect();
    v.extend((0..n_seasonal.max(1)).map(seasonal_strength_name));
    v.extend(TAIL.iter().map(|s| s.to_string()));
    v
}

/// Canonical names for a single-period series.
pub fn canonical_names() -> Vec<String> {
    feature_names(1)
}

/// Groups of features that are computed together.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureGroup {
    Bookkeeping,
    Ndiffs,
    Nsdiffs,
    Acf,
    Pacf,
    Entropy,
    Nonlinearity,
    Hurst,
    Tiled,
    UnitRoot,
    Shifts,
    Stl,
    Heterogeneity,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 13] = [
        FeatureGroup::Bookkeeping,
        FeatureGroup::Ndiffs,
        FeatureGroup::Nsdiffs,
        FeatureGroup::Acf,
        FeatureGroup::Pacf,
        FeatureGroup::Entropy,
        FeatureGroup::Nonlinearity,
        FeatureGroup::Hurst,
        FeatureGroup::Tiled,
        FeatureGroup::UnitRoot,
        FeatureGroup::Shifts,
        FeatureGroup::Stl,
        FeatureGroup::Heterogeneity,
    ];
}

/// Group owning `name`, or `UnknownFeature`.
pub fn group_of(name: &str) -> Result<FeatureGroup> {
    use FeatureGroup::*;
    let g = match name {
        "length" | "nPeriods" | "periods" => Bookkeeping,
        "ndiffs" => Ndiffs,
        "nsdiffs" => Nsdiffs,
        "x.acf1" | "x.acf10" | "diff1.acf1" | "diff1.acf10" | "diff2.acf1" | "diff2.acf10"
        | "seas.acf1" => Acf,
        "x.pacf5" | "diff1.pacf5" | "diff2.pacf5" | "seas.pacf" => Pacf,
        "entropy" => Entropy,
        "nonlinearity" => Nonlinearity,
        "hurst" => Hurst,
        "stability" | "lumpiness" => Tiled,
        "unitroot.kpss" | "unitroot.pp" => UnitRoot,
        "max.level.shift" | "time.level.shift" | "max.var.shift" | "time.var.shift"
        | "max.kl.shift" | "time.kl.shift" => Shifts,
        "trend" | "peak" | "trough" | "spike" | "linearity" | "curvature" | "e.acf1" | "e.acf10" => Stl,
        "arch.acf" | "garch.acf" | "arch.r2" | "garch.r2" => Heterogeneity,
        s if s == "seasonal.strength" || parse_strength_index(s).is_some() => Stl,
        _ => return Err(Error::UnknownFeature(name.to_string())),
    };
    Ok(g)
}

fn parse_strength_index(name: &str) -> Option<usize> {
    let rest = name.strip_prefix("seasonal.strength.")?;
    let k: usize = rest.parse().ok()?;
    (k >= 2).then_some(k)
}

/// Whether a feature only carries information for seasonal series.
pub fn is_seasonal_only(name: &str) -> bool {
    matches!(name, "nsdiffs" | "seas.acf1" | "seas.pacf" | "peak" | "trough")
        || name.starts_with("seasonal.strength")
}

/// Documented value range of a feature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    /// `None` means unbounded.
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub min_inclusive: bool,
    pub max_inclusive: bool,
    pub integer: bool,
}

impl FeatureRange {
    const fn new(min: Option<f64>, max: Option<f64>, min_inclusive: bool, max_inclusive: bool) -> Self {
        FeatureRange { min, max, min_inclusive, max_inclusive, integer: false }
    }

    const fn int(min: f64, max: Option<f64>) -> Self {
        FeatureRange { min: Some(min), max, min_inclusive: true, max_inclusive: true, integer: true }
    }

    pub fn contains(&self, v: f64) -> bool {
        if !v.is_finite() {
            return false;
        }
        let lo = match self.min {
            Some(m) if self.min_inclusive => v >= m,
            Some(m) => v > m,
            None => true,
        };
        let hi = match self.max {
            Some(m) if self.max_inclusive => v <= m,
            Some(m) => v < m,
            None => true,
        };
        lo && hi && (!self.integer || v.fract() == 0.0)
    }
}

/// Range of feature `name` (unknown names are unbounded).
pub fn feature_range(name: &str) -> FeatureRange {
    let closed = |a: f64, b: f64| FeatureRange::new(Some(a), Some(b), true, true);
    let nonneg = FeatureRange::new(Some(0.0), None, true, false);
    let open_unit = FeatureRange::new(Some(-1.0), Some(1.0), false, false);
    let free = FeatureRange::new(None, None, false, false);
    match name {
        "length" | "nPeriods" | "periods" => FeatureRange::int(1.0, None),
        "ndiffs" => FeatureRange::int(0.0, Some(2.0)),
        "nsdiffs" => FeatureRange::int(0.0, Some(1.0)),
        "time.level.shift" | "time.var.shift" | "time.kl.shift" => FeatureRange::int(1.0, None),
        "peak" | "trough" => FeatureRange::int(0.0, None),
        "x.acf1" | "diff1.acf1" | "diff2.acf1" | "seas.acf1" | "seas.pacf" | "e.acf1" => open_unit,
        "x.acf10" | "diff1.acf10" | "diff2.acf10" | "e.acf10" => closed(0.0, 10.0),
        "x.pacf5" | "diff1.pacf5" | "diff2.pacf5" => closed(0.0, 5.0),
        "arch.acf" | "garch.acf" => closed(0.0, 12.0),
        "entropy" => FeatureRange::new(Some(0.0), Some(1.0), false, true),
        "hurst" => closed(0.5, 1.0),
        "trend" | "arch.r2" | "garch.r2" => closed(0.0, 1.0),
        s if s.starts_with("seasonal.strength") => closed(0.0, 1.0),
        "nonlinearity" | "stability" | "lumpiness" | "unitroot.kpss" | "max.level.shift"
        | "max.var.shift" | "max.kl.shift" | "spike" => nonneg,
        _ => free,
    }
}

/// Ordered named feature values; `None` marks an absent entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<Option<f64>>,
    pub periods: Vec<usize>,
    /// Diagnostics for entries that were absent or replaced by a fallback.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl FeatureVector {
    fn empty(periods: &[usize]) -> Self {
        let names = feature_names(seasonal_entries(periods));
        let values = vec![None; names.len()];
        FeatureVector { names, values, periods: periods.to_vec(), flags: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.index_of(name).and_then(|i| self.values[i])
    }

    fn set(&mut self, name: &str, v: Option<f64>) {
        if let Some(i) = self.index_of(name) {
            self.values[i] = v;
        }
    }

    fn fail(&mut self, names: &[&str], err: &Error) {
        for n in names {
            self.set(n, None);
        }
        self.flags.push(format!("{}: {}", names.join(","), err));
    }

    /// Names of entries whose values violate their documented ranges,
    /// including non-finite values.
    pub fn range_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (n, v) in self.names.iter().zip(&self.values) {
            if let Some(v) = v {
                if !feature_range(n).contains(*v) {
                    out.push(format!("{n}={v}"));
                }
            }
        }
        if self.periods.iter().all(|p| *p <= 1) {
            for n in ["nsdiffs", "seas.acf1", "seas.pacf", "seasonal.strength"] {
                if let Some(v) = self.get(n) {
                    if v != 0.0 {
                        out.push(format!("{n}={v} on non-seasonal data"));
                    }
                }
            }
        }
        out
    }
}

/// Which feature groups to evaluate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureSelection(BTreeSet<FeatureGroup>);

impl FeatureSelection {
    pub fn all() -> Self {
        FeatureSelection(FeatureGroup::ALL.into_iter().collect())
    }

    /// Groups needed for the given feature names.
    pub fn for_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut set = BTreeSet::new();
        set.insert(FeatureGroup::Bookkeeping);
        for n in names {
            set.insert(group_of(n.as_ref())?);
        }
        Ok(FeatureSelection(set))
    }

    pub fn contains(&self, g: FeatureGroup) -> bool {
        self.0.contains(&g)
    }
}

/// Every feature of `ts`.
pub fn compute_feature_vector(ts: &TimeSeries) -> FeatureVector {
    compute_features(ts, &FeatureSelection::all())
}

/// Features of `ts` restricted to `sel`; other entries stay absent.
pub fn compute_features(ts: &TimeSeries, sel: &FeatureSelection) -> FeatureVector {
    use FeatureGroup as G;
    let periods = ts.periods.clone();
    let mut fv = FeatureVector::empty(&periods);
    let period = ts.max_period();
    let n = ts.len();

    fv.set("length", Some(n as f64));
    fv.set("nPeriods", Some(periods.len() as f64));
    fv.set("periods", Some(period as f64));

    let z = match standardize(&ts.values) {
        Ok(z) => z,
        Err(e) => {
            fv.flags.push(format!("series: {e}"));
            return fv;
        }
    };

    if sel.contains(G::Ndiffs) {
        match unitroot::ndiffs(&z) {
            Ok(d) => fv.set("ndiffs", Some(d as f64)),
            Err(e) => fv.fail(&["ndiffs"], &e),
        }
    }
    if sel.contains(G::Nsdiffs) {
        fv.set("nsdiffs", Some(unitroot::nsdiffs(&z, period) as f64));
    }
    if sel.contains(G::Acf) {
        match autocorr::acf_feature_set(&z, period) {
            Ok(a) => {
                fv.set("x.acf1", Some(a.x_acf1));
                fv.set("x.acf10", Some(a.x_acf10));
                fv.set("diff1.acf1", a.diff1_acf1);
                fv.set("diff1.acf10", a.diff1_acf10);
                fv.set("diff2.acf1", a.diff2_acf1);
                fv.set("diff2.acf10", a.diff2_acf10);
                fv.set("seas.acf1", Some(a.seas_acf1));
            }
            Err(e) => fv.fail(
                &["x.acf1", "x.acf10", "diff1.acf1", "diff1.acf10", "diff2.acf1", "diff2.acf10", "seas.acf1"],
                &e,
            ),
        }
    }
    if sel.contains(G::Pacf) {
        match autocorr::pacf_feature_set(&z, period) {
            Ok(p) => {
                fv.set("x.pacf5", Some(p.x_pacf5));
                fv.set("diff1.pacf5", p.diff1_pacf5);
                fv.set("diff2.pacf5", p.diff2_pacf5);
                fv.set("seas.pacf", Some(p.seas_pacf));
            }
            Err(e) => fv.fail(&["x.pacf5", "diff1.pacf5", "diff2.pacf5", "seas.pacf"], &e),
        }
    }
    if sel.contains(G::Entropy) {
        match spectral::spectral_entropy(&z) {
            Ok(v) => fv.set("entropy", Some(v)),
            Err(e) => fv.fail(&["entropy"], &e),
        }
    }
    if sel.contains(G::Nonlinearity) {
        match nonlinearity::nonlinearity(&z) {
            Ok(v) => fv.set("nonlinearity", Some(v)),
            Err(Error::SingularDesign) => {
                fv.set("nonlinearity", Some(0.0));
                fv.flags.push("nonlinearity: singular design, set to 0".into());
            }
            Err(e) => fv.fail(&["nonlinearity"], &e),
        }
    }
    if sel.contains(G::Hurst) {
        match spectral::hurst(&z) {
            Ok(v) => fv.set("hurst", Some(v)),
            Err(e) => fv.fail(&["hurst"], &e),
        }
    }
    if sel.contains(G::Tiled) {
        match windows::tiled_window_features(&z, period) {
            Ok((s, l)) => {
                fv.set("stability", Some(s));
                fv.set("lumpiness", Some(l));
            }
            Err(e) => fv.fail(&["stability", "lumpiness"], &e),
        }
    }
    if sel.contains(G::UnitRoot) {
        match unitroot::kpss_trend(&z) {
            Ok(v) => fv.set("unitroot.kpss", Some(v)),
            Err(e) => fv.fail(&["unitroot.kpss"], &e),
        }
        match unitroot::pp_z_alpha(&z) {
            Ok(v) => fv.set("unitroot.pp", Some(v)),
            Err(e) => fv.fail(&["unitroot.pp"], &e),
        }
    }
    if sel.contains(G::Shifts) {
        match windows::sliding_shift_features(&z, period) {
            Ok(s) => {
                fv.set("max.level.shift", Some(s.max_level_shift));
                fv.set("time.level.shift", Some(s.time_level_shift as f64));
                fv.set("max.var.shift", Some(s.max_var_shift));
                fv.set("time.var.shift", Some(s.time_var_shift as f64));
                fv.set("max.kl.shift", Some(s.max_kl_shift));
                fv.set("time.kl.shift", Some(s.time_kl_shift as f64));
            }
            Err(e) => fv.fail(
                &["max.level.shift", "time.level.shift", "max.var.shift", "time.var.shift", "max.kl.shift", "time.kl.shift"],
                &e,
            ),
        }
    }
    if sel.contains(G::Stl) {
        let k = seasonal_entries(&periods);
        match decomp::stl_feature_set(&z, &periods) {
            Ok(f) => {
                fv.set("trend", Some(f.trend));
                for (i, v) in f.seasonal_strength.iter().enumerate() {
                    fv.set(&seasonal_strength_name(i), Some(*v));
                }
                fv.set("peak", Some(f.peak));
                fv.set("trough", Some(f.trough));
                fv.set("spike", Some(f.spike));
                fv.set("linearity", Some(f.linearity));
                fv.set("curvature", Some(f.curvature));
                fv.set("e.acf1", f.e_acf1);
                fv.set("e.acf10", f.e_acf10);
                let dropped: Vec<usize> = periods
                    .iter()
                    .copied()
                    .filter(|p| *p > 1 && n < stl::min_length_for_period(*p))
                    .collect();
                if !dropped.is_empty() {
                    fv.flags.push(format!("seasonal.strength: periods {dropped:?} too long for the series, set to 0"));
                }
            }
            Err(e) => {
                let mut names: Vec<String> = ["trend", "peak", "trough", "spike", "linearity", "curvature", "e.acf1", "e.acf10"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect();
                names.extend((0..k).map(seasonal_strength_name));
                let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
                fv.fail(&refs, &e);
            }
        }
    }
    if sel.contains(G::Heterogeneity) {
        let names = ["arch.acf", "garch.acf", "arch.r2", "garch.r2"];
        match hetero::heterogeneity_features(&z) {
            Ok(h) => {
                fv.set("arch.acf", Some(h.arch_acf));
                fv.set("garch.acf", Some(h.garch_acf));
                fv.set("arch.r2", Some(h.arch_r2));
                fv.set("garch.r2", Some(h.garch_r2));
            }
            Err(Error::GarchFitFailed) => {
                for n in names {
                    fv.set(n, Some(0.0));
                }
                fv.flags.push("heterogeneity: GARCH fit failed, set to 0".into());
            }
            Err(e) => fv.fail(&names, &e),
        }
    }
    fv
}

/// Feature vectors for a batch of series, in input order.
pub fn compute_batch(series: &[TimeSeries], sel: &FeatureSelection, exec: Exec) -> Vec<FeatureVector> {
    map_slice(exec, series, |ts| compute_features(ts, sel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{generate_batch, GeneratorConfig};

    #[test]
    fn vector_lengths() {
        assert_eq!(feature_names(1).len(), 42);
        assert_eq!(feature_names(2).len(), 43);
        let ts = &generate_batch(&GeneratorConfig::for_period(12), 1, 3, Exec::Sequential).unwrap()[0];
        assert_eq!(compute_feature_vector(ts).len(), 42);
        let two = TimeSeries::new((0..400).map(|t| ((t * 7919) % 13) as f64).collect(), vec![4, 12]).unwrap();
        assert_eq!(compute_feature_vector(&two).len(), 43);
    }

    #[test]
    fn names_resolve_to_groups() {
        for n in feature_names(3) {
            group_of(&n).unwrap();
        }
        assert!(group_of("seasonal.strength.1").is_err());
        assert!(matches!(group_of("bogus"), Err(Error::UnknownFeature(_))));
    }

    #[test]
    fn non_seasonal_conventions() {
        let batch = generate_batch(&GeneratorConfig::for_period(1).with_length(100), 5, 9, Exec::Sequential).unwrap();
        for ts in &batch {
            let fv = compute_feature_vector(ts);
            assert_eq!(fv.get("nsdiffs"), Some(0.0));
            assert_eq!(fv.get("seas.acf1"), Some(0.0));
            assert_eq!(fv.get("seas.pacf"), Some(0.0));
            assert_eq!(fv.get("seasonal.strength"), Some(0.0));
            assert_eq!(fv.get("nPeriods"), Some(1.0));
            assert!(fv.range_violations().is_empty(), "{:?}", fv.range_violations());
        }
    }

    #[test]
    fn selection_limits_work() {
        let ts = &generate_batch(&GeneratorConfig::for_period(1).with_length(60), 1, 1, Exec::Sequential).unwrap()[0];
        let sel = FeatureSelection::for_names(&["entropy", "trend"]).unwrap();
        let fv = compute_features(ts, &sel);
        assert!(fv.get("entropy").is_some() && fv.get("trend").is_some());
        assert!(fv.get("hurst").is_none() && fv.get("arch.r2").is_none());
    }

    #[test]
    fn constant_series_keeps_bookkeeping_only() {
        let ts = TimeSeries::new(vec![2.0; 60], vec![1]).unwrap();
        let fv = compute_feature_vector(&ts);
        assert_eq!(fv.get("length"), Some(60.0));
        assert!(fv.get("entropy").is_none());
        assert!(!fv.flags.is_empty());
    }

    #[test]
    fn short_series_yield_partial_vectors() {
        let ts = TimeSeries::new((0..20).map(|t| (t as f64 * 1.3).sin() + t as f64 * 0.1).collect(), vec![1]).unwrap();
        let fv = compute_feature_vector(&ts);
        assert!(fv.get("x.acf1").is_some());
        assert!(fv.get("hurst").is_none());
        assert!(fv.get("arch.acf").is_none());
        assert!(fv.range_violations().is_empty());
    }
}
