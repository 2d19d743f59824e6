//! On-disk formats: JSONL and long-CSV series files, feature and
//! embedding tables, and pretty JSON for everything else.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{feature_names, FeatureVector};
use crate::series::{SeriesMeta, TimeSeries};
use crate::space::{EmbedMethod, FeatureMatrix};

/// One line of a JSONL series file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub id: String,
    pub periods: Vec<usize>,
    pub values: Vec<f64>,
    #[serde(default)]
    pub meta: SeriesMeta,
}

impl SeriesRecord {
    pub fn new(id: impl Into<String>, ts: TimeSeries) -> Self {
        SeriesRecord { id: id.into(), periods: ts.periods, values: ts.values, meta: ts.meta.unwrap_or_default() }
    }

    pub fn series(&self) -> Result<TimeSeries> {
        let meta = if self.meta == SeriesMeta::default() { None } else { Some(self.meta.clone()) };
        let ts = TimeSeries { values: self.values.clone(), periods: self.periods.clone(), meta };
        ts.validate().map_err(|e| Error::Parse(format!("series `{}`: {e}", self.id)))?;
        Ok(ts)
    }
}

/// Ids `series_0`, `series_1`, ... for freshly generated batches.
pub fn default_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("series_{i}")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesFormat {
    Jsonl,
    Csv,
}

impl SeriesFormat {
    /// `.csv` means long CSV; anything else is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => SeriesFormat::Csv,
            _ => SeriesFormat::Jsonl,
        }
    }
}

impl std::str::FromStr for SeriesFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(SeriesFormat::Jsonl),
            "csv" => Ok(SeriesFormat::Csv),
            other => Err(Error::Parse(format!("unknown series format `{other}` (expected jsonl or csv)"))),
        }
    }
}

pub fn write_series_jsonl<W: Write>(mut w: W, records: &[SeriesRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_series_jsonl<R: Read>(r: R) -> Result<Vec<SeriesRecord>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SeriesRecord =
            serde_json::from_str(&line).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
        rec.series()?;
        out.push(rec);
    }
    Ok(out)
}

/// Periods and metadata of one series in a long-CSV sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidecarEntry {
    pub id: String,
    pub periods: Vec<usize>,
    #[serde(default)]
    pub meta: SeriesMeta,
}

/// `out.csv` keeps its periods in `out.periods.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("periods.json")
}

pub fn write_series_csv<W: Write>(w: W, records: &[SeriesRecord]) -> Result<Vec<SidecarEntry>> {
    let mut cw = csv::Writer::from_writer(w);
    cw.write_record(["id", "t", "value"])?;
    for r in records {
        for (t, v) in r.values.iter().enumerate() {
            cw.write_record([r.id.as_str(), &t.to_string(), &v.to_string()])?;
        }
    }
    cw.flush()?;
    Ok(records
        .iter()
        .map(|r| SidecarEntry { id: r.id.clone(), periods: r.periods.clone(), meta: r.meta.clone() })
        .collect())
}

/// Rebuilds records from `id,t,value` rows; ids keep their first-seen order
/// and `t` must run 0, 1, ... within each id.
pub fn read_series_csv<R: Read>(r: R, sidecar: &[SidecarEntry]) -> Result<Vec<SeriesRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "t", "value"] {
        return Err(Error::Parse("long CSV header must be id,t,value".into()));
    }
    let mut order: Vec<String> = Vec::new();
    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (line, row) in rd.records().enumerate() {
        let row = row?;
        let bad = |what: &str| Error::Parse(format!("row {}: bad {what}", line + 2));
        let id = row.get(0).ok_or_else(|| bad("id"))?.to_string();
        let t: usize = row.get(1).and_then(|s| s.trim().parse().ok()).ok_or_else(|| bad("t"))?;
        let v: f64 = row.get(2).and_then(|s| s.trim().parse().ok()).ok_or_else(|| bad("value"))?;
        let vs = values.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            Vec::new()
        });
        if t != vs.len() {
            return Err(Error::Parse(format!("row {}: series `{id}` expected t = {}, got {t}", line + 2, vs.len())));
        }
        vs.push(v);
    }
    let side: BTreeMap<&str, &SidecarEntry> = sidecar.iter().map(|e| (e.id.as_str(), e)).collect();
    let mut out = Vec::with_capacity(order.len());
    for id in order {
        let e = side.get(id.as_str()).ok_or_else(|| Error::Parse(format!("sidecar has no periods for `{id}`")))?;
        let rec = SeriesRecord {
            values: values.remove(&id).unwrap_or_default(),
            id,
            periods: e.periods.clone(),
            meta: e.meta.clone(),
        };
        rec.series()?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_series_file(path: &Path, format: SeriesFormat, records: &[SeriesRecord]) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    match format {
        SeriesFormat::Jsonl => write_series_jsonl(w, records),
        SeriesFormat::Csv => {
            let side = write_series_csv(w, records)?;
            write_json(&sidecar_path(path), &side)
        }
    }
}

/// Reads either format, chosen by extension.
pub fn read_series_file(path: &Path) -> Result<Vec<SeriesRecord>> {
    let f = File::open(path)?;
    match SeriesFormat::from_path(path) {
        SeriesFormat::Jsonl => read_series_jsonl(f),
        SeriesFormat::Csv => {
            let side: Vec<SidecarEntry> = read_json(&sidecar_path(path))?;
            read_series_csv(f, &side)
        }
    }
}

/// Stacks feature vectors under the widest canonical header; entries a
/// vector lacks stay absent.
pub fn vectors_to_matrix(ids: &[String], vectors: &[FeatureVector]) -> Result<FeatureMatrix> {
    if ids.len() != vectors.len() {
        return Err(Error::Parse("one id per feature vector is required".into()));
    }
    let seasonal = vectors.iter().map(|v| v.names.len()).max().unwrap_or(0).saturating_sub(feature_names(1).len());
    let names = feature_names(seasonal + 1);
    let rows = vectors.iter().map(|v| names.iter().map(|n| v.get(n)).collect()).collect();
    let fm = FeatureMatrix { names, ids: ids.to_vec(), rows };
    fm.validate()?;
    Ok(fm)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_cell(s: &str, row: usize, col: &str) -> Result<Option<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::Parse(format!("row {row}: `{s}` in column {col} is not a finite number"))),
    }
}

/// Header `id,<feature names>`; absent entries are empty cells.
pub fn write_feature_csv<W: Write>(w: W, fm: &FeatureMatrix) -> Result<()> {
    let mut cw = csv::Writer::from_writer(w);
    cw.write_record(std::iter::once("id").chain(fm.names.iter().map(|s| s.as_str())))?;
    for (id, row) in fm.ids.iter().zip(&fm.rows) {
        cw.write_record(std::iter::once(id.clone()).chain(row.iter().map(|v| cell(*v))))?;
    }
    cw.flush()?;
    Ok(())
}

pub fn read_feature_csv<R: Read>(r: R) -> Result<FeatureMatrix> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    if header.get(0) != Some("id") {
        return Err(Error::Parse("feature CSV must start with an id column".into()));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let (mut ids, mut rows) = (Vec::new(), Vec::new());
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        if rec.len() != names.len() + 1 {
            return Err(Error::Parse(format!("row {}: expected {} cells", i + 2, names.len() + 1)));
        }
        ids.push(rec[0].to_string());
        rows.push(
            names.iter().enumerate().map(|(j, n)| parse_cell(&rec[j + 1], i + 2, n)).collect::<Result<Vec<_>>>()?,
        );
    }
    let fm = FeatureMatrix { names, ids, rows };
    fm.validate()?;
    Ok(fm)
}

/// Embedding coordinates as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub ids: Vec<String>,
    pub points: Vec<[f64; 2]>,
    pub method: EmbedMethod,
    pub seed: Option<u64>,
}

/// Columns `id,comp1,comp2,method,seed`; the seed cell is empty for PCA.
pub fn write_embedding_csv<W: Write>(w: W, t: &EmbeddingTable) -> Result<()> {
    let mut cw = csv::Writer::from_writer(w);
    cw.write_record(["id", "comp1", "comp2", "method", "seed"])?;
    let seed = t.seed.map(|s| s.to_string()).unwrap_or_default();
    for (id, p) in t.ids.iter().zip(&t.points) {
        cw.write_record([id.as_str(), &p[0].to_string(), &p[1].to_string(), t.method.as_str(), &seed])?;
    }
    cw.flush()?;
    Ok(())
}

pub fn read_embedding_csv<R: Read>(r: R) -> Result<EmbeddingTable> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "comp1", "comp2", "method", "seed"] {
        return Err(Error::Parse("embedding CSV header must be id,comp1,comp2,method,seed".into()));
    }
    let (mut ids, mut points) = (Vec::new(), Vec::new());
    let mut method = None;
    let mut seed = None;
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let x = parse_cell(&rec[1], row, "comp1")?.ok_or_else(|| Error::Parse(format!("row {row}: empty comp1")))?;
        let y = parse_cell(&rec[2], row, "comp2")?.ok_or_else(|| Error::Parse(format!("row {row}: empty comp2")))?;
        let m: EmbedMethod = rec[3].parse()?;
        let s = if rec[4].is_empty() {
            None
        } else {
            Some(rec[4].parse::<u64>().map_err(|e| Error::Parse(format!("row {row}: seed: {e}")))?)
        };
        if i == 0 {
            method = Some(m);
            seed = s;
        } else if method != Some(m) || seed != s {
            return Err(Error::Parse(format!("row {row}: method and seed must agree across rows")));
        }
        ids.push(rec[0].to_string());
        points.push([x, y]);
    }
    let method = method.ok_or(Error::EmptyDataset)?;
    Ok(EmbeddingTable { ids, points, method, seed })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

pub fn write_feature_file(path: &Path, fm: &FeatureMatrix) -> Result<()> {
    write_feature_csv(BufWriter::new(File::create(path)?), fm)
}

pub fn read_feature_file(path: &Path) -> Result<FeatureMatrix> {
    read_feature_csv(File::open(path)?)
}

pub fn write_embedding_file(path: &Path, t: &EmbeddingTable) -> Result<()> {
    write_embedding_csv(BufWriter::new(File::create(path)?), t)
}

pub fn read_embedding_file(path: &Path) -> Result<EmbeddingTable> {
    read_embedding_csv(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::compute_feature_vector;
    use crate::generator::{generate_batch, GeneratorConfig};
    use crate::Exec;

    fn batch() -> Vec<SeriesRecord> {
        let cfg = GeneratorConfig::for_period(4).with_length(30);
        let s = generate_batch(&cfg, 5, 3, Exec::Sequential).unwrap();
        default_ids(s.len()).into_iter().zip(s).map(|(id, ts)| SeriesRecord::new(id, ts)).collect()
    }

    #[test]
    fn jsonl_round_trips_bit_for_bit() {
        let recs = batch();
        let mut buf = Vec::new();
        write_series_jsonl(&mut buf, &recs).unwrap();
        let back = read_series_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, recs);
        let mut again = Vec::new();
        write_series_jsonl(&mut again, &back).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn long_csv_round_trips() {
        let recs = batch();
        let mut buf = Vec::new();
        let side = write_series_csv(&mut buf, &recs).unwrap();
        let back = read_series_csv(buf.as_slice(), &side).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn long_csv_rejects_gaps_and_missing_periods() {
        let text = "id,t,value\na,0,1.0\na,2,2.0\n";
        let side = vec![SidecarEntry { id: "a".into(), periods: vec![1], meta: SeriesMeta::default() }];
        assert!(read_series_csv(text.as_bytes(), &side).is_err());
        assert!(read_series_csv("id,t,value\nb,0,1\n".as_bytes(), &side).is_err());
    }

    #[test]
    fn jsonl_rejects_non_finite_and_empty_periods() {
        assert!(read_series_jsonl(r#"{"id":"a","periods":[],"values":[1,2]}"#.as_bytes()).is_err());
        assert!(read_series_jsonl(r#"{"id":"a","periods":[1],"values":[1,"x"]}"#.as_bytes()).is_err());
    }

    #[test]
    fn feature_csv_keeps_absent_cells() {
        let recs = batch();
        let fvs: Vec<_> = recs.iter().map(|r| compute_feature_vector(&r.series().unwrap())).collect();
        let ids: Vec<String> = recs.iter().map(|r| r.id.clone()).collect();
        let mut fm = vectors_to_matrix(&ids, &fvs).unwrap();
        fm.rows[0][3] = None;
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &fm).unwrap();
        let back = read_feature_csv(buf.as_slice()).unwrap();
        assert_eq!(back, fm);
        assert_eq!(back.names.len(), 42);
    }

    #[test]
    fn mixed_periods_share_the_widest_header() {
        let one = compute_feature_vector(&TimeSeries::new((0..40).map(|t| (t as f64).sin()).collect(), vec![1]).unwrap());
        let two = compute_feature_vector(
            &TimeSeries::new((0..200).map(|t| (t as f64 * 0.3).sin() + t as f64 * 0.01).collect(), vec![4, 12]).unwrap(),
        );
        let fm = vectors_to_matrix(&["a".into(), "b".into()], &[one, two]).unwrap();
        assert_eq!(fm.names.len(), 43);
        let j = fm.names.iter().position(|n| n == "seasonal.strength.2").unwrap();
        assert_eq!(fm.rows[0][j], None);
    }

    #[test]
    fn embedding_csv_round_trips() {
        let t = EmbeddingTable {
            ids: vec!["a".into(), "b".into()],
            points: vec![[0.1, -2.5e-7], [3.0, 1.0 / 3.0]],
            method: EmbedMethod::Tsne,
            seed: Some(11),
        };
        let mut buf = Vec::new();
        write_embedding_csv(&mut buf, &t).unwrap();
        assert_eq!(read_embedding_csv(buf.as_slice()).unwrap(), t);
        let pca = EmbeddingTable { method: EmbedMethod::Pca, seed: None, ..t };
        let mut buf = Vec::new();
        write_embedding_csv(&mut buf, &pca).unwrap();
        assert_eq!(read_embedding_csv(buf.as_slice()).unwrap(), pca);
    }

    #[test]
    fn files_pick_format_by_extension() {
        let dir = tempfile::tempdir().unwrap();
        let recs = batch();
        for name in ["s.jsonl", "s.csv"] {
            let p = dir.path().join(name);
            write_series_file(&p, SeriesFormat::from_path(&p), &recs).unwrap();
            assert_eq!(read_series_file(&p).unwrap(), recs);
        }
        assert!(dir.path().join("s.periods.json").exists());
    }
}
