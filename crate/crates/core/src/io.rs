//! Output bundle and the CSV, JSON and GeoJSON encodings of stage results.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evolutionary::Chromosome;
use crate::geometry::PointSet;
use crate::metrics::{ArchiveEntry, ParetoArchive};

/// Header of archive CSVs.
pub const ARCHIVE_HEADER: [&str; 6] = ["solution", "F1", "F2", "F3", "feasible", "sites"];

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Directory of stage outputs. Every file written through it is hashed for
/// the manifest.
#[derive(Debug)]
pub struct Bundle {
    dir: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl Bundle {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Bundle { dir: dir.to_path_buf(), hashes: BTreeMap::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn hashes(&self) -> &BTreeMap<String, String> {
        &self.hashes
    }

    pub fn put_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.path(name), bytes)?;
        self.hashes.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn put_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.put_bytes(name, text.as_bytes())
    }

    pub fn put_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        self.put_bytes(name, &csv_bytes(header, rows)?)
    }
}

pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Header and rows of a CSV file.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

pub fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn site_list(selected: &[usize], sites: &PointSet) -> String {
    selected.iter().map(|&j| sites[j].id.as_str()).collect::<Vec<_>>().join(";")
}

/// Archive rows in lexicographic objective order; solution ids are `s0`,
/// `s1`, ... in that order.
pub fn archive_rows(archive: &ParetoArchive, feasible: bool, sites: &PointSet) -> Vec<Vec<String>> {
    archive
        .sorted_entries()
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let mut row = vec![format!("s{k}")];
            row.extend(e.objectives.iter().map(f64::to_string));
            row.push(feasible.to_string());
            row.push(site_list(&e.chromosome.selected(), sites));
            row
        })
        .collect()
}

/// Site indices of a `;`-separated id list.
pub fn parse_sites(list: &str, sites: &PointSet) -> Result<Vec<usize>> {
    let index: HashMap<&str, usize> = sites.iter().enumerate().map(|(k, p)| (p.id.as_str(), k)).collect();
    let mut out: Vec<usize> = list
        .split(';')
        .filter(|s| !s.is_empty())
        .map(|s| index.get(s).copied().ok_or_else(|| Error::Validation(format!("unknown site id `{s}`"))))
        .collect::<Result<_>>()?;
    out.sort_unstable();
    Ok(out)
}

/// Reads an archive CSV back, resolving site ids against `sites`.
pub fn read_archive(path: &Path, sites: &PointSet) -> Result<(ParetoArchive, bool)> {
    let (header, rows) = read_csv(path)?;
    if header != ARCHIVE_HEADER {
        return Err(Error::Validation(format!("{}: unexpected header {header:?}", path.display())));
    }
    let mut feasible = true;
    let mut entries = Vec::with_capacity(rows.len());
    for r in rows {
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Validation(format!("bad number `{s}`")));
        let objectives = vec![num(&r[1])?, num(&r[2])?, num(&r[3])?];
        feasible &= r[4] == "true";
        let selected = parse_sites(&r[5], sites)?;
        entries.push(ArchiveEntry { chromosome: Chromosome::from_selected(sites.len(), &selected), objectives });
    }
    Ok((ParetoArchive::from_entries(0, entries), feasible))
}

/// Point features with a `role` and service `radius_km`. Coordinates are
/// planar km written as-is.
pub fn geojson(layers: &[(&str, &PointSet, f64)], properties: Value) -> Value {
    let features: Vec<Value> = layers
        .iter()
        .flat_map(|(role, pts, radius)| {
            pts.iter().map(move |p| {
                json!({
                    "type": "Feature",
                    "geometry": { "type": "Point", "coordinates": [p.x, p.y] },
                    "properties": { "id": p.id, "role": role, "radius_km": radius },
                })
            })
        })
        .collect();
    json!({
        "type": "FeatureCollection",
        "crs_note": "planar kilometres, not WGS84",
        "properties": properties,
        "features": features,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    #[test]
    fn archive_csv_round_trip() {
        let sites = PointSet(vec![Point::new("a", 0.0, 0.0), Point::new("b", 1.0, 0.0), Point::new("c", 2.0, 0.0)]);
        let mut a = ParetoArchive::new(0);
        a.insert(Chromosome::from_selected(3, &[0, 2]), vec![2.0, 0.1, -2.0]);
        a.insert(Chromosome::from_selected(3, &[1]), vec![1.0, 0.30000000000000004, 0.0]);
        let dir = tempfile::tempdir().unwrap();
        let mut b = Bundle::create(dir.path()).unwrap();
        b.put_csv("arch.csv", &ARCHIVE_HEADER, &archive_rows(&a, true, &sites)).unwrap();
        let (back, feasible) = read_archive(&b.path("arch.csv"), &sites).unwrap();
        assert!(feasible);
        assert_eq!(back.sorted_entries(), a.sorted_entries());
        let text = std::fs::read_to_string(b.path("arch.csv")).unwrap();
        assert!(text.starts_with("solution,F1,F2,F3,feasible,sites\ns0,1,0.30000000000000004,0,true,b\n"));
        assert_eq!(b.hashes()["arch.csv"], sha256_hex(text.as_bytes()));
    }

    #[test]
    fn unknown_site_is_rejected() {
        let sites = PointSet(vec![Point::new("a", 0.0, 0.0)]);
        assert!(parse_sites("a;zz", &sites).is_err());
        assert_eq!(parse_sites("", &sites).unwrap(), Vec::<usize>::new());
    }
}
