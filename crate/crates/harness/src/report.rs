//! Per-(image, method) scores and their CSV form.

use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// Image name used for the per-method mean rows.
pub const MEAN_ROW: &str = "mean";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub image: String,
    pub method: String,
    pub psnr_db: f64,
    pub ssim: f64,
    pub wall_ms: f64,
}

#[derive(Serialize)]
struct SigmaRow<'a> {
    sigma: f64,
    image: &'a str,
    method: &'a str,
    psnr_db: f64,
    ssim: f64,
    wall_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchmarkReport {
    pub rows: Vec<Row>,
}

impl BenchmarkReport {
    /// Per-image rows, excluding the aggregates.
    pub fn image_rows(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.image != MEAN_ROW)
    }

    pub fn get(&self, image: &str, method: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.image == image && r.method == method)
    }

    pub fn images(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in self.image_rows() {
            if !out.contains(&r.image) {
                out.push(r.image.clone());
            }
        }
        out
    }

    pub fn methods(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in self.image_rows() {
            if !out.contains(&r.method) {
                out.push(r.method.clone());
            }
        }
        out
    }

    /// Drops existing aggregates and appends one mean row per method, in
    /// first-appearance order.
    pub fn recompute_means(&mut self) {
        self.rows.retain(|r| r.image != MEAN_ROW);
        let means: Vec<Row> = self
            .methods()
            .into_iter()
            .map(|method| {
                let rows: Vec<&Row> = self.image_rows().filter(|r| r.method == method).collect();
                let n = rows.len() as f64;
                let mean = |f: fn(&Row) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
                Row {
                    image: MEAN_ROW.into(),
                    psnr_db: mean(|r| r.psnr_db),
                    ssim: mean(|r| r.ssim),
                    wall_ms: mean(|r| r.wall_ms),
                    method,
                }
            })
            .collect();
        self.rows.extend(means);
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Writes several reports into one CSV with a leading `sigma` column.
pub fn write_sigma_csv(reports: &[(f64, BenchmarkReport)], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (sigma, report) in reports {
        for row in &report.rows {
            w.serialize(SigmaRow {
                sigma: *sigma,
                image: &row.image,
                method: &row.method,
                psnr_db: row.psnr_db,
                ssim: row.ssim,
                wall_ms: row.wall_ms,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(image: &str, method: &str, psnr_db: f64) -> Row {
        Row { image: image.into(), method: method.into(), psnr_db, ssim: psnr_db / 100.0, wall_ms: 0.0 }
    }

    #[test]
    fn means_per_method() {
        let mut r = BenchmarkReport {
            rows: vec![row("a", "x", 30.0), row("a", "y", 20.0), row("b", "x", 32.0), row("b", "y", 21.0)],
        };
        r.recompute_means();
        assert_eq!(r.rows.len(), 6);
        assert_eq!(r.get(MEAN_ROW, "x").unwrap().psnr_db, 31.0);
        assert_eq!(r.get(MEAN_ROW, "y").unwrap().psnr_db, 20.5);
        r.recompute_means();
        assert_eq!(r.rows.len(), 6);
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = BenchmarkReport { rows: vec![row("a", "x", f64::INFINITY)] };
        r.recompute_means();
        let path = dir.path().join("r.csv");
        r.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "image,method,psnr_db,ssim,wall_ms\na,x,inf,inf,0.0\nmean,x,inf,inf,0.0\n");
        write_sigma_csv(&[(4.0, r)], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("sigma,image,method,psnr_db,ssim,wall_ms\n4.0,a,x,"));
    }
}
