//! Per-feature bucket histograms grouped by label, as CSV and static SVG.

use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::Organization;
use crate::error::{Error, Result};
use crate::summarization::{format_value, FeatureRow, FeatureSchema};

/// Mean bucket percentages of one feature for each label group.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub feature: String,
    pub buckets: Vec<String>,
    pub groups: Vec<String>,
    /// `values[g][b]`: mean percentage of bucket `b` over rows of group `g`.
    pub values: Vec<Vec<f64>>,
}

fn group_of(row: &FeatureRow) -> &'static str {
    match row.labels.organization {
        Some(Organization::Organized) => "organized",
        Some(Organization::Organic) => "organic",
        None => "unlabeled",
    }
}

pub fn histograms(schema: &FeatureSchema, rows: &[FeatureRow]) -> Vec<Histogram> {
    let mut specs: Vec<(String, Vec<String>, String)> = schema
        .user_features
        .iter()
        .map(|f| {
            let labels = f.buckets.buckets.iter().map(|b| b.label.clone()).collect();
            (f.name.clone(), labels, format!("user.{}.bucket.", f.name))
        })
        .collect();
    specs.push((
        "registration_year".into(),
        schema.registration.labels(),
        "user.registration.year.".into(),
    ));

    let groups: Vec<&str> = ["organized", "organic", "unlabeled"]
        .into_iter()
        .filter(|g| rows.iter().any(|r| group_of(r) == *g))
        .collect();

    specs
        .into_iter()
        .map(|(feature, buckets, prefix)| {
            let values = groups
                .iter()
                .map(|g| {
                    let members: Vec<&FeatureRow> =
                        rows.iter().filter(|r| group_of(r) == *g).collect();
                    buckets
                        .iter()
                        .map(|b| {
                            let name = format!("{prefix}{b}");
                            let sum: f64 = members.iter().filter_map(|r| r.get(&name)).sum();
                            sum / members.len() as f64
                        })
                        .collect()
                })
                .collect();
            Histogram {
                feature,
                buckets,
                groups: groups.iter().map(|g| g.to_string()).collect(),
                values,
            }
        })
        .collect()
}

impl Histogram {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["bucket".to_owned()];
        header.extend(self.groups.iter().cloned());
        w.write_record(&header)?;
        for (b, label) in self.buckets.iter().enumerate() {
            let mut rec = vec![label.clone()];
            rec.extend(self.values.iter().map(|g| format_value(g[b])));
            w.write_record(&rec)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Grouped bar chart, one bar per group within each bucket.
    pub fn to_svg(&self) -> String {
        const COLORS: [&str; 3] = ["#c0392b", "#2980b9", "#7f8c8d"];
        let (bar, gap, left, top, height) = (12.0, 10.0, 50.0, 30.0, 200.0);
        let per_bucket = bar * self.groups.len().max(1) as f64 + gap;
        let width = left + per_bucket * self.buckets.len() as f64 + 20.0;
        let total_h = top + height + 70.0;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{total_h}" font-family="sans-serif" font-size="10">"#
        );
        let _ = writeln!(s, r#"<text x="{left}" y="15">{}</text>"#, self.feature);
        for pct in [0, 25, 50, 75, 100] {
            let y = top + height * (1.0 - pct as f64 / 100.0);
            let _ = writeln!(
                s,
                r##"<line x1="{left}" x2="{}" y1="{y}" y2="{y}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{pct}%</text>"##,
                width - 20.0,
                left - 4.0,
                y + 3.0
            );
        }
        for (b, label) in self.buckets.iter().enumerate() {
            let x0 = left + per_bucket * b as f64 + gap / 2.0;
            for (g, vals) in self.values.iter().enumerate() {
                let h = height * vals[b].clamp(0.0, 100.0) / 100.0;
                let _ = writeln!(
                    s,
                    r#"<rect x="{}" y="{}" width="{bar}" height="{h}" fill="{}"/>"#,
                    x0 + bar * g as f64,
                    top + height - h,
                    COLORS[g % COLORS.len()]
                );
            }
            let lx = x0 + per_bucket / 2.0 - gap / 2.0;
            let ly = top + height + 8.0;
            let _ = writeln!(
                s,
                r#"<text x="{lx}" y="{ly}" transform="rotate(60 {lx} {ly})">{label}</text>"#
            );
        }
        for (g, name) in self.groups.iter().enumerate() {
            let x = left + 90.0 * g as f64 + 120.0;
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="6" width="10" height="10" fill="{}"/><text x="{}" y="15">{name}</text>"#,
                COLORS[g % COLORS.len()],
                x + 14.0
            );
        }
        s.push_str("</svg>\n");
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join(format!("{}.csv", self.feature));
        std::fs::write(&csv_path, self.to_csv()?).map_err(|e| Error::io(&csv_path, e))?;
        let svg_path = dir.join(format!("{}.svg", self.feature));
        std::fs::write(&svg_path, self.to_svg()).map_err(|e| Error::io(&svg_path, e))
    }
}
