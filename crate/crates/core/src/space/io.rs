use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MetricKind, Point, PointCloud};
use crate::error::{invalid, Result};

/// On-disk JSON form of a [`PointCloud`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CloudFile {
    pub metric_kind: MetricKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub diam: f64,
    /// Row-major distance matrix, present only for `explicit_matrix`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<f64>>,
}

impl From<&PointCloud> for CloudFile {
    fn from(c: &PointCloud) -> Self {
        let n = c.len();
        let distances = (c.metric_kind() == MetricKind::ExplicitMatrix).then(|| {
            let mut d = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    d.push(c.dist(i, j));
                }
            }
            d
        });
        CloudFile {
            metric_kind: c.metric_kind(),
            gamma: (c.metric_kind() == MetricKind::Snowflake).then(|| c.gamma()),
            points: (0..n).map(|i| c.point(i)).collect(),
            weights: c.weights().to_vec(),
            diam: c.diam(),
            distances,
        }
    }
}

impl CloudFile {
    pub fn into_cloud(self) -> Result<PointCloud> {
        let cloud = match self.metric_kind {
            MetricKind::ExplicitMatrix => {
                let Some(dist) = self.distances else {
                    return invalid("explicit_matrix cloud without a distances array");
                };
                let labels = self
                    .points
                    .into_iter()
                    .enumerate()
                    .map(|(i, p)| match p {
                        Point::Symbol(s) => s,
                        Point::Coords(_) => i.to_string(),
                    })
                    .collect();
                PointCloud::from_matrix(labels, dist, self.weights)?
            }
            kind => {
                let gamma = match kind {
                    MetricKind::Snowflake => match self.gamma {
                        Some(g) => g,
                        None => return invalid("snowflake cloud without gamma"),
                    },
                    _ => 1.0,
                };
                let mut dim = None;
                let mut coords = Vec::new();
                for p in self.points {
                    let Point::Coords(c) = p else {
                        return invalid("coordinate cloud contains a symbolic point");
                    };
                    if *dim.get_or_insert(c.len()) != c.len() {
                        return invalid("points have inconsistent dimensions");
                    }
                    coords.extend(c);
                }
                PointCloud::from_coords(dim.unwrap_or(1), coords, gamma, self.weights)?
            }
        };
        if (cloud.diam() - self.diam).abs() > 1e-9 * self.diam.max(1e-300) {
            return invalid(format!(
                "declared diameter {} disagrees with the sample ({})",
                self.diam,
                cloud.diam()
            ));
        }
        Ok(cloud)
    }
}

impl PointCloud {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&CloudFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<CloudFile>(s)?.into_cloud()
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// CSV rows `index, coordinates..., weight` (label instead of coordinates
    /// for matrix clouds).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["index".to_string()];
        match self.dim() {
            Some(d) => header.extend((0..d).map(|k| format!("x{k}"))),
            None => header.push("label".into()),
        }
        header.push("weight".into());
        out.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![i.to_string()];
            match self.point(i) {
                Point::Coords(c) => row.extend(c.iter().map(|x| x.to_string())),
                Point::Symbol(s) => row.push(s),
            }
            row.push(self.weight(i).to_string());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{gen_sierpinski_carpet, gen_snowflake_interval};
    use proptest::prelude::*;

    #[test]
    fn csv_has_one_row_per_point() {
        let c = gen_sierpinski_carpet(1).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.starts_with("index,x0,x1,weight"));
    }

    #[test]
    fn matrix_cloud_json_carries_distances() {
        let c = PointCloud::from_matrix(
            vec!["p".into(), "q".into(), "r".into()],
            vec![0.0, 0.3, 0.5, 0.3, 0.0, 0.4, 0.5, 0.4, 0.0],
            vec![1.0, 2.0, 1.0],
        )
        .unwrap();
        let json = c.to_json().unwrap();
        assert!(json.contains("distances"));
        let back = PointCloud::from_json(&json).unwrap();
        assert_eq!(back.dist(0, 2), 0.5);
        assert_eq!(back.point(1), Point::Symbol("q".into()));
    }

    #[test]
    fn snowflake_without_gamma_is_rejected() {
        let mut f = CloudFile::from(&gen_snowflake_interval(2, 0.5).unwrap());
        f.gamma = None;
        assert!(f.into_cloud().is_err());
    }

    proptest! {
        #[test]
        fn json_round_trip_preserves_distances(k in 1u32..6, g in 0.2f64..1.0) {
            let c = gen_snowflake_interval(k, g).unwrap();
            let back = PointCloud::from_json(&c.to_json().unwrap()).unwrap();
            prop_assert_eq!(back.len(), c.len());
            for i in 0..c.len() {
                for j in 0..c.len() {
                    prop_assert!((back.dist(i, j) - c.dist(i, j)).abs() < 1e-12);
                }
            }
        }
    }
}
