use serde::{Deserialize, Serialize};

use super::{PointCloud, TARGET_DIAM};
use crate::error::{invalid, Error, Result};

/// Upper bound on generated sample sizes.
pub const MAX_POINTS: usize = 1 << 22;

fn check_size(n: f64) -> Result<()> {
    if n > MAX_POINTS as f64 {
        return Err(Error::Resource(format!(
            "{n} points exceed the budget of {MAX_POINTS}"
        )));
    }
    Ok(())
}

/// `2^k + 1` equally spaced points on a segment of length 0.9, uniform mass.
pub fn gen_interval(k: u32) -> Result<PointCloud> {
    gen_snowflake_interval(k, 1.0)
}

/// Equally spaced interval samples with the snowflaked metric `|x - y|^gamma`.
///
/// Coordinates are spread over `[0, 0.9^(1/gamma)]`, so the snowflaked
/// diameter is 0.9 and `gamma = 1` reproduces [`gen_interval`].
pub fn gen_snowflake_interval(k: u32, gamma: f64) -> Result<PointCloud> {
    if k < 1 {
        return invalid("interval level must be >= 1");
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return invalid(format!("snowflake exponent gamma = {gamma} must lie in (0, 1]"));
    }
    check_size(2f64.powi(k as i32) + 1.0)?;
    let m = 1usize << k;
    let n = m + 1;
    let span = TARGET_DIAM.powf(1.0 / gamma);
    let coords = (0..n).map(|i| span * i as f64 / m as f64).collect();
    PointCloud::from_coords_with_diam(1, coords, gamma, vec![1.0 / n as f64; n], TARGET_DIAM)
}

/// Left endpoints of the level-`k` middle-thirds intervals, mass `2^-k` each.
pub fn gen_cantor(k: u32) -> Result<PointCloud> {
    if k < 1 {
        return invalid("cantor level must be >= 1");
    }
    check_size(2f64.powi(k as i32))?;
    let n = 1usize << k;
    let scale = TARGET_DIAM / (1.0 - 3f64.powi(-(k as i32)));
    let coords = (0..n)
        .map(|i| {
            // binary digits of i pick the left (0) or right (2) third at each level
            let mut x = 0.0;
            let mut f = 1.0;
            for level in (0..k).rev() {
                f /= 3.0;
                if (i >> level) & 1 == 1 {
                    x += 2.0 * f;
                }
            }
            x * scale
        })
        .collect();
    PointCloud::from_coords_with_diam(1, coords, 1.0, vec![1.0 / n as f64; n], TARGET_DIAM)
}

/// Centers of the `8^k` level-`k` squares of the Sierpinski carpet.
pub fn gen_sierpinski_carpet(k: u32) -> Result<PointCloud> {
    if k < 1 {
        return invalid("carpet level must be >= 1");
    }
    if k > 5 {
        return Err(Error::Resource(format!("carpet level {k} > 5")));
    }
    let n = 8usize.pow(k);
    let cell = 3f64.powi(-(k as i32));
    let scale = TARGET_DIAM / (2f64.sqrt() * (1.0 - cell));
    const DIGITS: [(u32, u32); 8] = [(0, 0), (1, 0), (2, 0), (0, 1), (2, 1), (0, 2), (1, 2), (2, 2)];
    let mut coords = Vec::with_capacity(2 * n);
    for i in 0..n {
        let (mut x, mut y) = (0.0, 0.0);
        let mut rest = i;
        let mut f = 1.0;
        for _ in 0..k {
            f /= 3.0;
            let (a, b) = DIGITS[rest % 8];
            rest /= 8;
            x += a as f64 * f;
            y += b as f64 * f;
        }
        coords.push((x + 0.5 * cell) * scale);
        coords.push((y + 0.5 * cell) * scale);
    }
    PointCloud::from_coords_with_diam(2, coords, 1.0, vec![1.0 / n as f64; n], TARGET_DIAM)
}

/// Centroids of the `3^k` level-`k` triangles of the Sierpinski gasket.
pub fn gen_sierpinski_gasket(k: u32) -> Result<PointCloud> {
    if k < 1 {
        return invalid("gasket level must be >= 1");
    }
    if k > 9 {
        return Err(Error::Resource(format!("gasket level {k} > 9")));
    }
    let n = 3usize.pow(k);
    let corners = [(0.0, 0.0), (1.0, 0.0), (0.5, 3f64.sqrt() / 2.0)];
    let side = 2f64.powi(-(k as i32));
    // extreme centroids sit in opposite corners: distance (1 - side)
    let scale = TARGET_DIAM / (1.0 - side);
    let mut coords = Vec::with_capacity(2 * n);
    for i in 0..n {
        let (mut x, mut y) = (0.0, 0.0);
        let mut rest = i;
        let mut f = 1.0;
        for _ in 0..k {
            f *= 0.5;
            let (cx, cy) = corners[rest % 3];
            rest /= 3;
            x += cx * f;
            y += cy * f;
        }
        // centroid of the sub-triangle with lower-left corner (x, y)
        x += side * 0.5;
        y += side * 3f64.sqrt() / 6.0;
        coords.push(x * scale);
        coords.push(y * scale);
    }
    PointCloud::from_coords_with_diam(2, coords, 1.0, vec![1.0 / n as f64; n], TARGET_DIAM)
}

/// The bundled sample spaces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Interval,
    Cantor,
    Carpet,
    Gasket,
    Snowflake { gamma: f64 },
}

impl Space {
    pub fn build(&self, level: u32) -> Result<PointCloud> {
        match *self {
            Space::Interval => gen_interval(level),
            Space::Cantor => gen_cantor(level),
            Space::Carpet => gen_sierpinski_carpet(level),
            Space::Gasket => gen_sierpinski_gasket(level),
            Space::Snowflake { gamma } => gen_snowflake_interval(level, gamma),
        }
    }

    /// Similarity dimension of the limiting self-similar space.
    pub fn analytic_dimension(&self) -> f64 {
        match *self {
            Space::Interval => 1.0,
            Space::Cantor => 2f64.ln() / 3f64.ln(),
            Space::Carpet => 8f64.ln() / 3f64.ln(),
            Space::Gasket => 3f64.ln() / 2f64.ln(),
            Space::Snowflake { gamma } => 1.0 / gamma,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Space::Interval => "interval",
            Space::Cantor => "cantor",
            Space::Carpet => "carpet",
            Space::Gasket => "gasket",
            Space::Snowflake { .. } => "snowflake",
        }
    }
}
