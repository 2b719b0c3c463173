//! Seeded synthetic datasets with ground truth.

use anyhow::{bail, Result};
use dlcc::DataMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Three isotropic Gaussian blobs.
    Blobs,
    /// Two interleaved half circles.
    Moons,
    /// Two interleaved spiral arms around a central core.
    Spirals,
    /// One wide blob and two small tight ones.
    #[value(name = "mixed", alias = "mixed_sizes")]
    Mixed,
}

impl FromStr for GeneratorKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blobs" => Ok(Self::Blobs),
            "moons" => Ok(Self::Moons),
            "spirals" => Ok(Self::Spirals),
            "mixed" | "mixed_sizes" => Ok(Self::Mixed),
            other => bail!("unknown generator kind `{other}`"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    /// Noise scale; `None` uses the kind's default.
    pub noise: Option<f64>,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(kind: GeneratorKind, n: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            noise: None,
            seed,
        }
    }
}

/// Splits `n` into parts proportional to `weights`, remainder to the first.
fn split(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let mut sizes: Vec<usize> = weights
        .iter()
        .map(|w| (n as f64 * w / total).floor() as usize)
        .collect();
    let used: usize = sizes.iter().sum();
    sizes[0] += n - used;
    sizes
}

fn gaussian(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    if sd == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sd).unwrap().sample(rng)
}

/// Draws the dataset described by `spec`. Labels are `0..k`.
pub fn generate(spec: &GenSpec) -> Result<(DataMatrix, Vec<usize>)> {
    if spec.n < 10 {
        bail!("generators need n >= 10, got {}", spec.n);
    }
    if let Some(s) = spec.noise {
        if !(s >= 0.0 && s.is_finite()) {
            bail!("noise must be a finite nonnegative number, got {s}");
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    match spec.kind {
        GeneratorKind::Blobs => {
            let sd = spec.noise.unwrap_or(0.8);
            let centers = [[0.0, 0.0], [6.0, 0.0], [3.0, 5.0]];
            for (k, &m) in split(spec.n, &[1.0, 1.0, 1.0]).iter().enumerate() {
                for _ in 0..m {
                    pts.push([
                        centers[k][0] + gaussian(&mut rng, sd),
                        centers[k][1] + gaussian(&mut rng, sd),
                    ]);
                    labels.push(k);
                }
            }
        }
        GeneratorKind::Moons => {
            let sd = spec.noise.unwrap_or(0.06);
            for (k, &m) in split(spec.n, &[1.0, 1.0]).iter().enumerate() {
                for _ in 0..m {
                    let t = rng.random_range(0.0..PI);
                    let (x, y) = if k == 0 {
                        (t.cos(), t.sin())
                    } else {
                        (1.0 - t.cos(), 0.5 - t.sin())
                    };
                    pts.push([x + gaussian(&mut rng, sd), y + gaussian(&mut rng, sd)]);
                    labels.push(k);
                }
            }
        }
        GeneratorKind::Spirals => {
            // arms r = 4 + theta over three quarters of a turn, offset by half a turn
            let sd = spec.noise.unwrap_or(0.25);
            let sizes = split(spec.n, &[300.0, 300.0, 180.0]);
            for (k, &m) in sizes.iter().enumerate() {
                for _ in 0..m {
                    if k == 2 {
                        pts.push([gaussian(&mut rng, 0.6), gaussian(&mut rng, 0.6)]);
                    } else {
                        // uniform in arc length
                        let u: f64 = rng.random();
                        let (a, b) = (4.0f64, 1.5 * PI);
                        let theta = ((a * a + u * ((a + b).powi(2) - a * a)).sqrt()) - a;
                        let r = a + theta;
                        let phi = theta + k as f64 * PI;
                        pts.push([
                            r * phi.cos() + gaussian(&mut rng, sd),
                            r * phi.sin() + gaussian(&mut rng, sd),
                        ]);
                    }
                    labels.push(k);
                }
            }
        }
        GeneratorKind::Mixed => {
            let sd = spec.noise.unwrap_or(1.0);
            let parts = [([0.0, 0.0], 1.5), ([8.0, 2.5], 0.4), ([8.0, -2.5], 0.4)];
            for (k, &m) in split(spec.n, &[4.0, 1.0, 1.0]).iter().enumerate() {
                let (c, spread) = parts[k];
                for _ in 0..m {
                    pts.push([
                        c[0] + gaussian(&mut rng, spread * sd),
                        c[1] + gaussian(&mut rng, spread * sd),
                    ]);
                    labels.push(k);
                }
            }
        }
    }
    Ok((DataMatrix::from_rows(&pts)?, labels))
}

/// Writes `x` and `labels` as CSV with header `x1,..,xd,label`.
pub fn write_dataset(
    path: impl AsRef<std::path::Path>,
    x: &DataMatrix,
    labels: &[usize],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for (r, l) in x.rows().zip(labels) {
        let mut rec: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
        rec.push(l.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
