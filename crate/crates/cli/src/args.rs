//! Shared option groups and their conversion into library types.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use samplets::h2::H2Params;
use samplets::sparse::OrderingMethod;
use samplets::{ClusterTree, KernelConfig, KernelFamily, MomentSpec, PointCloud, SampletBasis};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Generator {
    /// Independent uniform points in [-1, 1]^d.
    UniformCube,
    /// Equispaced tensor grid on [-1, 1]^d; N must be a perfect d-th power.
    Grid,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    /// Point file: CSV with one point per row, or the binary point format.
    #[arg(long, conflicts_with = "gen")]
    pub points: Option<PathBuf>,
    /// Generate points instead of reading them.
    #[arg(long, requires_all = ["n", "seed"])]
    pub gen: Option<Generator>,
    /// Number of generated points.
    #[arg(long)]
    pub n: Option<usize>,
    /// Dimension of generated points.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Seed of the point generator.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl PointArgs {
    pub fn load(&self) -> Result<PointCloud> {
        match (&self.points, self.gen) {
            (Some(path), _) => Ok(samplets::io::read_points(path)?),
            (None, Some(g)) => {
                let (n, seed) = (self.n.unwrap_or(0), self.seed.unwrap_or(0));
                Ok(match g {
                    Generator::UniformCube => PointCloud::uniform_cube(n, self.dim, seed)?,
                    Generator::Grid => PointCloud::grid(n, self.dim)?,
                })
            }
            (None, None) => Err(samplets::Error::InvalidInput(
                "either --points or --gen is required".into(),
            )
            .into()),
        }
    }
}

#[derive(Debug, Args)]
pub struct BasisArgs {
    /// Samplets have q + 1 vanishing moments.
    #[arg(long, default_value_t = 2)]
    pub q: usize,
    /// Polynomial degree at the leaves; defaults to the smallest degree
    /// with at least twice as many moments as degree q.
    #[arg(long)]
    pub q_leaf: Option<usize>,
    /// Maximal number of points per leaf; defaults to twice the number of
    /// leaf moments.
    #[arg(long)]
    pub leaf_size: Option<usize>,
}

impl BasisArgs {
    pub fn build(&self, cloud: PointCloud) -> Result<SampletBasis> {
        let d = cloud.dim();
        let spec = match self.q_leaf {
            Some(ql) => MomentSpec::with_leaf_degree(self.q, ql, d)?,
            None => MomentSpec::new(self.q, d),
        };
        let leaf = self.leaf_size.unwrap_or_else(|| spec.default_leaf_size());
        let tree = ClusterTree::build(cloud, leaf)?;
        Ok(SampletBasis::new(tree, spec))
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Family {
    Matern12,
    Matern32,
    Matern52,
    SquaredExponential,
    ScaledExponential,
}

impl From<Family> for KernelFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::Matern12 => KernelFamily::Matern12,
            Family::Matern32 => KernelFamily::Matern32,
            Family::Matern52 => KernelFamily::Matern52,
            Family::SquaredExponential => KernelFamily::SquaredExponential,
            Family::ScaledExponential => KernelFamily::ScaledExponential,
        }
    }
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// Kernel configuration file (JSON). Without it and without --family the
    /// kernel is exp(-10 r / sqrt(d)).
    #[arg(long, conflicts_with = "family")]
    pub kernel: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<Family>,
    #[arg(long, default_value_t = 1.0)]
    pub length_scale: f64,
    /// Factor c of exp(-c r).
    #[arg(long)]
    pub distance_scale: Option<f64>,
}

impl KernelArgs {
    pub fn load(&self, dim: usize) -> Result<KernelConfig> {
        if let Some(path) = &self.kernel {
            return Ok(samplets::io::read_kernel_config(path)?);
        }
        let cfg = match self.family {
            None => KernelConfig::scaled_exponential(self.distance_scale.unwrap_or(10.0 / (dim as f64).sqrt()))?,
            Some(f) => {
                let cfg = KernelConfig {
                    family: f.into(),
                    length_scale: self.length_scale,
                    distance_scale: self.distance_scale.unwrap_or(1.0),
                };
                cfg.validate()?;
                cfg
            }
        };
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct H2Args {
    /// Cut-off parameter; "inf" computes every block exactly.
    #[arg(long, default_value_t = 1.25)]
    pub eta: f64,
    /// Interpolation degree per axis.
    #[arg(long, default_value_t = 3)]
    pub p: usize,
    /// Off-diagonal entries below this magnitude are dropped.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
}

impl H2Args {
    pub fn params(&self) -> Result<H2Params> {
        let p = H2Params {
            eta: self.eta,
            degree: self.p,
            epsilon: self.epsilon,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Ordering {
    Natural,
    MinimumDegree,
    NestedDissection,
}

impl From<Ordering> for OrderingMethod {
    fn from(o: Ordering) -> Self {
        match o {
            Ordering::Natural => OrderingMethod::Natural,
            Ordering::MinimumDegree => OrderingMethod::MinimumDegree,
            Ordering::NestedDissection => OrderingMethod::NestedDissection,
        }
    }
}

/// Threshold from either an absolute value or the exponent `i` of
/// `10^-i · max_abs`.
pub fn threshold(absolute: Option<f64>, relative: Option<i32>, max_abs: f64) -> Result<f64> {
    let tau = match (absolute, relative) {
        (Some(t), None) => t,
        (None, Some(i)) => 10f64.powi(-i) * max_abs,
        (None, None) => 0.0,
        (Some(_), Some(_)) => bail!(samplets::Error::InvalidInput(
            "--threshold and --threshold-rel are exclusive".into()
        )),
    };
    if !(tau >= 0.0 && tau.is_finite()) {
        bail!(samplets::Error::InvalidInput(format!("threshold must be finite and >= 0, got {tau}")));
    }
    Ok(tau)
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().with_context(|| format!("invalid list entry {t:?}")))
        .collect()
}
