use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

use samplets::h2::{assemble_compressed_kernel, dense_compressed_oracle, H2Params, ORACLE_CAP};
use samplets::io::{self, MatrixSidecar};
use samplets::sparse::{sample_grf, CholeskyFactor, OrderingMethod};
use samplets::transform::{
    detect_singularities, forward_transform, inverse_transform, reconstruction_error,
    threshold_coefficients, CoefficientVector, ReconstructionReport,
};
use samplets::{Error, PointCloud, SampletBasis};

use crate::args::{self, BasisArgs, H2Args};
use crate::Command;

const SCHEMA: u32 = 1;

/// Writes to `path`, or to stdout when it is `None`.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn json_line<T: Serialize>(w: &mut dyn Write, v: &T) -> Result<()> {
    serde_json::to_writer(&mut *w, v)?;
    writeln!(w)?;
    Ok(())
}

fn load_data(path: &Path, n: usize) -> Result<Vec<f64>> {
    let v = io::read_vector(path)?;
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.len(),
        })
        .with_context(|| format!("{} does not match the point count", path.display()));
    }
    Ok(v)
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Transform {
            points,
            basis,
            data,
            output,
            inverse,
            threshold,
            threshold_rel,
            no_protect_scaling,
            report,
        } => {
            let basis = basis.build(points.load()?)?;
            let values = load_data(&data, basis.len())?;
            let mut w = sink(report.as_deref())?;
            if inverse {
                let f = inverse_transform(&basis, &CoefficientVector::samplet(values))?;
                io::write_vector(&output, &f.values)?;
                let report = ReconstructionReport {
                    threshold: 0.0,
                    kept: basis.len(),
                    ratio: 0.0,
                    l2_error: 0.0,
                    linf_error: 0.0,
                };
                return json_line(&mut *w, &report);
            }
            let f = CoefficientVector::point(values);
            let fs = forward_transform(&basis, &f)?;
            let tau = args::threshold(threshold, threshold_rel, fs.max_abs())?;
            let (kept, t) = threshold_coefficients(&fs, tau, !no_protect_scaling, basis.root_scaling_count())?;
            io::write_vector(&output, &kept.values)?;
            let rec = inverse_transform(&basis, &kept)?;
            let (mut l2, mut linf) = (0.0f64, 0.0f64);
            for (a, b) in f.values.iter().zip(&rec.values) {
                l2 += (a - b) * (a - b);
                linf = linf.max((a - b).abs());
            }
            json_line(
                &mut *w,
                &ReconstructionReport {
                    threshold: tau,
                    kept: t.kept,
                    ratio: t.compression_ratio,
                    l2_error: l2.sqrt(),
                    linf_error: linf,
                },
            )
        }
        Command::Compress {
            points,
            basis,
            data,
            exponents,
            report,
        } => {
            let basis = basis.build(points.load()?)?;
            let f = CoefficientVector::point(load_data(&data, basis.len())?);
            let max = forward_transform(&basis, &f)?.max_abs();
            let mut w = sink(report.as_deref())?;
            for i in args::parse_list::<i32>(&exponents)? {
                json_line(&mut *w, &reconstruction_error(&basis, &f, 10f64.powi(-i) * max)?)?;
            }
            Ok(())
        }
        Command::Detect {
            points,
            basis,
            data,
            threshold,
            threshold_rel,
            leaves_only,
            report,
        } => {
            let basis = basis.build(points.load()?)?;
            let f = CoefficientVector::point(load_data(&data, basis.len())?);
            let fs = forward_transform(&basis, &f)?;
            let tau = args::threshold(threshold, threshold_rel, fs.max_abs())?;
            let mut w = sink(report.as_deref())?;
            for c in detect_singularities(&basis, &fs, tau)? {
                if !leaves_only || c.is_leaf {
                    json_line(&mut *w, &c)?;
                }
            }
            Ok(())
        }
        Command::KernelCompress {
            points,
            basis,
            kernel,
            h2,
            rho,
            dense_oracle,
            output,
            metrics,
        } => kernel_compress(points.load()?, &basis, &kernel, &h2, rho, dense_oracle, &output, metrics),
        Command::Grf {
            points,
            basis,
            kernel,
            h2,
            rho,
            ordering,
            samples,
            sample_seed,
            output_dir,
            binary,
            factor,
        } => {
            let cloud = points.load()?;
            let cfg = kernel.load(cloud.dim())?;
            let params = h2.params()?;
            let basis = basis.build(cloud)?;
            let start = Instant::now();
            let k = assemble_compressed_kernel(&basis, &cfg, &params)?;
            let assembly_seconds = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let f = factorize(&basis, &k.matrix, rho, ordering.into())?;
            let factor_seconds = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let fields = sample_grf(&f, &basis, sample_seed, samples)?;
            let sample_seconds = start.elapsed().as_secs_f64();

            std::fs::create_dir_all(&output_dir)
                .with_context(|| format!("cannot create {}", output_dir.display()))?;
            let ext = if binary { "bin" } else { "csv" };
            for (i, field) in fields.iter().enumerate() {
                io::write_vector(&output_dir.join(format!("field_{i:04}.{ext}")), field)?;
            }
            if let Some(path) = factor {
                let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
                io::write_factor(BufWriter::new(file), &f)?;
            }
            let m = GrfMetrics {
                schema: SCHEMA,
                n: basis.len(),
                d: basis.tree().dim(),
                samples,
                seed: sample_seed,
                rho,
                eta: finite(params.eta),
                p: params.degree,
                q: basis.spec().q,
                epsilon: params.epsilon,
                anz_k: k.anz(),
                anz_l: f.anz(),
                nnz_l: f.nnz(),
                assembly_seconds,
                factor_seconds,
                sample_seconds,
            };
            let mut w = sink(Some(&output_dir.join("metrics.json")))?;
            serde_json::to_writer_pretty(&mut w, &m)?;
            writeln!(w)?;
            Ok(())
        }
        Command::Bench {
            min_exp,
            max_exp,
            dims,
            seed,
            basis,
            h2,
            rho,
            ordering,
            output,
        } => bench(min_exp, max_exp, &args::parse_list::<usize>(&dims)?, seed, &basis, &h2, rho, ordering.into(), output),
        Command::Info { points, basis } => {
            let basis = basis.build(points.load()?)?;
            let tree = basis.tree();
            let spec = basis.spec();
            let info = Info {
                schema: SCHEMA,
                version: env!("CARGO_PKG_VERSION"),
                n: basis.len(),
                d: tree.dim(),
                clusters: tree.clusters().len(),
                leaves: tree.leaves().count(),
                depth: tree.depth(),
                leaf_size: tree.leaf_size(),
                q: spec.q,
                q_leaf: spec.q_leaf,
                m_q: spec.m_q,
                m_q_leaf: spec.m_qhat,
                root_scaling: basis.root_scaling_count(),
                bbox_lo: tree.root().bbox.lo.clone(),
                bbox_hi: tree.root().bbox.hi.clone(),
            };
            let mut w = sink(None)?;
            serde_json::to_writer_pretty(&mut w, &info)?;
            writeln!(w)?;
            Ok(())
        }
    }
}

/// JSON has no infinity; an infinite cut-off is written as `null`.
fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn factorize(
    basis: &SampletBasis,
    k: &samplets::sparse::SparseSym,
    rho: f64,
    method: OrderingMethod,
) -> Result<CholeskyFactor> {
    let boxes = matches!(method, OrderingMethod::NestedDissection).then(|| basis.support_boxes());
    Ok(CholeskyFactor::ridged(k, rho, method, boxes.as_deref())?)
}

#[allow(clippy::too_many_arguments)]
fn kernel_compress(
    cloud: PointCloud,
    basis: &BasisArgs,
    kernel: &args::KernelArgs,
    h2: &H2Args,
    rho: Option<f64>,
    dense_oracle: bool,
    output: &Path,
    metrics: Option<PathBuf>,
) -> Result<()> {
    if dense_oracle && cloud.len() > ORACLE_CAP {
        return Err(Error::ResourceLimit {
            what: "dense oracle point count",
            requested: cloud.len(),
            cap: ORACLE_CAP,
        }
        .into());
    }
    let cfg = kernel.load(cloud.dim())?;
    let params: H2Params = h2.params()?;
    let basis = basis.build(cloud)?;
    let k = assemble_compressed_kernel(&basis, &cfg, &params)?;
    let relative_frobenius_error = if dense_oracle {
        let oracle = dense_compressed_oracle(&cfg, &basis)?;
        Some((k.matrix.to_dense() - &oracle).norm() / oracle.norm())
    } else {
        None
    };
    let matrix = match rho {
        Some(r) => k.matrix.add_ridge(r)?,
        None => k.matrix.clone(),
    };
    io::write_matrix_market_file(output, &matrix)?;
    let sidecar = MatrixSidecar {
        schema: SCHEMA,
        n: basis.len(),
        d: basis.tree().dim(),
        eta: finite(params.eta),
        p: params.degree,
        q: basis.spec().q,
        epsilon: params.epsilon,
        anz: matrix.anz(),
        assembly_seconds: k.stats.assembly_seconds,
        peak_block_bytes: k.stats.peak_block_bytes,
        rho,
        relative_frobenius_error,
    };
    let path = metrics.unwrap_or_else(|| {
        let mut p = output.as_os_str().to_owned();
        p.push(".json");
        PathBuf::from(p)
    });
    let mut w = sink(Some(&path))?;
    serde_json::to_writer_pretty(&mut w, &sidecar)?;
    writeln!(w)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bench(
    min_exp: u32,
    max_exp: u32,
    dims: &[usize],
    seed: u64,
    basis: &BasisArgs,
    h2: &H2Args,
    rho: f64,
    method: OrderingMethod,
    output: Option<PathBuf>,
) -> Result<()> {
    let params = h2.params()?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(sink(output.as_deref())?);
    w.write_record(["N", "d", "assembly_time", "anz_K", "chol_time", "anz_L"])?;
    for &d in dims {
        for k in min_exp..=max_exp {
            let n = 1usize << k;
            let cloud = PointCloud::uniform_cube(n, d, seed)?;
            let cfg = samplets::KernelConfig::scaled_exponential(10.0 / (d as f64).sqrt())?;
            let b = basis.build(cloud)?;
            let km = assemble_compressed_kernel(&b, &cfg, &params)?;
            let start = Instant::now();
            let f = factorize(&b, &km.matrix, rho, method)?;
            let chol = start.elapsed().as_secs_f64();
            w.serialize(BenchRow {
                n,
                d,
                assembly_time: km.stats.assembly_seconds,
                anz_k: km.anz(),
                chol_time: chol,
                anz_l: f.anz(),
            })?;
            w.flush()?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BenchRow {
    #[serde(rename = "N")]
    n: usize,
    d: usize,
    assembly_time: f64,
    #[serde(rename = "anz_K")]
    anz_k: f64,
    chol_time: f64,
    #[serde(rename = "anz_L")]
    anz_l: f64,
}

#[derive(Serialize)]
struct GrfMetrics {
    schema: u32,
    #[serde(rename = "N")]
    n: usize,
    d: usize,
    samples: usize,
    seed: u64,
    rho: f64,
    eta: Option<f64>,
    p: usize,
    q: usize,
    epsilon: f64,
    anz_k: f64,
    anz_l: f64,
    nnz_l: usize,
    assembly_seconds: f64,
    factor_seconds: f64,
    sample_seconds: f64,
}

#[derive(Serialize)]
struct Info {
    schema: u32,
    version: &'static str,
    #[serde(rename = "N")]
    n: usize,
    d: usize,
    clusters: usize,
    leaves: usize,
    depth: usize,
    leaf_size: usize,
    q: usize,
    q_leaf: usize,
    m_q: usize,
    m_q_leaf: usize,
    root_scaling: usize,
    bbox_lo: Vec<f64>,
    bbox_hi: Vec<f64>,
}
