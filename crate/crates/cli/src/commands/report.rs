//! `report`: join evaluation labels with descriptors and emit plot-ready
//! tables: a PCA scatter (pc1, pc2, label) and per-class KDE densities over
//! a shared grid with bootstrap confidence bands.

use super::write_text;
use crate::manifest::Manifest;
use crate::records::{parse_described, parse_evaluated};
use crate::{KdeOverArg, Outcome, ReportArgs};
use anyhow::{bail, Context, Result};
use qcmol::rng::derive_seed;
use qcmol::stats::{bootstrap_band, default_grid, kde_density, DensityEstimate};
use qcmol::svm::PerformanceLabel;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

pub fn run(args: &ReportArgs, argv: &[String]) -> Result<Outcome> {
    let start = Instant::now();
    if args.grid_points < 2 {
        anyhow::bail!("--grid-points must be at least 2, got {}", args.grid_points);
    }
    if args.n_boot < 2 {
        anyhow::bail!("--n-boot must be at least 2, got {}", args.n_boot);
    }
    if !(0.0 < args.level && args.level < 1.0) {
        anyhow::bail!("--level must be in (0, 1), got {}", args.level);
    }
    let described = parse_described(
        &std::fs::read_to_string(&args.described)
            .with_context(|| format!("reading {}", args.described.display()))?,
    )?;
    let evaluated = parse_evaluated(
        &std::fs::read_to_string(&args.evaluated)
            .with_context(|| format!("reading {}", args.evaluated.display()))?,
    )?;
    let labels: BTreeMap<usize, PerformanceLabel> =
        evaluated.iter().map(|r| (r.id, r.label)).collect();

    // PCA scatter for every described circuit with a label.
    let mut pca_rows = String::from("id,pc1,pc2,label\n");
    let mut joined = 0usize;
    for record in described.iter().filter(|r| r.is_ok()) {
        if let (Some(label), Some(pc1), Some(pc2)) =
            (labels.get(&record.id), record.pc1, record.pc2)
        {
            pca_rows.push_str(&format!("{},{},{},{}\n", record.id, pc1, pc2, label.as_str()));
            joined += 1;
        }
    }
    if joined == 0 {
        bail!("no circuit appears in both tables with descriptors");
    }
    let pca_path = PathBuf::from(format!("{}_pca.csv", args.out_prefix));
    write_text(&pca_path, &pca_rows)?;

    // Class samples over the chosen descriptor.
    let descriptor = |r: &crate::records::DescribeRecord| match args.kde_over {
        KdeOverArg::RMin => r.r_min,
        KdeOverArg::RMax => r.r_max,
    };
    let class_samples = |class: PerformanceLabel| -> Vec<f64> {
        described
            .iter()
            .filter(|r| r.is_ok())
            .filter(|r| labels.get(&r.id) == Some(&class))
            .filter_map(descriptor)
            .collect()
    };
    let classes = [
        (PerformanceLabel::Performant, class_samples(PerformanceLabel::Performant)),
        (
            PerformanceLabel::Underperforming,
            class_samples(PerformanceLabel::Underperforming),
        ),
    ];

    // Shared evaluation grid across both classes.
    let pooled: Vec<f64> = classes.iter().flat_map(|(_, s)| s.iter().copied()).collect();
    if pooled.len() < 2 {
        bail!("fewer than 2 labeled samples; nothing to estimate");
    }
    let mut max_bandwidth: f64 = 0.0;
    for (_, samples) in &classes {
        if samples.len() >= 2 {
            if let Ok(est) = kde_density(samples, &[0.0], None) {
                max_bandwidth = max_bandwidth.max(est.bandwidth);
            }
        }
    }
    if max_bandwidth == 0.0 {
        // Both classes degenerate individually; fall back to the pool.
        max_bandwidth = kde_density(&pooled, &[0.0], None)
            .map_err(|e| anyhow::anyhow!(e.to_string()))?
            .bandwidth;
    }
    let grid = default_grid(&pooled, max_bandwidth, args.grid_points);

    let mut kde_rows = String::from("class,x,density,lower,upper\n");
    let mut partial = false;
    let mut emitted = 0usize;
    for (class, samples) in &classes {
        let estimate: Option<DensityEstimate> = if samples.len() >= 5 {
            Some(
                bootstrap_band(samples, &grid, args.n_boot, args.level, derive_seed(args.seed, emitted as u64))
                    .map_err(|e| anyhow::anyhow!(e.to_string()))?,
            )
        } else if samples.len() >= 2 {
            eprintln!(
                "warning: class {} has only {} samples; emitting density without a band",
                class.as_str(),
                samples.len()
            );
            partial = true;
            Some(kde_density(samples, &grid, None).map_err(|e| anyhow::anyhow!(e.to_string()))?)
        } else {
            eprintln!(
                "warning: class {} has {} sample(s); skipped",
                class.as_str(),
                samples.len()
            );
            partial = true;
            None
        };
        if let Some(est) = estimate {
            for (g, x) in est.grid.iter().enumerate() {
                let lower = est.lower.as_ref().map(|l| l[g].to_string()).unwrap_or_default();
                let upper = est.upper.as_ref().map(|u| u[g].to_string()).unwrap_or_default();
                kde_rows.push_str(&format!(
                    "{},{},{},{},{}\n",
                    class.as_str(),
                    x,
                    est.density[g],
                    lower,
                    upper
                ));
            }
            emitted += 1;
        }
    }
    let kde_path = PathBuf::from(format!("{}_kde.csv", args.out_prefix));
    write_text(&kde_path, &kde_rows)?;

    let mut manifest = Manifest::new("report", argv);
    manifest.set("evaluated", args.evaluated.display());
    manifest.set("described", args.described.display());
    manifest.set("kde_over", args.kde_over.as_str());
    manifest.set("grid_points", args.grid_points);
    manifest.set("n_boot", args.n_boot);
    manifest.set("level", args.level);
    manifest.set("seed", args.seed);
    manifest.set("classes_emitted", emitted);
    manifest.set("pca_out", pca_path.display());
    manifest.set("kde_out", kde_path.display());
    manifest.wall_clock_ms = start.elapsed().as_millis();
    manifest.write(std::path::Path::new(&args.out_prefix))?;
    Ok(if partial { Outcome::Partial } else { Outcome::Clean })
}
