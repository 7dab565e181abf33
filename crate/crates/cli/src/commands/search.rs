//! `search`: select circuits by descriptor quadrant, by top-r_min rank, or
//! by rejection-sampling fresh circuits into a target quadrant; optionally
//! compare quadrant label compositions in an enrichment report.

use super::{descriptor_for, read_circuits, write_text};
use crate::manifest::Manifest;
use crate::records::parse_described;
use crate::{Outcome, QuadrantArg, SearchArgs};
use anyhow::{bail, Context, Result};
use qcmol::circuit::sample_circuit;
use qcmol::error::Error;
use qcmol::rng::{derive_seed, Rng};
use qcmol::stats::{enrichment, median, quadrant_of, EnrichmentReport, Quadrant};
use qcmol::svm::PerformanceLabel;
use std::collections::BTreeMap;
use std::time::Instant;

struct Selected {
    id: usize,
    r_min: f64,
    r_max: f64,
}

pub fn render_enrichment(report: &EnrichmentReport) -> String {
    let ratio = if report.ratio.is_infinite() {
        "inf".to_string()
    } else {
        report.ratio.to_string()
    };
    format!(
        "high group: performant {} underperforming {} discarded {} total {}\n\
         low group: performant {} underperforming {} discarded {} total {}\n\
         high fraction {}\n\
         low fraction {}\n\
         ratio {}\n",
        report.high.performant,
        report.high.underperforming,
        report.high.discarded,
        report.high.total(),
        report.low.performant,
        report.low.underperforming,
        report.low.discarded,
        report.low.total(),
        report.high_fraction,
        report.low_fraction,
        ratio
    )
}

fn load_labels(args: &SearchArgs) -> Result<Option<BTreeMap<usize, PerformanceLabel>>> {
    match &args.evaluated {
        None => Ok(None),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let records = crate::records::parse_evaluated(&text)?;
            Ok(Some(records.into_iter().map(|r| (r.id, r.label)).collect()))
        }
    }
}

fn write_selected(args: &SearchArgs, selected: &[Selected], labels: Option<&BTreeMap<usize, PerformanceLabel>>) -> Result<()> {
    let mut out = String::from("id,r_min,r_max,label\n");
    for s in selected {
        let label = labels
            .and_then(|map| map.get(&s.id))
            .map(|l| l.as_str())
            .unwrap_or("");
        out.push_str(&format!("{},{},{},{}\n", s.id, s.r_min, s.r_max, label));
    }
    write_text(&args.out, &out)
}

fn emit_circuit_subset(args: &SearchArgs, ids: &[usize]) -> Result<()> {
    if let Some(out_path) = &args.circuits_out {
        let source = args
            .circuits
            .as_ref()
            .context("--circuits-out needs --circuits to copy lines from")?;
        let grids = read_circuits(source)?;
        let mut lines = String::new();
        for &id in ids {
            let grid = grids
                .get(id)
                .with_context(|| format!("selected id {id} exceeds the circuit file"))?;
            lines.push_str(&grid.to_line());
            lines.push('\n');
        }
        write_text(out_path, &lines)?;
    }
    Ok(())
}

fn fresh_mode(args: &SearchArgs, argv: &[String], start: Instant) -> Result<Outcome> {
    let quadrant = args
        .quadrant
        .context("--fresh needs --quadrant high|low")?;
    let want = args.sample.context("--fresh needs --sample")?;
    let (t_min, t_max) = match (args.r_min_threshold, args.r_max_threshold) {
        (Some(a), Some(b)) => (a, b),
        _ => bail!("--fresh needs explicit --r-min-threshold and --r-max-threshold"),
    };
    let qubits = args.qubits.context("--fresh needs --qubits")?;
    let circuits_out = args
        .circuits_out
        .as_ref()
        .context("--fresh needs --circuits-out for the sampled circuits")?;
    let policy = args.policy.to_policy();
    let target = match quadrant {
        QuadrantArg::High => Quadrant::HighHigh,
        QuadrantArg::Low => Quadrant::LowLow,
    };

    let mut selected = Vec::new();
    let mut lines = String::new();
    let mut attempts = 0usize;
    while selected.len() < want {
        if attempts >= args.reject_cap {
            bail!(
                "rejection cap {} reached with only {}/{} circuits in the {} quadrant",
                args.reject_cap,
                selected.len(),
                want,
                quadrant.as_str()
            );
        }
        let circuit_seed = derive_seed(args.seed, 2 * attempts as u64);
        let layout_seed = derive_seed(args.seed, 2 * attempts as u64 + 1);
        attempts += 1;
        let grid = sample_circuit(qubits, args.layers, &policy, circuit_seed)
            .map_err(|e| anyhow::anyhow!(e.to_string()))?;
        let summary = match descriptor_for(&grid, layout_seed, args.bond_scale) {
            Ok((_, summary)) => summary,
            Err(Error::UnmappableOffset { .. }) => continue,
            Err(e) => return Err(anyhow::anyhow!(e.to_string())),
        };
        if quadrant_of(summary.r_min, summary.r_max, t_min, t_max) == target {
            selected.push(Selected {
                id: selected.len(),
                r_min: summary.r_min,
                r_max: summary.r_max,
            });
            lines.push_str(&grid.to_line());
            lines.push('\n');
        }
    }
    write_selected(args, &selected, None)?;
    write_text(circuits_out, &lines)?;

    let mut manifest = Manifest::new("search", argv);
    manifest.set("mode", "fresh");
    manifest.set("quadrant", quadrant.as_str());
    manifest.set("sample", want);
    manifest.set("attempts", attempts);
    manifest.set("r_min_threshold", t_min);
    manifest.set("r_max_threshold", t_max);
    manifest.set("qubits", qubits);
    manifest.set("layers", args.layers);
    manifest.set("bond_scale", args.bond_scale);
    manifest.set("seed", args.seed);
    manifest.set("out", args.out.display());
    manifest.set("circuits_out", circuits_out.display());
    manifest.wall_clock_ms = start.elapsed().as_millis();
    manifest.write(&args.out)?;
    Ok(Outcome::Clean)
}

pub fn run(args: &SearchArgs, argv: &[String]) -> Result<Outcome> {
    let start = Instant::now();
    if args.top_rmin.is_some() && (args.quadrant.is_some() || args.fresh) {
        bail!("--top-rmin cannot be combined with --quadrant or --fresh");
    }
    if args.fresh {
        return fresh_mode(args, argv, start);
    }

    let described_path = args
        .described
        .as_ref()
        .context("search needs --described (or --fresh)")?;
    let text = std::fs::read_to_string(described_path)
        .with_context(|| format!("reading {}", described_path.display()))?;
    let records = parse_described(&text)?;
    let ok: Vec<(usize, f64, f64)> = records
        .iter()
        .filter(|r| r.is_ok())
        .map(|r| (r.id, r.r_min.unwrap(), r.r_max.unwrap()))
        .collect();
    if ok.is_empty() {
        bail!("no usable descriptor rows in {}", described_path.display());
    }
    let labels = load_labels(args)?;

    let mut manifest = Manifest::new("search", argv);
    manifest.set("described", described_path.display());
    if let Some(path) = &args.evaluated {
        manifest.set("evaluated", path.display());
    }

    // Group assignment for the selection and the enrichment comparison.
    let (selected_ids, high_ids, low_ids): (Vec<usize>, Vec<usize>, Vec<usize>) =
        if let Some(top_n) = args.top_rmin {
            if top_n == 0 || top_n > ok.len() {
                bail!("--top-rmin {top_n} outside 1..={}", ok.len());
            }
            let mut by_rmin = ok.clone();
            by_rmin.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            let top: Vec<usize> = by_rmin[..top_n].iter().map(|r| r.0).collect();
            let bottom: Vec<usize> = by_rmin[by_rmin.len() - top_n..].iter().map(|r| r.0).collect();
            manifest.set("mode", "top-rmin");
            manifest.set("top_rmin", top_n);
            (top, by_rmin[..top_n].iter().map(|r| r.0).collect(), bottom)
        } else {
            let quadrant = args
                .quadrant
                .context("search needs --quadrant, --top-rmin or --fresh")?;
            let t_min = args
                .r_min_threshold
                .unwrap_or_else(|| median(&ok.iter().map(|r| r.1).collect::<Vec<_>>()));
            let t_max = args
                .r_max_threshold
                .unwrap_or_else(|| median(&ok.iter().map(|r| r.2).collect::<Vec<_>>()));
            let in_quadrant = |target: Quadrant| -> Vec<usize> {
                ok.iter()
                    .filter(|(_, r_min, r_max)| quadrant_of(*r_min, *r_max, t_min, t_max) == target)
                    .map(|(id, _, _)| *id)
                    .collect()
            };
            let high = in_quadrant(Quadrant::HighHigh);
            let low = in_quadrant(Quadrant::LowLow);
            let mut chosen = match quadrant {
                QuadrantArg::High => high.clone(),
                QuadrantArg::Low => low.clone(),
            };
            if let Some(n) = args.sample {
                if n > chosen.len() {
                    bail!(
                        "{} quadrant holds {} circuits, cannot sample {n}",
                        quadrant.as_str(),
                        chosen.len()
                    );
                }
                Rng::new(derive_seed(args.seed, 0x5E1)).shuffle(&mut chosen);
                chosen.truncate(n);
                chosen.sort_unstable();
            }
            manifest.set("mode", "quadrant");
            manifest.set("quadrant", quadrant.as_str());
            manifest.set("r_min_threshold", t_min);
            manifest.set("r_max_threshold", t_max);
            if let Some(n) = args.sample {
                manifest.set("sample", n);
            }
            (chosen, high, low)
        };

    let lookup: BTreeMap<usize, (f64, f64)> =
        ok.iter().map(|(id, a, b)| (*id, (*a, *b))).collect();
    let selected: Vec<Selected> = selected_ids
        .iter()
        .map(|id| {
            let (r_min, r_max) = lookup[id];
            Selected {
                id: *id,
                r_min,
                r_max,
            }
        })
        .collect();
    write_selected(args, &selected, labels.as_ref())?;
    emit_circuit_subset(args, &selected_ids)?;

    let mut partial = false;
    if let Some(label_map) = &labels {
        let group_labels = |ids: &[usize]| -> Vec<PerformanceLabel> {
            ids.iter().filter_map(|id| label_map.get(id)).copied().collect()
        };
        let high_labels = group_labels(&high_ids);
        let low_labels = group_labels(&low_ids);
        match enrichment(&high_labels, &low_labels) {
            Ok(report) => {
                let rendered = render_enrichment(&report);
                print!("{rendered}");
                if let Some(path) = &args.report_out {
                    write_text(path, &rendered)?;
                    manifest.set("report_out", path.display());
                }
                manifest.set("enrichment.high_fraction", report.high_fraction);
                manifest.set("enrichment.low_fraction", report.low_fraction);
                manifest.set(
                    "enrichment.ratio",
                    if report.ratio.is_infinite() {
                        "inf".to_string()
                    } else {
                        report.ratio.to_string()
                    },
                );
            }
            Err(e) => {
                eprintln!("warning: enrichment report skipped: {e}");
                partial = true;
            }
        }
    }

    manifest.set("selected", selected.len());
    manifest.set("seed", args.seed);
    manifest.set("out", args.out.display());
    manifest.wall_clock_ms = start.elapsed().as_millis();
    manifest.write(&args.out)?;
    Ok(if partial { Outcome::Partial } else { Outcome::Clean })
}
