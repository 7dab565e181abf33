//! `generate`: sample a batch of circuits, or extend an existing batch to a
//! deeper layer count with bit-identical prefixes.

use super::{read_circuits, write_text};
use crate::manifest::Manifest;
use crate::{GenerateArgs, Outcome};
use anyhow::{bail, Context, Result};
use qcmol::circuit::{extend_circuit, sample_circuit};
use qcmol::rng::derive_seed;
use std::time::Instant;

pub fn run(args: &GenerateArgs, argv: &[String]) -> Result<Outcome> {
    let start = Instant::now();
    let policy = args.policy.to_policy();
    policy
        .validate()
        .map_err(|e| anyhow::anyhow!(e.to_string()))?;

    let mut manifest = Manifest::new("generate", argv);
    let lines: Vec<String> = match &args.extend_from {
        Some(path) => {
            let grids = read_circuits(path)?;
            manifest.set("extend_from", path.display());
            manifest.set("count", grids.len());
            grids
                .iter()
                .enumerate()
                .map(|(idx, grid)| {
                    if args.layers < grid.n_layers() {
                        bail!(
                            "circuit {idx} already has {} layers, cannot shrink to {}",
                            grid.n_layers(),
                            args.layers
                        );
                    }
                    let extra = args.layers - grid.n_layers();
                    // Salted stream so extending with the seed that sampled
                    // the batch does not replay the same layer draws.
                    let ext_seed = derive_seed(args.seed, 0xE000_0000 + idx as u64);
                    let grown = extend_circuit(grid, extra, &policy, ext_seed)
                        .map_err(|e| anyhow::anyhow!("circuit {idx}: {e}"))?;
                    Ok(grown.to_line())
                })
                .collect::<Result<_>>()?
        }
        None => {
            let qubits = args
                .qubits
                .context("--qubits is required unless --extend-from is given")?;
            if args.count < 1 {
                anyhow::bail!("--count must be at least 1");
            }
            manifest.set("qubits", qubits);
            manifest.set("count", args.count);
            (0..args.count)
                .map(|idx| {
                    let grid =
                        sample_circuit(qubits, args.layers, &policy, derive_seed(args.seed, idx as u64))
                            .map_err(|e| anyhow::anyhow!(e.to_string()))?;
                    Ok(grid.to_line())
                })
                .collect::<Result<_>>()?
        }
    };

    let mut content = lines.join("\n");
    content.push('\n');
    write_text(&args.out, &content)?;

    manifest.set("layers", args.layers);
    manifest.set("seed", args.seed);
    manifest.set("policy.p_identity", args.policy.p_identity);
    manifest.set("policy.p_rz", args.policy.p_rz);
    manifest.set("policy.p_cnot", args.policy.p_cnot);
    manifest.set(
        "policy.delta_max",
        args.policy
            .delta_max
            .map(|d| d.to_string())
            .unwrap_or_else(|| "qubits-1".into()),
    );
    manifest.set("out", args.out.display());
    manifest.wall_clock_ms = start.elapsed().as_millis();
    manifest.write(&args.out)?;
    Ok(Outcome::Clean)
}
