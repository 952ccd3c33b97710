//! `train`: accuracy and trained energy profiles over depth.

use std::fmt::Write as _;

use anyhow::{bail, Context};

use oversmooth::autodiff::{self, Masks, Optimizer, TrainConfig};
use oversmooth::harness::{self, WeightMode};
use oversmooth::io::{self, FitRecord, Split};
use oversmooth::{fit_decay, FitOptions};

use crate::{BiasChoice, OptimizerArg, TrainArgs};

/// Energy fits skip the encoder output so the profile covers layers `1..=N`.
const PROFILE_SKIP: usize = 1;

pub(crate) fn run(a: TrainArgs) -> anyhow::Result<()> {
    if a.depths.is_empty() {
        bail!("--depths is empty");
    }
    let loaded = io::load_graph(&a.graph)?;
    let g = &loaded.graph;
    let mut labels = io::load_labels(&a.labels, &loaded)?;
    if let Some(path) = &a.splits {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        labels.apply_splits(&text, path, &loaded.index_of())?;
    }
    let masks = Masks {
        train: labels.mask(Split::Train),
        val: labels.mask(Split::Val),
        test: labels.mask(Split::Test),
    };
    if masks.train.is_empty() {
        bail!("no labeled training nodes; give a split column or --splits");
    }
    let x = match &a.features {
        Some(path) => io::load_features(path, &loaded)?,
        None => harness::init_features(g.node_count(), a.feature_dim, a.seed)?,
    };
    // Unlabeled nodes sit outside every mask, so their placeholder is never read.
    let dense: Vec<usize> = labels.labels.iter().map(|l| l.unwrap_or(0)).collect();
    let biases: &[bool] = match a.bias {
        BiasChoice::On => &[true],
        BiasChoice::Off => &[false],
        BiasChoice::Both => &[true, false],
    };
    let hash = g.content_hash();
    let header = format!(
        "# graph_hash={hash} seed={} epochs={} width={} lr={} weights={}\n",
        a.seed,
        a.epochs,
        a.width,
        a.lr,
        match a.weights {
            WeightMode::Shared => "shared",
            WeightMode::PerLayer => "per-layer",
        }
    );
    let mut accuracy = header.clone() + "depth,bias,best_epoch,train_acc,val_acc,test_acc\n";
    let mut epochs = header + "depth,bias,epoch,loss,train_acc,val_acc,test_acc\n";
    let mut profiles = Vec::new();
    let mut fits = Vec::new();
    let fit_opts = FitOptions {
        skip_leading: PROFILE_SKIP,
        ..Default::default()
    };

    for &bias in biases {
        let tag = if bias { "on" } else { "off" };
        for &depth in &a.depths {
            let cfg = TrainConfig {
                depth,
                width: a.width,
                shared: a.weights == WeightMode::Shared,
                bias,
                lr: a.lr,
                epochs: a.epochs,
                optimizer: match a.optimizer {
                    OptimizerArg::Adam => Optimizer::ADAM,
                    OptimizerArg::Sgd => Optimizer::Sgd,
                },
                seed: a.seed,
            };
            let out = autodiff::train(&cfg, g, &x, &dense, &masks)
                .with_context(|| format!("training depth {depth} with bias {tag}"))?;
            let best = out.best();
            let _ = writeln!(
                accuracy,
                "{depth},{tag},{},{},{},{}",
                out.best_epoch,
                io::format_value(best.train_acc),
                io::format_value(best.val_acc),
                io::format_value(best.test_acc)
            );
            for m in &out.history {
                let _ = writeln!(
                    epochs,
                    "{depth},{tag},{},{},{},{},{}",
                    m.epoch,
                    io::format_value(m.loss),
                    io::format_value(m.train_acc),
                    io::format_value(m.val_acc),
                    io::format_value(m.test_acc)
                );
            }
            let run_id = format!("gcn-bias-{tag}:d{depth}");
            let profile = autodiff::trained_energy_profile(&out.model, g, &x, &run_id)?
                .with_metadata("depth", depth)
                .with_metadata("bias", tag)
                .with_metadata("best_epoch", out.best_epoch)
                .with_metadata("seed", a.seed)
                .with_metadata("graph_hash", &hash);
            let summary = match fit_decay(&profile, &fit_opts) {
                Ok(f) => {
                    let s = format!("{} c2={:.6}", f.classification, f.c2);
                    fits.push(FitRecord::new(&profile, &f));
                    s
                }
                Err(e) => format!("not fitted ({e})"),
            };
            println!(
                "depth {depth} bias {tag}: test accuracy {:.4} at epoch {}, energy profile {summary}",
                best.test_acc, out.best_epoch
            );
            profiles.push(profile);
        }
    }

    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    io::write_text(&a.out_dir.join("accuracy.csv"), &accuracy)?;
    io::write_text(&a.out_dir.join("epochs.csv"), &epochs)?;
    io::write_series(&profiles, &a.out_dir.join("energy.csv"))?;
    io::write_text(&a.out_dir.join("fit.json"), &io::format_fits(&fits)?)?;
    Ok(())
}
