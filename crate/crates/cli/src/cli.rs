//! Command-line surface: subcommands, shared flag groups, and help text.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Preset;

#[derive(Parser, Debug)]
#[command(
    name = "gopred",
    version,
    about = "Multi-species protein function prediction from structure and networks",
    long_about = "Predicts Gene Ontology annotations by combining per-protein structural \
                  features (residue contact graphs, random-walk embeddings, a trained graph \
                  encoder) with attention-based propagation over a cross-species protein \
                  network, label diffusion, and score fusion.\n\n\
                  Typical order: fixture (or bring your own dataset directory), contact, \
                  embed, train-struct, extract, train-prop, predict, eval."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic dataset directory with planted signal
    Fixture(FixtureArgs),
    /// Build residue contact graphs from stored coordinates
    Contact {
        #[command(flatten)]
        common: CommonArgs,
        /// Contact distance in Angstrom (default 10)
        #[arg(long, value_name = "DIST")]
        contact_threshold: Option<f64>,
    },
    /// Learn residue embeddings over the stored contact graphs
    Embed {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Train the structural encoder for a branch
    TrainStruct {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        branch: BranchSelect,
    },
    /// Extract per-protein structural features with a trained encoder
    Extract {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        branch: BranchSelect,
    },
    /// Train the network propagation model for a branch
    TrainProp {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        branch: BranchSelect,
        #[command(flatten)]
        ablation: AblationFlags,
        /// Drop-in per-protein sequence feature table (text or binary);
        /// defaults to built-in hashed k-mer features
        #[arg(long, value_name = "FILE")]
        sequence_features: Option<PathBuf>,
    },
    /// Score held-out proteins with a trained model
    Predict {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        branch: BranchSelect,
        #[command(flatten)]
        ablation: AblationFlags,
        /// Drop-in per-protein sequence feature table; must match training
        #[arg(long, value_name = "FILE")]
        sequence_features: Option<PathBuf>,
        /// Fusion weight on the feature model (overrides the per-branch default)
        #[arg(long)]
        phi: Option<f64>,
        /// Keep predictions scoring at or above this value (default 0.01)
        #[arg(long, value_name = "SCORE")]
        score_threshold: Option<f64>,
    },
    /// Evaluate stored predictions against the held-out truth
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        branch: BranchSelect,
    },
}

/// Flags shared by every dataset-consuming subcommand.
#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Dataset directory (ontology, sequences, annotations, networks, coords)
    #[arg(long, value_name = "DIR")]
    pub data: PathBuf,
    /// Artifact directory for intermediate and final outputs
    #[arg(long, value_name = "DIR")]
    pub work: PathBuf,
    /// Flat key=value configuration file; command-line flags win
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Master seed; every stage derives its own stream from it
    #[arg(long)]
    pub seed: Option<u64>,
    /// Hyperparameter defaults to start from
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
}

#[derive(Args, Debug, Clone)]
pub struct BranchSelect {
    /// Ontology branch: BPO, MFO, or CCO
    #[arg(long, value_name = "BRANCH", conflicts_with = "all_branches")]
    pub branch: Option<String>,
    /// Run every branch in turn
    #[arg(long)]
    pub all_branches: bool,
}

/// Model ablations for controlled comparisons.
#[derive(Args, Debug, Clone, Default)]
pub struct AblationFlags {
    /// Drop structural features; the network model sees sequence features only
    #[arg(long = "no-struct")]
    pub no_struct: bool,
    /// Replace the trained structural encoder with untrained mean residue features
    #[arg(long = "no-struct-model")]
    pub no_struct_model: bool,
    /// Disable neighborhood propagation during training and label diffusion at prediction
    #[arg(long = "no-propagation")]
    pub no_propagation: bool,
    /// Keep propagation but skip label diffusion at prediction time
    #[arg(long = "no-label-prop")]
    pub no_label_prop: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum PresetArg {
    /// Full-scale defaults
    Paper,
    /// Minutes-scale defaults for synthetic data
    Quick,
}

impl From<PresetArg> for Preset {
    fn from(arg: PresetArg) -> Preset {
        match arg {
            PresetArg::Paper => Preset::Paper,
            PresetArg::Quick => Preset::Quick,
        }
    }
}

#[derive(Args, Debug)]
pub struct FixtureArgs {
    /// Directory to create (must not already hold files)
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Flat key=value configuration file (seed only); flags win
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Generator seed (default 42)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of species
    #[arg(long)]
    pub species: Option<usize>,
    /// Proteins per species
    #[arg(long)]
    pub proteins_per_species: Option<usize>,
    /// Ontology terms including the root
    #[arg(long)]
    pub labels: Option<usize>,
    /// Shortest protein length
    #[arg(long)]
    pub min_residues: Option<usize>,
    /// Longest protein length
    #[arg(long)]
    pub max_residues: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_line_parses_the_documented_surface() {
        use clap::CommandFactory;
        Cli::command().debug_assert();

        let cli = Cli::try_parse_from([
            "gopred",
            "train-prop",
            "--data",
            "d",
            "--work",
            "w",
            "--branch",
            "MFO",
            "--seed",
            "7",
            "--no-propagation",
        ])
        .unwrap();
        match cli.command {
            Command::TrainProp {
                common,
                branch,
                ablation,
                ..
            } => {
                assert_eq!(common.seed, Some(7));
                assert_eq!(branch.branch.as_deref(), Some("MFO"));
                assert!(ablation.no_propagation);
                assert!(!ablation.no_struct);
            }
            other => panic!("parsed into {other:?}"),
        }
    }

    #[test]
    fn branch_and_all_branches_conflict() {
        let err = Cli::try_parse_from([
            "gopred", "eval", "--data", "d", "--work", "w", "--branch", "MFO", "--all-branches",
        ]);
        assert!(err.is_err());
    }
}
