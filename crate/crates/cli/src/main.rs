//! Command-line entry point: parse, dispatch, and turn errors into a
//! nonzero exit with a readable message.

mod cli;
mod commands;
mod config;
mod stores;

use clap::Parser;

use cli::{Cli, Command};
use commands::Ctx;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let parsed = Cli::parse();
    if let Err(err) = run(parsed) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(parsed: Cli) -> anyhow::Result<()> {
    match parsed.command {
        Command::Fixture(args) => commands::cmd_fixture(&args),
        Command::Contact {
            common,
            contact_threshold,
        } => {
            let ctx = Ctx::new(&common)?;
            commands::cmd_contact(&ctx, contact_threshold)
        }
        Command::Embed { common } => {
            let ctx = Ctx::new(&common)?;
            commands::cmd_embed(&ctx)
        }
        Command::TrainStruct { common, branch } => {
            let ctx = Ctx::new(&common)?;
            for b in ctx.branches(branch.branch.as_deref(), branch.all_branches)? {
                commands::cmd_train_struct(&ctx, b)?;
            }
            Ok(())
        }
        Command::Extract { common, branch } => {
            let ctx = Ctx::new(&common)?;
            for b in ctx.branches(branch.branch.as_deref(), branch.all_branches)? {
                commands::cmd_extract(&ctx, b)?;
            }
            Ok(())
        }
        Command::TrainProp {
            common,
            branch,
            ablation,
            sequence_features,
        } => {
            let ctx = Ctx::new(&common)?;
            for b in ctx.branches(branch.branch.as_deref(), branch.all_branches)? {
                commands::cmd_train_prop(&ctx, b, &ablation, sequence_features.as_deref())?;
            }
            Ok(())
        }
        Command::Predict {
            common,
            branch,
            ablation,
            sequence_features,
            phi,
            score_threshold,
        } => {
            let ctx = Ctx::new(&common)?;
            for b in ctx.branches(branch.branch.as_deref(), branch.all_branches)? {
                commands::cmd_predict(
                    &ctx,
                    b,
                    &ablation,
                    sequence_features.as_deref(),
                    phi,
                    score_threshold,
                )?;
            }
            Ok(())
        }
        Command::Eval { common, branch } => {
            let ctx = Ctx::new(&common)?;
            for b in ctx.branches(branch.branch.as_deref(), branch.all_branches)? {
                commands::cmd_eval(&ctx, b)?;
            }
            Ok(())
        }
    }
}
