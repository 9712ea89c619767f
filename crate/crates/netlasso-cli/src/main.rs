use clap::Parser;

use netlasso_cli::cli::{Cli, Command, ExperimentCommand};
use netlasso_cli::commands;
use netlasso_cli::exit_code;

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => commands::cmd_solve(args),
        Command::Path(args) => commands::cmd_path(args),
        Command::Infer(args) => commands::cmd_infer(args),
        Command::Experiment(args) => match &args.which {
            ExperimentCommand::Svm(a) => commands::cmd_experiment_svm(a),
            ExperimentCommand::Housing(a) => commands::cmd_experiment_housing(a),
            ExperimentCommand::Events(a) => commands::cmd_experiment_events(a),
        },
        Command::Bench(args) => commands::cmd_bench(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}
