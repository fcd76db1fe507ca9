// Command-line front end: subrl train | oracle | eval.

#include <CLI11.hpp>
#include <iostream>

#include "subrl/commands.hpp"

int main(int argc, char** argv) {
  using namespace subrl::app;

  CLI::App app{"Submodular reinforcement learning: training, evaluation and exact oracles"};
  app.require_subcommand(1);

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train one policy per seed and write curves, checkpoints and a summary");
  train_cmd->add_option("--config", train.config_path, "Experiment JSON")->required();
  auto* seed_opt = train_cmd->add_option("--seed", train.seed, "Run a single seed");
  train_cmd->add_option("--seeds", train.seeds, "Run this many consecutive seeds")->excludes(seed_opt);
  train_cmd->add_option("--out", train.out, "Output directory");
  train_cmd->add_option("--estimator", train.estimator, "subpo or modpo")
      ->check(CLI::IsMember({"subpo", "modpo"}));
  train_cmd->add_option("--policy", train.policy, "tabular, mlp or history:k");

  OracleOptions oracle;
  auto* oracle_cmd = app.add_subcommand("oracle", "Run an exact check and print its verdict JSON");
  oracle_cmd->add_option("check", oracle.check,
                         "submodularity | monotonicity | brute-force | greedy | dr-check | curvature | "
                         "markov-optimality")
      ->required();
  oracle_cmd->add_option("--config", oracle.config_path, "Experiment JSON")->required();
  oracle_cmd->add_option("--out", oracle.out, "Also write the verdict here");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on fresh rollouts");
  eval_cmd->add_option("--config", eval.config_path, "Experiment JSON")->required();
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Policy checkpoint")->required();
  eval_cmd->add_option("--episodes", eval.episodes, "Number of rollouts");
  eval_cmd->add_option("--seed", eval.seed, "Evaluation seed");
  eval_cmd->add_option("--out", eval.out, "Also write the summary here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  if (*train_cmd) return cmd_train(train, std::cout);
  if (*oracle_cmd) return cmd_oracle(oracle, std::cout);
  return cmd_eval(eval, std::cout);
}
