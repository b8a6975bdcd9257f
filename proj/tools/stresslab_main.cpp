#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stresslab/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"stresslab: black-box failure search for simulated systems"};
    app.require_subcommand(1);

    stresslab::ExperimentSpec spec;
    auto* run_cmd = app.add_subcommand("run", "search one scenario with one solver");
    run_cmd->add_option("--scenario", spec.scenario,
                        "preset (easy|medium|hard) or path to a scenario json")
        ->capture_default_str();
    run_cmd->add_option("--solver", spec.solver, "ge | mcts | drl")
        ->capture_default_str()
        ->check(CLI::IsMember({"ge", "mcts", "drl"}));
    run_cmd->add_flag("--robustify", spec.robustify,
                      "refine the found failure with the backwards algorithm");
    run_cmd->add_option("--seed", spec.seed, "rng seed")->capture_default_str();
    run_cmd->add_option("--budget", spec.budget, "desk | paper")
        ->capture_default_str()
        ->check(CLI::IsMember({"desk", "paper"}));
    run_cmd->add_option("--out", spec.output_dir,
                        "artifact directory (omitted: run without writing files)");
    run_cmd->add_flag("--save-state", spec.save_solver_state,
                      "also write solver state (cell pool / policy weights)");
    run_cmd->add_option("--iterations", spec.iterations, "override solver iterations");
    run_cmd->add_option("--batch", spec.batch_size, "override solver batch size");
    run_cmd->add_option("--ba-iterations", spec.ba_iterations,
                        "override robustification iterations");
    run_cmd->add_option("--ba-batch", spec.ba_batch_size, "override robustification batch size");
    run_cmd->add_option("--ba-epochs-per-step", spec.ba_epochs_per_step,
                        "robustification iterations to spend per expert step");
    run_cmd->add_option("--ge-granularity", spec.ge_granularity,
                        "uniform action bin width (explorer cells and tree edge keys)");
    run_cmd->add_option("--mcts-c", spec.mcts_c, "tree search exploration constant");
    run_cmd->add_option("--mcts-k", spec.mcts_k, "progressive widening k");
    run_cmd->add_option("--mcts-alpha", spec.mcts_alpha, "progressive widening alpha");
    run_cmd->add_option("--lr", spec.learning_rate, "optimizer step size (drl and robustification)");
    run_cmd->add_option("--clip", spec.clip_range, "surrogate clip range");
    run_cmd->add_option("--kl-coef", spec.kl_coef, "kl penalty coefficient");

    std::vector<std::string> run_dirs;
    std::string report_out = "report";
    auto* report_cmd =
        app.add_subcommand("report", "combine finished runs into a csv + svg comparison");
    report_cmd->add_option("dirs", run_dirs, "run directories (each holding a manifest.json)")
        ->required()
        ->expected(-1);
    report_cmd->add_option("--out", report_out, "output directory")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            const stresslab::RunRecord record = stresslab::run_experiment(spec);
            std::cout << record.label() << ": ";
            if (record.best_failure) {
                std::cout << "failure found, best reward "
                          << stresslab::format_double(record.best_failure->total_reward)
                          << " over " << record.best_failure->length() << " steps\n";
            } else {
                std::cout << "no failure found within budget\n";
            }
            if (record.robustified_reward) {
                std::cout << "robustified reward "
                          << stresslab::format_double(*record.robustified_reward) << "\n";
            }
            if (record.ba_skipped) {
                std::cout << "robustification skipped: no failure to start from\n";
            }
            std::cout << "rollouts: " << record.rollouts << "\n";
            if (!spec.output_dir.empty()) {
                std::cout << "artifacts written to " << spec.output_dir << "\n";
            }
            return record.best_failure ? 0 : 2;
        }
        std::vector<stresslab::RunRecord> records;
        records.reserve(run_dirs.size());
        for (const auto& dir : run_dirs) records.push_back(stresslab::load_run(dir));
        stresslab::write_report(records, report_out);
        std::cout << "wrote " << report_out << "/report.csv and " << report_out << "/report.svg ("
                  << records.size() << " runs)\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
