// iongate — experiment runner for multi-mode trapped-ion entangling gates.
//
//   iongate run <config.json>        execute the sweep, write result files
//   iongate validate <config.json>   schema check + derived quantities, no execution
//   iongate emit --format ... --input results.jsonl [--output file]
//
// Exit codes: 0 ok, 2 config violation, 3 numeric failure at some sweep point,
// 4 unwritable output path.

#include "iongate/runner.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"multi-mode trapped-ion entangling gate simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string emit_format = "csv";
    std::string emit_input;
    std::string emit_output;
    int workers = 0;

    CLI::App* run = app.add_subcommand("run", "execute a sweep config");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    run->add_option("--workers", workers, "worker threads (default: IONGATE_WORKERS or cores)");

    CLI::App* validate = app.add_subcommand("validate", "validate a config and print derived "
                                                        "quantities");
    validate->add_option("config", config_path, "experiment config (JSON)")->required();

    CLI::App* emit = app.add_subcommand("emit", "re-emit a JSON-lines result file");
    emit->add_option("--format", emit_format, "csv | jsonl | plotdata");
    emit->add_option("--input", emit_input, "input .jsonl file")->required();
    emit->add_option("--output", emit_output, "output path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const iongate::ExperimentConfig cfg = iongate::load_config_file(config_path);
            const iongate::RunOutput out = iongate::run_experiment(cfg, workers);
            const int wc = iongate::write_outputs(cfg, out);
            if (wc != 0) return wc;
            std::cout << out.records.size() << " records written to " << cfg.out_directory
                      << "/" << cfg.out_basename << ".*\n";
            return out.exit_code;
        }
        if (validate->parsed()) {
            const iongate::ExperimentConfig cfg = iongate::load_config_file(config_path);
            std::cout << iongate::derived_report(cfg);
            std::cout << "config ok\n";
            return 0;
        }
        if (emit->parsed()) {
            const iongate::RunOutput out = iongate::read_jsonl(emit_input);
            std::ostream* os = &std::cout;
            std::ofstream file;
            if (!emit_output.empty()) {
                file.open(emit_output);
                if (!file) {
                    std::cerr << "cannot write " << emit_output << "\n";
                    return 4;
                }
                os = &file;
            }
            if (emit_format == "csv")
                iongate::emit_csv(*os, out);
            else if (emit_format == "jsonl")
                iongate::emit_jsonl(*os, out);
            else if (emit_format == "plotdata")
                iongate::emit_plotdata(*os, out);
            else {
                std::cerr << "unknown format " << emit_format << "\n";
                return 2;
            }
            return os->good() ? 0 : 4;
        }
    } catch (const iongate::config_error& e) {
        std::cerr << "config error at " << (e.path.empty() ? "(root)" : e.path) << ": "
                  << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
