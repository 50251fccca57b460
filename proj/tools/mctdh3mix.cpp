#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>

#include "mctdh3mix/run.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace mctdh;

int main(int argc, char** argv) {
  CLI::App app{"mctdh3mix: multiconfigurational dynamics of 1D quantum gas mixtures"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  std::string restore_path;
  int threads = 0;
  bool checkpoint = false;
  bool verify_oracle = false;
  int oracle_samples = 5;

  CLI::App* run_cmd = app.add_subcommand("run", "propagate a configured system");
  run_cmd->add_option("config", config_path, "config file")->required();
  run_cmd->add_option("--output-dir", output_dir,
                      "artifact directory (default: $MCTDH3MIX_OUTPUT_DIR or .)");
  run_cmd->add_option("--threads", threads, "OpenMP thread count");
  run_cmd->add_flag("--checkpoint", checkpoint, "write checkpoint.bin when the run ends");
  run_cmd->add_option("--restore", restore_path, "resume from a checkpoint file");
  run_cmd->add_flag("--verify-oracle", verify_oracle,
                    "cross-check the Hamiltonian against the dense oracle before running");
  run_cmd->add_option("--oracle-samples", oracle_samples,
                      "random vectors used by --verify-oracle");

  CLI::App* validate_cmd = app.add_subcommand("validate", "parse and validate a config");
  validate_cmd->add_option("config", config_path, "config file")->required();

  CLI::App* oracle_cmd =
      app.add_subcommand("oracle", "compare the matrix-free Hamiltonian with the dense oracle");
  oracle_cmd->add_option("config", config_path, "config file")->required();
  oracle_cmd->add_option("--samples", oracle_samples, "number of random vectors");
  oracle_cmd->add_option("--threads", threads, "OpenMP thread count");

  CLI11_PARSE(app, argc, argv);

  try {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif
    if (validate_cmd->parsed()) {
      const Config cfg = load_config(config_path);
      const std::vector<std::string> warnings = validate_config(cfg);
      for (const std::string& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      if (cfg.run.strict_warnings && !warnings.empty()) {
        std::fprintf(stderr, "error: strict_warnings escalates the warnings above\n");
        return exit_code::kValidation;
      }
      std::printf("ok\n");
      return exit_code::kOk;
    }

    if (oracle_cmd->parsed()) {
      const Config cfg = load_config(config_path);
      validate_config(cfg);
      const System sys = make_system(cfg);
      const SystemState y = initial_state(sys, 0.0);
      const double dev = oracle_deviation(sys, y, 0.0, cfg.run.seed, oracle_samples);
      std::printf("oracle deviation: %.3e over %d samples (dimension %lld)\n", dev,
                  oracle_samples,
                  static_cast<long long>(sys.space().layout().total_dim()));
      return dev <= 1e-10 ? exit_code::kOk : exit_code::kError;
    }

    const Config cfg = load_config(config_path);
    RunOptions opt;
    if (!output_dir.empty()) {
      opt.output_dir = output_dir;
    } else if (const char* env = std::getenv("MCTDH3MIX_OUTPUT_DIR"); env && *env) {
      opt.output_dir = env;
    } else {
      opt.output_dir = ".";
    }
    opt.write_checkpoint = checkpoint;
    opt.restore_path = restore_path;
    opt.verify_oracle = verify_oracle;
    opt.oracle_samples = oracle_samples;
    return run_simulation(cfg, opt);
  } catch (const parse_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code::kParse;
  } catch (const validation_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code::kValidation;
  } catch (const stiffness_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code::kStiffness;
  } catch (const convergence_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code::kNoConvergence;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code::kError;
  }
}
