#pragma once
// Command-line front end: parses flags and an optional JSON config file into
// a RunConfig, then produces the requested artifacts on disk.  Commands:
//   simulate  draw a roster, simulate the observed arm, export the panel CSV
//   fit       ingest a panel CSV and fit the two-way fixed-effects model
//   table1    full estimator-comparison run (CSV + aligned text table)
//   figures   plot-ready CSV datasets for the demonstration scenarios
//   summary   adoption-timing group means of growth and per-10k cumulative
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.
// Artifacts are written through a transactional writer; when a command fails
// partway, files it already wrote are removed.

#include <filesystem>
#include <string>
#include <vector>

#include "epifit/estimators.hpp"
#include "epifit/scenario.hpp"

namespace epifit {

struct RunConfig {
    std::string command;        // simulate | fit | table1 | figures | summary
    ExperimentDesign design;    // resolved design for simulation commands
    std::filesystem::path input;    // panel CSV for fit / summary
    std::filesystem::path out_dir;  // artifact directory
    RegressionSpec spec;            // fit regression choices
    std::string figures_which = "all"; // fig1|fig2|fig3|fig4|appendix|all
    std::vector<int> summary_bounds = {1, 8, 15, 22};
    int summary_at = 150;
    int summary_window = 7;
    bool per_capita_rows = true; // include per-10k cumulative rows in table1
    bool print_config = false;   // dump the resolved design and stop
};

// Executes one command; returns the process exit code.
int run(const RunConfig& config);

// Parses argv (no program name) and dispatches to run().
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

} // namespace epifit
