#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "epifit/cli.hpp"
#include "epifit/panel.hpp"

using namespace epifit;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "epifit_cli_tests" / name;
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::size_t file_count(const fs::path& dir) {
    if (!fs::exists(dir)) return 0;
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) ++n;
    return n;
}

// The commands echo tables to stdout; keep the test log clean.
struct CoutCapture {
    std::ostringstream sink;
    std::streambuf* saved;
    CoutCapture() : saved(std::cout.rdbuf(sink.rdbuf())) {}
    ~CoutCapture() { std::cout.rdbuf(saved); }
    std::string text() const { return sink.str(); }
};

int run_quiet(const std::vector<std::string>& args, std::string* out = nullptr) {
    CoutCapture cap;
    int code = run_cli(args);
    if (out) *out = cap.text();
    return code;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

// Minimal RFC-4180 split: honors quoted fields and doubled quotes.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else {
            cell += c;
        }
    }
    cells.push_back(cell);
    return cells;
}

} // namespace

TEST_CASE("simulate writes a reproducible panel artifact") {
    const std::vector<std::string> base = {
        "simulate",        "--regions", "6",  "--horizon",        "40",
        "--treat-time-range", "5",      "35", "--never-fraction", "0.3",
        "--seed",          "11"};

    fs::path dir = fresh_dir("simulate");
    std::vector<std::string> args = base;
    args.insert(args.end(), {"--out", dir.string()});
    REQUIRE(run_quiet(args) == 0);
    REQUIRE(fs::exists(dir / "panel.csv"));
    const std::string first = slurp(dir / "panel.csv");

    // the artifact ingests cleanly and has the advertised shape
    PanelDataset panel = ingest_csv(dir / "panel.csv");
    CHECK(panel.n_regions() == 6);
    CHECK(panel.n_periods() == 41);

    // a rerun with the same seed is byte-identical
    fs::remove_all(dir);
    REQUIRE(run_quiet(args) == 0);
    CHECK(slurp(dir / "panel.csv") == first);

    // a different seed changes the bytes
    fs::path dir2 = fresh_dir("simulate_alt");
    std::vector<std::string> alt = {
        "simulate",        "--regions", "6",  "--horizon",        "40",
        "--treat-time-range", "5",      "35", "--never-fraction", "0.3",
        "--seed",          "12",        "--out", dir2.string()};
    REQUIRE(run_quiet(alt) == 0);
    CHECK(slurp(dir2 / "panel.csv") != first);
}

TEST_CASE("fit reports match an in-memory fit of the same panel") {
    fs::path sim_dir = fresh_dir("fit_input");
    REQUIRE(run_quiet({"simulate", "--regions", "8", "--horizon", "40",
                       "--treat-time-range", "5", "35", "--never-fraction", "0.25",
                       "--seed", "17", "--out", sim_dir.string()}) == 0);
    const fs::path panel_path = sim_dir / "panel.csv";

    fs::path fit_dir = fresh_dir("fit_output");
    REQUIRE(run_quiet({"fit", "--in", panel_path.string(), "--outcome", "delta-log",
                       "--effect", "dynamic", "--out", fit_dir.string()}) == 0);
    REQUIRE(fs::exists(fit_dir / "fit_report.csv"));
    REQUIRE(fs::exists(fit_dir / "event_study.csv"));

    PanelDataset panel = ingest_csv(panel_path);
    RegressionSpec spec;
    spec.outcome = OutcomeKind::delta_log;
    spec.effect = EffectKind::dynamic;
    FitResult fit = twfe_fit(panel, spec);

    const auto lines = split_lines(slurp(fit_dir / "event_study.csv"));
    REQUIRE(lines.size() == fit.event_columns.size() + 2); // header + reference row
    CHECK(lines[0] == "rel_time,estimate,ci_low,ci_high");
    const double ci95 = 1.959964;
    bool saw_reference = false;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split_csv(lines[i]);
        REQUIRE(cells.size() == 4);
        const int k = std::stoi(cells[0]);
        const double est = std::stod(cells[1]);
        const double lo = std::stod(cells[2]);
        const double hi = std::stod(cells[3]);
        if (k == -1) {
            saw_reference = true;
            CHECK(est == 0.0);
            CHECK(lo == 0.0);
            CHECK(hi == 0.0);
            continue;
        }
        REQUIRE(fit.event_coefficient(k).has_value());
        CHECK(est == doctest::Approx(*fit.event_coefficient(k)).epsilon(1e-12));
        const double se = *fit.event_standard_error(k, SeKind::cluster_by_region);
        CHECK(lo == doctest::Approx(est - ci95 * se).epsilon(1e-9));
        CHECK(hi == doctest::Approx(est + ci95 * se).epsilon(1e-9));
    }
    CHECK(saw_reference);

    // the per-term report flags nothing dropped on this clean panel
    const auto report = split_lines(slurp(fit_dir / "fit_report.csv"));
    CHECK(report[0] == "term,estimate,se_classical,se_cluster,dropped");
    for (std::size_t i = 1; i < report.size(); ++i) {
        const auto cells = split_csv(report[i]);
        REQUIRE(cells.size() == 5);
        CHECK(cells[4] == "0");
    }
}

TEST_CASE("usage errors exit with code 1") {
    CHECK(run_quiet({"frobnicate"}) == 1);
    fs::path dir = fresh_dir("usage");
    CHECK(run_quiet({"fit", "--in", "does_not_matter.csv", "--out", dir.string()}) == 1);
    CHECK(run_quiet({"simulate"}) == 1); // no --out
    CHECK(file_count(dir) == 0);
}

TEST_CASE("config files are honored and malformed ones exit with code 2") {
    fs::path dir = fresh_dir("config");
    fs::create_directories(dir);
    const fs::path good = dir / "good.json";
    std::ofstream(good) << R"({"n_regions": 5, "horizon": 30,
                              "treat_time_range": [2, 25]})";
    fs::path out = fresh_dir("config_out");
    REQUIRE(run_quiet({"simulate", "--config", good.string(), "--seed", "3", "--out",
                       out.string()}) == 0);
    PanelDataset panel = ingest_csv(out / "panel.csv");
    CHECK(panel.n_regions() == 5);
    CHECK(panel.n_periods() == 31);

    const fs::path bad = dir / "bad.json";
    std::ofstream(bad) << "{oops";
    CHECK(run_quiet({"simulate", "--config", bad.string(), "--out", out.string()}) == 2);

    const fs::path unknown = dir / "unknown.json";
    std::ofstream(unknown) << R"({"n_regons": 5})";
    CHECK(run_quiet({"simulate", "--config", unknown.string(), "--out", out.string()}) ==
          2);

    CHECK(run_quiet({"simulate", "--config", (dir / "absent.json").string(), "--out",
                     out.string()}) == 2);
}

TEST_CASE("numerical blow-ups exit with code 3 and leave no artifacts") {
    fs::path dir = fresh_dir("numeric");
    // beta0 = 25 with half the population infected overdraws susceptibles in
    // the very first period
    CHECK(run_quiet({"simulate", "--regions", "2", "--horizon", "10",
                     "--treat-time-range", "1", "5", "--beta0", "25",
                     "--seed-fraction-range", "0.5", "0.5", "--out", dir.string()}) == 3);
    CHECK(file_count(dir) == 0);
}

TEST_CASE("a failing step removes artifacts written before it") {
    fs::path dir = fresh_dir("rollback");
    // fig1..fig4 use fixed demonstration scenarios and write their files
    // first; the final group runs the full design, whose adoption range is
    // invalid here, so the whole command must fail and clean up after itself.
    CHECK(run_quiet({"figures", "--which", "all", "--treat-time-range", "1", "200",
                     "--out", dir.string()}) == 2);
    CHECK(file_count(dir) == 0);
}

TEST_CASE("single figures succeed on their own") {
    fs::path dir = fresh_dir("fig2");
    REQUIRE(run_quiet({"figures", "--which", "fig2", "--out", dir.string()}) == 0);
    REQUIRE(fs::exists(dir / "fig2_outcomes.csv"));
    const auto lines = split_lines(slurp(dir / "fig2_outcomes.csv"));
    REQUIRE(lines.size() >= 2);
    CHECK(lines[0] == "region_id,t,log_cases,delta_log");
}

TEST_CASE("summary groups regions by adoption timing") {
    fs::path dir = fresh_dir("summary");
    std::string echoed;
    REQUIRE(run_quiet({"summary", "--regions", "8", "--horizon", "30",
                       "--treat-time-range", "2", "28", "--never-fraction", "0.25",
                       "--seed", "5", "--out", dir.string()},
                      &echoed) == 0);
    REQUIRE(fs::exists(dir / "summary.csv"));
    const std::string csv = slurp(dir / "summary.csv");
    CHECK(echoed == csv);
    const auto lines = split_lines(csv);
    REQUIRE(lines.size() >= 2);
    CHECK(lines[0] == "group,n_regions,mean_growth,mean_cum_per_10k");
    std::size_t regions_covered = 0;
    bool saw_never = false;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split_csv(lines[i]);
        REQUIRE(cells.size() == 4);
        regions_covered += std::stoul(cells[1]);
        if (cells[0] == "never") {
            saw_never = true;
            CHECK(cells[1] == "2");
        }
    }
    CHECK(regions_covered == 8);
    CHECK(saw_never);
}

TEST_CASE("print-config dumps the resolved design and writes nothing") {
    fs::path dir = fresh_dir("print_config");
    std::string out;
    REQUIRE(run_quiet({"simulate", "--print-config", "--regions", "4", "--horizon",
                       "25", "--treat-time-range", "1", "20", "--seed", "123", "--out",
                       dir.string()},
                      &out) == 0);
    CHECK_FALSE(fs::exists(dir));
    const nlohmann::json j = nlohmann::json::parse(out);
    CHECK(j.at("n_regions").get<int>() == 4);
    CHECK(j.at("horizon").get<int>() == 25);
    CHECK(j.at("master_seed").get<std::uint64_t>() == 123);
    CHECK(j.at("treat_time_range")[0].get<int>() == 1);
    CHECK(j.at("treat_time_range")[1].get<int>() == 20);
    CHECK(j.at("mode").get<std::string>() == "deterministic");
}
