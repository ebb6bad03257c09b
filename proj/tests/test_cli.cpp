#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

#include "sator/io.hpp"
#include "sator/sim.hpp"

namespace fs = std::filesystem;
using namespace sator;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(SATOR_CLI_PATH) + " " + args + " 2>&1";
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof(buf), pipe)) r.output.append(buf, n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

const fs::path kWork = fs::path("cli_test_work");
const std::string kFixtures = SATOR_FIXTURE_DIR;

std::string write_config(const std::string& name, const std::string& out_dir,
                         double duration_s, const std::string& extra = "",
                         const std::string& tle_override = "") {
    std::ostringstream cfg;
    cfg << "relays = " << kFixtures << "/relays.csv\n"
        << "circuits = " << kFixtures << "/circuits.csv\n"
        << "tle = " << (tle_override.empty() ? kFixtures + "/constellation.tle" : tle_override)
        << "\n"
        << "stations = " << kFixtures << "/stations.csv\n"
        << "pops = " << kFixtures << "/pops.csv\n"
        << "terrestrial_baseline = " << kFixtures << "/terrestrial_baseline.csv\n"
        << "satellite_baseline = " << kFixtures << "/satellite_baseline.csv\n"
        << "measured = " << kFixtures << "/measured.csv\n"
        << "seed = 11\n"
        << "out = " << out_dir << "\n"
        << "timeline.start = 1704067200\n"
        << "timeline.duration_s = " << duration_s << "\n"
        << "timeline.step_s = 300\n"
        << "strategy = isl\n"
        << "elevation_min_deg = 15\n"
        << extra;
    const auto path = kWork / name;
    std::ofstream(path) << cfg.str();
    return path.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::size_t data_rows(const fs::path& csv) {
    std::ifstream in(csv);
    REQUIRE(in.good());
    std::string line;
    std::size_t rows = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        ++rows;
    }
    return rows;
}

} // namespace

TEST_CASE("workspace setup") {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
}

TEST_CASE("ingest succeeds on the fixture set and reports rejects") {
    const auto cfg = write_config("ingest.conf", (kWork / "out_ingest").string(), 7200);
    const auto r = run_cli("ingest --config " + cfg);
    CAPTURE(r.output);
    CHECK(r.exit_code == 0);
    // the satellite baseline carries one deliberate superluminal row
    CHECK(r.output.find("satellite baseline: rows=145 superluminal_rejected=1") !=
          std::string::npos);
    CHECK(fs::exists(kWork / "out_ingest/models/terrestrial_model.json"));
    CHECK(fs::exists(kWork / "out_ingest/models/satellite_model.json"));
    CHECK(fs::exists(kWork / "out_ingest/models/constellation.json"));
}

TEST_CASE("absent TLE path fails naming the path") {
    const auto cfg = write_config("badtle.conf", (kWork / "out_badtle").string(), 7200, "",
                                  (kWork / "no_such_file.tle").string());
    const auto r = run_cli("ingest --config " + cfg);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("no_such_file.tle") != std::string::npos);
}

TEST_CASE("simulate produces hops x interfaces x steps rows") {
    // one-hour timeline: 12 samples per series
    const auto out = (kWork / "out_hour").string();
    const auto cfg = write_config("hour.conf", out, 3600);
    REQUIRE(run_cli("ingest --config " + cfg).exit_code == 0);
    const auto r = run_cli("simulate --config " + cfg);
    CAPTURE(r.output);
    CHECK(r.exit_code == 0);

    // the 10-circuit fixture induces 20 unique directed hops
    CHECK(data_rows(fs::path(out) / "series/store.csv") == 20 * 2 * 12);

    const auto loaded = io::load_series_store((fs::path(out) / "series/store.csv").string());
    CHECK(loaded.store.size() == 20);
    for (const auto& [id, pair] : loaded.store) {
        CHECK(pair.satellite.rtt_ms.size() == 12);
        CHECK(pair.terrestrial.rtt_ms.size() == 12);
    }
}

TEST_CASE("simulate is byte-identical under the same seed") {
    const auto out = (kWork / "out_hour").string();
    const auto cfg = write_config("hour.conf", out, 3600);
    const auto first = slurp(fs::path(out) / "series/store.csv");
    fs::remove(fs::path(out) / "series/store.csv");
    fs::remove(fs::path(out) / "series/manifest.json");
    REQUIRE(run_cli("simulate --config " + cfg).exit_code == 0);
    CHECK(slurp(fs::path(out) / "series/store.csv") == first);
}

TEST_CASE("parallel simulate matches the single-threaded store byte for byte") {
    const auto out = (kWork / "out_hour").string();
    const auto cfg = write_config("hour.conf", out, 3600);
    const auto single = slurp(fs::path(out) / "series/store.csv");
    fs::remove(fs::path(out) / "series/store.csv");
    fs::remove(fs::path(out) / "series/manifest.json");
    REQUIRE(run_cli("simulate --config " + cfg + " --jobs 4").exit_code == 0);
    CHECK(slurp(fs::path(out) / "series/store.csv") == single);
}

TEST_CASE("simulate resumes from the manifest, recomputing only what is missing") {
    const auto out = (kWork / "out_hour").string();
    const auto cfg = write_config("hour.conf", out, 3600);
    const auto full = slurp(fs::path(out) / "series/store.csv");

    // drop half the pairs from the manifest, keeping the stamp intact
    const auto manifest_path = fs::path(out) / "series/manifest.json";
    {
        auto manifest = nlohmann::json::parse(slurp(manifest_path));
        auto& completed = manifest.at("completed");
        completed.erase(completed.begin() + completed.size() / 2, completed.end());
        std::ofstream(manifest_path) << manifest.dump(2);
    }

    const auto r = run_cli("simulate --config " + cfg);
    CAPTURE(r.output);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("cached=10") != std::string::npos);
    CHECK(r.output.find("recompute=10") != std::string::npos);
    CHECK(slurp(fs::path(out) / "series/store.csv") == full);
}

namespace {

std::string day_config() {
    return write_config("day.conf", (kWork / "out_day").string(), 7200,
                        "deploy.scenarios = top,weighted,random\n"
                        "deploy.n = 5,10\n");
}

} // namespace

TEST_CASE("day pipeline: ingest and simulate") {
    const auto cfg = day_config();
    REQUIRE(run_cli("ingest --config " + cfg).exit_code == 0);
    const auto r = run_cli("simulate --config " + cfg);
    CAPTURE(r.output);
    REQUIRE(r.exit_code == 0);
}

TEST_CASE("day pipeline: dualhome") {
    const auto out = (kWork / "out_day").string();
    const auto r = run_cli("dualhome --config " + day_config());
    CAPTURE(r.output);
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(fs::path(out) / "dualhome/report.json"));
    CHECK(fs::exists(fs::path(out) / "dualhome/report.csv"));
    CHECK(fs::exists(fs::path(out) / "dualhome/effective.csv"));
}

TEST_CASE("day pipeline: deploy-eval emits one report per scenario-n combination") {
    const auto out = (kWork / "out_day").string();
    const auto r = run_cli("deploy-eval --config " + day_config());
    CAPTURE(r.output);
    CHECK(r.exit_code == 0);
    std::size_t reports = 0;
    for (const auto& entry : fs::directory_iterator(fs::path(out) / "deploy"))
        if (entry.path().filename().string().rfind("report_", 0) == 0 &&
            entry.path().extension() == ".json")
            ++reports;
    CHECK(reports == 6);
}

TEST_CASE("day pipeline: adversary curve reaches 1.0 at full deployment") {
    const auto out = (kWork / "out_day").string();
    const auto r = run_cli("adversary --config " + day_config());
    CAPTURE(r.output);
    CHECK(r.exit_code == 0);
    std::ifstream in(fs::path(out) / "adversary/visibility.csv");
    std::string line;
    bool found_full = false;
    while (std::getline(in, line)) {
        if (line.find("top,15,") == 0) {
            CHECK(line == "top,15,1,1");
            found_full = true;
        }
    }
    CHECK(found_full);
}

TEST_CASE("day pipeline: correlate skips series shorter than the joint-sample rule") {
    const auto out = (kWork / "out_day").string();
    const auto r = run_cli("correlate --config " + day_config());
    CAPTURE(r.output);
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(fs::path(out) / "correlate/tail_correlation.csv"));
}

TEST_CASE("day pipeline: report emits the tables") {
    const auto out = (kWork / "out_day").string();
    const auto r = run_cli("report --config " + day_config());
    CAPTURE(r.output);
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(fs::path(out) / "report/reduction_table.csv"));
    CHECK(fs::exists(fs::path(out) / "report/percentile_curve.csv"));
    CHECK(fs::exists(fs::path(out) / "report/distance_histogram.csv"));
}

TEST_CASE("zero-error measured input calibrates to the raw table") {
    const auto out = (kWork / "out_day").string();
    const auto store = io::load_series_store((fs::path(out) / "series/store.csv").string());
    const auto circuits = io::load_circuits(kFixtures + "/circuits.csv");

    // measured series identical to the simulated circuit sums
    const auto measured_path = (kWork / "zero_error_measured.csv").string();
    {
        std::ofstream m(measured_path);
        m << "circuit_id,interface,rtt_ms\n";
        for (const auto& c : circuits) {
            const auto& h1 = store.store.at(sim::pair_id(c.entry, c.middle));
            const auto& h2 = store.store.at(sim::pair_id(c.middle, c.exit));
            for (const auto* iface : {"satellite", "terrestrial"}) {
                const bool sat = std::string(iface) == "satellite";
                const auto series = sim::circuit_series(
                    c.id(), sat ? h1.satellite : h1.terrestrial,
                    sat ? h2.satellite : h2.terrestrial);
                for (double v : series.rtt_ms)
                    if (!std::isnan(v))
                        m << c.id() << ',' << iface << ',' << io::format_double(v) << "\n";
            }
        }
    }

    const auto cfg = write_config("zerr.conf", out, 7200,
                                  "deploy.scenarios = top,weighted,random\n"
                                  "deploy.n = 5,10\n");
    // swap the measured path in
    {
        auto text = slurp(kWork / "zerr.conf");
        const auto pos = text.find("measured = ");
        const auto eol = text.find('\n', pos);
        text = text.substr(0, pos) + "measured = " + measured_path + text.substr(eol);
        std::ofstream(kWork / "zerr.conf") << text;
    }

    const auto r = run_cli("calibrate --config " + std::string((kWork / "zerr.conf").string()));
    CAPTURE(r.output);
    CHECK(r.exit_code == 0);

    std::ifstream in(fs::path(out) / "calibrate/calibrated.csv");
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("id,", 0) == 0) continue;
        ++rows;
        // raw_ms == mean_ms == ci bounds, textually
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) f.push_back(field);
        REQUIRE(f.size() == 7);
        CHECK(f[3] == f[4]);
        CHECK(f[3] == f[5]);
        CHECK(f[3] == f[6]);
    }
    CHECK(rows > 0);
}

TEST_CASE("pair-level measured ids calibrate against pair series") {
    const auto out = (kWork / "out_day").string();
    const auto store = io::load_series_store((fs::path(out) / "series/store.csv").string());

    const auto measured_path = (kWork / "pair_measured.csv").string();
    {
        std::ofstream m(measured_path);
        m << "circuit_id,interface,rtt_ms\n";
        for (const auto& [id, pair] : store.store) {
            for (const auto* s : {&pair.satellite, &pair.terrestrial})
                for (double v : s->rtt_ms)
                    if (!std::isnan(v))
                        m << id << ',' << sim::to_string(s->iface) << ','
                          << io::format_double(v) << "\n";
        }
    }

    auto text = slurp(kWork / "day.conf");
    const auto pos = text.find("measured = ");
    const auto eol = text.find('\n', pos);
    text = text.substr(0, pos) + "measured = " + measured_path + text.substr(eol);
    std::ofstream(kWork / "pairlevel.conf") << text;

    const auto r = run_cli("calibrate --config " + (kWork / "pairlevel.conf").string());
    CAPTURE(r.output);
    CHECK(r.exit_code == 0);

    // zero error at pair granularity: calibrated equals raw, textually
    std::ifstream in(fs::path(out) / "calibrate/calibrated.csv");
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("id,", 0) == 0) continue;
        ++rows;
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) f.push_back(field);
        REQUIRE(f.size() == 7);
        CHECK(f[3] == f[4]);
    }
    CHECK(rows == store.store.size() * 2 * 3);  // pairs x interfaces x percentiles
}

TEST_CASE("stages refuse inputs from a different config") {
    const auto out = (kWork / "out_day").string();
    // same output dir, different K: hash changes
    const auto cfg = write_config("mismatch.conf", out, 7200, "k = 3\n");
    const auto r = run_cli("report --config " + cfg);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("different config") != std::string::npos);
}

TEST_CASE("seed is mandatory") {
    // a config without a seed line is rejected unless --seed is given
    auto text = slurp(kWork / "day.conf");
    const auto pos = text.find("seed = 11\n");
    REQUIRE(pos != std::string::npos);
    std::ofstream(kWork / "noseed.conf") << text.substr(0, pos) + text.substr(pos + 10);

    const auto r = run_cli("ingest --config " + (kWork / "noseed.conf").string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("seed") != std::string::npos);

    const auto out2 = (kWork / "out_seedflag").string();
    const auto r2 = run_cli("ingest --config " + (kWork / "noseed.conf").string() +
                            " --seed 77 --out " + out2);
    CAPTURE(r2.output);
    CHECK(r2.exit_code == 0);
}

TEST_CASE("missing upstream artifacts name the stage to run") {
    const auto cfg = write_config("fresh.conf", (kWork / "out_fresh").string(), 7200);
    const auto r = run_cli("report --config " + cfg);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("simulate") != std::string::npos);

    const auto r2 = run_cli("simulate --config " + cfg);
    CHECK(r2.exit_code == 2);
    CHECK(r2.output.find("ingest") != std::string::npos);
}
