#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <sys/wait.h>

#include "boxde/experiment.hpp"

using namespace boxde;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto d = fs::current_path() / "cli_work" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::map<std::string, std::string> csv_tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path().extension() == ".csv")
            out[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
    return out;
}

struct Captured {
    int code;
    std::string out;
    std::string err;
};

template <class F>
Captured capture(F&& f) {
    std::ostringstream out, err;
    const int code = f(out, err);
    return {code, out.str(), err.str()};
}

// Hand-made run artifacts for the analysis commands.
struct SyntheticRun {
    std::string function;
    std::string bchm;
    std::vector<double> violation;  // one value per generation after the first
    double final_error;
    double final_variance;
};

fs::path write_synthetic_sweep(const fs::path& root, const std::vector<SyntheticRun>& runs) {
    Json manifest;
    manifest["format"] = "boxde-sweep-manifest/1";
    manifest["runs"] = Json::array();
    std::map<std::string, int> counter;
    for (const auto& r : runs) {
        const int k = counter[r.function + "/" + r.bchm]++;
        const std::string rel = "classic/sbox/" + r.function + "/d2/i1/" + r.bchm + "/run" + std::to_string(k);
        Trajectory t;
        GenerationRecord g;
        g.population_size = 10;
        g.feasible_evaluations = 10;
        g.best_error = 1.0;
        g.max_component_variance = 1.0;
        t.push(g);
        for (std::size_t i = 0; i < r.violation.size(); ++i) {
            g.generation = i + 1;
            g.feasible_evaluations = 10 * (i + 2);
            g.infeasible_component_ratio = r.violation[i];
            g.best_error = i + 1 == r.violation.size() ? r.final_error : 1.0;
            g.max_component_variance = i + 1 == r.violation.size() ? r.final_variance : 1.0;
            t.push(g);
        }
        std::ostringstream csv;
        t.write_csv(csv);
        write_file(root / (rel + ".csv"), csv.str());
        Json summary;
        summary["config"]["budget"] = 10 * (r.violation.size() + 1);
        summary["optimum_known"] = true;
        write_file(root / (rel + ".json"), summary.dump());
        Json e;
        e["function"] = r.function;
        e["instance"] = 1;
        e["dimension"] = 2;
        e["mode"] = "sbox";
        e["engine"] = "classic";
        e["bchm"] = r.bchm;
        e["run"] = k;
        e["trajectory"] = rel + ".csv";
        e["summary"] = rel + ".json";
        manifest["runs"].push_back(e);
    }
    write_file(root / "manifest.json", manifest.dump(2));
    return root / "manifest.json";
}

std::vector<double> two_phase(double first, double second, std::size_t half) {
    std::vector<double> v(half, first);
    v.insert(v.end(), half, second);
    return v;
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(BOXDE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kMinimalRun = R"({"function": "sphere", "dimension": 3, "engine": "classic", "bchm": "mirror",
                              "instance": 2, "budget": 3000, "seed": 5})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("run writes a trajectory and a summary, deterministically") {
    const auto dir = fresh_dir("run");
    write_file(dir / "cfg.json", kMinimalRun);
    CommandOptions opt;
    opt.out = (dir / "a").string();
    auto r = capture([&](auto& o, auto& e) { return cmd_run(dir / "cfg.json", opt, o, e); });
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "a" / "run.csv"));
    CHECK(fs::exists(dir / "a" / "run.json"));
    opt.out = (dir / "b").string();
    r = capture([&](auto& o, auto& e) { return cmd_run(dir / "cfg.json", opt, o, e); });
    CHECK(r.code == 0);
    CHECK(read_file(dir / "a" / "run.csv") == read_file(dir / "b" / "run.csv"));

    const auto summary = read_json_file(dir / "a" / "run.json");
    CHECK(summary["config"]["bchm"] == "mirror");
    CHECK(summary["config"]["budget"] == 3000);
    CHECK(summary.contains("final_class"));
    CHECK(summary.contains("wall_time_seconds"));
    // The config echo is itself a valid run config reproducing the run.
    const auto echoed = parse_run_config(summary["config"]);
    CHECK(to_json(echoed) == summary["config"]);
}

TEST_CASE("schema violations exit with code 2 and name the field") {
    const auto dir = fresh_dir("schema");
    CommandOptions opt;
    opt.out = dir.string();
    auto attempt = [&](const std::string& text) {
        write_file(dir / "cfg.json", text);
        return capture([&](auto& o, auto& e) { return cmd_run(dir / "cfg.json", opt, o, e); });
    };
    auto r = attempt(R"({"function": "sphere", "dimension": 3, "engine": "classic"})");
    CHECK(r.code == 2);
    CHECK(r.err.find("bchm") != std::string::npos);
    r = attempt(R"({"function": "sphere", "dimension": 3, "engine": "classic", "bchm": "sat", "budgte": 10})");
    CHECK(r.code == 2);
    CHECK(r.err.find("budgte") != std::string::npos);
    r = attempt(R"({"function": "sphere", "dimension": 3, "engine": "classic", "bchm": "clip"})");
    CHECK(r.code == 2);
    r = attempt(R"({"function": "sphere", "dimension": 3, "engine": "classic", "bchm": "sat", "budget": 0})");
    CHECK(r.code == 2);
    CHECK(r.err.find("budget") != std::string::npos);
    r = attempt(R"({"function": "sphere", )");
    CHECK(r.code == 2);
    r = attempt(R"({"function": "sphere", "dimension": 3, "engine": "classic", "bchm": "sat",
                    "classic": {"population_size": 50, "F": 0.5}})");
    CHECK(r.code == 2);
    CHECK(r.err.find("classic.F") != std::string::npos);
}

TEST_CASE("binary exit codes") {
    const auto dir = fresh_dir("binary");
    write_file(dir / "ok.json", kMinimalRun);
    write_file(dir / "bad.json", R"({"function": "sphere", "dimension": 3, "engine": "classic"})");
    CHECK(run_binary("run --config " + (dir / "ok.json").string() + " --out " + (dir / "o").string()) == 0);
    CHECK(run_binary("run --config " + (dir / "bad.json").string()) == 2);
    CHECK(run_binary("list") == 0);
    CHECK(run_binary("rank --manifest " + (dir / "nope.json").string()) == 1);
}

TEST_CASE("sweep layout, resume and schedule independence") {
    const auto dir = fresh_dir("sweep");
    write_file(dir / "sweep.json", R"({"functions": ["sphere", "rastrigin"], "instances": [1], "dimensions": [2],
                                       "engines": ["classic"], "bchms": ["sat", "expTarget"], "runs_per_cell": 3,
                                       "budget_multiplier": 300, "base_seed": 7})");
    CommandOptions opt;
    opt.out = (dir / "p1").string();
    opt.parallelism = 1;
    auto r = capture([&](auto& o, auto& e) { return cmd_sweep(dir / "sweep.json", opt, o, e); });
    REQUIRE(r.code == 0);
    const auto tree1 = csv_tree(dir / "p1");
    CHECK(tree1.size() == 12);
    CHECK(tree1.count("classic/sbox/rastrigin/d2/i1/expTarget/run2.csv") == 1);
    const auto manifest = read_json_file(dir / "p1" / "manifest.json");
    CHECK(manifest["runs"].size() == 12);

    fs::remove(dir / "p1" / "classic/sbox/sphere/d2/i1/sat/run1.csv");
    r = capture([&](auto& o, auto& e) { return cmd_sweep(dir / "sweep.json", opt, o, e); });
    REQUIRE(r.code == 0);
    CHECK(r.out.find("1 executed") != std::string::npos);
    CHECK(csv_tree(dir / "p1") == tree1);

    opt.out = (dir / "p8").string();
    opt.parallelism = 8;
    r = capture([&](auto& o, auto& e) { return cmd_sweep(dir / "sweep.json", opt, o, e); });
    REQUIRE(r.code == 0);
    CHECK(csv_tree(dir / "p8") == tree1);

    const auto m = dir / "p1" / "manifest.json";
    CHECK(capture([&](auto& o, auto& e) { return cmd_classify(m, {}, o, e); }).code == 0);
    CHECK(capture([&](auto& o, auto& e) { return cmd_cluster(m, {}, o, e); }).code == 0);
    CHECK(capture([&](auto& o, auto& e) { return cmd_rank(m, {}, o, e); }).code == 0);
    for (const char* f : {"classes.csv", "classes_runs.csv", "ranking.csv", "similarity_violation_probability.csv",
                          "dendrogram_best_so_far.json", "dendrogram_population_variance.nwk"})
        CHECK(fs::exists(dir / "p1" / "analysis" / f));
}

TEST_CASE("sweep config rejects a fixed budget and unknown keys") {
    const auto dir = fresh_dir("sweep_schema");
    CommandOptions opt;
    opt.out = dir.string();
    write_file(dir / "a.json", R"({"functions": ["sphere"], "bchms": ["sat"], "budget": 10})");
    CHECK(capture([&](auto& o, auto& e) { return cmd_sweep(dir / "a.json", opt, o, e); }).code == 2);
    write_file(dir / "b.json", R"({"functions": ["sphere"], "bchms": ["sat"], "runs": 3})");
    CHECK(capture([&](auto& o, auto& e) { return cmd_sweep(dir / "b.json", opt, o, e); }).code == 2);
    write_file(dir / "c.json", R"({"functions": ["sphere"], "bchms": []})");
    CHECK(capture([&](auto& o, auto& e) { return cmd_sweep(dir / "c.json", opt, o, e); }).code == 2);
}

TEST_CASE("classify marks a converged run GB") {
    const auto dir = fresh_dir("classify");
    const auto m = write_synthetic_sweep(dir, {{"sphere", "sat", {0.1, 0.0}, 1e-8, 1e-9},
                                               {"sphere", "mirror", {0.1, 0.0}, 1.0, 1e-9}});
    REQUIRE(capture([&](auto& o, auto& e) { return cmd_classify(m, {}, o, e); }).code == 0);
    const auto table = read_file(dir / "analysis" / "classes.csv");
    CHECK(table.find("classic,sbox,sphere,2,1,sat,1,1,0,0,0,") != std::string::npos);
    CHECK(table.find("classic,sbox,sphere,2,1,mirror,1,0,0,1,0,") != std::string::npos);
}

TEST_CASE("cluster reproduces the hand-computed merge order") {
    const auto dir = fresh_dir("cluster");
    // Two-phase rows whose cosines are about 0.9 (A,B), 0.1 (A,C) and 0.52 (B,C).
    const double tb = std::acos(0.9);
    const double tc = std::acos(0.1);
    const auto m = write_synthetic_sweep(
        dir, {{"f", "A", two_phase(1.0, 0.0, 50), 0, 0},
              {"f", "B", two_phase(std::cos(tb), std::sin(tb), 50), 0, 0},
              {"f", "C", two_phase(std::cos(tc), std::sin(tc), 50), 0, 0}});
    CommandOptions opt;
    opt.metrics = {"violation_probability"};
    REQUIRE(capture([&](auto& o, auto& e) { return cmd_cluster(m, opt, o, e); }).code == 0);
    const auto j = read_json_file(dir / "analysis" / "dendrogram_violation_probability.json");
    CHECK(j["height"].get<double>() == doctest::Approx(0.9).epsilon(0.02));
    CHECK(j["children"][0]["height"].get<double>() == doctest::Approx(0.1).epsilon(0.05));
    CHECK(j["children"][0]["children"][0]["label"] == "A");
    CHECK(j["children"][0]["children"][1]["label"] == "B");
    CHECK(j["children"][1]["label"] == "C");
    const auto sim = read_file(dir / "analysis" / "similarity_violation_probability.csv");
    CHECK(sim.rfind("label,A,B,C\n", 0) == 0);
}

TEST_CASE("rank reproduces the hand-computed mean ranks") {
    const auto dir = fresh_dir("rank");
    const auto m = write_synthetic_sweep(dir, {{"f1", "A", {0}, 1e-9, 1}, {"f1", "B", {0}, 1e-3, 1},
                                               {"f2", "A", {0}, 1e-5, 1}, {"f2", "B", {0}, 1e-2, 1},
                                               {"f3", "A", {0}, 1.0, 1}, {"f3", "B", {0}, 0.5, 1}});
    REQUIRE(capture([&](auto& o, auto& e) { return cmd_rank(m, {}, o, e); }).code == 0);
    const auto csv = read_file(dir / "analysis" / "ranking.csv");
    std::istringstream in(csv);
    std::string header, a, b;
    std::getline(in, header);
    std::getline(in, a);
    std::getline(in, b);
    CHECK(a.rfind("A,1.3333333333333333", 0) == 0);
    CHECK(b.rfind("B,1.6666666666666667", 0) == 0);
}

TEST_CASE("missing artifacts are listed and exit 1") {
    const auto dir = fresh_dir("gaps");
    const auto m = write_synthetic_sweep(dir, {{"f", "A", {0.1}, 0, 0}, {"f", "B", {0.1}, 0, 0}});
    fs::remove(dir / "classic/sbox/f/d2/i1/B/run0.csv");
    const auto r = capture([&](auto& o, auto& e) { return cmd_rank(m, {}, o, e); });
    CHECK(r.code == 1);
    CHECK(r.err.find("classic/sbox/f/d2/i1/B/run0.csv") != std::string::npos);
    CHECK(capture([&](auto& o, auto& e) { return cmd_cluster(m, {}, o, e); }).code == 1);
    CHECK(capture([&](auto& o, auto& e) { return cmd_classify(m, {}, o, e); }).code == 1);
}

TEST_CASE("seed derivation") {
    const auto s = derive_seed(7, "sphere", 1, 20, EngineKind::LShade, Method::Beta, 0);
    CHECK(s == derive_seed(7, "sphere", 1, 20, EngineKind::LShade, Method::Beta, 0));
    CHECK(s != derive_seed(7, "sphere", 1, 20, EngineKind::LShade, Method::Beta, 1));
    CHECK(s != derive_seed(8, "sphere", 1, 20, EngineKind::LShade, Method::Beta, 0));
    CHECK(s != derive_seed(7, "sphere", 2, 20, EngineKind::LShade, Method::Beta, 0));
    CHECK(s != derive_seed(7, "sphere", 1, 20, EngineKind::Classic, Method::Beta, 0));
}

TEST_CASE("list prints functions and method ids") {
    std::ostringstream out;
    CHECK(cmd_list(out) == 0);
    for (auto m : kAllMethods) CHECK(out.str().find(std::string(method_id(m))) != std::string::npos);
    CHECK(out.str().find("linear_slope") != std::string::npos);
}

}
