#include "boxde/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace boxde {

namespace fs = std::filesystem;

namespace {

// Walks one JSON object, collecting schema problems instead of throwing
// on the first one, and reports keys nobody asked for.
class Reader {
public:
    Reader(const Json& j, std::string prefix, std::vector<std::string>& problems)
        : j_(j), prefix_(std::move(prefix)), problems_(problems) {
        if (!j_.is_object()) problems_.push_back(where("") + "must be an object");
    }

    bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

    const Json* raw(const std::string& key) {
        seen_.insert(key);
        if (!has(key) || j_.at(key).is_null()) return nullptr;
        return &j_.at(key);
    }

    std::optional<std::string> string(const std::string& key, bool required = false) {
        const Json* v = lookup(key, required);
        if (v == nullptr) return std::nullopt;
        if (!v->is_string()) return fail<std::string>(key, "must be a string");
        return v->get<std::string>();
    }

    std::optional<double> real(const std::string& key, bool required = false) {
        const Json* v = lookup(key, required);
        if (v == nullptr) return std::nullopt;
        if (!v->is_number()) return fail<double>(key, "must be a number");
        return v->get<double>();
    }

    std::optional<std::int64_t> integer(const std::string& key, bool required = false) {
        const Json* v = lookup(key, required);
        if (v == nullptr) return std::nullopt;
        if (!v->is_number_integer()) return fail<std::int64_t>(key, "must be an integer");
        return v->get<std::int64_t>();
    }

    std::optional<std::uint64_t> count(const std::string& key, bool required = false) {
        const Json* v = lookup(key, required);
        if (v == nullptr) return std::nullopt;
        if (!v->is_number_integer() || v->get<std::int64_t>() < 0)
            return fail<std::uint64_t>(key, "must be a non-negative integer");
        return v->get<std::uint64_t>();
    }

    std::optional<bool> boolean(const std::string& key) {
        const Json* v = lookup(key, false);
        if (v == nullptr) return std::nullopt;
        if (!v->is_boolean()) return fail<bool>(key, "must be a boolean");
        return v->get<bool>();
    }

    template <class T, class Parse>
    std::optional<std::vector<T>> list(const std::string& key, bool required, Parse parse) {
        const Json* v = lookup(key, required);
        if (v == nullptr) return std::nullopt;
        if (!v->is_array() || v->empty()) return fail<std::vector<T>>(key, "must be a non-empty list");
        std::vector<T> out;
        for (const auto& item : *v) {
            try {
                out.push_back(parse(item));
            } catch (const std::exception& e) {
                return fail<std::vector<T>>(key, e.what());
            }
        }
        return out;
    }

    std::optional<Reader> object(const std::string& key) {
        const Json* v = lookup(key, false);
        if (v == nullptr) return std::nullopt;
        return Reader(*v, prefix_.empty() ? key : prefix_ + "." + key, problems_);
    }

    void problem(const std::string& key, const std::string& msg) { problems_.push_back(where(key) + msg); }

    void finish() {
        if (!j_.is_object()) return;
        for (const auto& [k, _] : j_.items())
            if (!seen_.contains(k)) problems_.push_back(where(k) + "unknown key");
    }

private:
    const Json* lookup(const std::string& key, bool required) {
        const Json* v = raw(key);
        if (v == nullptr && required) problems_.push_back(where(key) + "missing required field");
        return v;
    }

    template <class T>
    std::optional<T> fail(const std::string& key, const std::string& msg) {
        problems_.push_back(where(key) + msg);
        return std::nullopt;
    }

    std::string where(const std::string& key) const {
        std::string path = prefix_.empty() ? key : (key.empty() ? prefix_ : prefix_ + "." + key);
        return path.empty() ? "" : path + ": ";
    }

    const Json& j_;
    std::string prefix_;
    std::vector<std::string>& problems_;
    std::set<std::string> seen_;
};

template <class T>
void assign(T& dst, const std::optional<T>& v) {
    if (v) dst = *v;
}

void read_settings(Reader& r, AlgorithmSettings& s) {
    assign(s.budget_multiplier, r.count("budget_multiplier"));
    if (auto b = r.count("budget")) s.budget = *b;
    if (auto t = r.real("target_error")) s.target_error = *t;
    assign(s.count_infeasible_evals, r.boolean("count_infeasible_evals"));
    assign(s.max_generations, r.count("max_generations"));
    if (auto c = r.object("classic")) {
        if (auto v = c->count("population_size")) s.classic.population_size = *v;
        assign(s.classic.scale_factor, c->real("scale_factor"));
        assign(s.classic.crossover_rate, c->real("crossover_rate"));
        c->finish();
    }
    if (auto l = r.object("lshade")) {
        if (auto v = l->count("memory_size")) s.lshade.memory_size = *v;
        assign(s.lshade.archive_rate, l->real("archive_rate"));
        assign(s.lshade.init_population_factor, l->real("init_population_factor"));
        if (auto v = l->count("min_population")) s.lshade.min_population = *v;
        assign(s.lshade.p_max, l->real("p_max"));
        assign(s.lshade.reduction_enabled, l->boolean("reduction_enabled"));
        l->finish();
    }
    assign(s.beta_epsilon, r.real("beta_epsilon"));
    if (auto a = r.object("adaptive")) {
        if (auto v = a->count("update_period")) s.adaptive.update_period = *v;
        assign(s.adaptive.floor_probability, a->real("floor_probability"));
        a->finish();
    }
    if (auto c = r.object("classifier")) {
        assign(s.classifier.error_threshold, c->real("error_threshold"));
        assign(s.classifier.variance_threshold, c->real("variance_threshold"));
        c->finish();
    }
}

Json settings_json(const AlgorithmSettings& s) {
    Json j;
    j["budget_multiplier"] = s.budget_multiplier;
    j["budget"] = s.budget ? Json(*s.budget) : Json(nullptr);
    j["target_error"] = s.target_error ? Json(*s.target_error) : Json(nullptr);
    j["count_infeasible_evals"] = s.count_infeasible_evals;
    j["max_generations"] = s.max_generations;
    j["classic"] = {{"population_size", s.classic.population_size},
                    {"scale_factor", s.classic.scale_factor},
                    {"crossover_rate", s.classic.crossover_rate}};
    j["lshade"] = {{"memory_size", s.lshade.memory_size},
                   {"archive_rate", s.lshade.archive_rate},
                   {"init_population_factor", s.lshade.init_population_factor},
                   {"min_population", s.lshade.min_population},
                   {"p_max", s.lshade.p_max},
                   {"reduction_enabled", s.lshade.reduction_enabled}};
    j["beta_epsilon"] = s.beta_epsilon;
    j["adaptive"] = {{"update_period", s.adaptive.update_period},
                     {"floor_probability", s.adaptive.floor_probability}};
    j["classifier"] = {{"error_threshold", s.classifier.error_threshold},
                       {"variance_threshold", s.classifier.variance_threshold}};
    return j;
}

bool known_function(const std::string& name) {
    for (const auto& e : function_catalog())
        if (e.name == name) return true;
    return ProblemRegistry::global().contains(name);
}

std::string parse_function_name(const Json& item) {
    auto name = item.get<std::string>();
    if (!known_function(name)) throw std::invalid_argument("unknown function: " + name);
    return name;
}

template <class F>
auto parse_enum(Reader& r, const std::string& key, bool required, F parse) -> std::optional<decltype(parse(""))> {
    auto s = r.string(key, required);
    if (!s) return std::nullopt;
    try {
        return parse(*s);
    } catch (const std::exception& e) {
        r.problem(key, e.what());
        return std::nullopt;
    }
}

void write_atomically(const fs::path& p, const std::string& contents) {
    fs::create_directories(p.parent_path());
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + tmp.string());
        f << contents;
        if (!f) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, p);
}

std::string read_text(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

// JSON has no infinity; non-finite values are stored as strings.
Json json_real(double v) { return std::isfinite(v) ? Json(v) : Json(format_real(v)); }

std::string format_schema_error(const SchemaError& e) {
    std::string msg = "config error:\n";
    for (const auto& p : e.problems()) msg += "  " + p + "\n";
    return msg;
}

}  // namespace

SchemaError::SchemaError(std::vector<std::string> problems)
    : std::invalid_argument([&] {
          std::string msg = "schema violation:";
          for (const auto& p : problems) msg += " " + p + ";";
          return msg;
      }()),
      problems_(std::move(problems)) {}

Json read_json_file(const fs::path& p) {
    const auto text = read_text(p);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError({p.string() + ": not valid JSON (" + std::string(e.what()) + ")"});
    }
}

RunSpec parse_run_config(const Json& j) {
    std::vector<std::string> problems;
    Reader r(j, "", problems);
    RunSpec s;
    if (auto f = r.string("function", true)) {
        if (!known_function(*f)) r.problem("function", "unknown function: " + *f);
        s.function = *f;
    }
    assign(s.instance, r.integer("instance"));
    if (auto d = r.count("dimension", true)) {
        if (*d < 2) r.problem("dimension", "must be at least 2");
        s.dimension = *d;
    }
    assign(s.mode, parse_enum(r, "mode", false, parse_mode));
    assign(s.engine, parse_enum(r, "engine", true, parse_engine));
    assign(s.bchm, parse_enum(r, "bchm", true, parse_method));
    assign(s.seed, r.count("seed"));
    if (const Json* loc = r.raw("optimum_location")) {
        if (!loc->is_array() || !std::all_of(loc->begin(), loc->end(), [](const Json& v) { return v.is_number(); }))
            r.problem("optimum_location", "must be a list of numbers");
        else
            s.optimum_location = loc->get<Vector>();
    }
    assign(s.optimum_value, r.real("optimum_value"));
    read_settings(r, s.settings);
    assign(s.output_directory, r.string("output_directory"));
    assign(s.name, r.string("name"));
    r.finish();
    if (s.optimum_location && s.dimension != 0 && s.optimum_location->size() != s.dimension)
        problems.emplace_back("optimum_location: length must equal dimension");
    if (!problems.empty()) throw SchemaError(std::move(problems));
    return s;
}

SweepConfig parse_sweep_config(const Json& j) {
    std::vector<std::string> problems;
    Reader r(j, "", problems);
    SweepConfig c;
    assign(c.functions, r.list<std::string>("functions", true, parse_function_name));
    assign(c.instances, r.list<std::int64_t>("instances", false, [](const Json& v) {
        if (!v.is_number_integer()) throw std::invalid_argument("instances must be integers");
        return v.get<std::int64_t>();
    }));
    assign(c.dimensions, r.list<std::size_t>("dimensions", false, [](const Json& v) {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 2)
            throw std::invalid_argument("dimensions must be integers >= 2");
        return v.get<std::size_t>();
    }));
    assign(c.modes, r.list<PlacementMode>("modes", false,
                                          [](const Json& v) { return parse_mode(v.get<std::string>()); }));
    assign(c.engines, r.list<EngineKind>("engines", false,
                                         [](const Json& v) { return parse_engine(v.get<std::string>()); }));
    assign(c.bchms, r.list<Method>("bchms", true, [](const Json& v) { return parse_method(v.get<std::string>()); }));
    if (auto v = r.count("runs_per_cell")) {
        if (*v < 1) r.problem("runs_per_cell", "must be at least 1");
        c.runs_per_cell = *v;
    }
    assign(c.base_seed, r.count("base_seed"));
    assign(c.output_directory, r.string("output_directory"));
    if (auto v = r.count("parallelism")) c.parallelism = std::max<std::size_t>(1, *v);
    read_settings(r, c.settings);
    r.finish();
    if (c.settings.budget) problems.emplace_back("budget: sweeps size the budget with budget_multiplier");
    if (!problems.empty()) throw SchemaError(std::move(problems));
    return c;
}

Json to_json(const RunSpec& s) {
    Json j;
    j["function"] = s.function;
    j["instance"] = s.instance;
    j["dimension"] = s.dimension;
    j["mode"] = mode_name(s.mode);
    j["engine"] = engine_name(s.engine);
    j["bchm"] = method_id(s.bchm);
    j["seed"] = s.seed;
    j["optimum_location"] = s.optimum_location ? Json(*s.optimum_location) : Json(nullptr);
    j["optimum_value"] = s.optimum_value;
    const Json settings = settings_json(s.settings);
    for (const auto& [k, v] : settings.items()) j[k] = v;
    j["budget"] = s.settings.budget ? *s.settings.budget : s.settings.budget_multiplier * s.dimension;
    j["output_directory"] = s.output_directory;
    j["name"] = s.name;
    return j;
}

Json to_json(const SweepConfig& c) {
    Json j;
    j["functions"] = c.functions;
    j["instances"] = c.instances;
    j["dimensions"] = c.dimensions;
    j["modes"] = Json::array();
    for (auto m : c.modes) j["modes"].push_back(mode_name(m));
    j["engines"] = Json::array();
    for (auto e : c.engines) j["engines"].push_back(engine_name(e));
    j["bchms"] = Json::array();
    for (auto m : c.bchms) j["bchms"].push_back(method_id(m));
    j["runs_per_cell"] = c.runs_per_cell;
    j["base_seed"] = c.base_seed;
    j["output_directory"] = c.output_directory;
    j["parallelism"] = c.parallelism;
    const Json settings = settings_json(c.settings);
    for (const auto& [k, v] : settings.items()) j[k] = v;
    j.erase("budget");
    return j;
}

std::shared_ptr<const Problem> resolve_problem(const RunSpec& spec) {
    for (const auto& e : function_catalog()) {
        if (e.name != spec.function) continue;
        if (spec.optimum_location)
            return std::make_shared<BenchmarkProblem>(e.id, spec.instance, spec.mode, *spec.optimum_location,
                                                      spec.optimum_value);
        return std::make_shared<BenchmarkProblem>(make_instance(e.id, spec.instance, spec.dimension, spec.mode));
    }
    auto p = ProblemRegistry::global().create(spec.function, spec.dimension);
    if (p->dimension() != spec.dimension) throw std::runtime_error("plugin returned a problem of the wrong dimension");
    return p;
}

RunConfig make_run_config(const RunSpec& spec) {
    RunConfig cfg;
    cfg.problem = resolve_problem(spec);
    cfg.engine = spec.engine;
    cfg.bchm = spec.bchm;
    const auto& s = spec.settings;
    cfg.budget = s.budget ? *s.budget : s.budget_multiplier * spec.dimension;
    cfg.target_error = s.target_error;
    cfg.seed = spec.seed;
    cfg.count_infeasible_evals = s.count_infeasible_evals;
    cfg.max_generations = s.max_generations;
    cfg.classic = s.classic;
    cfg.shade = s.lshade;
    cfg.beta_epsilon = s.beta_epsilon;
    cfg.adaptive = s.adaptive;
    cfg.classifier = s.classifier;
    return cfg;
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view function, std::int64_t instance,
                          std::size_t dimension, EngineKind engine, Method bchm, std::size_t run_index) {
    std::uint64_t h = mix64(base_seed);
    auto absorb = [&h](std::uint64_t v) { h = mix64(h ^ mix64(v)); };
    absorb(hash_string(function));
    absorb(static_cast<std::uint64_t>(instance));
    absorb(dimension);
    absorb(hash_string(engine_name(engine)));
    absorb(hash_string(method_id(bchm)));
    absorb(run_index);
    return h;
}

Json execute_run(const RunSpec& spec, const fs::path& dir) {
    const auto cfg = make_run_config(spec);
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = run(cfg);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::ostringstream csv;
    result.trajectory.write_csv(csv);

    Json summary;
    summary["config"] = to_json(spec);
    summary["problem"] = cfg.problem->name();
    summary["final_class"] = behaviour_name(result.behaviour);
    summary["optimum_known"] = result.optimum_known;
    summary["final_error"] = json_real(result.final_best_error);
    summary["best_fitness"] = json_real(result.best_fitness);
    summary["final_max_component_variance"] = json_real(result.final_stats.max_variance());
    summary["final_mean_component_variance"] = json_real(result.final_stats.mean_variance());
    summary["evaluations"] = result.evaluations;
    summary["generations"] = result.generations;
    if (result.adaptive) summary["adaptive_probabilities"] = result.adaptive->probabilities;
    summary["wall_time_seconds"] = wall;

    // Summary last: its presence marks the run as complete for resume.
    write_atomically(dir / (spec.name + ".csv"), csv.str());
    write_atomically(dir / (spec.name + ".json"), summary.dump(2) + "\n");
    return summary;
}

void write_similarity_csv(std::ostream& out, const std::vector<std::string>& labels,
                          const std::vector<Vector>& similarity) {
    out << "label";
    for (const auto& l : labels) out << ',' << l;
    out << '\n';
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out << labels[i];
        for (double v : similarity[i]) out << ',' << format_real(v);
        out << '\n';
    }
}

int cmd_run(const fs::path& config, const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    RunSpec spec;
    try {
        spec = parse_run_config(read_json_file(config));
        if (opt.out) spec.output_directory = *opt.out;
        if (opt.count_infeasible_evals) spec.settings.count_infeasible_evals = true;
        validate(make_run_config(spec));
    } catch (const SchemaError& e) {
        err << format_schema_error(e);
        return 2;
    } catch (const ConfigError& e) {
        err << format_schema_error(SchemaError(e.fields()));
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    try {
        const auto summary = execute_run(spec, spec.output_directory);
        out << "run " << spec.name << ": class " << summary["final_class"].get<std::string>() << ", final error "
            << summary["final_error"].dump() << '\n';
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

namespace {

struct CellRun {
    RunSpec spec;
    fs::path rel_dir;
};

fs::path cell_dir(EngineKind e, PlacementMode m, const std::string& fn, std::size_t dim, std::int64_t inst,
                  Method b) {
    return fs::path(std::string(engine_name(e))) / std::string(mode_name(m)) / fn / ("d" + std::to_string(dim)) /
           ("i" + std::to_string(inst)) / std::string(method_id(b));
}

bool run_complete(const fs::path& dir, const std::string& name) {
    const auto summary = dir / (name + ".json");
    if (!fs::exists(dir / (name + ".csv")) || !fs::exists(summary)) return false;
    try {
        return Json::accept(read_text(summary));
    } catch (const std::exception&) {
        return false;
    }
}

struct ManifestEntry {
    std::string function;
    std::int64_t instance;
    std::size_t dimension;
    std::string mode;
    std::string engine;
    std::string bchm;
    std::size_t run;
    std::string trajectory;
    std::string summary;
};

std::vector<ManifestEntry> read_manifest(const fs::path& manifest) {
    const auto j = read_json_file(manifest);
    std::vector<ManifestEntry> out;
    if (!j.contains("runs") || !j["runs"].is_array()) throw std::runtime_error("manifest has no runs list");
    for (const auto& r : j["runs"]) {
        out.push_back({r.at("function").get<std::string>(), r.at("instance").get<std::int64_t>(),
                       r.at("dimension").get<std::size_t>(), r.at("mode").get<std::string>(),
                       r.at("engine").get<std::string>(), r.at("bchm").get<std::string>(),
                       r.at("run").get<std::size_t>(), r.at("trajectory").get<std::string>(),
                       r.at("summary").get<std::string>()});
    }
    return out;
}

// Returns false (after listing them) when referenced files are missing.
bool check_gaps(const fs::path& root, const std::vector<ManifestEntry>& entries, std::ostream& err) {
    std::vector<std::string> gaps;
    for (const auto& e : entries) {
        if (!fs::exists(root / e.trajectory)) gaps.push_back(e.trajectory);
        if (!fs::exists(root / e.summary)) gaps.push_back(e.summary);
    }
    if (gaps.empty()) return true;
    err << "missing run artifacts:\n";
    for (const auto& g : gaps) err << "  " << g << '\n';
    return false;
}

Trajectory load_trajectory(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + p.string());
    return Trajectory::read_csv(f);
}

fs::path analysis_dir(const fs::path& manifest, const CommandOptions& opt) {
    return opt.out ? fs::path(*opt.out) : manifest.parent_path() / "analysis";
}

std::string cell_key(const ManifestEntry& e) {
    return e.engine + "," + e.mode + "," + e.function + "," + std::to_string(e.dimension) + "," +
           std::to_string(e.instance) + "," + e.bchm;
}

}  // namespace

int cmd_sweep(const fs::path& config, const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    SweepConfig cfg;
    try {
        cfg = parse_sweep_config(read_json_file(config));
        if (opt.out) cfg.output_directory = *opt.out;
        if (opt.parallelism) cfg.parallelism = std::max<std::size_t>(1, *opt.parallelism);
        if (opt.count_infeasible_evals) cfg.settings.count_infeasible_evals = true;
    } catch (const SchemaError& e) {
        err << format_schema_error(e);
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    std::vector<CellRun> cells;
    for (auto engine : cfg.engines)
        for (auto mode : cfg.modes)
            for (const auto& fn : cfg.functions)
                for (auto dim : cfg.dimensions)
                    for (auto inst : cfg.instances)
                        for (auto bchm : cfg.bchms)
                            for (std::size_t k = 0; k < cfg.runs_per_cell; ++k) {
                                CellRun c;
                                c.spec.function = fn;
                                c.spec.instance = inst;
                                c.spec.dimension = dim;
                                c.spec.mode = mode;
                                c.spec.engine = engine;
                                c.spec.bchm = bchm;
                                c.spec.seed = derive_seed(cfg.base_seed, fn, inst, dim, engine, bchm, k);
                                c.spec.settings = cfg.settings;
                                c.spec.name = "run" + std::to_string(k);
                                c.rel_dir = cell_dir(engine, mode, fn, dim, inst, bchm);
                                c.spec.output_directory = (fs::path(cfg.output_directory) / c.rel_dir).string();
                                cells.push_back(std::move(c));
                            }

    try {
        validate(make_run_config(cells.front().spec));
    } catch (const ConfigError& e) {
        err << format_schema_error(SchemaError(e.fields()));
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> executed{0};
    std::mutex err_mutex;
    std::vector<std::string> failures;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            const auto& c = cells[i];
            const fs::path dir = c.spec.output_directory;
            if (run_complete(dir, c.spec.name)) continue;
            try {
                execute_run(c.spec, dir);
                ++executed;
            } catch (const std::exception& e) {
                std::lock_guard lock(err_mutex);
                failures.push_back((c.rel_dir / c.spec.name).string() + ": " + e.what());
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const std::size_t workers = std::min(cfg.parallelism, cells.size());
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (!failures.empty()) {
        std::sort(failures.begin(), failures.end());
        for (const auto& f : failures) err << "error: " << f << '\n';
        return 1;
    }

    Json manifest;
    manifest["format"] = "boxde-sweep-manifest/1";
    manifest["config"] = to_json(cfg);
    manifest["runs"] = Json::array();
    for (const auto& c : cells) {
        Json e;
        e["function"] = c.spec.function;
        e["instance"] = c.spec.instance;
        e["dimension"] = c.spec.dimension;
        e["mode"] = mode_name(c.spec.mode);
        e["engine"] = engine_name(c.spec.engine);
        e["bchm"] = method_id(c.spec.bchm);
        e["run"] = std::stoul(c.spec.name.substr(3));
        e["seed"] = c.spec.seed;
        e["budget"] = make_run_config(c.spec).budget;
        e["trajectory"] = (c.rel_dir / (c.spec.name + ".csv")).generic_string();
        e["summary"] = (c.rel_dir / (c.spec.name + ".json")).generic_string();
        manifest["runs"].push_back(std::move(e));
    }
    try {
        write_atomically(fs::path(cfg.output_directory) / "manifest.json", manifest.dump(2) + "\n");
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    out << "sweep: " << cells.size() << " runs (" << executed.load() << " executed, "
        << cells.size() - executed.load() << " reused) -> " << (fs::path(cfg.output_directory) / "manifest.json").string()
        << '\n';
    return 0;
}

int cmd_classify(const fs::path& manifest, const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        const auto entries = read_manifest(manifest);
        const fs::path root = manifest.parent_path();
        if (!check_gaps(root, entries, err)) return 1;

        struct Cell {
            ManifestEntry first;
            std::vector<std::pair<double, BehaviourClass>> runs;
        };
        std::map<std::string, Cell> cells;
        std::ostringstream per_run;
        per_run << "engine,mode,function,dimension,instance,bchm,run,final_error,final_max_component_variance,class\n";
        for (const auto& e : entries) {
            const auto summary = read_json_file(root / e.summary);
            const auto traj = load_trajectory(root / e.trajectory);
            if (traj.empty()) throw std::runtime_error("empty trajectory " + e.trajectory);
            ClassifierConfig cc;
            if (summary.contains("config") && summary["config"].contains("classifier")) {
                cc.error_threshold = summary["config"]["classifier"]["error_threshold"].get<double>();
                cc.variance_threshold = summary["config"]["classifier"]["variance_threshold"].get<double>();
            }
            const bool known = summary.value("optimum_known", true);
            const auto& last = traj.back();
            const double error = last.best_error;
            const auto cls = classify(known ? error : kInfinity, last.max_component_variance, cc);
            per_run << cell_key(e) << ',' << e.run << ',' << format_real(error) << ','
                    << format_real(last.max_component_variance) << ',' << behaviour_name(cls) << '\n';
            auto& cell = cells.try_emplace(cell_key(e), Cell{e, {}}).first->second;
            cell.runs.emplace_back(error, cls);
        }

        std::ostringstream table;
        table << "engine,mode,function,dimension,instance,bchm,runs,GB,SF,PC,BB,median_error,median_run_class\n";
        for (auto& [key, cell] : cells) {
            std::map<BehaviourClass, std::size_t> counts;
            for (const auto& [_, c] : cell.runs) ++counts[c];
            auto sorted = cell.runs;
            std::stable_sort(sorted.begin(), sorted.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            const auto& mid = sorted[(sorted.size() - 1) / 2];
            table << key << ',' << cell.runs.size() << ',' << counts[BehaviourClass::GB] << ','
                  << counts[BehaviourClass::SF] << ',' << counts[BehaviourClass::PC] << ','
                  << counts[BehaviourClass::BB] << ',' << format_real(mid.first) << ',' << behaviour_name(mid.second)
                  << '\n';
        }
        const fs::path dir = analysis_dir(manifest, opt);
        write_atomically(dir / "classes.csv", table.str());
        write_atomically(dir / "classes_runs.csv", per_run.str());
        out << "classify: " << cells.size() << " cells -> " << (dir / "classes.csv").string() << '\n';
        return 0;
    } catch (const SchemaError& e) {
        err << format_schema_error(e);
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_cluster(const fs::path& manifest, const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        const auto entries = read_manifest(manifest);
        const fs::path root = manifest.parent_path();
        if (!check_gaps(root, entries, err)) return 1;
        if (opt.group_by != "bchm" && opt.group_by != "function")
            throw std::invalid_argument("group-by must be 'bchm' or 'function'");

        std::vector<Metric> metrics;
        if (opt.metrics.empty())
            metrics = {Metric::ViolationProbability, Metric::BestSoFar, Metric::PopulationVariance};
        for (const auto& m : opt.metrics) metrics.push_back(parse_metric(m));

        struct Loaded {
            const ManifestEntry* entry;
            Trajectory trajectory;
            double horizon;
        };
        std::vector<Loaded> loaded;
        for (const auto& e : entries) {
            const auto summary = read_json_file(root / e.summary);
            const double horizon = summary.at("config").at("budget").get<double>();
            loaded.push_back({&e, load_trajectory(root / e.trajectory), horizon});
        }

        const fs::path dir = analysis_dir(manifest, opt);
        for (auto metric : metrics) {
            // label -> instance -> series (instance key 0 when instances are averaged)
            std::map<std::string, std::map<std::int64_t, std::pair<std::vector<Series>, Vector>>> groups;
            for (const auto& l : loaded) {
                const std::string label = opt.group_by == "bchm" ? l.entry->bchm : l.entry->function;
                const std::int64_t slot = opt.concat_instances ? l.entry->instance : 0;
                auto& [series, horizons] = groups[label][slot];
                series.push_back(extract_series(l.trajectory, metric));
                horizons.push_back(l.horizon);
            }
            TrajectoryMatrix m;
            m.metric = metric;
            for (auto& [label, slots] : groups) {
                Vector row;
                for (auto& [_, sh] : slots) {
                    const auto part = build_trajectory(sh.first, sh.second, opt.grid_points);
                    row.insert(row.end(), part.begin(), part.end());
                }
                m.row_labels.push_back(label);
                m.rows.push_back(std::move(row));
            }
            for (const auto& r : m.rows)
                if (r.size() != m.rows.front().size())
                    throw std::runtime_error("rows differ in length; every label needs the same instances");
            const auto sim = similarity_matrix(m);
            const auto dendro = complete_linkage_cluster(sim, m.row_labels);
            const std::string name(metric_name(metric));
            std::ostringstream csv;
            write_similarity_csv(csv, m.row_labels, sim);
            write_atomically(dir / ("similarity_" + name + ".csv"), csv.str());
            write_atomically(dir / ("dendrogram_" + name + ".json"), dendro.to_json() + "\n");
            write_atomically(dir / ("dendrogram_" + name + ".nwk"), dendro.to_newick() + "\n");
            out << "cluster " << name << ": " << dendro.to_newick() << '\n';
        }
        return 0;
    } catch (const SchemaError& e) {
        err << format_schema_error(e);
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_rank(const fs::path& manifest, const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        const auto entries = read_manifest(manifest);
        const fs::path root = manifest.parent_path();
        if (!check_gaps(root, entries, err)) return 1;
        std::map<std::string, std::map<std::string, Vector>> errors;
        for (const auto& e : entries) {
            const auto traj = load_trajectory(root / e.trajectory);
            if (traj.empty()) throw std::runtime_error("empty trajectory " + e.trajectory);
            const std::string fkey = e.engine + "/" + e.mode + "/" + e.function + "/d" + std::to_string(e.dimension);
            errors[fkey][e.bchm].push_back(traj.back().best_error);
        }
        const auto table = rank_methods(errors);
        std::vector<std::size_t> order(table.methods.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](auto a, auto b) { return table.mean_rank[a] < table.mean_rank[b]; });
        std::ostringstream csv;
        csv << "bchm,mean_rank";
        for (const auto& f : table.functions) csv << ",rank:" << f;
        csv << '\n';
        for (auto m : order) {
            csv << table.methods[m] << ',' << format_real(table.mean_rank[m]);
            for (const auto& r : table.ranks) csv << ',' << format_real(r[m]);
            csv << '\n';
        }
        const fs::path dir = analysis_dir(manifest, opt);
        write_atomically(dir / "ranking.csv", csv.str());
        out << "rank: " << table.methods.size() << " methods over " << table.functions.size() << " functions -> "
            << (dir / "ranking.csv").string() << '\n';
        return 0;
    } catch (const SchemaError& e) {
        err << format_schema_error(e);
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_list(std::ostream& out) {
    out << "functions:\n";
    for (const auto& e : function_catalog())
        out << "  " << e.name << (e.exempt_from_boundary_shift ? "  (optimum not shifted to the boundary)" : "")
            << '\n';
    for (const auto& name : ProblemRegistry::global().names()) out << "  " << name << "  (plugin)\n";
    out << "methods:\n";
    for (auto m : kAllMethods) out << "  " << method_id(m) << '\n';
    out << "engines:\n  classic\n  lshade\n";
    out << "modes:\n  sbox\n  bbob_like\n";
    out << "metrics:\n  violation_probability\n  best_so_far\n  population_variance\n";
    return 0;
}

}  // namespace boxde
