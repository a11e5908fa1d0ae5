#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "boxde/analysis.hpp"
#include "boxde/bchm.hpp"
#include "boxde/benchmarks.hpp"
#include "boxde/engine.hpp"
#include "boxde/experiment.hpp"

namespace py = pybind11;
using namespace boxde;

namespace {

py::dict outcome_dict(const CorrectionOutcome& o) {
    py::dict d;
    d["corrected"] = o.corrected ? py::cast(*o.corrected) : py::none();
    d["components_corrected"] = o.components_corrected;
    d["vector_alpha"] = o.vector_alpha ? py::cast(*o.vector_alpha) : py::none();
    d["dismissed"] = o.dismissed();
    return d;
}

Bounds box_of(const Vector& lower, const Vector& upper) { return Bounds(lower, upper); }

// Names registered from Python; their callables must be released before
// the interpreter shuts down.
std::vector<std::string>& python_problems() {
    static std::vector<std::string> names;
    return names;
}

py::object json_to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Json py_to_json(const py::object& o) {
    return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

}  // namespace

PYBIND11_MODULE(_boxde, m) {
    m.doc() = "Bound constraint handling for differential evolution";

    py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
    py::module_::import("atexit").attr("register")(py::cpp_function([] {
        for (const auto& name : python_problems()) ProblemRegistry::global().remove(name);
        python_problems().clear();
    }));

    m.def("methods", [] {
        std::vector<std::string> ids;
        for (auto k : kAllMethods) ids.emplace_back(method_id(k));
        return ids;
    });
    m.def("functions", [] {
        std::vector<std::string> names;
        for (const auto& e : function_catalog()) names.emplace_back(e.name);
        return names;
    });

    m.def(
        "correct",
        [](const std::string& method, const Vector& y, const Vector& lower, const Vector& upper,
           std::optional<Vector> target, std::optional<Vector> pbest, std::optional<Vector> mean,
           std::optional<Vector> variance, std::uint64_t seed, double epsilon) {
            const auto box = box_of(lower, upper);
            const Vector mid = [&] {
                Vector c(box.dimension());
                for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (box.lower(i) + box.upper(i));
                return c;
            }();
            const Vector t = target.value_or(mid);
            const Vector p = pbest.value_or(t);
            const Vector mu = mean.value_or(t);
            const auto beta = fit_beta_params(PopulationStats{mu, variance.value_or(Vector(box.dimension(), 0.0))},
                                              box, epsilon);
            RngStream rng(seed);
            const CorrectionContext ctx{&box, t, p, mu, &beta};
            return outcome_dict(correct(parse_method(method), y, ctx, rng));
        },
        py::arg("method"), py::arg("y"), py::arg("lower"), py::arg("upper"), py::arg("target") = py::none(),
        py::arg("pbest") = py::none(), py::arg("mean") = py::none(), py::arg("variance") = py::none(),
        py::arg("seed") = 1, py::arg("epsilon") = 0.1,
        "Repairs y with a concrete method; references default to the box centre.");

    m.def(
        "fit_beta_params",
        [](const Vector& mean, const Vector& variance, const Vector& lower, const Vector& upper, double epsilon) {
            const auto p = fit_beta_params(PopulationStats{mean, variance}, box_of(lower, upper), epsilon);
            py::dict d;
            d["alpha"] = p.alpha;
            d["beta"] = p.beta;
            d["m"] = p.m;
            d["v"] = p.v;
            d["fallback_mask"] = p.fallback_mask;
            return d;
        },
        py::arg("mean"), py::arg("variance"), py::arg("lower"), py::arg("upper"), py::arg("epsilon") = 0.1);

    m.def(
        "vector_alpha",
        [](const Vector& y, const Vector& reference, const Vector& lower, const Vector& upper) {
            return vector_alpha(y, reference, box_of(lower, upper));
        },
        py::arg("y"), py::arg("reference"), py::arg("lower"), py::arg("upper"));

    m.def("exp_confined_component", &exp_confined_component, py::arg("y"), py::arg("lower"), py::arg("upper"),
          py::arg("reference"), py::arg("r"));

    m.def(
        "adaptive_update",
        [](const std::vector<std::uint64_t>& successes, const std::vector<std::uint64_t>& uses, double floor) {
            auto s = AdaptiveState::fresh(AdaptiveConfig{25, floor});
            if (successes.size() != s.pool.size() || uses.size() != s.pool.size())
                throw std::invalid_argument("expected one count per pool method");
            s.successes = successes;
            s.uses = uses;
            return adaptive_update(s).probabilities;
        },
        py::arg("successes"), py::arg("uses"), py::arg("floor") = 0.05);

    m.def(
        "classify",
        [](double error, double variance, double error_threshold, double variance_threshold) {
            return std::string(behaviour_name(classify(error, variance, {error_threshold, variance_threshold})));
        },
        py::arg("final_error"), py::arg("final_max_component_variance"), py::arg("error_threshold") = 1e-6,
        py::arg("variance_threshold") = 1e-8);

    m.def(
        "instance",
        [](const std::string& function, std::int64_t instance, std::size_t dimension, const std::string& mode) {
            const auto p = make_instance(function, instance, dimension, parse_mode(mode));
            py::dict d;
            d["name"] = p.name();
            d["optimum_location"] = p.optimum_location();
            d["optimum_value"] = *p.optimum_value();
            return d;
        },
        py::arg("function"), py::arg("instance"), py::arg("dimension"), py::arg("mode") = "sbox");

    m.def(
        "evaluate",
        [](const std::string& function, std::int64_t instance, const Vector& x, const std::string& mode) {
            return evaluate_strict(make_instance(function, instance, x.size(), parse_mode(mode)), x);
        },
        py::arg("function"), py::arg("instance"), py::arg("x"), py::arg("mode") = "sbox",
        "Strict-box value: +inf outside [-5, 5]^n.");

    m.def("cosine_similarity", [](const Vector& u, const Vector& v) { return cosine_similarity(u, v); });

    m.def(
        "complete_linkage",
        [](const std::vector<Vector>& similarity, std::vector<std::string> labels) {
            const auto d = complete_linkage_cluster(similarity, std::move(labels));
            py::list merges;
            for (const auto& s : d.merges)
                merges.append(py::make_tuple(d.members(s.a), d.members(s.b), s.height));
            py::dict out;
            out["merges"] = merges;
            out["newick"] = d.to_newick();
            out["json"] = d.to_json();
            return out;
        },
        py::arg("similarity"), py::arg("labels"),
        "Merge steps as (members_a, members_b, height) on distance 1 - similarity.");

    m.def(
        "rank_methods",
        [](const std::map<std::string, std::map<std::string, Vector>>& errors) {
            const auto t = rank_methods(errors);
            std::map<std::string, double> out;
            for (std::size_t i = 0; i < t.methods.size(); ++i) out[t.methods[i]] = t.mean_rank[i];
            return out;
        },
        py::arg("errors"));

    m.def(
        "register_problem",
        [](const std::string& name, const Vector& lower, const Vector& upper,
           std::function<double(const Vector&)> objective, std::optional<double> optimum_value) {
            const Bounds box = box_of(lower, upper);
            auto fn = [objective](std::span<const double> x) {
                py::gil_scoped_acquire gil;
                return objective(Vector(x.begin(), x.end()));
            };
            ProblemRegistry::global().add(name, [name, box, fn, optimum_value](std::size_t dimension) {
                if (dimension != box.dimension()) throw std::invalid_argument("dimension mismatch");
                return std::make_shared<CallbackProblem>(name, box, fn, optimum_value);
            });
            python_problems().push_back(name);
        },
        py::arg("name"), py::arg("lower"), py::arg("upper"), py::arg("objective"),
        py::arg("optimum_value") = py::none(),
        "Registers a Python objective; run configs can then name it as their function.");

    m.def(
        "run",
        [](const py::object& config, std::optional<std::string> out) {
            const auto spec = parse_run_config(py_to_json(config));
            if (out) return json_to_py(execute_run(spec, *out));
            const auto result = run(make_run_config(spec));
            py::dict d;
            d["final_class"] = std::string(behaviour_name(result.behaviour));
            d["final_error"] = result.final_best_error;
            d["best_fitness"] = result.best_fitness;
            d["best_position"] = result.best_position;
            d["evaluations"] = result.evaluations;
            d["generations"] = result.generations;
            d["optimum_known"] = result.optimum_known;
            py::list sizes, errors, ratios;
            for (const auto& r : result.trajectory.records()) {
                sizes.append(r.population_size);
                errors.append(r.best_error);
                ratios.append(r.infeasible_component_ratio);
            }
            d["population_size"] = sizes;
            d["best_error"] = errors;
            d["infeasible_component_ratio"] = ratios;
            if (result.adaptive) d["adaptive_probabilities"] = result.adaptive->probabilities;
            return py::object(d);
        },
        py::arg("config"), py::arg("out") = py::none(),
        "Runs one config (a dict in the run-config schema). With `out`, writes the CSV and summary JSON there "
        "and returns the summary.");
}
