#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bcdm/cli.hpp"
#include "bcdm/diagnostics.hpp"
#include "bcdm/error.hpp"
#include "bcdm/fit.hpp"
#include "bcdm/io.hpp"
#include "bcdm/sampler.hpp"
#include "bcdm/simulate.hpp"

namespace py = pybind11;
using namespace bcdm;

namespace {

using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

IntMatrix to_int_matrix(const IntArray& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d integer array");
  IntMatrix m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.data());
  return m;
}

IntArray from_int_matrix(const IntMatrix& m) {
  IntArray out({m.rows(), m.cols()});
  std::copy(m.data(), m.data() + m.size(), out.mutable_data());
  return out;
}

std::vector<std::vector<double>> to_chains(const std::vector<DoubleArray>& chains) {
  std::vector<std::vector<double>> out;
  for (const auto& c : chains) out.emplace_back(c.data(), c.data() + c.size());
  return out;
}

py::dict summary_dict(const ParamSummary& s) {
  py::dict d;
  d["mean"] = s.mean;
  d["sd"] = s.sd;
  d["quantiles"] = std::vector<double>(s.quantiles.begin(), s.quantiles.end());
  d["rhat"] = s.rhat;
  d["n_eff"] = s.n_eff;
  if (s.categorical) d["mode"] = s.mode;
  return d;
}

py::dict fit_arrays(const IntArray& q, const IntArray& y, const std::string& model,
                    std::optional<std::string> structure, int n_chains, int n_iter,
                    std::optional<int> n_burnin, int thin, std::uint64_t seed,
                    std::vector<std::string> monitor) {
  ModelSpec spec;
  spec.kind = parse_model_kind(model);
  if (structure) spec.structure = parse_structure(*structure);
  spec.monitor = std::move(monitor);
  Dataset data;
  data.q = QMatrix(to_int_matrix(q));
  data.y = ResponseMatrix(to_int_matrix(y));
  McmcConfig mc;
  mc.n_chains = n_chains;
  mc.n_iter = n_iter;
  mc.n_burnin = n_burnin;
  mc.thin = thin;
  mc.seed = seed;
  mc.progress_every = 0;

  TraceStore trace;
  std::size_t np = 0, n_persons = data.y.n_persons();
  {
    py::gil_scoped_release release;
    Sampler sampler(spec, data, mc);
    trace = sampler.run();
    np = sampler.setup().n_parameters();
  }
  py::dict summary;
  for (const auto& row : summarize(trace)) summary[py::str(row.name)] = summary_dict(row);
  const FitReport report = make_fit_report(trace, static_cast<double>(np), n_persons, 0.0);
  py::dict out;
  out["summary"] = summary;
  out["dbar"] = report.dbar;
  out["p_e"] = report.p_e;
  out["dic"] = report.dic;
  out["aic"] = report.aic;
  out["bic"] = report.bic;
  out["np"] = report.np;
  out["ppp"] = report.ppp;
  out["modal_class"] = modal_class(trace);
  if (trace.n_chains() >= 2) {
    const auto check = check_convergence(trace, 1.2);
    out["max_rhat"] = check.max_rhat;
  }
  return out;
}

py::dict simulate_arrays(const IntArray& q, const std::string& model, std::size_t n_persons,
                         std::uint64_t seed, std::optional<std::vector<double>> mixing) {
  SimDesign d;
  d.items = ItemBank(parse_model_kind(model), QMatrix(to_int_matrix(q)));
  d.structure = Structure::Unstructured;
  d.n_persons = n_persons;
  d.seed = seed;
  if (mixing) d.mixing = *mixing;
  Random rng(seed, 1);
  randomize_items(d.items, ItemRanges{}, rng);
  const SimResult r = simulate_responses(d);
  py::dict truth;
  for (std::size_t s = 0; s < d.items.n_slots(); ++s) {
    for (std::size_t j = 0; j < d.items.n_values(s); ++j) {
      truth[py::str(d.items.value_name(s, j))] = d.items.values(s)[j];
    }
  }
  py::dict out;
  out["Y"] = from_int_matrix(r.y.entries());
  out["alpha"] = from_int_matrix(r.alpha);
  out["membership"] = r.membership;
  out["truth"] = truth;
  return out;
}

int run_command(const std::string& command, const std::filesystem::path& config,
                const std::vector<std::string>& overrides) {
  std::ostringstream log;
  try {
    const RunConfig c = load_run_config(config, overrides);
    if (command == "fit") return run_fit(c, log).exit_code;
    if (command == "simulate") {
      run_simulate(c, log);
      return kExitOk;
    }
    if (command == "preflight") return preflight(c, log).converged ? kExitOk : kExitNotConverged;
    return kExitUsage;
  } catch (const std::exception& e) {
    return exit_code_for(e);
  }
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian cognitive diagnosis models";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<SamplerError>(m, "SamplerError", PyExc_RuntimeError);

  m.def("models", [] {
    std::vector<std::string> out;
    for (auto k : {ModelKind::Dina, ModelKind::Rdina, ModelKind::Dino, ModelKind::Llm,
                   ModelKind::Rrum, ModelKind::Lcdm, ModelKind::RpaDina, ModelKind::HoDina,
                   ModelKind::TestletDina, ModelKind::LongDina}) {
      out.emplace_back(to_string(k));
    }
    return out;
  });

  m.def("enumerate_patterns",
        [](const IntArray& q) {
          return from_int_matrix(enumerate_patterns(QMatrix(to_int_matrix(q))).patterns());
        },
        py::arg("q"), "All attribute patterns admitted by Q, attribute 1 varying fastest.");

  m.def("prob_dina",
        [](int eta, double slip, double guess) {
          return prob_dina(eta, DinaParams({slip}, {guess}), 0);
        },
        py::arg("eta"), py::arg("slip"), py::arg("guess"));
  m.def("prob_rdina",
        [](int eta, double lamda0, double lamdaK) {
          return prob_rdina(eta, RdinaParams({lamda0}, {lamdaK}), 0);
        },
        py::arg("eta"), py::arg("lamda0"), py::arg("lamdaK"));
  m.def("rdina_to_sg",
        [](double lamda0, double lamdaK) {
          const auto gs = rdina_to_sg(RdinaParams({lamda0}, {lamdaK}), 0);
          return std::make_pair(gs.slip, gs.guess);
        },
        py::arg("lamda0"), py::arg("lamdaK"), "Returns (slip, guess).");

  m.def("rhat", [](const std::vector<DoubleArray>& c) { return rhat(to_chains(c)); },
        py::arg("chains"));
  m.def("effective_draws",
        [](const std::vector<DoubleArray>& c) { return effective_draws(to_chains(c)); },
        py::arg("chains"));
  m.def("dic",
        [](const DoubleArray& d) {
          const auto r = dic(std::span<const double>(d.data(), static_cast<std::size_t>(d.size())));
          return py::make_tuple(r.dbar, r.p_e, r.dic);
        },
        py::arg("deviance"), "Returns (dbar, p_e, dic).");
  m.def("aic_bic",
        [](double dbar, double np, std::size_t n) {
          const auto r = aic_bic(dbar, np, n);
          return std::make_pair(r.aic, r.bic);
        },
        py::arg("dbar"), py::arg("np"), py::arg("n_persons"));
  m.def("discrepancy",
        [](const IntArray& y, const DoubleArray& p) {
          if (p.ndim() != 2) throw std::invalid_argument("expected a 2-d probability array");
          Eigen::MatrixXd pm(p.shape(0), p.shape(1));
          for (py::ssize_t r = 0; r < p.shape(0); ++r)
            for (py::ssize_t c = 0; c < p.shape(1); ++c) pm(r, c) = p.at(r, c);
          return discrepancy(to_int_matrix(y), pm);
        },
        py::arg("y"), py::arg("p"));

  m.def("fit", &fit_arrays, py::arg("q"), py::arg("y"), py::arg("model") = "dina",
        py::arg("structure") = py::none(), py::arg("n_chains") = 2, py::arg("n_iter") = 2000,
        py::arg("n_burnin") = py::none(), py::arg("thin") = 1, py::arg("seed") = 12345,
        py::arg("monitor") = std::vector<std::string>{});
  m.def("simulate", &simulate_arrays, py::arg("q"), py::arg("model") = "dina",
        py::arg("n_persons") = 500, py::arg("seed") = 1, py::arg("mixing") = py::none());
  m.def("run", &run_command, py::arg("command"), py::arg("config"),
        py::arg("overrides") = std::vector<std::string>{},
        "Runs a command-line action and returns its exit code.");
}
