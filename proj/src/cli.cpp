#include "bcdm/cli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include "bcdm/error.hpp"
#include "bcdm/io.hpp"

namespace bcdm {
namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(s);
  while (std::getline(in, field, sep)) {
    field = trim(field);
    if (!field.empty()) out.push_back(field);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw ParseError("'" + key + "': expected " + expected + ", got '" + value + "'");
}

double to_double(const std::string& key, const std::string& v) {
  const char* begin = v.c_str();
  char* end = nullptr;
  const double x = std::strtod(begin, &end);
  if (v.empty() || end != begin + v.size()) bad_value(key, v, "a number");
  return x;
}

long to_long(const std::string& key, const std::string& v) {
  long x = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return x;
}

int to_int(const std::string& key, const std::string& v) {
  const long x = to_long(key, v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    bad_value(key, v, "an integer in range");
  }
  return static_cast<int>(x);
}

int to_positive(const std::string& key, const std::string& v) {
  const int x = to_int(key, v);
  if (x < 1) bad_value(key, v, "a positive integer");
  return x;
}

bool to_bool(const std::string& key, std::string v) {
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& f : split(v, ',')) out.push_back(to_double(key, f));
  if (out.empty()) bad_value(key, v, "a comma-separated list of numbers");
  return out;
}

std::vector<int> to_ints(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& f : split(v, ',')) out.push_back(to_int(key, f));
  if (out.empty()) bad_value(key, v, "a comma-separated list of integers");
  return out;
}

std::pair<double, double> to_range(const std::string& key, const std::string& v) {
  const auto colon = v.find(':');
  if (colon == std::string::npos) bad_value(key, v, "lo:hi");
  const double lo = to_double(key, trim(v.substr(0, colon)));
  const double hi = to_double(key, trim(v.substr(colon + 1)));
  if (!(lo <= hi)) bad_value(key, v, "lo:hi with lo <= hi");
  return {lo, hi};
}

// "mean,precision"
NormalPrior to_normal(const std::string& key, const std::string& v) {
  const auto xs = to_doubles(key, v);
  if (xs.size() != 2 || !(xs[1] > 0.0)) bad_value(key, v, "mean,precision with precision > 0");
  return {xs[0], xs[1]};
}

fs::path to_path(const std::string& v, const fs::path& base) {
  fs::path p(v);
  return p.is_relative() ? base / p : p;
}

template <class Parse>
auto parse_or_rethrow(const std::string& key, const std::string& value, Parse&& parse) {
  try {
    return parse(value);
  } catch (const std::invalid_argument& e) {
    throw ParseError("'" + key + "': " + e.what());
  }
}

bool set_prior(PriorSpec& p, const std::string& name, const std::string& key,
               const std::string& v) {
  std::map<std::string, double*> scalars{
      {"a_s", &p.a_s},
      {"b_s", &p.b_s},
      {"a_g", &p.a_g},
      {"b_g", &p.b_g},
      {"a_pai_star", &p.a_pai_star},
      {"b_pai_star", &p.b_pai_star},
      {"a_r_star", &p.a_xr_star},
      {"b_r_star", &p.b_xr_star},
      {"testlet_shape", &p.testlet_shape},
      {"testlet_rate", &p.testlet_rate},
      {"mu_theta_precision", &p.mu_theta_precision},
      {"cholesky_diag_shape", &p.cholesky_diag_shape},
      {"cholesky_diag_rate", &p.cholesky_diag_rate},
      {"hyper_lo", &p.hyper_lo},
      {"hyper_hi", &p.hyper_hi},
      {"hyper_lamda0_shape", &p.hyper_lamda0_shape},
      {"hyper_lamda0_rate", &p.hyper_lamda0_rate},
  };
  std::map<std::string, NormalPrior*> normals{
      {"lamda0", &p.lamda0},
      {"main", &p.main_effect},
      {"interaction", &p.interaction},
      {"beta", &p.beta},
      {"xi", &p.xi},
      {"cholesky_offdiag", &p.cholesky_offdiag},
      {"hyper_lamda0_mean", &p.hyper_lamda0_mean},
  };
  if (auto it = scalars.find(name); it != scalars.end()) {
    *it->second = to_double(key, v);
  } else if (auto jt = normals.find(name); jt != normals.end()) {
    *jt->second = to_normal(key, v);
  } else if (name == "lamdaK") {
    p.lamdaK = to_normal(key, v);
  } else if (name == "xi_truncated") {
    p.xi_truncated = to_bool(key, v);
  } else if (name == "hyper_beta") {
    p.hyper_beta = to_bool(key, v);
  } else if (name == "hyper_lamda0") {
    p.hyper_lamda0 = to_bool(key, v);
  } else if (name == "preset") {
    // Only the Beta parameters the preset changes are touched.
    const PriorSpec base;
    PriorSpec preset;
    if (v == "good_items") {
      preset = PriorSpec::good_items();
    } else if (v == "rrum_informative") {
      preset = PriorSpec::rrum_informative();
    } else if (v != "default") {
      bad_value(key, v, "default, good_items or rrum_informative");
    }
    for (auto field : {&PriorSpec::a_s, &PriorSpec::b_s, &PriorSpec::a_g, &PriorSpec::b_g,
                       &PriorSpec::a_pai_star, &PriorSpec::b_pai_star, &PriorSpec::a_xr_star,
                       &PriorSpec::b_xr_star}) {
      if (preset.*field != base.*field) p.*field = preset.*field;
    }
  } else {
    return false;
  }
  return true;
}

bool set_sim(SimSettings& s, const std::string& name, const std::string& key,
             const std::string& v) {
  std::map<std::string, std::pair<double, double>*> ranges{
      {"slip", &s.ranges.slip},         {"guess", &s.ranges.guess},
      {"lamda0", &s.ranges.lamda0},     {"lamdaK", &s.ranges.lamdaK},
      {"main", &s.ranges.main_effect},  {"interaction", &s.ranges.interaction},
      {"pai_star", &s.ranges.pai_star}, {"r_star", &s.ranges.r_star},
  };
  if (auto it = ranges.find(name); it != ranges.end()) {
    *it->second = to_range(key, v);
  } else if (name == "n_persons") {
    s.n_persons = static_cast<std::size_t>(to_positive(key, v));
  } else if (name == "seed") {
    const long x = to_long(key, v);
    if (x < 0) bad_value(key, v, "a non-negative integer");
    s.seed = static_cast<std::uint64_t>(x);
  } else if (name == "mixing") {
    s.mixing = to_doubles(key, v);
  } else if (name == "xi") {
    s.xi_list = to_doubles(key, v);
    if (s.xi_list.size() == 1) {
      s.xi = s.xi_list.front();
      s.xi_list.clear();
    }
  } else if (name == "beta") {
    s.beta = to_doubles(key, v);
  } else if (name == "mu_theta") {
    s.mu_theta = to_doubles(key, v);
  } else if (name == "phi") {
    s.phi = to_double(key, v);
  } else if (name == "psi") {
    s.psi = to_double(key, v);
  } else if (name == "testlet_var") {
    s.testlet_var = to_double(key, v);
  } else {
    return false;
  }
  return true;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return kExitParse;
  if (dynamic_cast<const DimensionError*>(&e)) return kExitDimension;
  if (dynamic_cast<const ConvergenceError*>(&e)) return kExitNotConverged;
  if (dynamic_cast<const SamplerError*>(&e)) return kExitSampler;
  // Unsupported model/structure combinations and out-of-range settings.
  if (dynamic_cast<const std::invalid_argument*>(&e)) return kExitUsage;
  return kExitSampler;
}

fs::path default_output_dir() {
  if (const char* env = std::getenv("BCDM_OUTPUT_DIR"); env && *env) return env;
  return "bcdm_output";
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& value,
                   const fs::path& base_dir) {
  const std::string& v = value;
  if (key.rfind("prior.", 0) == 0) {
    if (!set_prior(c.prior, key.substr(6), key, v)) throw ParseError("unknown key '" + key + "'");
    return;
  }
  if (key.rfind("sim.", 0) == 0) {
    if (!set_sim(c.sim, key.substr(4), key, v)) throw ParseError("unknown key '" + key + "'");
    return;
  }
  if (key.rfind("proposal.", 0) == 0) {
    const double sd = to_double(key, v);
    if (!(sd > 0.0)) bad_value(key, v, "a positive number");
    c.mcmc.proposal_sd[key.substr(9)] = sd;
    return;
  }

  if (key == "q") {
    c.q_path = to_path(v, base_dir);
  } else if (key == "y") {
    c.y_path = to_path(v, base_dir);
  } else if (key == "testlets") {
    c.testlet_path = to_path(v, base_dir);
  } else if (key == "n_testlets") {
    c.n_testlets = to_positive(key, v);
  } else if (key == "items_per_occasion") {
    c.items_per_occasion = to_ints(key, v);
    for (int n : c.items_per_occasion) {
      if (n < 1) bad_value(key, v, "positive item counts");
    }
  } else if (key == "anchors") {
    c.anchors.clear();
    for (const auto& pair : split(v, ',')) {
      const auto colon = pair.find(':');
      if (colon == std::string::npos) bad_value(key, v, "item:item pairs");
      c.anchors.emplace_back(to_int(key, trim(pair.substr(0, colon))),
                             to_int(key, trim(pair.substr(colon + 1))));
    }
  } else if (key == "model") {
    c.model = parse_or_rethrow(key, v, [](const std::string& s) { return parse_model_kind(s); });
  } else if (key == "structure") {
    c.structure =
        parse_or_rethrow(key, v, [](const std::string& s) { return parse_structure(s); });
  } else if (key == "dirichlet_scale") {
    c.dirichlet_scale = to_doubles(key, v);
  } else if (key == "monitor") {
    c.monitor = split(v, ',');
  } else if (key == "output_dir") {
    c.output_dir = to_path(v, base_dir);
  } else if (key == "chains") {
    c.mcmc.n_chains = to_positive(key, v);
  } else if (key == "iter") {
    c.mcmc.n_iter = to_positive(key, v);
  } else if (key == "burnin") {
    c.mcmc.n_burnin = to_int(key, v);
  } else if (key == "thin") {
    c.mcmc.thin = to_positive(key, v);
  } else if (key == "seed") {
    const long x = to_long(key, v);
    if (x < 0) bad_value(key, v, "a non-negative integer");
    c.mcmc.seed = static_cast<std::uint64_t>(x);
  } else if (key == "adapt") {
    c.mcmc.adapt_iters = to_int(key, v);
  } else if (key == "identical_chains") {
    c.mcmc.identical_chains = to_bool(key, v);
  } else if (key == "progress_every") {
    c.mcmc.progress_every = to_int(key, v);
  } else if (key == "rhat_threshold") {
    c.rhat_threshold = to_double(key, v);
    if (!(c.rhat_threshold > 1.0)) bad_value(key, v, "a number above 1");
  } else if (key == "auto_extend") {
    c.auto_extend = to_bool(key, v);
  } else if (key == "extend_increment") {
    c.extend_increment = to_positive(key, v);
  } else if (key == "extend_cap") {
    c.extend_cap = to_positive(key, v);
  } else if (key == "preflight_iter") {
    c.preflight_iter = to_positive(key, v);
    if (c.preflight_iter < 20) bad_value(key, v, "at least 20 iterations");
  } else if (key == "np_reference") {
    c.np_reference = to_double(key, v);
  } else if (key == "write_traces") {
    c.write_traces = to_bool(key, v);
  } else {
    throw ParseError("unknown key '" + key + "'");
  }
}

RunConfig parse_run_config(std::istream& in, const fs::path& base_dir,
                           const std::vector<std::string>& overrides) {
  RunConfig c;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      apply_setting(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), base_dir);
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ParseError("override '" + o + "': expected key=value");
    apply_setting(c, trim(o.substr(0, eq)), trim(o.substr(eq + 1)), fs::current_path());
  }
  if (c.output_dir.empty()) c.output_dir = default_output_dir();
  return c;
}

RunConfig load_run_config(const fs::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open configuration " + path.string());
  try {
    return parse_run_config(in, path.parent_path().empty() ? fs::path(".") : path.parent_path(),
                            overrides);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

namespace {

std::vector<int> occasion_map(const RunConfig& config, std::size_t I) {
  if (config.items_per_occasion.empty()) return {};
  std::vector<int> out;
  for (std::size_t t = 0; t < config.items_per_occasion.size(); ++t) {
    out.insert(out.end(), static_cast<std::size_t>(config.items_per_occasion[t]),
               static_cast<int>(t));
  }
  if (out.size() != I) {
    throw DimensionError("items_per_occasion sums to " + std::to_string(out.size()) +
                         " but the Q-matrix has " + std::to_string(I) + " items");
  }
  return out;
}

std::vector<int> slot_map(const RunConfig& config, const QMatrix& q) {
  const int I = static_cast<int>(q.n_items());
  if (config.anchors.empty()) return {};
  std::vector<int> slot(static_cast<std::size_t>(I));
  for (int i = 0; i < I; ++i) slot[static_cast<std::size_t>(i)] = i;
  for (auto [a, b] : config.anchors) {
    if (a < 1 || a > I || b < 1 || b > I || a == b) {
      throw DimensionError("anchor " + std::to_string(a) + ":" + std::to_string(b) +
                           " does not name two distinct items");
    }
    const auto ra = q.row(static_cast<std::size_t>(a - 1));
    const auto rb = q.row(static_cast<std::size_t>(b - 1));
    if (!std::equal(ra.begin(), ra.end(), rb.begin())) {
      throw DimensionError("anchor items " + std::to_string(a) + " and " + std::to_string(b) +
                           " have different Q rows");
    }
    const int from = slot[static_cast<std::size_t>(a - 1)];
    const int to = slot[static_cast<std::size_t>(b - 1)];
    for (auto& s : slot) {
      if (s == from) s = to;
    }
  }
  return slot;
}

struct ItemLayout {
  std::vector<int> occasion, testlet, slot;
  int n_testlets = 0;
};

ItemLayout item_layout(const RunConfig& config, const QMatrix& q) {
  ItemLayout out;
  const std::size_t I = q.n_items();
  out.occasion = occasion_map(config, I);
  if (config.model == ModelKind::LongDina && out.occasion.empty()) {
    throw ParseError("long-dina needs items_per_occasion");
  }
  out.slot = slot_map(config, q);
  if (!config.testlet_path.empty()) {
    if (!config.n_testlets) throw ParseError("a testlet file needs n_testlets");
    const auto labels = read_int_vector(config.testlet_path);
    if (labels.size() != I) {
      throw DimensionError("testlet file has " + std::to_string(labels.size()) +
                           " entries for " + std::to_string(I) + " items");
    }
    for (int d : labels) {
      if (d < 1) throw ParseError("testlet labels start at 1");
    }
    out.testlet = testlet_indices_from_labels(labels, *config.n_testlets);
    out.n_testlets = *config.n_testlets;
  } else if (config.model == ModelKind::TestletDina) {
    throw ParseError("testlet-dina needs a testlets file");
  }
  return out;
}

const QMatrix& require_q(const RunConfig& config, std::optional<QMatrix>& cache) {
  if (config.q_path.empty()) throw ParseError("missing key 'q'");
  if (!cache) cache = read_qmatrix(config.q_path);
  return *cache;
}

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

// Writes to a temporary name first so a failed write never leaves a
// truncated file under the final name.
template <class Writer>
fs::path write_file(const fs::path& dir, const std::string& name, Writer&& writer) {
  const fs::path target = dir / name;
  const fs::path tmp = dir / (name + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    writer(out);
    if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, target);
  return target;
}

ProgressHook make_hook(std::ostream& log, int every) {
  if (every <= 0) return {};
  auto mutex = std::make_shared<std::mutex>();
  return [&log, mutex](const Progress& p) {
    std::lock_guard<std::mutex> lock(*mutex);
    log << "chain " << p.chain + 1 << ": iteration " << p.iteration << "/" << p.total
        << ", acceptance " << format_number(p.acceptance) << "\n";
  };
}

bool is_item_family(const std::string& f) {
  static const std::vector<std::string> families{"s",      "g",        "lamda0", "lamdaK",
                                                 "lamda",  "pai_star", "r_star"};
  return std::find(families.begin(), families.end(), f) != families.end();
}

void write_patterns(std::ostream& out, const TraceStore& trace, const SamplerSetup& S) {
  const auto modal = modal_class(trace);
  const auto median = median_class(trace);
  const std::size_t T = S.n_occasions, K = S.n_attributes;
  out << "person";
  for (std::size_t t = 0; t < T; ++t) {
    const std::string sfx = T > 1 ? "." + std::to_string(t + 1) : "";
    out << " c_mode" << sfx << " c_median" << sfx;
    for (std::size_t k = 0; k < K; ++k) out << " a" << k + 1 << sfx;
  }
  out << "\n";
  for (std::size_t n = 0; n < S.n_persons; ++n) {
    out << n + 1;
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t u = n * T + t;
      out << " " << modal[u] + 1 << " " << format_number(median[u]);
      for (int a : S.patterns.pattern(static_cast<std::size_t>(modal[u]))) out << " " << a;
    }
    out << "\n";
  }
}

void write_itempar(std::ostream& out, const std::vector<ParamSummary>& rows) {
  out << "mean sd\n";
  for (const auto& r : rows) {
    if (r.name == "deviance") continue;
    out << r.name << " " << format_number(r.mean) << " " << format_number(r.sd) << "\n";
  }
}

PreflightReport run_preflight(const ModelSpec& spec, const Dataset& data,
                              const RunConfig& config, std::ostream& log) {
  McmcConfig mc = config.mcmc;
  mc.n_iter = config.preflight_iter;
  mc.n_burnin.reset();
  mc.adapt_iters.reset();
  Sampler sampler(spec, data, mc);
  const auto hook = make_hook(log, mc.progress_every);
  TraceStore trace = sampler.run(hook);
  PreflightReport report;
  for (;;) {
    const auto check = check_convergence(trace, config.rhat_threshold);
    report.converged = check.converged;
    report.degenerate = check.degenerate;
    report.max_rhat = check.max_rhat;
    report.worst = check.worst;
    report.iterations = sampler.iterations_done();
    if (check.converged || sampler.iterations_done() >= config.extend_cap) break;
    const long room = config.extend_cap - sampler.iterations_done();
    trace = sampler.extend(static_cast<int>(std::min<long>(config.extend_increment, room)), hook);
  }
  return report;
}

void log_preflight(std::ostream& log, const PreflightReport& r, double threshold) {
  log << "preflight: " << (r.converged ? "converged" : "not converged") << " after "
      << r.iterations << " iterations (max Rhat " << format_number(r.max_rhat);
  if (!r.worst.empty()) log << " at " << r.worst;
  log << ", threshold " << format_number(threshold) << ")";
  if (r.degenerate) log << "; chains are identical, Rhat is uninformative";
  log << "\n";
}

}  // namespace

Dataset load_dataset(const RunConfig& config) {
  std::optional<QMatrix> q;
  require_q(config, q);
  if (config.y_path.empty()) throw ParseError("missing key 'y'");
  Dataset data;
  data.y = read_responses(config.y_path);
  data.q = *q;
  if (data.y.n_items() != data.q.n_items()) {
    throw DimensionError("Y has " + std::to_string(data.y.n_items()) +
                         " columns but Q has " + std::to_string(data.q.n_items()) + " rows");
  }
  auto layout = item_layout(config, data.q);
  data.item_occasion = std::move(layout.occasion);
  data.testlet = std::move(layout.testlet);
  data.n_testlets = layout.n_testlets;
  data.item_slot = std::move(layout.slot);
  data.validate();
  return data;
}

ModelSpec make_model_spec(const RunConfig& config) {
  ModelSpec spec;
  spec.kind = config.model;
  spec.structure = config.structure;
  spec.prior = config.prior;
  spec.dirichlet_scale = config.dirichlet_scale;
  spec.monitor = config.monitor;
  spec.prior.validate();
  return spec;
}

std::string model_label(ModelKind kind) { return upper(to_string(kind)); }

RunOutcome run_fit(const RunConfig& config, std::ostream& log) {
  const Dataset data = load_dataset(config);
  const ModelSpec spec = make_model_spec(config);
  config.mcmc.validate();
  if (config.mcmc.n_iter > config.extend_cap && config.auto_extend) {
    throw std::invalid_argument("extend_cap is below iter");
  }
  Sampler sampler(spec, data, config.mcmc);
  const SamplerSetup& S = sampler.setup();
  const auto hook = make_hook(log, config.mcmc.progress_every);

  RunOutcome outcome;
  const auto start = std::chrono::steady_clock::now();
  TraceStore trace = sampler.run(hook);
  if (config.mcmc.n_chains >= 2) {
    for (;;) {
      outcome.convergence = check_convergence(trace, config.rhat_threshold);
      if (outcome.convergence->converged || !config.auto_extend ||
          sampler.iterations_done() >= config.extend_cap) {
        break;
      }
      log << "not converged (max Rhat " << format_number(outcome.convergence->max_rhat)
          << " at " << outcome.convergence->worst << "), extending\n";
      const long room = config.extend_cap - sampler.iterations_done();
      // Like an automatic update: the extension's draws replace the old ones.
      trace = sampler.extend(static_cast<int>(std::min<long>(config.extend_increment, room)), hook);
    }
  }
  const double runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  outcome.iterations = sampler.iterations_done();

  const double np = static_cast<double>(S.n_parameters());
  outcome.report = make_fit_report(trace, np, S.n_persons, runtime, config.np_reference);
  const auto rows = summarize(trace);
  std::vector<ParamSummary> item_rows;
  for (const auto& r : rows) {
    if (is_item_family(family_of(r.name))) item_rows.push_back(r);
  }

  const std::string label = model_label(spec.kind);
  const fs::path& dir = config.output_dir;
  fs::create_directories(dir);
  outcome.files.push_back(write_file(dir, "pattern_" + label + ".txt",
                                     [&](std::ostream& o) { write_patterns(o, trace, S); }));
  outcome.files.push_back(write_file(dir, "itempar_" + label + ".txt",
                                     [&](std::ostream& o) { write_itempar(o, item_rows); }));
  outcome.files.push_back(write_file(dir, "summary_" + label + ".txt",
                                     [&](std::ostream& o) { write_summary_table(o, rows); }));
  if (config.write_traces) {
    outcome.files.push_back(write_file(dir, "traces_" + label + ".csv",
                                       [&](std::ostream& o) { write_traces_csv(o, trace); }));
  }
  write_fit_files(outcome.report, dir, label);
  for (const char* stem : {"DIC_", "deviance_", "ppp_", "time_", "fit_"}) {
    outcome.files.push_back(dir / (stem + label + ".txt"));
  }

  log << label << ": " << outcome.iterations << " iterations x " << config.mcmc.n_chains
      << " chains, -2LL " << format_number(outcome.report.dbar) << ", DIC "
      << format_number(outcome.report.dic) << ", ppp " << format_number(outcome.report.ppp)
      << "\n";
  if (outcome.convergence && !outcome.convergence->converged) {
    log << "not converged: max Rhat " << format_number(outcome.convergence->max_rhat) << " at "
        << outcome.convergence->worst << "\n";
    outcome.exit_code = kExitNotConverged;
  }
  return outcome;
}

PreflightReport preflight(const RunConfig& config, std::ostream& log) {
  const Dataset data = load_dataset(config);
  const ModelSpec spec = make_model_spec(config);
  if (config.mcmc.n_chains < 2) throw std::invalid_argument("preflight needs at least two chains");
  const auto report = run_preflight(spec, data, config, log);
  log_preflight(log, report, config.rhat_threshold);
  return report;
}

void run_simulate(const RunConfig& config, std::ostream& log) {
  std::optional<QMatrix> qcache;
  const QMatrix& q = require_q(config, qcache);
  const auto layout = item_layout(config, q);
  const SimSettings& s = config.sim;

  SimDesign d;
  d.structure = config.structure ? *config.structure : default_structure(config.model);
  d.items = ItemBank(config.model, q, layout.slot);
  d.item_occasion = layout.occasion;
  d.testlet = layout.testlet;
  d.n_testlets = layout.n_testlets;
  d.testlet_variance.assign(static_cast<std::size_t>(layout.n_testlets), s.testlet_var);
  d.n_persons = s.n_persons;
  d.seed = s.seed;
  d.mixing = s.mixing;

  const std::size_t K = q.n_attributes();
  const std::size_t T = std::max<std::size_t>(1, config.items_per_occasion.size());
  if (d.structure != Structure::Unstructured) {
    d.slope = s.xi_list.empty() ? std::vector<double>(K, s.xi) : s.xi_list;
    d.intercept = s.beta.empty() ? std::vector<double>(K, 0.0) : s.beta;
    if (d.slope.size() != K || d.intercept.size() != K) {
      throw DimensionError("sim.xi and sim.beta need one entry per attribute");
    }
  }
  if (d.structure == Structure::Longitudinal) {
    d.mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(T));
    if (!s.mu_theta.empty()) {
      if (s.mu_theta.size() != T) throw DimensionError("sim.mu_theta needs one entry per occasion");
      for (std::size_t t = 0; t < T; ++t) d.mu(static_cast<Eigen::Index>(t)) = s.mu_theta[t];
    }
    d.cholesky = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(T),
                                           static_cast<Eigen::Index>(T));
    for (Eigen::Index t = 1; t < static_cast<Eigen::Index>(T); ++t) {
      d.cholesky(t, t - 1) = s.phi;
      d.cholesky(t, t) = s.psi;
    }
  }

  Random rng(s.seed, 1);
  randomize_items(d.items, s.ranges, rng);
  d.validate();
  const SimResult result = simulate_responses(d);
  fs::create_directories(config.output_dir);
  write_simulation(config.output_dir, d, result);
  log << "simulated " << s.n_persons << " persons x " << q.n_items() << " items ("
      << to_string(config.model) << ") into " << config.output_dir.string() << "\n";
}

}  // namespace bcdm
