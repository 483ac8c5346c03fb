#include "bcdm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "bcdm/io.hpp"

namespace bcdm {

namespace {

ChainDraws as_spans(const std::vector<std::vector<double>>& chains) {
  ChainDraws out;
  for (const auto& c : chains) out.emplace_back(c);
  return out;
}

void check_chains(const ChainDraws& chains) {
  if (chains.size() < 2) throw std::invalid_argument("diagnostic needs at least two chains");
  const std::size_t n = chains.front().size();
  if (n < 10) throw std::invalid_argument("diagnostic needs at least 10 draws per chain");
  for (const auto& c : chains) {
    if (c.size() != n) throw std::invalid_argument("chains must have equal lengths");
  }
}

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double var_of(std::span<const double> x, double mean) {
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(x.size() - 1);
}

double cov_of(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean_of(a), mb = mean_of(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / static_cast<double>(a.size() - 1);
}

}  // namespace

double rhat(const ChainDraws& chains) {
  check_chains(chains);
  const auto m = static_cast<double>(chains.size());
  const auto n = static_cast<double>(chains.front().size());
  std::vector<double> means, vars, means_sq;
  for (const auto& c : chains) {
    const double mu = mean_of(c);
    means.push_back(mu);
    means_sq.push_back(mu * mu);
    vars.push_back(var_of(c, mu));
  }
  const double W = mean_of(vars);
  const double mu_hat = mean_of(means);
  const double B = n * var_of(means, mu_hat);
  const double scale = std::max(std::abs(mu_hat), 1.0);
  if (W <= 1e-24 * scale * scale) {
    return B <= 1e-24 * scale * scale ? 1.0 : std::numeric_limits<double>::infinity();
  }
  const double var_w = var_of(vars, W) / m;
  const double var_b = 2.0 * B * B / (m - 1.0);
  const double cov_wb = (n / m) * (cov_of(vars, means_sq) - 2.0 * mu_hat * cov_of(vars, means));
  const double postvar = ((n - 1.0) * W + B) / n + B / (m * n);
  const double k = 1.0 + 1.0 / m;
  const double varpostvar = std::max(
      0.0, ((n - 1.0) * (n - 1.0) * var_w + k * k * var_b + 2.0 * (n - 1.0) * k * cov_wb) / (n * n));
  if (!(varpostvar > 0.0)) return std::sqrt(postvar / W);
  const double df = 2.0 * postvar * postvar / varpostvar;
  return std::sqrt(postvar / W * (df + 3.0) / (df + 1.0));
}

double rhat(const std::vector<std::vector<double>>& chains) { return rhat(as_spans(chains)); }

double effective_draws(const ChainDraws& chains) {
  check_chains(chains);
  const std::size_t m = chains.size(), n = chains.front().size();
  const double total = static_cast<double>(m * n);
  std::vector<double> means;
  for (const auto& c : chains) means.push_back(mean_of(c));
  double W = 0.0;
  for (std::size_t j = 0; j < m; ++j) W += var_of(chains[j], means[j]);
  W /= static_cast<double>(m);
  const double B_over_n = var_of(means, mean_of(means));
  const double var_plus = W * static_cast<double>(n - 1) / static_cast<double>(n) + B_over_n;
  if (!(var_plus > 0.0) || !(W > 0.0)) return total;

  auto rho = [&](std::size_t lag) {
    double acov = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const auto& c = chains[j];
      double s = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) s += (c[i] - means[j]) * (c[i + lag] - means[j]);
      acov += s / static_cast<double>(n);
    }
    acov /= static_cast<double>(m);
    return 1.0 - (W - acov) / var_plus;
  };

  // tau = -1 + 2 * sum of initial positive, monotone paired sums.
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t + 1 < n; t += 2) {
    double pair = (t == 0 ? 1.0 : rho(t)) + rho(t + 1);
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / std::log10(total));
  return std::min(total / tau, total);
}

double effective_draws(const std::vector<std::vector<double>>& chains) {
  return effective_draws(as_spans(chains));
}

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("probability must lie in [0, 1]");
  const double h = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted[lo];
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

double posterior_mode(std::span<const double> draws) {
  if (draws.empty()) throw std::invalid_argument("mode of an empty sample");
  std::map<double, std::size_t> counts;
  for (double v : draws) ++counts[v];
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

ParamSummary summarize_draws(std::string name, const ChainDraws& chains, bool categorical) {
  ParamSummary s;
  s.name = std::move(name);
  s.categorical = categorical;
  std::vector<double> pooled;
  for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
  if (pooled.empty()) throw std::invalid_argument("cannot summarize an empty trace");
  s.mean = mean_of(pooled);
  s.sd = pooled.size() > 1 ? std::sqrt(var_of(pooled, s.mean)) : 0.0;
  if (categorical) s.mode = posterior_mode(pooled);
  std::sort(pooled.begin(), pooled.end());
  for (std::size_t q = 0; q < kSummaryProbs.size(); ++q) {
    s.quantiles[q] = quantile_sorted(pooled, kSummaryProbs[q]);
  }
  const bool enough = chains.size() >= 2 && chains.front().size() >= 10;
  s.rhat = enough ? rhat(chains) : std::numeric_limits<double>::quiet_NaN();
  s.n_eff = enough ? effective_draws(chains) : static_cast<double>(pooled.size());
  return s;
}

std::string family_of(const std::string& name) { return name.substr(0, name.find('[')); }

std::vector<ParamSummary> summarize(const TraceStore& trace, const std::vector<std::string>& families) {
  std::vector<ParamSummary> out;
  for (std::size_t p = 0; p < trace.n_params(); ++p) {
    if (!families.empty() &&
        std::find(families.begin(), families.end(), family_of(trace.name(p))) == families.end()) {
      continue;
    }
    out.push_back(summarize_draws(trace.name(p), trace.chains_of(p), trace.is_categorical(p)));
  }
  ChainDraws dev;
  for (std::size_t c = 0; c < trace.n_chains(); ++c) dev.push_back(trace.deviance(c));
  out.push_back(summarize_draws("deviance", dev));
  return out;
}

std::vector<int> modal_class(const TraceStore& trace) {
  const std::size_t units = trace.n_tally_persons() * trace.n_tally_occasions();
  const std::size_t C = trace.n_tally_classes();
  std::vector<int> out(units, 0);
  for (std::size_t u = 0; u < units; ++u) {
    std::uint64_t best = 0;
    for (std::size_t c = 0; c < C; ++c) {
      std::uint64_t count = 0;
      for (std::size_t ch = 0; ch < trace.n_chains(); ++ch) count += trace.class_counts(ch)[u * C + c];
      if (count > best) {
        best = count;
        out[u] = static_cast<int>(c);
      }
    }
  }
  return out;
}

std::vector<double> median_class(const TraceStore& trace) {
  const std::size_t units = trace.n_tally_persons() * trace.n_tally_occasions();
  const std::size_t C = trace.n_tally_classes();
  std::vector<double> out(units, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t u = 0; u < units; ++u) {
    std::vector<std::uint64_t> counts(C, 0);
    std::uint64_t total = 0;
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t ch = 0; ch < trace.n_chains(); ++ch) counts[c] += trace.class_counts(ch)[u * C + c];
      total += counts[c];
    }
    if (total == 0) continue;
    // Type-7 median of the sorted draws: average of order statistics
    // floor((n-1)/2) and ceil((n-1)/2), 0-based.
    auto order_stat = [&](std::uint64_t r) {
      std::uint64_t running = 0;
      for (std::size_t c = 0; c < C; ++c) {
        running += counts[c];
        if (r < running) return static_cast<double>(c + 1);
      }
      return static_cast<double>(C);
    };
    out[u] = 0.5 * (order_stat((total - 1) / 2) + order_stat(total / 2));
  }
  return out;
}

ConvergenceCheck check_convergence(const TraceStore& trace, double threshold) {
  if (trace.n_chains() < 2) throw std::invalid_argument("convergence check needs at least two chains");
  ConvergenceCheck out;
  out.degenerate = true;
  auto consider = [&](const std::string& name, const ChainDraws& chains) {
    for (std::size_t c = 1; c < chains.size(); ++c) {
      if (!std::equal(chains[c].begin(), chains[c].end(), chains[0].begin(), chains[0].end())) {
        out.degenerate = false;
      }
    }
    const double r = rhat(chains);
    const double key = std::isnan(r) ? std::numeric_limits<double>::infinity() : r;
    if (out.worst.empty() || key > out.max_rhat) {
      out.max_rhat = key;
      out.worst = name;
    }
  };
  for (std::size_t p = 0; p < trace.n_params(); ++p) {
    if (!trace.is_categorical(p)) consider(trace.name(p), trace.chains_of(p));
  }
  ChainDraws dev;
  for (std::size_t c = 0; c < trace.n_chains(); ++c) dev.push_back(trace.deviance(c));
  consider("deviance", dev);
  out.converged = out.max_rhat < threshold;
  return out;
}

void write_summary_table(std::ostream& out, const std::vector<ParamSummary>& rows) {
  out << "mean sd 2.5% 25% 50% 75% 97.5% Rhat n.eff\n";
  for (const auto& r : rows) {
    out << r.name << ' ' << format_number(r.mean) << ' ' << format_number(r.sd);
    for (double q : r.quantiles) out << ' ' << format_number(q);
    out << ' ' << format_number(r.rhat) << ' ' << format_number(std::round(r.n_eff)) << '\n';
  }
}

void write_traces_csv(std::ostream& out, const TraceStore& trace) {
  out << "chain,iteration";
  for (const auto& name : trace.names()) out << ',' << name;
  out << ",deviance\n";
  for (std::size_t c = 0; c < trace.n_chains(); ++c) {
    for (std::size_t t = 0; t < trace.n_kept(c); ++t) {
      out << c + 1 << ',' << t + 1;
      for (std::size_t p = 0; p < trace.n_params(); ++p) out << ',' << format_number(trace.draws(p, c)[t]);
      out << ',' << format_number(trace.deviance(c)[t]) << '\n';
    }
  }
}

}  // namespace bcdm
