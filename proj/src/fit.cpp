#include "bcdm/fit.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bcdm/io.hpp"

namespace bcdm {

double discrepancy(const IntMatrix& y, const Eigen::MatrixXd& p) {
  if (y.rows() != p.rows() || y.cols() != p.cols()) {
    throw std::invalid_argument("responses and probabilities differ in shape");
  }
  double total = 0.0;
  for (Eigen::Index n = 0; n < y.rows(); ++n) {
    for (Eigen::Index i = 0; i < y.cols(); ++i) {
      const double pi = p(n, i);
      if (!(pi > 0.0 && pi < 1.0)) throw std::domain_error("probabilities must lie in (0, 1)");
      const double r = y(n, i) - pi;
      total += r * r / (pi * (1.0 - pi));
    }
  }
  return total;
}

double ppp(std::span<const double> realized, std::span<const double> replicated) {
  if (realized.empty()) throw std::invalid_argument("ppp needs at least one iteration");
  if (realized.size() != replicated.size()) {
    throw std::invalid_argument("realized and replicated traces differ in length");
  }
  std::size_t hits = 0;
  for (std::size_t t = 0; t < realized.size(); ++t) hits += replicated[t] >= realized[t];
  return static_cast<double>(hits) / static_cast<double>(realized.size());
}

double ppp(const TraceStore& trace) {
  std::size_t hits = 0, total = 0;
  for (std::size_t c = 0; c < trace.n_chains(); ++c) {
    const auto real = trace.realized_discrepancy(c), rep = trace.replicated_discrepancy(c);
    for (std::size_t t = 0; t < real.size(); ++t) hits += rep[t] >= real[t];
    total += real.size();
  }
  if (total == 0) throw std::invalid_argument("ppp needs at least one iteration");
  return static_cast<double>(hits) / static_cast<double>(total);
}

DicResult dic(std::span<const double> deviance) {
  if (deviance.size() < 2) throw std::invalid_argument("DIC needs at least two deviance draws");
  const double n = static_cast<double>(deviance.size());
  const double dbar = std::accumulate(deviance.begin(), deviance.end(), 0.0) / n;
  double ss = 0.0;
  for (double d : deviance) ss += (d - dbar) * (d - dbar);
  const double p_e = ss / (n - 1.0) / 2.0;
  return {dbar, p_e, dbar + p_e};
}

DicResult dic(const TraceStore& trace) {
  if (trace.n_chains() == 0) throw std::invalid_argument("DIC needs at least one chain");
  double sum = 0.0, p_e = 0.0;
  std::size_t count = 0;
  for (std::size_t c = 0; c < trace.n_chains(); ++c) {
    const auto d = trace.deviance(c);
    p_e += dic(d).p_e;
    sum += std::accumulate(d.begin(), d.end(), 0.0);
    count += d.size();
  }
  p_e /= static_cast<double>(trace.n_chains());
  const double dbar = sum / static_cast<double>(count);
  return {dbar, p_e, dbar + p_e};
}

InformationCriteria aic_bic(double dbar, double np, std::size_t n_persons) {
  if (np < 0.0) throw std::invalid_argument("parameter count must be non-negative");
  if (n_persons < 1) throw std::invalid_argument("at least one person is required");
  return {dbar + np, dbar + (std::log(static_cast<double>(n_persons)) - 1.0) * np};
}

FitReport make_fit_report(const TraceStore& trace, double np, std::size_t n_persons,
                          double runtime_seconds, std::optional<double> np_reference) {
  FitReport r;
  const auto d = dic(trace);
  r.dbar = d.dbar;
  r.p_e = d.p_e;
  r.dic = d.dic;
  r.np = np;
  const auto ic = aic_bic(d.dbar, np, n_persons);
  r.aic = ic.aic;
  r.bic = ic.bic;
  if (np_reference) {
    r.np_reference = np_reference;
    r.reference = aic_bic(d.dbar, *np_reference, n_persons);
  }
  r.ppp = ppp(trace);
  r.runtime_seconds = runtime_seconds;
  return r;
}

namespace {

void write_value(const std::filesystem::path& path, double value) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_number(value) << '\n';
}

}  // namespace

void write_fit_files(const FitReport& report, const std::filesystem::path& dir,
                     std::string_view model_label) {
  const std::string tag = std::string(model_label) + ".txt";
  write_value(dir / ("DIC_" + tag), report.dic);
  write_value(dir / ("deviance_" + tag), report.dbar);
  write_value(dir / ("ppp_" + tag), report.ppp);
  write_value(dir / ("time_" + tag), report.runtime_seconds);

  std::ofstream out(dir / ("fit_" + tag));
  if (!out) throw std::runtime_error("cannot write fit table in " + dir.string());
  out << "ppp NP -2LL pD AIC BIC DIC\n";
  out << format_number(report.ppp) << ' ' << format_number(report.np) << ' '
      << format_number(report.dbar) << ' ' << format_number(report.p_e) << ' '
      << format_number(report.aic) << ' ' << format_number(report.bic) << ' '
      << format_number(report.dic) << '\n';
  if (report.np_reference && report.reference) {
    out << format_number(report.ppp) << ' ' << format_number(*report.np_reference) << ' '
        << format_number(report.dbar) << ' ' << format_number(report.p_e) << ' '
        << format_number(report.reference->aic) << ' ' << format_number(report.reference->bic) << ' '
        << format_number(report.dic) << '\n';
  }
}

}  // namespace bcdm
