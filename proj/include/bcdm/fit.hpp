#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string_view>

#include <Eigen/Core>

#include "bcdm/core.hpp"
#include "bcdm/trace.hpp"

namespace bcdm {

/// Sum of squared Pearson residuals, (Y - p)^2 / (p (1 - p)). Probabilities
/// must lie strictly inside (0, 1); std::domain_error otherwise.
double discrepancy(const IntMatrix& y, const Eigen::MatrixXd& p);

/// Fraction of iterations whose replicated discrepancy is >= the realized one.
double ppp(std::span<const double> realized, std::span<const double> replicated);
/// Pooled over every chain of a run.
double ppp(const TraceStore& trace);

struct DicResult {
  double dbar;
  double p_e;  // var(D) / 2 with the n - 1 denominator
  double dic;
};

DicResult dic(std::span<const double> deviance);
/// p_e averaged over chains, D-bar pooled.
DicResult dic(const TraceStore& trace);

struct InformationCriteria {
  double aic;
  double bic;
};

/// AIC = D-bar + np, BIC = D-bar + (ln N - 1) np.
InformationCriteria aic_bic(double dbar, double np, std::size_t n_persons);

struct FitReport {
  double dbar = 0, p_e = 0, dic = 0, aic = 0, bic = 0;
  double np = 0;
  /// Alternative parameter count (e.g. a published convention) and the
  /// indices it implies.
  std::optional<double> np_reference;
  std::optional<InformationCriteria> reference;
  double ppp = 0;
  double runtime_seconds = 0;
};

FitReport make_fit_report(const TraceStore& trace, double np, std::size_t n_persons,
                          double runtime_seconds, std::optional<double> np_reference = {});

/// DIC_<model>.txt, deviance_<model>.txt, ppp_<model>.txt and time_<model>.txt,
/// one value each, plus fit_<model>.txt with the full index table.
void write_fit_files(const FitReport& report, const std::filesystem::path& dir,
                     std::string_view model_label);

}  // namespace bcdm
