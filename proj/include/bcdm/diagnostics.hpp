#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bcdm/trace.hpp"

namespace bcdm {

using ChainDraws = std::vector<std::span<const double>>;

/// Brooks-Gelman corrected potential scale reduction factor. Needs at least
/// two chains of equal length >= 10. Chains with zero within-chain variance
/// give 1 when they agree and +inf when they do not.
double rhat(const ChainDraws& chains);
double rhat(const std::vector<std::vector<double>>& chains);

/// Effective number of draws from the chains' pooled autocorrelation, with
/// Geyer's initial positive paired-sum truncation. Capped at the total draws.
double effective_draws(const ChainDraws& chains);
double effective_draws(const std::vector<std::vector<double>>& chains);

/// Type-7 quantile (linear interpolation between order statistics) of sorted data.
double quantile_sorted(std::span<const double> sorted, double prob);

inline constexpr std::array<double, 5> kSummaryProbs{0.025, 0.25, 0.5, 0.75, 0.975};

struct ParamSummary {
  std::string name;
  double mean = 0, sd = 0;
  std::array<double, 5> quantiles{};
  double rhat = 0;  // NaN when fewer than two chains
  double n_eff = 0;
  bool categorical = false;
  double mode = 0;  // categorical parameters only
};

/// Summaries of every monitored parameter whose family is in `families`
/// (all when empty), followed by a "deviance" row.
std::vector<ParamSummary> summarize(const TraceStore& trace,
                                    const std::vector<std::string>& families = {});
ParamSummary summarize_draws(std::string name, const ChainDraws& chains, bool categorical = false);

/// Most frequent value; ties go to the smallest.
double posterior_mode(std::span<const double> draws);

/// Per person and occasion, 0-based modal class from the pooled tallies
/// (ties to the smallest index).
std::vector<int> modal_class(const TraceStore& trace);
/// Per person and occasion, median of the pooled 1-based class draws.
std::vector<double> median_class(const TraceStore& trace);

/// Family of a monitored name: "r_star[2,1]" -> "r_star".
std::string family_of(const std::string& name);

struct ConvergenceCheck {
  bool converged = false;
  double max_rhat = 0;
  std::string worst;
  /// Every chain produced the same draws, so R-hat carries no information.
  bool degenerate = false;
};

/// R-hat over continuous monitored parameters plus the deviance.
ConvergenceCheck check_convergence(const TraceStore& trace, double threshold);

/// Whitespace-delimited table: header "mean sd 2.5% 25% 50% 75% 97.5% Rhat n.eff".
void write_summary_table(std::ostream& out, const std::vector<ParamSummary>& rows);
/// Long CSV: chain,iteration,<parameters...>,deviance.
void write_traces_csv(std::ostream& out, const TraceStore& trace);

}  // namespace bcdm
