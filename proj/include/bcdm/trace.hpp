#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bcdm {

/// Post-burn-in, thinned draws of every monitored scalar, per chain, plus
/// the deviance and realized/replicated discrepancy of each kept iteration.
class TraceStore {
 public:
  TraceStore() = default;
  TraceStore(std::vector<std::string> names, std::vector<bool> categorical, std::size_t n_chains);

  std::size_t n_chains() const { return chains_.size(); }
  std::size_t n_params() const { return names_.size(); }
  /// Kept draws per chain (equal across chains once a run completes).
  std::size_t n_kept(std::size_t chain = 0) const;
  std::size_t total_kept() const;

  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t param) const { return names_[param]; }
  bool is_categorical(std::size_t param) const { return categorical_[param]; }
  std::optional<std::size_t> find(std::string_view name) const;

  std::span<const double> draws(std::size_t param, std::size_t chain) const {
    return chains_[chain].params[param];
  }
  std::vector<std::span<const double>> chains_of(std::size_t param) const;
  /// Every chain's draws of one parameter, concatenated in chain order.
  std::vector<double> pooled(std::size_t param) const;

  std::span<const double> deviance(std::size_t chain) const { return chains_[chain].deviance; }
  std::span<const double> realized_discrepancy(std::size_t chain) const {
    return chains_[chain].realized;
  }
  std::span<const double> replicated_discrepancy(std::size_t chain) const {
    return chains_[chain].replicated;
  }

  /// Appends one kept iteration to a chain. Safe to call concurrently for
  /// different chains.
  void append(std::size_t chain, std::span<const double> values, double deviance,
              double realized, double replicated);
  void reserve(std::size_t chain, std::size_t n);

  /// Class-membership tallies over kept iterations, per chain, laid out as
  /// [(person * n_occasions + t) * n_classes + c]. They back the modal and
  /// median class even when c is not monitored as a trace.
  void set_class_layout(std::size_t n_persons, std::size_t n_occasions, std::size_t n_classes);
  std::size_t n_tally_persons() const { return tally_persons_; }
  std::size_t n_tally_occasions() const { return tally_occasions_; }
  std::size_t n_tally_classes() const { return tally_classes_; }
  void tally(std::size_t chain, std::span<const int> membership);
  std::span<const std::uint32_t> class_counts(std::size_t chain) const {
    return chains_[chain].counts;
  }

  bool operator==(const TraceStore&) const = default;

 private:
  struct ChainTrace {
    std::vector<std::vector<double>> params;
    std::vector<double> deviance, realized, replicated;
    std::vector<std::uint32_t> counts;
    bool operator==(const ChainTrace&) const = default;
  };

  std::vector<std::string> names_;
  std::vector<bool> categorical_;
  std::vector<ChainTrace> chains_;
  std::size_t tally_persons_ = 0, tally_occasions_ = 0, tally_classes_ = 0;
};

}  // namespace bcdm
