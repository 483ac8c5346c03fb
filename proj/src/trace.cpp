#include "bcdm/trace.hpp"

#include <stdexcept>

namespace bcdm {

TraceStore::TraceStore(std::vector<std::string> names, std::vector<bool> categorical,
                       std::size_t n_chains)
    : names_(std::move(names)), categorical_(std::move(categorical)), chains_(n_chains) {
  if (names_.size() != categorical_.size()) {
    throw std::invalid_argument("one categorical flag per monitored parameter is required");
  }
  for (auto& c : chains_) c.params.resize(names_.size());
}

std::size_t TraceStore::n_kept(std::size_t chain) const {
  return chains_.empty() ? 0 : chains_[chain].deviance.size();
}

std::size_t TraceStore::total_kept() const {
  std::size_t total = 0;
  for (const auto& c : chains_) total += c.deviance.size();
  return total;
}

std::optional<std::size_t> TraceStore::find(std::string_view name) const {
  for (std::size_t p = 0; p < names_.size(); ++p) {
    if (names_[p] == name) return p;
  }
  return std::nullopt;
}

std::vector<std::span<const double>> TraceStore::chains_of(std::size_t param) const {
  std::vector<std::span<const double>> out;
  out.reserve(chains_.size());
  for (const auto& c : chains_) out.emplace_back(c.params[param]);
  return out;
}

std::vector<double> TraceStore::pooled(std::size_t param) const {
  std::vector<double> out;
  out.reserve(total_kept());
  for (const auto& c : chains_) out.insert(out.end(), c.params[param].begin(), c.params[param].end());
  return out;
}

void TraceStore::append(std::size_t chain, std::span<const double> values, double deviance,
                        double realized, double replicated) {
  auto& c = chains_.at(chain);
  if (values.size() != names_.size()) {
    throw std::invalid_argument("trace row has the wrong number of parameters");
  }
  for (std::size_t p = 0; p < values.size(); ++p) c.params[p].push_back(values[p]);
  c.deviance.push_back(deviance);
  c.realized.push_back(realized);
  c.replicated.push_back(replicated);
}

void TraceStore::reserve(std::size_t chain, std::size_t n) {
  auto& c = chains_.at(chain);
  for (auto& p : c.params) p.reserve(n);
  c.deviance.reserve(n);
  c.realized.reserve(n);
  c.replicated.reserve(n);
}

void TraceStore::set_class_layout(std::size_t n_persons, std::size_t n_occasions,
                                  std::size_t n_classes) {
  tally_persons_ = n_persons;
  tally_occasions_ = n_occasions;
  tally_classes_ = n_classes;
  for (auto& c : chains_) c.counts.assign(n_persons * n_occasions * n_classes, 0);
}

void TraceStore::tally(std::size_t chain, std::span<const int> membership) {
  auto& counts = chains_.at(chain).counts;
  if (membership.size() != tally_persons_ * tally_occasions_) {
    throw std::invalid_argument("membership vector does not match the tally layout");
  }
  for (std::size_t u = 0; u < membership.size(); ++u) {
    ++counts[u * tally_classes_ + static_cast<std::size_t>(membership[u])];
  }
}

}  // namespace bcdm
