#include "bcdm/simulate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "bcdm/io.hpp"

namespace bcdm {

std::size_t SimDesign::n_occasions() const {
  if (item_occasion.empty()) return 1;
  return static_cast<std::size_t>(*std::max_element(item_occasion.begin(), item_occasion.end())) + 1;
}

void SimDesign::validate() const {
  const std::size_t I = items.n_items(), K = items.q().n_attributes(), T = n_occasions();
  if (I == 0) throw std::invalid_argument("design has no items");
  if (n_persons == 0) throw std::invalid_argument("design has no persons");
  if (!items.satisfies_constraints()) throw std::invalid_argument("true item parameters violate constraints");
  if (!item_occasion.empty() && item_occasion.size() != I) {
    throw std::invalid_argument("occasion map must cover every item");
  }
  if (!testlet.empty()) {
    if (testlet.size() != I) throw std::invalid_argument("testlet vector must cover every item");
    if (testlet_variance.size() != static_cast<std::size_t>(n_testlets)) {
      throw std::invalid_argument("one testlet variance per testlet is required");
    }
    for (int m : testlet) {
      if (m < -1 || m >= n_testlets) throw std::invalid_argument("testlet index out of range");
    }
    for (double v : testlet_variance) {
      if (!(v > 0.0)) throw std::invalid_argument("testlet variances must be positive");
    }
    if (!items.logit_link()) throw std::invalid_argument("testlet effects need a logit-link model");
  }
  switch (structure) {
    case Structure::Unstructured: {
      if (T != 1) throw std::invalid_argument("unstructured designs cover one occasion");
      if (!mixing.empty()) {
        UnstructuredLatent u = UnstructuredLatent::uniform(mixing.size());
        u.mixing = mixing;
        u.validate();
        if (mixing.size() != enumerate_patterns(items.q()).n_patterns()) {
          throw std::invalid_argument("mixing proportions must cover every pattern");
        }
      }
      break;
    }
    case Structure::HigherOrder:
    case Structure::Longitudinal:
      if (!items.q().is_binary()) throw std::invalid_argument("trait structures need binary attributes");
      if (slope.size() != K || intercept.size() != K) {
        throw std::invalid_argument("one slope and intercept per attribute is required");
      }
      if (structure == Structure::Longitudinal) {
        LongitudinalLatent l{mu, cholesky, {}};
        l.validate();
        if (l.n_occasions() != T) throw std::invalid_argument("trait mean must have T entries");
      } else if (T != 1) {
        throw std::invalid_argument("higher-order designs cover one occasion");
      }
      break;
  }
}

SimResult simulate_responses(const SimDesign& d) {
  d.validate();
  Random rng(d.seed, 0);
  const ItemBank& bank = d.items;
  const QMatrix& q = bank.q();
  const PatternSpace patterns = enumerate_patterns(q);
  const std::size_t N = d.n_persons, I = bank.n_items(), K = q.n_attributes(), T = d.n_occasions();
  const std::size_t C = patterns.n_patterns();
  const auto M = static_cast<std::size_t>(d.n_testlets);

  SimResult r;
  IntMatrix alpha(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(K * T));
  r.membership.resize(N * T);
  if (d.structure != Structure::Unstructured) r.theta.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(T));
  r.gamma = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(M));

  std::vector<double> log_mix(C, -std::log(static_cast<double>(C)));
  if (!d.mixing.empty()) {
    for (std::size_t c = 0; c < C; ++c) log_mix[c] = std::log(d.mixing[c]);
  }
  std::vector<int> a(K);
  Eigen::VectorXd z(static_cast<Eigen::Index>(T));
  for (std::size_t n = 0; n < N; ++n) {
    const auto en = static_cast<Eigen::Index>(n);
    if (d.structure == Structure::Unstructured) {
      r.membership[n] = static_cast<int>(rng.categorical_log(log_mix));
    } else {
      for (std::size_t t = 0; t < T; ++t) z(static_cast<Eigen::Index>(t)) = rng.normal();
      if (d.structure == Structure::Longitudinal) {
        r.theta.row(en) = (d.mu + d.cholesky * z).transpose();
      } else {
        r.theta.row(en) = z.transpose();
      }
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t k = 0; k < K; ++k) {
          const double eta = d.slope[k] * r.theta(en, static_cast<Eigen::Index>(t)) - d.intercept[k];
          a[k] = rng.bernoulli(logistic(eta));
        }
        r.membership[n * T + t] = static_cast<int>(patterns.index_of(a));
      }
    }
    for (std::size_t t = 0; t < T; ++t) {
      const auto pat = patterns.pattern(static_cast<std::size_t>(r.membership[n * T + t]));
      for (std::size_t k = 0; k < K; ++k) alpha(en, static_cast<Eigen::Index>(t * K + k)) = pat[k];
    }
    for (std::size_t m = 0; m < M; ++m) {
      r.gamma(en, static_cast<Eigen::Index>(m)) = rng.normal(0.0, std::sqrt(d.testlet_variance[m]));
    }
  }

  r.probability.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(I));
  IntMatrix y(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(I));
  std::vector<double> x;
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t i = 0; i < I; ++i) {
      const std::size_t t = d.item_occasion.empty() ? 0 : static_cast<std::size_t>(d.item_occasion[i]);
      const auto pat = patterns.pattern(static_cast<std::size_t>(r.membership[n * T + t]));
      const std::size_t slot = bank.slot_of(i);
      x.resize(bank.n_values(slot));
      bank.features(i, pat, x);
      double p;
      const int m = d.testlet.empty() ? -1 : d.testlet[i];
      if (m >= 0) {
        p = logistic(bank.combine_linear(bank.values(slot), x) + r.gamma(static_cast<Eigen::Index>(n), m));
      } else {
        p = bank.combine(bank.values(slot), x);
      }
      r.probability(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) = p;
      y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) = rng.uniform() < p ? 1 : 0;
    }
  }
  r.y = ResponseMatrix(std::move(y));
  r.alpha = std::move(alpha);
  return r;
}

Dataset make_dataset(const SimDesign& design, const SimResult& result) {
  Dataset d;
  d.q = design.items.q();
  d.y = result.y;
  d.item_occasion = design.item_occasion;
  d.testlet = design.testlet;
  d.n_testlets = design.n_testlets;
  d.item_slot.resize(design.items.n_items());
  for (std::size_t i = 0; i < d.item_slot.size(); ++i) {
    d.item_slot[i] = static_cast<int>(design.items.slot_of(i));
  }
  return d;
}

void randomize_items(ItemBank& items, const ItemRanges& ranges, Random& rng) {
  auto draw = [&](const std::pair<double, double>& r) {
    return r.first + (r.second - r.first) * rng.uniform();
  };
  for (std::size_t s = 0; s < items.n_slots(); ++s) {
    auto v = items.values(s);
    const auto sets = items.effect_sets(s);
    switch (items.family()) {
      case ParamFamily::SlipGuess:
        v[0] = draw(ranges.slip);
        v[1] = draw(ranges.guess);
        break;
      case ParamFamily::Rdina:
        v[0] = draw(ranges.lamda0);
        v[1] = draw(ranges.lamdaK);
        break;
      case ParamFamily::Llm:
      case ParamFamily::Lcdm:
        v[0] = draw(ranges.lamda0);
        for (std::size_t j = 1; j < v.size(); ++j) {
          v[j] = std::has_single_bit(sets[j - 1]) ? draw(ranges.main_effect) : draw(ranges.interaction);
        }
        break;
      case ParamFamily::Rrum:
        v[0] = draw(ranges.pai_star);
        for (std::size_t j = 1; j < v.size(); ++j) v[j] = draw(ranges.r_star);
        break;
    }
  }
  if (!items.satisfies_constraints()) {
    throw std::invalid_argument("parameter ranges produce values that violate model constraints");
  }
}

void write_simulation(const std::filesystem::path& dir, const SimDesign& design,
                      const SimResult& result) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "Y.csv");
    write_csv(out, result.y.entries());
  }
  {
    std::ofstream out(dir / "alpha.csv");
    write_csv(out, result.alpha);
  }
  std::ofstream out(dir / "truth.txt");
  out << "parameter value\n";
  const auto& bank = design.items;
  for (std::size_t s = 0; s < bank.n_slots(); ++s) {
    for (std::size_t j = 0; j < bank.n_values(s); ++j) {
      out << bank.value_name(s, j) << ' ' << format_number(bank.values(s)[j]) << '\n';
    }
  }
  for (std::size_t c = 0; c < design.mixing.size(); ++c) {
    out << "pai[" << c + 1 << "] " << format_number(design.mixing[c]) << '\n';
  }
  for (std::size_t k = 0; k < design.slope.size(); ++k) {
    out << "xi[" << k + 1 << "] " << format_number(design.slope[k]) << '\n';
    out << "beta[" << k + 1 << "] " << format_number(design.intercept[k]) << '\n';
  }
  for (std::size_t m = 0; m < design.testlet_variance.size(); ++m) {
    out << "Sigma_gamma[" << m + 1 << "] " << format_number(design.testlet_variance[m]) << '\n';
  }
  if (design.structure == Structure::Longitudinal) {
    const Eigen::MatrixXd sigma = build_sigma_from_cholesky(design.cholesky);
    for (Eigen::Index t = 1; t < design.mu.size(); ++t) {
      out << "mu_theta[" << t + 1 << "] " << format_number(design.mu(t)) << '\n';
    }
    for (Eigen::Index r = 0; r < sigma.rows(); ++r) {
      for (Eigen::Index c = 0; c <= r; ++c) {
        out << "Sigma_theta[" << r + 1 << ',' << c + 1 << "] " << format_number(sigma(r, c)) << '\n';
      }
    }
  }
}

}  // namespace bcdm
