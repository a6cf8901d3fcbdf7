#include "bdc/closure.hpp"

#include <cmath>
#include <limits>

#include "bdc/error.hpp"

namespace bdc {
namespace {

void check_shared_partition(const std::vector<ProblemPtr>& problems, const char* who) {
  if (problems.empty()) throw UsageError(std::string(who) + ": empty problem list");
  for (const auto& p : problems) {
    if (!p) throw UsageError(std::string(who) + ": null problem");
    if (!(*p->partition() == *problems.front()->partition())) {
      throw UsageError(std::string(who) + ": problems do not share one block partition");
    }
  }
}

class LinearCombination final : public BdcProblem {
 public:
  LinearCombination(std::vector<ProblemPtr> problems, std::vector<double> alpha)
      : problems_(std::move(problems)), alpha_(std::move(alpha)) {}

  const PartitionPtr& partition() const override { return problems_.front()->partition(); }

  double eval_f(const BlockVector& theta) const override {
    double acc = 0.0;
    for (std::size_t r = 0; r < problems_.size(); ++r) acc += alpha_[r] * problems_[r]->eval_f(theta);
    return acc;
  }
  double eval_g(std::size_t i, const BlockVector& theta) const override {
    double acc = 0.0;
    for (std::size_t r = 0; r < problems_.size(); ++r) {
      if (alpha_[r] > 0) acc += alpha_[r] * problems_[r]->eval_g(i, theta);
      if (alpha_[r] < 0) acc += -alpha_[r] * problems_[r]->eval_h(i, theta);
    }
    return acc;
  }
  double eval_h(std::size_t i, const BlockVector& theta) const override {
    double acc = 0.0;
    for (std::size_t r = 0; r < problems_.size(); ++r) {
      if (alpha_[r] > 0) acc += alpha_[r] * problems_[r]->eval_h(i, theta);
      if (alpha_[r] < 0) acc += -alpha_[r] * problems_[r]->eval_g(i, theta);
    }
    return acc;
  }
  Vector grad_g_block(std::size_t i, const BlockVector& theta) const override {
    Vector acc = Vector::Zero(partition()->dim(i));
    for (std::size_t r = 0; r < problems_.size(); ++r) {
      if (alpha_[r] > 0) acc += alpha_[r] * problems_[r]->grad_g_block(i, theta);
      if (alpha_[r] < 0) acc += -alpha_[r] * problems_[r]->subgrad_h_block(i, theta);
    }
    return acc;
  }
  Vector subgrad_h_block(std::size_t i, const BlockVector& theta) const override {
    Vector acc = Vector::Zero(partition()->dim(i));
    for (std::size_t r = 0; r < problems_.size(); ++r) {
      if (alpha_[r] > 0) acc += alpha_[r] * problems_[r]->subgrad_h_block(i, theta);
      if (alpha_[r] < 0) acc += -alpha_[r] * problems_[r]->grad_g_block(i, theta);
    }
    return acc;
  }
  BlockDomain domain(std::size_t i) const override { return problems_.front()->domain(i); }

 private:
  std::vector<ProblemPtr> problems_;
  std::vector<double> alpha_;
};

class PointwiseMax final : public BdcProblem {
 public:
  explicit PointwiseMax(std::vector<ProblemPtr> problems) : problems_(std::move(problems)) {}

  const PartitionPtr& partition() const override { return problems_.front()->partition(); }

  double eval_f(const BlockVector& theta) const override {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : problems_) best = std::max(best, p->eval_f(theta));
    return best;
  }
  double eval_g(std::size_t i, const BlockVector& theta) const override {
    const auto [terms, hsum] = branch_terms(i, theta);
    (void)hsum;
    return terms[active(terms)];
  }
  double eval_h(std::size_t i, const BlockVector& theta) const override {
    double acc = 0.0;
    for (const auto& p : problems_) acc += p->eval_h(i, theta);
    return acc;
  }
  Vector grad_g_block(std::size_t i, const BlockVector& theta) const override {
    const auto [terms, hsum] = branch_terms(i, theta);
    (void)hsum;
    const std::size_t r = active(terms);
    Vector acc = problems_[r]->grad_g_block(i, theta);
    for (std::size_t s = 0; s < problems_.size(); ++s) {
      if (s != r) acc += problems_[s]->subgrad_h_block(i, theta);
    }
    return acc;
  }
  Vector subgrad_h_block(std::size_t i, const BlockVector& theta) const override {
    Vector acc = Vector::Zero(partition()->dim(i));
    for (const auto& p : problems_) acc += p->subgrad_h_block(i, theta);
    return acc;
  }
  BlockDomain domain(std::size_t i) const override { return problems_.front()->domain(i); }

 private:
  // Branch r value g^(r) + sum_{s != r} h^(s), computed as (g^(r) - h^(r)) + H.
  std::pair<std::vector<double>, double> branch_terms(std::size_t i, const BlockVector& theta) const {
    std::vector<double> g(problems_.size()), h(problems_.size());
    double hsum = 0.0;
    for (std::size_t r = 0; r < problems_.size(); ++r) {
      g[r] = problems_[r]->eval_g(i, theta);
      h[r] = problems_[r]->eval_h(i, theta);
      hsum += h[r];
    }
    std::vector<double> terms(problems_.size());
    for (std::size_t r = 0; r < problems_.size(); ++r) terms[r] = g[r] + (hsum - h[r]);
    return {terms, hsum};
  }
  static std::size_t active(const std::vector<double>& terms) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < terms.size(); ++r) {
      if (terms[r] > terms[best]) best = r;
    }
    return best;
  }

  std::vector<ProblemPtr> problems_;
};

class ConjugateComposition final : public BdcProblem {
 public:
  ConjugateComposition(ComponentwiseBdcMap map, ConjugateOracle fstar, Vector cplus, Vector dplus)
      : map_(std::move(map)), fstar_(std::move(fstar)), cplus_(std::move(cplus)), dplus_(std::move(dplus)) {}

  const PartitionPtr& partition() const override { return map_.partition; }

  double eval_f(const BlockVector& theta) const override { return fstar_.value(map_.eval(theta)); }
  double eval_g(std::size_t i, const BlockVector& theta) const override {
    return eval_f(theta) + eval_h(i, theta);
  }
  double eval_h(std::size_t i, const BlockVector& theta) const override {
    const auto [a, b] = map_.split(i, theta);
    return cplus_.dot(a) + dplus_.dot(b);
  }
  Vector grad_g_block(std::size_t i, const BlockVector& theta) const override {
    // Danskin: g_i = max_u <u + c+, a_i> + <d+ - u, b_i> - f(u); differentiate at u*.
    const Vector ustar = fstar_.maximizer(map_.eval(theta));
    const auto [ja, jb] = map_.split_jacobian(i, theta);
    return ja.transpose() * (ustar + cplus_) + jb.transpose() * (dplus_ - ustar);
  }
  Vector subgrad_h_block(std::size_t i, const BlockVector& theta) const override {
    const auto [ja, jb] = map_.split_jacobian(i, theta);
    return ja.transpose() * cplus_ + jb.transpose() * dplus_;
  }

 private:
  ComponentwiseBdcMap map_;
  ConjugateOracle fstar_;
  Vector cplus_;
  Vector dplus_;
};

}  // namespace

ProblemPtr combine_linear(std::vector<ProblemPtr> problems, std::vector<double> alpha) {
  check_shared_partition(problems, "combine_linear");
  if (alpha.size() != problems.size()) throw UsageError("combine_linear: one weight per problem required");
  return std::make_shared<LinearCombination>(std::move(problems), std::move(alpha));
}

ProblemPtr combine_max(std::vector<ProblemPtr> problems) {
  check_shared_partition(problems, "combine_max");
  return std::make_shared<PointwiseMax>(std::move(problems));
}

ProblemPtr combine_min(std::vector<ProblemPtr> problems) {
  check_shared_partition(problems, "combine_min");
  for (auto& p : problems) p = combine_linear({p}, {-1.0});
  return combine_linear({combine_max(std::move(problems))}, {-1.0});
}

std::pair<Vector, Vector> conjugate_shifts(const CoordinateBounds& bounds) {
  if (bounds.lower.size() != bounds.upper.size()) throw UsageError("conjugate bounds: length mismatch");
  if (!bounds.lower.allFinite() || !bounds.upper.allFinite()) {
    throw UsageError("conjugate_compose: coordinate bounds of U must be finite (U compact)");
  }
  return {(-bounds.lower).cwiseMax(0.0), bounds.upper.cwiseMax(0.0)};
}

ProblemPtr conjugate_compose(ComponentwiseBdcMap map, ConjugateOracle fstar, CoordinateBounds bounds) {
  auto [cplus, dplus] = conjugate_shifts(bounds);
  if (cplus.size() != map.components) throw UsageError("conjugate_compose: bounds length != components");
  if (!map.partition || !map.eval || !map.split || !map.split_jacobian) {
    throw UsageError("conjugate_compose: incomplete componentwise map");
  }
  if (!fstar.value || !fstar.maximizer) throw UsageError("conjugate_compose: incomplete conjugate oracle");
  return std::make_shared<ConjugateComposition>(std::move(map), std::move(fstar), std::move(cplus),
                                                std::move(dplus));
}

ConjugateOracle log_sum_exp_conjugate() {
  ConjugateOracle o;
  o.value = [](const Vector& t) {
    const double m = t.maxCoeff();
    return m + std::log((t.array() - m).exp().sum());
  };
  o.maximizer = [](const Vector& t) {
    const double m = t.maxCoeff();
    Vector e = (t.array() - m).exp();
    return Vector(e / e.sum());
  };
  return o;
}

CoordinateBounds simplex_bounds(Index classes) {
  return {Vector::Zero(classes), Vector::Ones(classes)};
}

}  // namespace bdc
