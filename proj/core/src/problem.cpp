#include "bdc/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bdc/error.hpp"
#include "bdc/rng.hpp"

namespace bdc {

BlockDomain BlockDomain::ball_product(Index column_dim, double radius) {
  if (column_dim < 1) throw UsageError("ball_product: column_dim must be >= 1");
  BlockDomain d;
  d.kind = Kind::kBallProduct;
  d.column_dim = column_dim;
  d.radius = radius;
  return d;
}

Vector BlockDomain::projection(const Vector& x) const {
  switch (kind) {
    case Kind::kUnconstrained:
      return x;
    case Kind::kBallProduct: {
      if (x.size() % column_dim != 0) throw UsageError("ball product: length not a multiple of column_dim");
      Vector out = x;
      for (Index c = 0; c < x.size() / column_dim; ++c) {
        auto col = out.segment(c * column_dim, column_dim);
        const double nrm = col.norm();
        if (nrm > radius) col *= radius / nrm;
      }
      return out;
    }
    case Kind::kConvexSet:
      if (!project) throw UsageError("convex-set domain without projection oracle");
      return project(x);
  }
  return x;
}

Vector BlockDomain::min_norm_with_normal_cone(const Vector& x, const Vector& w) const {
  switch (kind) {
    case Kind::kUnconstrained:
      return w;
    case Kind::kBallProduct: {
      // N(x) on a column at the boundary is {t x_c : t >= 0}; interior columns have N = {0}.
      Vector out = w;
      const double boundary_tol = 1e-10 * std::max(1.0, radius);
      for (Index c = 0; c < x.size() / column_dim; ++c) {
        const auto xc = x.segment(c * column_dim, column_dim);
        const double nrm = xc.norm();
        if (nrm < radius - boundary_tol || nrm == 0.0) continue;
        auto oc = out.segment(c * column_dim, column_dim);
        const Vector dir = xc / nrm;
        const double t = std::max(0.0, -oc.dot(dir));
        oc += t * dir;
      }
      return out;
    }
    case Kind::kConvexSet: {
      // Without a cone oracle use the projected-gradient mapping with unit step, which
      // coincides with the reduction on polyhedral and ball constraints near x.
      return x - projection(x - w);
    }
  }
  return w;
}

Vector BdcProblem::block_residual(std::size_t i, const BlockVector& theta, const Vector& u) const {
  const Vector w = grad_g_block(i, theta) - u;
  const BlockDomain dom = domain(i);
  if (!dom.constrained()) return w;
  return dom.min_norm_with_normal_cone(theta.block(i), w);
}

BlockSubproblem BdcProblem::subproblem(std::size_t i, const BlockVector& theta) const {
  BlockSubproblem sp;
  sp.method = InnerMethod::kProxGradient;
  // The lambdas own a copy of theta; the inner solver only varies block i.
  auto base = std::make_shared<const BlockVector>(theta);
  sp.smooth_value = [this, i, base](const Vector& x) { return eval_g(i, replace_block(*base, i, x)); };
  sp.smooth_grad = [this, i, base](const Vector& x) { return grad_g_block(i, replace_block(*base, i, x)); };
  const BlockDomain dom = domain(i);
  if (dom.constrained()) {
    sp.prox = [dom](const Vector& v, double) { return dom.projection(v); };
  }
  return sp;
}

SampleHandle draw_minibatch(std::size_t population, std::size_t batch, std::uint64_t seed,
                            std::uint64_t id) {
  if (population == 0) throw UsageError("draw_minibatch: empty population");
  if (batch == 0 || batch > population) {
    throw UsageError("draw_minibatch: batch must be in [1, population]");
  }
  SampleHandle h;
  h.id = id;
  std::vector<std::size_t> perm(population);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  const CounterRng rng(seed);
  // Partial Fisher-Yates: first `batch` slots form a uniform subset.
  for (std::size_t k = 0; k < batch; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.below(population - k, id, k));
    std::swap(perm[k], perm[j]);
  }
  perm.resize(batch);
  std::sort(perm.begin(), perm.end());
  h.indices = std::move(perm);
  return h;
}

double residual_upper(const BdcProblem& p, const BlockVector& theta) {
  double sq = 0.0;
  for (std::size_t i = 0; i < p.n_blocks(); ++i) {
    const Vector u = p.subgrad_h_block(i, theta);
    sq += p.block_residual(i, theta, u).squaredNorm();
  }
  return std::sqrt(sq);
}

}  // namespace bdc
