#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bdc/rational.hpp"

namespace bdc {

/// theta_1^{b_1} ... theta_n^{b_n}.
struct Monomial {
  std::vector<int> exponents;

  explicit Monomial(std::vector<int> b);

  std::size_t n() const { return exponents.size(); }
  int degree() const;
  double eval(std::span<const double> theta) const;
};

/// weight * (form . theta + shift)^power with an integer form whose first nonzero entry is
/// positive (the shift carries the sign when the form vanishes).
struct Atom {
  Rational weight;
  std::vector<std::int64_t> form;
  std::int64_t shift = 0;
  int power = 2;

  double eval(std::span<const double> theta) const;
  /// Convex atoms have an even power; linear atoms (power 1) are both convex and concave.
  bool convex() const { return power % 2 == 0 || power == 1; }
};

/// scale * sum of atoms. Positive-weight atoms form g, negative-weight atoms form h.
struct AtomDecomposition {
  Monomial target;
  std::vector<Atom> atoms;
  Rational scale{1};

  std::size_t size() const { return atoms.size(); }
  double eval(std::span<const double> theta) const;
  /// Effective weight of atom k (scale folded in).
  Rational effective_weight(std::size_t k) const { return scale * atoms[k].weight; }
  /// Atom count after merging proportional atoms, e.g. (2x)^6 and x^6.
  std::size_t merged_count() const;
  /// g - h split values.
  double eval_positive(std::span<const double> theta) const;
  double eval_negative(std::span<const double> theta) const;
};

/// Polarization identity with complementary-index pairing. Even degree: pure powers
/// (form . theta)^s with the zero center dropped. Odd degree: homogenize with t, polarize in
/// n+1 variables at degree s+1, then set t = 1 (affine atoms, shift = t coefficient).
AtomDecomposition polarize(const Monomial& m);

struct AtomBounds {
  std::int64_t lower = 0;
  std::int64_t upper = 0;
  bool exact = false;
};

/// Minimum DC atom count bounds for a monomial (zero exponents ignored, sorted internally).
/// Even s: prod_{i>=2}(b_i+1) <= N <= floor(prod(b_i+1)/2); odd s: N = prod(b_i+1).
AtomBounds dc_atom_bounds(const Monomial& m);

using Grouping = std::vector<std::vector<std::size_t>>;

/// Product of per-group decompositions; each group is decomposed independently.
struct BlockDecomposition {
  Monomial target;
  Grouping grouping;
  std::vector<AtomDecomposition> factors;

  std::size_t total_atoms() const;
  std::vector<std::size_t> counts() const;
  double eval(std::span<const double> theta) const;
};

/// Splits the monomial along `grouping` (0-based variable indices). A group holding one
/// variable with exponent 1 or an even exponent is kept as the single atom theta_j^{b_j}.
BlockDecomposition bdc_block_decompose(const Monomial& m, const Grouping& grouping);

/// Parses "1,2|3,4" (1-based, as typed on the command line) into a 0-based grouping.
Grouping parse_grouping(const std::string& text);

struct VerifyReport {
  bool pass = false;
  double max_rel_error = 0.0;
  int trials = 0;
};

/// Compares candidate(theta) with m(theta) at `trials` points uniform in [-2, 2]^n; the
/// error is |candidate - m| / max(1, |m|).
VerifyReport verify_identity(const std::function<double(std::span<const double>)>& candidate,
                             const Monomial& m, int trials, double tol, std::uint64_t seed = 0);
VerifyReport verify_identity(const AtomDecomposition& dec, const Monomial& m, int trials, double tol,
                             std::uint64_t seed = 0);
VerifyReport verify_identity(const BlockDecomposition& dec, const Monomial& m, int trials, double tol,
                             std::uint64_t seed = 0);

/// "w * (u.theta + k)^p" rendering, e.g. "1/4 * (1*t1 + 1*t2)^2".
std::string format_atom(const Atom& atom, const Rational& scale);

/// CSV columns: weight_num, weight_den, u_1..u_n, kappa, power (effective weights).
void write_atoms_csv(const AtomDecomposition& dec, const std::filesystem::path& path);

}  // namespace bdc
