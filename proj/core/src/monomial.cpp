#include "bdc/monomial.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "bdc/error.hpp"
#include "bdc/rng.hpp"

namespace bdc {
namespace {

double ipow_d(double x, int p) {
  double r = 1.0;
  for (int k = 0; k < p; ++k) r *= x;
  return r;
}

// Lexicographic successor on the grid prod [0, b_i]; false after the last point.
bool next_index(std::vector<int>& v, const std::vector<int>& b) {
  for (std::size_t i = v.size(); i-- > 0;) {
    if (v[i] < b[i]) {
      ++v[i];
      return true;
    }
    v[i] = 0;
  }
  return false;
}

// Flips the sign of u so its first nonzero entry is positive; returns false if u == 0.
bool canonicalize(std::vector<std::int64_t>& u) {
  for (auto x : u) {
    if (x == 0) continue;
    if (x < 0) {
      for (auto& y : u) y = -y;
    }
    return true;
  }
  return false;
}

// Polarization of prod theta_i^{b_i} over all variables in b (homogeneous case).
// Returns integer forms in the coordinates of b with weights; scale is 1/S!.
struct RawAtom {
  std::vector<std::int64_t> form;
  Rational weight;
};

std::vector<RawAtom> polarize_homogeneous(const std::vector<int>& b, int S) {
  const bool all_even = std::all_of(b.begin(), b.end(), [](int x) { return x % 2 == 0; });
  // (sum (b_i/2 - v_i) theta_i)^S = c * (form . theta)^S with form = b - 2v (c = 2^-S) or,
  // when b is even, form = b/2 - v (c = 1).
  const Rational form_scale = all_even ? Rational(1) : Rational(1, ipow(2, S));

  std::map<std::vector<std::int64_t>, Rational> acc;
  std::vector<int> v(b.size(), 0);
  do {
    std::vector<int> comp(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) comp[i] = b[i] - v[i];
    // Pair v with b - v: visit only the lexicographically smaller member.
    if (comp < v) continue;
    std::vector<std::int64_t> u(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) u[i] = all_even ? b[i] / 2 - v[i] : b[i] - 2 * v[i];
    if (!canonicalize(u)) continue;  // center term, zero form
    std::int64_t coeff = 1;
    int vsum = 0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      coeff *= binomial(b[i], v[i]);
      vsum += v[i];
    }
    if (vsum % 2 != 0) coeff = -coeff;
    const std::int64_t mult = (comp == v) ? 1 : 2;
    acc[u] += Rational(coeff * mult) * form_scale;
  } while (next_index(v, b));

  std::vector<RawAtom> out;
  out.reserve(acc.size());
  for (auto& [u, w] : acc) {
    if (!w.is_zero()) out.push_back({u, w});
  }
  return out;
}

std::int64_t gcd_all(const std::vector<std::int64_t>& u, std::int64_t extra) {
  std::int64_t g = std::abs(extra);
  for (auto x : u) g = std::gcd(g, std::abs(x));
  return g;
}

void check_monomial(const Monomial& m) {
  if (m.n() == 0) throw UsageError("monomial: empty exponent list");
  if (m.degree() < 1) throw UsageError("monomial: degree must be >= 1");
}

}  // namespace

Monomial::Monomial(std::vector<int> b) : exponents(std::move(b)) {
  for (int x : exponents) {
    if (x < 0) throw UsageError("monomial: exponents must be nonnegative");
  }
}

int Monomial::degree() const { return std::accumulate(exponents.begin(), exponents.end(), 0); }

double Monomial::eval(std::span<const double> theta) const {
  if (theta.size() != n()) throw UsageError("monomial eval: dimension mismatch");
  double r = 1.0;
  for (std::size_t i = 0; i < n(); ++i) r *= ipow_d(theta[i], exponents[i]);
  return r;
}

double Atom::eval(std::span<const double> theta) const {
  double lin = static_cast<double>(shift);
  for (std::size_t i = 0; i < form.size(); ++i) lin += static_cast<double>(form[i]) * theta[i];
  return weight.to_double() * ipow_d(lin, power);
}

double AtomDecomposition::eval(std::span<const double> theta) const {
  return eval_positive(theta) - eval_negative(theta);
}

double AtomDecomposition::eval_positive(std::span<const double> theta) const {
  double acc = 0.0;
  for (const auto& a : atoms) {
    if (a.weight.num() > 0) acc += a.eval(theta);
  }
  return scale.to_double() * acc;
}

double AtomDecomposition::eval_negative(std::span<const double> theta) const {
  double acc = 0.0;
  for (const auto& a : atoms) {
    if (a.weight.num() < 0) acc -= a.eval(theta);
  }
  return scale.to_double() * acc;
}

std::size_t AtomDecomposition::merged_count() const {
  // (c u . theta + c k)^p = c^p (u . theta + k)^p: merge on the primitive (form, shift).
  std::map<std::tuple<std::vector<std::int64_t>, std::int64_t, int>, Rational> acc;
  for (const auto& a : atoms) {
    const std::int64_t g = gcd_all(a.form, a.shift);
    std::vector<std::int64_t> u = a.form;
    for (auto& x : u) x /= g;
    acc[{u, a.shift / g, a.power}] += a.weight * Rational(ipow(g, a.power));
  }
  return static_cast<std::size_t>(
      std::count_if(acc.begin(), acc.end(), [](const auto& kv) { return !kv.second.is_zero(); }));
}

AtomDecomposition polarize(const Monomial& m) {
  check_monomial(m);
  const int s = m.degree();
  AtomDecomposition dec{m, {}, Rational(1)};
  if (s % 2 == 0) {
    dec.scale = Rational(1, factorial(s));
    for (auto& raw : polarize_homogeneous(m.exponents, s)) {
      dec.atoms.push_back(Atom{raw.weight, std::move(raw.form), 0, s});
    }
    return dec;
  }
  // Odd degree: t * m is homogeneous of even degree s + 1 in (t, theta); set t = 1.
  std::vector<int> b;
  b.reserve(m.n() + 1);
  b.push_back(1);
  b.insert(b.end(), m.exponents.begin(), m.exponents.end());
  dec.scale = Rational(1, factorial(s + 1));
  for (auto& raw : polarize_homogeneous(b, s + 1)) {
    std::vector<std::int64_t> u(raw.form.begin() + 1, raw.form.end());
    std::int64_t k = raw.form.front();
    // Even power: (u, k) and (-u, -k) give the same atom. Sign is fixed on the theta part,
    // and on k only when the theta part vanishes.
    const auto first = std::find_if(u.begin(), u.end(), [](std::int64_t x) { return x != 0; });
    if (first == u.end() ? k < 0 : *first < 0) {
      for (auto& x : u) x = -x;
      k = -k;
    }
    dec.atoms.push_back(Atom{raw.weight, std::move(u), k, s + 1});
  }
  return dec;
}

AtomBounds dc_atom_bounds(const Monomial& m) {
  check_monomial(m);
  std::vector<int> b;
  for (int x : m.exponents) {
    if (x > 0) b.push_back(x);
  }
  std::sort(b.begin(), b.end());
  std::int64_t full = 1;
  for (int x : b) full *= (x + 1);
  AtomBounds out;
  if (m.degree() % 2 == 1) {
    out.lower = out.upper = full;
    out.exact = true;
    return out;
  }
  out.lower = full / (b.front() + 1);
  out.upper = full / 2;
  out.exact = out.lower == out.upper;
  return out;
}

std::size_t BlockDecomposition::total_atoms() const {
  std::size_t n = 0;
  for (const auto& f : factors) n += f.size();
  return n;
}

std::vector<std::size_t> BlockDecomposition::counts() const {
  std::vector<std::size_t> c;
  for (const auto& f : factors) c.push_back(f.size());
  return c;
}

double BlockDecomposition::eval(std::span<const double> theta) const {
  double r = 1.0;
  for (const auto& f : factors) r *= f.eval(theta);
  return r;
}

BlockDecomposition bdc_block_decompose(const Monomial& m, const Grouping& grouping) {
  check_monomial(m);
  std::vector<int> seen(m.n(), 0);
  for (const auto& group : grouping) {
    if (group.empty()) throw UsageError("grouping: empty group");
    for (std::size_t j : group) {
      if (j >= m.n()) throw UsageError("grouping: variable index out of range");
      if (seen[j]++) throw UsageError("grouping: variable appears in two groups");
    }
  }
  for (std::size_t j = 0; j < m.n(); ++j) {
    if (m.exponents[j] > 0 && !seen[j]) throw UsageError("grouping: variable with positive exponent not covered");
  }

  BlockDecomposition out{m, grouping, {}};
  for (const auto& group : grouping) {
    std::vector<int> sub;
    for (std::size_t j : group) sub.push_back(m.exponents[j]);
    const Monomial sm(sub);
    if (sm.degree() == 0) continue;  // theta^0 factors are the constant 1

    const AtomDecomposition local = (group.size() == 1 && (sub[0] == 1 || sub[0] % 2 == 0))
                                        ? AtomDecomposition{sm, {Atom{Rational(1), {1}, 0, sub[0]}}, Rational(1)}
                                        : polarize(sm);
    // Lift forms to all n coordinates.
    AtomDecomposition lifted{m, {}, local.scale};
    for (const auto& a : local.atoms) {
      std::vector<std::int64_t> u(m.n(), 0);
      for (std::size_t k = 0; k < group.size(); ++k) u[group[k]] = a.form[k];
      lifted.atoms.push_back(Atom{a.weight, std::move(u), a.shift, a.power});
    }
    lifted.target = sm;
    out.factors.push_back(std::move(lifted));
  }
  return out;
}

Grouping parse_grouping(const std::string& text) {
  Grouping g;
  std::stringstream groups(text);
  std::string part;
  while (std::getline(groups, part, '|')) {
    std::vector<std::size_t> block;
    std::stringstream items(part);
    std::string item;
    while (std::getline(items, item, ',')) {
      std::size_t pos = 0;
      long v = 0;
      try {
        v = std::stol(item, &pos);
      } catch (const std::exception&) {
        throw UsageError("grouping: cannot parse '" + item + "'");
      }
      if (v < 1) throw UsageError("grouping: indices are 1-based");
      block.push_back(static_cast<std::size_t>(v - 1));
    }
    g.push_back(std::move(block));
  }
  return g;
}

VerifyReport verify_identity(const std::function<double(std::span<const double>)>& candidate,
                             const Monomial& m, int trials, double tol, std::uint64_t seed) {
  if (trials < 1) throw UsageError("verify_identity: trials must be >= 1");
  Engine eng = make_engine(seed, "verify");
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  std::vector<double> theta(m.n());
  VerifyReport rep;
  rep.trials = trials;
  for (int t = 0; t < trials; ++t) {
    for (auto& x : theta) x = unif(eng);
    const double want = m.eval(theta);
    const double got = candidate(theta);
    const double err = std::abs(got - want) / std::max(1.0, std::abs(want));
    rep.max_rel_error = std::isnan(err) ? INFINITY : std::max(rep.max_rel_error, err);
  }
  rep.pass = rep.max_rel_error <= tol;
  return rep;
}

VerifyReport verify_identity(const AtomDecomposition& dec, const Monomial& m, int trials, double tol,
                             std::uint64_t seed) {
  return verify_identity([&dec](std::span<const double> th) { return dec.eval(th); }, m, trials, tol, seed);
}

VerifyReport verify_identity(const BlockDecomposition& dec, const Monomial& m, int trials, double tol,
                             std::uint64_t seed) {
  return verify_identity([&dec](std::span<const double> th) { return dec.eval(th); }, m, trials, tol, seed);
}

std::string format_atom(const Atom& atom, const Rational& scale) {
  std::ostringstream os;
  os << (scale * atom.weight).str() << " * (";
  bool first = true;
  for (std::size_t i = 0; i < atom.form.size(); ++i) {
    const std::int64_t c = atom.form[i];
    if (c == 0) continue;
    if (!first) os << (c < 0 ? " - " : " + ");
    else if (c < 0) os << "-";
    os << std::abs(c) << "*t" << (i + 1);
    first = false;
  }
  if (atom.shift != 0 || first) {
    if (!first) os << (atom.shift < 0 ? " - " : " + ") << std::abs(atom.shift);
    else os << atom.shift;
  }
  os << ")^" << atom.power;
  return os.str();
}

void write_atoms_csv(const AtomDecomposition& dec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open " + path.string() + " for writing");
  const std::size_t n = dec.atoms.empty() ? dec.target.n() : dec.atoms.front().form.size();
  out << "weight_num,weight_den";
  for (std::size_t i = 1; i <= n; ++i) out << ",u_" << i;
  out << ",kappa,power\n";
  for (std::size_t k = 0; k < dec.atoms.size(); ++k) {
    const Rational w = dec.effective_weight(k);
    out << w.num() << ',' << w.den();
    for (auto c : dec.atoms[k].form) out << ',' << c;
    out << ',' << dec.atoms[k].shift << ',' << dec.atoms[k].power << '\n';
  }
}

}  // namespace bdc
