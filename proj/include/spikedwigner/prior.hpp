#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace spikedwigner {

enum class PriorKind { rademacher, sparse_rademacher, two_point_asymmetric, point_mass, custom };

struct PriorAtom {
  double value;
  double weight;
};

/// A bounded-support spike prior, represented by finitely many atoms.
/// Continuous priors enter only through caller-supplied discretization
/// nodes; everything downstream (quadrature over the scalar channel,
/// configuration enumeration) consumes finitely many atoms.
struct Prior {
  std::vector<PriorAtom> atoms;  // sorted by value, weights sum to 1
  PriorKind kind = PriorKind::custom;
  double support_bound = 0.0;  // max |value|
  std::string tag;             // CLI spec string, e.g. "sparse:0.3"
};

struct PriorMoments {
  double m1, m2, m3, m4;
};

namespace detail {

inline Prior finalize_prior(std::vector<PriorAtom> atoms, PriorKind kind, std::string tag) {
  if (atoms.empty()) throw std::invalid_argument("prior: no atoms");
  double wsum = 0.0;
  for (const auto& a : atoms) {
    if (!(a.weight > 0.0)) throw std::invalid_argument("prior: weights must be positive");
    if (!std::isfinite(a.value)) throw std::invalid_argument("prior: non-finite atom");
    wsum += a.weight;
  }
  if (std::abs(wsum - 1.0) > 1e-9)
    throw std::invalid_argument("prior: weights must sum to 1 (got " + std::to_string(wsum) + ")");
  for (auto& a : atoms) a.weight /= wsum;  // exact unit mass after renormalization
  std::sort(atoms.begin(), atoms.end(),
            [](const PriorAtom& a, const PriorAtom& b) { return a.value < b.value; });
  Prior p;
  p.atoms = std::move(atoms);
  p.kind = kind;
  p.tag = std::move(tag);
  for (const auto& a : p.atoms) p.support_bound = std::max(p.support_bound, std::abs(a.value));
  return p;
}

}  // namespace detail

inline Prior rademacher_prior() {
  return detail::finalize_prior({{-1.0, 0.5}, {1.0, 0.5}}, PriorKind::rademacher, "rademacher");
}

/// Atoms {-1/sqrt(rho): rho/2, 0: 1-rho, +1/sqrt(rho): rho/2}; centered with
/// unit variance for every rho in (0,1].
inline Prior sparse_rademacher_prior(double rho) {
  if (!(rho > 0.0) || rho > 1.0) throw std::invalid_argument("sparse_rademacher: rho in (0,1]");
  const double v = 1.0 / std::sqrt(rho);
  std::vector<PriorAtom> atoms;
  if (rho < 1.0)
    atoms = {{-v, rho / 2}, {0.0, 1.0 - rho}, {v, rho / 2}};
  else
    atoms = {{-v, 0.5}, {v, 0.5}};
  return detail::finalize_prior(std::move(atoms), PriorKind::sparse_rademacher,
                                "sparse:" + std::to_string(rho));
}

inline Prior point_mass_prior(double v) {
  return detail::finalize_prior({{v, 1.0}}, PriorKind::point_mass, "point:" + std::to_string(v));
}

inline Prior two_point_prior(double p, double v_plus, double v_minus) {
  if (!(p > 0.0) || !(p < 1.0)) throw std::invalid_argument("two_point: p in (0,1)");
  return detail::finalize_prior({{v_minus, 1.0 - p}, {v_plus, p}}, PriorKind::two_point_asymmetric,
                                "twopoint:" + std::to_string(p));
}

/// Centered unit-variance two-point prior: v+ = sqrt((1-p)/p), v- = -sqrt(p/(1-p)).
/// Asymmetric about the origin for every p != 1/2.
inline Prior two_point_centered_prior(double p) {
  return two_point_prior(p, std::sqrt((1.0 - p) / p), -std::sqrt(p / (1.0 - p)));
}

inline Prior custom_prior(std::vector<PriorAtom> atoms) {
  return detail::finalize_prior(std::move(atoms), PriorKind::custom, "custom");
}

/// Raw moments E[X^k], k = 1..4, as exact weighted sums over the atoms.
inline PriorMoments moments(const Prior& prior) {
  PriorMoments m{0, 0, 0, 0};
  for (const auto& a : prior.atoms) {
    const double v2 = a.value * a.value;
    m.m1 += a.weight * a.value;
    m.m2 += a.weight * v2;
    m.m3 += a.weight * v2 * a.value;
    m.m4 += a.weight * v2 * v2;
  }
  return m;
}

/// Sum over value pairs (v, -v) of |w(v) - w(-v)|, with atoms matched at
/// absolute tolerance 1e-12. Zero iff the prior is symmetric about the
/// origin; unpaired mass counts in full (point_mass(1) -> 1).
inline double symmetry_defect(const Prior& prior) {
  constexpr double tol = 1e-12;
  auto weight_at = [&](double v) {
    double w = 0.0;
    for (const auto& a : prior.atoms)
      if (std::abs(a.value - v) <= tol) w += a.weight;
    return w;
  };
  double defect = 0.0;
  for (const auto& a : prior.atoms) {
    if (a.value <= tol) continue;  // count each +/- pair once; 0 never contributes
    defect += std::abs(a.weight - weight_at(-a.value));
  }
  // positive-weight negative atoms with no positive partner
  for (const auto& a : prior.atoms) {
    if (a.value >= -tol) continue;
    if (weight_at(-a.value) == 0.0) defect += a.weight;
  }
  return defect;
}

/// The symmetric part mu of the prior: mu({v}) = (w(v) + w(-v))/2 on the
/// union of the support with its negation.
inline Prior symmetrize(const Prior& prior) {
  constexpr double tol = 1e-12;
  std::vector<double> values;
  for (const auto& a : prior.atoms) {
    for (double v : {a.value, -a.value}) {
      bool seen = false;
      for (double u : values)
        if (std::abs(u - v) <= tol) seen = true;
      if (!seen) values.push_back(v);
    }
  }
  auto weight_at = [&](double v) {
    double w = 0.0;
    for (const auto& a : prior.atoms)
      if (std::abs(a.value - v) <= tol) w += a.weight;
    return w;
  };
  std::vector<PriorAtom> atoms;
  for (double v : values) atoms.push_back({v, 0.5 * (weight_at(v) + weight_at(-v))});
  return detail::finalize_prior(std::move(atoms), PriorKind::custom, prior.tag + ":symmetrized");
}

/// Parses the CLI prior specification:
///   rademacher | sparse:<rho> | point:<v> | twopoint:<p>,<v+>,<v-> |
///   custom:<v1>:<w1>,<v2>:<w2>,...
inline Prior parse_prior_spec(const std::string& spec) {
  auto num = [](const std::string& s) {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("prior spec: bad number '" + s + "'");
    return v;
  };
  auto split = [](const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
  };
  if (spec == "rademacher") return rademacher_prior();
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("unknown prior spec '" + spec + "'");
  const std::string head = spec.substr(0, colon), rest = spec.substr(colon + 1);
  if (head == "sparse") return sparse_rademacher_prior(num(rest));
  if (head == "point") return point_mass_prior(num(rest));
  if (head == "twopoint") {
    const auto parts = split(rest, ',');
    if (parts.size() == 1) return two_point_centered_prior(num(parts[0]));
    if (parts.size() != 3) throw std::invalid_argument("twopoint:<p>,<v+>,<v->");
    return two_point_prior(num(parts[0]), num(parts[1]), num(parts[2]));
  }
  if (head == "custom") {
    std::vector<PriorAtom> atoms;
    for (const auto& pair : split(rest, ',')) {
      const auto vw = split(pair, ':');
      if (vw.size() != 2) throw std::invalid_argument("custom:<v>:<w>,...");
      atoms.push_back({num(vw[0]), num(vw[1])});
    }
    Prior p = custom_prior(std::move(atoms));
    p.tag = spec;
    return p;
  }
  throw std::invalid_argument("unknown prior spec '" + spec + "'");
}

}  // namespace spikedwigner
