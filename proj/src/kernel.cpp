#include "aggdiff/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>

#include "aggdiff/error.hpp"
#include "fft.hpp"

namespace aggdiff {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kBalanceTol = 1e-12;
constexpr double kFourierStability = 0.1;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

Kernel::Kernel(std::variant<TopHat, Sampled> form) : form_(std::move(form)) {
  if (const auto* s = std::get_if<Sampled>(&form_)) {
    cumulative_.resize(s->values.size() + 1, 0.0);
    for (std::size_t k = 0; k < s->values.size(); ++k) {
      cumulative_[k + 1] = cumulative_[k] + s->values[k] * s->dx;
    }
  }
}

Kernel Kernel::tophat(double alpha, double radius) {
  if (!std::isfinite(alpha)) throw InvalidParameter("tophat: alpha must be finite");
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw InvalidParameter("tophat: radius must be positive and finite");
  }
  return Kernel(TopHat{alpha, radius});
}

Kernel Kernel::sampled(std::vector<double> values, double dx, double x0) {
  if (values.empty()) throw InvalidParameter("sampled kernel: no values");
  if (!(dx > 0.0) || !std::isfinite(dx)) throw InvalidParameter("sampled kernel: dx must be positive");
  if (!std::isfinite(x0)) throw InvalidParameter("sampled kernel: x0 must be finite");
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidParameter("sampled kernel: non-finite value");
  }
  return Kernel(Sampled{std::move(values), dx, x0});
}

double Kernel::operator()(double x) const {
  return std::visit(
      overloaded{
          [x](const TopHat& t) { return std::abs(x) <= t.radius ? -t.alpha / (2.0 * t.radius) : 0.0; },
          [x](const Sampled& s) {
            const double pos = (x - s.x0) / s.dx;
            if (pos < 0.0) return 0.0;
            const auto k = static_cast<std::size_t>(std::floor(pos));
            return k < s.values.size() ? s.values[k] : 0.0;
          },
      },
      form_);
}

double Kernel::antiderivative(double x) const {
  return std::visit(
      overloaded{
          [x](const TopHat& t) {
            const double clamped = std::clamp(x, -t.radius, t.radius);
            return -t.alpha / (2.0 * t.radius) * (clamped + t.radius);
          },
          [this, x](const Sampled& s) {
            const double pos = (x - s.x0) / s.dx;
            if (pos <= 0.0) return 0.0;
            const std::size_t n = s.values.size();
            if (pos >= static_cast<double>(n)) return cumulative_[n];
            const auto k = static_cast<std::size_t>(std::floor(pos));
            return cumulative_[k] + s.values[k] * (x - (s.x0 + static_cast<double>(k) * s.dx));
          },
      },
      form_);
}

double Kernel::integral(double a, double b) const {
  if (const auto* t = std::get_if<TopHat>(&form_)) {
    // Overlap length times height; avoids cancellation between two antiderivatives.
    const double lo = std::max(std::min(a, b), -t->radius);
    const double hi = std::min(std::max(a, b), t->radius);
    const double value = hi > lo ? -t->alpha / (2.0 * t->radius) * (hi - lo) : 0.0;
    return a <= b ? value : -value;
  }
  return antiderivative(b) - antiderivative(a);
}

double Kernel::support_left() const {
  return std::visit(overloaded{
                        [](const TopHat& t) { return -t.radius; },
                        [](const Sampled& s) { return s.x0; },
                    },
                    form_);
}

double Kernel::support_right() const {
  return std::visit(
      overloaded{
          [](const TopHat& t) { return t.radius; },
          [](const Sampled& s) { return s.x0 + static_cast<double>(s.values.size()) * s.dx; },
      },
      form_);
}

Kernel Kernel::scaled(double factor) const {
  return std::visit(overloaded{
                        [factor](const TopHat& t) { return Kernel::tophat(factor * t.alpha, t.radius); },
                        [factor](const Sampled& s) {
                          std::vector<double> v = s.values;
                          for (double& x : v) x *= factor;
                          return Kernel::sampled(std::move(v), s.dx, s.x0);
                        },
                    },
                    form_);
}

bool Kernel::is_zero() const {
  return std::visit(overloaded{
                        [](const TopHat& t) { return t.alpha == 0.0; },
                        [](const Sampled& s) {
                          return std::all_of(s.values.begin(), s.values.end(),
                                             [](double v) { return v == 0.0; });
                        },
                    },
                    form_);
}

KernelMatrix::KernelMatrix(std::size_t n, std::vector<Kernel> entries)
    : n_(n), entries_(std::move(entries)) {
  if (n == 0) throw InvalidParameter("kernel matrix: need at least one species");
  if (entries_.size() != n * n) throw InvalidParameter("kernel matrix: expected n*n entries");
}

KernelMatrix KernelMatrix::scaled(const Kernel& base, const std::vector<std::vector<double>>& alpha) {
  const std::size_t n = alpha.size();
  std::vector<Kernel> entries;
  entries.reserve(n * n);
  for (const auto& row : alpha) {
    if (row.size() != n) throw InvalidParameter("kernel matrix: alpha matrix must be square");
    for (double a : row) {
      if (!std::isfinite(a)) throw InvalidParameter("kernel matrix: non-finite alpha entry");
      entries.push_back(base.scaled(a));
    }
  }
  KernelMatrix m(n, std::move(entries));
  m.base_ = base;
  m.scale_ = alpha;
  return m;
}

// ---------------------------------------------------------------------------
// analysis

namespace {

double linf_norm(const Kernel& k) {
  return std::visit(overloaded{
                        [](const TopHat& t) { return std::abs(t.alpha) / (2.0 * t.radius); },
                        [](const Sampled& s) {
                          double m = 0.0;
                          for (double v : s.values) m = std::max(m, std::abs(v));
                          return m;
                        },
                    },
                    k.form());
}

// Autocorrelation c_p = sum_m k_{m+p} k_m dx for p = -(N-1)..N-1 via |FFT|^2.
std::vector<double> autocorrelation(const std::vector<double>& samples, double dx) {
  const std::size_t n = samples.size();
  const std::size_t len = 2 * n - 1;
  detail::RealFft fft(detail::good_fft_size(len));
  const std::size_t p = fft.size();
  std::vector<double> padded(p, 0.0);
  std::copy(samples.begin(), samples.end(), padded.begin());
  std::vector<std::complex<double>> spec(fft.spectrum_size());
  fft.forward(padded.data(), spec.data());
  for (auto& z : spec) z = std::norm(z);
  std::vector<double> circ(p);
  fft.inverse(spec.data(), circ.data());
  std::vector<double> out(len);
  const double scale = dx / static_cast<double>(p);
  for (std::size_t i = 0; i < len; ++i) {
    // lag = i - (n-1); negative lags wrap to the end of the circular result.
    const std::ptrdiff_t lag = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(n - 1);
    const std::size_t idx = lag >= 0 ? static_cast<std::size_t>(lag) : p - static_cast<std::size_t>(-lag);
    out[i] = circ[idx] * scale;
  }
  return out;
}

double h4_norm_of(const std::vector<double>& samples, double dx) {
  const std::vector<double> c = autocorrelation(samples, dx);
  // Centred differences over the autocorrelation extended by zeros on both sides.
  auto at = [&](std::ptrdiff_t i) {
    return i < 0 || i >= static_cast<std::ptrdiff_t>(c.size()) ? 0.0 : c[static_cast<std::size_t>(i)];
  };
  double sum = 0.0;
  for (std::ptrdiff_t i = -1; i <= static_cast<std::ptrdiff_t>(c.size()); ++i) {
    const double g = (at(i + 1) - at(i - 1)) / (2.0 * dx);
    sum += g * g * dx;
  }
  return std::sqrt(sum);
}

// Truncated int_{|xi|>1} |xi|^2 |K^(xi)|^4 dxi with K^(xi) = int K(x) e^{-i xi x} dx.
double h4_fourier_of(const std::vector<double>& samples, double dx) {
  detail::RealFft fft(detail::good_fft_size(8 * samples.size()));
  const std::size_t p = fft.size();
  std::vector<double> padded(p, 0.0);
  std::copy(samples.begin(), samples.end(), padded.begin());
  std::vector<std::complex<double>> spec(fft.spectrum_size());
  fft.forward(padded.data(), spec.data());
  const double dxi = 2.0 * std::numbers::pi / (static_cast<double>(p) * dx);
  double sum = 0.0;
  for (std::size_t q = 1; q < spec.size(); ++q) {
    const double xi = dxi * static_cast<double>(q);
    if (xi <= 1.0) continue;
    const double mag = std::abs(spec[q]) * dx;
    const double weight = (2 * q == p) ? 0.5 : 1.0;
    sum += weight * xi * xi * mag * mag * mag * mag * dxi;
  }
  return 2.0 * sum;  // both signs of xi
}

}  // namespace

std::vector<double> sample_centered(const Kernel& k, double dx) {
  if (!(dx > 0.0)) throw InvalidParameter("sample_centered: dx must be positive");
  const double reach = std::max(std::abs(k.support_left()), std::abs(k.support_right()));
  const auto half = static_cast<std::ptrdiff_t>(std::ceil(reach / dx + 0.5));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(2 * half + 1));
  for (std::ptrdiff_t m = -half; m <= half; ++m) {
    const double c = static_cast<double>(m) * dx;
    out.push_back(k.integral(c - 0.5 * dx, c + 0.5 * dx) / dx);
  }
  return out;
}

KernelAnalysis analyze(const Kernel& k, double dx) {
  if (!(dx > 0.0)) throw InvalidParameter("analyze: dx must be positive");
  KernelAnalysis r;
  r.dx = dx;
  std::visit(overloaded{
                 [&r](const TopHat& t) {
                   const double a = std::abs(t.alpha);
                   r.linf_norm = a / (2.0 * t.radius);
                   r.l1_norm = a;
                   r.tv_norm = a / t.radius;
                   r.symmetric = true;
                   r.compact_support = true;
                   r.support_radius = t.radius;
                 },
                 [&r](const Sampled& s) {
                   const auto& v = s.values;
                   const std::size_t n = v.size();
                   double linf = 0.0;
                   double l1 = 0.0;
                   double tv = std::abs(v.front()) + std::abs(v.back());
                   for (std::size_t i = 0; i < n; ++i) {
                     linf = std::max(linf, std::abs(v[i]));
                     l1 += std::abs(v[i]) * s.dx;
                     if (i + 1 < n) tv += std::abs(v[i + 1] - v[i]);
                   }
                   r.linf_norm = linf;
                   r.l1_norm = l1;
                   r.tv_norm = tv;

                   const double width = static_cast<double>(n) * s.dx;
                   const double tol = kSymmetryTol * std::max(1.0, linf);
                   bool sym = std::abs(s.x0 + 0.5 * width) <= kSymmetryTol * std::max(1.0, width);
                   for (std::size_t i = 0; sym && i < n; ++i) {
                     sym = std::abs(v[i] - v[n - 1 - i]) <= tol;
                   }
                   r.symmetric = sym;

                   r.compact_support = true;
                   std::size_t first = 0;
                   while (first < n && v[first] == 0.0) ++first;
                   std::size_t last = n;
                   while (last > first && v[last - 1] == 0.0) --last;
                   if (first < last) {
                     const double left = s.x0 + static_cast<double>(first) * s.dx;
                     const double right = s.x0 + static_cast<double>(last) * s.dx;
                     r.support_radius = std::max(std::abs(left), std::abs(right));
                   }
                 },
             },
             k.form());

  const std::vector<double> coarse = sample_centered(k, dx);
  r.h4_norm = h4_norm_of(coarse, dx);
  r.h4_fourier_integral = h4_fourier_of(coarse, dx);
  r.h4_fourier_refined = h4_fourier_of(sample_centered(k, 0.5 * dx), 0.5 * dx);
  const double ref = std::abs(r.h4_fourier_refined);
  r.h4_fourier_stable =
      ref == 0.0 ? r.h4_fourier_integral == 0.0
                 : std::abs(r.h4_fourier_integral - r.h4_fourier_refined) < kFourierStability * ref;
  return r;
}

// ---------------------------------------------------------------------------
// detailed balance

namespace {

// Edge data: ratio pi_j / pi_i implied by the pair (i, j), or a reason it has none.
struct PairRelation {
  bool coupled = false;
  bool feasible = true;
  double forward = 0.0;   // pi_i * forward = pi_j * backward
  double backward = 0.0;
  std::string reason;
};

using RelationFn = PairRelation (*)(const void*, std::size_t, std::size_t);

BalanceResult solve_graph(std::size_t n, const void* ctx, RelationFn relation) {
  BalanceResult result;
  std::vector<double> pi(n, 0.0);
  std::vector<std::ptrdiff_t> parent(n, -1);
  std::vector<std::size_t> depth(n, 0);
  std::vector<bool> seen(n, false);

  auto path_to_root = [&](std::size_t v) {
    std::vector<std::size_t> path{v};
    while (parent[v] >= 0) {
      v = static_cast<std::size_t>(parent[v]);
      path.push_back(v);
    }
    return path;
  };

  // Infeasible single edges are reported before any cycle check.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      PairRelation rel = relation(ctx, i, j);
      if (rel.coupled && !rel.feasible) {
        result.witness = {i, j};
        result.reason = rel.reason;
        return result;
      }
    }
  }

  for (std::size_t root = 0; root < n; ++root) {
    if (seen[root]) continue;
    seen[root] = true;
    pi[root] = 1.0;
    std::queue<std::size_t> queue;
    queue.push(root);
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || seen[j]) continue;
        PairRelation rel = relation(ctx, i, j);
        if (!rel.coupled) continue;
        seen[j] = true;
        parent[j] = static_cast<std::ptrdiff_t>(i);
        depth[j] = depth[i] + 1;
        pi[j] = pi[i] * rel.forward / rel.backward;
        queue.push(j);
      }
    }
  }

  // Every coupled pair, tree edges included, must satisfy the balance relation.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      PairRelation rel = relation(ctx, i, j);
      if (!rel.coupled) continue;
      const double lhs = pi[i] * rel.forward;
      const double rhs = pi[j] * rel.backward;
      if (std::abs(lhs - rhs) <= kBalanceTol * std::max(std::abs(lhs), std::abs(rhs))) continue;
      // Cycle: i -> ... -> common ancestor <- ... <- j.
      std::vector<std::size_t> up_i = path_to_root(i);
      std::vector<std::size_t> up_j = path_to_root(j);
      while (up_i.size() > 1 && up_j.size() > 1 && up_i[up_i.size() - 2] == up_j[up_j.size() - 2]) {
        up_i.pop_back();
        up_j.pop_back();
      }
      result.witness = up_i;
      for (auto it = std::next(up_j.rbegin()); it != up_j.rend(); ++it) result.witness.push_back(*it);
      result.reason = "cycle product of coupling ratios differs from 1";
      return result;
    }
  }
  result.weights = std::move(pi);
  return result;
}

PairRelation scale_relation(const void* ctx, std::size_t i, std::size_t j) {
  const auto& a = *static_cast<const std::vector<std::vector<double>>*>(ctx);
  PairRelation rel;
  const double ij = a[i][j];
  const double ji = a[j][i];
  if (ij == 0.0 && ji == 0.0) return rel;
  rel.coupled = true;
  if (ij == 0.0 || ji == 0.0) {
    rel.feasible = false;
    rel.reason = "one-sided coupling: exactly one of alpha_ij, alpha_ji is zero";
  } else if ((ij > 0.0) != (ji > 0.0)) {
    rel.feasible = false;
    rel.reason = "alpha_ij and alpha_ji have opposite signs";
  }
  rel.forward = ij;
  rel.backward = ji;
  return rel;
}

// Ratio r with a = r * b, if the kernels are proportional.
std::optional<double> proportionality(const Kernel& a, const Kernel& b) {
  const auto* ta = std::get_if<TopHat>(&a.form());
  const auto* tb = std::get_if<TopHat>(&b.form());
  if (ta != nullptr && tb != nullptr) {
    if (std::abs(ta->radius - tb->radius) > kBalanceTol * std::max(ta->radius, tb->radius)) {
      return std::nullopt;
    }
    return ta->alpha / tb->alpha;
  }
  auto natural_dx = [](const Kernel& k) {
    if (const auto* s = std::get_if<Sampled>(&k.form())) return s->dx;
    return std::get<TopHat>(k.form()).radius / 64.0;
  };
  const double dx = std::min(natural_dx(a), natural_dx(b));
  std::vector<double> sa = sample_centered(a, dx);
  std::vector<double> sb = sample_centered(b, dx);
  const std::size_t len = std::max(sa.size(), sb.size());
  auto pad = [len](std::vector<double>& v) {
    const std::size_t extra = (len - v.size()) / 2;
    v.insert(v.begin(), extra, 0.0);
    v.resize(len, 0.0);
  };
  pad(sa);
  pad(sb);
  const double ab = std::inner_product(sa.begin(), sa.end(), sb.begin(), 0.0);
  const double bb = std::inner_product(sb.begin(), sb.end(), sb.begin(), 0.0);
  const double r = ab / bb;
  double amax = 0.0;
  double resid = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    amax = std::max(amax, std::abs(sa[i]));
    resid = std::max(resid, std::abs(sa[i] - r * sb[i]));
  }
  if (resid > kBalanceTol * amax) return std::nullopt;
  return r;
}

PairRelation kernel_relation(const void* ctx, std::size_t i, std::size_t j) {
  const auto& k = *static_cast<const KernelMatrix*>(ctx);
  PairRelation rel;
  const bool zij = k(i, j).is_zero();
  const bool zji = k(j, i).is_zero();
  if (zij && zji) return rel;
  rel.coupled = true;
  if (zij || zji) {
    rel.feasible = false;
    rel.reason = "one-sided coupling: exactly one of K_ij, K_ji vanishes";
    return rel;
  }
  const std::optional<double> r = proportionality(k(i, j), k(j, i));
  if (!r) {
    rel.feasible = false;
    rel.reason = "K_ij and K_ji are not proportional";
  } else if (*r <= 0.0) {
    rel.feasible = false;
    rel.reason = "K_ij and K_ji have opposite signs";
  }
  rel.forward = r.value_or(0.0);
  rel.backward = 1.0;
  return rel;
}

}  // namespace

BalanceResult solve_detailed_balance(const std::vector<std::vector<double>>& scale_matrix) {
  const std::size_t n = scale_matrix.size();
  if (n == 0) throw InvalidParameter("detailed balance: empty matrix");
  for (const auto& row : scale_matrix) {
    if (row.size() != n) throw InvalidParameter("detailed balance: matrix must be square");
    for (double v : row) {
      if (!std::isfinite(v)) throw InvalidParameter("detailed balance: non-finite entry");
    }
  }
  return solve_graph(n, &scale_matrix, &scale_relation);
}

BalanceResult solve_detailed_balance(const KernelMatrix& kernels) {
  if (kernels.scale_matrix()) return solve_detailed_balance(*kernels.scale_matrix());
  return solve_graph(kernels.size(), &kernels, &kernel_relation);
}

std::vector<double> small_mass_constants(const std::vector<double>& diffusion,
                                         const std::vector<double>& masses,
                                         const KernelMatrix& kernels) {
  const std::size_t n = kernels.size();
  if (diffusion.size() != n || masses.size() != n) {
    throw InvalidParameter("small_mass_constants: size mismatch");
  }
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      sum += masses[i] * linf_norm(kernels(i, j)) + masses[j] * linf_norm(kernels(j, i));
    }
    c[i] = diffusion[i] - 0.5 * sum;
  }
  return c;
}

HypothesisReport assess(const KernelMatrix& kernels, const std::vector<double>& diffusion,
                        const std::vector<double>& masses, double dx) {
  HypothesisReport rep;
  const std::size_t n = kernels.size();
  rep.n = n;
  rep.entries.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) rep.entries.push_back(analyze(kernels(i, j), dx));
  }
  const auto all = [&](auto pred) { return std::all_of(rep.entries.begin(), rep.entries.end(), pred); };
  rep.h1 = all([](const KernelAnalysis& a) { return std::isfinite(a.linf_norm) && std::isfinite(a.l1_norm); });
  rep.h2 = all([](const KernelAnalysis& a) { return std::isfinite(a.tv_norm); });
  rep.h3 = all([](const KernelAnalysis& a) { return a.symmetric; });
  rep.h6 = all([](const KernelAnalysis& a) { return a.compact_support; });
  rep.h4 = rep.h1 && rep.h2;
  rep.detailed_balance = solve_detailed_balance(kernels);
  rep.small_mass_constants = small_mass_constants(diffusion, masses, kernels);

  const bool positive_c = std::all_of(rep.small_mass_constants.begin(), rep.small_mass_constants.end(),
                                      [](double c) { return c > 0.0; });
  auto& th = rep.theorems;
  th.small_mass_existence = rep.h1 && positive_c;
  th.arbitrary_mass_existence =
      rep.h1 && rep.h2 && rep.h3 && (n == 1 || rep.detailed_balance.balanced());
  th.strong_uniqueness = th.arbitrary_mass_existence || (th.small_mass_existence && rep.h4);
  th.classical_regularity = (th.small_mass_existence && rep.h2 && rep.h6) ||
                            (th.arbitrary_mass_existence && rep.h6);
  return rep;
}

}  // namespace aggdiff
