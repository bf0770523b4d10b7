#include "esqpt/spin.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

namespace esqpt {

SpinSize::SpinSize(double s) : twice_(0) {
  const double twice = 2.0 * s;
  const double rounded = std::round(twice);
  if (!(s > 0.0) || std::abs(twice - rounded) > 1e-12 || rounded > 1e6) {
    throw std::invalid_argument("spin size must be a positive half-integer, got " +
                                std::to_string(s));
  }
  twice_ = static_cast<int>(rounded);
}

SpinSize::SpinSize(int twice_s, Twice) : twice_(twice_s) {}

SpinSize SpinSize::from_twice(int twice_s) {
  if (twice_s <= 0) {
    throw std::invalid_argument("2S must be a positive integer, got " + std::to_string(twice_s));
  }
  return SpinSize(twice_s, Twice{});
}

std::vector<double> raising_elements(SpinSize s) {
  const double S = s.value();
  std::vector<double> c(static_cast<std::size_t>(s.dim() - 1));
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double m = -S + static_cast<double>(k);
    c[k] = std::sqrt(S * (S + 1.0) - m * (m + 1.0));
  }
  return c;
}

SpinMatrices spin_matrices(SpinSize s) {
  const Index d = s.dim();
  const auto c = raising_elements(s);
  SpinMatrices out{Operator::Zero(d, d), Operator::Zero(d, d), Operator::Zero(d, d)};
  const Complex i(0.0, 1.0);
  for (Index k = 0; k < d; ++k) {
    out.z(k, k) = -s.value() + static_cast<double>(k);
  }
  for (Index k = 0; k + 1 < d; ++k) {
    const double half = 0.5 * c[static_cast<std::size_t>(k)];
    out.x(k + 1, k) = half;
    out.x(k, k + 1) = half;
    out.y(k + 1, k) = -i * half;
    out.y(k, k + 1) = i * half;
  }
  return out;
}

namespace {

template <typename Matrix>
Matrix embed_impl(const Matrix& op, Slot slot, SpinSize s) {
  const Index d = s.dim();
  if (op.rows() != d || op.cols() != d) {
    throw std::invalid_argument("embed: operator is " + std::to_string(op.rows()) + "x" +
                                std::to_string(op.cols()) + ", expected " + std::to_string(d) +
                                "x" + std::to_string(d));
  }
  Matrix out = Matrix::Zero(d * d, d * d);
  for (Index a = 0; a < d; ++a) {
    for (Index b = 0; b < d; ++b) {
      if (slot == Slot::system) {
        // op(a,b) * identity block
        if (op(a, b) == typename Matrix::Scalar(0)) continue;
        for (Index k = 0; k < d; ++k) out(a * d + k, b * d + k) = op(a, b);
      } else {
        for (Index k = 0; k < d; ++k) out(k * d + a, k * d + b) = op(a, b);
      }
    }
  }
  return out;
}

}  // namespace

Operator embed(const Operator& op, Slot slot, SpinSize s) { return embed_impl(op, slot, s); }
RealOperator embed(const RealOperator& op, Slot slot, SpinSize s) {
  return embed_impl(op, slot, s);
}

StateVector coherent_state(double phi, double z, SpinSize s) {
  if (!(std::abs(z) <= 1.0)) {
    throw std::invalid_argument("coherent_state: |z| must not exceed 1, got " + std::to_string(z));
  }
  const Index d = s.dim();
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  const auto c = raising_elements(s);

  // -n.S is Hermitian tridiagonal; the gauge |k> -> exp(-i k phi)|k> makes it
  // real symmetric with off-diagonal -(c_k/2) r and diagonal -z m_k.
  std::vector<double> diag(static_cast<std::size_t>(d));
  std::vector<double> off(static_cast<std::size_t>(std::max<Index>(d, 2)));
  for (Index k = 0; k < d; ++k) diag[static_cast<std::size_t>(k)] = -z * (-s.value() + k);
  for (Index k = 0; k + 1 < d; ++k) off[static_cast<std::size_t>(k)] = -0.5 * c[static_cast<std::size_t>(k)] * r;

  std::vector<double> w(static_cast<std::size_t>(d));
  std::vector<double> u(static_cast<std::size_t>(d));
  std::vector<lapack_int> support(2);
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', static_cast<lapack_int>(d),
                                         diag.data(), off.data(), 0.0, 0.0, 1, 1, 0.0, &found,
                                         w.data(), u.data(), static_cast<lapack_int>(d),
                                         support.data());
  if (info != 0 || found != 1) {
    throw std::runtime_error("coherent_state: tridiagonal eigensolve failed (info=" +
                             std::to_string(info) + ")");
  }

  StateVector psi(d);
  for (Index k = 0; k < d; ++k) {
    psi(k) = std::polar(u[static_cast<std::size_t>(k)], -static_cast<double>(k) * phi);
  }
  Index largest = 0;
  psi.cwiseAbs().maxCoeff(&largest);
  const Complex anchor = psi(largest);
  psi *= std::conj(anchor) / std::abs(anchor);
  psi(largest) = Complex(std::abs(anchor), 0.0);
  psi /= psi.norm();
  return psi;
}

StateVector product_state(const StateVector& system, const StateVector& environment) {
  const Index ds = system.size();
  const Index de = environment.size();
  StateVector out(ds * de);
  for (Index a = 0; a < ds; ++a) out.segment(a * de, de) = system(a) * environment;
  return out;
}

std::string_view to_string(Sector sector) {
  switch (sector) {
    case Sector::full: return "full";
    case Sector::even: return "even";
    case Sector::odd: return "odd";
  }
  return "full";
}

Sector sector_from_string(std::string_view name) {
  if (name == "full") return Sector::full;
  if (name == "even") return Sector::even;
  if (name == "odd") return Sector::odd;
  throw std::invalid_argument("unknown sector '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// SectorBasis

SectorBasis::SectorBasis(Sector sector, Index product_dim, std::vector<Column> columns)
    : sector_(sector), product_dim_(product_dim), columns_(std::move(columns)) {}

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
}

RealOperator SectorBasis::congruence(const RealOperator& h) const {
  if (h.rows() != product_dim_ || h.cols() != product_dim_) {
    throw std::invalid_argument("SectorBasis::congruence: dimension mismatch");
  }
  if (sector_ == Sector::full) return h;
  const Index n = dim();
  RealOperator out(n, n);
  for (Index b = 0; b < n; ++b) {
    const Column& cb = columns_[static_cast<std::size_t>(b)];
    const bool fb = cb.first == cb.second;
    for (Index a = 0; a < n; ++a) {
      const Column& ca = columns_[static_cast<std::size_t>(a)];
      const bool fa = ca.first == ca.second;
      double v;
      if (fa && fb) {
        v = h(ca.first, cb.first);
      } else if (fa) {
        v = kInvSqrt2 * (h(ca.first, cb.first) + cb.sign * h(ca.first, cb.second));
      } else if (fb) {
        v = kInvSqrt2 * (h(ca.first, cb.first) + ca.sign * h(ca.second, cb.first));
      } else {
        v = 0.5 * (h(ca.first, cb.first) + cb.sign * h(ca.first, cb.second) +
                   ca.sign * h(ca.second, cb.first) +
                   ca.sign * cb.sign * h(ca.second, cb.second));
      }
      out(a, b) = v;
    }
  }
  return out;
}

Eigen::VectorXd SectorBasis::to_product(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim()) throw std::invalid_argument("SectorBasis::to_product: dimension mismatch");
  if (sector_ == Sector::full) return x;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(product_dim_);
  for (Index a = 0; a < dim(); ++a) {
    const Column& c = columns_[static_cast<std::size_t>(a)];
    if (c.first == c.second) {
      out(c.first) = x(a);
    } else {
      out(c.first) = kInvSqrt2 * x(a);
      out(c.second) = c.sign * kInvSqrt2 * x(a);
    }
  }
  return out;
}

StateVector SectorBasis::to_sector(const StateVector& x) const {
  if (x.size() != product_dim_) throw std::invalid_argument("SectorBasis::to_sector: dimension mismatch");
  if (sector_ == Sector::full) return x;
  StateVector out(dim());
  for (Index a = 0; a < dim(); ++a) {
    const Column& c = columns_[static_cast<std::size_t>(a)];
    out(a) = c.first == c.second ? x(c.first) : kInvSqrt2 * (x(c.first) + c.sign * x(c.second));
  }
  return out;
}

RealOperator SectorBasis::expand(const RealOperator& v) const {
  if (v.rows() != dim()) throw std::invalid_argument("SectorBasis::expand: dimension mismatch");
  if (sector_ == Sector::full) return v;
  RealOperator out = RealOperator::Zero(product_dim_, v.cols());
  for (Index a = 0; a < dim(); ++a) {
    const Column& c = columns_[static_cast<std::size_t>(a)];
    if (c.first == c.second) {
      out.row(c.first) = v.row(a);
    } else {
      out.row(c.first) = kInvSqrt2 * v.row(a);
      out.row(c.second) = (c.sign * kInvSqrt2) * v.row(a);
    }
  }
  return out;
}

RealOperator SectorBasis::projector() const {
  if (sector_ == Sector::full) return RealOperator::Identity(product_dim_, product_dim_);
  RealOperator p = RealOperator::Zero(product_dim_, product_dim_);
  for (const Column& c : columns_) {
    if (c.first == c.second) {
      p(c.first, c.first) = 1.0;
    } else {
      p(c.first, c.first) = 0.5;
      p(c.second, c.second) = 0.5;
      p(c.first, c.second) = 0.5 * c.sign;
      p(c.second, c.first) = 0.5 * c.sign;
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// ParityMap

ParityMap::ParityMap(std::vector<Index> perm) : perm_(std::move(perm)) {}

ParityMap::ParityMap(SpinSize s, Slots slots) {
  const Index d = s.dim();
  if (slots == Slots::single) {
    perm_.resize(static_cast<std::size_t>(d));
    for (Index k = 0; k < d; ++k) perm_[static_cast<std::size_t>(k)] = d - 1 - k;
  } else {
    const Index n = d * d;
    perm_.resize(static_cast<std::size_t>(n));
    for (Index ks = 0; ks < d; ++ks)
      for (Index ke = 0; ke < d; ++ke)
        perm_[static_cast<std::size_t>(ks * d + ke)] = (d - 1 - ks) * d + (d - 1 - ke);
  }
}

ParityMap ParityMap::reversal(Index n) {
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = n - 1 - i;
  return ParityMap(std::move(perm));
}

Index ParityMap::sector_dim(Sector sector) const {
  Index pairs = 0;
  Index fixed = 0;
  for (Index i = 0; i < size(); ++i) {
    const Index j = (*this)(i);
    if (j == i) ++fixed;
    else if (i < j) ++pairs;
  }
  switch (sector) {
    case Sector::full: return size();
    case Sector::even: return pairs + fixed;
    case Sector::odd: return pairs;
  }
  return size();
}

SectorBasis ParityMap::basis(Sector sector) const {
  std::vector<SectorBasis::Column> cols;
  if (sector == Sector::full) return SectorBasis(sector, size(), std::move(cols));
  const double sign = sector == Sector::even ? 1.0 : -1.0;
  for (Index i = 0; i < size(); ++i) {
    const Index j = (*this)(i);
    if (j == i) {
      if (sector == Sector::even) cols.push_back({i, i, 1.0});
    } else if (i < j) {
      cols.push_back({i, j, sign});
    }
  }
  return SectorBasis(sector, size(), std::move(cols));
}

RealOperator ParityMap::matrix() const {
  RealOperator u = RealOperator::Zero(size(), size());
  for (Index i = 0; i < size(); ++i) u((*this)(i), i) = 1.0;
  return u;
}

double ParityMap::commutator_residual(const RealOperator& h) const {
  if (h.rows() != size() || h.cols() != size()) {
    throw std::invalid_argument("ParityMap::commutator_residual: dimension mismatch");
  }
  double worst = 0.0;
  for (Index j = 0; j < size(); ++j) {
    const Index pj = (*this)(j);
    for (Index i = 0; i < size(); ++i) {
      worst = std::max(worst, std::abs(h(i, j) - h((*this)(i), pj)));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// LocalObservable

LocalObservable::LocalObservable(SpinComponent component, Slot slot, SpinSize s, bool two_spin)
    : component_(component),
      slot_(two_spin ? slot : Slot::system),
      spin_(s),
      two_spin_(two_spin),
      raise_(raising_elements(s)) {}

LocalObservable LocalObservable::parse(std::string_view name, SpinSize s, bool two_spin) {
  // Accepted: S{x,y,z}_{s,e}; a bare S{x,y,z} means the system spin.
  if (name.size() < 2 || (name[0] != 'S' && name[0] != 's')) {
    throw std::invalid_argument("unknown observable '" + std::string(name) + "'");
  }
  SpinComponent comp;
  switch (std::tolower(static_cast<unsigned char>(name[1]))) {
    case 'x': comp = SpinComponent::x; break;
    case 'y': comp = SpinComponent::y; break;
    case 'z': comp = SpinComponent::z; break;
    default: throw std::invalid_argument("unknown observable '" + std::string(name) + "'");
  }
  Slot slot = Slot::system;
  if (name.size() > 2) {
    const std::string_view tail = name.substr(2);
    if (tail == "_s") slot = Slot::system;
    else if (tail == "_e") slot = Slot::environment;
    else throw std::invalid_argument("unknown observable '" + std::string(name) + "'");
  }
  if (!two_spin && slot == Slot::environment) {
    throw std::invalid_argument("environment observable requested in a single-spin space");
  }
  return LocalObservable(comp, slot, s, two_spin);
}

std::string LocalObservable::name() const {
  std::string out = "S";
  out += component_ == SpinComponent::x ? 'x' : component_ == SpinComponent::y ? 'y' : 'z';
  out += slot_ == Slot::system ? "_s" : "_e";
  return out;
}

Index LocalObservable::dim() const { return two_spin_ ? spin_.product_dim() : spin_.dim(); }

namespace {

// Calls f(p, q, k) for every product index pair (p, q) whose single-spin
// indices on the active slot are (k, k+1) and agree elsewhere.
template <typename F>
void for_each_neighbor(Index d, bool two_spin, Slot slot, F&& f) {
  if (!two_spin) {
    for (Index k = 0; k + 1 < d; ++k) f(k, k + 1, k);
    return;
  }
  if (slot == Slot::system) {
    for (Index k = 0; k + 1 < d; ++k)
      for (Index o = 0; o < d; ++o) f(k * d + o, (k + 1) * d + o, k);
  } else {
    for (Index o = 0; o < d; ++o)
      for (Index k = 0; k + 1 < d; ++k) f(o * d + k, o * d + k + 1, k);
  }
}

template <typename F>
void for_each_diagonal(Index d, bool two_spin, Slot slot, F&& f) {
  if (!two_spin) {
    for (Index k = 0; k < d; ++k) f(k, k);
    return;
  }
  for (Index a = 0; a < d; ++a)
    for (Index b = 0; b < d; ++b) f(a * d + b, slot == Slot::system ? a : b);
}

}  // namespace

StateVector LocalObservable::apply(const StateVector& x) const {
  if (x.size() != dim()) throw std::invalid_argument("LocalObservable::apply: dimension mismatch");
  const Index d = spin_.dim();
  StateVector y = StateVector::Zero(x.size());
  const Complex i(0.0, 1.0);
  switch (component_) {
    case SpinComponent::z:
      for_each_diagonal(d, two_spin_, slot_, [&](Index p, Index k) {
        y(p) = (-spin_.value() + static_cast<double>(k)) * x(p);
      });
      break;
    case SpinComponent::x:
      for_each_neighbor(d, two_spin_, slot_, [&](Index p, Index q, Index k) {
        const double h = 0.5 * raise_[static_cast<std::size_t>(k)];
        y(q) += h * x(p);
        y(p) += h * x(q);
      });
      break;
    case SpinComponent::y:
      for_each_neighbor(d, two_spin_, slot_, [&](Index p, Index q, Index k) {
        const double h = 0.5 * raise_[static_cast<std::size_t>(k)];
        y(q) += -i * h * x(p);
        y(p) += i * h * x(q);
      });
      break;
  }
  return y;
}

double LocalObservable::expectation(const StateVector& x) const {
  if (x.size() != dim()) throw std::invalid_argument("LocalObservable::expectation: dimension mismatch");
  const Index d = spin_.dim();
  double acc = 0.0;
  switch (component_) {
    case SpinComponent::z:
      for_each_diagonal(d, two_spin_, slot_, [&](Index p, Index k) {
        acc += (-spin_.value() + static_cast<double>(k)) * std::norm(x(p));
      });
      break;
    case SpinComponent::x:
      for_each_neighbor(d, two_spin_, slot_, [&](Index p, Index q, Index k) {
        acc += raise_[static_cast<std::size_t>(k)] * std::real(std::conj(x(p)) * x(q));
      });
      break;
    case SpinComponent::y:
      for_each_neighbor(d, two_spin_, slot_, [&](Index p, Index q, Index k) {
        acc -= raise_[static_cast<std::size_t>(k)] * std::imag(std::conj(x(p)) * x(q));
      });
      break;
  }
  return acc;
}

double LocalObservable::real_expectation(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim()) throw std::invalid_argument("LocalObservable::expectation: dimension mismatch");
  const Index d = spin_.dim();
  double acc = 0.0;
  switch (component_) {
    case SpinComponent::z:
      for_each_diagonal(d, two_spin_, slot_, [&](Index p, Index k) {
        acc += (-spin_.value() + static_cast<double>(k)) * x(p) * x(p);
      });
      break;
    case SpinComponent::x:
      for_each_neighbor(d, two_spin_, slot_, [&](Index p, Index q, Index k) {
        acc += raise_[static_cast<std::size_t>(k)] * x(p) * x(q);
      });
      break;
    case SpinComponent::y:
      break;
  }
  return acc;
}

Operator LocalObservable::dense() const {
  const SpinMatrices m = spin_matrices(spin_);
  const Operator& single = component_ == SpinComponent::x   ? m.x
                           : component_ == SpinComponent::y ? m.y
                                                            : m.z;
  return two_spin_ ? embed(single, slot_, spin_) : single;
}

}  // namespace esqpt
