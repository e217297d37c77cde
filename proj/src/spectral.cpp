#include "platesim/spectral.hpp"

#include <cmath>

namespace platesim {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_basis(const BasisPtr& b) {
  if (!b) throw std::invalid_argument("field has no basis");
}

void check_match(const SpectralField& f) {
  check_basis(f.basis);
  if (f.coef.size() != f.basis->num_modes())
    throw std::invalid_argument("coefficient vector does not match basis mode count");
}

void check_match(const GridField& g) {
  check_basis(g.basis);
  if (g.val.size() != g.basis->num_grid())
    throw std::invalid_argument("grid vector does not match basis grid size");
}

// Contract axis `ax` of a row-major flattened tensor with matrix T
// (out extent = T.rows(), in extent = T.cols() = ext[ax]).
ArrayXd contract_axis(const ArrayXd& in, std::array<Index, 3> ext, int dim, int ax,
                      const Eigen::MatrixXd& T) {
  Index inner = 1, outer = 1;
  for (int i = ax + 1; i < dim; ++i) inner *= ext[i];
  for (int i = 0; i < ax; ++i) outer *= ext[i];
  const Index n_in = ext[ax], n_out = T.rows();
  ArrayXd out(outer * n_out * inner);
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  for (Index o = 0; o < outer; ++o) {
    Eigen::Map<const RowMat> blk_in(in.data() + o * n_in * inner, n_in, inner);
    Eigen::Map<RowMat> blk_out(out.data() + o * n_out * inner, n_out, inner);
    blk_out.noalias() = T * blk_in;
  }
  return out;
}

std::array<Index, 3> extents(const std::vector<int>& v) {
  std::array<Index, 3> e{1, 1, 1};
  for (size_t i = 0; i < v.size(); ++i) e[i] = v[i];
  return e;
}

}  // namespace

Basis::Basis(BoxDomain domain, std::vector<int> modes_per_axis, int dealias_factor)
    : domain_(std::move(domain)), modes_(std::move(modes_per_axis)), dealias_(dealias_factor) {
  const int d = domain_.dim();
  if (d < 1 || d > 3) throw std::invalid_argument("domain dimension must be 1, 2, or 3");
  if (static_cast<int>(modes_.size()) != d)
    throw std::invalid_argument("modes_per_axis size must equal domain dimension");
  if (dealias_ < 1) throw std::invalid_argument("dealias factor must be >= 1");
  for (double L : domain_.lengths)
    if (!(L > 0.0)) throw std::invalid_argument("domain lengths must be positive");
  for (int m : modes_)
    if (m < 1) throw std::invalid_argument("modes per axis must be >= 1");

  num_modes_ = 1;
  num_grid_ = 1;
  quad_weight_ = 1.0;
  synth_.resize(d);
  analyze_.resize(d);
  synth_deriv_.resize(d);
  for (int ax = 0; ax < d; ++ax) {
    const int M = modes_[ax];
    const int N = dealias_ * M;
    const double L = domain_.lengths[ax];
    const double h = L / (N + 1);
    num_modes_ *= M;
    num_grid_ *= N;
    quad_weight_ *= h;
    Eigen::MatrixXd S(N, M), D(N, M);
    const double norm = std::sqrt(2.0 / L);
    for (int j = 0; j < N; ++j) {
      for (int m = 0; m < M; ++m) {
        const double phase = (m + 1) * kPi * (j + 1) / static_cast<double>(N + 1);
        S(j, m) = norm * std::sin(phase);
        D(j, m) = norm * ((m + 1) * kPi / L) * std::cos(phase);
      }
    }
    synth_[ax] = S;
    synth_deriv_[ax] = D;
    analyze_[ax] = h * S.transpose();
  }

  eigenvalues_.resize(num_modes_);
  const auto me = extents(modes_);
  for (Index k = 0; k < num_modes_; ++k) {
    Index rem = k;
    double lam = 0.0;
    for (int ax = d - 1; ax >= 0; --ax) {
      const Index m = rem % me[ax] + 1;
      rem /= me[ax];
      const double w = m * kPi / domain_.lengths[ax];
      lam += w * w;
    }
    eigenvalues_[k] = lam;
  }
}

bool Basis::same_layout(const Basis& other) const {
  return domain_.lengths == other.domain_.lengths && modes_ == other.modes_ &&
         dealias_ == other.dealias_;
}

BasisPtr build_basis(const BoxDomain& domain, const std::vector<int>& modes_per_axis,
                     int dealias_factor) {
  return std::make_shared<Basis>(domain, modes_per_axis, dealias_factor);
}

SpectralField zero_field(const BasisPtr& basis) {
  check_basis(basis);
  return {basis, ArrayXd::Zero(basis->num_modes())};
}

GridField to_grid(const SpectralField& f) {
  check_match(f);
  const Basis& b = *f.basis;
  const int d = b.dim();
  auto ext = extents(b.modes_per_axis());
  ArrayXd cur = f.coef;
  for (int ax = 0; ax < d; ++ax) {
    cur = contract_axis(cur, ext, d, ax, b.synth(ax));
    ext[ax] = b.synth(ax).rows();
  }
  return {f.basis, std::move(cur)};
}

SpectralField to_spectral(const GridField& g) {
  check_match(g);
  const Basis& b = *g.basis;
  const int d = b.dim();
  std::array<Index, 3> ext{1, 1, 1};
  for (int ax = 0; ax < d; ++ax) ext[ax] = b.synth(ax).rows();
  ArrayXd cur = g.val;
  for (int ax = 0; ax < d; ++ax) {
    cur = contract_axis(cur, ext, d, ax, b.analyze(ax));
    ext[ax] = b.analyze(ax).rows();
  }
  return {g.basis, std::move(cur)};
}

SpectralField apply_power_of_A(const SpectralField& f, double p) {
  check_match(f);
  return {f.basis, f.coef * f.basis->eigenvalues().pow(p)};
}

SpectralField apply_K(const SpectralField& f, double gamma) {
  check_match(f);
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  return {f.basis, f.coef / (1.0 + gamma * f.basis->eigenvalues())};
}

SpectralField apply_B(const SpectralField& f, double gamma) {
  check_match(f);
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  const ArrayXd& lam = f.basis->eigenvalues();
  return {f.basis, f.coef * lam / (1.0 + gamma * lam)};
}

std::vector<GridField> gradient(const SpectralField& f) {
  check_match(f);
  const Basis& b = *f.basis;
  const int d = b.dim();
  std::vector<GridField> out;
  out.reserve(d);
  for (int comp = 0; comp < d; ++comp) {
    auto ext = extents(b.modes_per_axis());
    ArrayXd cur = f.coef;
    for (int ax = 0; ax < d; ++ax) {
      const Eigen::MatrixXd& T = (ax == comp) ? b.synth_deriv(ax) : b.synth(ax);
      cur = contract_axis(cur, ext, d, ax, T);
      ext[ax] = T.rows();
    }
    out.push_back({f.basis, std::move(cur)});
  }
  return out;
}

double inner_product(const SpectralField& f, const SpectralField& g) {
  check_match(f);
  check_match(g);
  if (!f.basis->same_layout(*g.basis))
    throw std::invalid_argument("inner product of fields on mismatched bases");
  return (f.coef * g.coef).sum();
}

double sobolev_sq(const SpectralField& f, double s) {
  check_match(f);
  return (f.coef.square() * f.basis->eigenvalues().pow(s)).sum();
}

double grid_inner(const GridField& f, const GridField& g) {
  check_match(f);
  check_match(g);
  if (!f.basis->same_layout(*g.basis))
    throw std::invalid_argument("grid inner product of fields on mismatched bases");
  return f.basis->quadrature_weight() * (f.val * g.val).sum();
}

}  // namespace platesim
