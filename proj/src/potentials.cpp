#include "saddle/potentials.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <tuple>

namespace saddle {

// ---------------------------------------------------------------------------
// Potential

double Potential::energy(const Vector& x) const {
  require_dimension(x.size(), dimension(), "energy");
  return energy_impl(x);
}

Vector Potential::gradient(const Vector& x) const {
  require_dimension(x.size(), dimension(), "gradient");
  return gradient_impl(x);
}

Vector Potential::hessian_vec(const Vector& x, const Vector& u) const {
  require_dimension(x.size(), dimension(), "hessian_vec");
  require_dimension(u.size(), dimension(), "hessian_vec");
  return hessian_vec_impl(x, u);
}

Vector Potential::hessian_vec_impl(const Vector& x, const Vector& u) const { return fd_hessian_vec(*this, x, u); }

Vector fd_gradient(const Potential& p, const Vector& x, double h) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + h;
    const double fp = p.energy(xp);
    xp[i] = xi - h;
    const double fm = p.energy(xp);
    xp[i] = xi;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

Vector fd_hessian_vec(const Potential& p, const Vector& x, const Vector& u) {
  const double norm = u.norm();
  if (norm == 0.0) return Vector::Zero(x.size());
  const double h = 1e-5 * (1.0 + inf_norm(x));
  const Vector dir = u / norm;
  return (p.gradient(x + h * dir) - p.gradient(x - h * dir)) * (norm / (2 * h));
}

// ---------------------------------------------------------------------------
// FunctionPotential

FunctionPotential::FunctionPotential(std::string name, Eigen::Index dim, EnergyFn energy, GradientFn gradient,
                                     HessVecFn hessian_vec, std::vector<StationaryPoint> known)
    : name_(std::move(name)),
      dim_(dim),
      energy_(std::move(energy)),
      gradient_(std::move(gradient)),
      hessian_vec_(std::move(hessian_vec)) {
  require(dim_ > 0, "FunctionPotential: dimension must be positive");
  require(static_cast<bool>(energy_), "FunctionPotential: energy handle is required");
  known_ = std::move(known);
}

double FunctionPotential::energy_impl(const Vector& x) const { return energy_(x); }

Vector FunctionPotential::gradient_impl(const Vector& x) const {
  return gradient_ ? gradient_(x) : fd_gradient(*this, x);
}

Vector FunctionPotential::hessian_vec_impl(const Vector& x, const Vector& u) const {
  return hessian_vec_ ? hessian_vec_(x, u) : fd_hessian_vec(*this, x, u);
}

// ---------------------------------------------------------------------------
// DoubleWell

DoubleWell::DoubleWell(double mu) : mu_(mu) {
  require(mu > 0.0, "double_well: mu must be positive");
  known_ = {{"SP", Vector::Zero(2), 1},
            {"MIN+", Eigen::Vector2d(1.0, 0.0), 0},
            {"MIN-", Eigen::Vector2d(-1.0, 0.0), 0}};
}

double DoubleWell::energy_impl(const Vector& x) const {
  const double s = x[0] * x[0] - 1.0;
  return 0.25 * s * s + 0.5 * mu_ * x[1] * x[1];
}

Vector DoubleWell::gradient_impl(const Vector& x) const {
  return Eigen::Vector2d(x[0] * (x[0] * x[0] - 1.0), mu_ * x[1]);
}

Vector DoubleWell::hessian_vec_impl(const Vector& x, const Vector& u) const {
  return Eigen::Vector2d((3.0 * x[0] * x[0] - 1.0) * u[0], mu_ * u[1]);
}

// ---------------------------------------------------------------------------
// ThreeHole

namespace {

struct Gaussian {
  double c, a, b;
};

constexpr Gaussian kWells[] = {
    {3.0, 0.0, 1.0 / 3.0},
    {-3.0, 0.0, 5.0 / 3.0},
    {-5.0, 1.0, 0.0},
    {-5.0, -1.0, 0.0},
};

// Newton polish of an approximate stationary point of a 2-d surface.
Vector polish(const ThreeHole& p, Vector x) {
  for (int it = 0; it < 50; ++it) {
    const Vector g = p.gradient(x);
    if (g.norm() < 1e-15) break;
    Eigen::Matrix2d h;
    h.col(0) = p.hessian_vec(x, Eigen::Vector2d(1, 0));
    h.col(1) = p.hessian_vec(x, Eigen::Vector2d(0, 1));
    const Vector dx = h.fullPivLu().solve(g);
    x -= dx;
    if (dx.norm() < 1e-17) break;
  }
  return x;
}

}  // namespace

ThreeHole::ThreeHole() {
  const std::vector<StationaryPoint> approx = {
      {"SP1", Eigen::Vector2d(0.0, -0.31582), 1},
      {"SP2", Eigen::Vector2d(-0.61727, 1.10273), 1},
      {"SP3", Eigen::Vector2d(0.61727, 1.10273), 1},
      {"MAX", Eigen::Vector2d(0.0, 0.5192), 2},
      {"MIN1", Eigen::Vector2d(-1.048, -0.042), 0},
      {"MIN2", Eigen::Vector2d(1.048, -0.042), 0},
      {"MIN3", Eigen::Vector2d(0.0, 1.537), 0},
  };
  for (const auto& sp : approx) known_.push_back({sp.label, polish(*this, sp.point), sp.index});
}

double ThreeHole::energy_impl(const Vector& x) const {
  double v = 0.0;
  for (const auto& w : kWells) {
    const double dx = x[0] - w.a, dy = x[1] - w.b;
    v += w.c * std::exp(-dx * dx - dy * dy);
  }
  const double y3 = x[1] - 1.0 / 3.0;
  return v + 0.2 * std::pow(x[0], 4) + 0.2 * std::pow(y3, 4);
}

Vector ThreeHole::gradient_impl(const Vector& x) const {
  Eigen::Vector2d g(0.8 * std::pow(x[0], 3), 0.8 * std::pow(x[1] - 1.0 / 3.0, 3));
  for (const auto& w : kWells) {
    const double dx = x[0] - w.a, dy = x[1] - w.b;
    const double e = w.c * std::exp(-dx * dx - dy * dy);
    g[0] -= 2.0 * dx * e;
    g[1] -= 2.0 * dy * e;
  }
  return g;
}

Eigen::Matrix2d ThreeHole::hessian(const Vector& x) const {
  const double y3 = x[1] - 1.0 / 3.0;
  Eigen::Matrix2d h;
  h << 2.4 * x[0] * x[0], 0.0, 0.0, 2.4 * y3 * y3;
  for (const auto& w : kWells) {
    const double dx = x[0] - w.a, dy = x[1] - w.b;
    const double e = w.c * std::exp(-dx * dx - dy * dy);
    h(0, 0) += (4.0 * dx * dx - 2.0) * e;
    h(1, 1) += (4.0 * dy * dy - 2.0) * e;
    h(0, 1) += 4.0 * dx * dy * e;
  }
  h(1, 0) = h(0, 1);
  return h;
}

Vector ThreeHole::hessian_vec_impl(const Vector& x, const Vector& u) const { return hessian(x) * u; }

// ---------------------------------------------------------------------------
// SphereQuadratic

SphereQuadratic::SphereQuadratic(Eigen::Vector3d coeffs) : c_(coeffs) {
  const std::set<double> distinct(c_.data(), c_.data() + 3);
  require(distinct.size() == 3, "sphere_quadratic: coefficients must be distinct");
  static const char* kinds[] = {"MIN", "SP", "MAX"};
  for (int i = 0; i < 3; ++i) {
    int index = 0;
    for (int j = 0; j < 3; ++j) index += c_[j] < c_[i] ? 1 : 0;
    for (double sign : {1.0, -1.0}) {
      Vector e = Vector::Zero(3);
      e[i] = sign;
      known_.push_back({fmt::format("{}{}", kinds[index], sign > 0 ? "+" : "-"), e, index});
    }
  }
}

double SphereQuadratic::energy_impl(const Vector& x) const { return (c_.array() * x.array().square()).sum(); }

Vector SphereQuadratic::gradient_impl(const Vector& x) const { return 2.0 * (c_.array() * x.array()).matrix(); }

Vector SphereQuadratic::hessian_vec_impl(const Vector&, const Vector& u) const {
  return 2.0 * (c_.array() * u.array()).matrix();
}

// ---------------------------------------------------------------------------
// Quadratic

Quadratic::Quadratic(Matrix hessian, Vector center) : h_(std::move(hessian)), c_(std::move(center)) {
  require(h_.rows() > 0 && h_.rows() == h_.cols(), "quadratic: Hessian must be square and non-empty");
  require((h_ - h_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + h_.cwiseAbs().maxCoeff()),
          "quadratic: Hessian must be symmetric");
  if (c_.size() == 0) c_ = Vector::Zero(h_.rows());
  require_dimension(c_.size(), h_.rows(), "quadratic center");
  Eigen::SelfAdjointEigenSolver<Matrix> es(h_);
  const int negatives = static_cast<int>((es.eigenvalues().array() < 0.0).count());
  known_ = {{"X*", c_, negatives}};
}

double Quadratic::energy_impl(const Vector& x) const {
  const Vector d = x - c_;
  return 0.5 * d.dot(h_ * d);
}

Vector Quadratic::gradient_impl(const Vector& x) const { return h_ * (x - c_); }

// ---------------------------------------------------------------------------
// CubicIndexTwo

CubicIndexTwo::CubicIndexTwo() { known_ = {{"SP2", Vector::Zero(3), 2}}; }

double CubicIndexTwo::energy_impl(const Vector& v) const {
  const double x = v[0], y = v[1], z = v[2];
  return 0.5 * (-2.0 * x * x - y * y + 3.0 * z * z) + 0.5 * x * x * z + 0.3 * x * y * y + 0.2 * y * z * z +
         0.1 * (x * x * x * x + y * y * y * y + z * z * z * z);
}

Vector CubicIndexTwo::gradient_impl(const Vector& v) const {
  const double x = v[0], y = v[1], z = v[2];
  return Eigen::Vector3d(-2.0 * x + x * z + 0.3 * y * y + 0.4 * x * x * x,
                         -y + 0.6 * x * y + 0.2 * z * z + 0.4 * y * y * y,
                         3.0 * z + 0.5 * x * x + 0.4 * y * z + 0.4 * z * z * z);
}

Vector CubicIndexTwo::hessian_vec_impl(const Vector& v, const Vector& u) const {
  const double x = v[0], y = v[1], z = v[2];
  Eigen::Matrix3d h;
  h << -2.0 + z + 1.2 * x * x, 0.6 * y, x,  //
      0.6 * y, -1.0 + 0.6 * x + 1.2 * y * y, 0.4 * z,  //
      x, 0.4 * z, 3.0 + 0.4 * y + 1.2 * z * z;
  return h * u;
}

// ---------------------------------------------------------------------------
// Morse island

void MorseClusterSpec::validate() const {
  require(A > 0 && a > 0 && R0 > 0 && Rc > 0 && lattice_constant > 0, "morse: physical parameters must be positive");
  require(slab_layers > 0 && atoms_per_layer > 0, "morse: slab_layers and atoms_per_layer must be positive");
  require(frozen_layers >= 0 && frozen_layers <= slab_layers, "morse: frozen_layers must lie in [0, slab_layers]");
  require(island_atoms >= 0 && island_atoms <= 7, "morse: island_atoms must lie in [0, 7]");
  require(free_atoms() > 0, "morse: no free atoms");
}

MorsePair::MorsePair(const MorseClusterSpec& s) : A(s.A), a(s.a), R0(s.R0), Rc(s.Rc), shift(0.0) { shift = raw(Rc); }

double MorsePair::raw(double r) const {
  const double e = std::exp(-a * (r - R0));
  return A * (e * e - 2.0 * e);
}

double MorsePair::value(double r) const { return r < Rc ? raw(r) - shift : 0.0; }

double MorsePair::d1(double r) const {
  if (r >= Rc) return 0.0;
  const double e = std::exp(-a * (r - R0));
  return 2.0 * A * a * (e - e * e);
}

double MorsePair::d2(double r) const {
  if (r >= Rc) return 0.0;
  const double e = std::exp(-a * (r - R0));
  return A * a * a * (4.0 * e * e - 2.0 * e);
}

int MorseLattice::free_count() const {
  return static_cast<int>(std::count(frozen.begin(), frozen.end(), false));
}

Vector MorseLattice::free_coordinates() const {
  Vector x(3 * free_count());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < positions.cols(); ++i) {
    if (frozen[static_cast<std::size_t>(i)]) continue;
    x.segment<3>(3 * k++) = positions.col(i);
  }
  return x;
}

MorseLattice build_morse_lattice(const MorseClusterSpec& spec) {
  spec.validate();
  const double d = spec.lattice_constant;
  const double layer_gap = d * std::sqrt(2.0 / 3.0);
  const Eigen::Vector2d a1(d, 0.0);
  const Eigen::Vector2d a2(0.5 * d, 0.5 * std::sqrt(3.0) * d);
  const Eigen::Vector2d hollow = (a1 + a2) / 3.0;

  // The stack axis passes through a site of every third layer, counted from
  // the island layer, so the island centre sits right on it.
  const int island_layer = spec.slab_layers;
  auto site = [&](int i, int j, int layer) -> Eigen::Vector3d {
    const int shift = ((layer - island_layer) % 3 + 3) % 3;
    const Eigen::Vector2d s = i * a1 + j * a2 + static_cast<double>(shift) * hollow;
    return {s.x(), s.y(), layer * layer_gap};
  };

  // Disk-shaped layers: the sites closest to the axis, ties broken by polar
  // angle so the choice is deterministic.
  const int reach = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(spec.atoms_per_layer)))) + 2;
  auto disk = [&](int layer) {
    std::vector<std::tuple<double, double, Eigen::Vector3d>> cand;
    for (int j = -2 * reach; j <= 2 * reach; ++j) {
      for (int i = -2 * reach; i <= 2 * reach; ++i) {
        const Eigen::Vector3d s = site(i, j, layer);
        const double r = std::round(s.head<2>().norm() * 1e9) / 1e9;
        cand.emplace_back(r, std::atan2(s.y(), s.x()), s);
      }
    }
    std::sort(cand.begin(), cand.end(), [](const auto& l, const auto& r) {
      return std::tie(std::get<0>(l), std::get<1>(l)) < std::tie(std::get<0>(r), std::get<1>(r));
    });
    cand.resize(static_cast<std::size_t>(spec.atoms_per_layer));
    return cand;
  };

  MorseLattice lat;
  const int total = spec.slab_layers * spec.atoms_per_layer + spec.island_atoms;
  lat.positions.resize(3, total);
  lat.frozen.assign(static_cast<std::size_t>(total), false);
  int n = 0;
  for (int layer = 0; layer < spec.slab_layers; ++layer) {
    for (const auto& c : disk(layer)) {
      lat.positions.col(n) = std::get<2>(c);
      lat.frozen[static_cast<std::size_t>(n)] = layer < spec.frozen_layers;
      ++n;
    }
  }

  // Island on the fcc hollow sites above the top layer: centre plus ring.
  const Eigen::Vector2d ring[] = {a1, a2, a2 - a1, -a1, -a2, a1 - a2};
  const Eigen::Vector3d center = site(0, 0, island_layer);
  for (int k = 0; k < spec.island_atoms; ++k) {
    lat.positions.col(n++) = k == 0 ? center : Eigen::Vector3d(center + Eigen::Vector3d(ring[k - 1].x(), ring[k - 1].y(), 0.0));
  }
  return lat;
}

MorseIsland::MorseIsland(MorseClusterSpec spec)
    : spec_(spec), pair_((spec.validate(), spec)), lattice_(build_morse_lattice(spec)) {
  slot_.assign(lattice_.frozen.size(), -1);
  for (std::size_t i = 0; i < lattice_.frozen.size(); ++i) {
    if (!lattice_.frozen[i]) {
      slot_[i] = static_cast<int>(free_.size());
      free_.push_back(static_cast<int>(i));
    }
  }
}

Eigen::Matrix3Xd MorseIsland::full_positions(const Vector& x) const {
  require_dimension(x.size(), dimension(), "morse full_positions");
  Eigen::Matrix3Xd pos = lattice_.positions;
  for (std::size_t k = 0; k < free_.size(); ++k) pos.col(free_[k]) = x.segment<3>(3 * static_cast<Eigen::Index>(k));
  return pos;
}

double MorseIsland::energy_impl(const Vector& x) const {
  const Eigen::Matrix3Xd pos = full_positions(x);
  const double rc2 = spec_.Rc * spec_.Rc;
  const int n = atom_count();
  double e = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (slot_[i] < 0 && slot_[j] < 0) continue;
      const double r2 = (pos.col(i) - pos.col(j)).squaredNorm();
      if (r2 >= rc2) continue;
      e += pair_.value(std::sqrt(r2));
    }
  }
  return e;
}

Vector MorseIsland::gradient_impl(const Vector& x) const {
  const Eigen::Matrix3Xd pos = full_positions(x);
  const double rc2 = spec_.Rc * spec_.Rc;
  const int n = atom_count();
  Vector g = Vector::Zero(dimension());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const int si = slot_[i], sj = slot_[j];
      if (si < 0 && sj < 0) continue;
      const Eigen::Vector3d dr = pos.col(i) - pos.col(j);
      const double r2 = dr.squaredNorm();
      if (r2 >= rc2) continue;
      const double r = std::sqrt(r2);
      const Eigen::Vector3d f = (pair_.d1(r) / r) * dr;
      if (si >= 0) g.segment<3>(3 * si) += f;
      if (sj >= 0) g.segment<3>(3 * sj) -= f;
    }
  }
  return g;
}

Vector MorseIsland::hessian_vec_impl(const Vector& x, const Vector& u) const {
  const Eigen::Matrix3Xd pos = full_positions(x);
  const double rc2 = spec_.Rc * spec_.Rc;
  const int n = atom_count();
  Vector hu = Vector::Zero(dimension());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const int si = slot_[i], sj = slot_[j];
      if (si < 0 && sj < 0) continue;
      const Eigen::Vector3d dr = pos.col(i) - pos.col(j);
      const double r2 = dr.squaredNorm();
      if (r2 >= rc2) continue;
      const double r = std::sqrt(r2);
      const Eigen::Vector3d rhat = dr / r;
      Eigen::Vector3d du = Eigen::Vector3d::Zero();
      if (si >= 0) du += u.segment<3>(3 * si);
      if (sj >= 0) du -= u.segment<3>(3 * sj);
      const double radial = rhat.dot(du);
      const double t = pair_.d1(r) / r;
      const Eigen::Vector3d k = pair_.d2(r) * radial * rhat + t * (du - radial * rhat);
      if (si >= 0) hu.segment<3>(3 * si) += k;
      if (sj >= 0) hu.segment<3>(3 * sj) -= k;
    }
  }
  return hu;
}

void write_xyz(std::ostream& out, const Eigen::Matrix3Xd& positions, std::string_view comment,
               std::string_view element) {
  out << positions.cols() << '\n' << comment << '\n';
  for (Eigen::Index i = 0; i < positions.cols(); ++i) {
    out << fmt::format("{} {:.10f} {:.10f} {:.10f}\n", element, positions(0, i), positions(1, i), positions(2, i));
  }
}

// ---------------------------------------------------------------------------
// make_builtin

namespace {

void reject_unknown_keys(std::string_view name, const nlohmann::json& params, std::initializer_list<const char*> keys) {
  require(params.is_object() || params.is_null(), fmt::format("{}: params must be an object", name));
  if (params.is_null()) return;
  for (const auto& [key, _] : params.items()) {
    const bool known = std::any_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; });
    require(known, fmt::format("{}: unknown parameter '{}'", name, key));
  }
}

template <typename T>
T param_or(const nlohmann::json& params, const char* key, T fallback) {
  if (params.is_null() || !params.contains(key)) return fallback;
  try {
    return params.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(fmt::format("parameter '{}': {}", key, e.what()));
  }
}

Vector to_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

}  // namespace

std::vector<std::string> builtin_names() {
  return {"double_well", "three_hole", "sphere_quadratic", "morse_island", "quadratic", "index2_cubic"};
}

PotentialPtr make_builtin(std::string_view name, const nlohmann::json& params) {
  if (name == "double_well") {
    reject_unknown_keys(name, params, {"mu"});
    return std::make_shared<DoubleWell>(param_or(params, "mu", 1.0));
  }
  if (name == "three_hole") {
    reject_unknown_keys(name, params, {});
    return std::make_shared<ThreeHole>();
  }
  if (name == "sphere_quadratic") {
    reject_unknown_keys(name, params, {"coeffs"});
    const auto c = param_or(params, "coeffs", std::vector<double>{1.0, 2.0, 3.0});
    require(c.size() == 3, "sphere_quadratic: coeffs must have 3 entries");
    return std::make_shared<SphereQuadratic>(Eigen::Vector3d(c[0], c[1], c[2]));
  }
  if (name == "morse_island") {
    reject_unknown_keys(name, params,
                        {"A", "a", "R0", "Rc", "lattice_constant", "slab_layers", "atoms_per_layer", "frozen_layers",
                         "island_atoms"});
    MorseClusterSpec s;
    s.A = param_or(params, "A", s.A);
    s.a = param_or(params, "a", s.a);
    s.R0 = param_or(params, "R0", s.R0);
    s.Rc = param_or(params, "Rc", s.Rc);
    s.lattice_constant = param_or(params, "lattice_constant", s.lattice_constant);
    s.slab_layers = param_or(params, "slab_layers", s.slab_layers);
    s.atoms_per_layer = param_or(params, "atoms_per_layer", s.atoms_per_layer);
    s.frozen_layers = param_or(params, "frozen_layers", s.frozen_layers);
    s.island_atoms = param_or(params, "island_atoms", s.island_atoms);
    return std::make_shared<MorseIsland>(s);
  }
  if (name == "quadratic") {
    reject_unknown_keys(name, params, {"diag", "matrix", "center"});
    Matrix h;
    if (!params.is_null() && params.contains("matrix")) {
      const auto rows = param_or(params, "matrix", std::vector<std::vector<double>>{});
      require(!rows.empty(), "quadratic: matrix must be non-empty");
      h.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i].size() == rows.size(), "quadratic: matrix must be square");
        for (std::size_t j = 0; j < rows.size(); ++j) h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      }
    } else {
      const auto d = param_or(params, "diag", std::vector<double>{-1.0, 2.0, 3.0});
      require(!d.empty(), "quadratic: diag must be non-empty");
      h = to_vector(d).asDiagonal();
    }
    const auto c = param_or(params, "center", std::vector<double>{});
    return std::make_shared<Quadratic>(h, c.empty() ? Vector() : to_vector(c));
  }
  if (name == "index2_cubic") {
    reject_unknown_keys(name, params, {});
    return std::make_shared<CubicIndexTwo>();
  }
  throw ContractError(fmt::format("unknown builtin potential '{}'", name));
}

}  // namespace saddle
