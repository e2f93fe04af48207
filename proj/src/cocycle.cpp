#include "dsplit/cocycle.hpp"

#include <cmath>
#include <numbers>

#include "dsplit/errors.hpp"

namespace dsplit {

double AngleField::operator()(const TorusPoint& x) const {
  constexpr double tau = 2.0 * std::numbers::pi;
  double a = offset + tau * (winding * x.coords[0] + winding_y * x.coords[1]);
  if (amplitude != 0.0) a += amplitude * std::sin(tau * x.coords[0] + phase);
  return a;
}

struct CocycleNode {
  CocycleKind kind = CocycleKind::constant;
  int m = 2;
  bool isometry = false;
  Matrix matrix;
  AngleField angle;
  Vec3 axis{0, 0, 1};
  Vec3 axis2{1, 0, 0};
  std::vector<double> logs, log_amps;
  int power = 1;
  double twist = 0.0;
  std::vector<Cocycle> children;
  double amplitude = 0.0, center = 0.0, width = 0.0;
  TorusTranslation f;
  std::vector<Matrix> samples;
};

namespace {

bool all_isometries(const std::vector<Cocycle>& v) {
  for (const auto& c : v)
    if (!c.isometry()) return false;
  return true;
}

}  // namespace

struct CocycleAccess {
  static Cocycle wrap(CocycleNode node) {
    Cocycle c;
    c.node_ = std::make_shared<const CocycleNode>(std::move(node));
    return c;
  }
};

namespace {
Cocycle make(CocycleNode node) { return CocycleAccess::wrap(std::move(node)); }
}  // namespace

Cocycle Cocycle::constant(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1) throw precondition_error("cocycle values must be square");
  if (std::abs(determinant(m)) <= 1e-12) throw precondition_error("constant cocycle is not invertible");
  CocycleNode n;
  n.kind = CocycleKind::constant;
  n.m = m.rows();
  n.matrix = m;
  n.isometry = is_orthogonal(m, 1e-10);
  return make(std::move(n));
}

Cocycle Cocycle::rotation2(AngleField angle) {
  CocycleNode n;
  n.kind = CocycleKind::rotation2;
  n.m = 2;
  n.angle = angle;
  n.isometry = true;
  return make(std::move(n));
}

Cocycle Cocycle::rotation3(Vec3 axis, AngleField angle) {
  CocycleNode n;
  n.kind = CocycleKind::rotation3;
  n.m = 3;
  n.axis = unit(axis);
  n.angle = angle;
  n.isometry = true;
  return make(std::move(n));
}

Cocycle Cocycle::diagonal(std::vector<double> log_diag, std::vector<double> log_amplitude) {
  if (log_diag.empty() || log_diag.size() > static_cast<std::size_t>(max_dim))
    throw precondition_error("diagonal cocycle size out of range");
  if (log_amplitude.empty()) log_amplitude.assign(log_diag.size(), 0.0);
  if (log_amplitude.size() != log_diag.size()) throw precondition_error("diagonal amplitude size mismatch");
  CocycleNode n;
  n.kind = CocycleKind::diagonal;
  n.m = static_cast<int>(log_diag.size());
  n.isometry = true;
  for (std::size_t i = 0; i < log_diag.size(); ++i)
    if (log_diag[i] != 0.0 || log_amplitude[i] != 0.0) n.isometry = false;
  n.logs = std::move(log_diag);
  n.log_amps = std::move(log_amplitude);
  return make(std::move(n));
}

Cocycle Cocycle::quaternion_power(int power, double twist, Vec3 axis, Vec3 twist_axis) {
  CocycleNode n;
  n.kind = CocycleKind::quaternion_power;
  n.m = 3;
  n.power = power;
  n.twist = twist;
  n.axis = unit(axis);
  n.axis2 = unit(twist_axis);
  n.isometry = true;
  return make(std::move(n));
}

Cocycle Cocycle::product(std::vector<Cocycle> factors) {
  if (factors.empty()) throw precondition_error("empty cocycle product");
  CocycleNode n;
  n.kind = CocycleKind::product;
  n.m = factors.front().dim();
  for (const auto& c : factors)
    if (c.dim() != n.m) throw precondition_error("cocycle product dimension mismatch");
  n.isometry = all_isometries(factors);
  n.children = std::move(factors);
  return make(std::move(n));
}

Cocycle Cocycle::perturbation(Cocycle base, const Matrix& direction, double amplitude, double center,
                              double width) {
  if (direction.rows() != base.dim() || direction.cols() != base.dim())
    throw precondition_error("perturbation direction has the wrong shape");
  if (!(width > 0.0)) throw precondition_error("perturbation width must be positive");
  CocycleNode n;
  n.kind = CocycleKind::perturbation;
  n.m = base.dim();
  n.matrix = direction;
  n.amplitude = amplitude;
  n.center = center;
  n.width = width;
  n.isometry = amplitude == 0.0 && base.isometry();
  n.children = {std::move(base)};
  return make(std::move(n));
}

Cocycle Cocycle::coboundary(Cocycle transfer, const TorusTranslation& f) {
  CocycleNode n;
  n.kind = CocycleKind::coboundary;
  n.m = transfer.dim();
  n.isometry = transfer.isometry();
  n.f = f;
  n.children = {std::move(transfer)};
  return make(std::move(n));
}

Cocycle Cocycle::sampled(std::vector<Matrix> values) {
  if (values.empty()) throw precondition_error("sampled cocycle needs values");
  CocycleNode n;
  n.kind = CocycleKind::sampled;
  n.m = values.front().rows();
  n.isometry = true;
  for (const auto& v : values) {
    if (v.rows() != n.m || v.cols() != n.m) throw precondition_error("sampled cocycle shape mismatch");
    if (!is_orthogonal(v, 1e-10)) n.isometry = false;
  }
  n.samples = std::move(values);
  return make(std::move(n));
}

Matrix Cocycle::operator()(const TorusPoint& x) const {
  const CocycleNode& n = *node_;
  switch (n.kind) {
    case CocycleKind::constant:
      return n.matrix;
    case CocycleKind::rotation2: {
      double a = n.angle(x), c = std::cos(a), s = std::sin(a);
      return Matrix{{c, -s}, {s, c}};
    }
    case CocycleKind::rotation3:
      return axis_angle(n.axis, n.angle(x));
    case CocycleKind::diagonal: {
      std::vector<double> d(n.logs.size());
      double w = std::sin(2.0 * std::numbers::pi * x.coords[0]);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::exp(n.logs[i] + n.log_amps[i] * w);
      return Matrix::diagonal(d);
    }
    case CocycleKind::quaternion_power: {
      double s = x.coords[0];
      Quat q = qexp(n.axis, std::numbers::pi * s) * qexp(n.axis2, n.twist * std::sin(2.0 * std::numbers::pi * s));
      return quaternion_to_rotation(qpow(q, n.power));
    }
    case CocycleKind::product: {
      Matrix r = n.children.front()(x);
      for (std::size_t i = 1; i < n.children.size(); ++i) r = r * n.children[i](x);
      return r;
    }
    case CocycleKind::perturbation: {
      double u = circle_distance(x.coords[0], n.center) / n.width;
      double bump = u < 1.0 ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
      Matrix r = n.children.front()(x);
      if (bump == 0.0) return r;
      Matrix p = Matrix::identity(n.m) + (n.amplitude * bump) * n.matrix;
      return r * p;
    }
    case CocycleKind::coboundary: {
      const Cocycle& t = n.children.front();
      return t(iterate(n.f, x, 1)) * inverse(t(x));
    }
    case CocycleKind::sampled: {
      std::size_t sz = n.samples.size();
      std::size_t i = static_cast<std::size_t>(std::llround(x.coords[0] * static_cast<double>(sz))) % sz;
      return n.samples[i];
    }
  }
  throw precondition_error("unknown cocycle kind");
}

int Cocycle::dim() const { return node_->m; }
bool Cocycle::isometry() const { return node_->isometry; }
CocycleKind Cocycle::kind() const { return node_->kind; }

std::string Cocycle::kind_name() const {
  switch (node_->kind) {
    case CocycleKind::constant: return "constant";
    case CocycleKind::rotation2: return "rotation2";
    case CocycleKind::rotation3: return "rotation3";
    case CocycleKind::diagonal: return "diagonal";
    case CocycleKind::quaternion_power: return "quaternion_power";
    case CocycleKind::product: return "product";
    case CocycleKind::perturbation: return "perturbation";
    case CocycleKind::coboundary: return "coboundary";
    case CocycleKind::sampled: return "sampled";
  }
  return "?";
}

const Cocycle* Cocycle::transfer() const {
  return node_->kind == CocycleKind::coboundary ? &node_->children.front() : nullptr;
}

}  // namespace dsplit
