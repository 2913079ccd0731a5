#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "chns/mesh.hpp"
#include "chns/quadrature.hpp"

namespace chns {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

/// Orthonormal Legendre polynomial sqrt((2n+1)/2) P_n and its derivative.
inline std::pair<double, double> orthonormal_legendre(int n, double x) {
  const auto [p, dp] = detail::legendre_and_derivative(n, x);
  const double s = std::sqrt((2.0 * n + 1.0) / 2.0);
  return {s * p, s * dp};
}

/// Basis values and reference derivatives tabulated at a set of points.
struct BasisTable {
  DenseMatrix phi;                   // n_points x n_basis
  std::array<DenseMatrix, 3> dphi;   // reference-coordinate derivatives
  Vector weights;                    // reference weights (empty for bare point sets)
};

/// Tensor-product orthonormal Legendre basis of Q_k on [-1, 1]^dim.
class LegendreBasis {
 public:
  LegendreBasis(int dim, int degree) : dim_(dim), degree_(degree) {
    if (degree < 0) throw std::invalid_argument("basis: degree must be >= 0");
    const int n = degree + 1;
    size_ = dim == 2 ? n * n : n * n * n;
  }

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  int size() const { return size_; }

  /// Multi-index of basis function i, x fastest.
  std::array<int, 3> multi_index(int i) const {
    const int n = degree_ + 1;
    return {i % n, (i / n) % n, dim_ > 2 ? i / (n * n) : 0};
  }

  void evaluate(const Point& xi, double* values, std::array<double*, 3> grads) const {
    const int n = degree_ + 1;
    std::array<std::array<double, 16>, 3> v{}, dv{};
    for (int a = 0; a < dim_; ++a)
      for (int m = 0; m < n; ++m) {
        const auto [p, dp] = orthonormal_legendre(m, xi[a]);
        v[a][m] = p;
        dv[a][m] = dp;
      }
    for (int i = 0; i < size_; ++i) {
      const auto mi = multi_index(i);
      double val = 1.0;
      for (int a = 0; a < dim_; ++a) val *= v[a][mi[a]];
      values[i] = val;
      for (int g = 0; g < dim_; ++g) {
        if (!grads[g]) continue;
        double d = 1.0;
        for (int a = 0; a < dim_; ++a) d *= (a == g ? dv[a][mi[a]] : v[a][mi[a]]);
        grads[g][i] = d;
      }
    }
  }

  BasisTable tabulate(const std::vector<Point>& points) const {
    BasisTable t;
    const auto np = static_cast<Eigen::Index>(points.size());
    t.phi.resize(np, size_);
    for (auto& d : t.dphi) d.setZero(np, size_);
    std::vector<double> val(size_);
    std::array<std::vector<double>, 3> grad;
    for (auto& g : grad) g.resize(size_);
    for (Eigen::Index q = 0; q < np; ++q) {
      evaluate(points[q], val.data(), {grad[0].data(), grad[1].data(), grad[2].data()});
      for (int i = 0; i < size_; ++i) {
        t.phi(q, i) = val[i];
        for (int a = 0; a < dim_; ++a) t.dphi[a](q, i) = grad[a][i];
      }
    }
    return t;
  }

 private:
  int dim_;
  int degree_;
  int size_;
};

/// Reference-cell tables for one (dim, degree, quadrature) triple: volume
/// tables and one table per local face, face f = 2 * axis + (side > 0).
struct ReferenceElement {
  LegendreBasis basis;
  QuadratureRule volume_rule;
  QuadratureRule face_rule;  // on [-1, 1]^(dim-1)
  BasisTable volume;
  std::vector<BasisTable> faces;
  std::vector<std::vector<Point>> face_point_sets;  // same indexing as faces

  ReferenceElement(int dim, int degree, int n_quad)
      : basis(dim, degree),
        volume_rule(tensor_gauss_legendre(dim, n_quad)),
        face_rule(tensor_gauss_legendre(dim - 1, n_quad)) {
    volume = basis.tabulate(volume_rule.points);
    volume.weights = Eigen::Map<const Vector>(volume_rule.weights.data(),
                                              static_cast<Eigen::Index>(volume_rule.size()));
    for (int axis = 0; axis < dim; ++axis)
      for (int side : {-1, 1}) {
        face_point_sets.push_back(face_points(dim, axis, side));
        BasisTable t = basis.tabulate(face_point_sets.back());
        t.weights = Eigen::Map<const Vector>(face_rule.weights.data(),
                                             static_cast<Eigen::Index>(face_rule.size()));
        faces.push_back(std::move(t));
      }
  }

  /// Face quadrature points embedded in the reference cell. The tangential
  /// ordering is the same on both sides so paired faces share point order.
  std::vector<Point> face_points(int dim, int axis, int side) const {
    std::vector<Point> pts;
    for (const Point& s : face_rule.points) {
      Point p{0.0, 0.0, 0.0};
      int t = 0;
      for (int a = 0; a < dim; ++a) p[a] = (a == axis) ? static_cast<double>(side) : s[t++];
      pts.push_back(p);
    }
    return pts;
  }

  static int face_index(int axis, int side) { return 2 * axis + (side > 0 ? 1 : 0); }
};

/// Broken tensor-product polynomial space of degree k with n_components
/// components. Dofs are numbered (element, component, local) with local
/// fastest.
class DgSpace {
 public:
  DgSpace(std::shared_ptr<const Mesh> mesh, int degree, int n_components = 1, int n_quad = 0)
      : mesh_(std::move(mesh)), degree_(degree), n_components_(n_components) {
    if (!mesh_) throw std::invalid_argument("DgSpace: null mesh");
    if (degree < 0) throw std::invalid_argument("DgSpace: degree must be >= 0");
    if (n_components != 1 && n_components != mesh_->dim())
      throw std::invalid_argument("DgSpace: components must be 1 or dim");
    n_quad_ = n_quad > 0 ? n_quad : default_quadrature_points(degree);
    ref_ = std::make_shared<const ReferenceElement>(mesh_->dim(), degree, n_quad_);
  }

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  int dim() const { return mesh_->dim(); }
  int degree() const { return degree_; }
  int n_components() const { return n_components_; }
  int n_quad() const { return n_quad_; }
  int n_basis() const { return ref_->basis.size(); }
  int dofs_per_element() const { return n_components_ * n_basis(); }
  Eigen::Index size() const {
    return static_cast<Eigen::Index>(mesh_->n_elements()) * dofs_per_element();
  }
  Eigen::Index dof(std::size_t element, int component, int local) const {
    return static_cast<Eigen::Index>(element) * dofs_per_element() + component * n_basis() + local;
  }
  Eigen::Index block_start(std::size_t element, int component = 0) const { return dof(element, component, 0); }
  const ReferenceElement& reference() const { return *ref_; }

  double det_jacobian(std::size_t e) const {
    const Element& el = mesh_->element(e);
    double j = 1.0;
    for (int a = 0; a < dim(); ++a) j *= 0.5 * el.size[a];
    return j;
  }
  double face_jacobian(std::size_t e, int axis) const {
    const Element& el = mesh_->element(e);
    double j = 1.0;
    for (int a = 0; a < dim(); ++a)
      if (a != axis) j *= 0.5 * el.size[a];
    return j;
  }
  /// Factor converting a reference derivative along `axis` to physical.
  double grad_scale(std::size_t e, int axis) const { return 2.0 / mesh_->element(e).size[axis]; }

  Point volume_point(std::size_t e, int q) const {
    return mesh_->to_physical(e, ref_->volume_rule.points[q]);
  }
  Point face_point(std::size_t e, int face, int q) const {
    return mesh_->to_physical(e, ref_->face_point_sets[face][q]);
  }

  bool same_layout(const DgSpace& other) const {
    return mesh_ == other.mesh_ && degree_ == other.degree_ && n_components_ == other.n_components_;
  }

 private:
  std::shared_ptr<const Mesh> mesh_;
  int degree_;
  int n_components_;
  int n_quad_ = 0;
  std::shared_ptr<const ReferenceElement> ref_;
};

/// Coefficients of component `comp` on element e.
inline auto local_coeffs(const DgSpace& space, const Vector& u, std::size_t e, int comp = 0) {
  return u.segment(space.block_start(e, comp), space.n_basis());
}

/// Value of a field at a reference point of element e (all components).
inline std::array<double, 3> evaluate(const DgSpace& space, const Vector& coeffs, std::size_t element,
                                      const Point& ref_point) {
  if (element >= space.mesh().n_elements()) throw std::out_of_range("evaluate: element index out of range");
  if (coeffs.size() != space.size()) throw std::invalid_argument("evaluate: coefficient length mismatch");
  std::vector<double> phi(space.n_basis());
  space.reference().basis.evaluate(ref_point, phi.data(), {nullptr, nullptr, nullptr});
  std::array<double, 3> out{0.0, 0.0, 0.0};
  for (int c = 0; c < space.n_components(); ++c) {
    const auto block = local_coeffs(space, coeffs, element, c);
    for (int i = 0; i < space.n_basis(); ++i) out[c] += block[i] * phi[i];
  }
  return out;
}

inline double evaluate_scalar(const DgSpace& space, const Vector& coeffs, std::size_t element,
                              const Point& ref_point) {
  return evaluate(space, coeffs, element, ref_point)[0];
}

/// Field value at a physical point.
inline std::array<double, 3> evaluate_at(const DgSpace& space, const Vector& coeffs, const Point& x) {
  const std::size_t e = space.mesh().locate(x);
  return evaluate(space, coeffs, e, space.mesh().to_reference(e, x));
}

/// (phi_i, 1) for every scalar dof; the mean-constraint weight vector.
inline Vector integral_weights(const DgSpace& space) {
  if (space.n_components() != 1) throw std::invalid_argument("integral_weights: scalar space required");
  const auto& ref = space.reference();
  const Vector local = ref.volume.phi.transpose() * ref.volume.weights;
  Vector w(space.size());
  for (std::size_t e = 0; e < space.mesh().n_elements(); ++e)
    w.segment(space.block_start(e), space.n_basis()) = space.det_jacobian(e) * local;
  return w;
}

/// Coefficient vector of the constant function `value` (every component).
inline Vector constant_field(const DgSpace& space, double value) {
  // Only the (0,...,0) mode is nonzero: phi_0 = 2^{-dim/2}.
  const double phi0 = std::pow(0.5, 0.5 * space.dim());
  Vector u = Vector::Zero(space.size());
  for (std::size_t e = 0; e < space.mesh().n_elements(); ++e)
    for (int c = 0; c < space.n_components(); ++c) u[space.dof(e, c, 0)] = value / phi0;
  return u;
}

namespace detail {

template <class F>
inline constexpr bool returns_scalar = std::is_convertible_v<std::invoke_result_t<const F&, const Point&>, double>;

}  // namespace detail

/// L2 projection onto the space; f maps a physical point to a double (scalar
/// spaces) or an array of components (vector spaces). Element-local solves.
template <class F>
Vector l2_project(const DgSpace& space, const F& f) {
  const auto& ref = space.reference();
  const int nc = space.n_components();
  const auto nq = static_cast<Eigen::Index>(ref.volume_rule.size());
  // Local mass matrix on the reference cell; orthonormal basis makes it the
  // identity up to quadrature round-off, factor it anyway.
  const DenseMatrix ref_mass = ref.volume.phi.transpose() * ref.volume.weights.asDiagonal() * ref.volume.phi;
  const Eigen::LLT<DenseMatrix> llt(ref_mass);
  if (llt.info() != Eigen::Success) throw std::runtime_error("l2_project: singular local mass matrix");
  Vector u(space.size());
  DenseMatrix values(nq, nc);
  for (std::size_t e = 0; e < space.mesh().n_elements(); ++e) {
    for (Eigen::Index q = 0; q < nq; ++q) {
      const Point x = space.volume_point(e, static_cast<int>(q));
      if constexpr (detail::returns_scalar<F>) {
        values(q, 0) = f(x);
      } else {
        const auto v = f(x);
        for (int c = 0; c < nc; ++c) values(q, c) = v[c];
      }
    }
    for (int c = 0; c < nc; ++c) {
      const Vector rhs = ref.volume.phi.transpose() * (ref.volume.weights.cwiseProduct(values.col(c)));
      u.segment(space.block_start(e, c), space.n_basis()) = llt.solve(rhs);
    }
  }
  return u;
}

}  // namespace chns
