#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "chns/dg_space.hpp"
#include "chns/mesh.hpp"
#include "chns/sparse_linalg.hpp"

namespace chns {

using ScalarFunction = std::function<double(const Point&)>;
using VectorFunction = std::function<std::array<double, 3>(const Point&)>;
/// Boundary datum depending on position and outward normal.
using BoundaryFunction = std::function<double(const Point&, const Point&)>;

/// Interior-penalty parameters. All penalty denominators use one global
/// length, the element edge length of the uniform grid.
struct PenaltyConfig {
  double sigma_tilde_ch = 2.0;     // a_diff on the degree-k spaces
  double sigma_tilde_ellip = 1.0;  // a_diff on the degree-(k-1) pressure space
  double sigma_int = 8.0;          // a_D on interior faces
  double sigma_bdy = 16.0;         // a_D on boundary faces

  void validate() const {
    if (sigma_tilde_ch < 1.0 || sigma_tilde_ellip < 1.0 || sigma_int < 1.0 || sigma_bdy < 1.0)
      throw std::invalid_argument("penalties must be >= 1");
  }
};

namespace detail {

/// Physical-space quantities of one element's volume quadrature.
struct VolumeData {
  const DenseMatrix* phi = nullptr;
  std::array<DenseMatrix, 3> grad;
  Vector w;
};

inline VolumeData volume_data(const DgSpace& s, std::size_t e) {
  const auto& ref = s.reference();
  VolumeData d;
  d.phi = &ref.volume.phi;
  for (int a = 0; a < s.dim(); ++a) d.grad[a] = s.grad_scale(e, a) * ref.volume.dphi[a];
  d.w = s.det_jacobian(e) * ref.volume.weights;
  return d;
}

/// Face tables of one element seen from one of its faces.
struct FaceData {
  const DenseMatrix* phi = nullptr;
  DenseMatrix dn;  // derivative along +e_axis
  std::array<DenseMatrix, 3> grad;
  Vector w;
  int face = 0;
};

inline FaceData face_data(const DgSpace& s, std::size_t e, int axis, int side) {
  const auto& ref = s.reference();
  FaceData d;
  d.face = ReferenceElement::face_index(axis, side);
  const BasisTable& t = ref.faces[d.face];
  d.phi = &t.phi;
  for (int a = 0; a < s.dim(); ++a) d.grad[a] = s.grad_scale(e, a) * t.dphi[a];
  d.dn = d.grad[axis];
  d.w = s.face_jacobian(e, axis) * t.weights;
  return d;
}

inline void add_block(std::vector<Triplet>& t, Eigen::Index r0, Eigen::Index c0, const DenseMatrix& m,
                      double drop = 0.0) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (std::abs(m(i, j)) > drop) t.emplace_back(r0 + i, c0 + j, m(i, j));
}

inline SparseMatrix from_triplets(Eigen::Index rows, Eigen::Index cols, const std::vector<Triplet>& t) {
  SparseMatrix A(rows, cols);
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();
  return A;
}

inline void require_same_quadrature(const DgSpace& a, const DgSpace& b) {
  if (&a.mesh() != &b.mesh()) throw std::invalid_argument("forms: spaces live on different meshes");
  if (a.n_quad() != b.n_quad()) throw std::invalid_argument("forms: spaces use different quadrature");
}

constexpr std::array<double, 2> jump_sign{1.0, -1.0};  // minus, plus

/// Adds the same scalar block to every component.
inline void add_component_blocks(std::vector<Triplet>& t, const DgSpace& s, std::size_t row_e, std::size_t col_e,
                                 const DenseMatrix& m, double drop = 0.0) {
  for (int c = 0; c < s.n_components(); ++c) add_block(t, s.block_start(row_e, c), s.block_start(col_e, c), m, drop);
}

/// SIPG matrix on every component: volume term, interior faces with penalty
/// sigma_int, and (optionally) boundary faces with exterior trace zero and
/// penalty sigma_bdy. `consistency` = false drops the flux terms, giving the
/// matrix of the broken DG (semi)norm.
inline SparseMatrix sipg(const DgSpace& s, double sigma_int, double sigma_bdy, double h, bool boundary,
                         bool consistency) {
  const Mesh& mesh = s.mesh();
  std::vector<Triplet> t;
  for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
    const VolumeData v = volume_data(s, e);
    DenseMatrix K = DenseMatrix::Zero(s.n_basis(), s.n_basis());
    for (int a = 0; a < s.dim(); ++a) K += v.grad[a].transpose() * v.w.asDiagonal() * v.grad[a];
    add_component_blocks(t, s, e, e, K);
  }
  for (const InteriorFace& f : mesh.interior_faces()) {
    const std::array<FaceData, 2> fd{face_data(s, f.minus, f.axis, +1), face_data(s, f.plus, f.axis, -1)};
    const std::array<std::size_t, 2> el{f.minus, f.plus};
    const auto W = fd[0].w.asDiagonal();
    for (int si = 0; si < 2; ++si)
      for (int ti = 0; ti < 2; ++ti) {
        const double es = jump_sign[si], et = jump_sign[ti];
        DenseMatrix K = (sigma_int / h) * es * et * (fd[si].phi->transpose() * W * (*fd[ti].phi));
        if (consistency) {
          K -= 0.5 * es * (fd[si].phi->transpose() * W * fd[ti].dn);
          K -= 0.5 * et * (fd[si].dn.transpose() * W * (*fd[ti].phi));
        }
        add_component_blocks(t, s, el[si], el[ti], K);
      }
  }
  if (boundary) {
    for (const BoundaryFace& f : mesh.boundary_faces()) {
      const FaceData fd = face_data(s, f.element, f.axis, f.side);
      const DenseMatrix dn = f.side * fd.dn;
      const auto W = fd.w.asDiagonal();
      DenseMatrix K = (sigma_bdy / h) * (fd.phi->transpose() * W * (*fd.phi));
      if (consistency) {
        K -= fd.phi->transpose() * W * dn;
        K -= dn.transpose() * W * (*fd.phi);
      }
      add_component_blocks(t, s, f.element, f.element, K);
    }
  }
  return from_triplets(s.size(), s.size(), t);
}

}  // namespace detail

/// Block-diagonal mass matrix (all components).
inline SparseMatrix assemble_mass(const DgSpace& s) {
  std::vector<Triplet> t;
  for (std::size_t e = 0; e < s.mesh().n_elements(); ++e) {
    const detail::VolumeData v = detail::volume_data(s, e);
    const DenseMatrix M = v.phi->transpose() * v.w.asDiagonal() * (*v.phi);
    detail::add_component_blocks(t, s, e, e, M);
  }
  return detail::from_triplets(s.size(), s.size(), t);
}

/// SIPG Laplacian on interior faces only (natural Neumann boundary).
inline SparseMatrix assemble_a_diff(const DgSpace& s, double penalty, double h) {
  if (s.n_components() != 1) throw std::invalid_argument("assemble_a_diff: scalar space required");
  return detail::sipg(s, penalty, 0.0, h, false, true);
}

/// Vector SIPG Laplacian over interior and boundary faces (u = 0 weakly).
inline SparseMatrix assemble_a_D(const DgSpace& vs, double sigma_int, double sigma_bdy, double h) {
  return detail::sipg(vs, sigma_int, sigma_bdy, h, true, true);
}

/// Matrix of |w|_DG^2 (scalar, interior jumps) or ||v||_DG^2 (with boundary).
inline SparseMatrix assemble_dg_norm(const DgSpace& s, double sigma_int, double sigma_bdy, double h,
                                     bool include_boundary) {
  return detail::sipg(s, sigma_int, sigma_bdy, h, include_boundary, false);
}

/// b_P(theta, q) = sum_E (q, div theta)_E - sum_{interior+boundary} <{q}, [theta.n]>.
/// Rows are q dofs, columns theta dofs.
inline SparseMatrix assemble_b_P(const DgSpace& vs, const DgSpace& ps) {
  detail::require_same_quadrature(vs, ps);
  const Mesh& mesh = vs.mesh();
  std::vector<Triplet> t;
  for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
    const auto v = detail::volume_data(vs, e);
    const auto q = detail::volume_data(ps, e);
    for (int c = 0; c < vs.dim(); ++c)
      detail::add_block(t, ps.block_start(e), vs.block_start(e, c), q.phi->transpose() * v.w.asDiagonal() * v.grad[c]);
  }
  for (const InteriorFace& f : mesh.interior_faces()) {
    const std::array<std::size_t, 2> el{f.minus, f.plus};
    const std::array<int, 2> side{+1, -1};
    for (int si = 0; si < 2; ++si)
      for (int ti = 0; ti < 2; ++ti) {
        const auto qf = detail::face_data(ps, el[si], f.axis, side[si]);
        const auto vf = detail::face_data(vs, el[ti], f.axis, side[ti]);
        const DenseMatrix K = -0.5 * detail::jump_sign[ti] * (qf.phi->transpose() * qf.w.asDiagonal() * (*vf.phi));
        detail::add_block(t, ps.block_start(el[si]), vs.block_start(el[ti], f.axis), K);
      }
  }
  for (const BoundaryFace& f : mesh.boundary_faces()) {
    const auto qf = detail::face_data(ps, f.element, f.axis, f.side);
    const auto vf = detail::face_data(vs, f.element, f.axis, f.side);
    const DenseMatrix K = -static_cast<double>(f.side) * (qf.phi->transpose() * qf.w.asDiagonal() * (*vf.phi));
    detail::add_block(t, ps.block_start(f.element), vs.block_start(f.element, f.axis), K);
  }
  return detail::from_triplets(ps.size(), vs.size(), t);
}

/// Integrated-by-parts form of b_P:
/// -sum_E (theta, grad q)_E + sum_{interior} <{theta.n}, [q]>.
inline SparseMatrix assemble_b_P_integrated(const DgSpace& vs, const DgSpace& ps) {
  detail::require_same_quadrature(vs, ps);
  const Mesh& mesh = vs.mesh();
  std::vector<Triplet> t;
  for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
    const auto v = detail::volume_data(vs, e);
    const auto q = detail::volume_data(ps, e);
    for (int c = 0; c < vs.dim(); ++c)
      detail::add_block(t, ps.block_start(e), vs.block_start(e, c),
                        -(q.grad[c].transpose() * v.w.asDiagonal() * (*v.phi)));
  }
  for (const InteriorFace& f : mesh.interior_faces()) {
    const std::array<std::size_t, 2> el{f.minus, f.plus};
    const std::array<int, 2> side{+1, -1};
    for (int si = 0; si < 2; ++si)
      for (int ti = 0; ti < 2; ++ti) {
        const auto qf = detail::face_data(ps, el[si], f.axis, side[si]);
        const auto vf = detail::face_data(vs, el[ti], f.axis, side[ti]);
        const DenseMatrix K = 0.5 * detail::jump_sign[si] * (qf.phi->transpose() * qf.w.asDiagonal() * (*vf.phi));
        detail::add_block(t, ps.block_start(el[si]), vs.block_start(el[ti], f.axis), K);
      }
  }
  return detail::from_triplets(ps.size(), vs.size(), t);
}

/// Lift operators and the pieces they are built from.
///   (R_h[theta], q) = sum_{interior+boundary} <{q}, [theta].n>   R = M_P^{-1} face_r
///   (G_h[q], theta) = sum_{interior} <{theta.n}, [q]>            G = M_V^{-1} face_g
struct LiftOperators {
  SparseMatrix R;           // pressure space x vector space
  SparseMatrix G;           // vector space x pressure space
  SparseMatrix face_r;      // face functional defining R
  SparseMatrix face_g;      // face functional defining G
  SparseMatrix divergence;  // (div_h theta, q): pressure x vector
  SparseMatrix gradient;    // (grad_h q, theta): vector x pressure
};

namespace detail {

/// Inverse of a block-diagonal mass matrix, one dense block per element and
/// component.
inline SparseMatrix inverse_block_mass(const DgSpace& s) {
  std::vector<Triplet> t;
  for (std::size_t e = 0; e < s.mesh().n_elements(); ++e) {
    const VolumeData v = volume_data(s, e);
    const DenseMatrix M = v.phi->transpose() * v.w.asDiagonal() * (*v.phi);
    const DenseMatrix Minv = M.inverse();
    add_component_blocks(t, s, e, e, Minv);
  }
  return from_triplets(s.size(), s.size(), t);
}

}  // namespace detail

inline LiftOperators assemble_lifts(const DgSpace& vs, const DgSpace& ps) {
  detail::require_same_quadrature(vs, ps);
  const Mesh& mesh = vs.mesh();
  std::vector<Triplet> tr, tg, td, tgr;
  for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
    const auto v = detail::volume_data(vs, e);
    const auto q = detail::volume_data(ps, e);
    for (int c = 0; c < vs.dim(); ++c) {
      detail::add_block(td, ps.block_start(e), vs.block_start(e, c), q.phi->transpose() * v.w.asDiagonal() * v.grad[c]);
      detail::add_block(tgr, vs.block_start(e, c), ps.block_start(e), v.phi->transpose() * v.w.asDiagonal() * q.grad[c]);
    }
  }
  for (const InteriorFace& f : mesh.interior_faces()) {
    const std::array<std::size_t, 2> el{f.minus, f.plus};
    const std::array<int, 2> side{+1, -1};
    for (int si = 0; si < 2; ++si)
      for (int ti = 0; ti < 2; ++ti) {
        const auto qs = detail::face_data(ps, el[si], f.axis, side[si]);
        const auto vt = detail::face_data(vs, el[ti], f.axis, side[ti]);
        // {q}[theta.n]: q on side si (avg), theta on side ti (jump)
        detail::add_block(tr, ps.block_start(el[si]), vs.block_start(el[ti], f.axis),
                          0.5 * detail::jump_sign[ti] * (qs.phi->transpose() * qs.w.asDiagonal() * (*vt.phi)));
        const auto vs_ = detail::face_data(vs, el[si], f.axis, side[si]);
        const auto qt = detail::face_data(ps, el[ti], f.axis, side[ti]);
        // {theta.n}[q]: theta on side si (avg), q on side ti (jump)
        detail::add_block(tg, vs.block_start(el[si], f.axis), ps.block_start(el[ti]),
                          0.5 * detail::jump_sign[ti] * (vs_.phi->transpose() * vs_.w.asDiagonal() * (*qt.phi)));
      }
  }
  for (const BoundaryFace& f : mesh.boundary_faces()) {
    const auto qf = detail::face_data(ps, f.element, f.axis, f.side);
    const auto vf = detail::face_data(vs, f.element, f.axis, f.side);
    detail::add_block(tr, ps.block_start(f.element), vs.block_start(f.element, f.axis),
                      static_cast<double>(f.side) * (qf.phi->transpose() * qf.w.asDiagonal() * (*vf.phi)));
  }
  LiftOperators out;
  out.face_r = detail::from_triplets(ps.size(), vs.size(), tr);
  out.face_g = detail::from_triplets(vs.size(), ps.size(), tg);
  out.divergence = detail::from_triplets(ps.size(), vs.size(), td);
  out.gradient = detail::from_triplets(vs.size(), ps.size(), tgr);
  out.R = detail::inverse_block_mass(ps) * out.face_r;
  out.G = detail::inverse_block_mass(vs) * out.face_g;
  return out;
}

/// Load vector (f, chi) of a scalar or vector function.
template <class F>
Vector load_vector(const DgSpace& s, const F& f) {
  Vector b = Vector::Zero(s.size());
  const auto nq = static_cast<int>(s.reference().volume_rule.size());
  for (std::size_t e = 0; e < s.mesh().n_elements(); ++e) {
    const auto v = detail::volume_data(s, e);
    DenseMatrix vals(nq, s.n_components());
    for (int q = 0; q < nq; ++q) {
      const Point x = s.volume_point(e, q);
      if constexpr (detail::returns_scalar<F>) {
        vals(q, 0) = f(x);
      } else {
        const auto fv = f(x);
        for (int c = 0; c < s.n_components(); ++c) vals(q, c) = fv[c];
      }
    }
    for (int c = 0; c < s.n_components(); ++c)
      b.segment(s.block_start(e, c), s.n_basis()) += v.phi->transpose() * v.w.cwiseProduct(vals.col(c));
  }
  return b;
}

/// Scalar boundary load sum_{boundary} <g(x, n), chi>.
inline Vector boundary_load(const DgSpace& s, const BoundaryFunction& g) {
  if (s.n_components() != 1) throw std::invalid_argument("boundary_load: scalar space required");
  Vector b = Vector::Zero(s.size());
  for (const BoundaryFace& f : s.mesh().boundary_faces()) {
    const auto fd = detail::face_data(s, f.element, f.axis, f.side);
    Vector vals(fd.w.size());
    for (Eigen::Index q = 0; q < vals.size(); ++q)
      vals[q] = g(s.face_point(f.element, fd.face, static_cast<int>(q)), f.normal);
    b.segment(s.block_start(f.element), s.n_basis()) += fd.phi->transpose() * fd.w.cwiseProduct(vals);
  }
  return b;
}

/// Right-hand side generated by taking the exterior trace of the a_D jumps
/// to be g on the boundary: sigma_bdy/h <g, theta> - <grad(theta) n, g>.
inline Vector dirichlet_rhs_a_D(const DgSpace& vs, const VectorFunction& g, double sigma_bdy, double h) {
  Vector b = Vector::Zero(vs.size());
  if (!g) return b;
  for (const BoundaryFace& f : vs.mesh().boundary_faces()) {
    const auto fd = detail::face_data(vs, f.element, f.axis, f.side);
    const auto nqf = fd.w.size();
    DenseMatrix gv(nqf, vs.dim());
    for (Eigen::Index q = 0; q < nqf; ++q) {
      const auto val = g(vs.face_point(f.element, fd.face, static_cast<int>(q)));
      for (int c = 0; c < vs.dim(); ++c) gv(q, c) = val[c];
    }
    const DenseMatrix dn = f.side * fd.dn;
    for (int c = 0; c < vs.dim(); ++c) {
      const Vector wg = fd.w.cwiseProduct(gv.col(c));
      b.segment(vs.block_start(f.element, c), vs.n_basis()) +=
          (sigma_bdy / h) * (fd.phi->transpose() * wg) - dn.transpose() * wg;
    }
  }
  return b;
}

/// The part of b_P(v, q) contributed by exterior boundary data g when the
/// boundary jump of v is taken as (v - g).n: sum_{boundary} <q, g.n>.
inline Vector dirichlet_rhs_b_P(const DgSpace& ps, const VectorFunction& g) {
  if (!g) return Vector::Zero(ps.size());
  return boundary_load(ps, [&](const Point& x, const Point& n) {
    const auto v = g(x);
    return v[0] * n[0] + v[1] * n[1] + v[2] * n[2];
  });
}

namespace detail {

/// Values of every component of a field at the volume quadrature points.
inline DenseMatrix volume_values(const DgSpace& s, const Vector& u, std::size_t e) {
  DenseMatrix out(s.reference().volume.phi.rows(), s.n_components());
  for (int c = 0; c < s.n_components(); ++c) out.col(c) = s.reference().volume.phi * local_coeffs(s, u, e, c);
  return out;
}

inline DenseMatrix face_values(const DgSpace& s, const Vector& u, std::size_t e, int face) {
  const DenseMatrix& phi = s.reference().faces[face].phi;
  DenseMatrix out(phi.rows(), s.n_components());
  for (int c = 0; c < s.n_components(); ++c) out.col(c) = phi * local_coeffs(s, u, e, c);
  return out;
}

}  // namespace detail

/// a_adv(c, v, chi) as a load vector over chi:
/// -sum_E (c v, grad chi)_E + sum_{interior} <{c}{v.n}, [chi]>.
inline Vector a_adv_load(const DgSpace& ss, const Vector& c, const DgSpace& vs, const Vector& v) {
  detail::require_same_quadrature(ss, vs);
  const Mesh& mesh = ss.mesh();
  Vector b = Vector::Zero(ss.size());
  for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
    const auto vd = detail::volume_data(ss, e);
    const Vector cq = (*vd.phi) * local_coeffs(ss, c, e);
    const DenseMatrix vq = detail::volume_values(vs, v, e);
    auto be = b.segment(ss.block_start(e), ss.n_basis());
    for (int a = 0; a < ss.dim(); ++a)
      be -= vd.grad[a].transpose() * vd.w.cwiseProduct(cq).cwiseProduct(vq.col(a));
  }
  for (const InteriorFace& f : mesh.interior_faces()) {
    const int fm = ReferenceElement::face_index(f.axis, +1), fp = ReferenceElement::face_index(f.axis, -1);
    const auto dm = detail::face_data(ss, f.minus, f.axis, +1);
    const auto dp = detail::face_data(ss, f.plus, f.axis, -1);
    const Vector cm = (*dm.phi) * local_coeffs(ss, c, f.minus);
    const Vector cp = (*dp.phi) * local_coeffs(ss, c, f.plus);
    const Vector vm = detail::face_values(vs, v, f.minus, fm).col(f.axis);
    const Vector vp = detail::face_values(vs, v, f.plus, fp).col(f.axis);
    const Vector flux = 0.25 * dm.w.cwiseProduct(cm + cp).cwiseProduct(vm + vp);
    b.segment(ss.block_start(f.minus), ss.n_basis()) += dm.phi->transpose() * flux;
    b.segment(ss.block_start(f.plus), ss.n_basis()) -= dp.phi->transpose() * flux;
  }
  return b;
}

inline double eval_a_adv(const DgSpace& ss, const Vector& c, const DgSpace& vs, const Vector& v, const Vector& chi) {
  return a_adv_load(ss, c, vs, v).dot(chi);
}

/// b_I(c, mu, theta) = a_adv(c, theta, mu) as a load vector over theta.
inline Vector b_I_load(const DgSpace& ss, const Vector& c, const Vector& mu, const DgSpace& vs) {
  detail::require_same_quadrature(ss, vs);
  const Mesh& mesh = ss.mesh();
  Vector b = Vector::Zero(vs.size());
  for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
    const auto sd = detail::volume_data(ss, e);
    const auto vd = detail::volume_data(vs, e);
    const Vector cq = (*sd.phi) * local_coeffs(ss, c, e);
    for (int a = 0; a < ss.dim(); ++a) {
      const Vector dmu = sd.grad[a] * local_coeffs(ss, mu, e);
      b.segment(vs.block_start(e, a), vs.n_basis()) -= vd.phi->transpose() * vd.w.cwiseProduct(cq).cwiseProduct(dmu);
    }
  }
  for (const InteriorFace& f : mesh.interior_faces()) {
    const auto sm = detail::face_data(ss, f.minus, f.axis, +1);
    const auto sp = detail::face_data(ss, f.plus, f.axis, -1);
    const auto vm = detail::face_data(vs, f.minus, f.axis, +1);
    const auto vp = detail::face_data(vs, f.plus, f.axis, -1);
    const Vector cavg = 0.5 * ((*sm.phi) * local_coeffs(ss, c, f.minus) + (*sp.phi) * local_coeffs(ss, c, f.plus));
    const Vector mujump = (*sm.phi) * local_coeffs(ss, mu, f.minus) - (*sp.phi) * local_coeffs(ss, mu, f.plus);
    const Vector flux = 0.5 * sm.w.cwiseProduct(cavg).cwiseProduct(mujump);
    b.segment(vs.block_start(f.minus, f.axis), vs.n_basis()) += vm.phi->transpose() * flux;
    b.segment(vs.block_start(f.plus, f.axis), vs.n_basis()) += vp.phi->transpose() * flux;
  }
  return b;
}

inline double eval_b_I(const DgSpace& ss, const Vector& c, const Vector& mu, const DgSpace& vs, const Vector& theta) {
  return eval_a_adv(ss, c, vs, theta, mu);
}

/// a_C(w, v, z, theta) as a matrix in z (rows theta) plus the right-hand side
/// produced by exterior boundary data: `g_unknown` is the exterior trace of z
/// on inflow boundary faces, `g_advecting` the exterior trace of v used in its
/// boundary normal jump. Empty functions mean zero exterior traces.
struct ConvectionSystem {
  SparseMatrix matrix;
  Vector rhs;
};

inline constexpr double inflow_tolerance = 1e-14;

inline ConvectionSystem assemble_a_C(const DgSpace& vs, const Vector& w, const Vector& v,
                                     const VectorFunction& g_unknown = {}, const VectorFunction& g_advecting = {}) {
  const Mesh& mesh = vs.mesh();
  const int d = vs.dim();
  const int nb = vs.n_basis();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(mesh.n_elements() + 2 * mesh.interior_faces().size()) * nb * nb * d);
  Vector rhs = Vector::Zero(vs.size());
  const double keep = -1.0;  // store explicit zeros: fixed sparsity pattern

  for (std::size_t e = 0; e < mesh.n_elements(); ++e) {
    const auto vd = detail::volume_data(vs, e);
    Vector divv = Vector::Zero(vd.w.size());
    DenseMatrix K = DenseMatrix::Zero(nb, nb);
    for (int a = 0; a < d; ++a) {
      const auto va = local_coeffs(vs, v, e, a);
      divv += vd.grad[a] * va;
      const Vector vq = (*vd.phi) * va;
      K += vd.phi->transpose() * vd.w.cwiseProduct(vq).asDiagonal() * vd.grad[a];
    }
    K += 0.5 * (vd.phi->transpose() * vd.w.cwiseProduct(divv).asDiagonal() * (*vd.phi));
    detail::add_component_blocks(t, vs, e, e, K, keep);
  }

  for (const InteriorFace& f : mesh.interior_faces()) {
    const auto dm = detail::face_data(vs, f.minus, f.axis, +1);
    const auto dp = detail::face_data(vs, f.plus, f.axis, -1);
    const Vector vm = (*dm.phi) * local_coeffs(vs, v, f.minus, f.axis);
    const Vector vp = (*dp.phi) * local_coeffs(vs, v, f.plus, f.axis);
    const Vector wm = (*dm.phi) * local_coeffs(vs, w, f.minus, f.axis);
    const Vector wp = (*dp.phi) * local_coeffs(vs, w, f.plus, f.axis);
    const auto nq = dm.w.size();
    Vector alpha_m(nq), alpha_p(nq);
    for (Eigen::Index q = 0; q < nq; ++q) {
      const double wn = 0.5 * (wm[q] + wp[q]);
      const double vn = std::abs(0.5 * (vm[q] + vp[q]));
      alpha_m[q] = wn < -inflow_tolerance ? vn : 0.0;  // inflow of the minus element
      alpha_p[q] = -wn < -inflow_tolerance ? vn : 0.0;  // inflow of the plus element (n_E = -n_e)
    }
    const Vector jump_term = -0.25 * (vm - vp);
    const DenseMatrix& Pm = *dm.phi;
    const DenseMatrix& Pp = *dp.phi;
    const Vector am = dm.w.cwiseProduct(alpha_m), ap = dm.w.cwiseProduct(alpha_p), jt = dm.w.cwiseProduct(jump_term);
    detail::add_component_blocks(t, vs, f.minus, f.minus, Pm.transpose() * (am + jt).asDiagonal() * Pm, keep);
    detail::add_component_blocks(t, vs, f.minus, f.plus, -(Pm.transpose() * am.asDiagonal() * Pp), keep);
    detail::add_component_blocks(t, vs, f.plus, f.plus, Pp.transpose() * (ap + jt).asDiagonal() * Pp, keep);
    detail::add_component_blocks(t, vs, f.plus, f.minus, -(Pp.transpose() * ap.asDiagonal() * Pm), keep);
  }

  for (const BoundaryFace& f : mesh.boundary_faces()) {
    const auto fd = detail::face_data(vs, f.element, f.axis, f.side);
    const Vector vn = f.side * ((*fd.phi) * local_coeffs(vs, v, f.element, f.axis));
    const Vector wn = f.side * ((*fd.phi) * local_coeffs(vs, w, f.element, f.axis));
    const auto nq = fd.w.size();
    Vector alpha(nq), jump(nq);
    DenseMatrix gz = DenseMatrix::Zero(nq, d);
    for (Eigen::Index q = 0; q < nq; ++q) {
      const Point x = vs.face_point(f.element, fd.face, static_cast<int>(q));
      alpha[q] = wn[q] < -inflow_tolerance ? std::abs(vn[q]) : 0.0;
      double gn = 0.0;
      if (g_advecting) gn = f.side * g_advecting(x)[f.axis];
      jump[q] = -0.5 * (vn[q] - gn);
      if (g_unknown && alpha[q] != 0.0) {
        const auto g = g_unknown(x);
        for (int c = 0; c < d; ++c) gz(q, c) = g[c];
      }
    }
    const DenseMatrix& P = *fd.phi;
    detail::add_component_blocks(t, vs, f.element, f.element,
                                 P.transpose() * fd.w.cwiseProduct(alpha + jump).asDiagonal() * P, keep);
    if (g_unknown)
      for (int c = 0; c < d; ++c)
        rhs.segment(vs.block_start(f.element, c), nb) +=
            P.transpose() * fd.w.cwiseProduct(alpha).cwiseProduct(gz.col(c));
  }
  return {detail::from_triplets(vs.size(), vs.size(), t), rhs};
}

/// Mass matrix weighted pointwise by weight(c) at the quadrature points. Every
/// entry of the element blocks is stored, so the pattern does not depend on c.
template <class Weight>
SparseMatrix assemble_weighted_mass(const DgSpace& s, const Vector& c, const Weight& weight) {
  std::vector<Triplet> t;
  for (std::size_t e = 0; e < s.mesh().n_elements(); ++e) {
    const auto vd = detail::volume_data(s, e);
    Vector cq = (*vd.phi) * local_coeffs(s, c, e);
    for (Eigen::Index q = 0; q < cq.size(); ++q) cq[q] = weight(cq[q]);
    detail::add_block(t, s.block_start(e), s.block_start(e),
                      vd.phi->transpose() * vd.w.cwiseProduct(cq).asDiagonal() * (*vd.phi), -1.0);
  }
  return detail::from_triplets(s.size(), s.size(), t);
}

/// Load vector (g(c), chi) for a pointwise function g of a scalar field.
template <class G>
Vector nonlinear_load(const DgSpace& s, const Vector& c, const G& g) {
  Vector b(s.size());
  for (std::size_t e = 0; e < s.mesh().n_elements(); ++e) {
    const auto vd = detail::volume_data(s, e);
    Vector cq = (*vd.phi) * local_coeffs(s, c, e);
    for (Eigen::Index q = 0; q < cq.size(); ++q) cq[q] = g(cq[q]);
    b.segment(s.block_start(e), s.n_basis()) = vd.phi->transpose() * vd.w.cwiseProduct(cq);
  }
  return b;
}

/// Integral of g(c) over the domain.
template <class G>
double integrate_pointwise(const DgSpace& s, const Vector& c, const G& g) {
  double sum = 0.0;
  for (std::size_t e = 0; e < s.mesh().n_elements(); ++e) {
    const auto vd = detail::volume_data(s, e);
    const Vector cq = (*vd.phi) * local_coeffs(s, c, e);
    for (Eigen::Index q = 0; q < cq.size(); ++q) sum += vd.w[q] * g(cq[q]);
  }
  return sum;
}

/// Elliptic projection: a_diff(P f - f, chi) = 0 for all chi and
/// (P f - f, 1) = 0. `a_diff` must be assembled on `s`.
template <class F, class GradF>
Vector elliptic_project(const DgSpace& s, const F& f, const GradF& grad_f, const SparseMatrix& a_diff) {
  if (s.n_components() != 1) throw std::invalid_argument("elliptic_project: scalar space required");
  // a_diff(f, chi) for smooth f: jumps of f vanish.
  Vector rhs = Vector::Zero(s.size());
  double mean = 0.0;
  const auto nq = static_cast<int>(s.reference().volume_rule.size());
  for (std::size_t e = 0; e < s.mesh().n_elements(); ++e) {
    const auto v = detail::volume_data(s, e);
    auto be = rhs.segment(s.block_start(e), s.n_basis());
    for (int q = 0; q < nq; ++q) {
      const Point x = s.volume_point(e, q);
      const auto g = grad_f(x);
      mean += v.w[q] * f(x);
      for (int a = 0; a < s.dim(); ++a) be += v.w[q] * g[a] * v.grad[a].row(q).transpose();
    }
  }
  for (const InteriorFace& f_ : s.mesh().interior_faces()) {
    const auto dm = detail::face_data(s, f_.minus, f_.axis, +1);
    const auto dp = detail::face_data(s, f_.plus, f_.axis, -1);
    Vector flux(dm.w.size());
    for (Eigen::Index q = 0; q < flux.size(); ++q)
      flux[q] = dm.w[q] * grad_f(s.face_point(f_.minus, dm.face, static_cast<int>(q)))[f_.axis];
    rhs.segment(s.block_start(f_.minus), s.n_basis()) -= dm.phi->transpose() * flux;
    rhs.segment(s.block_start(f_.plus), s.n_basis()) += dp.phi->transpose() * flux;
  }
  const Vector w = integral_weights(s);
  LuSolver lu(a_diff, &w);
  return lu.solve(rhs, mean);
}

/// Elliptic projection of a discrete field already in the space.
inline Vector elliptic_project(const DgSpace& s, const Vector& c0, const SparseMatrix& a_diff) {
  const Vector w = integral_weights(s);
  LuSolver lu(a_diff, &w);
  return lu.solve(a_diff * c0, w.dot(c0));
}

/// Every space and assembled constant matrix used by the scheme.
///   scalar:   M_h^k (c, mu)          vector:   X_h^k (u, v)
///   pressure: M_h^{k-1} (p, phi, S, zeta)
struct Discretization {
  std::shared_ptr<const Mesh> mesh;
  int degree = 1;
  PenaltyConfig penalties;
  double h = 0.0;  // penalty length
  DgSpace scalar;
  DgSpace vector;
  DgSpace pressure;

  SparseMatrix mass_scalar, mass_vector, mass_pressure;
  SparseMatrix inv_mass_scalar, inv_mass_vector, inv_mass_pressure;
  SparseMatrix a_diff_scalar;    // sigma_tilde_ch
  SparseMatrix a_diff_pressure;  // sigma_tilde_ellip
  SparseMatrix a_D;
  SparseMatrix b_P;              // pressure rows, vector columns
  SparseMatrix norm_scalar;      // |.|_DG^2 with sigma_tilde_ch
  SparseMatrix norm_vector;      // ||.||_DG^2 with sigma_int / sigma_bdy
  Vector weights_scalar;         // (phi_i, 1)
  Vector weights_pressure;

  Discretization(std::shared_ptr<const Mesh> m, int k, const PenaltyConfig& pen)
      : mesh(m),
        degree(k),
        penalties(pen),
        h(m->edge_length()),
        scalar(m, k, 1, default_quadrature_points(k)),
        vector(m, k, m->dim(), default_quadrature_points(k)),
        pressure(m, k - 1, 1, default_quadrature_points(k)) {
    if (k < 1) throw std::invalid_argument("Discretization: degree must be >= 1");
    pen.validate();
    mass_scalar = assemble_mass(scalar);
    mass_vector = assemble_mass(vector);
    mass_pressure = assemble_mass(pressure);
    inv_mass_scalar = detail::inverse_block_mass(scalar);
    inv_mass_vector = detail::inverse_block_mass(vector);
    inv_mass_pressure = detail::inverse_block_mass(pressure);
    a_diff_scalar = assemble_a_diff(scalar, pen.sigma_tilde_ch, h);
    a_diff_pressure = assemble_a_diff(pressure, pen.sigma_tilde_ellip, h);
    a_D = assemble_a_D(vector, pen.sigma_int, pen.sigma_bdy, h);
    b_P = assemble_b_P(vector, pressure);
    norm_scalar = assemble_dg_norm(scalar, pen.sigma_tilde_ch, 0.0, h, false);
    norm_vector = assemble_dg_norm(vector, pen.sigma_int, pen.sigma_bdy, h, true);
    weights_scalar = integral_weights(scalar);
    weights_pressure = integral_weights(pressure);
  }
};

}  // namespace chns
