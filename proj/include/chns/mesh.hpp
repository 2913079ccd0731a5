#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace chns {

inline constexpr int max_dim = 3;
using Point = std::array<double, max_dim>;

/// Axis-aligned box [lower, lower + extent].
struct Box {
  int dim = 2;
  Point lower{0.0, 0.0, 0.0};
  Point extent{1.0, 1.0, 1.0};

  static Box unit(int dim) { return Box{dim, {0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}}; }

  double volume() const {
    double v = 1.0;
    for (int i = 0; i < dim; ++i) v *= extent[i];
    return v;
  }
};

struct Element {
  Point lower{};
  Point size{};
};

/// A face shared by two elements. The normal points from `minus` into `plus`
/// and minus < plus.
struct InteriorFace {
  std::size_t minus = 0;
  std::size_t plus = 0;
  int axis = 0;
  Point normal{};
};

/// A face on the domain boundary; `side` is -1 for the lower and +1 for the
/// upper face of the element along `axis`. The normal is outward.
struct BoundaryFace {
  std::size_t element = 0;
  int axis = 0;
  int side = 1;
  Point normal{};
};

/// Structured mesh of axis-aligned boxes, lexicographic element numbering
/// with x fastest. Immutable after construction.
class Mesh {
 public:
  Mesh(const Box& domain, std::array<int, max_dim> cells) : domain_(domain), cells_(cells) {
    if (domain.dim != 2 && domain.dim != 3)
      throw std::invalid_argument("mesh: dimension must be 2 or 3");
    for (int i = 0; i < domain.dim; ++i) {
      if (cells[i] < 1) throw std::invalid_argument("mesh: cells per axis must be >= 1");
      if (!(domain.extent[i] > 0.0)) throw std::invalid_argument("mesh: domain extents must be positive");
    }
    for (int i = domain.dim; i < max_dim; ++i) cells_[i] = 1;
    build();
  }

  int dim() const { return domain_.dim; }
  const Box& domain() const { return domain_; }
  const std::array<int, max_dim>& cells() const { return cells_; }
  std::size_t n_elements() const { return elements_.size(); }
  const Element& element(std::size_t e) const { return elements_.at(e); }
  const std::vector<Element>& elements() const { return elements_; }
  const std::vector<InteriorFace>& interior_faces() const { return interior_; }
  const std::vector<BoundaryFace>& boundary_faces() const { return boundary_; }
  /// Maximum element diameter (the element diagonal).
  double h() const { return h_; }
  /// Smallest element edge length; the length used in penalty denominators.
  double edge_length() const { return edge_; }

  std::size_t element_index(std::array<int, max_dim> ijk) const {
    return static_cast<std::size_t>(ijk[0]) +
           static_cast<std::size_t>(cells_[0]) *
               (static_cast<std::size_t>(ijk[1]) + static_cast<std::size_t>(cells_[1]) * ijk[2]);
  }

  /// Element containing a physical point (points on shared faces go to the
  /// upper element, except on the domain's upper boundary).
  std::size_t locate(const Point& x) const {
    std::array<int, max_dim> ijk{0, 0, 0};
    for (int a = 0; a < dim(); ++a) {
      const double s = (x[a] - domain_.lower[a]) / domain_.extent[a] * cells_[a];
      int i = static_cast<int>(std::floor(s));
      if (i < 0) i = 0;
      if (i >= cells_[a]) i = cells_[a] - 1;
      ijk[a] = i;
    }
    return element_index(ijk);
  }

  /// Reference coordinates in [-1, 1]^d of physical point x in element e.
  Point to_reference(std::size_t e, const Point& x) const {
    const Element& el = elements_.at(e);
    Point xi{0.0, 0.0, 0.0};
    for (int a = 0; a < dim(); ++a) xi[a] = 2.0 * (x[a] - el.lower[a]) / el.size[a] - 1.0;
    return xi;
  }

  Point to_physical(std::size_t e, const Point& xi) const {
    const Element& el = elements_.at(e);
    Point x{0.0, 0.0, 0.0};
    for (int a = 0; a < dim(); ++a) x[a] = el.lower[a] + 0.5 * (xi[a] + 1.0) * el.size[a];
    return x;
  }

 private:
  void build() {
    const int d = dim();
    Point size{1.0, 1.0, 1.0};
    double diag2 = 0.0;
    for (int a = 0; a < d; ++a) {
      size[a] = domain_.extent[a] / cells_[a];
      diag2 += size[a] * size[a];
    }
    h_ = std::sqrt(diag2);
    edge_ = size[0];
    for (int a = 1; a < d; ++a) edge_ = std::min(edge_, size[a]);

    elements_.reserve(static_cast<std::size_t>(cells_[0]) * cells_[1] * cells_[2]);
    for (int k = 0; k < cells_[2]; ++k)
      for (int j = 0; j < cells_[1]; ++j)
        for (int i = 0; i < cells_[0]; ++i) {
          Element el;
          const std::array<int, max_dim> ijk{i, j, k};
          for (int a = 0; a < max_dim; ++a) {
            el.lower[a] = a < d ? domain_.lower[a] + ijk[a] * size[a] : 0.0;
            el.size[a] = a < d ? size[a] : 1.0;
          }
          elements_.push_back(el);
        }

    for (int k = 0; k < cells_[2]; ++k)
      for (int j = 0; j < cells_[1]; ++j)
        for (int i = 0; i < cells_[0]; ++i) {
          const std::array<int, max_dim> ijk{i, j, k};
          const std::size_t e = element_index(ijk);
          for (int a = 0; a < d; ++a) {
            Point n{0.0, 0.0, 0.0};
            n[a] = 1.0;
            if (ijk[a] + 1 < cells_[a]) {
              auto nb = ijk;
              ++nb[a];
              interior_.push_back({e, element_index(nb), a, n});
            } else {
              boundary_.push_back({e, a, +1, n});
            }
            if (ijk[a] == 0) {
              Point m{0.0, 0.0, 0.0};
              m[a] = -1.0;
              boundary_.push_back({e, a, -1, m});
            }
          }
        }
  }

  Box domain_;
  std::array<int, max_dim> cells_;
  std::vector<Element> elements_;
  std::vector<InteriorFace> interior_;
  std::vector<BoundaryFace> boundary_;
  double h_ = 0.0;
  double edge_ = 0.0;
};

inline Mesh build_structured_mesh(const Box& domain, std::array<int, max_dim> cells) {
  return Mesh(domain, cells);
}

inline Mesh build_structured_mesh(const Box& domain, int cells_per_axis) {
  return Mesh(domain, {cells_per_axis, cells_per_axis, cells_per_axis});
}

/// True iff every interior normal has unit length and points from the lower
/// to the higher element index, i.e. from the minus element's center toward
/// the plus element's center.
template <class FaceRange>
bool face_orientation_check(const Mesh& mesh, const FaceRange& faces) {
  const int d = mesh.dim();
  for (const auto& f : faces) {
    if (!(f.minus < f.plus)) return false;
    double len2 = 0.0;
    double along = 0.0;
    const Element& m = mesh.element(f.minus);
    const Element& p = mesh.element(f.plus);
    for (int a = 0; a < d; ++a) {
      len2 += f.normal[a] * f.normal[a];
      const double dc = (p.lower[a] + 0.5 * p.size[a]) - (m.lower[a] + 0.5 * m.size[a]);
      along += f.normal[a] * dc;
    }
    if (std::abs(std::sqrt(len2) - 1.0) > 1e-14) return false;
    if (!(along > 0.0)) return false;
  }
  return true;
}

inline bool face_orientation_check(const Mesh& mesh) {
  return face_orientation_check(mesh, mesh.interior_faces());
}

}  // namespace chns
