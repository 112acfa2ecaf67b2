#pragma once

#include <array>
#include <string>
#include <vector>

namespace twistres {

enum class DomainKind { Rectangle, Disc, Polygon };

std::string to_string(DomainKind k);

// Bounded cross-section in lab coordinates.  The twist axis is the lab
// origin; `center` places the shape's reference point (rectangle/disc
// center, polygon centroid untouched) relative to that axis.
struct Domain2D {
  DomainKind kind = DomainKind::Rectangle;
  double width = 1.0, height = 1.0;              // rectangle
  double radius = 1.0;                           // disc
  std::vector<std::array<double, 2>> vertices;   // polygon, lab frame
  std::array<double, 2> center{0.0, 0.0};

  bool inside(double x, double y) const;  // strict interior
  double area() const;
  // bounding box in lab coordinates
  void bounding_box(double& xmin, double& xmax, double& ymin,
                    double& ymax) const;

  static Domain2D rectangle(double w, double h,
                            std::array<double, 2> center = {0.0, 0.0});
  static Domain2D disc(double r, std::array<double, 2> center = {0.0, 0.0});
  static Domain2D polygon(std::vector<std::array<double, 2>> vertices);
};

// Uniform lattice through the origin restricted to the strict interior.
// Dirichlet condition is imposed by exclusion; quadrature weight is h^2.
struct Grid2D {
  double h = 0.0;
  int i0 = 0, j0 = 0, ni = 0, nj = 0;  // lattice window [i0, i0+ni) x ...
  std::vector<int> node_of_cell;       // ni*nj -> node id or -1
  std::vector<double> x, y;            // node coordinates
  std::vector<int> ix, iy;             // node lattice indices

  std::size_t size() const { return x.size(); }
  double quad_weight() const { return h * h; }
  int node_at(int i, int j) const {
    if (i < i0 || i >= i0 + ni || j < j0 || j >= j0 + nj) return -1;
    return node_of_cell[(i - i0) * nj + (j - j0)];
  }
};

Grid2D build_grid(const Domain2D& domain, double h);

}  // namespace twistres
