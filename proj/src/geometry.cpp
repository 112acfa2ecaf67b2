#include "twistres/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "twistres/errors.hpp"

namespace twistres {

namespace {

bool segments_intersect(const std::array<double, 2>& a,
                        const std::array<double, 2>& b,
                        const std::array<double, 2>& c,
                        const std::array<double, 2>& d) {
  auto cross = [](double ox, double oy, double ax, double ay, double bx,
                  double by) {
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox);
  };
  const double d1 = cross(c[0], c[1], d[0], d[1], a[0], a[1]);
  const double d2 = cross(c[0], c[1], d[0], d[1], b[0], b[1]);
  const double d3 = cross(a[0], a[1], b[0], b[1], c[0], c[1]);
  const double d4 = cross(a[0], a[1], b[0], b[1], d[0], d[1]);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

}  // namespace

std::string to_string(DomainKind k) {
  switch (k) {
    case DomainKind::Rectangle: return "rectangle";
    case DomainKind::Disc: return "disc";
    case DomainKind::Polygon: return "polygon";
  }
  return "unknown";
}

bool Domain2D::inside(double x, double y) const {
  const double tol = 1e-12;
  switch (kind) {
    case DomainKind::Rectangle: {
      const double dx = x - center[0], dy = y - center[1];
      return std::abs(dx) < 0.5 * width - tol * width &&
             std::abs(dy) < 0.5 * height - tol * height;
    }
    case DomainKind::Disc: {
      const double dx = x - center[0], dy = y - center[1];
      return dx * dx + dy * dy < radius * radius * (1.0 - 2.0 * tol);
    }
    case DomainKind::Polygon: {
      // even-odd crossing rule
      bool in = false;
      const std::size_t n = vertices.size();
      for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto& vi = vertices[i];
        const auto& vj = vertices[j];
        if ((vi[1] > y) != (vj[1] > y)) {
          const double xc =
              vj[0] + (y - vj[1]) / (vi[1] - vj[1]) * (vi[0] - vj[0]);
          if (x < xc) in = !in;
        }
        // exclude points essentially on an edge
        const double ex = vj[0] - vi[0], ey = vj[1] - vi[1];
        const double len2 = ex * ex + ey * ey;
        const double t = std::clamp(
            ((x - vi[0]) * ex + (y - vi[1]) * ey) / len2, 0.0, 1.0);
        const double px = vi[0] + t * ex - x, py = vi[1] + t * ey - y;
        if (px * px + py * py < tol * tol * len2) return false;
      }
      return in;
    }
  }
  return false;
}

double Domain2D::area() const {
  switch (kind) {
    case DomainKind::Rectangle: return width * height;
    case DomainKind::Disc: return M_PI * radius * radius;
    case DomainKind::Polygon: {
      double a = 0.0;
      const std::size_t n = vertices.size();
      for (std::size_t i = 0, j = n - 1; i < n; j = i++)
        a += vertices[j][0] * vertices[i][1] - vertices[i][0] * vertices[j][1];
      return 0.5 * std::abs(a);
    }
  }
  return 0.0;
}

void Domain2D::bounding_box(double& xmin, double& xmax, double& ymin,
                            double& ymax) const {
  switch (kind) {
    case DomainKind::Rectangle:
      xmin = center[0] - 0.5 * width;
      xmax = center[0] + 0.5 * width;
      ymin = center[1] - 0.5 * height;
      ymax = center[1] + 0.5 * height;
      return;
    case DomainKind::Disc:
      xmin = center[0] - radius;
      xmax = center[0] + radius;
      ymin = center[1] - radius;
      ymax = center[1] + radius;
      return;
    case DomainKind::Polygon: {
      xmin = ymin = std::numeric_limits<double>::max();
      xmax = ymax = std::numeric_limits<double>::lowest();
      for (const auto& v : vertices) {
        xmin = std::min(xmin, v[0]);
        xmax = std::max(xmax, v[0]);
        ymin = std::min(ymin, v[1]);
        ymax = std::max(ymax, v[1]);
      }
      return;
    }
  }
}

Domain2D Domain2D::rectangle(double w, double h, std::array<double, 2> c) {
  if (!(w > 0.0) || !(h > 0.0))
    throw GeometryError("rectangle sides must be positive");
  Domain2D d;
  d.kind = DomainKind::Rectangle;
  d.width = w;
  d.height = h;
  d.center = c;
  return d;
}

Domain2D Domain2D::disc(double r, std::array<double, 2> c) {
  if (!(r > 0.0)) throw GeometryError("disc radius must be positive");
  Domain2D d;
  d.kind = DomainKind::Disc;
  d.radius = r;
  d.center = c;
  return d;
}

Domain2D Domain2D::polygon(std::vector<std::array<double, 2>> vertices) {
  if (vertices.size() < 3) throw GeometryError("polygon needs >= 3 vertices");
  Domain2D d;
  d.kind = DomainKind::Polygon;
  d.vertices = std::move(vertices);
  if (d.area() <= 0.0) throw GeometryError("polygon has zero area");
  const std::size_t n = d.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;  // shared vertex
      if (segments_intersect(d.vertices[i], d.vertices[(i + 1) % n],
                             d.vertices[j], d.vertices[(j + 1) % n]))
        throw GeometryError("polygon is self-intersecting");
    }
  }
  return d;
}

Grid2D build_grid(const Domain2D& domain, double h) {
  if (!(h > 0.0)) throw GeometryError("grid spacing must be positive");
  double xmin, xmax, ymin, ymax;
  domain.bounding_box(xmin, xmax, ymin, ymax);
  Grid2D g;
  g.h = h;
  g.i0 = static_cast<int>(std::floor(xmin / h)) - 1;
  g.j0 = static_cast<int>(std::floor(ymin / h)) - 1;
  const int i1 = static_cast<int>(std::ceil(xmax / h)) + 1;
  const int j1 = static_cast<int>(std::ceil(ymax / h)) + 1;
  g.ni = i1 - g.i0 + 1;
  g.nj = j1 - g.j0 + 1;
  g.node_of_cell.assign(std::size_t(g.ni) * g.nj, -1);
  for (int i = g.i0; i <= i1; ++i) {
    for (int j = g.j0; j <= j1; ++j) {
      const double x = i * h, y = j * h;
      if (domain.inside(x, y)) {
        g.node_of_cell[(i - g.i0) * g.nj + (j - g.j0)] =
            static_cast<int>(g.x.size());
        g.x.push_back(x);
        g.y.push_back(y);
        g.ix.push_back(i);
        g.iy.push_back(j);
      }
    }
  }
  if (g.x.empty())
    throw GeometryError("no interior grid nodes; spacing h too coarse");
  return g;
}

}  // namespace twistres
