#ifndef PERMAFUSE_GEOMETRY_HPP
#define PERMAFUSE_GEOMETRY_HPP

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace permafuse::domain {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(const Point2& a, const Point2& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

/// Simple polygon, even-odd rule. Vertices in order, implicitly closed.
struct Polygon {
    std::vector<Point2> vertices;

    bool contains(const Point2& p) const;
};

struct Rect {
    double xmin = 0.0, xmax = 0.0;
    double ymin = 0.0, ymax = 0.0;
};

/// The reservoir grid: an ordered set of 2D points in map coordinates.
/// Ordering is row-major by (y, then x) and stable across runs, so a point
/// index identifies the same location in every map built on this grid.
class Grid {
public:
    Grid(Rect bounds, double spacing, std::vector<Point2> points,
         std::optional<Polygon> boundary);

    std::size_t size() const { return points_.size(); }
    const std::vector<Point2>& points() const { return points_; }
    const Point2& point(std::size_t i) const { return points_[i]; }
    const Rect& bounds() const { return bounds_; }
    double spacing() const { return spacing_; }
    const std::optional<Polygon>& boundary() const { return boundary_; }

private:
    Rect bounds_;
    double spacing_;
    std::vector<Point2> points_;
    std::optional<Polygon> boundary_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Build a row-major lattice over `bounds` with the given spacing, clipped
/// to `boundary` when present. Throws InputError("empty grid") when the
/// bounds are degenerate or clipping removes every point.
GridPtr build_grid(const Rect& bounds, double spacing,
                   const std::optional<Polygon>& boundary = std::nullopt);

enum class MapKind { Permeability, Confidence, Difference };

/// One scalar per grid point. Permeability maps hold log10(mD); confidence
/// maps hold the fusion weight sum; difference maps hold percent.
class GridMap {
public:
    GridMap(GridPtr grid, std::vector<double> values, MapKind kind);

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double value(std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }
    MapKind kind() const { return kind_; }

private:
    GridPtr grid_;
    std::vector<double> values_;
    MapKind kind_;
};

// --- serialization ---------------------------------------------------------
// Grid file: one JSON header line (bounds, spacing, count, optional
// boundary), then a CSV body `index,x,y`.
// Map file: CSV `index,x,y,value`.

void save_grid(const Grid& grid, const std::string& path);
GridPtr load_grid(const std::string& path);

void save_map(const GridMap& map, const std::string& path);
/// Loads a map and verifies that its points match `grid` exactly.
GridMap load_map(const std::string& path, GridPtr grid, MapKind kind);

} // namespace permafuse::domain

#endif
