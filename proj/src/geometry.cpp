#include "permafuse/geometry.hpp"
#include "permafuse/common.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace permafuse::domain {

bool Polygon::contains(const Point2& p) const {
    const std::size_t n = vertices.size();
    if (n < 3) return false;
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2& a = vertices[j];
        const Point2& b = vertices[i];
        if ((b.y > p.y) != (a.y > p.y)) {
            const double xint = b.x + (p.y - b.y) * (a.x - b.x) / (a.y - b.y);
            if (p.x < xint) inside = !inside;
        }
    }
    return inside;
}

Grid::Grid(Rect bounds, double spacing, std::vector<Point2> points,
           std::optional<Polygon> boundary)
    : bounds_(bounds), spacing_(spacing), points_(std::move(points)),
      boundary_(std::move(boundary)) {
    if (points_.empty()) throw InputError("empty grid");
}

GridPtr build_grid(const Rect& bounds, double spacing,
                   const std::optional<Polygon>& boundary) {
    if (!(spacing > 0.0)) throw InputError("grid spacing must be positive");
    if (!(bounds.xmax > bounds.xmin) || !(bounds.ymax > bounds.ymin))
        throw InputError("empty grid");

    // Absorb representation dust so that e.g. a 100 m extent at 50 m
    // spacing yields exactly 3 nodes.
    const auto count = [spacing](double lo, double hi) {
        return static_cast<std::size_t>(std::floor((hi - lo) / spacing + 1e-9)) + 1;
    };
    const std::size_t nx = count(bounds.xmin, bounds.xmax);
    const std::size_t ny = count(bounds.ymin, bounds.ymax);

    std::vector<Point2> pts;
    pts.reserve(nx * ny);
    for (std::size_t j = 0; j < ny; ++j) {
        const double y = bounds.ymin + static_cast<double>(j) * spacing;
        for (std::size_t i = 0; i < nx; ++i) {
            const double x = bounds.xmin + static_cast<double>(i) * spacing;
            const Point2 p{x, y};
            if (boundary && !boundary->contains(p)) continue;
            pts.push_back(p);
        }
    }
    if (pts.empty()) throw InputError("empty grid");
    return std::make_shared<Grid>(bounds, spacing, std::move(pts), boundary);
}

GridMap::GridMap(GridPtr grid, std::vector<double> values, MapKind kind)
    : grid_(std::move(grid)), values_(std::move(values)), kind_(kind) {
    if (!grid_) throw InputError("map requires a grid");
    if (values_.size() != grid_->size())
        throw InputError("map length does not match grid size");
    for (double v : values_)
        if (!std::isfinite(v)) throw NumericError("non-finite map value");
}

void save_grid(const Grid& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + path);
    nlohmann::json header = {
        {"xmin", grid.bounds().xmin}, {"xmax", grid.bounds().xmax},
        {"ymin", grid.bounds().ymin}, {"ymax", grid.bounds().ymax},
        {"spacing", grid.spacing()},  {"count", grid.size()},
    };
    if (grid.boundary()) {
        nlohmann::json poly = nlohmann::json::array();
        for (const Point2& v : grid.boundary()->vertices)
            poly.push_back({v.x, v.y});
        header["boundary"] = poly;
    }
    out << header.dump() << "\n";
    out << "index,x,y\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Point2& p = grid.point(i);
        out << i << ',' << fmt_double(p.x) << ',' << fmt_double(p.y) << "\n";
    }
    if (!out) throw InputError("write failed: " + path);
}

GridPtr load_grid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty grid file: " + path);
    nlohmann::json header = nlohmann::json::parse(line);
    Rect bounds{header.at("xmin").get<double>(), header.at("xmax").get<double>(),
                header.at("ymin").get<double>(), header.at("ymax").get<double>()};
    const double spacing = header.at("spacing").get<double>();
    const std::size_t count = header.at("count").get<std::size_t>();
    std::optional<Polygon> boundary;
    if (header.contains("boundary")) {
        Polygon poly;
        for (const auto& v : header["boundary"])
            poly.vertices.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
        boundary = std::move(poly);
    }

    if (!std::getline(in, line) || split_csv_line(line) !=
                                       std::vector<std::string>{"index", "x", "y"})
        throw InputError("bad grid CSV header in " + path);

    std::vector<Point2> pts;
    pts.reserve(count);
    std::size_t lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 3)
            throw InputError("malformed row at line " + std::to_string(lineno) +
                             " in " + path);
        pts.push_back({parse_double(fields[1], "x"), parse_double(fields[2], "y")});
    }
    if (pts.size() != count)
        throw InputError("grid point count mismatch in " + path + ": header says " +
                         std::to_string(count) + ", body has " +
                         std::to_string(pts.size()));
    return std::make_shared<Grid>(bounds, spacing, std::move(pts), std::move(boundary));
}

void save_map(const GridMap& map, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + path);
    out << "index,x,y,value\n";
    for (std::size_t i = 0; i < map.size(); ++i) {
        const Point2& p = map.grid().point(i);
        out << i << ',' << fmt_double(p.x) << ',' << fmt_double(p.y) << ','
            << fmt_double(map.value(i)) << "\n";
    }
    if (!out) throw InputError("write failed: " + path);
}

GridMap load_map(const std::string& path, GridPtr grid, MapKind kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) ||
        split_csv_line(line) != std::vector<std::string>{"index", "x", "y", "value"})
        throw InputError("bad map CSV header in " + path);
    std::vector<double> values;
    values.reserve(grid->size());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 4)
            throw InputError("malformed row at line " + std::to_string(lineno) +
                             " in " + path);
        const std::size_t idx = values.size();
        if (idx >= grid->size()) throw InputError("map longer than grid in " + path);
        const double x = parse_double(fields[1], "x");
        const double y = parse_double(fields[2], "y");
        if (std::abs(x - grid->point(idx).x) > 1e-9 ||
            std::abs(y - grid->point(idx).y) > 1e-9)
            throw InputError("map point " + std::to_string(idx) +
                             " does not match grid in " + path);
        values.push_back(parse_double(fields[3], "value"));
    }
    return GridMap(std::move(grid), std::move(values), kind);
}

} // namespace permafuse::domain
