#include "fracperim/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace fp {

GridDomain::GridDomain(int d, std::array<std::int64_t, 3> ext, double h,
                       std::array<double, 3> org)
    : dim(d), extents(ext), cell_size(h), origin(org) {
    if (dim < 1 || dim > 3)
        throw ParameterError("GridDomain: dim must be in {1,2,3}");
    if (!(cell_size > 0.0))
        throw ParameterError("GridDomain: cell_size must be positive");
    for (int a = 0; a < dim; ++a)
        if (extents[static_cast<std::size_t>(a)] < 1)
            throw ParameterError("GridDomain: extents must be >= 1");
    for (int a = dim; a < 3; ++a) {
        extents[static_cast<std::size_t>(a)] = 1;
        origin[static_cast<std::size_t>(a)] = 0.0;
    }
}

std::int64_t GridDomain::cell_count() const {
    return extents[0] * extents[1] * extents[2];
}

double GridDomain::cell_volume() const { return std::pow(cell_size, dim); }

std::array<double, 3>
GridDomain::cell_center(std::array<std::int64_t, 3> idx) const {
    std::array<double, 3> c{0, 0, 0};
    for (int a = 0; a < dim; ++a)
        c[static_cast<std::size_t>(a)] =
            origin[static_cast<std::size_t>(a)] +
            (static_cast<double>(idx[static_cast<std::size_t>(a)]) + 0.5) *
                cell_size;
    return c;
}

std::int64_t GridDomain::flat_index(std::array<std::int64_t, 3> idx) const {
    return (idx[0] * extents[1] + idx[1]) * extents[2] + idx[2];
}

std::array<std::int64_t, 3> GridDomain::unflatten(std::int64_t flat) const {
    std::array<std::int64_t, 3> idx{0, 0, 0};
    idx[2] = flat % extents[2];
    flat /= extents[2];
    idx[1] = flat % extents[1];
    idx[0] = flat / extents[1];
    return idx;
}

bool GridDomain::in_bounds(std::array<std::int64_t, 3> idx) const {
    for (int a = 0; a < 3; ++a)
        if (idx[static_cast<std::size_t>(a)] < 0 ||
            idx[static_cast<std::size_t>(a)] >=
                extents[static_cast<std::size_t>(a)])
            return false;
    return true;
}

std::array<std::int64_t, 3> GridDomain::center_cell() const {
    std::array<std::int64_t, 3> c{0, 0, 0};
    for (int a = 0; a < dim; ++a)
        c[static_cast<std::size_t>(a)] =
            extents[static_cast<std::size_t>(a)] / 2;
    return c;
}

bool GridDomain::operator==(const GridDomain& o) const {
    return dim == o.dim && extents == o.extents && cell_size == o.cell_size &&
           origin == o.origin;
}

std::uint64_t GridDomain::fingerprint() const {
    std::uint64_t h = kFnvOffsetBasis;
    h = fnv1a_value(dim, h);
    h = fnv1a(extents.data(), sizeof(extents), h);
    h = fnv1a_value(cell_size, h);
    h = fnv1a(origin.data(), sizeof(origin), h);
    return h;
}

std::int64_t IndicatorGrid::occupied_count() const {
    std::int64_t n = 0;
    for (auto v : cells)
        n += v ? 1 : 0;
    return n;
}

std::vector<std::int64_t> IndicatorGrid::occupied_cells() const {
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i])
            out.push_back(static_cast<std::int64_t>(i));
    return out;
}

std::uint64_t IndicatorGrid::fingerprint() const {
    std::uint64_t h = domain.fingerprint();
    return fnv1a(cells.data(), cells.size(), h);
}

std::uint64_t DensityGrid::fingerprint() const {
    std::uint64_t h = domain.fingerprint();
    return fnv1a(cells.data(), cells.size() * sizeof(double), h);
}

// ---- shapes ----

ShapeSpec ShapeSpec::ball(std::array<double, 3> c, double r) {
    if (!(r > 0.0))
        throw ParameterError("Ball: radius must be positive");
    return ShapeSpec{BallShape{c, r}};
}

ShapeSpec ShapeSpec::box(std::array<double, 3> lo, std::array<double, 3> hi) {
    return ShapeSpec{BoxShape{lo, hi}};
}

ShapeSpec ShapeSpec::annulus(std::array<double, 3> c, double r_in,
                             double r_out) {
    if (!(r_in > 0.0) || !(r_out > r_in))
        throw ParameterError("Annulus: need 0 < inner_radius < outer_radius");
    return ShapeSpec{AnnulusShape{c, r_in, r_out}};
}

ShapeSpec ShapeSpec::unite(std::vector<ShapeSpec> parts) {
    return ShapeSpec{UnionShape{std::move(parts)}};
}

ShapeSpec ShapeSpec::intersect(std::vector<ShapeSpec> parts) {
    return ShapeSpec{IntersectionShape{std::move(parts)}};
}

ShapeSpec ShapeSpec::complement_within(ShapeSpec s, BoxShape box) {
    return ShapeSpec{ComplementWithinBox{
        std::make_shared<const ShapeSpec>(std::move(s)), box}};
}

ShapeSpec ShapeSpec::translate(ShapeSpec s, std::array<double, 3> offset) {
    return ShapeSpec{TranslatedShape{
        std::make_shared<const ShapeSpec>(std::move(s)), offset}};
}

namespace {

double dist2(std::array<double, 3> a, std::array<double, 3> b, int dim) {
    double s = 0;
    for (int i = 0; i < dim; ++i) {
        const double d = a[static_cast<std::size_t>(i)] -
                         b[static_cast<std::size_t>(i)];
        s += d * d;
    }
    return s;
}

bool box_contains(const BoxShape& b, std::array<double, 3> p, int dim) {
    for (int i = 0; i < dim; ++i) {
        const auto a = static_cast<std::size_t>(i);
        if (p[a] < b.low[a] || p[a] > b.high[a])
            return false;
    }
    return true;
}

void check_box(const BoxShape& b, int dim) {
    for (int i = 0; i < dim; ++i) {
        const auto a = static_cast<std::size_t>(i);
        if (!(b.low[a] < b.high[a]))
            throw ParameterError("Box: low must be < high componentwise");
    }
}

} // namespace

bool shape_contains(const ShapeSpec& s, std::array<double, 3> p, int dim) {
    return std::visit(
        [&](const auto& node) -> bool {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, BallShape>) {
                return dist2(p, node.center, dim) < node.radius * node.radius;
            } else if constexpr (std::is_same_v<T, BoxShape>) {
                check_box(node, dim);
                return box_contains(node, p, dim);
            } else if constexpr (std::is_same_v<T, AnnulusShape>) {
                const double d2 = dist2(p, node.center, dim);
                return d2 >= node.inner_radius * node.inner_radius &&
                       d2 < node.outer_radius * node.outer_radius;
            } else if constexpr (std::is_same_v<T, UnionShape>) {
                for (const auto& part : node.parts)
                    if (shape_contains(part, p, dim))
                        return true;
                return false;
            } else if constexpr (std::is_same_v<T, IntersectionShape>) {
                for (const auto& part : node.parts)
                    if (!shape_contains(part, p, dim))
                        return false;
                return !node.parts.empty();
            } else if constexpr (std::is_same_v<T, ComplementWithinBox>) {
                check_box(node.box, dim);
                return box_contains(node.box, p, dim) &&
                       !shape_contains(*node.shape, p, dim);
            } else {
                std::array<double, 3> q = p;
                for (int i = 0; i < dim; ++i)
                    q[static_cast<std::size_t>(i)] -=
                        node.offset[static_cast<std::size_t>(i)];
                return shape_contains(*node.shape, q, dim);
            }
        },
        s.node);
}

std::pair<std::array<double, 3>, std::array<double, 3>>
shape_bounds(const ShapeSpec& s, int dim) {
    using Bounds = std::pair<std::array<double, 3>, std::array<double, 3>>;
    return std::visit(
        [&](const auto& node) -> Bounds {
            using T = std::decay_t<decltype(node)>;
            Bounds b{{0, 0, 0}, {0, 0, 0}};
            if constexpr (std::is_same_v<T, BallShape>) {
                for (int i = 0; i < dim; ++i) {
                    const auto a = static_cast<std::size_t>(i);
                    b.first[a] = node.center[a] - node.radius;
                    b.second[a] = node.center[a] + node.radius;
                }
            } else if constexpr (std::is_same_v<T, BoxShape>) {
                check_box(node, dim);
                b = {node.low, node.high};
            } else if constexpr (std::is_same_v<T, AnnulusShape>) {
                for (int i = 0; i < dim; ++i) {
                    const auto a = static_cast<std::size_t>(i);
                    b.first[a] = node.center[a] - node.outer_radius;
                    b.second[a] = node.center[a] + node.outer_radius;
                }
            } else if constexpr (std::is_same_v<T, UnionShape> ||
                                 std::is_same_v<T, IntersectionShape>) {
                if (node.parts.empty())
                    throw ParameterError("shape: empty composite");
                b = shape_bounds(node.parts.front(), dim);
                for (std::size_t k = 1; k < node.parts.size(); ++k) {
                    const Bounds pb = shape_bounds(node.parts[k], dim);
                    for (int i = 0; i < dim; ++i) {
                        const auto a = static_cast<std::size_t>(i);
                        b.first[a] = std::min(b.first[a], pb.first[a]);
                        b.second[a] = std::max(b.second[a], pb.second[a]);
                    }
                }
            } else if constexpr (std::is_same_v<T, ComplementWithinBox>) {
                check_box(node.box, dim);
                b = {node.box.low, node.box.high};
            } else {
                b = shape_bounds(*node.shape, dim);
                for (int i = 0; i < dim; ++i) {
                    const auto a = static_cast<std::size_t>(i);
                    b.first[a] += node.offset[a];
                    b.second[a] += node.offset[a];
                }
            }
            return b;
        },
        s.node);
}

IndicatorGrid rasterize(const ShapeSpec& shape, const GridDomain& domain,
                        RasterRule rule) {
    const auto [lo, hi] = shape_bounds(shape, domain.dim);
    for (int i = 0; i < domain.dim; ++i) {
        const auto a = static_cast<std::size_t>(i);
        const double dlo = domain.origin[a];
        const double dhi =
            domain.origin[a] +
            static_cast<double>(domain.extents[a]) * domain.cell_size;
        if (lo[a] < dlo || hi[a] > dhi)
            throw OutOfDomainError(
                "rasterize: shape bounding box exceeds domain extent on axis " +
                std::to_string(i));
    }

    IndicatorGrid out(domain);
    const std::int64_t n = domain.cell_count();
    const double h = domain.cell_size;
    for (std::int64_t f = 0; f < n; ++f) {
        const auto idx = domain.unflatten(f);
        if (rule == RasterRule::CenterSample) {
            if (shape_contains(shape, domain.cell_center(idx), domain.dim))
                out.cells[static_cast<std::size_t>(f)] = 1;
        } else {
            // 3^dim subsample points at the centers of a 3-per-axis split
            int inside = 0, total = 0;
            const int nsub = domain.dim >= 3 ? 3 : 1;
            const int msub = domain.dim >= 2 ? 3 : 1;
            for (int sx = 0; sx < 3; ++sx)
                for (int sy = 0; sy < msub; ++sy)
                    for (int sz = 0; sz < nsub; ++sz) {
                        auto p = domain.cell_center(idx);
                        p[0] += (sx - 1) * h / 3.0;
                        if (domain.dim >= 2)
                            p[1] += (sy - 1) * h / 3.0;
                        if (domain.dim >= 3)
                            p[2] += (sz - 1) * h / 3.0;
                        ++total;
                        if (shape_contains(shape, p, domain.dim))
                            ++inside;
                    }
            if (2 * inside >= total)
                out.cells[static_cast<std::size_t>(f)] = 1;
        }
    }
    return out;
}

double volume(const IndicatorGrid& E) {
    return static_cast<double>(E.occupied_count()) * E.domain.cell_volume();
}

double mass(const DensityGrid& eta) {
    NeumaierSum s;
    for (double v : eta.cells)
        s.add(v);
    return s.value() * eta.domain.cell_volume();
}

double diameter(const IndicatorGrid& E) {
    const auto occ = E.occupied_cells();
    if (occ.empty())
        throw EmptySetError("diameter: set is empty");

    // the extremal center pair lies on the set boundary; filtering to
    // boundary cells keeps the pairwise scan cheap
    std::vector<std::array<double, 3>> pts;
    for (std::int64_t f : occ) {
        const auto idx = E.domain.unflatten(f);
        bool boundary = false;
        for (int a = 0; a < E.domain.dim && !boundary; ++a)
            for (int s = -1; s <= 1 && !boundary; s += 2) {
                auto nb = idx;
                nb[static_cast<std::size_t>(a)] += s;
                if (!E.domain.in_bounds(nb) ||
                    !E.cells[static_cast<std::size_t>(E.domain.flat_index(nb))])
                    boundary = true;
            }
        if (boundary)
            pts.push_back(E.domain.cell_center(idx));
    }

    double best2 = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            best2 = std::max(best2, dist2(pts[i], pts[j], E.domain.dim));
    return std::sqrt(best2) +
           E.domain.cell_size * std::sqrt(static_cast<double>(E.domain.dim));
}

std::int64_t boundary_cell_count(const IndicatorGrid& E) {
    std::int64_t count = 0;
    for (std::int64_t f : E.occupied_cells()) {
        const auto idx = E.domain.unflatten(f);
        bool boundary = false;
        for (int a = 0; a < E.domain.dim && !boundary; ++a)
            for (int s = -1; s <= 1 && !boundary; s += 2) {
                auto nb = idx;
                nb[static_cast<std::size_t>(a)] += s;
                if (!E.domain.in_bounds(nb) ||
                    !E.cells[static_cast<std::size_t>(E.domain.flat_index(nb))])
                    boundary = true;
            }
        if (boundary)
            ++count;
    }
    return count;
}

IndicatorGrid set_algebra(const IndicatorGrid& a, const IndicatorGrid& b,
                          SetOp op) {
    if (!(a.domain == b.domain))
        throw DomainMismatchError("set_algebra: grids live on different domains");
    IndicatorGrid out(a.domain);
    for (std::size_t i = 0; i < out.cells.size(); ++i) {
        const bool x = a.cells[i] != 0;
        const bool y = b.cells[i] != 0;
        bool r = false;
        switch (op) {
        case SetOp::Union: r = x || y; break;
        case SetOp::Intersection: r = x && y; break;
        case SetOp::Difference: r = x && !y; break;
        }
        out.cells[i] = r ? 1 : 0;
    }
    return out;
}

// ---- FPGR file format ----
//
// "FPGR", u32 version=1, u8 dtype (0 binary-as-u8, 1 f64), u8 ndim,
// ndim x u64 extents, f64 cell_size, ndim x f64 origin, row-major payload.

namespace {

template <typename T> void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T> T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is)
        throw IoError("FPGR/FPKT: unexpected end of file");
    return v;
}

void write_fpgr_header(std::ostream& os, const GridDomain& d,
                       std::uint8_t dtype) {
    os.write("FPGR", 4);
    put<std::uint32_t>(os, 1u);
    put<std::uint8_t>(os, dtype);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(d.dim));
    for (int a = 0; a < d.dim; ++a)
        put<std::uint64_t>(os, static_cast<std::uint64_t>(
                                   d.extents[static_cast<std::size_t>(a)]));
    put<double>(os, d.cell_size);
    for (int a = 0; a < d.dim; ++a)
        put<double>(os, d.origin[static_cast<std::size_t>(a)]);
}

GridDomain read_fpgr_header(std::istream& is, std::uint8_t& dtype) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "FPGR", 4) != 0)
        throw IoError("FPGR: bad magic");
    const auto version = get<std::uint32_t>(is);
    if (version != 1u)
        throw IoError("FPGR: unknown version " + std::to_string(version));
    dtype = get<std::uint8_t>(is);
    if (dtype > 1)
        throw IoError("FPGR: unknown dtype");
    const int dim = get<std::uint8_t>(is);
    if (dim < 1 || dim > 3)
        throw IoError("FPGR: bad ndim");
    std::array<std::int64_t, 3> ext{1, 1, 1};
    for (int a = 0; a < dim; ++a)
        ext[static_cast<std::size_t>(a)] =
            static_cast<std::int64_t>(get<std::uint64_t>(is));
    const double h = get<double>(is);
    std::array<double, 3> org{0, 0, 0};
    for (int a = 0; a < dim; ++a)
        org[static_cast<std::size_t>(a)] = get<double>(is);
    return GridDomain(dim, ext, h, org);
}

} // namespace

void write_fpgr(const std::string& path, const IndicatorGrid& g) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw IoError("cannot open for writing: " + path);
    write_fpgr_header(os, g.domain, 0);
    os.write(reinterpret_cast<const char*>(g.cells.data()),
             static_cast<std::streamsize>(g.cells.size()));
    if (!os)
        throw IoError("write failed: " + path);
}

void write_fpgr(const std::string& path, const DensityGrid& g) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw IoError("cannot open for writing: " + path);
    write_fpgr_header(os, g.domain, 1);
    os.write(reinterpret_cast<const char*>(g.cells.data()),
             static_cast<std::streamsize>(g.cells.size() * sizeof(double)));
    if (!os)
        throw IoError("write failed: " + path);
}

std::variant<IndicatorGrid, DensityGrid> read_fpgr(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError("cannot open: " + path);
    std::uint8_t dtype = 0;
    const GridDomain d = read_fpgr_header(is, dtype);
    const auto n = static_cast<std::size_t>(d.cell_count());
    if (dtype == 0) {
        IndicatorGrid g(d);
        is.read(reinterpret_cast<char*>(g.cells.data()),
                static_cast<std::streamsize>(n));
        if (!is)
            throw IoError("FPGR: truncated payload in " + path);
        return g;
    }
    DensityGrid g(d);
    is.read(reinterpret_cast<char*>(g.cells.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!is)
        throw IoError("FPGR: truncated payload in " + path);
    return g;
}

IndicatorGrid read_fpgr_indicator(const std::string& path) {
    auto v = read_fpgr(path);
    if (auto* g = std::get_if<IndicatorGrid>(&v))
        return std::move(*g);
    throw IoError("FPGR: expected binary grid in " + path);
}

DensityGrid read_fpgr_density(const std::string& path) {
    auto v = read_fpgr(path);
    if (auto* g = std::get_if<DensityGrid>(&v))
        return std::move(*g);
    throw IoError("FPGR: expected density grid in " + path);
}

} // namespace fp
