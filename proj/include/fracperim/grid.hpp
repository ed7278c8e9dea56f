#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "fracperim/util.hpp"

namespace fp {

// Regular axis-aligned lattice of cubic cells; the discretization substrate
// for every set and density in the library.
struct GridDomain {
    int dim = 1;
    std::array<std::int64_t, 3> extents{1, 1, 1}; // unused axes stay 1
    double cell_size = 1.0;
    std::array<double, 3> origin{0.0, 0.0, 0.0};

    GridDomain() = default;
    GridDomain(int d, std::array<std::int64_t, 3> ext, double h,
               std::array<double, 3> org);

    std::int64_t cell_count() const;
    double cell_volume() const;

    // physical center of cell (i0,i1,i2); unused axes must be 0
    std::array<double, 3> cell_center(std::array<std::int64_t, 3> idx) const;

    std::int64_t flat_index(std::array<std::int64_t, 3> idx) const;
    std::array<std::int64_t, 3> unflatten(std::int64_t flat) const;
    bool in_bounds(std::array<std::int64_t, 3> idx) const;

    // the cell whose low corner sits at the domain midpoint (fixed convention
    // for rearrangement centers and mass balls)
    std::array<std::int64_t, 3> center_cell() const;

    bool operator==(const GridDomain& o) const;

    std::uint64_t fingerprint() const;
};

struct IndicatorGrid {
    GridDomain domain;
    std::vector<std::uint8_t> cells; // row-major, last axis fastest

    IndicatorGrid() = default;
    explicit IndicatorGrid(const GridDomain& d)
        : domain(d),
          cells(static_cast<std::size_t>(d.cell_count()), std::uint8_t{0}) {}

    std::int64_t occupied_count() const;
    std::vector<std::int64_t> occupied_cells() const; // ascending flat indices
    std::uint64_t fingerprint() const;
};

struct DensityGrid {
    GridDomain domain;
    std::vector<double> cells; // values in [0,1]

    DensityGrid() = default;
    explicit DensityGrid(const GridDomain& d)
        : domain(d), cells(static_cast<std::size_t>(d.cell_count()), 0.0) {}

    std::uint64_t fingerprint() const;
};

// ---- analytic shape specifications ----

struct ShapeSpec;

struct BallShape {
    std::array<double, 3> center{0, 0, 0};
    double radius = 1.0;
};
struct BoxShape {
    std::array<double, 3> low{0, 0, 0};
    std::array<double, 3> high{1, 1, 1};
};
struct AnnulusShape {
    std::array<double, 3> center{0, 0, 0};
    double inner_radius = 0.5;
    double outer_radius = 1.0;
};
struct UnionShape {
    std::vector<ShapeSpec> parts;
};
struct IntersectionShape {
    std::vector<ShapeSpec> parts;
};
struct ComplementWithinBox {
    std::shared_ptr<const ShapeSpec> shape;
    BoxShape box;
};
struct TranslatedShape {
    std::shared_ptr<const ShapeSpec> shape;
    std::array<double, 3> offset{0, 0, 0};
};

struct ShapeSpec {
    std::variant<BallShape, BoxShape, AnnulusShape, UnionShape,
                 IntersectionShape, ComplementWithinBox, TranslatedShape>
        node;

    static ShapeSpec ball(std::array<double, 3> c, double r);
    static ShapeSpec box(std::array<double, 3> lo, std::array<double, 3> hi);
    static ShapeSpec annulus(std::array<double, 3> c, double r_in,
                             double r_out);
    static ShapeSpec unite(std::vector<ShapeSpec> parts);
    static ShapeSpec intersect(std::vector<ShapeSpec> parts);
    static ShapeSpec complement_within(ShapeSpec s, BoxShape box);
    static ShapeSpec translate(ShapeSpec s, std::array<double, 3> offset);
};

bool shape_contains(const ShapeSpec& s, std::array<double, 3> p, int dim);

// axis-aligned bounding box of the shape (lo, hi)
std::pair<std::array<double, 3>, std::array<double, 3>>
shape_bounds(const ShapeSpec& s, int dim);

// ---- operations ----

enum class RasterRule { CenterSample, VolumeFractionThreshold };

// errors with OutOfDomainError when the shape's bounding box does not fit in
// the domain's physical extent (never clips silently)
IndicatorGrid rasterize(const ShapeSpec& shape, const GridDomain& domain,
                        RasterRule rule = RasterRule::CenterSample);

double volume(const IndicatorGrid& E);
double mass(const DensityGrid& eta);

// certified upper bound on the diameter of the union of closed cells:
// max occupied-center distance + h*sqrt(dim); errors on the empty set
double diameter(const IndicatorGrid& E);

// occupied cells with an axis neighbor outside the set (or outside the
// domain); h^{d-1} times this count is the discrete perimeter proxy
std::int64_t boundary_cell_count(const IndicatorGrid& E);

enum class SetOp { Union, Intersection, Difference };

IndicatorGrid set_algebra(const IndicatorGrid& a, const IndicatorGrid& b,
                          SetOp op);

// ---- FPGR grid file format ----

void write_fpgr(const std::string& path, const IndicatorGrid& g);
void write_fpgr(const std::string& path, const DensityGrid& g);

// a grid file holds either dtype; reading as the wrong dtype is an IoError
std::variant<IndicatorGrid, DensityGrid> read_fpgr(const std::string& path);
IndicatorGrid read_fpgr_indicator(const std::string& path);
DensityGrid read_fpgr_density(const std::string& path);

} // namespace fp
