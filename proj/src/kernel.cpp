#include "fracperim/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

namespace fp {

void KernelParams::validate() const {
    if (dim < 1 || dim > 3)
        throw ParameterError("KernelParams: dim must be in {1,2,3}");
    if (!(sigma > -static_cast<double>(dim) && sigma < 1.0))
        throw ParameterError("KernelParams: sigma must lie in (-dim, 1)");
    if (!(cell_size > 0.0))
        throw ParameterError("KernelParams: cell_size must be positive");
    if (near_field_radius_cells < 1)
        throw ParameterError("KernelParams: near_field_radius_cells >= 1");
    if (!(quadrature_tol > 0.0))
        throw ParameterError("KernelParams: quadrature_tol must be positive");
}

// ---- analytic renormalization constants ----

double gamma_rho(double sigma, double rho, int dim) {
    if (!(sigma > -static_cast<double>(dim) && sigma < 1.0))
        throw ParameterError("gamma: sigma out of (-dim, 1)");
    if (!(rho > 0.0))
        throw ParameterError("gamma: rho must be positive");
    const double dw = dim * unit_ball_volume(dim);
    const double lr = std::log(rho);
    if (sigma == 0.0)
        return dw * lr;
    if (lr == 0.0)
        return 0.0;
    // d*omega_d*(1 - rho^{-sigma})/sigma = d*omega_d*log(rho)*(-expm1(-t)/t)
    // with t = sigma*log(rho); expm1 keeps the small-t regime stable
    const double t = sigma * lr;
    return dw * lr * (-std::expm1(-t) / t);
}

double gamma_limit(double sigma, int dim) {
    if (sigma == 0.0)
        throw ParameterError("gamma_limit: undefined at sigma = 0");
    if (!(sigma > -static_cast<double>(dim) && sigma < 1.0))
        throw ParameterError("gamma_limit: sigma out of (-dim, 1)");
    return dim * unit_ball_volume(dim) / sigma;
}

double gamma_annulus(double sigma, double rho1, double rho2, int dim) {
    if (!(0.0 < rho1 && rho1 < rho2))
        throw ParameterError("gamma_annulus: need 0 < rho1 < rho2");
    return gamma_rho(sigma, rho2, dim) - gamma_rho(sigma, rho1, dim);
}

// ---- 1D closed forms ----

namespace {

// second antiderivative of t^{-alpha}, normalized so F2(0) = 0 for alpha < 2
double second_antiderivative(double t, double alpha) {
    if (t == 0.0)
        return 0.0;
    if (alpha == 1.0)
        return t * std::log(t) - t;
    return std::pow(t, 2.0 - alpha) / ((1.0 - alpha) * (2.0 - alpha));
}

} // namespace

double cell_pair_weight_1d(double sigma, double h, std::int64_t k) {
    const double alpha = 1.0 + sigma;
    if (k < 0)
        k = -k;
    if (k == 0) {
        if (sigma >= 0.0)
            throw DivergenceError(
                "cell_pair_weight_1d: self weight diverges for sigma >= 0");
        return 2.0 * second_antiderivative(h, alpha);
    }
    const double kk = static_cast<double>(k);
    return second_antiderivative((kk + 1.0) * h, alpha) -
           2.0 * second_antiderivative(kk * h, alpha) +
           second_antiderivative((kk - 1.0) * h, alpha);
}

// ---- d >= 2 cell-pair quadrature ----
//
// Separated pairs reduce to a single d-dim integral over the displacement
// z = y - x: the cell-pair double integral equals
//   int_{[-s,s]^d} |disp + z|^{-alpha} prod_a (s - |z_a|) dz,
// split per orthant so the hat weight is polynomial and the integrand is
// smooth. Tensor Gauss-Legendre with adaptive bisection handles it to the
// requested tolerance in a handful of levels. Touching pairs and the self
// pair are self-similar under dyadic subdivision; one renormalization step
// per contact type reduces them to separated sub-pairs.

namespace {

struct QuadContext {
    int dim;
    double alpha; // dim + sigma
    double tol;
    bool warn = false;
};

double point_kernel(const std::array<double, 3>& disp, const QuadContext& q) {
    double r2 = 0;
    for (int a = 0; a < q.dim; ++a)
        r2 += disp[static_cast<std::size_t>(a)] *
              disp[static_cast<std::size_t>(a)];
    return std::pow(r2, -0.5 * q.alpha);
}

// 10-point Gauss-Legendre on [-1,1]
constexpr int kGaussN = 10;
constexpr double kGaussX[kGaussN] = {
    -0.9739065285171717, -0.8650633666889845, -0.6794095682990244,
    -0.4333953941292472, -0.1488743389816312, 0.1488743389816312,
    0.4333953941292472,  0.6794095682990244,  0.8650633666889845,
    0.9739065285171717};
constexpr double kGaussW[kGaussN] = {
    0.0666713443086881, 0.1494513491505806, 0.2190863625159820,
    0.2692667193099963, 0.2955242247147529, 0.2955242247147529,
    0.2692667193099963, 0.2190863625159820, 0.1494513491505806,
    0.0666713443086881};

struct OrthantBox {
    std::array<double, 3> lo{0, 0, 0};
    std::array<double, 3> hi{0, 0, 0};
};

// integrand over one orthant box: kernel at disp + sgn*z times the hat
// weight prod (s - z_a), z in [lo, hi] subset of [0, s]^d
double gauss_box(const QuadContext& q, const std::array<double, 3>& disp,
                 const std::array<int, 3>& sgn, double s,
                 const OrthantBox& box) {
    const int d = q.dim;
    std::array<int, 3> idx{0, 0, 0};
    double total = 0.0;
    while (true) {
        double wq = 1.0;
        std::array<double, 3> p = disp;
        for (int a = 0; a < d; ++a) {
            const auto u = static_cast<std::size_t>(a);
            const double half = 0.5 * (box.hi[u] - box.lo[u]);
            const double mid = 0.5 * (box.hi[u] + box.lo[u]);
            const double z = mid + half * kGaussX[idx[u]];
            wq *= half * kGaussW[idx[u]] * (s - z);
            p[u] += sgn[u] * z;
        }
        total += wq * point_kernel(p, q);
        int a = 0;
        for (; a < d; ++a) {
            const auto u = static_cast<std::size_t>(a);
            if (++idx[u] < kGaussN)
                break;
            idx[u] = 0;
        }
        if (a == d)
            break;
    }
    return total;
}

double adaptive_box(QuadContext& q, const std::array<double, 3>& disp,
                    const std::array<int, 3>& sgn, double s,
                    const OrthantBox& box, double whole, int depth) {
    double sub_total = 0.0;
    std::vector<OrthantBox> kids(std::size_t{1} << q.dim, box);
    for (std::size_t k = 0; k < kids.size(); ++k)
        for (int a = 0; a < q.dim; ++a) {
            const auto u = static_cast<std::size_t>(a);
            const double mid = 0.5 * (box.lo[u] + box.hi[u]);
            ((k >> a) & 1) ? kids[k].lo[u] = mid : kids[k].hi[u] = mid;
        }
    std::vector<double> kid_vals(kids.size());
    for (std::size_t k = 0; k < kids.size(); ++k) {
        kid_vals[k] = gauss_box(q, disp, sgn, s, kids[k]);
        sub_total += kid_vals[k];
    }
    if (std::abs(whole - sub_total) <=
        q.tol * std::max(std::abs(sub_total), 1e-300))
        return sub_total;
    if (depth >= 20) {
        q.warn = true;
        return sub_total;
    }
    double total = 0.0;
    for (std::size_t k = 0; k < kids.size(); ++k)
        total += adaptive_box(q, disp, sgn, s, kids[k], kid_vals[k],
                              depth + 1);
    return total;
}

// double integral of |x-y|^{-alpha} over two disjoint, non-touching cubic
// cells of side s whose center displacement is disp
double separated_pair(QuadContext& q, std::array<double, 3> disp, double s,
                      int /*depth*/ = 0) {
    double total = 0.0;
    const int northants = 1 << q.dim;
    for (int o = 0; o < northants; ++o) {
        std::array<int, 3> sgn{1, 1, 1};
        for (int a = 0; a < q.dim; ++a)
            if ((o >> a) & 1)
                sgn[static_cast<std::size_t>(a)] = -1;
        OrthantBox box;
        for (int a = 0; a < q.dim; ++a)
            box.hi[static_cast<std::size_t>(a)] = s;
        const double whole = gauss_box(q, disp, sgn, s, box);
        total += adaptive_box(q, disp, sgn, s, box, whole, 0);
    }
    return total;
}

// Unit-scale weights of the canonical touching configurations, indexed by
// the number z of zero offset components (z = dim-1 is full face contact,
// z = 0 corner contact). A touching pair of side s scales as s^{dim-sigma}.
std::vector<double> touching_unit_weights(QuadContext& q, double sigma) {
    std::vector<double> w1(static_cast<std::size_t>(q.dim), 0.0);
    const double sub_scale = std::pow(0.5, q.dim - sigma);
    for (int z = 0; z < q.dim; ++z) {
        std::array<double, 3> u{0, 0, 0};
        for (int a = 0; a < q.dim - z; ++a)
            u[static_cast<std::size_t>(a)] = 1.0;
        NeumaierSum other;
        const int nsub = 1 << q.dim;
        for (int i = 0; i < nsub; ++i)
            for (int j = 0; j < nsub; ++j) {
                std::array<double, 3> disp = u;
                bool touching = true;
                int zeros = 0;
                for (int a = 0; a < q.dim; ++a) {
                    const double di = (i >> a) & 1 ? 0.5 : 0.0;
                    const double dj = (j >> a) & 1 ? 0.5 : 0.0;
                    const auto s = static_cast<std::size_t>(a);
                    disp[s] += dj - di;
                    if (std::abs(disp[s]) > 0.5)
                        touching = false;
                    else if (disp[s] == 0.0)
                        ++zeros;
                }
                if (touching) {
                    if (zeros == z)
                        continue; // scaled copy of this configuration
                    other.add(sub_scale * w1[static_cast<std::size_t>(zeros)]);
                } else {
                    other.add(separated_pair(q, disp, 0.5, 0));
                }
            }
        w1[static_cast<std::size_t>(z)] =
            other.value() / (1.0 - std::pow(2.0, z - q.dim + sigma));
    }
    return w1;
}

double self_unit_weight(QuadContext& q, double sigma,
                        const std::vector<double>& w1) {
    const double sub_scale = std::pow(0.5, q.dim - sigma);
    NeumaierSum cross;
    const int nsub = 1 << q.dim;
    for (int i = 0; i < nsub; ++i)
        for (int j = 0; j < nsub; ++j) {
            if (i == j)
                continue; // scaled copy of the self pair
            int zeros = 0;
            for (int a = 0; a < q.dim; ++a)
                if (((i >> a) & 1) == ((j >> a) & 1))
                    ++zeros;
            cross.add(sub_scale * w1[static_cast<std::size_t>(zeros)]);
        }
    return cross.value() / (1.0 - std::pow(2.0, sigma));
}

} // namespace

// ---- table construction ----

KernelTable build_kernel_table(const KernelParams& params, double max_offset) {
    params.validate();
    if (!(max_offset >= params.cell_size))
        throw ParameterError("build_kernel_table: max_offset < cell_size");

    const int dim = params.dim;
    const double h = params.cell_size;
    const double sigma = params.sigma;
    const double alpha = dim + sigma;
    const double reach = max_offset + h * std::sqrt(static_cast<double>(dim));
    const auto bound = static_cast<std::int64_t>(std::floor(reach / h));

    QuadContext q{dim, alpha, params.quadrature_tol};
    std::vector<double> w1;
    double wself = 0.0;
    if (dim >= 2) {
        w1 = touching_unit_weights(q, sigma);
        if (sigma < 0.0)
            wself = self_unit_weight(q, sigma, w1);
    }

    // orbit representative -> integrated near-field weight
    std::map<std::array<std::int64_t, 3>, double> near_cache;
    const auto near_weight = [&](std::array<std::int64_t, 3> rep) {
        if (auto it = near_cache.find(rep); it != near_cache.end())
            return it->second;
        double w = 0.0;
        if (dim == 1) {
            w = cell_pair_weight_1d(sigma, h, rep[0]);
        } else {
            std::int64_t maxc = 0;
            int zeros = 0;
            for (int a = 0; a < dim; ++a) {
                maxc = std::max(maxc, rep[static_cast<std::size_t>(a)]);
                if (rep[static_cast<std::size_t>(a)] == 0)
                    ++zeros;
            }
            if (maxc == 0) {
                w = std::pow(h, dim - sigma) * wself;
            } else if (maxc == 1) {
                w = std::pow(h, dim - sigma) *
                    w1[static_cast<std::size_t>(zeros)];
            } else {
                std::array<double, 3> disp{0, 0, 0};
                for (int a = 0; a < dim; ++a)
                    disp[static_cast<std::size_t>(a)] =
                        static_cast<double>(rep[static_cast<std::size_t>(a)]) *
                        h;
                w = separated_pair(q, disp, h, 0);
            }
        }
        near_cache.emplace(rep, w);
        return w;
    };

    std::vector<KernelEntry> entries;
    const std::int64_t by = dim >= 2 ? bound : 0;
    const std::int64_t bz = dim >= 3 ? bound : 0;
    for (std::int64_t ox = -bound; ox <= bound; ++ox)
        for (std::int64_t oy = -by; oy <= by; ++oy)
            for (std::int64_t oz = -bz; oz <= bz; ++oz) {
                const double dist =
                    h * std::sqrt(static_cast<double>(ox * ox + oy * oy +
                                                      oz * oz));
                if (dist > reach)
                    continue;
                const std::int64_t cheb = std::max(
                    {std::llabs(ox), std::llabs(oy), std::llabs(oz)});
                if (cheb == 0 && sigma >= 0.0)
                    continue; // divergent self weight, never tabled
                KernelEntry e;
                e.offset = {static_cast<std::int32_t>(ox),
                            static_cast<std::int32_t>(oy),
                            static_cast<std::int32_t>(oz)};
                if (cheb <= params.near_field_radius_cells) {
                    std::array<std::int64_t, 3> rep{std::llabs(ox),
                                                    std::llabs(oy),
                                                    std::llabs(oz)};
                    std::sort(rep.begin(), rep.end(),
                              std::greater<std::int64_t>());
                    e.weight = near_weight(rep);
                    e.accuracy = WeightAccuracy::Integrated;
                } else {
                    e.weight = std::pow(h, 2.0 * dim) * std::pow(dist, -alpha);
                    e.accuracy = WeightAccuracy::Midpoint;
                }
                entries.push_back(e);
            }

    return KernelTable(params, max_offset, std::move(entries), q.warn);
}

// ---- KernelTable ----

KernelTable::KernelTable(KernelParams params, double max_offset,
                         std::vector<KernelEntry> entries,
                         bool accuracy_warning)
    : params_(params), max_offset_(max_offset),
      accuracy_warning_(accuracy_warning), entries_(std::move(entries)) {
    params_.validate();
    const double h = params_.cell_size;
    auto dist_of = [&](const KernelEntry& e) {
        return h * std::sqrt(static_cast<double>(
                       static_cast<std::int64_t>(e.offset[0]) * e.offset[0] +
                       static_cast<std::int64_t>(e.offset[1]) * e.offset[1] +
                       static_cast<std::int64_t>(e.offset[2]) * e.offset[2]));
    };
    std::sort(entries_.begin(), entries_.end(),
              [&](const KernelEntry& a, const KernelEntry& b) {
                  const double da = dist_of(a), db = dist_of(b);
                  if (da != db)
                      return da < db;
                  return a.offset < b.offset;
              });
    distances_.reserve(entries_.size());
    for (const auto& e : entries_) {
        if (!(e.weight > 0.0))
            throw ParameterError("KernelTable: weights must be positive");
        distances_.push_back(dist_of(e));
    }
    has_self_weight_ = !entries_.empty() && distances_.front() == 0.0;
}

std::pair<std::size_t, std::size_t>
KernelTable::window_range(double lo, double hi) const {
    const auto b = std::lower_bound(distances_.begin(), distances_.end(), lo);
    const auto e = std::lower_bound(b, distances_.end(), hi);
    return {static_cast<std::size_t>(b - distances_.begin()),
            static_cast<std::size_t>(e - distances_.begin())};
}

double KernelTable::weight(std::array<std::int32_t, 3> offset) const {
    if (offset == std::array<std::int32_t, 3>{0, 0, 0} &&
        params_.sigma >= 0.0)
        throw DivergenceError(
            "KernelTable: self weight diverges for sigma >= 0");
    for (const auto& e : entries_)
        if (e.offset == offset)
            return e.weight;
    throw CoverageError("KernelTable: offset not covered by table");
}

double KernelTable::window_weight_sum(double lo, double hi) const {
    const auto [b, e] = window_range(lo, hi);
    NeumaierSum s;
    for (std::size_t i = b; i < e; ++i)
        s.add(entries_[i].weight);
    return s.value();
}

std::uint64_t KernelTable::fingerprint() const {
    std::uint64_t hsh = kFnvOffsetBasis;
    hsh = fnv1a_value(params_.dim, hsh);
    hsh = fnv1a_value(params_.sigma, hsh);
    hsh = fnv1a_value(params_.cell_size, hsh);
    hsh = fnv1a_value(params_.near_field_radius_cells, hsh);
    hsh = fnv1a_value(params_.quadrature_tol, hsh);
    hsh = fnv1a_value(max_offset_, hsh);
    for (const auto& e : entries_) {
        hsh = fnv1a(e.offset.data(), sizeof(e.offset), hsh);
        hsh = fnv1a_value(e.weight, hsh);
    }
    return hsh;
}

// ---- discrete gamma ----

double discrete_gamma(const KernelTable& table, double rho) {
    if (!(rho >= 0.0))
        throw ParameterError("discrete_gamma: rho must be nonnegative");
    if (rho > table.max_offset())
        throw CoverageError("discrete_gamma: rho beyond table coverage");
    if (rho == 1.0)
        return 0.0;
    const double lo = std::min(1.0, rho);
    const double hi = std::max(1.0, rho);
    const double hd = std::pow(table.params().cell_size, table.params().dim);
    const double s = table.window_weight_sum(lo, hi) / hd;
    return rho > 1.0 ? s : -s;
}

double renorm_gamma(RenormMode mode, const KernelTable& table, double rho) {
    switch (mode) {
    case RenormMode::None:
        return 0.0;
    case RenormMode::AnalyticGamma:
        if (rho == 0.0) {
            if (table.params().sigma >= 0.0)
                throw DivergenceError(
                    "renorm: gamma at rho = 0 requires sigma < 0");
            return gamma_limit(table.params().sigma, table.params().dim);
        }
        return gamma_rho(table.params().sigma, rho, table.params().dim);
    case RenormMode::DiscreteGamma:
        return discrete_gamma(table, rho);
    }
    throw ParameterError("renorm: bad mode");
}

// ---- FPKT cache ----

namespace {

template <typename T> void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T> T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is)
        throw IoError("FPKT: unexpected end of file");
    return v;
}

} // namespace

void write_fpkt(const std::string& path, const KernelTable& table) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw IoError("cannot open for writing: " + path);
    os.write("FPKT", 4);
    put<std::uint32_t>(os, 1u);
    const auto& p = table.params();
    put<std::uint32_t>(os, static_cast<std::uint32_t>(p.dim));
    put<double>(os, p.sigma);
    put<double>(os, p.cell_size);
    put<std::uint32_t>(os,
                       static_cast<std::uint32_t>(p.near_field_radius_cells));
    put<double>(os, p.quadrature_tol);
    put<double>(os, table.max_offset());
    put<std::uint8_t>(os, table.accuracy_warning() ? 1 : 0);
    put<std::uint64_t>(os, table.entries().size());
    for (const auto& e : table.entries()) {
        for (int a = 0; a < p.dim; ++a)
            put<std::int32_t>(os, e.offset[static_cast<std::size_t>(a)]);
        put<double>(os, e.weight);
        put<std::uint8_t>(os, static_cast<std::uint8_t>(e.accuracy));
    }
    if (!os)
        throw IoError("write failed: " + path);
}

KernelTable read_fpkt(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "FPKT", 4) != 0)
        throw IoError("FPKT: bad magic");
    const auto version = get<std::uint32_t>(is);
    if (version != 1u)
        throw IoError("FPKT: unknown version " + std::to_string(version));
    KernelParams p;
    p.dim = static_cast<int>(get<std::uint32_t>(is));
    p.sigma = get<double>(is);
    p.cell_size = get<double>(is);
    p.near_field_radius_cells = static_cast<int>(get<std::uint32_t>(is));
    p.quadrature_tol = get<double>(is);
    const double max_offset = get<double>(is);
    const bool warn = get<std::uint8_t>(is) != 0;
    const auto count = get<std::uint64_t>(is);
    std::vector<KernelEntry> entries;
    entries.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        KernelEntry e;
        for (int a = 0; a < p.dim; ++a)
            e.offset[static_cast<std::size_t>(a)] = get<std::int32_t>(is);
        e.weight = get<double>(is);
        e.accuracy = static_cast<WeightAccuracy>(get<std::uint8_t>(is));
        entries.push_back(e);
    }
    return KernelTable(p, max_offset, std::move(entries), warn);
}

} // namespace fp
