#include "fracperim/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fftw3.h>

#include "json.hpp"

namespace fp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kBlock = 1024;

void check_compat(const GridDomain& dom, const KernelTable& table) {
    if (dom.dim != table.params().dim)
        throw DomainMismatchError("energy: grid/table dimension mismatch");
    if (dom.cell_size != table.params().cell_size)
        throw DomainMismatchError("energy: grid/table cell size mismatch");
}

double set_volume(const GridDomain& dom, std::int64_t count) {
    return static_cast<double>(count) * dom.cell_volume();
}

// ---- direct engine ----

double h_raw_direct(const IndicatorGrid& E, const KernelTable& table,
                    double R_eff) {
    const auto occ = E.occupied_cells();
    const auto [wb, we] = table.window_range(0.0, R_eff);
    const auto& entries = table.entries();
    const auto& dom = E.domain;
    return parallel_reduce_blocks(
        occ.size(), kBlock, [&](std::size_t lo, std::size_t hi) {
            NeumaierSum s;
            for (std::size_t i = lo; i < hi; ++i) {
                const auto idx = dom.unflatten(occ[i]);
                for (std::size_t k = wb; k < we; ++k) {
                    const auto& e = entries[k];
                    const std::array<std::int64_t, 3> nb{
                        idx[0] + e.offset[0], idx[1] + e.offset[1],
                        idx[2] + e.offset[2]};
                    const bool inside =
                        dom.in_bounds(nb) &&
                        E.cells[static_cast<std::size_t>(dom.flat_index(nb))];
                    if (!inside)
                        s.add(e.weight);
                }
            }
            return s.value();
        });
}

double j_raw_direct(const IndicatorGrid& E, const KernelTable& table,
                    double r) {
    const auto occ = E.occupied_cells();
    const auto [wb, we] = table.window_range(r, kInf);
    const auto& entries = table.entries();
    const auto& dom = E.domain;
    return -parallel_reduce_blocks(
        occ.size(), kBlock, [&](std::size_t lo, std::size_t hi) {
            NeumaierSum s;
            for (std::size_t i = lo; i < hi; ++i) {
                const auto idx = dom.unflatten(occ[i]);
                for (std::size_t k = wb; k < we; ++k) {
                    const auto& e = entries[k];
                    const std::array<std::int64_t, 3> nb{
                        idx[0] + e.offset[0], idx[1] + e.offset[1],
                        idx[2] + e.offset[2]};
                    if (dom.in_bounds(nb) &&
                        E.cells[static_cast<std::size_t>(dom.flat_index(nb))])
                        s.add(e.weight);
                }
            }
            return s.value();
        });
}

// ---- convolution engine ----
//
// Cross-correlation of the membership array with the windowed weight array:
// c(x) = sum_o w(o) m(x+o). Axes are zero-padded to extent + 2*B so the
// circular transform reproduces the linear correlation exactly.

using WeightList = std::vector<std::pair<std::array<std::int32_t, 3>, double>>;

std::vector<double> correlate(const GridDomain& dom,
                              const std::vector<double>& field,
                              const WeightList& wlist) {
    std::array<std::int64_t, 3> B{0, 0, 0};
    for (const auto& [off, w] : wlist)
        for (int a = 0; a < 3; ++a)
            B[static_cast<std::size_t>(a)] =
                std::max(B[static_cast<std::size_t>(a)],
                         static_cast<std::int64_t>(
                             std::abs(off[static_cast<std::size_t>(a)])));
    std::array<std::int64_t, 3> L{1, 1, 1};
    for (int a = 0; a < dom.dim; ++a) {
        const auto s = static_cast<std::size_t>(a);
        L[s] = dom.extents[s] + 2 * B[s];
    }
    const std::int64_t n = L[0] * L[1] * L[2];
    const std::int64_t nc = L[0] * L[1] * (L[2] / 2 + 1);
    const auto flat_l = [&](std::int64_t i0, std::int64_t i1, std::int64_t i2) {
        return (i0 * L[1] + i1) * L[2] + i2;
    };

    double* wbuf = fftw_alloc_real(static_cast<std::size_t>(n));
    double* mbuf = fftw_alloc_real(static_cast<std::size_t>(n));
    auto* wk = fftw_alloc_complex(static_cast<std::size_t>(nc));
    auto* mk = fftw_alloc_complex(static_cast<std::size_t>(nc));
    int dims[3];
    for (int a = 0; a < dom.dim; ++a)
        dims[a] = static_cast<int>(L[static_cast<std::size_t>(a)]);
    fftw_plan pw = fftw_plan_dft_r2c(dom.dim, dims, wbuf, wk, FFTW_ESTIMATE);
    fftw_plan pm = fftw_plan_dft_r2c(dom.dim, dims, mbuf, mk, FFTW_ESTIMATE);
    fftw_plan pi = fftw_plan_dft_c2r(dom.dim, dims, mk, mbuf, FFTW_ESTIMATE);

    std::fill(wbuf, wbuf + n, 0.0);
    std::fill(mbuf, mbuf + n, 0.0);
    for (const auto& [off, w] : wlist) {
        std::array<std::int64_t, 3> j{0, 0, 0};
        for (int a = 0; a < dom.dim; ++a) {
            const auto s = static_cast<std::size_t>(a);
            j[s] = (off[s] + L[s]) % L[s];
        }
        wbuf[flat_l(j[0], j[1], j[2])] += w;
    }
    for (std::int64_t f = 0; f < dom.cell_count(); ++f) {
        if (field[static_cast<std::size_t>(f)] == 0.0)
            continue;
        const auto idx = dom.unflatten(f);
        mbuf[flat_l(idx[0] + B[0], idx[1] + B[1], idx[2] + B[2])] =
            field[static_cast<std::size_t>(f)];
    }
    fftw_execute(pw);
    fftw_execute(pm);
    for (std::int64_t k = 0; k < nc; ++k) {
        // conj(W_k) * M_k
        const double wr = wk[k][0], wi = -wk[k][1];
        const double mr = mk[k][0], mi = mk[k][1];
        mk[k][0] = wr * mr - wi * mi;
        mk[k][1] = wr * mi + wi * mr;
    }
    fftw_execute(pi);

    std::vector<double> c(static_cast<std::size_t>(dom.cell_count()), 0.0);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::int64_t f = 0; f < dom.cell_count(); ++f) {
        const auto idx = dom.unflatten(f);
        c[static_cast<std::size_t>(f)] =
            mbuf[flat_l(idx[0] + B[0], idx[1] + B[1], idx[2] + B[2])] * scale;
    }

    fftw_destroy_plan(pw);
    fftw_destroy_plan(pm);
    fftw_destroy_plan(pi);
    fftw_free(wbuf);
    fftw_free(mbuf);
    fftw_free(wk);
    fftw_free(mk);
    return c;
}

WeightList window_weights(const KernelTable& table, std::size_t wb,
                          std::size_t we) {
    WeightList wlist;
    wlist.reserve(we - wb);
    for (std::size_t k = wb; k < we; ++k)
        wlist.emplace_back(table.entries()[k].offset, table.entries()[k].weight);
    return wlist;
}

std::vector<double> membership_field(const IndicatorGrid& E) {
    std::vector<double> m(E.cells.size(), 0.0);
    for (std::size_t f = 0; f < E.cells.size(); ++f)
        m[f] = E.cells[f] ? 1.0 : 0.0;
    return m;
}

double h_raw_conv(const IndicatorGrid& E, const KernelTable& table,
                  double R_eff) {
    const auto [wb, we] = table.window_range(0.0, R_eff);
    const auto c = correlate(E.domain, membership_field(E),
                             window_weights(table, wb, we));
    const double wsum = table.window_weight_sum(0.0, R_eff);
    NeumaierSum pairin;
    for (std::size_t f = 0; f < c.size(); ++f)
        if (E.cells[f])
            pairin.add(c[f]);
    return static_cast<double>(E.occupied_count()) * wsum - pairin.value();
}

double j_raw_conv(const IndicatorGrid& E, const KernelTable& table, double r) {
    const auto [wb, we] = table.window_range(r, kInf);
    const auto c = correlate(E.domain, membership_field(E),
                             window_weights(table, wb, we));
    NeumaierSum pairin;
    for (std::size_t f = 0; f < c.size(); ++f)
        if (E.cells[f])
            pairin.add(c[f]);
    return -pairin.value();
}

double h_raw(const IndicatorGrid& E, const KernelTable& table, double R_eff,
             Engine engine) {
    return engine == Engine::Direct ? h_raw_direct(E, table, R_eff)
                                    : h_raw_conv(E, table, R_eff);
}

double j_raw(const IndicatorGrid& E, const KernelTable& table, double r,
             Engine engine) {
    return engine == Engine::Direct ? j_raw_direct(E, table, r)
                                    : j_raw_conv(E, table, r);
}

EnergyReport empty_report(const IndicatorGrid& E, const KernelTable& table,
                          const char* kind, double window, RenormMode renorm,
                          Engine engine) {
    EnergyReport rep;
    rep.sigma = table.params().sigma;
    rep.window_kind = kind;
    rep.window = window;
    rep.window_effective = 0.0;
    rep.renorm_mode = renorm;
    rep.engine = engine;
    rep.table_fingerprint = table.fingerprint();
    rep.grid_fingerprint = E.fingerprint();
    return rep;
}

} // namespace

std::string to_string(Engine e) {
    return e == Engine::Direct ? "direct" : "convolution";
}

std::string to_string(RenormMode m) {
    switch (m) {
    case RenormMode::None:
        return "none";
    case RenormMode::AnalyticGamma:
        return "analytic";
    case RenormMode::DiscreteGamma:
        return "discrete";
    }
    return "?";
}

std::string EnergyReport::to_json() const {
    nlohmann::json j;
    j["value"] = value;
    j["raw_energy"] = raw_energy;
    j["renorm_term"] = renorm_term;
    j["sigma"] = sigma;
    j["window_kind"] = window_kind;
    if (std::isinf(window))
        j["window"] = "inf";
    else
        j["window"] = window;
    j["window_effective"] = window_effective;
    j["renorm_mode"] = to_string(renorm_mode);
    j["engine"] = to_string(engine);
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(table_fingerprint));
    j["table_fingerprint"] = buf;
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(grid_fingerprint));
    j["grid_fingerprint"] = buf;
    j["coverage_warning"] = coverage_warning;
    return j.dump();
}

EnergyReport H_energy(const IndicatorGrid& E, const KernelTable& table,
                      double R, RenormMode renorm, Engine engine) {
    check_compat(E.domain, table);
    if (!(R > 0.0))
        throw ParameterError("H_energy: R must be positive");
    const double sigma = table.params().sigma;
    EnergyReport rep = empty_report(E, table, "inner", R, renorm, engine);
    if (E.occupied_count() == 0)
        return rep;

    const double h = E.domain.cell_size;
    double R_eff = R;
    if (std::isinf(R)) {
        if (renorm == RenormMode::None && !(sigma > 0.0 && sigma < 1.0))
            throw DivergenceError(
                "H_energy: R = inf without renormalization requires "
                "sigma in (0,1)");
        R_eff = diameter(E) + h;
    } else if (renorm == RenormMode::DiscreteGamma) {
        // exact window stabilization: beyond the diameter each annulus
        // contributes annulus-sum * |E| to both raw and discrete gamma terms
        R_eff = std::min(R, diameter(E) + h);
    }
    if (R_eff > table.max_offset())
        throw CoverageError("H_energy: window " + std::to_string(R_eff) +
                            " beyond table max_offset " +
                            std::to_string(table.max_offset()));
    rep.window_effective = R_eff;

    rep.raw_energy = h_raw(E, table, R_eff, engine);
    const double vol = set_volume(E.domain, E.occupied_count());
    if (std::isinf(R) && renorm == RenormMode::None) {
        // analytic tail: outside R_eff >= diam+h the complement is everything
        rep.raw_energy +=
            (gamma_limit(sigma, E.domain.dim) -
             gamma_rho(sigma, R_eff, E.domain.dim)) *
            vol;
    }
    rep.renorm_term = renorm_gamma(renorm, table, R_eff) * vol;
    rep.value = rep.raw_energy - rep.renorm_term;
    return rep;
}

EnergyReport J_energy(const IndicatorGrid& E, const KernelTable& table,
                      double r, RenormMode renorm, Engine engine) {
    check_compat(E.domain, table);
    if (!(r >= 0.0))
        throw ParameterError("J_energy: r must be nonnegative");
    const double sigma = table.params().sigma;
    const double h = E.domain.cell_size;
    if (sigma >= 0.0 && r < h)
        throw DivergenceError(
            "J_energy: sigma >= 0 requires r >= cell_size (divergent core)");
    EnergyReport rep = empty_report(E, table, "outer", r, renorm, engine);
    rep.window_effective = r;
    if (E.occupied_count() == 0)
        return rep;
    if (diameter(E) > table.max_offset())
        rep.coverage_warning = true;

    rep.raw_energy = j_raw(E, table, r, engine);
    const double vol = set_volume(E.domain, E.occupied_count());
    rep.renorm_term = renorm_gamma(renorm, table, r) * vol;
    rep.value = rep.raw_energy - rep.renorm_term;
    return rep;
}

EnergyReport H0_perimeter(const IndicatorGrid& E, const KernelTable& table,
                          Engine engine) {
    check_compat(E.domain, table);
    if (table.params().sigma != 0.0)
        throw ParameterError("H0_perimeter: table sigma must be 0");
    EnergyReport rep =
        empty_report(E, table, "inner+outer", 1.0, RenormMode::None, engine);
    rep.window_effective = 1.0;
    if (E.occupied_count() == 0)
        return rep;
    const double diam = diameter(E);
    if (table.max_offset() < diam)
        throw CoverageError(
            "H0_perimeter: table max_offset must cover the set diameter " +
            std::to_string(diam));
    rep.raw_energy = h_raw(E, table, 1.0, engine) + j_raw(E, table, 1.0, engine);
    rep.value = rep.raw_energy;
    return rep;
}

namespace {

template <typename Getter>
double potential_impl(std::array<std::int64_t, 3> x, const GridDomain& dom,
                      Getter&& target, const KernelTable& table, double r,
                      RenormMode renorm) {
    check_compat(dom, table);
    if (!(r >= 0.0))
        throw ParameterError("pointwise_potential: r must be nonnegative");
    if (table.params().sigma >= 0.0 && r < dom.cell_size)
        throw DivergenceError(
            "pointwise_potential: sigma >= 0 requires r >= cell_size");
    const auto [wb, we] = table.window_range(r, kInf);
    const auto& entries = table.entries();
    NeumaierSum s;
    for (std::size_t k = wb; k < we; ++k) {
        const auto& e = entries[k];
        const std::array<std::int64_t, 3> nb{
            x[0] + e.offset[0], x[1] + e.offset[1], x[2] + e.offset[2]};
        if (!dom.in_bounds(nb))
            continue;
        const double v = target(static_cast<std::size_t>(dom.flat_index(nb)));
        if (v != 0.0)
            s.add(e.weight * v);
    }
    return -s.value() / dom.cell_volume() - renorm_gamma(renorm, table, r);
}

} // namespace

double pointwise_potential(std::array<std::int64_t, 3> x,
                           const IndicatorGrid& target,
                           const KernelTable& table, double r,
                           RenormMode renorm) {
    return potential_impl(
        x, target.domain,
        [&](std::size_t f) { return static_cast<double>(target.cells[f]); },
        table, r, renorm);
}

double pointwise_potential(std::array<std::int64_t, 3> x,
                           const DensityGrid& target, const KernelTable& table,
                           double r, RenormMode renorm) {
    return potential_impl(
        x, target.domain, [&](std::size_t f) { return target.cells[f]; },
        table, r, renorm);
}

double modified_J(const IndicatorGrid& E, double sigma, double r) {
    if (!(r > 0.0))
        throw ParameterError("modified_J: r must be positive");
    if (!(sigma >= 0.0 && sigma < 1.0))
        throw ParameterError("modified_J: sigma must be in [0,1)");
    const auto& dom = E.domain;
    const double alpha = dom.dim + sigma;
    const double cap = std::pow(r, -alpha);
    const auto occ = E.occupied_cells();
    if (occ.empty())
        return 0.0;
    std::vector<std::array<double, 3>> centers;
    centers.reserve(occ.size());
    for (auto f : occ)
        centers.push_back(dom.cell_center(dom.unflatten(f)));
    const double pairvol = dom.cell_volume() * dom.cell_volume();
    const double total = parallel_reduce_blocks(
        occ.size(), 64, [&](std::size_t lo, std::size_t hi) {
            NeumaierSum s;
            for (std::size_t i = lo; i < hi; ++i)
                for (std::size_t j = 0; j < centers.size(); ++j) {
                    double d2 = 0.0;
                    for (int a = 0; a < dom.dim; ++a) {
                        const auto u = static_cast<std::size_t>(a);
                        const double d = centers[i][u] - centers[j][u];
                        d2 += d * d;
                    }
                    const double t = std::sqrt(d2);
                    const double k = (t >= r ? std::pow(t, -alpha) : cap) +
                                     std::max(r - t, 0.0);
                    s.add(k);
                }
            return s.value();
        });
    return -pairvol * total;
}

double riesz_interaction(const DensityGrid& eta1, const DensityGrid& eta2,
                         const KernelTable& table,
                         std::optional<double> cutoff) {
    if (!(eta1.domain == eta2.domain))
        throw DomainMismatchError("riesz_interaction: domains differ");
    check_compat(eta1.domain, table);
    const auto& dom = eta1.domain;
    const double sigma = table.params().sigma;
    if (!cutoff && sigma >= 0.0)
        throw DivergenceError(
            "riesz_interaction: sigma >= 0 requires an inner cutoff");
    if (cutoff && !(*cutoff > 0.0))
        throw ParameterError("riesz_interaction: cutoff must be positive");
    double diag2 = 0.0;
    for (int a = 0; a < dom.dim; ++a) {
        const auto u = static_cast<std::size_t>(a);
        const double s = static_cast<double>(dom.extents[u] - 1);
        diag2 += s * s;
    }
    if (dom.cell_size * std::sqrt(diag2) > table.max_offset())
        throw CoverageError(
            "riesz_interaction: table does not cover the domain diagonal");

    const double h2d = std::pow(dom.cell_volume(), 2);
    const double cap =
        cutoff ? h2d * std::pow(*cutoff, -(dom.dim + sigma)) : kInf;

    WeightList wlist;
    wlist.reserve(table.entries().size() + 1);
    if (!table.has_self_weight() && cutoff)
        wlist.emplace_back(std::array<std::int32_t, 3>{0, 0, 0}, cap);
    for (const auto& e : table.entries())
        wlist.emplace_back(e.offset, std::min(e.weight, cap));

    const auto c = correlate(dom, eta2.cells, wlist);
    NeumaierSum s;
    for (std::size_t f = 0; f < c.size(); ++f)
        if (eta1.cells[f] != 0.0)
            s.add(eta1.cells[f] * c[f]);
    return s.value();
}

} // namespace fp
