#include "fracperim/tv.hpp"

#include <algorithm>

namespace fp {

LevelDecomposition decompose(const DensityGrid& u) {
    LevelDecomposition dec;
    dec.domain = u.domain;
    dec.thresholds = u.cells;
    std::sort(dec.thresholds.begin(), dec.thresholds.end());
    dec.thresholds.erase(
        std::unique(dec.thresholds.begin(), dec.thresholds.end()),
        dec.thresholds.end());
    dec.superlevel_sets.reserve(dec.thresholds.size());
    for (double t : dec.thresholds) {
        IndicatorGrid s(u.domain);
        for (std::size_t f = 0; f < u.cells.size(); ++f)
            s.cells[f] = u.cells[f] > t ? 1 : 0;
        dec.superlevel_sets.push_back(std::move(s));
    }
    return dec;
}

DensityGrid reconstruct(const LevelDecomposition& dec) {
    if (dec.thresholds.empty())
        throw ParameterError("reconstruct: empty decomposition");
    DensityGrid u(dec.domain);
    // every cell value is one of the thresholds: a cell sits at the largest
    // threshold whose predecessor superlevel set still contains it
    std::fill(u.cells.begin(), u.cells.end(), dec.thresholds.front());
    for (std::size_t k = 1; k < dec.thresholds.size(); ++k) {
        const auto& prev = dec.superlevel_sets[k - 1];
        for (std::size_t f = 0; f < u.cells.size(); ++f)
            if (prev.cells[f])
                u.cells[f] = dec.thresholds[k];
    }
    return u;
}

double tv_energy(const DensityGrid& u, const KernelTable& table, double R) {
    for (double v : u.cells)
        if (v < 0.0)
            throw ParameterError("tv_energy: density must be nonnegative");
    const auto dec = decompose(u);
    NeumaierSum total;
    double prev = 0.0;
    for (double v : dec.thresholds) {
        if (v <= 0.0)
            continue;
        IndicatorGrid layer(u.domain);
        for (std::size_t f = 0; f < u.cells.size(); ++f)
            layer.cells[f] = u.cells[f] > prev ? 1 : 0;
        total.add((v - prev) *
                  H_energy(layer, table, R, RenormMode::None).raw_energy);
        prev = v;
    }
    return total.value();
}

} // namespace fp
