#pragma once

#include "fracperim/energy.hpp"
#include "fracperim/grid.hpp"
#include "fracperim/kernel.hpp"

namespace fp {

// layer-cake view of a grid density: its distinct values and the strict
// superlevel sets {u > t} at each of them (nested decreasing in t)
struct LevelDecomposition {
    GridDomain domain;
    std::vector<double> thresholds; // strictly increasing distinct values
    std::vector<IndicatorGrid> superlevel_sets;
};

LevelDecomposition decompose(const DensityGrid& u);

// rebuilds the density from its decomposition, cell-for-cell exact
DensityGrid reconstruct(const LevelDecomposition& dec);

// TV under the windowed perimeter: the t-integral collapses to the finite
// sum over layers, sum_k (v_k - v_{k-1}) * H_raw({u > v_{k-1}}, R) with
// v_0 = 0. Requires u >= 0.
double tv_energy(const DensityGrid& u, const KernelTable& table, double R);

} // namespace fp
