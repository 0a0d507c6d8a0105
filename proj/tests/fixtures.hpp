#pragma once

#include <random>
#include <vector>

#include "mtgbm/data.hpp"

namespace fixture {

// Integer-bounded mapper: feature f has bins 0..value_bins[f]-1.
inline mtgbm::BinMapper integer_mapper(const std::vector<int>& value_bins) {
    std::vector<std::vector<double>> bounds;
    for (int vb : value_bins) {
        std::vector<double> b;
        for (int k = 0; k + 1 < vb; ++k) b.push_back(k);
        bounds.push_back(b);
    }
    return mtgbm::BinMapper(bounds);
}

// columns[f][row] holds bin indices.
inline mtgbm::Dataset binned(const std::vector<std::vector<int>>& columns, const std::vector<int>& value_bins,
                             mtgbm::Matrix<double> labels = {}) {
    const std::size_t rows = columns.empty() ? 0 : columns[0].size();
    std::vector<mtgbm::BinIndex> bins;
    for (const auto& col : columns)
        for (int b : col) bins.push_back(static_cast<mtgbm::BinIndex>(b));
    if (labels.rows() != rows) labels = mtgbm::Matrix<double>(rows, 1);
    return mtgbm::Dataset::from_bins(integer_mapper(value_bins), rows, std::move(bins), std::move(labels));
}

inline mtgbm::Dataset random_binned(std::mt19937_64& rng, std::size_t rows, std::size_t features, int value_bins,
                                    std::size_t tasks = 1) {
    std::vector<std::vector<int>> cols(features, std::vector<int>(rows));
    for (auto& c : cols)
        for (auto& b : c) b = int(rng() % unsigned(value_bins));
    return binned(cols, std::vector<int>(features, value_bins), mtgbm::Matrix<double>(rows, tasks));
}

inline mtgbm::RawTable table(const mtgbm::Matrix<double>& features, const mtgbm::Matrix<double>& labels) {
    mtgbm::RawTable t;
    t.features = features;
    t.labels = labels;
    for (std::size_t f = 0; f < features.cols(); ++f) t.feature_names.push_back("x" + std::to_string(f));
    for (std::size_t k = 0; k < labels.cols(); ++k) t.task_names.push_back("y" + std::to_string(k));
    return t;
}

}  // namespace fixture
