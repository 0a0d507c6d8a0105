#pragma once
#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"

namespace mtgbm {

inline double rmse(std::span<const double> y, std::span<const double> p) {
    if (y.size() != p.size()) fail(ErrorKind::LengthMismatch, "rmse inputs differ in length");
    if (y.empty()) fail(ErrorKind::InvalidArgument, "rmse of an empty set");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - p[i]) * (y[i] - p[i]);
    return std::sqrt(s / static_cast<double>(y.size()));
}

inline double mape(std::span<const double> y, std::span<const double> p) {
    if (y.size() != p.size()) fail(ErrorKind::LengthMismatch, "mape inputs differ in length");
    if (y.empty()) fail(ErrorKind::InvalidArgument, "mape of an empty set");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 0.0) fail(ErrorKind::ZeroLabelInMape, "label " + std::to_string(i) + " is zero");
        s += std::abs(y[i] - p[i]) / std::abs(y[i]);
    }
    return s / static_cast<double>(y.size());
}

// Mann-Whitney AUC: probability that a random positive outranks a random
// negative, ties counting one half.
inline double roc_auc(std::span<const double> labels, std::span<const double> scores) {
    if (labels.size() != scores.size()) fail(ErrorKind::LengthMismatch, "roc_auc inputs differ in length");
    std::size_t pos = 0;
    for (double y : labels) {
        if (y != 0.0 && y != 1.0) fail(ErrorKind::InvalidArgument, "roc_auc labels must be 0 or 1");
        pos += y == 1.0;
    }
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) fail(ErrorKind::SingleClass, "roc_auc needs both classes");

    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // sum of (1-based, tie-averaged) ranks of the positives
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        std::size_t tied_pos = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            tied_pos += labels[order[j]] == 1.0;
            ++j;
        }
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        rank_sum += avg_rank * static_cast<double>(tied_pos);
        i = j;
    }
    const double p = static_cast<double>(pos);
    const double n = static_cast<double>(neg);
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

}  // namespace mtgbm
