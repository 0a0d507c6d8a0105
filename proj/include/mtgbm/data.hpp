#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace mtgbm {

using BinIndex = std::uint8_t;

// Raw tabular data: m rows, d real-valued features (NaN = missing) and n
// real-valued labels.
struct RawTable {
    Matrix<double> features;  // m x d
    Matrix<double> labels;    // m x n
    std::vector<std::string> feature_names;
    std::vector<std::string> task_names;

    std::size_t rows() const noexcept { return features.rows(); }
    std::size_t num_features() const noexcept { return features.cols(); }
    std::size_t num_tasks() const noexcept { return labels.cols(); }
};

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CsvDocument {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

namespace detail {

// Splits one logical record starting at `pos`; quoted fields may span lines.
inline bool next_csv_record(std::string_view text, std::size_t& pos, std::vector<std::string>& out) {
    out.clear();
    if (pos >= text.size()) return false;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    while (pos < text.size()) {
        const char c = text[pos];
        if (quoted) {
            if (c == '"') {
                if (pos + 1 < text.size() && text[pos + 1] == '"') {
                    field.push_back('"');
                    pos += 2;
                    continue;
                }
                quoted = false;
            } else {
                field.push_back(c);
            }
            ++pos;
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
            ++pos;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
            field_started = false;
            ++pos;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
            ++pos;
            break;
        } else {
            field.push_back(c);
            field_started = true;
            ++pos;
        }
    }
    out.push_back(std::move(field));
    return true;
}

inline bool needs_quotes(std::string_view s) {
    return s.find_first_of(",\"\r\n") != std::string_view::npos;
}

}  // namespace detail

inline CsvDocument parse_csv(std::string_view text) {
    if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF) text.remove_prefix(3);  // BOM
    CsvDocument doc;
    std::size_t pos = 0;
    std::vector<std::string> record;
    if (!detail::next_csv_record(text, pos, record) || (record.size() == 1 && trim(record[0]).empty()))
        fail(ErrorKind::EmptyFile, "csv has no header row");
    doc.header = record;
    for (auto& h : doc.header) h = std::string(trim(h));
    std::size_t line = 1;
    while (detail::next_csv_record(text, pos, record)) {
        ++line;
        if (record.size() == 1 && trim(record[0]).empty()) continue;  // blank line
        if (record.size() != doc.header.size())
            fail(ErrorKind::ParseError, "csv record " + std::to_string(line) + " has " +
                                            std::to_string(record.size()) + " fields, header has " +
                                            std::to_string(doc.header.size()));
        doc.rows.push_back(record);
    }
    return doc;
}

inline CsvDocument read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (trim(text).empty()) fail(ErrorKind::EmptyFile, path + " is empty");
    return parse_csv(text);
}

inline std::string csv_escape(std::string_view s) {
    if (!detail::needs_quotes(s)) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

// Parses a feature cell; the missing token, unparsable text and non-finite
// values all become NaN.
inline double parse_feature_cell(std::string_view cell, std::string_view missing_token) {
    if (trim(cell) == trim(missing_token)) return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    if (!parse_double(cell, v) || !std::isfinite(v)) return std::numeric_limits<double>::quiet_NaN();
    return v;
}

inline std::size_t column_index(const CsvDocument& doc, const std::string& name) {
    auto it = std::find(doc.header.begin(), doc.header.end(), name);
    if (it == doc.header.end()) return doc.header.size();
    return static_cast<std::size_t>(it - doc.header.begin());
}

// Builds a RawTable from a parsed document. Features are every non-label
// column in header order.
inline RawTable table_from_csv(const CsvDocument& doc, const std::vector<std::string>& label_columns,
                               const std::string& missing_token = "") {
    if (label_columns.empty()) fail(ErrorKind::InvalidArgument, "at least one label column is required");
    if (doc.rows.empty()) fail(ErrorKind::EmptyFile, "csv has a header but no data rows");
    std::vector<std::size_t> label_idx;
    for (const auto& name : label_columns) {
        const std::size_t idx = column_index(doc, name);
        if (idx == doc.header.size()) fail(ErrorKind::MissingLabelColumn, "label column '" + name + "' not in header");
        label_idx.push_back(idx);
    }
    std::vector<std::size_t> feature_idx;
    for (std::size_t c = 0; c < doc.header.size(); ++c)
        if (std::find(label_idx.begin(), label_idx.end(), c) == label_idx.end()) feature_idx.push_back(c);
    if (feature_idx.empty()) fail(ErrorKind::InvalidArgument, "csv has no feature columns");

    RawTable t;
    t.features = Matrix<double>(doc.rows.size(), feature_idx.size());
    t.labels = Matrix<double>(doc.rows.size(), label_idx.size());
    for (auto c : feature_idx) t.feature_names.push_back(doc.header[c]);
    t.task_names = label_columns;
    for (std::size_t r = 0; r < doc.rows.size(); ++r) {
        const auto& rec = doc.rows[r];
        for (std::size_t j = 0; j < feature_idx.size(); ++j)
            t.features(r, j) = parse_feature_cell(rec[feature_idx[j]], missing_token);
        for (std::size_t t_ = 0; t_ < label_idx.size(); ++t_) {
            double v = 0.0;
            if (!parse_double(rec[label_idx[t_]], v) || !std::isfinite(v))
                fail(ErrorKind::NonNumericLabel, "row " + std::to_string(r + 1) + " column '" +
                                                     label_columns[t_] + "': '" + rec[label_idx[t_]] + "'");
            t.labels(r, t_) = v;
        }
    }
    return t;
}

inline RawTable load_csv(const std::string& path, const std::vector<std::string>& label_columns,
                         const std::string& missing_token = "") {
    return table_from_csv(read_csv(path), label_columns, missing_token);
}

// Extracts the named feature columns (in the given order) from a document,
// ignoring any other columns.
inline Matrix<double> features_from_csv(const CsvDocument& doc, const std::vector<std::string>& feature_names,
                                        const std::string& missing_token = "") {
    std::vector<std::size_t> idx;
    for (const auto& name : feature_names) {
        const std::size_t c = column_index(doc, name);
        if (c == doc.header.size())
            fail(ErrorKind::FeatureCountMismatch, "feature column '" + name + "' not in header");
        idx.push_back(c);
    }
    Matrix<double> out(doc.rows.size(), idx.size());
    for (std::size_t r = 0; r < doc.rows.size(); ++r)
        for (std::size_t j = 0; j < idx.size(); ++j) out(r, j) = parse_feature_cell(doc.rows[r][idx[j]], missing_token);
    return out;
}

inline std::string table_to_csv(const RawTable& t) {
    std::string out;
    for (std::size_t j = 0; j < t.feature_names.size(); ++j) {
        if (j) out += ',';
        out += csv_escape(t.feature_names[j]);
    }
    for (const auto& name : t.task_names) {
        out += ',';
        out += csv_escape(name);
    }
    out += '\n';
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t j = 0; j < t.num_features(); ++j) {
            if (j) out += ',';
            const double v = t.features(r, j);
            if (!std::isnan(v)) out += shortest_double(v);
        }
        for (std::size_t k = 0; k < t.num_tasks(); ++k) {
            out += ',';
            out += shortest_double(t.labels(r, k));
        }
        out += '\n';
    }
    return out;
}

inline void write_csv(const RawTable& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::IoError, "cannot write " + path);
    out << table_to_csv(t);
    if (!out) fail(ErrorKind::IoError, "write failed for " + path);
}

inline RawTable take_rows(const RawTable& t, const std::vector<std::size_t>& rows) {
    RawTable out;
    out.feature_names = t.feature_names;
    out.task_names = t.task_names;
    out.features = Matrix<double>(rows.size(), t.num_features());
    out.labels = Matrix<double>(rows.size(), t.num_tasks());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::copy(t.features.row(rows[r]).begin(), t.features.row(rows[r]).end(), out.features.row(r).begin());
        std::copy(t.labels.row(rows[r]).begin(), t.labels.row(rows[r]).end(), out.labels.row(r).begin());
    }
    return out;
}

// Keeps only the given label columns, in the given order.
inline RawTable keep_tasks(const RawTable& t, const std::vector<std::size_t>& tasks) {
    RawTable out;
    out.features = t.features;
    out.feature_names = t.feature_names;
    out.labels = Matrix<double>(t.rows(), tasks.size());
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        if (tasks[k] >= t.num_tasks()) fail(ErrorKind::TaskIndexOutOfRange, "task " + std::to_string(tasks[k]));
        out.task_names.push_back(t.task_names[tasks[k]]);
        for (std::size_t r = 0; r < t.rows(); ++r) out.labels(r, k) = t.labels(r, tasks[k]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

// Replaces each selected feature value x by log10(x + 1).
inline RawTable log_transform(RawTable table, const std::set<std::size_t>& feature_indices) {
    for (auto f : feature_indices) {
        if (f >= table.num_features()) fail(ErrorKind::DimensionMismatch, "feature index " + std::to_string(f));
        for (std::size_t r = 0; r < table.rows(); ++r) {
            double& x = table.features(r, f);
            if (std::isnan(x)) continue;
            if (x < 0.0)
                fail(ErrorKind::NegativeInput, "feature '" + table.feature_names[f] + "' row " + std::to_string(r) +
                                                   " is negative");
            x = std::log10(x + 1.0);
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// Binning
// ---------------------------------------------------------------------------

// Per-feature quantile bins. Value bins are right-closed: x <= upper[b]
// lands in the first such b; anything above the last bound lands in the
// last value bin. The bin after the last value bin holds missing values.
class BinMapper {
public:
    static constexpr int kMaxBins = 255;

    BinMapper() = default;
    explicit BinMapper(std::vector<std::vector<double>> upper_bounds) : bounds_(std::move(upper_bounds)) {
        for (const auto& b : bounds_) {
            if (b.size() + 1 > static_cast<std::size_t>(kMaxBins))
                fail(ErrorKind::InvalidArgument, "too many bin boundaries");
            for (std::size_t i = 1; i < b.size(); ++i)
                if (!(b[i - 1] < b[i])) fail(ErrorKind::InvalidArgument, "bin boundaries must be strictly increasing");
        }
    }

    std::size_t num_features() const noexcept { return bounds_.size(); }
    const std::vector<double>& upper_bounds(std::size_t f) const { return bounds_[f]; }

    int value_bins(std::size_t f) const noexcept { return static_cast<int>(bounds_[f].size()) + 1; }
    BinIndex missing_bin(std::size_t f) const noexcept { return static_cast<BinIndex>(bounds_[f].size() + 1); }
    // Value bins plus the missing bin.
    int bin_count(std::size_t f) const noexcept { return value_bins(f) + 1; }

    BinIndex bin(std::size_t f, double x) const noexcept {
        if (std::isnan(x)) return missing_bin(f);
        const auto& b = bounds_[f];
        const auto it = std::lower_bound(b.begin(), b.end(), x);
        return static_cast<BinIndex>(it - b.begin());
    }

    friend bool operator==(const BinMapper&, const BinMapper&) = default;

private:
    std::vector<std::vector<double>> bounds_;
};

// Equal-frequency cut points over the non-NaN values of one column.
inline std::vector<double> quantile_bounds(std::vector<double> values, int max_bins) {
    std::erase_if(values, [](double v) { return std::isnan(v); });
    if (values.empty()) return {};
    std::sort(values.begin(), values.end());

    std::vector<double> distinct;
    std::vector<std::size_t> cumulative;  // count of values <= distinct[k]
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (distinct.empty() || values[i] != distinct.back()) {
            distinct.push_back(values[i]);
            cumulative.push_back(0);
        }
        cumulative.back() = i + 1;
    }

    std::vector<double> bounds;
    if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
        bounds.assign(distinct.begin(), distinct.end() - 1);
        return bounds;
    }
    const std::size_t total = values.size();
    const auto bins = static_cast<std::size_t>(max_bins);
    std::size_t k = 0;
    for (std::size_t j = 1; j < bins; ++j) {
        // smallest distinct value whose cumulative count reaches j/bins of the total
        while (k < distinct.size() && cumulative[k] * bins < j * total) ++k;
        if (k + 1 >= distinct.size()) break;  // the maximum never closes a bin
        if (bounds.empty() || distinct[k] > bounds.back()) bounds.push_back(distinct[k]);
    }
    return bounds;
}

inline BinMapper fit_bins(const RawTable& table, int max_bins = BinMapper::kMaxBins) {
    if (max_bins < 2 || max_bins > BinMapper::kMaxBins)
        fail(ErrorKind::InvalidArgument, "max_bins must be in [2, 255], got " + std::to_string(max_bins));
    std::vector<std::vector<double>> bounds(table.num_features());
    for (std::size_t f = 0; f < table.num_features(); ++f) bounds[f] = quantile_bounds(table.features.column(f), max_bins);
    return BinMapper(std::move(bounds));
}

// Binned training/validation data. Bins are stored feature-major so that
// histogram construction walks contiguous memory.
class Dataset {
public:
    Dataset() = default;

    std::size_t rows() const noexcept { return rows_; }
    std::size_t num_features() const noexcept { return mapper_.num_features(); }
    std::size_t num_tasks() const noexcept { return labels_.cols(); }

    BinIndex bin(std::size_t row, std::size_t feature) const noexcept { return bins_[feature * rows_ + row]; }
    std::span<const BinIndex> feature_bins(std::size_t feature) const {
        return {bins_.data() + feature * rows_, rows_};
    }

    const Matrix<double>& labels() const noexcept { return labels_; }
    const BinMapper& mapper() const noexcept { return mapper_; }
    const std::vector<std::pair<double, double>>& raw_feature_minmax() const noexcept { return minmax_; }
    const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
    const std::vector<std::string>& task_names() const noexcept { return task_names_; }

    friend Dataset apply_bins(const RawTable& table, const BinMapper& mapper);

    // Direct construction from pre-binned columns; used by tests and tools.
    static Dataset from_bins(BinMapper mapper, std::size_t rows, std::vector<BinIndex> feature_major_bins,
                             Matrix<double> labels) {
        if (feature_major_bins.size() != rows * mapper.num_features() || labels.rows() != rows)
            fail(ErrorKind::DimensionMismatch, "binned data does not match the declared shape");
        Dataset ds;
        ds.rows_ = rows;
        ds.bins_ = std::move(feature_major_bins);
        ds.labels_ = std::move(labels);
        ds.mapper_ = std::move(mapper);
        for (std::size_t f = 0; f < ds.mapper_.num_features(); ++f) {
            ds.feature_names_.push_back("f" + std::to_string(f));
            for (std::size_t r = 0; r < rows; ++r)
                if (ds.bins_[f * rows + r] >= ds.mapper_.bin_count(f))
                    fail(ErrorKind::DimensionMismatch, "bin index out of range");
        }
        for (std::size_t t = 0; t < ds.labels_.cols(); ++t) ds.task_names_.push_back("task_" + std::to_string(t));
        ds.minmax_.assign(ds.mapper_.num_features(), {std::numeric_limits<double>::quiet_NaN(),
                                                     std::numeric_limits<double>::quiet_NaN()});
        return ds;
    }

private:
    std::size_t rows_ = 0;
    std::vector<BinIndex> bins_;
    Matrix<double> labels_;
    BinMapper mapper_;
    std::vector<std::pair<double, double>> minmax_;
    std::vector<std::string> feature_names_;
    std::vector<std::string> task_names_;
};

inline Dataset apply_bins(const RawTable& table, const BinMapper& mapper) {
    if (table.num_features() != mapper.num_features())
        fail(ErrorKind::DimensionMismatch, "table has " + std::to_string(table.num_features()) +
                                               " features, mapper expects " + std::to_string(mapper.num_features()));
    Dataset ds;
    ds.rows_ = table.rows();
    ds.labels_ = table.labels;
    ds.mapper_ = mapper;
    ds.feature_names_ = table.feature_names;
    ds.task_names_ = table.task_names;
    ds.bins_.resize(table.rows() * table.num_features());
    ds.minmax_.resize(table.num_features());
    for (std::size_t f = 0; f < table.num_features(); ++f) {
        double lo = std::numeric_limits<double>::quiet_NaN();
        double hi = lo;
        for (std::size_t r = 0; r < table.rows(); ++r) {
            const double x = table.features(r, f);
            ds.bins_[f * ds.rows_ + r] = mapper.bin(f, x);
            if (!std::isnan(x)) {
                lo = std::isnan(lo) ? x : std::min(lo, x);
                hi = std::isnan(hi) ? x : std::max(hi, x);
            }
        }
        ds.minmax_[f] = {lo, hi};
    }
    return ds;
}

}  // namespace mtgbm
