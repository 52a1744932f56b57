#include "banditforest/stream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace bf {

namespace {

constexpr double kTable1Q2[2][2] = {{0.5, 0.9}, {1.0 / 6.0, 1.0 / 6.0}};

// Type-7 quantile: linear interpolation between order statistics.
double quantile_type7(const std::vector<double>& sorted, double q) {
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

double parse_number(const std::string& cell) {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument("non-numeric continuous value: " + cell);
    return v;
}

std::vector<std::string> split_cells(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    const bool comma = line.find(',') != std::string::npos;
    while (comma ? static_cast<bool>(std::getline(ss, cell, ',')) : static_cast<bool>(ss >> cell)) {
        const auto b = cell.find_first_not_of(" \t\r");
        if (b == std::string::npos) cell.clear();
        else cell = cell.substr(b, cell.find_last_not_of(" \t\r") - b + 1);
        cells.push_back(cell);
    }
    return cells;
}

ContextVector bits_of(std::uint64_t code, int M) {
    ContextVector x(static_cast<std::size_t>(M));
    for (int i = 0; i < M; ++i) x[static_cast<std::size_t>(i)] = (code >> i) & 1u;
    return x;
}

}  // namespace

int BinarizationSpec::Column::width() const {
    switch (kind) {
        case ColumnKind::Continuous: return static_cast<int>(thresholds.size()) + 1;
        case ColumnKind::Categorical: return static_cast<int>(categories.size());
        case ColumnKind::Binary: return 1;
    }
    return 0;
}

int BinarizationSpec::width() const {
    int w = 0;
    for (const auto& c : columns) w += c.width();
    return w;
}

void BinarizationSpec::validate() const {
    for (const auto& c : columns) {
        if (c.kind == ColumnKind::Continuous) {
            if (!std::is_sorted(c.thresholds.begin(), c.thresholds.end()))
                throw std::invalid_argument("BinarizationSpec: thresholds not nondecreasing");
        } else if (c.kind == ColumnKind::Categorical) {
            auto sorted = c.categories;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
                throw std::invalid_argument("BinarizationSpec: duplicate categories");
        }
    }
}

BinarizationSpec BinarizationSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("BinarizationSpec::load: cannot open " + path);
    BinarizationSpec spec;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string tag, kind;
        int idx = 0;
        if (!(ss >> tag >> idx >> kind) || tag != "col")
            throw std::runtime_error("BinarizationSpec::load: bad line: " + line);
        Column col;
        if (kind == "continuous") {
            col.kind = ColumnKind::Continuous;
            double t = 0.0;
            while (ss >> t) col.thresholds.push_back(t);
        } else if (kind == "categorical") {
            col.kind = ColumnKind::Categorical;
            std::string cat;
            while (ss >> cat) col.categories.push_back(cat);
        } else if (kind == "binary") {
            col.kind = ColumnKind::Binary;
        } else {
            throw std::runtime_error("BinarizationSpec::load: unknown kind " + kind);
        }
        if (idx != static_cast<int>(spec.columns.size()))
            throw std::runtime_error("BinarizationSpec::load: out-of-order column index");
        spec.columns.push_back(std::move(col));
    }
    spec.validate();
    return spec;
}

void BinarizationSpec::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("BinarizationSpec::save: cannot open " + path);
    out.precision(17);
    for (std::size_t i = 0; i < columns.size(); ++i) {
        const auto& c = columns[i];
        out << "col " << i;
        switch (c.kind) {
            case ColumnKind::Continuous:
                out << " continuous";
                for (double t : c.thresholds) out << ' ' << t;
                break;
            case ColumnKind::Categorical:
                out << " categorical";
                for (const auto& cat : c.categories) out << ' ' << cat;
                break;
            case ColumnKind::Binary:
                out << " binary";
                break;
        }
        out << '\n';
    }
}

LabeledDataset LabeledDataset::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("LabeledDataset::load: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("LabeledDataset::load: empty file");

    LabeledDataset data;
    int label_col = -1;
    const auto header = split_cells(line);
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto& tok = header[i];
        if (tok == "label") {
            if (label_col >= 0) throw std::runtime_error("LabeledDataset::load: two label columns");
            label_col = static_cast<int>(i);
        } else if (tok == "continuous") {
            data.schema.push_back(ColumnKind::Continuous);
        } else if (tok == "categorical") {
            data.schema.push_back(ColumnKind::Categorical);
        } else if (tok == "binary") {
            data.schema.push_back(ColumnKind::Binary);
        } else {
            throw std::runtime_error("LabeledDataset::load: unknown column kind " + tok);
        }
    }
    if (label_col < 0) throw std::runtime_error("LabeledDataset::load: no label column");

    std::map<std::string, int> vocab;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cells = split_cells(line);
        if (cells.size() != header.size())
            throw std::runtime_error("LabeledDataset::load: row width mismatch");
        const std::string label = cells[static_cast<std::size_t>(label_col)];
        cells.erase(cells.begin() + label_col);
        auto [it, fresh] = vocab.emplace(label, static_cast<int>(data.label_names.size()));
        if (fresh) data.label_names.push_back(label);
        data.labels.push_back(it->second);
        data.rows.push_back(std::move(cells));
    }
    if (data.rows.empty()) throw std::runtime_error("LabeledDataset::load: no data rows");
    return data;
}

BinarizationSpec fit_binarization(const LabeledDataset& data) {
    if (data.rows.size() < 5) throw std::invalid_argument("fit_binarization: need >= 5 rows");
    BinarizationSpec spec;
    for (std::size_t c = 0; c < data.schema.size(); ++c) {
        BinarizationSpec::Column col;
        col.kind = data.schema[c];
        if (col.kind == ColumnKind::Continuous) {
            std::vector<double> vals;
            vals.reserve(data.rows.size());
            for (const auto& row : data.rows) vals.push_back(parse_number(row[c]));
            std::sort(vals.begin(), vals.end());
            for (double q : {0.2, 0.4, 0.6, 0.8}) col.thresholds.push_back(quantile_type7(vals, q));
        } else if (col.kind == ColumnKind::Categorical) {
            std::map<std::string, bool> seen;
            for (const auto& row : data.rows)
                if (seen.emplace(row[c], true).second) col.categories.push_back(row[c]);
            std::sort(col.categories.begin(), col.categories.end());
        }
        spec.columns.push_back(std::move(col));
    }
    spec.validate();
    return spec;
}

ContextVector encode(const BinarizationSpec& spec, const std::vector<std::string>& row,
                     std::int64_t* unseen_count) {
    if (row.size() != spec.columns.size())
        throw std::invalid_argument("encode: row width does not match spec");
    ContextVector x;
    x.reserve(static_cast<std::size_t>(spec.width()));
    for (std::size_t c = 0; c < spec.columns.size(); ++c) {
        const auto& col = spec.columns[c];
        switch (col.kind) {
            case ColumnKind::Continuous: {
                const double v = parse_number(row[c]);
                std::size_t bin = col.thresholds.size();
                for (std::size_t j = 0; j < col.thresholds.size(); ++j)
                    if (v <= col.thresholds[j]) { bin = j; break; }
                for (std::size_t j = 0; j <= col.thresholds.size(); ++j)
                    x.push_back(j == bin ? 1 : 0);
                break;
            }
            case ColumnKind::Categorical: {
                const auto it = std::find(col.categories.begin(), col.categories.end(), row[c]);
                if (it == col.categories.end() && unseen_count) ++*unseen_count;
                for (std::size_t j = 0; j < col.categories.size(); ++j)
                    x.push_back(it != col.categories.end() &&
                                        j == static_cast<std::size_t>(it - col.categories.begin())
                                    ? 1
                                    : 0);
                break;
            }
            case ColumnKind::Binary:
                x.push_back(row[c] == "1" ? 1 : 0);
                break;
        }
    }
    return x;
}

ContextVector apply_noise(const ContextVector& x, double p, std::mt19937_64& rng) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("apply_noise: p outside [0,1]");
    ContextVector out = x;
    if (p == 0.0) return out;
    std::bernoulli_distribution flip(p);
    for (auto& b : out)
        if (flip(rng)) b ^= 1u;
    return out;
}

void StreamConfig::validate() const {
    if (noise_flip_prob < 0.0 || noise_flip_prob > 1.0)
        throw std::invalid_argument("StreamConfig: noise_flip_prob outside [0,1]");
    if (T < 1) throw std::invalid_argument("StreamConfig: T must be >= 1");
}

DatasetStream::DatasetStream(LabeledDataset data, BinarizationSpec spec, StreamConfig cfg)
    : data_(std::move(data)), spec_(std::move(spec)), cfg_(cfg) {
    cfg_.validate();
    spec_.validate();
    if (data_.rows.empty()) throw std::invalid_argument("DatasetStream: empty dataset");
    perm_.resize(data_.rows.size());
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(cfg_.shuffle_seed);
    std::shuffle(perm_.begin(), perm_.end(), shuffle_rng);
}

ContextVector DatasetStream::next(std::mt19937_64& rng) {
    if (pos_ >= perm_.size()) {
        if (!cfg_.loop) throw std::runtime_error("DatasetStream: stream exhausted");
        pos_ = 0;
    }
    const std::size_t r = perm_[pos_++];
    ++t_;
    current_label_ = data_.labels[r];
    return apply_noise(encode(spec_, data_.rows[r], &unseen_), cfg_.noise_flip_prob, rng);
}

double DatasetStream::reward(int action, std::mt19937_64&) {
    return mean_reward(action);
}

double DatasetStream::mean_reward(int action) const {
    if (current_label_ < 0) throw std::logic_error("DatasetStream: reward before next()");
    return action == current_label_ ? 1.0 : 0.0;
}

KnownDistribution empirical_distribution(const LabeledDataset& data,
                                         const BinarizationSpec& spec) {
    KnownDistribution dist;
    dist.M = spec.width();
    dist.K = data.K();
    std::map<ContextVector, std::pair<double, std::vector<double>>> cells;
    for (std::size_t r = 0; r < data.rows.size(); ++r) {
        auto x = encode(spec, data.rows[r]);
        auto& [count, sums] = cells[std::move(x)];
        sums.resize(static_cast<std::size_t>(dist.K), 0.0);
        count += 1.0;
        sums[static_cast<std::size_t>(data.labels[r])] += 1.0;
    }
    const auto n = static_cast<double>(data.rows.size());
    for (auto& [x, cell] : cells) {
        KnownDistribution::Row row;
        row.x = x;
        row.p = cell.first / n;
        row.means = cell.second;
        for (auto& m : row.means) m /= cell.first;
        dist.rows.push_back(std::move(row));
    }
    dist.validate();
    return dist;
}

ContextVector Table1Env::next(std::mt19937_64& rng) {
    x_ = {std::bernoulli_distribution(3.0 / 8.0)(rng) ? std::uint8_t{1} : std::uint8_t{0},
          std::bernoulli_distribution(1.0 / 4.0)(rng) ? std::uint8_t{1} : std::uint8_t{0}};
    return x_;
}

double Table1Env::reward(int action, std::mt19937_64& rng) {
    const double m = mean_reward(action);
    if (action == 0) return m;  // deterministic
    return std::bernoulli_distribution(m)(rng) ? 1.0 : 0.0;
}

double Table1Env::mean_reward(int action) const {
    if (x_.size() != 2) throw std::logic_error("Table1Env: reward before next()");
    if (action == 0) return x_[0] ? 1.0 : 0.0;
    if (action == 1) return kTable1Q2[x_[0]][x_[1]];
    throw std::out_of_range("Table1Env: unknown action");
}

KnownDistribution Table1Env::golden_distribution() {
    KnownDistribution dist;
    dist.M = 2;
    dist.K = 2;
    const double p0[2] = {5.0 / 8.0, 3.0 / 8.0};
    const double p1[2] = {3.0 / 4.0, 1.0 / 4.0};
    const double mean_k0[2][2] = {{0.0, 0.0}, {2.0 / 3.0, 2.0}};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            dist.rows.push_back({{static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b)},
                                 p0[a] * p1[b],
                                 {mean_k0[a][b], kTable1Q2[a][b]}});
    dist.validate();
    return dist;
}

KnownDistribution Table1Env::sampler_distribution() {
    auto dist = golden_distribution();
    for (auto& row : dist.rows) row.means[0] = row.x[0] ? 1.0 : 0.0;
    return dist;
}

XorEnv::XorEnv(int M) : M_(M) {
    if (M < 2) throw std::invalid_argument("XorEnv: need M >= 2");
}

ContextVector XorEnv::next(std::mt19937_64& rng) {
    x_.resize(static_cast<std::size_t>(M_));
    std::bernoulli_distribution bit(0.5);
    for (auto& b : x_) b = bit(rng) ? 1 : 0;
    return x_;
}

double XorEnv::reward(int action, std::mt19937_64&) { return mean_reward(action); }

double XorEnv::mean_reward(int action) const {
    if (x_.empty()) throw std::logic_error("XorEnv: reward before next()");
    if (action < 0 || action >= 2) throw std::out_of_range("XorEnv: unknown action");
    return action == (x_[0] ^ x_[1]) ? 1.0 : 0.0;
}

KnownDistribution XorEnv::distribution(int M) {
    if (M < 2 || M > 20) throw std::invalid_argument("XorEnv::distribution: M outside [2,20]");
    KnownDistribution dist;
    dist.M = M;
    dist.K = 2;
    const double p = std::ldexp(1.0, -M);
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << M); ++code) {
        auto x = bits_of(code, M);
        const int target = x[0] ^ x[1];
        dist.rows.push_back({std::move(x), p, {target == 0 ? 1.0 : 0.0, target == 1 ? 1.0 : 0.0}});
    }
    dist.validate();
    return dist;
}

GapEnv::GapEnv(int K, int M, double delta1, double delta2)
    : K_(K), M_(M), delta1_(delta1), delta2_(delta2) {
    if (K < 2 || M < 2) throw std::invalid_argument("GapEnv: need K >= 2 and M >= 2");
    if (delta2 <= 0.0 || delta2 > 1.0) throw std::invalid_argument("GapEnv: delta2 outside (0,1]");
    if (delta1 <= 0.0 || delta1 > delta2 / 2.0)
        throw std::invalid_argument("GapEnv: infeasible gaps, need 0 < delta1 <= delta2/2");
}

ContextVector GapEnv::next(std::mt19937_64& rng) {
    x_.resize(static_cast<std::size_t>(M_));
    std::bernoulli_distribution bit(0.5);
    x_[0] = bit(rng) ? 1 : 0;
    // A degraded copy of x_0: flipping with probability delta1/delta2 lowers
    // the variable score by exactly delta1.
    x_[1] = x_[0] ^ (std::bernoulli_distribution(delta1_ / delta2_)(rng) ? 1 : 0);
    for (int i = 2; i < M_; ++i) x_[static_cast<std::size_t>(i)] = bit(rng) ? 1 : 0;
    return x_;
}

double GapEnv::reward(int action, std::mt19937_64& rng) {
    return std::bernoulli_distribution(mean_reward(action))(rng) ? 1.0 : 0.0;
}

double GapEnv::mean_reward(int action) const {
    if (x_.empty()) throw std::logic_error("GapEnv: reward before next()");
    if (action < 0 || action >= K_) throw std::out_of_range("GapEnv: unknown action");
    const double hi = 0.5 + delta2_ / 2.0, lo = 0.5 - delta2_ / 2.0;
    if (action == 0) return x_[0] ? hi : lo;
    if (action == 1) return x_[0] ? lo : hi;
    return lo;
}

KnownDistribution GapEnv::distribution(int K, int M, double delta1, double delta2) {
    GapEnv env(K, M, delta1, delta2);  // validates
    if (M > 20) throw std::invalid_argument("GapEnv::distribution: M outside [2,20]");
    KnownDistribution dist;
    dist.M = M;
    dist.K = K;
    const double q = delta1 / delta2;
    const double hi = 0.5 + delta2 / 2.0, lo = 0.5 - delta2 / 2.0;
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << M); ++code) {
        auto x = bits_of(code, M);
        KnownDistribution::Row row;
        row.p = 0.5 * (x[1] == x[0] ? 1.0 - q : q) * std::ldexp(1.0, -(M - 2));
        row.means.assign(static_cast<std::size_t>(K), lo);
        row.means[0] = x[0] ? hi : lo;
        row.means[1] = x[0] ? lo : hi;
        row.x = std::move(x);
        dist.rows.push_back(std::move(row));
    }
    dist.validate();
    return dist;
}

}  // namespace bf
