#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "chatea/rng.hpp"

namespace chatea {

// Dense row-major matrix of per-entity vectors. Row order follows ascending
// entity id; dimension is fixed at construction.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    EmbeddingMatrix(std::size_t rows, std::size_t dim, double fill = 0.0)
        : rows_(rows), dim_(dim), data_(rows * dim, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t dim() const { return dim_; }
    bool empty() const { return rows_ == 0; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

    double& at(std::size_t i, std::size_t j) { return data_[i * dim_ + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const EmbeddingMatrix& o) const {
        return rows_ == o.rows_ && dim_ == o.dim_ && data_ == o.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

// Removes the shared column means of two row-aligned matrices. Raw views can
// carry a large common component that swamps the informative directions of a
// concatenated cosine.
inline void center_columns(EmbeddingMatrix& a, EmbeddingMatrix& b) {
    const std::size_t d = a.dim();
    if (d != b.dim()) throw std::invalid_argument("center_columns: dimension mismatch");
    const std::size_t total = a.rows() + b.rows();
    if (total == 0 || d == 0) return;
    std::vector<double> mean(d, 0.0);
    for (const auto* m : {&a, &b})
        for (std::size_t i = 0; i < m->rows(); ++i) {
            const auto r = m->row(i);
            for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
        }
    for (double& v : mean) v /= static_cast<double>(total);
    for (auto* m : {&a, &b})
        for (std::size_t i = 0; i < m->rows(); ++i) {
            auto r = m->row(i);
            for (std::size_t j = 0; j < d; ++j) r[j] -= mean[j];
        }
}

inline void center_columns(EmbeddingMatrix& m) {
    EmbeddingMatrix empty(0, m.dim());
    center_columns(m, empty);
}

// Scales every nonzero row to unit L2 norm. Views with wildly different
// scales would otherwise dominate concatenated cosines.
inline void normalize_rows(EmbeddingMatrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        double s = 0.0;
        for (double v : r) s += v * v;
        if (s == 0.0) continue;
        s = std::sqrt(s);
        for (double& v : r) v /= s;
    }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Cosine similarity; zero-norm vectors are treated as orthogonal to everything.
inline double cosine(std::span<const double> a, std::span<const double> b) {
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

// --- binary checkpoint format -------------------------------------------
//
// 16-byte header: magic u32 | dim u32 | count u64, then count*dim doubles,
// all little-endian.

inline constexpr std::uint32_t kEmbeddingMagic = 0x424D4543;  // "CEMB"

inline void save_embedding(const EmbeddingMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    const std::uint32_t magic = kEmbeddingMagic;
    const std::uint32_t dim = static_cast<std::uint32_t>(m.dim());
    const std::uint64_t count = m.rows();
    out.write(reinterpret_cast<const char*>(&magic), 4);
    out.write(reinterpret_cast<const char*>(&dim), 4);
    out.write(reinterpret_cast<const char*>(&count), 8);
    out.write(reinterpret_cast<const char*>(m.data().data()),
              static_cast<std::streamsize>(m.data().size() * sizeof(double)));
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline EmbeddingMatrix load_embedding(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::uint32_t magic = 0, dim = 0;
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&magic), 4);
    in.read(reinterpret_cast<char*>(&dim), 4);
    in.read(reinterpret_cast<char*>(&count), 8);
    if (!in || magic != kEmbeddingMagic)
        throw std::runtime_error("not an embedding checkpoint: " + path);
    EmbeddingMatrix m(count, dim);
    in.read(reinterpret_cast<char*>(m.data().data()),
            static_cast<std::streamsize>(count * dim * sizeof(double)));
    if (!in) throw std::runtime_error("truncated embedding checkpoint: " + path);
    return m;
}

// --- text name-vector format ----------------------------------------------
//
// One line per entity: "id<TAB>v1 v2 ... vD". Rows for ids missing from the
// file stay zero (the caller decides whether that warrants a warning).

inline EmbeddingMatrix load_name_vectors(const std::string& path,
                                         const std::vector<std::int64_t>& ids) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);

    std::size_t dim = 0;
    std::vector<std::vector<double>> by_line;
    std::vector<std::int64_t> line_ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected id<TAB>values");
        std::int64_t id = 0;
        const auto rc = std::from_chars(line.data(), line.data() + tab, id);
        if (rc.ec != std::errc{})
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad id");
        std::istringstream vals(line.substr(tab + 1));
        std::vector<double> v;
        double x = 0.0;
        while (vals >> x) v.push_back(x);
        if (v.empty())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": no values");
        if (dim == 0) dim = v.size();
        if (v.size() != dim)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": inconsistent dimension");
        by_line.push_back(std::move(v));
        line_ids.push_back(id);
    }
    if (dim == 0) throw std::runtime_error(path + ": empty name-vector file");

    EmbeddingMatrix m(ids.size(), dim);
    std::unordered_map<std::int64_t, std::size_t> row_of;
    row_of.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) row_of[ids[i]] = i;
    for (std::size_t k = 0; k < by_line.size(); ++k) {
        auto it = row_of.find(line_ids[k]);
        if (it == row_of.end()) continue;  // vector for an entity outside this KG
        std::memcpy(m.row(it->second).data(), by_line[k].data(), dim * sizeof(double));
    }
    return m;
}

inline std::uint64_t file_fnv1a(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 14];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
    return h;
}

}  // namespace chatea
