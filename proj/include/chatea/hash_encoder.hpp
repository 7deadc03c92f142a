#pragma once

#include <cctype>
#include <cmath>
#include <string>

#include "chatea/kg.hpp"
#include "chatea/matrix.hpp"
#include "chatea/rng.hpp"

namespace chatea {

// Deterministic character-n-gram hashing encoder. Stands in for a pretrained
// text encoder so the whole pipeline runs offline: each trigram of the
// lowercased, boundary-padded name hashes to a signed bucket.
class HashNameEncoder {
public:
    explicit HashNameEncoder(std::size_t dim = 64, std::size_t ngram = 3)
        : dim_(dim), ngram_(ngram) {}

    std::size_t dim() const { return dim_; }

    std::vector<double> encode(const std::string& name) const {
        std::string s = "^";
        for (char c : name) {
            const unsigned char u = static_cast<unsigned char>(c);
            s.push_back(u == '_' ? ' ' : static_cast<char>(std::tolower(u)));
        }
        s.push_back('$');
        std::vector<double> v(dim_, 0.0);
        if (s.size() >= ngram_) {
            for (std::size_t i = 0; i + ngram_ <= s.size(); ++i) {
                const std::uint64_t h = fnv1a(s.data() + i, ngram_);
                const std::size_t bucket = h % dim_;
                const double sign = (h >> 32) & 1 ? 1.0 : -1.0;
                v[bucket] += sign;
            }
        }
        double n = 0.0;
        for (double x : v) n += x * x;
        if (n > 0.0) {
            n = std::sqrt(n);
            for (double& x : v) x /= n;
        }
        return v;
    }

    EmbeddingMatrix encode_all(const KnowledgeGraph& kg) const {
        const auto& ids = kg.sorted_ids();
        EmbeddingMatrix m(ids.size(), dim_);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const auto v = encode(kg.entity_name(ids[i]));
            std::copy(v.begin(), v.end(), m.row(i).begin());
        }
        return m;
    }

private:
    std::size_t dim_;
    std::size_t ngram_;
};

}  // namespace chatea
