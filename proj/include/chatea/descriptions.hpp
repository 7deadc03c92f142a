#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "chatea/backend.hpp"
#include "chatea/cards.hpp"
#include "chatea/log.hpp"
#include "chatea/prompts.hpp"

namespace chatea {

// Entity-description cache keyed by (kg, entity id, model id). Reads are
// concurrent, writes serialized. Persists as line records
// "kg,entity_id,model,text" with newlines escaped in the text field.
class DescriptionCache {
public:
    std::optional<std::string> get(const std::string& kg, EntityId e, const std::string& model) const {
        std::shared_lock lock(mu_);
        auto it = map_.find(key(kg, e, model));
        if (it == map_.end()) return std::nullopt;
        return it->second;
    }

    void put(const std::string& kg, EntityId e, const std::string& model, const std::string& text) {
        std::unique_lock lock(mu_);
        map_[key(kg, e, model)] = text;
    }

    std::size_t size() const {
        std::shared_lock lock(mu_);
        return map_.size();
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for write: " + path);
        std::shared_lock lock(mu_);
        std::vector<std::string> keys;
        keys.reserve(map_.size());
        for (const auto& [k, _] : map_) keys.push_back(k);
        std::sort(keys.begin(), keys.end());
        for (const auto& k : keys) out << k << ',' << escape(map_.at(k)) << '\n';
    }

    void load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open: " + path);
        std::unique_lock lock(mu_);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            // key is "kg,entity_id,model"; text is everything after the third comma
            std::size_t c1 = line.find(',');
            std::size_t c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
            std::size_t c3 = c2 == std::string::npos ? c2 : line.find(',', c2 + 1);
            if (c3 == std::string::npos) throw std::runtime_error("bad description record: " + line);
            map_[line.substr(0, c3)] = unescape(line.substr(c3 + 1));
        }
    }

private:
    static std::string key(const std::string& kg, EntityId e, const std::string& model) {
        return kg + "," + std::to_string(e) + "," + model;
    }

    static std::string escape(const std::string& s) {
        std::string out;
        for (char c : s) {
            if (c == '\\') out += "\\\\";
            else if (c == '\n') out += "\\n";
            else out.push_back(c);
        }
        return out;
    }

    static std::string unescape(const std::string& s) {
        std::string out;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '\\' && i + 1 < s.size()) {
                ++i;
                out.push_back(s[i] == 'n' ? '\n' : s[i]);
            } else {
                out.push_back(s[i]);
            }
        }
        return out;
    }

    mutable std::shared_mutex mu_;
    std::unordered_map<std::string, std::string> map_;
};

namespace detail {

// Single trimmed paragraph: cut at the first blank line, flatten newlines.
inline std::string tidy_description(std::string text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = text.find_last_not_of(" \t\r\n");
    text = text.substr(first, last - first + 1);
    const auto para = text.find("\n\n");
    if (para != std::string::npos) text.resize(para);
    for (char& c : text)
        if (c == '\n' || c == '\r') c = ' ';
    return text;
}

}  // namespace detail

// Returns the cached description or asks the backend once for a fresh one.
// Backend failure degrades to an empty description with a warning so the
// alignment loop keeps moving.
inline std::string generate_description(ChatClient& client, const KnowledgeGraph& kg, EntityId e,
                                        DescriptionCache& cache, const std::string& model,
                                        const std::string& system_prompt,
                                        const CardOptions& opts = {}, EntityId accounting_target = -1) {
    if (auto hit = cache.get(kg.name, e, model)) return *hit;

    EntityCard card = make_card(kg, e, "", opts);
    ChatRequest request;
    request.model = model;
    request.messages.push_back({Role::System, system_prompt});
    request.messages.push_back({Role::User, render_description_prompt(card)});

    std::string text;
    try {
        const ChatReply reply = client.chat(request, accounting_target);
        text = detail::tidy_description(reply.content);
    } catch (const ChatError& e_) {
        log_warn("description generation failed for entity %lld: %s",
                 static_cast<long long>(e), e_.what());
        return "";
    }
    cache.put(kg.name, e, model, text);
    return text;
}

}  // namespace chatea
