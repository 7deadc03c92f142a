#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "chatea/kg.hpp"

namespace chatea::testing {

// Unique scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = (std::filesystem::temp_directory_path() /
                 ("chatea_" + tag + "_" + std::to_string(::getpid())))
                    .string();
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::string& path() const { return path_; }
    std::string file(const std::string& name) const { return path_ + "/" + name; }

private:
    std::string path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// In-memory KG builder for accessor tests.
inline KnowledgeGraph make_kg(const std::vector<std::string>& entity_names,
                              const std::vector<std::string>& relation_names,
                              const std::vector<Fact>& facts, const std::string& label = "test") {
    KnowledgeGraph kg;
    kg.name = label;
    for (std::size_t i = 0; i < entity_names.size(); ++i)
        kg.entities[static_cast<EntityId>(i)] = entity_names[i];
    for (std::size_t i = 0; i < relation_names.size(); ++i)
        kg.relations[static_cast<RelationId>(i)] = relation_names[i];
    kg.facts = facts;
    kg.rebuild_indexes();
    return kg;
}

}  // namespace chatea::testing
