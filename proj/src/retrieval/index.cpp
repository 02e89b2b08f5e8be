#include "mar/retrieval/index.hpp"

#include "mar/core/error.hpp"

#include <set>

namespace mar::retrieval {

void OperatorKBRegistry::add(const std::string& app, OperatorLibrary library) {
    std::set<int> seen;
    for (const auto& [other_app, lib] : libraries_)
        if (other_app != app)
            for (const auto& d : lib.docs()) seen.insert(d.id);
    for (const auto& d : library.docs()) {
        if (d.app != app)
            throw InvalidKbEntry("operator doc " + std::to_string(d.id) + " has app '" + d.app +
                                 "' but sits in the '" + app + "' library");
        if (seen.count(d.id))
            throw InvalidKbEntry("operator doc id " + std::to_string(d.id) + " appears under two apps");
    }
    libraries_.insert_or_assign(app, std::move(library));
}

const OperatorLibrary* OperatorKBRegistry::find(const std::string& app) const {
    auto it = libraries_.find(app);
    return it == libraries_.end() ? nullptr : &it->second;
}

std::vector<std::string> OperatorKBRegistry::apps() const {
    std::vector<std::string> out;
    for (const auto& [app, lib] : libraries_) out.push_back(app);
    return out;
}

std::size_t OperatorKBRegistry::total_docs() const {
    std::size_t n = 0;
    for (const auto& [app, lib] : libraries_) n += lib.size();
    return n;
}

ManagerKB build_manager_index(std::vector<ManagerDoc> docs, std::shared_ptr<const Embedder> embedder) {
    return ManagerKB(std::move(docs), std::move(embedder));
}

OperatorKBRegistry build_operator_registry(const std::vector<OperatorDoc>& docs,
                                           std::shared_ptr<const Embedder> embedder) {
    std::map<std::string, std::vector<OperatorDoc>> by_app;
    for (const auto& d : docs) by_app[d.app].push_back(d);
    OperatorKBRegistry reg;
    for (auto& [app, list] : by_app) reg.add(app, OperatorLibrary(std::move(list), embedder));
    return reg;
}

std::vector<ManagerDoc> manager_retrieve(const std::string& query, const ManagerKB& kb, int k) {
    if (k < 1) throw Error("manager_retrieve: k must be >= 1");
    return kb.top_k(query, static_cast<std::size_t>(k));
}

std::optional<OperatorDoc> operator_retrieve(const std::string& subtask_query, const std::string& app,
                                             const OperatorKBRegistry& registry) {
    const OperatorLibrary* lib = registry.find(app);
    if (lib == nullptr || lib->empty()) return std::nullopt;
    auto best = lib->top_k(subtask_query, 1);
    return best.front();
}

}  // namespace mar::retrieval
