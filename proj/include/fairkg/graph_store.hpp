#pragma once

#include <mutex>
#include <shared_mutex>
#include <utility>

#include "fairkg/graph.hpp"
#include "fairkg/schema.hpp"

namespace fairkg {

/// Many-readers / single-writer wrapper around the graph and its active
/// schema. Readers see a consistent snapshot for the duration of `read`.
class GraphStore {
public:
    explicit GraphStore(DataModelSchema schema = builtin_schema(), PropertyGraph graph = {})
        : schema_(std::move(schema)), graph_(std::move(graph)) {}

    template <class F>
    decltype(auto) read(F&& f) const {
        std::shared_lock lock(mutex_);
        return std::forward<F>(f)(std::as_const(graph_), std::as_const(schema_));
    }

    template <class F>
    decltype(auto) write(F&& f) {
        std::unique_lock lock(mutex_);
        return std::forward<F>(f)(graph_, schema_);
    }

private:
    mutable std::shared_mutex mutex_;
    DataModelSchema schema_;
    PropertyGraph graph_;
};

} // namespace fairkg
