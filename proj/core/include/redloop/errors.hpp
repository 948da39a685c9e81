#pragma once

#include <stdexcept>
#include <string>

namespace redloop {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// PTT parsing / mutation
struct SchemaError : Error {
    explicit SchemaError(const std::string& json_path, const std::string& why)
        : Error("schema error at " + json_path + ": " + why), path(json_path) {}
    std::string path;
};
struct InvariantError : Error {
    using Error::Error;
};
struct UnknownParent : Error {
    using Error::Error;
};
struct NotALeaf : Error {
    using Error::Error;
};
struct NotInProgress : Error {
    using Error::Error;
};

// RAG store
struct BadDocument : Error {
    using Error::Error;
};
struct UnknownCorpus : Error {
    using Error::Error;
};

// LLM gateway
struct BackendUnreachable : Error {
    using Error::Error;
};
struct SchemaViolation : Error {
    using Error::Error;
};
struct MissingScript : Error {
    using Error::Error;
};

// Planner
struct NonLeafSelected : Error {
    using Error::Error;
};
struct NoRunnableTasks : Error {
    using Error::Error;
};

// Executors / scenarios
struct SpawnError : Error {
    using Error::Error;
};
struct ScenarioError : Error {
    using Error::Error;
};

// Orchestration / reporting
struct ConfigError : Error {
    using Error::Error;
};
struct CorruptLog : Error {
    using Error::Error;
};

}  // namespace redloop
