/// @file cli.hpp
/// @brief Command-line front end: evaluate, review, analyze and ingest.

#pragma once

#include "revieweval/errors.hpp"

#include <json.hpp>

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

namespace revieweval::cli {

enum class BackendKind { Live, Scripted, Replay };

struct RunConfig {
    BackendKind backend = BackendKind::Live;
    std::string script_path;
    std::string transcript_path;
    std::string base_url = "https://api.openai.com/v1";
    std::string chat_model = "gpt-4o";
    std::string embedding_model = "text-embedding-3-small";
    std::vector<std::string> judge_models;

    /// "auto" resolves to with_expert when expert reviews are given.
    std::string mode = "auto";
    int tau = 2;
    std::size_t chunk_child = 1000;
    std::size_t chunk_parent = 4000;
    double overlap = 0.10;
    std::size_t retrieval_k = 4;
    std::size_t depth_panel = 1;
    std::size_t refine_rounds = 1;
    std::size_t improve_rounds = 1;
    std::string out_dir = ".";

    /// Settings that shape the results; file paths are left out so the hash
    /// is stable across machines.
    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] std::string hash() const;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitBackend = 3;

int exit_code_for(Errc code) noexcept;

/// Entry point behind the `revieweval` executable.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace revieweval::cli
