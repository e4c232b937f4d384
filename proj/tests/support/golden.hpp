/// @file golden.hpp
/// @brief Golden-fixture invocations shared by the CLI tests and the
/// acceptance binary.

#pragma once

#include "revieweval/cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace revieweval::test_support {

inline const std::filesystem::path kGoldenDir = std::filesystem::path(REVIEWEVAL_FIXTURE_DIR) / "golden";
inline constexpr const char* kGoldenEpoch = "1700000000";

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct CliOutcome {
    int code = 0;
    std::string out, err;
};

inline CliOutcome run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "revieweval");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

inline std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

/// Global options for a scripted golden run writing into `out_dir`.
inline std::vector<std::string> golden_scripted(const std::filesystem::path& out_dir) {
    return {"--config", (kGoldenDir / "config.toml").string(), "--script", (kGoldenDir / "script.json").string(),
            "--out", out_dir.string()};
}

/// Global options replaying `transcript` into `out_dir`.
inline std::vector<std::string> golden_replay(const std::filesystem::path& transcript,
                                              const std::filesystem::path& out_dir) {
    return {"--config", (kGoldenDir / "config.toml").string(), "--backend", "replay", "--transcript",
            transcript.string(), "--out", out_dir.string()};
}

inline std::vector<std::string> golden_evaluate(bool with_expert) {
    std::vector<std::string> a = {"evaluate", (kGoldenDir / "paper.md").string(),
                                  (kGoldenDir / "review.md").string(), "--guidelines",
                                  (kGoldenDir / "guidelines.txt").string(), "--paper-id", "subitization",
                                  "--model-id", "human"};
    if (with_expert) {
        a.push_back("--expert");
        a.push_back((kGoldenDir / "expert_review.md").string());
    }
    return a;
}

inline std::vector<std::string> golden_review() {
    return {"review", (kGoldenDir / "paper.md").string(), (kGoldenDir / "guidelines.html").string(),
            "--expert", (kGoldenDir / "expert_review.md").string(), "--paper-id", "subitization"};
}

/// Parses a sha256sum listing into relative path -> hex digest.
inline std::map<std::string, std::string> load_manifest(const std::filesystem::path& p) {
    std::map<std::string, std::string> out;
    std::istringstream in(slurp(p));
    std::string hash, path;
    while (in >> hash >> path) out[path] = hash;
    return out;
}

}  // namespace revieweval::test_support
