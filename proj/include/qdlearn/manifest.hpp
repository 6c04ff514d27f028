#pragma once

#include <chrono>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "qdlearn/io_util.hpp"

namespace qdlearn {

inline constexpr const char* kToolVersion = "qdlearn 0.1.0";

// Run provenance. The digest covers only semantic configuration (sorted
// key=value pairs), never timestamps, paths or parallelism, so artifacts
// produced with the same seeds are byte-identical regardless of --jobs.
class RunManifest {
public:
    explicit RunManifest(std::string command) : command_(std::move(command)) {
        j_["tool_version"] = kToolVersion;
        j_["command"] = command_;
    }

    void config(const std::string& key, const std::string& value) {
        config_.emplace_back(key, value);
        j_["config"][key] = value;
    }
    void config(const std::string& key, double value) { config(key, format_double(value)); }
    void config(const std::string& key, std::uint64_t value) {
        config(key, std::to_string(value));
    }
    void note(const std::string& key, const nlohmann::json& value) { j_[key] = value; }
    void input(const std::string& path) { j_["inputs"].push_back(path); }
    void output(const std::string& path) { j_["outputs"].push_back(path); }

    std::uint64_t config_digest() const {
        auto sorted = config_;
        std::sort(sorted.begin(), sorted.end());
        std::string canonical = command_;
        for (const auto& [k, v] : sorted) canonical += "\n" + k + "=" + v;
        return fnv1a64(canonical);
    }

    void write(const std::string& path) {
        char digest[19];
        std::snprintf(digest, sizeof digest, "0x%016llx",
                      static_cast<unsigned long long>(config_digest()));
        j_["config_digest"] = digest;
        const auto now = std::chrono::system_clock::now();
        const auto t = std::chrono::system_clock::to_time_t(now);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
        j_["created_utc"] = stamp;
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot open for writing: " + path);
        out << j_.dump(2) << "\n";
    }

private:
    static std::string format_double(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }
    std::string command_;
    std::vector<std::pair<std::string, std::string>> config_;
    nlohmann::json j_;
};

}  // namespace qdlearn
