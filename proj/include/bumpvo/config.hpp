#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bumpvo/errors.hpp"

namespace bumpvo {

/// Flat `key = value` text; '#' starts a comment. Keys are consumed as they
/// are read so that leftovers can be reported as unknown.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text);
    static KeyValueConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    // throw ConfigError naming the key when absent
    std::string require_string(const std::string& key) const;
    double require_double(const std::string& key) const;

    /// Throws ConfigError on the first key never read by any getter.
    void reject_unknown() const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

private:
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

/// Deterministic `key = value` writer used for manifests.
class ManifestWriter {
public:
    void add(const std::string& key, const std::string& value);
    void add(const std::string& key, double value);
    void add(const std::string& key, int value);
    void add(const std::string& key, bool value);
    void comment(const std::string& text);
    const std::string& str() const { return out_; }

private:
    std::string out_;
};

std::string format_double(double v);

}  // namespace bumpvo
