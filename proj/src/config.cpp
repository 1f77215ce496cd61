#include "bumpvo/config.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "bumpvo/io_util.hpp"

namespace bumpvo {

namespace {

std::string trim(const std::string& s) {
    const size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(lineno) + ": expected 'key = value'", lineno);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("config line " + std::to_string(lineno) + ": empty key", lineno);
        if (cfg.values_.count(key)) throw ConfigError(key, "duplicate key on line " + std::to_string(lineno));
        cfg.values_[key] = value;
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    used_.insert(key);
    return it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    used_.insert(key);
    double v = 0.0;
    const char* b = it->second.data();
    const char* e = b + it->second.size();
    const auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e) throw ConfigError(key, "not a number: '" + it->second + "'");
    return v;
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    used_.insert(key);
    int v = 0;
    const char* b = it->second.data();
    const char* e = b + it->second.size();
    const auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e) throw ConfigError(key, "not an integer: '" + it->second + "'");
    return v;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    used_.insert(key);
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError(key, "not a boolean: '" + it->second + "'");
}

std::string KeyValueConfig::require_string(const std::string& key) const {
    if (!has(key)) throw ConfigError(key, "missing required key");
    return get_string(key, {});
}

double KeyValueConfig::require_double(const std::string& key) const {
    if (!has(key)) throw ConfigError(key, "missing required key");
    return get_double(key, 0.0);
}

void KeyValueConfig::reject_unknown() const {
    for (const auto& [k, v] : values_)
        if (!used_.count(k)) throw ConfigError(k, "unknown key");
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void ManifestWriter::add(const std::string& key, const std::string& value) { out_ += key + " = " + value + "\n"; }
void ManifestWriter::add(const std::string& key, double value) { add(key, format_double(value)); }
void ManifestWriter::add(const std::string& key, int value) { add(key, std::to_string(value)); }
void ManifestWriter::add(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }
void ManifestWriter::comment(const std::string& text) { out_ += "# " + text + "\n"; }

}  // namespace bumpvo
