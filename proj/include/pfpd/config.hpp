#pragma once

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pfpd {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat `key = value` configuration with dotted section names, e.g.
/// `material.E = 32e9`. Lines starting with '#' are comments.
class Config {
  public:
    Config() = default;

    static Config from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        Config cfg;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(path + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
            cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
        return cfg;
    }

    void set(const std::string& key, const std::string& value) {
        if (key.empty()) throw ConfigError("empty config key");
        values_[key] = value;
    }

    /// Parses a single "key=value" override.
    void apply_override(const std::string& kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override '" + kv + "' is not of the form key=value");
        set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': '" + it->second +
                              "' is not a number");
        }
    }

    long get_long(const std::string& key, long fallback) const {
        const double v = get_double(key, static_cast<double>(fallback));
        return static_cast<long>(v);
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

  private:
    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }

    std::map<std::string, std::string> values_;
};

}  // namespace pfpd
