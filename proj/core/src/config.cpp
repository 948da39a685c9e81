#include "redloop/config.hpp"

#include <fstream>
#include <sstream>

#include "redloop/errors.hpp"

namespace redloop {

namespace {

std::string trim(const std::string& s) {
    const std::size_t begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const std::size_t end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& value, const std::string& key,
                    const std::string& origin, int line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(origin + ":" + std::to_string(line) + ": " + key +
                          " needs a number, got \"" + value + "\"");
    }
}

}  // namespace

Settings parse_settings(const std::string& text, const std::string& origin) {
    Settings settings;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected key = value, got \"" + line + "\"");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "price_in_per_mtok") {
            settings.prices.usd_per_mtok_in = parse_double(value, key, origin, line_no);
        } else if (key == "price_out_per_mtok") {
            settings.prices.usd_per_mtok_out = parse_double(value, key, origin, line_no);
        } else if (key == "model") {
            settings.remote.model = value;
        } else if (key == "base_url") {
            settings.remote.base_url = value;
        } else if (key == "api_path") {
            settings.remote.path = value;
        } else if (key == "api_key_env") {
            settings.remote.api_key_env = value;
        } else if (key == "temperature") {
            settings.remote.temperature = parse_double(value, key, origin, line_no);
        } else if (key == "request_timeout_sec") {
            settings.remote.timeout_sec =
                static_cast<int>(parse_double(value, key, origin, line_no));
        } else {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown key \"" +
                              key + "\"");
        }
    }
    if (settings.prices.usd_per_mtok_in < 0 || settings.prices.usd_per_mtok_out < 0) {
        throw ConfigError(origin + ": prices must be non-negative");
    }
    return settings;
}

Settings load_settings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open settings file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_settings(buf.str(), path.string());
}

}  // namespace redloop
