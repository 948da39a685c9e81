#pragma once

#include <filesystem>

#include "redloop/llm.hpp"

namespace redloop {

/// Pricing and remote-endpoint settings from a "key = value" file
/// ('#' comments, blank lines ignored). Unknown keys raise ConfigError.
struct Settings {
    PriceTable prices;
    RemoteConfig remote;
};

Settings parse_settings(const std::string& text, const std::string& origin = "<inline>");
Settings load_settings(const std::filesystem::path& path);

}  // namespace redloop
