#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace tiser::testfs {

inline std::string fixture_path(const std::string& name) {
    return std::string(TISER_FIXTURE_DIR) + "/" + name;
}

inline std::string read_fixture(const std::string& name) {
    std::ifstream in(fixture_path(name));
    if (!in) throw std::runtime_error("missing fixture: " + name);
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    return text;
}

}  // namespace tiser::testfs
