#pragma once

#include "mar/core/action.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace mar::testing {

inline std::filesystem::path data_dir() { return MAR_DATA_DIR; }

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("mar_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

// Text drawn from a pool that includes JSON-hostile characters and multi-byte UTF-8.
inline std::string random_text(std::mt19937_64& rng) {
    static const char* pieces[] = {"ramen", " ", "Chicago", "\"", "\\", "Loop", "\n", "4.5", "★", "café",
                                   "{", "}", ":", ",", "\t", "null", "at", "x", "é", "/"};
    std::uniform_int_distribution<int> len(0, 8);
    std::uniform_int_distribution<std::size_t> pick(0, std::size(pieces) - 1);
    std::string s;
    for (int n = len(rng); n > 0; --n) s += pieces[pick(rng)];
    return s;
}

inline AtomicAction random_action(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> kind(0, static_cast<int>(kActionVariantCount) - 1);
    std::uniform_int_distribution<int> coord(0, 4000);
    switch (kind(rng)) {
    case 0: return action::OpenApp{random_text(rng)};
    case 1: return action::Tap{coord(rng), coord(rng)};
    case 2: return action::Swipe{coord(rng), coord(rng), coord(rng), coord(rng)};
    case 3: return action::Type{random_text(rng)};
    case 4: return action::Enter{};
    case 5: return action::Back{};
    case 6: return action::Home{};
    case 7: return action::Wait{};
    default: return action::TapTypeEnter{coord(rng), coord(rng), random_text(rng)};
    }
}

}  // namespace mar::testing
