#pragma once

#include "mar/env/backend.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mar::env {

using PackageMap = std::map<std::string, std::string>;

// Shell commands for one action plus the pause that follows them.
struct AdbCommandPlan {
    std::vector<std::string> commands;
    std::chrono::milliseconds delay{0};
};

inline constexpr int kSwipeDurationMs = 300;
inline constexpr std::chrono::seconds kRealWait{10};

// Backslash-escapes characters the device shell would otherwise interpret.
std::string adb_escape_text(std::string_view text);

// Throws UnknownApp when OpenApp names an app without a package mapping.
AdbCommandPlan adb_serialize(const AtomicAction& a, const PackageMap& packages,
                             std::chrono::milliseconds wait = kRealWait);

PackageMap load_package_map(const std::filesystem::path& file);

// Reads width/height from a PNG header; throws DeviceUnavailable on anything else.
std::pair<int, int> png_dimensions(std::string_view bytes);

// Drives a device through the `adb` executable.
class AdbDevice final : public DeviceBackend {
public:
    AdbDevice(std::string serial, PackageMap packages, std::string adb_binary = "adb");

    std::string id() const override { return "adb:" + serial_; }
    std::vector<std::string> apps() const override;
    Screenshot capture_screenshot() override;
    Execution execute(const AtomicAction& a) override;
    const Perceptor& perceptor() const override { return perceptor_; }

private:
    std::string run(const std::string& args) const;

    std::string serial_;
    PackageMap packages_;
    std::string adb_;
    NullPerceptor perceptor_;
};

}  // namespace mar::env
