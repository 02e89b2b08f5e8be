#include "mar/env/adb.hpp"

#include "mar/core/error.hpp"

#include <json.hpp>

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <thread>

namespace mar::env {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr std::string_view kShellSpecial = " \\'\"`$&|;<>()*?~#![]{}";

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out.push_back(c);
    }
    return out + "'";
}

}  // namespace

std::string adb_escape_text(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (kShellSpecial.find(c) != std::string_view::npos) out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

AdbCommandPlan adb_serialize(const AtomicAction& a, const PackageMap& packages, std::chrono::milliseconds wait) {
    AdbCommandPlan plan;
    auto tap = [](int x, int y) { return "input tap " + std::to_string(x) + " " + std::to_string(y); };
    auto text = [](const std::string& t) { return "input text " + adb_escape_text(t); };
    std::visit(overloaded{
                   [&](const action::OpenApp& v) {
                       auto it = packages.find(v.app_name);
                       if (it == packages.end()) throw UnknownApp("no package mapping for app '" + v.app_name + "'");
                       plan.commands.push_back("monkey -p " + it->second + " -c android.intent.category.LAUNCHER 1");
                   },
                   [&](const action::Tap& v) { plan.commands.push_back(tap(v.x, v.y)); },
                   [&](const action::Swipe& v) {
                       plan.commands.push_back("input swipe " + std::to_string(v.x1) + " " + std::to_string(v.y1) + " " +
                                               std::to_string(v.x2) + " " + std::to_string(v.y2) + " " +
                                               std::to_string(kSwipeDurationMs));
                   },
                   [&](const action::Type& v) { plan.commands.push_back(text(v.text)); },
                   [&](const action::Enter&) { plan.commands.push_back("input keyevent 66"); },
                   [&](const action::Back&) { plan.commands.push_back("input keyevent 4"); },
                   [&](const action::Home&) { plan.commands.push_back("input keyevent 3"); },
                   [&](const action::Wait&) { plan.delay = wait; },
                   [&](const action::TapTypeEnter& v) {
                       plan.commands.push_back(tap(v.x, v.y));
                       plan.commands.push_back(text(v.text));
                       plan.commands.push_back("input keyevent 66");
                   },
               },
               a);
    return plan;
}

PackageMap load_package_map(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open package map " + file.string());
    try {
        return nlohmann::json::parse(in).get<PackageMap>();
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed package map " + file.string() + ": " + e.what());
    }
}

std::pair<int, int> png_dimensions(std::string_view bytes) {
    static constexpr std::string_view sig = "\x89PNG\r\n\x1a\n";
    if (bytes.size() < 24 || bytes.substr(0, 8) != sig || bytes.substr(12, 4) != "IHDR")
        throw DeviceUnavailable("screen capture did not return a PNG");
    auto be32 = [&](std::size_t off) {
        return (static_cast<int>(static_cast<unsigned char>(bytes[off])) << 24) |
               (static_cast<int>(static_cast<unsigned char>(bytes[off + 1])) << 16) |
               (static_cast<int>(static_cast<unsigned char>(bytes[off + 2])) << 8) |
               static_cast<int>(static_cast<unsigned char>(bytes[off + 3]));
    };
    return {be32(16), be32(20)};
}

AdbDevice::AdbDevice(std::string serial, PackageMap packages, std::string adb_binary)
    : serial_(std::move(serial)), packages_(std::move(packages)), adb_(std::move(adb_binary)) {}

std::vector<std::string> AdbDevice::apps() const {
    std::vector<std::string> out;
    for (const auto& [app, pkg] : packages_) out.push_back(app);
    return out;
}

std::string AdbDevice::run(const std::string& args) const {
    const std::string cmd = shell_quote(adb_) + " -s " + shell_quote(serial_) + " " + args + " 2>/dev/null";
    std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
    if (!pipe) throw DeviceUnavailable("cannot spawn " + adb_);
    std::string out;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe.get())) > 0) out.append(buf.data(), n);
    int status = pclose(pipe.release());
    if (status != 0) throw DeviceUnavailable("adb device " + serial_ + " unavailable (" + args + ")");
    return out;
}

Screenshot AdbDevice::capture_screenshot() {
    Screenshot s;
    s.payload = run("exec-out screencap -p");
    auto [w, h] = png_dimensions(s.payload);
    s.width = w;
    s.height = h;
    s.source = id();
    s.mime = "image/png";
    return s;
}

Execution AdbDevice::execute(const AtomicAction& a) {
    AdbCommandPlan plan = adb_serialize(a, packages_);
    for (const auto& c : plan.commands) run("shell " + shell_quote(c));
    if (plan.delay.count() > 0) std::this_thread::sleep_for(plan.delay);
    return Execution{};
}

}  // namespace mar::env
