#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace nicpool {

enum class AcceleratorKind { Regex, Compression, Aes, Sha };

constexpr std::array<AcceleratorKind, 4> kAllAcceleratorKinds = {
    AcceleratorKind::Regex, AcceleratorKind::Compression, AcceleratorKind::Aes, AcceleratorKind::Sha};

inline const char* accelerator_name(AcceleratorKind k) {
    switch (k) {
        case AcceleratorKind::Regex: return "regex";
        case AcceleratorKind::Compression: return "compression";
        case AcceleratorKind::Aes: return "aes";
        case AcceleratorKind::Sha: return "sha";
    }
    return "?";
}

inline std::optional<AcceleratorKind> accelerator_from_name(std::string_view s) {
    for (auto k : kAllAcceleratorKinds)
        if (s == accelerator_name(k)) return k;
    return std::nullopt;
}

// A stage consumes either one CPU resource unit per replica or one
// accelerator unit of a specific kind.
struct ResourceClass {
    bool is_cpu = true;
    AcceleratorKind accel = AcceleratorKind::Regex;  // valid when !is_cpu

    static ResourceClass cpu() { return {true, AcceleratorKind::Regex}; }
    static ResourceClass accelerator(AcceleratorKind k) { return {false, k}; }

    bool operator==(const ResourceClass&) const = default;
};

inline std::string resource_class_name(const ResourceClass& rc) {
    return rc.is_cpu ? "cpu" : accelerator_name(rc.accel);
}

}  // namespace nicpool
